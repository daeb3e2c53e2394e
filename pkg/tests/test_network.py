import numpy as np
import pytest

from aeroemu.errors import CorruptCheckpointError, SchemaHashMismatchError
from aeroemu.network import (
    backward,
    forward,
    init_network,
    load_checkpoint,
    save_checkpoint,
)
from aeroemu.schema import builtin_schema
from aeroemu.transforms import TransformSpec


def _spec(schema, seed=0):
    rng = np.random.default_rng(seed)
    return TransformSpec(rng.normal(size=34), rng.uniform(0.5, 2, 34),
                         rng.normal(size=28), rng.uniform(0.5, 2, 28),
                         schema.schema_hash)


class TestInit:
    def test_default_parameter_count(self):
        net = init_network([34, 256, 256, 28])
        assert net.parameter_count() == 34 * 256 + 256 + 256 * 256 + 256 + 256 * 28 + 28
        assert net.parameter_count() == 81_948

    def test_seed_determinism(self):
        a = init_network([34, 64, 28], seed=5)
        b = init_network([34, 64, 28], seed=5)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_init_bounds(self):
        net = init_network([100, 50, 10], seed=1, dtype="f64")
        assert np.all(np.abs(net.weights[0]) <= np.sqrt(1 / 100))
        assert np.all(net.biases[0] == 0)

    def test_linear_baseline_has_single_layer(self):
        net = init_network([34, 28])
        assert net.n_layers == 1

    def test_invalid_dims(self):
        with pytest.raises(ValueError):
            init_network([34])
        with pytest.raises(ValueError):
            init_network([34, 0, 28])


class TestForward:
    def test_sigmoid_at_zero(self):
        net = init_network([1, 1, 1], "sigmoid", dtype="f64")
        net.weights[0][:] = 0.0
        net.weights[1][:] = 1.0
        net.biases[0][:] = 0.0
        net.biases[1][:] = 0.0
        out = forward(net, np.array([[3.7]]))
        assert out[0, 0] == pytest.approx(0.5)

    def test_zero_hidden_identity(self):
        net = init_network([4, 4], dtype="f64")
        net.weights[0][:] = np.eye(4)
        net.biases[0][:] = 0.0
        x = np.random.default_rng(0).normal(size=(5, 4))
        assert np.allclose(forward(net, x), x, rtol=0, atol=0)

    def test_batched_equals_per_row(self):
        net = init_network([6, 16, 3], seed=2, dtype="f64")
        x = np.random.default_rng(1).normal(size=(7, 6))
        batched = forward(net, x)
        rows = np.vstack([forward(net, x[i:i + 1]) for i in range(7)])
        assert np.allclose(batched, rows, rtol=1e-12, atol=1e-12)

    def test_batched_equals_per_row_f32(self):
        net = init_network([6, 16, 3], seed=2, dtype="f32")
        x = np.random.default_rng(1).normal(size=(7, 6)).astype(np.float32)
        batched = forward(net, x)
        rows = np.vstack([forward(net, x[i:i + 1]) for i in range(7)])
        assert np.allclose(batched, rows, rtol=1e-6, atol=1e-6)

    def test_pure(self):
        net = init_network([3, 8, 2], seed=3)
        x = np.random.default_rng(2).normal(size=(4, 3)).astype(np.float32)
        assert np.array_equal(forward(net, x), forward(net, x))

    def test_dimension_mismatch(self):
        net = init_network([3, 8, 2])
        with pytest.raises(ValueError):
            forward(net, np.zeros((4, 5)))

    def test_f32_f64_agree(self):
        a = init_network([34, 32, 28], seed=4, dtype="f64")
        b = init_network([34, 32, 28], seed=4, dtype="f32")
        for k in range(2):
            b.weights[k][:] = a.weights[k].astype(np.float32)
        x = np.random.default_rng(3).normal(size=(100, 34))
        ya = forward(a, x)
        yb = forward(b, x.astype(np.float32)).astype(np.float64)
        assert np.max(np.abs(ya - yb) / np.maximum(np.abs(ya), 1e-3)) < 1e-4


class TestBackward:
    def test_loss_formula(self):
        # Zero-hidden net wired to reproduce fixed predictions.
        net = init_network([2, 2], dtype="f64")
        net.weights[0][:] = np.eye(2)
        net.biases[0][:] = 0.0
        loss, _ = backward(net, np.array([[1.0, 2.0]]), np.array([[1.0, 4.0]]))
        assert loss == pytest.approx(2.0)

    def test_perfect_fit_zero_gradients(self):
        net = init_network([3, 8, 2], seed=5, dtype="f64")
        x = np.random.default_rng(4).normal(size=(10, 3))
        targets = forward(net, x)
        loss, grads = backward(net, x, targets)
        assert loss == 0.0
        for g in grads.weights + grads.biases:
            assert np.all(g == 0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        dims = [3, 4, 2] if seed % 2 == 0 else [5, 6, 4, 3]
        activation = ["sigmoid", "tanh", "relu"][seed % 3]
        net = init_network(dims, activation, seed=seed, dtype="f64")
        x = rng.normal(size=(6, dims[0]))
        targets = rng.normal(size=(6, dims[-1]))
        _, grads = backward(net, x, targets)
        eps = 1e-6
        for k in range(net.n_layers):
            for arr, g in ((net.weights[k], grads.weights[k]),
                           (net.biases[k], grads.biases[k])):
                flat = arr.ravel()
                gflat = g.ravel()
                idx = rng.choice(flat.size, min(flat.size, 10), replace=False)
                for i in idx:
                    orig = flat[i]
                    flat[i] = orig + eps
                    lp, _ = backward(net, x, targets)
                    flat[i] = orig - eps
                    lm, _ = backward(net, x, targets)
                    flat[i] = orig
                    fd = (lp - lm) / (2 * eps)
                    denom = max(abs(fd), abs(gflat[i]), 1e-8)
                    assert abs(fd - gflat[i]) / denom < 1e-6


class TestCheckpoint:
    def test_round_trip_bit_identical(self, tmp_path):
        schema = builtin_schema()
        net = init_network([34, 16, 28], seed=6)
        spec = _spec(schema)
        path = tmp_path / "model.ckpt"
        save_checkpoint(net, spec, schema, path)
        back, spec2 = load_checkpoint(path, schema)
        assert back.layer_dims == net.layer_dims
        assert back.hidden_activation == net.hidden_activation
        for a, b in zip(back.weights + back.biases, net.weights + net.biases):
            assert a.tobytes() == b.tobytes()
        assert np.allclose(spec2.output_means, spec.output_means)

    def test_truncated_rejected(self, tmp_path):
        schema = builtin_schema()
        path = tmp_path / "model.ckpt"
        save_checkpoint(init_network([34, 8, 28]), _spec(schema), schema, path)
        path.write_bytes(path.read_bytes()[:-20])
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(path, schema)

    def test_bitflip_rejected(self, tmp_path):
        schema = builtin_schema()
        path = tmp_path / "model.ckpt"
        save_checkpoint(init_network([34, 8, 28]), _spec(schema), schema, path)
        blob = bytearray(path.read_bytes())
        blob[100] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CorruptCheckpointError):
            load_checkpoint(path, schema)

    def test_schema_hash_mismatch(self, tmp_path):
        schema = builtin_schema()
        spec = _spec(schema)
        spec.schema_hash ^= 0xDEAD
        path = tmp_path / "model.ckpt"
        save_checkpoint(init_network([34, 8, 28]), spec, schema, path)
        with pytest.raises(SchemaHashMismatchError):
            load_checkpoint(path, schema)

    def test_f64_round_trip(self, tmp_path):
        schema = builtin_schema()
        net = init_network([34, 8, 28], seed=7, dtype="f64")
        path = tmp_path / "model.ckpt"
        save_checkpoint(net, _spec(schema), schema, path)
        back, _ = load_checkpoint(path, schema)
        assert back.dtype == "f64"
        assert back.weights[0].tobytes() == net.weights[0].tobytes()
