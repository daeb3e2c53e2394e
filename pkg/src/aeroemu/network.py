"""Dense feed-forward network: forward pass, analytic gradients, checkpoints.

The default configuration is [34, 256, 256, 28] with sigmoid hidden layers
and a linear output layer. Zero hidden layers degenerate to a plain linear
regression, used as the expressivity baseline. Training math runs in f32;
f64 is available for gradient verification.

Checkpoint layout, little-endian:

    magic "AEMC" | version u16 | n_dims u16 | dims u32 each |
    activation u8 | dtype u8 | parameter blob (W then b per layer) |
    transform-spec JSON length u32 | JSON bytes | CRC32 u32 of all prior bytes
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import CorruptCheckpointError, SchemaHashMismatchError
from .schema import VariableSchema
from .transforms import TransformSpec

CHECKPOINT_MAGIC = b"AEMC"
CHECKPOINT_VERSION = 1

_ACT_TAGS = {"sigmoid": 0, "tanh": 1, "relu": 2}
_DTYPE_TAGS = {"f32": 0, "f64": 1}
_DTYPES = {"f32": np.float32, "f64": np.float64}


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z, kind):
    if kind == "sigmoid":
        return _sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_grad(a, kind):
    # Derivative expressed through the activation value a.
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "relu":
        return (a > 0).astype(a.dtype)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class NetworkParams:
    layer_dims: tuple[int, ...]
    weights: list  # per layer, shape (fan_in, fan_out)
    biases: list   # per layer, shape (fan_out,)
    hidden_activation: str = "sigmoid"
    dtype: str = "f32"

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.layer_dims, [w.copy() for w in self.weights],
                             [b.copy() for b in self.biases],
                             self.hidden_activation, self.dtype)


@dataclass
class GradientSet:
    weights: list
    biases: list


def init_network(layer_dims, activation: str = "sigmoid", seed: int = 0,
                 dtype: str = "f32") -> NetworkParams:
    """Uniform ±sqrt(1/fan_in) weights, zero biases, reproducible from seed."""
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError(f"invalid layer dims {dims}")
    if activation not in _ACT_TAGS:
        raise ValueError(f"unknown activation {activation!r}")
    np_dtype = _DTYPES[dtype]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(1.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)).astype(np_dtype))
        biases.append(np.zeros(fan_out, dtype=np_dtype))
    return NetworkParams(dims, weights, biases, activation, dtype)


def forward(net: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; x is (n, input_dim), result (n, output_dim)."""
    a = _forward_cached(net, x)[-1]
    return a


def _forward_cached(net: NetworkParams, x: np.ndarray):
    x = np.asarray(x, dtype=_DTYPES[net.dtype])
    if x.ndim != 2 or x.shape[1] != net.layer_dims[0]:
        raise ValueError(
            f"input shape {x.shape} does not match input dim {net.layer_dims[0]}"
        )
    activations = [x]
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = activations[-1] @ w + b
        if k < net.n_layers - 1:
            z = _activate(z, net.hidden_activation)
        activations.append(z)
    return activations


def backward(net: NetworkParams, x: np.ndarray, targets: np.ndarray):
    """MSE loss (mean over all batch elements and output dims) and gradients."""
    targets = np.asarray(targets, dtype=_DTYPES[net.dtype])
    activations = _forward_cached(net, x)
    pred = activations[-1]
    if pred.shape != targets.shape:
        raise ValueError(f"target shape {targets.shape} vs prediction {pred.shape}")
    err = pred - targets
    loss = float(np.mean(np.square(err, dtype=np.float64)))
    delta = err * (2.0 / err.size)
    grads_w = [None] * net.n_layers
    grads_b = [None] * net.n_layers
    for k in range(net.n_layers - 1, -1, -1):
        grads_w[k] = activations[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k].T) * _activate_grad(
                activations[k], net.hidden_activation
            )
    return loss, GradientSet(grads_w, grads_b)


def save_checkpoint(net: NetworkParams, spec: TransformSpec,
                    schema: VariableSchema, path) -> None:
    buf = bytearray()
    buf += struct.pack("<4sHH", CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
                       len(net.layer_dims))
    buf += struct.pack(f"<{len(net.layer_dims)}I", *net.layer_dims)
    buf += struct.pack("<BB", _ACT_TAGS[net.hidden_activation],
                       _DTYPE_TAGS[net.dtype])
    for w, b in zip(net.weights, net.biases):
        buf += w.astype("<" + ("f4" if net.dtype == "f32" else "f8"),
                        copy=False).tobytes()
        buf += b.astype("<" + ("f4" if net.dtype == "f32" else "f8"),
                        copy=False).tobytes()
    spec_json = spec.to_json(schema).encode("utf-8")
    buf += struct.pack("<I", len(spec_json))
    buf += spec_json
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    with open(path, "wb") as fh:
        fh.write(bytes(buf))


def load_checkpoint(path, schema: VariableSchema):
    """Load (net, transform spec); validates CRC and the schema binding."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise CorruptCheckpointError("file too short")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptCheckpointError("CRC mismatch")
    magic, version, n_dims = struct.unpack_from("<4sHH", body)
    if magic != CHECKPOINT_MAGIC:
        raise CorruptCheckpointError(f"bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CorruptCheckpointError(f"unsupported version {version}")
    off = struct.calcsize("<4sHH")
    dims = struct.unpack_from(f"<{n_dims}I", body, off)
    off += 4 * n_dims
    act_tag, dtype_tag = struct.unpack_from("<BB", body, off)
    off += 2
    activation = {v: k for k, v in _ACT_TAGS.items()}[act_tag]
    dtype = {v: k for k, v in _DTYPE_TAGS.items()}[dtype_tag]
    np_dtype = "<" + ("f4" if dtype == "f32" else "f8")
    itemsize = 4 if dtype == "f32" else 8
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w_bytes = fan_in * fan_out * itemsize
        weights.append(np.frombuffer(body, np_dtype, fan_in * fan_out, off)
                       .reshape(fan_in, fan_out).copy())
        off += w_bytes
        biases.append(np.frombuffer(body, np_dtype, fan_out, off).copy())
        off += fan_out * itemsize
    (json_len,) = struct.unpack_from("<I", body, off)
    off += 4
    spec_json = body[off:off + json_len].decode("utf-8")
    if len(body[off:off + json_len]) != json_len:
        raise CorruptCheckpointError("truncated transform spec")
    spec = TransformSpec.from_json(spec_json, schema)
    if spec.schema_hash != schema.schema_hash:
        raise SchemaHashMismatchError("checkpoint bound to a different schema")
    net = NetworkParams(tuple(int(d) for d in dims), weights, biases,
                        activation, dtype)
    return net, spec
