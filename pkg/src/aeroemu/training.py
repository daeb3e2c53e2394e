"""Adam training loop with decoupled weight decay and early stopping.

Defaults follow the reference setup: lr 1e-3, weight decay 1e-9, batch
size 4096, MSE loss, early stopping with patience 10. Weight decay is
decoupled (applied after the Adam update), not folded into the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, NonFiniteGradientError, NumericalFailureError
from .network import GradientSet, NetworkParams, backward, forward


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-9
    batch_size: int = 4096
    patience: int = 10
    max_epochs: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


@dataclass
class AdamState:
    m_weights: list
    m_biases: list
    v_weights: list
    v_biases: list
    step_count: int = 0

    @classmethod
    def init_like(cls, net: NetworkParams) -> "AdamState":
        return cls(
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
            [np.zeros_like(w) for w in net.weights],
            [np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: NetworkParams, grads: GradientSet, state: AdamState,
              config: TrainConfig) -> None:
    """One in-place Adam update with bias correction, then decoupled decay."""
    for k, g in enumerate(grads.weights):
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(grads.biases[k])):
            raise NonFiniteGradientError(k)
    state.step_count += 1
    t = state.step_count
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    params = list(zip(net.weights, net.biases))
    for k, (w, b) in enumerate(params):
        for theta, g, m, v in (
            (w, grads.weights[k], state.m_weights[k], state.v_weights[k]),
            (b, grads.biases[k], state.m_biases[k], state.v_biases[k]),
        ):
            g = g.astype(theta.dtype, copy=False)
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * np.square(g)
            theta -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
            if config.weight_decay:
                theta -= config.learning_rate * config.weight_decay * theta


class EarlyStopper:
    """Tracks the best validation loss; stops after `patience` stale epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.stale = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


def _epoch_batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def mse_in_chunks(net, x, y, chunk=65536) -> float:
    """Full-pass MSE with f64 accumulation, bounded memory."""
    total = 0.0
    count = 0
    for start in range(0, x.shape[0], chunk):
        pred = forward(net, x[start:start + chunk])
        err = pred - y[start:start + chunk].astype(pred.dtype)
        total += float(np.sum(np.square(err, dtype=np.float64)))
        count += err.size
    return total / count


def train(net: NetworkParams, train_x, train_y, val_x, val_y,
          config: TrainConfig, log=None, _val_loss_override=None):
    """Run epochs until early stopping or max_epochs.

    Returns (best_net, history) where history is a list of
    (epoch, train_mse, val_mse) and best_net holds the parameters of the
    epoch with the lowest validation loss. `_val_loss_override` is a
    test hook: a callable (net, epoch) -> float used instead of the real
    validation MSE.
    """
    train_x = np.asarray(train_x)
    train_y = np.asarray(train_y)
    if train_x.shape[0] == 0 or np.asarray(val_x).shape[0] == 0:
        raise EmptyDatasetError("train and validation sets must be non-empty")
    rng = np.random.default_rng(config.shuffle_seed)
    state = AdamState.init_like(net)
    stopper = EarlyStopper(config.patience)
    best_net = net.copy()
    history = []
    n = train_x.shape[0]
    for epoch in range(1, config.max_epochs + 1):
        loss_sum = 0.0
        elem_count = 0
        for idx in _epoch_batches(n, config.batch_size, rng):
            xb = train_x[idx]
            yb = train_y[idx]
            loss, grads = backward(net, xb, yb)
            adam_step(net, grads, state, config)
            loss_sum += loss * xb.shape[0]
            elem_count += xb.shape[0]
        train_mse = loss_sum / elem_count
        if _val_loss_override is not None:
            val_mse = float(_val_loss_override(net, epoch))
        else:
            val_mse = mse_in_chunks(net, val_x, val_y)
        if not (np.isfinite(train_mse) and np.isfinite(val_mse)):
            raise NumericalFailureError(
                f"non-finite loss at epoch {epoch}: train={train_mse} val={val_mse}"
            )
        history.append((epoch, train_mse, val_mse))
        if log:
            log(f"epoch {epoch:4d}  train_mse {train_mse:.6f}  val_mse {val_mse:.6f}")
        improved = val_mse < stopper.best
        stop = stopper.update(epoch, val_mse)
        if improved:
            best_net = net.copy()
        if stop:
            break
    return best_net, history
