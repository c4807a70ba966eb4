"""Minimal dense network with hand-written backpropagation.

Just enough machinery to realize a Q-network and its frozen target copy:
ReLU hidden layers, linear output heads (one per action), squared error on
the selected head, exact gradients in float64, and plain SGD with an
optional adaptive-moment variant. No autodiff framework on purpose; the
gradients are validated against finite differences in the test suite.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

CHECKPOINT_MAGIC = b"MLPCKPT\x00"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParameters:
    """Weights (in, out) and biases per layer; float64 throughout."""

    layer_sizes: tuple
    weights: list
    biases: list

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"layer_sizes must be >= 2 positive entries, got {sizes}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and bias vector per layer transition required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]):
                raise ValueError(f"weights[{i}] has shape {w.shape}, expected {(sizes[i], sizes[i + 1])}")
            if b.shape != (sizes[i + 1],):
                raise ValueError(f"biases[{i}] has shape {b.shape}, expected {(sizes[i + 1],)}")

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class GradientBuffer:
    """Loss gradients, shape-congruent with a parameter set."""

    weights: list
    biases: list


def init_params(layer_sizes, rng: np.random.Generator) -> MlpParameters:
    """He-uniform weights, zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParameters(layer_sizes=sizes, weights=weights, biases=biases)


def forward(params: MlpParameters, x) -> np.ndarray:
    """Q-values for one input vector or a batch of row vectors."""
    a = np.asarray(x, dtype=float)
    single = a.ndim == 1
    if single:
        a = a[None, :]
    if a.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"input width {a.shape[1]} != layer_sizes[0] {params.layer_sizes[0]}")
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if i < last:
            np.maximum(a, 0.0, out=a)
    return a[0] if single else a


def _forward_cached(params: MlpParameters, x2d: np.ndarray):
    """Forward pass keeping pre/post activations for backprop."""
    activations = [x2d]
    pre = []
    a = x2d
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
        activations.append(a)
    return a, activations, pre


def batch_loss_and_grads(params: MlpParameters, states: np.ndarray, actions: np.ndarray,
                         targets: np.ndarray):
    """Mean squared error over selected heads and its exact gradient.

    loss = mean_i (targets[i] - Q(states[i], actions[i]))^2; heads that were
    not selected receive zero output error.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    m = states.shape[0]
    out, activations, pre = _forward_cached(params, states)
    rows = np.arange(m)
    selected = out[rows, actions]
    err = selected - targets
    loss = float(np.mean(err ** 2))

    delta = np.zeros_like(out)
    delta[rows, actions] = 2.0 * err / m
    g_weights = [None] * len(params.weights)
    g_biases = [None] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        g_weights[i] = activations[i].T @ delta
        g_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (pre[i - 1] > 0.0)
    return loss, GradientBuffer(weights=g_weights, biases=g_biases)


def backward(params: MlpParameters, state_vec, action: int, target: float):
    """Single-sample squared error on the chosen head plus its gradient."""
    return batch_loss_and_grads(params, np.asarray(state_vec, dtype=float)[None, :],
                                np.array([action]), np.array([target]))


def sgd_step(params: MlpParameters, grads: GradientBuffer, learning_rate: float) -> MlpParameters:
    """In-place update theta <- theta - lr * grad; returns params."""
    if learning_rate <= 0.0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    for w, gw in zip(params.weights, grads.weights):
        w -= learning_rate * gw
    for b, gb in zip(params.biases, grads.biases):
        b -= learning_rate * gb
    return params


@dataclass
class AdamState:
    """First/second moment accumulators for the adaptive-moment option."""

    m_weights: list
    v_weights: list
    m_biases: list
    v_biases: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: MlpParameters) -> "AdamState":
        return cls(
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def adam_step(params: MlpParameters, grads: GradientBuffer, state: AdamState,
              learning_rate: float) -> MlpParameters:
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for w, gw, m, v in zip(params.weights, grads.weights, state.m_weights, state.v_weights):
        m *= b1
        m += (1.0 - b1) * gw
        v *= b2
        v += (1.0 - b2) * gw ** 2
        w -= learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
    for b, gb, m, v in zip(params.biases, grads.biases, state.m_biases, state.v_biases):
        m *= b1
        m += (1.0 - b1) * gb
        v *= b2
        v += (1.0 - b2) * gb ** 2
        b -= learning_rate * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
    return params


def clone_into(src: MlpParameters, dst: MlpParameters) -> None:
    """Copy parameter values; later updates to src leave dst untouched."""
    if src.layer_sizes != dst.layer_sizes:
        raise ValueError(f"shape mismatch: {src.layer_sizes} vs {dst.layer_sizes}")
    for sw, dw in zip(src.weights, dst.weights):
        np.copyto(dw, sw)
    for sb, db in zip(src.biases, dst.biases):
        np.copyto(db, sb)


def clone(params: MlpParameters) -> MlpParameters:
    return MlpParameters(
        layer_sizes=params.layer_sizes,
        weights=[w.copy() for w in params.weights],
        biases=[b.copy() for b in params.biases],
    )


def global_grad_norm(grads: GradientBuffer) -> float:
    total = 0.0
    for g in grads.weights + grads.biases:
        total += float(np.sum(g * g))
    return math.sqrt(total)


def clip_grads_(grads: GradientBuffer, max_norm: float) -> float:
    """Scale gradients in place to a global-norm bound; returns the norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.weights + grads.biases:
            g *= scale
    return norm


def flatten_params(params: MlpParameters) -> np.ndarray:
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def assign_flat(params: MlpParameters, flat: np.ndarray) -> None:
    flat = np.asarray(flat, dtype=float)
    if flat.shape != (params.num_params,):
        raise ValueError(f"expected {params.num_params} values, got {flat.shape}")
    offset = 0
    for w, b in zip(params.weights, params.biases):
        np.copyto(w, flat[offset:offset + w.size].reshape(w.shape))
        offset += w.size
        np.copyto(b, flat[offset:offset + b.size])
        offset += b.size


# ---------------------------------------------------------------------------
# checkpoint format: magic, version, layer count, layer sizes (uint32 LE),
# then per layer the row-major weight matrix and bias vector as float64 LE.


def serialize_params(params: MlpParameters) -> bytes:
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(params.layer_sizes))]
    chunks.append(struct.pack(f"<{len(params.layer_sizes)}I", *params.layer_sizes))
    for w, b in zip(params.weights, params.biases):
        chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(chunks)


def deserialize_params(data: bytes, expected_sizes=None) -> MlpParameters:
    if data[:8] != CHECKPOINT_MAGIC:
        raise ValueError("not a network checkpoint (bad magic)")
    version, n_sizes = struct.unpack_from("<II", data, 8)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    sizes = struct.unpack_from(f"<{n_sizes}I", data, 16)
    if expected_sizes is not None and tuple(expected_sizes) != sizes:
        raise ValueError(f"checkpoint layer sizes {sizes} do not match expected {tuple(expected_sizes)}")
    offset = 16 + 4 * n_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = np.frombuffer(data, dtype="<f8", count=fan_in * fan_out, offset=offset)
        offset += 8 * fan_in * fan_out
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset)
        offset += 8 * fan_out
        weights.append(w.reshape(fan_in, fan_out).copy())
        biases.append(b.copy())
    if offset != len(data):
        raise ValueError(f"checkpoint has {len(data) - offset} trailing bytes")
    return MlpParameters(layer_sizes=sizes, weights=weights, biases=biases)


def save_params(params: MlpParameters, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_params(params))


def load_params(path, expected_sizes=None) -> MlpParameters:
    with open(path, "rb") as fh:
        return deserialize_params(fh.read(), expected_sizes=expected_sizes)
