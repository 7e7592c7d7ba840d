"""Two-headed feed-forward network with hand-written gradients.

One hidden ReLU layer feeds an 80-way softmax policy head and a scalar value
head. The same network doubles as a Q-network for the value-based
baselines, in which case the policy logits are read as action values.

Shapes for the default network: ``w1`` (7, 100), ``b1`` (100,), ``w_pi``
(100, 80), ``b_pi`` (80,), ``w_v`` (100, 1), ``b_v`` (1,).
"""
from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WEIGHTS = ("w1", "b1", "w_pi", "b_pi", "w_v", "b_v")
MAGIC = b"MGNN"
FORMAT_VERSION = 1


class ShapeMismatchError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class ParameterSet:
    w1: np.ndarray
    b1: np.ndarray
    w_pi: np.ndarray
    b_pi: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray
    version: int = 0

    @classmethod
    def initialize(cls, obs_dim=7, hidden=100, n_actions=80, seed=0, head_scale=0.01) -> "ParameterSet":
        """Fan-in scaled uniform weights, zero biases. The policy head is
        shrunk by ``head_scale`` so the initial policy is close to uniform
        and the greedy action is not fixed by initialization noise."""
        rng = np.random.default_rng(seed)

        def layer(fan_in, fan_out, scale=1.0):
            bound = scale / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=(fan_in, fan_out))

        return cls(
            w1=layer(obs_dim, hidden), b1=np.zeros(hidden),
            w_pi=layer(hidden, n_actions, head_scale), b_pi=np.zeros(n_actions),
            w_v=layer(hidden, 1), b_v=np.zeros(1),
        )

    @classmethod
    def zeros_like(cls, other: "ParameterSet") -> "ParameterSet":
        return cls(*(np.zeros_like(getattr(other, k)) for k in WEIGHTS))

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, k) for k in WEIGHTS]

    def copy(self) -> "ParameterSet":
        return ParameterSet(*(a.copy() for a in self.arrays()), version=self.version)

    def shapes(self) -> list[tuple]:
        return [a.shape for a in self.arrays()]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


# gradients carry the same six arrays; version is unused
GradientSet = ParameterSet


def _hidden(p: ParameterSet, obs: np.ndarray):
    z = obs @ p.w1 + p.b1
    return z, np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_obs(obs) -> np.ndarray:
    obs = np.asarray(obs, dtype=float)
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation contains non-finite values")
    return obs


def forward(p: ParameterSet, obs) -> tuple[np.ndarray, float]:
    """Policy distribution and state value for one observation (or a batch,
    in which case the value is an array)."""
    obs = _check_obs(obs)
    _, h = _hidden(p, obs)
    policy = softmax(h @ p.w_pi + p.b_pi)
    value = (h @ p.w_v + p.b_v)[..., 0]
    if obs.ndim == 1:
        return policy, float(value)
    return policy, value


def q_values(p: ParameterSet, obs) -> np.ndarray:
    _, h = _hidden(p, _check_obs(obs))
    return h @ p.w_pi + p.b_pi


def entropy(policy: np.ndarray) -> np.ndarray:
    return -np.sum(policy * np.log(np.clip(policy, 1e-300, None)), axis=-1)


def _from_heads(p, obs, z, h, d_logits, d_value) -> GradientSet:
    d_h = d_logits @ p.w_pi.T + d_value[:, None] @ p.w_v.T
    d_z = d_h * (z > 0)
    return GradientSet(
        w1=obs.T @ d_z, b1=d_z.sum(axis=0),
        w_pi=h.T @ d_logits, b_pi=d_logits.sum(axis=0),
        w_v=h.T @ d_value[:, None], b_v=np.array([d_value.sum()]),
    )


def actor_critic_grads(p: ParameterSet, obs, actions, pg_weight, target_value,
                       entropy_coef: float, value_mask=None) -> GradientSet:
    """Summed gradient over a batch of

        -pg_weight * log pi(a|s) - entropy_coef * H(pi(.|s)) + (target - v(s))**2

    ``pg_weight`` is held constant (no gradient flows through it). A3C passes
    the advantage; PPO passes advantage * ratio on unclipped samples and 0 on
    clipped ones. ``value_mask`` zeroes the critic term per sample.
    """
    obs = np.atleast_2d(_check_obs(obs))
    actions = np.atleast_1d(np.asarray(actions, dtype=int))
    w = np.atleast_1d(np.asarray(pg_weight, dtype=float))
    target = np.atleast_1d(np.asarray(target_value, dtype=float))
    z, h = _hidden(p, obs)
    pi = softmax(h @ p.w_pi + p.b_pi)
    v = (h @ p.w_v + p.b_v)[:, 0]

    onehot = np.zeros_like(pi)
    onehot[np.arange(len(actions)), actions] = 1.0
    log_pi = np.log(np.clip(pi, 1e-300, None))
    ent = -np.sum(pi * log_pi, axis=1, keepdims=True)
    # dH/dlogit_j = -pi_j (log pi_j + H)
    d_logits = -w[:, None] * (onehot - pi) + entropy_coef * pi * (log_pi + ent)
    d_value = -2.0 * (target - v)
    if value_mask is not None:
        d_value = d_value * np.atleast_1d(np.asarray(value_mask, dtype=float))
    return _from_heads(p, obs, z, h, d_logits, d_value)


def backward(p: ParameterSet, obs, action_index: int, advantage: float,
             target_value: float, entropy_coef: float) -> GradientSet:
    """Gradient of the single-sample actor-critic loss with the advantage
    treated as a constant."""
    if not 0 <= action_index < p.w_pi.shape[1]:
        raise ValueError(f"action index {action_index} out of range")
    return actor_critic_grads(p, obs, [action_index], [advantage], [target_value], entropy_coef)


def q_grads(p: ParameterSet, obs, actions, targets) -> GradientSet:
    """Summed gradient of (target - Q(s, a))**2; the value head is untouched."""
    obs = np.atleast_2d(_check_obs(obs))
    actions = np.atleast_1d(np.asarray(actions, dtype=int))
    z, h = _hidden(p, obs)
    q = h @ p.w_pi + p.b_pi
    d_logits = np.zeros_like(q)
    rows = np.arange(len(actions))
    d_logits[rows, actions] = -2.0 * (np.asarray(targets, dtype=float) - q[rows, actions])
    return _from_heads(p, obs, z, h, d_logits, np.zeros(len(actions)))


def actor_critic_loss(p: ParameterSet, obs, actions, pg_weight, target_value, entropy_coef) -> float:
    obs = np.atleast_2d(_check_obs(obs))
    pi, v = forward(p, obs)
    idx = np.arange(len(obs))
    a = np.atleast_1d(actions)
    return float(np.sum(
        -np.asarray(pg_weight) * np.log(pi[idx, a])
        - entropy_coef * entropy(pi)
        + (np.asarray(target_value) - v) ** 2
    ))


def add_grads(a: GradientSet, b: GradientSet) -> GradientSet:
    return GradientSet(*(x + y for x, y in zip(a.arrays(), b.arrays())))


def scale_grads(g: GradientSet, k: float) -> GradientSet:
    return GradientSet(*(x * k for x in g.arrays()))


def global_norm(g: GradientSet) -> float:
    return float(np.sqrt(sum(np.sum(a * a) for a in g.arrays())))


def clip_grads(g: GradientSet, max_norm: float) -> GradientSet:
    """Rescale ``g`` so its global L2 norm is at most ``max_norm`` (0 disables)."""
    n = global_norm(g)
    if max_norm <= 0 or n <= max_norm:
        return g
    return scale_grads(g, max_norm / n)


def congruent(a: ParameterSet, b: ParameterSet) -> bool:
    return a.shapes() == b.shapes()


class ParameterStore:
    """Global parameters shared by worker threads.

    Each ``apply_gradients`` call is one atomic SGD step; calls from
    different workers serialize but may interleave in any order.
    ``snapshot`` returns a consistent copy at some committed version.
    """

    def __init__(self, params: ParameterSet):
        self._params = params.copy()
        self._lock = threading.Lock()

    @property
    def version(self) -> int:
        return self._params.version

    def snapshot(self) -> ParameterSet:
        with self._lock:
            return self._params.copy()

    def apply_gradients(self, g: GradientSet, lr: float) -> int:
        if not congruent(self._params, g):
            raise ShapeMismatchError(f"gradient shapes {g.shapes()} != parameter shapes {self._params.shapes()}")
        with self._lock:
            for w, dw in zip(self._params.arrays(), g.arrays()):
                w -= lr * dw
            self._params.version += 1
            return self._params.version

    def load(self, params: ParameterSet) -> None:
        with self._lock:
            self._params = params.copy()


# checkpoint layout (all little-endian):
#   magic b"MGNN" | u32 format version | u64 parameter version | u32 array count
#   per array: u32 ndim | ndim * u32 dims | prod(dims) * f64 values (C order)
def save_checkpoint(p: ParameterSet, path) -> None:
    parts = [MAGIC, struct.pack("<IQI", FORMAT_VERSION, p.version, len(WEIGHTS))]
    for a in p.arrays():
        parts.append(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path) -> ParameterSet:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no checkpoint at {path}")
    buf = path.read_bytes()
    if buf[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    try:
        fmt, version, count = struct.unpack_from("<IQI", buf, 4)
        if fmt != FORMAT_VERSION or count != len(WEIGHTS):
            raise CheckpointError(f"{path}: unsupported layout (format {fmt}, {count} arrays)")
        off = 4 + struct.calcsize("<IQI")
        arrays = []
        for _ in range(count):
            (ndim,) = struct.unpack_from("<I", buf, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}I", buf, off)
            off += 4 * ndim
            n = int(np.prod(shape))
            arrays.append(np.frombuffer(buf, dtype="<f8", count=n, offset=off).reshape(shape).astype(float))
            off += 8 * n
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated checkpoint") from exc
    if off != len(buf):
        raise CheckpointError(f"{path}: {len(buf) - off} trailing bytes")
    return ParameterSet(*arrays, version=version)
