"""Bounded FIFO experience pool shared by worker threads."""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool

    def __post_init__(self):
        if not 0 <= self.action < 80:
            raise ValueError(f"action {self.action} out of range")
        if not np.isfinite(self.reward):
            raise ValueError("reward must be finite")


class ReplayPool:
    def __init__(self, capacity: int = 500, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._buf: deque[Transition] = deque(maxlen=capacity)
        self._rng = np.random.default_rng(seed)
        self._lock = threading.Lock()
        self.inserted = 0

    def __len__(self) -> int:
        return len(self._buf)

    def append(self, t: Transition) -> None:
        with self._lock:
            self._buf.append(t)  # deque(maxlen) drops the oldest
            self.inserted += 1

    def extend(self, ts) -> None:
        for t in ts:
            self.append(t)

    def contents(self) -> list[Transition]:
        with self._lock:
            return list(self._buf)

    def sample_indices(self, k: int) -> np.ndarray:
        with self._lock:
            if k > len(self._buf):
                raise ValueError(f"cannot sample {k} from a pool of {len(self._buf)}")
            return self._rng.choice(len(self._buf), size=k, replace=False)

    def sample(self, k: int) -> list[Transition]:
        """Uniform draw of ``k`` distinct transitions."""
        with self._lock:
            if k > len(self._buf):
                raise ValueError(f"cannot sample {k} from a pool of {len(self._buf)}")
            idx = self._rng.choice(len(self._buf), size=k, replace=False)
            return [self._buf[i] for i in idx]


def stack(batch: list[Transition]):
    obs = np.stack([t.obs for t in batch])
    next_obs = np.stack([t.next_obs for t in batch])
    actions = np.array([t.action for t in batch], dtype=int)
    rewards = np.array([t.reward for t in batch], dtype=float)
    terminal = np.array([t.terminal for t in batch], dtype=bool)
    return obs, actions, rewards, next_obs, terminal
