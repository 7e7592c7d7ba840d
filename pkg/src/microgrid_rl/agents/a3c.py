"""Asynchronous advantage actor-critic with an experience-replay pool.

Every worker thread owns an environment and a local parameter snapshot. It
rolls out up to ``n_steps`` hours, walks the segment backwards accumulating
``R <- r + gamma * R`` (``R`` starts at 0 at the end of the day, else at the
local value estimate), and pushes one summed actor-critic gradient to the
shared store. Transitions go to the shared pool; every ``update_batch``
global steps a uniform minibatch from the pool is replayed with one-step
advantages recomputed under the current parameters.

With ``deterministic=True`` the workers are still separate threads but take
turns one environment step at a time in a fixed order, which makes training
reproducible for any worker count while keeping stale snapshots (other
workers commit updates between a worker's snapshot and its own update).
"""
from __future__ import annotations

import contextlib
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .. import nn
from ..config import LearnerConfig
from ..env import N_ACTIONS, OBS_DIM, Microgrid, MicrogridGym, daily_cost
from .common import EpisodeStats, EpsilonSchedule, mixed_policy, sample
from .replay import ReplayPool, Transition, stack

log = logging.getLogger(__name__)

# called with the current parameters after each episode, returns a score
Monitor = Callable[[nn.ParameterSet], float]


class GlobalCounter:
    def __init__(self):
        self._value = 0
        self._lock = threading.Lock()

    @property
    def value(self) -> int:
        return self._value

    def increment(self) -> int:
        with self._lock:
            self._value += 1
            return self._value


class TurnScheduler:
    """Round-robin token passing between a fixed set of threads."""

    def __init__(self, n: int):
        self._cond = threading.Condition()
        self._ring = list(range(n))
        self._pos = 0

    @contextlib.contextmanager
    def turn(self, wid: int):
        with self._cond:
            self._cond.wait_for(lambda: self._ring[self._pos] == wid)
        try:
            yield
        finally:
            with self._cond:
                self._pos = (self._pos + 1) % len(self._ring)
                self._cond.notify_all()

    def retire(self, wid: int) -> None:
        with self._cond:
            i = self._ring.index(wid)
            self._ring.pop(i)
            if i < self._pos:
                self._pos -= 1
            if self._ring:
                self._pos %= len(self._ring)
            self._cond.notify_all()


def replay_update(store: nn.ParameterStore, pool: ReplayPool, cfg: LearnerConfig) -> bool:
    """One aggregated one-step actor-critic update from a pool minibatch.

    Returns False (and does nothing) while the pool holds fewer than
    ``cfg.minibatch`` transitions.
    """
    if len(pool) < cfg.minibatch:
        log.debug("replay skipped: pool %d < minibatch %d", len(pool), cfg.minibatch)
        return False
    obs, actions, rewards, next_obs, terminal = stack(pool.sample(cfg.minibatch))
    p = store.snapshot()
    _, v = nn.forward(p, obs)
    _, v_next = nn.forward(p, next_obs)
    target = rewards + cfg.gamma * np.where(terminal, 0.0, v_next)
    g = nn.actor_critic_grads(p, obs, actions, target - v, target, cfg.entropy_coef)
    if cfg.replay_reduction == "mean":
        g = nn.scale_grads(g, 1.0 / cfg.minibatch)
    store.apply_gradients(nn.clip_grads(g, cfg.grad_clip), cfg.lr)
    return True


@dataclass
class TrainResult:
    params: nn.ParameterSet
    history: list = field(default_factory=list)   # one EpisodeStats per episode
    worker_history: list = field(default_factory=list)
    steps: int = 0
    replay_updates: int = 0


def segment_gradients(p: nn.ParameterSet, segment, bootstrap: float, gamma: float, entropy_coef: float):
    """Summed gradient for one rollout segment; returns (grads, returns)."""
    obs = np.stack([s[0] for s in segment])
    actions = np.array([s[1] for s in segment])
    returns = np.empty(len(segment))
    R = bootstrap
    for i in range(len(segment) - 1, -1, -1):
        R = segment[i][2] + gamma * R
        returns[i] = R
    _, v = nn.forward(p, obs)
    return nn.actor_critic_grads(p, obs, actions, returns - v, returns, entropy_coef), returns


class A3CTrainer:
    def __init__(self, grid: Microgrid, cfg: LearnerConfig, train_days: Optional[int] = None,
                 init: Optional[nn.ParameterSet] = None, monitor: Optional[Monitor] = None):
        self.grid = grid
        self.cfg = cfg
        self.train_days = train_days or grid.days
        self.monitor = monitor
        params = init or nn.ParameterSet.initialize(OBS_DIM, cfg.hidden, N_ACTIONS, seed=cfg.seed)
        self.store = nn.ParameterStore(params)
        self.pool = ReplayPool(cfg.pool_capacity, seed=cfg.seed + 101)
        self.counter = GlobalCounter()
        self.schedule = EpsilonSchedule(cfg.epsilon_start, cfg.epsilon_decay, cfg.epsilon_min)
        self.t_max = cfg.episodes * 24 * cfg.workers
        self.replay_updates = 0
        self._replay_lock = threading.Lock()

    def _turns(self):
        if self.cfg.deterministic:
            return TurnScheduler(self.cfg.workers)
        return None

    def worker_run(self, wid: int, scheduler: Optional[TurnScheduler] = None) -> list[EpisodeStats]:
        cfg = self.cfg
        env = MicrogridGym(self.grid, seed=cfg.seed * 7919 + wid)
        rng = np.random.default_rng([cfg.seed, wid])
        turn = scheduler.turn if scheduler else (lambda _wid: contextlib.nullcontext())
        stats = []
        for k in range(cfg.episodes):
            if self.counter.value >= self.t_max:
                break
            with turn(wid):
                obs = env.reset(k % self.train_days)
            infos, ent, reward = [], [], 0.0
            done = False
            segment, local = [], None
            score = float("nan")
            while not done:
                with turn(wid):
                    if not segment:
                        local = self.store.snapshot()
                    pi, _ = nn.forward(local, obs)
                    eps = self.schedule(self.counter.value)
                    a = sample(rng, mixed_policy(pi, eps))
                    next_obs, r, done, info = env.step(a)
                    T = self.counter.increment()
                    segment.append((obs, a, cfg.scaled(r), next_obs, done))
                    infos.append(info)
                    ent.append(float(nn.entropy(pi)))
                    reward += r
                    obs = next_obs
                    if done or len(segment) == cfg.n_steps:
                        bootstrap = 0.0 if done else nn.forward(local, next_obs)[1]
                        g, _ = segment_gradients(local, segment, bootstrap, cfg.gamma, cfg.entropy_coef)
                        self.store.apply_gradients(nn.clip_grads(g, cfg.grad_clip), cfg.lr)
                        if cfg.replay:
                            self.pool.extend(Transition(*s) for s in segment)
                        segment = []
                    if cfg.replay and T % cfg.update_batch == 0:
                        with self._replay_lock:
                            if replay_update(self.store, self.pool, cfg):
                                self.replay_updates += 1
                    # scored inside the last turn so monitoring never shifts the schedule
                    if done and self.monitor is not None and wid == 0:
                        score = self.monitor(self.store.snapshot())
            stats.append(EpisodeStats(k, reward, daily_cost(infos), float(np.mean(ent)), eps, score))
        return stats

    def train(self) -> TrainResult:
        scheduler = self._turns()
        results: dict[int, list] = {}
        errors: list[BaseException] = []

        def target(wid):
            try:
                results[wid] = self.worker_run(wid, scheduler)
            except BaseException as exc:  # surfaced after join
                log.exception("worker %d aborted", wid)
                errors.append(exc)
            finally:
                if scheduler:
                    scheduler.retire(wid)

        threads = [threading.Thread(target=target, args=(w,), name=f"a3c-worker-{w}")
                   for w in range(self.cfg.workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            raise RuntimeError(f"{len(errors)} worker(s) failed") from errors[0]

        per_worker = [results[w] for w in range(self.cfg.workers)]
        history = []
        for k in range(max(len(s) for s in per_worker)):
            rows = [s[k] for s in per_worker if len(s) > k]
            history.append(EpisodeStats(
                k,
                float(np.mean([r.reward for r in rows])),
                float(np.mean([r.daily_cost for r in rows])),
                float(np.mean([r.entropy for r in rows])),
                float(np.mean([r.epsilon for r in rows])),
                rows[0].eval_reward,
            ))
        return TrainResult(self.store.snapshot(), history, per_worker, self.counter.value, self.replay_updates)
