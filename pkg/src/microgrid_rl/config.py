"""Experiment configuration and its on-disk format.

Configs are INI-style files with three sections, ``[env]``, ``[learner]``
and ``[experiment]``; every key is a field of the matching dataclass below.
Lists are comma separated. Unknown keys are rejected so that typos fail
loudly instead of silently falling back to a default.

Most environment defaults are engineering choices for a 150-house winter
microgrid; the comments give the reasoning where it is not obvious.
"""
from __future__ import annotations

import configparser
import dataclasses
import typing
from io import StringIO
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

# Evening-peaked residential profile, kWh per hour for one household.
DEFAULT_BASE_PROFILE = (
    0.4, 0.3, 0.2, 0.2, 0.2, 0.2, 0.3, 0.5, 0.6, 0.6, 0.5, 0.5,
    0.5, 0.4, 0.4, 0.6, 0.8, 1.4, 1.2, 0.9, 0.8, 0.6, 0.5, 0.4,
)


class ConfigError(ValueError):
    pass


@dataclass
class EnvConfig:
    seed: int = 0
    dt: float = 1.0

    # thermostatic loads
    n_tcls: int = 150
    tcl_power: float = 1.5
    tcl_power_jitter: float = 0.2
    tcl_temp_min: float = 18.0
    tcl_temp_max: float = 28.0
    tcl_band_jitter: float = 0.5
    tcl_leak: float = 0.1
    tcl_leak_jitter: float = 0.02
    # degC per hour at full power; ~1.5x the loss at the band floor on a
    # -5 degC day so that a forced-on unit recovers within an hour or two
    tcl_heat_gain: float = 4.0
    tcl_heat_gain_jitter: float = 0.5
    # "internal": billed at the internal tariff; "generation": at wind_cost
    tcl_billing: str = "internal"

    # battery
    battery_capacity: float = 500.0
    battery_capacity_min: float = 0.0
    battery_soc_min: float = 0.1
    battery_soc_max: float = 0.9
    battery_p_charge_max: float = 125.0
    battery_p_discharge_max: float = 125.0
    battery_efficiency: float = 0.95
    battery_depreciation: float = 0.05
    battery_initial_soc: float = 0.5

    # households
    n_households: int = 150
    base_profile: tuple = DEFAULT_BASE_PROFILE
    base_jitter: float = 0.2
    flexibility_min: float = 0.3
    flexibility_max: float = 0.7
    compensation_prob_min: float = 0.1
    compensation_prob_max: float = 0.3
    compensation_price_factor: float = 1.0

    # tariff and grid
    price_step_width: float = 0.4
    grid_buy_ratio: float = 1.0
    grid_buy_fee: float = 3.0
    grid_sell_ratio: float = 0.5
    p_max_grid: float = 400.0
    p_min_grid: float = -400.0
    # None resolves to 10x the peak grid purchase price
    penalty_unserved: Optional[float] = None
    # money per unit of fractional excess over the 10 % average-price cap
    price_cap_penalty: float = 20000.0
    wind_cost: float = 0.0
    wind_beta: float = 1.0

    # weather
    outdoor_temp_mean: float = -5.0
    outdoor_temp_amplitude: float = 4.0
    outdoor_temp_day_jitter: float = 3.0

    # data; None selects the shipped 30-day scenario
    wind_csv: Optional[str] = None
    price_csv: Optional[str] = None

    # observation normalization bounds, lower then upper
    obs_low: tuple = (0.0, 0.0, 0.0, 14.0, 0.0, 0.0, 0.0)
    obs_high: tuple = (1.0, 1.0, 10.0, 30.0, 400.0, 250.0, 23.0)

    def validate(self) -> None:
        if self.n_tcls < 0 or self.n_households < 0:
            raise ConfigError("component counts must be non-negative")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if len(self.base_profile) != 24:
            raise ConfigError("base_profile needs 24 hourly values")
        if not self.tcl_temp_min < self.tcl_temp_max:
            raise ConfigError("tcl_temp_min must be below tcl_temp_max")
        if self.tcl_billing not in ("internal", "generation"):
            raise ConfigError("tcl_billing must be 'internal' or 'generation'")
        if not 0 < self.battery_efficiency <= 1:
            raise ConfigError("battery_efficiency must lie in (0, 1]")
        if not 0 <= self.battery_soc_min <= self.battery_initial_soc <= self.battery_soc_max <= 1:
            raise ConfigError("need 0 <= soc_min <= initial_soc <= soc_max <= 1")
        if self.battery_capacity <= 0:
            raise ConfigError("battery_capacity must be positive")
        if not self.p_min_grid <= 0 <= self.p_max_grid:
            raise ConfigError("grid limits must satisfy p_min_grid <= 0 <= p_max_grid")
        if self.grid_sell_ratio >= self.grid_buy_ratio and self.grid_buy_fee <= 0:
            raise ConfigError("grid purchase price must exceed the sale price")
        if not 0 <= self.flexibility_min <= self.flexibility_max <= 1:
            raise ConfigError("flexibility range must lie in [0, 1]")
        if not 0 <= self.compensation_prob_min <= self.compensation_prob_max <= 1:
            raise ConfigError("compensation probability range must lie in [0, 1]")
        if not 0 <= self.wind_beta <= 1:
            raise ConfigError("wind_beta must lie in [0, 1]")
        if len(self.obs_low) != 7 or len(self.obs_high) != 7:
            raise ConfigError("observation bounds need 7 entries each")
        if any(lo >= hi for lo, hi in zip(self.obs_low, self.obs_high)):
            raise ConfigError("every observation lower bound must be below its upper bound")


@dataclass
class LearnerConfig:
    seed: int = 0
    gamma: float = 0.99
    n_steps: int = 1
    workers: int = 4
    lr: float = 0.001
    hidden: int = 100
    entropy_coef: float = 0.01
    episodes: int = 30
    # rewards are reported in money; the learners see
    # (reward - reward_offset) * reward_scale. Every day has 24 steps, so the
    # offset leaves the optimal policy unchanged and only shrinks value targets.
    reward_scale: float = 0.002
    reward_offset: float = 550.0
    # global L2 norm cap on each pushed gradient; 0 disables
    grad_clip: float = 0.0
    epsilon_start: float = 1.0
    epsilon_decay: float = 0.00005
    epsilon_min: float = 0.05
    replay: bool = True
    pool_capacity: int = 500
    minibatch: int = 200
    update_batch: int = 100
    # "sum" applies the minibatch gradient as the sum over its transitions,
    # matching the per-step scale of the worker updates; "mean" divides by
    # the minibatch size
    replay_reduction: str = "sum"
    # round-robin scheduling of worker threads, reproducible for any count
    deterministic: bool = True
    ppo_clip: float = 0.2
    ppo_epochs: int = 4
    dqn_batch: int = 32
    dqn_target_sync: int = 100

    def scaled(self, reward: float) -> float:
        return (reward - self.reward_offset) * self.reward_scale

    def validate(self) -> None:
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigError("need at least one worker")
        if self.n_steps < 1 or self.episodes < 1:
            raise ConfigError("n_steps and episodes must be positive")
        if self.minibatch > self.pool_capacity:
            raise ConfigError("minibatch cannot exceed pool_capacity")
        if not 0 <= self.epsilon_min <= self.epsilon_start <= 1:
            raise ConfigError("need 0 <= epsilon_min <= epsilon_start <= 1")
        if self.replay_reduction not in ("sum", "mean"):
            raise ConfigError("replay_reduction must be 'sum' or 'mean'")
        if self.lr <= 0 or self.hidden < 1:
            raise ConfigError("lr and hidden must be positive")


@dataclass
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    output_dir: str = "runs/default"
    # days of the scenario cycled through during training
    train_days: int = 30
    # the comparison window: the last ten days of the scenario
    eval_start_day: int = 20
    eval_days: int = 10
    replicates: int = 5
    algorithms: tuple = ("m-a3c", "ppo", "dqn", "double-dqn")

    def validate(self) -> None:
        self.env.validate()
        self.learner.validate()
        if self.train_days < 1 or self.eval_days < 1 or self.eval_start_day < 0:
            raise ConfigError("day ranges must be positive")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")
        unknown = set(self.algorithms) - {"m-a3c", "ppo", "dqn", "double-dqn"}
        if unknown:
            raise ConfigError(f"unknown algorithms: {sorted(unknown)}")


_SECTIONS = {"env": EnvConfig, "learner": LearnerConfig}


def _parse(raw: str, tp, key: str):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if raw.strip().lower() in ("", "none"):
            return None
        return _parse(raw, args[0], key)
    try:
        if tp is bool:
            v = raw.strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if tp is int:
            return int(raw)
        if tp is float:
            return float(raw)
        if tp is str:
            return raw.strip()
        if tp is tuple:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            try:
                return tuple(float(s) for s in items)
            except ValueError:
                return tuple(items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    raise ConfigError(f"unsupported type for {key!r}")


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fill(cls, section: dict, where: str):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)} - {"env", "learner"}
    kwargs = {}
    for key, raw in section.items():
        if key not in names:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        kwargs[key] = _parse(raw, hints[key], key)
    return kwargs


def loads_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(parser.sections()) - {"env", "learner", "experiment"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    get = lambda s: dict(parser[s]) if parser.has_section(s) else {}
    env = EnvConfig(**_fill(EnvConfig, get("env"), "env"))
    learner = LearnerConfig(**_fill(LearnerConfig, get("learner"), "learner"))
    exp = ExperimentConfig(env=env, learner=learner, **_fill(ExperimentConfig, get("experiment"), "experiment"))
    exp.validate()
    return exp


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return loads_config(path.read_text())


def dumps_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name, obj in (("env", cfg.env), ("learner", cfg.learner)):
        parser[name] = {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    parser["experiment"] = {
        f.name: _format(getattr(cfg, f.name))
        for f in dataclasses.fields(cfg)
        if f.name not in ("env", "learner")
    }
    buf = StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))
