from .common import (
    EpsilonSchedule,
    EpisodeStats,
    critic_loss,
    dqn_target,
    double_dqn_target,
    evaluate,
    greedy_policy,
    n_step_advantage,
    random_policy,
    fixed_policy,
)
from .replay import ReplayPool, Transition
from .a3c import A3CTrainer, TrainResult, replay_update
from .ppo import PPOTrainer, ppo_update
from .dqn import DQNTrainer

__all__ = [
    "A3CTrainer", "DQNTrainer", "EpisodeStats", "EpsilonSchedule", "PPOTrainer",
    "ReplayPool", "TrainResult", "Transition", "critic_loss", "dqn_target",
    "double_dqn_target", "evaluate", "fixed_policy", "greedy_policy",
    "n_step_advantage", "ppo_update", "random_policy", "replay_update",
]
