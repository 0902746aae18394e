"""Optimistic multi-agent policy gradients on cooperative games."""

from ._core import (
    ConfigError,
    Environment,
    Trainer,
    climbing_payoff,
    emit_config,
    fixed_point_norm_climbing,
    gae,
    greedy_joint_payoff,
    hysteretic_q,
    leaky_relu,
    make_env,
    penalty_payoff,
    run_dynamics,
    shape_advantages,
    td_errors,
)

__all__ = [
    "ConfigError",
    "Environment",
    "Trainer",
    "climbing_payoff",
    "emit_config",
    "fixed_point_norm_climbing",
    "gae",
    "greedy_joint_payoff",
    "hysteretic_q",
    "leaky_relu",
    "make_env",
    "penalty_payoff",
    "run_dynamics",
    "shape_advantages",
    "td_errors",
]
