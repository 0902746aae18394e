import math

import numpy as np
import pytest

import optimarl

CLIMBING = """
[experiment]
algorithm = optimappo
iterations = 3
[env]
kind = climbing
[learner]
eta = 0
rollout_threads = 2
hidden_sizes = 8 8
"""


def test_payoffs():
    c = optimarl.climbing_payoff()
    assert c.shape == (3, 3)
    assert c[0, 0] == 11 and c[1, 1] == 7
    assert optimarl.penalty_payoff(-50)[0, 0] == -50


def test_gae_matches_direct_sum():
    deltas = [0.5, -1.0, 2.0, 0.25]
    dones = [False, False, False, True]
    got = optimarl.gae(deltas, 0.9, 0.8, dones)
    for t in range(4):
        want = sum((0.72**l) * deltas[t + l] for l in range(4 - t))
        assert math.isclose(got[t], want, rel_tol=0, abs_tol=1e-12)


def test_shaping():
    assert optimarl.leaky_relu(-2.0, 0.0) == 0.0
    assert optimarl.shape_advantages([-1.0, 2.0], 1.0) == [-1.0, 2.0]
    with pytest.raises(ValueError):
        optimarl.shape_advantages([1.0], 2.0)


def test_dynamics_outcomes():
    payoff = optimarl.climbing_payoff()
    plain = optimarl.run_dynamics(payoff, optimistic=False)
    opt = optimarl.run_dynamics(payoff, optimistic=True)
    assert len(plain) == 11
    assert optimarl.greedy_joint_payoff(payoff, *plain[-1]) == 7
    assert optimarl.greedy_joint_payoff(payoff, *opt[-1]) == 11
    for p0, p1 in opt:
        assert abs(np.sum(p0) - 1) < 1e-12 and abs(np.sum(p1) - 1) < 1e-12


def test_environment_roundtrip():
    env = optimarl.make_env(CLIMBING)
    obs = env.reset()
    assert obs.shape == (4,)
    total = 0.0
    while not env.done:
        _, r, _ = env.step([0, 0])
        total += r
    assert total == env.optimal_return() == 275


def test_trainer_runs_and_is_seeded(tmp_path):
    a = optimarl.Trainer(CLIMBING, seed=1)
    b = optimarl.Trainer(CLIMBING, seed=1)
    for _ in range(3):
        ma, mb = a.train_iteration(), b.train_iteration()
        assert ma["mean_return"] == mb["mean_return"]
    assert ma["env_steps"] == 3 * 2 * 25
    path = str(tmp_path / "ckpt.bin")
    a.save(path)
    c = optimarl.Trainer(CLIMBING, seed=1)
    c.load(path)
    assert c.evaluate(1, True) == a.evaluate(1, True)


def test_hysteretic_and_fixed_point():
    cfg = "[experiment]\nalgorithm = hysteretic_q\niterations = 20000\n[env]\nkind = climbing\n"
    r = optimarl.hysteretic_q(cfg, 0.01, seed=0)
    assert r["greedy_return"] == 275
    assert optimarl.fixed_point_norm_climbing(0.0) == 0.0
    assert optimarl.fixed_point_norm_climbing(0.1) > 0.0


def test_config_errors():
    with pytest.raises(optimarl.ConfigError, match="etaa"):
        optimarl.emit_config("[learner]\netaa = 1\n")
