import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microgrid_rl import nn
from oracles import forward_loop, gradient_case, max_relative_error, numeric_grads


def zero_params(hidden=100):
    return nn.ParameterSet.zeros_like(nn.ParameterSet.initialize(7, hidden, 80))


def test_zero_weights_uniform():
    pi, v = nn.forward(zero_params(), np.ones(7))
    np.testing.assert_allclose(pi, 1 / 80)
    assert v == 0.0
    assert nn.entropy(pi) == pytest.approx(math.log(80))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 20.0))
def test_forward_matches_loop_oracle(seed, spread):
    rng = np.random.default_rng(seed)
    p = nn.ParameterSet.initialize(seed=seed, head_scale=spread)
    p.b1 = rng.normal(size=100)
    obs = rng.uniform(-1, 2, 7)
    pi, v = nn.forward(p, obs)
    pi_ref, v_ref = forward_loop(p, obs)
    np.testing.assert_allclose(pi, pi_ref, rtol=0, atol=1e-12)
    assert abs(v - v_ref) <= 1e-12 * max(1.0, abs(v_ref))
    assert abs(pi.sum() - 1) <= 1e-9
    assert np.all((pi > 0) & (pi < 1))
    assert 0.0 <= nn.entropy(pi) <= math.log(80) + 1e-12


def test_batched_forward_matches_single():
    p = nn.ParameterSet.initialize(seed=3, head_scale=1.0)
    obs = np.random.default_rng(0).uniform(size=(5, 7))
    pis, vs = nn.forward(p, obs)
    for o, pi, v in zip(obs, pis, vs):
        p1, v1 = nn.forward(p, o)
        np.testing.assert_allclose(pi, p1, atol=1e-15)
        assert v == pytest.approx(v1, abs=1e-14)


def test_non_finite_obs_rejected():
    p = nn.ParameterSet.initialize()
    with pytest.raises(ValueError):
        nn.forward(p, [0, 0, np.nan, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        nn.forward(p, [0, 0, np.inf, 0, 0, 0, 0])


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    p, obs, a, w, target, c = gradient_case(seed)
    g = nn.backward(p, obs, a, w, target, c)
    assert max_relative_error(g.arrays(), numeric_grads(p, obs, a, w, target, c)) < 1e-4


def test_zero_advantage_and_entropy_leave_policy_head_alone():
    p = nn.ParameterSet.initialize(seed=1, head_scale=1.0)
    obs = np.linspace(0, 1, 7)
    g = nn.backward(p, obs, 7, 0.0, 3.0, 0.0)
    assert np.all(g.w_pi == 0) and np.all(g.b_pi == 0)


def test_value_at_target_gives_no_value_gradient():
    p = nn.ParameterSet.initialize(seed=1, head_scale=1.0)
    obs = np.linspace(0, 1, 7)
    _, v = nn.forward(p, obs)
    g = nn.backward(p, obs, 7, 0.5, v, 0.01)
    assert np.all(g.w_v == 0) and np.all(g.b_v == 0)


def test_backward_rejects_bad_action():
    with pytest.raises(ValueError):
        nn.backward(nn.ParameterSet.initialize(), np.zeros(7), 80, 1.0, 0.0, 0.0)


def test_loss_decreases_along_negative_gradient():
    p, obs, a, w, target, c = gradient_case(9)
    g = nn.backward(p, obs, a, w, target, c)
    before = nn.actor_critic_loss(p, obs, [a], [w], [target], c)
    store = nn.ParameterStore(p)
    store.apply_gradients(g, 1e-4)
    assert nn.actor_critic_loss(store.snapshot(), obs, [a], [w], [target], c) < before


def test_q_grads_finite_difference():
    rng = np.random.default_rng(2)
    p = nn.ParameterSet.initialize(7, 16, 80, seed=2, head_scale=1.0)
    obs = rng.uniform(size=(3, 7))
    acts, targets = np.array([1, 40, 79]), rng.normal(size=3)

    def loss(q):
        return float(np.sum((targets - nn.q_values(q, obs)[np.arange(3), acts]) ** 2))

    g = nn.q_grads(p, obs, acts, targets)
    for name in nn.WEIGHTS:
        arr = getattr(p, name)
        for idx in list(np.ndindex(arr.shape))[:40]:
            old = arr[idx]
            arr[idx] = old + 1e-6
            up = loss(p)
            arr[idx] = old - 1e-6
            down = loss(p)
            arr[idx] = old
            assert getattr(g, name)[idx] == pytest.approx((up - down) / 2e-6, rel=1e-4, abs=1e-7)


# store --------------------------------------------------------------------

def test_apply_gradients_examples():
    store = nn.ParameterStore(nn.ParameterSet.initialize(seed=4))
    before = store.snapshot()
    zero = nn.ParameterSet.zeros_like(before)
    assert store.apply_gradients(zero, 0.001) == 1
    after = store.snapshot()
    assert all(np.array_equal(x, y) for x, y in zip(before.arrays(), after.arrays()))
    one = nn.ParameterSet.zeros_like(before)
    one.w1[0, 0] = 1.0
    store.apply_gradients(one, 0.001)
    assert store.snapshot().w1[0, 0] == pytest.approx(before.w1[0, 0] - 0.001, abs=1e-15)


def test_shape_mismatch():
    store = nn.ParameterStore(nn.ParameterSet.initialize())
    with pytest.raises(nn.ShapeMismatchError):
        store.apply_gradients(nn.ParameterSet.initialize(hidden=5), 0.1)


def test_snapshot_versions_and_isolation():
    store = nn.ParameterStore(zero_params())
    g = nn.ParameterSet.zeros_like(store.snapshot())
    g.b_v[0] = 1.0
    for _ in range(3):
        store.apply_gradients(g, 1.0)
    snap = store.snapshot()
    assert snap.version == 3
    store.apply_gradients(g, 1.0)
    assert snap.b_v[0] == -3.0 and snap.version == 3
    assert store.snapshot().b_v[0] == -4.0


def test_concurrent_updates_sum():
    store = nn.ParameterStore(zero_params(8))
    rng = np.random.default_rng(0)
    grads = [nn.ParameterSet(*(rng.normal(size=a.shape) for a in store.snapshot().arrays())) for _ in range(4)]
    seen = []

    def worker(g):
        for _ in range(25):
            store.apply_gradients(g, 0.01)
            seen.append(store.snapshot().version)

    threads = [threading.Thread(target=worker, args=(g,)) for g in grads]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    final = store.snapshot()
    assert final.version == 100
    assert max(seen) <= 100
    for name in nn.WEIGHTS:
        expect = -0.01 * 25 * sum(getattr(g, name) for g in grads)
        np.testing.assert_allclose(getattr(final, name), expect, atol=1e-12)


def test_clip_grads():
    g = nn.ParameterSet.zeros_like(nn.ParameterSet.initialize(hidden=4))
    g.b_v[0] = 3.0
    g.b1[0] = 4.0
    assert nn.global_norm(g) == 5.0
    assert nn.global_norm(nn.clip_grads(g, 1.0)) == pytest.approx(1.0)
    assert nn.clip_grads(g, 0.0) is g


# checkpoints --------------------------------------------------------------

def test_checkpoint_roundtrip(tmp_path):
    p = nn.ParameterSet.initialize(seed=8)
    p.version = 42
    nn.save_checkpoint(p, tmp_path / "a.mgnn")
    q = nn.load_checkpoint(tmp_path / "a.mgnn")
    assert q.version == 42
    assert all(np.array_equal(x, y) for x, y in zip(p.arrays(), q.arrays()))
    assert (tmp_path / "a.mgnn").read_bytes()[:4] == b"MGNN"


def test_checkpoint_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        nn.load_checkpoint(tmp_path / "missing.mgnn")
    path = tmp_path / "bad.mgnn"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(nn.CheckpointError):
        nn.load_checkpoint(path)
    nn.save_checkpoint(nn.ParameterSet.initialize(), path)
    data = path.read_bytes()
    path.write_bytes(data[:-9])
    with pytest.raises(nn.CheckpointError):
        nn.load_checkpoint(path)
    path.write_bytes(data + b"x")
    with pytest.raises(nn.CheckpointError):
        nn.load_checkpoint(path)
