import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebit_em.detectors.mstep import BoxQP, fista_momentum, m_step_apg, m_step_exact, m_step_pg1
from onebit_em.ofdm import project_box

from oracles import box_ls_grid_k2


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def objective(r, H, s):
    return float(np.sum(np.abs(r - H @ s) ** 2))


def random_problem(seed, N=16, K=4, scale=1.5):
    rng = np.random.default_rng(seed)
    H = crandn(rng, N, K) / np.sqrt(2)
    r = scale * crandn(rng, N)
    return r, H


def test_identity_channel_interior_point():
    r = np.array([0.3 - 0.2j, -0.7 + 0.9j])
    s, ok = m_step_exact(r, np.eye(2), np.zeros(2), 1)
    assert ok
    np.testing.assert_allclose(s, r, atol=1e-7)


def test_identity_channel_clips():
    r = np.array([10.0 + 0.5j, -1.0 - 20j])
    s, _ = m_step_exact(r, np.eye(2), np.zeros(2), 2)
    np.testing.assert_allclose(s, [3 + 0.5j, -1 - 3j], atol=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_exact_matches_grid_search(seed):
    r, H = random_problem(seed, N=4, K=2)
    ref, _ = box_ls_grid_k2(r, H)
    s, ok = m_step_exact(r, H, np.zeros(2), 1, cap=5000)
    assert ok
    # the grid value is an upper bound on the true minimum
    assert objective(r, H, s) <= ref + 1e-12
    assert ref - objective(r, H, s) < 1e-5


def test_apg_single_step_is_pg():
    for seed in range(20):
        r, H = random_problem(seed)
        s0 = project_box(crandn(np.random.default_rng(seed + 99), 4), 1)
        a = m_step_apg(r, H, s0, 1, B=1)
        b = m_step_pg1(r, H, s0, 1)
        assert a.tobytes() == b.tobytes()


def test_apg_five_steps_beats_five_pg_steps():
    r, H = random_problem(3)
    s0 = np.zeros(4, complex)
    s_pg = s0
    for _ in range(5):
        s_pg = m_step_pg1(r, H, s_pg, 1)
    s_apg = m_step_apg(r, H, s0, 1, B=5)
    assert objective(r, H, s_apg) <= objective(r, H, s_pg) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_long_apg_matches_exact(seed):
    r, H = random_problem(seed)
    s_exact, ok = m_step_exact(r, H, np.zeros(4), 1, tol=1e-12, cap=20_000)
    assert ok
    s_apg = m_step_apg(r, H, np.zeros(4), 1, B=500)
    np.testing.assert_allclose(s_apg, s_exact, atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_exact_projected_gradient_residual(seed):
    r, H = random_problem(seed, K=4)
    tol = 1e-8
    s, ok = m_step_exact(r, H, np.zeros(4), 2, tol=tol)
    assert ok
    L = 2 * np.linalg.svd(H, compute_uv=False)[0] ** 2
    grad = H.conj().T @ (H @ s - r)
    assert np.linalg.norm(s - project_box(s - grad / L, 2)) <= 10 * tol


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_pg_step_descends(seed, D):
    r, H = random_problem(seed, scale=2.0 * D)
    s0 = project_box(2 * D * crandn(np.random.default_rng(seed + 1), 4), D)
    s1 = m_step_pg1(r, H, s0, D)
    assert objective(r, H, s1) <= objective(r, H, s0) + 1e-9
    amp = 2 * D - 1
    assert np.all(np.abs(s1.real) <= amp) and np.all(np.abs(s1.imag) <= amp)


def test_pg_fixed_point_at_interior_optimum():
    rng = np.random.default_rng(0)
    H = crandn(rng, 6, 3)
    s_star = np.array([0.2 - 0.1j, -0.5 + 0.3j, 0.0 + 0.6j])
    s = m_step_pg1(H @ s_star, H, s_star, 1)
    np.testing.assert_allclose(s, s_star, atol=1e-14)


def test_zero_channel_leaves_iterate():
    s0 = np.array([0.5 - 0.5j, -1 + 1j])
    assert m_step_pg1(np.ones(3), np.zeros((3, 2)), s0, 1).tobytes() == s0.tobytes()
    np.testing.assert_array_equal(m_step_apg(np.ones(3), np.zeros((3, 2)), s0, 1, B=5), s0)
    s, ok = m_step_exact(np.ones(3), np.zeros((3, 2)), s0, 1)
    assert ok
    np.testing.assert_array_equal(s, s0)


def test_batched_equals_individual():
    rng = np.random.default_rng(5)
    H = crandn(rng, 8, 6, 3)
    r = crandn(rng, 8, 6)
    s0 = np.zeros((8, 3), complex)
    S, ok = m_step_exact(r, H, s0, 1)
    A = m_step_apg(r, H, s0, 1, B=5)
    for w in range(8):
        s, okw = m_step_exact(r[w], H[w], s0[w], 1)
        assert s.tobytes() == S[w].tobytes() and okw == ok[w]
        assert m_step_apg(r[w], H[w], s0[w], 1, B=5).tobytes() == A[w].tobytes()


def test_exact_cap_flags_and_returns_best():
    r, H = random_problem(1)
    s0 = np.zeros(4, complex)
    s, ok = m_step_exact(r, H, s0, 1, tol=1e-14, cap=2)
    assert not ok
    assert objective(r, H, s) <= objective(r, H, s0)


def test_exact_never_worse_than_start():
    for seed in range(20):
        r, H = random_problem(seed)
        s0 = project_box(crandn(np.random.default_rng(seed), 4), 1)
        s, _ = m_step_exact(r, H, s0, 1, cap=3)
        assert objective(r, H, s) <= objective(r, H, s0)


def test_momentum_rules():
    assert fista_momentum(1.0) == pytest.approx((1 + np.sqrt(5)) / 2)
    assert fista_momentum(1.0, "printed") == pytest.approx(np.sqrt(5) / 2)
    with pytest.raises(ValueError):
        fista_momentum(1.0, "nesterov")
    r, H = random_problem(2)
    s, _ = m_step_exact(r, H, np.zeros(4), 1, momentum="printed", cap=5000)
    ref, _ = m_step_exact(r, H, np.zeros(4), 1)
    np.testing.assert_allclose(s, ref, atol=1e-6)


def test_boxqp_objective_matches_direct():
    r, H = random_problem(4)
    qp = BoxQP.from_channel(r, H, 1)
    s = project_box(crandn(np.random.default_rng(0), 4), 1)
    assert qp.objective(s) == pytest.approx(objective(r, H, s), rel=1e-12)


def test_invalid_arguments():
    r, H = random_problem(0)
    with pytest.raises(ValueError):
        m_step_apg(r, H, np.zeros(4), 1, B=0)
    with pytest.raises(ValueError):
        m_step_exact(r, H, np.zeros(4), 1, cap=0)
    with pytest.raises(ValueError):
        m_step_pg1(r[:3], H, np.zeros(4), 1)
