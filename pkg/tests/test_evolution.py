import numpy as np
import pytest
import scipy.linalg
from scipy.special import jv

from chainlab.evolution import (
    DENSE_SITE_CAP,
    PropagatorPlan,
    bessel_kernel,
    bessel_pad,
    evolve_1d_eigen,
    evolve_2d_direct,
    evolve_2d_factorized,
    evolve_free_1d,
    make_plan,
)
from chainlab.operators import (
    LatticeState2D,
    almost_mathieu,
    build_operator_1d,
    delta_state,
    free_operator,
    hamiltonian_2d_dense,
    sample_potential,
)
from chainlab.spectral import eigh_tridiagonal

# series value of J_0(2), the t = 1 return amplitude of the free chain
J0_OF_2 = 0.22389077914123562


def _random_state(rng, M):
    v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return v / np.linalg.norm(v)


# -- free-chain kernel ----------------------------------------------------------


def test_kernel_is_minus_i_power_times_bessel():
    t = 1.7
    k = bessel_kernel(t, 5)
    r = np.arange(-5, 6)
    np.testing.assert_allclose(k, (-1j) ** np.mod(r, 4) * jv(r, 2 * t), atol=1e-15)
    # J_{-r} = (-1)^r J_r and (-i)^{-r} = (-1)^r (-i)^r cancel: the kernel is even
    np.testing.assert_allclose(k, k[::-1], atol=1e-15)


def test_return_amplitude_is_bessel_j0():
    phi = np.zeros(64, dtype=complex)
    phi[32] = 1.0
    out = evolve_free_1d(phi, 1.0)
    assert abs(out[32] - J0_OF_2) < 1e-14


def test_pad_bounds_kernel_tail():
    for t, tol in ((5.0, 1e-10), (50.0, 1e-10), (200.0, 1e-12)):
        pad = bessel_pad(t, tol)
        reach = int(np.ceil(2 * t)) + pad
        # l1 mass of the kernel beyond the padded light cone
        r = np.arange(reach, reach + 400)
        tail = 2.0 * np.abs(jv(r, 2 * t)).sum()
        assert tail < tol


def test_ballistic_second_moment_identity():
    # sum_m m^2 J_m(2t)^2 = 2 t^2 exactly on the infinite free chain
    M = 512
    phi = np.zeros(M, dtype=complex)
    phi[M // 2] = 1.0
    for t in (1.0, 5.0, 20.0):
        out = evolve_free_1d(phi, t)
        m = np.arange(M) - M // 2
        second = float(np.sum(m**2 * np.abs(out) ** 2))
        assert abs(second - 2.0 * t * t) < 1e-8 * 2.0 * t * t


# -- method cross-agreement ------------------------------------------------------


def test_dft_and_bessel_agree_on_wrap_free_window():
    rng = np.random.default_rng(0)
    M, t = 256, 10.0
    phi = np.zeros(M, dtype=complex)
    phi[M // 2 - 2 : M // 2 + 3] = _random_state(rng, 5)
    a = evolve_free_1d(phi, t, method="dft_multiplier")
    b = evolve_free_1d(phi, t, method="bessel_kernel")
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_eigen_method_matches_dirichlet_expm():
    rng = np.random.default_rng(1)
    M, t = 24, 3.0
    phi = _random_state(rng, M)
    out = evolve_free_1d(phi, t, method="eigen")
    A = free_operator(M).matrix()
    expected = scipy.linalg.expm(1j * t * A) @ phi
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_dirichlet_eigen_agrees_with_infinite_kernel_when_wrap_free():
    # away from the boundary the dirichlet chain looks infinite up to tail mass
    M, t = 256, 8.0
    phi = np.zeros(M, dtype=complex)
    phi[M // 2] = 1.0
    a = evolve_free_1d(phi, t, method="eigen")
    b = evolve_free_1d(phi, t, method="bessel_kernel")
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_bessel_window_too_small_raises():
    phi = np.zeros(16, dtype=complex)
    phi[8] = 1.0
    with pytest.raises(ValueError, match="site"):
        evolve_free_1d(phi, 30.0, method="bessel_kernel")


def test_evolve_1d_eigen_matches_expm_with_potential():
    rng = np.random.default_rng(2)
    pot = sample_potential(almost_mathieu(3.0), (-8, 8))
    op = build_operator_1d(pot)
    es = eigh_tridiagonal(op)
    chi = _random_state(rng, 16)
    t = 2.5
    expected = scipy.linalg.expm(1j * t * op.matrix()) @ chi
    np.testing.assert_allclose(evolve_1d_eigen(es, chi, t), expected, atol=1e-12)


# -- 2D factorized propagator ----------------------------------------------------


@pytest.mark.parametrize("m_method", ["dft_multiplier", "eigen"])
def test_factorized_matches_dense_direct(m_method):
    rng = np.random.default_rng(3)
    N, M = 12, 10
    pot = sample_potential(almost_mathieu(3.0), (-6, 6))
    a1 = build_operator_1d(pot)
    plan = make_plan(a1, m_method, M)
    a2 = plan.a2_operator()
    amp = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    psi0 = LatticeState2D(amp / np.linalg.norm(amp), n0=-6, m0=-5)
    for t in (0.4, 1.0, 3.0):
        fact = evolve_2d_factorized(psi0, plan, t)
        direct = evolve_2d_direct(psi0, a1, a2, t, method="dense")
        np.testing.assert_allclose(fact.amplitudes, direct.amplitudes, atol=1e-11)


def test_factorized_sweep_order_is_immaterial():
    rng = np.random.default_rng(4)
    a1 = build_operator_1d(sample_potential(almost_mathieu(2.0), (0, 9)))
    plan = make_plan(a1, "dft_multiplier", 11)
    amp = rng.standard_normal((9, 11)) + 1j * rng.standard_normal((9, 11))
    psi0 = LatticeState2D(amp)
    a = evolve_2d_factorized(psi0, plan, 2.7, order="nm")
    b = evolve_2d_factorized(psi0, plan, 2.7, order="mn")
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-12)


def test_factorized_against_scipy_expm_oracle():
    # third route: dense expm of the assembled 2D matrix
    rng = np.random.default_rng(5)
    N, M = 6, 7
    a1 = build_operator_1d(sample_potential(almost_mathieu(3.0, theta=0.4), (0, N)))
    plan = make_plan(a1, "dft_multiplier", M)
    a2 = plan.a2_operator()
    amp = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    psi0 = LatticeState2D(amp)
    t = 1.3
    U = scipy.linalg.expm(1j * t * hamiltonian_2d_dense(a1, a2))
    expected = (U @ amp.ravel()).reshape(N, M)
    out = evolve_2d_factorized(psi0, plan, t)
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-12)


def test_free_chain_plan_skips_n_sweep():
    M = 128
    amp = np.zeros((1, M), dtype=complex)
    amp[0, M // 2] = 1.0
    psi0 = LatticeState2D(amp, n0=0, m0=-(M // 2))
    plan = make_plan(None, "dft_multiplier", M)
    assert plan.n_size == 1 and plan.a1_operator() is None
    out = evolve_2d_factorized(psi0, plan, 1.0)
    assert abs(out.amplitudes[0, M // 2] - J0_OF_2) < 1e-14


def test_unitarity_of_factorized_evolution():
    rng = np.random.default_rng(6)
    a1 = build_operator_1d(sample_potential(almost_mathieu(3.0), (0, 10)))
    for m_method in ("dft_multiplier", "eigen"):
        plan = make_plan(a1, m_method, 12)
        amp = rng.standard_normal((10, 12)) + 1j * rng.standard_normal((10, 12))
        psi0 = LatticeState2D(amp / np.linalg.norm(amp))
        out = evolve_2d_factorized(psi0, plan, 7.3)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12


def test_chebyshev_direct_matches_dense():
    rng = np.random.default_rng(7)
    N, M = 14, 9
    a1 = build_operator_1d(sample_potential(almost_mathieu(3.0), (0, N)))
    a2 = free_operator(M, boundary="periodic")
    amp = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    psi0 = LatticeState2D(amp / np.linalg.norm(amp))
    for t in (0.5, 4.0):
        dense = evolve_2d_direct(psi0, a1, a2, t, method="dense")
        cheb = evolve_2d_direct(psi0, a1, a2, t, method="chebyshev")
        np.testing.assert_allclose(cheb.amplitudes, dense.amplitudes, atol=1e-8)


def test_dense_direct_enforces_site_cap():
    a1 = free_operator(80)
    a2 = free_operator(80)
    psi0 = delta_state(80, 80)
    assert 80 * 80 > DENSE_SITE_CAP
    with pytest.raises(ValueError, match="chebyshev"):
        evolve_2d_direct(psi0, a1, a2, 1.0, method="dense")


def test_plan_validation():
    with pytest.raises(ValueError):
        PropagatorPlan(None, "eigen", 8)  # eigen needs es2
    with pytest.raises(ValueError):
        PropagatorPlan(None, "nonsense", 8)
    with pytest.raises(ValueError):
        make_plan(None, "dft_multiplier", 1)


def test_t_zero_is_identity():
    rng = np.random.default_rng(8)
    a1 = build_operator_1d(sample_potential(almost_mathieu(1.0), (0, 5)))
    plan = make_plan(a1, "dft_multiplier", 6)
    amp = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    psi0 = LatticeState2D(amp)
    out = evolve_2d_factorized(psi0, plan, 0.0)
    np.testing.assert_allclose(out.amplitudes, amp, atol=1e-15)
