import dataclasses

import numpy as np
import pytest

from chainlab.operators import (
    BOUNDARIES,
    GOLDEN_MEAN,
    LatticeState2D,
    Operator1D,
    PotentialSpec,
    almost_mathieu,
    apply_h2d,
    build_operator_1d,
    constant_potential,
    cosine_profile,
    delta_state,
    energy_expectation,
    free_operator,
    hamiltonian_2d_dense,
    l1_norm,
    l2_norm,
    mixed_l2n_supm,
    mixed_supm_l2n,
    sample_potential,
    sup_norm,
    tensor_state,
)


# -- potential specs and sampling --------------------------------------------


def test_constant_potential_samples():
    pot = sample_potential(constant_potential(2.5), (-3, 4))
    assert pot.n0 == -3 and pot.size == 7
    np.testing.assert_allclose(pot.values, 2.5)


def test_almost_mathieu_matches_closed_form():
    spec = almost_mathieu(3.0, theta=0.7)
    pot = sample_potential(spec, (-50, 50))
    n = np.arange(-50, 50)
    expected = 3.0 * np.cos(2.0 * np.pi * GOLDEN_MEAN * n + 0.7)
    np.testing.assert_allclose(pot.values, expected, atol=1e-14)


def test_quasiperiodic_cosine_profile_matches_almost_mathieu():
    # the sampled-profile interpolation route must reproduce the closed form
    spec_q = PotentialSpec(
        "quasiperiodic", amplitude=3.0, omega=GOLDEN_MEAN, theta=0.7, profile=cosine_profile()
    )
    spec_a = almost_mathieu(3.0, theta=0.7)
    vq = sample_potential(spec_q, (-200, 200)).values
    va = sample_potential(spec_a, (-200, 200)).values
    np.testing.assert_allclose(vq, va, atol=1e-9)


def test_random_iid_is_window_independent():
    spec = PotentialSpec("random_iid", amplitude=1.0, seed=42)
    wide = sample_potential(spec, (-5000, 5000)).values
    narrow = sample_potential(spec, (-7, 13)).values
    np.testing.assert_array_equal(narrow, wide[5000 - 7 : 5000 + 13])


def test_random_iid_amplitude_scales_and_bounds():
    spec = PotentialSpec("random_iid", amplitude=2.0, seed=3)
    v = sample_potential(spec, (0, 10000)).values
    assert np.abs(v).max() <= 2.0
    assert np.abs(v).max() > 1.5  # uniform on [-2, 2] fills its range


def test_random_iid_different_seeds_differ():
    a = sample_potential(PotentialSpec("random_iid", amplitude=1.0, seed=1), (0, 64)).values
    b = sample_potential(PotentialSpec("random_iid", amplitude=1.0, seed=2), (0, 64)).values
    assert not np.array_equal(a, b)


def test_explicit_values_anchor_at_origin():
    spec = PotentialSpec("explicit", amplitude=1.0, values=(1.0, 2.0, 3.0, 4.0))
    pot = sample_potential(spec, (0, 4))
    np.testing.assert_array_equal(pot.values, [1.0, 2.0, 3.0, 4.0])


def test_explicit_window_must_fit():
    spec = PotentialSpec("explicit", amplitude=1.0, values=(1.0, 2.0))
    with pytest.raises(ValueError):
        sample_potential(spec, (0, 3))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="nonsense", amplitude=1.0),
        dict(family="random_iid", amplitude=1.0),  # seed required
        dict(family="explicit", amplitude=1.0),  # values required
        dict(family="quasiperiodic", amplitude=1.0, profile=(1.0, 2.0)),  # too few samples
        dict(family="constant", amplitude=float("nan")),
    ],
)
def test_bad_specs_are_rejected(kwargs):
    with pytest.raises(ValueError):
        PotentialSpec(**kwargs)


def test_sup_bound_dominates_samples():
    specs = [
        constant_potential(-1.5),
        almost_mathieu(3.0, theta=1.1),
        PotentialSpec("random_iid", amplitude=0.5, seed=9),
        PotentialSpec("quasiperiodic", amplitude=2.0, theta=0.3, profile=cosine_profile()),
    ]
    for spec in specs:
        v = sample_potential(spec, (-300, 300)).values
        assert np.abs(v).max() <= spec.sup_bound + 1e-12


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        sample_potential(constant_potential(0.0), (5, 5))


# -- 1D operators -------------------------------------------------------------


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_apply_matches_dense_matrix(boundary):
    rng = np.random.default_rng(0)
    pot = sample_potential(PotentialSpec("random_iid", amplitude=1.0, seed=5), (0, 17))
    op = build_operator_1d(pot, boundary=boundary)
    A = op.matrix()
    np.testing.assert_allclose(A, A.T)  # hermitian
    v = rng.standard_normal(17) + 1j * rng.standard_normal(17)
    np.testing.assert_allclose(op.apply(v), A @ v, atol=1e-14)


@pytest.mark.parametrize("boundary", BOUNDARIES)
def test_apply_works_columnwise_on_blocks(boundary):
    rng = np.random.default_rng(1)
    op = free_operator(9, boundary=boundary)
    block = rng.standard_normal((9, 4)) + 1j * rng.standard_normal((9, 4))
    out = op.apply(block)
    for j in range(4):
        np.testing.assert_allclose(out[:, j], op.apply(block[:, j]), atol=1e-14)


def test_two_site_periodic_ring_doubles_coupling():
    # on a 2-ring both neighbors of site 0 are site 1
    op = free_operator(2, boundary="periodic")
    A = op.matrix()
    np.testing.assert_allclose(A, [[0.0, -2.0], [-2.0, 0.0]])
    np.testing.assert_allclose(op.apply(np.array([1.0, 0.0])), [0.0, -2.0])


def test_free_operator_spectrum_inside_band():
    for boundary in BOUNDARIES:
        A = free_operator(40, boundary=boundary).matrix()
        eig = np.linalg.eigvalsh(A)
        assert eig[0] >= -2.0 - 1e-12 and eig[-1] <= 2.0 + 1e-12


def test_norm_bound_dominates_spectral_radius():
    pot = sample_potential(almost_mathieu(3.0), (0, 30))
    op = build_operator_1d(pot)
    eig = np.linalg.eigvalsh(op.matrix())
    assert np.abs(eig).max() <= op.norm_bound + 1e-12


def test_operator_requires_two_sites():
    with pytest.raises(ValueError):
        Operator1D(np.zeros(1))


# -- 2D states and the split Hamiltonian --------------------------------------


def test_delta_state_sits_at_physical_origin():
    psi = delta_state(8, 6)
    assert psi.n0 == -4 and psi.m0 == -3
    assert psi.amplitudes[4, 3] == 1.0
    assert l2_norm(psi) == 1.0
    assert list(psi.n_coords()) == list(range(-4, 4))


def test_delta_state_window_must_contain_origin():
    with pytest.raises(ValueError):
        delta_state(4, 4, n0=1)


def test_apply_h2d_matches_dense_matrix():
    rng = np.random.default_rng(2)
    pot = sample_potential(almost_mathieu(3.0), (-4, 4))
    a1 = build_operator_1d(pot)
    a2 = free_operator(6, boundary="periodic")
    H = hamiltonian_2d_dense(a1, a2)
    np.testing.assert_allclose(H, H.T)
    amp = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    psi = LatticeState2D(amp)
    out = apply_h2d(psi, a1, a2).amplitudes
    np.testing.assert_allclose(out.ravel(), H @ amp.ravel(), atol=1e-13)


def test_apply_h2d_separates_on_tensor_states():
    rng = np.random.default_rng(3)
    a1 = build_operator_1d(sample_potential(constant_potential(1.0), (0, 5)))
    a2 = free_operator(7)
    chi = rng.standard_normal(5)
    phi = rng.standard_normal(7)
    out = apply_h2d(tensor_state(chi, phi), a1, a2).amplitudes
    expected = np.outer(a1.apply(chi), phi) + np.outer(chi, a2.apply(phi))
    np.testing.assert_allclose(out, expected, atol=1e-14)


def test_dense_cap_enforced():
    a = free_operator(70)
    with pytest.raises(ValueError):
        hamiltonian_2d_dense(a, a)  # 4900 sites > 4096


def test_energy_expectation_is_real_quadratic_form():
    rng = np.random.default_rng(4)
    a1 = free_operator(5)
    a2 = free_operator(5, boundary="periodic")
    amp = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    psi = LatticeState2D(amp)
    H = hamiltonian_2d_dense(a1, a2)
    direct = np.vdot(amp.ravel(), H @ amp.ravel())
    assert abs(direct.imag) < 1e-12
    np.testing.assert_allclose(energy_expectation(psi, a1, a2), direct.real, atol=1e-12)


def test_norm_chain_inequalities():
    # sup <= max_m l2_n <= l2_n of sup_m <= l2 <= l1 on any state
    rng = np.random.default_rng(5)
    for _ in range(20):
        amp = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        psi = LatticeState2D(amp)
        eps = 1e-12
        assert sup_norm(psi) <= mixed_l2n_supm(psi) + eps
        assert mixed_l2n_supm(psi) <= mixed_supm_l2n(psi) + eps
        assert mixed_supm_l2n(psi) <= l2_norm(psi) + eps
        assert l2_norm(psi) <= l1_norm(psi) + eps


def test_value_arrays_are_frozen():
    pot = sample_potential(constant_potential(1.0), (0, 4))
    assert not pot.values.flags.writeable
    op = build_operator_1d(pot)
    assert not op.diagonal.flags.writeable
    psi = delta_state(4, 4)
    assert not psi.amplitudes.flags.writeable
    with pytest.raises(dataclasses.FrozenInstanceError):
        psi.n0 = 3


def test_state_constructor_copies_input():
    amp = np.zeros((3, 3), dtype=complex)
    psi = LatticeState2D(amp)
    amp[0, 0] = 7.0
    assert psi.amplitudes[0, 0] == 0.0
