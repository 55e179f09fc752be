"""Propagators: exact 1D pieces and their 2D factorized product.

Everything implements the unitary group e^{iHt}.  Because the potential is
constant along m, the full propagator splits exactly into commuting factors

    e^{iHt} = e^{i A1 t} . e^{i (-Delta_m) t}

applied fiber by fiber; evolve_2d_factorized never forms a 2D matrix.
evolve_2d_direct is the non-factorized reference route (dense
eigendecomposition, or a certified Chebyshev expansion above the dense cap).

Free-propagator conventions (symbol of -Delta is -2 cos theta):
the DFT multiplier on mode k of an M-ring is e^{-2it cos(2 pi k / M)} and
the infinite-lattice kernel is K_m(t) = (-i)^m J_m(2t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .operators import LatticeState2D, Operator1D, build_operator_1d
from .spectral import EigenSystem, eigh_tridiagonal

M_METHODS = ("dft_multiplier", "bessel_kernel", "eigen")
DEFAULT_TAIL_TOL = 1e-10
DENSE_SITE_CAP = 4096
CHEB_TOL = 1e-9


def evolve_1d_eigen(es: EigenSystem, chi: np.ndarray, t: float) -> np.ndarray:
    """e^{iAt} chi through the eigenbasis; chi may be (N,) or (N, K)."""
    c = es.overlaps(np.asarray(chi, dtype=complex))
    phases = np.exp(1j * t * es.eigenvalues)
    if c.ndim > 1:
        phases = phases.reshape((-1,) + (1,) * (c.ndim - 1))
    return es.eigenvectors @ (phases * c)


def bessel_pad(t: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Sites beyond the light cone |m| = 2|t| kept so the dropped kernel tail is < tail_tol.

    Calibrated against the Airy falloff of J_m(2t) past the turning point;
    the l1 tail below the returned pad is under 1e-10 for tail_tol = 1e-10.
    """
    z = max(2.0 * abs(t), 1.0)
    scale = max(1.0, -math.log10(tail_tol) / 10.0)
    return int(math.ceil(10.0 * scale * (z / 2.0) ** (1.0 / 3.0))) + 12


_MINUS_I_POW = np.array([1.0 + 0.0j, -1.0j, -1.0 + 0.0j, 1.0j])  # (-i)^r, exact
_PLUS_I_POW = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])  # i^k, exact


def bessel_kernel(t: float, half_width: int) -> np.ndarray:
    """K_r(t) = (-i)^r J_r(2t) for r in [-half_width, half_width]."""
    r = np.arange(-half_width, half_width + 1)
    return _MINUS_I_POW[np.mod(r, 4)] * jv(r, 2.0 * t)


def _support_range(arr: np.ndarray) -> tuple[int, int]:
    """First and last occupied index along the last axis."""
    mass = np.abs(arr)
    if mass.ndim > 1:
        mass = mass.reshape(-1, mass.shape[-1]).max(axis=0)
    idx = np.nonzero(mass > 0.0)[0]
    if idx.size == 0:
        raise ValueError("state is identically zero")
    return int(idx[0]), int(idx[-1])


def evolve_free_1d(
    phi: np.ndarray,
    t: float,
    method: str = "dft_multiplier",
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> np.ndarray:
    """Free propagator e^{i(-Delta)t} along the last axis.

    dft_multiplier treats the axis as a periodic ring; bessel_kernel treats
    it as a window of the infinite lattice and insists the light cone plus
    kernel tail stays inside the window; eigen goes through the dirichlet
    truncation eigenbasis (mainly a cross-check path).
    """
    phi = np.asarray(phi, dtype=complex)
    M = phi.shape[-1]
    if method == "dft_multiplier":
        mult = np.exp(-2j * t * np.cos(2.0 * np.pi * np.arange(M) / M))
        return np.fft.ifft(np.fft.fft(phi, axis=-1) * mult, axis=-1)
    if method == "bessel_kernel":
        reach = int(math.ceil(2.0 * abs(t))) + bessel_pad(t, tail_tol)
        lo, hi = _support_range(phi)
        if lo - reach < 0 or hi + reach > M - 1:
            need = (hi - lo + 1) + 2 * reach
            raise ValueError(
                f"bessel window too small: support [{lo}, {hi}] needs {reach} sites of margin, "
                f"so at least {need} sites (have {M})"
            )
        kern = bessel_kernel(t, reach)
        n_fft = M + 2 * reach
        out = np.fft.ifft(np.fft.fft(phi, n_fft, axis=-1) * np.fft.fft(kern, n_fft), axis=-1)
        return out[..., reach : reach + M]
    if method == "eigen":
        es = eigh_tridiagonal(build_operator_1d(size=M, boundary="dirichlet"))
        moved = np.moveaxis(phi, -1, 0)
        return np.moveaxis(evolve_1d_eigen(es, moved, t), 0, -1)
    raise ValueError(f"unknown free-propagator method {method!r}, expected one of {M_METHODS}")


@dataclass(frozen=True)
class PropagatorPlan:
    """Precomputed pieces of the factorized propagator e^{iA1 t} e^{i(-Delta_m)t}.

    es1 = None selects the pure free-chain mode (states with a single
    n-fiber, no n-sweep).  es2 is only set for m_method = "eigen".
    """

    es1: EigenSystem | None
    m_method: str
    m_size: int
    es2: EigenSystem | None = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if self.m_method not in M_METHODS:
            raise ValueError(f"unknown m_method {self.m_method!r}, expected one of {M_METHODS}")
        if self.m_size < 2:
            raise ValueError("m_size must be at least 2")
        if self.m_method == "eigen" and self.es2 is None:
            raise ValueError("eigen m_method needs es2")
        if self.es2 is not None and self.es2.size != self.m_size:
            raise ValueError("es2 size does not match m_size")

    @property
    def n_size(self) -> int:
        return self.es1.size if self.es1 is not None else 1

    def a1_operator(self) -> Operator1D | None:
        return self.es1.source if self.es1 is not None else None

    def a2_operator(self) -> Operator1D:
        """The m-fiber operator the plan realizes (window proxy for bessel_kernel)."""
        if self.m_method == "eigen":
            return self.es2.source
        boundary = "periodic" if self.m_method == "dft_multiplier" else "dirichlet"
        return build_operator_1d(size=self.m_size, boundary=boundary)


def make_plan(
    a1: Operator1D | None,
    m_method: str,
    m_size: int,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> PropagatorPlan:
    es1 = eigh_tridiagonal(a1) if a1 is not None else None
    es2 = None
    if m_method == "eigen":
        es2 = eigh_tridiagonal(build_operator_1d(size=m_size, boundary="dirichlet"))
    return PropagatorPlan(es1, m_method, int(m_size), es2, tail_tol)


def evolve_2d_factorized(
    state: LatticeState2D,
    plan: PropagatorPlan,
    t: float,
    order: str = "nm",
) -> LatticeState2D:
    """Apply the factorized propagator; order only swaps the commuting sweeps."""
    amp = state.amplitudes
    if amp.shape[0] != plan.n_size or amp.shape[1] != plan.m_size:
        raise ValueError(f"state shape {amp.shape} does not match plan ({plan.n_size}, {plan.m_size})")
    if order not in ("nm", "mn"):
        raise ValueError("order must be 'nm' or 'mn'")

    def n_sweep(a):
        return evolve_1d_eigen(plan.es1, a, t) if plan.es1 is not None else a

    def m_sweep(a):
        if plan.m_method == "eigen":
            return evolve_1d_eigen(plan.es2, a.T, t).T
        return evolve_free_1d(a, t, method=plan.m_method, tail_tol=plan.tail_tol)

    out = m_sweep(n_sweep(amp)) if order == "nm" else n_sweep(m_sweep(amp))
    return state.with_amplitudes(out)


def _chebyshev_order(z: float, tol: float) -> int:
    """Smallest K with a certified bound 2 sum_{k>K} |J_k(z)| < tol.

    Uses |J_k(z)| <= (z/2)^k / k! and a geometric majorant for the tail.
    """
    z = abs(z)
    K = max(int(math.ceil(z)), 8)
    while True:
        q = (z / 2.0) / (K + 2.0)
        if q < 0.5:
            log_first = (K + 1) * math.log(z / 2.0) - math.lgamma(K + 2.0) if z > 0 else -math.inf
            bound = 2.0 * math.exp(log_first) / (1.0 - q) if log_first > -700 else 0.0
            if bound < tol:
                return K
        K += max(4, K // 8)


def _chebyshev_expiht(apply_h, psi: np.ndarray, t: float, radius: float, tol: float) -> np.ndarray:
    """e^{iHt} psi by a Chebyshev expansion on [-radius, radius], truncation certified < tol."""
    z = radius * t
    K = _chebyshev_order(z, tol)
    k = np.arange(K + 1)
    coeffs = (2.0 - (k == 0)) * _PLUS_I_POW[k % 4] * jv(k, z)
    tk_prev = psi
    tk = apply_h(psi) / radius
    acc = coeffs[0] * tk_prev + coeffs[1] * tk
    for k in range(2, K + 1):
        tk_prev, tk = tk, 2.0 * apply_h(tk) / radius - tk_prev
        acc += coeffs[k] * tk
    return acc


def evolve_2d_direct(
    state: LatticeState2D,
    a1: Operator1D,
    a2: Operator1D,
    t: float,
    method: str = "dense",
    site_cap: int = DENSE_SITE_CAP,
    cheb_tol: float = CHEB_TOL,
) -> LatticeState2D:
    """Non-factorized e^{iHt}: the oracle route against which the product form is tested."""
    from .operators import apply_h2d, hamiltonian_2d_dense

    N, M = state.shape
    if (N, M) != (a1.size, a2.size):
        raise ValueError(f"state shape {state.shape} does not match operators ({a1.size}, {a2.size})")
    if method == "dense":
        if N * M > site_cap:
            raise ValueError(
                f"{N * M} sites exceed the dense cap {site_cap}; pass method='chebyshev' for large grids"
            )
        H = hamiltonian_2d_dense(a1, a2, site_cap=site_cap)
        lam, vec = np.linalg.eigh(H)
        c = vec.T @ state.amplitudes.ravel()
        out = vec @ (np.exp(1j * lam * t) * c)
        return state.with_amplitudes(out.reshape(N, M))
    if method == "chebyshev":
        radius = a1.norm_bound + a2.norm_bound

        def apply_h(arr):
            return apply_h2d(state.with_amplitudes(arr), a1, a2).amplitudes

        out = _chebyshev_expiht(apply_h, state.amplitudes, t, radius, cheb_tol)
        return state.with_amplitudes(out)
    raise ValueError(f"unknown method {method!r}, expected 'dense' or 'chebyshev'")
