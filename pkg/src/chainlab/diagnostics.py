"""Decay traces, power-law fits, transfer-matrix growth, spreading moments.

The dispersive measurement: record sup_{n,m} |psi(t)| along a trajectory on
a grid sized so no wrapped or reflected amplitude re-enters the picture
(group speed is 2, so the light cone at time t spans 2t sites plus a kernel
tail), then fit log sup against log <t> with <t> = sqrt(1 + t^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import (
    PropagatorPlan,
    bessel_pad,
    evolve_1d_eigen,
    evolve_2d_factorized,
    evolve_free_1d,
    _support_range,
)
from .operators import (
    LatticeState2D,
    Operator1D,
    PotentialSpec,
    _freeze,
    mixed_l2n_supm,
    mixed_supm_l2n,
    sample_potential,
)

try:  # optional accelerator; the numpy path below is the reference
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment dependent
    _HAVE_NUMBA = False

RENORM_BLOCK = 32
MIN_TRANSFER_LENGTH = 1000
MIN_FIT_SAMPLES = 8


def time_bracket(t):
    """Japanese bracket <t> = sqrt(1 + t^2)."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(1.0 + t * t)


@dataclass(frozen=True)
class DecayTrace:
    """Norms of a trajectory, one row per requested time."""

    times: np.ndarray
    sup_norms: np.ndarray
    l2n_supm: np.ndarray  # sup over m of the l2 norm along n
    supm_l2n: np.ndarray  # l2 norm along n of the sup along m
    l2_norms: np.ndarray
    energies: np.ndarray
    psi0_l1: float
    psi0_l2: float

    def __post_init__(self):
        for name in ("times", "sup_norms", "l2n_supm", "supm_l2n", "l2_norms", "energies"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            if arr.shape != (np.asarray(self.times).size,):
                raise ValueError("trace columns must share one length")
            object.__setattr__(self, name, _freeze(arr))


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    prefactor: float
    residual: float  # rms of log-log fit residuals
    t_lo: float
    t_hi: float
    n_samples: int


@dataclass(frozen=True)
class SpreadingMoments:
    m_second_moment: float
    n_second_moment: float
    participation_ratio: float


def minimal_wrap_free_m(t_max: float, support_width: int, tail_tol: float = 1e-10) -> int:
    """Smallest m-extent on which evolution up to t_max is faithful to the infinite lattice."""
    reach = int(math.ceil(2.0 * abs(t_max))) + bessel_pad(t_max, tail_tol)
    return support_width + 2 * reach


def _check_wrap_free(plan: PropagatorPlan, psi0: LatticeState2D, t_max: float) -> None:
    amp = psi0.amplitudes
    lo, hi = _support_range(amp)
    reach = int(math.ceil(2.0 * t_max)) + bessel_pad(t_max, plan.tail_tol)
    width = hi - lo + 1
    M = amp.shape[1]
    need = width + 2 * reach
    if plan.m_method == "dft_multiplier":
        if M < need:
            raise ValueError(
                f"m-grid of {M} sites wraps before t = {t_max}: need at least {need} sites "
                f"(support width {width} plus light cone and tail margin {reach} per side)"
            )
    else:
        if lo - reach < 0 or hi + reach > M - 1:
            raise ValueError(
                f"m-window of {M} sites reflects or truncates before t = {t_max}: the support "
                f"[{lo}, {hi}] needs {reach} sites of margin per side (at least {need} sites total)"
            )


def _energy(amp: np.ndarray, a1: Operator1D | None, a2: Operator1D) -> float:
    e = np.vdot(amp, a2.apply(amp.T).T).real
    if a1 is not None:
        e += np.vdot(amp, a1.apply(amp)).real
    return float(e)


def record_decay(plan: PropagatorPlan, psi0: LatticeState2D, times) -> DecayTrace:
    """Evolve psi0 under the plan and record norms at each time.

    Times must be nonnegative and ascending.  The m-grid must be wrap-free
    for the last time per the light-cone rule; the error names the minimal
    grid otherwise.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("need a nonempty 1D array of times")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be nonnegative and ascending")
    _check_wrap_free(plan, psi0, float(times[-1]))

    a1 = plan.a1_operator()
    a2 = plan.a2_operator()
    cols = {name: [] for name in ("sup", "l2n_supm", "supm_l2n", "l2", "energy")}
    for t in times:
        psi_t = evolve_2d_factorized(psi0, plan, float(t))
        amp = psi_t.amplitudes
        cols["sup"].append(np.abs(amp).max())
        cols["l2n_supm"].append(mixed_l2n_supm(psi_t))
        cols["supm_l2n"].append(mixed_supm_l2n(psi_t))
        cols["l2"].append(np.linalg.norm(amp))
        cols["energy"].append(_energy(amp, a1, a2))
    return DecayTrace(
        times=times,
        sup_norms=cols["sup"],
        l2n_supm=cols["l2n_supm"],
        supm_l2n=cols["supm_l2n"],
        l2_norms=cols["l2"],
        energies=cols["energy"],
        psi0_l1=float(np.abs(psi0.amplitudes).sum()),
        psi0_l2=float(np.linalg.norm(psi0.amplitudes)),
    )


def n_fiber_isometry_defect(plan: PropagatorPlan, psi0: LatticeState2D, t: float) -> float:
    """max_m | ||psi(t)[:, m]||_2 - ||(m-sweep only)[:, m]||_2 |.

    The n-sweep is an isometry on every column, so the two column-norm
    profiles must coincide.
    """
    amp = psi0.amplitudes
    if plan.m_method == "eigen":
        half = evolve_1d_eigen(plan.es2, amp.T, t).T
    else:
        half = evolve_free_1d(amp, t, method=plan.m_method, tail_tol=plan.tail_tol)
    full = evolve_1d_eigen(plan.es1, half, t) if plan.es1 is not None else half
    return float(np.abs(np.linalg.norm(full, axis=0) - np.linalg.norm(half, axis=0)).max())


def conservation_defects(trace: DecayTrace) -> tuple[float, float]:
    """Relative l2-norm and energy drift along the trace."""
    n0 = trace.l2_norms[0]
    e0 = trace.energies[0]
    norm_drift = float(np.abs(trace.l2_norms - n0).max() / n0)
    energy_drift = float(np.abs(trace.energies - e0).max() / max(1.0, abs(e0)))
    return norm_drift, energy_drift


def fit_decay_exponent(trace: DecayTrace, t_lo: float = 20.0, t_hi: float = 200.0) -> DecayFit:
    """Least-squares slope of log sup_norm against log <t> on [t_lo, t_hi]."""
    if not (0.0 <= t_lo < t_hi):
        raise ValueError("need 0 <= t_lo < t_hi")
    mask = (trace.times >= t_lo) & (trace.times <= t_hi)
    n = int(mask.sum())
    if n < MIN_FIT_SAMPLES:
        raise ValueError(f"only {n} samples in [{t_lo}, {t_hi}], need at least {MIN_FIT_SAMPLES}")
    sups = trace.sup_norms[mask]
    if np.any(sups <= 0):
        raise ValueError("sup norms must be positive on the fit window")
    x = np.log(time_bracket(trace.times[mask]))
    if x.max() - x.min() < 1e-9:
        raise ValueError("fit window is degenerate in log <t>")
    y = np.log(sups)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(float(slope), float(np.exp(intercept)), resid, t_lo, t_hi, n)


# -- transfer-matrix growth ---------------------------------------------------
#
# T_n(E) = [[E - V_n, -1], [1, 0]] is the one-step map of the difference
# equation (E - A1) chi = 0 written in the (chi_{n+1}, chi_n) frame; the
# growth rate of the matrix product recovers the inverse localization length.


def _growth_numpy(V: np.ndarray, energies: np.ndarray, block: int) -> np.ndarray:
    E = np.asarray(energies, dtype=float)
    a = np.ones_like(E)
    b = np.zeros_like(E)
    c = np.zeros_like(E)
    d = np.ones_like(E)
    logsum = np.zeros_like(E)
    L = V.size
    for start in range(0, L, block):
        for v in V[start : start + block]:
            e = E - v
            a, c = e * a - c, a
            b, d = e * b - d, b
        s = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        logsum += np.log(s)
        a /= s
        b /= s
        c /= s
        d /= s
    s = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
    return (logsum + np.log(s)) / L


if _HAVE_NUMBA:

    @_njit(fastmath=False)
    def _growth_scalar(V, E, block):  # pragma: no cover - exercised via lyapunov_scan
        a = 1.0
        b = 0.0
        c = 0.0
        d = 1.0
        logsum = 0.0
        count = 0
        for n in range(V.size):
            e = E - V[n]
            na = e * a - c
            nb = e * b - d
            c = a
            d = b
            a = na
            b = nb
            count += 1
            if count == block:
                s = max(abs(a), abs(b), abs(c), abs(d))
                logsum += math.log(s)
                a /= s
                b /= s
                c /= s
                d /= s
                count = 0
        s = max(abs(a), abs(b), abs(c), abs(d))
        return (logsum + math.log(s)) / V.size


def lyapunov_scan(
    spec: PotentialSpec,
    energies,
    L: int = 10**6,
    block: int = RENORM_BLOCK,
) -> np.ndarray:
    """Transfer-matrix growth rate (1/L) log ||prod T_n(E)|| at each energy.

    The product is renormalized by its sup-norm every ``block`` steps with
    log accumulation, so products at L = 1e6 never overflow.
    """
    if L < MIN_TRANSFER_LENGTH:
        raise ValueError(f"transfer length {L} is below the minimum {MIN_TRANSFER_LENGTH}")
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if not np.all(np.isfinite(energies)):
        raise ValueError("energies must be finite")
    V = sample_potential(spec, (0, int(L))).values
    if _HAVE_NUMBA:
        return np.array([_growth_scalar(V, float(E), block) for E in energies])
    return _growth_numpy(V, energies, block)


def lyapunov_exponent(spec: PotentialSpec, E: float, L: int = 10**6, block: int = RENORM_BLOCK) -> float:
    return float(lyapunov_scan(spec, [E], L=L, block=block)[0])


def truncation_energies(spec: PotentialSpec, N: int = 512, count: int = 8) -> np.ndarray:
    """Mid-spectrum eigenvalues of the N-site dirichlet truncation, for on-spectrum sampling."""
    from .operators import build_operator_1d
    from .spectral import eigh_tridiagonal

    es = eigh_tridiagonal(build_operator_1d(sample_potential(spec, (0, N))))
    idx = np.linspace(N // 12, N - 1 - N // 12, count).astype(int)
    return es.eigenvalues[idx]


def spreading_moments(state: LatticeState2D, origin: tuple[float, float] | None = None) -> SpreadingMoments:
    """Second moments of |psi|^2 about ``origin`` (the state's centroid when omitted)."""
    p = np.abs(state.amplitudes) ** 2
    total = p.sum()
    if total <= 0:
        raise ValueError("state is identically zero")
    n = state.n_coords().astype(float)
    m = state.m_coords().astype(float)
    pn = p.sum(axis=1) / total
    pm = p.sum(axis=0) / total
    if origin is None:
        origin = (float(n @ pn), float(m @ pm))
    n_bar, m_bar = float(origin[0]), float(origin[1])
    return SpreadingMoments(
        m_second_moment=float(((m - m_bar) ** 2) @ pm),
        n_second_moment=float(((n - n_bar) ** 2) @ pn),
        participation_ratio=float(total**2 / (p**2).sum()),
    )
