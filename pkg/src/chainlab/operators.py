"""Lattice model: 1D potentials, tridiagonal operators, 2D states.

The 2D Hamiltonian acts on a state psi[n, m] as

    (H psi)[n, m] = -(psi[n+1,m] + psi[n-1,m] + psi[n,m+1] + psi[n,m-1]) + V[n] psi[n,m]

with the potential constant along the m direction.  H therefore splits into
a tridiagonal operator A1 = -shift - shift^T + diag(V) acting on n-fibers
plus the free hopping operator -Delta acting on m-fibers, and everything
downstream (spectral measures, propagators) exploits that product structure.

Sign convention: pure hopping carries coefficient -1 and there is no
diagonal 2d term, so the free 1D spectrum is [-2, 2] and the free 2D
spectrum is [-4, 4].
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0

FAMILIES = ("constant", "quasiperiodic", "almost_mathieu", "random_iid", "explicit")
BOUNDARIES = ("dirichlet", "periodic")

_IID_BLOCK = 4096  # sites drawn per counter-based RNG block


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PotentialSpec:
    """Declarative description of a potential family.

    amplitude is the single numeric knob of each family: the value c for
    ``constant``, the prefactor a for the quasiperiodic families, and the
    half-width w for ``random_iid`` (values uniform in [-w, w]).
    ``explicit`` potentials are anchored at n = 0.
    """

    family: str
    amplitude: float = 0.0
    omega: float = GOLDEN_MEAN
    theta: float = 0.0
    profile: tuple[float, ...] | None = None
    seed: int | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}, expected one of {FAMILIES}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.family in ("quasiperiodic", "almost_mathieu"):
            if not np.isfinite(self.omega) or not np.isfinite(self.theta):
                raise ValueError("omega and theta must be finite")
        if self.family == "quasiperiodic":
            if self.profile is None or len(self.profile) < 16:
                raise ValueError("quasiperiodic needs a profile of at least 16 samples over one period")
            if not all(np.isfinite(v) for v in self.profile):
                raise ValueError("profile samples must be finite")
        if self.family == "random_iid" and self.seed is None:
            raise ValueError("random_iid needs an explicit seed")
        if self.family == "explicit":
            if not self.values:
                raise ValueError("explicit potential needs a nonempty values list")
            if not all(np.isfinite(v) for v in self.values):
                raise ValueError("explicit potential values must be finite")

    @property
    def sup_bound(self) -> float:
        """An upper bound for sup_n |V_n| (used for spectral radius estimates)."""
        if self.family == "explicit":
            return float(np.max(np.abs(self.values)))
        if self.family == "quasiperiodic":
            return abs(self.amplitude) * float(np.max(np.abs(self.profile))) * 1.001
        return abs(self.amplitude)


def cosine_profile(samples: int = 512) -> tuple[float, ...]:
    """Samples of cos on [0, 2pi), for quasiperiodic specs."""
    j = np.arange(samples)
    return tuple(np.cos(2.0 * np.pi * j / samples))


def constant_potential(c: float) -> PotentialSpec:
    return PotentialSpec("constant", amplitude=c)


def almost_mathieu(amplitude: float, omega: float = GOLDEN_MEAN, theta: float = 0.0) -> PotentialSpec:
    """V_n = amplitude * cos(2 pi omega n + theta)."""
    return PotentialSpec("almost_mathieu", amplitude=amplitude, omega=omega, theta=theta)


@dataclass(frozen=True)
class Potential1D:
    """Sampled potential values on the window [n0, n0 + len(values))."""

    values: np.ndarray
    n0: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True, order="C")
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("potential values must be a nonempty 1D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite (l-infinity potentials only)")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def window(self) -> tuple[int, int]:
        return (self.n0, self.n0 + self.values.size)


def _iid_uniform(seed: int, n_lo: int, n_hi: int) -> np.ndarray:
    """Uniform [-1, 1] values for sites n in [n_lo, n_hi), deterministic per (seed, n).

    Values are drawn in fixed blocks of _IID_BLOCK sites keyed by the block
    index, so the sequence at a site does not depend on the requested window.
    """
    lo_block = math.floor(n_lo / _IID_BLOCK)
    hi_block = math.floor((n_hi - 1) / _IID_BLOCK)
    chunks = []
    for block in range(lo_block, hi_block + 1):
        key = 2 * block if block >= 0 else -2 * block - 1
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
        chunks.append(np.random.default_rng(ss).uniform(-1.0, 1.0, _IID_BLOCK))
    full = np.concatenate(chunks)
    offset = n_lo - lo_block * _IID_BLOCK
    return full[offset : offset + (n_hi - n_lo)]


def sample_potential(spec: PotentialSpec, window: tuple[int, int]) -> Potential1D:
    """Evaluate a potential spec on the half-open integer window [start, stop)."""
    start, stop = int(window[0]), int(window[1])
    if stop <= start:
        raise ValueError(f"empty sampling window ({start}, {stop})")
    n = np.arange(start, stop)
    if spec.family == "constant":
        vals = np.full(n.size, float(spec.amplitude))
    elif spec.family == "almost_mathieu":
        vals = spec.amplitude * np.cos(2.0 * np.pi * spec.omega * n + spec.theta)
    elif spec.family == "quasiperiodic":
        prof = np.asarray(spec.profile, dtype=float)
        period = 2.0 * np.pi
        x = np.linspace(0.0, period, prof.size + 1)
        spline = CubicSpline(x, np.append(prof, prof[0]), bc_type="periodic")
        phase = np.mod(2.0 * np.pi * spec.omega * n + spec.theta, period)
        vals = spec.amplitude * spline(phase)
    elif spec.family == "random_iid":
        vals = spec.amplitude * _iid_uniform(spec.seed, start, stop)
    else:  # explicit, anchored at n = 0
        if start < 0 or stop > len(spec.values):
            raise ValueError(
                f"explicit potential covers n in [0, {len(spec.values)}), window ({start}, {stop}) is outside"
            )
        vals = np.asarray(spec.values, dtype=float)[start:stop]
    return Potential1D(vals, n0=start)


@dataclass(frozen=True)
class Operator1D:
    """Tridiagonal -shift - shift^T + diag(diagonal), dirichlet or periodic ends."""

    diagonal: np.ndarray
    boundary: str = "dirichlet"

    def __post_init__(self):
        diag = np.array(self.diagonal, dtype=float, copy=True, order="C")
        if diag.ndim != 1 or diag.size < 2:
            raise ValueError("operator needs at least 2 sites")
        if not np.all(np.isfinite(diag)):
            raise ValueError("operator diagonal must be finite")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}, expected one of {BOUNDARIES}")
        object.__setattr__(self, "diagonal", _freeze(diag))

    @property
    def size(self) -> int:
        return self.diagonal.size

    @property
    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        return 2.0 + float(np.max(np.abs(self.diagonal)))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply along axis 0 of a (N,) or (N, K) array."""
        v = np.asarray(vec)
        if v.shape[0] != self.size:
            raise ValueError(f"axis-0 length {v.shape[0]} does not match operator size {self.size}")
        diag = self.diagonal.reshape((-1,) + (1,) * (v.ndim - 1))
        out = diag * v
        out[1:] -= v[:-1]
        out[:-1] -= v[1:]
        if self.boundary == "periodic":
            out[0] -= v[-1]
            out[-1] -= v[0]
        return out

    def matrix(self) -> np.ndarray:
        n = self.size
        mat = np.diag(self.diagonal).astype(float)
        off = np.arange(n - 1)
        mat[off, off + 1] = -1.0
        mat[off + 1, off] = -1.0
        if self.boundary == "periodic":
            mat[0, n - 1] -= 1.0
            mat[n - 1, 0] -= 1.0
        return mat


def build_operator_1d(
    potential: Potential1D | None = None,
    size: int | None = None,
    boundary: str = "dirichlet",
) -> Operator1D:
    """Tridiagonal operator from a sampled potential, or the free one for potential=None."""
    if potential is not None:
        if size is not None and size != potential.size:
            raise ValueError(f"size {size} does not match potential window of {potential.size} sites")
        return Operator1D(potential.values.copy(), boundary)
    if size is None:
        raise ValueError("need a potential or an explicit size")
    return Operator1D(np.zeros(int(size)), boundary)


def free_operator(size: int, boundary: str = "dirichlet") -> Operator1D:
    return build_operator_1d(size=size, boundary=boundary)


@dataclass(frozen=True)
class LatticeState2D:
    """Complex amplitudes on the window [n0, n0+N) x [m0, m0+M), row-major (n, m)."""

    amplitudes: np.ndarray
    n0: int = 0
    m0: int = 0

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex, copy=True, order="C")
        if amp.ndim != 2 or amp.size == 0:
            raise ValueError("amplitudes must be a nonempty 2D array")
        object.__setattr__(self, "amplitudes", _freeze(amp))

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitudes.shape

    def with_amplitudes(self, amplitudes: np.ndarray) -> "LatticeState2D":
        return dataclasses.replace(self, amplitudes=amplitudes)

    def n_coords(self) -> np.ndarray:
        return np.arange(self.n0, self.n0 + self.shape[0])

    def m_coords(self) -> np.ndarray:
        return np.arange(self.m0, self.m0 + self.shape[1])


def delta_state(N: int, M: int, n0: int | None = None, m0: int | None = None) -> LatticeState2D:
    """Unit mass at the physical site (0, 0) of a centered window."""
    n0 = -(N // 2) if n0 is None else n0
    m0 = -(M // 2) if m0 is None else m0
    if not (n0 <= 0 < n0 + N and m0 <= 0 < m0 + M):
        raise ValueError("window does not contain the site (0, 0)")
    amp = np.zeros((N, M), dtype=complex)
    amp[-n0, -m0] = 1.0
    return LatticeState2D(amp, n0=n0, m0=m0)


def tensor_state(chi: np.ndarray, phi: np.ndarray, n0: int = 0, m0: int = 0) -> LatticeState2D:
    return LatticeState2D(np.outer(chi, phi), n0=n0, m0=m0)


def apply_h2d(state: LatticeState2D, a1: Operator1D, a2: Operator1D) -> LatticeState2D:
    """Matrix-free application of H = A1 (x) I + I (x) A2."""
    amp = state.amplitudes
    if amp.shape != (a1.size, a2.size):
        raise ValueError(f"state shape {amp.shape} does not match operators ({a1.size}, {a2.size})")
    out = a1.apply(amp)
    out += a2.apply(amp.T).T
    return state.with_amplitudes(out)


def hamiltonian_2d_dense(a1: Operator1D, a2: Operator1D, site_cap: int = 4096) -> np.ndarray:
    """Dense (N*M, N*M) matrix of H, columns assembled through apply_h2d."""
    N, M = a1.size, a2.size
    sites = N * M
    if sites > site_cap:
        raise ValueError(f"{N}x{M} = {sites} sites exceeds the dense cap of {site_cap}")
    H = np.empty((sites, sites))
    basis = np.zeros((N, M), dtype=complex)
    for j in range(sites):
        basis.flat[j] = 1.0
        col = apply_h2d(LatticeState2D(basis.copy()), a1, a2).amplitudes
        H[:, j] = col.real.ravel()
        basis.flat[j] = 0.0
    return H


def energy_expectation(state: LatticeState2D, a1: Operator1D, a2: Operator1D) -> float:
    """<psi, H psi>, real for Hermitian H."""
    hpsi = apply_h2d(state, a1, a2).amplitudes
    return float(np.vdot(state.amplitudes, hpsi).real)


# -- norms ------------------------------------------------------------------

def l2_norm(state: LatticeState2D) -> float:
    return float(np.linalg.norm(state.amplitudes))


def l1_norm(state: LatticeState2D) -> float:
    return float(np.abs(state.amplitudes).sum())


def sup_norm(state: LatticeState2D) -> float:
    return float(np.abs(state.amplitudes).max())


def mixed_l2n_supm(state: LatticeState2D) -> float:
    """sup over m of the l2 norm along n."""
    return float(np.linalg.norm(state.amplitudes, axis=0).max())


def mixed_supm_l2n(state: LatticeState2D) -> float:
    """l2 norm along n of the sup along m."""
    return float(np.linalg.norm(np.abs(state.amplitudes).max(axis=1)))
