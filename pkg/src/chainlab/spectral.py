"""Spectral measures of separable lattice operators.

A SpectralMeasure holds finitely many atoms plus an optional piecewise
constant density on a uniform grid.  For a self-adjoint operator with
eigenpairs (lambda_j, v_j) and vectors chi, phi the matrix element measure
carries an atom at each lambda_j with weight conj(v_j . chi) (v_j . phi);
the map (chi, phi) -> measure is conjugate-linear in chi and linear in phi.

The 2D-operator measure at finite combinations sum_j alpha_j chi_j (x) phi_j
is assembled as sum_{j,k} conj(alpha_j) alpha_k (mu1_jk * mu2_jk) where * is
measure convolution; that identity is what the convolution tests pin down.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .operators import Operator1D, _freeze

ATOM_MERGE_TOL = 1e-9
DEFAULT_GRID_BINS = 512
GRID_PAD = 1e-6
PERIODIC_DENSE_CAP = 4096


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: Operator1D | None = None

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float, copy=True)
        vec = np.array(self.eigenvectors, dtype=float, copy=True, order="F")
        if lam.ndim != 1 or vec.ndim != 2 or vec.shape[1] != lam.size:
            raise ValueError("eigenvalue/eigenvector shapes are inconsistent")
        if np.any(np.diff(lam) < 0):
            order = np.argsort(lam, kind="stable")
            lam, vec = lam[order], vec[:, order]
        object.__setattr__(self, "eigenvalues", _freeze(lam))
        object.__setattr__(self, "eigenvectors", _freeze(vec))

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def overlaps(self, vec: np.ndarray) -> np.ndarray:
        """Plain (unconjugated) eigenvector coefficients V^T vec along axis 0."""
        return self.eigenvectors.T @ np.asarray(vec)


def eigh_tridiagonal(op: Operator1D) -> EigenSystem:
    """Full eigendecomposition of a 1D operator.

    Dirichlet operators go through the banded solver; the periodic corner
    makes the matrix non-tridiagonal, so those fall back to a dense solve
    (capped, the dense fallback is O(N^3)).
    """
    if op.boundary == "dirichlet":
        try:
            lam, vec = scipy.linalg.eigh_tridiagonal(op.diagonal, -np.ones(op.size - 1))
        except np.linalg.LinAlgError as exc:  # pragma: no cover - solver failure
            raise RuntimeError(f"tridiagonal eigensolver did not converge: {exc}") from exc
        return EigenSystem(lam, vec, source=op)
    if op.size > PERIODIC_DENSE_CAP:
        raise ValueError(
            f"periodic operator of size {op.size} exceeds the dense fallback cap {PERIODIC_DENSE_CAP}"
        )
    lam, vec = np.linalg.eigh(op.matrix())
    return EigenSystem(lam, vec, source=op)


def dense_eigensystem(matrix: np.ndarray) -> EigenSystem:
    """Eigendecomposition of an arbitrary dense real symmetric matrix."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    asym = np.abs(mat - mat.T).max()
    if asym > 1e-12 * max(1.0, np.abs(mat).max()):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    lam, vec = np.linalg.eigh(mat)
    return EigenSystem(lam, vec)


def eigen_residual(es: EigenSystem, op: Operator1D) -> float:
    """max_j ||A v_j - lambda_j v_j||_2, for the invariant checks."""
    resid = op.apply(es.eigenvectors) - es.eigenvalues[None, :] * es.eigenvectors
    return float(np.linalg.norm(resid, axis=0).max())


def gram_defect(es: EigenSystem) -> float:
    gram = es.eigenvectors.T @ es.eigenvectors
    return float(np.abs(gram - np.eye(es.size)).max())


def _merge_sorted(energies: np.ndarray, weights: np.ndarray, tol: float):
    """Gap-based clustering of sorted atoms; weights summed, energies averaged."""
    if energies.size == 0:
        return energies, weights
    cuts = np.nonzero(np.diff(energies) > tol)[0] + 1
    counts = np.diff(np.concatenate([[0], cuts, [energies.size]]))
    idx = np.concatenate([[0], np.cumsum(counts)])
    e_out = np.add.reduceat(energies, idx[:-1]) / counts
    w_out = np.add.reduceat(weights, idx[:-1])
    return e_out, w_out


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms (energies, complex weights) plus an optional binned density.

    grid_edges are the B+1 edges of a uniform grid and density holds the B
    piecewise-constant complex values on it (so each bin carries mass
    value * width).
    """

    energies: np.ndarray
    weights: np.ndarray
    grid_edges: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        e = np.array(self.energies, dtype=float, copy=True)
        w = np.array(self.weights, dtype=complex, copy=True)
        if e.shape != w.shape or e.ndim != 1:
            raise ValueError("energies and weights must be 1D arrays of equal length")
        if not np.all(np.isfinite(e)):
            raise ValueError("atom energies must be finite")
        order = np.argsort(e, kind="stable")
        object.__setattr__(self, "energies", _freeze(e[order]))
        object.__setattr__(self, "weights", _freeze(w[order]))
        if (self.grid_edges is None) != (self.density is None):
            raise ValueError("grid_edges and density must be given together")
        if self.grid_edges is not None:
            edges = np.array(self.grid_edges, dtype=float, copy=True)
            dens = np.array(self.density, dtype=complex, copy=True)
            if edges.ndim != 1 or edges.size != dens.size + 1:
                raise ValueError("need B+1 grid edges for B density bins")
            widths = np.diff(edges)
            if np.any(widths <= 0) or np.abs(widths - widths[0]).max() > 1e-9 * abs(widths[0]):
                raise ValueError("density grid must be uniform and increasing")
            object.__setattr__(self, "grid_edges", _freeze(edges))
            object.__setattr__(self, "density", _freeze(dens))

    @classmethod
    def from_atoms(cls, energies, weights, merge_tol: float = ATOM_MERGE_TOL) -> "SpectralMeasure":
        e = np.asarray(energies, dtype=float)
        w = np.asarray(weights, dtype=complex)
        order = np.argsort(e, kind="stable")
        e, w = _merge_sorted(e[order], w[order], merge_tol)
        return cls(e, w)

    @property
    def atom_count(self) -> int:
        return self.energies.size

    @property
    def bin_width(self) -> float:
        return float(self.grid_edges[1] - self.grid_edges[0]) if self.grid_edges is not None else 0.0

    def total_mass(self) -> complex:
        mass = complex(self.weights.sum())
        if self.density is not None:
            mass += complex((self.density * np.diff(self.grid_edges)).sum())
        return mass

    def merged(self, tol: float = ATOM_MERGE_TOL) -> "SpectralMeasure":
        e, w = _merge_sorted(self.energies, self.weights, tol)
        return dataclasses.replace(self, energies=e, weights=w)

    def support_bounds(self) -> tuple[float, float]:
        lo, hi = np.inf, -np.inf
        if self.energies.size:
            lo, hi = float(self.energies[0]), float(self.energies[-1])
        if self.grid_edges is not None:
            lo = min(lo, float(self.grid_edges[0]))
            hi = max(hi, float(self.grid_edges[-1]))
        if lo > hi:
            raise ValueError("measure is empty")
        return lo, hi


def spectral_measure_1d(
    es: EigenSystem,
    chi: np.ndarray,
    phi: np.ndarray | None = None,
    merge_tol: float = ATOM_MERGE_TOL,
) -> SpectralMeasure:
    """Matrix-element measure of the operator behind es between chi and phi.

    With phi = chi the weights are |v_j . chi|^2 >= 0 and the mass is
    ||chi||^2.
    """
    chi = np.asarray(chi)
    if chi.shape != (es.size,):
        raise ValueError(f"vector length {chi.shape} does not match eigensystem size {es.size}")
    c_chi = es.overlaps(chi)
    c_phi = c_chi if phi is None else es.overlaps(np.asarray(phi))
    return SpectralMeasure.from_atoms(es.eigenvalues, np.conj(c_chi) * c_phi, merge_tol)


def default_convolution_grid(mu: SpectralMeasure, nu: SpectralMeasure, bins: int = DEFAULT_GRID_BINS) -> np.ndarray:
    """Uniform grid edges covering the Minkowski sum of the two supports."""
    lo1, hi1 = mu.support_bounds()
    lo2, hi2 = nu.support_bounds()
    return np.linspace(lo1 + lo2 - GRID_PAD, hi1 + hi2 + GRID_PAD, bins + 1)


class GridTooNarrowError(ValueError):
    """Convolution mass fell outside the requested grid."""

    def __init__(self, lost_mass: float, lo: float, hi: float):
        self.lost_mass = lost_mass
        super().__init__(
            f"convolution grid loses mass {lost_mass:.3e}; support reaches [{lo:.6g}, {hi:.6g}]"
        )


def _deposit(acc: np.ndarray, edges: np.ndarray, lo: np.ndarray, hi: np.ndarray, masses: np.ndarray) -> complex:
    """Spread each mass uniformly over [lo, hi) and bin it onto the grid.

    Returns the mass falling outside the grid.
    """
    width = edges[1] - edges[0]
    lost = 0.0 + 0.0j
    for a, b, m in zip(lo, hi, masses):
        if b <= edges[0] or a >= edges[-1]:
            lost += m
            continue
        span = b - a
        ca, cb = max(a, edges[0]), min(b, edges[-1])
        if span > 0:
            lost += m * (1.0 - (cb - ca) / span)
        i0 = int(np.floor((ca - edges[0]) / width))
        i1 = min(int(np.ceil((cb - edges[0]) / width)), acc.size)
        for i in range(i0, i1):
            seg = min(cb, edges[i + 1]) - max(ca, edges[i])
            if seg > 0:
                acc[i] += m * (seg / span) if span > 0 else m
    return lost


def convolve_measures(
    mu: SpectralMeasure,
    nu: SpectralMeasure,
    grid: np.ndarray | None = None,
    merge_tol: float = ATOM_MERGE_TOL,
    mass_tol: float = 1e-10,
) -> SpectralMeasure:
    """Convolution of two spectral measures.

    Atom x atom products stay atoms (pairwise energy sums, product weights);
    atom x density and density x density products land in the binned density
    on ``grid`` (default grid when omitted).  Raises GridTooNarrowError when
    more than mass_tol of |product mass| would fall outside the grid.
    """
    e_atoms = np.add.outer(mu.energies, nu.energies).ravel()
    w_atoms = np.multiply.outer(mu.weights, nu.weights).ravel()

    needs_density = mu.density is not None or nu.density is not None
    if not needs_density:
        return SpectralMeasure.from_atoms(e_atoms, w_atoms, merge_tol)

    edges = np.asarray(grid, dtype=float) if grid is not None else default_convolution_grid(mu, nu)
    acc = np.zeros(edges.size - 1, dtype=complex)
    lost = 0.0 + 0.0j

    def atoms_times_density(atoms_e, atoms_w, other: SpectralMeasure):
        nonlocal lost
        if other.density is None or atoms_e.size == 0:
            return
        h = other.bin_width
        for e, w in zip(atoms_e, atoms_w):
            lo = other.grid_edges[:-1] + e
            lost += _deposit(acc, edges, lo, lo + h, w * other.density * h)

    atoms_times_density(mu.energies, mu.weights, nu)
    atoms_times_density(nu.energies, nu.weights, mu)

    if mu.density is not None and nu.density is not None:
        h1, h2 = mu.bin_width, nu.bin_width
        m1 = mu.density * h1
        m2 = nu.density * h2
        if abs(h1 - h2) <= 1e-12 * h1:
            conv = np.convolve(m1, m2)
            start = mu.grid_edges[0] + nu.grid_edges[0]
            lo = start + np.arange(conv.size) * h1
            lost += _deposit(acc, edges, lo, lo + 2 * h1, conv)
        else:
            for j, mj in enumerate(m1):
                lo = nu.grid_edges[:-1] + mu.grid_edges[j]
                lost += _deposit(acc, edges, lo, lo + h1 + h2, mj * m2)

    if abs(lost) > mass_tol:
        lo1, hi1 = mu.support_bounds()
        lo2, hi2 = nu.support_bounds()
        raise GridTooNarrowError(abs(lost), lo1 + lo2, hi1 + hi2)

    width = edges[1] - edges[0]
    e_out, w_out = _merge_sorted(*_sorted(e_atoms, w_atoms), merge_tol)
    return SpectralMeasure(e_out, w_out, grid_edges=edges, density=acc / width)


def _sorted(e: np.ndarray, w: np.ndarray):
    order = np.argsort(e, kind="stable")
    return e[order], w[order]


def spectral_measure_2d(
    es1: EigenSystem,
    es2: EigenSystem,
    components: list[tuple[complex, np.ndarray, np.ndarray]],
    merge_tol: float = ATOM_MERGE_TOL,
) -> SpectralMeasure:
    """Measure of A1 (x) I + I (x) A2 at sum_j alpha_j chi_j (x) phi_j.

    Built without ever forming the 2D operator: for every component pair the
    1D matrix-element measures are convolved and combined sesquilinearly,
    sum_{j,k} conj(alpha_j) alpha_k (mu1_jk * mu2_jk).
    """
    if not components:
        raise ValueError("need at least one tensor component")
    coeff = []
    chis = []
    phis = []
    for alpha, chi, phi in components:
        coeff.append(complex(alpha))
        chis.append(np.asarray(chi, dtype=complex))
        phis.append(np.asarray(phi, dtype=complex))
        if chis[-1].shape != (es1.size,) or phis[-1].shape != (es2.size,):
            raise ValueError("component vector lengths do not match the eigensystems")
    base = np.add.outer(es1.eigenvalues, es2.eigenvalues).ravel()
    total_w = np.zeros(base.size, dtype=complex)
    for j, (aj, cj, pj) in enumerate(zip(coeff, chis, phis)):
        for k, (ak, ck, pk) in enumerate(zip(coeff, chis, phis)):
            w1 = np.conj(es1.overlaps(cj)) * es1.overlaps(ck)
            w2 = np.conj(es2.overlaps(pj)) * es2.overlaps(pk)
            total_w += np.conj(aj) * ak * np.multiply.outer(w1, w2).ravel()
    return SpectralMeasure.from_atoms(base, total_w, merge_tol)


def max_atom_weight(measure: SpectralMeasure, merge_tol: float = ATOM_MERGE_TOL) -> float:
    """Largest |atom weight| after merging near-coincident energies."""
    if measure.atom_count == 0:
        raise ValueError("measure has no atoms")
    merged = measure.merged(merge_tol)
    return float(np.abs(merged.weights).max())


def atom_weight_discrepancy(mu: SpectralMeasure, nu: SpectralMeasure, energy_tol: float = 1e-8) -> float:
    """max |mu - nu| over energy clusters of the union of the two atom sets.

    Both atom lists are clustered together (gap clustering at energy_tol), so
    eigensolver jitter between two routes to the same measure cannot
    misalign atoms; within each cluster the signed weights must cancel.
    """
    e = np.concatenate([mu.energies, nu.energies])
    w = np.concatenate([mu.weights, -nu.weights])
    if e.size == 0:
        return 0.0
    e, w = _sorted(e, w)
    _, resid = _merge_sorted(e, w, energy_tol)
    return float(np.abs(resid).max())
