"""On-disk formats: CSV for tables, JSON for reports, one binary snapshot format.

All writers format floats with repr (shortest round-trip form) and sort rows
deterministically, so identical inputs produce byte-identical files.

Binary trajectory layout (little endian):
    8s  magic  b"CHAINLB1"
    I   version (1)
    I   dtype tag (1 = complex128)
    Q Q Q   T, N, M
    q q     n0, m0
    T float64 times, then T*N*M complex128 amplitudes, row-major (t, n, m).
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .diagnostics import DecayFit, DecayTrace
from .operators import LatticeState2D, Potential1D
from .spectral import SpectralMeasure

MAGIC = b"CHAINLB1"
_HEADER = struct.Struct("<8sII3Q2q")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_potential_csv(potential: Potential1D, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,V\n")
        for n, v in zip(range(potential.n0, potential.n0 + potential.size), potential.values):
            fh.write(f"{n},{_fmt(v)}\n")


def read_potential_csv(path) -> Potential1D:
    ns = []
    vs = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "n,V":
            raise ValueError(f"unexpected potential header {header!r}")
        for line in fh:
            n_str, v_str = line.strip().split(",")
            ns.append(int(n_str))
            vs.append(float(v_str))
    if not ns:
        raise ValueError("empty potential file")
    if ns != list(range(ns[0], ns[0] + len(ns))):
        raise ValueError("potential sites must be contiguous")
    return Potential1D(np.array(vs), n0=ns[0])


def write_eigenvalues_csv(eigenvalues: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,energy\n")
        for k, lam in enumerate(np.asarray(eigenvalues, dtype=float)):
            fh.write(f"{k},{_fmt(lam)}\n")


def write_measure_csv(measure: SpectralMeasure, path) -> None:
    """Rows: kind (atom|bin), energy (atom energy or bin left edge), weight re/im.

    Bin rows carry the integrated bin mass (density value times width).
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,energy,weight_re,weight_im\n")
        for e, w in zip(measure.energies, measure.weights):
            fh.write(f"atom,{_fmt(e)},{_fmt(w.real)},{_fmt(w.imag)}\n")
        if measure.density is not None:
            width = measure.bin_width
            for left, value in zip(measure.grid_edges[:-1], measure.density):
                mass = value * width
                fh.write(f"bin,{_fmt(left)},{_fmt(mass.real)},{_fmt(mass.imag)}\n")


def read_measure_csv(path) -> SpectralMeasure:
    atoms_e, atoms_w, bins_e, bins_m = [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "kind,energy,weight_re,weight_im":
            raise ValueError(f"unexpected measure header {header!r}")
        for line in fh:
            kind, e_str, re_str, im_str = line.strip().split(",")
            if kind == "atom":
                atoms_e.append(float(e_str))
                atoms_w.append(complex(float(re_str), float(im_str)))
            elif kind == "bin":
                bins_e.append(float(e_str))
                bins_m.append(complex(float(re_str), float(im_str)))
            else:
                raise ValueError(f"unknown row kind {kind!r}")
    edges = density = None
    if bins_e:
        if len(bins_e) < 2:
            raise ValueError("cannot infer the grid from a single bin")
        width = bins_e[1] - bins_e[0]
        edges = np.array(bins_e + [bins_e[-1] + width])
        density = np.array(bins_m) / width
    return SpectralMeasure(np.array(atoms_e), np.array(atoms_w), grid_edges=edges, density=density)


def write_trajectory_csv(times, states: list[LatticeState2D], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,n,m,re,im\n")
        for t, state in zip(times, states):
            amp = state.amplitudes
            for i, n in enumerate(state.n_coords()):
                for j, m in enumerate(state.m_coords()):
                    a = amp[i, j]
                    fh.write(f"{_fmt(t)},{n},{m},{_fmt(a.real)},{_fmt(a.imag)}\n")


def write_trajectory_binary(times, states: list[LatticeState2D], path) -> None:
    times = np.asarray(times, dtype=float)
    if len(states) != times.size or not states:
        raise ValueError("need one state per time")
    N, M = states[0].shape
    n0, m0 = states[0].n0, states[0].m0
    if any(s.shape != (N, M) or (s.n0, s.m0) != (n0, m0) for s in states):
        raise ValueError("all snapshots must share one window")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, 1, 1, times.size, N, M, n0, m0))
        fh.write(times.astype("<f8").tobytes())
        for state in states:
            fh.write(state.amplitudes.astype("<c16").tobytes())


def read_trajectory_binary(path) -> tuple[np.ndarray, list[LatticeState2D]]:
    with open(path, "rb") as fh:
        magic, version, dtype_tag, T, N, M, n0, m0 = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != 1 or dtype_tag != 1:
            raise ValueError(f"unsupported version/dtype ({version}, {dtype_tag})")
        times = np.frombuffer(fh.read(8 * T), dtype="<f8")
        states = []
        for _ in range(T):
            raw = np.frombuffer(fh.read(16 * N * M), dtype="<c16")
            states.append(LatticeState2D(raw.reshape(N, M), n0=n0, m0=m0))
    return times, states


def write_trace_csv(trace: DecayTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,sup_norm,l2n_supm,supm_l2n,l2_norm,energy\n")
        for row in zip(trace.times, trace.sup_norms, trace.l2n_supm, trace.supm_l2n, trace.l2_norms, trace.energies):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_fit_json(fit: DecayFit, path) -> None:
    payload = {
        "exponent": fit.exponent,
        "prefactor": fit.prefactor,
        "residual": fit.residual,
        "window": [fit.t_lo, fit.t_hi],
        "n_samples": fit.n_samples,
    }
    write_json(payload, path)


def write_lyapunov_csv(energies, gammas, L: int, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("energy,gamma,L\n")
        for e, g in zip(energies, gammas):
            fh.write(f"{_fmt(e)},{_fmt(g)},{L}\n")


def write_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True))
        fh.write("\n")
