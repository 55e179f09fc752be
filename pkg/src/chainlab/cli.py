"""Batch experiment harness.

One subcommand per process; artifacts are CSV series plus JSON summaries in
the output directory.  Heavy numerical imports happen after --threads is
applied so BLAS/OpenMP pools honor the requested width.

Exit codes: 0 success, 1 validation error, 2 numerical check failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

_COMMANDS = ("spectrum", "convolve", "evolve", "decay-fit", "lyapunov", "verify")

DEFAULT_SIZE = 16
DEFAULT_EVOLVE_TMAX = 10.0
DECAY_N_DEFAULT = 128
DECAY_SAMPLES = 25


class _Parser(argparse.ArgumentParser):
    """Argument errors are validation failures: exit 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chainlab",
        description="Numerical laboratory for 2D lattice Schrodinger operators "
        "with a potential constant along one direction.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "spectrum": "eigenvalues and the local spectral measure of the 1D chain",
        "convolve": "2D spectral measure via convolution, checked against the dense route",
        "evolve": "factorized time evolution with trajectory snapshots",
        "decay-fit": "sup-norm decay trace and power-law fit",
        "lyapunov": "transfer-matrix growth-rate scan over on-spectrum energies",
        "verify": "run the invariant suite and report per-check residuals",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH", help="experiment config file")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, metavar="U64", help="seed for random potentials")
        p.add_argument("--threads", type=int, metavar="K", help="BLAS/OpenMP thread count")
        p.add_argument("--N", type=int, help="sites along the potential direction")
        p.add_argument("--M", type=int, help="sites along the free direction")
        p.add_argument("--tmax", type=float, help="largest evolution time")
        p.add_argument("--family", choices=("constant", "quasiperiodic", "almost_mathieu", "random_iid"))
        p.add_argument("--amplitude", type=float, help="potential coupling strength")
        p.add_argument("--omega", type=float, help="quasiperiodic frequency")
        p.add_argument("--theta", type=float, help="quasiperiodic phase")
        if name == "lyapunov":
            p.add_argument("--length", type=int, default=10**6, help="transfer-matrix product length")
            p.add_argument("--count", type=int, default=8, help="number of sampled energies")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 1
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    from .config import ConfigError
    from .verify import CheckFailure

    try:
        return _run(args)
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def _run(args) -> int:
    from .config import ExperimentConfig, parse_config_file

    cfg = parse_config_file(args.config) if args.config else ExperimentConfig()
    cfg = _apply_overrides(cfg, args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    handler = {
        "spectrum": _cmd_spectrum,
        "convolve": _cmd_convolve,
        "evolve": _cmd_evolve,
        "decay-fit": _cmd_decay_fit,
        "lyapunov": _cmd_lyapunov,
        "verify": _cmd_verify,
    }[args.command]
    return handler(cfg, args)


def _apply_overrides(cfg, args):
    from .operators import PotentialSpec

    pot = cfg.potential
    wants = {
        k: getattr(args, k)
        for k in ("family", "amplitude", "omega", "theta")
        if getattr(args, k) is not None
    }
    if wants:
        family = wants.get("family", pot.family)
        same_family = family == pot.family
        seed = args.seed if args.seed is not None else pot.seed
        if family == "random_iid" and seed is None:
            seed = cfg.seed
        pot = PotentialSpec(
            family=family,
            amplitude=wants.get("amplitude", pot.amplitude),
            omega=wants.get("omega", pot.omega),
            theta=wants.get("theta", pot.theta),
            profile=pot.profile if same_family else None,
            seed=seed,
            values=pot.values if same_family else None,
        )
    elif args.seed is not None:
        pot = dataclasses.replace(pot, seed=args.seed)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if pot is not cfg.potential:
        updates["potential"] = pot
    if args.N is not None:
        updates["N"] = args.N
    if args.M is not None:
        updates["M"] = args.M
    if args.out is not None:
        updates["output_dir"] = args.out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _chain_window(cfg, N: int) -> int:
    return cfg.n0 if cfg.n0 is not None else -(N // 2)


def _chain_operator(cfg, N: int):
    from .operators import build_operator_1d, sample_potential

    n0 = _chain_window(cfg, N)
    pot = sample_potential(cfg.potential, (n0, n0 + N))
    return pot, build_operator_1d(pot, boundary=cfg.boundary_n)


def _origin_index(n0: int, size: int) -> int:
    # the physical origin when the window holds it, the middle site otherwise
    return -n0 if 0 <= -n0 < size else size // 2


def _out(cfg, name: str) -> str:
    return os.path.join(cfg.output_dir, name)


def _cmd_spectrum(cfg, args) -> int:
    import numpy as np

    from . import datafiles
    from .spectral import eigh_tridiagonal, max_atom_weight, spectral_measure_1d

    N = cfg.N or DEFAULT_SIZE
    pot, a1 = _chain_operator(cfg, N)
    es = eigh_tridiagonal(a1)
    chi = np.zeros(N, dtype=complex)
    chi[_origin_index(pot.n0, N)] = 1.0
    mu = spectral_measure_1d(es, chi, merge_tol=cfg.tolerances.atom_merge)
    datafiles.write_potential_csv(pot, _out(cfg, "potential.csv"))
    datafiles.write_eigenvalues_csv(es.eigenvalues, _out(cfg, "eigenvalues.csv"))
    datafiles.write_measure_csv(mu, _out(cfg, "measure_delta.csv"))
    datafiles.write_json(
        {
            "family": cfg.potential.family,
            "N": N,
            "boundary": cfg.boundary_n,
            "energy_min": float(es.eigenvalues[0]),
            "energy_max": float(es.eigenvalues[-1]),
            "atom_count": mu.atom_count,
            "total_mass": float(mu.total_mass().real),
            "max_atom_weight": max_atom_weight(mu),
        },
        _out(cfg, "summary.json"),
    )
    print(f"spectrum: {N} eigenvalues in [{es.eigenvalues[0]:.6f}, {es.eigenvalues[-1]:.6f}]")
    return 0


def _cmd_convolve(cfg, args) -> int:
    import numpy as np

    from . import datafiles
    from .evolution import DENSE_SITE_CAP
    from .operators import build_operator_1d, hamiltonian_2d_dense
    from .spectral import (
        atom_weight_discrepancy,
        convolve_measures,
        dense_eigensystem,
        eigh_tridiagonal,
        spectral_measure_1d,
    )
    from .verify import CheckFailure

    N, M = cfg.N or DEFAULT_SIZE, cfg.M or DEFAULT_SIZE
    pot, a1 = _chain_operator(cfg, N)
    a2 = build_operator_1d(size=M, boundary=cfg.boundary_m)
    es1, es2 = eigh_tridiagonal(a1), eigh_tridiagonal(a2)
    chi = np.zeros(N, dtype=complex)
    chi[_origin_index(pot.n0, N)] = 1.0
    phi = np.zeros(M, dtype=complex)
    phi[M // 2] = 1.0
    merge = cfg.tolerances.atom_merge
    mu1 = spectral_measure_1d(es1, chi, merge_tol=merge)
    mu2 = spectral_measure_1d(es2, phi, merge_tol=merge)
    conv = convolve_measures(mu1, mu2, merge_tol=merge)
    datafiles.write_measure_csv(mu1, _out(cfg, "measure_n.csv"))
    datafiles.write_measure_csv(mu2, _out(cfg, "measure_m.csv"))
    datafiles.write_measure_csv(conv, _out(cfg, "convolution.csv"))
    report = {
        "N": N,
        "M": M,
        "atoms": conv.atom_count,
        "mass_defect": float(abs(conv.total_mass() - mu1.total_mass() * mu2.total_mass())),
        "compared_to_direct": False,
    }
    discrepancy = None
    if N * M <= DENSE_SITE_CAP:
        es2d = dense_eigensystem(hamiltonian_2d_dense(a1, a2))
        direct = spectral_measure_1d(es2d, np.outer(chi, phi).ravel(), merge_tol=merge)
        datafiles.write_measure_csv(direct, _out(cfg, "direct_2d.csv"))
        discrepancy = atom_weight_discrepancy(conv, direct)
        report["compared_to_direct"] = True
        report["max_atom_weight_discrepancy"] = discrepancy
        report["tolerance"] = cfg.tolerances.measure_match
    datafiles.write_json(report, _out(cfg, "report.json"))
    if discrepancy is None:
        print(f"convolve: {conv.atom_count} atoms, lattice too large for the direct 2D route")
        return 0
    print(f"convolve: max atom-weight discrepancy vs direct route {discrepancy:.3e}")
    if discrepancy > cfg.tolerances.measure_match:
        raise CheckFailure(
            f"convolution vs direct 2D measure: discrepancy {discrepancy:.3e} "
            f"exceeds {cfg.tolerances.measure_match:.1e}"
        )
    return 0


def _evolve_times(cfg, args):
    import numpy as np

    if args.tmax is not None:
        if args.tmax <= 0:
            raise ValueError("--tmax must be positive")
        return np.linspace(0.0, args.tmax, 11)
    if cfg.times is not None:
        return np.asarray(cfg.times, dtype=float)
    return np.linspace(0.0, DEFAULT_EVOLVE_TMAX, 11)


def _cmd_evolve(cfg, args) -> int:
    import numpy as np

    from . import datafiles
    from .evolution import evolve_2d_factorized, make_plan
    from .operators import build_operator_1d, delta_state, energy_expectation, l2_norm, sample_potential
    from .verify import CheckFailure

    N, M = cfg.N or DEFAULT_SIZE, cfg.M or DEFAULT_SIZE
    psi0 = delta_state(N, M, cfg.n0, cfg.m0)
    pot = sample_potential(cfg.potential, (psi0.n0, psi0.n0 + N))
    a1 = build_operator_1d(pot, boundary=cfg.boundary_n)
    plan = make_plan(a1, cfg.m_method, M)
    a2 = plan.a2_operator()
    times = _evolve_times(cfg, args)

    states = [evolve_2d_factorized(psi0, plan, t) for t in times]
    l2s = np.array([l2_norm(s) for s in states])
    energies = np.array([energy_expectation(s, a1, a2) for s in states])
    l2_drift = float(np.abs(l2s - l2s[0]).max() / l2s[0])
    energy_drift = float(np.abs(energies - energies[0]).max() / max(1.0, abs(energies[0])))

    keep = slice(None, None, cfg.snapshot_every)
    if cfg.binary_snapshots:
        datafiles.write_trajectory_binary(times[keep], states[keep], _out(cfg, "trajectory.bin"))
    else:
        datafiles.write_trajectory_csv(times[keep], states[keep], _out(cfg, "trajectory.csv"))
    tol = cfg.tolerances.conservation
    passed = l2_drift <= tol and energy_drift <= tol
    datafiles.write_json(
        {
            "l2_drift": l2_drift,
            "energy_drift": energy_drift,
            "tolerance": tol,
            "passed": passed,
            "t_max": float(times[-1]),
            "snapshots": len(states[keep]),
        },
        _out(cfg, "conservation.json"),
    )
    print(f"evolve: {len(times)} steps to t={times[-1]:g}, l2 drift {l2_drift:.3e}, energy drift {energy_drift:.3e}")
    if not passed:
        raise CheckFailure(
            f"conservation: l2 drift {l2_drift:.3e}, energy drift {energy_drift:.3e} exceed {tol:.1e}"
        )
    return 0


def _cmd_decay_fit(cfg, args) -> int:
    import numpy as np

    from . import datafiles
    from .diagnostics import fit_decay_exponent, minimal_wrap_free_m, record_decay
    from .evolution import make_plan
    from .operators import LatticeState2D, build_operator_1d, delta_state, sample_potential

    fit_lo, fit_hi = cfg.fit_window
    t_hi = args.tmax if args.tmax is not None else fit_hi
    if args.tmax is None and cfg.times is not None:
        times = np.asarray(cfg.times, dtype=float)
    else:
        if t_hi <= fit_lo:
            raise ValueError(f"--tmax must exceed the fit window start {fit_lo:g}")
        if fit_lo <= 0:
            raise ValueError("geometric time grid needs a positive fit window start")
        times = np.geomspace(fit_lo, t_hi, DECAY_SAMPLES)
    t_max = float(times[-1])

    if cfg.M is not None:
        M = cfg.M
    else:
        need = minimal_wrap_free_m(t_max, support_width=1, tail_tol=cfg.tolerances.tail_mass)
        M = 1 << (need - 1).bit_length()

    free_chain = cfg.potential.family == "constant" and cfg.potential.amplitude == 0.0 and cfg.N is None
    if free_chain:
        amp = np.zeros((1, M), dtype=complex)
        amp[0, M // 2] = 1.0
        psi0 = LatticeState2D(amp, n0=0, m0=-(M // 2))
        plan = make_plan(None, cfg.m_method, M, tail_tol=cfg.tolerances.tail_mass)
    else:
        N = cfg.N or DECAY_N_DEFAULT
        psi0 = delta_state(N, M, cfg.n0, cfg.m0)
        pot = sample_potential(cfg.potential, (psi0.n0, psi0.n0 + N))
        a1 = build_operator_1d(pot, boundary=cfg.boundary_n)
        plan = make_plan(a1, cfg.m_method, M, tail_tol=cfg.tolerances.tail_mass)

    trace = record_decay(plan, psi0, times)
    fit = fit_decay_exponent(trace, fit_lo, min(fit_hi, t_max))
    datafiles.write_trace_csv(trace, _out(cfg, "trace.csv"))
    datafiles.write_fit_json(fit, _out(cfg, "fit.json"))
    mode = "free chain" if free_chain else f"{plan.n_size} x {M} lattice"
    print(f"decay-fit: {mode}, exponent {fit.exponent:+.4f} over [{fit.t_lo:g}, {fit.t_hi:g}]")
    return 0


def _cmd_lyapunov(cfg, args) -> int:
    import numpy as np

    from . import datafiles
    from .diagnostics import lyapunov_scan, truncation_energies

    if args.length < 1000:
        raise ValueError("--length must be at least 1000")
    if args.count < 1:
        raise ValueError("--count must be positive")
    energies = truncation_energies(cfg.potential, count=args.count)
    gammas = lyapunov_scan(cfg.potential, energies, L=args.length)
    datafiles.write_lyapunov_csv(energies, gammas, args.length, _out(cfg, "lyapunov.csv"))
    datafiles.write_json(
        {
            "family": cfg.potential.family,
            "amplitude": cfg.potential.amplitude,
            "length": args.length,
            "count": args.count,
            "gamma_min": float(np.min(gammas)),
            "gamma_max": float(np.max(gammas)),
            "gamma_mean": float(np.mean(gammas)),
        },
        _out(cfg, "summary.json"),
    )
    print(f"lyapunov: {args.count} energies, gamma in [{np.min(gammas):.6f}, {np.max(gammas):.6f}]")
    return 0


def _cmd_verify(cfg, args) -> int:
    from . import datafiles
    from .verify import CheckFailure, run_verification, verification_report

    results = run_verification(cfg)
    datafiles.write_json(verification_report(results), _out(cfg, "verify.json"))
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.name:32s} residual {r.residual:.3e}  tol {r.tolerance:.1e}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise CheckFailure("invariants failed: " + ", ".join(failed))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
