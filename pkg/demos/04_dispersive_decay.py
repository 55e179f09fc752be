"""Dispersive decay: the sup norm falls off like <t>^{-1/3}.

A delta state spreads ballistically along the free m-direction, and its
pointwise amplitude decays with the one-third power characteristic of the
cosine band's vanishing curvature at the band edges.  The same law survives
when a potential acts along n, because each n-fiber still rides the free
m-propagator.
"""
import numpy as np

from chainlab import (
    LatticeState2D,
    almost_mathieu,
    build_operator_1d,
    conservation_defects,
    delta_state,
    fit_decay_exponent,
    make_plan,
    minimal_wrap_free_m,
    record_decay,
    sample_potential,
)

T_MAX = 80.0
FIT = (10.0, 80.0)
TIMES = np.geomspace(2.0, T_MAX, 22)


def wrap_free_grid(t_max):
    need = minimal_wrap_free_m(t_max, 1)
    return 1 << (need - 1).bit_length()


M = wrap_free_grid(T_MAX)
print(f"m-grid: M = {M} (wrap-free out to t = {T_MAX} at light-cone speed 2)")

print("\n== free chain (single fiber) ==")
amp = np.zeros((1, M), dtype=complex)
amp[0, M // 2] = 1.0
psi0 = LatticeState2D(amp, n0=0, m0=-M // 2)
plan = make_plan(None, "dft_multiplier", M)
trace = record_decay(plan, psi0, TIMES)
fit = fit_decay_exponent(trace, *FIT)
print(f"  fitted sup-norm exponent: {fit.exponent:+.4f}  (one-third law: -0.3333)")
print(f"  log-log fit rms residual: {fit.residual:.3e}")

print("\n== localized chain in n, free in m ==")
N = 96
psi0 = delta_state(N, M)
spec = almost_mathieu(3.0, theta=0.42)
a1 = build_operator_1d(sample_potential(spec, (psi0.n0, psi0.n0 + N)))
plan = make_plan(a1, "dft_multiplier", M)
trace = record_decay(plan, psi0, TIMES)
fit = fit_decay_exponent(trace, *FIT)
print(f"  fitted sup-norm exponent: {fit.exponent:+.4f}")

bracket = np.sqrt(1.0 + trace.times**2)
ratio = trace.sup_norms * bracket ** (1.0 / 4.0) / trace.psi0_l1
print(f"  envelope constant sup_t |psi|_inf <t>^(1/4) / |psi_0|_1 = {ratio.max():.4f}")

l2_drift, energy_drift = conservation_defects(trace)
print(f"  l2 drift over the run: {l2_drift:.2e}   energy drift: {energy_drift:.2e}")

print("\n== trace excerpt (localized chain) ==")
print("      t      sup|psi|   sup * <t>^(1/3)")
for k in range(0, TIMES.size, 3):
    t, s = trace.times[k], trace.sup_norms[k]
    print(f"  {t:7.2f}   {s:.5f}    {s * (1 + t * t) ** (1 / 6):.5f}")
print("  (the rescaled column stays bounded while sup|psi| falls: the decay matches <t>^{-1/3})")
