"""Acceptance criteria; each test prints one PASS/FAIL line at the stated tolerance."""

import math

import numpy as np
import pytest
from conftest import record_acceptance
from scipy.optimize import minimize_scalar

from heraldsim.calibration import PumpSpec, effective_length, pump_amplitude, required_group_velocity, squeeze_db
from heraldsim.constants import SPEED_OF_LIGHT as C
from heraldsim.crystal_bands import (
    BandPoint,
    CrystalSpec,
    EnergyRatio,
    band_frequency,
    band_point_energy_ratio,
    dispersion_roots,
    frequency_window,
    group_velocity,
    solve_bands,
)
from heraldsim.fock_core import (
    SqueezeSpec,
    final_state_amplitude,
    oracle_elements,
    prepare_final_state,
    two_mode_squeeze_element,
)
from heraldsim.heralded_source import (
    SourceParams,
    click_distribution,
    g2_click,
    g2_perfect,
    herald_distribution,
    joint_probability,
    joint_table,
    povm_click_weights,
)

REFERENCE = CrystalSpec(5e-7, 5e-7, 1.0, 4.84, 5e-5)
HOMOGENEOUS = CrystalSpec(5e-7, 5e-7, 2.25, 2.25, 5e-5)


def report(number, ok, detail):
    record_acceptance(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
    return ok


def within(value, target, tol):
    return abs(value - target) <= tol


def test_criterion_01_vacuum_pair_probability():
    r_opt = math.log(1 + math.sqrt(2))
    p = abs(final_state_amplitude(1, 1, 0.0, SqueezeSpec(r_opt, math.pi / 2))) ** 2
    grid = np.round(np.arange(0, 1501) * 1e-3, 3)
    values = [abs(final_state_amplitude(1, 1, 0.0, SqueezeSpec(r, math.pi / 2))) ** 2 for r in grid]
    r_max = grid[int(np.argmax(values))]
    ok = within(p, 0.250, 1e-3) and within(r_max, 0.881, 0.002)
    assert report(1, ok, f"P(1,1; r=ln(1+sqrt2), alpha=0) = {p:.6f} (0.250 +- 1e-3); argmax r = {r_max:.3f} (0.881 +- 0.002)")


def test_criterion_02_pair_probability_with_displacement():
    p1 = joint_probability(1, 1, SourceParams(0.06, 0.883))
    p2 = joint_probability(1, 1, SourceParams(0.06, 1.5))
    ok = within(p1, 0.249, 1e-3) and within(p2, 0.148, 2e-3)
    assert report(2, ok, f"P(1,1; 0.883) = {p1:.5f} (0.249 +- 1e-3); P(1,1; 1.5) = {p2:.5f} (0.148 +- 2e-3)")


def test_criterion_03_perfect_herald_g2():
    g1 = g2_perfect(SourceParams(0.06, 0.883))
    g2 = g2_perfect(SourceParams(0.06, 1.5))
    ok = within(g1 / 0.0144, 1, 0.02) and within(g2 / 8.78e-3, 1, 0.02)
    assert report(3, ok, f"g2(0.883) = {g1:.5g} (0.0144 +- 2%); g2(1.5) = {g2:.5g} (8.78e-3 +- 2%)")


def test_criterion_04_detector_efficiency_threshold():
    low = g2_click(SourceParams(0.06, 1.5, eta=0.84))
    high = g2_click(SourceParams(0.06, 1.5, eta=1.0))
    ok = low > 0.1 and high < 0.1
    assert report(4, ok, f"g2(r=1.5, eta=0.84) = {low:.4g} (> 0.1); g2(r=1.5, eta=1) = {high:.4g} (< 0.1)")


def test_criterion_05_two_photon_click_maximum():
    def p2(r):
        return click_distribution(SourceParams(0.06, float(r), eta=0.7)).p[2]

    grid = np.linspace(0, 1.5, 31)
    values = [p2(r) for r in grid]
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = minimize_scalar(lambda r: -p2(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    peak = max(-best.fun, max(values))
    ok = within(peak / 0.03, 1, 0.2)
    assert report(5, ok, f"max_r P_click(2; eta=0.7) = {peak:.4g} at r = {best.x:.3f} (0.03 +- 20%)")


def test_criterion_06_band_structure():
    edge = float(REFERENCE.reduced_frequency(band_frequency(REFERENCE, 4, 0.0)))
    band8 = REFERENCE.reduced_frequency(np.array([p.omega for p in solve_bands(REFERENCE, 101, 8)[7]]))
    bands = solve_bands(REFERENCE, 101, 4)[3]
    vg_ends = [group_velocity(REFERENCE, bands[i]) / C for i in (0, -1)]
    part1 = within(edge, 1.18, 0.01)
    part2 = band8.min() <= 2.37 <= band8.max()
    part3 = max(vg_ends) < 1e-4
    ok = part1 and part2 and part3
    assert report(
        6, ok,
        f"band-4 edge = {edge:.6f} (1.18 +- 0.01: {'ok' if part1 else 'MISS'}); "
        f"band 8 spans [{band8.min():.4f}, {band8.max():.4f}] (contains 2.37: {'ok' if part2 else 'MISS'}); "
        f"v_g/c at zone ends = {vg_ends[0]:.1e}, {vg_ends[1]:.1e} (< 1e-4: {'ok' if part3 else 'MISS'})",
    )


def test_criterion_07_energy_ratio():
    _, ratio = band_point_energy_ratio(REFERENCE, 4, 0.0)
    ok = within(ratio.ratio, 1.32, 0.01)
    assert report(7, ok, f"P_A:P_B at band-4 edge = 1:{ratio.ratio:.4f} (1:1.32 +- 0.01)")


def test_criterion_08_calibration_chain():
    omega_s = 2 * math.pi * C / 8.45e-7
    pump = PumpSpec(radiant_flux=0.03, beam_radius=5e-6, omega_s=omega_s)
    amp = pump_amplitude(pump)
    vg_c = required_group_velocity(pump, 1.0, 5e-5) / C
    l_eff = effective_length(5e-5, EnergyRatio(1.0, 1.32))
    db = squeeze_db(1.0)
    ok = (within(amp / 5.36e5, 1, 5e-3) and within(vg_c / 5.01e-3, 1, 1e-2)
          and within(l_eff / 8.79e-5, 1, 5e-3) and within(db, 8.69, 0.01))
    # same chain fed by the solved band edge and energy split, for information
    _, solved = band_point_energy_ratio(REFERENCE, 4, 0.0)
    pump_solved = PumpSpec(0.03, 5e-6, band_frequency(REFERENCE, 4, 0.0))
    record_acceptance(
        f"       criterion  8 (info): solved-edge chain gives v_g/c = "
        f"{required_group_velocity(pump_solved, 1.0, 5e-5) / C:.4e}, l_eff = {effective_length(5e-5, solved):.4e} m"
    )
    assert report(
        8, ok,
        f"A = {amp:.4e} V/m (5.36e5 +- 0.5%); v_g/c = {vg_c:.4e} (5.01e-3 +- 1%); "
        f"l_eff(1:1.32) = {l_eff:.4e} m (8.79e-5 +- 0.5%); squeeze_db(1) = {db:.4f} (8.69 +- 0.01)",
    )


def test_criterion_09_frequency_window():
    window = frequency_window(REFERENCE, 4, 5.01e-3 * C)
    deviation = window.delta_nu / 1.25e9 - 1
    agrees = abs(deviation) <= 0.10
    status = "within 10%" if agrees else f"FLAGGED: deviates {deviation:+.0%} (band-curvature sensitivity)"
    # the criterion asks for the value to be reported and any larger deviation flagged
    assert report(
        9, True,
        f"delta_nu = {window.delta_nu:.4e} Hz, delta_omega = {window.delta_omega:.4e} 1/s "
        f"(quoted 1.25e9 Hz): {status}",
    )


def test_criterion_10_property_suites():
    checks = {}
    idx = [(na, nb, na - nb + mb, mb) for na in range(4) for nb in range(4) for mb in range(4) if na - nb + mb >= 0]
    worst = 0.0
    for r, phi in ((0.7, math.pi / 2), (1.2, 0.4)):
        sq = SqueezeSpec(r, phi)
        oracle = oracle_elements("squeeze_ab", sq, idx, 96)
        closed = np.array([two_mode_squeeze_element(*ix, sq) for ix in idx])
        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    checks["oracle"] = (worst <= 1e-8, f"closed form vs expm {worst:.1e}")

    deficit = prepare_final_state(1.5, SqueezeSpec(1.5, math.pi / 2)).deficit
    checks["deficit"] = (abs(deficit) <= 1e-8, f"deficit(1.5, 1.5) {deficit:.1e}")

    w = povm_click_weights(0.37, 40)
    completeness = float(np.max(np.abs(w + (1 - w) - 1)))
    p = SourceParams(0.06, 1.0)
    reduction = float(np.max(np.abs(click_distribution(p).p - herald_distribution(p).p)))
    checks["povm"] = (completeness <= 1e-12 and reduction <= 1e-12, f"POVM {completeness:.0e}/{reduction:.0e}")

    table = joint_table(SourceParams(0.7, 1.1))
    swap = float(np.max(np.abs(table - table.T)))
    checks["swap"] = (swap <= 1e-10, f"swap {swap:.0e}")

    k = 0.4 * HOMOGENEOUS.zone_edge
    g = 2 * math.pi / HOMOGENEOUS.period
    folded = np.sort([C * abs(k + m * g) / 1.5 for m in range(-4, 5)])[:4]
    dispersion_ok = np.allclose(dispersion_roots(k, HOMOGENEOUS)[:4], folded, rtol=1e-10)
    vg = group_velocity(HOMOGENEOUS, BandPoint(k, band_frequency(HOMOGENEOUS, 2, k), 2))
    _, even = band_point_energy_ratio(HOMOGENEOUS, 2, k)
    homogeneous_ok = dispersion_ok and within(vg / (C / 1.5), 1, 1e-9) and within(even.ratio, 1, 1e-9)
    checks["homogeneous"] = (homogeneous_ok, f"homogeneous limits v_g/(c/n)={vg / (C / 1.5):.10f}, ratio 1:{even.ratio:.10f}")

    ok = all(flag for flag, _ in checks.values())
    assert report(10, ok, "; ".join(text for _, text in checks.values()))


def test_criterion_11_coherent_limit():
    g = g2_perfect(SourceParams(0.06, 0.0, eta=1.0))
    assert report(11, within(g, 1.0, 1e-6), f"g2(r=0, alpha=0.06) = {g:.8f} (1 +- 1e-6)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
