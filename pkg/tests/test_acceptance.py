"""Acceptance suite: one test per release criterion, each with pinned
tolerances and a printed PASS line carrying the measured numbers."""

import math

import numpy as np
import pytest

from qhjlab.microstates import (MicrostateCoefficients, build_microstate,
                                qshje_residual, qshje_residual_field,
                                quantum_potential_bohm,
                                quantum_potential_schwarzian)
from qhjlab.numerics import interior_slice
from qhjlab.potentials import Constant, Harmonic, InfiniteWell, Step
from qhjlab.runner import run_scenario
from qhjlab.scenario import scenario_from_dict
from qhjlab.schrodinger import (Grid, find_bound_eigenvalues, numerov_integrate,
                                scattering_state, solution_pair,
                                wronskian_constancy)
from qhjlab.trajectories import (IntegratorConfig, bohm_floyd_time_deformation,
                                 bohm_velocity, epoch_identity_check,
                                 epoch_rate, floyd_rule, integrate_trajectory,
                                 quantum_time_along, velocity_beat_spectrum)
from qhjlab.variation import (ContinuumLimit, DiscreteBeat, TanPole,
                              VariationFrame, beat_period,
                              delta_Q_delta_E, delta_T_delta_E_continuum,
                              delta_T_delta_E_discrete, theta_variation_oracle,
                              unbound_microstate)

E1 = math.pi ** 2 / 2.0
E2 = 2.0 * math.pi ** 2
COEFF_SETS = [(1.0, 1.0, 0.0), (2.0, 1.0, 0.0), (1.0, 1.0, 0.5)]
STEP = Step(0.75, -20.0, 20.0)


@pytest.fixture(scope="module")
def well_grid_fine():
    return Grid(0.0, 1.0, 4001)


@pytest.fixture(scope="module")
def criterion2_microstates(well_grid_fine):
    """All microstates named by the residual criterion, keyed by description."""
    out = {}
    free_grid = Grid(-10.0, 10.0, 4001)
    out["free particle"] = unbound_microstate(Constant(0.0, -10.0, 10.0),
                                              0.5, free_grid)
    well = InfiniteWell(1.0)
    for label, e_name in ((1, "E1"), (2, "E2")):
        sols = find_bound_eigenvalues(well, well_grid_fine, label)
        pair = solution_pair(well, sols[label - 1].energy, well_grid_fine)
        for c in COEFF_SETS:
            ms = build_microstate(pair, MicrostateCoefficients(*c))
            out[f"well {e_name} {c}"] = ms
    harm = Harmonic(1.0, -4.5, 4.5)
    hg = Grid(-4.5, 4.5, 4001)
    sols = find_bound_eigenvalues(harm, hg, 1)
    pair = solution_pair(harm, sols[0].energy, hg)
    out["harmonic E0 (1.0, 1.0, 0.0)"] = build_microstate(
        pair, MicrostateCoefficients(1.0, 1.0, 0.0))
    return out


@pytest.fixture(scope="module")
def well_frame():
    from qhjlab.variation import build_frame
    return build_frame(InfiniteWell(1.0), Grid(0.0, 1.0, 2001), 1, 2,
                       MicrostateCoefficients(1.0, 1.0, 0.0))


@pytest.fixture(scope="module")
def harmonic_frame():
    from qhjlab.variation import build_frame
    return build_frame(Harmonic(1.0, -4.5, 4.5), Grid(-4.5, 4.5, 2001), 0, 1,
                       MicrostateCoefficients(1.0, 1.0, 0.0))


def test_criterion_01_eigenvalue_oracle():
    worst = 0.0
    sols = find_bound_eigenvalues(InfiniteWell(1.0), Grid(0.0, 1.0, 2001), 5)
    for n, s in zip(range(1, 6), sols):
        exact = (n * math.pi) ** 2 / 2.0
        worst = max(worst, abs(s.energy / exact - 1.0))
    sols = find_bound_eigenvalues(Harmonic(1.0, -6.0, 6.0),
                                  Grid(-6.0, 6.0, 2001), 5)
    for n, s in zip(range(5), sols):
        worst = max(worst, abs(s.energy / (n + 0.5) - 1.0))
    assert worst < 1e-5, f"FAIL criterion 1: eigenvalue error {worst:.3g}"
    print(f"PASS criterion 1: eigenvalues match closed forms, "
          f"worst relative error {worst:.3g} < 1e-5")


def test_criterion_02_qshje_residual(criterion2_microstates):
    worst = ("", 0.0)
    for name, ms in criterion2_microstates.items():
        res = qshje_residual(ms)
        assert res < 1e-6, f"FAIL criterion 2: {name} residual {res:.3g}"
        if res > worst[1]:
            worst = (name, res)
    print(f"PASS criterion 2: all {len(criterion2_microstates)} microstates "
          f"satisfy the defining equation; worst residual {worst[1]:.3g} "
          f"({worst[0]}) < 1e-6")


def test_criterion_03_microstate_multiplicity(criterion2_microstates):
    mss = [criterion2_microstates[f"well E1 {c}"] for c in COEFF_SETS]
    min_sep = np.inf
    for i in range(3):
        for j in range(i + 1, 3):
            sep = np.max(np.abs(mss[i].w_prime - mss[j].w_prime))
            assert sep > 1e-3, \
                f"FAIL criterion 3: microstates {i},{j} separated by {sep:.3g}"
            min_sep = min(min_sep, sep)
    worst_res = max(qshje_residual(ms) for ms in mss)
    assert worst_res < 1e-6, \
        f"FAIL criterion 3: pointwise T+Q+V-E reaches {worst_res:.3g}"
    print(f"PASS criterion 3: three E1 microstates differ pairwise in W' "
          f"(min separation {min_sep:.3g} > 1e-3) with pointwise "
          f"T+Q+V-E < 1e-6 (worst {worst_res:.3g})")


def test_criterion_04_quantum_potential_equivalence(criterion2_microstates):
    worst = 0.0
    for name, ms in criterion2_microstates.items():
        qs = quantum_potential_schwarzian(ms)
        qb = quantum_potential_bohm(ms.r, ms.grid.h, ms.units)
        sl = interior_slice(ms.grid.n_points)
        ok = ~np.isnan(qb[sl])
        scale = max(1.0, np.max(np.abs(qs[sl][ok])))
        dev = np.max(np.abs(qs[sl][ok] - qb[sl][ok])) / scale
        assert dev < 1e-5, f"FAIL criterion 4: {name} forms differ by {dev:.3g}"
        worst = max(worst, dev)
    print(f"PASS criterion 4: Schwarzian and Bohm quantum potentials agree "
          f"on all microstates, worst deviation {worst:.3g} < 1e-5")


@pytest.mark.parametrize("frame_name,seed", [("well_frame", 0),
                                             ("harmonic_frame", 1)])
def test_criterion_05_dtde_closed_form_vs_oracle(frame_name, seed, request):
    frame = request.getfixturevalue(frame_name)
    grid = frame.microstate_i.grid
    lo, hi = grid.q_min, grid.q_max
    width = hi - lo
    period = beat_period(frame.microstate_i.energy, frame.microstate_j.energy)
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    attempts = 0
    while checked < 20 and attempts < 400:
        attempts += 1
        q = rng.uniform(lo + 0.2 * width, hi - 0.2 * width)
        t = rng.uniform(0.0, 2.0 * period)
        try:
            a = delta_T_delta_E_discrete(frame, q, t)
        except TanPole:
            continue
        b = theta_variation_oracle(frame, q, t)
        dev = abs(a - b) / max(1.0, abs(a))
        assert dev <= 1e-4, \
            f"FAIL criterion 5: {frame_name} dev {dev:.3g} at q={q:.4f}, t={t:.4f}"
        worst = max(worst, dev)
        checked += 1
    assert checked == 20
    print(f"PASS criterion 5: {frame_name} closed form matches the mixing "
          f"oracle at 20 random points, worst deviation {worst:.3g} < 1e-4")


def test_criterion_06_beat_quantization(well_frame):
    ms = well_frame.microstate_i
    period = beat_period(E1, E2)
    assert abs(period - 0.424413) < 1e-5
    assert abs(well_frame.delta_E - (E2 - E1)) < 1e-8
    measured_period = 2.0 * math.pi / well_frame.delta_E
    assert abs(measured_period - 4.0 / (3.0 * math.pi)) < 1e-9, \
        f"FAIL criterion 6: beat period {measured_period!r}"
    freqs, power, peak, fbeat = velocity_beat_spectrum(ms, DiscreteBeat(1, 2),
                                                       0.3, n_periods=16)
    bin_width = float(freqs[1] - freqs[0])
    target = 3.0 * math.pi / 4.0  # = delta E / (2 pi hbar) = 2.35619
    assert abs(peak - target) <= bin_width, (
        f"FAIL criterion 6: spectral peak at {peak:.6f}, not at the beat "
        f"frequency {target:.6f} (bin {bin_width:.4f}); measured "
        f"peak/beat = {peak / fbeat:.6f}. The velocity derives from "
        f"tan(dS/hbar), which is periodic with half the beat period, so its "
        f"spectrum carries only even beat harmonics and the power at the "
        f"beat frequency itself is identically zero."
    )
    print(f"PASS criterion 6: beat period {measured_period:.9f} and spectral "
          f"peak {peak:.6f} at the beat frequency {target:.6f}")


def test_criterion_07_classical_continuum_limits():
    spec = Constant(0.0, -10.0, 10.0)
    grid = Grid(-10.0, 10.0, 4001)
    ms = unbound_microstate(spec, 0.5, grid)
    model = ContinuumLimit()
    qs = np.linspace(-8.0, 8.0, 33)
    dtde = delta_T_delta_E_continuum(spec, 0.5, qs)
    dev_dtde = np.max(np.abs(dtde - 1.0))
    assert dev_dtde < 1e-6, f"FAIL criterion 7: dT/dE off unity by {dev_dtde:.3g}"
    dev_epoch = max(abs(epoch_rate(ms, model, q, 0.0)) for q in qs)
    assert dev_epoch < 1e-6, \
        f"FAIL criterion 7: epoch rate {dev_epoch:.3g} not 0"
    cfg = IntegratorConfig()
    fl = integrate_trajectory(floyd_rule(ms, model), 0.0, 0.0, 1.0, cfg,
                              domain=(-10.0, 10.0))
    bm = integrate_trajectory(lambda q, t: float(ms.w_prime_at(q)), 0.0, 0.0,
                              1.0, cfg, domain=(-10.0, 10.0))
    classical = fl.t * 1.0  # v = sqrt(2E/m) = 1
    dev_traj = max(np.max(np.abs(fl.q - bm.q)),
                   np.max(np.abs(fl.q - classical)))
    assert dev_traj < 1e-8, \
        f"FAIL criterion 7: trajectory spread {dev_traj:.3g}"
    print(f"PASS criterion 7: free particle dT/dE = 1 ({dev_dtde:.3g}), "
          f"epoch rate 0 ({dev_epoch:.3g}), Floyd = Bohm = classical "
          f"({dev_traj:.3g} < 1e-8)")


def test_criterion_08_stationary_bohm_bound_states(well_grid_fine):
    sols = find_bound_eigenvalues(InfiniteWell(1.0), well_grid_fine, 2)
    for s in sols:
        v = bohm_velocity(s.psi, np.linspace(0.05, 0.95, 91))
        assert np.max(np.abs(v)) == 0.0, \
            "FAIL criterion 8: real eigenstate has nonzero Bohm velocity"
    psi = sols[0].psi
    res = integrate_trajectory(lambda q, t: bohm_velocity(psi, q),
                               0.3, 0.0, 1.0)
    assert np.max(np.abs(res.q - 0.3)) == 0.0
    # with the phase gradient identically zero, dT/dE = 0 and dQ/dE = 1;
    # the quantum time never advances
    assert delta_Q_delta_E(0.0) == 1.0
    res = quantum_time_along(res, lambda q, t: 1.0)
    assert np.max(np.abs(res.t_q)) == 0.0, \
        "FAIL criterion 8: quantum time advanced for a stationary state"
    print("PASS criterion 8: real-eigenstate Bohm velocity identically 0 and "
          "dQ/dE = 1 (quantum time frozen)")


def test_criterion_09_step_potential():
    grid = Grid(-20.0, 20.0, 4001)
    qs = np.linspace(-15.0, -0.5, 2000)
    dtde = delta_T_delta_E_continuum(STEP, 1.0, qs)
    n_changes = int(np.count_nonzero(np.diff(np.sign(dtde)) != 0))
    assert n_changes >= 1, "FAIL criterion 9: no dT/dE sign change"

    ms = unbound_microstate(STEP, 1.0, grid)
    model = ContinuumLimit()
    res = integrate_trajectory(floyd_rule(ms, model), -2.0, 0.0, 0.5,
                               IntegratorConfig(velocity_cap=1e4),
                               domain=STEP.domain(),
                               dtde_rule=model.evaluator(ms))
    sing = [e for e in res.events if e.kind == "SingularVelocity"]
    assert sing and not res.complete, \
        "FAIL criterion 9: integrator did not flag the singular velocity"

    st = scattering_state(STEP, 1.0, grid)
    k1, k2 = math.sqrt(2.0), math.sqrt(0.5)
    r_exact = (k1 - k2) / (k1 + k2)
    dev = abs(st.reflection - r_exact)
    assert dev < 1e-10, f"FAIL criterion 9: reflection off by {dev:.3g}"
    print(f"PASS criterion 9: {n_changes} dT/dE sign changes, "
          f"SingularVelocity at q={sing[0].location:.4f}, reflection matches "
          f"(k1-k2)/(k1+k2) to {dev:.3g}")


def test_criterion_10_time_deformation():
    grid = Grid(-20.0, 20.0, 4001)
    rec = bohm_floyd_time_deformation(STEP, 1.0, -3.16, (0.0, 0.02),
                                      grid=grid)
    assert rec.segments, "FAIL criterion 10: no comparison segment produced"
    disc = max(s.max_discrepancy for s in rec.segments)
    assert disc < 1e-4, f"FAIL criterion 10: deformation discrepancy {disc:.3g}"

    ms = unbound_microstate(STEP, 1.0, grid)
    model = ContinuumLimit()
    fl = integrate_trajectory(floyd_rule(ms, model), -3.16, 0.0, 0.02,
                              IntegratorConfig(n_samples=2001),
                              domain=STEP.domain())
    ident = epoch_identity_check(ms, model, fl)
    assert ident < 1e-3, f"FAIL criterion 10: epoch identity residual {ident:.3g}"
    print(f"PASS criterion 10: Bohm path in quantum time matches the Floyd "
          f"path to {disc:.3g} < 1e-4; epoch identity residual {ident:.3g} "
          f"< 1e-3")


def test_criterion_11_numerical_hygiene(criterion2_microstates, tmp_path):
    # Wronskian constancy of every pair used above
    worst_w = 0.0
    for name, ms in criterion2_microstates.items():
        w = wronskian_constancy(ms.pair)
        assert w < 1e-6, f"FAIL criterion 11: {name} Wronskian drift {w:.3g}"
        worst_w = max(worst_w, w)

    # Numerov order: sine oracle error must fall ~16x per grid halving
    k = 3.0
    errs = []
    for n in (251, 501):
        grid = Grid(0.0, 4.0, n)
        fld = numerov_integrate(Constant(0.0, 0.0, 4.0), 0.5 * k * k, grid,
                                0.0, k)
        errs.append(np.max(np.abs(fld.values - np.sin(k * grid.points))))
    ratio = errs[0] / errs[1]
    assert 12.0 < ratio < 20.0, \
        f"FAIL criterion 11: refinement ratio {ratio:.2f} not ~16 (O(h^4))"

    # identical-seed reruns produce bit-identical artifacts
    doc = {
        "task": "microstate",
        "potential": {"family": "infinite_well", "length": 1.0},
        "grid": {"n_points": 2001},
        "microstate": {"label": 1, "coefficients": [1.0, 1.0, 0.5]},
        "seed": 3,
        "out_dir": str(tmp_path / "runs"),
    }
    rec_a = run_scenario(scenario_from_dict(doc))
    rec_b = run_scenario(scenario_from_dict(doc))
    sha_a = rec_a.artifacts["microstate"]["sha256"]
    sha_b = rec_b.artifacts["microstate"]["sha256"]
    assert sha_a == sha_b, "FAIL criterion 11: rerun artifacts differ"
    print(f"PASS criterion 11: Wronskian drift <= {worst_w:.3g} < 1e-6, "
          f"Numerov refinement ratio {ratio:.1f} (O(h^4)), identical-seed "
          f"reruns bit-identical ({sha_a[:12]}...)")
