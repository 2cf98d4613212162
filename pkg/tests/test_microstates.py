"""Microstates: coefficient validation, calibration, residuals, quantum
potential equivalence."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhjlab.errors import CalibrationFailure, InvalidCoefficients, SingularDerivative
from qhjlab.microstates import (BipolarWave, Microstate, MicrostateCoefficients,
                                build_microstate, microstate_initial_kinematics,
                                qshje_residual, qshje_residual_field,
                                quantum_potential_bohm,
                                quantum_potential_schwarzian, running_wave,
                                schwarzian)
from qhjlab.numerics import interior_slice
from qhjlab.potentials import Constant, Harmonic, InfiniteWell, Step
from qhjlab.schrodinger import Grid, solution_pair
from qhjlab.variation import ClassicalUnity, bound_microstate, unbound_microstate

E1 = math.pi ** 2 / 2.0
E2 = 2.0 * math.pi ** 2

COEFF_SETS = [(1.0, 1.0, 0.0), (2.0, 1.0, 0.0), (1.0, 1.0, 0.5)]


@pytest.fixture(scope="module")
def well_fine():
    return InfiniteWell(1.0), Grid(0.0, 1.0, 4001)


@pytest.fixture(scope="module")
def well_e1_microstates(well_fine):
    well, grid = well_fine
    return [bound_microstate(well, grid, 1, MicrostateCoefficients(*c))
            for c in COEFF_SETS]


@pytest.mark.parametrize("a,b,c", [
    (0.0, 1.0, 0.0), (-1.0, 1.0, 0.0), (1.0, 0.0, 0.0),
    (1.0, 1.0, 2.0), (1.0, 1.0, -2.0), (0.25, 0.25, 1.0),
])
def test_coefficients_must_be_positive_definite(a, b, c):
    with pytest.raises(InvalidCoefficients):
        MicrostateCoefficients(a, b, c)


@given(a=st.floats(0.1, 10.0), b=st.floats(0.1, 10.0),
       c=st.floats(-10.0, 10.0))
@settings(max_examples=100, deadline=None)
def test_coefficient_acceptance_matches_determinant(a, b, c):
    det = 4.0 * a * b - c * c
    if det > 0:
        MicrostateCoefficients(a, b, c)
    else:
        with pytest.raises(InvalidCoefficients):
            MicrostateCoefficients(a, b, c)


def test_schwarzian_of_power_law_momentum():
    # W' = q on [1, 3] gives L = 1/q and {W; q} = -3/(2 q^2)
    grid = Grid(1.0, 3.0, 2001)
    got = schwarzian(grid.points, grid.h)
    want = -1.5 / grid.points ** 2
    sl = interior_slice(grid.n_points)
    assert np.max(np.abs(got[sl] - want[sl])) < 1e-9


def test_schwarzian_invariant_under_momentum_sign_flip():
    grid = Grid(1.0, 3.0, 501)
    wp = 1.0 + 0.3 * np.sin(grid.points)
    assert schwarzian(-wp, grid.h) == pytest.approx(schwarzian(wp, grid.h))


def test_schwarzian_rejects_vanishing_momentum():
    grid = Grid(-1.0, 1.0, 501)
    with pytest.raises(SingularDerivative):
        schwarzian(grid.points ** 2 * 1e-14, grid.h)


def test_free_particle_microstate_is_classical():
    # at E = 1/2 (k = 1) the symmetric coefficients on the plane-wave pair
    # give constant W' = sqrt(2mE) = 1 and zero quantum potential
    spec = Constant(0.0, -10.0, 10.0)
    grid = Grid(-10.0, 10.0, 4001)
    ms = unbound_microstate(spec, 0.5, grid)
    sl = interior_slice(grid.n_points)
    assert np.max(np.abs(ms.w_prime[sl] - 1.0)) < 1e-8
    assert np.max(np.abs(ms.r[sl] - 1.0)) < 1e-8
    assert qshje_residual(ms) < 1e-8


def test_free_particle_microstate_off_symmetric_energy_still_solves():
    # away from k = 1 the fixed symmetric coefficients give an oscillating
    # W' (a genuinely quantum microstate), but the defining equation must
    # still hold
    spec = Constant(0.0, -10.0, 10.0)
    grid = Grid(-10.0, 10.0, 4001)
    ms = unbound_microstate(spec, 2.0, grid)
    assert np.max(ms.w_prime) / np.min(ms.w_prime) > 1.5
    assert qshje_residual(ms) < 1e-5


@pytest.mark.parametrize("label,energy", [(1, E1), (2, E2)])
@pytest.mark.parametrize("coeffs", COEFF_SETS)
def test_well_microstates_satisfy_defining_equation(well_fine, label, energy,
                                                    coeffs):
    well, grid = well_fine
    ms = bound_microstate(well, grid, label, MicrostateCoefficients(*coeffs))
    assert ms.energy == pytest.approx(energy, rel=1e-8)
    assert qshje_residual(ms) < 1e-6


def test_harmonic_ground_microstate_satisfies_defining_equation():
    ms = bound_microstate(Harmonic(1.0, -4.5, 4.5), Grid(-4.5, 4.5, 4001), 0,
                          MicrostateCoefficients(1.0, 1.0, 0.0))
    assert qshje_residual(ms) < 1e-6


def test_distinct_microstates_share_energy_but_not_momentum(
        well_e1_microstates):
    mss = well_e1_microstates
    for ms in mss:
        assert ms.energy == pytest.approx(E1, rel=1e-8)
    for i in range(len(mss)):
        for j in range(i + 1, len(mss)):
            diff = np.max(np.abs(mss[i].w_prime - mss[j].w_prime))
            assert diff > 1e-3


def test_calibration_matches_wronskian_prediction(well_e1_microstates):
    # with the pair normalized to W(phi,theta) = sqrt(2m)/hbar, the
    # least-squares calibration must reproduce lambda^2 = 2/sqrt(4ab - c^2)
    for ms, (a, b, c) in zip(well_e1_microstates, COEFF_SETS):
        want = math.sqrt(2.0 / math.sqrt(4.0 * a * b - c * c))
        assert ms.calibration == pytest.approx(want, rel=1e-6)


def test_amplitude_is_inverse_square_root_of_momentum(well_e1_microstates):
    ms = well_e1_microstates[0]
    sl = interior_slice(ms.grid.n_points)
    prod = ms.r[sl] ** 2 * ms.w_prime[sl]
    assert np.max(prod) / np.min(prod) == pytest.approx(1.0, rel=1e-12)
    assert np.max(ms.r[sl]) == pytest.approx(1.0)


def test_reduced_action_anchored_and_increasing(well_e1_microstates):
    ms = well_e1_microstates[0]
    assert ms.w_at(ms.q_ref) == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(ms.w) > 0)


def test_quantum_potential_forms_agree(well_e1_microstates):
    for ms in well_e1_microstates:
        qs = quantum_potential_schwarzian(ms)
        qb = quantum_potential_bohm(ms.r, ms.grid.h, ms.units)
        sl = interior_slice(ms.grid.n_points)
        ok = ~np.isnan(qb[sl])
        scale = np.max(np.abs(qs[sl][ok]))
        assert np.max(np.abs(qs[sl][ok] - qb[sl][ok])) < 1e-5 * scale


def test_quantum_potential_bohm_handles_nodes():
    # R with a node: the stencil must not leak NaN across the whole array
    grid = Grid(0.0, 1.0, 1001)
    r = np.abs(np.sin(2.0 * math.pi * grid.points))
    r[grid.index_of(0.5)] = 0.0
    q = quantum_potential_bohm(r, grid.h)
    assert np.isnan(q[grid.index_of(0.5)])
    assert np.isfinite(q[grid.index_of(0.25)])


def test_spline_accessors_match_grid_fields(well_e1_microstates):
    ms = well_e1_microstates[2]
    idx = np.arange(100, ms.grid.n_points - 100, 700)
    q = ms.grid.points[idx]
    assert ms.w_prime_at(q) == pytest.approx(ms.w_prime[idx], rel=1e-12)
    assert ms.w_at(q) == pytest.approx(ms.w[idx], abs=1e-12)
    assert ms.r_at(q) == pytest.approx(ms.r[idx], rel=1e-9)
    # d ln R / dq = -1/2 d ln W' / dq
    h = ms.grid.h
    num = (np.log(ms.r_at(q + h)) - np.log(ms.r_at(q - h))) / (2.0 * h)
    assert ms.d_log_r_at(q) == pytest.approx(num, rel=1e-3, abs=1e-4)


def test_residual_tolerance_enforced(well_fine):
    well, grid = well_fine
    pair = solution_pair(well, E1, grid)
    with pytest.raises(CalibrationFailure) as exc:
        build_microstate(pair, MicrostateCoefficients(1.0, 1.0, 0.0),
                         residual_tol=1e-30)
    assert exc.value.residual is not None and exc.value.residual > 1e-30


def test_underflowing_tail_rejected_with_guidance():
    # the harmonic pair decays ~exp(-q^2/2); a wide domain underflows W'
    spec = Harmonic(1.0, -8.0, 8.0)
    grid = Grid(-8.0, 8.0, 2001)
    pair = solution_pair(spec, 0.5, grid)
    with pytest.raises(CalibrationFailure, match="shrink the domain"):
        build_microstate(pair, MicrostateCoefficients(1.0, 1.0, 0.0))


def test_step_microstate_matches_scattering_phase(step, step_grid):
    # on the scattering pair (Re psi, Im psi) the symmetric microstate W'
    # reproduces the exact current/|psi|^2 momentum of the analytic state
    from qhjlab.schrodinger import probability_current, scattering_state

    ms = unbound_microstate(step, 1.0, step_grid)
    st_ = scattering_state(step, 1.0, step_grid)
    exact = probability_current(st_.field) / np.abs(st_.field.values) ** 2
    sl = interior_slice(step_grid.n_points)
    assert np.max(np.abs(ms.w_prime[sl] - exact[sl])) < 1e-5
    # the residual stencil straddling the jump cell sees the smeared
    # potential, so judge the equation away from the discontinuity; the
    # interference oscillation limits this grid to ~1e-5 (O(h^4))
    res = qshje_residual_field(ms.w_prime, step_grid, step, 1.0)
    q = step_grid.points
    away = np.abs(q) > 6.0 * step_grid.h
    assert np.nanmax(res[sl][away[sl]]) < 2e-5


def test_running_wave_amplitude_and_phase(well_e1_microstates):
    ms = well_e1_microstates[0]
    t = 0.37
    psi_p = running_wave(ms, t, sign=+1)
    psi_m = running_wave(ms, t, sign=-1)
    assert np.abs(psi_p) == pytest.approx(ms.r, rel=1e-12)
    # opposite runners combine to a standing wave proportional to R cos(W/h)
    standing = psi_p + psi_m
    want = 2.0 * ms.r * np.cos(ms.w) * np.exp(-1j * ms.energy * t)
    assert np.max(np.abs(standing - want)) < 1e-12


def test_bipolar_wave_real_eigenstate_conjugate_phases():
    bw = BipolarWave.for_real_eigenstate(2.5, amplitude=0.7, phase=0.3)
    assert bw.phase_minus == -bw.phase_plus
    assert bw.amplitude == 0.7
    assert bw.energy == 2.5


def test_initial_kinematics_of_free_classical_motion():
    spec = Constant(0.0, -10.0, 10.0)
    grid = Grid(-10.0, 10.0, 4001)
    ms = unbound_microstate(spec, 0.5, grid)
    q0, v0, a0 = microstate_initial_kinematics(ms, ClassicalUnity(), 0.5)
    assert q0 == 0.5
    assert v0 == pytest.approx(1.0, rel=1e-7)   # sqrt(2E/m)
    assert a0 == pytest.approx(0.0, abs=1e-6)


def test_residual_field_masks_boundary(well_e1_microstates):
    ms = well_e1_microstates[0]
    res = qshje_residual_field(ms.w_prime, ms.grid, ms.pair.spec, ms.energy)
    assert np.all(np.isnan(res[:5])) and np.all(np.isnan(res[-5:]))
    sl = interior_slice(ms.grid.n_points)
    assert np.nanmax(res[sl]) < 1e-6
