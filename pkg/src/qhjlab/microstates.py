"""Microstate solutions of the quantum stationary Hamilton-Jacobi equation.

A microstate is W' = sqrt(2m) / (a phi^2 + b theta^2 + c phi theta) built on
an independent solution pair, with the pair rescaled by a single calibration
factor chosen to minimize the QSHJE residual (the defining equation is the
authority; the literature leaves the pair normalization convention unstated).

All Schwarzian-related derivatives work on ln W' rather than W' itself: in
classically forbidden tails W' spans many orders of magnitude and direct
stencils on W' lose the quantum-potential cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .errors import CalibrationFailure, InvalidCoefficients, SingularDerivative
from .numerics import BOUNDARY_MARGIN, deriv1, interior_slice
from .potentials import evaluate_potential
from .schrodinger import Grid, SolutionPair
from .units import NATURAL, UnitsConfig

_WPRIME_FLOOR = 1e-12


@dataclass(frozen=True)
class MicrostateCoefficients:
    a: float
    b: float
    c: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InvalidCoefficients(f"need a > 0 and b > 0, got a={self.a}, b={self.b}")
        if 4.0 * self.a * self.b - self.c ** 2 <= 0:
            raise InvalidCoefficients(
                f"quadratic form not positive definite: 4ab - c^2 = "
                f"{4.0 * self.a * self.b - self.c ** 2:g}")


@dataclass
class Microstate:
    coefficients: MicrostateCoefficients
    energy: float
    pair: SolutionPair
    grid: Grid
    w_prime: np.ndarray   # > 0 on the open interior
    w: np.ndarray         # reduced action, anchored w(q_ref) = 0
    r: np.ndarray         # amplitude, max over interior fixed to 1
    q_ref: float
    units: UnitsConfig = NATURAL
    calibration: float = 1.0  # joint pair scale factor lambda

    def __post_init__(self):
        self._log_wp_spline = None
        self._w_spline = None

    def _log_wp(self):
        if self._log_wp_spline is None:
            self._log_wp_spline = CubicSpline(self.grid.points, np.log(self.w_prime))
        return self._log_wp_spline

    def w_prime_at(self, q):
        return np.exp(self._log_wp()(q))

    def w_at(self, q):
        if self._w_spline is None:
            self._w_spline = CubicSpline(self.grid.points, self.w)
        return self._w_spline(q)

    def r_at(self, q):
        # R = C / sqrt(W'); same global scale as the stored field
        scale = self.r[self.grid.n_points // 2] * np.sqrt(
            self.w_prime[self.grid.n_points // 2])
        return scale / np.sqrt(self.w_prime_at(q))

    def d_log_r_at(self, q):
        """d/dq ln R = -1/2 d/dq ln W'."""
        return -0.5 * self._log_wp().derivative()(q)

    def write_csv(self, path):
        q = self.grid.points
        qs = quantum_potential_schwarzian(self)
        qb = quantum_potential_bohm(self.r, self.grid.h, self.units)
        res = qshje_residual_field(self.w_prime, self.grid, self.pair.spec,
                                   self.energy, self.units)
        with open(path, "w") as fh:
            fh.write("# q,w_prime,w,r,q_schwarzian,q_bohm,residual\n")
            for i in range(q.size):
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                         % (q[i], self.w_prime[i], self.w[i], self.r[i],
                            qs[i], qb[i], res[i]))


@dataclass(frozen=True)
class BipolarWave:
    """Scale and phase of the oppositely running wave components
    A+- R exp(+-iW/hbar) exp(-iEt/hbar)."""

    amplitude: float
    phase_plus: float
    phase_minus: float
    energy: float

    @classmethod
    def for_real_eigenstate(cls, energy, amplitude=1.0, phase=0.0):
        # real wave function: A- = conj(A+)
        return cls(amplitude=amplitude, phase_plus=phase, phase_minus=-phase,
                   energy=energy)


def schwarzian(w_prime, h):
    """Schwarzian derivative {W; q} from the momentum field W' = dW/dq.

    Uses L = (ln|W'|)' so that {W; q} = L' - L^2/2; working on the log keeps
    the stencils accurate when W' decays exponentially. Invariant under a
    sign flip of W by construction. Boundary values (one-sided stencils) are
    replicated from the nearest interior point and should be masked by the
    caller's margin.
    """
    wp = np.asarray(w_prime, dtype=float)
    sl = interior_slice(wp.size)
    bad = np.abs(wp[sl]) < _WPRIME_FLOOR
    if np.any(bad):
        i = int(np.argmax(bad)) + sl.start
        raise SingularDerivative(f"|W'| = {abs(wp[i]):g} below {_WPRIME_FLOOR:g} "
                                 f"at grid index {i}")
    log_wp = np.log(np.abs(wp))
    ell = deriv1(log_wp, h)
    ell_prime = deriv1(ell, h)
    out = ell_prime - 0.5 * ell * ell
    m = BOUNDARY_MARGIN
    out[:m] = out[m]
    out[-m:] = out[-m - 1]
    return out


def quantum_potential_schwarzian(ms: Microstate):
    """Q = (hbar^2 / 4m) {W; q}."""
    u = ms.units
    return (u.hbar ** 2 / (4.0 * u.mass)) * schwarzian(ms.w_prime, ms.grid.h)


def quantum_potential_bohm(r, h, units=NATURAL):
    """Q = -(hbar^2 / 2m) R''/R via central differences of ln R
    (R''/R = u'' + u'^2 for u = ln R, stable across exponential tails).

    Points where R <= 0 (nodes) are excluded and returned as NaN.
    """
    r = np.asarray(r, dtype=float)
    out = np.full(r.size, np.nan)
    ok = r > 0.0
    if not np.all(ok):
        # nodes poison any stencil that straddles them; compute on the
        # largest positive run containing each point instead of globally
        idx = np.flatnonzero(ok)
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for run in runs:
            if run.size >= 5:
                out[run] = quantum_potential_bohm(r[run], h, units)[: run.size]
        return out
    u = np.log(r)
    du = deriv1(u, h)
    ddu = deriv1(du, h)
    out = -(units.hbar ** 2 / (2.0 * units.mass)) * (ddu + du * du)
    return out


def build_microstate(pair: SolutionPair, coeffs: MicrostateCoefficients,
                     q_ref=None, residual_tol=None):
    """Construct a microstate on a solution pair.

    The pair is rescaled by one factor lambda (phi, theta -> lam phi,
    lam theta), fixed by a least-squares fit of the kinetic term
    (W')^2 / 2m to E - V - Q over the interior; Q is computed from the
    Schwarzian of the uncalibrated field and is invariant under lambda.

    residual_tol, when given, turns a residual above tolerance into a
    CalibrationFailure; exploratory construction at non-eigen energies can
    pass None and inspect qshje_residual itself.
    """
    units = pair.units
    spec = pair.spec
    if spec is None:
        raise CalibrationFailure("pair has no potential attached; cannot calibrate")
    grid = pair.phi.grid
    q = grid.points
    if q_ref is None:
        q_ref = 0.5 * (grid.q_min + grid.q_max)

    phi, theta = pair.phi.values, pair.theta.values
    form = (coeffs.a * phi * phi + coeffs.b * theta * theta
            + coeffs.c * phi * theta)
    sl = interior_slice(grid.n_points)
    if np.min(form[sl]) <= 0.0:
        raise CalibrationFailure("quadratic form lost positivity numerically")
    wp0 = np.sqrt(2.0 * units.mass) / form
    if np.min(wp0[sl]) < _WPRIME_FLOOR:
        raise CalibrationFailure(
            f"uncalibrated W' underflows {_WPRIME_FLOOR:g}; shrink the domain")

    qpot = (units.hbar ** 2 / (4.0 * units.mass)) * schwarzian(wp0, grid.h)
    v = evaluate_potential(spec, q, units)
    target = (pair.energy - v - qpot)[sl]
    kin0 = (wp0 * wp0 / (2.0 * units.mass))[sl]
    denom = float(kin0 @ kin0)
    if denom == 0.0:
        raise CalibrationFailure("kinetic term vanished; cannot calibrate")
    s = float(kin0 @ target) / denom  # s = lambda^{-4}
    # second pass excluding gross outliers (e.g. stencil artifacts straddling
    # a potential discontinuity) so a handful of bad points cannot bias lambda
    misfit = np.abs(s * kin0 - target)
    med = float(np.median(misfit))
    keep = misfit <= 20.0 * med + 1e-300
    if np.count_nonzero(keep) >= max(16, keep.size // 4) and not np.all(keep):
        kin_k, tgt_k = kin0[keep], target[keep]
        denom_k = float(kin_k @ kin_k)
        if denom_k > 0.0:
            s = float(kin_k @ tgt_k) / denom_k
    if s <= 0.0:
        raise CalibrationFailure(f"calibration produced non-positive scale {s:g}")
    wp = np.sqrt(s) * wp0
    lam = s ** -0.25

    w = cumulative_simpson(wp, dx=grid.h, initial=0.0)
    w = w - CubicSpline(q, w)(q_ref)
    r = 1.0 / np.sqrt(wp)
    r = r / np.max(r[sl])

    ms = Microstate(coefficients=coeffs, energy=pair.energy, pair=pair,
                    grid=grid, w_prime=wp, w=w, r=r, q_ref=float(q_ref),
                    units=units, calibration=float(lam))
    if residual_tol is not None:
        res = qshje_residual(ms)
        if res > residual_tol:
            raise CalibrationFailure(
                f"QSHJE residual {res:g} above tolerance {residual_tol:g}",
                residual=res)
    return ms


def qshje_residual_field(w_prime, grid, spec, E, units=NATURAL):
    """Pointwise |(W')^2/2m + V - E + (hbar^2/4m){W;q}| (NaN in the margin)."""
    wp = np.asarray(w_prime, dtype=float)
    sch = schwarzian(wp, grid.h)
    v = evaluate_potential(spec, grid.points, units)
    res = np.abs(wp * wp / (2.0 * units.mass) + v - E
                 + (units.hbar ** 2 / (4.0 * units.mass)) * sch)
    res[:BOUNDARY_MARGIN] = np.nan
    res[-BOUNDARY_MARGIN:] = np.nan
    return res


def qshje_residual(ms: Microstate):
    """Max interior residual of the defining equation (boundary margin
    excluded; the equation is singular where boundary values are applied)."""
    res = qshje_residual_field(ms.w_prime, ms.grid, ms.pair.spec, ms.energy,
                               ms.units)
    sl = interior_slice(ms.grid.n_points)
    return float(np.nanmax(res[sl]))


def running_wave(ms: Microstate, t, sign=+1, amplitude=1.0, phase=0.0):
    """Complex field A R exp(sign i W/hbar) exp(-iEt/hbar) on the grid."""
    hbar = ms.units.hbar
    a = amplitude * np.exp(1j * phase)
    return a * ms.r * np.exp(1j * (sign * ms.w - ms.energy * t) / hbar)


def microstate_initial_kinematics(ms: Microstate, model, q0, t0=0.0,
                                  dq=None, dt=None):
    """Initial (q0, v0, a0) of the Floydian trajectory through (q0, t0).

    v0 comes from the kinematic rule; a0 is the material derivative
    dv/dt + v dv/dq along the flow, by central finite differences.
    """
    from .errors import SingularKinematics, SingularVelocity, TanPole
    from .trajectories import floyd_velocity

    try:
        v0 = floyd_velocity(ms, model, q0, t0)
    except (SingularVelocity, TanPole) as exc:
        raise SingularKinematics(f"dT/dE singular at q={q0}, t={t0}: {exc}") from exc
    if dq is None:
        dq = 10.0 * ms.grid.h
    if dt is None:
        dt = 1e-6 * max(1.0, abs(t0)) + 1e-6
    v_qp = floyd_velocity(ms, model, q0 + dq, t0)
    v_qm = floyd_velocity(ms, model, q0 - dq, t0)
    v_tp = floyd_velocity(ms, model, q0, t0 + dt)
    v_tm = floyd_velocity(ms, model, q0, t0 - dt)
    a0 = (v_tp - v_tm) / (2.0 * dt) + v0 * (v_qp - v_qm) / (2.0 * dq)
    return float(q0), float(v0), float(a0)
