"""Energy-variational derivative of the kinetic energy, delta T / delta E.

Three regimes are covered by small model objects sharing an `evaluator`
protocol:

* ClassicalUnity: delta T / delta E = 1 identically (conservative classical
  mechanics, and the stationary-state limit of the continuum form).
* ContinuumLimit: central finite difference in energy of the unbound
  momentum field, (W'/m) dW'/dE.
* DiscreteBeat: the two-eigenstate variation for bound spectra, which is
  explicitly time-periodic at the beat period 2 pi hbar / (E_j - E_i).

The complement delta Q / delta E = 1 - delta T / delta E and the quantum mass
field m_q = m * (delta T / delta E) are thin derived quantities kept here so
the bookkeeping lives in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateBeat, NotConverged, TanPole
from .microstates import Microstate, MicrostateCoefficients, build_microstate
from .potentials import Constant, PotentialSpec, SpectrumClass, Step, evaluate_potential
from .schrodinger import (Grid, WaveField, find_bound_eigenvalues, normalize_pair,
                          scattering_state, solution_pair)
from .units import NATURAL, UnitsConfig

#: |cos| below this counts as sitting on a tan pole
_POLE_COS = 1e-9


@dataclass
class VariationFrame:
    """Two microstates of one system, identical coefficients and grids, at
    energies E_i < E_j, with the difference fields the beat formula needs."""

    microstate_i: Microstate
    microstate_j: Microstate
    delta_E: float = field(init=False)
    delta_w: np.ndarray = field(init=False)       # W_j - W_i over the grid
    log_amp_ratio: np.ndarray = field(init=False)  # ln(R_j / R_i)

    def __post_init__(self):
        mi, mj = self.microstate_i, self.microstate_j
        if mi.grid != mj.grid:
            raise ValueError("frame microstates must share one grid")
        if mi.coefficients != mj.coefficients:
            raise ValueError("frame microstates must share (a, b, c)")
        self.delta_E = mj.energy - mi.energy
        if self.delta_E == 0.0:
            raise DegenerateBeat("frame energies are equal")
        if self.delta_E < 0.0:
            raise ValueError("frame convention is E_j > E_i; swap the pair")
        self.delta_w = mj.w - mi.w
        self.log_amp_ratio = np.log(mj.r) - np.log(mi.r)

    @property
    def units(self):
        return self.microstate_i.units

    def delta_w_at(self, q):
        return self.microstate_j.w_at(q) - self.microstate_i.w_at(q)

    def delta_w_prime_at(self, q):
        return self.microstate_j.w_prime_at(q) - self.microstate_i.w_prime_at(q)

    def d_log_amp_ratio_at(self, q):
        """d/dq ln(R_j / R_i)."""
        return self.microstate_j.d_log_r_at(q) - self.microstate_i.d_log_r_at(q)


def bound_microstate(spec, grid, label, coeffs, units=NATURAL):
    """Microstate of the bound state carrying the family's conventional
    quantum number `label` (wells count from 1, oscillators from 0)."""
    k = label - spec.ground_state_label()
    if k < 0:
        raise ValueError(f"label {label} below the ground state of "
                         f"{type(spec).__name__}")
    sols = find_bound_eigenvalues(spec, grid, k + 1, units=units)
    if len(sols) <= k:
        raise NotConverged(f"only {len(sols)} bound states exist; "
                           f"label {label} unavailable")
    pair = solution_pair(spec, sols[k].energy, grid, units=units)
    return build_microstate(pair, coeffs)


def build_frame(spec, grid, i, j, coeffs, units=NATURAL):
    """VariationFrame for eigenlabels i < j with shared coefficients.

    The two microstates are built by the identical pair protocol; only the
    energy differs between them.
    """
    if j == i:
        raise DegenerateBeat("frame needs two distinct eigenstates")
    if isinstance(coeffs, tuple):
        coeffs = MicrostateCoefficients(*coeffs)
    lo, hi = min(i, j), max(i, j)
    k_hi = hi - spec.ground_state_label()
    if hi - spec.ground_state_label() < 0 or lo - spec.ground_state_label() < 0:
        raise ValueError(f"eigenlabel below the ground state of {type(spec).__name__}")
    sols = find_bound_eigenvalues(spec, grid, k_hi + 1, units=units)
    if len(sols) <= k_hi:
        raise NotConverged(f"spectrum holds only {len(sols)} bound states")

    def micro(label):
        e = sols[label - spec.ground_state_label()].energy
        pair = solution_pair(spec, e, grid, units=units)
        return build_microstate(pair, coeffs)

    return VariationFrame(microstate_i=micro(lo), microstate_j=micro(hi))


def delta_T_delta_E_discrete(frame: VariationFrame, q, t, delta_alpha=0.0,
                             sign=+1):
    """Two-eigenstate variational derivative of kinetic energy at (q, t).

    (W'_i / (m dE)) [dW' + hbar tan(dS/hbar + d_alpha) d/dq ln(R_j/R_i)]
    with dS(q, t) = dW(q) - dE t; periodic in t with period 2 pi hbar / dE.

    `sign` flips the phase convention of both running waves (W -> -W,
    delta_alpha -> -delta_alpha); the value is invariant, the parameter
    exists so that invariance is testable rather than assumed.
    """
    u = frame.units
    hbar, m = u.hbar, u.mass
    wpi = frame.microstate_i.w_prime_at(q)
    dwp = frame.delta_w_prime_at(q)
    ds = frame.delta_w_at(q) - frame.delta_E * t
    arg = sign * (ds / hbar + delta_alpha)
    c = math.cos(arg)
    if abs(c) < _POLE_COS:
        raise TanPole(f"tan argument within {_POLE_COS:g} of a pole at "
                      f"q={q:g}, t={t:g}", q=q, t=t,
                      sign=1.0 if math.sin(arg) * c >= 0 else -1.0)
    dlr = frame.d_log_amp_ratio_at(q)
    return float(sign * wpi / (m * frame.delta_E)
                 * (sign * dwp + hbar * math.tan(arg) * dlr))


def dtde_time_sweep(frame, q, times, delta_alpha=0.0):
    """delta T / delta E at fixed q over a time array.

    Returns (values, pole_flags); pole samples carry NaN and flag 1 rather
    than an invented clip value.
    """
    times = np.asarray(times, dtype=float)
    vals = np.empty(times.size)
    flags = np.zeros(times.size, dtype=int)
    for k, t in enumerate(times):
        try:
            vals[k] = delta_T_delta_E_discrete(frame, q, float(t), delta_alpha)
        except TanPole:
            vals[k] = np.nan
            flags[k] = 1
    return vals, flags


def write_sweep_csv(path, times, q, values, flags, units=NATURAL):
    """Time-sweep artifact: t, q, dTdE, dQdE, m_q, pole_flag."""
    with open(path, "w") as fh:
        fh.write("# t,q,dTdE,dQdE,m_q,pole_flag\n")
        for t, v, f in zip(times, values, flags):
            fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%d\n"
                     % (t, q, v, 1.0 - v, units.mass * v, f))


def _continuum_w_prime(spec, E, q, units):
    """Momentum field W'(q; E) of the unbound state, in closed form.

    Constant: plane wave, W' = sqrt(2m(E - V)). Step: phase derivative of
    the scattering solution, hbar Im(psi* psi') / |psi|^2.
    """
    q = np.asarray(q, dtype=float)
    m, hbar = units.mass, units.hbar
    if isinstance(spec, Constant):
        if E <= spec.v:
            raise ValueError(f"no propagating state at E={E:g} <= V={spec.v:g}")
        return np.full(q.shape, math.sqrt(2.0 * m * (E - spec.v)))
    if isinstance(spec, Step):
        if E <= 0:
            raise ValueError("step scattering requires E > 0")
        k1 = math.sqrt(2.0 * m * E) / hbar
        if E >= spec.height:
            k2 = math.sqrt(2.0 * m * (E - spec.height)) / hbar + 0.0j
        else:
            k2 = 1j * math.sqrt(2.0 * m * (spec.height - E)) / hbar
        r = (k1 - k2) / (k1 + k2)
        tt = 2.0 * k1 / (k1 + k2)
        out = np.empty(q.shape)
        left = q < 0.0
        psi_l = np.exp(1j * k1 * q[left]) + r * np.exp(-1j * k1 * q[left])
        out[left] = hbar * k1 * (1.0 - abs(r) ** 2) / np.abs(psi_l) ** 2
        if E >= spec.height:
            out[~left] = hbar * k2.real
        else:
            out[~left] = 0.0  # evanescent region carries no current
        return out
    raise ValueError(f"no closed-form unbound momentum field for "
                     f"{type(spec).__name__}")


def delta_T_delta_E_continuum(spec, E, q, dE=None, units=NATURAL):
    """(W'/m) dW'/dE by Richardson-extrapolated central differences in E.

    Equals (grad S / m) . grad(dS/dE) for stationary unbound states, where
    the mixed partial lets dW/dE act before the spatial derivative.
    """
    if spec.spectrum_class() is not SpectrumClass.CONTINUOUS:
        raise ValueError(f"{type(spec).__name__} has no continuum at E={E:g}")
    if dE is None:
        dE = 1e-5 * abs(E)
    if dE <= 0:
        raise ValueError("dE must be positive")
    scalar = np.ndim(q) == 0
    wp0 = _continuum_w_prime(spec, E, q, units)

    def central(h):
        return (_continuum_w_prime(spec, E + h, q, units)
                - _continuum_w_prime(spec, E - h, q, units)) / (2.0 * h)

    d_coarse = central(dE)
    d_fine = central(0.5 * dE)
    dwp_de = (4.0 * d_fine - d_coarse) / 3.0
    out = wp0 * dwp_de / units.mass
    return float(out) if scalar else out


def delta_Q_delta_E(dtde):
    """Complement of the kinetic variation: 1 - delta T / delta E."""
    return 1.0 - dtde


def beat_period(e_i, e_j, units=NATURAL):
    """2 pi hbar / |E_j - E_i|."""
    de = abs(e_j - e_i)
    if de < 1e-12 * max(1.0, abs(e_i), abs(e_j)):
        raise DegenerateBeat(f"equal energies {e_i:g}, {e_j:g}")
    return 2.0 * math.pi * units.hbar / de


@dataclass(frozen=True)
class QuantumMass:
    """m_q = m * (delta T / delta E); restores q_dot = p / m_q."""

    m_q: float


def quantum_mass(mass, dtde):
    return QuantumMass(m_q=mass * dtde)


# --- evaluation models ------------------------------------------------------

@dataclass(eq=False)
class ClassicalUnity:
    """delta T / delta E = 1; classical and stationary-continuum kinematics."""

    def evaluator(self, ms):
        return lambda q, t: 1.0


@dataclass(eq=False)
class ContinuumLimit:
    """Finite-difference continuum form; dE defaults to 1e-5 * E."""

    dE: float = None

    def __post_init__(self):
        if self.dE is not None and self.dE <= 0:
            raise ValueError("dE must be positive")
        self._cache = {}

    def evaluator(self, ms):
        key = id(ms)
        if key in self._cache:
            return self._cache[key]
        spec, E, units = ms.pair.spec, ms.energy, ms.units
        qs = ms.grid.points
        vals = delta_T_delta_E_continuum(spec, E, qs, dE=self.dE, units=units)
        spline = CubicSpline(qs, vals)

        def ev(q, t):
            out = spline(q)
            return float(out) if np.ndim(q) == 0 else out
        self._cache[key] = ev
        return ev


@dataclass(eq=False)
class DiscreteBeat:
    """Two-eigenstate beat model; i, j are the family's conventional
    quantum numbers, with E_j > E_i."""

    i: int
    j: int
    delta_alpha: float = 0.0

    def __post_init__(self):
        if self.j == self.i:
            raise DegenerateBeat("DiscreteBeat needs two distinct eigenstates")
        self._frames = {}

    def frame_for(self, ms):
        """Frame whose lower member matches the given microstate's system,
        grid and coefficients (built once per microstate)."""
        key = id(ms)
        if key not in self._frames:
            self._frames[key] = build_frame(ms.pair.spec, ms.grid, self.i,
                                            self.j, ms.coefficients,
                                            units=ms.units)
        return self._frames[key]

    def evaluator(self, ms):
        frame = self.frame_for(ms)
        alpha = self.delta_alpha
        return lambda q, t: delta_T_delta_E_discrete(frame, q, t, alpha)


def unbound_microstate(spec, E, grid=None, units=NATURAL):
    """The single microstate of an unbound system (W_mu is the wave-function
    phase; the coefficient freedom collapses for continuum states).

    For the step the pair is (Re psi, Im psi) of the analytic scattering
    solution; for other continuum families the left-edge shooting pair is
    used (equivalent for a constant potential).
    """
    if grid is None:
        lo, hi = spec.domain()
        grid = Grid(lo, hi, 2001)
    coeffs = MicrostateCoefficients(1.0, 1.0, 0.0)
    if isinstance(spec, Step):
        st = scattering_state(spec, E, grid, units)
        phi = WaveField(grid, st.field.values.real, st.field.derivative.real)
        theta = WaveField(grid, st.field.values.imag, st.field.derivative.imag)
        pair = normalize_pair(phi, theta, E, spec, units)
    else:
        pair = solution_pair(spec, E, grid, units)
    return build_microstate(pair, coeffs)


# --- brute-force variational oracle ----------------------------------------

def _running_wave_point(ms, q, t, alpha, units):
    """(psi, dpsi/dq, dpsi/dt) of the positive running wave at one point."""
    hbar = units.hbar
    r = ms.r_at(q)
    w = ms.w_at(q)
    psi = r * np.exp(1j * ((w - ms.energy * t) / hbar + alpha))
    dpsi = (ms.d_log_r_at(q) + 1j * ms.w_prime_at(q) / hbar) * psi
    psidot = (-1j * ms.energy / hbar) * psi
    return psi, dpsi, psidot


def theta_variation_oracle(frame, q, t, delta_alpha=0.0, dtheta=1e-5):
    """delta T / delta E by direct finite-theta variation.

    Mixes the running waves psi(theta) = cos(theta) psi_i + sin(theta) psi_j,
    reads p = hbar Im(psi'/psi) and E = -hbar Im(psi_dot/psi), and forms
    (p/m) (dp/dtheta) / (dE/dtheta) at theta = 0 by central differences.
    Independent of the closed-form beat expression.
    """
    u = frame.units
    hbar, m = u.hbar, u.mass
    pi_, dpi, pdi = _running_wave_point(frame.microstate_i, q, t, 0.0, u)
    pj_, dpj, pdj = _running_wave_point(frame.microstate_j, q, t, delta_alpha, u)

    def observables(theta):
        c, s = math.cos(theta), math.sin(theta)
        psi = c * pi_ + s * pj_
        p = hbar * (c * dpi + s * dpj) / psi
        e = -hbar * (c * pdi + s * pdj) / psi
        return p.imag, e.imag

    p0, _ = observables(0.0)
    pp, ep = observables(dtheta)
    pm, em = observables(-dtheta)
    de = ep - em
    if de == 0.0:
        raise ZeroDivisionError("dE/dtheta vanished at the probe point")
    return (p0 / m) * (pp - pm) / de


def theta_variation_split(frame, q, t, delta_alpha=0.0, dtheta=1e-5, dq=None):
    """(dT/dtheta, dQ/dtheta, dE/dtheta) by the same finite-theta mixing.

    T = p^2/2m from the phase gradient; Q = -(hbar^2/2m) |psi|''/|psi| by a
    5-point spatial stencil. Their sum should reproduce dE/dtheta since V is
    theta-independent.
    """
    u = frame.units
    hbar, m = u.hbar, u.mass
    if dq is None:
        dq = 4.0 * frame.microstate_i.grid.h
    offs = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * dq
    qs = q + offs

    waves = []
    for ms, alpha in ((frame.microstate_i, 0.0),
                      (frame.microstate_j, delta_alpha)):
        psi = ms.r_at(qs) * np.exp(
            1j * ((ms.w_at(qs) - ms.energy * t) / u.hbar + alpha))
        dpsi = (ms.d_log_r_at(qs) + 1j * ms.w_prime_at(qs) / u.hbar) * psi
        psidot = (-1j * ms.energy / u.hbar) * psi
        waves.append((psi, dpsi, psidot))
    (pi_, dpi, pdi), (pj_, dpj, pdj) = waves

    def split(theta):
        c, s = math.cos(theta), math.sin(theta)
        psi = c * pi_ + s * pj_
        dpsi = c * dpi + s * dpj
        psidot = c * pdi + s * pdj
        p = hbar * (dpsi[2] / psi[2]).imag
        e = -hbar * (psidot[2] / psi[2]).imag
        amp = np.abs(psi)
        d2a = (-amp[4] + 16.0 * amp[3] - 30.0 * amp[2]
               + 16.0 * amp[1] - amp[0]) / (12.0 * dq * dq)
        t_kin = p * p / (2.0 * m)
        q_pot = -(hbar ** 2 / (2.0 * m)) * d2a / amp[2]
        return t_kin, q_pot, e

    tp, qp, ep = split(dtheta)
    tm, qm, em = split(-dtheta)
    return ((tp - tm) / (2.0 * dtheta), (qp - qm) / (2.0 * dtheta),
            (ep - em) / (2.0 * dtheta))
