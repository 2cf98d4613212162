"""Classical, Bohmian and Floydian trajectory integration.

Velocity rules:

* Bohm: v = (grad W)/m with W the phase of the physical wave function, so
  real bound eigenstates stand still.
* Floyd: v = W'_mu / (m * dT/dE) under an energy-derivative model; with the
  discrete-beat model the velocity is explicitly time-periodic.

The quantum time t_q accumulates at the rate dT/dE = 1 - dQ/dE along a path;
reparameterizing a Bohm path by its quantum time reproduces the Floyd path,
which `bohm_floyd_time_deformation` checks numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DomainError, NotConverged, SingularVelocity, TanPole
from .microstates import Microstate
from .schrodinger import WaveField
from .units import NATURAL
from .variation import ContinuumLimit, DiscreteBeat, beat_period, unbound_microstate

#: default |v| beyond which the integrator declares a singular approach
VELOCITY_CAP = 1e6


@dataclass
class TrajectoryState:
    q: float
    t: float
    t_q: float
    v: float


@dataclass
class TrajectoryEvent:
    time: float
    kind: str       # "TanPole" | "DTdEZero" | "DomainExit" | "SingularVelocity"
    location: float


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk45"          # "rk45" adaptive | "rk4" fixed step
    dt: float = 1e-3              # fixed step for rk4
    rtol: float = 1e-9
    atol: float = 1e-9
    max_steps: int = 200000
    n_samples: int = 1001
    velocity_cap: float = VELOCITY_CAP
    event_tol: float = 1e-9

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if min(self.dt, self.rtol, self.atol, self.velocity_cap,
               self.event_tol) <= 0:
            raise ValueError("steps, tolerances and caps must be positive")
        if self.max_steps < 1 or self.n_samples < 2:
            raise ValueError("max_steps >= 1 and n_samples >= 2 required")


@dataclass
class TrajectoryResult:
    samples: list
    events: list
    provenance: dict = field(default_factory=dict)
    complete: bool = True

    @property
    def t(self):
        return np.array([s.t for s in self.samples])

    @property
    def q(self):
        return np.array([s.q for s in self.samples])

    @property
    def v(self):
        return np.array([s.v for s in self.samples])

    @property
    def t_q(self):
        return np.array([s.t_q for s in self.samples])

    def write_csv(self, path, dtde_rule=None):
        event_times = {round(e.time, 12) for e in self.events}
        with open(path, "w") as fh:
            fh.write("# t,q,v,t_q,dTdE,dQdE,event_flag\n")
            for s in self.samples:
                if dtde_rule is not None:
                    try:
                        dtde = dtde_rule(s.q, s.t)
                    except (TanPole, SingularVelocity):
                        dtde = float("nan")
                else:
                    dtde = float("nan")
                flag = 1 if round(s.t, 12) in event_times else 0
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n"
                         % (s.t, s.q, s.v, s.t_q, dtde, 1.0 - dtde, flag))


def bohm_velocity(psi: WaveField, q, units=NATURAL):
    """v = (hbar/m) Im(psi'/psi), the guidance velocity of the wave function.

    Identically zero for real fields (stationary bound eigenstates).
    """
    vals = np.asarray(psi.values)
    ders = np.asarray(psi.derivative)
    num = units.hbar * np.imag(np.conj(vals) * ders)
    scalar = np.ndim(q) == 0
    if np.max(np.abs(num)) == 0.0:
        return 0.0 if scalar else np.zeros(np.shape(q))
    den = np.abs(vals) ** 2
    grid_v = num / np.where(den > 0.0, den, np.inf) / units.mass
    out = CubicSpline(psi.grid.points, grid_v)(q)
    return float(out) if scalar else out


def floyd_velocity(ms: Microstate, model, q, t):
    """v = W'_mu / (m * dT/dE) under the given energy-derivative model.

    A tan pole of the discrete-beat formula sends dT/dE to infinity, so the
    velocity passes smoothly through zero there; dT/dE = 0 is a genuine
    singularity and raises SingularVelocity.
    """
    try:
        dtde = model.evaluator(ms)(q, t)
    except TanPole:
        return 0.0
    if dtde == 0.0:
        raise SingularVelocity(f"dT/dE = 0 at q={q:g}, t={t:g}")
    return float(ms.w_prime_at(q) / (ms.units.mass * dtde))


def floyd_rule(ms, model):
    """Bound (q, t) -> v callable for the integrator."""
    ev = model.evaluator(ms)
    m = ms.units.mass

    def rule(q, t):
        try:
            dtde = ev(q, t)
        except TanPole:
            return 0.0
        if dtde == 0.0:
            raise SingularVelocity(f"dT/dE = 0 at q={q:g}, t={t:g}")
        return float(ms.w_prime_at(q) / (m * dtde))
    return rule


def integrate_trajectory(velocity_rule, q0, t0, t1, config=None, domain=None,
                         dtde_rule=None, provenance=None):
    """Integrate dq/dt = velocity_rule(q, t) from (q0, t0) to t1.

    Halts early (with an event) on domain exit, on |v| crossing the velocity
    cap (a singular approach), or on step exhaustion; tan-pole encounters are
    logged as events but do not stop the integration (v = 0 there).
    """
    if config is None:
        config = IntegratorConfig()
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    if domain is not None:
        lo, hi = domain
        if not (lo <= q0 <= hi):
            raise DomainError(f"q0={q0} outside domain [{lo}, {hi}]")

    pole_log = []
    singular_log = []

    def guarded(q, t):
        try:
            return velocity_rule(q, t)
        except TanPole:
            pole_log.append((t, q))
            return 0.0
        except SingularVelocity:
            singular_log.append((t, q))
            return 2.0 * config.velocity_cap

    events = []
    if config.method == "rk45":
        samples_t, samples_q, complete = _run_rk45(guarded, q0, t0, t1,
                                                   config, domain, dtde_rule,
                                                   events)
    else:
        samples_t, samples_q, complete = _run_rk4(guarded, q0, t0, t1,
                                                  config, domain, events)

    for t, q in _cluster(pole_log, config):
        events.append(TrajectoryEvent(time=t, kind="TanPole", location=q))
    for t, q in _cluster(singular_log, config):
        events.append(TrajectoryEvent(time=t, kind="SingularVelocity",
                                      location=q))
    events.sort(key=lambda e: e.time)

    samples = [TrajectoryState(q=float(q), t=float(t), t_q=float("nan"),
                               v=guarded(float(q), float(t)))
               for t, q in zip(samples_t, samples_q)]
    return TrajectoryResult(samples=samples, events=events,
                            provenance=provenance or {}, complete=complete)


def _run_rk45(f, q0, t0, t1, config, domain, dtde_rule, events):
    ivp_events = []
    kinds = []
    if domain is not None:
        lo, hi = domain
        pad = config.event_tol * max(1.0, hi - lo)

        def exit_lo(t, y):
            return y[0] - (lo + pad)

        def exit_hi(t, y):
            return (hi - pad) - y[0]
        exit_lo.terminal = exit_hi.terminal = True
        ivp_events += [exit_lo, exit_hi]
        kinds += ["DomainExit", "DomainExit"]

    def cap(t, y):
        return config.velocity_cap - abs(f(y[0], t))
    cap.terminal = True
    ivp_events.append(cap)
    kinds.append("SingularVelocity")

    if dtde_rule is not None:
        def dtde_zero(t, y):
            try:
                return dtde_rule(y[0], t)
            except TanPole:
                return 1.0
        dtde_zero.terminal = False
        ivp_events.append(dtde_zero)
        kinds.append("DTdEZero")

    t_eval = np.linspace(t0, t1, config.n_samples)
    sol = solve_ivp(lambda t, y: [f(y[0], t)], (t0, t1), [q0],
                    t_eval=t_eval, rtol=config.rtol, atol=config.atol,
                    events=ivp_events, dense_output=False)
    for kind, te, ye in zip(kinds, sol.t_events, sol.y_events):
        for t, y in zip(te, ye):
            events.append(TrajectoryEvent(time=float(t), kind=kind,
                                          location=float(y[0])))
    complete = sol.status == 0
    return sol.t, sol.y[0], complete


def _run_rk4(f, q0, t0, t1, config, domain, events):
    n = int(math.ceil((t1 - t0) / config.dt))
    if n > config.max_steps:
        raise NotConverged(f"{n} fixed steps exceed max_steps={config.max_steps}")
    ts = [t0]
    qs = [q0]
    t, q = t0, q0
    complete = True
    for k in range(n):
        h = min(config.dt, t1 - t)
        k1 = f(q, t)
        if abs(k1) >= config.velocity_cap:
            events.append(TrajectoryEvent(time=t, kind="SingularVelocity",
                                          location=q))
            complete = False
            break
        k2 = f(q + 0.5 * h * k1, t + 0.5 * h)
        k3 = f(q + 0.5 * h * k2, t + 0.5 * h)
        k4 = f(q + h * k3, t + h)
        q = q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + h
        if domain is not None and not (domain[0] <= q <= domain[1]):
            events.append(TrajectoryEvent(time=t, kind="DomainExit", location=q))
            complete = False
            break
        ts.append(t)
        qs.append(q)
    return np.asarray(ts), np.asarray(qs), complete


def _cluster(log, config, gap=None):
    """Collapse repeated solver-internal hits into one event per approach."""
    if not log:
        return []
    log = sorted(log)
    if gap is None:
        span = log[-1][0] - log[0][0]
        gap = max(1e-6 * max(1.0, span), 10.0 * config.event_tol)
    out = [log[0]]
    for t, q in log[1:]:
        if t - out[-1][0] > gap:
            out.append((t, q))
    return out


def epoch_rate(ms: Microstate, model, q, t):
    """dQ/dE = 1 - dT/dE at (q, t); the rate at which the epoch drifts along
    a Bohm trajectory."""
    return 1.0 - model.evaluator(ms)(q, t)


def quantum_time_along(result: TrajectoryResult, dqde_rule, t_q0=0.0):
    """Fill t_q(t) = t_q0 + integral of (1 - dQ/dE) dt along the path.

    Trapezoid quadrature over the stored samples; pole samples are bridged
    by linear interpolation of the integrand.
    """
    if len(result.samples) < 2:
        raise ValueError("need at least two samples for quadrature")
    ts = result.t
    qs = result.q
    integrand = np.empty(ts.size)
    for k in range(ts.size):
        try:
            integrand[k] = 1.0 - dqde_rule(qs[k], ts[k])
        except TanPole:
            integrand[k] = np.nan
    bad = np.isnan(integrand)
    if np.any(bad):
        if np.all(bad):
            raise SingularVelocity("dQ/dE undefined along the entire path")
        integrand[bad] = np.interp(ts[bad], ts[~bad], integrand[~bad])
    t_q = t_q0 + cumulative_trapezoid(integrand, ts, initial=0.0)
    for s, v in zip(result.samples, t_q):
        s.t_q = float(v)
    return result


@dataclass
class DeformationSegment:
    t_start: float
    t_end: float
    max_discrepancy: float
    n_points: int


@dataclass
class DeformationRecord:
    segments: list
    events: list
    energy: float
    q0: float


def bohm_floyd_time_deformation(spec, E, q0, span, config=None, units=NATURAL,
                                grid=None):
    """Compare the Bohm path reparameterized by quantum time with the Floyd
    path of an unbound system.

    The Bohm trajectory runs in ordinary t while accumulating t_q; the Floyd
    trajectory runs directly. Where dT/dE keeps one sign the two paths agree
    as q_floyd(t_q(t)) = q_bohm(t); a sign change splits the comparison at
    the event.
    """
    if config is None:
        config = IntegratorConfig()
    ms = unbound_microstate(spec, E, grid=grid, units=units)
    model = ContinuumLimit()
    ev = model.evaluator(ms)
    m = units.mass
    lo, hi = spec.domain()
    margin = 0.01 * (hi - lo)
    dom = (lo + margin, hi - margin)

    def v_bohm(q, t):
        return float(ms.w_prime_at(q) / m)

    t0, t1 = span
    bohm = integrate_trajectory(v_bohm, q0, t0, t1, config, domain=dom)
    bohm = quantum_time_along(bohm, lambda q, t: 1.0 - ev(q, t), t_q0=t0)

    # split the Bohm samples where dT/dE changes sign along the path
    dtde_path = np.array([ev(q, t) for q, t in zip(bohm.q, bohm.t)])
    signs = np.sign(dtde_path)
    breaks = np.flatnonzero(np.diff(signs) != 0)
    edges = [0] + [int(b) + 1 for b in breaks] + [len(bohm.samples)]
    events = list(bohm.events)
    for b in breaks:
        events.append(TrajectoryEvent(time=float(bohm.t[b]), kind="DTdEZero",
                                      location=float(bohm.q[b])))

    rule_f = floyd_rule(ms, model)
    segments = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 3:
            continue
        tq_seg = bohm.t_q[a:b]
        t_seg = bohm.t[a:b]
        q_seg = bohm.q[a:b]
        order = 1.0 if tq_seg[-1] >= tq_seg[0] else -1.0
        tq_lo, tq_hi = min(tq_seg[0], tq_seg[-1]), max(tq_seg[0], tq_seg[-1])
        if tq_hi - tq_lo <= 0:
            continue
        if order > 0:
            fl = integrate_trajectory(rule_f, q_seg[0], tq_seg[0], tq_seg[-1],
                                      config, domain=dom)
            fl_tq = fl.t
        else:
            # quantum time runs backward across this stretch; integrate the
            # reversed flow in a forward parameter s with t_q = tq0 - s
            def rev(q, s):
                return -rule_f(q, tq_seg[0] - s)
            fl = integrate_trajectory(rev, q_seg[0], 0.0,
                                      tq_seg[0] - tq_seg[-1], config,
                                      domain=dom)
            fl_tq = tq_seg[0] - fl.t
        sort = np.argsort(fl_tq)
        q_of_tq = CubicSpline(fl_tq[sort], fl.q[sort])
        t_end = fl_tq[-1]
        inside = ((tq_seg >= min(tq_seg[0], t_end))
                  & (tq_seg <= max(tq_seg[0], t_end)))
        if np.count_nonzero(inside) < 2:
            continue
        disc = np.max(np.abs(q_of_tq(tq_seg[inside]) - q_seg[inside]))
        segments.append(DeformationSegment(
            t_start=float(t_seg[0]), t_end=float(t_seg[-1]),
            max_discrepancy=float(disc),
            n_points=int(np.count_nonzero(inside))))
        events.extend(fl.events)

    events.sort(key=lambda e: e.time)
    return DeformationRecord(segments=segments, events=events, energy=float(E),
                             q0=float(q0))


def epoch_identity_check(ms: Microstate, model, trajectory: TrajectoryResult):
    """Max |grad(dS/dE) * q_dot - 1| along the trajectory.

    grad(dS/dE) = dW'/dE = m (dT/dE)/W'; q_dot comes from differencing the
    integrated samples, so the identity is a consistency certificate of the
    kinematics rather than a restatement of the velocity rule.
    """
    ev = model.evaluator(ms)
    m = ms.units.mass
    ts, qs = trajectory.t, trajectory.q
    if ts.size < 3:
        raise ValueError("trajectory too short for the identity check")
    qdot = np.gradient(qs, ts)
    worst = 0.0
    for k in range(1, ts.size - 1):
        try:
            dtde = ev(qs[k], ts[k])
        except TanPole:
            continue
        grad = m * dtde / ms.w_prime_at(qs[k])
        worst = max(worst, abs(grad * qdot[k] - 1.0))
    return float(worst)


def velocity_beat_spectrum(ms: Microstate, model: DiscreteBeat, q0,
                           n_periods=16, n_per_period=128):
    """Fourier spectrum of the Floyd velocity at fixed q0 over whole beat
    periods.

    Spikes near dT/dE zeros are winsorized at the 1st/99th percentiles so a
    few unbounded samples cannot swamp the spectral peak. Returns
    (frequencies, power, peak_frequency, beat_frequency).
    """
    frame = model.frame_for(ms)
    u = ms.units
    period = beat_period(frame.microstate_i.energy,
                         frame.microstate_j.energy, u)
    n = n_periods * n_per_period
    dt = period / n_per_period
    ts = np.arange(n) * dt
    v = np.empty(n)
    rule = floyd_rule(ms, model)
    for k, t in enumerate(ts):
        try:
            v[k] = rule(q0, float(t))
        except SingularVelocity:
            v[k] = np.nan
    finite = np.isfinite(v)
    lo, hi = np.percentile(v[finite], [1.0, 99.0])
    v = np.clip(np.nan_to_num(v, nan=hi), lo, hi)
    spec = np.fft.rfft(v - np.mean(v))
    freqs = np.fft.rfftfreq(n, dt)
    power = np.abs(spec) ** 2
    peak = freqs[1 + int(np.argmax(power[1:]))]
    return freqs, power, float(peak), 1.0 / period
