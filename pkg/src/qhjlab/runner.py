"""Scenario execution: dispatches a validated config through the core
modules, writes artifacts, and records the run in the registry."""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError, TanPole
from .microstates import MicrostateCoefficients, build_microstate, qshje_residual
from .potentials import SpectrumClass, analytic_spectrum
from .registry import Registry, RunRecord, atomic_write_text, file_digest, now_iso
from .scenario import ScenarioConfig, validate_coefficients
from .schrodinger import (find_bound_eigenvalues, solution_pair,
                          wronskian_constancy)
from .trajectories import (IntegratorConfig, bohm_velocity,
                           bohm_floyd_time_deformation, floyd_rule,
                           integrate_trajectory, quantum_time_along,
                           velocity_beat_spectrum)
from .variation import (ClassicalUnity, ContinuumLimit, DiscreteBeat,
                        beat_period, bound_microstate, build_frame,
                        delta_T_delta_E_continuum, delta_T_delta_E_discrete,
                        dtde_time_sweep, theta_variation_oracle,
                        unbound_microstate, write_sweep_csv)

_EXPORT_KINDS = ("trajectory", "field", "sweep")


def run_scenario(config: ScenarioConfig, out_root=None):
    registry = Registry(out_root or config.out_dir)
    run_id = registry.new_run_id(config.digest())
    run_dir = os.path.join(registry.root, run_id)
    os.makedirs(run_dir, exist_ok=True)

    handler = {
        "solve": _run_solve,
        "microstate": _run_microstate,
        "dtde_sweep": _run_dtde_sweep,
        "trajectory": _run_trajectory,
        "compare": _run_compare,
        "beat_scan": _run_beat_scan,
    }[config.task]
    artifacts, summary = handler(config, run_dir)

    summary_path = os.path.join(run_dir, "summary.json")
    atomic_write_text(summary_path,
                      json.dumps(summary, sort_keys=True, indent=2) + "\n")
    artifacts["summary"] = {"path": summary_path, "kind": "summary"}
    for a in artifacts.values():
        a["sha256"] = file_digest(a["path"])

    record = RunRecord(run_id=run_id, scenario_hash=config.digest(),
                       task=config.task, created=now_iso(),
                       artifacts=artifacts, summary=summary)
    registry.save(record)
    return record


def _coeffs(params, key="coefficients"):
    return validate_coefficients(params.get(key, [1.0, 1.0, 0.0]),
                                 f"{key}")


def _run_solve(config, run_dir):
    n_max = config.params.get("n_max", 3)
    sols = find_bound_eigenvalues(config.potential, config.grid, n_max,
                                  units=config.units)
    artifacts = {}
    for s in sols:
        path = os.path.join(run_dir, f"state_{s.index}.csv")
        s.psi.write_csv(path)
        artifacts[f"state_{s.index}"] = {"path": path, "kind": "field"}
    summary = {"eigenvalues": [s.energy for s in sols],
               "spectrum_class": config.potential.spectrum_class().value}
    exact = analytic_spectrum(config.potential, n_max, config.units)
    if exact is not None:
        summary["analytic_eigenvalues"] = list(map(float, exact[:len(sols)]))
    return artifacts, summary


def _microstate_for(config, params):
    coeffs = _coeffs(params)
    if "label" in params:
        return bound_microstate(config.potential, config.grid,
                                params["label"], coeffs, units=config.units)
    return unbound_microstate(config.potential, float(params["energy"]),
                              grid=config.grid, units=config.units)


def _run_microstate(config, run_dir):
    ms = _microstate_for(config, config.params)
    path = os.path.join(run_dir, "microstate.csv")
    ms.write_csv(path)
    summary = {
        "energy": ms.energy,
        "coefficients": [ms.coefficients.a, ms.coefficients.b,
                         ms.coefficients.c],
        "residual": qshje_residual(ms),
        "calibration": ms.calibration,
        "wronskian_constancy": wronskian_constancy(ms.pair),
    }
    return {"microstate": {"path": path, "kind": "field"}}, summary


def _run_dtde_sweep(config, run_dir):
    p = config.params
    coeffs = _coeffs(p)
    frame = build_frame(config.potential, config.grid, p["i"], p["j"],
                        coeffs, units=config.units)
    period = beat_period(frame.microstate_i.energy,
                         frame.microstate_j.energy, config.units)
    t_max = float(p.get("t_max", 2.0 * period))
    n_t = int(p.get("n_t", 512))
    q = float(p["q"])
    alpha = float(p.get("delta_alpha", 0.0))
    times = np.linspace(0.0, t_max, n_t)
    vals, flags = dtde_time_sweep(frame, q, times, alpha)
    path = os.path.join(run_dir, "dtde_sweep.csv")
    write_sweep_csv(path, times, q, vals, flags, config.units)

    # seeded spot checks of the closed form against the brute-force variation
    rng = np.random.default_rng(config.seed)
    lo, hi = config.grid.q_min, config.grid.q_max
    width = hi - lo
    checks = []
    attempts = 0
    while len(checks) < int(p.get("n_checks", 5)) and attempts < 200:
        attempts += 1
        qq = rng.uniform(lo + 0.15 * width, hi - 0.15 * width)
        tt = rng.uniform(0.0, t_max)
        try:
            a = delta_T_delta_E_discrete(frame, qq, tt, alpha)
        except TanPole:
            continue
        b = theta_variation_oracle(frame, qq, tt, alpha)
        checks.append(abs(a - b) / max(1.0, abs(a)))
    summary = {
        "beat_period": period,
        "delta_E": frame.delta_E,
        "pole_samples": int(np.sum(flags)),
        "oracle_max_rel_dev": max(checks) if checks else None,
    }
    return {"sweep": {"path": path, "kind": "sweep"}}, summary


def _model_from(node, units):
    kind = node.get("kind", "classical")
    if kind == "classical":
        return ClassicalUnity()
    if kind == "continuum":
        return ContinuumLimit(dE=node.get("dE"))
    return DiscreteBeat(node["i"], node["j"],
                        float(node.get("delta_alpha", 0.0)))


def _integrator_from(node):
    node = node or {}
    return IntegratorConfig(
        method=node.get("method", "rk45"),
        dt=float(node.get("dt", 1e-3)),
        rtol=float(node.get("rtol", 1e-9)),
        atol=float(node.get("atol", 1e-9)),
        n_samples=int(node.get("n_samples", 1001)),
        velocity_cap=float(node.get("velocity_cap", 1e6)))


def _run_trajectory(config, run_dir):
    p = config.params
    rule_name = p.get("rule", "floyd")
    t0, t1 = map(float, p.get("t_span", [0.0, 1.0]))
    q0s = p["q0"] if isinstance(p["q0"], (list, tuple)) else [p["q0"]]
    cfg = _integrator_from(p.get("integrator"))
    domain = config.potential.domain()

    if rule_name == "bohm" and "label" in p:
        k = p["label"] - config.potential.ground_state_label()
        sols = find_bound_eigenvalues(config.potential, config.grid, k + 1,
                                      units=config.units)
        psi = sols[k].psi
        rule = lambda q, t: bohm_velocity(psi, q, config.units)
        dqde_rule = lambda q, t: 1.0  # stationary bound case: t_q frozen
        dtde_rule = None
    else:
        ms = _microstate_for(config, p)
        model = _model_from(p.get("model", {"kind": "classical"}),
                            config.units)
        if rule_name == "bohm":
            m = config.units.mass
            rule = lambda q, t: float(ms.w_prime_at(q)) / m
        else:
            rule = floyd_rule(ms, model)
        ev = model.evaluator(ms)
        dqde_rule = lambda q, t: 1.0 - ev(q, t)
        dtde_rule = ev

    artifacts = {}
    summary = {"trajectories": []}
    for k, q0 in enumerate(q0s):
        res = integrate_trajectory(rule, float(q0), t0, t1, cfg,
                                   domain=domain, dtde_rule=dtde_rule)
        res = quantum_time_along(res, dqde_rule, t_q0=t0)
        path = os.path.join(run_dir, f"trajectory_{k}.csv")
        res.write_csv(path, dtde_rule=dtde_rule)
        artifacts[f"trajectory_{k}"] = {"path": path, "kind": "trajectory"}
        summary["trajectories"].append({
            "q0": float(q0),
            "q_final": float(res.q[-1]),
            "t_final": float(res.t[-1]),
            "complete": res.complete,
            "events": [{"time": e.time, "kind": e.kind,
                        "location": e.location} for e in res.events],
        })
    return artifacts, summary


def _run_compare(config, run_dir):
    p = config.params
    E = float(p["energy"])
    span = tuple(map(float, p.get("t_span", [0.0, 0.25])))
    cfg = _integrator_from(p.get("integrator"))
    rec = bohm_floyd_time_deformation(config.potential, E, float(p["q0"]),
                                      span, cfg, units=config.units,
                                      grid=config.grid)
    # independent scan for dT/dE sign changes over the domain
    qs = config.grid.points[5:-5]
    dtde = delta_T_delta_E_continuum(config.potential, E, qs,
                                     units=config.units)
    sgn = np.sign(dtde)
    crossings = qs[np.flatnonzero(np.diff(sgn) != 0)]
    doc = {
        "energy": rec.energy,
        "q0": rec.q0,
        "segments": [{"t_start": s.t_start, "t_end": s.t_end,
                      "max_discrepancy": s.max_discrepancy,
                      "n_points": s.n_points} for s in rec.segments],
        "events": [{"time": e.time, "kind": e.kind, "location": e.location}
                   for e in rec.events],
        "dtde_sign_changes": [float(q) for q in crossings],
    }
    path = os.path.join(run_dir, "comparison.json")
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    summary = {"max_discrepancy": max((s.max_discrepancy
                                       for s in rec.segments), default=None),
               "n_segments": len(rec.segments),
               "n_sign_changes": len(crossings)}
    return {"comparison": {"path": path, "kind": "sweep"}}, summary


def _run_beat_scan(config, run_dir):
    p = config.params
    coeffs = _coeffs(p)
    ms = bound_microstate(config.potential, config.grid, p["i"], coeffs,
                          units=config.units)
    model = DiscreteBeat(p["i"], p["j"], float(p.get("delta_alpha", 0.0)))
    freqs, power, peak, fbeat = velocity_beat_spectrum(
        ms, model, float(p.get("q0", 0.5 * (config.grid.q_min
                                            + config.grid.q_max))),
        n_periods=int(p.get("n_periods", 16)),
        n_per_period=int(p.get("n_per_period", 128)))
    path = os.path.join(run_dir, "beat_spectrum.csv")
    with open(path, "w") as fh:
        fh.write("# frequency,power\n")
        for f, pw in zip(freqs, power):
            fh.write("%.17g,%.17g\n" % (f, pw))
    summary = {"beat_period": 1.0 / fbeat, "beat_frequency": fbeat,
               "peak_frequency": peak,
               "peak_over_beat": peak / fbeat,
               "bin_width": float(freqs[1])}
    return {"spectrum": {"path": path, "kind": "sweep"}}, summary


def describe_scenario(config: ScenarioConfig):
    pot = config.potential
    lines = [
        f"potential: {type(pot).__name__} {pot}",
        f"spectrum class: {pot.spectrum_class().value}",
        f"units: hbar={config.units.hbar} mass={config.units.mass}",
        f"grid: [{config.grid.q_min}, {config.grid.q_max}] "
        f"x {config.grid.n_points}",
        f"task: {config.task} {config.params}",
    ]
    return "\n".join(lines)


def describe_run(registry: Registry, run_id):
    rec = registry.load(run_id)
    lines = [f"run {rec.run_id} ({rec.task}) created {rec.created}",
             f"scenario sha256: {rec.scenario_hash}"]
    for key in sorted(rec.summary):
        lines.append(f"  {key}: {_fmt(rec.summary[key])}")
    lines.append(f"artifacts: {', '.join(sorted(rec.artifacts))}")
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    if isinstance(v, list) and v and isinstance(v[0], float):
        return "[" + ", ".join(f"{x:.9g}" for x in v) + "]"
    return str(v)


def export_plot_data(registry: Registry, run_id, kind):
    """Paths of the run's artifacts matching an export kind."""
    if kind not in _EXPORT_KINDS:
        raise ConfigError(f"kind: unknown kind {kind!r}; choose from "
                          f"{_EXPORT_KINDS}")
    rec = registry.load(run_id)
    paths = rec.artifact_paths(kind)
    if not paths:
        have = [k for k in rec.kinds() if k in _EXPORT_KINDS]
        raise ConfigError(f"kind: run {run_id} has no {kind!r} artifacts; "
                          f"available kinds: {have}")
    return paths
