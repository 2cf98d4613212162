"""Declarative scenario configs for the batch front end.

A scenario is one YAML file: units, a potential, a grid, one task and its
parameters. Validation failures raise ConfigError carrying the offending
field path, so a typo in a nested key is reported as e.g.
"trajectory.integrator.method".
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .microstates import MicrostateCoefficients
from .potentials import (Constant, FiniteWell, Harmonic, InfiniteWell,
                         PotentialSpec, Step, Tabulated)
from .schrodinger import Grid
from .units import UnitsConfig

TASKS = ("solve", "microstate", "dtde_sweep", "trajectory", "compare",
         "beat_scan")

_FAMILIES = {
    "constant": (Constant, ("v", "q_min", "q_max")),
    "infinite_well": (InfiniteWell, ("length",)),
    "harmonic": (Harmonic, ("omega", "q_min", "q_max")),
    "finite_well": (FiniteWell, ("length", "depth", "pad")),
    "step": (Step, ("height", "q_min", "q_max")),
    "tabulated": (Tabulated, ("qs", "vs")),
}


@dataclass
class ScenarioConfig:
    task: str
    potential: PotentialSpec
    units: UnitsConfig
    grid: Grid
    params: dict
    out_dir: str = "runs"
    seed: int = 0
    raw: dict = field(default_factory=dict, repr=False)

    def canonical(self):
        """Deterministic serialization of the config for hashing."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _need(mapping, key, path, types=None):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    v = mapping[key]
    if types is not None and not isinstance(v, types):
        raise ConfigError(f"{path}.{key}: expected {types}, got {type(v).__name__}")
    return v


def _build_potential(node):
    if not isinstance(node, dict):
        raise ConfigError("potential: expected a mapping")
    family = _need(node, "family", "potential", str)
    if family not in _FAMILIES:
        raise ConfigError(f"potential.family: unknown family {family!r}; "
                          f"choose from {sorted(_FAMILIES)}")
    cls, fields = _FAMILIES[family]
    kwargs = {}
    for k, v in node.items():
        if k == "family":
            continue
        if k not in fields:
            raise ConfigError(f"potential.{k}: not a field of {family}")
        kwargs[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"potential: {exc}") from exc


def _build_units(node):
    if node is None:
        return UnitsConfig()
    if not isinstance(node, dict):
        raise ConfigError("units: expected a mapping")
    try:
        return UnitsConfig(hbar=float(node.get("hbar", 1.0)),
                           mass=float(node.get("mass", 1.0)))
    except ValueError as exc:
        raise ConfigError(f"units: {exc}") from exc


def _build_grid(node, potential):
    lo, hi = potential.domain()
    n = 2001
    if node is not None:
        if not isinstance(node, dict):
            raise ConfigError("grid: expected a mapping")
        n = node.get("n_points", 2001)
        if not isinstance(n, int) or n < 3:
            raise ConfigError("grid.n_points: expected an integer >= 3")
        lo = float(node.get("q_min", lo))
        hi = float(node.get("q_max", hi))
    try:
        return Grid(lo, hi, n)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def validate_coefficients(node, path):
    if not (isinstance(node, (list, tuple)) and len(node) in (2, 3)):
        raise ConfigError(f"{path}: expected [a, b] or [a, b, c]")
    try:
        return MicrostateCoefficients(*[float(x) for x in node])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except Exception as exc:  # InvalidCoefficients
        raise ConfigError(f"{path}: {exc}") from exc


def load_scenario(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return scenario_from_dict(raw)


def scenario_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("scenario: expected a top-level mapping")
    task = _need(raw, "task", "scenario", str)
    if task not in TASKS:
        raise ConfigError(f"task: unknown task {task!r}; choose from {TASKS}")
    potential = _build_potential(_need(raw, "potential", "scenario", dict))
    units = _build_units(raw.get("units"))
    grid = _build_grid(raw.get("grid"), potential)
    params = raw.get(task, {})
    if params is None:
        params = {}
    if not isinstance(params, dict):
        raise ConfigError(f"{task}: expected a mapping of task parameters")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed: expected an integer")
    out_dir = raw.get("out_dir", "runs")
    if not isinstance(out_dir, str):
        raise ConfigError("out_dir: expected a string")
    _validate_task_params(task, params, potential)
    return ScenarioConfig(task=task, potential=potential, units=units,
                          grid=grid, params=params, out_dir=out_dir,
                          seed=seed, raw=raw)


def _validate_task_params(task, params, potential):
    p = dict(params)
    if task == "solve":
        n = p.get("n_max", 3)
        if not isinstance(n, int) or n < 1:
            raise ConfigError("solve.n_max: expected an integer >= 1")
    elif task == "microstate":
        if "label" not in p and "energy" not in p:
            raise ConfigError("microstate: needs 'label' (bound) or 'energy' "
                              "(unbound)")
        validate_coefficients(p.get("coefficients", [1.0, 1.0, 0.0]),
                              "microstate.coefficients")
    elif task == "dtde_sweep":
        for k in ("i", "j"):
            if not isinstance(p.get(k), int):
                raise ConfigError(f"dtde_sweep.{k}: expected an eigenlabel integer")
        if p["i"] == p["j"]:
            raise ConfigError("dtde_sweep.j: must differ from dtde_sweep.i")
        validate_coefficients(p.get("coefficients", [1.0, 1.0, 0.0]),
                              "dtde_sweep.coefficients")
        if "q" not in p:
            raise ConfigError("dtde_sweep.q: missing probe position")
    elif task == "trajectory":
        rule = p.get("rule", "floyd")
        if rule not in ("floyd", "bohm"):
            raise ConfigError("trajectory.rule: expected 'floyd' or 'bohm'")
        if "q0" not in p:
            raise ConfigError("trajectory.q0: missing initial position(s)")
        span = p.get("t_span", [0.0, 1.0])
        if not (isinstance(span, (list, tuple)) and len(span) == 2
                and span[1] > span[0]):
            raise ConfigError("trajectory.t_span: expected [t0, t1] with t1 > t0")
        model = p.get("model", {"kind": "classical"})
        kind = model.get("kind") if isinstance(model, dict) else None
        if kind not in ("classical", "continuum", "discrete"):
            raise ConfigError("trajectory.model.kind: expected classical, "
                              "continuum or discrete")
        if kind == "discrete":
            for k in ("i", "j"):
                if not isinstance(model.get(k), int):
                    raise ConfigError(f"trajectory.model.{k}: expected an "
                                      "eigenlabel integer")
        integ = p.get("integrator", {})
        if integ and integ.get("method", "rk45") not in ("rk45", "rk4"):
            raise ConfigError("trajectory.integrator.method: expected rk45 or rk4")
    elif task == "compare":
        if "energy" not in p:
            raise ConfigError("compare.energy: missing scattering energy")
        if "q0" not in p:
            raise ConfigError("compare.q0: missing initial position")
    elif task == "beat_scan":
        for k in ("i", "j"):
            if not isinstance(p.get(k), int):
                raise ConfigError(f"beat_scan.{k}: expected an eigenlabel integer")
        validate_coefficients(p.get("coefficients", [1.0, 1.0, 0.0]),
                              "beat_scan.coefficients")
