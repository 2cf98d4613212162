"""Catalog of 1D potentials with analytic spectral oracles.

Every potential carries a finite working domain. The infinite well is realised
exactly as a finite interval [0, L] with Dirichlet walls rather than as a
large-V approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .units import NATURAL, UnitsConfig


class SpectrumClass(Enum):
    DISCRETE_BOUND = "discrete_bound"
    CONTINUOUS = "continuous"
    MIXED = "mixed"


@dataclass(frozen=True)
class PotentialSpec:
    """Base class; concrete families override evaluation and the oracle."""

    def domain(self) -> tuple[float, float]:
        raise NotImplementedError

    def spectrum_class(self) -> SpectrumClass:
        raise NotImplementedError

    def value(self, q):
        raise NotImplementedError

    def analytic_spectrum(self, n_max: int, units: UnitsConfig = NATURAL):
        """First n_max bound eigenvalues in closed form, or None when the
        family has no discrete analytic spectrum."""
        return None

    def ground_state_label(self) -> int:
        """Conventional quantum number of the lowest bound state (0 for most
        families; the infinite well counts from 1)."""
        return 0


@dataclass(frozen=True)
class Constant(PotentialSpec):
    v: float = 0.0
    q_min: float = -20.0
    q_max: float = 20.0

    def domain(self):
        return (self.q_min, self.q_max)

    def spectrum_class(self):
        return SpectrumClass.CONTINUOUS

    def value(self, q):
        return np.full_like(np.asarray(q, dtype=float), self.v)


@dataclass(frozen=True)
class InfiniteWell(PotentialSpec):
    """V = 0 on [0, L]; the walls are the domain edges (Dirichlet)."""

    length: float = 1.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("well width must be positive")

    def domain(self):
        return (0.0, self.length)

    def spectrum_class(self):
        return SpectrumClass.DISCRETE_BOUND

    def value(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))

    def analytic_spectrum(self, n_max, units=NATURAL):
        n = np.arange(1, n_max + 1)
        return (n * np.pi * units.hbar / self.length) ** 2 / (2.0 * units.mass)

    def ground_state_label(self):
        return 1


@dataclass(frozen=True)
class Harmonic(PotentialSpec):
    omega: float = 1.0
    q_min: float = -8.0
    q_max: float = 8.0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("omega must be positive")

    def domain(self):
        return (self.q_min, self.q_max)

    def spectrum_class(self):
        return SpectrumClass.DISCRETE_BOUND

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * NATURAL.mass * self.omega ** 2 * q ** 2

    def value_with_units(self, q, units):
        q = np.asarray(q, dtype=float)
        return 0.5 * units.mass * self.omega ** 2 * q ** 2

    def analytic_spectrum(self, n_max, units=NATURAL):
        n = np.arange(0, n_max)
        return (n + 0.5) * units.hbar * self.omega


@dataclass(frozen=True)
class FiniteWell(PotentialSpec):
    """V = 0 inside |q| <= L/2, V = depth outside; bound states 0 < E < depth."""

    length: float = 1.0
    depth: float = 10.0
    pad: float = 6.0  # domain extends pad beyond each wall

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("well width must be positive")
        if self.depth <= 0:
            raise ValueError("well depth must be positive")

    def domain(self):
        half = 0.5 * self.length + self.pad
        return (-half, half)

    def spectrum_class(self):
        return SpectrumClass.MIXED

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(np.abs(q) <= 0.5 * self.length, 0.0, self.depth)

    def analytic_spectrum(self, n_max, units=NATURAL):
        return finite_well_levels(self, n_max, units)


@dataclass(frozen=True)
class Step(PotentialSpec):
    """V = 0 for q < 0, V = height for q >= 0."""

    height: float = 1.0
    q_min: float = -20.0
    q_max: float = 20.0

    def domain(self):
        return (self.q_min, self.q_max)

    def spectrum_class(self):
        return SpectrumClass.CONTINUOUS

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return np.where(q < 0.0, 0.0, self.height)


@dataclass(frozen=True)
class Tabulated(PotentialSpec):
    """Piecewise-linear interpolation of (q, V) samples."""

    qs: tuple = field(default=())
    vs: tuple = field(default=())

    def __post_init__(self):
        qs = np.asarray(self.qs, dtype=float)
        if qs.size < 2:
            raise ValueError("tabulated potential needs at least two samples")
        if np.any(np.diff(qs) <= 0):
            raise ValueError("tabulated samples must be strictly increasing in q")
        if len(self.qs) != len(self.vs):
            raise ValueError("qs and vs must have equal length")

    def domain(self):
        return (float(self.qs[0]), float(self.qs[-1]))

    def spectrum_class(self):
        return SpectrumClass.MIXED

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return np.interp(q, self.qs, self.vs)


def evaluate_potential(spec: PotentialSpec, q, units: UnitsConfig = NATURAL):
    """V(q), raising DomainError outside the working domain."""
    q_arr = np.asarray(q, dtype=float)
    lo, hi = spec.domain()
    tol = 1e-12 * max(1.0, abs(hi - lo))
    if np.any(q_arr < lo - tol) or np.any(q_arr > hi + tol):
        raise DomainError(f"q outside domain [{lo}, {hi}]")
    if isinstance(spec, Harmonic):
        out = spec.value_with_units(q_arr, units)
    else:
        out = spec.value(q_arr)
    return out if np.ndim(q) else float(out)


def analytic_spectrum(spec: PotentialSpec, n_max: int, units: UnitsConfig = NATURAL):
    """Closed-form bound spectrum oracle (None when unavailable)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return spec.analytic_spectrum(n_max, units)


def finite_well_levels(spec: FiniteWell, n_max: int, units: UnitsConfig = NATURAL,
                       tol: float = 1e-12):
    """Bound levels of the finite well from the even/odd transcendental
    equations, solved by bisection.

    Even states: k tan(k L/2) = kappa; odd states: -k cot(k L/2) = kappa,
    with k = sqrt(2mE)/hbar and kappa = sqrt(2m(V0-E))/hbar.
    """
    m, hbar = units.mass, units.hbar
    half = 0.5 * spec.length

    def k_of(e):
        return math.sqrt(2.0 * m * e) / hbar

    def kappa_of(e):
        return math.sqrt(2.0 * m * (spec.depth - e)) / hbar

    def f_even(e):
        k = k_of(e)
        return k * math.tan(k * half) - kappa_of(e)

    def f_odd(e):
        k = k_of(e)
        return -k / math.tan(k * half) - kappa_of(e)

    # Each branch of tan/cot holds at most one root; walk the branch edges.
    def branch_edges(parity):
        # singularities of f: k*half = (j + 1/2)*pi for even, j*pi for odd
        edges = [0.0]
        j = 0
        while True:
            kh = (j + 0.5) * math.pi if parity == "even" else (j + 1.0) * math.pi
            e = (kh / half * hbar) ** 2 / (2.0 * m)
            if e >= spec.depth:
                break
            edges.append(e)
            j += 1
        edges.append(spec.depth)
        return edges

    levels = []
    for parity, f in (("even", f_even), ("odd", f_odd)):
        edges = branch_edges(parity)
        for lo, hi in zip(edges[:-1], edges[1:]):
            eps = 1e-9 * (hi - lo) + 1e-300
            a, b = lo + eps, hi - eps
            fa, fb = f(a), f(b)
            if fa * fb > 0:
                continue
            while b - a > tol:
                mid = 0.5 * (a + b)
                if mid <= a or mid >= b:  # hit float resolution
                    break
                if fa * f(mid) <= 0:
                    b = mid
                else:
                    a, fa = mid, f(mid)
            levels.append(0.5 * (a + b))
    levels.sort()
    return np.asarray(levels[:n_max])
