"""Numerical solution of the 1D stationary Schrodinger equation.

Numerov integration (4th order), two-sided shooting for bound eigenvalues,
independent solution pairs certified by their Wronskian, and analytic
scattering states for the step potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePair, DomainError, NotConverged
from .numerics import BOUNDARY_MARGIN, deriv1, deriv1_complex, interior_slice, simpson_weights
from .potentials import PotentialSpec, SpectrumClass, Step, evaluate_potential
from .units import NATURAL, UnitsConfig

#: flag threshold for the unbounded (non-normalizable) companion
_UNBOUNDED_SCALE = 1e100


@dataclass(frozen=True)
class Grid:
    q_min: float
    q_max: float
    n_points: int = 2001

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError("grid needs at least 3 points")
        if self.q_max <= self.q_min:
            raise ValueError("q_max must exceed q_min")

    @property
    def h(self):
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @property
    def points(self):
        return np.linspace(self.q_min, self.q_max, self.n_points)

    def index_of(self, q):
        """Nearest grid index to q."""
        i = int(round((q - self.q_min) / self.h))
        if i < 0 or i >= self.n_points:
            raise DomainError(f"q={q} outside grid [{self.q_min}, {self.q_max}]")
        return i


@dataclass
class WaveField:
    """Samples of a wave function and its spatial derivative on a grid."""

    grid: Grid
    values: np.ndarray
    derivative: np.ndarray
    unbounded: bool = False

    @classmethod
    def from_values(cls, grid, values):
        values = np.asarray(values)
        deriv = deriv1_complex(values, grid.h)
        unbounded = bool(np.nanmax(np.abs(values)) > _UNBOUNDED_SCALE)
        return cls(grid, values, deriv, unbounded)

    def write_csv(self, path):
        q = self.grid.points
        v = np.asarray(self.values, dtype=complex)
        d = np.asarray(self.derivative, dtype=complex)
        with open(path, "w") as fh:
            fh.write("# q,re,im,d_re,d_im\n")
            for i in range(q.size):
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                         % (q[i], v[i].real, v[i].imag, d[i].real, d[i].imag))


@dataclass
class SolutionPair:
    """Two independent real solutions at one energy, Wronskian-normalized."""

    phi: WaveField
    theta: WaveField
    wronskian: float
    energy: float
    spec: PotentialSpec = None
    units: UnitsConfig = NATURAL


@dataclass
class EigenSolution:
    index: int
    energy: float
    psi: WaveField            # square-integrable, unit L2 norm
    partner: WaveField = None  # unbounded companion


def _g_array(spec, E, grid, units):
    """g(q) = 2m(V - E)/hbar^2 so that psi'' = g psi."""
    v = evaluate_potential(spec, grid.points, units)
    return 2.0 * units.mass * (v - E) / units.hbar ** 2


def _taylor_step(y0, dy0, g, dg, ddg, h):
    """Single O(h^5) Taylor step for psi'' = g psi."""
    d2 = g * y0
    d3 = dg * y0 + g * dy0
    d4 = ddg * y0 + 2.0 * dg * dy0 + g * d2
    return y0 + h * dy0 + 0.5 * h * h * d2 + h ** 3 / 6.0 * d3 + h ** 4 / 24.0 * d4


def _numerov_march(g, h, y0, dy0):
    """March y'' = g y across the whole g array, starting from value/slope at
    index 0 (h may be negative for a reversed array)."""
    n = g.size
    y = np.empty(n)
    y[0] = y0
    if n == 1:
        return y
    # one-sided derivatives of g at the start for the Taylor first step
    if n >= 3:
        dg0 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h)
        ddg0 = (g[0] - 2.0 * g[1] + g[2]) / (h * h)
    else:
        dg0 = (g[1] - g[0]) / h
        ddg0 = 0.0
    y[1] = _taylor_step(y0, dy0, g[0], dg0, ddg0, h)
    c = h * h / 12.0
    for i in range(1, n - 1):
        y[i + 1] = (2.0 * y[i] * (1.0 + 5.0 * c * g[i])
                    - y[i - 1] * (1.0 - c * g[i - 1])) / (1.0 - c * g[i + 1])
    return y


def numerov_integrate(spec, E, grid, value0, slope0, direction="forward",
                      units=NATURAL):
    """4th-order Numerov solution of -hbar^2 psi''/(2m) + (V-E) psi = 0.

    Starts from (value0, slope0) at the grid edge selected by `direction`
    ("forward" = from q_min, "backward" = from q_max). Overflowing solutions
    are flagged unbounded rather than rejected: the non-normalizable partner
    legitimately grows.
    """
    g = _g_array(spec, E, grid, units)
    if direction == "forward":
        y = _numerov_march(g, grid.h, value0, slope0)
    elif direction == "backward":
        y = _numerov_march(g[::-1], -grid.h, value0, slope0)[::-1]
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    return WaveField.from_values(grid, y)


def _march_from_interior(g, h, i0, value0, slope0):
    """Solution over the full grid with value/slope given at interior index i0."""
    n = g.size
    y = np.empty(n)
    right = _numerov_march(g[i0:], h, value0, slope0)
    left = _numerov_march(g[: i0 + 1][::-1], -h, value0, slope0)[::-1]
    y[i0:] = right
    y[: i0 + 1] = left
    return y


def _count_interior_nodes(values, margin=1):
    v = values[margin:-margin] if margin else values
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _matching_index(spec, E, grid, units):
    """Rightmost classical turning point; domain midpoint when the whole
    domain is classically allowed (e.g. the infinite well)."""
    v = evaluate_potential(spec, grid.points, units)
    allowed = v <= E
    n = grid.n_points
    if not np.any(allowed):
        raise NotConverged(f"E={E} below the potential everywhere")
    i = n - 1 - int(np.argmax(allowed[::-1]))
    if i >= n - 1 - BOUNDARY_MARGIN:
        i = n // 2
    return max(i, BOUNDARY_MARGIN + 1)


def _shoot_node_count(spec, E, grid, units):
    g = _g_array(spec, E, grid, units)
    y = _numerov_march(g, grid.h, 0.0, 1.0)
    return _count_interior_nodes(y)


def _match_mismatch(spec, E, grid, units, i_m):
    """Discrete Wronskian of left- and right-shot solutions across the
    matching cell; zero exactly at a discrete eigenvalue."""
    g = _g_array(spec, E, grid, units)
    y_l = _numerov_march(g[: i_m + 2], grid.h, 0.0, 1.0)
    y_r = _numerov_march(g[i_m:][::-1], -grid.h, 0.0, 1.0)[::-1]
    a = y_l[i_m] * y_r[1] - y_l[i_m + 1] * y_r[0]
    scale = (np.max(np.abs(y_l[i_m:i_m + 2])) * np.max(np.abs(y_r[:2]))) or 1.0
    return a / scale


def _assemble_eigenfunction(spec, E, grid, units, i_m):
    g = _g_array(spec, E, grid, units)
    # overlap window so the glue ratio stays defined even when the matching
    # point falls on a node
    k = min(i_m + 8, grid.n_points - 1)
    y_l = _numerov_march(g[: k + 1], grid.h, 0.0, 1.0)
    y_r = _numerov_march(g[i_m:][::-1], -grid.h, 0.0, 1.0)[::-1]
    seg_l = y_l[i_m: k + 1]
    seg_r = y_r[: k + 1 - i_m]
    denom = float(seg_r @ seg_r)
    if denom == 0.0:
        raise NotConverged("right-shot solution vanished in the overlap window")
    ratio = float(seg_l @ seg_r) / denom
    y = np.empty(grid.n_points)
    y[: i_m + 1] = y_l[: i_m + 1]
    y[i_m:] = y_r * ratio
    # The glue leaves an O(tol) kink at i_m which third-derivative consumers
    # (the Schwarzian) would amplify by h^-2. Re-march a single solution from
    # an interior anchor so the result is one exact discrete solution.
    i_c = int(np.argmax(np.abs(y)))
    i_c = min(max(i_c, 2), grid.n_points - 3)
    slope = (-y[i_c + 2] + 8.0 * y[i_c + 1] - 8.0 * y[i_c - 1] + y[i_c - 2]) / (12.0 * grid.h)
    y = _march_from_interior(g, grid.h, i_c, y[i_c], slope)
    norm2 = simpson_weights(grid.n_points, grid.h) @ (y * y)
    y /= np.sqrt(norm2)
    if y[1] < 0:  # sign convention: positive initial slope
        y = -y
    return WaveField.from_values(grid, y)


def find_bound_eigenvalues(spec, grid, n_max, tol=1e-10, units=NATURAL,
                           with_partner=True):
    """Bound eigenvalues by two-sided shooting.

    Energy brackets come from node counting of the left-shot solution (the
    count increments exactly when E crosses a discrete eigenvalue); within a
    bracket the sign of the matching mismatch at the turning point is
    bisected to `tol`.

    Returns EigenSolutions ordered ascending. For Mixed spectra fewer than
    n_max states may exist; only the existing ones are returned.
    """
    sc = spec.spectrum_class()
    if sc not in (SpectrumClass.DISCRETE_BOUND, SpectrumClass.MIXED):
        raise NotConverged(f"{type(spec).__name__} has no discrete bound spectrum")
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = evaluate_potential(spec, grid.points, units)
    e_floor = float(np.min(v)) + 1e-12
    e_edge = float(min(v[0], v[-1]))
    bound_cap = e_edge if sc is SpectrumClass.MIXED else None

    scale = max(1.0, abs(e_floor))
    e_hi = e_floor + scale
    n_target = n_max
    # expand the scan until enough node-count transitions are enclosed
    for _ in range(200):
        if bound_cap is not None and e_hi >= bound_cap:
            e_hi = bound_cap * (1.0 - 1e-12)
            n_here = _shoot_node_count(spec, e_hi, grid, units)
            n_target = min(n_max, n_here)
            break
        if _shoot_node_count(spec, e_hi, grid, units) >= n_max:
            break
        e_hi *= 2.0
    else:
        raise NotConverged(
            f"no bracket for {n_max} bound states below E={e_hi:g}")

    solutions = []
    e_lo = e_floor
    for n in range(n_target):
        # bracket the (n -> n+1) node-count transition
        a, b = e_lo, e_hi
        if _shoot_node_count(spec, a, grid, units) > n:
            raise NotConverged(f"lost bracket for eigenvalue {n}")
        while _shoot_node_count(spec, b, grid, units) < n + 1:
            b = min(2 * b + scale, e_hi)
            if b >= e_hi:
                b = e_hi
                break
        width_stop = max(10.0 * tol, 1e-4 * max(1.0, abs(b)))
        while b - a > width_stop:
            mid = 0.5 * (a + b)
            if _shoot_node_count(spec, mid, grid, units) <= n:
                a = mid
            else:
                b = mid
        # refine on the matching-condition sign; the node-count transition
        # sits slightly above the eigenvalue (a node must clear the boundary
        # before it is counted), so expand the bracket downward until the
        # mismatch changes sign.
        i_m = _matching_index(spec, 0.5 * (a + b), grid, units)
        floor_n = solutions[-1].energy + tol if solutions else e_floor
        fa = _match_mismatch(spec, a, grid, units, i_m)
        fb = _match_mismatch(spec, b, grid, units, i_m)
        step = max(b - a, width_stop)
        while fa * fb > 0 and a > floor_n:
            a = max(a - step, floor_n)
            fa = _match_mismatch(spec, a, grid, units, i_m)
            step *= 2.0
        if fa * fb > 0:
            raise NotConverged(
                f"matching condition has no sign change near eigenvalue {n}")
        while b - a > tol:
            mid = 0.5 * (a + b)
            fm = _match_mismatch(spec, mid, grid, units, i_m)
            if fa * fm <= 0:
                b, fb = mid, fm
            else:
                a, fa = mid, fm
        e_n = 0.5 * (a + b)
        psi = _assemble_eigenfunction(spec, e_n, grid, units, i_m)
        partner = _center_partner(spec, e_n, grid, psi, units) if with_partner else None
        solutions.append(EigenSolution(index=n, energy=e_n, psi=psi, partner=partner))
        e_lo = b
    return solutions


def _center_partner(spec, E, grid, psi, units):
    """Independent companion started at mid-grid; generically unbounded."""
    g = _g_array(spec, E, grid, units)
    i_c = grid.n_points // 2
    # pick the start maximizing independence from psi at the anchor
    v0, d0 = psi.values[i_c], psi.derivative[i_c]
    if abs(v0) >= abs(d0) * grid.h:
        y = _march_from_interior(g, grid.h, i_c, 0.0, 1.0)
    else:
        y = _march_from_interior(g, grid.h, i_c, 1.0, 0.0)
    return WaveField.from_values(grid, y)


def wronskian_field(pair):
    """W(q) = phi theta' - phi' theta sampled over the grid."""
    return (pair.phi.values * pair.theta.derivative
            - pair.phi.derivative * pair.theta.values)


def wronskian_constancy(pair, cond_limit=1e8):
    """Max relative deviation of the Wronskian over the well-conditioned
    interior.

    Points where the two products cancel catastrophically (condition number
    beyond cond_limit) carry no information in float64 and are skipped, as is
    the boundary margin where only one-sided derivatives exist.
    """
    w = wronskian_field(pair)
    mag = (np.abs(pair.phi.values * pair.theta.derivative)
           + np.abs(pair.phi.derivative * pair.theta.values))
    sl = interior_slice(w.size)
    w0 = pair.wronskian
    ok = mag[sl] < cond_limit * abs(w0)
    if not np.any(ok):
        raise DegeneratePair("no well-conditioned points for Wronskian check")
    return float(np.max(np.abs(w[sl][ok] - w0)) / abs(w0))


def solution_pair(spec, E, grid, units=NATURAL):
    """A Wronskian-normalized pair (phi, theta) of independent real solutions.

    For discrete/mixed spectra below the edge potential, phi is the two-sided
    (square-integrable when E is an eigenvalue) solution and theta a
    mid-grid-started companion, which keeps the Wronskian well conditioned in
    classically forbidden tails. For continuous spectra both start from the
    left edge. The pair is jointly rescaled so W(phi,theta) = sqrt(2m)/hbar.
    """
    g = _g_array(spec, E, grid, units)
    sc = spec.spectrum_class()
    v = evaluate_potential(spec, grid.points, units)
    if sc is SpectrumClass.DISCRETE_BOUND:
        bound_like = True
    elif sc is SpectrumClass.MIXED:
        bound_like = E < min(v[0], v[-1])
    else:
        bound_like = False
    if bound_like:
        i_m = _matching_index(spec, E, grid, units)
        phi = _assemble_eigenfunction(spec, E, grid, units, i_m)
        theta = _center_partner(spec, E, grid, phi, units)
    else:
        phi = WaveField.from_values(grid, _numerov_march(g, grid.h, 0.0, 1.0))
        theta = WaveField.from_values(grid, _numerov_march(g, grid.h, 1.0, 0.0))
    return normalize_pair(phi, theta, E, spec, units)


def normalize_pair(phi, theta, E, spec=None, units=NATURAL):
    """Rescale (phi, theta) jointly to the module convention
    W(phi, theta) = sqrt(2m)/hbar; raises DegeneratePair when dependent."""
    w = phi.values * theta.derivative - phi.derivative * theta.values
    sl = interior_slice(w.size)
    mag = (np.abs(phi.values * theta.derivative)
           + np.abs(phi.derivative * theta.values))[sl]
    w0 = float(np.median(w[sl]))
    if abs(w0) < 1e-12 * max(1.0, float(np.median(mag))):
        raise DegeneratePair(f"Wronskian {w0:g} below independence threshold")
    target = np.sqrt(2.0 * units.mass) / units.hbar
    if w0 < 0:
        theta = WaveField(theta.grid, -theta.values, -theta.derivative,
                          theta.unbounded)
        w0 = -w0
    lam = np.sqrt(target / w0)
    phi = WaveField(phi.grid, lam * phi.values, lam * phi.derivative, phi.unbounded)
    theta = WaveField(theta.grid, lam * theta.values, lam * theta.derivative,
                      theta.unbounded)
    return SolutionPair(phi=phi, theta=theta, wronskian=target, energy=E,
                        spec=spec, units=units)


@dataclass
class ScatteringState:
    """Analytic plane-wave state for the step potential."""

    field: WaveField
    energy: float
    reflection: complex
    transmission: complex
    k_left: float
    k_right: complex


def scattering_state(spec: Step, E, grid=None, units=NATURAL):
    """Piecewise plane-wave solution of the step potential.

    For E > V0: exp(i k1 q) + r exp(-i k1 q) on the left, t exp(i k2 q) on the
    right, matched at q = 0. For E < V0 the right side is evanescent; |r| = 1.
    """
    if E <= 0:
        raise ValueError("scattering requires E > 0")
    if grid is None:
        lo, hi = spec.domain()
        grid = Grid(lo, hi, 2001)
    m, hbar = units.mass, units.hbar
    k1 = np.sqrt(2.0 * m * E) / hbar
    if E >= spec.height:
        k2 = np.sqrt(2.0 * m * (E - spec.height)) / hbar + 0.0j
    else:
        k2 = 1j * np.sqrt(2.0 * m * (spec.height - E)) / hbar
    r = (k1 - k2) / (k1 + k2)
    t = 2.0 * k1 / (k1 + k2)
    q = grid.points
    left = q < 0.0
    psi = np.empty(q.size, dtype=complex)
    dpsi = np.empty(q.size, dtype=complex)
    psi[left] = np.exp(1j * k1 * q[left]) + r * np.exp(-1j * k1 * q[left])
    dpsi[left] = 1j * k1 * (np.exp(1j * k1 * q[left])
                            - r * np.exp(-1j * k1 * q[left]))
    psi[~left] = t * np.exp(1j * k2 * q[~left])
    dpsi[~left] = 1j * k2 * t * np.exp(1j * k2 * q[~left])
    fld = WaveField(grid, psi, dpsi)
    return ScatteringState(field=fld, energy=E, reflection=complex(r),
                           transmission=complex(t), k_left=float(k1), k_right=complex(k2))


def probability_current(psi: WaveField, units=NATURAL):
    """j = (hbar/m) Im(psi* psi'); finite at nodes (no division)."""
    return (units.hbar / units.mass) * np.imag(np.conj(psi.values) * psi.derivative)
