"""Radial computational domain, R^N quadrature, and potential admissibility.

The solvers in this package work on radial functions of ``r = |x|`` for
``x`` in R^N, truncated to ``[0, r_max]`` with a Dirichlet condition at
``r_max``.  This module owns three things:

* :class:`RadialPotential` -- an evaluator ``q(r)`` plus the radius ``R0``
  beyond which ``q`` is nondecreasing, with builtins and a CSV loader;
* :func:`validate_class_P` -- a sampled surrogate for the admissibility
  condition (positivity, eventual monotonicity, and geometric decay of the
  dyadic tail segments of the integral of ``q**-0.5``, which fails exactly
  at quadratic growth);
* :class:`Grid` / :func:`build_grid` / :func:`make_grid` -- uniform node
  layout with per-node weights for the full R^N volume integral, so that a
  grid function normalized under :meth:`Grid.integrate` is L2-normalized
  over R^N, surface area of the unit sphere included.

For ``N >= 2`` the nodes are ``r_i = i*h``, ``i = 1..n`` with
``h = r_max/(n+1)``; the origin and ``r_max`` are not nodes.  For ``N = 1``
the domain is the symmetric interval ``[-r_max, r_max]`` reduced by parity:
the grid keeps an explicit node at the origin (weight ``h`` versus ``2h``
elsewhere) so that even-sector functions carry a genuine value at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MalformedInput, NonPositivePotential, NotIncreasing, UnboundedSearch

#: default multiple of the spectral scale that q(r_max) must reach
TRUNCATION_FACTOR = 4.0

#: default geometric-decay requirement between consecutive dyadic tail segments
TAIL_DECAY_FACTOR = 0.9

#: hard cap for the truncation-radius search
R_MAX_CAP = 1.0e4


def sphere_area(space_dim: int) -> float:
    """Surface area of the unit sphere in R^N (2 for N=1, 2*pi for N=2, ...)."""
    return 2.0 * math.pi ** (space_dim / 2.0) / math.gamma(space_dim / 2.0)


@dataclass(frozen=True)
class RadialPotential:
    """A radial potential q(r), positive and eventually increasing.

    Parameters
    ----------
    evaluator : callable
        Vectorized map from radii (ndarray, r >= 0) to potential values.
    r0 : float
        Radius beyond which q is nondecreasing.  The potential is
        dimension-independent; the same object serves any N.
    name : str
        Label used in reports and output files.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    r0: float = 0.0
    name: str = "custom"

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(r, dtype=float)), dtype=float)


def power_potential(c: float, s: float, r0: float = 1.0) -> RadialPotential:
    """q(r) = c + r**s.  Positive for c > 0, increasing everywhere for s > 0."""
    if c <= 0 or s <= 0:
        raise MalformedInput("power potential needs c > 0 and s > 0")
    return RadialPotential(lambda r: c + r**s, r0=r0, name=f"power(c={c:g},s={s:g})")


def exp_potential(r0: float = 0.0) -> RadialPotential:
    """q(r) = exp(r)."""
    return RadialPotential(lambda r: np.exp(r), r0=r0, name="exp")


def tabulated_potential(path: str, r0: float | None = None) -> RadialPotential:
    """Load a potential from a two-column CSV with header ``r,q``.

    Radii must be strictly increasing.  Evaluation interpolates linearly
    inside the table and extends the last segment's slope beyond it (a
    nonpositive end slope then fails class validation naturally).  When
    ``r0`` is not given it defaults to the first tabulated radius from
    which the values are nondecreasing.
    """
    try:
        raw = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise MalformedInput(f"cannot read potential table: {exc}") from exc
    if raw.dtype.names is None or tuple(raw.dtype.names[:2]) != ("r", "q"):
        raise MalformedInput("potential table must have header 'r,q'")
    r_tab = np.atleast_1d(raw["r"]).astype(float)
    q_tab = np.atleast_1d(raw["q"]).astype(float)
    if r_tab.size < 2:
        raise MalformedInput("potential table needs at least two rows")
    if not np.all(np.diff(r_tab) > 0):
        raise MalformedInput("potential table radii must be strictly increasing")

    end_slope = (q_tab[-1] - q_tab[-2]) / (r_tab[-1] - r_tab[-2])

    def evaluate(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        inside = np.interp(r, r_tab, q_tab)
        return np.where(r > r_tab[-1], q_tab[-1] + end_slope * (r - r_tab[-1]), inside)

    if r0 is None:
        drops = np.nonzero(np.diff(q_tab) < 0)[0]
        r0 = float(r_tab[drops[-1] + 1]) if drops.size else float(r_tab[0])
    return RadialPotential(evaluate, r0=float(r0), name="table")


@dataclass(frozen=True)
class ClassPReport:
    """Outcome of :func:`validate_class_P`.

    ``passed`` is the headline verdict; the tail fields expose the two
    dyadic segments of the integral of ``q**-0.5`` so a caller can see how
    close a potential came to the quadratic borderline.
    """

    passed: bool
    monotone_ok: bool
    tail_near: float
    tail_far: float
    tail_below_tol: bool
    decay_ok: bool
    r_test: float
    tol: float
    decay_factor: float


def validate_class_P(
    pot: RadialPotential,
    r_test: float,
    tol: float,
    decay_factor: float = TAIL_DECAY_FACTOR,
    samples: int = 4096,
) -> ClassPReport:
    """Check a potential against the admissibility class on ``[0, r_test]``.

    Positivity is required at every sample; monotonicity from ``pot.r0``
    on.  Integrability of ``q**-0.5`` is certified by a sampled surrogate:
    the segment integral over ``[r_test/2, r_test]`` must be below ``tol``
    and at most ``decay_factor`` times the previous dyadic segment
    ``[r_test/4, r_test/2]``.  Quadratic growth gives segment ratio -> 1
    and fails; any strictly super-quadratic power passes for large
    ``r_test``.

    Raises
    ------
    NonPositivePotential
        If any sampled q(r) <= 0.
    NotIncreasing
        If q decreases beyond r0 by more than float slack.
    """
    if r_test <= 2.0 * pot.r0:
        raise MalformedInput("r_test must exceed 2*r0")
    if tol <= 0:
        raise MalformedInput("tol must be positive")

    r = np.linspace(0.0, r_test, samples)
    q = pot(r)
    if np.any(q <= 0.0):
        bad = float(r[np.argmax(q <= 0.0)])
        raise NonPositivePotential(f"q(r) <= 0 near r = {bad:.6g}")

    beyond = r >= pot.r0
    q_tail = q[beyond]
    # tiny relative slack so flat potentials survive rounding
    drops = np.diff(q_tail) < -1e-12 * np.abs(q_tail[:-1])
    monotone_ok = not np.any(drops)
    if not monotone_ok:
        where = float(r[beyond][:-1][drops][0])
        raise NotIncreasing(f"q decreases beyond r0 near r = {where:.6g}")

    def segment(lo: float, hi: float) -> float:
        rs = np.linspace(lo, hi, 2049)
        mid = 0.5 * (rs[:-1] + rs[1:])
        return float(np.sum(pot(mid) ** -0.5) * (rs[1] - rs[0]))

    tail_near = segment(r_test / 4.0, r_test / 2.0)
    tail_far = segment(r_test / 2.0, r_test)
    tail_below_tol = tail_far < tol
    decay_ok = tail_far <= decay_factor * tail_near
    return ClassPReport(
        passed=bool(monotone_ok and tail_below_tol and decay_ok),
        monotone_ok=monotone_ok,
        tail_near=tail_near,
        tail_far=tail_far,
        tail_below_tol=tail_below_tol,
        decay_ok=decay_ok,
        r_test=float(r_test),
        tol=float(tol),
        decay_factor=float(decay_factor),
    )


@dataclass(frozen=True)
class Grid:
    """Uniform radial grid with R^N quadrature weights.

    Attributes
    ----------
    space_dim : int
        Dimension N >= 1.
    r_max : float
        Truncation radius (Dirichlet boundary).
    n : int
        Number of interior nodes strictly inside (0, r_max).  For N = 1 the
        node array additionally contains the origin, so ``len(r) == n + 1``
        there and ``len(r) == n`` otherwise.
    h : float
        Spacing r_max/(n+1).
    r : ndarray
        Node radii.
    quad_weights : ndarray
        Per-node weights; ``sum(w * f(r))`` approximates the integral of
        the radial function f over R^N (over the ball of radius r_max).
    """

    space_dim: int
    r_max: float
    n: int
    h: float
    r: np.ndarray
    quad_weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of a grid function against the R^N volume measure."""
        return float(np.dot(self.quad_weights, values))

    def norm(self, values: np.ndarray) -> float:
        """L2 norm over R^N under the grid quadrature."""
        return math.sqrt(max(self.integrate(np.asarray(values) ** 2), 0.0))

    def ball_volume(self) -> float:
        """Closed-form volume of the ball of radius r_max (quadrature oracle)."""
        return sphere_area(self.space_dim) * self.r_max**self.space_dim / self.space_dim

    def truncation_margin(self, pot: RadialPotential, spectral_scale: float) -> float:
        """q(r_max)/spectral_scale; adequacy means this exceeds the factor in use."""
        return float(pot(np.array([self.r_max]))[0] / spectral_scale)


def make_grid(space_dim: int, r_max: float, n: int) -> Grid:
    """Construct a grid directly from (N, r_max, n)."""
    if space_dim < 1:
        raise MalformedInput("space_dim must be >= 1")
    if r_max <= 0 or n < 2:
        raise MalformedInput("need r_max > 0 and n >= 2")
    h = r_max / (n + 1)
    area = sphere_area(space_dim)
    if space_dim == 1:
        # origin node folds the two half-lines: half weight there
        r = np.arange(0, n + 1) * h
        w = np.full(n + 1, area * h)
        w[0] = 0.5 * area * h
    else:
        r = np.arange(1, n + 1) * h
        w = area * r ** (space_dim - 1) * h
    if not np.all(w > 0):
        raise MalformedInput("quadrature weights must be positive")
    return Grid(space_dim=space_dim, r_max=float(r_max), n=int(n), h=float(h), r=r, quad_weights=w)


def build_grid(
    pot: RadialPotential,
    space_dim: int,
    spectral_scale: float,
    points_per_unit: float = 200.0,
    truncation_factor: float = TRUNCATION_FACTOR,
) -> Grid:
    """Choose r_max from the potential and build the grid.

    ``r_max`` is the smallest radius with
    ``q(r_max) >= truncation_factor * spectral_scale`` (located by scan plus
    bisection); ``n = ceil(points_per_unit * r_max)``.  ``spectral_scale``
    should be an a-priori upper estimate of the largest spectral quantity in
    use (second eigenvalue plus window width), so that the Dirichlet
    truncation sits deep in the classically forbidden region.

    Raises
    ------
    UnboundedSearch
        If no radius below the hard cap reaches the threshold.
    """
    if spectral_scale <= 0:
        raise MalformedInput("spectral_scale must be positive")
    target = truncation_factor * spectral_scale

    hi = 1.0
    while float(pot(np.array([hi]))[0]) < target:
        hi *= 2.0
        if hi > R_MAX_CAP:
            raise UnboundedSearch(
                f"q never reaches {target:g} below r = {R_MAX_CAP:g}"
            )
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(pot(np.array([mid]))[0]) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-9:
            break
    r_max = hi
    n = int(math.ceil(points_per_unit * r_max))
    return make_grid(space_dim, r_max, max(n, 2))
