"""Covering criterion for temporal singular sets.

A sampled function ``z >= 1`` together with the window rule
``(t, t + C z(t)^{-a}) subset E`` for ``t in E`` determines, from seed times,
a regular set ``E``; its complement is covered by intervals of length at
most ``delta`` and the Hausdorff pre-measure ``sum len^d`` is tabulated
against ``delta``.

Everything works at sampling resolution: a sample is regular or singular,
a singular component is a maximal run of singular samples, and its cover
starts at the regular sample immediately to its left.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError, UsageError

__all__ = [
    "dimension_bound",
    "RegularSet",
    "CoverEstimate",
    "SyntheticSpec",
    "SyntheticTrajectory",
    "propagate_regular_set",
    "cover_singular_set",
    "premeasure",
    "premeasure_table",
    "optimal_premeasure",
    "decay_slope",
    "verdict",
    "box_counting",
    "cantor_endpoints",
    "synthesize",
    "HausdorffCoverEstimator",
    "BoxCountingDimension",
    "CONSISTENT",
    "INCONCLUSIVE",
]

CONSISTENT = "consistent with H^d = 0"
INCONCLUSIVE = "inconclusive"


def dimension_bound(s, a):
    """Exponent ``1 - s/a`` of the vanishing Hausdorff measure (needs ``a > s > 0``)."""
    if isinstance(s, Rational) and isinstance(a, Rational):
        s, a = Fraction(s), Fraction(a)
    if not (s > 0 and a > s):
        raise DomainError(f"criterion needs a > s > 0, got s={s}, a={a}")
    return 1 - s / a


# -- regular set ------------------------------------------------------------


@dataclass
class RegularSet:
    """Sampled regular set on ``(0, T)``.

    ``intervals`` are disjoint open intervals (merged windows), ``regular``
    flags each sample, ``tail`` is the optional threshold after which every
    time counts as regular.
    """

    T: float
    t: np.ndarray
    regular: np.ndarray
    intervals: list
    tail: float = None
    warnings: list = field(default_factory=list)

    @property
    def singular(self):
        return ~self.regular

    @property
    def measure(self):
        return float(sum(r - l for l, r in self.intervals))

    def components(self):
        """Index runs ``(k0, k1)`` of consecutive singular samples."""
        sing = self.singular.astype(np.int8)
        if not sing.any():
            return []
        edges = np.diff(np.concatenate([[0], sing, [0]]))
        starts = np.flatnonzero(edges == 1)
        stops = np.flatnonzero(edges == -1) - 1
        return list(zip(starts.tolist(), stops.tolist()))

    def singular_times(self):
        return self.t[self.singular]


def _cell_max(z):
    zc = z.copy()
    zc[:-1] = np.maximum(z[:-1], z[1:])
    return zc


def _seed_mask(t, seeds):
    mask = np.zeros(t.size, dtype=bool)
    if seeds is None:
        return mask
    seeds = np.asarray(seeds)
    if seeds.dtype == bool:
        if seeds.shape != t.shape:
            raise UsageError("boolean seed mask must match the sampling grid")
        return seeds.copy()
    h = t[1] - t[0]
    idx = np.ceil((np.asarray(seeds, dtype=float) - t[0]) / h - 1e-9).astype(int)
    idx = idx[(idx >= 0) & (idx < t.size)]
    mask[idx] = True
    return mask


def propagate_regular_set(t, z, C, a, seeds=None, tail=None):
    """Close seed times under the forward window rule.

    Parameters
    ----------
    t, z : array_like
        Uniform sample times and values ``z >= 1``.
    C, a : float
        Window ``C z^{-a}``; within a sampling cell the larger endpoint value
        of ``z`` is used, so windows are never overestimated.
    seeds : array_like of times, boolean mask, or None
        Times known to be regular.  ``None`` or empty gives an empty regular
        set (with a warning recorded).
    tail : float, optional
        Every time beyond ``tail`` is declared regular.
    """
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if t.shape != z.shape or t.ndim != 1 or t.size < 2:
        raise UsageError("t and z must be 1-D arrays of equal length >= 2")
    if np.any(z < 1):
        raise UsageError("z must be >= 1 at every sample")
    if not (C > 0 and a > 0):
        raise DomainError("C and a must be positive")
    T = float(t[-1])
    seed = _seed_mask(t, seeds)
    warnings = []
    if not seed.any() and tail is None:
        warnings.append("no seeds given: regular set is empty")
    width = C * np.power(_cell_max(z), -a)

    regular = np.zeros(t.size, dtype=bool)
    ends = np.empty(t.size)
    reach = -math.inf
    tail_ = math.inf if tail is None else float(tail)
    for k in range(t.size):
        tk = t[k]
        if seed[k] or tk < reach or tk > tail_:
            regular[k] = True
            e = tk + width[k]
            ends[k] = e
            if e > reach:
                reach = e

    intervals = []
    for k in np.flatnonzero(regular):
        lo, hi = t[k], min(ends[k], T)
        if intervals and lo <= intervals[-1][1]:
            if hi > intervals[-1][1]:
                intervals[-1][1] = hi
        elif hi > lo:
            intervals.append([lo, hi])
    if tail is not None and tail_ < T:
        while intervals and intervals[-1][0] > tail_:
            intervals.pop()
        if intervals and intervals[-1][1] >= tail_:
            intervals[-1][1] = T
            # absorb earlier intervals that the tail overlaps
            while len(intervals) > 1 and intervals[-2][1] >= intervals[-1][0]:
                last = intervals.pop()
                intervals[-1][1] = max(intervals[-1][1], last[1])
        else:
            intervals.append([tail_, T])
    return RegularSet(T, t, regular, [tuple(iv) for iv in intervals], tail, warnings)


# -- covers -------------------------------------------------------------------


@dataclass
class CoverEstimate:
    """Finite cover of a candidate singular set by intervals of length ``<= delta``."""

    intervals: list
    delta: float
    d: float
    premeasure: float
    boundary: bool = False

    @property
    def lengths(self):
        return np.array([ln for _, ln in self.intervals], dtype=float)

    def covers(self, times):
        """True where each time lies in the closed union of cover intervals."""
        times = np.asarray(times, dtype=float)
        hit = np.zeros(times.shape, dtype=bool)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(times)))) if times.size else 0.0
        for left, length in self.intervals:
            hit |= (times >= left - tol) & (times <= left + length + tol)
        return hit


def premeasure(cover, d):
    """``sum len^d`` over the cover's intervals."""
    if d < 0:
        raise DomainError(f"dimension exponent must be nonnegative, got {d}")
    lengths = cover.lengths if isinstance(cover, CoverEstimate) else np.asarray(cover, dtype=float)
    if lengths.size == 0:
        return 0.0
    return float(np.sum(np.power(lengths, d)))


def cover_singular_set(regular_set, delta, d=0.5):
    """Greedy left-anchored cover of the complement of ``regular_set``.

    Components are swept left to right.  An interval opens at the regular
    sample immediately left of the first uncovered component and absorbs
    following components while its length stays ``<= delta``.  A component
    whose own anchored extent exceeds ``delta`` is split into
    ``ceil(L / delta)`` equal pieces.  A component touching ``t = 0`` is
    anchored at 0 and flagged via ``boundary``.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    t = regular_set.t
    comps = regular_set.components()
    h = t[1] - t[0]
    intervals = []
    boundary = False
    i = 0
    while i < len(comps):
        k0, k1 = comps[i]
        if k0 == 0:
            boundary = True
            anchor = t[0]
        else:
            anchor = t[k0 - 1]
        end = t[k1]
        # a lone singular sample at t = 0 still gets one sampling cell
        length = max(end - anchor, h)
        if length > delta:
            pieces = math.ceil(length / delta * (1 - 1e-12))
            step = length / pieces
            intervals.extend((anchor + j * step, step) for j in range(pieces))
            i += 1
            continue
        j = i
        while j + 1 < len(comps) and t[comps[j + 1][1]] - anchor <= delta:
            j += 1
        end = t[comps[j][1]]
        intervals.append((anchor, max(end - anchor, h)))
        i = j + 1
    cover = CoverEstimate(intervals, float(delta), float(d), 0.0, boundary)
    cover.premeasure = premeasure(cover, d)
    return cover


def optimal_premeasure(regular_set, delta, d):
    """Smallest ``sum len^d`` over covers by intervals of length ``<= delta``
    that group consecutive components, each group anchored like the greedy
    sweep.  Dynamic programming; serves as a lower reference for
    :func:`cover_singular_set`."""
    if d < 0:
        raise DomainError(f"dimension exponent must be nonnegative, got {d}")
    t = regular_set.t
    comps = regular_set.components()
    if not comps:
        return 0.0
    left = np.array([t[max(k0 - 1, 0)] for k0, _ in comps])
    right = np.maximum([t[k1] for _, k1 in comps], left + (t[1] - t[0]))
    best = np.full(len(comps) + 1, math.inf)
    best[0] = 0.0
    for j in range(1, len(comps) + 1):
        own = right[j - 1] - left[j - 1]
        if own > delta:
            pieces = math.ceil(own / delta * (1 - 1e-12))
            best[j] = best[j - 1] + pieces * (own / pieces) ** d
            continue
        i = j - 1
        while i >= 0 and right[j - 1] - left[i] <= delta:
            best[j] = min(best[j], best[i] + (right[j - 1] - left[i]) ** d)
            i -= 1
    return float(best[-1])


def premeasure_table(regular_set, deltas, d):
    """Pre-measures at exponent ``d`` for each mesh in ``deltas``."""
    return [cover_singular_set(regular_set, delta, d).premeasure for delta in deltas]


def decay_slope(deltas, values):
    """Least-squares slope ``b`` of ``log P`` against ``log delta`` (``P ~ delta^b``).

    Returns ``inf`` when every pre-measure vanishes and ``nan`` when only
    some do.
    """
    deltas = np.asarray(deltas, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.all(values == 0):
        return math.inf
    if np.any(values <= 0) or values.size < 2:
        return math.nan
    return float(np.polyfit(np.log(deltas), np.log(values), 1)[0])


def verdict(deltas, values, noise=0.1):
    """Classify a pre-measure table.

    ``CONSISTENT`` when every pre-measure vanishes, or when the fitted trend
    is non-increasing as ``delta`` shrinks (slope ``>= 0`` in log-log) and no
    finer mesh exceeds the coarsest one by more than ``noise``.  Greedy
    covers jitter with the mesh phase, so single steps are not compared.
    """
    deltas = np.asarray(deltas, dtype=float)
    order = np.argsort(deltas)[::-1]
    vals = np.asarray(values, dtype=float)[order]
    if np.all(vals == 0):
        return CONSISTENT
    slope = decay_slope(deltas[order], vals)
    if np.isnan(slope) and np.all(vals[1:] <= (1 + noise) * vals[0]):
        return CONSISTENT
    if slope >= -1e-9 and np.all(vals[1:] <= (1 + noise) * vals[0]):
        return CONSISTENT
    return INCONCLUSIVE


def box_counting(points, scales, origin=0.0):
    """Box-counting dimension of a finite point set.

    Counts occupied boxes ``floor((x - origin) / s)`` at each scale and fits
    ``log N`` against ``log(1/s)``.
    """
    pts = np.asarray(points, dtype=float).ravel()
    scales = np.asarray(scales, dtype=float)
    if pts.size == 0:
        raise UsageError("box counting needs a nonempty set")
    if scales.size < 2 or np.any(scales <= 0):
        raise UsageError("need at least two positive scales")
    counts = np.array([np.unique(np.floor((pts - origin) / s + 1e-9)).size for s in scales])
    slope = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)[0]
    return float(slope)


# -- synthetic harness ---------------------------------------------------------


def cantor_endpoints(level, ratio=1.0 / 3.0, left=0.0, length=1.0):
    """Sorted endpoints of the level-``level`` intervals of a Cantor construction.

    Each interval keeps its two outer subintervals of relative length ``ratio``.
    """
    if level < 0 or not 0 < ratio < 0.5:
        raise DomainError("level must be >= 0 and ratio in (0, 1/2)")
    lefts = np.array([0.0])
    width = 1.0
    for _ in range(int(level)):
        width_next = width * ratio
        lefts = np.concatenate([lefts, lefts + width - width_next])
        width = width_next
    lefts.sort()
    pts = np.concatenate([lefts, lefts + width])
    return left + length * np.sort(pts)


@dataclass(frozen=True)
class SyntheticSpec:
    """Profile ``z(t) = baseline + sum_i |t - sigma_i|^{-beta}``, capped at ``cap``.

    Singular points come from ``points`` or, when ``cantor_level`` is set,
    from a Cantor construction placed on ``[cantor_left, cantor_left +
    cantor_length]``.  ``s`` optionally requests an ``L^s`` certificate,
    which exists only when ``s * beta < 1``.
    """

    T: float = 1.0
    h: float = 1e-4
    beta: float = 0.6
    baseline: float = 1.0
    cap: float = 1e4
    points: tuple = ()
    cantor_level: int = None
    cantor_ratio: float = 1.0 / 3.0
    cantor_left: float = 0.1
    cantor_length: float = 0.5
    s: float = None
    tail: float = None


@dataclass
class SyntheticTrajectory:
    """Sampled synthetic profile with its ground-truth singular points."""

    spec: SyntheticSpec
    t: np.ndarray
    z: np.ndarray
    singular_points: np.ndarray

    @property
    def h(self):
        return self.spec.h

    def seeds(self):
        """Samples strictly below the cap count as known-regular times."""
        return self.z < self.spec.cap

    def to_trajectory(self):
        from .diagnostics import Trajectory

        meta = {
            "synthetic": True, "beta": self.spec.beta, "baseline": self.spec.baseline,
            "cap": self.spec.cap, "singular_points": self.singular_points.size,
        }
        if self.spec.tail is not None:
            meta["tail"] = self.spec.tail
        return Trajectory.from_arrays(self.t, meta, z=self.z, y=self.z)


def synthesize(spec):
    """Sample the synthetic profile described by ``spec``."""
    if not spec.beta > 0:
        raise DomainError("beta must be positive")
    if not spec.baseline >= 1:
        raise DomainError("baseline must be >= 1")
    if not spec.cap > spec.baseline:
        raise DomainError("cap must exceed the baseline")
    if spec.s is not None and spec.s * spec.beta >= 1:
        raise DomainError(
            f"s * beta = {spec.s * spec.beta:g} >= 1: the uncapped profile is not in L^s, "
            "so no L^s certificate exists"
        )
    if spec.cantor_level is not None:
        pts = cantor_endpoints(spec.cantor_level, spec.cantor_ratio, spec.cantor_left, spec.cantor_length)
    else:
        pts = np.sort(np.asarray(spec.points, dtype=float))
    n = int(round(spec.T / spec.h))
    t = np.arange(n + 1) * spec.h
    z = np.full(t.shape, float(spec.baseline))
    if pts.size:
        # nearest singular point dominates; add the others in chunks to bound memory
        excess = np.zeros_like(t)
        for chunk in np.array_split(pts, max(1, pts.size // 64)):
            dist = np.abs(t[:, None] - chunk[None, :])
            with np.errstate(divide="ignore"):
                excess += np.sum(np.power(dist, -spec.beta), axis=1)
        z = np.minimum(z + excess, spec.cap)
    return SyntheticTrajectory(spec, t, z, pts)


# -- estimators -----------------------------------------------------------------


def _as_series(X, y, column):
    if hasattr(X, "columns") and hasattr(X, "h"):
        return X.t, X[column]
    if isinstance(X, SyntheticTrajectory):
        return X.t, X.z
    if y is None:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise UsageError("pass (t, z) as two arrays, an (n, 2) array, or a trajectory")
        return X[:, 0], X[:, 1]
    return np.asarray(X, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()


class HausdorffCoverEstimator(BaseEstimator):
    """Propagate the regular set of a sampled ``z`` and tabulate pre-measures.

    Parameters
    ----------
    s : float
        Integrability exponent of ``z``.
    a : float
        Window exponent in ``C z^{-a}``.
    C : float
        Window constant.
    deltas : sequence of float
        Cover meshes, typically successive halvings.
    d : float or None
        Exponent for the pre-measure; ``None`` uses ``1 - s/a``.
    seed_below : float or None
        Samples with ``z < seed_below`` are seeds; ``None`` seeds only ``t[0]``.
    tail : float or None
        Times beyond ``tail`` are regular.
    column : str
        Trajectory column holding ``z``.

    Attributes
    ----------
    dimension_ : float
    regular_set_ : RegularSet
    covers_ : list of CoverEstimate
    premeasures_ : ndarray
    slope_ : float
    verdict_ : str
    """

    def __init__(self, s=1.0, a=2.0, C=1.0, deltas=(0.1, 0.05, 0.025, 0.0125, 0.00625),
                 d=None, seed_below=None, tail=None, column="y"):
        self.s = s
        self.a = a
        self.C = C
        self.deltas = deltas
        self.d = d
        self.seed_below = seed_below
        self.tail = tail
        self.column = column

    def fit(self, X, y=None):
        t, z = _as_series(X, y, self.column)
        self.dimension_ = float(dimension_bound(self.s, self.a))
        d = self.dimension_ if self.d is None else float(self.d)
        self.exponent_ = d
        seeds = np.array([t[0]]) if self.seed_below is None else (z < self.seed_below)
        self.regular_set_ = propagate_regular_set(t, z, self.C, self.a, seeds=seeds, tail=self.tail)
        self.ls_norm_ = float(np.trapezoid(np.power(z, self.s), t) ** (1.0 / self.s))
        self.covers_ = [cover_singular_set(self.regular_set_, delta, d) for delta in self.deltas]
        self.premeasures_ = np.array([c.premeasure for c in self.covers_])
        self.slope_ = decay_slope(self.deltas, self.premeasures_)
        self.verdict_ = verdict(self.deltas, self.premeasures_)
        return self

    def transform(self, X=None, d=None):
        """Pre-measure table at exponent ``d`` (default: the fitted exponent)."""
        check_is_fitted(self, "covers_")
        d = self.exponent_ if d is None else d
        return np.array([premeasure(c, d) for c in self.covers_])

    def report(self):
        check_is_fitted(self, "covers_")
        return {
            "s": float(self.s),
            "a": float(self.a),
            "C": float(self.C),
            "d": self.dimension_,
            "exponent": self.exponent_,
            "ls_norm": self.ls_norm_,
            "regular_measure": self.regular_set_.measure,
            "singular_samples": int(np.count_nonzero(self.regular_set_.singular)),
            "singular_components": len(self.regular_set_.components()),
            "premeasure_table": [
                {"delta": float(c.delta), "premeasure": float(c.premeasure), "intervals": len(c.intervals)}
                for c in self.covers_
            ],
            "decay_slope": self.slope_,
            "boundary_interval": any(c.boundary for c in self.covers_),
            "warnings": list(self.regular_set_.warnings),
            "verdict": self.verdict_,
        }


class BoxCountingDimension(BaseEstimator):
    """Box-counting dimension of a finite point set on the line."""

    def __init__(self, scales=None, origin=0.0):
        self.scales = scales
        self.origin = origin

    def fit(self, X, y=None):
        pts = np.asarray(X, dtype=float).ravel()
        scales = self.scales
        if scales is None:
            span = float(np.ptp(pts)) or 1.0
            scales = span * 2.0 ** -np.arange(2, 12)
        self.scales_ = np.asarray(scales, dtype=float)
        self.dimension_ = box_counting(pts, self.scales_, self.origin)
        return self
