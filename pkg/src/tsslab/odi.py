"""Superlinear ODI machinery: comparison barrier, doubling window, exponents,
and empirical constants measured on recorded trajectories.

Scalar formulas accept Python ints and :class:`fractions.Fraction` and then
compute exactly; floats and numpy arrays go through floating point.
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DomainError, UsageError

__all__ = [
    "ExponentTable",
    "exponents",
    "odi_exponent",
    "comparison_bound",
    "blowup_time",
    "doubling_constant",
    "doubling_window",
    "time_derivative",
    "estimate_K",
    "check_term_estimates",
    "OdiConstantEstimator",
    "TERM_EXPONENTS",
    "DEFAULT_ETAS",
]

DEFAULT_ETAS = (0.1, 0.25, 0.5)


def _exact(x):
    return Fraction(x) if isinstance(x, Rational) else x


@dataclass(frozen=True)
class ExponentTable:
    """Integrability and growth exponents for ``(p, alpha)``.

    ``s1, s2``: integrability of ``y1``, ``y2``; ``theta1, theta2_lower``:
    growth exponents of the uncoupled ODIs; ``mu = s1 / s2``;
    ``theta1_mu = (theta1 - 1) / mu + 1``; ``theta``: exponent of the
    combined ODI for ``y = y1^mu + y2 + 1``.
    """

    p: object
    alpha: object
    s1: object
    s2: object
    theta1: object
    theta2_lower: object
    mu: object
    theta1_mu: object
    theta: object

    @property
    def uncoupled_dimension_bounds(self):
        """``(1 - s1 / (theta1 - 1), 1 - s2 / (theta2_lower - 1))``."""
        return 1 - self.s1 / (self.theta1 - 1), 1 - self.s2 / (self.theta2_lower - 1)

    def as_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}


def odi_exponent(mu):
    """``max{(3 mu + 2) / (3 mu), 3, 1 / (2 mu)}``."""
    mu = _exact(mu)
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    return max((3 * mu + 2) / (3 * mu), 3, 1 / (2 * mu))


def exponents(p, alpha):
    """Exponent bookkeeping for ``p in (3/2, 3]`` and ``alpha in (1/2, 1]``."""
    p, alpha = _exact(p), _exact(alpha)
    if not (Fraction(3, 2) < p <= 3):
        raise DomainError(f"p must lie in (3/2, 3], got {p}")
    if not (Fraction(1, 2) < alpha <= 1):
        raise DomainError(f"alpha must lie in (1/2, 1], got {alpha}")
    s1 = 2 / (3 * (p - 1))
    s2 = 1 / alpha
    theta1 = (2 * p - 1) / (2 * p - 3)
    theta2 = (alpha + Fraction(1, 2)) / (alpha - Fraction(1, 2))
    mu = s1 / s2
    return ExponentTable(
        p=p, alpha=alpha, s1=s1, s2=s2, theta1=theta1, theta2_lower=theta2,
        mu=mu, theta1_mu=(theta1 - 1) / mu + 1, theta=odi_exponent(mu),
    )


# -- comparison principle ------------------------------------------------------


def _check_odi(K, sigma):
    if np.any(np.asarray(sigma) <= 1):
        raise DomainError(f"sigma must exceed 1, got {sigma}")
    if np.any(np.asarray(K) <= 0):
        raise DomainError(f"K must be positive, got {K}")


def blowup_time(z0, K, sigma):
    """Time after which the barrier ceases to exist: ``z0^{1-sigma} / (K (sigma-1))``."""
    _check_odi(K, sigma)
    return np.power(z0, 1.0 - sigma) / (K * (sigma - 1.0))


def comparison_bound(z0, K, sigma, dt):
    """Barrier ``(z0^{1-sigma} - K (sigma-1) dt)^{1/(1-sigma)}`` for ``z' <= K z^sigma``.

    Returns ``inf`` once ``dt`` reaches the blow-up time.  Vectorizes over
    numpy inputs.
    """
    _check_odi(K, sigma)
    z0 = np.asarray(z0, dtype=float)
    if np.any(z0 <= 0):
        raise DomainError("z0 must be positive")
    if np.any(np.asarray(dt) < 0):
        raise DomainError("dt must be nonnegative")
    base = np.power(z0, 1.0 - sigma) - K * (sigma - 1.0) * np.asarray(dt, dtype=float)
    # overflow near the blow-up time is a legitimate +inf
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(base > 0, np.power(np.where(base > 0, base, 1.0), 1.0 / (1.0 - sigma)), np.inf)
    return out if out.ndim else float(out)


def doubling_constant(K, sigma):
    """``C = (1 - 2^{1-sigma}) / (K (sigma - 1))``."""
    _check_odi(K, sigma)
    return (1.0 - np.power(2.0, 1.0 - sigma)) / (K * (sigma - 1.0))


def doubling_window(z0, K, sigma):
    """Time ``C z0^{1-sigma}`` over which an ODI solution can at most double."""
    if np.any(np.asarray(z0) <= 0):
        raise DomainError("z0 must be positive")
    return doubling_constant(K, sigma) * np.power(z0, 1.0 - sigma)


# -- empirical verification ------------------------------------------------


def time_derivative(values, h):
    """Second-order derivative: centered inside, one-sided at the ends."""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise UsageError("need at least 3 samples to differentiate")
    return np.gradient(values, h, edge_order=2)


def estimate_K(traj_or_y, sigma=3.0, h=None):
    """Smallest ``K`` with ``y' <= K y^sigma`` at every interior sample.

    Accepts a :class:`~tsslab.diagnostics.Trajectory` (uses its ``y``
    column and spacing) or a raw array with explicit ``h``.  Negative slopes
    impose nothing, so monotone decreasing data give 0.
    """
    y, h = _series(traj_or_y, "y", h)
    if y.size < 3:
        raise UsageError("estimate_K needs at least 3 samples")
    dy = time_derivative(y, h)[1:-1]
    ratio = np.maximum(dy, 0.0) / np.power(y[1:-1], sigma)
    return float(np.max(ratio))


def _series(traj_or_y, column, h):
    if hasattr(traj_or_y, "columns") and hasattr(traj_or_y, "h"):
        return traj_or_y[column], traj_or_y.h
    if h is None:
        raise UsageError("sampling step h is required for raw arrays")
    return np.asarray(traj_or_y, dtype=float), float(h)


# Right-hand exponents per term estimate, as functions of mu.
TERM_EXPONENTS = {
    "energy_inequality": None,
    "cell_chemotaxis": lambda mu: (3 * mu + 2) / (3 * mu),
    "advection_stretch": lambda mu: 3.0,
    "signal_transport": lambda mu: 3.0,
    "buoyancy": lambda mu: 1.0 / (2 * mu),
}

_TERM_COLUMNS = ("y", "y1", "diss_n", "diss_c", "diss_u", "n3_gc2", "n2_gc4", "gc6_gu",
                 "adv_stretch", "buoy_forcing")


def _y1_weight(y1, mu):
    with np.errstate(divide="ignore"):
        return np.where(y1 > 0, np.power(np.where(y1 > 0, y1, 1.0), mu - 1.0), 0.0)


def _first_estimate_constant(dy, a, b):
    """Smallest ``C >= 0`` with ``dy + a / C <= C b`` at every sample."""
    worst = 0.0
    for d, ai, bi in zip(dy, a, b):
        if bi > 0:
            c = (d + math.sqrt(d * d + 4 * ai * bi)) / (2 * bi)
        elif ai > 0:
            c = ai / -d if d < 0 else math.inf
        else:
            c = 0.0 if d <= 0 else math.inf
        worst = max(worst, c)
    return worst


def check_term_estimates(traj, etas=DEFAULT_ETAS, mu=None):
    """Empirical constants of the five estimates behind the ODI for ``y``.

    For every ``eta`` returns, per term estimate, the smallest ``C`` for which the
    estimate holds at all samples:

    * ``energy_inequality``: ``y' + y1^{mu-1}(diss_n + diss_c)/C + diss_u/C
      <= C [y1^{mu-1}(n3_gc2 + n2_gc4 + gc6_gu) + |adv| + |buoy|]``
      (independent of ``eta``; ``y'`` by second-order differences)
    * ``cell_chemotaxis``: ``y1^{mu-1}(n3_gc2 + n2_gc4) <= eta y1^{mu-1}(diss_n + diss_c) + C y^{(3mu+2)/(3mu)}``
    * ``advection_stretch``: ``|adv_stretch| <= eta diss_u + C y^3``
    * ``signal_transport``: ``y1^{mu-1} gc6_gu <= eta y1^{mu-1} diss_c + C y^3``
    * ``buoyancy``: ``|buoy_forcing| <= eta diss_u + C y^{1/(2mu)}``
    """
    traj.require(*_TERM_COLUMNS)
    if mu is None:
        mu = float(traj.metadata.get("mu", 1.0 / 3.0))
    cols = {k: traj[k] for k in _TERM_COLUMNS}
    if any(np.any(~np.isfinite(v)) for v in cols.values()):
        raise UsageError("cross-term columns contain non-finite values")
    y = cols["y"]
    w = _y1_weight(cols["y1"], mu)
    adv = np.abs(cols["adv_stretch"])
    buoy = np.abs(cols["buoy_forcing"])

    dy = time_derivative(y, traj.h)
    # differences of a flat series are pure round-off
    dy = np.where(np.abs(dy) <= 1e-12 * np.max(np.abs(y)) / traj.h, 0.0, dy)
    c31 = _first_estimate_constant(
        dy,
        w * (cols["diss_n"] + cols["diss_c"]) + cols["diss_u"],
        w * (cols["n3_gc2"] + cols["n2_gc4"] + cols["gc6_gu"]) + adv + buoy,
    )

    def smallest(lhs, dissipation, eta, exponent):
        excess = np.maximum(lhs - eta * dissipation, 0.0)
        return float(np.max(excess / np.power(y, exponent)))

    report = {}
    for eta in etas:
        report[float(eta)] = {
            "energy_inequality": c31,
            "cell_chemotaxis": smallest(w * (cols["n3_gc2"] + cols["n2_gc4"]),
                                  w * (cols["diss_n"] + cols["diss_c"]), eta,
                                  TERM_EXPONENTS["cell_chemotaxis"](mu)),
            "advection_stretch": smallest(adv, cols["diss_u"], eta, 3.0),
            "signal_transport": smallest(w * cols["gc6_gu"], w * cols["diss_c"], eta, 3.0),
            "buoyancy": smallest(buoy, cols["diss_u"], eta, TERM_EXPONENTS["buoyancy"](mu)),
        }
    return report


class OdiConstantEstimator(BaseEstimator):
    """Fit the empirical superlinearity constant of ``y' <= K y^sigma``.

    Parameters
    ----------
    sigma : float, default=3.0
        Exponent of the inequality.

    Attributes
    ----------
    K_ : float
        Smallest admissible constant over interior samples.
    doubling_constant_ : float
        ``(1 - 2^{1-sigma}) / (K_ (sigma - 1))``; ``inf`` when ``K_ == 0``.
    window_exponent_ : float
        ``sigma - 1``, the exponent ``a`` of the window ``C z^{-a}``.
    """

    def __init__(self, sigma=3.0):
        self.sigma = sigma

    def fit(self, X, y=None, h=None):
        """``X`` is a trajectory, or a 1-D array of samples with spacing ``h``."""
        if not self.sigma > 1:
            raise DomainError(f"sigma must exceed 1, got {self.sigma}")
        self.K_ = estimate_K(X, self.sigma, h=h)
        self.window_exponent_ = self.sigma - 1.0
        self.doubling_constant_ = (
            float(doubling_constant(self.K_, self.sigma)) if self.K_ > 0 else math.inf
        )
        return self

    def predict(self, X, dt=0.0):
        """Comparison barrier after ``dt`` starting from values ``X``."""
        check_is_fitted(self, "K_")
        if self.K_ == 0:
            return np.asarray(X, dtype=float)
        return comparison_bound(X, self.K_, self.sigma, dt)

    def window(self, z0):
        check_is_fitted(self, "K_")
        if self.K_ == 0:
            return np.full(np.shape(z0), np.inf) if np.ndim(z0) else math.inf
        return doubling_window(z0, self.K_, self.sigma)
