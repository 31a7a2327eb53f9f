"""
Time-scaling schedules and damping parameters.

Three schedule families are provided:

* ``constant``     beta(t) = beta0
* ``exponential``  beta(t) = beta0 * exp(rate * (t - t0))
* ``polynomial``   beta(t) = beta0 * (t / t0) ** rate   (needs t0 > 0)

The flow is guaranteed to dissipate its energy when
``beta_dot <= beta / delta`` and ``1 / delta < gamma``;
`validate_scaling` checks the (optionally strengthened) condition on a grid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

FAMILIES = ("constant", "exponential", "polynomial")


@dataclass(frozen=True)
class ScalingSchedule:
    family: str = "constant"
    beta0: float = 1.0
    rate: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown schedule family {self.family!r}; expected one of {FAMILIES}")
        if not self.beta0 > 0:
            raise UsageError(f"beta0 must be positive, got {self.beta0}")
        if self.family == "polynomial" and not self.t0 > 0:
            raise UsageError("polynomial schedules need t0 > 0")
        for name in ("beta0", "rate", "t0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def exponential_equality(cls, delta, beta0=1.0, t0=0.0):
        """The schedule ``mu exp(t / delta)`` with ``beta(t0) = beta0``."""
        return cls("exponential", beta0, 1.0 / delta, t0)


@dataclass(frozen=True)
class DampingParams:
    """Viscous damping ``gamma``, extrapolation ``delta`` and penalty ``sigma``.

    ``sigma = 0`` is accepted and gives the pure-Lagrangian flow.
    """

    gamma: float = 2.0
    delta: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0 or not self.delta > 0:
            raise UsageError(f"gamma and delta must be positive, got {self.gamma}, {self.delta}")
        if not self.sigma >= 0:
            raise UsageError(f"sigma must be nonnegative, got {self.sigma}")
        for name in ("gamma", "delta", "sigma"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def guaranteed(self):
        """``gamma * delta > 1``."""
        return self.gamma * self.delta > 1.0


def _check_time(s, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < s.t0):
        raise UsageError(f"time {np.min(t)} precedes schedule start t0={s.t0}")
    return t


def _scalar_or_array(t, out):
    return float(out) if np.ndim(t) == 0 else out


def beta(s, t):
    """Scaling coefficient beta(t); accepts scalars or arrays."""
    tt = _check_time(s, t)
    if s.family == "constant":
        out = np.full_like(tt, s.beta0)
    elif s.family == "exponential":
        out = s.beta0 * np.exp(s.rate * (tt - s.t0))
    else:
        out = s.beta0 * (tt / s.t0) ** s.rate
    return _scalar_or_array(t, out)


def beta_dot(s, t):
    """Analytic time derivative of `beta`."""
    tt = _check_time(s, t)
    if s.family == "constant":
        out = np.zeros_like(tt)
    elif s.family == "exponential":
        out = s.rate * (s.beta0 * np.exp(s.rate * (tt - s.t0)))
    else:
        out = s.rate * s.beta0 * tt ** (s.rate - 1.0) / s.t0 ** s.rate
    return _scalar_or_array(t, out)


def beta_functions(s):
    """Unchecked scalar closures ``(beta, beta_dot)`` for inner loops."""
    b0, r, t0 = s.beta0, s.rate, s.t0
    exp = np.exp
    if s.family == "constant":
        return (lambda t: b0), (lambda t: 0.0)
    if s.family == "exponential":
        def b(t):
            return b0 * exp(r * (t - t0))

        def bd(t):
            return r * (b0 * exp(r * (t - t0)))
        return b, bd

    def b(t):
        return b0 * (t / t0) ** r

    def bd(t):
        return r * b0 * t ** (r - 1.0) / t0 ** r
    return b, bd


@dataclass(frozen=True)
class ScalingReport:
    satisfied: bool
    worst_margin: float
    worst_t: float
    damping_ok: bool
    positive: bool


def validate_scaling(s, d, horizon, kappa=0.0, n_grid=1000, rtol=1e-12):
    """Check ``beta_dot <= (1 - kappa) beta / delta`` and ``1/delta < gamma``.

    The growth condition is evaluated on ``n_grid`` uniform points of
    ``horizon = (t0, T)`` (endpoints included).  ``worst_margin`` is the
    largest value of ``beta_dot - (1 - kappa) beta / delta`` on the grid; a
    point counts as satisfied when its margin is at most ``rtol * beta``.
    ``kappa = 0`` gives the plain condition.
    """
    t_lo, t_hi = map(float, horizon)
    if not t_hi > t_lo:
        raise UsageError(f"empty horizon [{t_lo}, {t_hi}]")
    if not 0.0 <= kappa <= 1.0:
        raise UsageError(f"kappa must lie in [0, 1], got {kappa}")
    grid = np.linspace(t_lo, t_hi, max(int(n_grid), 2))
    b = beta(s, grid)
    margin = beta_dot(s, grid) - (1.0 - kappa) * (1.0 / d.delta) * b
    k = int(np.argmax(margin))
    positive = bool(np.all(b > 0) and np.all(np.isfinite(b)))
    growth_ok = bool(np.all(margin <= rtol * np.abs(b)))
    damping_ok = d.guaranteed
    return ScalingReport(
        satisfied=growth_ok and damping_ok and positive,
        worst_margin=float(margin[k]),
        worst_t=float(grid[k]),
        damping_ok=damping_ok,
        positive=positive,
    )
