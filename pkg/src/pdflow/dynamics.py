"""
Vector field of the inertial primal-dual flow

    x'' + gamma x' = -beta(t) (grad f(x) + A'lam + sigma A'(Ax - b)) + eps(t)
    lam'           =  beta(t) (A(x + delta x') - b)

written as a first-order system in ``(x, v, lam)`` with ``v = x'``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DimensionError, NumericalError, UsageError
from .scaling import beta as _beta
from .scaling import beta_functions

PERTURBATION_FAMILIES = ("zero", "power_decay", "exponential_decay", "custom")


def _finite_vector(a, name):
    a = np.array(a, dtype=float)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains non-finite entries", term=name)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FlowState:
    """Position ``x``, velocity ``v``, multiplier ``lam`` at time ``t``."""

    x: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _finite_vector(self.x, "x"))
        object.__setattr__(self, "v", _finite_vector(self.v, "v"))
        object.__setattr__(self, "lam", _finite_vector(self.lam, "lambda"))
        if self.x.shape != self.v.shape:
            raise DimensionError(f"x and v differ in shape: {self.x.shape} vs {self.v.shape}")
        if not np.isfinite(self.t):
            raise NumericalError("time is not finite", term="t")
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_vector(cls, y, n, t):
        return cls(y[:n], y[n:2 * n], y[2 * n:], t)

    def to_vector(self):
        return np.concatenate([self.x, self.v, self.lam])


@dataclass(frozen=True, eq=False)
class FlowDerivative:
    dx: np.ndarray
    dv: np.ndarray
    dlambda: np.ndarray


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Additive disturbance ``eps(t) = eps0 * profile(t - t0) * e_direction``.

    Families
    --------
    zero
        ``eps = 0``.
    power_decay
        ``profile(s) = (1 + s) ** -power``; integrable iff ``power > 1``.
    exponential_decay
        ``profile(s) = exp(-rate * s)`` with ``rate > 0``.
    custom
        ``oracle(t)`` returns the full vector; integrability is whatever
        ``claims_integrable`` says.
    """

    family: str = "zero"
    eps0: float = 1.0
    power: float = 2.0
    rate: float = 1.0
    direction: int = 0
    t0: float = 0.0
    oracle: Optional[Callable[[float], np.ndarray]] = None
    custom_integrable: bool = False

    def __post_init__(self):
        if self.family not in PERTURBATION_FAMILIES:
            raise UsageError(f"unknown perturbation family {self.family!r}")
        if self.family == "custom" and self.oracle is None:
            raise UsageError("custom perturbations need an oracle")
        if self.family == "exponential_decay" and not self.rate > 0:
            raise UsageError("exponential_decay needs rate > 0")
        if self.direction < 0:
            raise UsageError("direction index must be nonnegative")

    @property
    def is_zero(self):
        return self.family == "zero" or (self.family != "custom" and self.eps0 == 0.0)

    @property
    def claims_integrable(self):
        if self.family == "power_decay":
            return self.power > 1.0 or self.eps0 == 0.0
        if self.family == "custom":
            return bool(self.custom_integrable)
        return True

    def profile(self, t):
        """Scalar time profile ``||eps(t)||`` for the separable families."""
        s = np.asarray(t, dtype=float) - self.t0
        if self.family == "zero":
            out = np.zeros_like(s)
        elif self.family == "power_decay":
            out = abs(self.eps0) * (1.0 + s) ** (-self.power)
        elif self.family == "exponential_decay":
            out = abs(self.eps0) * np.exp(-self.rate * s)
        else:
            raise UsageError("custom perturbations have no scalar profile")
        return float(out) if np.ndim(t) == 0 else out


def eval_perturbation(eps, t, n):
    """Value of ``eps(t)`` in R^n."""
    if eps.family == "custom":
        out = np.asarray(eps.oracle(t), dtype=float)
        if out.shape != (n,):
            raise DimensionError(f"custom perturbation returned shape {out.shape}, expected ({n},)")
        return out
    if eps.direction >= n:
        raise DimensionError(f"perturbation direction {eps.direction} out of range for n={n}")
    out = np.zeros(n)
    if eps.family == "zero":
        return out
    sign = 1.0 if eps.eps0 >= 0 else -1.0
    out[eps.direction] = sign * eps.profile(t)
    return out


def perturbation_l1_norm(eps, t0, T, n=None, rtol=1e-10):
    """``int_{t0}^{T} ||eps(t)|| dt`` by adaptive Gauss-Kronrod quadrature.

    Long intervals are split at geometrically growing break points so that
    slowly decaying tails are resolved.  ``n`` is only needed for custom
    perturbations.
    """
    if not T > t0:
        raise UsageError(f"need T > t0, got [{t0}, {T}]")
    if eps.is_zero:
        return 0.0
    if eps.family == "custom":
        if n is None:
            raise UsageError("custom perturbations need the dimension n")

        def g(t):
            return float(np.linalg.norm(eps.oracle(t)))
    else:
        g = eps.profile
    edges = [t0]
    width = 1.0
    while edges[-1] + width < T:
        edges.append(edges[-1] + width)
        width *= 2.0
    edges.append(T)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(g, a, b, epsabs=0.0, epsrel=rtol, limit=200, full_output=0)
        if not np.isfinite(val) or err > max(1e-8 * abs(val), 1e-14):
            raise NumericalError(f"quadrature of ||eps|| failed on [{a}, {b}] (estimate {val}, error {err})",
                                 term="perturbation")
        total += val
    return total


def _flow_terms(p, d, bt, x, v, lam):
    A, b = p.constraint_matrix, p.constraint_rhs
    r = A @ x - b
    terms = {
        "gradient": np.asarray(p.gradient(x), dtype=float),
        "multiplier": A.T @ lam,
        "penalty": d.sigma * (A.T @ r),
        "dual": bt * (A @ (x + d.delta * v) - b),
    }
    return terms


def vector_field(p, d, s, st, eps=None):
    """Time derivative of ``(x, v, lam)`` at state ``st``.

    Raises
    ------
    DimensionError
        If the state does not match the problem.
    NumericalError
        If any term evaluates to a non-finite value; ``term`` names it.
    """
    n, m = p.dim_primal, p.dim_dual
    if st.x.shape != (n,) or st.lam.shape != (m,):
        raise DimensionError(f"state dims ({st.x.size}, {st.lam.size}) do not match problem ({n}, {m})")
    bt = _beta(s, st.t)
    terms = _flow_terms(p, d, bt, st.x, st.v, st.lam)
    if eps is not None and not eps.is_zero:
        terms["perturbation"] = eval_perturbation(eps, st.t, n)
    for name, val in terms.items():
        if val.shape != ((m,) if name == "dual" else (n,)):
            raise DimensionError(f"{name} term has shape {val.shape}")
        if not np.all(np.isfinite(val)):
            raise NumericalError(f"non-finite {name} term at t={st.t}", term=name)
    dv = -d.gamma * st.v - bt * (terms["gradient"] + terms["multiplier"] + terms["penalty"])
    if "perturbation" in terms:
        dv = dv + terms["perturbation"]
    return FlowDerivative(dx=st.v.copy(), dv=dv, dlambda=terms["dual"])


def make_rhs(p, d, s, eps=None):
    """Stacked right-hand side ``f(t, y)`` with ``y = [x, v, lam]``.

    Same field as `vector_field` without per-call validation; a non-finite
    result is re-evaluated through `vector_field` to name the culprit.
    """
    n = p.dim_primal
    A, b = p.constraint_matrix, p.constraint_rhs
    At = np.ascontiguousarray(A.T)
    grad = p.gradient
    gamma, delta, sigma = d.gamma, d.delta, d.sigma
    beta_fn, _ = beta_functions(s)
    perturbed = eps is not None and not eps.is_zero
    isfinite = np.isfinite

    def rhs(t, y):
        x = y[:n]
        v = y[n:2 * n]
        lam = y[2 * n:]
        bt = beta_fn(t)
        r = A @ x - b
        dy = np.empty_like(y)
        dy[:n] = v
        dv = dy[n:2 * n]
        np.multiply(v, -gamma, out=dv)
        dv -= bt * (grad(x) + At @ (lam + sigma * r))
        if perturbed:
            dv += eval_perturbation(eps, t, n)
        dy[2 * n:] = bt * (r + delta * (A @ v))
        if not isfinite(dy).all():
            vector_field(p, d, s, FlowState.from_vector(y, n, t), eps)
            raise NumericalError(f"non-finite vector field at t={t}", term="state")
        return dy

    return rhs
