"""
Linear-equality-constrained convex problems.

A problem is ``min f(x) s.t. Ax = b`` together with the penalty ``sigma`` of
the augmented Lagrangian.  The objective is given as a pair of oracles
(value and gradient); convex quadratics additionally carry their data so
that the saddle point can be computed exactly.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import yaml

from .errors import DimensionError, SingularKKTError, UsageError

TOL_KKT = 1e-8
TOL_PSD = 1e-10


def _frozen(a, ndim=None, name="array"):
    a = np.array(a, dtype=float)
    if ndim is not None and a.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """f(x) = 0.5 <x, Q x> + <c, x> with Q symmetric positive semidefinite."""

    hessian: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        Q = _frozen(self.hessian, 2, "hessian")
        c = _frozen(self.linear, 1, "linear")
        if Q.shape != (c.size, c.size):
            raise DimensionError(f"hessian shape {Q.shape} does not match linear term of size {c.size}")
        scale = max(1.0, np.abs(Q).max(initial=0.0))
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-14 * scale):
            raise UsageError("hessian is not symmetric")
        lam_min = np.linalg.eigvalsh(Q).min() if Q.size else 0.0
        if lam_min < -TOL_PSD * scale:
            raise UsageError(f"hessian is not positive semidefinite (smallest eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "hessian", Q)
        object.__setattr__(self, "linear", c)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x @ (self.hessian @ x) + self.linear @ x

    def gradient(self, x):
        return self.hessian @ np.asarray(x, dtype=float) + self.linear


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """Smooth convex objective with linear equality constraints ``Ax = b``.

    Parameters
    ----------
    objective, gradient : callable
        Oracles ``x -> f(x)`` and ``x -> grad f(x)``.
    constraint_matrix : array_like, shape (m, n)
    constraint_rhs : array_like, shape (m,)
    penalty : float
        Augmented-Lagrangian penalty, strictly positive.
    quadratic : QuadraticObjective, optional
        Set when ``f`` is a convex quadratic; enables `solve_saddle_quadratic`.
    """

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraint_matrix: np.ndarray
    constraint_rhs: np.ndarray
    penalty: float = 1.0
    quadratic: Optional[QuadraticObjective] = field(default=None, compare=False)

    def __post_init__(self):
        A = _frozen(self.constraint_matrix, 2, "constraint_matrix")
        b = _frozen(self.constraint_rhs, 1, "constraint_rhs")
        if A.shape[0] != b.size:
            raise DimensionError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionError(f"A must have at least one row and column, got {A.shape}")
        if not self.penalty > 0:
            raise UsageError(f"penalty must be positive, got {self.penalty}")
        if self.quadratic is not None and self.quadratic.linear.size != A.shape[1]:
            raise DimensionError("quadratic objective dimension does not match A")
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "constraint_rhs", b)
        object.__setattr__(self, "penalty", float(self.penalty))

    @property
    def dim_primal(self):
        return self.constraint_matrix.shape[1]

    @property
    def dim_dual(self):
        return self.constraint_matrix.shape[0]

    def residual(self, x):
        """Constraint residual ``Ax - b``."""
        return self.constraint_matrix @ x - self.constraint_rhs


def quadratic_problem(Q, c, A, b, penalty=1.0):
    """Build a `ConstrainedProblem` with f(x) = 0.5 x'Qx + c'x."""
    quad = QuadraticObjective(Q, c)
    return ConstrainedProblem(quad.value, quad.gradient, A, b, penalty, quadratic=quad)


def quad1d(penalty=1.0):
    """f(x) = x^2 / 2 subject to x = 1; saddle point (1, -1)."""
    return quadratic_problem([[1.0]], [0.0], [[1.0]], [1.0], penalty)


def random_quad(n, m, seed=0, penalty=1.0, mu=0.1):
    """Random strongly convex quadratic with ``m`` generic linear constraints.

    ``Q = G'G / n + mu I`` with standard normal ``G``; ``A``, ``b`` and ``c``
    are standard normal, so ``A`` has full row rank almost surely when m <= n.
    """
    if not 1 <= m <= n:
        raise UsageError(f"need 1 <= m <= n, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Q = G.T @ G / n + mu * np.eye(n)
    Q = 0.5 * (Q + Q.T)
    c = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    return quadratic_problem(Q, c, A, b, penalty)


def _check_dims(p, x, lam):
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if x.shape != (p.dim_primal,):
        raise DimensionError(f"x has shape {x.shape}, expected ({p.dim_primal},)")
    if lam.shape != (p.dim_dual,):
        raise DimensionError(f"lambda has shape {lam.shape}, expected ({p.dim_dual},)")
    return x, lam


def lagrangian(p, x, lam):
    """L(x, lam) = f(x) + <lam, Ax - b>."""
    x, lam = _check_dims(p, x, lam)
    return float(p.objective(x) + lam @ p.residual(x))


def aug_lagrangian(p, x, lam, sigma=None):
    """Augmented Lagrangian ``L(x, lam) + sigma/2 ||Ax - b||^2``.

    ``sigma`` defaults to ``p.penalty``.
    """
    x, lam = _check_dims(p, x, lam)
    sigma = p.penalty if sigma is None else sigma
    r = p.residual(x)
    return float(p.objective(x) + lam @ r + 0.5 * sigma * (r @ r))


def kkt_residual(p, x, lam):
    """Return ``(||grad f(x) + A'lam||, ||Ax - b||)``."""
    x, lam = _check_dims(p, x, lam)
    stat = p.gradient(x) + p.constraint_matrix.T @ lam
    return float(np.linalg.norm(stat)), float(np.linalg.norm(p.residual(x)))


@dataclass(frozen=True, eq=False)
class SaddlePoint:
    primal_star: np.ndarray
    dual_star: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "primal_star", _frozen(self.primal_star, 1, "primal_star"))
        object.__setattr__(self, "dual_star", _frozen(self.dual_star, 1, "dual_star"))

    def check(self, p, tol=TOL_KKT):
        """True when both KKT residuals are below ``tol``."""
        stat, feas = kkt_residual(p, self.primal_star, self.dual_star)
        return stat <= tol and feas <= tol


def solve_saddle_quadratic(p):
    """Exact saddle point of a quadratic instance from its KKT system.

    Solves ``[[Q, A'], [A, 0]] [x; lam] = [-c; b]``.

    Raises
    ------
    SingularKKTError
        If the KKT matrix is rank deficient (e.g. ``A`` without full row rank
        or ``Q`` singular on ``ker A``).
    """
    if p.quadratic is None:
        raise UsageError("solve_saddle_quadratic needs a problem built from a QuadraticObjective")
    Q, c = p.quadratic.hessian, p.quadratic.linear
    A, b = p.constraint_matrix, p.constraint_rhs
    n, m = p.dim_primal, p.dim_dual
    K = np.block([[Q, A.T], [A, np.zeros((m, m))]])
    rank = np.linalg.matrix_rank(K)
    if rank < n + m:
        raise SingularKKTError(
            f"KKT matrix is singular: rank {rank} < {n + m} "
            f"(rank of A is {np.linalg.matrix_rank(A)} of {m} rows)",
            rank=rank, size=n + m)
    sol = np.linalg.solve(K, np.concatenate([-c, b]))
    # one step of iterative refinement
    sol += np.linalg.solve(K, np.concatenate([-c, b]) - K @ sol)
    return SaddlePoint(sol[:n], sol[n:])


# -- serialization ---------------------------------------------------------

def problem_to_dict(p):
    """Plain nested dict holding Q, c, A, b (row-major lists) and sigma."""
    if p.quadratic is None:
        raise UsageError("only quadratic problems can be serialized")
    return {
        "hessian": p.quadratic.hessian.tolist(),
        "linear": p.quadratic.linear.tolist(),
        "A": p.constraint_matrix.tolist(),
        "b": p.constraint_rhs.tolist(),
        "sigma": p.penalty,
    }


def problem_from_dict(d):
    try:
        return quadratic_problem(d["hessian"], d["linear"], d["A"], d["b"], d.get("sigma", 1.0))
    except KeyError as e:
        raise UsageError(f"problem document is missing key {e}") from None


def dump_problem(p, path):
    with open(path, "w") as fh:
        yaml.safe_dump({"problem": problem_to_dict(p)}, fh, sort_keys=False)


def load_problem(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "problem" not in doc:
        raise UsageError(f"{path}: expected a 'problem' section")
    return problem_from_dict(doc["problem"])
