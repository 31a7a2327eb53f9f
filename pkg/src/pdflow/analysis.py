"""
Energies, convergence metrics and rate fits computed from a trajectory.

Conventions: ``r = Ax - b`` is the constraint residual, ``(x*, lam*)`` the
reference saddle point, and

    E0 = beta(t) (L_sigma(x, lam*) - L_sigma(x*, lam*))
    E1 = 1/2 ||(x - x*)/delta + v||^2 + (delta gamma - 1)/(2 delta^2) ||x - x*||^2
         + 1/(2 delta) ||lam - lam*||^2

with ``E = E0 + E1`` and ``E_eps = E - int <(x - x*)/delta + v, eps>``.
Everything operates column-wise on the sampled trajectory; the per-sample
record types (`EnergyReport`, `MetricsRow`) are available via indexing.
"""

from dataclasses import dataclass, fields

import numpy as np

from .dynamics import perturbation_l1_norm
from .errors import DegenerateFitError, DimensionError, UsageError
from .integrate import state_columns
from .problem import aug_lagrangian
from .scaling import beta

Y_FLOOR = 1e-14
MIN_FIT_POINTS = 10

ENERGY_COLUMNS = ("e0", "e1", "e_total", "e_perturbed")
METRIC_COLUMNS = ("lagrangian_gap", "feasibility", "objective_gap_abs",
                  "ergodic_objective_gap_abs", "ergodic_feasibility", "lemma1_quantity")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e0: float
    e1: float
    e_total: float
    e_perturbed: float


@dataclass(frozen=True)
class MetricsRow:
    t: float
    lagrangian_gap: float
    feasibility: float
    objective_gap_abs: float
    ergodic_objective_gap_abs: float
    ergodic_feasibility: float
    lemma1_quantity: float


class _Columns:
    """Immutable struct-of-arrays; ``table[k]`` gives one row record."""

    _row_type = None

    def __init__(self, **cols):
        names = [f.name for f in fields(self._row_type)]
        if set(cols) != set(names):
            raise UsageError(f"expected columns {names}, got {sorted(cols)}")
        sizes = {np.shape(v) for v in cols.values()}
        if len(sizes) != 1:
            raise DimensionError(f"column lengths differ: {sizes}")
        for name in names:
            a = np.array(cols[name], dtype=float)
            a.setflags(write=False)
            setattr(self, name, a)
        self._names = names

    def __len__(self):
        return self.t.size

    def __getitem__(self, k):
        return self._row_type(**{n: float(getattr(self, n)[k]) for n in self._names})

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def as_dict(self):
        return {n: getattr(self, n) for n in self._names}


class EnergySeries(_Columns):
    _row_type = EnergyReport


class MetricsTable(_Columns):
    _row_type = MetricsRow


def _objective_rows(p, X):
    """f evaluated on every row of X."""
    if p.quadratic is not None:
        Q, c = p.quadratic.hessian, p.quadratic.linear
        return 0.5 * np.einsum("ij,ij->i", X @ Q, X) + X @ c
    return np.array([p.objective(x) for x in X], dtype=float)


def _context(tr, key):
    try:
        return tr.meta[key]
    except KeyError:
        raise UsageError(f"trajectory carries no {key!r}; pass it explicitly") from None


def energy(p, d, s, st, ref, eps_work_at_t=0.0):
    """Energy terms at a single state.

    Parameters
    ----------
    p : ConstrainedProblem
    d : DampingParams
        ``d.sigma`` is the penalty used in the augmented Lagrangian.
    s : ScalingSchedule
    st : FlowState
    ref : SaddlePoint
    eps_work_at_t : float
        Running perturbation work up to ``st.t``; ``e_perturbed`` is
        ``e_total - eps_work_at_t``.

    Returns
    -------
    EnergyReport
    """
    n, m = p.dim_primal, p.dim_dual
    if st.x.shape != (n,) or st.lam.shape != (m,):
        raise DimensionError(f"state dims ({st.x.size}, {st.lam.size}) do not match problem ({n}, {m})")
    xs, ls = ref.primal_star, ref.dual_star
    if xs.shape != (n,) or ls.shape != (m,):
        raise DimensionError("reference point does not match problem dimensions")
    gap = aug_lagrangian(p, st.x, ls, d.sigma) - aug_lagrangian(p, xs, ls, d.sigma)
    e0 = beta(s, st.t) * gap
    dx = st.x - xs
    z = dx / d.delta + st.v
    e1 = (0.5 * (z @ z) + (d.delta * d.gamma - 1.0) / (2.0 * d.delta ** 2) * (dx @ dx)
          + (st.lam - ls) @ (st.lam - ls) / (2.0 * d.delta))
    return EnergyReport(float(st.t), float(e0), float(e1), float(e0 + e1), float(e0 + e1 - eps_work_at_t))


def energy_series(tr, p=None, d=None, s=None, ref=None):
    """`energy` at every sample of ``tr``, vectorized.

    Missing arguments are taken from the run context stored on the record.
    """
    p = _context(tr, "problem") if p is None else p
    d = _context(tr, "damping") if d is None else d
    s = _context(tr, "schedule") if s is None else s
    ref = _context(tr, "reference") if ref is None else ref
    xs, ls = ref.primal_star, ref.dual_star
    r = tr.x @ p.constraint_matrix.T - p.constraint_rhs
    r_star = p.residual(xs)
    f_star = p.objective(xs)
    L = _objective_rows(p, tr.x) + r @ ls + 0.5 * d.sigma * np.einsum("ij,ij->i", r, r)
    L_star = f_star + ls @ r_star + 0.5 * d.sigma * (r_star @ r_star)
    e0 = beta(s, tr.t) * (L - L_star)
    dx = tr.x - xs
    z = dx / d.delta + tr.v
    dl = tr.lam - ls
    e1 = (0.5 * np.einsum("ij,ij->i", z, z)
          + (d.delta * d.gamma - 1.0) / (2.0 * d.delta ** 2) * np.einsum("ij,ij->i", dx, dx)
          + np.einsum("ij,ij->i", dl, dl) / (2.0 * d.delta))
    total = e0 + e1
    return EnergySeries(t=tr.t, e0=e0, e1=e1, e_total=total, e_perturbed=total - tr.eps_work)


@dataclass(frozen=True)
class MonotonicityReport:
    max_increase: float
    passed: bool
    threshold: float
    energy_start: float
    worst_t: float
    column: str


def energy_monotonicity_check(series, tol_slope=1e-6, perturbed=False):
    """Largest increase of the energy between consecutive samples.

    Passes when ``max_increase <= tol_slope * (1 + |E(t0)|)``.  ``perturbed``
    selects ``e_perturbed`` instead of ``e_total``.  ``series`` is an
    `EnergySeries` or any sequence of `EnergyReport`.
    """
    column = "e_perturbed" if perturbed else "e_total"
    if isinstance(series, EnergySeries):
        t, E = series.t, getattr(series, column)
    else:
        t = np.array([r.t for r in series], dtype=float)
        E = np.array([getattr(r, column) for r in series], dtype=float)
    if E.size < 2:
        raise UsageError("monotonicity needs at least two samples")
    if np.any(np.diff(t) <= 0):
        raise UsageError("energy series must be sorted by strictly increasing time")
    inc = np.diff(E)
    k = int(np.argmax(inc))
    threshold = tol_slope * (1.0 + abs(E[0]))
    max_inc = float(inc[k])
    return MonotonicityReport(max_inc, bool(max_inc <= threshold), float(threshold), float(E[0]),
                              float(t[k + 1]), column)


@dataclass(frozen=True)
class GronwallReport:
    lhs_max: float
    rhs: float
    passed: bool
    energy_start: float
    eps_l1: float


def gronwall_bound_check(tr, ref, d, eps, tol=1e-8):
    """Check ``sup ||(x - x*)/delta + v|| <= sqrt(2 |E_eps(t0)|) + int ||eps|| + tol``.

    ``E_eps(t0) = E(t0)`` because the perturbation work vanishes at ``t0``;
    it is evaluated with the problem and schedule stored on ``tr``.
    """
    p = _context(tr, "problem")
    s = _context(tr, "schedule")
    z = (tr.x - ref.primal_star) / d.delta + tr.v
    lhs = float(np.sqrt(np.einsum("ij,ij->i", z, z)).max())
    e_start = energy(p, d, s, tr.state(0), ref).e_total
    l1 = 0.0 if eps is None else perturbation_l1_norm(eps, tr.t[0], tr.t[-1], p.dim_primal)
    rhs = float(np.sqrt(2.0 * abs(e_start)) + l1)
    return GronwallReport(lhs, rhs, bool(lhs <= rhs + tol), float(e_start), float(l1))


def metrics(p, tr, ref):
    """Convergence metrics at every sample (see `METRIC_COLUMNS`).

    The ergodic columns are NaN at the first sample, where the time average
    is undefined.
    """
    d = _context(tr, "damping")
    s = _context(tr, "schedule")
    xs, ls = ref.primal_star, ref.dual_star
    A, b = p.constraint_matrix, p.constraint_rhs
    r = tr.x @ A.T - b
    f = _objective_rows(p, tr.x)
    f_star = p.objective(xs)
    r_star = p.residual(xs)
    gap = (f + r @ ls) - (f_star + tr.lam @ r_star)
    xbar = tr.ergodic_x
    with np.errstate(invalid="ignore"):
        fbar = _objective_rows(p, np.nan_to_num(xbar))
        fbar[0] = np.nan
        rbar = xbar @ A.T - b
        lemma = beta(s, tr.t)[:, None] * r + tr.lemma1_integral
    return MetricsTable(
        t=tr.t,
        lagrangian_gap=gap,
        feasibility=np.linalg.norm(r, axis=1),
        objective_gap_abs=np.abs(f - f_star),
        ergodic_objective_gap_abs=np.abs(fbar - f_star),
        ergodic_feasibility=np.linalg.norm(rbar, axis=1),
        lemma1_quantity=np.linalg.norm(lemma, axis=1),
    )


def lemma1_residual(p, tr):
    """Max-norm defect of the multiplier identity at every sample.

    Along any solution,
    ``beta(t) r(t) + int (beta/delta - beta_dot) r ds = (lam(t) - lam(t0))/delta + beta(t0) r(t0)``;
    the left side uses the running integral, the right side only states.
    """
    d = _context(tr, "damping")
    s = _context(tr, "schedule")
    r = tr.x @ p.constraint_matrix.T - p.constraint_rhs
    lhs = beta(s, tr.t)[:, None] * r + tr.lemma1_integral
    rhs = (tr.lam - tr.lam[0]) / d.delta + beta(s, tr.t[0]) * r[0]
    return np.abs(lhs - rhs).max(axis=1)


@dataclass(frozen=True)
class IntegrabilityReport:
    gap_integral: float
    feasibility_integral: float
    velocity_integral: float
    bound: float
    constant: float
    energy_start: float
    passed: bool


def integrability_check(tr, tol=1e-6):
    """Running integrals at T against ``E(t0) * max(1, 2 delta/sigma, delta/(delta gamma - 1)) + tol``.

    The three integrals are ``int (beta/delta - beta_dot)(L_sigma(x, lam*) -
    L_sigma(x*, lam*))``, ``int beta ||Ax - b||^2`` and ``int ||v||^2``.
    With ``sigma = 0`` the feasibility integral has no bound and the constant
    is infinite.
    """
    p, d = _context(tr, "problem"), _context(tr, "damping")
    s, ref = _context(tr, "schedule"), _context(tr, "reference")
    if not d.guaranteed:
        raise UsageError("the integrability bounds need gamma * delta > 1")
    c = max(1.0, 2.0 * d.delta / d.sigma if d.sigma > 0 else np.inf, d.delta / (d.delta * d.gamma - 1.0))
    e_start = energy(p, d, s, tr.state(0), ref).e_total
    bound = e_start * c + tol
    vals = [float(tr.integrals[k][-1]) for k in ("gap", "feas_sq", "vel_sq")]
    return IntegrabilityReport(*vals, bound=float(bound), constant=float(c), energy_start=float(e_start),
                               passed=bool(max(vals) <= bound))


def dual_drift(tr):
    """``||lam(T) - lam(t_mid)||`` with ``t_mid`` the midpoint of the run."""
    t_mid = 0.5 * (tr.t[0] + tr.t[-1])
    lam_mid = np.array([np.interp(t_mid, tr.t, tr.lam[:, j]) for j in range(tr.lam.shape[1])])
    return float(np.linalg.norm(tr.lam[-1] - lam_mid))


# -- rate estimation -------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """``y ~ C t**-exponent`` (power) or ``y ~ C exp(-exponent t)`` (exponential)."""

    model: str
    exponent: float
    r_squared: float
    window: tuple
    prefactor: float
    n_points: int


def decay_window(t, y, t_lo, floor=1e-12):
    """``(t_lo, t_hi)`` with ``t_hi`` the first sample time after ``t_lo`` where ``y < floor``.

    Falls back to the last sample if ``y`` never drops below ``floor``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    below = np.nonzero((t >= t_lo) & (y < floor))[0]
    return float(t_lo), float(t[below[0]] if below.size else t[-1])


def fit_rate(t, y, model="power", window=None, y_floor=Y_FLOOR, min_points=MIN_FIT_POINTS):
    """Least-squares rate fit in log space.

    Parameters
    ----------
    t, y : array_like
        Sample times and positive values.  NaN values and values at or
        below ``y_floor`` are dropped.
    model : {"power", "exponential"}
        Regress ``log y`` on ``log t`` or on ``t``.
    window : (float, float), optional
        Closed time window; defaults to the trailing three quarters
        ``[t0 + (T - t0)/4, T]``.

    Raises
    ------
    DegenerateFitError
        Fewer than ``min_points`` usable samples (for instance an all-zero
        series).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DimensionError("t and y must be 1-d arrays of equal length")
    if model not in ("power", "exponential"):
        raise UsageError(f"unknown rate model {model!r}")
    if window is None:
        window = (t[0] + 0.25 * (t[-1] - t[0]), t[-1])
    lo, hi = map(float, window)
    if lo > hi:
        raise UsageError(f"empty window [{lo}, {hi}]")
    if lo < t[0] or hi > t[-1]:
        raise UsageError(f"window [{lo}, {hi}] leaves the sampled span [{t[0]}, {t[-1]}]")
    with np.errstate(invalid="ignore"):
        keep = (t >= lo) & (t <= hi) & (y > y_floor)
    if model == "power":
        keep &= t > 0
    if keep.sum() < min_points:
        raise DegenerateFitError(
            f"only {int(keep.sum())} usable points in [{lo}, {hi}] (need {min_points}, floor {y_floor:g})")
    u = np.log(t[keep]) if model == "power" else t[keep]
    w = np.log(y[keep])
    slope, intercept = np.polyfit(u, w, 1)
    resid = w - (slope * u + intercept)
    ss_tot = np.sum((w - w.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(model, float(-slope), float(np.clip(r2, 0.0, 1.0)), (lo, hi),
                   float(np.exp(intercept)), int(keep.sum()))


# -- CSV output ------------------------------------------------------------

def write_diagnostics_csv(tr, energies, table, path):
    """State columns followed by the energy and metric columns."""
    cols = [tr.t, tr.x, tr.v, tr.lam]
    cols += [getattr(energies, c) for c in ENERGY_COLUMNS]
    cols += [getattr(table, c) for c in METRIC_COLUMNS]
    header = ",".join(state_columns(tr.x.shape[1], tr.lam.shape[1]) + list(ENERGY_COLUMNS) + list(METRIC_COLUMNS))
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g", header=header, comments="")


def read_csv(path):
    """Read a CSV written by this module into a dict of columns."""
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


__all__ = [
    "EnergyReport", "EnergySeries", "MetricsRow", "MetricsTable", "MonotonicityReport", "GronwallReport",
    "IntegrabilityReport", "RateFit", "energy", "energy_series", "energy_monotonicity_check",
    "gronwall_bound_check", "metrics", "lemma1_residual", "integrability_check", "dual_drift",
    "decay_window", "fit_rate", "write_diagnostics_csv", "read_csv",
]
