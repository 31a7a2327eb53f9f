"""
Time integration of the primal-dual flow.

Two explicit one-step methods are available: classical fixed-step RK4 and
the Dormand-Prince 5(4) embedded pair with PI step-size control.  Convex
quadratics run through numba-compiled kernels; other objectives run the same
loops interpreted.  Along the
accepted steps the integrator keeps running integrals needed by the
diagnostics (Simpson's rule on each step, midpoint state from cubic Hermite
interpolation):

``x``         int x(s) ds                         -> ergodic average
``eps_work``  int <(x - x*)/delta + v, eps(s)> ds -> perturbed energy
``lemma1``    int (beta/delta - beta_dot)(Ax - b) ds
``feas_sq``   int beta ||Ax - b||^2 ds
``vel_sq``    int ||v||^2 ds
``gap``       int (beta/delta - beta_dot)(L_sigma(x, lam*) - L_sigma(x*, lam*)) ds
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .dynamics import FlowState, eval_perturbation, make_rhs
from .errors import UsageError
from .scaling import beta_functions

log = logging.getLogger(__name__)

METHODS = ("rk4_fixed", "adaptive_embedded")
COMPLETED, BLEW_UP, STEP_UNDERFLOW, STEP_LIMIT = "completed", "blew_up", "step_underflow", "step_limit"
_STATUS = {_k.OK: COMPLETED, _k.BLEW_UP: BLEW_UP, _k.UNDERFLOW: STEP_UNDERFLOW, _k.LIMIT: STEP_LIMIT}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``step`` is the fixed step for ``rk4_fixed`` and the initial step for
    ``adaptive_embedded``.  ``sample_stride`` keeps every k-th accepted step
    (the first and last states are always kept).  A positive
    ``sample_interval`` samples by time instead: every ``round(interval /
    step)`` steps for ``rk4_fixed``, and the first accepted step past each
    multiple of the interval for ``adaptive_embedded``.  At most about
    ``max_samples`` samples are kept: RK4 widens its stride up front, the
    adaptive method halves its record and doubles the stride whenever the
    buffer fills.
    """

    method: str = "rk4_fixed"
    step: float = 1e-3
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    t_end: float = 10.0
    sample_stride: int = 1
    sample_interval: float = 0.0
    max_samples: int = 1_000_000
    max_steps: int = 20_000_000
    blowup: float = 1e12
    h_min: float = 1e-12
    h_max: float = np.inf

    def __post_init__(self):
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.step > 0:
            raise UsageError("step must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise UsageError("tolerances must be positive")
        if int(self.sample_stride) < 1:
            raise UsageError("sample_stride must be >= 1")
        if not self.sample_interval >= 0:
            raise UsageError("sample_interval must be nonnegative")
        if int(self.max_samples) < 4:
            raise UsageError("max_samples must be >= 4")


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Sampled trajectory and running integrals; arrays are row-per-sample."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    integrals: dict
    status: str = COMPLETED
    status_t: float = None
    message: str = ""
    n_steps: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in (self.t, self.x, self.v, self.lam, *self.integrals.values()):
            a.setflags(write=False)

    def __len__(self):
        return self.t.size

    @property
    def t0(self):
        return float(self.t[0])

    @property
    def completed(self):
        return self.status == COMPLETED

    def state(self, k):
        return FlowState(self.x[k], self.v[k], self.lam[k], self.t[k])

    @property
    def ergodic_x(self):
        """Running time average of x; NaN at the first sample."""
        dt = (self.t - self.t[0])[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.integrals["x"] / dt
        out[0] = np.nan
        return out

    @property
    def eps_work(self):
        return self.integrals["eps_work"]

    @property
    def lemma1_integral(self):
        return self.integrals["lemma1"]


def _integrand_fn(p, d, s, eps, ref):
    """g(t, y) stacking every running-integral integrand."""
    n = p.dim_primal
    A, b = p.constraint_matrix, p.constraint_rhs
    xs, ls = ref.primal_star, ref.dual_star
    f_star = p.objective(xs)
    inv_delta, sigma = 1.0 / d.delta, d.sigma
    beta_fn, beta_dot_fn = beta_functions(s)
    perturbed = eps is not None and not eps.is_zero

    def g(t, y):
        x = y[:n]
        v = y[n:2 * n]
        r = A @ x - b
        bt = beta_fn(t)
        w = inv_delta * bt - beta_dot_fn(t)
        rr = r @ r
        gap = p.objective(x) - f_star + ls @ r + 0.5 * sigma * rr
        work = (inv_delta * (x - xs) + v) @ eval_perturbation(eps, t, n) if perturbed else 0.0
        return np.concatenate([x, (work,), w * r, (bt * rr, v @ v, w * gap)])

    return g


def _layout(n, m):
    return {"x": slice(0, n), "eps_work": n, "lemma1": slice(n + 1, n + 1 + m),
            "feas_sq": n + 1 + m, "vel_sq": n + 2 + m, "gap": n + 3 + m}


def _quadratic_params(p, d, s, eps, ref):
    """Packed parameter buffer for the compiled quadratic kernels, or None."""
    if not _k.HAVE_NUMBA or p.quadratic is None:
        return None
    if eps is not None and eps.family == "custom":
        return None
    if eps is None or eps.is_zero:
        epar = np.zeros(6)
    else:
        if eps.direction >= p.dim_primal:
            raise UsageError(f"perturbation direction {eps.direction} out of range")
        epar = np.array([_k.PERTURBATION_CODES[eps.family], eps.eps0, eps.power, eps.rate,
                         eps.direction, eps.t0], dtype=float)
    spar = np.array([_k.SCHEDULE_CODES[s.family], s.beta0, s.rate, s.t0])
    f_star = float(p.objective(ref.primal_star))
    dpar = np.array([d.gamma, d.delta, d.sigma, f_star])
    return _k.pack_quadratic(p.quadratic.hessian, p.quadratic.linear, p.constraint_matrix,
                             p.constraint_rhs, dpar, spar, epar, ref.primal_star, ref.dual_star)


def integrate_flow(p, d, s, eps, init, cfg, ref, compiled=True):
    """Integrate the flow from ``init`` to ``cfg.t_end``.

    Parameters
    ----------
    p : ConstrainedProblem
    d : DampingParams
    s : ScalingSchedule
    eps : Perturbation or None
    init : FlowState
        Initial state; ``init.t`` must equal the schedule start ``s.t0``.
    cfg : IntegratorConfig
    ref : SaddlePoint
        Reference saddle point used by the running integrals.
    compiled : bool
        Use the compiled kernels when the problem is a quadratic and the
        perturbation is not a custom oracle.  Otherwise the same stepping
        loops run interpreted on the generic oracles.

    Returns
    -------
    TrajectoryRecord
        ``status`` is ``completed``, ``blew_up`` (state entry above
        ``cfg.blowup`` in magnitude, or non-finite), ``step_underflow``
        (adaptive step below ``cfg.h_min``) or ``step_limit``
        (``cfg.max_steps`` exhausted).

    Raises
    ------
    NumericalError
        If a generic oracle returns non-finite values.
    """
    n, m = p.dim_primal, p.dim_dual
    if init.x.shape != (n,) or init.lam.shape != (m,):
        raise UsageError("initial state does not match problem dimensions")
    if init.t != s.t0:
        raise UsageError(f"initial time {init.t} differs from schedule start {s.t0}")
    if not cfg.t_end > init.t:
        raise UsageError(f"t_end={cfg.t_end} must exceed t0={init.t}")

    P = _quadratic_params(p, d, s, eps, ref) if compiled else None
    if P is not None:
        rhs, g = _k.quad_rhs_compiled, _k.quad_integrand_compiled
        rk4, dopri = _k.rk4_compiled, _k.dopri_compiled
    else:
        rhs0 = make_rhs(p, d, s, eps)
        g0 = _integrand_fn(p, d, s, eps, ref)

        def rhs(t, y, P, out):
            out[:] = rhs0(t, y)

        def g(t, y, P, out):
            out[:] = g0(t, y)
        rk4, dopri = _k.rk4_loop, _k.dopri_loop

    y0 = init.to_vector()
    n_acc = n + m + 4
    t0, T = float(init.t), float(cfg.t_end)
    stride = int(cfg.sample_stride)
    if cfg.method == "rk4_fixed":
        n_steps = int(np.ceil((T - t0) / cfg.step * (1 - 1e-12)))
        if n_steps > cfg.max_steps:
            raise UsageError(f"{n_steps} fixed steps exceed max_steps={cfg.max_steps}")
        if cfg.sample_interval > 0:
            stride = max(1, int(round(cfg.sample_interval / cfg.step)))
        stride = max(stride, -(-n_steps // (int(cfg.max_samples) - 2)))
        out = rk4(rhs, g, P, y0, n_acc, t0, T, float(cfg.step), n_steps, stride, float(cfg.blowup))
    else:
        h_max = min(float(cfg.h_max), T - t0)
        out = dopri(rhs, g, P, y0, n_acc, t0, T, float(cfg.step), float(cfg.abs_tol), float(cfg.rel_tol),
                    stride, float(cfg.sample_interval), int(cfg.max_samples), int(cfg.max_steps),
                    float(cfg.blowup), float(cfg.h_min), h_max)
    ts, Y, ACC, code, t_stop, n_steps, n_rej = out
    status = _STATUS[int(code)]
    message = ""
    status_t = None
    if status != COMPLETED:
        status_t = float(t_stop)
        message = {BLEW_UP: f"state exceeded {cfg.blowup:g} or became non-finite",
                   STEP_UNDERFLOW: f"adaptive step fell below h_min={cfg.h_min:g}",
                   STEP_LIMIT: f"max_steps={cfg.max_steps} exhausted"}[status]
        log.warning("integration stopped at t=%g: %s (%s)", status_t, status, message)
    integrals = {k: np.array(ACC[:, sl]) for k, sl in _layout(n, m).items()}
    return TrajectoryRecord(
        t=np.array(ts), x=np.array(Y[:, :n]), v=np.array(Y[:, n:2 * n]), lam=np.array(Y[:, 2 * n:]),
        integrals=integrals, status=status, status_t=status_t, message=message,
        n_steps=int(n_steps), n_rejected=int(n_rej),
        meta={"method": cfg.method, "t_end": T, "compiled": P is not None,
              "problem": p, "damping": d, "schedule": s, "perturbation": eps, "reference": ref},
    )


def ergodic_average(tr, t):
    """Time average ``(int_{t0}^t x ds) / (t - t0)``.

    The running integral is interpolated linearly between samples.
    """
    t = float(t)
    if not t > tr.t[0]:
        raise UsageError(f"ergodic average undefined at t={t} <= t0={tr.t[0]}")
    if t > tr.t[-1] * (1 + 1e-14) + 1e-14:
        raise UsageError(f"t={t} is beyond the trajectory end {tr.t[-1]}")
    I = tr.integrals["x"]
    integral = np.array([np.interp(t, tr.t, I[:, j]) for j in range(I.shape[1])])
    return integral / (t - tr.t[0])


def state_columns(n, m):
    return (["t"] + [f"x_{i}" for i in range(n)] + [f"v_{i}" for i in range(n)]
            + [f"lambda_{i}" for i in range(m)])


def write_trajectory_csv(tr, path):
    """Trajectory CSV: ``t, x_*, v_*, lambda_*`` in 17 significant digits."""
    data = np.column_stack([tr.t, tr.x, tr.v, tr.lam])
    header = ",".join(state_columns(tr.x.shape[1], tr.lam.shape[1]))
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header=header, comments="")
