"""Compare convergence rates under constant and exponential scaling.

With constant scaling the time averages of the trajectory converge like
1/t.  Growing the scaling as ``exp((t - t0)/delta)`` turns this into a
linear (exponential-in-time) rate for the trajectory itself.  Both are
estimated here by least squares in log space.

    python demos/rates.py
"""

from pdflow.analysis import decay_window, fit_rate, metrics
from pdflow.cli import build_init, build_problem, preset
from pdflow.integrate import integrate_flow
from pdflow.problem import solve_saddle_quadratic


def simulate(name):
    cfg = preset(name)
    p = build_problem(cfg.problem, cfg.damping.sigma)
    ref = solve_saddle_quadratic(p)
    tr = integrate_flow(p, cfg.damping, cfg.schedule, cfg.perturbation,
                        build_init(cfg.init, p, cfg.schedule.t0), cfg.integrator, ref)
    return cfg, tr, metrics(p, tr, ref)


def main():
    cfg, tr, table = simulate("thm2_ergodic")
    print(f"constant scaling, T = {tr.t[-1]:g} ({tr.n_steps} adaptive steps)")
    for col in ("ergodic_objective_gap_abs", "ergodic_feasibility"):
        fit = fit_rate(table.t, getattr(table, col), "power", cfg.rate_window)
        print(f"  {col:28s} ~ t^-{fit.exponent:.3f}   (r^2 = {fit.r_squared:.5f})")

    cfg, tr, table = simulate("thm3_exponential")
    t_lo = cfg.schedule.t0 + 3 * cfg.damping.delta
    print(f"\nexponential scaling, T = {tr.t[-1]:g} ({tr.n_steps} adaptive steps)")
    for col in ("feasibility", "objective_gap_abs"):
        y = getattr(table, col)
        fit = fit_rate(table.t, y, "exponential", decay_window(table.t, y, t_lo))
        print(f"  {col:28s} ~ exp(-{fit.exponent:.4f} t)   (1/delta = {1 / cfg.damping.delta:g})")


if __name__ == "__main__":
    main()
