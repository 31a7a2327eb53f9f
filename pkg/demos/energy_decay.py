"""Watch the energy of the flow decrease on a random quadratic.

Runs the ``monotonicity`` preset (10 variables, 4 constraints, constant
scaling) and prints the energy split into its potential part ``e0`` and
kinetic part ``e1`` at a handful of times, next to the distance to the
saddle point.

    python demos/energy_decay.py
"""

import numpy as np

from pdflow.analysis import energy_monotonicity_check, energy_series, integrability_check
from pdflow.cli import build_init, build_problem, preset
from pdflow.integrate import integrate_flow
from pdflow.problem import solve_saddle_quadratic


def main():
    cfg = preset("monotonicity")
    p = build_problem(cfg.problem, cfg.damping.sigma)
    ref = solve_saddle_quadratic(p)
    init = build_init(cfg.init, p, cfg.schedule.t0)
    tr = integrate_flow(p, cfg.damping, cfg.schedule, None, init, cfg.integrator, ref)
    E = energy_series(tr)

    print(f"{'t':>8} {'e0':>12} {'e1':>12} {'E':>12} {'|x - x*|':>12}")
    for t in (0, 1, 2, 5, 10, 20, 50, 100, 200):
        k = int(np.searchsorted(tr.t, t))
        dist = np.linalg.norm(tr.x[k] - ref.primal_star)
        print(f"{tr.t[k]:8.1f} {E.e0[k]:12.4e} {E.e1[k]:12.4e} {E.e_total[k]:12.4e} {dist:12.4e}")

    mono = energy_monotonicity_check(E)
    integ = integrability_check(tr)
    print(f"\nlargest energy increase between samples: {mono.max_increase:.2e}")
    print(f"running integrals at T: gap {integ.gap_integral:.4f}, beta|Ax-b|^2 {integ.feasibility_integral:.4f}, "
          f"|v|^2 {integ.velocity_integral:.4f}  (bound {integ.bound:.4f})")


if __name__ == "__main__":
    main()
