"""What happens when the scaling grows faster than the damping allows.

The energy argument needs ``beta_dot <= beta / delta``.  Here the scaling
grows twice as fast.  In guarantee mode the runner refuses the
configuration (exit code 3); with ``guarantee=False`` it integrates anyway
and the recorded diagnostics show which properties survived.
"""

from pdflow.cli import config_from_dict, run_experiment

DOC = {
    "name": "too_fast",
    "problem": "random_quad(10, 4, 0)",
    "damping": {"gamma": 2.0, "delta": 1.0, "sigma": 1.0},
    "schedule": {"family": "exponential", "beta0": 1.0, "rate": 2.0},
    "integrator": {"method": "adaptive_embedded", "abs_tol": 1e-10, "rel_tol": 1e-10, "t_end": 5.0},
}


def main():
    cfg = config_from_dict(DOC)
    res = run_experiment(cfg, write=False)
    print(f"guarantee mode: exit {res.exit_code}: {res.message}")
    res = run_experiment(cfg, guarantee=False, write=False)
    print(f"exploratory mode: exit {res.exit_code}, status {res.summary['integration']['status']}")
    for d in res.summary.get("diagnostics", []):
        print(f"  {d['check']:22s} observed {'ok' if d['observed_pass'] else 'violated'}")


if __name__ == "__main__":
    main()
