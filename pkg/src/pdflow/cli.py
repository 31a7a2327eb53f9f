"""
Config-driven experiment runner.

    pdflow run experiment.yaml [--no-guarantee] [--t-end T] [--method M] [--seed S] [--out DIR]
    pdflow preset thm3_exponential [--out DIR] [--write-config FILE]
    pdflow sweep experiment.yaml --vary damping.gamma=2,3,4 [--workers K]

Each run writes ``trajectory.csv``, ``diagnostics.csv`` and ``summary.yaml``
into the output directory.  Exit codes: 0 all enabled checks passed, 1 a
check failed, 2 the configuration could not be parsed, 3 the scaling
condition is violated in guarantee mode, 4 the integration failed.
"""

import argparse
import copy
import logging
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import analysis as an
from .dynamics import FlowState, Perturbation, perturbation_l1_norm
from .errors import ConfigError, UsageError
from .integrate import IntegratorConfig, integrate_flow, write_trajectory_csv
from .problem import problem_from_dict, quad1d, random_quad, solve_saddle_quadratic
from .scaling import DampingParams, ScalingSchedule, beta, validate_scaling

log = logging.getLogger("pdflow")

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_SCALING, EXIT_INTEGRATION = 0, 1, 2, 3, 4

CHECKS = ("energy_monotonicity", "rates", "lemma1", "gronwall", "integrability", "saddle")
# rate fits are asymptotic statements and need a long horizon, so they are opt-in
DEFAULT_CHECKS = ("energy_monotonicity", "lemma1", "integrability", "saddle")
EXPONENTIAL_HORIZON = 20.0  # exponential runs are capped at t0 + 20 delta

# check tolerances
TOL_SLOPE = 1e-6
TOL_LEMMA1 = 1e-5
TOL_SADDLE = 1e-8
TOL_BOUND = 1e-6
MIN_EXPONENT_FRACTION = 0.9
MIN_R2 = 0.95
CONVERGED_FLOOR = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    problem: object = "quad1d"
    damping: DampingParams = field(default_factory=DampingParams)
    schedule: ScalingSchedule = field(default_factory=ScalingSchedule)
    perturbation: Perturbation = field(default_factory=Perturbation)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    init: object = "zero"
    checks: tuple = DEFAULT_CHECKS
    rate_window: tuple = None
    output_dir: str = "pdflow_out"
    name: str = "experiment"


# -- parsing ----------------------------------------------------------------

_CALL = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def _parse_call(text):
    """``"random_quad(10, 4, 0)"`` -> ``("random_quad", [10, 4, 0])``."""
    m = _CALL.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse {text!r}")
    args = [yaml.safe_load(a) for a in m.group(2).split(",")] if m.group(2) and m.group(2).strip() else []
    return m.group(1), args


def build_problem(spec, sigma=1.0, seed=None):
    """Problem from a builtin name, a ``{builtin: ...}`` mapping or explicit data."""
    if isinstance(spec, dict) and "builtin" not in spec:
        return problem_from_dict({**spec, "sigma": sigma})
    text = spec["builtin"] if isinstance(spec, dict) else spec
    name, args = _parse_call(text)
    if name == "quad1d":
        if args:
            raise ConfigError("quad1d takes no arguments")
        return quad1d(sigma)
    if name == "random_quad":
        if len(args) not in (2, 3):
            raise ConfigError("random_quad needs (n, m) or (n, m, seed)")
        n, m = int(args[0]), int(args[1])
        s = int(args[2]) if len(args) == 3 else 0
        return random_quad(n, m, seed=s if seed is None else seed, penalty=sigma)
    raise ConfigError(f"unknown builtin problem {name!r}")


def build_init(spec, p, t0, seed=None):
    """``zero``, ``feasible_random(seed)`` or an explicit ``{x, v, lam}`` mapping."""
    n, m = p.dim_primal, p.dim_dual
    if isinstance(spec, dict):
        try:
            return FlowState(spec.get("x", np.zeros(n)), spec.get("v", np.zeros(n)),
                             spec.get("lam", np.zeros(m)), t0)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad explicit initial state: {e}") from None
    name, args = _parse_call(spec)
    if name == "zero":
        return FlowState(np.zeros(n), np.zeros(n), np.zeros(m), t0)
    if name == "feasible_random":
        s = int(args[0]) if args else 0
        rng = np.random.default_rng(s if seed is None else seed)
        z = rng.standard_normal(n)
        A, b = p.constraint_matrix, p.constraint_rhs
        x0 = z - np.linalg.lstsq(A, A @ z - b, rcond=None)[0]
        return FlowState(x0, np.zeros(n), np.zeros(m), t0)
    raise ConfigError(f"unknown initial state {name!r}")


def _section(doc, key, cls):
    raw = doc.get(key) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    try:
        return cls(**raw)
    except TypeError as e:
        raise ConfigError(f"section {key!r}: {e}") from None


def config_from_dict(doc):
    """Validate a parsed config document; every error becomes `ConfigError`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping with sections problem, damping, schedule, ...")
    unknown = set(doc) - {f for f in ExperimentConfig.__dataclass_fields__}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        checks = tuple(doc.get("checks", DEFAULT_CHECKS))
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {CHECKS}")
        window = doc.get("rate_window")
        return ExperimentConfig(
            problem=doc.get("problem", "quad1d"),
            damping=_section(doc, "damping", DampingParams),
            schedule=_section(doc, "schedule", ScalingSchedule),
            perturbation=_section(doc, "perturbation", Perturbation),
            integrator=_section(doc, "integrator", IntegratorConfig),
            init=doc.get("init", "zero"),
            checks=checks,
            rate_window=None if window is None else tuple(float(w) for w in window),
            output_dir=str(doc.get("output_dir", "pdflow_out")),
            name=str(doc.get("name", "experiment")),
        )
    except UsageError as e:
        raise ConfigError(str(e)) from None


def config_to_dict(cfg):
    doc = {
        "name": cfg.name,
        "problem": cfg.problem,
        "damping": asdict(cfg.damping),
        "schedule": asdict(cfg.schedule),
        "perturbation": {k: v for k, v in asdict(cfg.perturbation).items()
                         if k not in ("oracle", "custom_integrable")},
        "integrator": {k: (float(v) if isinstance(v, float) else v) for k, v in asdict(cfg.integrator).items()},
        "init": cfg.init,
        "checks": list(cfg.checks),
        "output_dir": cfg.output_dir,
    }
    if cfg.integrator.h_max == np.inf:
        doc["integrator"].pop("h_max")
    if cfg.rate_window is not None:
        doc["rate_window"] = list(cfg.rate_window)
    return doc


def load_config(path):
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"{path} is not valid YAML: {e}") from None
    return config_from_dict(doc)


# -- presets ------------------------------------------------------------------

def preset(name):
    """Ready-made configurations for each convergence regime.

    ``monotonicity``
        random_quad(10, 4), gamma=2, delta=1, sigma=1, constant beta=1,
        T=200, RK4 with h=1e-3.
    ``thm2_ergodic``
        Same problem with constant scaling over T=2000, adaptive stepping.
    ``thm3_exponential``
        quad1d with beta(t) = exp((t - t0)/delta), T = t0 + 15, adaptive
        stepping at tolerance 1e-10.
    ``thm4_perturbed``
        ``thm2_ergodic`` plus eps(t) = (1 + t - t0)^-2 e_1.
    """
    base = dict(problem="random_quad(10, 4, 0)", damping=DampingParams(2.0, 1.0, 1.0), init="zero")
    adaptive = dict(method="adaptive_embedded", step=1e-3, abs_tol=1e-10, rel_tol=1e-10)
    if name == "monotonicity":
        return ExperimentConfig(**base, schedule=ScalingSchedule(),
                                integrator=IntegratorConfig("rk4_fixed", 1e-3, t_end=200.0, sample_stride=20),
                                checks=("energy_monotonicity", "lemma1", "integrability", "saddle"),
                                output_dir="out_monotonicity", name=name)
    if name == "thm2_ergodic":
        return ExperimentConfig(**base, schedule=ScalingSchedule(),
                                integrator=IntegratorConfig(**adaptive, t_end=2000.0, sample_interval=0.5),
                                checks=DEFAULT_CHECKS + ("rates",), rate_window=(500.0, 2000.0),
                                output_dir="out_thm2_ergodic", name=name)
    if name == "thm3_exponential":
        d = DampingParams(2.0, 1.0, 1.0)
        return ExperimentConfig(problem="quad1d", damping=d, init="zero",
                                schedule=ScalingSchedule.exponential_equality(d.delta),
                                integrator=IntegratorConfig(**adaptive, t_end=15.0, sample_interval=0.01),
                                checks=DEFAULT_CHECKS + ("rates",),
                                output_dir="out_thm3_exponential", name=name)
    if name == "thm4_perturbed":
        cfg = preset("thm2_ergodic")
        return replace(cfg, perturbation=Perturbation("power_decay", eps0=1.0, power=2.0, direction=0),
                       checks=cfg.checks + ("gronwall",), output_dir="out_thm4_perturbed", name=name)
    raise ConfigError(f"unknown preset {name!r}; choose from monotonicity, thm2_ergodic, "
                      "thm3_exponential, thm4_perturbed")


PRESETS = ("monotonicity", "thm2_ergodic", "thm3_exponential", "thm4_perturbed")


# -- running ----------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    check: str
    passed: bool
    detail: dict


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    verdicts: tuple
    summary: dict
    message: str = ""

    @property
    def failed(self):
        return [v.check for v in self.verdicts if not v.passed]


def _rate_verdicts(cfg, table, tr, beta_t):
    s, d = cfg.schedule, cfg.damping
    t0, T = tr.t[0], tr.t[-1]
    fits = {}
    if s.family == "exponential":
        model, target = "exponential", MIN_EXPONENT_FRACTION * s.rate
        columns = ("feasibility", "objective_gap_abs")
    elif s.family == "polynomial":
        model, target = "power", MIN_EXPONENT_FRACTION * s.rate
        columns = ("lagrangian_gap",)
    else:
        model, target = "power", MIN_EXPONENT_FRACTION
        columns = ("ergodic_objective_gap_abs", "ergodic_feasibility")
    ok = True
    for col in columns:
        y = getattr(table, col)
        if model == "exponential":
            window = cfg.rate_window or an.decay_window(table.t, y, t0 + 3.0 * d.delta, CONVERGED_FLOOR)
        else:
            window = cfg.rate_window or (t0 + 0.25 * (T - t0), T)
        if abs(y[-1]) < CONVERGED_FLOOR:
            fits[col] = {"converged": True, "value_at_T": float(y[-1])}
            continue
        try:
            f = an.fit_rate(table.t, y, model, window)
        except an.DegenerateFitError as e:
            fits[col] = {"error": str(e)}
            ok = False
            continue
        passed = f.exponent >= target and f.r_squared >= MIN_R2
        ok &= passed
        fits[col] = {"model": f.model, "exponent": f.exponent, "r_squared": f.r_squared,
                     "window": list(f.window), "prefactor": f.prefactor, "n_points": f.n_points,
                     "required_exponent": target, "passed": bool(passed)}
    out = [Verdict("rates", bool(ok), fits)]
    if model == "exponential" and abs(s.rate * d.delta - 1.0) < 1e-12:
        # equality case: the multiplier integral vanishes and beta * ||Ax - b|| stays bounded
        lo = t0 + 3.0 * d.delta
        hi = an.decay_window(table.t, table.feasibility, lo, CONVERGED_FLOOR)[1]
        k = (table.t >= lo) & (table.t <= hi)
        scaled = beta_t * table.feasibility
        sup, start = float(scaled[k].max()), float(scaled[k][0])
        integral = float(np.abs(tr.lemma1_integral).max())
        out.append(Verdict("scaled_feasibility_bounded", bool(sup <= 10.0 * start and integral <= 1e-6),
                           {"sup": sup, "value_at_window_start": start, "lemma1_integral_max": integral}))
    return out


def _apply_overrides(cfg, t_end=None, method=None):
    integ = cfg.integrator
    if t_end is not None:
        integ = replace(integ, t_end=float(t_end))
    if method is not None:
        integ = replace(integ, method=method)
    return replace(cfg, integrator=integ)


def run_experiment(cfg, guarantee=True, seed=None, out_dir=None, write=True):
    """Run one experiment; returns a `RunResult` (never raises on check failures)."""
    started = time.perf_counter()
    out = Path(out_dir or cfg.output_dir)
    d, s, eps = cfg.damping, cfg.schedule, cfg.perturbation
    try:
        # the flow always uses d.sigma; sigma = 0 leaves the problem's own default penalty
        p = build_problem(cfg.problem, d.sigma if d.sigma > 0 else 1.0, seed)
        init = build_init(cfg.init, p, s.t0, seed)
        ref = solve_saddle_quadratic(p)
    except (UsageError, np.linalg.LinAlgError) as e:
        return RunResult(EXIT_PARSE, (), {}, f"invalid configuration: {e}")
    T = cfg.integrator.t_end
    summary = {"name": cfg.name, "config": config_to_dict(cfg), "guarantee_mode": bool(guarantee)}
    report = validate_scaling(s, d, (s.t0, T))
    summary["scaling"] = {"satisfied": report.satisfied, "worst_margin": report.worst_margin,
                          "worst_t": report.worst_t, "damping_ok": report.damping_ok}
    if guarantee and not report.satisfied:
        if not report.damping_ok:
            why = f"gamma*delta={d.gamma * d.delta:.17g} <= 1"
        else:
            why = f"worst_margin={report.worst_margin:.17g} at t={report.worst_t:.17g}"
        return RunResult(EXIT_SCALING, (), summary, f"scaling condition violated: {why}")
    if guarantee and s.family == "exponential" and T > s.t0 + EXPONENTIAL_HORIZON * d.delta:
        return RunResult(EXIT_PARSE, (), summary,
                         f"exponential runs are capped at t0 + {EXPONENTIAL_HORIZON:g} delta "
                         f"= {s.t0 + EXPONENTIAL_HORIZON * d.delta:g}; got t_end={T:g}")
    try:
        tr = integrate_flow(p, d, s, eps, init, cfg.integrator, ref)
    except UsageError as e:
        return RunResult(EXIT_PARSE, (), summary, f"invalid configuration: {e}")
    summary["integration"] = {"status": tr.status, "status_t": tr.status_t, "n_steps": tr.n_steps,
                              "n_rejected": tr.n_rejected, "n_samples": len(tr), "compiled": tr.meta["compiled"]}
    if not tr.completed:
        summary["runtime_s"] = time.perf_counter() - started
        if write:
            out.mkdir(parents=True, exist_ok=True)
            write_trajectory_csv(tr, out / "trajectory.csv")
            _write_summary(out / "summary.yaml", summary)
        return RunResult(EXIT_INTEGRATION, (), summary,
                         f"integration {tr.status} at t={tr.status_t:.17g}: {tr.message}")

    energies = an.energy_series(tr)
    table = an.metrics(p, tr, ref)
    perturbed = not eps.is_zero
    verdicts = []
    for check in cfg.checks:
        if check == "energy_monotonicity":
            r = an.energy_monotonicity_check(energies, TOL_SLOPE, perturbed=perturbed)
            verdicts.append(Verdict(check, r.passed, asdict(r)))
            if d.guaranteed:
                floor = float(min(energies.e0.min(), energies.e1.min()))
                verdicts.append(Verdict("energy_nonnegative", floor >= -1e-10, {"min_term": floor}))
        elif check == "lemma1":
            res = float(an.lemma1_residual(p, tr).max())
            verdicts.append(Verdict(check, res <= TOL_LEMMA1, {"max_residual": res, "tol": TOL_LEMMA1}))
        elif check == "saddle":
            low = float(table.lagrangian_gap.min())
            verdicts.append(Verdict(check, low >= -TOL_SADDLE, {"min_lagrangian_gap": low}))
        elif check == "integrability":
            # the bounds assume an unperturbed flow with gamma * delta > 1
            if perturbed or not d.guaranteed:
                continue
            r = an.integrability_check(tr, TOL_BOUND)
            verdicts.append(Verdict(check, r.passed, asdict(r)))
        elif check == "gronwall":
            if not eps.claims_integrable:
                continue
            r = an.gronwall_bound_check(tr, ref, d, eps)
            verdicts.append(Verdict(check, r.passed, asdict(r)))
        elif check == "rates":
            verdicts.extend(_rate_verdicts(cfg, table, tr, beta(s, tr.t)))

    summary["energy_start"] = float(energies.e_total[0])
    summary["dual_drift"] = an.dual_drift(tr)
    if perturbed:
        summary["perturbation_l1"] = perturbation_l1_norm(eps, s.t0, T, p.dim_primal)
    summary["final"] = {k: float(v[-1]) for k, v in table.as_dict().items() if k != "t"}
    if guarantee:
        summary["verdicts"] = [{"check": v.check, "passed": bool(v.passed), **_plain(v.detail)} for v in verdicts]
        summary["verdict_table"] = [f"{v.check:28s} {'PASS' if v.passed else 'FAIL'}" for v in verdicts]
    else:
        # exploratory run: diagnostics are reported but nothing is asserted
        summary["diagnostics"] = [
            {"check": v.check, "observed_pass": bool(v.passed),
             **{k: val for k, val in _plain(v.detail).items() if k != "passed"}}
            for v in verdicts]
    summary["runtime_s"] = time.perf_counter() - started
    if write:
        out.mkdir(parents=True, exist_ok=True)
        write_trajectory_csv(tr, out / "trajectory.csv")
        an.write_diagnostics_csv(tr, energies, table, out / "diagnostics.csv")
        _write_summary(out / "summary.yaml", summary)
    failed = [v.check for v in verdicts if not v.passed] if guarantee else []
    code = EXIT_CHECK if failed else EXIT_OK
    return RunResult(code, tuple(verdicts), summary, f"failed checks: {', '.join(failed)}" if failed else "")


def _plain(obj):
    """Convert numpy scalars, tuples and infinities into YAML-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


class _Dumper(yaml.SafeDumper):
    pass


def _float_repr(dumper, value):
    if value != value:
        text = ".nan"
    elif value in (np.inf, -np.inf):
        text = ".inf" if value > 0 else "-.inf"
    else:
        text = f"{value:.17g}"
        if "." not in text:
            # YAML 1.1 only resolves floats that contain a dot
            mant, _, exp = text.partition("e")
            text = mant + ".0" + ("e" + exp if exp else "")
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float_repr)


def _write_summary(path, summary):
    with open(path, "w") as fh:
        yaml.dump(_plain(summary), fh, Dumper=_Dumper, sort_keys=False)


# -- sweep ------------------------------------------------------------------

def _parse_vary(text):
    if "=" not in text:
        raise ConfigError(f"--vary expects key=v1,v2,..., got {text!r}")
    key, values = text.split("=", 1)
    vals = [yaml.safe_load(v) for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError(f"--vary {key}: no values given")
    return key.strip(), vals


def _set_dotted(doc, key, value):
    node = doc
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key}: {part} is not a section")
    node[parts[-1]] = value


def _sweep_one(args):
    doc, key, value, guarantee, seed, out = args
    doc = copy.deepcopy(doc)
    _set_dotted(doc, key, value)
    try:
        cfg = config_from_dict(doc)
    except ConfigError as e:
        return key, value, EXIT_PARSE, str(e)
    res = run_experiment(cfg, guarantee, seed, out)
    return key, value, res.exit_code, res.message


# -- command line -------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(prog="pdflow", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--no-guarantee", action="store_true",
                        help="run even if the scaling condition fails; checks become diagnostics")
        sp.add_argument("--seed", type=int, help="override the seed of random builtins")
        sp.add_argument("--t-end", type=float, help="override integrator.t_end")
        sp.add_argument("--method", choices=("rk4_fixed", "adaptive_embedded"))
        sp.add_argument("--out", help="output directory (overrides output_dir)")

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    common(r)
    p = sub.add_parser("preset", help="run a named preset")
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--write-config", metavar="FILE", help="only write the preset config to FILE")
    common(p)
    s = sub.add_parser("sweep", help="run a config for several values of one key")
    s.add_argument("config")
    s.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    s.add_argument("--workers", type=int, default=1)
    common(s)
    return ap


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    guarantee = not args.no_guarantee
    try:
        if args.command == "sweep":
            return _main_sweep(args, guarantee)
        cfg = load_config(args.config) if args.command == "run" else preset(args.name)
        cfg = _apply_overrides(cfg, args.t_end, args.method)
        if args.command == "preset" and args.write_config:
            with open(args.write_config, "w") as fh:
                yaml.dump(config_to_dict(cfg), fh, Dumper=_Dumper, sort_keys=False)
            return EXIT_OK
    except ConfigError as e:
        print(f"pdflow: {e}", file=sys.stderr)
        return EXIT_PARSE
    except UsageError as e:
        print(f"pdflow: invalid configuration: {e}", file=sys.stderr)
        return EXIT_PARSE
    res = run_experiment(cfg, guarantee, args.seed, args.out)
    out = args.out or cfg.output_dir
    for line in res.summary.get("verdict_table", []):
        print(line)
    if res.exit_code == EXIT_OK:
        print(f"pdflow: {cfg.name}: ok ({out})")
    else:
        print(f"pdflow: {cfg.name}: {res.message}", file=sys.stderr)
    return res.exit_code


def _main_sweep(args, guarantee):
    try:
        with open(args.config) as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load {args.config}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    key, values = _parse_vary(args.vary)
    for k, v in (("t_end", args.t_end), ("method", args.method)):
        if v is not None:
            doc.setdefault("integrator", {})[k] = v
    base = Path(args.out or doc.get("output_dir", "pdflow_sweep"))
    jobs = [(doc, key, v, guarantee, args.seed, base / f"{key}={v}") for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    for k, v, code, msg in results:
        print(f"{k}={v}: exit {code}" + (f" ({msg})" if msg else ""))
    return max(code for _, _, code, _ in results)


if __name__ == "__main__":
    sys.exit(main())
