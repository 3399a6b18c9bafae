"""Command-line front end.

    rmlax verify --suite {elliptic,rmatrix,lax,quantum,tops,all} [flags]
    rmlax simulate [model flags] --t-end 5 --dt 1e-3 --output run
    rmlax table
    rmlax quantum-check [--system A --n 2 --ntilde 2]
    rmlax tops-check

Exit status: 0 when every identity behaves as expected, 1 when one does not
(or a simulation hits a pole), 2 for invalid input.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from rmlax import dynamics, elliptic, laxpairs, quantum, rmatrix, spin_tops
from rmlax.laxpairs import InadmissibleConfig, ModelConfig
from rmlax.report import IdentityReport

SUITES = ("elliptic", "rmatrix", "lax", "quantum", "tops")
DEFAULT_SAMPLES = {"elliptic": 50, "rmatrix": 50, "lax": 20, "quantum": 3, "tops": 5}
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def parse_complex(text) -> complex:
    """'0+1i', '0.8i', '1', '-0.3-2i' (a trailing j also works)."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("I", "i").replace("j", "i")
    s = re.sub(r"(^|[+-])i", r"\g<1>1i", s)
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _complex_list(text) -> list[complex]:
    return [parse_complex(t) for t in str(text).split(",") if t.strip()]


def _fmt_complex(z: complex) -> str:
    return dynamics._fmt(complex(z))


# -- argument parsing -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key=value file; flags override it")
    p.add_argument("--tau", type=parse_complex, default=None, help='modulus as "a+bi" (default 0+1i)')
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None, help="relative tolerance (default 1e-9)")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--output", default=None, help="report path (JSON) or file prefix for simulate")


def _model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", choices=laxpairs.ROOT_SYSTEMS, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--ntilde", type=int, default=None)
    p.add_argument("--nu", type=parse_complex, default=None)
    p.add_argument("--mu", type=parse_complex, default=None)
    p.add_argument("--g", type=parse_complex, default=None)
    p.add_argument("--family", choices=("belavin", "yang", "xxz", "spin_exchange"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmlax", description="R-matrix-valued Lax pairs: verification and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run identity suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default=None)
    v.add_argument("--expect", choices=("pass", "fail"), default=None, help="expected outcome for a single --system")
    v.add_argument("--workers", type=int, default=1, help="run suites in this many processes")
    _common(v)
    _model(v)

    s = sub.add_parser("simulate", help="integrate a trajectory and monitor conserved quantities")
    _common(s)
    _model(s)
    s.add_argument("--t-end", dest="t_end", type=float, default=None)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--q0", type=_complex_list, default=None, help="comma-separated initial positions")
    s.add_argument("--p0", type=_complex_list, default=None, help="comma-separated initial momenta")
    s.add_argument("--z-probe", dest="z_probe", type=_complex_list, default=None)
    s.add_argument("--preset", choices=("reference", "stationary"), default=None)

    sub.add_parser("table", help="print the admissibility table")

    q = sub.add_parser("quantum-check", help="quantum Lax equation checks")
    _common(q)
    _model(q)
    q.add_argument("--hbar", type=_complex_list, default=None, help="comma-separated hbar values")
    q.add_argument("--expect", choices=("pass", "fail"), default=None)

    t = sub.add_parser("tops-check", help="spin Calogero-Moser and interacting tops checks")
    _common(t)
    return parser


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


_CONVERT = {
    "tau": parse_complex,
    "nu": parse_complex,
    "mu": parse_complex,
    "g": parse_complex,
    "seed": int,
    "n": int,
    "ntilde": int,
    "samples": int,
    "tol": float,
    "t_end": float,
    "dt": float,
    "q0": _complex_list,
    "p0": _complex_list,
    "z_probe": _complex_list,
    "hbar": _complex_list,
}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from --config, then from the built-in defaults."""
    if getattr(args, "config", None):
        try:
            values = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        for k, v in values.items():
            if not hasattr(args, k):
                raise UsageError(f"unknown config key {k!r}")
            if getattr(args, k) is None:
                try:
                    setattr(args, k, _CONVERT.get(k, str)(v))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {k}: {exc}") from None
    defaults = {"tau": 1j, "seed": 0, "tol": 1e-9}
    for k, v in defaults.items():
        if hasattr(args, k) and getattr(args, k) is None:
            setattr(args, k, v)
    if hasattr(args, "tau") and args.tau.imag <= elliptic.TAU_MIN:
        raise UsageError(f"Im tau must exceed {elliptic.TAU_MIN}")
    if getattr(args, "samples", None) is not None and args.samples < 1:
        raise UsageError("--samples must be positive")
    return args


def model_config(args, override=False) -> ModelConfig:
    system = args.system or "A"
    n = args.n if args.n is not None else 2
    ntilde = args.ntilde if args.ntilde is not None else (1 if system == "ScalarDP" else 2)
    kw = {"tau": args.tau, "ntilde": ntilde, "override": override}
    for name in ("nu", "mu", "g", "family"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    try:
        return ModelConfig(system, n, **kw)
    except InadmissibleConfig as exc:
        raise UsageError(str(exc)) from None


# -- commands ------------------------------------------------------------------------------


def _samples(args, suite) -> int:
    return args.samples if args.samples is not None else DEFAULT_SAMPLES[suite]


def run_suite(suite: str, args) -> IdentityReport:
    k = _samples(args, suite)
    if suite == "elliptic":
        rep = IdentityReport("elliptic")
        fams = [elliptic.EllipticFamily(args.tau), elliptic.RationalFamily(), elliptic.TrigonometricFamily()]
        for i, fam in enumerate(fams):
            rep.merge(elliptic.check_fay_suite(fam, elliptic.Sampler(args.seed * 31 + i), args.tol, k))
        return rep
    if suite == "rmatrix":
        return rmatrix.check_rmatrix_suite(args.ntilde, args.tau, args.seed, k, args.tol)
    if suite == "lax":
        if args.system is None:
            return laxpairs.check_lax_suite(args.seed, k, args.tol, args.tau)
        return laxpairs.check_lax(model_config(args, override=True), args.seed, k, args.tol, args.expect)
    if suite == "quantum":
        return quantum.check_quantum(args.seed, k, args.tol, tau=args.tau)
    if suite == "tops":
        return spin_tops.check_tops(args.seed, k, args.tol, tau=args.tau)
    raise UsageError(f"unknown suite {suite!r}")


def _environment(args, suites) -> dict:
    return {
        "suites": list(suites),
        "seed": args.seed,
        "tau": _fmt_complex(args.tau),
        "tol": args.tol,
        "samples": {s: _samples(args, s) for s in suites},
        "ntilde": args.ntilde,
        "system": getattr(args, "system", None),
        "pole_guard": elliptic.default_pole_guard(),
    }


def render(reports: list[IdentityReport], environment: dict) -> str:
    entries = []
    for r in reports:
        for e in r.entries:
            d = e.to_dict()
            d["suite"] = e.suite or r.suite
            entries.append(d)
    entries.sort(key=lambda d: (d["suite"], d["identity"]))
    doc = {
        "environment": environment,
        "pass": all(r.passed for r in reports),
        "resampled": sum(r.resampled for r in reports),
        "entries": entries,
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(obj):
    if isinstance(obj, complex):
        return _fmt_complex(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _finish(reports, environment, args, out) -> int:
    text = render(reports, environment)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    for r in reports:
        for line in r.summary_lines():
            print(line, file=out)
    failed = [e for r in reports for e in r.failures()]
    for e in failed:
        print(f"FAILED {e.suite}:{e.identity} max_residual={e.max_residual:.3e} tol={e.tol:.1e} expect={e.expect}", file=sys.stderr)
    if not args.output:
        out.write(text)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args, out=None) -> int:
    out = sys.stdout if out is None else out
    if args.suite is None:
        raise UsageError("verify needs --suite")
    suites = SUITES if args.suite == "all" else (args.suite,)
    if args.expect and not (args.suite == "lax" and args.system):
        raise UsageError("--expect applies to a single --system in the lax suite")
    workers = getattr(args, "workers", None)
    workers = 1 if workers is None else workers
    if workers < 1:
        raise UsageError("--workers must be positive")
    if workers > 1 and len(suites) > 1:
        # entries are sorted on output, so completion order never shows
        with ProcessPoolExecutor(min(workers, len(suites))) as pool:
            reports = list(pool.map(run_suite, suites, [args] * len(suites)))
    else:
        reports = [run_suite(s, args) for s in suites]
    return _finish(reports, _environment(args, suites), args, out)


def cmd_quantum_check(args, out=None) -> int:
    out = sys.stdout if out is None else out
    if args.system is None:
        return cmd_verify(_with(args, suite="quantum"), out)
    cfg = model_config(args, override=True)
    hbars = args.hbar or [0.1, 1.0, 2.0]
    k = args.samples or DEFAULT_SAMPLES["quantum"]
    rng = np.random.default_rng(args.seed)
    res, pd = [], []
    for _ in range(k):
        st = laxpairs.random_state(cfg, rng)
        z = complex(rng.uniform(0.1, 0.4) + 1j * rng.uniform(0.1, 0.4))
        res += [quantum.quantum_lax_residual(cfg, st.q, z, h).residual for h in hbars]
        pd.append(quantum.check_pd_commutation(cfg, st.q).residual)
    expect = args.expect or ("pass" if cfg.root_system in ("A", "B", "D") else "fail")
    tol = args.tol if expect == "pass" else 1e-3
    rep = IdentityReport("quantum")
    label = laxpairs.config_label(cfg)
    rep.add(f"quantum_lax_{label}", "quantum Lax equation", res, tol, expect=expect)
    rep.add(f"pd_commutation_{label}", "momenta commute with D + F0", pd, 1e-9 if expect == "pass" else 1e-3, expect=expect)
    env = _environment(args, ("quantum",))
    env["hbar"] = [_fmt_complex(h) for h in hbars]
    return _finish([rep], env, args, out)


def cmd_tops_check(args, out=None) -> int:
    return cmd_verify(_with(args, suite="tops", ntilde=None, system=None, expect=None), out)


def _with(args, **kw):
    ns = argparse.Namespace(**vars(args))
    for k, v in kw.items():
        setattr(ns, k, v)
    return ns


def cmd_table(args=None, out=None) -> int:
    out = sys.stdout if out is None else out
    out.write(laxpairs.format_table() + "\n\n")
    rows = []
    for key in laxpairs.TABLE_ROWS:
        row = laxpairs.lookup(key)
        rows.append({"root_system": key, **row})
    doc = {"columns": list(laxpairs.TABLE_COLUMNS), "rows": rows}
    out.write(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_simulate(args, out=None) -> int:
    out = sys.stdout if out is None else out
    if args.preset == "stationary":
        cfg, state = dynamics.stationary_run()
    elif args.preset == "reference" or (args.q0 is None and args.system is None):
        cfg, state = dynamics.reference_run(args.ntilde or 1)
    else:
        cfg = model_config(args)
        if args.q0 is None:
            state = laxpairs.random_state(cfg, np.random.default_rng(args.seed))
        else:
            state = laxpairs.PhasePoint(args.q0, args.p0 if args.p0 is not None else [0] * len(args.q0))
    if args.q0 is not None and args.preset is not None:
        raise UsageError("--q0 and --preset are exclusive")
    if len(state.q) != cfg.n:
        raise UsageError(f"need {cfg.n} initial positions, got {len(state.q)}")
    t_end = 5.0 if args.t_end is None else args.t_end
    dt = 1e-3 if args.dt is None else args.dt
    probes = tuple(args.z_probe) if args.z_probe else dynamics.DEFAULT_PROBES
    try:
        traj = dynamics.integrate(cfg, state, t_end, dt, probes)
    except (dynamics.PoleApproach, dynamics.StepUnderflow) as exc:
        print(f"simulation stopped: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = dynamics.conserved_report(traj)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        traj.to_csv(f"{args.output}.csv")
        with open(f"{args.output}.json", "w") as fh:
            fh.write(text)
    out.write(text)
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "table": cmd_table,
    "quantum-check": cmd_quantum_check,
    "tops-check": cmd_tops_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        if args.command != "table":
            args = resolve(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rmlax: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
