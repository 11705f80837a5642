"""Command-line driver: ``sadic-rigidity {rate,measure,language,complexity,verify,empirical}``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from .config import ConfigError, RunConfig, SystemSpec, build_system, load_config
from .measures import (
    LevelMeasure,
    MeasureError,
    empirical_measure,
    glued_ergodic_measure,
    measure_csv,
    substitution_measure,
)
from .morphisms import MaterializationError, MorphismError, materialize
from .rigidity import (
    DEFAULT_CAP,
    DEFAULT_K_MAX,
    DEFAULT_TOL,
    RateError,
    delta_estimate,
    empirical_return_mass,
    reports_csv,
    reports_json,
)
from .sadic import (
    ConstantSequence,
    GluedPowersSequence,
    SequenceError,
    complexity,
    language,
)
from .verify import CHECKS, run_check
from .words import format_word

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


def _header(cfg: RunConfig, extra: str = "") -> str:
    line = (f"# defaults: k={DEFAULT_K_MAX} tolerance={DEFAULT_TOL:g} depth-cap={DEFAULT_CAP}; "
            f"this run: tolerance={cfg.tolerance:g} depth-cap={cfg.cap}")
    return line + (f"; {extra}" if extra else "")


def _system_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system")
    g.add_argument("--config", help="TOML config file")
    g.add_argument("--zeta", type=int, metavar="L", help="constant sequence of a -> a^{L-1}b")
    g.add_argument("--morphism", help="constant sequence of a literal substitution, e.g. 'a -> ab; b -> ba'")
    g.add_argument("--desk-variant", action="store_true", help="glued ζ_L / ζ_{L^2} system")
    g.add_argument("--final-family", action="store_true", help="glued ζ_{L^2} / ζ_{L^4} system")
    g.add_argument("--L", type=int, help="base length for the glued families")
    g.add_argument("--d", type=int, help="number of components for the glued families")


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, help="convergence tolerance")
    p.add_argument("--cap", type=int, help="depth cap for the ansatz")
    p.add_argument("--format", choices=("table", "json", "csv"))
    p.add_argument("--output", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sadic-rigidity", description="Partial rigidity of constant-length S-adic systems")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rate", help="partial rigidity rate estimates")
    _system_args(r)
    _run_args(r)
    r.add_argument("--k-max", type=int, help="largest word length scanned")
    r.add_argument("--levels", help="comma separated levels, e.g. 2,3")
    r.add_argument("--component", type=int, help="only this ergodic component")

    m = sub.add_parser("measure", help="level measures as CSV")
    _system_args(m)
    _run_args(m)
    m.add_argument("--k", type=int, help="largest word length (default 3)")
    m.add_argument("--level", type=int)
    m.add_argument("--component", type=int)
    m.add_argument("--depth", type=int, help="fixed ansatz depth instead of doubling")

    for name in ("language", "complexity"):
        q = sub.add_parser(name, help=f"{name} of a level subshift")
        _system_args(q)
        q.add_argument("--level", type=int, default=0)
        q.add_argument("--max-len", type=int, default=4)
        q.add_argument("--output")

    v = sub.add_parser("verify", help="named verification checks")
    v.add_argument("checks", nargs="*", help=f"any of: {', '.join(CHECKS)} (default all)")
    v.add_argument("--config")
    v.add_argument("--L", help="range for zeta-closed-form, e.g. 6..12 (even L only)")
    v.add_argument("--output")

    e = sub.add_parser("empirical", help="empirical measure of a materialized prefix")
    _system_args(e)
    e.add_argument("--depth", type=int, default=6, help="prefix σ_0...σ_{depth-1}(letter)")
    e.add_argument("--letter", help="starting letter (default: first letter)")
    e.add_argument("--k", type=int, default=3)
    e.add_argument("--shift", type=int, help="also report the return mass at this shift")
    e.add_argument("--output")
    return p


def _spec_from_args(args) -> RunConfig:
    chosen = [x for x in ("config", "zeta", "morphism", "desk_variant", "final_family")
              if getattr(args, x, None) not in (None, False)]
    if len(chosen) != 1:
        raise UsageError("choose exactly one of --config, --zeta, --morphism, --desk-variant, --final-family")
    if args.config:
        cfg = load_config(args.config)
    else:
        L = args.L if args.L is not None else 6
        d = args.d if args.d is not None else 2
        if args.zeta is not None:
            spec = SystemSpec("constant", zeta=args.zeta)
        elif args.morphism is not None:
            spec = SystemSpec("constant", morphism=args.morphism)
        elif args.desk_variant:
            spec = SystemSpec("desk-variant", L=L, d=d)
        else:
            spec = SystemSpec("final-family", L=L, d=d)
        cfg = RunConfig(spec)
    over = {}
    for attr, key in (("tol", "tolerance"), ("cap", "cap"), ("format", "format"), ("output", "output"),
                      ("k_max", "k_max"), ("k", "k"), ("depth", "depth"), ("component", "component"),
                      ("level", "level")):
        v = getattr(args, attr, None)
        if v is not None:
            over[key] = v
    if getattr(args, "levels", None):
        try:
            over["levels"] = tuple(int(x) for x in args.levels.split(","))
        except ValueError:
            raise UsageError(f"bad --levels {args.levels!r}") from None
    if over:
        fields = {**cfg.__dict__, **over}
        cfg = RunConfig(**fields)
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: Fraction | None) -> str:
    if x is None:
        return "-"
    return str(x) if x.denominator < 10**6 else f"{float(x):.12f}"


def cmd_rate(args) -> int:
    cfg = _spec_from_args(args)
    ds = build_system(cfg.system)
    if isinstance(ds, ConstantSequence):
        comps = [0]
        levels = cfg.levels or (0, 1, 2)
        k_max = cfg.k_max or DEFAULT_K_MAX
    else:
        comps = [cfg.component] if cfg.component is not None else list(range(ds.d))
        levels = cfg.levels or ((1, 2) if cfg.system.kind == "final-family" else (2, 3))
        k_max = cfg.k_max or (8 if cfg.system.kind == "final-family" else None)
    reports = [delta_estimate(ds, i, k_max=k_max, levels=levels, tol=cfg.tolerance, cap=cfg.cap)
               for i in comps]
    fmt = cfg.format
    if fmt == "json":
        body = json.dumps({"defaults": {"k": DEFAULT_K_MAX, "tolerance": DEFAULT_TOL, "depth_cap": DEFAULT_CAP},
                           "reports": json.loads(reports_json(reports))}, indent=2) + "\n"
    elif fmt == "csv":
        sys.stderr.write(_header(cfg) + "\n")
        body = reports_csv(reports)
    else:
        lines = [_header(cfg, f"k_max={reports[0].k_max} levels={','.join(map(str, levels))}")]
        lines.append(f"{'component':>9}  {'rate':>14}  {'k':>3}  {'sequence':<28} {'lower':>12}  {'upper':>12}  converged")
        for r in reports:
            mark = "" if not r.truncated else " (lower bound: k truncated)"
            lines.append(f"{r.component:>9}  {_fmt(r.rate):>14}  {r.k:>3}  {r.rigidity_sequence:<28} "
                         f"{_fmt(r.lower_bound):>12}  {_fmt(r.upper_bound):>12}  {'yes' if r.converged else 'no'}{mark}")
        body = "\n".join(lines) + "\n"
    _emit(body, cfg.output)
    return EXIT_OK if all(r.converged for r in reports) else EXIT_NOT_CONVERGED


def cmd_measure(args) -> int:
    cfg = _spec_from_args(args)
    ds = build_system(cfg.system)
    k = cfg.k or 3
    if isinstance(ds, ConstantSequence):
        mu = substitution_measure(ds.sigma, k)
        out = [LevelMeasure(cfg.level, mu.order, mu.alphabet, mu.masses)]
        converged = True
        note = "exact unique measure"
    else:
        comps = [cfg.component] if cfg.component is not None else list(range(ds.d))
        results = [glued_ergodic_measure(ds, i, cfg.level, k=k, depth=cfg.depth, tol=cfg.tolerance,
                                         cap=cfg.cap, bit_budget=cfg.bit_budget) for i in comps]
        out = [g.measure for g in results]
        converged = all(g.converged for g in results)
        note = "; ".join(f"component {g.component}: certificate {float(g.certificate):.3g} at depth {g.depth}, "
                         f"foreign mass {float(g.foreign_mass):.3g}, maximizer {g.maximizer_ok}"
                         for g in results)
    sys.stderr.write(_header(cfg, note) + "\n")
    _emit(measure_csv(out), cfg.output)
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def cmd_language(args, counts: bool = False) -> int:
    cfg = _spec_from_args(args)
    ds = build_system(cfg.system)
    if args.max_len < 1:
        raise UsageError("--max-len must be positive")
    if counts:
        body = "length,count\n" + "".join(f"{j},{c}\n" for j, c in
                                            enumerate(complexity(ds, args.level, args.max_len), 1))
    else:
        words = ds.alphabet_at(args.level).sorted(language(ds, args.level, args.max_len))
        body = "".join(format_word(w) + "\n" for w in words)
    _emit(body, args.output)
    return EXIT_OK


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        return [L for L in range(lo, hi + 1) if L % 2 == 0]
    return [int(x) for x in text.split(",")]


def cmd_verify(args) -> int:
    names = args.checks or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check {unknown[0]!r}; available: {', '.join(CHECKS)}")
    system = None
    if args.config:
        cfg = load_config(args.config)
        system = build_system(cfg.system)
        if not isinstance(system, GluedPowersSequence):
            raise UsageError("verify --config needs a glued system")
    lines = [f"# defaults: k={DEFAULT_K_MAX} tolerance={DEFAULT_TOL:g} depth-cap={DEFAULT_CAP}"]
    ok = True
    for name in names:
        kwargs = {}
        if name == "zeta-closed-form" and args.L:
            try:
                kwargs["Ls"] = _parse_range(args.L)
            except ValueError:
                raise UsageError(f"bad --L {args.L!r}") from None
        if name in ("bkk", "gluing-convergence") and system is not None:
            kwargs["system"] = system
        res = run_check(name, **kwargs)
        ok &= res.passed
        lines.append(f"{'PASS' if res.passed else 'FAIL'} {name} ({res.seconds:.1f}s)")
        lines.extend("  " + x for x in res.lines)
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK if ok else EXIT_USAGE


def cmd_empirical(args) -> int:
    cfg = _spec_from_args(args)
    ds = build_system(cfg.system)
    alphabet = ds.alphabet_at(0)
    letter = args.letter or alphabet.symbols[0]
    prefix = materialize(ds.chain(0, args.depth), letter)
    mu = empirical_measure(prefix, args.k, alphabet)
    body = measure_csv([mu])
    if args.shift is not None:
        ret = empirical_return_mass(prefix, args.shift, 2)
        sys.stderr.write(f"# return mass at h={args.shift}, k=2: {ret} ({float(ret):.6f})\n")
    sys.stderr.write(f"# prefix length {len(prefix)}\n")
    _emit(body, args.output)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    handlers = {
        "rate": cmd_rate,
        "measure": cmd_measure,
        "language": cmd_language,
        "complexity": lambda a: cmd_language(a, counts=True),
        "verify": cmd_verify,
        "empirical": cmd_empirical,
    }
    try:
        return handlers[args.command](args)
    except (UsageError, ConfigError, RateError, MeasureError, MorphismError, SequenceError,
            MaterializationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
