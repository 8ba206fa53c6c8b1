"""Command-line front end wiring the library into reproducible experiments.

Subcommands: ``classify``, ``evolve``, ``verify``, ``hunt``.  Each takes a
flat key=value config file (see :mod:`heatconvex.config`) plus optional
overrides and writes plain CSV data files and a JSON metadata record into
the output directory.  Exit codes: 0 ok, 2 config error, 3 inconclusive
classification, 4 existence/evaluation window error, 5 significant
violation found by verify.

Outputs carry no timestamps and all floats are printed with %.17g, so the
same config always produces bit-identical files.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from .certify import check_F_convex, hunt_violation
from .config import ConfigError, load_config
from .heatflow import (EXISTENCE_MARGIN, EvaluationWindowError,
                       ExistenceWindowError, heat_evolve_dirichlet,
                       heat_evolve_free, maximal_time_hint)
from .numerics import DomainError
from .transforms import ClassReport, classify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_WINDOW = 4
EXIT_VIOLATION = 5


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _slug(label):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label).strip("_") or "transform"


def _write(out_dir, name, text):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _write_meta(cfg, command, name, extra):
    record = {"command": command, "config": cfg.resolved}
    record.update(extra)
    _write(cfg.out_dir, name, json.dumps(record, sort_keys=True, indent=2) + "\n")


def _check_schedule(phi, times):
    """ExistenceWindowError before any file is written, not halfway through."""
    A = float(getattr(phi, "growth_A", 0.0))
    t_max = max(times)
    if 4.0 * A * t_max >= 1.0 - EXISTENCE_MARGIN:
        raise ExistenceWindowError(
            f"t={t_max:g} exceeds the existence window for growth exponent "
            f"A={A:.6g}; largest admitted time is about "
            f"{maximal_time_hint(A):.6g}")


def _evolve(cfg, phi, t):
    lo, hi, h = cfg.grid
    if cfg.domain.kind == "free_space":
        return heat_evolve_free(phi, t, (lo, hi, h), eps_tail=cfg.eps_tail)
    (a, b), = cfg.domain.bounds
    return heat_evolve_dirichlet(phi, cfg.domain, t, (a, b, h))


def _require_transforms(cfg):
    if not cfg.transforms:
        raise ConfigError("config lists no transforms")


# -- subcommands ----------------------------------------------------------------


def cmd_classify(cfg):
    """Classify every configured transform; exit 3 on any inconclusive."""
    _require_transforms(cfg)
    reports = [classify(F) for F in cfg.transforms]
    lines = [ClassReport.csv_header()] + [r.to_csv_row() for r in reports]
    _write(cfg.out_dir, "classify.csv", "\n".join(lines) + "\n")
    _write_meta(cfg, "classify", "classify_meta.json",
                {"verdicts": {r.label: r.verdict for r in reports}})
    for r in reports:
        print(f"{r.label}: {r.verdict} [{r.basis}]")
    if any(r.verdict == "inconclusive" for r in reports):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_evolve(cfg):
    """Write u(.,t) for each scheduled t plus a metadata record."""
    F_ctx = cfg.transforms[0] if cfg.transforms else None
    phi = cfg.datum(F_ctx)
    _check_schedule(phi, cfg.times)
    results = []
    for i, t in enumerate(cfg.times):
        u = _evolve(cfg, phi, t)
        fname = f"evolve_{i:02d}.csv"
        _write(cfg.out_dir, fname, f"# t={t!r}\n" + u.to_csv())
        results.append({"file": fname, "t": t, "value_error": u.value_error,
                        "growth_a": u.growth_a, "growth_A": u.growth_A})
        print(f"t={t:g}: wrote {fname} (value_error {u.value_error:.3g})")
    _write_meta(cfg, "evolve", "evolve_meta.json", {"results": results})
    return EXIT_OK


_VERIFY_HEADER = "transform,t,status,gap,noise_floor,significant,lambda,x0,x1"


def cmd_verify(cfg):
    """Certificate table across the schedule; exit 5 on significant violation."""
    _require_transforms(cfg)
    rows = [_VERIFY_HEADER]
    any_significant = False
    for F in cfg.transforms:
        report = classify(F)
        if report.verdict != "preserved":
            print(f"warning: {F.label} classifies as {report.verdict}, "
                  "not preserved; verifying anyway", file=sys.stderr)
        phi = cfg.datum(F)
        _check_schedule(phi, cfg.times)
        for t in cfg.times:
            u = _evolve(cfg, phi, t)
            cert = check_F_convex(u, F, cfg.plan)
            worst = cert.worst
            significant = bool(
                worst is not None
                and worst.gap > cfg.significance_factor * cert.noise_floor)
            any_significant |= significant
            if worst is None:
                tail = ",,,"
            else:
                tail = (f"{worst.lam:.17g},{_fmt(worst.x0)},{_fmt(worst.x1)}")
            gap = worst.gap if worst is not None else np.nan
            rows.append(f"{F.label},{t:.17g},{cert.status},{gap:.17g},"
                        f"{cert.noise_floor:.17g},"
                        f"{'true' if significant else 'false'},{tail}")
            print(f"{F.label} t={t:g}: {cert.status} gap={gap:.3g} "
                  f"noise={cert.noise_floor:.3g}"
                  + (" SIGNIFICANT" if significant else ""))
    _write(cfg.out_dir, "verify.csv", "\n".join(rows) + "\n")
    _write_meta(cfg, "verify", "verify_meta.json",
                {"significant_violation": any_significant})
    return EXIT_VIOLATION if any_significant else EXIT_OK


def cmd_hunt(cfg):
    """Refinement-driven violation search; writes history per transform."""
    _require_transforms(cfg)
    lo, hi, h = cfg.grid
    n_base = int(round((hi - lo) / h)) + 1
    summary = {}
    for F in cfg.transforms:
        phi = cfg.datum(F)
        _check_schedule(phi, cfg.times)
        history = []
        cert, t_first = hunt_violation(
            F, phi, cfg.times, (lo, hi), refine=cfg.refine_levels,
            plan=cfg.plan, n_base=n_base, history=history)
        lines = ["t,level,h,status,gap,noise_floor,significant"]
        for rec in history:
            c = rec["certificate"]
            gap = c.worst.gap if c.worst is not None else np.nan
            lines.append(f"{rec['t']:.17g},{rec['level']},{rec['h']:.17g},"
                         f"{c.status},{gap:.17g},{c.noise_floor:.17g},"
                         f"{'true' if c.significant else 'false'}")
        if t_first is not None and cert.worst is not None:
            lines.append(f"# earliest_significant_t={t_first:.17g}")
            lines.append(f"# worst lambda={cert.worst.lam:.17g} "
                         f"x0={_fmt(cert.worst.x0)} x1={_fmt(cert.worst.x1)} "
                         f"gap={cert.worst.gap:.17g} "
                         f"noise_floor={cert.noise_floor:.17g}")
            print(f"{F.label}: significant violation at t={t_first:g} "
                  f"(gap {cert.worst.gap:.3g}, noise {cert.noise_floor:.3g})")
        else:
            lines.append("# no stable significant violation found")
            print(f"{F.label}: no stable significant violation found")
        fname = f"hunt_{_slug(F.label)}.csv"
        _write(cfg.out_dir, fname, "\n".join(lines) + "\n")
        summary[F.label] = t_first
    _write_meta(cfg, "hunt", "hunt_meta.json",
                {"earliest_significant_t": summary})
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------


_COMMANDS = {
    "classify": (cmd_classify, "classify configured transforms"),
    "evolve": (cmd_evolve, "evolve the configured datum over the schedule"),
    "verify": (cmd_verify, "certify F-convexity of the evolved datum"),
    "hunt": (cmd_hunt, "search the schedule for a stable violation"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heatconvex",
        description="Heat-flow convexity experiments driven by config files.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, help_text) in _COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="key=value config file")
        s.add_argument("--out", help="output directory (overrides config)")
        s.add_argument("--grid-h", type=float, help="grid spacing override")
        s.add_argument("--grid-extent",
                       help="window override, written lo,hi "
                            "(use --grid-extent=-8,8 for negative lo)")
        s.add_argument("--times", help="comma-separated time schedule override")
        s.add_argument("--seed", type=int, help="randomized-plan seed override")
        s.set_defaults(fn=fn)
    return parser


def entry(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "out": args.out,
        "grid.h": args.grid_h,
        "flow.times": args.times,
        "seed": args.seed,
    }
    if args.grid_extent is not None:
        parts = re.split(r"[,:]", args.grid_extent)
        if len(parts) != 2:
            print("config error: --grid-extent expects lo,hi", file=sys.stderr)
            return EXIT_CONFIG
        try:
            overrides["grid.lo"], overrides["grid.hi"] = (float(p) for p in parts)
        except ValueError:
            print("config error: --grid-extent expects numbers", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = load_config(args.config, overrides)
        return args.fn(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExistenceWindowError, EvaluationWindowError) as exc:
        print(f"window error: {exc}", file=sys.stderr)
        return EXIT_WINDOW


def main():
    sys.exit(entry())


if __name__ == "__main__":
    main()
