"""Command-line front end: ``semirigid analyze|optimize|verify|catalog``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BENCHMARKS, CONNECTION_VARIANTS, FRAMES, benchmark_document, run_verification
from .config import ga_from_document, load_document, problem_from_document, resolve_document
from .constraints import evaluate_constraints
from .fuzzy import FitnessMode, Shape
from .loading import design_load_cases
from .model import ConfigError, apply_design, frame_weight
from .optimizer import NEWTONS_PER_TONNE, run
from .sections import INCH, CatalogError, SectionNotFound, default_catalog, lookup
from .solver import DOF_NAMES, UnstableStructure, analyze

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_UNSTABLE = 3

log = logging.getLogger("semirigid")


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(doc) -> str:
    def clean(x):
        if isinstance(x, np.generic):
            x = x.item()
        if isinstance(x, float) and not math.isfinite(x):
            return None
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        return x
    return json.dumps(clean(doc), indent=2, sort_keys=True) + "\n"


def _error(msg: str) -> None:
    print(f"semirigid: error: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    try:
        doc = resolve_document(load_document(args.config))
        problem = problem_from_document(doc, connection=args.connection)
        design = doc.get("design")
        if not isinstance(design, dict) or not design:
            raise ConfigError("analyze needs a 'design' mapping of group label -> section name")
        sized = apply_design(problem.frame, design)
        cases = design_load_cases(sized, problem.loads)
        results = analyze(sized, cases, problem.E)
    except (ConfigError, CatalogError, SectionNotFound) as exc:
        _error(str(exc))
        return EXIT_INVALID
    except UnstableStructure as exc:
        _error(str(exc))
        return EXIT_UNSTABLE

    report = evaluate_constraints(sized, results, problem.E, problem.limits)
    out = {
        "problem": problem.name,
        "design": sized.by_label(),
        "weight_n": frame_weight(sized, problem.unit_weight),
        "load_cases": [],
        "constraints": {
            "stress_ratios": {str(k): v for k, v in sorted(report.stress_ratios.items())},
            "drift_ratio": report.drift_ratio,
            "aux_ratios": report.aux_ratios,
            "worst": report.worst,
            "feasible": report.feasible,
        },
    }
    for res in results:
        out["load_cases"].append({
            "name": res.load_case.name,
            "roof_drift_m": res.roof_drift(sized),
            "displacements": {str(n): dict(zip(DOF_NAMES, map(float, d)))
                              for n, d in sorted(res.displacements.items())},
            "member_end_forces": {str(m): [float(x) for x in f]
                                  for m, f in sorted(res.member_end_forces.items())},
            "reactions": {str(n): dict(zip(("fx", "fy", "mz"), map(float, r)))
                          for n, r in sorted(res.reactions.items())},
        })
    text = _json(out)
    if args.out:
        write_atomic(args.out, text)
        print(f"worst ratio {report.worst:.4f} ({'feasible' if report.feasible else 'infeasible'}); "
              f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------- optimize


def _load_target(target: str) -> tuple[dict, str]:
    if target.lower() in FRAMES:
        return benchmark_document(target), target.lower()
    if target.lower() == "verify":
        raise ConfigError("'verify' has no design variables; use the verify command")
    path = Path(target)
    if path.suffix.lower() in (".json", ".yaml", ".yml") or path.exists():
        doc = resolve_document(load_document(path))
        return doc, path.stem
    raise ConfigError(f"unknown benchmark {target!r}; choose from {', '.join(BENCHMARKS)} or give a config path")


def _setup_run_log(path: Path) -> logging.Handler:
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    return handler


def cmd_optimize(args) -> int:
    try:
        doc, stem = _load_target(args.target)
        problem = problem_from_document(doc, connection=args.connection)
        ga = ga_from_document(doc)
        overrides = {"seed": args.seed, "restarts": args.restarts, "max_generations": args.generations,
                     "population_size": args.population, "mutation_rate": args.mutation}
        ga = replace(ga, **{k: v for k, v in overrides.items() if v is not None})
        fz = problem.fuzzy
        if args.fuzzy_shape:
            fz = replace(fz, shape=Shape(args.fuzzy_shape))
        if args.fitness:
            fz = replace(fz, mode=FitnessMode(args.fitness))
        problem = replace(problem, fuzzy=fz)
    except (ConfigError, CatalogError, SectionNotFound) as exc:
        _error(str(exc))
        return EXIT_INVALID

    conn = args.connection or str(doc.get("connection", "rigid"))
    out_dir = Path(args.out or f"runs/{stem}_{conn}_seed{ga.seed}")
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = _setup_run_log(out_dir / "run.log")
    try:
        log.info("problem %s connection %s", problem.name, conn)
        log.info("ga %s", ga)
        log.info("fuzzy shape %s fitness %s", fz.shape.value, fz.mode.value)
        result = run(problem, ga, jobs=args.jobs)
        for k, r in enumerate(result.restarts):
            write_atomic(out_dir / f"history_{k:02d}.csv", r.history_csv())
            log.info("restart %d seed %d best %.6f t feasible %s", k, r.seed,
                     r.best.weight / NEWTONS_PER_TONNE, r.best.feasible)
        summary = result.summary()
        summary["connection"] = conn
        write_atomic(out_dir / "result.json", _json(summary))
        log.info("best %.6f t (restart %d)", summary["weight_t"], summary["best_restart"])
    except (ConfigError, CatalogError, SectionNotFound) as exc:
        _error(str(exc))
        return EXIT_INVALID
    finally:
        log.removeHandler(handler)
        handler.close()

    width = max(len(g) for g in result.best_design)
    print(f"{problem.name} [{conn}]  best weight {summary['weight_t']:.4f} t  "
          f"roof disp {summary['roof_disp_m'] * 100:.3f} cm  "
          f"{'feasible' if summary['feasible'] else 'INFEASIBLE'}")
    for label, name in result.best_design.items():
        print(f"  {label:<{width}}  {name}")
    print(f"artifacts in {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------- verify / catalog


def cmd_verify(args) -> int:
    report = run_verification(span=args.span, load=args.load, perturbation=args.perturb)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_FAIL


def _show_section(s) -> str:
    rows = [
        ("area", s.area, "m2", 2), ("depth", s.depth, "m", 1),
        ("Ix", s.moment_of_inertia_major, "m4", 4), ("Sx", s.section_modulus_major, "m3", 3),
        ("ry", s.radius_of_gyration_minor, "m", 1), ("bf", s.flange_width, "m", 1),
        ("tf", s.flange_thickness, "m", 1),
    ]
    lines = [s.name]
    for label, value, unit, power in rows:
        inch_unit = "in" if power == 1 else f"in{power}"
        lines.append(f"  {label:<6}{value:>14.6g} {unit:<4}{value / INCH**power:>12.5g} {inch_unit}")
    lines.append(f"  weight{s.unit_weight_per_length:>14.6g} N/m")
    return "\n".join(lines)


def cmd_catalog(args) -> int:
    try:
        catalog = default_catalog()
        if args.action == "list":
            for s in catalog:
                print(f"{s.name:<10}{s.area:>12.5g} m2{s.unit_weight_per_length:>10.1f} N/m")
            print(f"{len(catalog)} sections")
            return EXIT_OK
        if not args.name:
            raise ConfigError("catalog show needs a section name")
        print(_show_section(lookup(catalog, args.name)))
        return EXIT_OK
    except (ConfigError, CatalogError, SectionNotFound, OSError) as exc:
        _error(str(exc))
        return EXIT_INVALID


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semirigid", description="Weight optimization of 2D steel frames "
                                "with semi-rigid beam connections.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one sized frame and report constraints")
    a.add_argument("config", help="JSON/YAML document with a 'design' mapping")
    a.add_argument("--connection", help="override beam connections (rigid, pinned, 1, 4, 5, 7, semirigid:K)")
    a.add_argument("--out", help="write the result document here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("optimize", help="run the genetic algorithm on a benchmark or config")
    o.add_argument("target", help=f"benchmark name ({', '.join(FRAMES)}) or config path")
    o.add_argument("--connection", choices=CONNECTION_VARIANTS)
    o.add_argument("--seed", type=int)
    o.add_argument("--restarts", type=int)
    o.add_argument("--generations", type=int)
    o.add_argument("--population", type=int)
    o.add_argument("--mutation", type=float)
    o.add_argument("--fuzzy-shape", choices=[s.value for s in Shape])
    o.add_argument("--fitness", choices=[m.value for m in FitnessMode])
    o.add_argument("--out", help="run directory (default runs/<name>_<connection>_seed<seed>)")
    o.add_argument("--jobs", type=int, default=1, help="worker processes for fitness evaluation")
    o.set_defaults(func=cmd_optimize)

    v = sub.add_parser("verify", help="spring-ended beam verification against the oracles")
    v.add_argument("--span", type=float, default=5.0, help="beam span in m")
    v.add_argument("--load", type=float, default=39240.0, help="uniform load in N/m")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("catalog", help="list the section catalog or show one section")
    c.add_argument("action", choices=("list", "show"))
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
