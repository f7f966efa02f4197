"""Command line entry point: ``poisson-holonomy run|convergence|list|conventions``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import PoissonError
from .manifest import SUITES, Manifest, bundled_manifests, load_manifest

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _override(m: Manifest, args) -> Manifest:
    numeric = {}
    if getattr(args, "steps", None):
        numeric["steps_per_unit"] = args.steps
    if getattr(args, "samples", None):
        numeric["samples"] = args.samples
    if getattr(args, "seed", None) is not None:
        numeric["seed"] = args.seed
    if getattr(args, "jobs", None):
        numeric["jobs"] = args.jobs
    if getattr(args, "sigma", None) is not None:
        numeric["sigma"] = args.sigma
    data = m.model_dump()
    data["numeric"].update(numeric)
    if getattr(args, "suite", None):
        data["suites"] = [s for s in SUITES if s in args.suite]
    return Manifest.model_validate(data)


def _cmd_run(args) -> int:
    from .runner import run

    m = _override(load_manifest(args.manifest), args)
    report = run(m)
    out = Path(args.out) if args.out else Path("out") / m.name
    report.write(out)
    failures = report.failures()
    print(f"{m.name}: {'PASS' if report.passed else 'FAIL'} "
          f"({len(report.records)} rows, {len(failures)} failing, {report.wall_time:.1f} s) -> {out}")
    for r in failures:
        print(f"  FAIL {r.label} [{r.suite}] {r.metric} = {r.value:.3e}"
              + ("" if r.tolerance is None else f" (tol {r.tolerance:.1e})"))
    for e in report.errors:
        print(f"  error: {e}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_convergence(args) -> int:
    from .runner import convergence_study

    m = _override(load_manifest(args.manifest), args)
    rows = convergence_study(m, args.levels, args.base)
    ok = True
    for row in rows:
        ok &= row.passed
        errs = "  ".join(f"{s}:{e:.3e}" for s, e in zip(row.steps, row.errors))
        print(f"{row.label:>16s}  order {row.order:6.2f}  {'ok' if row.passed else 'FAIL'}  {errs or row.error}")
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_list(args) -> int:
    from .presets import PRESETS

    print("bundled manifests:")
    for name in bundled_manifests():
        print(f"  {name}")
    print("presets:")
    for name, make in PRESETS.items():
        print(f"  {name:14s} {make().description}")
    return EXIT_OK


def _cmd_conventions(args) -> int:
    from .conventions import self_test

    rep = self_test()
    print("\n".join(rep.lines()))
    print("consistent with frozen values" if rep.consistent else "INCONSISTENT with frozen values")
    return EXIT_OK if rep.consistent else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poisson-holonomy",
                                description="Verify linear Poisson holonomy and modular-class identities.")
    sub = p.add_subparsers(dest="command", required=True)

    def numeric_args(q):
        q.add_argument("manifest", help="manifest file, or the name of a bundled manifest")
        q.add_argument("--steps", type=int, help="integrator steps per unit time")
        q.add_argument("--samples", type=int, help="samples per path")
        q.add_argument("--seed", type=int)
        q.add_argument("--jobs", type=int, help="worker threads")

    q = sub.add_parser("run", help="run the suites of a manifest and write reports")
    numeric_args(q)
    q.add_argument("--out", help="output directory (default out/<manifest name>)")
    q.add_argument("--suite", action="append", choices=SUITES, help="restrict to these suites")
    q.add_argument("--sigma", type=int, choices=(-1, 1), help="sign override for the arbiter run")
    q.set_defaults(func=_cmd_run)

    q = sub.add_parser("convergence", help="step-doubling study of the integrator per path")
    numeric_args(q)
    q.add_argument("--levels", type=int, default=4)
    q.add_argument("--base", type=int, default=None, help="coarsest steps per unit time")
    q.set_defaults(func=_cmd_convergence)

    sub.add_parser("list", help="list bundled manifests and presets").set_defaults(func=_cmd_list)
    sub.add_parser("conventions", help="run the sign-convention self-test").set_defaults(func=_cmd_conventions)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PoissonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
