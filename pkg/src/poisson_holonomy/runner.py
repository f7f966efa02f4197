"""Manifest-driven verification runs and their reports.

results.csv has a fixed layout: one header line carrying the timestamp, then
the column line ``label,suite,metric,value,tolerance,pass`` and one row per
(path, suite, metric) in manifest order. Values use ``%.17g``; an empty
tolerance marks an informational row (it always passes). Everything below the
header line depends only on the manifest and the build.
"""
from __future__ import annotations

import datetime as _dt
import io
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from . import conventions, kernels
from . import lie as lie_mod
from .errors import CotangentConditionError, LogDomainError
from .fields import CovectorField, VectorField
from .geometry import DEFAULT_TAU_RANK, eval_bivector, hamiltonian_field, numerical_rank
from .holonomy import (
    ExtensionFamily,
    composition_check,
    extension_independence_check,
    holonomy,
    normal_determinant,
    parameterization_check,
)
from .integrals import (
    hamiltonian_endpoint_residual,
    path_integral,
    pullback_identity_residual,
    raw_path_integral,
)
from .manifest import _PHI, Manifest, Series, build_paths, build_structure, jacobi_gate
from .modular import (
    defining_property_residual,
    gauge_shift_check,
    modular_field,
    poisson_field_residual,
)
from .paths import cotangent_residual
from .polynomial import random_poly
from .presets import probe_points

COLUMNS = ("label", "suite", "metric", "value", "tolerance", "pass")
_SUITE_IDS = {"conventions": 0, "holonomy": 1, "theorem-main": 2, "modular": 3,
              "integrals": 4, "oracles": 5, "homotopy": 6}


@dataclass(frozen=True)
class Record:
    label: str
    suite: str
    metric: str
    value: float
    tolerance: float | None = None
    passed: bool = True

    def row(self) -> str:
        tol = "" if self.tolerance is None else _fmt(self.tolerance)
        return ",".join([self.label, self.suite, self.metric, _fmt(self.value), tol,
                         "true" if self.passed else "false"])


def _fmt(x) -> str:
    return "%.17g" % float(x)


def check(label, suite, metric, value, tol, mode="le") -> Record:
    value = float(value)
    ok = (value <= tol) if mode == "le" else (value >= tol)
    return Record(label, suite, metric, value, tol, bool(ok and not math.isnan(value)))


def info(label, suite, metric, value) -> Record:
    return Record(label, suite, metric, float(value))


@dataclass
class ConvergenceRow:
    label: str
    steps: list
    errors: list
    order: float
    passed: bool
    error: str = ""


@dataclass
class RunReport:
    name: str
    seed: int
    sigma: int
    coad_sign: int
    backend: str
    conventions: conventions.ConventionReport
    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    convergence: list = field(default_factory=list)
    wall_time: float = 0.0
    versions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records) and not self.errors

    def failures(self) -> list[Record]:
        return [r for r in self.records if not r.passed]

    def select(self, suite=None, metric=None, label=None) -> list[Record]:
        return [r for r in self.records if (suite is None or r.suite == suite)
                and (metric is None or r.metric == metric) and (label is None or r.label == label)]

    def value(self, label, metric, suite=None) -> float:
        (rec,) = self.select(suite, metric, label)
        return rec.value

    def csv_body(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        for r in self.records:
            buf.write(r.row() + "\n")
        return buf.getvalue()

    def csv(self) -> str:
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return f"# {self.name} generated {stamp}\n" + self.csv_body()

    def conventions_text(self) -> str:
        lines = [f"manifest: {self.name}", f"sigma used: {self.sigma:+d}",
                 f"coad sign used: {self.coad_sign:+d}", "self-test:"]
        lines += ["  " + s for s in self.conventions.lines()]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        out = [f"manifest: {self.name}", f"status: {'PASS' if self.passed else 'FAIL'}",
               f"seed: {self.seed}", f"sigma: {self.sigma:+d}, coad sign: {self.coad_sign:+d}",
               f"backend: {self.backend}",
               "versions: " + ", ".join(f"{k} {v}" for k, v in self.versions.items()),
               f"wall time: {self.wall_time:.2f} s", ""]
        suites: dict[str, list[Record]] = {}
        for r in self.records:
            suites.setdefault(r.suite, []).append(r)
        for suite, recs in suites.items():
            bad = sum(not r.passed for r in recs)
            checked = sum(r.tolerance is not None for r in recs)
            out.append(f"[{suite}] {checked - bad}/{checked} checks pass")
            for r in recs:
                mark = "" if r.tolerance is None else ("  ok " if r.passed else "  FAIL ")
                tol = "" if r.tolerance is None else f" (tol {r.tolerance:.1e})"
                out.append(f"  {mark:6s}{r.label:>16s}  {r.metric:<28s} {r.value: .6e}{tol}")
        if self.convergence:
            out += ["", "[convergence] error vs reference"]
            for row in self.convergence:
                errs = " ".join(f"{s}:{e:.2e}" for s, e in zip(row.steps, row.errors))
                out.append(f"  {row.label:>16s}  order {row.order:6.2f}  {errs}")
        if self.errors:
            out += ["", "errors:"] + [f"  {e}" for e in self.errors]
        if self.notes:
            out += ["", "notes:"] + [f"  {e}" for e in self.notes]
        return "\n".join(out) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(self.csv())
        (out / "report.txt").write_text(self.text())
        (out / "conventions.txt").write_text(self.conventions_text())
        return out


def _versions() -> dict:
    import numpy
    import scipy

    from . import __version__

    v = {"poisson_holonomy": __version__, "python": platform.python_version(),
         "numpy": numpy.__version__, "scipy": scipy.__version__}
    if kernels.HAVE_NUMBA:
        v["numba"] = kernels.numba.__version__
    return v


def _rng(seed: int, suite: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, _SUITE_IDS[suite], index])


def _kernel_offset(bivector, rng):
    """A smooth covector family in ker sharp along the path."""
    w = rng.normal(size=bivector.dim)

    def kappa(t, x):
        x = np.atleast_2d(x)
        p = eval_bivector(bivector, x)
        proj = np.eye(bivector.dim) - np.linalg.pinv(p, rcond=DEFAULT_TAU_RANK) @ p
        return (1.0 + 0.5 * np.cos(2.0 * np.pi * np.asarray(t, dtype=float)))[:, None] * (proj @ w)

    return kappa


def _profile(t):
    return 0.3 + np.cos(2.0 * np.pi * np.asarray(t, dtype=float))


def _locally_regular(bivector, path, rng, probes: int = 8, eps: float = 1e-3) -> bool:
    """Rank of Pi constant on small random offsets of the path samples."""
    pts = np.concatenate([seg.points for seg in path.segments])
    rank0 = int(numerical_rank(eval_bivector(bivector, pts[0])))
    idx = np.linspace(0, len(pts) - 1, probes).astype(int)
    near = pts[idx] + eps * rng.normal(size=(probes, pts.shape[1]))
    ranks = numerical_rank(eval_bivector(bivector, np.concatenate([pts[idx], near])))
    return bool(np.all(ranks == rank0))


def _at_origin(path) -> bool:
    return all(np.allclose(seg.points, 0.0, atol=0.0) for seg in path.segments)


class _Run:
    def __init__(self, m: Manifest):
        self.m = m
        self.num = m.numeric
        self.tol = m.numeric.tolerances
        self.bivector, self.algebra, self.density = build_structure(m)
        jacobi_gate(self.bivector, m)
        self.specs = {p.label: p for p in m.paths}
        self.built = build_paths(m, self.bivector)
        self.hol: dict[str, object] = {}
        self.errors: list[str] = []
        self.notes: list[str] = []
        self.sigma = m.numeric.sigma if m.numeric.sigma is not None else conventions.SIGMA
        self._vmu = None

    @property
    def kw(self):
        return dict(steps_per_unit=self.num.steps_per_unit, tau_cot=self.tol.cotangent,
                    tau_drift=self.tol.drift, tau_leaf=self.tol.leaf)

    @property
    def v_mu(self):
        if self._vmu is None:
            self._vmu = modular_field(self.bivector, self.density)
        return self._vmu

    def map(self, fn, items):
        if self.num.jobs > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.num.jobs) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]

    def labels(self):
        return [p.label for p in self.m.paths]

    def ok_paths(self):
        return [(i, lab, self.built[lab]) for i, lab in enumerate(self.labels())
                if not isinstance(self.built[lab], Exception)]

    def holonomies(self):
        if self.hol:
            return self.hol

        def one(item):
            _, label, path = item
            try:
                return label, holonomy(self.bivector, path, **self.kw)
            except Exception as exc:
                return label, exc

        self.hol = dict(self.map(one, self.ok_paths()))
        return self.hol

    def guarded(self, suite, label, fn) -> list[Record]:
        try:
            return fn()
        except Exception as exc:
            self.errors.append(f"{label} [{suite}]: {type(exc).__name__}: {exc}")
            return [Record(label, suite, "error", float("nan"), None, False)]

    def per_path(self, suite, fn) -> list[Record]:
        hol = self.holonomies() if suite in ("holonomy", "theorem-main", "oracles") else {}

        def one(item):
            i, label, path = item
            res = hol.get(label)

            def body():
                if isinstance(res, Exception):
                    raise res
                return fn(i, label, path, res)

            return self.guarded(suite, label, body)

        out = []
        for recs in self.map(one, self.ok_paths()):
            out.extend(recs)
        return out

    # -- suites -------------------------------------------------------------

    def conventions_suite(self) -> list[Record]:
        rep = conventions.self_test()
        self.conv = rep
        s = "conventions"
        return [
            Record("*", s, "sigma", self.sigma, None, self.sigma == rep.sigma),
            check("*", s, "sigma_arbiter_residual", rep.sigma_residuals[self.sigma], 1e-7),
            Record("*", s, "coad_sign", conventions.COAD_SIGN, None, rep.coad_sign == conventions.COAD_SIGN),
            check("*", s, "coad_arbiter_residual", rep.coad_residuals[conventions.COAD_SIGN], 1e-6),
            check("*", s, "modular_index_residual", rep.modular_residuals[conventions.MODULAR_INDEX], 1e-9),
        ]

    def build_errors(self) -> list[Record]:
        out = []
        for label in self.labels():
            exc = self.built[label]
            if isinstance(exc, Exception):
                self.errors.append(f"{label} [build]: {type(exc).__name__}: {exc}")
                out.append(Record(label, "build", "error", float("nan"), None, False))
        return out

    def holonomy_suite(self) -> list[Record]:
        s, t = "holonomy", self.tol

        def fn(i, label, path, res):
            spec = self.specs[label]
            recs = [check(label, s, "cotangent_residual", cotangent_residual(self.bivector, path), t.cotangent),
                    info(label, s, "steps", res.steps),
                    info(label, s, "det_H", res.det),
                    check(label, s, "drift", res.drift, t.drift),
                    check(label, s, "leaf_residual", res.leaf_residual, t.leaf)]
            rng = _rng(self.num.seed, s, i)
            hess = rng.normal(size=(self.m.dim, self.m.dim))
            # a strong S destabilizes the flow off gamma on long paths; keep it O(1/T)
            hess = (hess + hess.T) / (2.0 * path.duration)
            recs.append(check(label, s, "extension_delta",
                              extension_independence_check(self.bivector, path, hessian=hess,
                                                           scale=_profile, **self.kw),
                              t.extension))
            recs += self._kernel_shift(label, path, res, rng)
            if spec.kind == "concat" and len(spec.parts) == 2:
                a, b = (self.built[q] for q in spec.parts)
                recs.append(check(label, s, "composition_residual",
                                  composition_check(self.bivector, a, b, **self.kw), t.composition))
            if spec.kind == "reparam":
                phi, dphi = _PHI[spec.phi]
                recs.append(check(label, s, "parameterization_residual",
                                  parameterization_check(self.bivector, self.built[spec.of], phi, dphi,
                                                         **self.kw), t.composition))
            if spec.kind == "reverse":
                base = self.hol.get(spec.of)
                if base is not None and not isinstance(base, Exception) and res.codim:
                    prod = res.normal_map @ base.normal_map
                    recs.append(check(label, s, "inverse_residual",
                                      np.max(np.abs(prod - np.eye(res.codim))), t.composition))
            return recs

        return self.per_path(s, fn)

    def _kernel_shift(self, label, path, res, rng) -> list[Record]:
        """Constant kernel covectors added to the extension.

        Near regular leaves this leaves h unchanged. At singular points it
        changes the cotangent loop itself, and h moves inside its Inn coset.
        """
        s, t = "holonomy", self.tol
        kappa = _kernel_offset(self.bivector, rng)
        pert = holonomy(self.bivector, path, ExtensionFamily(kappa), start=res.start, end=res.end, **self.kw)
        delta = float(np.max(np.abs(pert.normal_map - res.normal_map), initial=0.0))
        if _locally_regular(self.bivector, path, rng):
            return [check(label, s, "kernel_shift_delta", delta, t.extension)]
        out = [info(label, s, "kernel_shift_delta", delta)]
        if self.algebra is not None and _at_origin(path):
            try:
                coset = lie_mod.inn_coset_residual(self.algebra, res.normal_map, pert.normal_map)
            except LogDomainError as exc:
                self.notes.append(f"{label} [holonomy]: kernel shift coset test inconclusive: {exc}")
            else:
                out.append(check(label, s, "kernel_shift_coset", coset, t.coset))
        return out

    def theorem_suite(self) -> list[Record]:
        s = "theorem-main"

        def fn(i, label, path, res):
            det = normal_determinant(res, self.density)
            integral = self.sigma * raw_path_integral(self.v_mu, path)
            lhs = math.log(det) if det > 0 else float("nan")
            return [info(label, s, "normal_det", det),
                    info(label, s, "integral_v_mu", integral),
                    check(label, s, "theorem_residual", abs(lhs - self.sigma * integral), self.tol.theorem)]

        return self.per_path(s, fn)

    def modular_suite(self) -> list[Record]:
        s, t, n = "modular", self.tol, self.m.dim
        rng = _rng(self.num.seed, s, 0)

        def global_checks():
            pts = probe_points(n, self.num.probes, rng)
            defining = max(defining_property_residual(self.bivector, self.density, self.v_mu,
                                                      random_poly(n, 3, rng), x) for x in pts)
            log_g = random_poly(n, 2, rng)
            gauge = gauge_shift_check(self.bivector, self.density, log_g)
            poisson = max(poisson_field_residual(self.bivector, self.v_mu, x) for x in pts)
            return [check("*", s, "defining_residual", defining, t.defining),
                    check("*", s, "gauge_shift_coeff", gauge, t.gauge),
                    check("*", s, "lie_derivative_residual", poisson, t.poisson)]

        recs = self.guarded(s, "*", global_checks)
        shifted = modular_field(self.bivector, self.density.scaled(random_poly(n, 2, rng)))

        def fn(i, label, path, res):
            if not self.specs[label].loop:
                return []
            diff = abs(path_integral(shifted, path) - path_integral(self.v_mu, path))
            return [check(label, s, "gauge_loop_invariance", diff, t.gauge_loop)]

        return recs + self.per_path(s, fn)

    def integrals_suite(self) -> list[Record]:
        s, t, n = "integrals", self.tol, self.m.dim

        def fn(i, label, path, res):
            rng = _rng(self.num.seed, s, i)
            fs = [random_poly(n, 3, rng) for _ in range(self.num.random_pairs)]
            recs = [check(label, s, "hamiltonian_endpoint",
                          max(hamiltonian_endpoint_residual(self.bivector, f, path) for f in fs),
                          t.hamiltonian)]
            if self.specs[label].loop:
                recs.append(check(label, s, "hamiltonian_loop",
                                  max(abs(path_integral(hamiltonian_field(self.bivector, f), path))
                                      for f in fs), t.hamiltonian_loop))
            beta = CovectorField.exact(random_poly(n, 3, rng)) + CovectorField.constant(rng.normal(size=n))
            recs.append(check(label, s, "pullback_identity",
                              pullback_identity_residual(self.bivector, beta, path), t.pullback))
            return recs

        return self.per_path(s, fn)

    def oracles_suite(self) -> list[Record]:
        s, t, alg = "oracles", self.tol, self.algebra
        if alg is None:
            return []
        chi = lie_mod.modular_character(alg)
        unimodular = lie_mod.is_unimodular(alg)
        flat = modular_field(self.bivector).field
        recs = [info("*", s, f"chi_{k}", c) for k, c in enumerate(chi)]
        recs.append(info("*", s, "unimodular", float(unimodular)))
        recs.append(check("*", s, "modular_character_mismatch",
                          flat.coeff_distance(VectorField.constant(chi)), 1e-12))

        def fn(i, label, path, res):
            spec = self.specs[label]
            out = []
            if spec.kind in ("constant", "stationary") and _at_origin(path):
                if isinstance(spec.covector, Series):
                    cov = spec.covector
                    oracle = lie_mod.time_ordered_oracle(alg, lambda u: cov.evaluate(u, spec.duration),
                                                         spec.duration, self.num.time_ordered_partitions)
                    metric, tol = "time_ordered_residual", t.oracle_time
                else:
                    oracle = lie_mod.constant_loop_oracle(alg, spec.covector, spec.duration)
                    metric, tol = "oracle_residual", t.oracle
                out.append(check(label, s, metric, np.max(np.abs(res.normal_map - oracle)), tol))
            if unimodular and spec.loop:
                out.append(check(label, s, "unimodular_det", abs(res.det - 1.0), t.unimodular))
            return out

        return recs + self.per_path(s, fn)

    def homotopy_suite(self) -> list[Record]:
        s, t = "homotopy", self.tol
        hol = self.holonomies()
        families: dict[str, list[str]] = {}
        for p in self.m.paths:
            if p.family is not None:
                families.setdefault(p.family, []).append(p.label)
        recs = []
        span = lie_mod.inn_span(self.algebra) if self.algebra is not None else None
        for fam, labels in families.items():
            def family_checks(fam=fam, labels=labels):
                bad = [q for q in labels if isinstance(hol.get(q, self.built[q]), Exception)]
                if bad:
                    raise RuntimeError(f"family members failed: {bad}")
                hs = [hol[q].normal_map for q in labels]
                pairs = list(combinations(range(len(hs)), 2))
                dist = max((float(np.max(np.abs(hs[a] - hs[b]))) for a, b in pairs), default=0.0)
                out = [info(fam, s, "members", len(hs)), info(fam, s, "max_pairwise_distance", dist)]
                origin = all(_at_origin(self.built[q]) for q in labels)
                if span is not None and origin:
                    try:
                        worst = max((lie_mod.inn_coset_residual(self.algebra, hs[a], hs[b], span)
                                     for a, b in pairs), default=0.0)
                    except LogDomainError as exc:
                        self.notes.append(f"{fam} [homotopy]: inconclusive: {exc}")
                        out.append(info(fam, s, "coset_inconclusive", 1.0))
                    else:
                        out.append(check(fam, s, "coset_residual", worst, t.coset))
                else:
                    out.append(check(fam, s, "holonomy_spread", dist, t.homotopy))
                return out

            recs.extend(self.guarded(s, fam, family_checks))
        return recs


def run(manifest: Manifest, suites=None) -> RunReport:
    """Execute the requested suites (conventions pre-suite first) and collect a report."""
    t0 = time.perf_counter()
    r = _Run(manifest)
    records = r.conventions_suite()
    records += r.build_errors()
    order = [x for x in manifest.suites if suites is None or x in suites]
    table = {"holonomy": r.holonomy_suite, "theorem-main": r.theorem_suite, "modular": r.modular_suite,
             "integrals": r.integrals_suite, "oracles": r.oracles_suite, "homotopy": r.homotopy_suite}
    for name in ("holonomy", "theorem-main", "modular", "integrals", "oracles", "homotopy"):
        if name in order:
            records += table[name]()
    conv = []
    if "holonomy" in order and manifest.numeric.convergence_levels:
        conv = convergence_study(manifest, manifest.numeric.convergence_levels, _run=r)
        for row in conv:
            if row.error:
                r.errors.append(f"{row.label} [convergence]: {row.error}")
            records.append(Record(row.label, "convergence", "observed_order", row.order,
                                  manifest.numeric.tolerances.order, row.passed))
    rep = RunReport(manifest.name, manifest.numeric.seed, r.sigma, conventions.COAD_SIGN,
                    kernels.BACKEND, r.conv, records, r.errors, r.notes, conv)
    rep.wall_time = time.perf_counter() - t0
    rep.versions = _versions()
    return rep


NOISE_FLOOR = 1e-11


def fit_order(steps, errors, floor: float = NOISE_FLOOR) -> float:
    """Least-squares slope of -log(error) against log(steps), above the noise floor.

    Returns inf when every error is at the floor (the flow is resolved
    exactly, e.g. Pi = 0) and nan when fewer than two levels are usable.
    """
    s = np.asarray(steps, dtype=float)
    e = np.asarray(errors, dtype=float)
    keep = e > floor
    if not keep.any():
        return math.inf
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(s[keep]), np.log(e[keep]), 1)[0]
    return float(-slope)


def _trajectory_error(coarse, ref) -> float:
    """Max deviation of Phi at the end and of x on the shared grid nodes."""
    err = float(np.max(np.abs(coarse.phi - ref.phi)))
    for tc, tr in zip(coarse.trajectories, ref.trajectories):
        sc, sr = len(tc) - 1, len(tr) - 1
        if sr % sc == 0:
            err = max(err, float(np.max(np.abs(tc - tr[:: sr // sc]))))
        else:
            err = max(err, float(np.max(np.abs(tc[-1] - tr[-1]))))
    return err


def convergence_study(manifest: Manifest, levels: int | None = None, base: int | None = None,
                      _run: _Run | None = None) -> list[ConvergenceRow]:
    """Step-doubling study per path against a reference at 4x the finest level.

    The error at each level is the max deviation of the base trajectory on
    the shared grid nodes and of the final linearization.
    """
    from .holonomy import _integrate, DEFAULT_EXTENSION

    levels = levels or manifest.numeric.convergence_levels or 4
    if levels < 3:
        raise ValueError("convergence_study needs at least 3 levels")
    base = base or manifest.numeric.convergence_base
    r = _run or _Run(manifest)
    tol = manifest.numeric.tolerances.order
    steps = [base * 2 ** k for k in range(levels)]
    ref_steps = base * 2 ** (levels + 1)

    def one(item):
        _, label, path = item
        try:
            resid = cotangent_residual(r.bivector, path)
            if resid > r.tol.cotangent:
                raise CotangentConditionError(f"cotangent residual {resid:.3g} exceeds tolerance "
                                              f"{r.tol.cotangent:g}")
            ref = _integrate(r.bivector, path, DEFAULT_EXTENSION, ref_steps)
            errs = [_trajectory_error(_integrate(r.bivector, path, DEFAULT_EXTENSION, n), ref) for n in steps]
        except Exception as exc:
            return ConvergenceRow(label, steps, [], float("nan"), False, f"{type(exc).__name__}: {exc}")
        order = fit_order(steps, errs)
        monotone = all(b <= a or b <= NOISE_FLOOR for a, b in zip(errs, errs[1:]))
        return ConvergenceRow(label, steps, errs, order, bool(order >= tol and monotone))

    return r.map(one, r.ok_paths())
