"""Run manifests: schema, loading with line diagnostics, and path construction.

A manifest is a single YAML (or JSON) document::

    name: aff1-theorem-main
    dim: 2
    bivector: {preset: aff1}          # or entries: [...] / structure_constants: [...]
    density: {log: [{exponents: [0, 1], coeff: 1.0}]}   # optional, log rho
    tangent_paths:                    # base curves, lifted by ``kind: lift`` paths
      - {label: c1, curve: circle, center: [0, 0], radius: 1}
    paths:
      - {label: e1, kind: constant, point: [0, 0], covector: [1, 0], loop: true}
      - {label: wave, kind: stationary, point: [0, 0], loop: true,
         covector: {mean: [1, 0], cos: [[0, 1]]}}
      - {label: l1, kind: lift, of: c1, loop: true}
    suites: [holonomy, theorem-main, modular, integrals, oracles, homotopy]
    numeric: {steps_per_unit: 4096, samples: 513, seed: 0}

Unknown keys are rejected everywhere.
"""
from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import lie as lie_mod
from .errors import JacobiError, ManifestError
from .fields import BivectorField, VolumeDensity
from .geometry import jacobi_defect
from .paths import (
    CotangentPath,
    TangentPath,
    concatenate,
    constant_loop,
    flow_tangent_path,
    lift_min_norm,
    reparameterize,
    reverse,
    stationary_loop,
)
from .polynomial import PolyScalarField
from .presets import get_preset, probe_points

SUITES = ("holonomy", "theorem-main", "modular", "integrals", "oracles", "homotopy")
BUNDLED_DIR = Path(__file__).parent / "manifests"


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Term(_Model):
    exponents: list[int]
    coeff: float


class Entry(_Model):
    i: int
    j: int
    terms: list[Term]


class Triple(_Model):
    i: int
    j: int
    k: int
    value: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.i < self.j:
            raise ValueError("structure constant triples need i < j")
        return self


class BivectorSpec(_Model):
    preset: Optional[str] = None
    entries: Optional[list[Entry]] = None
    structure_constants: Optional[list[Triple]] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        given = [k for k in ("preset", "entries", "structure_constants") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of preset, entries, structure_constants")
        return self


class DensitySpec(_Model):
    log: list[Term] = Field(default_factory=list)


class Series(_Model):
    """alpha(t) = mean + sum_k cos[k] cos(2 pi (k+1) t / T) + sin[k] sin(2 pi (k+1) t / T)."""

    mean: list[float]
    cos: list[list[float]] = Field(default_factory=list)
    sin: list[list[float]] = Field(default_factory=list)

    def evaluate(self, t: np.ndarray, duration: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.tile(np.asarray(self.mean, dtype=float), (t.size, 1))
        w = 2.0 * math.pi * t / duration
        for k, c in enumerate(self.cos):
            out += np.cos((k + 1) * w)[:, None] * np.asarray(c, dtype=float)
        for k, s in enumerate(self.sin):
            out += np.sin((k + 1) * w)[:, None] * np.asarray(s, dtype=float)
        return out

    def vectors(self):
        yield self.mean
        yield from self.cos
        yield from self.sin


class TangentSpec(_Model):
    label: str
    curve: Literal["circle", "segment", "constant", "samples", "flow"]
    interval: tuple[float, float] = (0.0, 1.0)
    samples: Optional[int] = Field(default=None, ge=9)
    center: Optional[list[float]] = None
    radius: Optional[float] = None
    axes: Optional[tuple[list[float], list[float]]] = None
    turns: int = 1
    phase: float = 0.0
    start: Optional[list[float]] = None
    end: Optional[list[float]] = None
    point: Optional[list[float]] = None
    points: Optional[list[list[float]]] = None
    covector: Optional[Union[list[float], Series]] = None

    @model_validator(mode="after")
    def _required(self):
        need = {"circle": ("center", "radius"), "segment": ("start", "end"),
                "constant": ("point",), "samples": ("points",),
                "flow": ("start", "covector")}[self.curve]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"curve {self.curve!r} needs {', '.join(missing)}")
        return self


class PathSpec(_Model):
    label: str
    kind: Literal["constant", "stationary", "lift", "samples", "concat", "reverse", "reparam"]
    loop: bool = False
    family: Optional[str] = None
    point: Optional[list[float]] = None
    covector: Optional[Union[list[float], Series]] = None
    duration: float = Field(default=1.0, gt=0)
    of: Optional[str] = None
    parts: Optional[list[str]] = None
    phi: Optional[Literal["square", "smoothstep", "sine"]] = None
    gamma: Optional[list[list[float]]] = None
    alpha: Optional[list[list[float]]] = None
    interval: tuple[float, float] = (0.0, 1.0)

    @model_validator(mode="after")
    def _required(self):
        need = {"constant": ("point", "covector"), "stationary": ("point", "covector"),
                "lift": ("of",), "samples": ("gamma", "alpha"), "concat": ("parts",),
                "reverse": ("of",), "reparam": ("of", "phi")}[self.kind]
        missing = [k for k in need if getattr(self, k) is None]
        if missing:
            raise ValueError(f"path kind {self.kind!r} needs {', '.join(missing)}")
        if self.kind == "constant" and isinstance(self.covector, Series):
            raise ValueError("constant paths take a plain covector; use kind 'stationary' for a series")
        if self.kind == "concat" and len(self.parts) < 2:
            raise ValueError("concat needs at least two parts")
        return self


class Tolerances(_Model):
    theorem: float = Field(1e-5, gt=0)
    oracle: float = Field(1e-6, gt=0)
    oracle_time: float = Field(1e-5, gt=0)
    unimodular: float = Field(1e-6, gt=0)
    extension: float = Field(1e-6, gt=0)
    composition: float = Field(1e-6, gt=0)
    hamiltonian: float = Field(1e-7, gt=0)
    hamiltonian_loop: float = Field(1e-8, gt=0)
    pullback: float = Field(1e-7, gt=0)
    defining: float = Field(1e-9, gt=0)
    gauge: float = Field(1e-12, gt=0)
    poisson: float = Field(1e-10, gt=0)
    gauge_loop: float = Field(1e-7, gt=0)
    drift: float = Field(1e-6, gt=0)
    leaf: float = Field(1e-6, gt=0)
    cotangent: float = Field(1e-7, gt=0)
    coset: float = Field(1e-6, gt=0)
    homotopy: float = Field(1e-6, gt=0)
    jacobi: float = Field(1e-10, gt=0)
    order: float = Field(3.5, gt=0)


class Numeric(_Model):
    steps_per_unit: int = Field(4096, ge=2)
    samples: int = Field(513, ge=9)
    seed: int = 0
    probes: int = Field(100, ge=1)
    random_pairs: int = Field(10, ge=1)
    time_ordered_partitions: int = Field(4096, ge=1)
    convergence_levels: int = Field(4, ge=0)
    convergence_base: int = Field(16, ge=2)
    sigma: Optional[Literal[-1, 1]] = None
    jobs: int = Field(1, ge=1)
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("convergence_levels")
    @classmethod
    def _levels(cls, v):
        if v != 0 and v < 3:
            raise ValueError("convergence_levels must be 0 (off) or at least 3")
        return v


class Manifest(_Model):
    name: str
    dim: int = Field(ge=1)
    bivector: BivectorSpec
    density: Optional[DensitySpec] = None
    tangent_paths: list[TangentSpec] = Field(default_factory=list)
    paths: list[PathSpec] = Field(default_factory=list)
    suites: list[Literal["holonomy", "theorem-main", "modular", "integrals", "oracles", "homotopy"]] = \
        Field(default_factory=lambda: list(SUITES))
    numeric: Numeric = Field(default_factory=Numeric)

    @model_validator(mode="after")
    def _consistent(self):
        n = self.dim

        def vec(v, what):
            if v is not None and len(v) != n:
                raise ValueError(f"{what} has length {len(v)}, expected dim = {n}")

        def terms(ts, what):
            for t in ts:
                if len(t.exponents) != n or min(t.exponents, default=0) < 0:
                    raise ValueError(f"{what}: exponents {t.exponents} do not match dim = {n}")

        bv = self.bivector
        for e in bv.entries or []:
            if not (0 <= e.i < n and 0 <= e.j < n and e.i != e.j):
                raise ValueError(f"bivector entry ({e.i}, {e.j}) out of range for dim = {n}")
            terms(e.terms, f"bivector entry ({e.i}, {e.j})")
        for c in bv.structure_constants or []:
            if not all(0 <= q < n for q in (c.i, c.j, c.k)):
                raise ValueError(f"structure constant ({c.i}, {c.j}, {c.k}) out of range for dim = {n}")
        if self.density is not None:
            terms(self.density.log, "density")

        seen = set()
        for t in self.tangent_paths:
            if t.label in seen:
                raise ValueError(f"duplicate tangent path label {t.label!r}")
            seen.add(t.label)
            for key in ("center", "start", "end", "point"):
                vec(getattr(t, key), f"tangent path {t.label!r} {key}")
            for p in t.points or []:
                vec(p, f"tangent path {t.label!r} points")
            for c in _covectors(t.covector):
                vec(c, f"tangent path {t.label!r} covector")
            for ax in t.axes or ():
                vec(ax, f"tangent path {t.label!r} axes")
        tangents = {t.label for t in self.tangent_paths}
        paths: set[str] = set()
        for p in self.paths:
            if p.label in paths:
                raise ValueError(f"duplicate path label {p.label!r}")
            vec(p.point, f"path {p.label!r} point")
            for c in _covectors(p.covector):
                vec(c, f"path {p.label!r} covector")
            for key in ("gamma", "alpha"):
                for row in getattr(p, key) or []:
                    vec(row, f"path {p.label!r} {key}")
            if p.kind == "lift" and p.of not in tangents:
                raise ValueError(f"path {p.label!r}: unknown tangent path {p.of!r}")
            if p.kind in ("reverse", "reparam") and p.of not in paths:
                raise ValueError(f"path {p.label!r}: unknown (or later) path {p.of!r}")
            for part in p.parts or []:
                if part not in paths:
                    raise ValueError(f"path {p.label!r}: unknown (or later) path {part!r}")
            paths.add(p.label)
        return self


def _covectors(cov):
    if cov is None:
        return []
    return list(cov.vectors()) if isinstance(cov, Series) else [cov]


# --------------------------------------------------------------------------
# loading


def _node_line(node, loc) -> int | None:
    """Walk a composed YAML node along a pydantic error location."""
    line = node.start_mark.line + 1 if node is not None else None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
            if nxt is None:
                nxt = next((k for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
        line = node.start_mark.line + 1
    return line


_LABEL_RE = re.compile(r"\b(tangent path|path) '([^']+)'")


def _labelled_loc(node, msg: str) -> list:
    """Locate the list item a model-level message refers to by its label."""
    m = _LABEL_RE.search(msg)
    if m is None or not isinstance(node, yaml.MappingNode):
        return []
    key = "tangent_paths" if m.group(1) == "tangent path" else "paths"
    seq = next((v for k, v in node.value if k.value == key), None)
    if not isinstance(seq, yaml.SequenceNode):
        return []
    for i, item in enumerate(seq.value):
        if isinstance(item, yaml.MappingNode) and any(
                k.value == "label" and getattr(v, "value", None) == m.group(2) for k, v in item.value):
            return [key, i]
    return []


def parse_manifest(text: str, source: str = "<manifest>") -> Manifest:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ManifestError(f"{where}: {getattr(exc, 'problem', None) or exc}") from None
    if not isinstance(data, dict):
        raise ManifestError(f"{source}: manifest must be a mapping at top level")
    try:
        return Manifest.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = [p for p in err["loc"] if not (isinstance(p, str) and p.startswith(("function-", "tagged-")))]
            loc = loc or _labelled_loc(node, err["msg"])
            field = ".".join(str(p) for p in loc) or "<root>"
            line = _node_line(node, loc)
            lines.append(f"{source}:{line}: {field}: {err['msg']}")
        raise ManifestError("invalid manifest\n  " + "\n  ".join(lines)) from None


def load_manifest(path) -> Manifest:
    """Load a manifest file, or a bundled manifest by name."""
    p = Path(path)
    if not p.exists():
        bundled = BUNDLED_DIR / f"{path}.yaml"
        if bundled.exists():
            p = bundled
        else:
            raise ManifestError(f"no such manifest file or bundled manifest: {path}")
    return parse_manifest(p.read_text(), str(p))


def bundled_manifests() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.yaml"))


# --------------------------------------------------------------------------
# construction


def _poly(dim: int, terms: list[Term]) -> PolyScalarField:
    return PolyScalarField.from_literal(dim, [t.model_dump() for t in terms])


def build_structure(m: Manifest):
    """(bivector, algebra or None, density)."""
    bv = m.bivector
    algebra = None
    if bv.preset is not None:
        try:
            preset = get_preset(bv.preset)
        except KeyError as exc:
            raise ManifestError(str(exc.args[0])) from None
        if preset.bivector.dim != m.dim:
            raise ManifestError(f"preset {bv.preset!r} has dimension {preset.bivector.dim}, manifest says {m.dim}")
        bivector, algebra = preset.bivector, preset.algebra
    elif bv.structure_constants is not None:
        try:
            algebra = lie_mod.LieAlgebraPresentation.from_triples(
                m.dim, [c.model_dump() for c in bv.structure_constants], m.name)
        except ValueError as exc:
            raise ManifestError(f"structure constants: {exc}") from None
        bivector = lie_mod.lie_poisson_bivector(algebra)
    else:
        bivector = BivectorField.from_literal(
            m.dim, [{"i": e.i, "j": e.j, "terms": [t.model_dump() for t in e.terms]} for e in bv.entries])
    density = VolumeDensity(_poly(m.dim, m.density.log)) if m.density else VolumeDensity.uniform(m.dim)
    return bivector, algebra, density


def jacobi_gate(bivector: BivectorField, m: Manifest) -> None:
    """Reject non-Poisson bivectors, naming the first failing probe point."""
    rng = np.random.default_rng([m.numeric.seed, 0x7a0b1])
    tol = m.numeric.tolerances.jacobi
    for x in probe_points(m.dim, m.numeric.probes, rng):
        d = jacobi_defect(bivector, x)
        if d > tol:
            raise JacobiError(
                f"bivector fails the Jacobi identity at probe point {x.tolist()} "
                f"(defect {d:.3g} > {tol:g})", point=x, defect=d)


_PHI = {
    "square": (lambda u: u * u, lambda u: 2.0 * u),
    "smoothstep": (lambda u: u * u * (3.0 - 2.0 * u), lambda u: 6.0 * u * (1.0 - u)),
    "sine": (lambda u: u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi) * 0.5,
             lambda u: 1.0 - 0.5 * np.cos(2.0 * np.pi * u)),
}


def _covector_fn(cov, duration: float):
    if isinstance(cov, Series):
        return lambda t: cov.evaluate(np.atleast_1d(t), duration)
    a = np.asarray(cov, dtype=float)
    return lambda t: np.tile(a, (np.size(t), 1))


def _tangent(spec: TangentSpec, samples: int, bivector) -> TangentPath:
    samples = spec.samples or samples
    if spec.curve == "flow":
        a, b = spec.interval
        return flow_tangent_path(bivector, spec.start, _covector_fn(spec.covector, b - a),
                                 spec.interval, samples)
    if spec.curve == "circle":
        return TangentPath.circle(spec.center, spec.radius, spec.axes, spec.interval, samples,
                                  spec.turns, spec.phase)
    if spec.curve == "segment":
        return TangentPath.segment(spec.start, spec.end, spec.interval, samples)
    if spec.curve == "constant":
        return TangentPath.constant(spec.point, spec.interval, samples)
    return TangentPath(np.asarray(spec.points, dtype=float), spec.interval)


def build_paths(m: Manifest, bivector: BivectorField) -> dict[str, object]:
    """label -> CotangentPath, or the exception raised while building it."""
    samples = m.numeric.samples
    tol = m.numeric.tolerances.cotangent
    tangents = {t.label: t for t in m.tangent_paths}
    out: dict[str, object] = {}
    for p in m.paths:
        try:
            out[p.label] = _build_one(p, bivector, tangents, out, samples, tol)
        except Exception as exc:  # reported per label by the runner
            out[p.label] = exc
    return out


def _dependency(out, label):
    dep = out[label]
    if isinstance(dep, Exception):
        raise ManifestError(f"depends on path {label!r}, which failed: {dep}")
    return dep


def _build_one(p: PathSpec, bivector, tangents, out, samples, tol) -> CotangentPath:
    if p.kind == "constant":
        path = constant_loop(bivector, p.point, p.covector, p.duration, samples, tol)
    elif p.kind == "stationary":
        path = stationary_loop(bivector, p.point, _covector_fn(p.covector, p.duration),
                               p.duration, samples, tol)
    elif p.kind == "lift":
        path = lift_min_norm(bivector, _tangent(tangents[p.of], samples, bivector))
    elif p.kind == "samples":
        path = CotangentPath.from_samples(np.asarray(p.gamma, dtype=float),
                                          np.asarray(p.alpha, dtype=float), p.interval)
    elif p.kind == "concat":
        path = _dependency(out, p.parts[0])
        for part in p.parts[1:]:
            path = concatenate(path, _dependency(out, part))
    elif p.kind == "reverse":
        path = reverse(_dependency(out, p.of))
    else:
        phi, dphi = _PHI[p.phi]
        path = reparameterize(_dependency(out, p.of), phi, dphi)
    if p.loop and not path.is_loop:
        raise ManifestError(
            f"path {p.label!r} is flagged as a loop but does not close "
            f"(gamma: {path.closed}, alpha: {path.alpha_closed})")
    return path
