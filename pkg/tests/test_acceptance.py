"""Acceptance criteria 1-12, each at its stated tolerance.

Every criterion records its parts through the ``criterion`` fixture, which
prints one PASS/FAIL line per criterion (also repeated in the terminal
summary) and fails the test if any part is out of tolerance.
"""
import math
from itertools import combinations

import numpy as np
import pytest
from scipy.linalg import expm

from poisson_holonomy import lie
from poisson_holonomy.conventions import SIGMA
from poisson_holonomy.fields import CovectorField, VectorField, VolumeDensity
from poisson_holonomy.geometry import hamiltonian_field
from poisson_holonomy.holonomy import (
    ExtensionFamily,
    TimeDependentField,
    composition_check,
    extension_independence_check,
    holonomy,
    liouville_check,
    normal_determinant,
    parameterization_check,
)
from poisson_holonomy.integrals import (
    hamiltonian_endpoint_residual,
    path_integral,
    pullback_identity_residual,
)
from poisson_holonomy.manifest import build_paths, build_structure, bundled_manifests, load_manifest
from poisson_holonomy.modular import (
    defining_property_residual,
    gauge_shift_check,
    modular_field,
    poisson_field_residual,
)
from poisson_holonomy.paths import (
    TangentPath,
    concatenate,
    constant_loop,
    flow_tangent_path,
    lift_min_norm,
    reverse,
    stationary_loop,
)
from poisson_holonomy.polynomial import PolyScalarField, random_poly
from poisson_holonomy.presets import get_preset, probe_points
from poisson_holonomy.runner import convergence_study, run

from conftest import ALL_PRESETS

LIE = ["aff1", "so3", "sl2", "h3"]
E = np.eye(3)


def le(desc, value, tol):
    value = float(value)
    return desc, value, f"<= {tol:g}", bool(value <= tol)


def ge(desc, value, bound):
    value = float(value)
    return desc, value, f"> {bound:g}", bool(value > bound)


def orbit_loop(b, a, x0, period, samples=513):
    """Closed orbit of the linear field sharp(a) through x0 (Lie-Poisson presets)."""
    a = np.asarray(a, dtype=float)
    gen = np.stack([a @ b(e) for e in np.eye(b.dim)], axis=1)
    t = np.linspace(0.0, period, samples)
    pts = np.stack([expm(s * gen) @ x0 for s in t])
    pts[-1] = pts[0]
    return lift_min_norm(b, TangentPath(pts, (0.0, period), periodic=True))


def scenario(name):
    """(loops, open paths) that live on the preset's leaves."""
    b = get_preset(name).bivector
    n = b.dim
    if name in ("symplectic-r2",):
        loops = [lift_min_norm(b, TangentPath.circle([0.3, -0.2], 1.0)),
                 lift_min_norm(b, TangentPath.circle([0, 0], 0.5, turns=2))]
        opens = [lift_min_norm(b, TangentPath.segment([0, 0], [1, 2])),
                 lift_min_norm(b, TangentPath.circle([0, 0], 1.0, turns=0.3))]
    elif name in ("zero-r2", "abelian2"):
        loops = [constant_loop(b, [0.5, -1.0], [1.0, 2.0]),
                 stationary_loop(b, [0, 0], lambda t: np.stack([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], 1))]
        opens = [constant_loop(b, [1.0, 1.0], [0.0, 3.0])]
    elif name == "aff1":
        loops = [constant_loop(b, [0, 0], [1.0, 0.0]),
                 stationary_loop(b, [0, 0], lambda t: np.stack([1 + np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)], 1))]
        opens = [lift_min_norm(b, TangentPath.segment([0.0, 1.0], [1.0, 2.0])),
                 lift_min_norm(b, TangentPath.from_function(
                     lambda t: np.stack([np.sin(3 * t), 1 + t**2], 1)))]
    elif name == "so3":
        loops = [constant_loop(b, np.zeros(3), [0.3, -1.0, 0.5]),
                 lift_min_norm(b, TangentPath.circle([0, 0, 0.6], 0.8, axes=[E[0], E[1]])),
                 orbit_loop(b, [1.0, 1.0, 0.0], np.array([0.2, 0.5, 0.9]), 2 * np.pi / math.sqrt(2))]
        opens = [lift_min_norm(b, TangentPath.circle([0, 0, 0.6], 0.8, axes=[E[0], E[1]], turns=0.4))]
    elif name == "sl2":
        # e - f generates a compact one-parameter group with period pi
        loops = [constant_loop(b, np.zeros(3), [1.0, 0.5, -0.5]),
                 orbit_loop(b, [0.0, 1.0, -1.0], np.array([1.0, 0.3, 0.2]), np.pi)]
        opens = [lift_min_norm(b, flow_tangent_path(b, [0.5, 0.4, -0.3],
                                                    lambda t: np.array([[np.cos(t[0]), 1.0, 0.3]])))]
    elif name == "h3":
        loops = [constant_loop(b, np.zeros(3), [1.0, 2.0, -1.0]),
                 lift_min_norm(b, TangentPath.circle([0.2, 0, 1.0], 0.7, axes=[E[0], E[1]]))]
        opens = [lift_min_norm(b, TangentPath.segment([0, 0, -0.5], [1, 2, -0.5]))]
    elif name == "regular-r3":
        loops = [lift_min_norm(b, TangentPath.circle([0.1, 0.2, 0.5], 1.0)),
                 lift_min_norm(b, TangentPath.circle([0, 0, -1.0], 0.3, turns=3))]
        opens = [lift_min_norm(b, TangentPath.segment([0, 0, 0.5], [1, -1, 0.5]))]
    elif name == "regular-exp":
        def leaf(c, r):
            def fn(t):
                x1 = r * np.cos(2 * np.pi * t)
                return np.stack([x1, r * np.sin(2 * np.pi * t), c * np.exp(x1)], 1)
            return fn
        loops = [lift_min_norm(b, TangentPath.from_function(leaf(0.5, 0.7), periodic=True)),
                 lift_min_norm(b, TangentPath.from_function(leaf(-1.0, 0.3), periodic=True))]
        opens = [lift_min_norm(b, flow_tangent_path(b, [0.0, 0.0, 0.4], lambda t: np.array([[1.0, 0.5, 0.2]])))]
    else:  # pragma: no cover
        raise KeyError(name)
    assert n == loops[0].dim
    return b, loops, opens


# ---------------------------------------------------------------------------


def test_criterion_01_theorem_on_aff1(criterion):
    m = load_manifest("aff1-theorem-main")
    assert m.bivector.preset == "aff1" and m.density is None
    assert m.numeric.steps_per_unit == 4096
    report = run(m, suites=["theorem-main"])
    rows = report.select("theorem-main", "theorem_residual")
    kinds = [s.kind for s in m.paths]
    consts = sorted(tuple(s.covector) for s in m.paths if s.kind == "constant")
    parts = [le(f"{r.label}: |log det H - sigma*int v_mu|", r.value, 1e-5) for r in rows]
    parts.append(ge("loop count (3 constant + 3 time-dependent)",
                    float(len(rows) == 6 and kinds.count("constant") == 3 and kinds.count("stationary") == 3
                          and consts == [(1.0, 0.0), (1.0, 1.0), (2.0, 0.0)]), 0.5))
    b = get_preset("aff1").bivector
    res = holonomy(b, constant_loop(b, [0, 0], [1.0, 0.0]), steps_per_unit=4096)
    integral = path_integral(modular_field(b), constant_loop(b, [0, 0], [1.0, 0.0]))
    parts.append(le("anchor a=e1: |det H - e|", abs(res.det - math.e), 1e-6))
    parts.append(le("anchor a=e1: |sigma*int v_mu - 1|", abs(SIGMA * integral - 1.0), 1e-12))
    criterion(1, "theorem det h = exp(int mod) on aff(1)* origin loops", parts)


def test_criterion_02_regular_leaf_corollary(criterion):
    m = load_manifest("regular-leaf")
    assert m.bivector.preset == "regular-r3"
    assert [(t.exponents, t.coeff) for t in m.density.log] == [([0, 0, 1], 1.0)]
    report = run(m, suites=["theorem-main"])
    parts = []
    for spec in m.paths:
        if not spec.loop:
            continue
        parts.append(le(f"{spec.label}: |det H - 1|",
                        abs(report.value(spec.label, "normal_det") - 1.0), 1e-6))
        parts.append(le(f"{spec.label}: |int v_mu|", abs(report.value(spec.label, "integral_v_mu")), 1e-6))
    assert len(parts) >= 10
    criterion(2, "regular-leaf loops: det H = 1 and int v_mu = 0 (rho = exp x3)", parts)


def test_criterion_03_lie_oracles(criterion, rng):
    parts = []
    for name in LIE:
        alg = lie.LIE_PRESETS[name]()
        b = lie.lie_poisson_bivector(alg)
        worst = 0.0
        for a in [np.eye(alg.dim)[0], *rng.normal(size=(3, alg.dim))]:
            h = holonomy(b, constant_loop(b, np.zeros(alg.dim), a)).normal_map
            worst = max(worst, np.max(np.abs(h - lie.constant_loop_oracle(alg, a))))
        parts.append(le(f"{name}: constant loops vs exp(coad)", worst, 1e-6))
        worst = 0.0
        for _ in range(2):
            c = rng.normal(size=(3, alg.dim))

            def a_fn(t, c=c):
                t = np.asarray(t)[:, None]
                return c[0] + c[1] * np.sin(2 * np.pi * t) + c[2] * np.cos(4 * np.pi * t)

            h = holonomy(b, stationary_loop(b, np.zeros(alg.dim), a_fn)).normal_map
            worst = max(worst, np.max(np.abs(h - lie.time_ordered_oracle(alg, a_fn, 1.0, 4096))))
        parts.append(le(f"{name}: time-varying loops vs time-ordered oracle (N=4096)", worst, 1e-5))
    criterion(3, "Lie-Poisson holonomy equals exp ad*", parts)


def _kernel_basis(b, x):
    u, s, vt = np.linalg.svd(b(x))
    rank = int(np.sum(s > 1e-9 * max(s[0], 1e-300))) if s[0] > 0 else 0
    return vt[rank:].T


def test_criterion_04_extension_independence(criterion, rng):
    """Closed extensions of a fixed alpha, on every preset.

    Two kinds of perturbation are applied. The first adds s(t) S (x - gamma(t))
    with S symmetric; it is closed and vanishes on gamma, so it is a second
    extension of the same alpha. The second adds constant kernel-valued
    covectors. That leaves the extension of alpha intact only where the
    foliation is regular near gamma, or where the kernel part commutes with
    alpha, as in the aff(1) example sin(2 pi t) dx1 over a = dx1.
    """
    parts = []
    profile = lambda t: 1.0 + 0.5 * np.cos(2 * np.pi * t)  # noqa: E731
    for name in ALL_PRESETS:
        b, loops, opens = scenario(name)
        worst = 0.0
        for path in loops + opens:
            # scaled by the duration: a strong S makes the flow transversally unstable
            # and the drift guard (not the identity under test) is what then trips on long loops
            s = rng.normal(size=(b.dim, b.dim))
            hess = (s + s.T) / (2.0 * path.duration)
            worst = max(worst, extension_independence_check(b, path, hessian=hess, scale=profile))
        parts.append(le(f"{name}: closed extension s(t)S(x-gamma)", worst, 1e-6))
    # constant kernel forms where the leaves are regular around the path
    regular = {
        "symplectic-r2": scenario("symplectic-r2")[1],
        "zero-r2": scenario("zero-r2")[1],
        "regular-r3": scenario("regular-r3")[1],
        "regular-exp": scenario("regular-exp")[1],
        "so3 (sphere leaves)": scenario("so3")[1][1:],
        "h3 (plane leaves)": scenario("h3")[1][1:],
    }
    for name, paths in regular.items():
        worst = 0.0
        for path in paths:
            b = path_bivector(name)
            w = rng.normal(size=b.dim)

            def kappa(t, x, b=b, w=w):
                out = np.empty_like(x)
                for k, xk in enumerate(x):
                    kb = _kernel_basis(b, xk)
                    out[k] = kb @ (kb.T @ w) * (1 + 0.5 * np.cos(2 * np.pi * t[k]))
                return out

            worst = max(worst, extension_independence_check(b, path, kappa))
        parts.append(le(f"{name}: constant kernel forms", worst, 1e-6))
    aff = get_preset("aff1").bivector
    loop = constant_loop(aff, [0, 0], [1.0, 0.0])
    parts.append(le("aff1: kappa = 0", extension_independence_check(aff, loop,
                                                                     lambda t, x: np.zeros_like(x)), 0.0))
    parts.append(le("aff1: kappa = sin(2 pi t) dx1", extension_independence_check(
        aff, loop, lambda t, x: np.stack([np.sin(2 * np.pi * t), 0 * t], 1)), 1e-6))
    so3 = get_preset("so3").bivector
    lat = scenario("so3")[1][1]
    parts.append(le("so3: kappa = c(t) radial", extension_independence_check(
        so3, lat, lambda t, x: (0.4 + np.sin(2 * np.pi * t))[:, None] * x), 1e-6))
    criterion(4, "extension independence", parts)


def path_bivector(name):
    key = name.split(" ")[0]
    return get_preset(key).bivector


def test_criterion_04_constant_kernel_forms_at_singular_points(criterion, rng):
    """The literal reading: arbitrary constant kernel forms at Lie-Poisson origins.

    At the origin every covector is in the kernel, so alpha + kappa is itself
    a cotangent loop, and its holonomy is the exp ad* of a different element.
    The change cannot be below 1e-6 in general. The Inn coset is unchanged,
    which is checked alongside for information.
    """
    parts = []
    for name in LIE:
        alg = lie.LIE_PRESETS[name]()
        b = lie.lie_poisson_bivector(alg)
        worst, coset = 0.0, 0.0
        for _ in range(3):
            a, w = rng.normal(size=(2, b.dim))
            loop = constant_loop(b, np.zeros(b.dim), a)
            kappa = lambda t, x, w=w: np.outer(1 + 0.5 * np.cos(2 * np.pi * t), w)  # noqa: E731
            worst = max(worst, extension_independence_check(b, loop, kappa))
            base = holonomy(b, loop).normal_map
            pert = holonomy(b, loop, ExtensionFamily(kappa)).normal_map
            coset = max(coset, lie.inn_coset_residual(alg, base, pert))
        print(f"    info {name}: Inn-coset residual of the shifted holonomy {coset:.2e}")
        parts.append(le(f"{name}: generic constant kernel form at the origin", worst, 1e-6))
    criterion(4, "extension independence", parts)


def test_criterion_05_composition_and_reparameterization(criterion):
    parts = []
    so3 = get_preset("so3").bivector
    arc = lift_min_norm(so3, TangentPath.circle([0, 0, 0.6], 0.8, axes=[E[0], E[1]], turns=0.3))
    arc2 = lift_min_norm(so3, TangentPath.circle([0, 0, 0.6], 0.8, axes=[E[0], E[1]], turns=0.5,
                                                 phase=0.6 * np.pi))
    parts.append(le("so3: alpha then its reversal", composition_check(so3, arc, reverse(arc)), 1e-6))
    parts.append(le("so3: two open arcs", composition_check(so3, arc, arc2), 1e-6))
    h3 = lie.h3()
    bh = lie.lie_poisson_bivector(h3)
    a, c = np.array([1.0, 0.0, 0.3]), np.array([0.0, 1.0, -0.2])
    la, lc = constant_loop(bh, np.zeros(3), a), constant_loop(bh, np.zeros(3), c)
    h = holonomy(bh, concatenate(la, lc)).normal_map
    parts.append(le("h3: H(ab) vs exp product",
                    np.max(np.abs(h - lie.constant_loop_oracle(h3, c) @ lie.constant_loop_oracle(h3, a))), 1e-6))
    parts.append(le("h3: composition residual", composition_check(bh, la, lc), 1e-6))
    sym = get_preset("symplectic-r2").bivector
    halves = [lift_min_norm(sym, TangentPath.circle([0, 0], 1.0, turns=0.5, phase=k * np.pi)) for k in range(2)]
    parts.append(le("symplectic: circle halves", composition_check(sym, *halves), 1e-8))
    aff = get_preset("aff1").bivector
    for name, path, b in [("so3 latitude", scenario("so3")[1][1], so3),
                          ("aff1 time-dependent origin loop", scenario("aff1")[1][1], aff),
                          ("regular-exp leaf loop", scenario("regular-exp")[1][0], get_preset("regular-exp").bivector),
                          ("sl2 orbit", scenario("sl2")[1][1], get_preset("sl2").bivector)]:
        worst = max(parameterization_check(b, path, phi, dphi) for phi, dphi in [
            (lambda u: u**2, lambda u: 2 * u),
            (lambda u: 3 * u**2 - 2 * u**3, lambda u: 6 * u - 6 * u**2),
            (lambda u: u - 0.1 * np.sin(2 * np.pi * u), lambda u: 1 - 0.2 * np.pi * np.cos(2 * np.pi * u))])
        parts.append(le(f"{name}: reparameterization", worst, 1e-6))
    criterion(5, "composition and reparameterization", parts)


def test_criterion_06_integral_identities(criterion, rng):
    parts = []
    for name in ALL_PRESETS:
        b, loops, opens = scenario(name)
        paths = loops + opens
        endpoint = loop_int = pull = 0.0
        for k in range(10):
            path = paths[k % len(paths)]
            f = random_poly(b.dim, 3, rng)
            endpoint = max(endpoint, hamiltonian_endpoint_residual(b, f, path))
            beta = CovectorField.exact(random_poly(b.dim, 3, rng)) + CovectorField.constant(rng.normal(size=b.dim))
            pull = max(pull, pullback_identity_residual(b, beta, path))
            loop = loops[k % len(loops)]
            loop_int = max(loop_int, abs(path_integral(hamiltonian_field(b, f), loop)))
        parts += [le(f"{name}: hamiltonian endpoint (10 pairs)", endpoint, 1e-7),
                  le(f"{name}: hamiltonian loop integral", loop_int, 1e-8),
                  le(f"{name}: pullback identity", pull, 1e-7)]
    criterion(6, "integral identities for Hamiltonian and closed forms", parts)


def test_criterion_07_modular_field(criterion, rng):
    parts = []
    for name in ALL_PRESETS:
        b, loops, _ = scenario(name)
        n = b.dim
        rho = VolumeDensity(random_poly(n, 2, rng, scale=0.5))
        v = modular_field(b, rho)
        pts = probe_points(n, 100, rng)
        defining = max(defining_property_residual(b, rho, v, random_poly(n, 3, rng), x) for x in pts)
        gauge = max(gauge_shift_check(b, rho, random_poly(n, 2, rng)) for _ in range(5))
        lie_d = max(poisson_field_residual(b, v, x) for x in pts)
        shifted = modular_field(b, rho.scaled(random_poly(n, 2, rng)))
        inv = max(abs(path_integral(shifted, p) - path_integral(v, p)) for p in loops)
        parts += [le(f"{name}: defining property (100 probes)", defining, 1e-9),
                  le(f"{name}: gauge law coefficients", gauge, 1e-12),
                  le(f"{name}: L_v Pi", lie_d, 1e-10),
                  le(f"{name}: loop-integral gauge invariance", inv, 1e-7)]
    criterion(7, "modular vector field", parts)


def test_criterion_08_liouville(criterion):
    x1, x2 = (PolyScalarField.coordinate(2, i) for i in range(2))
    y1, y2, y3 = (PolyScalarField.coordinate(3, i) for i in range(3))
    one2, zero2 = PolyScalarField.constant(2, 1.0), PolyScalarField.zero(2)
    one = lambda t: np.ones_like(t)  # noqa: E731
    cases = [
        ("rotation, rho = 1", TimeDependentField([(one, VectorField([-x2, x1]))]),
         VolumeDensity.uniform(2), [1.0, 0.5], 1.0, 1.0),
        ("v = (x1, x2), rho = 1", TimeDependentField([(one, VectorField([x1, x2]))]),
         VolumeDensity.uniform(2), [0.1, 0.2], 1.0, math.e**2),
        ("v = (1, 0), log rho = x1", TimeDependentField([(one, VectorField([one2, zero2]))]),
         VolumeDensity(x1), [0.0, 0.0], 1.0, math.e),
        ("cos t (x1 x2, -x2^2/2) + t^2 (x2, x1)",
         TimeDependentField([(np.cos, VectorField([x1 * x2, x2 * x2 * -0.5])),
                             (lambda t: t**2, VectorField([x2, x1]))]),
         VolumeDensity(x1 * x2 * 0.3), [0.4, -0.3], 2.0, None),
        ("so3-type rotation + (1 + sin t) radial, log rho = x3",
         TimeDependentField([(one, VectorField([y2 * y3, -y1 * y3, PolyScalarField.zero(3)])),
                             (lambda t: 1 + np.sin(t), VectorField([y1 * 0.2, y2 * 0.2, y3 * -0.1]))]),
         VolumeDensity(y3), [0.3, 0.2, 0.5], 1.5, None),
    ]
    parts = []
    for desc, field, rho, x0, duration, expected in cases:
        det, ex = liouville_check(field, rho, x0, duration)
        parts.append(le(f"{desc}: relative difference", abs(det - ex) / abs(ex), 1e-6))
        if expected is not None:
            parts.append(le(f"{desc}: vs hand value", abs(det - expected) / expected, 1e-6))
    criterion(8, "Liouville's theorem for time-dependent fields", parts)


def test_criterion_09_unimodularity(criterion):
    parts = []
    for name in ["so3", "h3", "sl2"]:
        alg = lie.LIE_PRESETS[name]()
        b, loops, _ = scenario(name)
        extra = [stationary_loop(b, np.zeros(3), lambda t: np.stack(
            [np.sin(2 * np.pi * t), 1 + t * 0, np.cos(2 * np.pi * t)], 1))]
        worst = max(abs(normal_determinant(holonomy(b, p), VolumeDensity.uniform(3)) - 1.0) for p in loops + extra)
        parts.append(le(f"{name}: |chi|", np.max(np.abs(lie.modular_character(alg))), 0.0))
        parts.append(le(f"{name}: max |det H - 1| over loops", worst, 1e-6))
    aff = lie.aff1()
    parts.append(le("aff1: |chi - (1, 0)|", np.max(np.abs(lie.modular_character(aff) - [1, 0])), 0.0))
    b = lie.lie_poisson_bivector(aff)
    parts.append(ge("aff1: |det H - 1| for a = e1", abs(holonomy(b, constant_loop(b, [0, 0], [1.0, 0])).det - 1), 0.5))
    criterion(9, "unimodularity and det H = 1", parts)


def test_criterion_10_homotopy(criterion):
    m = load_manifest("h3-homotopy")
    b, alg, _ = build_structure(m)
    paths = build_paths(m, b)
    family = [p.label for p in m.paths if p.family == "origin"]
    assert len(family) == 5
    hs = [holonomy(b, paths[q]).normal_map for q in family]
    pairs = list(combinations(range(5), 2))
    equal = all(lie.inn_coset_equal(alg, hs[i], hs[j], tol=1e-6) for i, j in pairs)
    coset = max(lie.inn_coset_residual(alg, hs[i], hs[j]) for i, j in pairs)
    spread = max(np.max(np.abs(hs[i] - hs[j])) for i, j in pairs)
    parts = [le("h3: pairwise Inn-coset residual", coset, 1e-6),
             ge("h3: all pairs inn_coset_equal", float(equal), 0.5),
             ge("h3: max pairwise |H_i - H_j|", spread, 0.1)]
    r3 = get_preset("regular-r3").bivector
    # a homotopy of loops in the leaf x3 = 0.5: centres and radii vary continuously
    members = [lift_min_norm(r3, TangentPath.circle([0.3 * s, -0.2 * s, 0.5], 0.4 + 0.5 * s))
               for s in np.linspace(0.0, 1.0, 5)]
    hr = [holonomy(r3, p).normal_map for p in members]
    parts.append(le("regular-r3: max pairwise |H_i - H_j|",
                    max(np.max(np.abs(hr[i] - hr[j])) for i, j in pairs), 1e-6))
    criterion(10, "reduced holonomy is homotopy invariant; full holonomy is not", parts)


def _abelian_manifest():
    from poisson_holonomy.manifest import parse_manifest

    return parse_manifest("""\
name: abelian-convergence
dim: 2
bivector: {preset: abelian2}
paths:
  - {label: c, kind: constant, point: [0, 0], covector: [1, 2], loop: true}
suites: [holonomy]
""")


def test_criterion_11_integrator_order(criterion):
    manifests = [load_manifest(n) for n in bundled_manifests()] + [_abelian_manifest()]
    covered = {m.bivector.preset for m in manifests}
    assert set(ALL_PRESETS) <= covered
    parts = []
    for m in manifests:
        rows = convergence_study(m, levels=4)
        assert rows, m.name
        for row in rows:
            order = row.order if not math.isnan(row.order) else -1.0
            monotone = all(a >= b for a, b in zip(row.errors, row.errors[1:]))
            desc = f"{m.bivector.preset}/{m.name}/{row.label}: observed order"
            if math.isinf(order):
                parts.append((desc + " (errors at noise floor)", 0.0, ">= 3.5", row.passed))
            else:
                parts.append((desc, order, ">= 3.5", bool(order >= 3.5 and monotone and row.passed)))
    criterion(11, "fourth-order convergence of the variational integrator", parts)


def test_criterion_12_determinism(criterion):
    parts = []
    for name in bundled_manifests():
        m = load_manifest(name)
        first, second = run(m), run(m)
        same = first.csv_body() == second.csv_body()
        parts.append(ge(f"{name}: byte-identical CSV body over two runs", float(same), 0.5))
        parts.append(ge(f"{name}: run passes", float(first.passed), 0.5))
    criterion(12, "deterministic reports", parts)
