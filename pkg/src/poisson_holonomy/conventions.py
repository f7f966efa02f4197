"""Frozen sign conventions and the self-test that pins them.

SIGMA
    Global sign of the path integral of a vector field along a cotangent
    path: ``path_integral(v, alpha) = SIGMA * int alpha(v(gamma(t))) dt``.
    With this choice the integral of a Hamiltonian field X_f is
    f(end) - f(start), and the determinant identity reads
    ``log det h(alpha) = SIGMA * path_integral(v_mu, alpha)``.
COAD_SIGN
    The linearized flow of a constant covector xi at the origin of a dual
    Lie algebra is ``exp(t * COAD_SIGN * ad_xi^T)``.
MODULAR_INDEX
    Which index of Pi is contracted in the modular field formula:
    ``v^i = sum_j d_j Pi^{ij} + Pi^{ij} d_j log rho`` ("row").

Both are fixed by the sharp convention ``sharp(a)^j = sum_i Pi^{ij} a_i``;
:func:`self_test` recomputes them from first principles and refuses to run
when they disagree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA = -1
COAD_SIGN = +1
MODULAR_INDEX = "row"


@dataclass(frozen=True)
class ConventionReport:
    sigma: int
    coad_sign: int
    modular_index: str
    sigma_residuals: dict
    coad_residuals: dict
    modular_residuals: dict

    @property
    def consistent(self) -> bool:
        return (self.sigma == SIGMA and self.coad_sign == COAD_SIGN
                and self.modular_index == MODULAR_INDEX)

    def lines(self) -> list[str]:
        return [
            f"sigma = {self.sigma:+d}",
            f"coad_sign = {self.coad_sign:+d}",
            f"modular_index = {self.modular_index}",
            "sharp convention: sharp(a)^j = sum_i Pi^{ij} a_i",
            f"sigma arbiter residuals (f = x2 on aff1, (0,1) -> (1,2)): "
            + ", ".join(f"{k:+d}: {v:.3e}" for k, v in sorted(self.sigma_residuals.items())),
            f"coad arbiter residuals (aff1 constant loop a = e1): "
            + ", ".join(f"{k:+d}: {v:.3e}" for k, v in sorted(self.coad_residuals.items())),
            f"modular index residuals: "
            + ", ".join(f"{k}: {v:.3e}" for k, v in sorted(self.modular_residuals.items())),
        ]


def _pick(residuals: dict, tol: float):
    good = [k for k, v in residuals.items() if v <= tol]
    return good[0] if len(good) == 1 else None


def self_test(steps_per_unit: int = 4096, samples: int = 513) -> ConventionReport:
    """Determine SIGMA, COAD_SIGN and the modular index order on aff(1)*.

    * SIGMA: the only sign for which the integral of the Hamiltonian field of
      f = x2 along a leaf path from (0, 1) to (1, 2) equals f(end) - f(start).
    * COAD_SIGN: the only sign for which the ODE holonomy of the constant loop
      a = e1 at the origin equals exp(sign * ad_a^T).
    * Modular index: the only contraction order for which
      div X_f = df(v) holds for random polynomials f.
    """
    from scipy.linalg import expm

    from . import lie
    from .fields import VolumeDensity
    from .geometry import divergence, hamiltonian_field
    from .holonomy import holonomy
    from .integrals import raw_path_integral
    from .modular import _modular_components
    from .paths import TangentPath, constant_loop, lift_min_norm
    from .polynomial import PolyScalarField, random_poly

    alg = lie.aff1()
    pi = lie.lie_poisson_bivector(alg)
    f = PolyScalarField.coordinate(2, 1)
    path = lift_min_norm(pi, TangentPath.segment([0.0, 1.0], [1.0, 2.0], samples=samples))
    raw = raw_path_integral(hamiltonian_field(pi, f), path)
    delta = f(path.end) - f(path.start)
    sigma_res = {s: abs(s * raw - delta) for s in (+1, -1)}
    sigma = _pick(sigma_res, 1e-7)

    a = np.array([1.0, 0.0])
    res = holonomy(pi, constant_loop(pi, [0.0, 0.0], a, 1.0, samples), steps_per_unit=steps_per_unit)
    ad_t = lie.ad_matrix(alg, a).T
    coad_res = {s: float(np.max(np.abs(res.normal_map - expm(s * ad_t)))) for s in (+1, -1)}
    coad = _pick(coad_res, 1e-6)

    rng = np.random.default_rng(12345)
    rho = VolumeDensity.uniform(2)
    mod_res = {}
    for order in ("row", "column"):
        v = _modular_components(pi, rho, order)
        worst = 0.0
        for _ in range(10):
            g = random_poly(2, 3, rng)
            x = rng.uniform(-2, 2, 2)
            xf = hamiltonian_field(pi, g)
            lhs = divergence(xf, rho, x)
            rhs = float(np.dot([dg(x) for dg in g.gradient()], v(x)))
            worst = max(worst, abs(lhs - rhs))
        mod_res[order] = worst
    modular = _pick(mod_res, 1e-9)

    return ConventionReport(sigma, coad, modular, sigma_res, coad_res, mod_res)


def require_consistent(report: ConventionReport | None = None) -> ConventionReport:
    from .errors import ConventionError

    report = report or self_test()
    if not report.consistent:
        raise ConventionError(
            "frozen conventions disagree with the self-test: " + "; ".join(report.lines())
        )
    return report
