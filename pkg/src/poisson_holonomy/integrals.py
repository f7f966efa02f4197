"""Integrals of vector fields along cotangent paths.

``path_integral(v, alpha) = SIGMA * int_a^b alpha(t)(v(gamma(t))) dt`` using
composite Simpson quadrature on each segment's grid. The sign is owned by
:mod:`conventions`; nothing here takes a per-call sign.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import simpson

from .conventions import SIGMA
from .errors import DimensionError
from .fields import BivectorField, CovectorField
from .geometry import hamiltonian_field, sharp_field
from .paths import CotangentPath
from .polynomial import PolyScalarField


def _field(v):
    return getattr(v, "field", v)


def raw_path_integral(v, path: CotangentPath) -> float:
    """Unsigned quadrature of alpha(v(gamma)) over the path."""
    v = _field(v)
    if v.dim != path.dim:
        raise DimensionError("vector field and path dimensions differ")
    total = 0.0
    for seg in path.segments:
        integrand = np.einsum("ti,ti->t", seg.alpha, v(seg.points))
        total += simpson(integrand, x=seg.t)
    return float(total)


def path_integral(v, path: CotangentPath) -> float:
    return SIGMA * raw_path_integral(v, path)


def line_integral(beta: CovectorField, path: CotangentPath) -> float:
    """int_gamma beta = int beta(gamma(t))(gamma'(t)) dt, same quadrature."""
    total = 0.0
    for seg in path.segments:
        integrand = np.einsum("ti,ti->t", beta(seg.points), seg.tangent.derivative)
        total += simpson(integrand, x=seg.t)
    return float(total)


def pullback_identity_residual(bivector: BivectorField, beta: CovectorField, path: CotangentPath) -> float:
    """|int_alpha sharp(beta) - int_gamma beta| for a closed covector field beta."""
    if not beta.is_closed(tol=1e-12):
        raise ValueError("covector field is not closed")
    return abs(path_integral(sharp_field(bivector, beta), path) - line_integral(beta, path))


def hamiltonian_endpoint_residual(bivector: BivectorField, f: PolyScalarField, path: CotangentPath) -> float:
    """|int_alpha X_f - (f(gamma(b)) - f(gamma(a)))|."""
    return abs(path_integral(hamiltonian_field(bivector, f), path) - (f(path.end) - f(path.start)))

