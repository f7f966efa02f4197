"""The modular vector field of a bivector with respect to a volume density."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conventions import MODULAR_INDEX
from .fields import BivectorField, VectorField, VolumeDensity
from .geometry import divergence, hamiltonian_field
from .polynomial import PolyScalarField


@dataclass(frozen=True)
class ModularField:
    field: VectorField
    bivector: BivectorField
    density: VolumeDensity

    def __call__(self, x):
        return self.field(x)


def _modular_components(bivector: BivectorField, density: VolumeDensity, order: str = MODULAR_INDEX):
    n = bivector.dim
    logr = density.log_density
    dlog = [logr.deriv(j) for j in range(n)]
    comps = []
    for i in range(n):
        acc = PolyScalarField.zero(n)
        for j in range(n):
            p = bivector.entry(i, j) if order == "row" else bivector.entry(j, i)
            if p.is_zero():
                continue
            acc = acc + p.deriv(j)
            if not dlog[j].is_zero():
                acc = acc + p * dlog[j]
        comps.append(acc)
    return VectorField(comps)


def modular_field(bivector: BivectorField, density: VolumeDensity | None = None) -> ModularField:
    """v_mu with v^i = sum_j d_j Pi^{ij} + Pi^{ij} d_j log(rho), as exact polynomials."""
    density = density or VolumeDensity.uniform(bivector.dim)
    return ModularField(_modular_components(bivector, density), bivector, density)


def _as_field(v) -> VectorField:
    return v.field if isinstance(v, ModularField) else v


def defining_property_residual(bivector: BivectorField, density: VolumeDensity, v,
                               f: PolyScalarField, x) -> float:
    """|div_mu X_f (x) - df(x)(v(x))|."""
    v = _as_field(v)
    x = np.asarray(x, dtype=float)
    lhs = divergence(hamiltonian_field(bivector, f), density, x)
    df = np.array([d(x) for d in f.gradient()])
    return float(abs(lhs - df @ v(x)))


def gauge_shift_check(bivector: BivectorField, density: VolumeDensity, log_g: PolyScalarField) -> float:
    """Coefficient distance between v_{g mu} and v_mu - X_{ln g}."""
    lhs = modular_field(bivector, density.scaled(log_g)).field
    rhs = modular_field(bivector, density).field - hamiltonian_field(bivector, log_g)
    return lhs.coeff_distance(rhs)


def lie_derivative_bivector(bivector: BivectorField, v) -> list[list[PolyScalarField]]:
    """(L_v Pi)^{ij} = v^l d_l Pi^{ij} - Pi^{lj} d_l v^i - Pi^{il} d_l v^j."""
    v = _as_field(v)
    n = bivector.dim
    out = [[PolyScalarField.zero(n) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            acc = PolyScalarField.zero(n)
            for l in range(n):
                acc = acc + v[l] * bivector.entry(i, j).deriv(l)
                acc = acc - bivector.entry(l, j) * v[i].deriv(l)
                acc = acc - bivector.entry(i, l) * v[j].deriv(l)
            out[i][j] = acc
            out[j][i] = -acc
    return out


def poisson_field_residual(bivector: BivectorField, v, x) -> float:
    """max_ij |(L_v Pi)^{ij}(x)|."""
    lie = lie_derivative_bivector(bivector, v)
    x = np.asarray(x, dtype=float)
    return float(max(abs(lie[i][j](x)) for i in range(bivector.dim) for j in range(bivector.dim)))

