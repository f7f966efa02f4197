import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from poisson_holonomy import lie
from poisson_holonomy.fields import VectorField, VolumeDensity
from poisson_holonomy.geometry import hamiltonian_field
from poisson_holonomy.integrals import path_integral
from poisson_holonomy.modular import (
    defining_property_residual,
    gauge_shift_check,
    modular_field,
    poisson_field_residual,
)
from poisson_holonomy.paths import TangentPath, lift_min_norm
from poisson_holonomy.polynomial import PolyScalarField, random_poly
from poisson_holonomy.presets import get_preset

from conftest import ALL_PRESETS

AFF = get_preset("aff1").bivector
SO3 = get_preset("so3").bivector


def coords(n):
    return [PolyScalarField.coordinate(n, i) for i in range(n)]


def test_modular_field_examples():
    sym = get_preset("symplectic-r2").bivector
    assert all(c.is_zero() for c in modular_field(sym).field)
    assert all(c.is_zero() for c in modular_field(SO3).field)
    v = modular_field(AFF).field
    assert v.coeff_distance(VectorField.constant([1.0, 0.0])) == 0.0


@pytest.mark.parametrize("name", ["aff1", "so3", "sl2", "h3", "abelian2"])
def test_lie_poisson_modular_field_is_the_character(name):
    alg = lie.LIE_PRESETS[name]() if name != "abelian2" else lie.abelian(2)
    v = modular_field(lie.lie_poisson_bivector(alg)).field
    assert v.coeff_distance(VectorField.constant(lie.modular_character(alg))) <= 1e-15


@given(st.sampled_from(ALL_PRESETS), st.integers(0, 2**32 - 1))
def test_defining_property(name, seed):
    rng = np.random.default_rng(seed)
    b = get_preset(name).bivector
    rho = VolumeDensity(random_poly(b.dim, 2, rng, scale=0.5))
    v = modular_field(b, rho)
    for _ in range(4):
        f = random_poly(b.dim, 3, rng)
        x = rng.uniform(-2, 2, b.dim)
        assert defining_property_residual(b, rho, v, f, x) <= 1e-9 * max(1.0, abs(rho.log_density(x)))


def test_defining_property_examples():
    x1, x2 = coords(2)
    flat = VolumeDensity.uniform(2)
    assert defining_property_residual(AFF, flat, VectorField.zero(2), x1 * x2, [1.0, 1.0]) > 0.5
    assert defining_property_residual(AFF, flat, VectorField.constant([5.0, -1.0]),
                                      PolyScalarField.constant(2, 3.0), [0.3, 2.0]) == 0.0


def test_gauge_examples():
    assert gauge_shift_check(AFF, VolumeDensity.uniform(2), PolyScalarField.zero(2)) == 0.0
    assert gauge_shift_check(AFF, VolumeDensity.uniform(2), coords(2)[0]) <= 1e-12
    assert gauge_shift_check(SO3, VolumeDensity.uniform(3), coords(3)[2]) <= 1e-12


@given(st.sampled_from(ALL_PRESETS), st.integers(0, 2**32 - 1))
def test_gauge_law_holds_for_quadratic_gauges(name, seed):
    rng = np.random.default_rng(seed)
    b = get_preset(name).bivector
    rho = VolumeDensity(random_poly(b.dim, 2, rng, scale=0.5))
    assert gauge_shift_check(b, rho, random_poly(b.dim, 2, rng)) <= 1e-12


@pytest.mark.parametrize("name", ALL_PRESETS)
def test_modular_field_is_poisson(name, rng):
    b = get_preset(name).bivector
    rho = VolumeDensity(random_poly(b.dim, 2, rng, scale=0.5))
    v = modular_field(b, rho)
    f = random_poly(b.dim, 3, rng)
    for x in rng.uniform(-2, 2, (10, b.dim)):
        assert poisson_field_residual(b, v, x) <= 1e-10
        assert poisson_field_residual(b, hamiltonian_field(b, f), x) <= 1e-10 * max(1.0, np.abs(x).max() ** 4)


def test_non_poisson_field():
    x1, x2 = coords(2)
    zero = PolyScalarField.zero(2)
    assert poisson_field_residual(AFF, VectorField([x1, zero]), [1.0, 1.0]) == pytest.approx(1.0)
    # x2 d1 commutes with x2 d1 ^ d2, so this one is Poisson after all
    assert poisson_field_residual(AFF, VectorField([x2, zero]), [1.0, 1.0]) == 0.0


def test_loop_integral_is_gauge_invariant(rng):
    loop = lift_min_norm(SO3, TangentPath.circle([0, 0, 0.6], 0.8, axes=[[1, 0, 0], [0, 1, 0]]))
    rho = VolumeDensity(coords(3)[2])
    base = path_integral(modular_field(SO3, rho), loop)
    for _ in range(3):
        g = random_poly(3, 2, rng)
        assert abs(path_integral(modular_field(SO3, rho.scaled(g)), loop) - base) <= 1e-7
