"""Named Poisson structures used by the manifests and the test-suite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import lie
from .fields import BivectorField
from .polynomial import PolyScalarField


@dataclass(frozen=True)
class Preset:
    name: str
    bivector: BivectorField
    algebra: lie.LieAlgebraPresentation | None = None
    regular: bool = False
    description: str = ""


def symplectic_plane() -> BivectorField:
    """Pi^{12} = 1 on R^2."""
    return BivectorField.constant([[0.0, 1.0], [-1.0, 0.0]])


def regular_r3() -> BivectorField:
    """Pi^{12} = 1 + x3^2 on R^3; leaves are the planes x3 = const."""
    x3 = PolyScalarField.coordinate(3, 2)
    return BivectorField(3, {(0, 1): 1.0 + x3 * x3})


def regular_exp() -> BivectorField:
    """X ^ Y for X = d1 + x3 d3, Y = d2; leaves x3 = C exp(x1)."""
    x3 = PolyScalarField.coordinate(3, 2)
    return BivectorField(3, {(0, 1): PolyScalarField.constant(3, 1.0), (1, 2): -x3})


def broken_r3() -> BivectorField:
    """Antisymmetric but not Poisson: Pi^{12} = x1 x2, Pi^{13} = x3, Pi^{23} = x1."""
    x1, x2, x3 = (PolyScalarField.coordinate(3, i) for i in range(3))
    return BivectorField(3, {(0, 1): x1 * x2, (0, 2): x3, (1, 2): x1})


def _lie_preset(name: str, description: str) -> Callable[[], Preset]:
    def make():
        alg = lie.LIE_PRESETS[name]()
        return Preset(name, lie.lie_poisson_bivector(alg), alg, False, description)

    return make


PRESETS: dict[str, Callable[[], Preset]] = {
    "symplectic-r2": lambda: Preset("symplectic-r2", symplectic_plane(), None, True,
                                    "constant symplectic structure on R^2"),
    "zero-r2": lambda: Preset("zero-r2", BivectorField(2, {}), lie.abelian(2), False,
                              "zero bivector (dual of the abelian algebra R^2)"),
    "abelian2": _lie_preset("abelian2", "zero bivector (dual of the abelian algebra R^2)"),
    "aff1": _lie_preset("aff1", "dual of the affine algebra, [e1, e2] = e2"),
    "so3": _lie_preset("so3", "dual of so(3)"),
    "sl2": _lie_preset("sl2", "dual of sl(2) in the basis (h, e, f)"),
    "h3": _lie_preset("h3", "dual of the Heisenberg algebra, [e1, e2] = e3"),
    "regular-r3": lambda: Preset("regular-r3", regular_r3(), None, True,
                                 "rank-2 structure Pi^{12} = 1 + x3^2 on R^3"),
    "regular-exp": lambda: Preset("regular-exp", regular_exp(), None, True,
                                  "rank-2 structure with leaves x3 = C exp(x1)"),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known presets: {sorted(PRESETS)}") from None


def probe_points(dim: int, count: int, rng: np.random.Generator, radius: float = 2.0) -> np.ndarray:
    return rng.uniform(-radius, radius, size=(count, dim))
