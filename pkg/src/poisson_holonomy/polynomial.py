"""Exact multivariate polynomials on a single linear chart of R^n.

A polynomial is stored as a mapping from exponent multi-indices to real
coefficients, e.g. for ``dim=3``::

    {(1, 0, 0): 2.0, (0, 2, 1): -0.5}   # 2*x0 - 0.5*x1**2*x2

Differentiation is done on the coefficients, so derivatives are exact.
"""
from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np


class PolyScalarField:
    """Polynomial scalar field on R^dim with exact arithmetic on coefficients."""

    __slots__ = ("dim", "_terms", "_arrays")

    def __init__(self, dim: int, terms: Mapping[tuple, float] | None = None):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        clean = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim:
                raise ValueError(
                    f"multi-index {exps} has length {len(exps)}, expected {self.dim}"
                )
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            coeff = float(coeff)
            if coeff != 0.0:
                clean[exps] = clean.get(exps, 0.0) + coeff
        self._terms = {k: v for k, v in sorted(clean.items()) if v != 0.0}
        self._arrays = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, dim: int, value: float) -> "PolyScalarField":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def zero(cls, dim: int) -> "PolyScalarField":
        return cls(dim)

    @classmethod
    def coordinate(cls, dim: int, i: int, coeff: float = 1.0) -> "PolyScalarField":
        if not 0 <= i < dim:
            raise IndexError(f"coordinate index {i} out of range for dim {dim}")
        exps = [0] * dim
        exps[i] = 1
        return cls(dim, {tuple(exps): coeff})

    @classmethod
    def from_literal(cls, dim: int, literal: Iterable[Mapping]) -> "PolyScalarField":
        """Build from ``[{"exponents": [...], "coeff": c}, ...]``."""
        terms: dict[tuple, float] = {}
        for item in literal:
            exps = tuple(item["exponents"])
            if len(exps) != dim:
                raise ValueError(
                    f"exponents {list(exps)} have length {len(exps)}, expected {dim}"
                )
            terms[exps] = terms.get(exps, 0.0) + float(item["coeff"])
        return cls(dim, terms)

    def to_literal(self) -> list[dict]:
        return [{"exponents": list(k), "coeff": v} for k, v in self._terms.items()]

    # -- introspection ------------------------------------------------------
    @property
    def terms(self) -> dict[tuple, float]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self._terms), default=-1)

    def coeff(self, exps) -> float:
        return self._terms.get(tuple(exps), 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(v) for v in self._terms.values()), default=0.0)

    def coeff_distance(self, other: "PolyScalarField") -> float:
        """Max-abs difference of coefficients."""
        return (self - other).max_abs_coeff()

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix (T, dim) and coefficient vector (T,)."""
        if self._arrays is None:
            if self._terms:
                exps = np.array(list(self._terms.keys()), dtype=np.int64)
                coefs = np.array(list(self._terms.values()), dtype=np.float64)
            else:
                exps = np.zeros((0, self.dim), dtype=np.int64)
                coefs = np.zeros(0, dtype=np.float64)
            self._arrays = (exps, coefs)
        return self._arrays

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "PolyScalarField":
        if isinstance(other, PolyScalarField):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if np.isscalar(other):
            return PolyScalarField.constant(self.dim, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return PolyScalarField(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return PolyScalarField(self.dim, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return PolyScalarField(
                self.dim, {k: float(other) * v for k, v in self._terms.items()}
            )
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple, float] = {}
        for k1, v1 in self._terms.items():
            for k2, v2 in other._terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                terms[k] = terms.get(k, 0.0) + v1 * v2
        return PolyScalarField(self.dim, terms)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, (int, np.integer)) or power < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = PolyScalarField.constant(self.dim, 1.0)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, PolyScalarField):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, tuple(self._terms.items())))

    # -- calculus -----------------------------------------------------------
    def deriv(self, i: int) -> "PolyScalarField":
        """Exact partial derivative with respect to coordinate ``i``."""
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate index {i} out of range for dim {self.dim}")
        terms = {}
        for k, v in self._terms.items():
            e = k[i]
            if e == 0:
                continue
            nk = list(k)
            nk[i] = e - 1
            terms[tuple(nk)] = v * e
        return PolyScalarField(self.dim, terms)

    def gradient(self) -> list["PolyScalarField"]:
        return [self.deriv(i) for i in range(self.dim)]

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at a point or a stack of points of shape (..., dim)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(
                f"point has dimension {x.shape[-1]}, field has dimension {self.dim}"
            )
        exps, coefs = self.arrays()
        if coefs.size == 0:
            out = np.zeros(x.shape[:-1])
        else:
            mono = np.prod(x[..., None, :] ** exps, axis=-1)
            out = mono @ coefs
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        if not self._terms:
            return f"PolyScalarField(dim={self.dim}, 0)"
        parts = []
        for k, v in self._terms.items():
            mono = "*".join(
                f"x{i}" if e == 1 else f"x{i}**{e}" for i, e in enumerate(k) if e
            )
            parts.append(f"{v:g}" + (f"*{mono}" if mono else ""))
        return f"PolyScalarField(dim={self.dim}, {' + '.join(parts)})"


def random_poly(dim: int, degree: int, rng: np.random.Generator, scale: float = 1.0):
    """Dense random polynomial of total degree <= ``degree``."""
    terms = {}
    for exps in _multi_indices(dim, degree):
        terms[exps] = scale * rng.uniform(-1.0, 1.0)
    return PolyScalarField(dim, terms)


def _multi_indices(dim: int, degree: int):
    if dim == 1:
        for e in range(degree + 1):
            yield (e,)
        return
    for e in range(degree + 1):
        for rest in _multi_indices(dim - 1, degree - e):
            yield (e,) + rest
