"""Vector, covector and bivector fields with polynomial components."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError
from .polynomial import PolyScalarField


def _check_components(components, dim=None):
    comps = tuple(components)
    if not comps:
        raise DimensionError("a field needs at least one component")
    n = comps[0].dim if dim is None else dim
    if len(comps) != n:
        raise DimensionError(f"{len(comps)} components for dimension {n}")
    for c in comps:
        if c.dim != n:
            raise DimensionError(f"component of dimension {c.dim} in a {n}-dim field")
    return comps, n


class _ComponentField:
    """Shared machinery for fields with one polynomial per coordinate."""

    def __init__(self, components: Sequence[PolyScalarField]):
        self.components, self.dim = _check_components(components)

    @classmethod
    def zero(cls, dim: int):
        return cls([PolyScalarField.zero(dim) for _ in range(dim)])

    @classmethod
    def constant(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.size
        return cls([PolyScalarField.constant(n, v) for v in values])

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([np.asarray(c(x)) for c in self.components], axis=-1)

    def jacobian(self, x) -> np.ndarray:
        """Matrix J[i, l] = d_l F_i evaluated at ``x``."""
        x = np.asarray(x, dtype=float)
        rows = [
            np.stack([np.asarray(c.deriv(l)(x)) for l in range(self.dim)], axis=-1)
            for c in self.components
        ]
        return np.stack(rows, axis=-2)

    def __add__(self, other):
        if type(other) is not type(self) or other.dim != self.dim:
            return NotImplemented
        return type(self)([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        if type(other) is not type(self) or other.dim != self.dim:
            return NotImplemented
        return type(self)([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return type(self)([-c for c in self.components])

    def __mul__(self, scalar):
        if isinstance(scalar, PolyScalarField) or np.isscalar(scalar):
            return type(self)([c * scalar for c in self.components])
        return NotImplemented

    __rmul__ = __mul__

    def __getitem__(self, i) -> PolyScalarField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other):
        return type(other) is type(self) and self.components == other.components

    def __hash__(self):
        return hash((type(self).__name__, self.components))

    def coeff_distance(self, other) -> float:
        return max(a.coeff_distance(b) for a, b in zip(self.components, other.components))

    def __repr__(self):
        return f"{type(self).__name__}({list(self.components)!r})"


class VectorField(_ComponentField):
    pass


class CovectorField(_ComponentField):
    @classmethod
    def exact(cls, f: PolyScalarField) -> "CovectorField":
        """The differential df."""
        return cls(f.gradient())

    def is_closed(self, tol: float = 0.0) -> bool:
        """d(beta) = 0, checked on coefficients: d_i beta_j == d_j beta_i."""
        n = self.dim
        for i in range(n):
            for j in range(i + 1, n):
                diff = self.components[j].deriv(i) - self.components[i].deriv(j)
                if diff.max_abs_coeff() > tol:
                    return False
        return True


class BivectorField:
    """Antisymmetric matrix of polynomials Pi^{ij}.

    Only the strict upper triangle is stored; the lower triangle is its
    negative and the diagonal vanishes, so antisymmetry holds exactly.
    """

    def __init__(self, dim: int, upper: Mapping[tuple[int, int], PolyScalarField]):
        self.dim = int(dim)
        self._upper: dict[tuple[int, int], PolyScalarField] = {}
        for (i, j), p in sorted(upper.items()):
            if not (0 <= i < j < self.dim):
                raise DimensionError(
                    f"bivector entry ({i}, {j}) must satisfy 0 <= i < j < {self.dim}"
                )
            if p.dim != self.dim:
                raise DimensionError(f"entry ({i}, {j}) has dimension {p.dim}")
            if not p.is_zero():
                self._upper[(i, j)] = p
        self._zero = PolyScalarField.zero(self.dim)
        self._kernel_terms = None
        self._linear_terms = None
        self._grad = None

    @classmethod
    def from_matrix(cls, entries: Sequence[Sequence[PolyScalarField]]) -> "BivectorField":
        """Build from a full grid; raises if the grid is not antisymmetric."""
        n = len(entries)
        upper = {}
        for i in range(n):
            if entries[i][i].max_abs_coeff() != 0.0:
                raise ValueError(f"diagonal entry ({i}, {i}) is not zero")
            for j in range(i + 1, n):
                if (entries[i][j] + entries[j][i]).max_abs_coeff() != 0.0:
                    raise ValueError(f"entries ({i}, {j}) and ({j}, {i}) are not antisymmetric")
                upper[(i, j)] = entries[i][j]
        return cls(n, upper)

    @classmethod
    def from_literal(cls, dim: int, entries: Sequence[Mapping]) -> "BivectorField":
        """``[{"i": 0, "j": 1, "terms": [{"exponents": [...], "coeff": c}]}]``."""
        upper = {}
        for e in entries:
            i, j = int(e["i"]), int(e["j"])
            if (i, j) in upper:
                raise ValueError(f"duplicate bivector entry ({i}, {j})")
            upper[(i, j)] = PolyScalarField.from_literal(dim, e["terms"])
        return cls(dim, upper)

    @classmethod
    def constant(cls, matrix) -> "BivectorField":
        m = np.asarray(matrix, dtype=float)
        n = m.shape[0]
        if not np.array_equal(m, -m.T):
            raise ValueError("constant bivector matrix must be antisymmetric")
        return cls(
            n,
            {(i, j): PolyScalarField.constant(n, m[i, j]) for i in range(n) for j in range(i + 1, n)},
        )

    def entry(self, i: int, j: int) -> PolyScalarField:
        if i == j:
            return self._zero
        if i < j:
            return self._upper.get((i, j), self._zero)
        return -self._upper.get((j, i), self._zero)

    @property
    def upper(self) -> dict[tuple[int, int], PolyScalarField]:
        return dict(self._upper)

    def is_zero(self) -> bool:
        return not self._upper

    def row(self, i: int) -> VectorField:
        """The vector field with components Pi^{ij}, j = 0..n-1 (that is, sharp(dx^i))."""
        return VectorField([self.entry(i, j) for j in range(self.dim)])

    def to_literal(self) -> list[dict]:
        return [
            {"i": i, "j": j, "terms": p.to_literal()} for (i, j), p in self._upper.items()
        ]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(
                f"point has dimension {x.shape[-1]}, bivector has dimension {self.dim}"
            )
        out = np.zeros(x.shape[:-1] + (self.dim, self.dim))
        for (i, j), p in self._upper.items():
            v = p(x)
            out[..., i, j] = v
            out[..., j, i] = -v
        return out

    def gradient(self, x) -> np.ndarray:
        """Array G[l, i, j] = d_l Pi^{ij} at a single point ``x``."""
        x = np.asarray(x, dtype=float)
        if self._grad is None:
            self._grad = {
                key: [p.deriv(l) for l in range(self.dim)] for key, p in self._upper.items()
            }
        out = np.zeros((self.dim, self.dim, self.dim))
        for (i, j), derivs in self._grad.items():
            for l, d in enumerate(derivs):
                v = d(x)
                out[l, i, j] = v
                out[l, j, i] = -v
        return out

    def kernel_terms(self):
        """Flattened term arrays for the integration kernels.

        Returns ``(exps, coefs, field, comp)`` describing the vector fields
        ``W_i = sharp(dx^i)``: term ``t`` contributes
        ``coefs[t] * x**exps[t]`` to component ``comp[t]`` of ``W_{field[t]}``.
        """
        if self._kernel_terms is None:
            self._kernel_terms = field_terms([self.row(i) for i in range(self.dim)])
        return self._kernel_terms

    def linear_kernel_terms(self):
        """Like :meth:`kernel_terms` for the n*n fields ``x_k sharp(dx^i)`` (index ``i*n + k``)."""
        if self._linear_terms is None:
            n = self.dim
            self._linear_terms = field_terms(
                [self.row(i) * PolyScalarField.coordinate(n, k) for i in range(n) for k in range(n)])
        return self._linear_terms

    def __eq__(self, other):
        return isinstance(other, BivectorField) and self.dim == other.dim and self._upper == other._upper

    def __hash__(self):
        return hash((self.dim, tuple(self._upper.items())))

    def __repr__(self):
        return f"BivectorField(dim={self.dim}, upper={self._upper!r})"


def field_terms(fields: Sequence[VectorField]):
    """Flatten a family of polynomial vector fields into kernel arrays."""
    exps, coefs, which, comp = [], [], [], []
    n = fields[0].dim
    for k, fld in enumerate(fields):
        for j, p in enumerate(fld.components):
            e, c = p.arrays()
            exps.append(e)
            coefs.append(c)
            which.append(np.full(c.size, k, dtype=np.int64))
            comp.append(np.full(c.size, j, dtype=np.int64))
    return (
        np.ascontiguousarray(np.concatenate(exps) if exps else np.zeros((0, n), np.int64), dtype=np.int64),
        np.ascontiguousarray(np.concatenate(coefs), dtype=np.float64),
        np.ascontiguousarray(np.concatenate(which), dtype=np.int64),
        np.ascontiguousarray(np.concatenate(comp), dtype=np.int64),
    )


@dataclass(frozen=True)
class VolumeDensity:
    """Volume form rho dx^1 ^ ... ^ dx^n with rho = exp(log_density)."""

    log_density: PolyScalarField

    @property
    def dim(self) -> int:
        return self.log_density.dim

    @classmethod
    def uniform(cls, dim: int) -> "VolumeDensity":
        return cls(PolyScalarField.zero(dim))

    def __call__(self, x):
        return np.exp(self.log_density(x))

    def scaled(self, log_g: PolyScalarField) -> "VolumeDensity":
        """The density g*rho for g = exp(log_g)."""
        return VolumeDensity(self.log_density + log_g)
