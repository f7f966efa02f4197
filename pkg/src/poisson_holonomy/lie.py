"""Lie algebras from structure constants, Lie-Poisson bivectors and holonomy oracles.

Index conventions: ``[e_i, e_j] = sum_k c[i, j, k] e_k`` and
``ad_xi`` has matrix entries ``(ad_xi)[k, j] = sum_i c[i, j, k] xi_i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.linalg import expm, logm

from .conventions import COAD_SIGN
from .errors import LogDomainError
from .fields import BivectorField
from .polynomial import PolyScalarField

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class LieAlgebraPresentation:
    """Structure constants c[i, j, k] of a real Lie algebra of dimension d."""

    constants: np.ndarray
    name: str = ""

    def __post_init__(self):
        c = np.array(self.constants, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]):
            raise ValueError(f"structure constants must have shape (d, d, d), got {c.shape}")
        if not np.allclose(c, -np.transpose(c, (1, 0, 2)), rtol=0.0, atol=0.0):
            raise ValueError("structure constants are not antisymmetric in (i, j)")
        defect = jacobi_defect_constants(c)
        if defect > JACOBI_TOL:
            raise ValueError(f"structure constants violate the Jacobi identity (defect {defect:.3g})")
        c.setflags(write=False)
        object.__setattr__(self, "constants", c)

    @property
    def dim(self) -> int:
        return self.constants.shape[0]

    @classmethod
    def from_triples(cls, dim: int, triples: Iterable[Mapping], name: str = "") -> "LieAlgebraPresentation":
        """Sparse ``{i, j, k, value}`` entries with ``i < j``; the rest by antisymmetry."""
        c = np.zeros((dim, dim, dim))
        for tr in triples:
            i, j, k, v = int(tr["i"]), int(tr["j"]), int(tr["k"]), float(tr["value"])
            if not i < j:
                raise ValueError(f"structure constant ({i}, {j}, {k}) needs i < j")
            c[i, j, k] += v
            c[j, i, k] -= v
        return cls(c, name)

    def to_triples(self) -> list[dict]:
        d = self.dim
        return [
            {"i": i, "j": j, "k": k, "value": float(self.constants[i, j, k])}
            for i in range(d) for j in range(i + 1, d) for k in range(d)
            if self.constants[i, j, k] != 0.0
        ]

    def bracket(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.constants)


def jacobi_defect_constants(c: np.ndarray) -> float:
    """max |sum_m c_ij^m c_mk^l + c_jk^m c_mi^l + c_ki^m c_mj^l|."""
    t = np.einsum("ijm,mkl->ijkl", c, c)
    s = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
    return float(np.max(np.abs(s))) if s.size else 0.0


# -- presets ---------------------------------------------------------------


def abelian(dim: int = 2) -> LieAlgebraPresentation:
    return LieAlgebraPresentation(np.zeros((dim, dim, dim)), f"abelian{dim}")


def aff1() -> LieAlgebraPresentation:
    """[e1, e2] = e2."""
    return LieAlgebraPresentation.from_triples(2, [{"i": 0, "j": 1, "k": 1, "value": 1.0}], "aff1")


def so3() -> LieAlgebraPresentation:
    """[e_i, e_j] = eps_ijk e_k."""
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return LieAlgebraPresentation(eps, "so3")


def sl2() -> LieAlgebraPresentation:
    """Basis (h, e, f): [h, e] = 2e, [h, f] = -2f, [e, f] = h."""
    return LieAlgebraPresentation.from_triples(
        3,
        [
            {"i": 0, "j": 1, "k": 1, "value": 2.0},
            {"i": 0, "j": 2, "k": 2, "value": -2.0},
            {"i": 1, "j": 2, "k": 0, "value": 1.0},
        ],
        "sl2",
    )


def h3() -> LieAlgebraPresentation:
    """Heisenberg algebra: [e1, e2] = e3."""
    return LieAlgebraPresentation.from_triples(3, [{"i": 0, "j": 1, "k": 2, "value": 1.0}], "h3")


LIE_PRESETS: dict[str, Callable[[], LieAlgebraPresentation]] = {
    "abelian2": lambda: abelian(2),
    "aff1": aff1,
    "so3": so3,
    "sl2": sl2,
    "h3": h3,
}


# -- operations ------------------------------------------------------------


def lie_poisson_bivector(lie: LieAlgebraPresentation) -> BivectorField:
    """Pi^{ij}(x) = sum_k c_ij^k x_k on the dual space."""
    d = lie.dim
    upper = {}
    for i in range(d):
        for j in range(i + 1, d):
            p = PolyScalarField.zero(d)
            for k in range(d):
                if lie.constants[i, j, k] != 0.0:
                    p = p + PolyScalarField.coordinate(d, k, lie.constants[i, j, k])
            upper[(i, j)] = p
    return BivectorField(d, upper)


def ad_matrix(lie: LieAlgebraPresentation, xi) -> np.ndarray:
    return np.einsum("ijk,i->kj", lie.constants, np.asarray(xi, dtype=float))


def coad_matrix(lie: LieAlgebraPresentation, xi) -> np.ndarray:
    """Generator of the linearized flow of a constant covector xi at the origin.

    Equals ``COAD_SIGN * ad_xi^T`` in the coordinates of the dual space.
    """
    return COAD_SIGN * ad_matrix(lie, xi).T


def constant_loop_oracle(lie: LieAlgebraPresentation, a, duration: float = 1.0) -> np.ndarray:
    """exp(T * coad_a): holonomy of a constant loop at the origin."""
    return expm(duration * coad_matrix(lie, a))


def time_ordered_oracle(lie: LieAlgebraPresentation, a_fn: Callable, duration: float = 1.0,
                        partitions: int = 4096) -> np.ndarray:
    """Midpoint product exp(dt coad_{a(t_N)}) ... exp(dt coad_{a(t_1)})."""
    if partitions < 2:
        raise ValueError("need at least two partitions")
    dt = duration / partitions
    mids = (np.arange(partitions) + 0.5) * dt
    avals = np.asarray(a_fn(mids), dtype=float).reshape(partitions, lie.dim)
    out = np.eye(lie.dim)
    for a in avals:
        out = expm(dt * coad_matrix(lie, a)) @ out
    return out


def modular_character(lie: LieAlgebraPresentation) -> np.ndarray:
    """chi_i = trace(ad_{e_i})."""
    return np.einsum("ijj->i", lie.constants)


def is_unimodular(lie: LieAlgebraPresentation, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(modular_character(lie)), initial=0.0) <= tol)


@dataclass(frozen=True)
class InnSpan:
    """Span of {coad_xi : xi in g} inside d x d matrices."""

    basis: tuple = field(default_factory=tuple)
    generators: tuple = field(default_factory=tuple)
    size: int = 0

    @property
    def dim(self) -> int:
        return len(self.basis)

    def residual(self, matrix) -> float:
        """Max-abs distance from ``matrix`` to the span."""
        m = np.asarray(matrix, dtype=float)
        if not self.basis:
            return float(np.max(np.abs(m), initial=0.0))
        b = np.stack([x.ravel() for x in self.basis], axis=1)
        coef, *_ = np.linalg.lstsq(b, m.ravel(), rcond=None)
        return float(np.max(np.abs(b @ coef - m.ravel())))


def inn_span(lie: LieAlgebraPresentation, tol: float = 1e-10) -> InnSpan:
    d = lie.dim
    gens = np.stack([coad_matrix(lie, e).ravel() for e in np.eye(d)], axis=1)
    u, s, vt = np.linalg.svd(gens, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * max(smax, 1.0)))
    basis = tuple(u[:, r].reshape(d, d) for r in range(rank))
    # xi_r with coad_{xi_r} = s_r * basis_r
    generators = tuple(vt[r] / s[r] for r in range(rank))
    return InnSpan(basis, generators, d)


def inn_coset_residual(lie: LieAlgebraPresentation, h1, h2, span: InnSpan | None = None) -> float:
    """Distance from log(h2 h1^{-1}) to the span of the coadjoint generators.

    Raises
    ------
    LogDomainError
        If h2 h1^{-1} has an eigenvalue on the closed negative real axis, in
        which case the single-logarithm witness is inconclusive.
    """
    span = span or inn_span(lie)
    m = np.asarray(h2, dtype=float) @ np.linalg.inv(np.asarray(h1, dtype=float))
    ev = np.linalg.eigvals(m)
    bad = (np.abs(ev.imag) <= 1e-12 * max(1.0, np.max(np.abs(ev)))) & (ev.real <= 0)
    if np.any(bad):
        raise LogDomainError(
            f"h2 h1^-1 has eigenvalues {ev[bad].real.tolist()} on the negative real axis; "
            "the coset test is inconclusive"
        )
    log, _ = logm(m, disp=False)
    if np.iscomplexobj(log):
        log = log.real
    return span.residual(log)


def inn_coset_equal(lie: LieAlgebraPresentation, h1, h2, tol: float = 1e-6,
                    span: InnSpan | None = None) -> bool:
    """True when h2 h1^{-1} = exp(X) with X in the span of coadjoint generators."""
    return inn_coset_residual(lie, h1, h2, span) <= tol
