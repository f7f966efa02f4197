"""Pointwise linear algebra of a Poisson bivector on a linear chart.

Sign convention for sharp, fixed once for the whole package::

    sharp(Pi, x, a)^j = sum_i Pi^{ij}(x) a_i

so sharp(dx^i) is the i-th row of Pi and the Hamiltonian field of f is
X_f^j = sum_i Pi^{ij} d_i f.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, RankError
from .fields import BivectorField, CovectorField, VectorField, VolumeDensity
from .polynomial import PolyScalarField

DEFAULT_TAU_RANK = 1e-9


def _point(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise DimensionError(f"point has dimension {x.shape[-1]}, expected {dim}")
    return x


def eval_bivector(bivector: BivectorField, x) -> np.ndarray:
    """The matrix [Pi^{ij}(x)] (batched over leading axes of ``x``)."""
    return bivector(_point(x, bivector.dim))


def sharp(bivector: BivectorField, x, a) -> np.ndarray:
    x = _point(x, bivector.dim)
    a = _point(a, bivector.dim)
    return np.einsum("...ij,...i->...j", bivector(x), a)


def sharp_field(bivector: BivectorField, beta: CovectorField) -> VectorField:
    """The polynomial vector field sharp(beta)."""
    if beta.dim != bivector.dim:
        raise DimensionError("covector field and bivector dimensions differ")
    n = bivector.dim
    comps = []
    for j in range(n):
        acc = PolyScalarField.zero(n)
        for i in range(n):
            pij = bivector.entry(i, j)
            if not pij.is_zero() and not beta[i].is_zero():
                acc = acc + pij * beta[i]
        comps.append(acc)
    return VectorField(comps)


def hamiltonian_field(bivector: BivectorField, f: PolyScalarField) -> VectorField:
    """X_f = sharp(df)."""
    return sharp_field(bivector, CovectorField.exact(f))


def jacobi_defect(bivector: BivectorField, x) -> float:
    """Largest cyclic sum |Pi^{li} d_l Pi^{jk} + cyc.| over i < j < k at ``x``."""
    n = bivector.dim
    if n < 3:
        return 0.0
    x = _point(x, n)
    p = bivector(x)
    g = bivector.gradient(x)
    # t[i, j, k] = sum_l Pi^{li} d_l Pi^{jk}
    t = np.einsum("li,ljk->ijk", p, g)
    cyc = t + np.transpose(t, (1, 2, 0)) + np.transpose(t, (2, 0, 1))
    worst = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                worst = max(worst, abs(cyc[a, b, c]))
    return float(worst)


def numerical_rank(matrix: np.ndarray, tau_rank: float = DEFAULT_TAU_RANK) -> np.ndarray:
    """Rank under the relative threshold s_i >= tau_rank * s_max (batched)."""
    s = np.linalg.svd(matrix, compute_uv=False)
    smax = s[..., :1]
    return np.sum((s > 0) & (s >= tau_rank * smax), axis=-1)


@dataclass(frozen=True)
class LeafSplitting:
    """Symplectic-leaf tangent space and its orthogonal complement at a point.

    ``leaf_basis`` columns u_1..u_2k form a symplectic basis of the leaf
    tangent space, omega(u_{2i-1}, u_{2i}) = 1, so the leafwise Liouville
    volume of the basis is 1. ``normal_basis`` columns are orthonormal and
    span the Euclidean-orthogonal complement of Im sharp.
    """

    point: np.ndarray
    rank: int
    leaf_basis: np.ndarray
    normal_basis: np.ndarray

    @property
    def codim(self) -> int:
        return self.normal_basis.shape[1]

    @property
    def frame(self) -> np.ndarray:
        return np.hstack([self.leaf_basis, self.normal_basis])

    def project_normal(self, v) -> np.ndarray:
        """Coordinates of the normal part of ``v`` (projection along the leaf)."""
        return self.normal_basis.T @ np.asarray(v, dtype=float)

    def normal_volume(self, density: VolumeDensity) -> float:
        """mu(u_1..u_2k, n_1..n_q): the induced volume of the normal basis."""
        return float(density(self.point) * np.linalg.det(self.frame))


def _canonical_sign(basis: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of each column positive
    if basis.size == 0:
        return basis
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def leaf_splitting(bivector: BivectorField, x, tau_rank: float = DEFAULT_TAU_RANK) -> LeafSplitting:
    """Split R^n at ``x`` into the leaf tangent space and a normal complement.

    Raises
    ------
    RankError
        If the numerical rank is odd, which means ``tau_rank`` straddles a
        singular value.
    """
    x = _point(x, bivector.dim)
    n = bivector.dim
    p = bivector(x)
    u, s, vt = np.linalg.svd(p)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum((s > 0) & (s >= tau_rank * smax)))
    if rank % 2:
        raise RankError(
            f"odd numerical rank {rank} at {x.tolist()} (singular values {s.tolist()}); "
            f"adjust tau_rank={tau_rank}"
        )
    image = u[:, :rank]
    normal = _canonical_sign(vt[rank:].T.copy())
    if rank == 0:
        return LeafSplitting(x.copy(), 0, np.zeros((n, 0)), normal)
    # omega on the image in the orthonormal basis Q: W = (Q^T Pi Q)^{-T}
    reduced = image.T @ p @ image
    omega = np.linalg.inv(reduced).T
    omega = 0.5 * (omega - omega.T)
    leaf = image @ _darboux(omega)
    return LeafSplitting(x.copy(), rank, leaf, normal)


def _darboux(omega: np.ndarray) -> np.ndarray:
    """Columns c with c_{2i-1}^T W c_{2i} = 1 and all other pairings zero."""
    from scipy.linalg import schur

    m = omega.shape[0]
    t, z = schur(omega, output="real")
    cols = []
    i = 0
    while i < m:
        # skew-symmetric -> real Schur form is block diagonal with 2x2 blocks
        lam = 0.5 * (t[i, i + 1] - t[i + 1, i])
        a, b = z[:, i], z[:, i + 1]
        if lam < 0:
            a, b, lam = b, a, -lam
        scale = 1.0 / np.sqrt(lam)
        cols.extend([a * scale, b * scale])
        i += 2
    return np.column_stack(cols)


def symplectic_form_matrix(split: LeafSplitting, bivector: BivectorField) -> np.ndarray:
    """Gram matrix omega(u_a, u_b) of the leaf basis (identity-J if normalized)."""
    p = bivector(split.point)
    u = split.leaf_basis
    if u.shape[1] == 0:
        return np.zeros((0, 0))
    # u_a = sharp(beta_a) with beta_a in Im; omega(u_a, u_b) = beta_a^T Pi beta_b
    beta = np.linalg.pinv(p.T) @ u
    return beta.T @ p @ beta


def divergence_field(v: VectorField, density: VolumeDensity) -> PolyScalarField:
    """div_mu v = sum_j d_j v^j + v^j d_j log(rho) as a polynomial."""
    if v.dim != density.dim:
        raise DimensionError("vector field and density dimensions differ")
    logr = density.log_density
    acc = PolyScalarField.zero(v.dim)
    for j in range(v.dim):
        acc = acc + v[j].deriv(j)
        dl = logr.deriv(j)
        if not dl.is_zero():
            acc = acc + v[j] * dl
    return acc


def divergence(v: VectorField, density: VolumeDensity, x) -> float:
    return divergence_field(v, density)(_point(x, v.dim))
