"""Linear Poisson holonomy along cotangent paths.

Along a cotangent path alpha over gamma, extend alpha(t) to a closed
covector field (by default the constant field alpha(t)), integrate the
time-dependent field V_t = sharp(alpha~_t) together with its variational
equation, and read off the map induced on the normal spaces of the
symplectic leaves at the endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .errors import (
    BlowUpError,
    CotangentConditionError,
    DriftError,
    LeafPreservationError,
    RankError,
)
from .fields import BivectorField, VectorField, VolumeDensity, field_terms
from .geometry import (
    DEFAULT_TAU_RANK,
    LeafSplitting,
    divergence_field,
    leaf_splitting,
    numerical_rank,
)
from .paths import TAU_COT, CotangentPath, CotangentSegment, cotangent_residual

DEFAULT_STEPS_PER_UNIT = 4096
TAU_DRIFT = 1e-6
TAU_LEAF = 1e-6


@dataclass(frozen=True)
class ExtensionFamily:
    """Closed extensions alpha~_t of alpha(t).

    The extension is ``alpha(t) + offset(t, gamma(t)) + s(t) S (x - gamma(t))``.

    ``offset(t, x)`` receives sample times (m,) and base points (m, n) and
    returns constant covectors (m, n); constant covector fields are closed.
    The linear part with a symmetric matrix ``S`` and scalar profile ``s``
    is d of a quadratic function, so it is closed too, and it vanishes on
    gamma: it is a genuine second extension of the same alpha. A constant
    offset changes alpha itself unless it is zero, so holonomy is only
    guaranteed to be unchanged by it where the leaves are regular near gamma.
    """

    offset: Callable | None = None
    hessian: np.ndarray | None = None
    scale: Callable | None = None

    def __post_init__(self):
        if self.hessian is not None:
            s = np.asarray(self.hessian, dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1] or not np.allclose(s, s.T, rtol=0, atol=1e-14):
                raise ValueError("hessian must be a symmetric square matrix (closedness)")
            object.__setattr__(self, "hessian", s)

    @property
    def linear(self) -> bool:
        return self.hessian is not None

    def _scale(self, times):
        if self.scale is None:
            return np.ones_like(times)
        return np.broadcast_to(np.asarray(self.scale(times), dtype=float), times.shape)

    def covectors(self, segment: CotangentSegment, times: np.ndarray) -> np.ndarray:
        """Coefficient table for the integration kernel on the sample ``times``.

        Columns ``0..n-1`` hold the constant part; with a linear part the
        next ``n*n`` columns hold ``s(t) S[i, k]`` for the fields x_k sharp(dx^i).
        """
        alpha = segment.alpha_at(times)
        base = segment.tangent.at(times) if (self.offset is not None or self.linear) else None
        if self.offset is not None:
            alpha = alpha + np.asarray(self.offset(times, base), dtype=float).reshape(alpha.shape)
        if not self.linear:
            return alpha
        s = self._scale(times)
        const = alpha - s[:, None] * (base @ self.hessian.T)
        lin = s[:, None] * self.hessian.ravel()[None, :]
        return np.concatenate([const, lin], axis=1)

    def terms(self, bivector: BivectorField):
        if not self.linear:
            return bivector.kernel_terms()
        e0, c0, w0, p0 = bivector.kernel_terms()
        e1, c1, w1, p1 = bivector.linear_kernel_terms()
        return (np.concatenate([e0, e1]), np.concatenate([c0, c1]),
                np.concatenate([w0, w1 + bivector.dim]), np.concatenate([p0, p1]))


DEFAULT_EXTENSION = ExtensionFamily()


@dataclass
class _Flow:
    phi: np.ndarray
    endpoint: np.ndarray
    trajectories: list
    times: list
    steps: int
    drift: float


def _step_count(duration: float, steps_per_unit: int) -> int:
    s = max(2, math.ceil(steps_per_unit * duration - 1e-9))
    return s + (s % 2)


def _integrate(bivector: BivectorField, path: CotangentPath, ext: ExtensionFamily,
               steps_per_unit: int, backend=None) -> _Flow:
    terms = ext.terms(bivector)
    x = np.array(path.start, dtype=float)
    phi = np.eye(bivector.dim)
    trajs, times, total, drift = [], [], 0, 0.0
    for seg in path.segments:
        a, b = seg.interval
        steps = _step_count(b - a, steps_per_unit)
        h = (b - a) / steps
        grid = a + 0.5 * h * np.arange(2 * steps + 1)
        grid[-1] = b
        coeffs = ext.covectors(seg, grid)
        traj, phi_seg = kernels.rk4_variational(*terms, coeffs, x, h, backend=backend)
        phi = phi_seg @ phi
        x = traj[-1].copy()
        drift = max(drift, float(np.linalg.norm(x - seg.points[-1])))
        trajs.append(traj)
        times.append(grid[::2])
        total += steps
    return _Flow(phi, x, trajs, times, total, drift)


def _check_rank(bivector, flow: _Flow, rank0: int, tau_rank: float):
    for traj, t in zip(flow.trajectories, flow.times):
        ranks = numerical_rank(bivector(traj), tau_rank)
        bad = np.nonzero(ranks != rank0)[0]
        if bad.size:
            k = bad[0]
            raise RankError(
                f"rank of Pi changes from {rank0} to {ranks[k]} at t={t[k]:.6g} "
                f"(x={traj[k].tolist()})"
            )


def _validated_flow(bivector, path, ext, steps_per_unit, tau_cot, tau_drift, tau_rank, backend):
    resid = cotangent_residual(bivector, path)
    if resid > tau_cot:
        raise CotangentConditionError(
            f"cotangent residual {resid:.3g} exceeds tolerance {tau_cot:g}"
        )
    flow = _integrate(bivector, path, ext or DEFAULT_EXTENSION, steps_per_unit, backend)
    if not np.all(np.isfinite(flow.phi)):
        raise BlowUpError("linearized flow is not finite")
    rank0 = int(numerical_rank(bivector(path.start), tau_rank))
    _check_rank(bivector, flow, rank0, tau_rank)
    if flow.drift > tau_drift:
        raise DriftError(
            f"integrated endpoint misses the base path by {flow.drift:.3g} "
            f"(tolerance {tau_drift:g})"
        )
    return flow


def linearized_flow(bivector: BivectorField, path: CotangentPath, ext: ExtensionFamily | None = None,
                    steps_per_unit: int = DEFAULT_STEPS_PER_UNIT, *, tau_cot: float = TAU_COT,
                    tau_drift: float = TAU_DRIFT, tau_rank: float = DEFAULT_TAU_RANK,
                    backend=None) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint and linearization of the time-dependent flow of sharp(alpha~_t).

    Returns
    -------
    endpoint : ndarray, shape (n,)
    phi : ndarray, shape (n, n)

    Raises
    ------
    CotangentConditionError, RankError, DriftError
    """
    flow = _validated_flow(bivector, path, ext, steps_per_unit, tau_cot, tau_drift, tau_rank, backend)
    return flow.endpoint, flow.phi


@dataclass(frozen=True)
class HolonomyResult:
    flow: np.ndarray
    start: LeafSplitting
    end: LeafSplitting
    normal_map: np.ndarray
    endpoint: np.ndarray
    drift: float
    steps: int
    leaf_residual: float

    @property
    def codim(self) -> int:
        return self.normal_map.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.normal_map)) if self.codim else 1.0


def _normal_map(phi, start: LeafSplitting, end: LeafSplitting):
    h = end.normal_basis.T @ phi @ start.normal_basis
    leak = end.normal_basis.T @ phi @ start.leaf_basis
    return h, float(np.max(np.abs(leak), initial=0.0))


def holonomy(bivector: BivectorField, path: CotangentPath, ext: ExtensionFamily | None = None,
             steps_per_unit: int = DEFAULT_STEPS_PER_UNIT, *, tau_cot: float = TAU_COT,
             tau_drift: float = TAU_DRIFT, tau_rank: float = DEFAULT_TAU_RANK,
             tau_leaf: float = TAU_LEAF, start: LeafSplitting | None = None,
             end: LeafSplitting | None = None, backend=None) -> HolonomyResult:
    """Linear holonomy h(alpha): N_{gamma(a)} -> N_{gamma(b)} in orthonormal normal bases.

    For paths whose base curve closes, the start splitting is reused at the
    end so that the determinant does not depend on the choice of basis.
    ``start``/``end`` splittings may be passed to share bases across runs.
    """
    flow = _validated_flow(bivector, path, ext, steps_per_unit, tau_cot, tau_drift, tau_rank, backend)
    start = start or leaf_splitting(bivector, path.start, tau_rank)
    if end is None:
        end = start if path.closed else leaf_splitting(bivector, path.end, tau_rank)
    h, leak = _normal_map(flow.phi, start, end)
    if leak > tau_leaf:
        raise LeafPreservationError(
            f"linearized flow moves leaf vectors off the leaf by {leak:.3g} (tolerance {tau_leaf:g})"
        )
    return HolonomyResult(flow.phi, start, end, h, flow.endpoint, flow.drift, flow.steps, leak)


def normal_determinant(result: HolonomyResult, density: VolumeDensity) -> float:
    """det h(alpha) with respect to the normal volumes induced by mu and the leaf Liouville form."""
    det = result.det
    if result.end is result.start:
        return det
    return det * result.end.normal_volume(density) / result.start.normal_volume(density)


def extension_independence_check(bivector: BivectorField, path: CotangentPath, kappa: Callable | None = None,
                                 tau_cot: float = TAU_COT, *, hessian=None, scale: Callable | None = None,
                                 **kwargs) -> float:
    """max-abs change of h(alpha) under a change of the closed extension.

    ``kappa(t, x)`` adds constant covectors that must lie in ker sharp along
    gamma (the :class:`ExtensionFamily` offset signature); ``hessian`` and
    ``scale`` add the closed field ``s(t) S (x - gamma(t))``, which vanishes
    on gamma.
    """
    if kappa is not None:
        for seg in path.segments:
            k = np.asarray(kappa(seg.t, seg.points), dtype=float).reshape(seg.points.shape)
            bad = np.linalg.norm(np.einsum("tij,ti->tj", bivector(seg.points), k), axis=1)
            if bad.max() > tau_cot:
                i = int(np.argmax(bad))
                raise CotangentConditionError(
                    f"perturbation is not in ker sharp at t={seg.t[i]:.6g} (|sharp| = {bad[i]:.3g})"
                )
    base = holonomy(bivector, path, None, tau_cot=tau_cot, **kwargs)
    pert = holonomy(bivector, path, ExtensionFamily(kappa, hessian, scale), tau_cot=tau_cot,
                    start=base.start, end=base.end, **kwargs)
    return float(np.max(np.abs(base.normal_map - pert.normal_map), initial=0.0))


def composition_check(bivector: BivectorField, first: CotangentPath, second: CotangentPath,
                      **kwargs) -> float:
    """max-abs of h(first*second) - h(second) h(first), all in shared normal bases."""
    from .paths import concatenate

    tau_rank = kwargs.get("tau_rank", DEFAULT_TAU_RANK)
    joined = concatenate(first, second)
    sa = leaf_splitting(bivector, first.start, tau_rank)
    sb = sa if first.closed else leaf_splitting(bivector, first.end, tau_rank)
    sc = sa if joined.closed else (sb if second.closed else leaf_splitting(bivector, second.end, tau_rank))
    h1 = holonomy(bivector, first, start=sa, end=sb, **kwargs).normal_map
    h2 = holonomy(bivector, second, start=sb, end=sc, **kwargs).normal_map
    h12 = holonomy(bivector, joined, start=sa, end=sc, **kwargs).normal_map
    return float(np.max(np.abs(h12 - h2 @ h1), initial=0.0))


def parameterization_check(bivector: BivectorField, path: CotangentPath, phi: Callable,
                           dphi: Callable | None = None, **kwargs) -> float:
    """max-abs of h(alpha) - h(alpha^phi)."""
    from .paths import reparameterize

    base = holonomy(bivector, path, **kwargs)
    other = holonomy(bivector, reparameterize(path, phi, dphi), start=base.start, end=base.end, **kwargs)
    return float(np.max(np.abs(base.normal_map - other.normal_map), initial=0.0))


# --------------------------------------------------------------------------
# Liouville's theorem for general time-dependent fields


@dataclass(frozen=True)
class TimeDependentField:
    """w_t(x) = sum_k c_k(t) W_k(x) with scalar coefficient functions c_k."""

    terms: Sequence[tuple[Callable, VectorField]] = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim

    def coefficients(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([np.broadcast_to(np.asarray(c(t), dtype=float), t.shape) for c, _ in self.terms],
                        axis=-1)

    def __call__(self, t: float, x) -> np.ndarray:
        c = self.coefficients(np.array([t]))[0]
        return sum(ck * w(x) for ck, (_, w) in zip(c, self.terms))


def liouville_check(field_: TimeDependentField, density: VolumeDensity, x0, duration: float,
                    steps_per_unit: int = DEFAULT_STEPS_PER_UNIT, bound: float = 1e8,
                    backend=None) -> tuple[float, float]:
    """Return (det Phi w.r.t. mu, exp of the integrated mu-divergence along the orbit)."""
    x0 = np.asarray(x0, dtype=float)
    steps = _step_count(duration, steps_per_unit)
    h = duration / steps
    grid = 0.5 * h * np.arange(2 * steps + 1)
    grid[-1] = duration
    coeffs = field_.coefficients(grid)
    terms = field_terms([w for _, w in field_.terms])
    traj, phi = kernels.rk4_variational(*terms, coeffs, x0, h, backend=backend)
    if not (np.all(np.isfinite(traj)) and np.all(np.isfinite(phi))) or np.max(np.abs(traj)) > bound:
        raise BlowUpError(f"flow leaves the ball of radius {bound:g} before t={duration:g}")
    divs = np.stack([divergence_field(w, density)(traj) for _, w in field_.terms], axis=-1)
    integrand = np.sum(coeffs[::2] * divs, axis=-1)
    integral = simpson(integrand, x=grid[::2])
    det_mu = float(np.linalg.det(phi) * density(traj[-1]) / density(x0))
    return det_mu, float(np.exp(integral))
