"""Sampled tangent and cotangent paths.

A path lives on a uniform time grid. Derivatives of the base curve come from
a cubic spline through the samples; covectors between grid points are spline
interpolated as well. Concatenated paths keep their pieces as separate
segments, so nothing is interpolated across a junction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline, make_interp_spline

from .errors import (
    CotangentConditionError,
    DimensionError,
    EndpointMismatch,
    NotLeafTangent,
    ReparameterizationError,
)
from .fields import BivectorField
from .geometry import DEFAULT_TAU_RANK

DEFAULT_SAMPLES = 513  # 512 intervals: even, so Simpson stays symmetric on loops
MIN_SAMPLES = 9
TAU_CLOSE = 1e-10
TAU_COT = 1e-7
TAU_LIFT = 1e-6


class TangentPath:
    """Samples of a curve gamma on a uniform grid over ``interval``.

    If ``velocity`` samples are given the curve is the cubic Hermite
    interpolant of points and velocities instead of a cubic spline.
    """

    def __init__(self, points, interval=(0.0, 1.0), periodic: bool = False,
                 tau_close: float = TAU_CLOSE, velocity=None):
        points = np.array(points, dtype=float)
        if points.ndim != 2:
            raise DimensionError("points must have shape (samples, dim)")
        if points.shape[0] < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {points.shape[0]}")
        a, b = float(interval[0]), float(interval[1])
        if not b > a:
            raise ValueError(f"empty time interval [{a}, {b}]")
        self.interval = (a, b)
        self.closed = bool(np.linalg.norm(points[0] - points[-1]) <= tau_close)
        if periodic:
            if not self.closed:
                raise ValueError("periodic spline requested for a curve that does not close")
            points[-1] = points[0]
        self.periodic = bool(periodic)
        self.points = points
        self.points.setflags(write=False)
        self.t = np.linspace(a, b, points.shape[0])
        if velocity is not None:
            velocity = np.array(velocity, dtype=float).reshape(points.shape)
            self._spline = CubicHermiteSpline(self.t, points, velocity)
        else:
            self._spline = CubicSpline(self.t, points, bc_type="periodic" if periodic else "not-a-knot")
        self._velocity = velocity
        self.derivative = self._spline(self.t, 1)
        self.derivative.setflags(write=False)
        # knot derivatives are more accurate than the spline derivative between
        # knots, so off-grid velocities interpolate them instead
        self._vspline = CubicSpline(self.t, self.derivative, bc_type="periodic" if periodic else "not-a-knot")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def samples(self) -> int:
        return self.points.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def at(self, t) -> np.ndarray:
        return self._spline(np.asarray(t, dtype=float))

    def velocity_at(self, t) -> np.ndarray:
        return self._vspline(np.asarray(t, dtype=float))

    def shifted(self, dt: float) -> "TangentPath":
        a, b = self.interval
        return TangentPath(self.points, (a + dt, b + dt), periodic=self.periodic, velocity=self._velocity)

    # -- named curves -------------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable, interval=(0.0, 1.0), samples: int = DEFAULT_SAMPLES,
                      periodic: bool = False) -> "TangentPath":
        t = np.linspace(interval[0], interval[1], samples)
        return cls(np.asarray(fn(t), dtype=float), interval, periodic=periodic)

    @classmethod
    def circle(cls, center, radius: float, axes=None, interval=(0.0, 1.0),
               samples: int = DEFAULT_SAMPLES, turns: int = 1, phase: float = 0.0) -> "TangentPath":
        """``center + radius*(cos(w s) u + sin(w s) v)`` with ``w = 2 pi turns``."""
        center = np.asarray(center, dtype=float)
        n = center.size
        if axes is None:
            axes = np.eye(n)[:2]
        u, v = (np.asarray(ax, dtype=float) for ax in axes)
        a, b = interval
        t = np.linspace(a, b, samples)
        ang = 2.0 * np.pi * turns * (t - a) / (b - a) + phase
        pts = center + radius * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v)
        return cls(pts, interval, periodic=float(turns).is_integer())

    @classmethod
    def segment(cls, start, end, interval=(0.0, 1.0), samples: int = DEFAULT_SAMPLES) -> "TangentPath":
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        s = np.linspace(0.0, 1.0, samples)[:, None]
        return cls(start + s * (end - start), interval)

    @classmethod
    def constant(cls, point, interval=(0.0, 1.0), samples: int = DEFAULT_SAMPLES) -> "TangentPath":
        point = np.asarray(point, dtype=float)
        return cls(np.tile(point, (samples, 1)), interval, periodic=True)


@dataclass(frozen=True)
class CotangentSegment:
    """One smooth piece: a tangent path and covector samples on its grid."""

    tangent: TangentPath
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        if alpha.shape != self.tangent.points.shape:
            raise DimensionError(
                f"covector samples have shape {alpha.shape}, expected {self.tangent.points.shape}"
            )
        periodic = self.tangent.periodic and np.array_equal(alpha[0], alpha[-1])
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        # quintic (C4) so that fourth-order steppers see a smooth enough integrand
        spline = make_interp_spline(self.tangent.t, alpha, k=5, bc_type="periodic" if periodic else None)
        object.__setattr__(self, "_spline", spline)

    @property
    def interval(self):
        return self.tangent.interval

    @property
    def t(self):
        return self.tangent.t

    @property
    def points(self):
        return self.tangent.points

    def alpha_at(self, t) -> np.ndarray:
        return self._spline(np.asarray(t, dtype=float))

    def shifted(self, dt: float) -> "CotangentSegment":
        return CotangentSegment(self.tangent.shifted(dt), self.alpha)


class CotangentPath:
    """A piecewise smooth cotangent path: consecutive segments sharing endpoints."""

    def __init__(self, segments: Sequence[CotangentSegment], tau_close: float = TAU_CLOSE):
        segments = tuple(segments)
        if not segments:
            raise ValueError("a cotangent path needs at least one segment")
        for s1, s2 in zip(segments, segments[1:]):
            if abs(s1.interval[1] - s2.interval[0]) > 1e-12:
                raise EndpointMismatch("segment time intervals are not contiguous")
            if np.linalg.norm(s1.points[-1] - s2.points[0]) > tau_close:
                raise EndpointMismatch("segment base points do not match at a junction")
        self.segments = segments
        self.tau_close = tau_close

    @classmethod
    def from_samples(cls, points, alpha, interval=(0.0, 1.0), periodic=False) -> "CotangentPath":
        return cls([CotangentSegment(TangentPath(points, interval, periodic=periodic), alpha)])

    @property
    def dim(self) -> int:
        return self.segments[0].tangent.dim

    @property
    def interval(self):
        return (self.segments[0].interval[0], self.segments[-1].interval[1])

    @property
    def duration(self) -> float:
        a, b = self.interval
        return b - a

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].points[0]

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].points[-1]

    @property
    def closed(self) -> bool:
        """The base curve closes up."""
        return bool(np.linalg.norm(self.start - self.end) <= self.tau_close)

    @property
    def alpha_closed(self) -> bool:
        a0 = self.segments[0].alpha[0]
        a1 = self.segments[-1].alpha[-1]
        return bool(np.linalg.norm(a0 - a1) <= self.tau_close)

    @property
    def is_loop(self) -> bool:
        return self.closed and self.alpha_closed

    def __len__(self):
        return len(self.segments)

    def __repr__(self):
        a, b = self.interval
        return (f"CotangentPath(dim={self.dim}, interval=({a:g}, {b:g}), "
                f"segments={len(self.segments)}, closed={self.closed})")


# --------------------------------------------------------------------------
# operations


def cotangent_residual(bivector: BivectorField, path: CotangentPath) -> float:
    """max_t |sharp(gamma(t), alpha(t)) - gamma'(t)| over all grid points."""
    if path.dim != bivector.dim:
        raise DimensionError("path and bivector dimensions differ")
    worst = 0.0
    for seg in path.segments:
        p = bivector(seg.points)
        v = np.einsum("tij,ti->tj", p, seg.alpha)
        worst = max(worst, float(np.max(np.linalg.norm(v - seg.tangent.derivative, axis=1))))
    return worst


def lift_min_norm(bivector: BivectorField, tangent: TangentPath,
                  tau_rank: float = DEFAULT_TAU_RANK, tau_lift: float = TAU_LIFT) -> CotangentPath:
    """Minimum-norm cotangent lift of a leaf-tangent curve.

    Raises
    ------
    NotLeafTangent
        If gamma'(t) is not in the image of sharp at some sample (least-squares
        residual above ``tau_lift * max|gamma'|``).
    """
    if tangent.dim != bivector.dim:
        raise DimensionError("path and bivector dimensions differ")
    vel = tangent.derivative
    scale = float(np.max(np.linalg.norm(vel, axis=1)))
    if scale == 0.0:
        return CotangentPath([CotangentSegment(tangent, np.zeros_like(vel))])
    p = bivector(tangent.points)
    a_mat = np.swapaxes(p, -1, -2)  # sharp(a) = Pi^T a
    alpha = np.einsum("tij,tj->ti", np.linalg.pinv(a_mat, rcond=tau_rank), vel)
    resid = np.linalg.norm(np.einsum("tij,tj->ti", a_mat, alpha) - vel, axis=1)
    k = int(np.argmax(resid))
    if resid[k] > tau_lift * scale:
        raise NotLeafTangent(
            f"gamma' is not tangent to the symplectic leaf at t={tangent.t[k]:.6g} "
            f"(point {tangent.points[k].tolist()}, residual {resid[k]:.3g})"
        )
    return CotangentPath([CotangentSegment(tangent, alpha)])


def _kernel_residuals(bivector, points, covectors):
    p = bivector(points)
    return np.linalg.norm(np.einsum("tij,ti->tj", p, covectors), axis=1)


def constant_loop(bivector: BivectorField, point, covector, duration: float = 1.0,
                  samples: int = DEFAULT_SAMPLES, tau_cot: float = TAU_COT) -> CotangentPath:
    """gamma = point, alpha = covector; the covector must lie in ker sharp(point)."""
    point = np.asarray(point, dtype=float)
    covector = np.asarray(covector, dtype=float)
    return stationary_loop(bivector, point, lambda t: np.tile(covector, (np.size(t), 1)),
                           duration, samples, tau_cot)


def stationary_loop(bivector: BivectorField, point, alpha_fn: Callable, duration: float = 1.0,
                    samples: int = DEFAULT_SAMPLES, tau_cot: float = TAU_COT) -> CotangentPath:
    """Cotangent path over a fixed base point with a time-varying covector."""
    point = np.asarray(point, dtype=float)
    if point.size != bivector.dim:
        raise DimensionError("point and bivector dimensions differ")
    tangent = TangentPath.constant(point, (0.0, duration), samples)
    alpha = np.asarray(alpha_fn(tangent.t), dtype=float).reshape(samples, bivector.dim)
    resid = _kernel_residuals(bivector, tangent.points, alpha)
    if resid.max() > tau_cot:
        k = int(np.argmax(resid))
        raise CotangentConditionError(
            f"covector {alpha[k].tolist()} is not in the kernel of sharp at {point.tolist()} "
            f"(|sharp| = {resid[k]:.3g})"
        )
    return CotangentPath([CotangentSegment(tangent, alpha)])


def reparameterize(path: CotangentPath, phi: Callable, dphi: Callable | None = None,
                   interval=None) -> CotangentPath:
    """Pull a cotangent path back along an orientation-preserving map.

    ``phi`` maps [0, 1] onto [0, 1] monotonically; on a segment over [a, b]
    the new path over [c, d] is ``gamma(t(s))`` with
    ``t(s) = a + (b - a) phi((s - c)/(d - c))`` and covector
    ``t'(s) alpha(t(s))``. Multi-segment paths are reparameterized piece by
    piece (each piece normalized to [0, 1]). ``interval`` defaults to the
    path's own interval.
    """
    a0, b0 = path.interval
    c0, d0 = interval if interval is not None else (a0, b0)
    if not d0 > c0:
        raise ReparameterizationError("target interval is empty")
    stretch = (d0 - c0) / (b0 - a0)
    new = []
    for seg in path.segments:
        a, b = seg.interval
        c = c0 + (a - a0) * stretch
        d = c0 + (b - a0) * stretch
        m = seg.tangent.samples
        u = np.linspace(0.0, 1.0, m)
        pu = np.asarray(phi(u), dtype=float)
        if abs(pu[0]) > 1e-12 or abs(pu[-1] - 1.0) > 1e-12:
            raise ReparameterizationError("phi must map the endpoints 0 and 1 to themselves")
        if dphi is not None:
            du = np.asarray(dphi(u), dtype=float) * np.ones_like(u)
        else:
            du = CubicSpline(u, pu)(u, 1)
        if np.any(du < 0) or np.any(du[1:-1] <= 0):
            raise ReparameterizationError("phi is not monotone increasing")
        if np.any(np.diff(pu) <= 0):
            raise ReparameterizationError("phi is not monotone increasing")
        t = a + (b - a) * pu
        t[0], t[-1] = a, b
        points = seg.tangent.at(t)
        points[0], points[-1] = seg.points[0], seg.points[-1]
        rate = ((b - a) / (d - c)) * du[:, None]
        velocity = rate * seg.tangent.velocity_at(t)
        alpha = rate * seg.alpha_at(t)
        new.append(CotangentSegment(TangentPath(points, (c, d), velocity=velocity), alpha))
    return CotangentPath(new, path.tau_close)


def reverse(path: CotangentPath) -> CotangentPath:
    """The path traversed backwards over the same interval: alpha -> -alpha."""
    a0, b0 = path.interval
    new = []
    for seg in reversed(path.segments):
        a, b = seg.interval
        vel = seg.tangent._velocity
        tangent = TangentPath(seg.points[::-1], (a0 + b0 - b, a0 + b0 - a), periodic=seg.tangent.periodic,
                              velocity=None if vel is None else -vel[::-1])
        new.append(CotangentSegment(tangent, -seg.alpha[::-1]))
    return CotangentPath(new, path.tau_close)


def concatenate(first: CotangentPath, second: CotangentPath,
                tau_close: float = TAU_CLOSE) -> CotangentPath:
    """The composite path: ``first`` then ``second`` (shifted in time to follow it)."""
    gap = float(np.linalg.norm(first.end - second.start))
    if gap > tau_close:
        raise EndpointMismatch(
            f"base points differ by {gap:.3g} at the junction (tolerance {tau_close:g})"
        )
    dt = first.interval[1] - second.interval[0]
    segs = list(first.segments)
    segs.extend(seg.shifted(dt) if dt != 0.0 else seg for seg in second.segments)
    return CotangentPath(segs, max(first.tau_close, tau_close))


def flow_tangent_path(bivector: BivectorField, x0, alpha_fn: Callable, interval=(0.0, 1.0),
                      samples: int = DEFAULT_SAMPLES, rtol: float = 1e-12) -> TangentPath:
    """Leaf-tangent curve obtained by flowing ``x' = sharp(x, alpha_fn(t))`` from ``x0``.

    Useful for generating random paths inside a leaf; lift the result with
    :func:`lift_min_norm` to get a cotangent path.
    """
    from scipy.integrate import solve_ivp

    x0 = np.asarray(x0, dtype=float)
    t = np.linspace(interval[0], interval[1], samples)

    def rhs(s, x):
        a = np.asarray(alpha_fn(np.atleast_1d(s)), dtype=float).reshape(-1)
        return a @ bivector(x)

    sol = solve_ivp(rhs, interval, x0, method="DOP853", t_eval=t, rtol=rtol, atol=rtol)
    if not sol.success:
        raise RuntimeError(f"flow integration failed: {sol.message}")
    return TangentPath(sol.y.T, interval)
