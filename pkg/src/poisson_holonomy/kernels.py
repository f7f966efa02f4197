"""Fixed-step RK4 integration of a flow together with its variational equation.

The vector field is a time-dependent combination of polynomial fields,

    V_t(x) = sum_k c_k(t) W_k(x),

given as flattened term arrays (see :func:`fields.field_terms`) and a table
of coefficients ``c_k`` sampled on the half-step grid ``t0 + m*h/2``.

Two interchangeable backends are provided: a numba ``@njit`` kernel and a
vectorized numpy path. Set ``POISSON_HOLONOMY_DISABLE_NUMBA=1`` to force the
numpy path (it is also used when numba is not importable).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("POISSON_HOLONOMY_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

try:
    if _DISABLED:
        raise ImportError("numba disabled by POISSON_HOLONOMY_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy backend


class _NumpyField:
    def __init__(self, exps, coefs, which, comp, n):
        self.exps = exps
        self.coefs = coefs
        self.which = which
        self.n = n
        self.lower = np.maximum(exps - 1, 0)
        self.has = exps > 0
        onehot = np.zeros((n, coefs.size))
        onehot[comp, np.arange(coefs.size)] = 1.0
        self.onehot = onehot

    def __call__(self, x, c):
        w = self.coefs * c[self.which]
        pw = x**self.exps
        mono = pw.prod(axis=1)
        dpw = np.where(self.has, self.exps * x**self.lower, 0.0)
        grad = np.empty_like(pw)
        for l in range(self.n):
            others = pw.copy()
            others[:, l] = dpw[:, l]
            grad[:, l] = others.prod(axis=1)
        v = self.onehot @ (w * mono)
        jac = self.onehot @ (w[:, None] * grad)
        return v, jac


def rk4_variational_numpy(exps, coefs, which, comp, coeff_grid, x0, h):
    """Numpy reference backend; same contract as :func:`rk4_variational`."""
    x = np.array(x0, dtype=np.float64)
    n = x.size
    nsteps = (coeff_grid.shape[0] - 1) // 2
    f = _NumpyField(exps, coefs, which, comp, n)
    phi = np.eye(n)
    traj = np.empty((nsteps + 1, n))
    traj[0] = x
    for s in range(nsteps):
        c0 = coeff_grid[2 * s]
        c1 = coeff_grid[2 * s + 1]
        c2 = coeff_grid[2 * s + 2]
        k1, j1 = f(x, c0)
        m1 = j1 @ phi
        k2, j2 = f(x + 0.5 * h * k1, c1)
        m2 = j2 @ (phi + 0.5 * h * m1)
        k3, j3 = f(x + 0.5 * h * k2, c1)
        m3 = j3 @ (phi + 0.5 * h * m2)
        k4, j4 = f(x + h * k3, c2)
        m4 = j4 @ (phi + h * m3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        phi = phi + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        traj[s + 1] = x
    return traj, phi


# --------------------------------------------------------------------------
# numba backend

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _eval_field(x, c, exps, coefs, which, comp, v, jac):
        n = x.shape[0]
        v[:] = 0.0
        jac[:, :] = 0.0
        for t in range(coefs.shape[0]):
            w = coefs[t] * c[which[t]]
            if w == 0.0:
                continue
            mono = 1.0
            for l in range(n):
                e = exps[t, l]
                if e > 0:
                    mono *= x[l] ** e
            j = comp[t]
            v[j] += w * mono
            for l in range(n):
                e = exps[t, l]
                if e == 0:
                    continue
                d = e * x[l] ** (e - 1)
                for k in range(n):
                    if k != l and exps[t, k] > 0:
                        d *= x[k] ** exps[t, k]
                jac[j, l] += w * d

    @numba.njit(cache=True, nogil=True)
    def rk4_variational_numba(exps, coefs, which, comp, coeff_grid, x0, h):
        n = x0.shape[0]
        nsteps = (coeff_grid.shape[0] - 1) // 2
        x = x0.copy()
        phi = np.eye(n)
        traj = np.empty((nsteps + 1, n))
        traj[0] = x
        k1 = np.empty(n)
        k2 = np.empty(n)
        k3 = np.empty(n)
        k4 = np.empty(n)
        j1 = np.empty((n, n))
        j2 = np.empty((n, n))
        j3 = np.empty((n, n))
        j4 = np.empty((n, n))
        for s in range(nsteps):
            c0 = coeff_grid[2 * s]
            c1 = coeff_grid[2 * s + 1]
            c2 = coeff_grid[2 * s + 2]
            _eval_field(x, c0, exps, coefs, which, comp, k1, j1)
            m1 = j1 @ phi
            _eval_field(x + 0.5 * h * k1, c1, exps, coefs, which, comp, k2, j2)
            m2 = j2 @ (phi + 0.5 * h * m1)
            _eval_field(x + 0.5 * h * k2, c1, exps, coefs, which, comp, k3, j3)
            m3 = j3 @ (phi + 0.5 * h * m2)
            _eval_field(x + h * k3, c2, exps, coefs, which, comp, k4, j4)
            m4 = j4 @ (phi + h * m3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            phi = phi + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
            traj[s + 1] = x
        return traj, phi

else:  # pragma: no cover
    rk4_variational_numba = None


def rk4_variational(exps, coefs, which, comp, coeff_grid, x0, h, backend=None):
    """Integrate ``x' = V_t(x)`` and ``Phi' = DV_t(x) Phi`` from ``(x0, I)``.

    Parameters
    ----------
    exps, coefs, which, comp : ndarray
        Flattened polynomial terms of the fields ``W_k``.
    coeff_grid : ndarray, shape (2*S + 1, K)
        Coefficients ``c_k`` at the half-step times of ``S`` steps.
    x0 : ndarray, shape (n,)
    h : float
        Step size.
    backend : {"numba", "numpy"}, optional
        Overrides the module-level selection.

    Returns
    -------
    traj : ndarray, shape (S + 1, n)
        States at the step boundaries.
    phi : ndarray, shape (n, n)
        Linearization of the flow map over the whole interval.
    """
    backend = backend or BACKEND
    coeff_grid = np.ascontiguousarray(coeff_grid, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if coeff_grid.shape[0] % 2 != 1:
        raise ValueError("coefficient grid needs 2*steps + 1 rows")
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return rk4_variational_numba(exps, coefs, which, comp, coeff_grid, x0, float(h))
    if backend == "numpy":
        return rk4_variational_numpy(exps, coefs, which, comp, coeff_grid, x0, float(h))
    raise ValueError(f"unknown backend {backend!r}")
