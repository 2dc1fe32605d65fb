"""Quadrature backbone.

Vectorized Gauss-Kronrod (7/15) panels with adaptive bisection, Gauss-Jacobi
rules for algebraic endpoint singularities and a tanh-sinh rule for
integrands with endpoint singularities of unknown strength.

Every integrand passed to these routines must accept a numpy array of
abscissae and return an array of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import ToleranceError

# Kronrod 15-point nodes on [-1, 1] (non-negative half, descending) and the
# embedded Gauss 7-point weights for the odd-indexed nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[9:15:2] = _WG[2::-1]

ABS_FLOOR = 1e-14
_EPS = np.finfo(float).eps


def panel_nodes(lo, hi):
    """Kronrod abscissae for panels ``[lo, hi]`` (broadcast arrays).

    Returns ``(x, half)`` where ``x`` has a trailing axis of length 15 and
    ``half`` is the half-width with a trailing singleton axis.
    """
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return 0.5 * (hi + lo) + half * KRONROD_NODES, half


def panel_estimates(values, half):
    """Kronrod value and QUADPACK-style error estimate per panel.

    ``values`` has the node axis last. Returns arrays with that axis removed.
    """
    kron = np.sum(values * KRONROD_WEIGHTS, axis=-1)
    gauss = np.sum(values * GAUSS_WEIGHTS, axis=-1)
    h = half[..., 0]
    mean = 0.5 * kron
    resasc = np.abs(h) * np.sum(KRONROD_WEIGHTS * np.abs(values - mean[..., None]), axis=-1)
    err = np.abs((kron - gauss) * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    resabs = np.abs(h) * np.sum(KRONROD_WEIGHTS * np.abs(values), axis=-1)
    err = np.maximum(err, 50 * _EPS * resabs)
    return kron * h, err


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int


def integrate(func, points, rel_tol=1e-10, abs_tol=ABS_FLOOR, limit=4000,
              raise_on_fail=False):
    """Adaptive Gauss-Kronrod integration over the finite breakpoints ``points``.

    Each round settles the panels with the smallest error estimates while
    their sum fits in half of the remaining error budget and bisects the
    rest; all new panels of a round are evaluated in a single call.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size < 2:
        return QuadResult(0.0, 0.0, 0)
    lo, hi = pts[:-1], pts[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return QuadResult(0.0, 0.0, 0)
    done_val = 0.0
    done_err = 0.0
    nevals = 0
    while True:
        x, half = panel_nodes(lo, hi)
        vals = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
        nevals += vals.size
        val, err = panel_estimates(vals, half)
        total = done_val + val.sum()
        total_err = done_err + err.sum()
        target = max(abs_tol, rel_tol * abs(total))
        if total_err <= target or nevals >= limit * 15:
            break
        # settle the smallest errors while they fit in half the remaining budget
        order = np.argsort(err)
        budget = 0.5 * max(target - done_err, 0.0)
        settled = np.zeros(err.shape, dtype=bool)
        settled[order[np.cumsum(err[order]) <= budget]] = True
        settled |= (hi - lo) <= 1e-13 * np.maximum(np.abs(lo), np.abs(hi))
        done_val += val[settled].sum()
        done_err += err[settled].sum()
        lo_s, hi_s = lo[~settled], hi[~settled]
        if lo_s.size == 0:
            break
        mid = 0.5 * (lo_s + hi_s)
        lo = np.concatenate([lo_s, mid])
        hi = np.concatenate([mid, hi_s])
    if raise_on_fail and total_err > target:
        raise ToleranceError(
            f"quadrature error estimate {total_err:.3e} exceeds target {target:.3e}",
            value=total, error=total_err)
    return QuadResult(float(total), float(total_err), nevals)


def integrate_halfline(func, start, rel_tol=1e-10, abs_tol=ABS_FLOOR, split=None,
                       limit=4000, raise_on_fail=False):
    """Integrate over ``[start, inf)`` via the map ``x = start + t/(1-t)``.

    ``split`` lists finite breakpoints beyond ``start`` to keep as panel
    boundaries after the change of variable.
    """
    def mapped(t):
        one = 1.0 - t
        return func(start + t / one) / (one * one)

    pts = [0.0]
    for x in sorted(split or ()):
        if x > start:
            u = x - start
            pts.append(u / (1.0 + u))
    pts.append(1.0)
    return integrate(mapped, pts, rel_tol=rel_tol, abs_tol=abs_tol, limit=limit,
                     raise_on_fail=raise_on_fail)


@lru_cache(maxsize=256)
def jacobi_rule(n, exponent):
    """Nodes/weights on [0, 1] for the weight ``x**exponent`` (exponent > -1)."""
    xi, wi = roots_jacobi(n, 0.0, exponent)
    scale = 2.0 ** -(1.0 + exponent)
    x = 0.5 * (1.0 + xi)
    x.setflags(write=False)
    w = wi * scale
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=32)
def legendre_rule(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    xi, wi = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (1.0 + xi)
    w = 0.5 * wi
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def tanh_sinh_level(h, tmax=6.1):
    """Nodes ``x``, complements ``1 - x`` and weights of one tanh-sinh level on [0, 1]."""
    k = np.arange(-math.ceil(tmax / h), math.ceil(tmax / h) + 1)
    t = k * h
    u = math.pi * np.sinh(t)
    # x = 1/(1+exp(-u)); both x and 1-x are formed without cancellation
    e = np.exp(-np.abs(u))
    big = 1.0 / (1.0 + e)
    small = e / (1.0 + e)
    x = np.where(u >= 0, big, small)
    xc = np.where(u >= 0, small, big)
    w = h * math.pi * np.cosh(t) * x * xc
    ok = (x > 0) & (xc > 0)
    return x[ok], xc[ok], w[ok]


def tanh_sinh(func, a=0.0, b=1.0, rel_tol=1e-12, abs_tol=ABS_FLOOR, max_level=7,
              complement=False):
    """Tanh-sinh quadrature over ``[a, b]``, halving the step until stable.

    With ``complement=True`` the integrand is called as ``func(x, b - x)``
    where the second argument is computed without cancellation, which keeps
    singularities at ``b`` resolvable.
    """
    width = b - a
    prev = None
    diff = math.inf
    cur = 0.0
    n = 0
    for level in range(1, max_level + 1):
        x, xc, w = tanh_sinh_level(2.0 ** -level)
        with np.errstate(all="ignore"):
            if complement:
                vals = func(a + width * x, width * xc)
            else:
                vals = func(a + width * x)
        vals = np.asarray(vals, dtype=float)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        cur = width * float(np.dot(w, vals))
        n += x.size
        if prev is not None:
            diff = abs(cur - prev)
            if diff <= max(abs_tol, rel_tol * abs(cur)):
                break
        prev = cur
    return QuadResult(cur, diff, n)
