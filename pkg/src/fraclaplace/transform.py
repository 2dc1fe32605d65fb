"""Fractional Laplace transform, its weighted variant and generic kernels.

The FLT engine works on the atoms of a :class:`~fraclaplace.funcspace.FunctionSpec`.

* Values ``g(s)`` come from Gauss-Kronrod panels built per ``s``: each
  panel at most doubles ``t`` and changes ``beta*log(1 + s t/kappa)`` by at
  most four. That keeps the kernel's nearest singularity a fixed relative
  distance away for any ``s`` and ``beta``. Power atoms get a Gauss-Jacobi
  bottom panel for the ``t**-a`` singularity.
* For large arguments, power atoms switch to incomplete-Beta style
  representations evaluated in log space, so ``s`` can be astronomically large.
* q-norms of outputs use adaptive quadrature up to ``S`` and an exact tail
  ``int_S^inf``. The tail is written through the substitution
  ``s = S w**(-1/delta)``. It needs the decay exponent ``alpha``, the limit
  ``C`` of ``s**alpha g(s)`` and its convergence rate ``delta``, all of
  which are known per atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DivergenceError, HypothesisError, PreconditionError, ToleranceError
from .funcspace import (FunctionSpec, PieceAtom, PowerAtom, breakpoints, merge_atoms,
                        weighted_atoms)
from .quadrature import (ABS_FLOOR, KRONROD_WEIGHTS, tanh_sinh_level, integrate,
                         integrate_halfline, jacobi_rule, panel_estimates, panel_nodes,
                         tanh_sinh)
from .specfun import TransformParams, log_beta, log_gamma

DEFAULT_REL_TOL = 1e-10
_PIECE_CUTOFF = 80.0
_MAX_PANELS = 4000
# log-kernel variation allowed per panel; GK15 integrates e^(-4x) on a panel to ~1e-24
_LOG_STEP = 4.0
_LOG_CRITICAL = 1e-9
# piece panels are bisected while their error exceeds this share of sum |panel|
_REFINE_SHARE = 1e-14
_REFINE_ROUNDS = 4


# --------------------------------------------------------------------------
# kernels

class KernelSpec:
    """Kernel ``K`` of the product-argument operator ``int K(x y) f(y) dy``."""

    nonnegative = True

    def __call__(self, u):
        raise NotImplementedError

    def lq_norm(self, q: float) -> float:
        """``|K|_q`` on (0, inf); ``inf`` if not in L_q."""
        if math.isinf(q):
            grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 4001)])
            return float(np.max(np.abs(self(grid))))

        def absq(u):
            return np.abs(self(u)) ** q

        res = integrate(absq, [0.0, 0.5, 1.0, 2.0, 4.0, 8.0], rel_tol=1e-12).value
        res += integrate_halfline(absq, 8.0, rel_tol=1e-12).value
        return res ** (1.0 / q)

    def mellin(self, sigma: float) -> float | None:
        """Closed-form Mellin transform when known, else None."""
        return None

    def strip(self):
        """Open interval of sigma where the Mellin integral converges."""
        return (0.0, math.inf)

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d) -> "KernelSpec":
        kind = d.get("type")
        if kind == "FLT":
            return FLTKernel(TransformParams(float(d["kappa"]), float(d["r"])))
        if kind == "Exp":
            return ExpKernel()
        if kind == "Custom":
            return CustomKernel(d["tag"])
        raise PreconditionError(f"unknown kernel type {kind!r}")


@dataclass(frozen=True)
class FLTKernel(KernelSpec):
    """``h(u) = (1 + u/kappa)^-(kappa + r)``; ``T_h`` is then exactly ``L_{kappa,r}``."""

    params: TransformParams

    def __call__(self, u):
        return np.exp(-self.params.power * np.log1p(np.asarray(u, dtype=float) / self.params.kappa))

    def lq_norm(self, q):
        if math.isinf(q):
            return 1.0
        e = self.params.power * q - 1.0
        if e <= 0:
            return math.inf
        return (self.params.kappa / e) ** (1.0 / q)

    def mellin(self, sigma):
        return math.exp(sigma * math.log(self.params.kappa)
                        + log_beta(sigma, self.params.power - sigma))

    def strip(self):
        return (0.0, self.params.power)

    def to_dict(self):
        return {"type": "FLT", "kappa": self.params.kappa, "r": self.params.r}


@dataclass(frozen=True)
class ExpKernel(KernelSpec):
    """``e^-u``: the classical Laplace transform."""

    def __call__(self, u):
        return np.exp(-np.asarray(u, dtype=float))

    def lq_norm(self, q):
        return 1.0 if math.isinf(q) else q ** (-1.0 / q)

    def mellin(self, sigma):
        return math.exp(log_gamma(sigma))

    def to_dict(self):
        return {"type": "Exp"}


_CUSTOM = {
    # tag: (function, mellin closed form, strip, nonnegative)
    "gaussian": (lambda u: np.exp(-u * u),
                 lambda s: 0.5 * math.exp(log_gamma(0.5 * s)), (0.0, math.inf), True),
    "rational": (lambda u: 1.0 / (1.0 + u * u),
                 lambda s: 0.5 * math.pi / math.sin(0.5 * math.pi * s), (0.0, 2.0), True),
    "damped_cos": (lambda u: np.exp(-u) * np.cos(u),
                   lambda s: math.exp(log_gamma(s) - 0.5 * s * math.log(2.0)) * math.cos(0.25 * math.pi * s),
                   (0.0, math.inf), False),
}


@dataclass(frozen=True)
class CustomKernel(KernelSpec):
    """Kernel chosen from a small table of closed-form tags."""

    tag: str

    def __post_init__(self):
        if self.tag not in _CUSTOM:
            raise PreconditionError(f"unknown custom kernel {self.tag!r}; known: {sorted(_CUSTOM)}")

    @property
    def nonnegative(self):
        return _CUSTOM[self.tag][3]

    def __call__(self, u):
        return _CUSTOM[self.tag][0](np.asarray(u, dtype=float))

    def mellin(self, sigma):
        return _CUSTOM[self.tag][1](sigma)

    def strip(self):
        return _CUSTOM[self.tag][2]

    def to_dict(self):
        return {"type": "Custom", "tag": self.tag}


# --------------------------------------------------------------------------
# power atoms: H(y) = int_0^1 (1 + y x)^-beta x^-a dx

def _switch_point(beta: float) -> float:
    return max(1e6, 100.0 * beta)


def _jacobi_pair(exponent):
    return jacobi_rule(15, exponent), jacobi_rule(7, exponent)


def _pair_error(v15, v7):
    diff = np.abs(v15 - v7)
    scale = np.abs(v15)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(scale > 0, scale * np.minimum(1.0, (200.0 * diff / scale) ** 1.5), diff)
    return err


def _power_panels(y, a, beta):
    """H(y) and its error estimate by kernel-adaptive panels (moderate y)."""
    y = np.asarray(y, dtype=float)
    big = max(beta, 1.0)
    with np.errstate(divide="ignore"):
        x0 = np.where(y > 0, np.minimum(1.0, 0.5 / (y * big)), 1.0)
    (xj, wj), (xj7, wj7) = _jacobi_pair(-a)

    def kern(x):
        return np.exp(-beta * np.log1p(y[:, None] * x))

    pref = x0 ** (1.0 - a)
    b15 = pref * (kern(x0[:, None] * xj) @ wj)
    b7 = pref * (kern(x0[:, None] * xj7) @ wj7)
    total = b15.copy()
    err = _pair_error(b15, b7)

    step_mul = math.exp(_LOG_STEP / beta)
    step_add = math.expm1(_LOG_STEP / beta)
    with np.errstate(divide="ignore"):
        add = np.where(y > 0, step_add / y, np.inf)
    stop = 40.0 + (1.0 - a) * np.abs(np.log(x0))
    cur = x0.copy()
    active = cur < 1.0
    los, his = [], []
    while active.any() and len(los) < _MAX_PANELS:
        nxt = np.minimum(1.0, np.minimum(2.0 * cur, cur * step_mul + add))
        nxt = np.where(active, nxt, cur)
        los.append(cur)
        his.append(nxt)
        cur = nxt
        active = (cur < 1.0) & (beta * np.log1p(y * cur) <= stop)
    if los:
        lo = np.stack(los, axis=1)
        hi = np.stack(his, axis=1)
        nodes, half = panel_nodes(lo, hi)
        vals = np.exp(-beta * np.log1p(y[:, None, None] * nodes)) * nodes ** (-a)
        val, perr = panel_estimates(vals, half)
        total += val.sum(axis=1)
        err += perr.sum(axis=1)
    return total, err


class _PowerLarge:
    """Large-argument form of ``I(y) = int_0^y (1+w)^-beta w^-a dw`` in ``L = ln y``.

    Split at ``Y0 = 4(beta + 1)``. Beyond it, ``w = Y0/u`` gives
    ``Y0^-gamma int_x^1 u^(gamma-1) (1 + u/Y0)^-beta du`` with ``x = Y0/y``.
    The binomial series of the last factor has term ratio at most 1/4, so
    it integrates term by term.
    """

    terms = 40

    def __init__(self, a, beta):
        self.a = a
        self.beta = beta
        self.gamma = beta + a - 1.0
        self.y0 = 4.0 * (beta + 1.0)
        self.ln_y0 = math.log(self.y0)
        h0, _ = _power_panels(np.array([self.y0]), a, beta)
        self.i0 = self.y0 ** (1.0 - a) * float(h0[0])
        coef = np.empty(self.terms)
        coef[0] = 1.0
        for j in range(self.terms - 1):
            coef[j + 1] = coef[j] * -(beta + j) / ((j + 1) * self.y0)
        self.coef = coef
        self.expo = self.gamma + np.arange(self.terms)

    def _scaled_terms(self, L, g):
        # e^(g L) (1 - x^e_j)/e_j with x = Y0/y, evaluated without overflow
        L = np.asarray(L, dtype=float)[..., None]
        e = self.expo
        span = L - self.ln_y0
        arg = e * span
        tiny = np.abs(e) < 1e-12
        safe_e = np.where(tiny, 1.0, e)
        with np.errstate(over="ignore", invalid="ignore"):
            near = np.exp(g * L) * np.where(tiny, span, -np.expm1(-arg) / safe_e)
            far = (np.exp(g * L) - np.exp(e * self.ln_y0 + (g - e) * L)) / safe_e
        return np.where(-arg < 700.0, near, far)

    def psi_scaled(self, L):
        """``y**min(gamma, 0) * I(y)``, which has a finite limit when gamma != 0."""
        L = np.asarray(L, dtype=float)
        g = min(self.gamma, 0.0)
        terms = self._scaled_terms(L, g)
        return np.exp(g * L) * self.i0 + self.y0 ** (-self.gamma) * (terms @ self.coef)

    def limit(self):
        """Limit of :meth:`psi_scaled` as ``y -> inf`` (None when logarithmic)."""
        g = self.gamma
        if abs(g) < _LOG_CRITICAL:
            return None
        if g > 0:
            return self.i0 + self.y0 ** (-g) * float(np.sum(self.coef / self.expo))
        return 1.0 / -g


@lru_cache(maxsize=256)
def _large_cached(a, beta):
    return _PowerLarge(a, beta)


def power_h(y, a, beta):
    """``int_0^1 (1 + y x)^-beta x^-a dx`` for an array of ``y >= 0``."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    err = np.zeros_like(y)
    sw = _switch_point(beta)
    small = y <= sw
    if small.any():
        out[small], err[small] = _power_panels(y[small], a, beta)
    if (~small).any():
        big = _large_cached(a, beta)
        L = np.log(y[~small])
        # H(y) = y^(a-1) I(y); psi_scaled carries an extra y^min(gamma,0)
        out[~small] = np.exp((a - 1.0 - min(big.gamma, 0.0)) * L) * big.psi_scaled(L)
        err[~small] = 1e-15 * np.abs(out[~small])
    return out, err


# --------------------------------------------------------------------------
# piece atoms

def _piece_integrate(atoms, kappa, beta, s=None, inv_s=None, phi_mode=False, log_offset=0.0):
    """Sum over piece atoms of ``int K f`` with per-s kernel-adaptive panels.

    ``phi_mode`` evaluates ``s**beta * g(s)`` through ``(1/s + t/kappa)^-beta``
    which stays finite as ``s -> inf``. ``log_offset`` (scalar or per-s)
    is added to the log-kernel to keep huge or tiny results representable.
    """
    if phi_mode:
        inv = np.asarray(inv_s, dtype=float)
    else:
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            inv = np.where(s > 0, 1.0 / s, np.inf)
    n = inv.size
    brk = np.array(sorted({float(x) for atom in atoms for x in atom.breaks}))
    lo_p, hi_p = brk[:-1], brk[1:]
    step_mul = math.exp(_LOG_STEP / beta)
    step_add = math.expm1(_LOG_STEP / beta) * kappa

    def logk(t):
        if phi_mode:
            return -beta * np.log(inv[:, None, None] + t / kappa)
        with np.errstate(over="ignore"):
            return -beta * np.log1p(t / (kappa * inv[:, None, None]))

    # truncation is measured from the kernel at the left end of the support
    start_logk = logk(np.full((n, 1, 1), brk[0]))[..., 0]
    cur = np.broadcast_to(lo_p, (n, lo_p.size)).copy()
    active = (cur < hi_p) & (start_logk - logk(cur[..., None])[..., 0] <= _PIECE_CUTOFF)
    los, his = [], []
    while active.any() and len(los) < _MAX_PANELS:
        nxt = np.minimum(hi_p, np.minimum(2.0 * cur, cur * step_mul + step_add * inv[:, None]))
        nxt = np.where(active, nxt, cur)
        los.append(cur)
        his.append(nxt)
        cur = nxt
        drop = start_logk - logk(cur[..., None])[..., 0]
        active = (cur < hi_p) & (drop <= _PIECE_CUTOFF)
    lo = np.stack(los, axis=-1)
    hi = np.stack(his, axis=-1)
    rows = np.broadcast_to(np.arange(n)[:, None, None], lo.shape).ravel()
    lo, hi = lo.ravel(), hi.ravel()
    keep = hi > lo
    rows, lo, hi = rows[keep], lo[keep], hi[keep]
    off = np.broadcast_to(np.asarray(log_offset, dtype=float), (n,))

    def panels(rows, lo, hi):
        nodes, half = panel_nodes(lo, hi)
        fvals = np.zeros(nodes.shape)
        for atom in atoms:
            fvals += atom(nodes.ravel()).reshape(nodes.shape)
        iv = inv[rows][:, None]
        if phi_mode:
            lk = -beta * np.log(iv + nodes / kappa)
        else:
            with np.errstate(over="ignore"):
                lk = -beta * np.log1p(nodes / (kappa * iv))
        return panel_estimates(np.exp(lk + off[rows][:, None]) * fvals, half)

    val, err = panels(rows, lo, hi)
    for _ in range(_REFINE_ROUNDS):
        # bisect panels whose share of the error is not negligible
        scale = np.bincount(rows, weights=np.abs(val), minlength=n)
        bad = np.flatnonzero(err > _REFINE_SHARE * scale[rows])
        if bad.size == 0:
            break
        mid = 0.5 * (lo[bad] + hi[bad])
        new_rows = np.concatenate([rows[bad], rows[bad]])
        new_lo = np.concatenate([lo[bad], mid])
        new_hi = np.concatenate([mid, hi[bad]])
        v2, e2 = panels(new_rows, new_lo, new_hi)
        good = np.ones(rows.size, dtype=bool)
        good[bad] = False
        rows = np.concatenate([rows[good], new_rows])
        lo = np.concatenate([lo[good], new_lo])
        hi = np.concatenate([hi[good], new_hi])
        val = np.concatenate([val[good], v2])
        err = np.concatenate([err[good], e2])
    return (np.bincount(rows, weights=val, minlength=n),
            np.bincount(rows, weights=err, minlength=n))


# --------------------------------------------------------------------------
# engine

@dataclass(frozen=True)
class TailInfo:
    alpha: float
    limit: float | None
    delta: float | None


class FLTEngine:
    """Evaluates ``L_{kappa,r}`` applied to a fixed list of atoms."""

    def __init__(self, params: TransformParams, atoms):
        if not params.power > 0:
            raise HypothesisError("kappa + r > 0 required for a decreasing kernel",
                                  condition="kappa + r > 0")
        self.params = params
        self.atoms = [a for a in merge_atoms(atoms) if a.coef != 0.0]
        self.powers = [a for a in self.atoms if isinstance(a, PowerAtom)]
        self.pieces = [a for a in self.atoms if isinstance(a, PieceAtom)]
        for atom in self.powers:
            if atom.a >= 1.0:
                raise DivergenceError(
                    f"t^-{atom.a:g} is not integrable at 0; the transform diverges")

    @classmethod
    def from_function(cls, params, f: FunctionSpec, mu: float = 1.0):
        return cls(params, weighted_atoms(f, mu))

    @property
    def empty(self):
        return not self.atoms

    def _large_for(self, atom):
        return _large_cached(atom.a, self.params.power)

    def values(self, s):
        """``(g(s), error_estimate)`` for an array of ``s >= 0``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < 0):
            raise PreconditionError("transform argument s must be >= 0")
        out = np.zeros_like(s)
        err = np.zeros_like(s)
        k, beta = self.params.kappa, self.params.power
        for atom in self.powers:
            y = s * atom.b / k
            h, e = power_h(y, atom.a, beta)
            scale = atom.coef * atom.b ** (1.0 - atom.a)
            out += scale * h
            err += abs(scale) * e
        if self.pieces:
            v, e = _piece_integrate(self.pieces, k, beta, s=s)
            out += v
            err += e
        return out, err

    # -- asymptotics ------------------------------------------------------
    def _atom_tail(self, atom, shift):
        k, beta = self.params.kappa, self.params.power
        if isinstance(atom, PieceAtom):
            if self.alpha() < beta:
                # subleading: its limit is never used and may not be representable
                return TailInfo(beta, 0.0, 1.0)
            lim, _ = _piece_integrate([atom], k, beta, inv_s=np.array([0.0]), phi_mode=True,
                                      log_offset=-shift)
            return TailInfo(beta, float(lim[0]), 1.0)
        big = self._large_for(atom)
        g = big.gamma
        if abs(g) < _LOG_CRITICAL:
            return TailInfo(1.0 - atom.a, None, None)
        if g > 0:
            lead = (1.0 - atom.a) * math.log(k) - shift
            return TailInfo(1.0 - atom.a, atom.coef * big.limit() * math.exp(lead), g)
        lead = (1.0 - atom.a) * math.log(k) + g * math.log(k / atom.b) - shift
        return TailInfo(beta, atom.coef * big.limit() * math.exp(lead), min(-g, 1.0))

    def _atom_phi(self, atom, L, alpha, shift):
        """``s**alpha * g_atom(s) * e**-shift`` at ``L = ln s`` (array)."""
        k, beta = self.params.kappa, self.params.power
        if isinstance(atom, PieceAtom):
            v, _ = _piece_integrate([atom], k, beta, inv_s=np.exp(-L), phi_mode=True,
                                    log_offset=(alpha - beta) * L - shift)
            return v
        big = self._large_for(atom)
        g = big.gamma
        Ly = L + math.log(atom.b / k)
        lead = (1.0 - atom.a) * math.log(k) - shift
        if g >= 0 or abs(g) < _LOG_CRITICAL:
            return atom.coef * big.psi_scaled(Ly) * np.exp((alpha - 1.0 + atom.a) * L + lead)
        lead += g * math.log(k / atom.b)
        return atom.coef * big.psi_scaled(Ly) * np.exp((alpha - beta) * L + lead)

    def tail_info(self, shift: float = 0.0) -> TailInfo:
        """Decay data of ``g``; the limit is reported times ``e**-shift``."""
        infos = [self._atom_tail(a, shift) for a in self.atoms]
        alpha = min(i.alpha for i in infos)
        lead = [i for i in infos if i.alpha == alpha]
        rest = [i.alpha - alpha for i in infos if i.alpha > alpha]
        if any(i.limit is None for i in lead):
            return TailInfo(alpha, None, None)
        limit = sum(i.limit for i in lead)
        delta = min([i.delta for i in lead] + rest)
        return TailInfo(alpha, limit, delta)

    def alpha(self) -> float:
        """Decay exponent: ``g(s) ~ s**-alpha`` (up to a log when critical)."""
        beta = self.params.power
        return min(beta if isinstance(a, PieceAtom) else min(1.0 - a.a, beta)
                   for a in self.atoms)

    def phi(self, L, shift: float = 0.0):
        """``s**alpha g(s) e**-shift`` at ``L = ln s``."""
        L = np.asarray(L, dtype=float)
        alpha = self.alpha()
        out = np.zeros_like(L)
        for atom in self.atoms:
            out = out + self._atom_phi(atom, L, alpha, shift)
        return out

    def scales(self):
        """(s_lo, S): start of the geometric s-mesh and the tail split."""
        k, beta = self.params.kappa, self.params.power
        pts = breakpoints(self.atoms)
        t_hi, t_lo = pts[-1], pts[0]
        s_lo = 0.5 * k / (max(beta, 1.0) * t_hi)
        S = 1e4 * max(beta, 1.0) * k / t_lo
        for atom in self.powers:
            S = max(S, 4.0 * _switch_point(beta) * k / atom.b)
        return s_lo, S


@dataclass(frozen=True)
class OutputNorm:
    value: float
    error: float


def output_norm(engine: FLTEngine, q: float, weight_exp: float = 0.0,
                rel_tol: float = 1e-11) -> OutputNorm:
    """``( int_0^inf s**weight_exp |g(s)|**q ds )**(1/q)`` for the engine's output.

    ``q = inf`` gives ``sup_s |g(s)|`` (``weight_exp`` must then be 0).
    """
    if engine.empty:
        return OutputNorm(0.0, 0.0)
    if math.isinf(q):
        if weight_exp != 0:
            raise PreconditionError("weighted sup norm is not supported")
        return _sup_norm(engine)
    if q < 1:
        raise PreconditionError("q >= 1 required")
    alpha = engine.alpha()
    m = q * alpha - weight_exp - 1.0
    if m <= 0:
        return OutputNorm(math.inf, 0.0)
    if weight_exp <= -1.0:
        g0 = engine.values(np.array([0.0]))[0][0]
        if g0 != 0.0:
            return OutputNorm(math.inf, 0.0)
    s_lo, S = engine.scales()
    n_geo = max(1, int(math.ceil(math.log2(S / s_lo))))
    mesh = s_lo * 2.0 ** np.arange(n_geo + 1)
    mesh[-1] = S
    probe = np.concatenate([[0.0], mesh])
    gscale = float(np.max(np.abs(engine.values(probe)[0])))
    if not gscale > 0.0:
        gscale = 1.0

    def absq(s):
        return np.abs(engine.values(s)[0] / gscale) ** q

    def body(s):
        out = absq(s)
        if weight_exp:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = out * np.where(s > 0, s ** weight_exp, 0.0)
        return out

    total = 0.0
    err = 0.0
    if weight_exp < 0:
        # s = s_lo u^k with k = 1/(1 + weight_exp) turns s^weight_exp ds into a constant
        kk = 1.0 / (1.0 + weight_exp)
        jac = s_lo ** (1.0 + weight_exp) * kk
        r = integrate(lambda u: jac * absq(s_lo * u ** kk), [0.0, 1.0], rel_tol=rel_tol)
        total += r.value
        err += r.error
        r = integrate(body, mesh, rel_tol=rel_tol)
    else:
        r = integrate(body, np.concatenate([[0.0], mesh]), rel_tol=rel_tol)
    total += r.value
    err += r.error

    # tail: s = S w^(-1/delta); phi is normalized by S^alpha * gscale
    lnS = math.log(S)
    shift = alpha * lnS + math.log(gscale)
    info = engine.tail_info(shift)
    if info.limit is None:
        delta = m
        c_q = 0.0
    else:
        delta = info.delta
        c_q = abs(info.limit) ** q
    outer = math.exp((weight_exp + 1.0) * lnS)

    def tail_body(w):
        L = lnS - np.log(w) / delta
        ph = np.abs(engine.phi(L, shift)) ** q
        return outer / delta * w ** (m / delta - 1.0) * (ph - c_q)

    head = outer * c_q / m
    t = tanh_sinh(tail_body, 0.0, 1.0, rel_tol=1e-12, abs_tol=1e-16 * max(total, head, 1e-300))
    total += head + t.value
    err += t.error
    if not total >= 0:
        raise ToleranceError("negative q-norm integral; quadrature failed", value=total)
    value = gscale * total ** (1.0 / q)
    rel = err / total if total > 0 else 0.0
    return OutputNorm(value, value * rel / q)


class OutputSampler:
    """Fixed-node rule for ``|g|_q`` reused across many exponents ``q``.

    ``g`` is evaluated once: on GK15 panels of ratio ``sqrt(2)`` up to ``S``,
    and at tanh-sinh nodes of the exact tail. The values are cheap
    screening estimates; the adaptive :func:`output_norm` certifies.
    """

    def __init__(self, engine: FLTEngine, tail_level: int = 5):
        self.engine = engine
        if engine.empty:
            return
        s_lo, S = engine.scales()
        n = max(2, int(math.ceil(2.0 * math.log2(S / s_lo))))
        mesh = np.concatenate([[0.0], s_lo * 2.0 ** (0.5 * np.arange(n + 1))])
        mesh[-1] = max(mesh[-1], S)
        S = mesh[-1]
        nodes, half = panel_nodes(mesh[:-1], mesh[1:])
        self.weights = (half * KRONROD_WEIGHTS).ravel()
        vals = engine.values(nodes.ravel())[0]
        self.gscale = float(np.max(np.abs(vals))) or 1.0
        self.body = np.abs(vals) / self.gscale
        self.alpha = engine.alpha()
        lnS = math.log(S)
        self.lnS = lnS
        info = engine.tail_info(self.alpha * lnS + math.log(self.gscale))
        self.limit = None if info.limit is None else abs(info.limit)
        self.delta = info.delta
        self.w, _, self.tw = tanh_sinh_level(2.0 ** -tail_level)
        self._phi_cache = {}
        self._phi_shift = self.alpha * lnS + math.log(self.gscale)

    def _phi(self, delta):
        if delta not in self._phi_cache:
            L = self.lnS - np.log(self.w) / delta
            self._phi_cache[delta] = np.abs(self.engine.phi(L, self._phi_shift))
        return self._phi_cache[delta]

    def norm(self, q: float) -> float:
        if self.engine.empty:
            return 0.0
        if math.isinf(q):
            return self.gscale * float(np.max(self.body))
        m = q * self.alpha - 1.0
        if m <= 0:
            return math.inf
        total = float(np.dot(self.weights, self.body ** q))
        if self.limit is None:
            delta, c_q = m, 0.0
        else:
            delta, c_q = self.delta, self.limit ** q
        outer = math.exp(self.lnS)
        ph = self._phi(delta) ** q
        with np.errstate(all="ignore"):
            integrand = self.w ** (m / delta - 1.0) * (ph - c_q)
        integrand = np.where(np.isfinite(integrand), integrand, 0.0)
        total += outer * (c_q / m + float(np.dot(self.tw, integrand)) / delta)
        return self.gscale * max(total, 0.0) ** (1.0 / q)


def _sup_norm(engine: FLTEngine) -> OutputNorm:
    s_lo, S = engine.scales()
    grid = np.concatenate([[0.0], np.geomspace(s_lo * 1e-3, S * 1e3, 801)])
    vals = np.abs(engine.values(grid)[0])
    i = int(np.argmax(vals))
    best = float(vals[i])
    if 0 < i < grid.size - 1:
        lo, hi = math.log(grid[max(i - 1, 1)]), math.log(grid[i + 1])
        res = minimize_scalar(lambda x: -abs(engine.values(np.array([math.exp(x)]))[0][0]),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        best = max(best, -float(res.fun))
    return OutputNorm(best, 1e-12 * best)


# --------------------------------------------------------------------------
# public operations

def _check_tol(val, err, rel_tol, scale):
    if err > rel_tol * abs(val) + ABS_FLOOR * max(scale, 1.0):
        raise ToleranceError(
            f"achieved error estimate {err:.3e} exceeds rel_tol {rel_tol:.1e} (value {val:.6e})",
            value=val, error=err)


def flt_values(params: TransformParams, f: FunctionSpec, s, mu: float = 1.0):
    """Batch evaluation: arrays ``(s, value, error_estimate)``."""
    engine = FLTEngine.from_function(params, f, mu)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if engine.empty:
        return s, np.zeros_like(s), np.zeros_like(s)
    v, e = engine.values(s)
    return s, v, e


def flt_eval(params: TransformParams, f: FunctionSpec, s: float,
             rel_tol: float = DEFAULT_REL_TOL) -> float:
    """``int_0^inf (1 + s t/kappa)^-(kappa+r) f(t) dt``."""
    _, v, e = flt_values(params, f, [s])
    _check_tol(float(v[0]), float(e[0]), rel_tol, abs(float(v[0])))
    return float(v[0])


def weighted_psi_eval(params: TransformParams, mu: float, f: FunctionSpec, s: float,
                      rel_tol: float = DEFAULT_REL_TOL) -> float:
    """``int_0^inf t^(mu-1) (1 + t s/kappa)^-(kappa+r) f(t) dt``."""
    if not (0.0 < mu <= 1.0):
        raise PreconditionError("weighted transform needs 0 < mu <= 1")
    _, v, e = flt_values(params, f, [s], mu=mu)
    _check_tol(float(v[0]), float(e[0]), rel_tol, abs(float(v[0])))
    return float(v[0])


def transform_lq_norm(params: TransformParams, f: FunctionSpec, q: float, mu: float = 1.0,
                      weight_exp: float = 0.0) -> float:
    """``|L_{kappa,r}[t^(mu-1) f]|_q`` (optionally with an ``s**weight_exp`` weight)."""
    engine = FLTEngine.from_function(params, f, mu)
    return output_norm(engine, q, weight_exp).value


# -- generic kernels ---------------------------------------------------------

def _generic_single(kernel: KernelSpec, atoms, x: float, rel_tol: float) -> float:
    total = 0.0
    for atom in atoms:
        if isinstance(atom, PowerAtom):
            b = atom.b
            kk = 1.0 / (1.0 - atom.a)

            def integrand(u, atom=atom, kk=kk, b=b):
                # y = b u^kk; y^-a dy = b^(1-a) kk du
                return kernel(x * b * u ** kk)

            pts = [0.0, 1.0]
            if x > 0:
                for c in (0.01, 0.1, 1.0, 10.0, 100.0):
                    y = c / x
                    if y < b:
                        pts.append((y / b) ** (1.0 / kk))
            res = integrate(integrand, sorted(pts), rel_tol=rel_tol, abs_tol=1e-300)
            total += atom.coef * b ** (1.0 - atom.a) * kk * res.value
        else:
            pts = set(float(v) for v in atom.breaks)
            if x > 0:
                for c in (0.01, 0.1, 1.0, 10.0, 100.0):
                    for base in atom.breaks[:1]:
                        y = base + c / x
                        if y < atom.breaks[-1]:
                            pts.add(y)
            res = integrate(lambda y, atom=atom: kernel(x * y) * atom(y), sorted(pts),
                            rel_tol=rel_tol, abs_tol=1e-300)
            total += res.value
    return total


def generic_kernel_eval(kernel: KernelSpec, f: FunctionSpec, x: float,
                        rel_tol: float = DEFAULT_REL_TOL) -> float:
    """``T_K[f](x) = int_0^inf K(x y) f(y) dy``."""
    if x < 0:
        raise PreconditionError("x >= 0 required")
    if isinstance(kernel, FLTKernel):
        return flt_eval(kernel.params, f, x, rel_tol=rel_tol)
    atoms = merge_atoms(f.atoms())
    for atom in atoms:
        if isinstance(atom, PowerAtom) and atom.a >= 1:
            raise DivergenceError("function not integrable at 0")
    return _generic_single(kernel, atoms, float(x), rel_tol)


def generic_kernel_values(kernel: KernelSpec, f: FunctionSpec, xs, rel_tol=DEFAULT_REL_TOL):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if isinstance(kernel, FLTKernel):
        return flt_values(kernel.params, f, xs)[1]
    atoms = merge_atoms(f.atoms())
    return np.array([_generic_single(kernel, atoms, float(x), rel_tol) for x in xs])


def laplace_eval(f: FunctionSpec, s: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Classical Laplace transform ``int_0^inf e^(-s t) f(t) dt``."""
    return generic_kernel_eval(ExpKernel(), f, s, rel_tol=rel_tol)


def kernel_output_norm(kernel: KernelSpec, f: FunctionSpec, q: float,
                       weight_exp: float = 0.0, rel_tol: float = 1e-9) -> float:
    """``( int_0^inf x**weight_exp |T_K f(x)|**q dx )**(1/q)``."""
    if isinstance(kernel, FLTKernel):
        return output_norm(FLTEngine.from_function(kernel.params, f), q, weight_exp).value
    atoms = merge_atoms(f.atoms())
    if not atoms:
        return 0.0

    def body(x):
        vals = np.array([_generic_single(kernel, atoms, float(v), 1e-12) for v in np.ravel(x)])
        out = np.abs(vals) ** q
        if weight_exp:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = out * np.where(x > 0, np.ravel(x) ** weight_exp, 0.0)
        return out.reshape(np.shape(x))

    pts = breakpoints(atoms)
    x_hi = 1e3 / pts[0]
    mesh = np.concatenate([[0.0], np.geomspace(1e-3 / pts[-1], x_hi, 24)])
    total = integrate(body, mesh, rel_tol=rel_tol).value
    total += integrate_halfline(body, x_hi, rel_tol=rel_tol).value
    return total ** (1.0 / q)


def flt_limit_check(kappas, r: float, f: FunctionSpec, s: float):
    """Gaps ``|L_{kappa,r} f(s) - L f(s)|`` along an increasing kappa sequence."""
    kappas = [float(k) for k in kappas]
    if any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise PreconditionError("kappa sequence must be increasing")
    ref = laplace_eval(f, s, rel_tol=1e-12)
    out = []
    for k in kappas:
        params = TransformParams(k, r).require_thm21()
        out.append((k, abs(flt_eval(params, f, s, rel_tol=1e-9) - ref)))
    return out


def mellin_zeta(kernel: KernelSpec, sigma: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Mellin transform ``int_0^inf x^(sigma-1) K(x) dx`` of the kernel."""
    lo, hi = kernel.strip()
    if not (lo < sigma < hi):
        raise HypothesisError(f"sigma = {sigma:g} outside the convergence strip ({lo:g}, {hi:g})",
                              condition="sigma in Mellin strip")
    closed = kernel.mellin(sigma)
    if closed is not None:
        return closed
    return mellin_zeta_quadrature(kernel, sigma, rel_tol)


def mellin_zeta_quadrature(kernel: KernelSpec, sigma: float, rel_tol: float = 1e-12) -> float:
    """Direct quadrature of the Mellin integral on ``x = t/(1-t)``."""

    def integrand(t, tc):
        x = t / tc
        return x ** (sigma - 1.0) * kernel(x) / (tc * tc)

    return tanh_sinh(integrand, 0.0, 1.0, rel_tol=rel_tol, complement=True).value
