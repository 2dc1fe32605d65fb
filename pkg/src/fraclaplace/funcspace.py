"""Test functions on (0, inf) and their L_p norms.

Every :class:`FunctionSpec` reduces to a list of *atoms*:

* :class:`PowerAtom` ``c * t**-a`` on ``(0, b)``, the only atoms touching
  the origin and the only ones with a singularity;
* :class:`PieceAtom` piecewise-smooth functions supported on
  ``[breaks[0], breaks[-1]]`` with ``breaks[0] > 0``.

Dilation, linear combination and power weights act on atoms in closed
form, which is what the transform engine consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .quadrature import integrate, integrate_halfline

BUMP_ORDER = 4
BUMP_RANGE = (0.5, 99.5)


@dataclass(frozen=True)
class PowerAtom:
    coef: float
    a: float
    b: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0) & (t < self.b)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(inside, self.coef * np.power(np.where(inside, t, 1.0), -self.a), 0.0)

    def dilate(self, lam):
        return PowerAtom(self.coef * lam ** (-self.a), self.a, self.b / lam)

    def scale(self, c):
        return PowerAtom(self.coef * c, self.a, self.b)

    def weight(self, exponent):
        """Multiply by ``t**exponent``."""
        return PowerAtom(self.coef, self.a - exponent, self.b)


class PieceAtom:
    """Piecewise-smooth atom; ``func`` is smooth between consecutive breaks."""

    def __init__(self, breaks, func, t_power=0.0, coef=1.0):
        self.breaks = np.asarray(breaks, dtype=float)
        self._func = func
        self.t_power = t_power
        self.coef = coef

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.breaks[0]) & (t <= self.breaks[-1])
        tt = np.where(inside, t, self.breaks[0])
        vals = self._func(tt)
        if self.t_power:
            vals = vals * tt ** self.t_power
        return np.where(inside, self.coef * vals, 0.0)

    def dilate(self, lam):
        func = self._func
        return PieceAtom(self.breaks / lam, lambda t: func(lam * t),
                         self.t_power, self.coef * lam ** self.t_power)

    def scale(self, c):
        return PieceAtom(self.breaks, self._func, self.t_power, self.coef * c)

    def weight(self, exponent):
        return PieceAtom(self.breaks, self._func, self.t_power + exponent, self.coef)


class FunctionSpec:
    """Base class of the test-function variants (immutable values)."""

    def atoms(self) -> list:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for atom in self.atoms():
            out = out + atom(x)
        return out

    @staticmethod
    def from_dict(data) -> "FunctionSpec":
        kind = data.get("type")
        try:
            cls = _VARIANTS[kind]
        except KeyError:
            raise PreconditionError(f"unknown function type {kind!r}") from None
        return cls._from_dict(data)


@dataclass(frozen=True)
class PowerCutoff(FunctionSpec):
    """``x**-a`` on ``(0, b)``."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < 1:
            raise PreconditionError(f"PowerCutoff needs a < 1 (got {self.a}) for local integrability")
        if not self.b > 0:
            raise PreconditionError("PowerCutoff needs b > 0")

    def atoms(self):
        return [PowerAtom(1.0, float(self.a), float(self.b))]

    def to_dict(self):
        return {"type": "PowerCutoff", "a": self.a, "b": self.b}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["a"]), float(d["b"]))


@dataclass(frozen=True)
class Indicator(FunctionSpec):
    """Indicator of ``(0, b)``; ``b = 0`` is the zero function."""

    b: float

    def __post_init__(self):
        if not self.b >= 0:
            raise PreconditionError("Indicator needs b >= 0")

    def atoms(self):
        return [PowerAtom(1.0, 0.0, float(self.b))] if self.b > 0 else []

    def to_dict(self):
        return {"type": "Indicator", "b": self.b}

    @classmethod
    def _from_dict(cls, d):
        return cls(float(d["b"]))


@dataclass(frozen=True)
class Grid(FunctionSpec):
    """Piecewise-linear interpolant of ``values`` at ``knots``, zero outside."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.size < 2 or k.shape != v.shape:
            raise PreconditionError("Grid needs matching knots/values with at least two knots")
        if not (k[0] > 0 and np.all(np.diff(k) > 0)):
            raise PreconditionError("Grid knots must be positive and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("Grid values must be finite")
        object.__setattr__(self, "knots", tuple(float(x) for x in k))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def atoms(self):
        k = np.array(self.knots)
        v = np.array(self.values)
        if not np.any(v):
            return []
        return [PieceAtom(k, lambda t: np.interp(t, k, v))]

    def to_dict(self):
        return {"type": "Grid", "knots": list(self.knots), "values": list(self.values)}

    @classmethod
    def _from_dict(cls, d):
        return cls(tuple(d["knots"]), tuple(d["values"]))


def _bump_table(seed, count, nonnegative):
    rng = np.random.default_rng(seed)
    lo, hi = BUMP_RANGE
    inner = np.sort(rng.uniform(lo, hi, size=count - 1))
    edges = np.concatenate([[lo], inner, [hi]])
    rows = []
    for left, right in zip(edges[:-1], edges[1:]):
        room = 0.5 * (right - left)
        half = room * rng.uniform(0.3, 1.0)
        center = rng.uniform(left + half, right - half)
        amp = rng.uniform(0.2, 1.0)
        if not nonnegative and rng.uniform() < 0.5:
            amp = -amp
        rows.append((center, half, amp))
    return np.array(rows)


@dataclass(frozen=True)
class BumpMix(FunctionSpec):
    """Seeded mixture of ``count`` polynomial bumps ``amp (1 - u^2)^4``.

    Bumps occupy disjoint random slots of (0.5, 99.5), so ``|f| <= 1``.
    """

    seed: int
    count: int
    nonnegative: bool = False

    def __post_init__(self):
        if int(self.count) < 1:
            raise PreconditionError("BumpMix needs count >= 1")

    def table(self):
        """Rows of (center, half_width, amplitude)."""
        return _bump_table(int(self.seed), int(self.count), bool(self.nonnegative))

    def atoms(self):
        tab = self.table()
        c, h, amp = tab[:, 0], tab[:, 1], tab[:, 2]
        breaks = np.unique(np.concatenate([c - h, c, c + h]))

        left = c - h

        def func(t):
            # slots are disjoint, so each t meets at most one bump
            idx = np.clip(np.searchsorted(left, t, side="right") - 1, 0, c.size - 1)
            u = (t - c[idx]) / h[idx]
            return amp[idx] * np.clip(1.0 - u * u, 0.0, None) ** BUMP_ORDER

        return [PieceAtom(breaks, func)]

    def to_dict(self):
        d = {"type": "BumpMix", "seed": int(self.seed), "count": int(self.count)}
        if self.nonnegative:
            d["nonnegative"] = True
        return d

    @classmethod
    def _from_dict(cls, d):
        return cls(int(d["seed"]), int(d["count"]), bool(d.get("nonnegative", False)))


@dataclass(frozen=True)
class Scaled(FunctionSpec):
    """``inner(lam * x)``, the dilation of ``inner``."""

    inner: FunctionSpec
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise PreconditionError("dilation factor must be positive")

    def atoms(self):
        return [atom.dilate(self.lam) for atom in self.inner.atoms()]

    def to_dict(self):
        return {"type": "Scaled", "inner": self.inner.to_dict(), "lambda": self.lam}

    @classmethod
    def _from_dict(cls, d):
        return cls(FunctionSpec.from_dict(d["inner"]), float(d["lambda"]))


@dataclass(frozen=True)
class Linear(FunctionSpec):
    """Finite linear combination ``sum c_i f_i``."""

    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), f) for c, f in self.terms))

    def atoms(self):
        out = []
        for c, f in self.terms:
            if c != 0.0:
                out.extend(atom.scale(c) for atom in f.atoms())
        return out

    def to_dict(self):
        return {"type": "Linear", "terms": [[c, f.to_dict()] for c, f in self.terms]}

    @classmethod
    def _from_dict(cls, d):
        return cls(tuple((float(c), FunctionSpec.from_dict(f)) for c, f in d["terms"]))


_VARIANTS = {cls.__name__: cls for cls in (PowerCutoff, Indicator, Grid, BumpMix, Scaled, Linear)}


def dilate(f: FunctionSpec, lam: float) -> FunctionSpec:
    """``T_lam f(x) = f(lam x)``; nested dilations collapse into one."""
    if not (lam > 0 and math.isfinite(lam)):
        raise PreconditionError("dilation factor must be positive")
    if lam == 1.0:
        return f
    if isinstance(f, Scaled):
        return Scaled(f.inner, f.lam * lam)
    return Scaled(f, lam)


def random_bump_mix(seed: int, count: int, nonnegative: bool = False) -> BumpMix:
    return BumpMix(int(seed), int(count), nonnegative)


def merge_atoms(atoms):
    """Combine power atoms sharing (a, b); drop zero coefficients."""
    powers = {}
    pieces = []
    for atom in atoms:
        if isinstance(atom, PowerAtom):
            key = (atom.a, atom.b)
            powers[key] = powers.get(key, 0.0) + atom.coef
        elif atom.coef != 0.0:
            pieces.append(atom)
    merged = [PowerAtom(c, a, b) for (a, b), c in sorted(powers.items()) if c != 0.0]
    return merged + pieces


def weighted_atoms(f: FunctionSpec, mu: float = 1.0):
    """Atoms of ``t**(mu-1) f(t)``."""
    atoms = merge_atoms(f.atoms())
    if mu == 1.0:
        return atoms
    return [atom.weight(mu - 1.0) for atom in atoms]


def singular_exponent(atoms) -> float:
    """Largest power-atom exponent ``a`` (0 when nothing is singular)."""
    return max((a.a for a in atoms if isinstance(a, PowerAtom)), default=0.0)


def breakpoints(atoms):
    pts = set()
    for atom in atoms:
        if isinstance(atom, PowerAtom):
            pts.add(atom.b)
        else:
            pts.update(float(x) for x in atom.breaks)
    return sorted(pts)


@dataclass(frozen=True)
class NormRequest:
    """Exponent ``p`` (may be inf) and an optional decay exponent of ``f``.

    ``tail_hint = alpha`` asserts ``f(s) ~ C s**-alpha`` at infinity; it is
    only consulted for functions with unbounded support.
    """

    p: float
    tail_hint: float | None = None

    def __post_init__(self):
        if not self.p >= 1:
            raise PreconditionError("norm exponent p >= 1 required")
        if self.tail_hint is not None and not self.tail_hint * self.p > 1:
            raise PreconditionError("tail_hint * p > 1 required for a finite tail")


def _request(req) -> NormRequest:
    return req if isinstance(req, NormRequest) else NormRequest(float(req))


def _closed_power_norm(atom: PowerAtom, p: float) -> float:
    if atom.a * p >= 1.0:
        return math.inf
    e = 1.0 - atom.a * p
    return abs(atom.coef) * math.exp((e * math.log(atom.b) - math.log(e)) / p)


def atoms_sup(atoms) -> float:
    if not atoms:
        return 0.0
    if any(isinstance(a, PowerAtom) and a.a > 0 for a in atoms):
        return math.inf
    pts = np.array(breakpoints(atoms))
    fine = np.concatenate([pts, np.linspace(0.0, pts[-1], 4097)[1:]])
    for lo, hi in zip(pts[:-1], pts[1:]):
        fine = np.concatenate([fine, np.linspace(lo, hi, 65)])
    vals = sum(atom(fine) for atom in atoms)
    near0 = sum(atom(np.array([1e-300])) for atom in atoms)
    return float(max(np.max(np.abs(vals)), np.max(np.abs(near0))))


def atoms_lp_norm(atoms, p: float, rel_tol=1e-12, method="auto") -> float:
    """L_p norm of a sum of atoms; ``inf`` when the integral diverges."""
    atoms = [a for a in atoms if a.coef != 0.0]
    if not atoms:
        return 0.0
    if math.isinf(p):
        return atoms_sup(atoms)
    a_max = singular_exponent(atoms)
    if a_max * p >= 1.0:
        return math.inf
    if method == "auto" and len(atoms) == 1 and isinstance(atoms[0], PowerAtom):
        return _closed_power_norm(atoms[0], p)

    # bounded functions are normalized by their sup so large p cannot overflow
    scale = atoms_sup(atoms) if p > 20 and a_max <= 0 else 1.0
    scale = scale if 0 < scale < math.inf else 1.0

    def absp(t):
        return np.abs(sum(atom(t) for atom in atoms) / scale) ** p

    pts = breakpoints(atoms)
    total = 0.0
    start = 0.0
    if any(isinstance(a, PowerAtom) for a in atoms):
        # t = t1 u^k removes the t^(-a p) singularity at the origin
        t1 = pts[0]
        k = 1.0 / (1.0 - max(a_max, 0.0) * p)

        def mapped(u):
            return absp(t1 * u ** k) * t1 * k * u ** (k - 1.0)

        total += integrate(mapped, [0.0, 0.5, 1.0], rel_tol=rel_tol).value
        start = t1
    else:
        start = pts[0]
    rest = [x for x in pts if x >= start]
    if len(rest) > 1:
        # refine each piece so sign changes inside bumps are bracketed early
        fine = np.unique(np.concatenate([np.linspace(lo, hi, 5) for lo, hi in zip(rest[:-1], rest[1:])]))
        total += integrate(absp, fine, rel_tol=rel_tol).value
    return scale * total ** (1.0 / p)


def lp_norm(f: FunctionSpec, req, method="auto") -> float:
    """``|f|_p`` on (0, inf); divergence is reported as ``math.inf``.

    ``method="quadrature"`` skips the closed form for single power atoms.
    """
    req = _request(req)
    return atoms_lp_norm(merge_atoms(f.atoms()), req.p, method=method)


def weighted_lp_norm(f: FunctionSpec, mu: float, p: float, method="auto") -> float:
    """L_p norm of ``t**(mu-1) f(t)``."""
    if not (0.0 < mu <= 1.0):
        raise PreconditionError("weighted_lp_norm needs 0 < mu <= 1")
    return atoms_lp_norm(weighted_atoms(f, mu), float(p), method=method)


def critical_exponent(f: FunctionSpec, mu: float = 1.0) -> float:
    """Smallest p at which ``|t^(mu-1) f|_p`` diverges (inf if never)."""
    a = singular_exponent(weighted_atoms(f, mu))
    return math.inf if a <= 0 else 1.0 / a


def lp_norm_callable(func, req, points=(), singular_exponent=0.0, rel_tol=1e-10) -> float:
    """L_p norm of a vectorized callable on (0, inf).

    The domain is split at ``S = max(points[-1], 1e3)``; beyond ``S`` the
    tail uses ``req.tail_hint`` analytically when given and otherwise the
    map ``x = S + t/(1-t)``.
    """
    req = _request(req)
    p = req.p
    pts = sorted(float(x) for x in points if x > 0)
    S = max(pts[-1] if pts else 0.0, 1e3)

    def absp(t):
        return np.abs(func(t)) ** p

    total = 0.0
    first = pts[0] if pts else 1.0
    if singular_exponent > 0:
        if singular_exponent * p >= 1:
            return math.inf
        k = 1.0 / (1.0 - singular_exponent * p)
        total += integrate(lambda u: absp(first * u ** k) * first * k * u ** (k - 1.0),
                           [0.0, 0.5, 1.0], rel_tol=rel_tol).value
    else:
        total += integrate(absp, [0.0, first], rel_tol=rel_tol).value
    mids = [x for x in pts if first < x < S]
    total += integrate(absp, [first, *mids, S], rel_tol=rel_tol).value
    if req.tail_hint is not None:
        alpha = req.tail_hint
        c = abs(float(func(np.array([S]))[0])) * S ** alpha
        total += c ** p * S ** (1.0 - alpha * p) / (alpha * p - 1.0)
    else:
        total += integrate_halfline(absp, S, rel_tol=rel_tol).value
    return total ** (1.0 / p)
