"""Grand Lebesgue Space norms and the embedding of the transform between them.

``||f||_G(psi) = sup_{p in (A, B)} |f|_p / psi(p)``; the supremum over the
open interval is approximated on nested grids clustered at both endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, HypothesisError, PreconditionError
from .funcspace import FunctionSpec, critical_exponent, lp_norm, merge_atoms
from .specfun import TransformParams, z_const
from .transform import FLTEngine, OutputSampler, output_norm

INF_CAP = 1e3
DEFAULT_GRID = 32
_CLUSTER = tuple(10.0 ** -k for k in range(1, 7))
_CERTIFY = 3


def conjugate(p):
    """``lambda(p) = p / (p - 1)`` with ``lambda(1) = inf`` and ``lambda(inf) = 1``."""
    p = float(p)
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _check_support(support):
    A, B = float(support[0]), float(support[1])
    if not (1.0 <= A < B):
        raise PreconditionError(f"support ({A:g}, {B:g}) must satisfy 1 <= A < B <= inf")
    return A, B


def _support_dict(support):
    return [support[0], "inf" if math.isinf(support[1]) else support[1]]


# --------------------------------------------------------------------------
# psi-functions

class PsiFunction:
    """Positive continuous weight on an open exponent interval ``(A, B)``."""

    support: tuple

    def _eval(self, p: float) -> float:
        raise NotImplementedError

    def __call__(self, p):
        if np.ndim(p) == 0:
            return self._eval(float(p))
        return np.array([self._eval(float(x)) for x in np.ravel(p)]).reshape(np.shape(p))

    def edge_value(self, p: float) -> float | None:
        """Value at an endpoint of the support when the formula extends there."""
        try:
            v = self._eval(float(p))
        except (DivergenceError, PreconditionError, ValueError):
            return None
        return v if 0.0 < v < math.inf else None

    def restrict(self, lo: float, hi: float) -> "PsiFunction":
        return Restricted(self, (float(lo), float(hi)))

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d) -> "PsiFunction":
        kind = d["type"]
        support = tuple(float(x) for x in d["support"]) if "support" in d else None
        if kind == "Constant":
            return Constant(float(d["c"]), support)
        if kind == "PowerLaw":
            return PowerLaw(float(d["coef"]), float(d["exponent"]), support)
        if kind == "TableInterp":
            return TableInterp(tuple(d["knots"]), tuple(d["values"]))
        if kind == "NaturalOf":
            return natural_psi(FunctionSpec.from_dict(d["f"]), support)
        raise PreconditionError(f"unknown psi type {kind!r}")


@dataclass(frozen=True)
class Constant(PsiFunction):
    c: float
    support: tuple

    def __post_init__(self):
        object.__setattr__(self, "support", _check_support(self.support))
        if not self.c > 0:
            raise PreconditionError("constant psi needs c > 0")

    def _eval(self, p):
        return self.c

    def edge_value(self, p):
        return self.c

    def to_dict(self):
        return {"type": "Constant", "c": self.c, "support": _support_dict(self.support)}


@dataclass(frozen=True)
class PowerLaw(PsiFunction):
    """``psi(p) = coef * p**exponent``."""

    coef: float
    exponent: float
    support: tuple

    def __post_init__(self):
        object.__setattr__(self, "support", _check_support(self.support))
        if not self.coef > 0:
            raise PreconditionError("power-law psi needs coef > 0")
        if math.isinf(self.support[1]) and self.exponent < 0:
            raise PreconditionError("a decaying power law has zero infimum on (A, inf)")

    def _eval(self, p):
        if math.isinf(p):
            return self.coef if self.exponent == 0 else math.inf
        return self.coef * p ** self.exponent

    def to_dict(self):
        return {"type": "PowerLaw", "coef": self.coef, "exponent": self.exponent,
                "support": _support_dict(self.support)}


@dataclass(frozen=True)
class TableInterp(PsiFunction):
    """Piecewise-linear interpolation of positive values on finite knots."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = tuple(float(x) for x in self.knots)
        v = tuple(float(x) for x in self.values)
        if len(k) < 2 or len(k) != len(v):
            raise PreconditionError("table psi needs matching knots and values (>= 2)")
        if any(b <= a for a, b in zip(k, k[1:])):
            raise PreconditionError("table knots must increase")
        if min(v) <= 0 or not all(math.isfinite(x) for x in k + v):
            raise PreconditionError("table values must be positive and finite")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)
        _check_support((k[0], k[-1]))

    @property
    def support(self):
        return (self.knots[0], self.knots[-1])

    def _eval(self, p):
        if not self.knots[0] <= p <= self.knots[-1]:
            raise PreconditionError(f"p = {p:g} outside the table")
        return float(np.interp(p, self.knots, self.values))

    def to_dict(self):
        return {"type": "TableInterp", "knots": list(self.knots), "values": list(self.values)}


@dataclass(frozen=True)
class NaturalOf(PsiFunction):
    """``psi(p) = |f|_p``; build with :func:`natural_psi`."""

    f: FunctionSpec
    support: tuple

    def _eval(self, p):
        return lp_norm(self.f, p)

    def to_dict(self):
        return {"type": "NaturalOf", "f": self.f.to_dict(),
                "support": _support_dict(self.support)}


@dataclass(frozen=True)
class Restricted(PsiFunction):
    """``psi`` with its support cut down to a sub-interval."""

    base: PsiFunction
    support: tuple

    def _eval(self, p):
        return self.base._eval(p)

    def edge_value(self, p):
        return self.base.edge_value(p)

    def to_dict(self):
        return {"type": "Restricted", "base": self.base.to_dict(),
                "support": _support_dict(self.support)}


def natural_psi(f: FunctionSpec, support) -> NaturalOf:
    """``psi_f(p) = |f|_p`` on ``support``; every norm there must be finite."""
    A, B = _check_support(support)
    pc = critical_exponent(f)
    if pc < B:
        raise DivergenceError(f"|f|_p diverges for p >= {pc:.17g}, inside ({A:g}, {B:g})")
    if not merge_atoms(f.atoms()):
        raise PreconditionError("the natural psi of the zero function is not positive")
    psi = NaturalOf(f, (A, B))
    grid = exponent_grid(A, B, 64)
    vals = psi(grid)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        raise DivergenceError(f"|f|_p diverges at p = {grid[bad][0]:.17g}")
    return psi


# --------------------------------------------------------------------------
# grids and norms

def exponent_grid(A: float, B: float, grid_size: int) -> np.ndarray:
    """Interior points of ``(A, B)``; the grid for ``2n`` contains the grid for ``n``.

    Dyadic points of level ``floor(log2 n)`` plus offsets ``10^-k`` from both
    ends. An infinite ``B`` uses log spacing up to ``INF_CAP``.
    """
    if grid_size < 16:
        raise PreconditionError("grid_size >= 16 required")
    level = int(math.floor(math.log2(grid_size)))
    frac = np.arange(1, 2 ** level) / 2.0 ** level
    if math.isinf(B):
        lo, hi = math.log(A), math.log(max(INF_CAP, 2.0 * A))
        pts = [np.exp(lo + (hi - lo) * frac), [math.exp(hi)]]
        width = 1.0
        right = []
    else:
        pts = [A + (B - A) * frac]
        width = min(1.0, B - A)
        right = [B - width * c for c in _CLUSTER]
    left = [A + width * c for c in _CLUSTER]
    grid = np.unique(np.concatenate(pts + [left, right]))
    return grid[(grid > A) & (grid < B)]


@dataclass(frozen=True)
class Transformed:
    """The image ``L_{kappa,r}[f]`` as an object whose q-norms can be taken."""

    params: TransformParams
    f: FunctionSpec


def _quotient_sup(norms, weights) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(norms == 0.0, 0.0, norms / weights)
    if np.any(np.isnan(q)) or np.any(np.isinf(q)):
        return math.inf
    return float(np.max(q)) if q.size else 0.0


def _edge_divergence(pc: float, psi: PsiFunction) -> bool:
    """True when |f|_p blows up at a support point where psi stays bounded."""
    A, B = psi.support
    if pc < B:
        return True
    # pc = inf means every norm is finite, including the sup norm at B = inf
    return pc == B and math.isfinite(pc) and psi.edge_value(B) is not None


def gls_norm(f, psi: PsiFunction, grid_size: int = DEFAULT_GRID) -> float:
    """``sup_p |f|_p / psi(p)`` over a clustered grid; ``inf`` if any quotient diverges.

    ``f`` is a :class:`FunctionSpec` or a :class:`Transformed` image, in which
    case ``psi`` is typically a :class:`NuFunction`.
    """
    A, B = psi.support
    grid = exponent_grid(A, B, grid_size)
    if isinstance(f, Transformed):
        return _transformed_sup(f, psi, grid)
    if not merge_atoms(f.atoms()):
        return 0.0
    if _edge_divergence(critical_exponent(f), psi):
        return math.inf
    norms = np.array([lp_norm(f, p) for p in grid])
    best = _quotient_sup(norms, psi(grid))
    # the quotient is continuous up to an endpoint where psi extends
    for p, w in _edges(psi):
        best = max(best, lp_norm(f, p) / w)
    return best


def _edges(psi: PsiFunction):
    out = []
    for p in psi.support:
        w = psi.edge_value(p)
        if w is not None:
            out.append((p, w))
    return out


# --------------------------------------------------------------------------
# nu-function and embedding

@dataclass(frozen=True)
class NuFunction(PsiFunction):
    """``nu(q) = z(lambda(q)) psi(lambda(q))`` on the conjugate image of ``(a, b)``."""

    base: PsiFunction
    params: TransformParams
    support: tuple

    def _eval(self, q):
        p = conjugate(q)
        return z_const(self.params, p) * self.base._eval(p)

    def edge_value(self, q):
        p = conjugate(q)
        v = self.base.edge_value(p)
        return None if v is None else z_const(self.params, p) * v

    def to_dict(self):
        return {"type": "Nu", "base": self.base.to_dict(),
                "params": {"kappa": self.params.kappa, "r": self.params.r},
                "support": _support_dict(self.support)}


def restricted_support(psi: PsiFunction) -> tuple:
    """``(a, b) = (A, B) ∩ (1, 2)``; raises when empty."""
    A, B = psi.support
    a, b = max(A, 1.0), min(B, 2.0)
    if not a < b:
        raise HypothesisError(f"support ({A:g}, {B:g}) does not meet (1, 2), violating Eq (5.4)",
                              condition="Eq (5.4)")
    return a, b


def build_nu(psi: PsiFunction, params: TransformParams) -> NuFunction:
    params.require_thm21()
    a, b = restricted_support(psi)
    return NuFunction(psi.restrict(a, b), params, (conjugate(b), conjugate(a)))


def _transformed_sup(image: Transformed, nu: PsiFunction, grid) -> float:
    engine = FLTEngine.from_function(image.params, image.f)
    if engine.empty:
        return 0.0
    weights = nu(grid)
    sampler = OutputSampler(engine)
    screened = np.array([sampler.norm(q) for q in grid])
    quot = screened / weights
    if not np.all(np.isfinite(quot)):
        return math.inf
    # certify the leading candidates with the adaptive norm
    top = np.argsort(-quot)[:_CERTIFY]
    for i in top:
        quot[i] = output_norm(engine, grid[i]).value / weights[i]
    best = float(np.max(quot))
    for q, w in _edges(nu):
        best = max(best, output_norm(engine, q).value / w)
    return best


@dataclass(frozen=True)
class EmbeddingResult:
    lhs: float
    rhs: float
    tol: float = 1e-4

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + self.tol)


def embedding_check(f: FunctionSpec, psi: PsiFunction, params: TransformParams,
                    grid_size: int = DEFAULT_GRID) -> EmbeddingResult:
    """``||L f||_G(nu)`` against ``||f||_G(psi restricted to (a, b))``."""
    nu = build_nu(psi, params)
    a, b = restricted_support(psi)
    rhs = gls_norm(f, psi.restrict(a, b), grid_size)
    if not merge_atoms(f.atoms()):
        return EmbeddingResult(0.0, rhs)
    if not 0.0 < rhs < math.inf:
        raise PreconditionError(f"||f|| over the restricted support is {rhs:g}; "
                                "a finite positive value is required")
    lhs = gls_norm(Transformed(params, f), nu, grid_size)
    return EmbeddingResult(lhs, rhs)
