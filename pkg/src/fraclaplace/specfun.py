"""Gamma/Beta primitives and the closed-form operator-norm constants.

All constants are assembled in the log domain and exponentiated once, so
large kernel powers (the Laplace limit, kappa ~ 1e6) do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, HypothesisError, PreconditionError
from .quadrature import integrate, tanh_sinh

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling correction coefficients B_2k / (2k (2k-1)), k = 1..6
_STIRLING = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360)
_STIRLING_MIN = 20.0


def _lanczos(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(x):
    """Natural log of the Gamma function for positive real ``x``.

    Accepts scalars or arrays; raises ``ValueError`` for ``x <= 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("log_gamma is defined for x > 0 only")
    small = arr < 0.5
    shifted = np.where(small, arr + 1.0, arr)
    out = _lanczos(shifted)
    out = np.where(small, out - np.log(arr), out)
    return float(out) if np.ndim(x) == 0 else out


def _stirling_tail(x):
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc * inv


def log_gamma_ratio(x, d):
    """``ln Gamma(x + d) - ln Gamma(x)`` without cancellation for large ``x``."""
    x = float(x)
    d = float(d)
    if x <= 0 or x + d <= 0:
        raise ValueError("log_gamma_ratio needs x > 0 and x + d > 0")
    if min(x, x + d) < _STIRLING_MIN:
        return log_gamma(x + d) - log_gamma(x)
    main = (x - 0.5) * math.log1p(d / x) + d * math.log(x + d) - d
    return main + _stirling_tail(x + d) - _stirling_tail(x)


def log_beta(a, b):
    """``ln B(a, b)`` for positive arguments."""
    if not (a > 0 and b > 0):
        raise ValueError(f"beta needs a > 0 and b > 0, got a={a}, b={b}")
    lo, hi = (a, b) if a <= b else (b, a)
    return log_gamma(lo) - log_gamma_ratio(hi, lo)


def beta(a, b):
    """Euler Beta function ``B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)``."""
    return math.exp(log_beta(a, b))


def _pow0(base, exponent):
    """``base**exponent`` with the limit convention ``0**0 == 1``."""
    if base == 0.0 and exponent == 0.0:
        return 1.0
    return base ** exponent


@dataclass(frozen=True)
class TransformParams:
    """The pair (kappa, r) of the kernel ``(1 + s t / kappa)^(-kappa - r)``."""

    kappa: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise HypothesisError("kappa > 0 required", condition="kappa > 0")
        if not math.isfinite(self.r):
            raise PreconditionError("r must be finite")

    @property
    def power(self) -> float:
        """Kernel exponent ``kappa + r``."""
        return self.kappa + self.r

    @property
    def thm21_valid(self) -> bool:
        return self.power > 0.5

    @property
    def lower_valid(self) -> bool:
        return self.power > 1.0

    def require_thm21(self):
        if not self.thm21_valid:
            raise HypothesisError(
                f"κ+r ≤ 1/2 violates Eq (2.4) (κ+r = {self.power:g})",
                condition="kappa + r > 1/2")
        return self

    def require_lower(self):
        if not self.lower_valid:
            raise HypothesisError(
                f"κ+r ≤ 1 violates Eq (3.5) (κ+r = {self.power:g})",
                condition="kappa + r > 1")
        return self


@dataclass(frozen=True)
class ExponentPair:
    """Conjugate exponents with ``1/p + 1/q = 1``; ``q`` is derived from ``p``.

    ``inv_q`` is stored as ``1 - 1/p`` which is exact for ``p`` in [1, 2].
    """

    p: float
    inv_q: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 <= p <= 2.0):
            raise HypothesisError(f"p = {p:g} outside [1, 2] violates Eq (2.4)",
                                  condition="1 <= p <= 2")
        inv_q = 1.0 - 1.0 / p
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "inv_q", inv_q)
        object.__setattr__(self, "q", math.inf if inv_q == 0.0 else 1.0 / inv_q)

    @property
    def inv_p(self) -> float:
        return 1.0 / self.p


def _as_pair(exps) -> ExponentPair:
    return exps if isinstance(exps, ExponentPair) else ExponentPair(exps)


def v_const(params: TransformParams) -> float:
    """``int_0^inf x^(-1/2) (1 + x)^-(kappa + r) dx`` in closed form."""
    params.require_thm21()
    beta_ = params.power
    return math.exp(0.5 * math.log(math.pi) - log_gamma_ratio(beta_ - 0.5, 0.5))


def w_const(params: TransformParams) -> float:
    """``sqrt(kappa) * v``: the L2 -> L2 bound of the transform."""
    params.require_thm21()
    beta_ = params.power
    return math.exp(0.5 * math.log(math.pi * params.kappa)
                    - log_gamma_ratio(beta_ - 0.5, 0.5))


def z_const(params: TransformParams, exps) -> float:
    """Upper bound ``w^(2/q)`` of the L_p -> L_q norm, ``q = p'``."""
    exps = _as_pair(exps)
    w = w_const(params)
    if exps.inv_q == 0.0:
        return 1.0
    return math.exp(2.0 * exps.inv_q * math.log(w))


def y_const(params: TransformParams) -> float:
    """``int_0^1 (1 + z/kappa)^-(kappa + r) dz`` in closed form."""
    params.require_lower()
    k = params.kappa
    e = params.power - 1.0
    return k / e * -math.expm1(-e * math.log1p(1.0 / k))


def lower_bound_37(params: TransformParams, p: float) -> float:
    """Trial-function lower bound for the unweighted operator norm."""
    params.require_lower()
    if not (1.0 <= p <= 2.0):
        raise HypothesisError(f"p = {p:g} outside [1, 2]", condition="1 <= p <= 2")
    return (_pow0(p - 1.0, 1.0 - 1.0 / p) * _pow0(1.0 - p / 2.0, 2.0 / p - 1.0)
            * y_const(params))


@dataclass(frozen=True)
class WeightedExponents:
    """Exponents of the weighted problem: ``1/Q = mu - 1/p``,
    ``1/sigma = 1 + mu - 2/p``."""

    p: float
    mu: float
    inv_Q: float
    inv_sigma: float

    @property
    def Q(self) -> float:
        return math.inf if self.inv_Q == 0 else 1.0 / self.inv_Q

    @property
    def sigma(self) -> float:
        return math.inf if self.inv_sigma == 0 else 1.0 / self.inv_sigma

    @property
    def inv_pprime(self) -> float:
        return 1.0 - 1.0 / self.p


def weighted_exponents(p: float, mu: float, params: TransformParams | None = None,
                       strict: bool = True) -> WeightedExponents:
    """Validate the weighted-regime relations and derive (Q, sigma).

    ``mu == 1`` is accepted as the reduction to the unweighted problem, in
    which case ``p`` ranges over [1, 2]. With ``strict`` the Young-type
    constant must exist, which excludes the endpoint ``p = 1/mu``.
    """
    if not (0.0 < mu <= 1.0):
        raise ConstraintError(f"mu = {mu:g} violates 0 < mu < 1 (Eq 4.3)",
                              condition="0 < mu < 1")
    if mu == 1.0:
        if not (1.0 <= p <= 2.0):
            raise ConstraintError(f"p = {p:g} outside [1, 2] at mu = 1",
                                  condition="1 <= p <= 2")
        if strict and p == 1.0:
            raise ConstraintError("sigma < p' fails at p = 1/mu (Eq 4.3)",
                                  condition="1/mu < p")
    else:
        if not (p > 1.0 / mu) and (strict or p < 1.0 / mu):
            raise ConstraintError(
                f"p = {p:g} violates 1/mu < p (sigma < p', Eq 4.3) with 1/mu = {1 / mu:g}",
                condition="1/mu < p")
        if p > 2.0 / mu * (1 + 1e-15):
            raise ConstraintError(
                f"p = {p:g} violates p <= 2/mu (p <= Q, Eq 4.2) with 2/mu = {2 / mu:g}",
                condition="p <= 2/mu")
    inv_Q = max(mu - 1.0 / p, 0.0)
    inv_sigma = 1.0 + mu - 2.0 / p
    ex = WeightedExponents(p=p, mu=mu, inv_Q=inv_Q, inv_sigma=inv_sigma)
    if params is not None and strict:
        s = ex.sigma
        if not (params.power * s + s * ex.inv_pprime > 1.0):
            raise ConstraintError(
                "(kappa+r)*sigma + sigma/p' > 1 violated (Eq 4.3)",
                condition="(kappa+r)*sigma + sigma/p' > 1")
    return ex


@dataclass(frozen=True)
class ThetaValues:
    """The weighted upper constant computed three ways.

    ``as_written`` uses the kappa power ``1 - sigma/p``; ``halfline`` is the
    Young-inequality constant for the operator on (0, inf), obtained by
    direct quadrature; ``fullline`` integrates over the whole real line
    and so carries an extra factor ``2**(1/sigma)``. ``halfline_closed``
    is the Beta-function evaluation of ``halfline``.
    """

    as_written: float
    halfline: float
    fullline: float
    halfline_closed: float
    sigma: float
    Q: float

    @property
    def oracle(self) -> float:
        return self.halfline


def _m_integral(params: TransformParams, c: float, e: float, rel_tol=1e-13) -> float:
    # int_0^inf t^-c (1 + t/kappa)^-e dt on t = kappa x/(1-x)
    k = params.kappa

    def integrand(x, xc):
        return k ** (1.0 - c) * x ** (-c) * xc ** (c + e - 2.0)

    return tanh_sinh(integrand, 0.0, 1.0, rel_tol=rel_tol, complement=True).value


def theta_const(params: TransformParams, p: float, mu: float) -> ThetaValues:
    """Weighted upper constant, as written and by quadrature of M(p)."""
    params.require_thm21()
    ex = weighted_exponents(p, mu, params)
    s = ex.sigma
    c = s * ex.inv_pprime
    a_arg = 1.0 - c
    b_arg = params.power * s + c - 1.0
    lb = log_beta(a_arg, b_arg)
    as_written = math.exp(((1.0 - s / p) * math.log(params.kappa) + lb) / s)
    closed = math.exp(((1.0 - c) * math.log(params.kappa) + lb) / s)
    half = _m_integral(params, c, params.power * s) ** (1.0 / s)
    return ThetaValues(as_written=as_written, halfline=half,
                       fullline=2.0 ** (1.0 / s) * half, halfline_closed=closed,
                       sigma=s, Q=ex.Q)


def lower_bound_49(params: TransformParams, p: float, mu: float) -> float:
    """Trial-function lower bound for the weighted operator norm."""
    params.require_lower()
    weighted_exponents(p, mu, params, strict=False)
    return (y_const(params) * _pow0(max(1.0 - mu * p / 2.0, 0.0), 2.0 / p - mu)
            * _pow0(max(mu * p - 1.0, 0.0), mu - 1.0 / p))


@dataclass
class BoundConstants:
    """Constants for one (kappa, r, p[, mu]) with the formula behind each."""

    v: float | None = None
    w: float | None = None
    z: float | None = None
    Y: float | None = None
    theta: float | None = None
    m: float | None = None
    m_fullline: float | None = None
    lower37: float | None = None
    lower49: float | None = None
    provenance: dict = field(default_factory=dict)

    def items(self):
        for name in ("v", "w", "z", "Y", "theta", "m", "m_fullline", "lower37", "lower49"):
            value = getattr(self, name)
            if value is not None:
                yield name, value, self.provenance.get(name, "")


def compute_constants(params: TransformParams, p: float, mu: float | None = None
                      ) -> BoundConstants:
    """Every constant defined at (params, p[, mu]); undefined ones stay None."""
    out = BoundConstants()
    prov = out.provenance
    if params.thm21_valid:
        out.v, prov["v"] = v_const(params), "Eq (2.2)"
        out.w, prov["w"] = w_const(params), "Eq (2.3)"
        if 1.0 <= p <= 2.0:
            out.z, prov["z"] = z_const(params, p), "Eq (2.3)"
    if params.lower_valid:
        out.Y, prov["Y"] = y_const(params), "Eq (3.6)"
        if 1.0 <= p <= 2.0:
            out.lower37, prov["lower37"] = lower_bound_37(params, p), "Eq (3.7)"
    if mu is not None and params.thm21_valid:
        try:
            th = theta_const(params, p, mu)
        except ConstraintError:
            th = None
        if th is not None:
            out.theta, prov["theta"] = th.as_written, "Eq (4.4)"
            out.m, prov["m"] = th.halfline, "oracle: Eq (4.7) on (0, inf)"
            out.m_fullline, prov["m_fullline"] = th.fullline, "oracle: Eq (4.7) on R"
        if params.lower_valid:
            try:
                out.lower49, prov["lower49"] = lower_bound_49(params, p, mu), "Eq (4.9)"
            except ConstraintError:
                pass
    return out


def v_quadrature(params: TransformParams, rel_tol=1e-12) -> float:
    """Direct quadrature of the integral defining ``v`` (oracle route)."""
    params.require_thm21()
    return _m_integral(TransformParams(1.0, params.power - 1.0), 0.5, params.power,
                       rel_tol=rel_tol)


def y_quadrature(params: TransformParams, rel_tol=1e-13) -> float:
    """Direct quadrature of the integral defining ``Y`` (oracle route)."""
    params.require_lower()
    k, e = params.kappa, params.power
    return integrate(lambda z: np.exp(-e * np.log1p(z / k)), [0.0, 0.5, 1.0],
                     rel_tol=rel_tol).value
