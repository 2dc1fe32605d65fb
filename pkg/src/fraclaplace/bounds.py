"""Analytic operator-norm bounds versus empirical quotients.

The empirical norm is always approached from below: every reported ratio is
``|L f|_q / |f|_p`` for an explicit witness ``f`` evaluated with the adaptive
(certified) norm routines. Cheap fixed-node estimates are used only to
screen random candidates before the winner is re-evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, DivergenceError, PreconditionError
from .funcspace import (BumpMix, FunctionSpec, PowerCutoff, atoms_lp_norm, breakpoints, dilate,
                        lp_norm, merge_atoms, weighted_atoms)
from .specfun import (BoundConstants, ExponentPair, TransformParams, compute_constants,
                      weighted_exponents)
from .transform import (FLTEngine, KernelSpec, OutputSampler, generic_kernel_values,
                        kernel_output_norm, mellin_zeta, output_norm)

P_EDGE = 0.01
SHARPNESS_TRIAL = PowerCutoff(0.5, 1.0)
_A_MARGIN = 1e-3


@dataclass(frozen=True)
class RatioResult:
    """``numerator / denominator`` with a relative error estimate."""

    value: float
    numerator: float
    denominator: float
    rel_error: float


def _as_pair(exps) -> ExponentPair:
    return exps if isinstance(exps, ExponentPair) else ExponentPair(float(exps))


def _quotient(engine: FLTEngine, denom: float, q: float) -> RatioResult:
    if denom == 0.0 or not math.isfinite(denom):
        raise DegenerateInputError(f"|f|_p = {denom:g}; the quotient is undefined")
    out = output_norm(engine, q)
    rel = out.error / out.value if out.value > 0 else 0.0
    rel = max(rel, 1e-12)
    return RatioResult(out.value / denom, out.value, denom, rel)


def ratio_result(params: TransformParams, exps, f: FunctionSpec, q: float | None = None
                 ) -> RatioResult:
    """``|L_{kappa,r} f|_q / |f|_p``; ``q`` defaults to the conjugate of ``p``."""
    exps = _as_pair(exps)
    q = exps.q if q is None else float(q)
    denom = lp_norm(f, exps.p)
    return _quotient(FLTEngine.from_function(params, f), denom, q)


def ratio(params: TransformParams, exps, f: FunctionSpec, q: float | None = None) -> float:
    """Quotient ``|L f|_q / |f|_p``; a lower estimate of the operator norm."""
    return ratio_result(params, exps, f, q).value


def weighted_ratio_result(params: TransformParams, p: float, mu: float, f: FunctionSpec
                          ) -> RatioResult:
    """``|L[t^(mu-1) f]|_Q / |f|_p`` with ``1/Q = mu - 1/p``."""
    ex = weighted_exponents(p, mu, params, strict=False)
    denom = lp_norm(f, p)
    return _quotient(FLTEngine(params, weighted_atoms(f, mu)), denom, ex.Q)


def weighted_ratio(params: TransformParams, p: float, mu: float, f: FunctionSpec) -> float:
    return weighted_ratio_result(params, p, mu, f).value


# --------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class Check:
    """One asserted inequality ``lhs <= rhs``."""

    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs)


@dataclass
class BoundReport:
    params: TransformParams
    p: float
    q: float
    constants: BoundConstants
    empirical_ratio: float
    witness: FunctionSpec
    quadrature_error_budget: float
    mu: float | None = None
    seed: int = 0
    evaluations: int = 0
    converged: bool = True
    warnings: list = field(default_factory=list)
    tolerance: float = 1e-6

    @property
    def weighted(self) -> bool:
        return self.mu is not None

    def checks(self) -> list:
        c = self.constants
        tol = max(self.tolerance, self.quadrature_error_budget * self.empirical_ratio)
        out = []
        lower = c.lower49 if self.weighted else c.lower37
        upper = c.m if self.weighted else c.z
        if lower is not None:
            name = "lower49 <= ratio" if self.weighted else "lower37 <= ratio"
            out.append(Check(name, lower - tol, self.empirical_ratio))
        if upper is not None:
            name = "ratio <= M" if self.weighted else "ratio <= z"
            out.append(Check(name, self.empirical_ratio, upper + tol))
        return out

    @property
    def ok(self) -> bool:
        return all(ch.holds for ch in self.checks())


def _key(f: FunctionSpec):
    d = f.to_dict()
    return (d["type"],) + tuple(v for k, v in sorted(d.items()) if k != "type"
                                and isinstance(v, (int, float)))


class _Search:
    """Best-so-far tracker with a deterministic tie-break."""

    def __init__(self):
        self.best = None

    def offer(self, value: float, f: FunctionSpec, result: RatioResult):
        if not math.isfinite(value):
            return
        cand = (value, _key(f), f, result)
        if self.best is None or value > self.best[0] or (
                value == self.best[0] and cand[1] < self.best[1]):
            self.best = cand


def _power_family_search(evaluate, p: float, seed: int, restarts: int, max_iter: int,
                         budget: int | None, search: _Search):
    """Nelder-Mead over the exponent ``a`` of ``PowerCutoff(a, 1)``.

    With ``q = p'`` the quotient is dilation invariant, so the cutoff ``b``
    is not a search variable.
    """
    a_hi = (1.0 - _A_MARGIN) / p
    cache = {}
    evals = [0]
    converged = True

    def objective(x):
        a = float(np.clip(x[0], 0.0, a_hi))
        if a not in cache:
            if budget is not None and evals[0] >= budget:
                return cache.get(a, 0.0)
            evals[0] += 1
            f = PowerCutoff(a, 1.0)
            res = evaluate(f)
            cache[a] = res.value
            search.offer(res.value, f, res)
        return -cache[a]

    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        x0 = rng.uniform(0.0, a_hi)
        x1 = x0 + 0.1 * a_hi if x0 < 0.9 * a_hi else x0 - 0.1 * a_hi
        opt = minimize(objective, [x0], method="Nelder-Mead", bounds=[(0.0, a_hi)],
                       options={"maxiter": max_iter, "xatol": 1e-7, "fatol": 1e-13,
                                "initial_simplex": [[x0], [x1]]})
        converged &= bool(opt.success)
        if budget is not None and evals[0] >= budget:
            converged = False
            break
    return evals[0], converged


def _bump_screen(make_engine, p: float, q: float, seed: int, samples: int, count: int,
                 evaluate, search: _Search):
    best = None
    for i in range(samples):
        f = BumpMix(seed * 100003 + i, count)
        denom = lp_norm(f, p)
        if denom == 0.0:
            continue
        est = OutputSampler(make_engine(f)).norm(q) / denom
        if best is None or est > best[0]:
            best = (est, f)
    if best is not None:
        res = evaluate(best[1])
        search.offer(res.value, best[1], res)
    return samples


def empirical_norm(params: TransformParams, exps, budget: int | None = None, seed: int = 0,
                   restarts: int = 5, max_iter: int = 200, bump_samples: int = 50,
                   bump_count: int = 3) -> BoundReport:
    """Largest quotient found over power cutoffs and seeded bump mixtures."""
    params.require_thm21()
    exps = _as_pair(exps)
    p = exps.p
    if p > 2.0 - P_EDGE + 1e-12:
        raise PreconditionError(f"p = {p:g} > 2 - {P_EDGE:g}: trial norms blow up at p = 2")
    search = _Search()

    def evaluate(f):
        return ratio_result(params, exps, f)

    res0 = evaluate(SHARPNESS_TRIAL)
    search.offer(res0.value, SHARPNESS_TRIAL, res0)
    n, converged = _power_family_search(evaluate, p, seed, restarts, max_iter, budget, search)
    n += _bump_screen(lambda f: FLTEngine.from_function(params, f), p, exps.q, seed,
                      bump_samples, bump_count, evaluate, search)
    value, _, witness, res = search.best
    report = BoundReport(params=params, p=p, q=exps.q, constants=compute_constants(params, p),
                         empirical_ratio=value, witness=witness,
                         quadrature_error_budget=res.rel_error, seed=seed, evaluations=n + 1,
                         converged=converged)
    if not converged:
        report.warnings.append("simplex search stopped before convergence (budget or iterations)")
    return report


def weighted_empirical_norm(params: TransformParams, p: float, mu: float,
                            budget: int | None = None, seed: int = 0, restarts: int = 5,
                            max_iter: int = 200, bump_samples: int = 50,
                            bump_count: int = 3) -> BoundReport:
    """Weighted analogue of :func:`empirical_norm` for ``L[t^(mu-1) f]``."""
    params.require_thm21()
    ex = weighted_exponents(p, mu, params, strict=(mu != 1.0))
    search = _Search()

    def evaluate(f):
        return weighted_ratio_result(params, p, mu, f)

    trial = PowerCutoff(0.5 * mu, 1.0)
    if 0.5 * mu * p < 1.0:
        res0 = evaluate(trial)
        search.offer(res0.value, trial, res0)
    n, converged = _power_family_search(evaluate, p, seed, restarts, max_iter, budget, search)
    n += _bump_screen(lambda f: FLTEngine(params, weighted_atoms(f, mu)), p, ex.Q, seed,
                      bump_samples, bump_count, evaluate, search)
    value, _, witness, res = search.best
    report = BoundReport(params=params, p=p, q=ex.Q, mu=mu,
                         constants=compute_constants(params, p, mu), empirical_ratio=value,
                         witness=witness, quadrature_error_budget=res.rel_error, seed=seed,
                         evaluations=n + 1, converged=converged)
    if not converged:
        report.warnings.append("simplex search stopped before convergence (budget or iterations)")
    return report


# --------------------------------------------------------------------------
# scaling and sharpness

@dataclass(frozen=True)
class ScalingProbe:
    lambda_grid: tuple
    p: float
    q_candidates: tuple
    f: FunctionSpec

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambda_grid)
        if len(set(lam)) < 2:
            raise PreconditionError("scaling probe needs at least two distinct lambda values")
        if any(not x > 0 for x in lam):
            raise PreconditionError("lambda values must be positive")
        if not self.q_candidates:
            raise PreconditionError("scaling probe needs at least one q")
        object.__setattr__(self, "lambda_grid", lam)
        object.__setattr__(self, "q_candidates", tuple(float(q) for q in self.q_candidates))


@dataclass(frozen=True)
class ScalingRow:
    q: float
    slope: float
    expected: float
    conjugate: bool

    @property
    def residual(self) -> float:
        return abs(self.slope - self.expected)


def scaling_sweep(probe: ScalingProbe, params: TransformParams) -> list:
    """Least-squares slope of ``log ratio`` against ``log lambda`` per ``q``."""
    p = probe.p
    log_lam = np.log(probe.lambda_grid)
    dilated = [dilate(probe.f, lam) for lam in probe.lambda_grid]
    denoms = [lp_norm(g, p) for g in dilated]
    engines = [FLTEngine.from_function(params, g) for g in dilated]
    rows = []
    for q in probe.q_candidates:
        vals = np.array([output_norm(e, q).value / d for e, d in zip(engines, denoms)])
        slope = float(np.polyfit(log_lam, np.log(vals), 1)[0])
        expected = 1.0 / p + 1.0 / q - 1.0
        rows.append(ScalingRow(q, slope, expected, abs(expected) < 1e-12))
    return rows


@dataclass(frozen=True)
class SharpnessRow:
    p: float
    ratio: float
    z: float
    lower37: float

    @property
    def relative(self) -> float:
        return self.ratio / self.z


def sharpness_profile(params: TransformParams, p_grid) -> list:
    """Quotient of the trial ``x^(-1/2)`` on (0, 1) against both bounds."""
    params.require_lower()
    grid = [float(p) for p in p_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("p grid must be increasing")
    if grid and grid[-1] >= 2.0:
        raise PreconditionError("p grid must stay below 2")
    consts = [compute_constants(params, p) for p in grid]
    return [SharpnessRow(p, ratio(params, p, SHARPNESS_TRIAL), c.z, c.lower37)
            for p, c in zip(grid, consts)]


# --------------------------------------------------------------------------
# generic kernels

@dataclass(frozen=True)
class HolderCheck:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-9)


HOLDER_GRID = np.logspace(-3.0, 3.0, 200)


def holder_sup_bound_check(kernel: KernelSpec, f: FunctionSpec, exps) -> HolderCheck:
    """``sup_x x^(1/q) |T_K f(x)|`` on a log grid versus ``|K|_q |f|_p``."""
    exps = _as_pair(exps)
    kq = kernel.lq_norm(exps.q)
    if not math.isfinite(kq):
        raise DivergenceError(f"|K|_q diverges for q = {exps.q:g}")
    fp = lp_norm(f, exps.p)
    if not math.isfinite(fp):
        raise DivergenceError(f"|f|_p diverges for p = {exps.p:g}")
    if fp == 0.0:
        return HolderCheck(0.0, 0.0)
    vals = np.abs(generic_kernel_values(kernel, f, HOLDER_GRID))
    lhs = float(np.max(HOLDER_GRID ** exps.inv_q * vals))
    return HolderCheck(lhs, kq * fp)


@dataclass(frozen=True)
class MellinReport:
    """Both Hardy-Mellin inequalities for one (kernel, f, p).

    The first inequality's right side is reported with the Mellin factor to
    the power 1 and to the power p; only the second inequality is asserted.
    """

    p: float
    zeta_inv_p: float
    zeta_conj: float
    first_lhs: float
    first_integral: float
    second_lhs: float
    second_rhs: float

    @property
    def first_ratio_power1(self) -> float:
        return _safe_ratio(self.first_lhs, self.zeta_inv_p * self.first_integral)

    @property
    def first_ratio_powerp(self) -> float:
        return _safe_ratio(self.first_lhs, self.zeta_inv_p ** self.p * self.first_integral)

    @property
    def second_ratio(self) -> float:
        return _safe_ratio(self.second_lhs, self.second_rhs)

    @property
    def first_fits(self) -> tuple:
        """Exponents of the Mellin factor for which the first inequality held."""
        tol = 1.0 + 1e-8
        return tuple(name for name, r in (("1", self.first_ratio_power1),
                                          ("p", self.first_ratio_powerp)) if r <= tol)

    @property
    def holds(self) -> bool:
        return self.second_ratio <= 1.0 + 1e-8


def _safe_ratio(a, b):
    if a == 0.0:
        return 0.0
    return a / b


def _is_nonnegative(f: FunctionSpec) -> bool:
    atoms = merge_atoms(f.atoms())
    if not atoms:
        return True
    pts = breakpoints(atoms)
    grid = np.concatenate([np.geomspace(1e-9 * pts[-1], pts[-1], 20001), pts])
    return bool(np.all(f(grid) >= -1e-15))


def mellin_bound_check(kernel: KernelSpec, f: FunctionSpec, p: float) -> MellinReport:
    """Evaluate both sides of the two Hardy-Mellin inequalities."""
    if not kernel.nonnegative:
        raise PreconditionError("the Hardy-Mellin inequalities need a nonnegative kernel")
    if not p > 1.0:
        raise PreconditionError("p > 1 required")
    if not _is_nonnegative(f):
        raise PreconditionError("f must be nonnegative")
    z1 = mellin_zeta(kernel, 1.0 / p)
    z2 = mellin_zeta(kernel, 1.0 - 1.0 / p)
    atoms = merge_atoms(f.atoms())
    if not atoms:
        return MellinReport(p, z1, z2, 0.0, 0.0, 0.0, 0.0)
    # int x^(p-2) |f|^p = |x^((p-2)/p) f|_p^p
    integral = atoms_lp_norm([a.weight((p - 2.0) / p) for a in atoms], p) ** p
    fp = lp_norm(f, p) ** p
    if not (math.isfinite(integral) and math.isfinite(fp)):
        raise DivergenceError("a right-hand side diverges for this f and p")
    first = kernel_output_norm(kernel, f, p) ** p
    second = kernel_output_norm(kernel, f, p, weight_exp=p - 2.0) ** p
    return MellinReport(p, z1, z2, first, integral, second, z2 ** p * fp)
