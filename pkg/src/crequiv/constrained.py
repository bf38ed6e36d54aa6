"""Joint maximum likelihood of both groups on the similarity margin.

Maximises ``logL_1 + logL_2`` subject to
``max_j sup_t |alpha1_j(t) - alpha2_j(t)| = delta``.

Both log-likelihoods are sums of per-transition blocks, so the problem
splits by transition. If every unconstrained distance is below ``delta``,
the optimum moves exactly one transition pair out to the margin (the one
that costs least likelihood) and keeps the rest at their MLEs. Pairs above
``delta`` must all be pulled in to it. Each pair problem is solved with an
exterior quadratic penalty ladder and then projected exactly onto the
constraint.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .data import CensoringModel, Sample
from .distance import GRID_POINTS, T_MIN, global_distance, sup_norm_diff
from .hazards import (
    CompetingRisksModel,
    IntensityFamily,
    ParameterDomainError,
    canonical_family,
    from_unconstrained,
    intensity,
    shift_intensity,
    to_unconstrained,
)
from .likelihood import Block, FitResult, fit_mle

PENALTY_LADDER = (1e4, 1e6, 1e8, 1e10)
CONSTRAINT_TOL = 1e-6
COARSE_GRID = 201
N_RANDOM_STARTS = 3
TIE_TOL = 1e-9
_BIG = 1e300


class ConstrainedFitError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3g})")
        self.best_residual = best_residual


@dataclass(frozen=True)
class ConstrainedFitResult:
    model1: CompetingRisksModel
    model2: CompetingRisksModel
    joint_logL: float
    unconstrained_logL: float
    achieved_distance: float
    constraint_residual: float
    converged: bool
    moved: tuple[int, ...] = ()


@dataclass(frozen=True)
class _PairSolution:
    spec1: IntensityFamily
    spec2: IntensityFamily
    loglik: float
    distance: float
    residual: float


class _Pair:
    """One transition's two blocks and the distance constraint between them."""

    def __init__(self, b1: Block, b2: Block, family: str, tau: float, grid: int, t_min: float):
        self.b1, self.b2, self.family = b1, b2, family
        self.tau, self.grid, self.t_min = tau, grid, t_min
        self.dim = 1 if family == "exponential" else 2

    def split(self, z):
        return z[: self.dim], z[self.dim:]

    def specs(self, z):
        x1, x2 = self.split(z)
        return (
            from_unconstrained(self.family, x1, self.b1.t_ref),
            from_unconstrained(self.family, x2, self.b2.t_ref),
        )

    def join(self, s1: IntensityFamily, s2: IntensityFamily) -> np.ndarray:
        return np.concatenate([to_unconstrained(s1, self.b1.t_ref), to_unconstrained(s2, self.b2.t_ref)])

    def neg_loglik(self, z) -> float:
        x1, x2 = self.split(z)
        return self.b1.neg_loglik(self.family, x1) + self.b2.neg_loglik(self.family, x2)

    def distance(self, z, exact: bool = True) -> float:
        s1, s2 = self.specs(z)
        if exact:
            return sup_norm_diff(s1, s2, self.tau, self.grid, self.t_min).value
        return sup_norm_diff(s1, s2, self.tau, COARSE_GRID, self.t_min, refine=False).value

    def shifted(self, z, c: float) -> np.ndarray:
        """Scale intensity 1 by ``exp(c)`` and intensity 2 by ``exp(-c)``."""
        x1, x2 = self.split(z)
        return np.concatenate([shift_intensity(self.family, x1, c), shift_intensity(self.family, x2, -c)])

    def sign_at_max(self, z) -> float:
        s1, s2 = self.specs(z)
        t = sup_norm_diff(s1, s2, self.tau, self.grid, self.t_min).argmax_t
        return 1.0 if intensity(s1, t) >= intensity(s2, t) else -1.0


def _safe(f, fail=_BIG):
    def wrapped(*args):
        try:
            with np.errstate(all="ignore"):
                v = f(*args)
        except (ParameterDomainError, OverflowError, FloatingPointError):
            return fail
        return v if np.isfinite(v) else fail

    return wrapped


def _solve_root(g, lo: float, hi: float) -> float | None:
    """Root of ``g`` bracketed by expanding from ``lo`` toward ``hi``."""
    glo = g(lo)
    if not np.isfinite(glo):
        return None
    if glo == 0:
        return lo
    a, ga = lo, glo
    b = lo + (hi - lo) * 1e-6
    for _ in range(80):
        gb = g(b)
        if not np.isfinite(gb):
            return None
        if np.sign(gb) != np.sign(ga):
            return brentq(g, a, b, xtol=1e-14, rtol=1e-14, maxiter=200) if gb != 0 else b
        if (b - lo) / (hi - lo) >= 1.0:
            return None
        a, ga = b, gb
        b = lo + min((b - lo) * 2.0, hi - lo)
    return None


def _feasible_starts(pair: _Pair, z_hat: np.ndarray, d_hat: float, delta: float) -> list[np.ndarray]:
    starts = []
    if d_hat < delta:
        for sigma in (1.0, -1.0):
            g = _safe(lambda c: pair.distance(pair.shifted(z_hat, sigma * c)) - delta, np.nan)
            c = _solve_root(g, 0.0, 50.0)
            if c is not None:
                starts.append(pair.shifted(z_hat, sigma * c))
    else:
        x1, x2 = pair.split(z_hat)
        # move both curves toward their midpoint until the gap equals delta
        mid = lambda s: np.concatenate([x1 + 0.5 * s * (x2 - x1), x2 - 0.5 * s * (x2 - x1)])
        g = _safe(lambda s: pair.distance(mid(s)) - delta, np.nan)
        s = _solve_root(g, 0.0, 1.0)
        if s is not None:
            starts.append(mid(s))
    return starts


def _project(pair: _Pair, z: np.ndarray, z_hat: np.ndarray, delta: float) -> np.ndarray | None:
    """Move ``z`` onto ``distance == delta``, first by an intensity shift, then along the segment from ``z_hat``."""
    sigma = pair.sign_at_max(z)
    g = _safe(lambda c: pair.distance(pair.shifted(z, sigma * c)) - delta, np.nan)
    d0 = g(0.0)
    if not np.isfinite(d0):
        return None
    if abs(d0) <= 1e-15:
        return z
    c = _solve_root(g, 0.0, 5.0) if d0 < 0 else _solve_root(g, 0.0, -5.0)
    if c is not None:
        return pair.shifted(z, sigma * c)
    line = lambda s: z_hat + s * (z - z_hat)
    h = _safe(lambda s: pair.distance(line(s)) - delta, np.nan)
    s = _solve_root(h, 0.0, 64.0)
    return None if s is None else line(s)


def _solve_pair(pair: _Pair, z_hat: np.ndarray, delta: float, n_random: int, seed: int) -> _PairSolution | None:
    d_hat = pair.distance(z_hat)
    starts = _feasible_starts(pair, z_hat, d_hat, delta)
    rng = np.random.default_rng(seed)
    base = list(starts) if starts else [z_hat]
    for i in range(n_random):
        starts.append(base[i % len(base)] + rng.normal(0.0, 0.05, size=z_hat.size))

    nll = _safe(pair.neg_loglik)
    best = None
    best_residual = np.inf
    for z0 in starts:
        z = np.asarray(z0, dtype=float)
        for kappa in PENALTY_LADDER:
            obj = _safe(lambda zz, kappa=kappa: nll(zz) + kappa * (pair.distance(zz, exact=False) - delta) ** 2)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = minimize(
                    obj, z, method="Nelder-Mead",
                    options={"xatol": 1e-9, "fatol": 1e-11, "maxfev": 400 * z.size, "adaptive": z.size > 2},
                )
            if res.fun < _BIG:
                z = res.x
        zp = _project(pair, z, z_hat, delta)
        if zp is None:
            continue
        dist = pair.distance(zp)
        residual = abs(dist - delta)
        best_residual = min(best_residual, residual)
        ll = -pair.neg_loglik(zp)
        if residual <= CONSTRAINT_TOL and (best is None or ll > best.loglik):
            s1, s2 = pair.specs(zp)
            best = _PairSolution(s1, s2, ll, dist, residual)
    if best is None:
        raise ConstrainedFitError("no start reached the constraint surface", best_residual)
    return best


def fit_constrained(
    s1: Sample,
    s2: Sample,
    families: Sequence[str],
    delta: float,
    censoring: CensoringModel | None = None,
    fits: tuple[FitResult, FitResult] | None = None,
    transition: int | None = None,
    n_random: int = N_RANDOM_STARTS,
    grid: int = GRID_POINTS,
    t_min: float = T_MIN,
) -> ConstrainedFitResult:
    """Constrained estimates of both groups' intensities on the margin ``delta``.

    With ``transition`` (1-based) only that transition's distance is held at
    ``delta``, as in a single-transition test. Censoring parameters are not
    touched; ``censoring`` is accepted only for symmetry with ``fit_mle``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    families = [canonical_family(f) for f in families]
    if s1.k != s2.k or len(families) != s1.k:
        raise ValueError("samples and families disagree on k")
    if fits is None:
        fits = (fit_mle(s1, families), fit_mle(s2, families))
    f1, f2 = fits
    tau = s1.horizon
    dist = global_distance(f1.model, f2.model, grid, t_min)
    d_j = [s.value for s in dist.per_transition]
    unconstrained = f1.logL + f2.logL

    if transition is not None:
        if dist.per_transition[transition - 1].value == delta:
            candidates = []
        else:
            candidates = [transition]
        mandatory = True
    elif any(d > delta for d in d_j):
        candidates = [j for j, d in enumerate(d_j, start=1) if d > delta]
        mandatory = True
    elif dist.d_hat == delta:
        candidates, mandatory = [], True
    else:
        candidates, mandatory = list(range(1, s1.k + 1)), False

    solutions: dict[int, _PairSolution] = {}
    losses: dict[int, float] = {}
    for j in candidates:
        b1, b2 = Block.for_transition(s1, j), Block.for_transition(s2, j)
        pair = _Pair(b1, b2, families[j - 1], tau, grid, t_min)
        spec1, spec2 = f1.model.transitions[j - 1], f2.model.transitions[j - 1]
        z_hat = pair.join(spec1, spec2)
        sol = _solve_pair(pair, z_hat, delta, n_random, seed=j)
        solutions[j] = sol
        losses[j] = (b1.loglik(spec1) + b2.loglik(spec2)) - sol.loglik

    if mandatory:
        moved = candidates
    else:
        least = min(losses.values())
        ties = [j for j in candidates if losses[j] - least <= TIE_TOL * (1 + abs(least))]
        moved = [max(ties, key=lambda j: d_j[j - 1])]

    m1, m2 = f1.model, f2.model
    joint = unconstrained
    for j in moved:
        sol = solutions[j]
        m1 = m1.replace(j - 1, sol.spec1)
        m2 = m2.replace(j - 1, sol.spec2)
        joint -= losses[j]

    if transition is not None:
        achieved = sup_norm_diff(m1.transitions[transition - 1], m2.transitions[transition - 1], tau, grid, t_min).value
    else:
        achieved = global_distance(m1, m2, grid, t_min).d_hat
    residual = abs(achieved - delta)
    return ConstrainedFitResult(
        m1, m2, float(joint), float(unconstrained), float(achieved), float(residual),
        residual <= CONSTRAINT_TOL, tuple(moved),
    )


def select_bootstrap_params(
    d_hat: float,
    delta: float,
    unconstrained: tuple[CompetingRisksModel, CompetingRisksModel],
    constrained: tuple[CompetingRisksModel, CompetingRisksModel] | None,
) -> tuple[CompetingRisksModel, CompetingRisksModel]:
    """Unconstrained estimates when ``d_hat >= delta``, constrained ones otherwise."""
    if d_hat >= delta:
        return unconstrained
    if constrained is None:
        raise ValueError("constrained estimates are required when d_hat < delta")
    return constrained
