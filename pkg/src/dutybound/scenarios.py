"""Packaged experiments: the ethical sugar market, the three-era path with a
forbidden good, and the conspicuous-ethics demand probe.

The sugar market is share-based rather than equilibrium-based: prices are
exogenous (with a tariff shock that cheapens the conventional variant) and
the question is whether the ethical variant's market share stays above the
producer's viability threshold. The ethical-consumer count is deterministic
in the share parameter (round(phi * N)); only willingness-to-pay draws use
the seed, so survival is monotone in phi by construction and the critical
mass is well defined per configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .economy import Agent, Fiber, demand
from .errors import NonMonotoneSurvival
from .transition import BasePath, EconomyTemplate, GenerationProfile, TraceRecord, run_path


@dataclass(frozen=True)
class SugarMarketConfig:
    population: int = 4000
    phi: float = 0.73                     # ethical-consumer share of the population
    w_max: float = 1.0                    # WtP premium is uniform on [0, w_max]
    price_ethical: float = 1.2
    price_conventional: float = 1.0
    shock_period: int = 20                # tariff shock: conventional price drops
    price_conventional_after: float = 0.6
    viability_threshold: float = 0.03     # exit if share stays below this
    exit_consecutive: int = 3
    horizon: int = 40
    seed: int = 12345

    def __post_init__(self):
        if not 0 <= self.phi <= 1:
            raise ValueError(f"phi must lie in [0, 1], got {self.phi}")
        if min(self.price_ethical, self.price_conventional,
               self.price_conventional_after) <= 0:
            raise ValueError("prices must be positive")
        if not 0 < self.viability_threshold < 1:
            raise ValueError("viability threshold must lie strictly between 0 and 1")
        if self.shock_period > self.horizon:
            raise ValueError("the shock must land within the horizon")
        if self.population < 1 or self.horizon < 1 or self.exit_consecutive < 1:
            raise ValueError("population, horizon, and exit window must be positive")

    def with_phi(self, phi: float) -> "SugarMarketConfig":
        return SugarMarketConfig(
            population=self.population, phi=phi, w_max=self.w_max,
            price_ethical=self.price_ethical, price_conventional=self.price_conventional,
            shock_period=self.shock_period,
            price_conventional_after=self.price_conventional_after,
            viability_threshold=self.viability_threshold,
            exit_consecutive=self.exit_consecutive, horizon=self.horizon, seed=self.seed)


@dataclass
class ScenarioReport:
    shares: list[float]
    survived: bool
    collapse_period: int | None = None
    phi_star: float | None = None
    extras: dict = field(default_factory=dict)


def run_sugar(config: SugarMarketConfig) -> ScenarioReport:
    """Simulate the ethical variant's market share period by period.

    A consumer buys ethical iff flagged ethical and its WtP premium covers
    the current price gap. The variant exits once its share sits below the
    viability threshold for the configured number of consecutive periods;
    after exit the share is identically zero. Deterministic given the seed.
    """
    rng = np.random.default_rng(config.seed)
    wtp = rng.uniform(0.0, config.w_max, size=config.population)
    n_ethical = int(round(config.phi * config.population))

    shares: list[float] = []
    streak = 0
    collapse: int | None = None
    for t in range(config.horizon):
        if collapse is not None:
            shares.append(0.0)
            continue
        p_c = (config.price_conventional if t < config.shock_period
               else config.price_conventional_after)
        premium = config.price_ethical - p_c
        buyers = int(np.count_nonzero(wtp[:n_ethical] >= premium))
        share = buyers / config.population
        shares.append(share)
        if share < config.viability_threshold:
            streak += 1
            if streak >= config.exit_consecutive:
                collapse = t
        else:
            streak = 0

    return ScenarioReport(shares=shares, survived=collapse is None,
                          collapse_period=collapse)


def check_monotone_flags(flags: Sequence[bool]) -> list[tuple[int, int]]:
    """Indices (i, j) with i < j where flag i holds but flag j does not.

    An empty list certifies the flags are monotone nondecreasing, the
    precondition for bisecting a survival threshold.
    """
    witnesses = []
    first_true: int | None = None
    for j, flag in enumerate(flags):
        if flag and first_true is None:
            first_true = j
        if not flag and first_true is not None:
            witnesses.append((first_true, j))
    return witnesses


@dataclass
class CriticalMassResult:
    phi_star: float | None
    scan: list[tuple[float, bool]]
    bisect_tol: float


def estimate_critical_mass(config: SugarMarketConfig,
                           bisect_tol: float = 0.005,
                           scan_points: int = 21) -> CriticalMassResult:
    """Locate the smallest ethical share under which the variant survives.

    A coarse scan over phi first certifies survival is monotone (raising
    NonMonotoneSurvival with witnesses otherwise); bisection then pins the
    threshold within ``bisect_tol``. ``phi_star`` is None when not even
    phi = 1 survives.
    """
    phis = list(np.linspace(0.0, 1.0, scan_points))
    flags = [run_sugar(config.with_phi(phi)).survived for phi in phis]
    witnesses = check_monotone_flags(flags)
    if witnesses:
        raise NonMonotoneSurvival([(phis[i], phis[j]) for i, j in witnesses])

    scan = list(zip(phis, flags))
    if not any(flags):
        return CriticalMassResult(phi_star=None, scan=scan, bisect_tol=bisect_tol)
    first = flags.index(True)
    if first == 0:
        return CriticalMassResult(phi_star=0.0, scan=scan, bisect_tol=bisect_tol)

    lo, hi = phis[first - 1], phis[first]
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if run_sugar(config.with_phi(mid)).survived:
            hi = mid
        else:
            lo = mid
    return CriticalMassResult(phi_star=0.5 * (lo + hi), scan=scan, bisect_tol=bisect_tol)


def run_slavery_eras(template: EconomyTemplate, path: BasePath,
                     profile: GenerationProfile) -> list[TraceRecord]:
    """Solve the era path (acceptance-to-prohibition) for a forbidden good.

    Thin wrapper over the generic path runner; all postconditions are
    inherited. The canonical configuration ships with the package: three
    eras, no constraint on the tainted good in the first, a required minimum
    of the rights duty in the second, prohibition in the third, with the
    duty weight rising across eras.
    """
    return run_path(template, path, profile)


@dataclass
class VeblenCurve:
    duty_id: str
    prices: list[float]
    quantities: list[float]
    increasing_segments: list[tuple[float, float]]

    def has_increasing_segment(self) -> bool:
        return bool(self.increasing_segments)


def increasing_segments(prices: Sequence[float], quantities: Sequence[float],
                        rtol: float = 1e-7) -> list[tuple[float, float]]:
    """Maximal price intervals where quantity strictly increases in price."""
    segments = []
    start: int | None = None
    for i in range(len(prices) - 1):
        rising = quantities[i + 1] - quantities[i] > rtol * (1.0 + abs(quantities[i]))
        if rising and start is None:
            start = i
        if not rising and start is not None:
            segments.append((prices[start], prices[i]))
            start = None
    if start is not None:
        segments.append((prices[start], prices[-1]))
    return segments


def veblen_demand_curve(agent: Agent, fiber: Fiber, duty_id: str,
                        sweep: Sequence[float],
                        base_prices: Sequence[float] | None = None) -> VeblenCurve:
    """Demand for one duty across a sweep of its own price, all else fixed.

    Reports every maximal strictly-increasing interval: with the status
    weight at zero the curve is never upward sloping, so a detected segment
    is the conspicuous-ethics signature.
    """
    if duty_id not in fiber.duties:
        raise ValueError(f"{duty_id!r} is not a duty dimension of fiber {fiber.y_id!r}")
    if any(p <= 0 for p in sweep):
        raise ValueError("swept prices must be positive")
    j = fiber.n + fiber.duties.index(duty_id)
    base = (np.ones(fiber.n + fiber.l) if base_prices is None
            else np.asarray(base_prices, dtype=float).copy())

    prices, quantities = [], []
    for p_e in sweep:
        p = base.copy()
        p[j] = p_e
        bundle = demand(agent, p, fiber)
        prices.append(float(p_e))
        quantities.append(float(bundle.e[j - fiber.n]))

    return VeblenCurve(duty_id=duty_id, prices=prices, quantities=quantities,
                       increasing_segments=increasing_segments(prices, quantities))
