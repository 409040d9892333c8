"""Walrasian equilibria of one fiber economy.

Price system: one coordinate per good and duty dimension. The first tradable
good is the numeraire (price pinned at one); duty prices are exogenous
(perfectly elastic supply of fulfillment opportunities at the configured
price); demonetized goods (forbidden regime-wide) have no market.

Value accounting closes through an outside sink: prior-claim payments and
duty expenditure are collected by creditors and duty counterparties, who
absorb numeraire. The sink therefore appears as extra demand on the
numeraire market, which makes Walras' law an exact identity at every price
vector and lets economies with active duties actually clear.

Besides the tatonnement solver there is an exhaustive price-grid oracle for
low-dimensional fibers (the independent check used throughout the tests) and
the equilibrium index, the sign of det(-J) of truncated excess demand - the
desk-scale handle on multiplicity: indices over all equilibria of a regular
economy sum to +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .economy import ExtendedBundle, FiberEconomy
from .errors import DimensionTooLarge, SingularJacobian

DEFAULT_STEP = 0.1
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000
PRICE_FLOOR = 1e-9
WALRAS_RTOL = 1e-10


@dataclass(frozen=True)
class PriceVector:
    """Strictly positive prices over a fiber's dimensions, numeraire pinned at 1."""

    values: np.ndarray
    dims: tuple[str, ...]
    numeraire_index: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.dims),):
            raise ValueError("price vector does not match its dimension list")
        if np.any(values <= 0):
            raise ValueError("prices must be strictly positive")

    @classmethod
    def normalized(cls, values, dims, numeraire_index=0) -> "PriceVector":
        values = np.asarray(values, dtype=float)
        return cls(values=values / values[numeraire_index], dims=tuple(dims),
                   numeraire_index=numeraire_index)

    def of(self, dim: str) -> float:
        return float(self.values[self.dims.index(dim)])


@dataclass
class IterateRecord:
    iteration: int
    residual: float
    walras_gap: float
    step: float


@dataclass
class EquilibriumResult:
    prices: PriceVector
    allocations: dict[str, ExtendedBundle]
    residual: float
    iterations: int
    converged: bool
    index: int | None = None
    diagnostics: list[IterateRecord] = field(default_factory=list)

    def walras_gaps(self) -> list[float]:
        return [rec.walras_gap for rec in self.diagnostics]


def _z(economy, prices: np.ndarray) -> np.ndarray:
    """Dispatch: a custom economy may supply its own excess-demand map."""
    custom = getattr(economy, "excess_demand", None)
    if custom is not None:
        return np.asarray(custom(prices), dtype=float)
    return excess_demand(economy, prices)


def excess_demand(economy: FiberEconomy, prices) -> np.ndarray:
    """Aggregate excess demand, sink included.

    Per good: total demand minus total endowment. Duty coordinates are zero
    by construction (elastic supply), demonetized goods have no market, and
    the sink's numeraire absorption closes the accounts so that p.z = 0 holds
    identically whenever every agent exhausts its budget.
    """
    p = np.asarray(getattr(prices, "values", prices), dtype=float)
    fiber = economy.fiber
    n = fiber.n
    demands = economy.demands(p)

    z = np.zeros(len(economy.dims))
    total_x = np.zeros(n)
    for a in economy.agents:
        total_x += demands[a.id].x
    z[:n] = total_x - economy.total_endowment()

    forbidden = fiber.forbidden_goods()
    for i, g in enumerate(fiber.goods):
        if g in forbidden:
            z[i] = 0.0

    sink = fiber.constraints.prior_claim_total * len(economy.agents)
    for a in economy.agents:
        sink += float(p[n:] @ demands[a.id].e)
    z[economy.numeraire_index] += sink / p[economy.numeraire_index]
    return z


def walras_gap(prices: np.ndarray, z: np.ndarray) -> float:
    """Relative violation of Walras' law at one price vector."""
    p = np.asarray(getattr(prices, "values", prices), dtype=float)
    return abs(float(p @ z)) / (1.0 + float(np.abs(p) @ np.abs(z)))


def solve_tatonnement(economy, p0=None, step: float = DEFAULT_STEP,
                      tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> EquilibriumResult:
    """Iterate p <- normalize(p + step * z(p)) until markets clear.

    Only tradable non-numeraire good prices move (duty and demonetized
    coordinates have zero excess demand; the numeraire market is implied by
    Walras' law). The step halves whenever the residual fails to improve and
    creeps back toward the configured value while improving; each update is
    clamped to the band [p/2, 2p], positivity plus a trust region, so one
    oversized excess demand cannot catapult a price out of range. The best
    iterate is kept, so a non-converged run still returns full diagnostics
    with ``converged=False``.
    """
    if step <= 0 or tol <= 0:
        raise ValueError("step and tol must be positive")
    p = economy.initial_prices() if p0 is None else np.asarray(
        getattr(p0, "values", p0), dtype=float).copy()
    num = economy.numeraire_index
    p = p / p[num]
    free = economy.free_indices()
    step_cap = step

    diagnostics: list[IterateRecord] = []
    best_p, best_r = p.copy(), math.inf
    prev_r = math.inf
    iterations = 0
    converged = False

    for it in range(max_iter + 1):
        z = _z(economy, p)
        r = float(np.max(np.abs(z)))
        diagnostics.append(IterateRecord(it, r, walras_gap(p, z), step))
        iterations = it
        if r < best_r:
            best_r, best_p = r, p.copy()
        if r <= tol:
            converged = True
            break
        if it == max_iter:
            break
        # halve on non-improvement (an exact oscillation never strictly
        # increases the residual, so >= is what breaks limit cycles), with
        # gentle recovery toward the configured step on progress
        if r >= prev_r * (1.0 - 1e-12):
            step = max(step * 0.5, 1e-14)
        else:
            step = min(step * 1.02, step_cap)
        prev_r = r
        if free:
            p = p.copy()
            moved = np.clip(p[free] + step * z[free], 0.5 * p[free], 2.0 * p[free])
            p[free] = np.maximum(moved, PRICE_FLOOR)
            p = p / p[num]

    final_p = best_p
    prices = PriceVector.normalized(final_p, economy.dims, num)
    allocations = economy.demands(final_p) if hasattr(economy, "demands") else {}
    return EquilibriumResult(prices=prices, allocations=allocations, residual=best_r,
                             iterations=iterations, converged=converged,
                             diagnostics=diagnostics)


def solve_grid_oracle(economy, resolution: int = 200, lo: float = 0.05,
                      hi: float = 20.0, band: float = 1e-2) -> list[PriceVector]:
    """Exhaustive scan of normalized price grids for fibers with at most
    three priced dimensions; the independent verification route.

    Scans a geometric grid over the free prices, keeps local minima of the
    residual norm below ``band``, and sharpens sign changes by bisection
    (one free price) or a short damped Newton polish (two free prices).
    """
    if resolution < 10:
        raise ValueError("resolution must be at least 10 points per dimension")
    free = list(economy.free_indices())
    priced = len(free) + 1
    if priced > 3:
        raise DimensionTooLarge(priced, 3)

    base = economy.initial_prices().astype(float)
    base = base / base[economy.numeraire_index]

    def full(values: Sequence[float]) -> np.ndarray:
        p = base.copy()
        for idx, v in zip(free, values):
            p[idx] = v
        return p

    def residual_at(values) -> float:
        return float(np.max(np.abs(_z(economy, full(values)))))

    if not free:
        return [PriceVector.normalized(base, economy.dims, economy.numeraire_index)] \
            if residual_at([]) <= band else []

    grid = np.geomspace(lo, hi, resolution)
    found: list[np.ndarray] = []

    if len(free) == 1:
        k = free[0]
        zs = np.array([_z(economy, full([g]))[k] for g in grid])
        rs = np.array([residual_at([g]) for g in grid])
        for i in range(resolution - 1):
            if zs[i] == 0.0:
                found.append(np.array([grid[i]]))
            elif zs[i] * zs[i + 1] < 0:
                a, b = grid[i], grid[i + 1]
                za = zs[i]
                for _ in range(80):
                    mid = math.sqrt(a * b)
                    zm = _z(economy, full([mid]))[k]
                    if zm == 0.0:
                        a = b = mid
                        break
                    if (zm > 0) == (za > 0):
                        a, za = mid, zm
                    else:
                        b = mid
                found.append(np.array([math.sqrt(a * b)]))
        if zs[-1] == 0.0:
            found.append(np.array([grid[-1]]))
        # tangential near-equilibria: interior local minima below the band
        # that no sign change already covers
        for i in range(1, resolution - 1):
            if rs[i] <= band and rs[i] < rs[i - 1] and rs[i] <= rs[i + 1]:
                if not any(grid[i - 1] <= f[0] <= grid[i + 1] for f in found):
                    found.append(np.array([grid[i]]))
    else:
        rs = np.empty((resolution, resolution))
        for i, gi in enumerate(grid):
            for j, gj in enumerate(grid):
                rs[i, j] = residual_at([gi, gj])
        for i in range(resolution):
            for j in range(resolution):
                if rs[i, j] > band:
                    continue
                window = rs[max(i - 1, 0): i + 2, max(j - 1, 0): j + 2]
                if rs[i, j] <= window.min():
                    found.append(_newton_polish(economy, free, full,
                                                np.array([grid[i], grid[j]])))

    # dedupe: points within two grid steps (geometric) are the same equilibrium
    step_ratio = (hi / lo) ** (1.0 / (resolution - 1))
    unique: list[np.ndarray] = []
    for cand in found:
        if any(np.all(np.abs(np.log(cand / u)) < 2.001 * math.log(step_ratio))
               for u in unique):
            continue
        unique.append(cand)

    return [PriceVector.normalized(full(u), economy.dims, economy.numeraire_index)
            for u in sorted(unique, key=lambda v: tuple(v))]


def _newton_polish(economy, free, full, values: np.ndarray, iters: int = 60) -> np.ndarray:
    h = 1e-6
    for _ in range(iters):
        p = full(values)
        zf = _z(economy, p)[free]
        if np.max(np.abs(zf)) < 1e-12:
            break
        J = np.empty((len(free), len(free)))
        for col, idx in enumerate(free):
            bumped = values.copy()
            bumped[col] = values[col] + h
            zp = _z(economy, full(bumped))[free]
            bumped[col] = values[col] - h
            zm = _z(economy, full(bumped))[free]
            J[:, col] = (zp - zm) / (2 * h)
        try:
            delta = np.linalg.solve(J, -zf)
        except np.linalg.LinAlgError:
            break
        # damped update, keep prices positive
        scale = 1.0
        while np.any(values + scale * delta <= 0) and scale > 1e-6:
            scale *= 0.5
        values = values + scale * delta
    return values


def equilibrium_index(economy, p_star, h: float = 1e-5,
                      residual_tol: float = 1e-6,
                      singular_rtol: float = 1e-8) -> int:
    """Sign of det(-J) at an equilibrium, J the central-difference Jacobian of
    truncated excess demand (numeraire row and column removed).

    +1 marks a regular equilibrium oriented like a unique one; the indices of
    all equilibria of a regular economy sum to +1. Near-singular Jacobians
    (|det| below ``singular_rtol`` times the Hadamard row bound) are refused.
    """
    p = np.asarray(getattr(p_star, "values", p_star), dtype=float)
    z0 = _z(economy, p)
    if float(np.max(np.abs(z0))) > residual_tol:
        raise ValueError("equilibrium_index needs a market-clearing price vector")
    free = list(economy.free_indices())
    if not free:
        return +1

    J = np.empty((len(free), len(free)))
    for col, idx in enumerate(free):
        up = p.copy()
        up[idx] += h
        down = p.copy()
        down[idx] -= h
        J[:, col] = (_z(economy, up)[free] - _z(economy, down)[free]) / (2 * h)

    det = float(np.linalg.det(-J))
    # Hadamard row bound, floored at one so a vanishing Jacobian still counts
    # as singular at economic scales
    scale = max(float(np.prod(np.linalg.norm(J, axis=1))), 1.0)
    threshold = singular_rtol * scale
    if abs(det) < threshold:
        raise SingularJacobian(det, threshold)
    return +1 if det > 0 else -1


def trade_volumes(economy: FiberEconomy, allocations: dict[str, ExtendedBundle]) -> dict[str, float]:
    """Units of each good changing hands: the gross purchases across agents."""
    volumes: dict[str, float] = {}
    for i, g in enumerate(economy.fiber.goods):
        bought = 0.0
        for a in economy.agents:
            bought += max(allocations[a.id].x[i] - a.endowment.get(g, 0.0), 0.0)
        volumes[g] = bought
    return volumes


def duty_expenditure_share(economy: FiberEconomy, prices,
                           allocations: dict[str, ExtendedBundle]) -> float:
    """Fraction of aggregate disposable income spent on imperfect duties."""
    p = np.asarray(getattr(prices, "values", prices), dtype=float)
    fiber = economy.fiber
    spend = 0.0
    income = 0.0
    for a in economy.agents:
        spend += float(p[fiber.n:] @ allocations[a.id].e)
        tradable = set(fiber.tradable_goods())
        for i, g in enumerate(fiber.goods):
            if g in tradable:
                income += p[i] * a.endowment.get(g, 0.0)
        income -= fiber.constraints.prior_claim_total
    return spend / income if income > 0 else 0.0
