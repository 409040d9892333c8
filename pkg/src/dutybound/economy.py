"""Fibers, agents, duty-feasible budgets, and individual demand.

A fiber is the economy attached to one ethical regime: its good dimensions,
its imperfect-duty dimensions, and the compiled perfect-duty constraints of
that regime. Constraints act on every agent in the fiber.

Modeling conventions that the numbers below depend on:

* Imperfect duties are priced: fulfilling one unit of duty j costs its
  configured price (a donation costs its amount, time costs a wage), paid
  out of the same budget as goods.
* A prior claim is paid off the top of income before anything else; claims
  exceeding income make the feasible set empty, which is reported rather
  than clipped.
* A good forbidden by the regime is demonetized: nobody may consume it, so
  it carries no market value and endowments of it contribute no income.
* Agents hold endowments of goods only; duty fulfillment starts at zero.

Demand maximizes the chosen utility family over the duty-feasible budget
set. Both families are concave in the bundle, so the exact optimum follows
from the first-order conditions: every coordinate is a known decreasing
function of the income multiplier, clipped at its lower bound, and the
multiplier itself is found by bisection on the budget identity. FORBID
coordinates are exactly zero and REQUIRE_MIN bounds are met exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .duty import ConstraintSet, DutyKind
from .errors import (
    DimensionMismatch,
    InfeasibleDutySet,
    NegativeInput,
    NoConvergence,
    NonPositivePrice,
    UnknownReference,
)
from .preferences import EPSILON, axiom1_utility


class UtilityFamily(enum.Enum):
    COBB_DOUGLAS_EXTENDED = "COBB_DOUGLAS_EXTENDED"
    VEBLEN_PRICE_DEPENDENT = "VEBLEN_PRICE_DEPENDENT"


@dataclass(frozen=True)
class UtilitySpec:
    """Utility family plus weights, keyed by dimension id.

    VEBLEN adds a status term to the extended Cobb-Douglas: paying more than
    the reference price for a duty is itself valued (moral capital), which is
    what lets demand slope upward in its own price.
    """

    family: UtilityFamily
    alpha: dict[str, float]
    beta: dict[str, float] = field(default_factory=dict)
    reference_premium: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        weights = list(self.alpha.values()) + list(self.beta.values())
        if any(w < 0 for w in weights):
            raise NegativeInput("utility weights")
        if not sum(self.alpha.values()) > 0:
            raise ValueError("alpha weights must sum to a positive value")

    def alpha_for(self, goods: Sequence[str]) -> np.ndarray:
        return np.array([self.alpha.get(g, 0.0) for g in goods])

    def beta_for(self, duties: Sequence[str]) -> np.ndarray:
        return np.array([self.beta.get(d, 0.0) for d in duties])

    def p_bar_for(self, duties: Sequence[str]) -> np.ndarray:
        return np.array([self.reference_premium.get(d, 1.0) for d in duties])


@dataclass(frozen=True)
class ExtendedBundle:
    """A point (x, e) of the extended space: goods quantities plus duty levels."""

    x: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        e = np.atleast_1d(np.asarray(self.e, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "e", e)
        if np.any(x < 0) or np.any(e < 0):
            raise NegativeInput("bundle coordinates")

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.e])

    @property
    def dims(self) -> int:
        return self.x.size + self.e.size

    @classmethod
    def zeros(cls, n: int, l: int) -> "ExtendedBundle":
        return cls(x=np.zeros(n), e=np.zeros(l))


@dataclass(frozen=True)
class Fiber:
    """The economy attached to one base point.

    Fibers at different base points may differ in both their goods and their
    duty dimensions; each carries its own compiled constraint set.
    """

    y_id: str
    goods: tuple[str, ...]
    duties: tuple[str, ...]
    constraints: ConstraintSet = field(default_factory=ConstraintSet)

    def __post_init__(self):
        if len(self.goods) < 1:
            raise ValueError("a fiber needs at least one good")
        dims = set(self.goods) | set(self.duties)
        if len(dims) != len(self.goods) + len(self.duties):
            raise ValueError("good and duty ids must be distinct")
        for c in self.constraints.constraints:
            if c.target not in dims:
                raise UnknownReference(c.target, f"fiber {self.y_id!r}")
            if c.kind is DutyKind.FORBID and c.target not in self.goods:
                raise UnknownReference(c.target, f"fiber {self.y_id!r} (FORBID targets goods)")

    @property
    def n(self) -> int:
        return len(self.goods)

    @property
    def l(self) -> int:
        return len(self.duties)

    @property
    def dims(self) -> tuple[str, ...]:
        return self.goods + self.duties

    def forbidden_goods(self) -> frozenset[str]:
        return self.constraints.forbidden()

    def tradable_goods(self) -> tuple[str, ...]:
        forbidden = self.forbidden_goods()
        return tuple(g for g in self.goods if g not in forbidden)

    def lower_bound_vector(self) -> np.ndarray:
        bounds = self.constraints.lower_bounds()
        return np.array([bounds.get(d, 0.0) for d in self.dims])

    def values_of(self, bundle: ExtendedBundle) -> dict[str, float]:
        if bundle.x.size != self.n or bundle.e.size != self.l:
            raise DimensionMismatch(self.n + self.l, bundle.dims)
        return dict(zip(self.dims, bundle.coords))


@dataclass(frozen=True)
class Agent:
    """One consumer: endowment over goods, a utility spec, and the two
    ethical intensity parameters (generational duty weight, status weight)."""

    id: str
    endowment: dict[str, float]
    utility: UtilitySpec
    lam: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for g, q in self.endowment.items():
            if not math.isfinite(q) or q < 0:
                raise NegativeInput(f"endowment of {g!r} for agent {self.id!r}")
        if self.lam < 0 or self.theta < 0:
            raise NegativeInput(f"lambda/theta for agent {self.id!r}")

    def endowment_for(self, goods: Sequence[str]) -> np.ndarray:
        return np.array([self.endowment.get(g, 0.0) for g in goods])

    def with_lam(self, lam: float) -> "Agent":
        return Agent(id=self.id, endowment=self.endowment, utility=self.utility,
                     lam=lam, theta=self.theta)

    def with_endowment(self, endowment: dict[str, float]) -> "Agent":
        return Agent(id=self.id, endowment=dict(endowment), utility=self.utility,
                     lam=self.lam, theta=self.theta)


def _as_price_array(prices, dims: int) -> np.ndarray:
    p = np.asarray(getattr(prices, "values", prices), dtype=float)
    if p.shape != (dims,):
        raise DimensionMismatch(dims, p.size, "price vector")
    return p


def disposable_income(agent: Agent, prices, fiber: Fiber) -> float:
    """Income from tradable endowments net of the regime's prior claims.

    Negative disposable income means the claims cannot be met: the feasible
    set is empty and this is surfaced, never clipped.
    """
    p = _as_price_array(prices, fiber.n + fiber.l)
    tradable = set(fiber.tradable_goods())
    mask = np.array([g in tradable for g in fiber.goods])
    income = float(np.sum(p[: fiber.n][mask] * agent.endowment_for(fiber.goods)[mask]))
    w = income - fiber.constraints.prior_claim_total
    if w < 0:
        raise InfeasibleDutySet(agent.id, f"prior claims {fiber.constraints.prior_claim_total:g} "
                                          f"exceed income {income:g}")
    return w


def feasible(agent: Agent, prices, fiber: Fiber, candidate: ExtendedBundle) -> bool:
    """Duty-feasibility: inside the post-claim budget and every predicate holds."""
    p = _as_price_array(prices, fiber.n + fiber.l)
    values = fiber.values_of(candidate)
    if not fiber.constraints.feasible(values):
        return False
    w = disposable_income(agent, p, fiber)
    cost = float(p @ candidate.coords)
    return cost <= w + 1e-12 * (1.0 + abs(w))


def utility_value(spec: UtilitySpec, x, e, prices, fiber: Fiber,
                  lam: float = 1.0, theta: float = 0.0) -> float:
    """Evaluate a utility spec at a bundle (prices matter only for VEBLEN)."""
    alpha = spec.alpha_for(fiber.goods)
    beta = spec.beta_for(fiber.duties)
    value = axiom1_utility(x, e, alpha, beta, lam)
    if spec.family is UtilityFamily.VEBLEN_PRICE_DEPENDENT and fiber.l:
        p = _as_price_array(prices, fiber.n + fiber.l)
        p_duty = p[fiber.n:]
        for d, pe in zip(fiber.duties, p_duty):
            if pe <= 0:
                raise NonPositivePrice(d, float(pe))
        p_bar = spec.p_bar_for(fiber.duties)
        value += theta * float(np.dot(np.asarray(e, dtype=float), p_duty - p_bar))
    return value


def agent_utility(agent: Agent, bundle: ExtendedBundle, prices, fiber: Fiber) -> float:
    return utility_value(agent.utility, bundle.x, bundle.e, prices, fiber,
                         lam=agent.lam, theta=agent.theta)


def demand(agent: Agent, prices, fiber: Fiber) -> ExtendedBundle:
    """Utility-maximizing bundle on the agent's duty-feasible budget set.

    First-order conditions per coordinate, given the income multiplier mu:

        goods:   x_i = alpha_i / (mu p_i) - eps
        duties:  e_j = lam beta_j / (mu p_j - theta (p_j - pbar_j)) - 1

    each clipped below at its REQUIRE_MIN bound (zero by default) and pinned
    to zero when forbidden. Total spending is strictly decreasing in mu, so
    the budget identity pins mu by bisection; both utility families spend the
    whole disposable budget whenever some free dimension has positive weight.
    Flat problems (all free weights zero) settle on the lexicographically
    smallest vector, i.e. every coordinate at its bound.
    """
    dims = fiber.n + fiber.l
    p = _as_price_array(prices, dims)
    if np.any(p <= 0):
        bad = int(np.argmin(p))
        raise NonPositivePrice(fiber.dims[bad], float(p[bad]))

    w = disposable_income(agent, p, fiber)
    lb = fiber.lower_bound_vector()
    forbidden = np.array([d in fiber.forbidden_goods() for d in fiber.dims])
    if np.any(lb[forbidden] > 0):
        bad = fiber.dims[int(np.flatnonzero(forbidden & (lb > 0))[0])]
        raise InfeasibleDutySet(agent.id, f"{bad!r} is both forbidden and required")
    lb = np.where(forbidden, 0.0, lb)

    fixed_cost = float(p @ lb)
    if fixed_cost > w * (1 + 1e-12) + 1e-12:
        raise InfeasibleDutySet(agent.id, f"required minima cost {fixed_cost:g} "
                                          f"but disposable income is {w:g}")
    budget_slack = w - fixed_cost

    alpha = agent.utility.alpha_for(fiber.goods)
    beta = agent.utility.beta_for(fiber.duties)
    theta = agent.theta if agent.utility.family is UtilityFamily.VEBLEN_PRICE_DEPENDENT else 0.0
    weight = np.concatenate([alpha, agent.lam * beta])
    offset = np.concatenate([np.full(fiber.n, EPSILON), np.ones(fiber.l)])
    # Status-premium tilt on duty prices; zero for goods and for theta = 0.
    tilt = np.concatenate([np.zeros(fiber.n),
                           theta * (p[fiber.n:] - agent.utility.p_bar_for(fiber.duties))
                           if fiber.l else np.zeros(0)])

    if not np.any(tilt):
        fast = _active_set_solve(p, w, lb, forbidden, weight, offset)
        if fast is not None:
            return _bundle_from(fast, fiber)

    big = (w + 1.0) / p + lb  # any value above this overshoots the budget

    def coords_at(mu: float) -> np.ndarray:
        denom = mu * p - tilt
        with np.errstate(divide="ignore", over="ignore"):
            raw = np.where(denom > 1e-300, weight / np.maximum(denom, 1e-300) - offset, big)
        # zero-weight free coordinates sit at their bound unless the status
        # tilt alone makes them worth buying
        raw = np.where((weight == 0) & (denom > 0), lb, raw)
        out = np.maximum(raw, lb)
        return np.where(forbidden, 0.0, out)

    def spending(mu: float) -> float:
        return float(p @ coords_at(mu))

    if budget_slack <= 0:
        # the bounds exhaust the budget exactly: nothing left to allocate
        return _bundle_from(coords_at(1e300), fiber)
    if spending(1e-300) <= w * (1 + 1e-12) + 1e-12:
        # nothing worth buying beyond the bounds: lexicographically smallest point
        return _bundle_from(coords_at(1e-300), fiber)

    mu_lo, mu_hi = 1.0, 1.0
    for _ in range(400):
        if spending(mu_lo) >= w:
            break
        mu_lo /= 8.0
    else:
        raise NoConvergence(400)
    for _ in range(400):
        if spending(mu_hi) <= w:
            break
        mu_hi *= 8.0
    else:
        raise NoConvergence(400)

    for _ in range(90):
        mid = math.sqrt(mu_lo * mu_hi) if mu_lo > 0 else 0.5 * (mu_lo + mu_hi)
        if spending(mid) >= w:
            mu_lo = mid
        else:
            mu_hi = mid

    final = coords_at(0.5 * (mu_lo + mu_hi))
    residual = w - float(p @ final)
    if residual > 1e-9 * (1 + w):
        # a pure-status coordinate (zero log weight, positive premium value)
        # has constant marginal utility, so spending jumps there; the optimum
        # puts the leftover budget into the best such coordinate
        ratio = np.where((weight == 0) & (tilt > 0) & ~forbidden, tilt / p, -np.inf)
        j = int(np.argmax(ratio))
        if ratio[j] > 0:
            final = final.copy()
            final[j] += residual / p[j]
    return _bundle_from(final, fiber)


def _active_set_solve(p, w, lb, forbidden, weight, offset):
    """Exact KKT solution for the log-additive family (no status tilt).

    With spending s_k = p_k (q_k + offset_k) the interior condition is
    s_k = weight_k / mu, so mu has a closed form on any candidate active set.
    Clipping a coordinate to its bound only raises mu (the clipped coordinate
    absorbs more budget than it wanted), so violations grow monotonically and
    the loop settles in at most one round per dimension. Returns None if the
    KKT check fails, handing over to the bisection fallback.
    """
    clipped = forbidden.copy()
    coords = np.where(forbidden, 0.0, lb)
    mu = np.inf
    for _ in range(len(p) + 1):
        active = ~clipped
        total_weight = float(weight[active].sum())
        if total_weight <= 0.0:
            coords[active] = lb[active]
            return coords
        pool = w - float(p[clipped] @ coords[clipped]) \
            + float(p[active] @ offset[active])
        if pool <= 0.0:
            return None
        mu = total_weight / pool
        wanted = weight / (mu * p) - offset
        violating = active & (wanted < lb)
        if not violating.any():
            coords = np.where(active, wanted, coords)
            break
        clipped = clipped | violating
        coords = np.where(violating, lb, coords)
    else:
        return None
    # KKT check: every clipped coordinate must genuinely want no more than
    # its bound at the final multiplier
    held = clipped & ~forbidden
    if held.any():
        wanted = weight[held] / (mu * p[held]) - offset[held]
        if np.any(wanted > lb[held] + 1e-9 * (1.0 + np.abs(lb[held]))):
            return None
    return np.where(forbidden, 0.0, np.maximum(coords, lb))


def _bundle_from(coords: np.ndarray, fiber: Fiber) -> ExtendedBundle:
    return ExtendedBundle(x=coords[: fiber.n].copy(), e=coords[fiber.n:].copy())


@dataclass
class FiberEconomy:
    """A fiber plus its agents and the configured duty prices.

    Exposes the dimension layout the equilibrium solvers need: duty prices
    are exogenous (perfectly elastic supply), forbidden goods carry no
    market, and the numeraire is the first tradable good.
    """

    fiber: Fiber
    agents: tuple[Agent, ...]
    duty_prices: Mapping[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.agents = tuple(self.agents)
        if not self.agents:
            raise ValueError("an economy needs at least one agent")
        for d in self.fiber.duties:
            if self.duty_prices.get(d, 1.0) <= 0:
                raise NonPositivePrice(d, self.duty_prices.get(d, 1.0))
        if not self.fiber.tradable_goods():
            raise ValueError(f"fiber {self.fiber.y_id!r} has no tradable good to serve "
                             "as numeraire")
        for g in self.fiber.tradable_goods():
            if not any(a.endowment.get(g, 0.0) > 0 for a in self.agents):
                self.warnings.append(f"no agent holds a positive endowment of {g!r}")

    @property
    def dims(self) -> tuple[str, ...]:
        return self.fiber.dims

    @property
    def numeraire_index(self) -> int:
        return self.fiber.goods.index(self.fiber.tradable_goods()[0])

    def free_indices(self) -> list[int]:
        """Indices whose prices the solver adjusts: tradable non-numeraire goods."""
        forbidden = self.fiber.forbidden_goods()
        return [i for i, g in enumerate(self.fiber.goods)
                if g not in forbidden and i != self.numeraire_index]

    def initial_prices(self) -> np.ndarray:
        p = np.ones(len(self.dims))
        for j, d in enumerate(self.fiber.duties):
            p[self.fiber.n + j] = self.duty_prices.get(d, 1.0)
        return p

    def demands(self, prices) -> dict[str, ExtendedBundle]:
        return {a.id: demand(a, prices, self.fiber) for a in self.agents}

    def total_endowment(self) -> np.ndarray:
        total = np.zeros(self.fiber.n)
        for a in self.agents:
            total += a.endowment_for(self.fiber.goods)
        return total
