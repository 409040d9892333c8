"""Run-configuration ingestion and validation.

One JSON file describes a whole run: the maxim registry, the base space and
its fibers, the agents, solver settings, an optional path/profile, and the
scenario sections. Parsing collects every validation failure it can find
before giving up, so a bad config reports all its problems at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .duty import MaximRegistry, load_registry
from .economy import Agent, UtilityFamily, UtilitySpec
from .equilibrium import DEFAULT_MAX_ITER, DEFAULT_STEP, DEFAULT_TOL
from .errors import DutyModelError, ParseError, ValidationErrors
from .scenarios import SugarMarketConfig
from .topology import BaseSpace
from .transition import BasePath, EconomyTemplate, FiberSpec, GenerationProfile, build_path


@dataclass(frozen=True)
class VeblenProbeConfig:
    agent_id: str
    y_id: str
    duty_id: str
    sweep_lo: float
    sweep_hi: float
    sweep_count: int = 26


@dataclass(frozen=True)
class SweepConfig:
    phis: tuple[float, ...]
    premiums: tuple[float, ...]


@dataclass
class RunConfig:
    seed: int = 0
    registry: MaximRegistry | None = None
    base: BaseSpace | None = None
    opens: tuple[frozenset[str], ...] | None = None  # explicit topology override
    fiber_specs: dict[str, FiberSpec] = field(default_factory=dict)
    agents: tuple[Agent, ...] = ()
    solver_step: float = DEFAULT_STEP
    solver_tol: float = DEFAULT_TOL
    solver_max_iter: int = DEFAULT_MAX_ITER
    path: BasePath | None = None
    profile: GenerationProfile | None = None
    sugar: SugarMarketConfig | None = None
    veblen: VeblenProbeConfig | None = None
    sweep: SweepConfig | None = None
    output_dir: str = "out"
    output_formats: tuple[str, ...] = ("csv",)
    source_path: str | None = None

    def template(self) -> EconomyTemplate:
        if self.registry is None or self.base is None:
            raise DutyModelError("this run configuration has no economy sections")
        return EconomyTemplate(
            registry=self.registry, base=self.base, fiber_specs=self.fiber_specs,
            agents=self.agents, solver_step=self.solver_step,
            solver_tol=self.solver_tol, solver_max_iter=self.solver_max_iter)


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ParseError(f"key {key!r}", "duplicate key in one object")
        seen[key] = value
    return seen


def parse_and_validate(path: str | Path) -> RunConfig:
    """Load a config file, resolving every cross-reference.

    Raises ParseError for unreadable/invalid JSON and ValidationErrors with
    the complete list of problems for a well-formed but inconsistent tree.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), str(exc)) from None
    try:
        tree = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    if not isinstance(tree, Mapping):
        raise ParseError(str(path), "top level must be an object")
    config = validate_tree(tree)
    config.source_path = str(path)
    return config


def validate_tree(tree: Mapping[str, Any]) -> RunConfig:
    errors: list[str] = []
    config = RunConfig()

    seed = tree.get("seed", 0)
    if isinstance(seed, int):
        config.seed = seed
    else:
        errors.append(f"seed: must be an integer, got {seed!r}")

    if "registry" in tree:
        try:
            config.registry = load_registry(tree["registry"])
        except DutyModelError as exc:
            errors.append(f"registry: {exc}")

    if "base_space" in tree:
        try:
            points = tuple(str(p) for p in tree["base_space"])
            config.base = BaseSpace(points=points)
            if config.registry is not None:
                for y in points:
                    if y not in config.registry.bundles:
                        errors.append(f"base_space: no bundle declared for {y!r}")
        except DutyModelError as exc:
            errors.append(f"base_space: {exc}")
        except (TypeError, ValueError) as exc:
            errors.append(f"base_space: {exc}")

    if "topology" in tree:
        section = tree["topology"]
        try:
            opens = tuple(frozenset(str(y) for y in subset)
                          for subset in section["opens"])
        except (KeyError, TypeError) as exc:
            errors.append(f"topology: {exc!r}")
        else:
            if config.base is None:
                errors.append("topology: needs a base_space section")
            else:
                points = set(config.base.points)
                for subset in opens:
                    for y in subset - points:
                        errors.append(f"topology.opens: unknown base point {y!r}")
                config.opens = opens

    _validate_fibers(tree, config, errors)
    _validate_agents(tree, config, errors)
    _validate_solver(tree, config, errors)
    _validate_path(tree, config, errors)
    _validate_scenarios(tree, config, errors)

    out = tree.get("output", {})
    if isinstance(out, Mapping):
        config.output_dir = str(out.get("directory", "out"))
        formats = out.get("formats", ["csv"])
        if isinstance(formats, list) and all(f in ("csv", "svg") for f in formats):
            config.output_formats = tuple(formats)
        else:
            errors.append("output.formats: must be a list drawn from ['csv', 'svg']")
    else:
        errors.append("output: must be an object")

    if errors:
        raise ValidationErrors(errors)
    return config


def _validate_fibers(tree, config, errors):
    section = tree.get("fibers", {})
    if not isinstance(section, Mapping):
        errors.append("fibers: must be an object keyed by base point")
        return
    reg = config.registry
    for y_id, spec in section.items():
        where = f"fibers.{y_id}"
        if not isinstance(spec, Mapping):
            errors.append(f"{where}: must be an object")
            continue
        goods = tuple(spec.get("goods", ()))
        duties = tuple(spec.get("duties", ()))
        duty_prices = dict(spec.get("duty_prices", {}))
        if not goods:
            errors.append(f"{where}: needs at least one good")
            continue
        if reg is not None:
            for g in goods:
                if g not in reg.goods:
                    errors.append(f"{where}: unknown good {g!r}")
            for d in duties:
                if d not in reg.imperfect_duties:
                    errors.append(f"{where}: unknown duty {d!r}")
        for d, p in duty_prices.items():
            if d not in duties:
                errors.append(f"{where}.duty_prices: {d!r} is not a duty of this fiber")
            elif not isinstance(p, (int, float)) or p <= 0:
                errors.append(f"{where}.duty_prices: price of {d!r} must be positive")
        config.fiber_specs[str(y_id)] = FiberSpec(goods=goods, duties=duties,
                                                  duty_prices=duty_prices)
    if config.base is not None:
        for y in config.base.points:
            if y not in config.fiber_specs:
                errors.append(f"fibers: base point {y!r} has no fiber")
    if config.base is not None and config.registry is not None:
        template = EconomyTemplate(registry=config.registry, base=config.base,
                                   fiber_specs=config.fiber_specs, agents=())
        for y in config.base.points:
            if y in config.fiber_specs and y in config.registry.bundles:
                try:
                    template.fiber_at(y)
                except DutyModelError as exc:
                    errors.append(f"fibers.{y}: {exc}")
                except ValueError as exc:
                    errors.append(f"fibers.{y}: {exc}")


def _validate_agents(tree, config, errors):
    agents: list[Agent] = []
    seen: set[str] = set()
    for i, spec in enumerate(tree.get("agents", [])):
        where = f"agents[{i}]"
        if not isinstance(spec, Mapping) or "id" not in spec:
            errors.append(f"{where}: must be an object with an 'id'")
            continue
        agent_id = str(spec["id"])
        if agent_id in seen:
            errors.append(f"{where}: duplicate agent id {agent_id!r}")
            continue
        seen.add(agent_id)
        uspec = spec.get("utility", {})
        try:
            family = UtilityFamily(uspec.get("family", "COBB_DOUGLAS_EXTENDED"))
        except ValueError:
            errors.append(f"{where}.utility.family: unknown family {uspec.get('family')!r}")
            continue
        try:
            utility = UtilitySpec(family=family,
                                  alpha=dict(uspec.get("alpha", {})),
                                  beta=dict(uspec.get("beta", {})),
                                  reference_premium=dict(uspec.get("p_bar", {})))
            agent = Agent(id=agent_id, endowment=dict(spec.get("endowment", {})),
                          utility=utility, lam=float(spec.get("lambda", 0.0)),
                          theta=float(spec.get("theta", 0.0)))
        except (DutyModelError, ValueError, TypeError) as exc:
            errors.append(f"{where}: {exc}")
            continue
        if config.registry is not None:
            reg = config.registry
            for g in list(agent.endowment) + list(utility.alpha):
                if g not in reg.goods:
                    errors.append(f"{where}: unknown good {g!r}")
            for d in list(utility.beta) + list(utility.reference_premium):
                if d not in reg.imperfect_duties:
                    errors.append(f"{where}: unknown duty {d!r}")
        agents.append(agent)
    config.agents = tuple(agents)


def _validate_solver(tree, config, errors):
    solver = tree.get("solver", {})
    if not isinstance(solver, Mapping):
        errors.append("solver: must be an object")
        return
    step = solver.get("step", DEFAULT_STEP)
    tol = solver.get("tol", DEFAULT_TOL)
    max_iter = solver.get("max_iter", DEFAULT_MAX_ITER)
    if not (isinstance(step, (int, float)) and step > 0):
        errors.append(f"solver.step: must be positive, got {step!r}")
    else:
        config.solver_step = float(step)
    if not (isinstance(tol, (int, float)) and tol > 0):
        errors.append(f"solver.tol: must be positive, got {tol!r}")
    else:
        config.solver_tol = float(tol)
    if not (isinstance(max_iter, int) and max_iter >= 1):
        errors.append(f"solver.max_iter: must be a positive integer, got {max_iter!r}")
    else:
        config.solver_max_iter = max_iter


def _validate_path(tree, config, errors):
    if "path" in tree:
        if config.base is None:
            errors.append("path: needs a base_space section")
        else:
            try:
                config.path = build_path(tree["path"], config.base)
            except DutyModelError as exc:
                errors.append(f"path: {exc}")
            except (TypeError, ValueError, IndexError) as exc:
                errors.append(f"path: {exc}")
    if "profile" in tree:
        prof = tree["profile"]
        try:
            if "lambdas" in prof:
                config.profile = GenerationProfile(lambdas=tuple(float(x) for x in prof["lambdas"]))
            elif "scarcity" in prof:
                config.profile = GenerationProfile.from_scarcity(
                    float(prof.get("lambda_max", 1.0)),
                    [float(s) for s in prof["scarcity"]])
            else:
                errors.append("profile: needs 'lambdas' or 'scarcity'")
        except (TypeError, ValueError) as exc:
            errors.append(f"profile: {exc}")
    if config.path is not None and config.profile is not None:
        if len(config.profile.lambdas) != len(config.path.steps):
            errors.append(f"profile: {len(config.profile.lambdas)} lambda values for "
                          f"{len(config.path.steps)} path steps")


def _validate_scenarios(tree, config, errors):
    section = tree.get("scenarios", {})
    if not isinstance(section, Mapping):
        errors.append("scenarios: must be an object")
        return
    if "sugar" in section:
        raw = dict(section["sugar"])
        raw.setdefault("seed", tree.get("seed", 12345))
        known = {f for f in SugarMarketConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            errors.append(f"scenarios.sugar: unknown keys {sorted(unknown)}")
        else:
            try:
                config.sugar = SugarMarketConfig(**raw)
            except (ValueError, TypeError) as exc:
                errors.append(f"scenarios.sugar: {exc}")
    if "veblen" in section:
        raw = section["veblen"]
        try:
            probe = VeblenProbeConfig(
                agent_id=str(raw["agent"]), y_id=str(raw["fiber"]),
                duty_id=str(raw["duty"]), sweep_lo=float(raw["sweep"]["lo"]),
                sweep_hi=float(raw["sweep"]["hi"]),
                sweep_count=int(raw["sweep"].get("count", 26)))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"scenarios.veblen: {exc!r}")
        else:
            if not 0 < probe.sweep_lo < probe.sweep_hi:
                errors.append("scenarios.veblen.sweep: need 0 < lo < hi")
            if probe.sweep_count < 2:
                errors.append("scenarios.veblen.sweep: need at least two points")
            if config.agents and probe.agent_id not in {a.id for a in config.agents}:
                errors.append(f"scenarios.veblen: unknown agent {probe.agent_id!r}")
            if config.fiber_specs and probe.y_id not in config.fiber_specs:
                errors.append(f"scenarios.veblen: unknown fiber {probe.y_id!r}")
            elif config.fiber_specs and probe.duty_id not in config.fiber_specs[probe.y_id].duties:
                errors.append(f"scenarios.veblen: {probe.duty_id!r} is not a duty of "
                              f"fiber {probe.y_id!r}")
            config.veblen = probe
    if "sweep" in section:
        raw = section["sweep"]
        try:
            config.sweep = SweepConfig(phis=tuple(float(x) for x in raw["phis"]),
                                       premiums=tuple(float(x) for x in raw["premiums"]))
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"scenarios.sweep: {exc!r}")
        else:
            if not all(0 <= p <= 1 for p in config.sweep.phis):
                errors.append("scenarios.sweep.phis: shares must lie in [0, 1]")


def packaged_config_path(name: str) -> Path:
    """Filesystem path of a bundled example configuration."""
    return Path(str(resources.files("dutybound").joinpath("configs", f"{name}.json")))


def load_packaged_config(name: str) -> RunConfig:
    return parse_and_validate(packaged_config_path(name))
