"""Scenario configuration: YAML loading and validation before any computation.

Layout of a configuration file::

    seed: 20240611            # required, root of every random stream
    threads: 1
    output: {dir: reports, csv: report.csv, tree: report.json}
    norm: {kind: gauge}
    mc: {samples: 200000, seed: 7}
    mollifier: {profile: linear, eps_ladder: [0.2, 0.1, 0.05]}
    suites: {smoke: [axioms_h1, ...]}
    scenarios:
      - name: axioms_h1
        kind: group_axioms
        group: heisenberg1          # preset name or {step, layer_dims, brackets}
        ...                         # kind-specific keys

Scenario-level ``norm``, ``mc`` and ``mollifier`` blocks override the
top-level ones key by key.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import yaml

from .algebra import StratifiedAlgebra, load_preset
from .domains import build_domain
from .errors import AlgebraError, ConfigError, PresetNotFoundError, ShapeError
from .fields import build_horizontal_field, build_scalar_field
from .models import BoxRegion, Criterion, DomainSpec, HorizontalField, NormKind, QuadratureKind, QuadratureSpec, ScalarField, ScenarioKind
from .mollify import PROFILES
from .utils.config_utils import (
    ensure_float,
    ensure_float_list,
    ensure_int,
    ensure_ladder,
    ensure_mapping,
    ensure_positive,
    ensure_string_list,
)
from .utils.logging_utils import get_logger
from .utils.seeding import derive_seed

logger = get_logger(__name__)

DEFAULT_TOLERANCES: Dict[ScenarioKind, float] = {
    ScenarioKind.GROUP_AXIOMS: 1e-12,
    ScenarioKind.HAAR_SCALING: 3.0,  # standard errors
    ScenarioKind.FRAME: 1e-6,
    ScenarioKind.COMMUTATION: 1e-3,
    ScenarioKind.POINTWISE_LIMIT: 1e-2,
    ScenarioKind.HALF_DENSITY: 0.02,
    ScenarioKind.GAUSS_GREEN: 1e-2,
    ScenarioKind.GREEN_FIRST: 1e-2,
    ScenarioKind.GREEN_SECOND: 1e-2,
    ScenarioKind.INTEGRATION_BY_PARTS: 1e-2,
    ScenarioKind.TRACE_LOCALITY: 1e-10,
    ScenarioKind.TRACE_BOUND: 1e-10,
    ScenarioKind.DIVERGENCE_FREE: 1e-3,
    ScenarioKind.TOTAL_VARIATION: 0.05,
    ScenarioKind.PERIMETER_SCALING: 0.02,
}

REQUIRED_KEYS: Dict[ScenarioKind, Sequence[str]] = {
    ScenarioKind.GROUP_AXIOMS: (),
    ScenarioKind.HAAR_SCALING: (),
    ScenarioKind.FRAME: (),
    ScenarioKind.COMMUTATION: ("fields", "point", "eps"),
    ScenarioKind.POINTWISE_LIMIT: ("fields", "point"),
    ScenarioKind.HALF_DENSITY: ("domain", "resolution"),
    ScenarioKind.GAUSS_GREEN: ("field", "domain", "resolution"),
    ScenarioKind.GREEN_FIRST: ("u", "v", "domain", "resolution"),
    ScenarioKind.GREEN_SECOND: ("u", "v", "domain", "resolution"),
    ScenarioKind.INTEGRATION_BY_PARTS: ("field", "g", "domain", "resolution"),
    ScenarioKind.TRACE_LOCALITY: ("field", "domain", "other_domain", "patch", "resolution"),
    ScenarioKind.TRACE_BOUND: ("field", "domain", "resolution"),
    ScenarioKind.DIVERGENCE_FREE: ("bumps", "quadrature"),
    ScenarioKind.TOTAL_VARIATION: ("domain", "region"),
    ScenarioKind.PERIMETER_SCALING: ("domain", "resolution"),
}

_SCALAR_KEYS = ("u", "v", "g", "phi")
_SCALAR_LIST_KEYS = ("fields", "bumps")
_KNOWN_KEYS = {
    "name", "kind", "group", "norm", "mc", "mollifier", "tolerance", "seed", "resolution", "quadrature",
    "stencil", "eps", "eps_ladder", "point", "field", "domain", "other_domain", "patch", "region",
    "boundary_resolution", "samples", "lambdas", "delta", "align_tol", "normal_tol", "trend_slack", "h",
    "reference_radius", "scale", "criterion", "method", "align_cells", *_SCALAR_KEYS, *_SCALAR_LIST_KEYS,
}

COMMUTATION_METHODS = ("stencil", "kernel")
IDENTITY_KINDS = (
    ScenarioKind.GAUSS_GREEN,
    ScenarioKind.GREEN_FIRST,
    ScenarioKind.GREEN_SECOND,
    ScenarioKind.INTEGRATION_BY_PARTS,
)


@dataclass
class ScenarioConfig:
    """One validated scenario with every preset already resolved."""

    name: str
    kind: ScenarioKind
    algebra: StratifiedAlgebra
    seed: int
    tolerance: float
    criterion: Criterion = Criterion.IDENTITY
    norm: NormKind = NormKind.GAUGE
    profile: str = "linear"
    eps_ladder: List[float] = field(default_factory=list)
    mc_samples: int = 200_000
    mc_seed: int = 0
    resolution: List[int] = field(default_factory=list)
    quadrature: Optional[QuadratureSpec] = None
    stencil: Optional[QuadratureSpec] = None
    domain: Optional[DomainSpec] = None
    other_domain: Optional[DomainSpec] = None
    vector_field: Optional[HorizontalField] = None
    scalars: Dict[str, ScalarField] = field(default_factory=dict)
    scalar_lists: Dict[str, List[ScalarField]] = field(default_factory=dict)
    point: Optional[np.ndarray] = None
    region: Optional[BoxRegion] = None
    patch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


@dataclass
class RunConfig:
    seed: int
    threads: Optional[int]
    output_dir: str
    csv_name: str
    tree_name: str
    suites: Dict[str, List[str]]
    scenarios: List[ScenarioConfig]
    raw: Dict[str, Any]
    source: str = "<memory>"

    def scenario(self, name: str) -> ScenarioConfig:
        for item in self.scenarios:
            if item.name == name:
                return item
        raise PresetNotFoundError(f"unknown scenario '{name}'", path="suite")

    def select(self, suite: str) -> List[ScenarioConfig]:
        """Scenarios of a named suite, a single scenario by name, or all for ``full``."""
        if suite in self.suites:
            return [self.scenario(name) for name in self.suites[suite]]
        if suite == "full":
            return list(self.scenarios)
        if any(item.name == suite for item in self.scenarios):
            return [self.scenario(suite)]
        raise PresetNotFoundError(f"unknown suite or scenario '{suite}'; suites: {sorted(self.suites)}", path="suite")


# --------------------------------------------------------------------------- #
# Loading
# --------------------------------------------------------------------------- #
def default_config_path() -> Path:
    return Path(str(resources.files("carnotgg") / "configs" / "default.yaml"))


def read_yaml(text: str, source: str = "<string>") -> Dict[str, Any]:
    try:
        payload = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ConfigError(f"{source}: {problem}", line=mark.line + 1, column=mark.column + 1) from exc
        raise ConfigError(f"{source}: {problem}") from exc
    if payload is None:
        raise ConfigError(f"{source}: configuration is empty")
    if not isinstance(payload, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return payload


def load_config(path: Union[str, Path, None] = None, seed: Optional[int] = None) -> RunConfig:
    """Read and validate a configuration file (the shipped one when ``path`` is None)."""
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(read_yaml(text, str(path)), seed=seed, source=str(path))


def parse_config(payload: Mapping[str, Any], seed: Optional[int] = None, source: str = "<memory>") -> RunConfig:
    raw = copy.deepcopy(dict(payload))
    if seed is not None:
        raw["seed"] = seed
    if "seed" not in raw:
        raise ConfigError("a root seed is required", path="seed")
    root_seed = ensure_int(raw["seed"], "seed", minimum=0)
    threads = ensure_int(raw["threads"], "threads", minimum=1) if raw.get("threads") is not None else None

    output = ensure_mapping(raw.get("output"), "output")
    defaults = {
        "norm": ensure_mapping(raw.get("norm"), "norm"),
        "mc": ensure_mapping(raw.get("mc"), "mc"),
        "mollifier": ensure_mapping(raw.get("mollifier"), "mollifier"),
    }

    items = raw.get("scenarios")
    if not isinstance(items, list) or not items:
        raise ConfigError("expected a non-empty list of scenarios", path="scenarios")
    scenarios: List[ScenarioConfig] = []
    seen = set()
    for index, item in enumerate(items):
        scenario = parse_scenario(item, f"scenarios[{index}]", root_seed, defaults)
        if scenario.name in seen:
            raise ConfigError(f"duplicate scenario name '{scenario.name}'", path=f"scenarios[{index}].name")
        seen.add(scenario.name)
        scenarios.append(scenario)

    suites: Dict[str, List[str]] = {}
    for suite, names in ensure_mapping(raw.get("suites"), "suites").items():
        listed = ensure_string_list(names, f"suites.{suite}")
        for position, name in enumerate(listed):
            if name not in seen:
                raise PresetNotFoundError(f"unknown scenario '{name}'", path=f"suites.{suite}[{position}]")
        suites[suite] = listed

    logger.debug("config %s: %d scenarios, suites %s", source, len(scenarios), sorted(suites))
    return RunConfig(
        seed=root_seed,
        threads=threads,
        output_dir=str(output.get("dir", "reports")),
        csv_name=str(output.get("csv", "report.csv")),
        tree_name=str(output.get("tree", "report.json")),
        suites=suites,
        scenarios=scenarios,
        raw=raw,
        source=source,
    )


# --------------------------------------------------------------------------- #
# Scenario validation
# --------------------------------------------------------------------------- #
def resolve_group(spec: Any, path: str) -> StratifiedAlgebra:
    if isinstance(spec, str):
        try:
            return load_preset(spec)
        except PresetNotFoundError as exc:
            raise PresetNotFoundError(str(exc).split(": ", 1)[-1], path=path) from exc
    if isinstance(spec, dict):
        try:
            return StratifiedAlgebra.from_config(spec, name=str(spec.get("name", "custom")))
        except AlgebraError as exc:
            raise ConfigError(str(exc), path=path) from exc
    raise ConfigError("group must be a preset name or an algebra mapping", path=path)


def _box(value: Any, q: int, path: str) -> BoxRegion:
    box = ensure_mapping(value, path)
    lower = ensure_float_list(box.get("lower"), q, f"{path}.lower")
    upper = ensure_float_list(box.get("upper"), q, f"{path}.upper")
    try:
        return BoxRegion(lower, upper)
    except ShapeError as exc:
        raise ConfigError(str(exc), path=path) from exc


def parse_quadrature(value: Any, q: int, path: str, seed: int) -> QuadratureSpec:
    """``{kind, resolution, samples, seed, region}``; the seed defaults to the scenario stream."""
    spec = ensure_mapping(value, path)
    try:
        kind = QuadratureKind(spec.get("kind", QuadratureKind.TENSOR_GRID.value))
    except ValueError as exc:
        raise ConfigError(f"unknown quadrature kind {spec.get('kind')!r}", path=f"{path}.kind") from exc
    resolution: Any = spec.get("resolution", 32)
    if isinstance(resolution, list):
        resolution = tuple(ensure_int(r, f"{path}.resolution[{i}]", minimum=1) for i, r in enumerate(resolution))
    else:
        resolution = ensure_int(resolution, f"{path}.resolution", minimum=1)
    samples = spec.get("samples")
    if samples is not None:
        samples = ensure_int(samples, f"{path}.samples", minimum=1)
    region = _box(spec["region"], q, f"{path}.region") if "region" in spec else None
    quad_seed = ensure_int(spec["seed"], f"{path}.seed", minimum=0) if "seed" in spec else derive_seed(seed, path)
    try:
        return QuadratureSpec(kind, resolution, samples, quad_seed, region)
    except ShapeError as exc:
        raise ConfigError(str(exc), path=path) from exc


def _resolutions(value: Any, path: str) -> List[int]:
    if isinstance(value, list):
        if not value:
            raise ConfigError("resolution list must not be empty", path=path)
        return [ensure_int(r, f"{path}[{i}]", minimum=2) for i, r in enumerate(value)]
    return [ensure_int(value, path, minimum=2)]


def build_patch(value: Any, q: int, path: str) -> Callable[[np.ndarray], np.ndarray]:
    """Patch predicate ``{axis, value, atol}`` and/or ``{box: {lower, upper}}``."""
    spec = ensure_mapping(value, path)
    box = _box(spec["box"], q, f"{path}.box") if "box" in spec else None
    axis = None
    if "axis" in spec:
        axis = ensure_int(spec["axis"], f"{path}.axis", minimum=1) - 1
        if axis >= q:
            raise ConfigError(f"axis must be in 1..{q}", path=f"{path}.axis")
    level = ensure_float(spec.get("value", 0.0), f"{path}.value")
    atol = ensure_positive(spec.get("atol", 1e-9), f"{path}.atol")
    if box is None and axis is None:
        raise ConfigError("patch needs an axis plane or a box", path=path)

    def predicate(points: np.ndarray) -> np.ndarray:
        mask = np.ones(points.shape[0], dtype=bool)
        if axis is not None:
            mask &= np.abs(points[:, axis] - level) <= atol
        if box is not None:
            mask &= box.contains(points, strict=False)
        return mask

    return predicate


def _merge(defaults: Mapping[str, Any], override: Any, path: str) -> Dict[str, Any]:
    merged = dict(defaults)
    merged.update(ensure_mapping(override, path))
    return merged


def parse_scenario(item: Any, path: str, root_seed: int, defaults: Mapping[str, Dict[str, Any]]) -> ScenarioConfig:
    spec = ensure_mapping(item, path)
    name = spec.get("name")
    if not isinstance(name, str) or not name.strip():
        raise ConfigError("scenario needs a non-empty name", path=f"{path}.name")
    try:
        kind = ScenarioKind(spec.get("kind"))
    except ValueError as exc:
        raise ConfigError(
            f"unknown kind {spec.get('kind')!r}; known: {[k.value for k in ScenarioKind]}", path=f"{path}.kind"
        ) from exc
    unknown = sorted(set(spec) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", path=f"{path}.{unknown[0]}")
    for key in REQUIRED_KEYS[kind]:
        if key not in spec:
            raise ConfigError(f"missing key '{key}' for kind {kind.value}", path=f"{path}.{key}")

    if "group" not in spec:
        raise ConfigError("missing key 'group'", path=f"{path}.group")
    algebra = resolve_group(spec["group"], f"{path}.group")
    q = algebra.q
    seed = ensure_int(spec["seed"], f"{path}.seed", minimum=0) if "seed" in spec else derive_seed(root_seed, name)

    norm_block = _merge(defaults.get("norm", {}), spec.get("norm"), f"{path}.norm")
    try:
        norm = NormKind(norm_block.get("kind", NormKind.GAUGE.value))
    except ValueError as exc:
        raise ConfigError(f"unknown norm kind {norm_block.get('kind')!r}", path=f"{path}.norm.kind") from exc
    mc_block = _merge(defaults.get("mc", {}), spec.get("mc"), f"{path}.mc")
    mc_samples = ensure_int(mc_block.get("samples", 200_000), f"{path}.mc.samples", minimum=1)
    mc_seed = derive_seed(ensure_int(mc_block["seed"], f"{path}.mc.seed", minimum=0), name) if "seed" in mc_block else seed
    moll_block = _merge(defaults.get("mollifier", {}), spec.get("mollifier"), f"{path}.mollifier")
    profile = str(moll_block.get("profile", "linear"))
    if profile not in PROFILES:
        raise PresetNotFoundError(f"unknown mollifier profile '{profile}'; known: {sorted(PROFILES)}", path=f"{path}.mollifier.profile")
    ladder_source = spec.get("eps_ladder", moll_block.get("eps_ladder"))
    eps_ladder: List[float] = []
    if ladder_source is not None:
        eps_ladder = ensure_ladder(ladder_source, f"{path}.eps_ladder" if "eps_ladder" in spec else f"{path}.mollifier.eps_ladder")
    if "eps" in spec:
        eps_ladder = [ensure_positive(spec["eps"], f"{path}.eps")] if not isinstance(spec["eps"], list) else ensure_ladder(spec["eps"], f"{path}.eps")
    if kind in (ScenarioKind.HALF_DENSITY, ScenarioKind.POINTWISE_LIMIT, ScenarioKind.TOTAL_VARIATION) and not eps_ladder:
        raise ConfigError("an eps ladder is required (scenario eps_ladder or mollifier.eps_ladder)", path=f"{path}.eps_ladder")

    tolerance = ensure_positive(spec.get("tolerance", DEFAULT_TOLERANCES[kind]), f"{path}.tolerance")
    criterion = Criterion.IDENTITY
    if "criterion" in spec:
        if kind not in IDENTITY_KINDS:
            raise ConfigError(f"kind {kind.value} does not take a criterion", path=f"{path}.criterion")
        if spec["criterion"] not in (Criterion.IDENTITY.value, Criterion.ABSOLUTE.value):
            raise ConfigError(f"criterion must be 'identity' or 'absolute', got {spec['criterion']!r}", path=f"{path}.criterion")
        criterion = Criterion(spec["criterion"])
    config = ScenarioConfig(
        name=name.strip(),
        kind=kind,
        algebra=algebra,
        seed=seed,
        tolerance=tolerance,
        criterion=criterion,
        norm=norm,
        profile=profile,
        eps_ladder=eps_ladder,
        mc_samples=mc_samples,
        mc_seed=mc_seed,
    )
    if "resolution" in spec:
        config.resolution = _resolutions(spec["resolution"], f"{path}.resolution")
    if "quadrature" in spec:
        config.quadrature = parse_quadrature(spec["quadrature"], q, f"{path}.quadrature", seed)
    if "stencil" in spec:
        config.stencil = parse_quadrature(spec["stencil"], q, f"{path}.stencil", seed)
    if "domain" in spec:
        config.domain = build_domain(algebra, spec["domain"], f"{path}.domain")
    if "other_domain" in spec:
        config.other_domain = build_domain(algebra, spec["other_domain"], f"{path}.other_domain")
    if "field" in spec:
        config.vector_field = build_horizontal_field(algebra, spec["field"], f"{path}.field")
    for key in _SCALAR_KEYS:
        if key in spec:
            config.scalars[key] = build_scalar_field(algebra, spec[key], f"{path}.{key}")
    for key in _SCALAR_LIST_KEYS:
        if key in spec:
            values = spec[key]
            if not isinstance(values, list) or not values:
                raise ConfigError("expected a non-empty list of fields", path=f"{path}.{key}")
            config.scalar_lists[key] = [build_scalar_field(algebra, v, f"{path}.{key}[{i}]") for i, v in enumerate(values)]
    if "point" in spec:
        config.point = np.asarray(ensure_float_list(spec["point"], q, f"{path}.point"))
    if "region" in spec:
        config.region = _box(spec["region"], q, f"{path}.region")
    if "patch" in spec:
        config.patch = build_patch(spec["patch"], q, f"{path}.patch")

    for key in ("samples", "boundary_resolution"):
        if key in spec:
            config.params[key] = ensure_int(spec[key], f"{path}.{key}", minimum=1)
    for key in ("delta", "align_tol", "normal_tol", "align_cells", "trend_slack", "h", "reference_radius", "scale"):
        if key in spec:
            config.params[key] = ensure_positive(spec[key], f"{path}.{key}")
    if "method" in spec:
        if kind != ScenarioKind.COMMUTATION:
            raise ConfigError(f"kind {kind.value} does not take a method", path=f"{path}.method")
        if spec["method"] not in COMMUTATION_METHODS:
            raise ConfigError(f"method must be one of {list(COMMUTATION_METHODS)}, got {spec['method']!r}", path=f"{path}.method")
        config.params["method"] = spec["method"]
    if "lambdas" in spec:
        config.params["lambdas"] = [ensure_positive(v, f"{path}.lambdas[{i}]") for i, v in enumerate(ensure_float_list(spec["lambdas"], None, f"{path}.lambdas"))]

    config.raw = copy.deepcopy(spec)
    config.raw.update({"seed": seed, "tolerance": tolerance, "norm": {"kind": norm.value}, "mc": dict(mc_block, samples=mc_samples)})
    config.raw["mollifier"] = {"profile": profile}
    if eps_ladder and "eps" not in spec:
        config.raw["eps_ladder"] = list(eps_ladder)
    return config
