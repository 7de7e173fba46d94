"""Tests for configuration loading and scenario validation."""

from __future__ import annotations

import copy

import numpy as np
import pytest

from carnotgg.errors import ConfigError, PresetNotFoundError
from carnotgg.models import Criterion, NormKind, QuadratureKind, ScenarioKind
from carnotgg.scenario import build_patch, load_config, parse_config, parse_quadrature, read_yaml
from carnotgg.utils.seeding import derive_seed

SMOKE = [
    "axioms_h1",
    "frame_h1",
    "haar_h1",
    "half_density_half_space",
    "gauss_green_x1_ball_coarse",
    "divergence_free_sin",
]

BASE = {
    "seed": 5,
    "mc": {"samples": 1000},
    "scenarios": [
        {"name": "axioms", "kind": "group_axioms", "group": "heisenberg1", "samples": 50},
        {
            "name": "flux",
            "kind": "gauss_green",
            "group": "heisenberg1",
            "field": {"name": "frame", "index": 1},
            "domain": {"name": "euclidean_ball"},
            "resolution": [16, 32],
        },
    ],
    "suites": {"quick": ["axioms"]},
}


def _payload(**scenario_changes):
    payload = copy.deepcopy(BASE)
    payload["scenarios"][0].update(scenario_changes)
    return payload


@pytest.fixture(scope="module")
def shipped():
    return load_config()


def test_shipped_config_loads(shipped):
    assert shipped.seed == 20240611
    assert shipped.threads == 1
    assert (shipped.output_dir, shipped.csv_name, shipped.tree_name) == ("reports", "report.csv", "report.json")
    assert [s.name for s in shipped.select("smoke")] == SMOKE
    assert len(shipped.select("full")) == 35
    assert {s.kind for s in shipped.scenarios} == set(ScenarioKind)


def test_shipped_config_resolves_presets(shipped):
    same = shipped.scenario("trace_locality_same")
    assert same.other_domain.name.startswith("complement(")
    assert same.patch(np.array([[0.0, 0.1, 0.2], [0.5, 0.1, 0.2]])).tolist() == [True, False]
    half = shipped.scenario("half_density_half_space")
    assert half.eps_ladder == [0.2, 0.1]
    assert shipped.scenario("pointwise_mixed").eps_ladder == [0.1, 0.05, 0.025, 0.0125]
    assert shipped.scenario("haar_engel").mc_samples == 1_000_000
    assert shipped.scenario("haar_h1").mc_samples == 1_000_000
    assert shipped.scenario("total_variation_ball").eps_ladder == [0.1, 0.05, 0.025]
    assert len(shipped.scenario("total_variation_half_space").eps_ladder) == 3


def test_shipped_config_carries_criteria_and_methods(shipped):
    for name in ("gauss_green_X1_ball", "gauss_green_X2_ball"):
        scenario = shipped.scenario(name)
        assert scenario.criterion == Criterion.ABSOLUTE
        assert scenario.tolerance == 1e-3
    assert shipped.scenario("gauss_green_x1_ball").criterion == Criterion.IDENTITY
    commutation = shipped.scenario("commutation_h1")
    assert commutation.param("method") == "kernel"
    assert commutation.profile == "cosine"
    assert commutation.resolution == [16, 32, 64]
    stencil = shipped.scenario("commutation_h1_stencil")
    assert stencil.param("method", "stencil") == "stencil"
    assert stencil.tolerance == 1e-3
    tangent = shipped.scenario("trace_locality_tangent")
    assert tangent.param("align_cells") == 1.0
    assert tangent.domain.params["window"]["lower"][0] == 0.9995
    assert not tangent.domain.bounded


def test_seed_override_rederives_scenario_seeds():
    config = load_config(seed=3)
    assert config.seed == 3
    scenario = config.scenario("axioms_h1")
    assert scenario.seed == derive_seed(3, "axioms_h1")
    assert scenario.raw["seed"] == scenario.seed


def test_select():
    config = parse_config(BASE)
    assert [s.name for s in config.select("quick")] == ["axioms"]
    assert [s.name for s in config.select("flux")] == ["flux"]
    assert len(config.select("full")) == 2
    with pytest.raises(PresetNotFoundError):
        config.select("nightly")


def test_scenario_defaults_and_overrides():
    config = parse_config(_payload(seed=42, norm={"kind": "box"}, mc={"seed": 7}, tolerance=1e-9))
    axioms, flux = config.scenarios
    assert axioms.seed == 42
    assert axioms.norm == NormKind.BOX
    assert axioms.mc_seed == derive_seed(7, "axioms")
    assert axioms.mc_samples == 1000
    assert axioms.tolerance == 1e-9
    assert axioms.param("samples") == 50
    assert flux.norm == NormKind.GAUGE
    assert flux.tolerance == 1e-2
    assert flux.resolution == [16, 32]
    assert flux.vector_field.name == "X1"


@pytest.mark.parametrize(
    "payload, path",
    [
        ({k: v for k, v in BASE.items() if k != "seed"}, "seed"),
        (dict(BASE, seed=-1), "seed"),
        (dict(BASE, threads=0), "threads"),
        (dict(BASE, scenarios=[]), "scenarios"),
        (_payload(kind="nope"), "scenarios[0].kind"),
        (_payload(bogus=1), "scenarios[0].bogus"),
        (_payload(name=""), "scenarios[0].name"),
        (_payload(group={"layer_dims": [2, 1], "brackets": [{"i": 1, "j": 1, "coeffs": {3: 1.0}}]}), "scenarios[0].group"),
        (_payload(kind="gauss_green"), "scenarios[0].field"),
        (_payload(name="flux"), "scenarios[1].name"),
        (_payload(eps_ladder=[0.1, 0.2]), "scenarios[0].eps_ladder[1]"),
        (_payload(mollifier={"profile": "gaussian"}), "scenarios[0].mollifier.profile"),
        (_payload(norm={"kind": "taxicab"}), "scenarios[0].norm.kind"),
        (dict(BASE, suites={"quick": ["missing"]}), "suites.quick[0]"),
        (_payload(criterion="absolute"), "scenarios[0].criterion"),
        (_payload(method="kernel"), "scenarios[0].method"),
        (_payload(align_cells=-1.0), "scenarios[0].align_cells"),
    ],
)
def test_config_errors_name_the_field(payload, path):
    with pytest.raises(ConfigError) as info:
        parse_config(payload)
    assert info.value.path == path
    assert str(info.value).startswith(f"{path}: ")


def test_unknown_group_preset():
    with pytest.raises(PresetNotFoundError) as info:
        parse_config(_payload(group="heisenberg7"))
    assert info.value.path == "scenarios[0].group"


def test_half_density_needs_a_ladder():
    payload = copy.deepcopy(BASE)
    payload["scenarios"].append({"name": "hd", "kind": "half_density", "group": "heisenberg1", "domain": "euclidean_ball", "resolution": 8})
    with pytest.raises(ConfigError) as info:
        parse_config(payload)
    assert info.value.path == "scenarios[2].eps_ladder"


def test_yaml_errors_carry_a_position():
    with pytest.raises(ConfigError) as info:
        read_yaml("seed: 1\nscenarios: [a, b\n", "broken.yaml")
    assert info.value.line is not None
    assert "broken.yaml" in str(info.value)
    for text in ("", "- 1\n- 2\n"):
        with pytest.raises(ConfigError):
            read_yaml(text)


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 9\nscenarios:\n  - {name: a, kind: frame, group: engel, samples: 10}\n", encoding="utf-8")
    config = load_config(path)
    assert config.source == str(path)
    assert config.scenarios[0].algebra.name == "engel"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_parse_quadrature():
    spec = parse_quadrature({"kind": "gauss_legendre", "resolution": [4, 5, 6]}, 3, "q", seed=1)
    assert spec.kind == QuadratureKind.GAUSS_LEGENDRE
    assert spec.resolution == (4, 5, 6)
    assert spec.seed == derive_seed(1, "q")
    mc = parse_quadrature({"kind": "monte_carlo", "samples": 100, "seed": 3}, 3, "q", seed=1)
    assert (mc.samples, mc.seed) == (100, 3)
    with pytest.raises(ConfigError):
        parse_quadrature({"kind": "simpson"}, 3, "q", seed=1)
    with pytest.raises(ConfigError):
        parse_quadrature({"kind": "monte_carlo"}, 3, "q", seed=1)


def test_build_patch():
    plane = build_patch({"axis": 1, "value": 0.5}, 3, "patch")
    box = build_patch({"box": {"lower": [0, 0, 0], "upper": [1, 1, 1]}}, 3, "patch")
    pts = np.array([[0.5, 0.2, 0.2], [0.5, 2.0, 0.0], [0.1, 0.1, 0.1]])
    assert plane(pts).tolist() == [True, True, False]
    assert box(pts).tolist() == [True, False, True]
    for bad in ({}, {"axis": 4}, {"axis": 1, "atol": 0}):
        with pytest.raises(ConfigError):
            build_patch(bad, 3, "patch")


def _flux(**changes):
    payload = copy.deepcopy(BASE)
    payload["scenarios"][1].update(changes)
    return payload


def test_identity_kinds_take_an_absolute_criterion():
    flux = parse_config(_flux(criterion="absolute", tolerance=1e-3)).scenario("flux")
    assert flux.criterion == Criterion.ABSOLUTE
    assert parse_config(BASE).scenario("flux").criterion == Criterion.IDENTITY
    with pytest.raises(ConfigError) as info:
        parse_config(_flux(criterion="upper_bound"))
    assert info.value.path == "scenarios[1].criterion"


def test_commutation_method_is_validated():
    payload = copy.deepcopy(BASE)
    commutation = {"name": "comm", "kind": "commutation", "group": "heisenberg1", "eps": 0.2, "point": [0, 0, 0], "fields": [{"name": "expr", "expr": "z"}]}
    payload["scenarios"].append(dict(commutation, method="kernel"))
    assert parse_config(payload).scenario("comm").param("method") == "kernel"
    payload["scenarios"][-1] = dict(commutation, method="spectral")
    with pytest.raises(ConfigError) as info:
        parse_config(payload)
    assert info.value.path == "scenarios[2].method"
