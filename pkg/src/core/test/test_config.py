#!/usr/bin/env python3
"""
Tests for run configuration loading, validation and the run constructor
"""

from pathlib import Path

import pytest
import yaml
from core_types.gravity import ModelTag
from core_types.wind import DecayFamily
from windgrav.dynamics_utils import FunctionSourceEvaluator, WindSourceEvaluator
from windgrav.errors import EXIT_CONFIG, EXIT_FAILURE, ConfigError, ParameterError

from core.config_utils import (
    ManufacturedMode,
    PlanetBlock,
    RunConfig,
    TruncationBlock,
    WindBlock,
    dump_config,
    load_config,
    write_config,
)
from core.core_utils import RunConstructor, guarded

EXAMPLES = Path(__file__).parents[2] / "config" / "examples"
WIND_CSV = EXAMPLES / "synthetic_wind.csv"


def _base():
    return {
        "schema": 1,
        "normalized": True,
        "truncation": {"m_max": 10, "n_max": 4},
        "quadrature": {"radial": 32, "angular": 32},
        "wind": {"profile": str(WIND_CSV), "family": "exponential", "params": [0.1]},
    }


def _write_yaml(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def _with(data, block, **values):
    updated = dict(data)
    updated[block] = {**data.get(block, {}), **values}
    return updated


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def test_load_forward_example():
    cfg = load_config(EXAMPLES / "forward_normalized.yaml")
    assert cfg.normalized and cfg.model == ModelTag.TGWE
    assert cfg.truncation.m_max == 20 and cfg.truncation.n_max == 8
    assert Path(cfg.wind.profile) == WIND_CSV.resolve()
    decay = cfg.wind.decay()
    assert decay.family == DecayFamily.EXPONENTIAL and decay.params == [0.05]


def test_load_inverse_example_starts_at_box_centre():
    cfg = load_config(EXAMPLES / "inverse_normalized.yaml")
    decay = cfg.wind.decay()
    assert decay.params == [pytest.approx(0.105)]
    assert decay.bounds == [(0.01, 0.2)]
    assert cfg.fit.grid_points == 11 and cfg.fit.tol_f == 1e-12


def test_load_preset_example_resolves_outputs():
    cfg = load_config(EXAMPLES / "jupiter.yaml")
    assert cfg.planet.preset == "jupiter"
    assert cfg.output.coefficients == str((EXAMPLES / "out" / "jupiter_coeffs.json").resolve())
    assert cfg.wind.params == [3.0e6]


def test_manufactured_example_needs_no_profile():
    cfg = load_config(EXAMPLES / "manufactured.yaml")
    assert cfg.wind.profile is None
    assert cfg.wind.manufactured == ManufacturedMode(m=1, n=2)
    assert cfg.truncation.N == 2


def test_exponent_only_floats_in_yaml(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        f"normalized: true\nwind:\n  profile: {WIND_CSV}\nfit:\n  tol_x: 1e-6\n  tol_f: 1e-14\n"
    )
    cfg = load_config(path)
    assert cfg.fit.tol_x == 1e-6 and cfg.fit.tol_f == 1e-14


def test_relative_paths_resolve_against_config_dir(tmp_path):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "wind.csv").write_text(WIND_CSV.read_text())
    data = _with(_base(), "wind", profile="data/wind.csv")
    data["output"] = {"coefficients": "results/coeffs.json"}
    cfg = load_config(_write_yaml(tmp_path, data))
    assert cfg.wind.profile == str((tmp_path / "data" / "wind.csv").resolve())
    assert cfg.output.coefficients == str((tmp_path / "results" / "coeffs.json").resolve())


def test_dump_load_round_trip(tmp_path):
    cfg = load_config(EXAMPLES / "inverse_normalized.yaml")
    path = tmp_path / "nested" / "run.json"
    write_config(path, cfg)
    reloaded = load_config(path)
    assert reloaded == cfg
    assert dump_config(reloaded) == path.read_bytes()
    assert path.read_bytes().endswith(b"\n")


def test_defaults_fill_missing_blocks(tmp_path):
    data = {"normalized": True, "wind": {"profile": str(WIND_CSV)}}
    cfg = load_config(_write_yaml(tmp_path, data))
    assert cfg.truncation.m_max == 60 and cfg.truncation.n_max == 12
    assert cfg.quadrature.radial == 256 and cfg.quadrature.panel == 8
    assert cfg.wind.family == DecayFamily.NONE and cfg.wind.equatorial_jump
    assert cfg.workers is None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "block, values, fragment",
    [
        ("truncation", {"m_max": 4}, "m_max"),
        ("truncation", {"n_max": 1}, "n_max"),
        ("truncation", {"N": 5}, "truncation.N"),
        ("truncation", {"N": 1}, "truncation.N"),
        ("quadrature", {"radial": 8}, "quadrature.radial"),
        ("quadrature", {"angular": 15}, "quadrature.angular"),
        ("quadrature", {"panel": 1}, "quadrature.panel"),
        ("wind", {"smoothing": 1.0}, "smoothing"),
        ("wind", {"params": [0.1, 0.2]}, "decay"),
        (
            "wind",
            {"family": "tanh-step", "params": [0.9, 0.05], "bounds": [[0.8, 0.85], [0.01, 0.1]]},
            "decay",
        ),
        ("wind", {"profile": "missing.csv"}, "not found"),
        ("wind", {"profile": None}, "wind.profile is required"),
        ("wind", {"manufactured": {"m": 1, "n": 1}}, "(1, 1)"),
        ("wind", {"manufactured": {"m": 11, "n": 2}}, "outside the truncation"),
        ("planet", {"background_j": "nope.csv"}, "background_j"),
    ],
)
def test_validation_errors(tmp_path, block, values, fragment):
    path = _write_yaml(tmp_path, _with(_base(), block, **values))
    with pytest.raises(ConfigError) as excinfo:
        load_config(path)
    assert fragment in excinfo.value.message
    assert excinfo.value.exit_code == EXIT_CONFIG


@pytest.mark.parametrize(
    "change, fragment",
    [
        ({"schema": 2}, "schema"),
        ({"normalized": False}, "Planet block"),
        ({"workers": 0}, "workers"),
        ({"model": "XYZ"}, "Invalid run configuration"),
        ({"colour": "blue"}, "Invalid run configuration"),
    ],
)
def test_top_level_validation_errors(tmp_path, change, fragment):
    path = _write_yaml(tmp_path, {**_base(), **change})
    with pytest.raises(ConfigError, match=fragment):
        load_config(path)


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(listing)
    broken = tmp_path / "broken.yaml"
    broken.write_text("wind: [unclosed\n")
    with pytest.raises(ConfigError, match="not valid"):
        load_config(broken)


def test_load_without_validation(tmp_path):
    path = _write_yaml(tmp_path, _with(_base(), "truncation", m_max=2))
    assert load_config(path, validate=False).truncation.m_max == 2


# ---------------------------------------------------------------------------
# Run constructor
# ---------------------------------------------------------------------------


def test_constructor_reads_parameters():
    constructor = RunConstructor("forward")
    assert {"jupiter", "saturn"} <= set(constructor.presets)
    assert constructor.presets["jupiter"]["G"] == 6.67430e-11
    assert constructor.numerics.tail_terms == 5
    assert constructor.selftest["m_max"] == 20
    assert constructor.default_workers() >= 1


def test_constructor_planets():
    cfg = RunConfig(normalized=True)
    assert RunConstructor("forward", cfg).planet().R == 1.0

    preset = RunConfig(planet=PlanetBlock(preset="Jupiter", R=7.0e7))
    planet = RunConstructor("forward", preset).planet()
    assert planet.R == 7.0e7 and planet.M == 1.898e27 and planet.name == "jupiter"

    explicit = RunConfig(planet=PlanetBlock(R=6.0e7, M=5.7e26, Omega=1.6e-4))
    assert RunConstructor("forward", explicit).planet().M == 5.7e26

    with pytest.raises(ConfigError):
        RunConstructor("forward", RunConfig(planet=PlanetBlock(R=-1.0, M=1.0, Omega=1.0))).planet()
    with pytest.raises(ConfigError):
        RunConstructor("forward", RunConfig(planet=PlanetBlock(preset="pluto"))).planet()
    with pytest.raises(ConfigError):
        RunConstructor("forward").planet()


def test_constructor_degree_cut():
    cfg = RunConfig(normalized=True, truncation=TruncationBlock(m_max=10, n_max=6))
    constructor = RunConstructor("forward", cfg)
    assert constructor.degree_cut() == 6
    assert constructor.degree_cut(4) == 4
    with pytest.raises(ConfigError):
        constructor.degree_cut(7)


def test_constructor_evaluators():
    wind = RunConfig(
        normalized=True,
        truncation=TruncationBlock(m_max=10, n_max=4),
        wind=WindBlock(profile=str(WIND_CSV), family=DecayFamily.EXPONENTIAL, params=[0.1]),
    )
    constructor = RunConstructor("forward", wind)
    planet = constructor.planet()
    ctx = constructor.context(planet)
    assert ctx.m_max == 10 and ctx.n_max == 4
    assert isinstance(constructor.evaluator(ctx, planet), WindSourceEvaluator)
    forward = constructor.forward_model()
    assert forward.N == 4 and forward.background is None

    manufactured = RunConfig(
        normalized=True,
        truncation=TruncationBlock(m_max=10, n_max=4),
        wind=WindBlock(manufactured=ManufacturedMode(m=2, n=3)),
    )
    constructor = RunConstructor("forward", manufactured)
    assert isinstance(constructor.evaluator(ctx, planet), FunctionSourceEvaluator)
    with pytest.raises(ConfigError):
        constructor.forward_model()


def test_forward_model_rejects_non_wind_evaluators(monkeypatch):
    cfg = RunConfig(
        normalized=True,
        truncation=TruncationBlock(m_max=10, n_max=4),
        wind=WindBlock(profile=str(WIND_CSV), family=DecayFamily.EXPONENTIAL, params=[0.1]),
    )
    constructor = RunConstructor("inverse", cfg)
    monkeypatch.setattr(
        constructor,
        "evaluator",
        lambda ctx, planet: FunctionSourceEvaluator(planet, lambda r, t: 0.0 * r * t),
    )
    with pytest.raises(ConfigError, match="wind profile"):
        constructor.forward_model()


def test_constructor_fit_options():
    cfg = RunConfig(normalized=True, workers=3)
    options = RunConstructor("inverse", cfg).fit_options()
    assert options.workers == 3 and options.max_evaluations == 400
    assert RunConstructor("inverse", cfg).fit_options(workers=2).workers == 2
    bad = RunConfig(normalized=True)
    bad.fit.grid_points = 1
    with pytest.raises(ConfigError):
        RunConstructor("inverse", bad).fit_options()


def test_guarded_maps_errors_to_exit_codes(capsys):
    @guarded
    def parameter_failure():
        raise ParameterError("H must be positive")

    @guarded
    def crash():
        raise RuntimeError("boom")

    assert parameter_failure() == EXIT_CONFIG
    assert "[FAIL] ParameterError: H must be positive" in capsys.readouterr().err
    assert crash() == EXIT_FAILURE
    assert "boom" in capsys.readouterr().err
