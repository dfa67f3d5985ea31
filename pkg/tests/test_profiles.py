import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lidarspoof.errors import InvalidArgument, ValidationError
from lidarspoof.profiles import (
    SPEED_OF_LIGHT,
    FiringIntervalDist,
    Generation,
    LidarProfile,
    RandModel,
    builtin_profiles,
    dump_profiles,
    interval_to_distance,
    load_profiles,
    sample_delta_rand,
)

P = builtin_profiles()

# Table of general specs, one tuple per sensor: mot, max range, vfov, hfov, channels
TABLE = {
    "VLP-16": (1, 100, 30, 360, 16),
    "VLP-32c": (1, 200, 40, 360, 32),
    "VLS-128": (0.5, 300, 40, 360, 128),
    "Pixell": (0.1, 56, 16, 180, 8),
    "OS1-32": (0.3, 120, 45, 360, 32),
    "L515": (0.25, 9, 55, 70, None),
    "Horizon": (0.5, 260, 25.1, 81.7, None),
    "XT32": (0, 120, 31, 360, 32),
    "Helios": (0.2, 150, 70, 360, 32),
}
RANDOMIZED = {"Pixell", "OS1-32", "L515", "Horizon", "Helios"}


def test_nine_builtins():
    assert list(P) == list(TABLE)


@pytest.mark.parametrize("name", list(TABLE))
def test_builtin_general_specs(name):
    p = P[name]
    assert (p.mot, p.max_range, p.vertical_fov, p.horizontal_fov, p.channels) == TABLE[name]
    assert p.randomized == (name in RANDOMIZED)
    assert p.fingerprint == (name == "XT32")
    assert p.generation == (Generation.FIRST if name.startswith("VL") else Generation.NEW)


def test_published_rand_models():
    assert P["XT32"].mot == 0
    assert P["Helios"].rand_model == RandModel.gaussian(1.5)
    assert P["Pixell"].rand_model == RandModel.uniform(191)
    assert P["OS1-32"].rand_model == RandModel.uniform(58)
    assert P["Horizon"].rand_model == RandModel.uniform(45)
    assert P["L515"].rand_model == RandModel.gaussian(7.5)


def test_registry_immutable():
    with pytest.raises(TypeError):
        P["new"] = P["VLP-16"]
    with pytest.raises(Exception):
        P["VLP-16"].mot = 3


def test_interval_to_distance():
    assert interval_to_distance(0) == 0
    assert interval_to_distance(1e-6) == pytest.approx(149.896229, abs=1e-6)
    assert interval_to_distance(0.4e-6) == pytest.approx(59.9584916, abs=1e-6)
    assert SPEED_OF_LIGHT == 299_792_458
    with pytest.raises(InvalidArgument):
        interval_to_distance(-1e-6)


def test_sample_none_is_zero():
    rng = np.random.default_rng(0)
    assert sample_delta_rand(RandModel.none(), rng) == 0.0
    assert np.all(sample_delta_rand(RandModel.none(), rng, 10) == 0)


def test_uniform_support_and_std():
    x = sample_delta_rand(RandModel.uniform(45), np.random.default_rng(1), 1_000_000)
    assert x.min() >= -45 and x.max() <= 45
    assert abs(x.std() - 45 / np.sqrt(3)) < 0.01 * 45 / np.sqrt(3)


def test_gaussian_mean():
    x = sample_delta_rand(RandModel.gaussian(1.5), np.random.default_rng(2), 1_000_000)
    assert abs(x.mean()) < 0.01


@given(st.integers(0, 2**32 - 1), st.sampled_from(["gaussian", "uniform"]))
def test_sampling_deterministic(seed, kind):
    m = RandModel(kind, 3.0)
    a = sample_delta_rand(m, np.random.default_rng(seed), 50)
    b = sample_delta_rand(m, np.random.default_rng(seed), 50)
    np.testing.assert_array_equal(a, b)


def test_invalid_profiles():
    base = P["VLP-16"].to_dict()
    for key, bad in [("mot", -1), ("max_range", 0.5), ("horizontal_fov", 0), ("vertical_fov", 181)]:
        d = dict(base, **{key: bad})
        with pytest.raises(ValidationError):
            LidarProfile.from_dict(d | {"name": "x"})
    with pytest.raises(InvalidArgument):
        RandModel("gaussian", -1)
    with pytest.raises(InvalidArgument):
        RandModel("cauchy", 1)


def test_firing_interval_conversion():
    # uniform 4.5..5.8 us: half-span 0.65 us
    m = FiringIntervalDist("uniform", 4.5, 5.8).range_error_model()
    assert m.kind == "uniform" and m.scale == pytest.approx(0.65e-6 * SPEED_OF_LIGHT / 2)


def test_load_profiles_overlay(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"Custom": dict(P["VLP-16"].to_dict(), mot=2.0), "XT32": {"mot": 0.5}}))
    merged = load_profiles(p)
    assert merged["Custom"].mot == 2.0 and merged["Custom"].name == "Custom"
    assert merged["XT32"].mot == 0.5 and merged["XT32"].fingerprint
    assert merged["VLP-16"] == P["VLP-16"]


def test_load_profiles_bad(tmp_path):
    p = tmp_path / "p.json"
    p.write_text("{not json")
    with pytest.raises(Exception) as e:
        load_profiles(p)
    assert isinstance(e.value, ValueError)


def test_shipped_profiles_file_matches_builtins(tmp_path):
    shipped = Path(__file__).parents[1] / "src" / "lidarspoof" / "data" / "profiles.json"
    dump_profiles(P, tmp_path / "p.json")
    assert json.loads(shipped.read_text()) == json.loads((tmp_path / "p.json").read_text())
    assert load_profiles(shipped, base={}) == dict(P)
