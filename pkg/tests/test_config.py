import json

import pytest

from urbanrt.config import (
    CitySpec,
    ConfigError,
    ScenarioConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    desk_preset,
    load_config,
)


def valid_dict():
    return {
        "band_ghz": 8.2,
        "mode": "interference_free",
        "n_ues": 10,
        "n_realizations": 1,
        "seed_city": 1,
        "seed_ue": 2,
        "density_per_km2": 17,
        "city": {"alpha0": 0.5, "beta0": 300, "gamma0": 50, "n_buildings": 49},
    }


class TestConfigParsing:
    def test_minimal_valid(self):
        cfg = config_from_dict(valid_dict())
        assert cfg.band_ghz == 8.2
        assert cfg.p_t_w == 1.0  # default
        assert cfg.trace.max_paths == 25

    def test_unknown_top_key_rejected(self):
        d = valid_dict()
        d["bogus"] = 1
        with pytest.raises(ConfigError, match="bogus"):
            config_from_dict(d)

    def test_unknown_nested_key_rejected(self):
        d = valid_dict()
        d["trace"] = {"max_reflections": 2, "rays": 99}
        with pytest.raises(ConfigError, match="rays"):
            config_from_dict(d)

    def test_missing_required_keys_listed(self):
        with pytest.raises(ConfigError, match="seed_city"):
            config_from_dict({"band_ghz": 4.6})

    def test_band_must_be_supported(self):
        d = valid_dict()
        d["band_ghz"] = 10.0
        with pytest.raises(ConfigError, match="unsupported"):
            config_from_dict(d)

    def test_density_xor_isd(self):
        d = valid_dict()
        d["isd_m"] = 350
        with pytest.raises(ConfigError, match="exactly one"):
            config_from_dict(d)
        del d["density_per_km2"]
        assert config_from_dict(d).isd_m == 350.0

    def test_city_file_excludes_inline(self):
        d = valid_dict()
        d["city"] = {"file": "c.json", "alpha0": 0.5}
        with pytest.raises(ConfigError, match="excludes"):
            config_from_dict(d)

    def test_type_errors_are_precise(self):
        d = valid_dict()
        d["n_ues"] = "ten"
        with pytest.raises(ConfigError, match="n_ues"):
            config_from_dict(d)

    def test_load_reports_json_line(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{\n "band_ghz": 8.2,\n oops\n}')
        with pytest.raises(ConfigError, match="line 3"):
            load_config(p)


class TestConfigHash:
    def test_stable_roundtrip(self, tmp_path):
        cfg = config_from_dict(valid_dict())
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(config_to_dict(cfg)))
        again = load_config(p)
        assert config_hash(cfg) == config_hash(again)

    def test_sensitive_to_any_field(self):
        a = config_from_dict(valid_dict())
        d = valid_dict()
        d["seed_ue"] = 3
        b = config_from_dict(d)
        assert config_hash(a) != config_hash(b)


class TestDeskPreset:
    def test_shape(self):
        cfg = desk_preset()
        assert cfg.n_ues == 100
        assert cfg.n_realizations == 3
        assert cfg.trace.max_reflections == 3
        assert cfg.density_per_km2 == 17.0
        assert cfg.city.n_buildings == 121

    def test_seeds_explicit(self):
        cfg = desk_preset()
        assert isinstance(cfg.seed_city, int)
        assert isinstance(cfg.seed_ue, int)


class TestScenarioConfigValidation:
    def test_workers_positive(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(
                band_ghz=4.6, mode="interference_free", n_ues=1, n_realizations=1,
                seed_city=0, seed_ue=0, density_per_km2=17.0, workers=0,
                city=CitySpec(alpha0=0.5, beta0=300.0, gamma0=50.0, n_buildings=9),
            )

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(
                band_ghz=4.6, mode="half_interference", n_ues=1, n_realizations=1,
                seed_city=0, seed_ue=0, density_per_km2=17.0,
                city=CitySpec(alpha0=0.5, beta0=300.0, gamma0=50.0, n_buildings=9),
            )
