"""Configuration defaults, validation and the flat config file format."""

import pytest

from spixtrack.config import (
    TrackerConfig,
    config_from_dict,
    parse_config_file,
    write_config_file,
)
from spixtrack.errors import ParameterError


class TestDefaults:
    def test_reference_setup_values(self):
        cfg = TrackerConfig()
        assert (cfg.template_w, cfg.template_h) == (32, 32)
        assert cfg.superpixels == 30
        assert cfg.compactness == 20.0
        assert cfg.update_rate == 5
        assert cfg.gamma == 0.5
        assert cfg.threshold == 0.0
        assert cfg.particles == 600
        assert cfg.negatives == 200
        assert cfg.bins == 8
        assert cfg.dictionary_size == 50
        assert cfg.lam == 0.01

    def test_noise_and_ranks_accessors(self):
        cfg = TrackerConfig()
        assert cfg.noise().as_array().shape == (6,)
        assert cfg.ranks() == (8, 8, 5)


class TestValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"superpixels": 0},
            {"superpixels": 2000},  # exceeds 32x32 template
            {"gamma": 1.5},
            {"forgetting": 0.0},
            {"annulus_inner": 20.0},  # inner >= outer
            {"lam": -0.1},
            {"sigma_x": -1.0},
            {"rank1": 100},
            {"workers": 0},
        ],
    )
    def test_bad_values_rejected(self, overrides):
        with pytest.raises(ParameterError):
            TrackerConfig(**overrides)


class TestConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = TrackerConfig(particles=40, lam=0.02, rng_seed=99)
        path = tmp_path / "tracker.cfg"
        write_config_file(cfg, path)
        assert parse_config_file(path) == cfg

    def test_parses_comments_and_spacing(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text(
            "# tracker setup\n"
            "particles = 25\n"
            "lambda = 0.05   # alias for lam\n"
            "superpixels   12\n"
            "\n"
        )
        cfg = parse_config_file(path)
        assert cfg.particles == 25
        assert cfg.lam == 0.05
        assert cfg.superpixels == 12

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("not_a_field = 3\n")
        with pytest.raises(ParameterError, match="not_a_field"):
            parse_config_file(path)

    def test_bad_value_rejected(self):
        with pytest.raises(ParameterError, match="particles"):
            config_from_dict({"particles": "many"})

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ParameterError):
            parse_config_file(tmp_path / "absent.cfg")
