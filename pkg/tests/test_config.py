import json

import pytest

from qsysid.config import load_json_config, parse_float_list, resolve_options
from qsysid.errors import ConfigError


class TestLoad:

    def test_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"runs": 5}))
        assert load_json_config(path) == {"runs": 5}

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_json_config(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{runs: 5")
        with pytest.raises(ConfigError) as info:
            load_json_config(path)
        assert info.value.field == "config"

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_json_config(tmp_path / "nope.json")


class TestResolve:

    def test_precedence(self):
        options = resolve_options(
            "benchmark",
            {"samples": 500, "quantizer": "ceil", "out": "a", "runs": 20},
            {"runs": 3, "snr": None, "out": "b"},
        )
        assert (options["samples"], options["runs"], options["out"]) == (500, 3, "b")
        assert options["snr"] == 10.0
        assert options["threads"] >= 1

    def test_dashed_keys(self):
        options = resolve_options("identify", {"data": "d.csv", "quantizer": "ceil", "out": "o",
                                               "beta-grid": [0.5, 0.9]})
        assert options["beta_grid"] == (0.5, 0.9)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            resolve_options("simulate", {"samples": 10, "quantizer": "ceil", "out": "o", "runs": 2})
        assert info.value.field == "runs"

    def test_missing_required(self):
        with pytest.raises(ConfigError) as info:
            resolve_options("identify", {"quantizer": "ceil", "out": "o"})
        assert info.value.field == "data"

    @pytest.mark.parametrize("key, value", [("seed", -1), ("seed", 2 ** 64), ("threads", 0)])
    def test_range_checks(self, key, value):
        with pytest.raises(ConfigError) as info:
            resolve_options("simulate", {"samples": 10, "quantizer": "ceil", "out": "o", key: value})
        assert info.value.field == key

    @pytest.mark.parametrize("key, value", [("iters", "abc"), ("order", 2.5), ("credible_mass", [0.9]),
                                            ("store_draws", "yes"), ("seed", True)])
    def test_wrong_types(self, key, value):
        with pytest.raises(ConfigError) as info:
            resolve_options("identify", {"data": "d.csv", "quantizer": "ceil", "out": "o", key: value})
        assert info.value.field == key

    def test_numeric_strings_are_converted(self):
        options = resolve_options("identify", {"data": "d.csv", "quantizer": "ceil", "out": "o",
                                               "iters": "400", "burnin": 100.0, "beta": "0.8"})
        assert (options["iters"], options["burnin"], options["beta"]) == (400, 100, 0.8)
        assert isinstance(options["burnin"], int)


def test_float_list():
    assert parse_float_list("beta_grid", "0.5, 0.7,0.9") == (0.5, 0.7, 0.9)
    with pytest.raises(ConfigError):
        parse_float_list("beta_grid", "0.5,high")
