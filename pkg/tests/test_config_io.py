"""INI experiment files and config fingerprints."""

from pathlib import Path

import pytest

from sparsebudget.core.errors import ConfigurationError
from sparsebudget.schemas.experiment import Algorithm, DataSource
from sparsebudget.schemas.schedules import ScheduleKind
from sparsebudget.utils.config_io import (
    load_experiment_config,
    parse_experiment_config,
    render_resolved_config,
    write_resolved_config,
)
from sparsebudget.utils.fingerprint import ConfigFingerprint, fingerprint

CONFIGS = Path(__file__).parent.parent / "configs"

MINIMAL = """
[experiment]
algorithm = exploration
trials = 2

[budget]
s = 20
s_prime = 40
"""


class TestParse:
    def test_minimal_config_takes_defaults(self):
        config = parse_experiment_config(MINIMAL)
        assert config.experiment.algorithm is Algorithm.EXPLORATION
        assert config.experiment.trials == 2
        assert config.data.source is DataSource.DESK
        assert config.schedule.kind is ScheduleKind.CONSTANT
        assert config.optimizer.eta is None

    def test_blank_values_fall_back_to_defaults(self):
        config = parse_experiment_config(MINIMAL + "\n[optimizer]\nT = 7\neta =\n")
        assert config.optimizer.T == 7
        assert config.optimizer.eta is None

    def test_keys_are_case_sensitive(self):
        config = parse_experiment_config(MINIMAL + "\n[hybrid]\nK = 4\nT_minus = 2\n")
        assert (config.hybrid.K, config.hybrid.T_minus) == (4, 2)

    def test_init_support_list(self):
        text = MINIMAL.replace("exploration", "exploitation") + "\n[optimizer]\ninit_support = 1, 5 9\n"
        assert parse_experiment_config(text).optimizer.init_support == [1, 5, 9]

    def test_exploitation_needs_init_support(self):
        with pytest.raises(ConfigurationError):
            parse_experiment_config(MINIMAL.replace("exploration", "exploitation"))

    def test_unknown_section(self):
        with pytest.raises(ConfigurationError, match="plotting"):
            parse_experiment_config(MINIMAL + "\n[plotting]\ncolor = red\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="optimizer"):
            parse_experiment_config(MINIMAL + "\n[optimizer]\nmomentum = 0.9\n")

    def test_invalid_value_names_the_field(self):
        with pytest.raises(ConfigurationError, match="experiment.trials"):
            parse_experiment_config(MINIMAL.replace("trials = 2", "trials = 0"))

    def test_malformed_text(self):
        with pytest.raises(ConfigurationError):
            parse_experiment_config("s = 20\n")

    def test_csv_source_requirements(self, tmp_path):
        text = MINIMAL + "\n[data]\nsource = csv\ncsv_path = rows.csv\ntarget = y\n"
        with pytest.raises(ConfigurationError, match="s_star"):
            parse_experiment_config(text, base_dir=tmp_path)
        config = parse_experiment_config(
            text.replace("s_prime = 40", "s_prime = 40\ns_star = 5"), base_dir=tmp_path
        )
        assert config.data.csv_path == tmp_path / "rows.csv"


class TestFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_experiment_config(tmp_path / "absent.ini")

    @pytest.mark.parametrize("name", ["desk.ini", "section6.ini", "ct_slice.ini"])
    def test_shipped_presets_validate(self, name):
        config = load_experiment_config(CONFIGS / name)
        assert config.budget.s < config.budget.s_prime

    def test_resolved_config_reloads_identically(self, tmp_path):
        config = load_experiment_config(CONFIGS / "desk.ini")
        path = write_resolved_config(config, tmp_path / "resolved_config.ini")
        assert load_experiment_config(path) == config

    def test_resolved_config_lists_every_section(self):
        text = render_resolved_config(parse_experiment_config(MINIMAL))
        for section in ("[experiment]", "[schedule]", "[exploit_schedule]", "[output]"):
            assert section in text
        assert "confidence = 0.1" in text


class TestFingerprint:
    def test_stable_and_sensitive(self):
        first = parse_experiment_config(MINIMAL)
        again = parse_experiment_config(MINIMAL)
        changed = parse_experiment_config(MINIMAL.replace("trials = 2", "trials = 3"))
        assert fingerprint.digest(first) == fingerprint.digest(again)
        assert fingerprint.digest(first) != fingerprint.digest(changed)
        assert len(fingerprint.digest(first)) == 16

    def test_length(self):
        assert len(ConfigFingerprint(length=8).digest(parse_experiment_config(MINIMAL))) == 8
