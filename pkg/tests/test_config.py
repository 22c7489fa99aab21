"""Pipeline configuration files: defaults, overrides, and round trips."""

from __future__ import annotations

import json
from datetime import date, timedelta

import pytest

from busflux.cleaning import WINDOW_WHOLE_DATASET, CleaningConfig
from busflux.config import (
    DEFAULT_SEMESTER_START,
    PipelineConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    write_config,
)
from busflux.errors import ConfigError, ParseError
from busflux.features import SplitSpec
from busflux.models import TrainConfig
from busflux.synth import NoiseMix, ScenarioConfig


def test_no_file_means_all_defaults():
    cfg = load_config(None)
    assert cfg == PipelineConfig()
    assert cfg.calendar.semester_start == DEFAULT_SEMESTER_START


def test_empty_document_means_all_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{}")
    assert load_config(path) == PipelineConfig()


def test_round_trip_preserves_every_section(tmp_path):
    cfg = PipelineConfig(
        cleaning=CleaningConfig(
            d_min=timedelta(seconds=90),
            gap=timedelta(minutes=7),
            rssi_lo=-75,
            multi_stop_window=WINDOW_WHOLE_DATASET,
        ),
        split=SplitSpec(seed=3, test_fraction=0.25),
        train=TrainConfig(epochs=12, learning_rate=0.05, dnn_hidden=(10, 5)),
        scenario=ScenarioConfig(
            seed=4,
            days=2,
            start_date=date(2017, 5, 1),
            noise=NoiseMix(randomized=0.2),
        ),
    )
    path = tmp_path / "cfg.json"
    write_config(cfg, path)
    assert load_config(path) == cfg


def test_partial_section_keeps_other_fields_at_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"cleaning": {"rssi_lo": -70}}))
    cfg = load_config(path)
    assert cfg.cleaning.rssi_lo == -70
    assert cfg.cleaning.rssi_hi == CleaningConfig().rssi_hi
    assert cfg.train == TrainConfig()


def test_unknown_section_is_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"cleanup": {}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_non_object_root_is_rejected():
    with pytest.raises(ConfigError):
        config_from_dict([1, 2, 3])


def test_invalid_json_raises_parse_error(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        load_config(path)


def test_section_values_are_validated(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"train": {"epochs": 0}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_scenario_inherits_pipeline_cleaning_when_unspecified():
    cfg = config_from_dict({"cleaning": {"gap_seconds": 600}})
    assert cfg.scenario.cleaning.gap == timedelta(seconds=600)
    assert cfg.scenario.cleaning is cfg.cleaning


def test_scenario_cleaning_can_diverge_when_spelled_out():
    cfg = config_from_dict(
        {
            "cleaning": {"gap_seconds": 600},
            "scenario": {"cleaning": {"gap_seconds": 300}},
        }
    )
    assert cfg.cleaning.gap == timedelta(seconds=600)
    assert cfg.scenario.cleaning.gap == timedelta(seconds=300)


def test_config_dict_is_json_complete():
    """Serializing and re-parsing the dict form is lossless for defaults."""
    cfg = PipelineConfig()
    data = json.loads(json.dumps(config_to_dict(cfg)))
    assert config_from_dict(data) == cfg


def test_written_file_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_config(PipelineConfig(), a)
    write_config(PipelineConfig(), b)
    assert a.read_bytes() == b.read_bytes()
