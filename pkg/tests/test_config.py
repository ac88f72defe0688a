from __future__ import annotations

import json
import pytest
from ncse.config import RunConfig
from ncse.utils import ArgumentError
from pathlib import Path


def test_defaults() -> None:
    cfg = RunConfig()
    assert cfg.latent_dim == 64
    assert cfg.kappa == 50.0
    assert cfg.p_center == 0.5
    assert cfg.w_gp == 5.0
    assert cfg.threshold == 0.5


def test_file_then_flags(tmp_path: Path) -> None:
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"seed": 4, "kappa": 10.0, "epochs": 7}))
    cfg = RunConfig.resolve(str(config), kappa=25.0, epochs=None)
    assert cfg.seed == 4
    assert cfg.kappa == 25.0
    assert cfg.epochs == 7
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_unknown_keys(tmp_path: Path) -> None:
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"kapa": 10.0}))
    with pytest.raises(ArgumentError):
        RunConfig.resolve(str(config))
    with pytest.raises(ArgumentError):
        RunConfig.resolve(None, kapa=1.0)


def test_unreadable_config(tmp_path: Path) -> None:
    with pytest.raises(ArgumentError):
        RunConfig.resolve(str(tmp_path / "missing.json"))
    config = tmp_path / "run.json"
    config.write_text("{")
    with pytest.raises(ArgumentError):
        RunConfig.resolve(str(config))
    config.write_text("[1, 2]")
    with pytest.raises(ArgumentError):
        RunConfig.resolve(str(config))


@pytest.mark.parametrize(
    "override",
    [
        {"latent_dim": 1},
        {"epochs": 0},
        {"lr": -0.1},
        {"kappa": -1.0},
        {"p_center": 1.5},
        {"threshold": -0.1},
        {"seed": -3},
        {"epochs": 2.5},
        {"kappa": float("nan")},
        {"steps": True},
    ],
)
def test_invalid_values(override: dict) -> None:
    with pytest.raises(ArgumentError):
        RunConfig(**override)


def test_integers_are_accepted_for_floats() -> None:
    assert RunConfig(kappa=10).kappa == 10
