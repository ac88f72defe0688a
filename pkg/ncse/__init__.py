from __future__ import annotations

import json
from ncse.adversarial import DiscriminatorModel
from ncse.encoder import EncoderModel
from ncse.model_file import (
    DiscriminatorSidecar,
    EncoderSidecar,
    ModelFile,
    __version__,
    check_sidecar,
    sidecar_to_json,
)
from ncse.utils import (
    MalformedModelFileError,
    atomic_write_all,
)
from pathlib import Path
from typing import Any

ENCODER_FILE = "encoder.ncse"
ENCODER_SIDECAR = "encoder.json"
DISCRIMINATOR_FILE = "discriminator.ncse"
DISCRIMINATOR_SIDECAR = "discriminator.json"


def model_file_from_path(model_file: str | Path) -> ModelFile:
    with Path(model_file).open("rb") as f:
        return ModelFile(f.read())


def _read_sidecar(sidecar_file: str | Path, keys: tuple[str, ...]) -> Any:
    try:
        with Path(sidecar_file).open("r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        msg = f"Unable to parse {sidecar_file}: {e}"
        raise MalformedModelFileError(msg) from e
    check_sidecar(data, keys)
    return data


def load_encoder(
    model_dir: str | Path,
) -> tuple[EncoderModel, EncoderSidecar]:
    model_dir = Path(model_dir)
    sidecar: EncoderSidecar = _read_sidecar(
        model_dir / ENCODER_SIDECAR,
        ("p", "n", "window_s", "stride_s", "class_names"),
    )
    net = model_file_from_path(model_dir / ENCODER_FILE).to_net()
    model = EncoderModel.from_net(
        net, sidecar["window_s"], sidecar["stride_s"]
    )
    if model.latent_dim != sidecar["p"] or model.n_classes != sidecar["n"]:
        msg = "Encoder sidecar does not match the stored network!"
        raise MalformedModelFileError(msg)
    return model, sidecar


def save_encoder(
    model: EncoderModel,
    class_names: list[str],
    out_dir: str | Path,
) -> int:
    out_dir = Path(out_dir)
    sidecar: EncoderSidecar = {
        "file_version": __version__,
        "p": model.latent_dim,
        "n": model.n_classes,
        "window_s": model.window_s,
        "stride_s": model.stride_s,
        "class_names": class_names,
    }
    payload = bytes(ModelFile.from_net(model.net).flatten())
    return atomic_write_all(
        {
            out_dir / ENCODER_FILE: payload,
            out_dir / ENCODER_SIDECAR: sidecar_to_json(sidecar).encode(),
        }
    )


def load_discriminator(
    model_dir: str | Path,
) -> tuple[DiscriminatorModel, DiscriminatorSidecar]:
    model_dir = Path(model_dir)
    sidecar: DiscriminatorSidecar = _read_sidecar(
        model_dir / DISCRIMINATOR_SIDECAR, ("d", "p", "epsilon", "w_gp")
    )
    net = model_file_from_path(model_dir / DISCRIMINATOR_FILE).to_net()
    model = DiscriminatorModel(
        net, sidecar["d"], sidecar["p"], sidecar["epsilon"]
    )
    return model, sidecar


def save_discriminator(
    model: DiscriminatorModel,
    w_gp: float,
    out_dir: str | Path,
) -> int:
    out_dir = Path(out_dir)
    sidecar: DiscriminatorSidecar = {
        "file_version": __version__,
        "d": model.state_dim,
        "p": model.latent_dim,
        "epsilon": model.epsilon,
        "w_gp": w_gp,
    }
    payload = bytes(ModelFile.from_net(model.net).flatten())
    return atomic_write_all(
        {
            out_dir / DISCRIMINATOR_FILE: payload,
            out_dir / DISCRIMINATOR_SIDECAR: sidecar_to_json(sidecar).encode(),
        }
    )
