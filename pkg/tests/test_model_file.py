from __future__ import annotations

import pytest
import struct
from ncse import (
    DISCRIMINATOR_FILE,
    DISCRIMINATOR_SIDECAR,
    ENCODER_SIDECAR,
    load_discriminator,
    model_file_from_path,
    save_discriminator,
    save_encoder,
)
from ncse.adversarial import build_discriminator
from ncse.encoder import build_encoder
from ncse.model_file import (
    HEADER_SIZE,
    ModelFile,
    check_sidecar,
    parameters_equal,
)
from ncse.net import Activation, build_net
from ncse.utils import MalformedModelFileError
from pathlib import Path


def sample_net():
    return build_net(
        [7, 5, 4, 3],
        [Activation.RELU, Activation.L2_NORMALIZE, Activation.IDENTITY],
        2,
    )


def test_round_trip_is_bit_exact(tmp_path: Path) -> None:
    net = sample_net()
    raw = ModelFile.from_net(net).flatten()
    (tmp_path / "net.ncse").write_bytes(raw)
    loaded = model_file_from_path(tmp_path / "net.ncse")
    assert parameters_equal(loaded.to_net(), net)
    assert [layer.activation for layer in loaded.to_net().layers] == [
        Activation.RELU,
        Activation.L2_NORMALIZE,
        Activation.IDENTITY,
    ]
    assert ModelFile.from_net(loaded.to_net()).flatten() == raw
    assert loaded.layer_count == 3


def test_bad_magic() -> None:
    raw = bytearray(ModelFile.from_net(sample_net()).flatten())
    raw[0:4] = b"MThd"
    with pytest.raises(MalformedModelFileError):
        ModelFile(bytes(raw))


def test_truncated_file() -> None:
    raw = ModelFile.from_net(sample_net()).flatten()
    with pytest.raises(MalformedModelFileError):
        ModelFile(raw[:-8])
    with pytest.raises(MalformedModelFileError):
        ModelFile(raw[:HEADER_SIZE + 3])
    with pytest.raises(MalformedModelFileError):
        ModelFile(raw[:2])


def test_unknown_activation_tag() -> None:
    raw = bytearray(ModelFile.from_net(sample_net()).flatten())
    raw[HEADER_SIZE + 8] = 9
    with pytest.raises(MalformedModelFileError):
        ModelFile(bytes(raw))


def test_unsupported_version() -> None:
    raw = bytearray(ModelFile.from_net(sample_net()).flatten())
    raw[4:6] = struct.pack("<H", 7)
    with pytest.raises(MalformedModelFileError):
        ModelFile(bytes(raw))


def test_check_sidecar() -> None:
    check_sidecar({"file_version": "1.0.0", "p": 3}, ("p",))
    with pytest.raises(MalformedModelFileError):
        check_sidecar({"file_version": "0.9.0", "p": 3}, ("p",))
    with pytest.raises(MalformedModelFileError):
        check_sidecar({"file_version": "1.0.0"}, ("p",))


def test_save_encoder_leaves_nothing_behind_on_failure(
    tmp_path: Path,
) -> None:
    model = build_encoder(6, 3, 2, 0)
    out = tmp_path / "encoder"
    # a directory where the sidecar should go makes its rename fail
    (out / ENCODER_SIDECAR).mkdir(parents=True)
    with pytest.raises(OSError):
        save_encoder(model, ["a", "b"], out)
    assert [p.name for p in out.iterdir()] == [ENCODER_SIDECAR]


def test_save_discriminator_is_all_or_nothing(tmp_path: Path) -> None:
    model = build_discriminator(4, 3, 0)
    out = tmp_path / "disc"
    (out / DISCRIMINATOR_SIDECAR).mkdir(parents=True)
    with pytest.raises(OSError):
        save_discriminator(model, 5.0, out)
    assert [p.name for p in out.iterdir()] == [DISCRIMINATOR_SIDECAR]
    (out / DISCRIMINATOR_SIDECAR).rmdir()
    written = save_discriminator(model, 5.0, out)
    assert sorted(p.name for p in out.iterdir()) == sorted(
        [DISCRIMINATOR_FILE, DISCRIMINATOR_SIDECAR]
    )
    assert written == sum(p.stat().st_size for p in out.iterdir())
    loaded, sidecar = load_discriminator(out)
    assert parameters_equal(loaded.net, model.net)
    assert sidecar["w_gp"] == 5.0
