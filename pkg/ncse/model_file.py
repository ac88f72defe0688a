from __future__ import annotations

import json
import struct
import numpy as np
from dataclasses import dataclass
from ncse.data import Data, data_factory
from ncse.net import Activation, DenseNet, Layer
from ncse.utils import MalformedModelFileError
from typing import Any, TypedDict

__version__ = "1.0.0"

MAGIC = b"NCSE"
FORMAT_VERSION = 1
# magic, format version, layer count
HEADER_SIZE = 4 + 2 + 2
# rows, cols, activation tag
RECORD_SIZE = 4 + 4 + 1

activation_lookup = {
    0: Activation.IDENTITY,
    1: Activation.RELU,
    2: Activation.TANH,
    3: Activation.L2_NORMALIZE,
    4: Activation.SIGMOID,
}

activation_inversion = {v: k for k, v in activation_lookup.items()}


class EncoderSidecar(TypedDict):
    file_version: str
    p: int
    n: int
    window_s: float
    stride_s: float
    class_names: list[str]


class DiscriminatorSidecar(TypedDict):
    file_version: str
    d: int
    p: int
    epsilon: float
    w_gp: float


@dataclass
class LayerRecord:
    rows: int
    cols: int
    activation: Activation

    @classmethod
    def pack(cls, layer: Layer) -> LayerRecord:
        return cls(
            rows=layer.input_dim,
            cols=layer.output_dim,
            activation=layer.activation,
        )

    @classmethod
    def parse(cls, data: Data, offset: int) -> LayerRecord:
        tag = data.u8(offset + 8)
        if tag not in activation_lookup:
            msg = f"Unknown activation tag! [{tag}]"
            raise MalformedModelFileError(msg)
        return cls(
            rows=data.u32(offset),
            cols=data.u32(offset + 4),
            activation=activation_lookup[tag],
        )

    @property
    def parameter_count(self) -> int:
        return self.rows * self.cols + self.cols

    def flatten(self) -> bytes:
        return struct.pack(
            "<IIB",
            self.rows,
            self.cols,
            activation_inversion[self.activation],
        )


class ModelFile:
    raw_data: bytes
    data: Data
    _records: list[LayerRecord]

    def __init__(self, raw_data: bytes) -> None:
        self.raw_data = bytes(raw_data)
        self.data = Data(self.raw_data)
        if self.data[0:4] != MAGIC:
            msg = f"Invalid fingerprint! [{bytes(self.data[0:4])!r}]"
            raise MalformedModelFileError(msg)
        if self.version != FORMAT_VERSION:
            msg = f"Unsupported model format version! [{self.version}]"
            raise MalformedModelFileError(msg)
        self.parse_records()
        if len(self.data) != self.parameters_offset + 8 * sum(
            r.parameter_count for r in self._records
        ):
            msg = "Data length != layer table!"
            raise MalformedModelFileError(msg)

    @property
    def version(self) -> int:
        return self.data.u16(4)

    @property
    def layer_count(self) -> int:
        return self.data.u16(6)

    @property
    def parameters_offset(self) -> int:
        return HEADER_SIZE + RECORD_SIZE * self.layer_count

    def records(self) -> list[LayerRecord]:
        return self._records

    def parse_records(self) -> None:
        if self.layer_count == 0:
            msg = "Model file holds no layers!"
            raise MalformedModelFileError(msg)
        self._records = [
            LayerRecord.parse(self.data, HEADER_SIZE + RECORD_SIZE * i)
            for i in range(self.layer_count)
        ]

    def to_net(self) -> DenseNet:
        layers = []
        offset = self.parameters_offset
        for record in self._records:
            weights = self.data.float64s(offset, record.rows * record.cols)
            offset += 8 * record.rows * record.cols
            bias = self.data.float64s(offset, record.cols)
            offset += 8 * record.cols
            layers.append(
                Layer(
                    weights=weights.reshape(record.rows, record.cols),
                    bias=bias,
                    activation=record.activation,
                )
            )
        return DenseNet(tuple(layers))

    @classmethod
    def from_net(cls, net: DenseNet) -> ModelFile:
        records = [LayerRecord.pack(layer) for layer in net.layers]
        raw = data_factory(
            MAGIC,
            struct.pack("<HH", FORMAT_VERSION, len(records)),
            b"".join(r.flatten() for r in records),
        )
        for layer in net.layers:
            raw += data_factory(layer.weights, layer.bias)
        return cls(bytes(raw))

    def flatten(self) -> bytes:
        return self.raw_data


def sidecar_to_json(sidecar: EncoderSidecar | DiscriminatorSidecar) -> str:
    return json.dumps(sidecar, indent=4)


def check_sidecar(data: dict[str, Any], keys: tuple[str, ...]) -> None:
    if not isinstance(data, dict):
        msg = "Sidecar must be a JSON object!"
        raise MalformedModelFileError(msg)
    if data.get("file_version") != __version__:
        msg = f"Unsupported file version: {data.get('file_version')}"
        raise MalformedModelFileError(msg)
    missing = [key for key in keys if key not in data]
    if missing:
        msg = f"Sidecar is missing keys! {missing}"
        raise MalformedModelFileError(msg)


def parameters_equal(a: DenseNet, b: DenseNet) -> bool:
    return len(a.layers) == len(b.layers) and all(
        np.array_equal(p, q)
        for p, q in zip(a.parameters(), b.parameters(), strict=True)
    )
