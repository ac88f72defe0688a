from __future__ import annotations

import struct
import numpy as np
from ncse.utils import MalformedModelFileError


class Data(bytearray):
    """A bytearray with some extra methods for reading little-endian data."""

    def _check(self, offset: int, length: int) -> None:
        if offset < 0 or offset + length > len(self):
            msg = (
                f"Read past end of data! [{offset}+{length} > {len(self)}] "
                "Either a record was processed wrong or the file is "
                "truncated."
            )
            raise MalformedModelFileError(msg)

    def u8(self, offset: int) -> int:
        self._check(offset, 1)
        return self[offset]

    def u16(self, offset: int) -> int:
        self._check(offset, 2)
        return struct.unpack("<H", self[offset : offset + 2])[0]

    def u32(self, offset: int) -> int:
        self._check(offset, 4)
        return struct.unpack("<I", self[offset : offset + 4])[0]

    def bytearray(self, offset: int, length: int) -> Data:
        self._check(offset, length)
        return Data(self[offset : offset + length])

    def float64s(self, offset: int, count: int) -> np.ndarray:
        self._check(offset, 8 * count)
        return np.frombuffer(
            bytes(self[offset : offset + 8 * count]),
            dtype="<f8",
        ).astype(np.float64)


# Automatically handle mixing bytes, arrays and single byte values
def data_factory(*args) -> Data:
    data = Data()
    for arg in args:
        if isinstance(arg, np.ndarray):
            data.extend(np.ascontiguousarray(arg, dtype="<f8").tobytes())
        elif isinstance(arg, (bytes, bytearray)):
            data.extend(arg)
        else:
            data.append(arg)
    return data
