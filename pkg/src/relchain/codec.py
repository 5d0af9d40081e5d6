"""Canonical byte encoding used for hashing and every wire surface.

The format is deliberately dumb: fixed-width big-endian integers,
length-prefixed UTF-8 strings and byte strings, length-prefixed lists.
No maps, no varints, no optional fields. Two equal values always encode
to the same bytes, and every byte sequence decodes to at most one value.
"""

from __future__ import annotations

import struct

U8_MAX = 0xFF
U32_MAX = 0xFFFFFFFF
U64_MAX = 0xFFFFFFFFFFFFFFFF
I64_MIN = -(1 << 63)
I64_MAX = (1 << 63) - 1


class DecodeError(ValueError):
    """Raised when bytes do not form a canonical encoding."""


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, v: int) -> None:
        if not 0 <= v <= U8_MAX:
            raise ValueError(f"u8 out of range: {v}")
        self._parts.append(v.to_bytes(1, "big"))

    def u32(self, v: int) -> None:
        if not 0 <= v <= U32_MAX:
            raise ValueError(f"u32 out of range: {v}")
        self._parts.append(v.to_bytes(4, "big"))

    def u64(self, v: int) -> None:
        if not 0 <= v <= U64_MAX:
            raise ValueError(f"u64 out of range: {v}")
        self._parts.append(v.to_bytes(8, "big"))

    def i64(self, v: int) -> None:
        if not I64_MIN <= v <= I64_MAX:
            raise ValueError(f"i64 out of range: {v}")
        self._parts.append(struct.pack(">q", v))

    def bytes_(self, v: bytes) -> None:
        self.u32(len(v))
        self._parts.append(v)

    def fixed(self, v: bytes, size: int) -> None:
        if len(v) != size:
            raise ValueError(f"expected {size} bytes, got {len(v)}")
        self._parts.append(v)

    def str_(self, v: str) -> None:
        self.bytes_(v.encode("utf-8"))

    def finish(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DecodeError(
                f"truncated input: need {n} bytes at offset {self._pos}, "
                f"have {len(self._data) - self._pos}"
            )
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def i64(self) -> int:
        return struct.unpack(">q", self._take(8))[0]

    def bytes_(self) -> bytes:
        n = self.u32()
        return self._take(n)

    def fixed(self, size: int) -> bytes:
        return self._take(size)

    def str_(self) -> str:
        raw = self.bytes_()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8 at offset {self._pos}: {exc}") from exc

    def at_end(self) -> bool:
        return self._pos == len(self._data)

    def expect_end(self) -> None:
        if not self.at_end():
            raise DecodeError(
                f"{len(self._data) - self._pos} trailing bytes after offset {self._pos}"
            )
