"""Shared helpers for the binary dataset and checkpoint containers.

Both formats are little-endian, open with a 4-byte magic and a u32
version, and close with a CRC32 of everything before it.  Readers raise
a distinct error type per failure mode so callers can tell apart a wrong
file, a future version, a short read, and corruption.
"""

from __future__ import annotations

import struct
import zlib
from typing import BinaryIO

__all__ = [
    "FormatError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedFileError",
    "ChecksumError",
    "ChecksumWriter",
    "ChecksumReader",
]


class FormatError(ValueError):
    """Base class for container format failures."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class ChecksumWriter:
    """Write wrapper that accumulates a CRC32 over emitted bytes."""

    def __init__(self, fh: BinaryIO):
        self._fh = fh
        self._crc = 0

    def write(self, data: bytes) -> None:
        self._crc = zlib.crc32(data, self._crc)
        self._fh.write(data)

    def pack(self, fmt: str, *values) -> None:
        self.write(struct.pack(fmt, *values))

    def finish(self) -> None:
        """Append the running CRC32 (not itself checksummed)."""
        self._fh.write(struct.pack("<I", self._crc))


class ChecksumReader:
    """Read wrapper that accumulates a CRC32 and tracks position."""

    def __init__(self, fh: BinaryIO, name: str = "file"):
        self._fh = fh
        self._crc = 0
        self.name = name

    def read(self, n: int, what: str) -> bytes:
        data = self._fh.read(n)
        if len(data) != n:
            raise TruncatedFileError(
                f"{self.name}: truncated while reading {what} "
                f"(wanted {n} bytes, got {len(data)})"
            )
        self._crc = zlib.crc32(data, self._crc)
        return data

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.read(struct.calcsize(fmt), what))

    def expect_magic(self, magic: bytes) -> None:
        got = self._fh.read(len(magic))
        if len(got) != len(magic):
            raise TruncatedFileError(f"{self.name}: shorter than its magic header")
        if got != magic:
            raise BadMagicError(f"{self.name}: bad magic {got!r}, expected {magic!r}")
        self._crc = zlib.crc32(got, self._crc)

    def expect_version(self, supported: int) -> int:
        (version,) = self.unpack("<I", "format version")
        if version != supported:
            raise UnsupportedVersionError(
                f"{self.name}: format version {version}, this reader supports {supported}"
            )
        return version

    def verify_checksum(self) -> None:
        expected = self._crc
        raw = self._fh.read(4)
        if len(raw) != 4:
            raise TruncatedFileError(f"{self.name}: missing trailing checksum")
        (stored,) = struct.unpack("<I", raw)
        if stored != expected:
            raise ChecksumError(
                f"{self.name}: checksum mismatch "
                f"(stored {stored:#010x}, computed {expected:#010x})"
            )
        trailing = self._fh.read(1)
        if trailing:
            raise FormatError(f"{self.name}: trailing bytes after checksum")
