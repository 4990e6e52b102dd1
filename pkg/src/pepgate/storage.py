"""Shared on-disk container for gate and model files.

Layout (all integers little-endian):

    magic      4 bytes
    version    uint16
    meta_len   uint32, then meta_len bytes of UTF-8 JSON (sorted keys)
    n_sections uint32
    per section: name_len uint16, name bytes, payload_len uint64, payload
    sha256     32 bytes over everything above

The digest is checked before anything else is interpreted, so truncation
and bit corruption surface as ChecksumMismatch; an unexpected magic or
version surfaces as FormatVersionMismatch.
"""

from __future__ import annotations

import hashlib
import json
import struct

from .errors import ChecksumMismatch, FormatVersionMismatch

_DIGEST_LEN = 32


def pack(magic: bytes, version: int, meta: dict, sections: list[tuple[str, bytes]]) -> bytes:
    if len(magic) != 4:
        raise ValueError("magic must be 4 bytes")
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    out = bytearray()
    out += magic
    out += struct.pack("<H", version)
    out += struct.pack("<I", len(meta_bytes))
    out += meta_bytes
    out += struct.pack("<I", len(sections))
    for name, payload in sections:
        name_b = name.encode()
        out += struct.pack("<H", len(name_b))
        out += name_b
        out += struct.pack("<Q", len(payload))
        out += payload
    out += hashlib.sha256(bytes(out)).digest()
    return bytes(out)


def unpack(data: bytes, magic: bytes, version: int) -> tuple[dict, list[tuple[str, bytes]]]:
    if len(data) < 4 + 2 + 4 + 4 + _DIGEST_LEN:
        raise ChecksumMismatch("file truncated")
    body, digest = data[:-_DIGEST_LEN], data[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch("checksum failed (truncated or corrupted file)")
    if body[:4] != magic:
        raise FormatVersionMismatch(
            f"unexpected file type {body[:4]!r}, wanted {magic!r}"
        )
    (got_version,) = struct.unpack_from("<H", body, 4)
    if got_version != version:
        raise FormatVersionMismatch(
            f"format version {got_version}, this build reads version {version}"
        )
    pos = 6
    try:
        (meta_len,) = struct.unpack_from("<I", body, pos)
        pos += 4
        meta = json.loads(body[pos : pos + meta_len].decode())
        pos += meta_len
        (n_sections,) = struct.unpack_from("<I", body, pos)
        pos += 4
        sections = []
        for _ in range(n_sections):
            (name_len,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = body[pos : pos + name_len].decode()
            pos += name_len
            (payload_len,) = struct.unpack_from("<Q", body, pos)
            pos += 8
            payload = body[pos : pos + payload_len]
            if len(payload) != payload_len:
                raise ChecksumMismatch("section payload shorter than declared")
            pos += payload_len
            sections.append((name, payload))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumMismatch(f"container structure unreadable: {exc}") from exc
    return meta, sections


def write_file(path, magic: bytes, version: int, meta: dict, sections) -> None:
    data = pack(magic, version, meta, list(sections))
    with open(path, "wb") as fh:
        fh.write(data)


def read_file(path, magic: bytes, version: int):
    with open(path, "rb") as fh:
        data = fh.read()
    return unpack(data, magic, version)
