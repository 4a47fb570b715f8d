"""Bit-exact sketch serialization and stream ingestion.

Format (version 1), one field per line, entries sorted by raw hash:

    thetasketch v1
    tcf=<kmv|adaptive|pkmv|fixed|alpha|union|intersect|diff|biased>
    k=<int>
    seed=<16 hex digits>
    theta=<16 hex digits of the binary64 bit pattern>
    retain_ids=<0|1>
    count=<int>
    <16 hex digits of raw hash>[ <percent-encoded identifier>]

Hex bit patterns make round trips exact, including theta's float bits.
"""

from __future__ import annotations

import struct
from typing import IO, Iterable, Iterator, Union
from urllib.parse import unquote_to_bytes

from .errors import InvariantError, ParseError
from .hashing import MASK64, UnitHash
from .sketch import Entry, TcfKind, ThetaSketch, validate

_MAGIC = b"thetasketch v1"

_KIND_NAMES = {kind: kind.value for kind in TcfKind}
_NAME_KINDS = {v: k for k, v in _KIND_NAMES.items()}

# minimal escaping: just the characters that would break the line format
_ESCAPED = {0x25: b"%25", 0x20: b"%20", 0x0A: b"%0A", 0x0D: b"%0D"}


def _escape(identifier: bytes) -> bytes:
    return b"".join(_ESCAPED.get(b, bytes((b,))) for b in identifier)


def _theta_bits(theta: float) -> str:
    return struct.pack(">d", theta).hex()


def _theta_from_bits(bits: str) -> float:
    return struct.unpack(">d", bytes.fromhex(bits))[0]


def serialize_sketch(sk: ThetaSketch) -> bytes:
    """Canonical byte encoding of a sketch; equal sketches give equal bytes."""
    lines = [
        _MAGIC,
        b"tcf=" + _KIND_NAMES[sk.tcf_kind].encode(),
        b"k=%d" % sk.k,
        b"seed=%016x" % (sk.hash_seed & MASK64),
        b"theta=" + _theta_bits(sk.theta).encode(),
        b"retain_ids=%d" % (1 if sk.retains_ids else 0),
        b"count=%d" % len(sk.entries),
    ]
    for e in sorted(sk.entries, key=lambda e: e.hash.raw):
        line = b"%016x" % e.hash.raw
        if e.identifier is not None:
            line += b" " + _escape(e.identifier)
        lines.append(line)
    return b"\n".join(lines) + b"\n"


def _expect(line: bytes, key: str) -> bytes:
    prefix = key.encode() + b"="
    if not line.startswith(prefix):
        raise ParseError(f"expected '{key}=...', got {line!r}")
    return line[len(prefix) :]


def deserialize_sketch(data: bytes) -> ThetaSketch:
    """Parse and validate a serialized sketch; reject on any violation."""
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    if not lines or lines[0] != _MAGIC:
        got = lines[0].decode("ascii", "replace") if lines else "<empty>"
        raise ParseError(f"unknown header {got!r}; expected 'thetasketch v1'")
    if len(lines) < 7:
        raise ParseError("truncated sketch file")
    try:
        kind_name = _expect(lines[1], "tcf").decode("ascii")
        kind = _NAME_KINDS.get(kind_name)
        if kind is None:
            raise ParseError(f"unknown tcf kind {kind_name!r}")
        k = int(_expect(lines[2], "k"))
        seed = int(_expect(lines[3], "seed"), 16)
        theta = _theta_from_bits(_expect(lines[4], "theta").decode("ascii"))
        retain_flag = _expect(lines[5], "retain_ids")
        if retain_flag not in (b"0", b"1"):
            raise ParseError(f"retain_ids must be 0 or 1, got {retain_flag!r}")
        retains_ids = retain_flag == b"1"
        count = int(_expect(lines[6], "count"))
    except (ValueError, struct.error) as exc:
        raise ParseError(f"malformed header field: {exc}") from exc
    if count < 0 or len(lines) != 7 + count:
        raise ParseError(f"expected {count} entry lines, found {len(lines) - 7}")
    entries = []
    for line in lines[7:]:
        raw_hex, sep, ident_part = line.partition(b" ")
        try:
            raw = int(raw_hex, 16)
        except ValueError as exc:
            raise ParseError(f"bad entry line {line!r}") from exc
        if not 0 <= raw <= MASK64:
            raise ParseError(f"raw hash out of range on line {line!r}")
        identifier = unquote_to_bytes(ident_part) if sep else None
        entries.append(Entry(UnitHash(raw), identifier))
    sk = ThetaSketch(kind, k, seed, theta, retains_ids, tuple(entries))
    problems = validate(sk)
    if problems:
        raise InvariantError("; ".join(problems))
    return sk


def write_sketch(sk: ThetaSketch, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_sketch(sk))


def read_sketch(path: str) -> ThetaSketch:
    with open(path, "rb") as fh:
        return deserialize_sketch(fh.read())


def read_stream(source: Union[str, IO[bytes]]) -> Iterator[bytes]:
    """Newline-delimited identifiers; blank lines skipped, duplicates kept."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            yield from _read_lines(fh)
    else:
        yield from _read_lines(source)


def _read_lines(fh: IO[bytes]) -> Iterator[bytes]:
    for line in fh:
        ident = line.rstrip(b"\r\n")
        if ident:
            yield ident
