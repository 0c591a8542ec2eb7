"""Framed gossip archives and the deduplicated, time-ordered feed.

Archive framing ("GSR1", bit-exact): 4-byte magic ``GSR1`` followed by zero
or more frames of ``arrival_ts:u64 BE | msg_len:u32 BE | msg bytes``. The
message bytes start with the u16 gossip type code.

A JSON-lines debug format is also read: one object per line with fields
``arrival_ts`` (int, seconds) and ``hex`` (hex-encoded message).

Ordering model: the feed keeps *every* distinct message version so a replay
can answer "state at time T" for arbitrary T. Only exact duplicates and
same-timestamp channel_update clones are collapsed here; supersession is
applied at replay time.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .codec import (
    ChannelAnnouncement,
    ChannelUpdate,
    CodecError,
    GossipMessage,
    decode_message,
    message_type_code,
)

STORE_MAGIC = b"GSR1"

_FRAME_HEADER = struct.Struct(">QI")


class StoreError(Exception):
    """Base class for archive read failures."""


class BadMagicError(StoreError):
    def __init__(self, got: bytes):
        super().__init__(f"not a gossip archive: magic {got!r} != {STORE_MAGIC!r}")


class CorruptFrameError(StoreError):
    def __init__(self, offset: int, detail: str):
        super().__init__(f"corrupt frame at byte offset {offset}: {detail}")
        self.offset = offset


class JsonLinesError(StoreError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"bad record on line {line_no}: {detail}")
        self.line_no = line_no


class DecodeFailureError(StoreError):
    def __init__(self, index: int, cause: CodecError):
        super().__init__(f"record {index} does not decode: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class StoreRecord:
    arrival_ts: int  # seconds, when the collector first saw the message
    payload: bytes  # raw message bytes, starting with the u16 type code


@dataclass(frozen=True)
class FeedEntry:
    effective_ts: int
    type_code: int
    payload: bytes
    message: GossipMessage


@dataclass(frozen=True)
class OrderedFeed:
    """Deduplicated entries sorted by (effective_ts, type_code, payload)."""

    entries: tuple[FeedEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[FeedEntry]:
        return iter(self.entries)


def read_store(path: str | Path) -> Iterator[StoreRecord]:
    """Stream records from a GSR1 archive in file order."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != STORE_MAGIC:
            raise BadMagicError(magic)
        yield from _read_frames(fh)


def _read_frames(fh: IO[bytes]) -> Iterator[StoreRecord]:
    offset = 4
    while True:
        header = fh.read(_FRAME_HEADER.size)
        if not header:
            return
        if len(header) < _FRAME_HEADER.size:
            raise CorruptFrameError(offset, "frame header truncated")
        arrival_ts, msg_len = _FRAME_HEADER.unpack(header)
        payload = fh.read(msg_len)
        if len(payload) < msg_len:
            raise CorruptFrameError(
                offset, f"length field {msg_len} exceeds remaining bytes"
            )
        yield StoreRecord(arrival_ts, payload)
        offset += _FRAME_HEADER.size + msg_len


def write_store(path: str | Path, records: Iterable[StoreRecord]) -> int:
    """Write records as a GSR1 archive; returns the record count."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        for rec in records:
            fh.write(_FRAME_HEADER.pack(rec.arrival_ts, len(rec.payload)))
            fh.write(rec.payload)
            count += 1
    return count


def read_store_jsonl(path: str | Path) -> Iterator[StoreRecord]:
    """Stream records from the JSON-lines debug format."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                arrival_ts = int(obj["arrival_ts"])
                payload = bytes.fromhex(obj["hex"])
            except (ValueError, KeyError, TypeError) as exc:
                raise JsonLinesError(line_no, str(exc)) from exc
            yield StoreRecord(arrival_ts, payload)


def open_store(path: str | Path) -> Iterator[StoreRecord]:
    """Read an archive, sniffing GSR1 vs JSON-lines by the leading magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == STORE_MAGIC:
        return read_store(path)
    return read_store_jsonl(path)


def effective_timestamp(record_arrival_ts: int, msg: GossipMessage) -> int:
    """Ordering timestamp: the embedded one, or collector arrival time for
    channel_announcement (which carries none)."""
    if isinstance(msg, ChannelAnnouncement):
        return record_arrival_ts
    return msg.timestamp


def deduplicate_and_order(records: Iterable[StoreRecord]) -> OrderedFeed:
    """Collapse duplicates and sort records into a deterministic feed.

    - exact byte-duplicates collapse to one entry; for channel_announcement
      the earliest arrival time is kept (it is the only observable proxy)
    - distinct channel_updates sharing (scid, direction, timestamp) collapse
      to the lexicographically smallest payload, keeping ordering total and
      permutation-invariant
    - every distinct-timestamp version of an update survives; replay decides
      which version governs at a query instant
    """
    by_payload: dict[bytes, tuple[int, GossipMessage]] = {}
    for index, rec in enumerate(records):
        try:
            msg = decode_message(rec.payload)
        except CodecError as exc:
            raise DecodeFailureError(index, exc) from exc
        eff = effective_timestamp(rec.arrival_ts, msg)
        known = by_payload.get(rec.payload)
        if known is None or eff < known[0]:
            by_payload[rec.payload] = (eff, msg)

    # at most one channel_update per (scid, direction, timestamp)
    update_winner: dict[tuple, bytes] = {}
    for payload, (_, msg) in by_payload.items():
        if isinstance(msg, ChannelUpdate):
            key = (msg.short_channel_id, msg.direction, msg.timestamp)
            best = update_winner.get(key)
            if best is None or payload < best:
                update_winner[key] = payload

    entries = []
    for payload, (eff, msg) in by_payload.items():
        if isinstance(msg, ChannelUpdate):
            key = (msg.short_channel_id, msg.direction, msg.timestamp)
            if update_winner[key] != payload:
                continue
        entries.append(FeedEntry(eff, message_type_code(msg), payload, msg))
    entries.sort(key=lambda e: (e.effective_ts, e.type_code, e.payload))
    return OrderedFeed(tuple(entries))


def feed_to_records(feed: OrderedFeed) -> Iterator[StoreRecord]:
    """Re-serialize a feed as store records (the compaction output).

    Arrival times are rewritten to the effective timestamps, which is the
    only time information the feed retains.
    """
    for entry in feed:
        yield StoreRecord(entry.effective_ts, entry.payload)
