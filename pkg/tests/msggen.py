"""Builders for synthetic gossip messages, corpora and test graphs."""

from __future__ import annotations

import random

from lntm.codec import (
    ChannelAnnouncement,
    ChannelUpdate,
    NodeAnnouncement,
    ShortChannelId,
    encode_message,
)
from lntm.store import StoreRecord

CHAIN_HASH = bytes(32)


def node_id(i: int, prefix: int = 0x02) -> bytes:
    return bytes([prefix]) + i.to_bytes(32, "big")


def scid(block: int, tx_index: int = 0, output_index: int = 0) -> ShortChannelId:
    return ShortChannelId(block, tx_index, output_index)


def make_channel_announcement(scid_, id_a, id_b, features=b"", extension=b"") -> ChannelAnnouncement:
    node_1, node_2 = sorted((id_a, id_b))
    return ChannelAnnouncement(
        node_signature_1=bytes(64),
        node_signature_2=bytes(64),
        bitcoin_signature_1=bytes(64),
        bitcoin_signature_2=bytes(64),
        features=features,
        chain_hash=CHAIN_HASH,
        short_channel_id=scid_,
        node_id_1=node_1,
        node_id_2=node_2,
        bitcoin_key_1=node_id(900, 0x02),
        bitcoin_key_2=node_id(901, 0x03),
        extension=extension,
    )


def make_node_announcement(id_, timestamp, alias=b"", rgb=b"\x11\x22\x33", addresses=b"", extension=b"") -> NodeAnnouncement:
    return NodeAnnouncement(
        signature=bytes(64),
        features=b"",
        timestamp=timestamp,
        node_id=id_,
        rgb_color=rgb,
        alias=alias.ljust(32, b"\x00")[:32],
        addresses=addresses,
        extension=extension,
    )


def make_channel_update(
    scid_,
    timestamp,
    direction=0,
    disabled=False,
    fee_base_msat=1000,
    fee_proportional_millionths=100,
    cltv_expiry_delta=40,
    htlc_minimum_msat=1,
    htlc_maximum_msat=None,
    extension=b"",
    signature=bytes(64),
) -> ChannelUpdate:
    message_flags = 0x01 if htlc_maximum_msat is not None else 0x00
    channel_flags = (0x01 if direction else 0x00) | (0x02 if disabled else 0x00)
    return ChannelUpdate(
        signature=signature,
        chain_hash=CHAIN_HASH,
        short_channel_id=scid_,
        timestamp=timestamp,
        message_flags=message_flags,
        channel_flags=channel_flags,
        cltv_expiry_delta=cltv_expiry_delta,
        htlc_minimum_msat=htlc_minimum_msat,
        fee_base_msat=fee_base_msat,
        fee_proportional_millionths=fee_proportional_millionths,
        htlc_maximum_msat=htlc_maximum_msat,
        extension=extension,
    )


def record(arrival_ts: int, msg) -> StoreRecord:
    return StoreRecord(arrival_ts, encode_message(msg))


def random_node_announcement(rng: random.Random) -> NodeAnnouncement:
    return NodeAnnouncement(
        signature=rng.randbytes(64),
        features=rng.randbytes(rng.randrange(0, 8)),
        timestamp=rng.randrange(0, 2**32),
        node_id=bytes([rng.choice((0x02, 0x03))]) + rng.randbytes(32),
        rgb_color=rng.randbytes(3),
        alias=rng.randbytes(32),
        addresses=rng.randbytes(rng.randrange(0, 40)),
        extension=rng.randbytes(rng.randrange(0, 12)),
    )


def random_channel_announcement(rng: random.Random) -> ChannelAnnouncement:
    id_a = bytes([rng.choice((0x02, 0x03))]) + rng.randbytes(32)
    id_b = bytes([rng.choice((0x02, 0x03))]) + rng.randbytes(32)
    while id_b == id_a:
        id_b = bytes([rng.choice((0x02, 0x03))]) + rng.randbytes(32)
    node_1, node_2 = sorted((id_a, id_b))
    return ChannelAnnouncement(
        node_signature_1=rng.randbytes(64),
        node_signature_2=rng.randbytes(64),
        bitcoin_signature_1=rng.randbytes(64),
        bitcoin_signature_2=rng.randbytes(64),
        features=rng.randbytes(rng.randrange(0, 8)),
        chain_hash=rng.randbytes(32),
        short_channel_id=ShortChannelId(
            rng.randrange(0, 1 << 24),
            rng.randrange(0, 1 << 24),
            rng.randrange(0, 1 << 16),
        ),
        node_id_1=node_1,
        node_id_2=node_2,
        bitcoin_key_1=rng.randbytes(33),
        bitcoin_key_2=rng.randbytes(33),
        extension=rng.randbytes(rng.randrange(0, 12)),
    )


def random_channel_update(rng: random.Random) -> ChannelUpdate:
    has_max = rng.random() < 0.5
    return ChannelUpdate(
        signature=rng.randbytes(64),
        chain_hash=rng.randbytes(32),
        short_channel_id=ShortChannelId(
            rng.randrange(0, 1 << 24),
            rng.randrange(0, 1 << 24),
            rng.randrange(0, 1 << 16),
        ),
        timestamp=rng.randrange(0, 2**32),
        message_flags=(0x01 if has_max else 0x00) | (rng.randrange(0, 0x80) & ~0x01),
        channel_flags=rng.randrange(0, 256),
        cltv_expiry_delta=rng.randrange(0, 2**16),
        htlc_minimum_msat=rng.randrange(0, 2**64),
        fee_base_msat=rng.randrange(0, 2**32),
        fee_proportional_millionths=rng.randrange(0, 2**32),
        htlc_maximum_msat=rng.randrange(0, 2**64) if has_max else None,
        extension=rng.randbytes(rng.randrange(0, 12)),
    )
