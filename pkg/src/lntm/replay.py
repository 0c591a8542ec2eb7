"""Replay a gossip feed up to an instant and materialize the network view.

Channel closes are invisible to gossip, so a snapshot never deletes a
channel; newer channel_updates supersede older ones per (channel,
direction). The optional staleness window on the routing view approximates
liveness (two weeks, 1209600 s, is the conventional cutoff).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .codec import (
    ChannelAnnouncement,
    ChannelUpdate,
    NodeAnnouncement,
    NodeId,
    ShortChannelId,
    alias_text,
)
from .store import OrderedFeed

SNAPSHOT_FORMAT = "gossip-network-snapshot"
SNAPSHOT_VERSION = 1

# every node referenced by an announced channel, leaf nodes included
NODE_COUNT_DEFINITION = "nodes referenced by at least one announced channel, leaves included"

TWO_WEEKS_S = 1_209_600


class SnapshotFormatError(ValueError):
    """Serialized snapshot is not in the expected format/version."""


@dataclass(frozen=True)
class ChannelPolicy:
    fee_base_msat: int
    fee_proportional_millionths: int
    cltv_expiry_delta: int
    htlc_minimum_msat: int
    htlc_maximum_msat: Optional[int]
    disabled: bool
    last_update_ts: int

    @classmethod
    def from_update(cls, upd: ChannelUpdate) -> "ChannelPolicy":
        return cls(
            fee_base_msat=upd.fee_base_msat,
            fee_proportional_millionths=upd.fee_proportional_millionths,
            cltv_expiry_delta=upd.cltv_expiry_delta,
            htlc_minimum_msat=upd.htlc_minimum_msat,
            htlc_maximum_msat=upd.htlc_maximum_msat,
            disabled=upd.disabled,
            last_update_ts=upd.timestamp,
        )


@dataclass(frozen=True)
class NodeInfo:
    alias: Optional[str] = None  # lossy text form
    rgb_color: Optional[str] = None  # hex, e.g. "ff8800"
    last_seen: Optional[int] = None  # timestamp of the governing node_announcement


@dataclass(frozen=True)
class Channel:
    short_channel_id: ShortChannelId
    node_1: NodeId
    node_2: NodeId
    # index 0: node_1 -> node_2, index 1: node_2 -> node_1
    policies: tuple[Optional[ChannelPolicy], Optional[ChannelPolicy]]


@dataclass(frozen=True)
class ReplayDiagnostics:
    updates_unknown_channel: int = 0
    orphan_node_announcements: int = 0


@dataclass(frozen=True)
class NetworkSnapshot:
    """Immutable network state as of one instant. Do not mutate the dicts."""

    as_of: int
    nodes: dict[NodeId, NodeInfo]
    channels: dict[ShortChannelId, Channel]
    diagnostics: ReplayDiagnostics = field(default=ReplayDiagnostics())

    @property
    def policy_count(self) -> int:
        return sum(
            (ch.policies[0] is not None) + (ch.policies[1] is not None)
            for ch in self.channels.values()
        )


@dataclass(frozen=True)
class Arc:
    short_channel_id: ShortChannelId
    direction: int
    source: NodeId
    target: NodeId
    policy: ChannelPolicy


@dataclass(frozen=True)
class RoutingView:
    """Arcs usable for routing: one per (channel, direction) with a live policy."""

    as_of: int
    nodes: tuple[NodeId, ...]  # all snapshot nodes, sorted
    arcs: tuple[Arc, ...]


def replay(feed: OrderedFeed, as_of: int) -> NetworkSnapshot:
    """Fold the feed up to and including ``as_of`` into a snapshot.

    The snapshot holds every channel announced at or before as_of; per
    (channel, direction) the policy with the greatest timestamp <= as_of;
    and every node referenced by an included channel, with metadata from
    its latest node_announcement <= as_of. Updates for unannounced channels
    and announcements for unreferenced nodes are tallied, not fatal.
    """
    prefix = []
    for entry in feed:
        if entry.effective_ts > as_of:
            break
        prefix.append(entry)

    # first announcement wins per channel id: endpoints never change, so
    # snapshots stay monotone even if a conflicting re-announcement shows up
    pairs: dict[ShortChannelId, tuple[NodeId, NodeId]] = {}
    for entry in prefix:
        msg = entry.message
        if isinstance(msg, ChannelAnnouncement):
            pairs.setdefault(msg.short_channel_id, (msg.node_id_1, msg.node_id_2))

    best_update: dict[tuple[ShortChannelId, int], ChannelUpdate] = {}
    updates_unknown = 0
    for entry in prefix:
        msg = entry.message
        if not isinstance(msg, ChannelUpdate):
            continue
        if msg.short_channel_id not in pairs:
            updates_unknown += 1
            continue
        key = (msg.short_channel_id, msg.direction)
        current = best_update.get(key)
        if current is None or msg.timestamp >= current.timestamp:
            best_update[key] = msg

    node_set = set()
    for node_1, node_2 in pairs.values():
        node_set.add(node_1)
        node_set.add(node_2)

    best_ann: dict[NodeId, NodeAnnouncement] = {}
    orphans = 0
    for entry in prefix:
        msg = entry.message
        if not isinstance(msg, NodeAnnouncement):
            continue
        if msg.node_id not in node_set:
            orphans += 1
            continue
        current = best_ann.get(msg.node_id)
        if current is None or msg.timestamp >= current.timestamp:
            best_ann[msg.node_id] = msg

    nodes: dict[NodeId, NodeInfo] = {}
    for node_id in sorted(node_set):
        ann = best_ann.get(node_id)
        if ann is None:
            nodes[node_id] = NodeInfo()
        else:
            nodes[node_id] = NodeInfo(
                alias=alias_text(ann.alias),
                rgb_color=ann.rgb_color.hex(),
                last_seen=ann.timestamp,
            )

    channels: dict[ShortChannelId, Channel] = {}
    for scid in sorted(pairs):
        node_1, node_2 = pairs[scid]
        policy_0 = best_update.get((scid, 0))
        policy_1 = best_update.get((scid, 1))
        channels[scid] = Channel(
            short_channel_id=scid,
            node_1=node_1,
            node_2=node_2,
            policies=(
                ChannelPolicy.from_update(policy_0) if policy_0 else None,
                ChannelPolicy.from_update(policy_1) if policy_1 else None,
            ),
        )

    return NetworkSnapshot(
        as_of=as_of,
        nodes=nodes,
        channels=channels,
        diagnostics=ReplayDiagnostics(
            updates_unknown_channel=updates_unknown,
            orphan_node_announcements=orphans,
        ),
    )


def routing_view(
    snapshot: NetworkSnapshot,
    prune_stale_after: Optional[int] = None,
    include_disabled: bool = False,
) -> RoutingView:
    """Arcs with an announced policy; disabled ones are dropped unless asked
    for, and ``prune_stale_after`` drops arcs whose policy is older than
    as_of minus the window."""
    cutoff = None
    if prune_stale_after is not None:
        cutoff = snapshot.as_of - prune_stale_after
    arcs = []
    for scid in sorted(snapshot.channels):
        channel = snapshot.channels[scid]
        endpoints = (
            (channel.node_1, channel.node_2),
            (channel.node_2, channel.node_1),
        )
        for direction in (0, 1):
            policy = channel.policies[direction]
            if policy is None:
                continue
            if policy.disabled and not include_disabled:
                continue
            if cutoff is not None and policy.last_update_ts < cutoff:
                continue
            source, target = endpoints[direction]
            arcs.append(Arc(scid, direction, source, target, policy))
    return RoutingView(
        as_of=snapshot.as_of,
        nodes=tuple(sorted(snapshot.nodes)),
        arcs=tuple(arcs),
    )


def _policy_to_doc(policy: Optional[ChannelPolicy]) -> Optional[dict]:
    if policy is None:
        return None
    return {
        "fee_base_msat": policy.fee_base_msat,
        "fee_proportional_millionths": policy.fee_proportional_millionths,
        "cltv_expiry_delta": policy.cltv_expiry_delta,
        "htlc_minimum_msat": policy.htlc_minimum_msat,
        "htlc_maximum_msat": policy.htlc_maximum_msat,
        "disabled": policy.disabled,
        "last_update_ts": policy.last_update_ts,
    }


def _policy_from_doc(doc: Optional[dict]) -> Optional[ChannelPolicy]:
    if doc is None:
        return None
    return ChannelPolicy(
        fee_base_msat=doc["fee_base_msat"],
        fee_proportional_millionths=doc["fee_proportional_millionths"],
        cltv_expiry_delta=doc["cltv_expiry_delta"],
        htlc_minimum_msat=doc["htlc_minimum_msat"],
        htlc_maximum_msat=doc["htlc_maximum_msat"],
        disabled=doc["disabled"],
        last_update_ts=doc["last_update_ts"],
    )


def snapshot_to_json(snapshot: NetworkSnapshot) -> str:
    """Canonical JSON serialization: keys sorted, lists sorted, so equal
    snapshots are byte-identical (diffable and hashable)."""
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "as_of": snapshot.as_of,
        "node_count": len(snapshot.nodes),
        "node_count_definition": NODE_COUNT_DEFINITION,
        "diagnostics": {
            "updates_unknown_channel": snapshot.diagnostics.updates_unknown_channel,
            "orphan_node_announcements": snapshot.diagnostics.orphan_node_announcements,
        },
        "nodes": [
            {
                "id": node_id.hex(),
                "alias": info.alias,
                "rgb": info.rgb_color,
                "last_seen": info.last_seen,
            }
            for node_id, info in sorted(snapshot.nodes.items())
        ],
        "channels": [
            {
                "scid": str(scid),
                "node1": channel.node_1.hex(),
                "node2": channel.node_2.hex(),
                "policies": [
                    _policy_to_doc(channel.policies[0]),
                    _policy_to_doc(channel.policies[1]),
                ],
            }
            for scid, channel in sorted(snapshot.channels.items())
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def snapshot_from_json(text: str) -> NetworkSnapshot:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotFormatError("missing snapshot format marker")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {doc.get('version')!r}")
    try:
        nodes = {
            bytes.fromhex(entry["id"]): NodeInfo(
                alias=entry["alias"],
                rgb_color=entry["rgb"],
                last_seen=entry["last_seen"],
            )
            for entry in doc["nodes"]
        }
        channels = {}
        for entry in doc["channels"]:
            scid = ShortChannelId.parse(entry["scid"])
            channels[scid] = Channel(
                short_channel_id=scid,
                node_1=bytes.fromhex(entry["node1"]),
                node_2=bytes.fromhex(entry["node2"]),
                policies=(
                    _policy_from_doc(entry["policies"][0]),
                    _policy_from_doc(entry["policies"][1]),
                ),
            )
        diagnostics = ReplayDiagnostics(
            updates_unknown_channel=doc["diagnostics"]["updates_unknown_channel"],
            orphan_node_announcements=doc["diagnostics"]["orphan_node_announcements"],
        )
        return NetworkSnapshot(
            as_of=doc["as_of"],
            nodes=nodes,
            channels=channels,
            diagnostics=diagnostics,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise SnapshotFormatError(f"malformed snapshot document: {exc}") from exc
