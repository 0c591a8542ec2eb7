"""Lorenz curves, Gini coefficients, top-share stats and rank timelines.

Zero-valued leaf nodes count as population members here; any
leaf-exclusion for plotting readability belongs to the plot emitters, not
to the statistics. The Gini coefficient is one minus twice the trapezoidal
area under the piecewise-linear Lorenz curve, with no small-sample
correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .codec import NodeId
from .centrality import CentralityReport


class EmptyReportError(ValueError):
    """Report has no nodes; inequality statistics are undefined."""


class UnknownAnchorError(ValueError):
    def __init__(self, anchor: str, labels: Sequence[str]):
        super().__init__(f"anchor {anchor!r} not among labels {list(labels)}")
        self.anchor = anchor


@dataclass(frozen=True)
class LorenzSeries:
    """Cumulative value share against cumulative population share.

    ``points`` runs from (0, 0) to (1, 1) over all nodes sorted ascending
    by value; a zero-total report degenerates to the equality diagonal.
    """

    points: tuple[tuple[float, float], ...]
    gini: float


@dataclass(frozen=True)
class TopShare:
    fraction: float
    share: float
    degenerate: bool = False  # total was zero; share reported as 1.0


@dataclass(frozen=True)
class RankTimeline:
    node: NodeId
    ranks: dict[str, int]  # snapshot label -> rank (1 = top); absent if missing


def lorenz(report: CentralityReport) -> LorenzSeries:
    """Lorenz curve and Gini coefficient over every node of the report."""
    n = len(report.values)
    if n == 0:
        raise EmptyReportError("no nodes in report")
    values = sorted(float(v) for v in report.values.values())
    total = math.fsum(values)
    if total == 0:
        points = tuple((i / n, i / n) for i in range(n + 1))
        return LorenzSeries(points=points, gini=0.0)
    points = [(0.0, 0.0)]
    running = 0.0
    for i, value in enumerate(values, start=1):
        running += value
        points.append((i / n, running / total))
    area = math.fsum(
        (points[i - 1][1] + points[i][1]) / (2.0 * n) for i in range(1, n + 1)
    )
    return LorenzSeries(points=tuple(points), gini=1.0 - 2.0 * area)


def _descending_items(report: CentralityReport) -> list[tuple[NodeId, float]]:
    items = [(node_id, float(v)) for node_id, v in report.values.items()]
    items.sort(key=lambda kv: (-kv[1], kv[0]))
    return items


def top_share(report: CentralityReport, fraction: float) -> TopShare:
    """Share of total value held by the top ceil(fraction * n) nodes."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction {fraction} outside (0, 1]")
    n = len(report.values)
    if n == 0:
        raise EmptyReportError("no nodes in report")
    # exact ceil: 0.07 * 100 must select 7 nodes, not 8
    k = math.ceil(Fraction(fraction).limit_denominator(10**9) * n)
    k = min(max(k, 1), n)
    items = _descending_items(report)
    total = math.fsum(v for _, v in items)
    if total == 0:
        return TopShare(fraction=fraction, share=1.0, degenerate=True)
    top = math.fsum(v for _, v in items[:k])
    return TopShare(fraction=fraction, share=top / total)


def snapshot_ranks(report: CentralityReport) -> dict[NodeId, int]:
    """Dense ranks 1..n by descending value, ties broken by node id."""
    return {node_id: i for i, (node_id, _) in enumerate(_descending_items(report), 1)}


def rank_timelines(
    reports: Sequence[tuple[str, CentralityReport]],
    k: int,
    anchor: str,
) -> list[RankTimeline]:
    """Track the anchor snapshot's top-k nodes across every snapshot.

    A node absent from some snapshot simply has no rank there. Any display
    capping (plots often cap deep ranks) is left to the emitters; stored
    ranks are never altered.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    labels = [label for label, _ in reports]
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate snapshot labels in {labels}")
    by_label = dict(reports)
    if anchor not in by_label:
        raise UnknownAnchorError(anchor, labels)
    ranks_by_label = {label: snapshot_ranks(report) for label, report in reports}
    anchor_order = _descending_items(by_label[anchor])
    timelines = []
    for node_id, _ in anchor_order[:k]:
        ranks = {}
        for label in labels:
            rank = ranks_by_label[label].get(node_id)
            if rank is not None:
                ranks[label] = rank
        timelines.append(RankTimeline(node=node_id, ranks=ranks))
    return timelines


def gini_trend(
    reports: Sequence[tuple[str, CentralityReport]],
) -> list[tuple[str, float]]:
    """Gini coefficient per labeled report, in label order."""
    return [(label, lorenz(report).gini) for label, report in reports]


# ---------------------------------------------------------------------------
# plot-ready CSV emitters
# ---------------------------------------------------------------------------


def lorenz_to_csv(series: LorenzSeries) -> str:
    lines = ["population_fraction,cumulative_share"]
    for x, y in series.points:
        lines.append(f"{x!r},{y!r}")
    return "\n".join(lines) + "\n"


def gini_trend_to_csv(trend: Sequence[tuple[str, float]]) -> str:
    lines = ["label,gini"]
    for label, gini in trend:
        lines.append(f"{label},{gini!r}")
    return "\n".join(lines) + "\n"


def top_shares_to_csv(shares: Sequence[tuple[str, TopShare]]) -> str:
    lines = ["label,fraction,share,degenerate"]
    for label, ts in shares:
        lines.append(f"{label},{ts.fraction!r},{ts.share!r},{int(ts.degenerate)}")
    return "\n".join(lines) + "\n"


def timelines_to_csv(
    timelines: Sequence[RankTimeline],
    labels: Sequence[str],
    rank_cap: Optional[int] = None,
) -> str:
    """Matrix of ranks, one row per node and one column per snapshot label.

    Missing appearances are empty cells; ``rank_cap`` clips displayed ranks
    (presentation only).
    """
    lines = ["node_id," + ",".join(labels)]
    for timeline in timelines:
        cells = []
        for label in labels:
            rank = timeline.ranks.get(label)
            if rank is None:
                cells.append("")
            elif rank_cap is not None and rank > rank_cap:
                cells.append(str(rank_cap))
            else:
                cells.append(str(rank))
        lines.append(timeline.node.hex() + "," + ",".join(cells))
    return "\n".join(lines) + "\n"
