"""Fee-weighted digraphs and exact betweenness centrality.

Arc weights are the integer routing fee in millisatoshi for a fixed
transaction amount: ``fee_base_msat + amount * fee_proportional_millionths
// 1_000_000`` (floor division; millisatoshi is indivisible). Shortest-path
ties are decided on exact integer costs, never floats, because equal-cost
path counting is the whole point.

Zero-weight arcs are legal (zero-fee channels exist) and need real care:

- chains of zero arcs make Dijkstra's settle order unusable for dependency
  accumulation, so each source pass orders the shortest-path DAG
  topologically instead;
- mutually-zero-fee node groups form zero-weight cycles, where counting
  shortest *walks* diverges from counting shortest *paths* (paths cannot
  revisit a node). Path counts are the defined semantics, so zero-weight
  strongly connected clusters are contracted into entry/exit port pairs
  whose connecting "bundle" arcs carry the exact number of simple
  zero-cost routes through the cluster plus per-member visit counts. A
  shortest path crosses such a cluster in one contiguous segment (leaving
  and re-entering would cost extra), so the contraction is exact.

The per-source loop is embarrassingly parallel; partial results are always
reduced in source order so the thread count never changes the output.
"""

from __future__ import annotations

import heapq
import multiprocessing
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

from .codec import NodeId
from .replay import ChannelPolicy, RoutingView

U64_MAX = (1 << 64) - 1

PPM_DIVISOR = 1_000_000

BRUTE_FORCE_MAX_NODES = 12

# extension steps allowed while enumerating simple routes inside one
# zero-fee cluster; exceeding it means the cluster is too entangled to
# count exactly
ZERO_CLUSTER_PATH_BUDGET = 5_000_000

Value = Union[float, Fraction]


class CentralityError(ValueError):
    """Base class for graph-metric failures."""


class NegativeWeightError(CentralityError):
    """An arc weight is negative (cannot happen for fee weights; guards imports)."""


class FeeOverflowError(CentralityError):
    """Computed fee exceeds the wire-representable range; the policy is corrupt."""


class TooLargeError(CentralityError):
    """Graph exceeds the brute-force enumeration bound."""


class ZeroClusterError(CentralityError):
    """A zero-fee cluster is too large to count simple routes exactly."""


@dataclass(frozen=True)
class WeightedDigraph:
    """Simple digraph with dense node indices and exact integer arc weights."""

    node_ids: tuple[NodeId, ...]
    arcs: tuple[tuple[int, int, int], ...]  # (src, dst, weight), unique per pair
    amount_msat: int = 0
    as_of: int = 0

    @classmethod
    def from_arcs(cls, node_ids, arcs, amount_msat=0, as_of=0) -> "WeightedDigraph":
        """Build from possibly-parallel (src, dst, weight) triples; parallel
        arcs collapse to the minimum weight, self-arcs are rejected."""
        n = len(node_ids)
        best: dict[tuple[int, int], int] = {}
        for src, dst, weight in arcs:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"arc ({src},{dst}) outside node range")
            if src == dst:
                raise ValueError(f"self-arc at node {src}")
            key = (src, dst)
            if key not in best or weight < best[key]:
                best[key] = weight
        collapsed = tuple(sorted((u, v, w) for (u, v), w in best.items()))
        return cls(tuple(node_ids), collapsed, amount_msat, as_of)


@dataclass(frozen=True)
class CentralityReport:
    as_of: int
    amount_msat: int
    values: dict[NodeId, Value]

    @property
    def leaf_count(self) -> int:
        return sum(1 for v in self.values.values() if v == 0)


def fee_weight(policy: ChannelPolicy, amount_msat: int) -> int:
    """Routing fee in msat charged for forwarding ``amount_msat`` under ``policy``."""
    if not 0 <= amount_msat <= U64_MAX:
        raise ValueError(f"amount {amount_msat} out of u64 range")
    weight = (
        policy.fee_base_msat
        + amount_msat * policy.fee_proportional_millionths // PPM_DIVISOR
    )
    if weight > U64_MAX:
        raise FeeOverflowError(
            f"fee {weight} msat exceeds u64 (base={policy.fee_base_msat}, "
            f"ppm={policy.fee_proportional_millionths}, amount={amount_msat})"
        )
    return weight


def build_graph(
    view: RoutingView,
    amount_msat: int,
    enforce_htlc_bounds: bool = False,
) -> WeightedDigraph:
    """Weight every routable arc for one transaction amount.

    Parallel channels between the same ordered node pair collapse to the
    cheapest one. With ``enforce_htlc_bounds`` arcs whose limits exclude the
    amount are dropped entirely.
    """
    index = {node_id: i for i, node_id in enumerate(view.nodes)}
    best: dict[tuple[int, int], int] = {}
    for arc in view.arcs:
        policy = arc.policy
        if enforce_htlc_bounds:
            if amount_msat < policy.htlc_minimum_msat:
                continue
            if (
                policy.htlc_maximum_msat is not None
                and amount_msat > policy.htlc_maximum_msat
            ):
                continue
        weight = fee_weight(policy, amount_msat)
        src = index[arc.source]
        dst = index[arc.target]
        if src == dst:
            continue
        key = (src, dst)
        if key not in best or weight < best[key]:
            best[key] = weight
    arcs = tuple(sorted((u, v, w) for (u, v), w in best.items()))
    return WeightedDigraph(view.nodes, arcs, amount_msat, view.as_of)


# ---------------------------------------------------------------------------
# betweenness kernel
# ---------------------------------------------------------------------------


def _strong_components(n: int, adj: list[list[int]]) -> list[list[int]]:
    """Strongly connected components (iterative Tarjan)."""
    index_of = [-1] * n
    low = [0] * n
    on_stack = bytearray(n)
    comp_stack: list[int] = []
    components: list[list[int]] = []
    next_index = 0
    for root in range(n):
        if index_of[root] >= 0:
            continue
        frames = [[root, 0]]
        while frames:
            frame = frames[-1]
            v = frame[0]
            if frame[1] == 0:
                index_of[v] = low[v] = next_index
                next_index += 1
                comp_stack.append(v)
                on_stack[v] = 1
            descended = False
            neighbors = adj[v]
            while frame[1] < len(neighbors):
                w = neighbors[frame[1]]
                frame[1] += 1
                if index_of[w] < 0:
                    frames.append([w, 0])
                    descended = True
                    break
                if on_stack[w] and index_of[w] < low[v]:
                    low[v] = index_of[w]
            if descended:
                continue
            frames.pop()
            if frames:
                parent = frames[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index_of[v]:
                component = []
                while True:
                    w = comp_stack.pop()
                    on_stack[w] = 0
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
    return components


def _cluster_bundles(
    members: list[int], zero_out: list[list[int]], budget: int
) -> list[tuple[int, int, int, tuple[tuple[int, int], ...]]]:
    """Exact simple-route table for one zero-fee cluster.

    Returns bundles (entry, exit, route_count, interior visit counts) for
    every ordered member pair connected by zero arcs, plus the trivial
    enter-and-leave bundle per member.
    """
    member_set = set(members)
    local = {u: [v for v in zero_out[u] if v in member_set] for u in members}
    counts: dict[tuple[int, int], int] = {}
    visits: dict[tuple[int, int], dict[int, int]] = {}
    steps = 0
    for start in members:
        path = [start]
        on_path = {start}
        iters = [iter(local[start])]
        while iters:
            try:
                nxt = next(iters[-1])
            except StopIteration:
                iters.pop()
                on_path.discard(path.pop())
                continue
            if nxt in on_path:
                continue
            steps += 1
            if steps > budget:
                raise ZeroClusterError(
                    f"zero-fee cluster of {len(members)} nodes exceeds "
                    f"{budget} route-enumeration steps"
                )
            key = (start, nxt)
            counts[key] = counts.get(key, 0) + 1
            if len(path) > 1:
                interior = visits.setdefault(key, {})
                for w in path[1:]:
                    interior[w] = interior.get(w, 0) + 1
            path.append(nxt)
            on_path.add(nxt)
            iters.append(iter(local[nxt]))
    bundles = [(x, x, 1, ()) for x in members]
    for key in sorted(counts):
        x, y = key
        interior = tuple(sorted(visits.get(key, {}).items()))
        bundles.append((x, y, counts[key], interior))
    return bundles


@dataclass(frozen=True)
class _PortGraph:
    """Source-independent search structure with zero-fee clusters contracted.

    Cluster members get an entry and an exit port; bundle arcs between
    ports carry multiplicities (simple zero-cost route counts). Trivial
    nodes keep one port that serves as both.
    """

    n_nodes: int
    h_count: int
    h_in_of: list[int]
    h_out_of: list[int]
    cluster_of: list[int]  # -1 for trivial nodes
    # per port: (dst_port, weight, multiplicity, bundle_id or -1)
    out_edges: list[list[tuple[int, int, int, int]]]
    is_out_port: list[bool]
    bundles: list[tuple[int, int, int, tuple[tuple[int, int], ...]]]


def _prepare(graph: WeightedDigraph) -> _PortGraph:
    n = len(graph.node_ids)
    zero_out: list[list[int]] = [[] for _ in range(n)]
    for src, dst, weight in graph.arcs:
        if weight == 0:
            zero_out[src].append(dst)
    clusters = sorted(
        sorted(comp) for comp in _strong_components(n, zero_out) if len(comp) >= 2
    )
    cluster_of = [-1] * n
    for ci, members in enumerate(clusters):
        for u in members:
            cluster_of[u] = ci

    h_in_of = [0] * n
    h_out_of = [0] * n
    h_count = 0
    for u in range(n):
        if cluster_of[u] < 0:
            h_in_of[u] = h_out_of[u] = h_count
            h_count += 1
        else:
            h_in_of[u] = h_count
            h_out_of[u] = h_count + 1
            h_count += 2

    out_edges: list[list[tuple[int, int, int, int]]] = [[] for _ in range(h_count)]
    for src, dst, weight in graph.arcs:
        if cluster_of[src] >= 0 and cluster_of[src] == cluster_of[dst]:
            # zero arcs are absorbed into bundles; a positive arc inside a
            # cluster is never on a shortest path (a zero route exists)
            continue
        out_edges[h_out_of[src]].append((h_in_of[dst], weight, 1, -1))

    bundles: list[tuple[int, int, int, tuple[tuple[int, int], ...]]] = []
    for members in clusters:
        for bundle in _cluster_bundles(members, zero_out, ZERO_CLUSTER_PATH_BUDGET):
            bundle_id = len(bundles)
            bundles.append(bundle)
            x, y, mult, _ = bundle
            out_edges[h_in_of[x]].append((h_out_of[y], 0, mult, bundle_id))

    is_out_port = [False] * h_count
    for u in range(n):
        is_out_port[h_out_of[u]] = True

    return _PortGraph(
        n_nodes=n,
        h_count=h_count,
        h_in_of=h_in_of,
        h_out_of=h_out_of,
        cluster_of=cluster_of,
        out_edges=out_edges,
        is_out_port=is_out_port,
        bundles=bundles,
    )


def _ratio_exact(a: int, b: int) -> Fraction:
    return Fraction(a, b)


def _ratio_float(a: int, b: int) -> float:
    return a / b


def _source_pass(pg: _PortGraph, s: int, exact: bool) -> list[Value]:
    """Dependency accumulation for one source; returns per-node credits."""
    ratio: Callable[[int, int], Value] = _ratio_exact if exact else _ratio_float
    zero: Value = Fraction(0) if exact else 0.0

    src = pg.h_in_of[s]
    dist: list[Optional[int]] = [None] * pg.h_count
    heap = [(0, src)]
    while heap:
        d, v = heapq.heappop(heap)
        if dist[v] is not None:
            continue
        dist[v] = d
        for dst, weight, _, _ in pg.out_edges[v]:
            if dist[dst] is None:
                heapq.heappush(heap, (d + weight, dst))

    # shortest-path DAG over reachable ports; acyclic because zero cycles
    # were contracted away
    dag_in: list[list[tuple[int, int, int]]] = [[] for _ in range(pg.h_count)]
    dag_out: list[list[tuple[int, int]]] = [[] for _ in range(pg.h_count)]
    indegree = [0] * pg.h_count
    for v in range(pg.h_count):
        dv = dist[v]
        if dv is None:
            continue
        for dst, weight, mult, bundle_id in pg.out_edges[v]:
            if dist[dst] is not None and dv + weight == dist[dst]:
                dag_in[dst].append((v, mult, bundle_id))
                dag_out[v].append((dst, mult))
                indegree[dst] += 1

    topo = []
    queue = deque([src])
    while queue:
        v = queue.popleft()
        topo.append(v)
        for dst, _ in dag_out[v]:
            indegree[dst] -= 1
            if indegree[dst] == 0:
                queue.append(dst)

    sigma = [0] * pg.h_count
    sigma[src] = 1
    for v in topo:
        sv = sigma[v]
        for dst, mult in dag_out[v]:
            sigma[dst] += sv * mult

    # accumulate dependencies backwards; per-pair targets are out ports
    # (the source's own out port never counts as a target)
    delta: list[Value] = [zero] * pg.h_count
    credit: list[Value] = [zero] * pg.n_nodes
    source_out = pg.h_out_of[s]
    for v in reversed(topo):
        dv = delta[v]
        tv = 1 if (pg.is_out_port[v] and v != source_out) else 0
        if tv == 0 and dv == 0:
            continue
        for u, mult, bundle_id in dag_in[v]:
            r = ratio(sigma[u] * mult, sigma[v])
            flow_cont = r * dv
            flow_all = flow_cont + (r if tv else zero)
            delta[u] += flow_all
            if bundle_id < 0:
                continue
            x, y, mult_total, interior = pg.bundles[bundle_id]
            if x == y:
                # enter-and-leave bundle: the member is interior only for
                # pairs that continue past it
                if x != s:
                    credit[x] += flow_cont
            else:
                if x != s:
                    credit[x] += flow_all
                credit[y] += flow_cont
                for w, visit_count in interior:
                    credit[w] += flow_all * ratio(visit_count, mult_total)

    for u in range(pg.n_nodes):
        if pg.cluster_of[u] < 0 and u != s:
            credit[u] += delta[pg.h_out_of[u]]
    return credit


def _sparse_credit(credit: list[Value]) -> list[tuple[int, Value]]:
    return [(i, v) for i, v in enumerate(credit) if v != 0]


_POOL_PG: Optional[_PortGraph] = None
_POOL_EXACT = False


def _pool_init(pg: _PortGraph, exact: bool) -> None:
    global _POOL_PG, _POOL_EXACT
    _POOL_PG = pg
    _POOL_EXACT = exact


def _pool_source(s: int) -> list[tuple[int, Value]]:
    return _sparse_credit(_source_pass(_POOL_PG, s, _POOL_EXACT))


def betweenness(
    graph: WeightedDigraph,
    exact: bool = False,
    processes: Optional[int] = None,
) -> CentralityReport:
    """Unnormalized betweenness of every node, endpoints excluded.

    For node v this is the sum over ordered pairs (s, t), s != t, v not in
    {s, t}, of the fraction of minimum-fee s->t paths passing through v.
    ``exact`` switches the accumulation from floats to rationals. The
    result is independent of ``processes``.
    """
    for _, _, weight in graph.arcs:
        if weight < 0:
            raise NegativeWeightError(f"negative arc weight {weight}")
    n = len(graph.node_ids)
    pg = _prepare(graph)
    totals: list[Value] = [Fraction(0) if exact else 0.0] * n

    if processes and processes > 1 and n > 1:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, n // (processes * 4))
        with ctx.Pool(processes, initializer=_pool_init, initargs=(pg, exact)) as pool:
            for sparse in pool.imap(_pool_source, range(n), chunksize=chunk):
                for i, value in sparse:
                    totals[i] += value
    else:
        for s in range(n):
            for i, value in _sparse_credit(_source_pass(pg, s, exact)):
                totals[i] += value

    values = {graph.node_ids[i]: totals[i] for i in range(n)}
    return CentralityReport(graph.as_of, graph.amount_msat, values)


def brute_force_betweenness(graph: WeightedDigraph) -> CentralityReport:
    """Independent oracle: enumerate every simple path per ordered pair,
    keep the cheapest ones, count directly. Exact rationals; factorial
    blowup caps the graph at 12 nodes."""
    n = len(graph.node_ids)
    if n > BRUTE_FORCE_MAX_NODES:
        raise TooLargeError(f"{n} nodes exceeds brute-force bound {BRUTE_FORCE_MAX_NODES}")
    for _, _, weight in graph.arcs:
        if weight < 0:
            raise NegativeWeightError(f"negative arc weight {weight}")
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for src, dst, weight in graph.arcs:
        adj[src].append((dst, weight))

    totals = [Fraction(0) for _ in range(n)]
    for s in range(n):
        best: dict[int, int] = {}
        sigma: dict[int, int] = {}
        interior_counts: dict[int, list[int]] = {}
        path = [s]
        on_path = [False] * n
        on_path[s] = True

        def visit(u: int, cost: int) -> None:
            for v, weight in adj[u]:
                if on_path[v]:
                    continue
                c = cost + weight
                known = best.get(v)
                if known is None or c < known:
                    best[v] = c
                    sigma[v] = 1
                    counts = [0] * n
                    for w in path[1:]:
                        counts[w] += 1
                    interior_counts[v] = counts
                elif c == known:
                    sigma[v] += 1
                    counts = interior_counts[v]
                    for w in path[1:]:
                        counts[w] += 1
                path.append(v)
                on_path[v] = True
                visit(v, c)
                path.pop()
                on_path[v] = False

        visit(s, 0)
        for t, count in sigma.items():
            counts = interior_counts[t]
            for v in range(n):
                if counts[v]:
                    totals[v] += Fraction(counts[v], count)

    values = {graph.node_ids[i]: totals[i] for i in range(n)}
    return CentralityReport(graph.as_of, graph.amount_msat, values)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

REPORT_FORMAT = "centrality-report"
REPORT_VERSION = 1


def report_items(report: CentralityReport) -> list[tuple[NodeId, Value]]:
    """Entries sorted by descending value, then node id."""
    return sorted(report.values.items(), key=lambda kv: (-kv[1], kv[0]))


def report_to_csv(report: CentralityReport) -> str:
    lines = ["node_id,betweenness"]
    for node_id, value in report_items(report):
        lines.append(f"{node_id.hex()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def report_to_json(report: CentralityReport) -> str:
    import json

    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "as_of": report.as_of,
        "amount_msat": report.amount_msat,
        "leaf_count": report.leaf_count,
        "values": {
            node_id.hex(): float(value) for node_id, value in report.values.items()
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


class ReportFormatError(ValueError):
    """Serialized centrality report is not in the expected format."""


def report_from_json(text: str) -> CentralityReport:
    import json

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise ReportFormatError("missing centrality report format marker")
    if doc.get("version") != REPORT_VERSION:
        raise ReportFormatError(f"unsupported report version {doc.get('version')!r}")
    try:
        values = {
            bytes.fromhex(node_hex): float(value)
            for node_hex, value in doc["values"].items()
        }
        return CentralityReport(
            as_of=int(doc["as_of"]),
            amount_msat=int(doc["amount_msat"]),
            values=values,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ReportFormatError(f"malformed report document: {exc}") from exc
