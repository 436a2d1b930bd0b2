"""Graph data model, connectivity primitives and the merged-monitor graphs.

Nodes are dense integers ``0..n-1``; ``Topology.labels`` keeps the external
names. The auxiliary graphs G* and G_m collapse monitors into a single virtual
monitor whose id is ``M_PRIME``.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
from networkx.algorithms.connectivity import local_node_connectivity, minimum_node_cut

from errors import AnalysisError, TopologyError

logger = logging.getLogger(__name__)

M_PRIME = -1
M_PRIME_LABEL = "m'"


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected simple graph with monitor / non-monitor roles."""

    graph: nx.Graph
    monitors: frozenset
    labels: Tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.number_of_nodes()
        if set(self.graph.nodes) != set(range(n)):
            raise TopologyError("node ids must be the dense range 0..n-1")
        if len(self.labels) != n:
            raise TopologyError(f"expected {n} labels, got {len(self.labels)}")
        if len(set(self.labels)) != n:
            raise TopologyError("node labels must be unique")
        if nx.number_of_selfloops(self.graph):
            raise TopologyError("self-loops are not allowed")
        unknown = [m for m in self.monitors if m not in self.graph]
        if unknown:
            raise TopologyError(f"monitor ids not in graph: {sorted(unknown)}")
        if not nx.is_frozen(self.graph):
            object.__setattr__(self, "graph", nx.freeze(self.graph))
        object.__setattr__(self, "monitors", frozenset(self.monitors))
        object.__setattr__(self, "labels", tuple(self.labels))

    # --- constructors -----------------------------------------------------
    @classmethod
    def from_edges(
        cls,
        edges: Iterable[Tuple[str, str]],
        monitors: Iterable[str] = (),
        nodes: Optional[Sequence[str]] = None,
        metadata: Optional[Mapping[str, Any]] = None,
    ) -> "Topology":
        """Build from labelled edges; ids follow first appearance (``nodes`` first)."""
        index: Dict[str, int] = {}

        def intern(label: str) -> int:
            if label not in index:
                index[label] = len(index)
            return index[label]

        for label in nodes or ():
            intern(str(label))
        graph = nx.Graph()
        duplicates = 0
        for u, v in edges:
            u, v = str(u), str(v)
            if u == v:
                raise TopologyError(f"self-loop on node {u!r}")
            a, b = intern(u), intern(v)
            graph.add_nodes_from((a, b))
            if graph.has_edge(a, b):
                duplicates += 1
                continue
            graph.add_edge(a, b)
        graph.add_nodes_from(range(len(index)))
        if duplicates:
            logger.warning("collapsed %d duplicate edge(s)", duplicates)
        if not index:
            raise TopologyError("empty graph")
        monitor_ids = set()
        for label in monitors:
            label = str(label)
            if label not in index:
                raise TopologyError(f"unknown monitor label {label!r}")
            monitor_ids.add(index[label])
        labels = tuple(sorted(index, key=index.get))
        return cls(graph, frozenset(monitor_ids), labels, dict(metadata or {}))

    @classmethod
    def from_graph(
        cls,
        graph: nx.Graph,
        monitors: Iterable[Hashable] = (),
        metadata: Optional[Mapping[str, Any]] = None,
    ) -> "Topology":
        """Relabel any networkx graph to dense ids, keeping ``str(node)`` as label."""
        order = sorted(graph.nodes, key=lambda x: (str(type(x)), x))
        mapping = {node: i for i, node in enumerate(order)}
        dense = nx.Graph()
        dense.add_nodes_from(range(len(order)))
        dense.add_edges_from((mapping[u], mapping[v]) for u, v in graph.edges if u != v)
        labels = tuple(str(node) for node in order)
        return cls(dense, frozenset(mapping[m] for m in monitors), labels, dict(metadata or {}))

    def with_monitors(self, monitor_ids: Iterable[int]) -> "Topology":
        return Topology(self.graph, frozenset(monitor_ids), self.labels, dict(self.metadata))

    def with_metadata(self, **extra: Any) -> "Topology":
        merged = dict(self.metadata)
        merged.update(extra)
        return Topology(self.graph, self.monitors, self.labels, merged)

    # --- roles and counts ---------------------------------------------------
    @property
    def nodes(self) -> Tuple[int, ...]:
        return tuple(range(self.graph.number_of_nodes()))

    @property
    def edges(self) -> frozenset:
        return frozenset(frozenset(e) for e in self.graph.edges)

    @property
    def non_monitors(self) -> Tuple[int, ...]:
        return tuple(v for v in self.nodes if v not in self.monitors)

    @property
    def sorted_monitors(self) -> Tuple[int, ...]:
        return tuple(sorted(self.monitors))

    @property
    def sigma(self) -> int:
        return self.graph.number_of_nodes() - len(self.monitors)

    @property
    def mu(self) -> int:
        return len(self.monitors)

    @property
    def num_links(self) -> int:
        return self.graph.number_of_edges()

    def is_monitor(self, v: int) -> bool:
        return v in self.monitors

    def degree(self, v: int) -> int:
        self._check(v)
        return self.graph.degree(v)

    def neighbors(self, v: int) -> frozenset:
        self._check(v)
        return frozenset(self.graph[v])

    def monitor_neighbors(self, v: int) -> frozenset:
        return frozenset(u for u in self.neighbors(v) if u in self.monitors)

    # --- labels -------------------------------------------------------------
    def id_of(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise TopologyError(f"unknown node label {label!r}") from None

    def ids(self, labels: Iterable[str]) -> frozenset:
        return frozenset(self.id_of(label) for label in labels)

    def label(self, v: int) -> str:
        if v == M_PRIME:
            return M_PRIME_LABEL
        self._check(v)
        return self.labels[v]

    def label_set(self, ids: Iterable[int]) -> frozenset:
        return frozenset(self.label(v) for v in ids)

    def fingerprint(self) -> str:
        """Content hash of edges, roles and labels (stable across processes)."""
        h = hashlib.blake2b(digest_size=16)
        for u, v in sorted(tuple(sorted(e)) for e in self.graph.edges):
            h.update(f"{u}-{v};".encode())
        h.update(("M" + ",".join(map(str, self.sorted_monitors))).encode())
        h.update(("L" + "\x1f".join(self.labels)).encode())
        return h.hexdigest()

    def _check(self, v: int) -> None:
        if v not in self.graph:
            raise TopologyError(f"unknown node id {v!r}")

    def __repr__(self) -> str:
        return f"Topology(|V|={self.graph.number_of_nodes()}, |L|={self.num_links}, mu={self.mu})"


@dataclass(frozen=True, eq=False)
class AuxGraph:
    """Merged-monitor graph: G* when ``excluded_monitor`` is None, else G_m."""

    base: Topology
    excluded_monitor: Optional[int]
    graph: nx.Graph
    virtual: int = M_PRIME

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.graph.nodes)

    def label(self, v: int) -> str:
        return self.base.label(v)

    def label_edges(self) -> frozenset:
        return frozenset(frozenset((self.label(u), self.label(v))) for u, v in self.graph.edges)


@dataclass(frozen=True)
class CutValue:
    value: int
    capped: bool
    cap: int

    def __post_init__(self):
        if self.value < 0 or self.value > self.cap:
            raise AnalysisError(f"cut value {self.value} outside [0, {self.cap}]")


GraphLike = Union[Topology, AuxGraph, nx.Graph]


def _graph_of(G: GraphLike) -> nx.Graph:
    return G if isinstance(G, nx.Graph) else G.graph


def components_after_removal(G: GraphLike, X: Iterable[int]) -> List[frozenset]:
    """Connected components of ``G - X``, ordered by smallest member."""
    graph = _graph_of(G)
    removed = set(X)
    unknown = [x for x in removed if x not in graph]
    if unknown:
        raise TopologyError(f"unknown node id(s) {sorted(unknown, key=str)}")
    rest = graph.subgraph(n for n in graph if n not in removed)
    return sorted((frozenset(c) for c in nx.connected_components(rest)), key=min)


def vertex_connectivity(H: GraphLike, s: int, t: int, cap: int) -> CutValue:
    """Minimum internal vertex cut between ``s`` and ``t``, capped at ``cap``.

    Computed as unit-capacity max-flow on the node-split digraph. Adjacent
    endpoints admit no internal cut and report ``cap`` with ``capped=True``.
    """
    graph = _graph_of(H)
    if s == t:
        raise TopologyError("s and t must differ")
    for x in (s, t):
        if x not in graph:
            raise TopologyError(f"unknown node id {x!r}")
    if cap < 0:
        raise AnalysisError("cap must be non-negative")
    if cap == 0 or graph.has_edge(s, t):
        return CutValue(cap, True, cap)
    flow = local_node_connectivity(graph, s, t, cutoff=cap)
    if flow >= cap:
        return CutValue(cap, True, cap)
    return CutValue(int(flow), False, cap)


def minimum_cut_set(H: GraphLike, s: int, t: int) -> frozenset:
    """One minimum internal vertex cut separating non-adjacent ``s`` and ``t``."""
    graph = _graph_of(H)
    if graph.has_edge(s, t):
        raise AnalysisError("adjacent nodes have no internal vertex cut")
    if not nx.has_path(graph, s, t):
        return frozenset()
    return frozenset(minimum_node_cut(graph, s, t))


def _merge_monitors(G: Topology, sources: frozenset) -> nx.Graph:
    members = set(G.non_monitors)
    aux = nx.Graph()
    aux.add_nodes_from(G.non_monitors)
    aux.add_node(M_PRIME)
    aux.add_edges_from((u, v) for u, v in G.graph.edges if u in members and v in members)
    aux.add_edges_from(
        (u, M_PRIME) for u in G.non_monitors if any(w in sources for w in G.graph[u])
    )
    return nx.freeze(aux)


@lru_cache(maxsize=512)
def build_gstar(G: Topology) -> AuxGraph:
    if G.mu < 1:
        raise TopologyError("G* needs at least one monitor")
    return AuxGraph(G, None, _merge_monitors(G, G.monitors))


@lru_cache(maxsize=1024)
def build_g_m(G: Topology, m: int) -> AuxGraph:
    if m not in G.monitors:
        raise TopologyError(f"node {m!r} is not a monitor")
    if G.mu < 2:
        raise TopologyError("G_m needs at least two monitors")
    return AuxGraph(G, m, _merge_monitors(G, G.monitors - {m}))
