"""Exhaustive identifiability on small topologies.

Failure sets are bitmasks over node ids. Two failure sets are
indistinguishable when they produce the same observation signature:

* CSP / UP: the set of failed measurement paths (a path fails iff it meets F);
* CAP: the non-monitors reachable from some monitor in G - F. Walks never need
  enumerating: a walk avoids F iff every node it visits is in that component.
"""
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import networkx as nx

from csp import MechanismTag
from errors import AnalysisError, BudgetExceededError, TopologyError
from topology import CutValue, GraphLike, Topology, _graph_of
from up import PathSet

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_BUDGET = 14


@dataclass(frozen=True)
class Mechanism:
    tag: MechanismTag
    csp_monitor_transit: bool = True
    pathset: Optional[PathSet] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", MechanismTag(self.tag))
        if self.tag is MechanismTag.UP and self.pathset is None:
            raise AnalysisError("UP needs a path set")

    @classmethod
    def cap(cls) -> "Mechanism":
        return cls(MechanismTag.CAP)

    @classmethod
    def csp(cls, transit: bool = True) -> "Mechanism":
        return cls(MechanismTag.CSP, csp_monitor_transit=transit)

    @classmethod
    def up(cls, pathset: PathSet) -> "Mechanism":
        return cls(MechanismTag.UP, pathset=pathset)

    @property
    def label(self) -> str:
        if self.tag is MechanismTag.CSP and not self.csp_monitor_transit:
            return "CSP-no-transit"
        return self.tag.value


@dataclass(frozen=True)
class FailureSet:
    members: frozenset

    @classmethod
    def of(cls, G: Topology, members: Iterable[int]) -> "FailureSet":
        members = frozenset(members)
        monitors = members & G.monitors
        if monitors:
            raise AnalysisError(f"monitors never fail: {sorted(G.label(m) for m in monitors)}")
        unknown = [v for v in members if v not in G.graph]
        if unknown:
            raise TopologyError(f"unknown node id(s) {sorted(unknown)}")
        return cls(members)

    @property
    def mask(self) -> int:
        return _mask(self.members)


def _mask(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _guard(G: Topology, budget: int) -> None:
    if len(G.nodes) > budget:
        raise BudgetExceededError(f"|V|={len(G.nodes)} exceeds the oracle budget of {budget} nodes")


# --- path enumeration --------------------------------------------------------------
@lru_cache(maxsize=128)
def enumerate_simple_paths(G: Topology, monitor_transit: bool = True,
                           budget: int = DEFAULT_ORACLE_BUDGET) -> PathSet:
    """All simple monitor-to-monitor paths, one orientation each (smaller endpoint first)."""
    if G.mu < 2:
        raise AnalysisError("need at least two monitors")
    _guard(G, budget)
    adj = {v: sorted(G.graph[v]) for v in G.nodes}
    found: List[Tuple[int, ...]] = []

    def extend(path: List[int], seen: set):
        for u in adj[path[-1]]:
            if u in seen:
                continue
            path.append(u)
            if G.is_monitor(u):
                if u > path[0]:
                    found.append(tuple(path))
                if monitor_transit:
                    seen.add(u)
                    extend(path, seen)
                    seen.discard(u)
            else:
                seen.add(u)
                extend(path, seen)
                seen.discard(u)
            path.pop()

    for s in G.sorted_monitors:
        extend([s], {s})
    found.sort(key=lambda p: (len(p), p))
    logger.debug("enumerated %d simple path(s), transit=%s", len(found), monitor_transit)
    return PathSet.build(G, found)


# --- observations ------------------------------------------------------------------
class _Observer:
    def __init__(self, G: Topology, mech: Mechanism, budget: int):
        _guard(G, budget)
        self.G = G
        self.mech = mech
        self.non_monitor_mask = _mask(G.non_monitors)
        if mech.tag is MechanismTag.CAP:
            self.monitor_mask = _mask(G.monitors)
            self.adj = [_mask(G.graph[v]) for v in G.nodes]
            return
        if mech.tag is MechanismTag.UP:
            pathset = mech.pathset
            if pathset.topology is not G and pathset.topology.fingerprint() != G.fingerprint():
                raise AnalysisError("path set belongs to a different topology")
        else:
            pathset = enumerate_simple_paths(G, mech.csp_monitor_transit, budget)
        # paths with equal non-monitor sets fail together
        self.path_masks = sorted({_mask(pathset.members(i)) for i in range(len(pathset))})
        self.node_paths = [0] * len(G.nodes)
        for i, pm in enumerate(self.path_masks):
            for v in _bits(pm):
                self.node_paths[v] |= 1 << i

    def reach(self, f: int) -> int:
        allowed = ~f
        reached = self.monitor_mask
        frontier = reached
        while frontier:
            nxt = 0
            for u in _bits(frontier):
                nxt |= self.adj[u]
            frontier = nxt & allowed & ~reached
            reached |= frontier
        return reached & self.non_monitor_mask

    def signature(self, f: int) -> int:
        if self.mech.tag is MechanismTag.CAP:
            return self.reach(f)
        sig = 0
        for v in _bits(f):
            sig |= self.node_paths[v]
        return sig

    def witnessed(self, f: int) -> int:
        """Non-monitors with a measurement that survives F."""
        if self.mech.tag is MechanismTag.CAP:
            return self.reach(f)
        alive = 0
        for pm in self.path_masks:
            if not pm & f:
                alive |= pm
        return alive

    def failure_sets(self, k: int) -> Iterator[int]:
        nodes = self.G.non_monitors
        for size in range(0, min(k, len(nodes)) + 1):
            for combo in itertools.combinations(nodes, size):
                yield _mask(combo)


@lru_cache(maxsize=128)
def _observer(G: Topology, mech: Mechanism, budget: int) -> _Observer:
    return _Observer(G, mech, budget)


@lru_cache(maxsize=128)
def _bad_by_level(G: Topology, mech: Mechanism, budget: int) -> Tuple[int, ...]:
    """bad[k]: nodes v for which two failure sets of size <= k differ on v yet look alike."""
    obs = _observer(G, mech, budget)
    groups: Dict[int, List[int]] = {}
    bad = [0]
    nodes = G.non_monitors
    for size in range(0, len(nodes) + 1):
        for combo in itertools.combinations(nodes, size):
            f = _mask(combo)
            sig = obs.signature(f)
            if sig in groups:
                acc = groups[sig]
                acc[0] &= f
                acc[1] |= f
            else:
                groups[sig] = [f, f]
        if size == 0:
            continue
        level = 0
        for both, either in groups.values():
            level |= either & ~both
        bad.append(level)
    return tuple(bad)


def clear_caches() -> None:
    """Drop memoised paths, observers and enumeration results."""
    for cached in (enumerate_simple_paths, _observer, _bad_by_level):
        cached.cache_clear()


def _check_subset(G: Topology, S: Iterable[int]) -> frozenset:
    S = frozenset(S)
    bad = [v for v in S if v not in G.graph or G.is_monitor(v)]
    if bad:
        raise AnalysisError(f"S must contain non-monitors only, got {sorted(bad)}")
    return S


# --- public oracle ------------------------------------------------------------------
def witness_exists(G: Topology, v: int, F: Iterable[int], mech: Mechanism,
                   budget: int = DEFAULT_ORACLE_BUDGET) -> bool:
    failure = FailureSet.of(G, F)
    _check_subset(G, [v])
    if v in failure.members:
        raise AnalysisError(f"{G.label(v)} is in the failure set")
    return bool(_observer(G, mech, budget).witnessed(failure.mask) >> v & 1)


def distinguishable(G: Topology, F1: Iterable[int], F2: Iterable[int], mech: Mechanism,
                    budget: int = DEFAULT_ORACLE_BUDGET) -> bool:
    """True iff some available measurement fails under exactly one of F1, F2."""
    f1, f2 = FailureSet.of(G, F1).mask, FailureSet.of(G, F2).mask
    obs = _observer(G, mech, budget)
    if mech.tag is MechanismTag.CAP:
        return bool((f1 & ~f2) & obs.reach(f2) or (f2 & ~f1) & obs.reach(f1))
    return any(bool(pm & f1) != bool(pm & f2) for pm in obs.path_masks)


def exact_k_identifiable(G: Topology, S: Iterable[int], k: int, mech: Mechanism,
                         budget: int = DEFAULT_ORACLE_BUDGET) -> bool:
    """Every pair of failure sets of size <= k that differ on S is distinguishable."""
    return find_confusable_pair(G, S, k, mech, budget) is None


def find_confusable_pair(G: Topology, S: Iterable[int], k: int, mech: Mechanism,
                         budget: int = DEFAULT_ORACLE_BUDGET) -> Optional[Tuple[frozenset, frozenset]]:
    """An indistinguishable pair (F1, F2) with F1 ∩ S != F2 ∩ S, sizes <= k, if any."""
    S = _check_subset(G, S)
    if k < 0:
        raise AnalysisError("k must be non-negative")
    obs = _observer(G, mech, budget)
    if k == 0 or not S:
        return None
    s_mask = _mask(S)
    first_by_sig: Dict[int, Tuple[int, int]] = {}
    for f in obs.failure_sets(k):
        sig = obs.signature(f)
        part = f & s_mask
        if sig in first_by_sig:
            other, other_part = first_by_sig[sig]
            if other_part != part:
                return frozenset(_bits(other)), frozenset(_bits(f))
        else:
            first_by_sig[sig] = (f, part)
    return None


def exact_max_identifiable_set(G: Topology, k: int, mech: Mechanism,
                               budget: int = DEFAULT_ORACLE_BUDGET) -> frozenset:
    if k < 0:
        raise AnalysisError("k must be non-negative")
    bad = _bad_by_level(G, mech, budget)
    level = bad[min(k, len(bad) - 1)]
    return frozenset(v for v in G.non_monitors if not level >> v & 1)


def exact_omega(G: Topology, v: int, mech: Mechanism, budget: int = DEFAULT_ORACLE_BUDGET) -> int:
    """Largest k in [0, σ] for which {v} is k-identifiable."""
    _check_subset(G, [v])
    bad = _bad_by_level(G, mech, budget)
    omega = 0
    for k in range(1, len(bad)):
        if bad[k] >> v & 1:
            break
        omega = k
    return omega


def exact_omegas(G: Topology, mech: Mechanism, budget: int = DEFAULT_ORACLE_BUDGET) -> Dict[int, int]:
    return {v: exact_omega(G, v, mech, budget) for v in G.non_monitors}


def witness_inner_set(G: Topology, k: int, mech: Mechanism,
                      budget: int = DEFAULT_ORACLE_BUDGET) -> frozenset:
    """Nodes that keep a surviving measurement under every failure set of size <= k avoiding them."""
    if k < 0:
        raise AnalysisError("k must be non-negative")
    obs = _observer(G, mech, budget)
    lost = 0
    for f in obs.failure_sets(k):
        lost |= obs.non_monitor_mask & ~f & ~obs.witnessed(f)
    return frozenset(v for v in G.non_monitors if not lost >> v & 1)


def brute_vertex_cut(H: GraphLike, s: int, t: int, cap: int) -> CutValue:
    """Smallest internal vertex cut between s and t by exhaustive search, capped at ``cap``."""
    graph = _graph_of(H)
    if s == t:
        raise TopologyError("s and t must differ")
    if cap == 0 or graph.has_edge(s, t):
        return CutValue(cap, True, cap)
    inner = sorted((x for x in graph if x not in (s, t)), key=str)
    for r in range(0, cap):
        for X in itertools.combinations(inner, r):
            rest = graph.subgraph(x for x in graph if x not in X)
            if not nx.has_path(rest, s, t):
                return CutValue(r, False, cap)
    return CutValue(cap, True, cap)
