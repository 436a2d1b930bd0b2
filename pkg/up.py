"""Identifiability bounds under uncontrollable probing (UP).

Measurement paths are fixed by routing. Bounds on Ω_UP(v) come from the
minimum number of other non-monitors whose paths cover every path through v
(exact search, or PuLP ILP) and its greedy approximation.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import pulp

from csp import Applicability, IdentSetBounds, MechanismTag, OmegaInterval, Verdict
from errors import AnalysisError, BudgetExceededError, PathSetError, TopologyError
from loaders import PathLike, read_path_lines
from topology import Topology

logger = logging.getLogger(__name__)

DEFAULT_COVER_BUDGET = 200000
UP_MODES = ("original", "relaxed")


@dataclass(frozen=True, eq=False)
class PathSet:
    """Measurement paths of a topology and the per-node index P_v."""

    topology: Topology
    paths: Tuple[Tuple[int, ...], ...]
    index: Mapping[int, Tuple[int, ...]]

    @classmethod
    def build(cls, G: Topology, paths: Iterable[Sequence[int]],
              source: Optional[str] = None, lines: Optional[Sequence[int]] = None) -> "PathSet":
        paths = [tuple(p) for p in paths]
        for i, path in enumerate(paths):
            _validate_path(G, path, source, lines[i] if lines is not None else None)
        index: Dict[int, List[int]] = {v: [] for v in G.non_monitors}
        for pid, path in enumerate(paths):
            for v in path:
                if v in index:
                    index[v].append(pid)
        return cls(G, tuple(paths), {v: tuple(ids) for v, ids in index.items()})

    def __len__(self) -> int:
        return len(self.paths)

    def p_v(self, v: int) -> frozenset:
        if v not in self.index:
            raise AnalysisError(f"{self.topology.label(v)} is not a non-monitor")
        return frozenset(self.index[v])

    def members(self, pid: int) -> frozenset:
        """Non-monitors on path ``pid``."""
        return frozenset(v for v in self.paths[pid] if not self.topology.is_monitor(v))

    def subset(self, pids: Iterable[int]) -> "PathSet":
        return PathSet.build(self.topology, [self.paths[i] for i in sorted(set(pids))])

    def labelled(self) -> List[Tuple[str, ...]]:
        return [tuple(self.topology.label(v) for v in p) for p in self.paths]


def _validate_path(G: Topology, path: Tuple[int, ...], source: Optional[str], line: Optional[int]) -> None:
    def fail(msg: str):
        raise PathSetError(msg, path=source, line=line)

    if len(path) < 2:
        fail("a path needs at least two nodes")
    if len(set(path)) != len(path):
        fail("repeated node in path")
    for v in path:
        if v not in G.graph:
            fail(f"unknown node id {v!r}")
    for end in (path[0], path[-1]):
        if not G.is_monitor(end):
            fail(f"endpoint {G.label(end)} is not a monitor")
    for u, v in zip(path, path[1:]):
        if not G.graph.has_edge(u, v):
            fail(f"no link {G.label(u)}-{G.label(v)}")


# --- path construction ------------------------------------------------------------
def gen_paths_shortest(G: Topology) -> PathSet:
    """One shortest path per monitor pair, lexicographically smallest by node id."""
    if G.mu < 2:
        raise AnalysisError("need at least two monitors for measurement paths")
    paths = []
    for s, t in itertools.combinations(G.sorted_monitors, 2):
        dist = nx.single_source_shortest_path_length(G.graph, t)
        if s not in dist:
            raise AnalysisError(f"monitors {G.label(s)} and {G.label(t)} are disconnected")
        path = [s]
        while path[-1] != t:
            here = path[-1]
            path.append(min(u for u in G.graph[here] if dist.get(u) == dist[here] - 1))
        paths.append(path)
    logger.debug("built %d shortest measurement path(s)", len(paths))
    return PathSet.build(G, paths)


def load_paths(file: PathLike, G: Topology) -> PathSet:
    source = str(file)
    paths, lines = [], []
    for labels, line in read_path_lines(file):
        try:
            paths.append([G.id_of(label) for label in labels])
        except TopologyError as e:
            raise PathSetError(str(e), path=source, line=line) from e
        lines.append(line)
    pathset = PathSet.build(G, paths, source=source, lines=lines)
    logger.info("loaded %d measurement path(s) from %s", len(pathset), source)
    return pathset


# --- set cover on abstract families -----------------------------------------------------
def _restrict(universe: frozenset, candidates: Mapping[Hashable, Iterable]) -> Dict[Hashable, frozenset]:
    restricted = {}
    for key in sorted(candidates):
        part = frozenset(candidates[key]) & universe
        if part:
            restricted[key] = part
    return restricted


def greedy_cover(universe: Iterable, candidates: Mapping[Hashable, Iterable]) -> Optional[List[Hashable]]:
    """Greedy cover: most newly covered elements first, ties by smallest key."""
    uncovered = set(universe)
    sets = _restrict(frozenset(uncovered), candidates)
    chosen: List[Hashable] = []
    while uncovered:
        best, gain = None, 0
        for key, part in sets.items():
            g = len(part & uncovered)
            if g > gain:
                best, gain = key, g
        if best is None:
            return None
        chosen.append(best)
        uncovered -= sets.pop(best)
    return chosen


def _drop_dominated(sets: Dict[Hashable, frozenset]) -> List[frozenset]:
    kept: List[frozenset] = []
    for part in sorted(set(sets.values()), key=len, reverse=True):
        if not any(part <= other for other in kept):
            kept.append(part)
    return kept


def min_cover_size(universe: Iterable, candidates: Mapping[Hashable, Iterable],
                   budget: int = DEFAULT_COVER_BUDGET) -> Optional[int]:
    """Size of a minimum cover, or None when the family cannot cover.

    Searches by increasing cardinality over non-dominated sets; the greedy
    size caps the search. Raises BudgetExceededError after ``budget`` checks.
    """
    universe = frozenset(universe)
    if not universe:
        return 0
    sets = _restrict(universe, candidates)
    greedy = greedy_cover(universe, sets)
    if greedy is None:
        return None
    parts = _drop_dominated(sets)
    lower = math.ceil(len(universe) / max(len(p) for p in parts))
    checks = 0
    for r in range(lower, len(greedy)):
        for combo in itertools.combinations(parts, r):
            checks += 1
            if checks > budget:
                raise BudgetExceededError(f"cover search exceeded {budget} checks")
            if frozenset().union(*combo) == universe:
                return r
    return len(greedy)


def ilp_cover_size(universe: Iterable, candidates: Mapping[Hashable, Iterable]) -> Optional[int]:
    """Minimum cover size as a 0/1 program solved by CBC."""
    universe = frozenset(universe)
    if not universe:
        return 0
    sets = _restrict(universe, candidates)
    if not sets or frozenset().union(*sets.values()) != universe:
        return None
    keys = list(sets)
    prob = pulp.LpProblem("min_cover", pulp.LpMinimize)
    x = pulp.LpVariable.dicts("x", range(len(keys)), cat="Binary")
    prob += pulp.lpSum(x[i] for i in range(len(keys)))
    for element in sorted(universe, key=str):
        prob += pulp.lpSum(x[i] for i, key in enumerate(keys) if element in sets[key]) >= 1
    prob.solve(pulp.PULP_CBC_CMD(msg=False))
    if pulp.LpStatus[prob.status] != "Optimal":
        raise AnalysisError(f"cover ILP ended with status {pulp.LpStatus[prob.status]}")
    return int(round(pulp.value(prob.objective)))


@lru_cache(maxsize=1)
def cbc_available() -> bool:
    return bool(pulp.PULP_CBC_CMD(msg=False).available())


def harmonic(d: int) -> Fraction:
    return sum((Fraction(1, i) for i in range(1, d + 1)), Fraction(0))


# --- per-node cover metrics -------------------------------------------------------------
@dataclass(frozen=True)
class CoverMetrics:
    node: int
    msc: int
    gsc: int
    d_max: int
    harmonic: Fraction
    sigma: int
    msc_exact: bool = True

    @property
    def sentinel(self) -> bool:
        """Uncoverable (value σ) or on no path (value 0)."""
        return self.gsc in (0, self.sigma) and self.msc == self.gsc

    @property
    def relaxed_lower(self) -> int:
        """⌈GSC / H(d_max)⌉, a lower estimate of MSC."""
        if self.sentinel:
            return self.gsc
        return math.ceil(Fraction(self.gsc) / self.harmonic)


def _family(P: PathSet, v: int) -> Tuple[frozenset, Dict[int, frozenset], bool]:
    G = P.topology
    if v not in G.graph or G.is_monitor(v):
        raise AnalysisError(f"{v!r} is not a non-monitor")
    universe = P.p_v(v)
    uncoverable = any(P.members(pid) == {v} for pid in universe)
    covers = {w: P.p_v(w) & universe for w in G.non_monitors if w != v}
    return universe, covers, uncoverable


@lru_cache(maxsize=4096)
def cover_metrics(P: PathSet, v: int, solver: str = "search",
                  budget: int = DEFAULT_COVER_BUDGET) -> CoverMetrics:
    sigma = P.topology.sigma
    universe, covers, uncoverable = _family(P, v)
    d_max = max((len(c) for c in covers.values()), default=0)
    h = harmonic(d_max)
    if not universe:
        return CoverMetrics(v, 0, 0, d_max, h, sigma)
    if uncoverable:
        return CoverMetrics(v, sigma, sigma, d_max, h, sigma)
    gsc = len(greedy_cover(universe, covers))
    if solver == "ilp":
        return CoverMetrics(v, ilp_cover_size(universe, covers), gsc, d_max, h, sigma)
    if solver != "search":
        raise AnalysisError(f"unknown cover solver {solver!r}")
    try:
        value = min_cover_size(universe, covers, budget)
    except BudgetExceededError:
        estimate = math.ceil(Fraction(gsc) / h)
        logger.warning("node %s: exact cover search over budget, using relaxed estimate",
                       P.topology.label(v))
        return CoverMetrics(v, estimate, gsc, d_max, h, sigma, msc_exact=False)
    return CoverMetrics(v, value, gsc, d_max, h, sigma)


def msc(P: PathSet, v: int, sigma: Optional[int] = None) -> int:
    _check_sigma(P, sigma)
    return cover_metrics(P, v).msc


def gsc(P: PathSet, v: int, sigma: Optional[int] = None) -> int:
    _check_sigma(P, sigma)
    return cover_metrics(P, v).gsc


def _check_sigma(P: PathSet, sigma: Optional[int]) -> int:
    if sigma is not None and sigma != P.topology.sigma:
        raise AnalysisError(f"sigma={sigma} does not match the topology (sigma={P.topology.sigma})")
    return P.topology.sigma


def _msc_range(m: CoverMetrics) -> Tuple[int, int]:
    if m.msc_exact:
        return m.msc, m.msc
    return m.relaxed_lower, m.gsc


# --- identifiability ----------------------------------------------------------------------
def up_k_identifiable(P: PathSet, S: Iterable[int], k: int, sigma: Optional[int] = None) -> Verdict:
    sigma = _check_sigma(P, sigma)
    S = frozenset(S)
    if not 0 <= k <= sigma:
        raise AnalysisError(f"k={k} outside [0, sigma={sigma}]")
    if not S or k == 0:
        return Verdict.SUFFICIENT
    metrics = [cover_metrics(P, v) for v in sorted(S)]
    if k == sigma:
        return Verdict.SUFFICIENT if all(m.msc == sigma for m in metrics) else Verdict.NO
    lowest = min(_msc_range(m)[0] for m in metrics)
    highest = min(_msc_range(m)[1] for m in metrics)
    if lowest >= k + 1:
        return Verdict.SUFFICIENT
    if highest < k:
        return Verdict.NO
    return Verdict.INCONCLUSIVE


def omega_up_bounds(P: PathSet, v: int, sigma: Optional[int] = None, mode: str = "original") -> OmegaInterval:
    sigma = _check_sigma(P, sigma)
    if mode not in UP_MODES:
        raise AnalysisError(f"unknown UP mode {mode!r}")
    m = cover_metrics(P, v)
    if m.sentinel:
        return OmegaInterval.exact(m.msc, MechanismTag.UP)
    fallback = mode == "original" and not m.msc_exact
    if mode == "original" and m.msc_exact:
        return OmegaInterval(max(m.msc - 1, 0), m.msc, MechanismTag.UP, Applicability.IN_RANGE)
    return OmegaInterval(max(m.relaxed_lower - 1, 0), m.gsc, MechanismTag.UP,
                         Applicability.IN_RANGE, fallback=fallback)


def s_up_bounds(P: PathSet, k: int, sigma: Optional[int] = None, mode: str = "original") -> IdentSetBounds:
    sigma = _check_sigma(P, sigma)
    if mode not in UP_MODES:
        raise AnalysisError(f"unknown UP mode {mode!r}")
    nodes = P.topology.non_monitors
    metrics = {v: cover_metrics(P, v) for v in nodes}
    if k == sigma:
        exact = frozenset(v for v, m in metrics.items() if m.msc == sigma)
        return IdentSetBounds(k, exact, exact, exact, MechanismTag.UP, mode)
    if not 1 <= k <= sigma - 1:
        raise AnalysisError(f"k={k} outside [1, sigma={sigma}]")
    if mode == "relaxed":
        low = {v: m.relaxed_lower for v, m in metrics.items()}
        high = {v: m.gsc for v, m in metrics.items()}
    else:
        low = {v: _msc_range(m)[0] for v, m in metrics.items()}
        high = {v: _msc_range(m)[1] for v, m in metrics.items()}
    inner = frozenset(v for v in nodes if low[v] >= k + 1)
    outer = frozenset(v for v in nodes if high[v] >= k)
    return IdentSetBounds(k, inner, outer, None, MechanismTag.UP, mode)
