"""Identifiability bounds under controllable simple-path probing (CSP).

Also hosts the CAP per-node interval, which only needs Γ on G*, and the result
types shared with the UP analysis.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Optional, Tuple

from errors import AnalysisError
from topology import M_PRIME, CutValue, Topology, build_g_m, build_gstar, vertex_connectivity

logger = logging.getLogger(__name__)

PI_DEFINITION = "pi_v = min(Gamma_G*(v,m') - 1, min_m Gamma_G_m(v,m')), clamped at 0 (inferred)"


class Verdict(str, Enum):
    SUFFICIENT = "Sufficient"
    INCONCLUSIVE = "Inconclusive"
    NO = "No"


class MechanismTag(str, Enum):
    CAP = "CAP"
    CSP = "CSP"
    UP = "UP"


class Applicability(str, Enum):
    IN_RANGE = "in-range"
    RANGE_EXCEEDED = "range-exceeded"
    EXACT = "exact"


@dataclass(frozen=True)
class OmegaInterval:
    lower: int
    upper: int
    mechanism: MechanismTag
    applicability: Applicability
    # set when the UP exact cover search ran out of budget
    fallback: bool = False

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise AnalysisError(f"invalid interval [{self.lower}, {self.upper}]")
        if self.applicability is Applicability.EXACT and self.lower != self.upper:
            raise AnalysisError("exact interval must have lower == upper")

    @classmethod
    def exact(cls, value: int, mechanism: MechanismTag) -> "OmegaInterval":
        return cls(value, value, mechanism, Applicability.EXACT)

    @property
    def is_exact(self) -> bool:
        return self.applicability is Applicability.EXACT

    def contains(self, value: int) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class IdentSetBounds:
    k: int
    inner: frozenset
    outer: frozenset
    exact: Optional[frozenset] = None
    mechanism: MechanismTag = MechanismTag.CSP
    mode: str = "original"

    def __post_init__(self):
        object.__setattr__(self, "inner", frozenset(self.inner))
        object.__setattr__(self, "outer", frozenset(self.outer))
        if self.exact is not None:
            object.__setattr__(self, "exact", frozenset(self.exact))
        if not self.inner <= self.outer:
            raise AnalysisError(f"k={self.k}: inner bound is not contained in the outer bound")

    def sandwiches(self, exact: Optional[Iterable[int]] = None) -> bool:
        target = self.exact if exact is None else frozenset(exact)
        if target is None:
            raise AnalysisError("no exact set to compare against")
        return self.inner <= target <= self.outer


@dataclass(frozen=True)
class CspNodeMetrics:
    node: int
    gamma_star: CutValue
    gamma_m: Mapping[int, CutValue]
    pi: int
    sigma: int

    @property
    def gamma_gm_min(self) -> Optional[CutValue]:
        if not self.gamma_m:
            return None
        return min(self.gamma_m.values(), key=lambda c: c.value)


@dataclass(frozen=True)
class SigmaCases:
    sigma_identifiable: bool
    sigma_minus_1_identifiable: bool
    s_tilde: frozenset = field(default_factory=frozenset)
    s_csp_sigma_minus_1: frozenset = field(default_factory=frozenset)


# --- argument checks -------------------------------------------------------------
def _check_set(G: Topology, S: Iterable[int], allow_empty: bool = False) -> frozenset:
    S = frozenset(S)
    if not S and not allow_empty:
        raise AnalysisError("S must be nonempty")
    bad = [v for v in S if v not in G.graph or G.is_monitor(v)]
    if bad:
        raise AnalysisError(f"S must contain non-monitors only, got {sorted(bad)}")
    return S


def _check_node(G: Topology, v: int) -> None:
    if v not in G.graph:
        raise AnalysisError(f"unknown node id {v!r}")
    if G.is_monitor(v):
        raise AnalysisError(f"{G.label(v)} is a monitor")


def _check_k(G: Topology, k: int) -> None:
    if not 0 <= k <= G.sigma:
        raise AnalysisError(f"k={k} outside [0, sigma={G.sigma}]")


# --- Γ values -----------------------------------------------------------------------
def gamma_gstar(G: Topology, S: Iterable[int]) -> CutValue:
    S = _check_set(G, S)
    if G.mu < 1:
        raise AnalysisError("need at least one monitor")
    gstar = build_gstar(G)
    return min((vertex_connectivity(gstar, v, M_PRIME, G.sigma) for v in sorted(S)),
               key=lambda c: c.value)


def gamma_gm_min(G: Topology, S: Iterable[int]) -> Tuple[CutValue, int]:
    """Smallest Γ_{G_m}(v, m') over monitors and members of S, with its monitor.

    Ties go to the smallest monitor id.
    """
    S = _check_set(G, S)
    if G.mu < 2:
        raise AnalysisError("need at least two monitors")
    best: Optional[Tuple[CutValue, int]] = None
    for m in G.sorted_monitors:
        gm = build_g_m(G, m)
        for v in sorted(S):
            cut = vertex_connectivity(gm, v, M_PRIME, G.sigma)
            if best is None or cut.value < best[0].value:
                best = (cut, m)
    return best


@lru_cache(maxsize=4096)
def csp_node_metrics(G: Topology, v: int) -> CspNodeMetrics:
    _check_node(G, v)
    if G.mu < 2:
        raise AnalysisError("need at least two monitors")
    star = vertex_connectivity(build_gstar(G), v, M_PRIME, G.sigma)
    per_monitor: Dict[int, CutValue] = {
        m: vertex_connectivity(build_g_m(G, m), v, M_PRIME, G.sigma) for m in G.sorted_monitors
    }
    pi = min(star.value - 1, min(c.value for c in per_monitor.values()))
    return CspNodeMetrics(v, star, MappingProxyType(per_monitor), max(pi, 0), G.sigma)


def pi_node(G: Topology, v: int) -> int:
    return csp_node_metrics(G, v).pi


def pi_values(G: Topology) -> Dict[int, int]:
    return {v: pi_node(G, v) for v in G.non_monitors}


# --- σ and σ-1 ----------------------------------------------------------------------
def _two_monitor_nodes(G: Topology) -> frozenset:
    return frozenset(v for v in G.non_monitors if len(G.monitor_neighbors(v)) >= 2)


def _s_tilde(G: Topology) -> frozenset:
    two = _two_monitor_nodes(G)
    rest = set(G.non_monitors) - two
    if len(rest) != 1:
        return frozenset()
    (w,) = rest
    others = set(G.non_monitors) - {w}
    if len(G.monitor_neighbors(w)) == 1 and others <= G.neighbors(w):
        return frozenset({w})
    return frozenset()


def csp_sigma_cases(G: Topology, S: Iterable[int]) -> SigmaCases:
    S = _check_set(G, S, allow_empty=True)
    two = _two_monitor_nodes(G)
    tilde = _s_tilde(G)
    exact = two | tilde
    return SigmaCases(
        sigma_identifiable=S <= two,
        sigma_minus_1_identifiable=S <= exact,
        s_tilde=tilde,
        s_csp_sigma_minus_1=exact,
    )


# --- k-identifiability ----------------------------------------------------------------
def csp_k_identifiable(G: Topology, S: Iterable[int], k: int) -> Verdict:
    S = _check_set(G, S)
    _check_k(G, k)
    if k == 0:
        return Verdict.SUFFICIENT
    sigma = G.sigma
    if k == sigma:
        ok = csp_sigma_cases(G, S).sigma_identifiable
        return Verdict.SUFFICIENT if ok else Verdict.NO
    if k == sigma - 1:
        ok = csp_sigma_cases(G, S).sigma_minus_1_identifiable
        return Verdict.SUFFICIENT if ok else Verdict.NO
    star = gamma_gstar(G, S).value
    gm, _ = gamma_gm_min(G, S)
    if star >= k + 2 and gm.value >= k + 1:
        return Verdict.SUFFICIENT
    if star < k + 1 or gm.value < k:
        return Verdict.NO
    return Verdict.INCONCLUSIVE


def csp_interval_from_pi(G: Topology, v: int, pi: int, cases: Optional[SigmaCases] = None) -> OmegaInterval:
    """Ω_CSP(v) interval for a given π_v."""
    sigma = G.sigma
    pi = max(pi, 0)
    if pi <= sigma - 2:
        return OmegaInterval(max(pi - 1, 0), pi, MechanismTag.CSP, Applicability.IN_RANGE)
    cases = cases or csp_sigma_cases(G, ())
    if len(G.monitor_neighbors(v)) >= 2:
        return OmegaInterval.exact(sigma, MechanismTag.CSP)
    if v in cases.s_tilde:
        return OmegaInterval.exact(sigma - 1, MechanismTag.CSP)
    upper = min(pi, sigma)
    return OmegaInterval(min(max(pi - 1, 0), upper), upper, MechanismTag.CSP, Applicability.RANGE_EXCEEDED)


def omega_csp_bounds(G: Topology, v: int) -> OmegaInterval:
    _check_node(G, v)
    return csp_interval_from_pi(G, v, pi_node(G, v))


def omega_cap_bounds(G: Topology, v: int) -> OmegaInterval:
    """Ω_CAP(v) from g = Γ_{G*}(v, m'): [g-1, g], or exact σ when g hits the cap."""
    _check_node(G, v)
    if G.mu < 1:
        raise AnalysisError("need at least one monitor")
    g = vertex_connectivity(build_gstar(G), v, M_PRIME, G.sigma)
    if g.capped:
        return OmegaInterval.exact(G.sigma, MechanismTag.CAP)
    return OmegaInterval(max(g.value - 1, 0), g.value, MechanismTag.CAP, Applicability.IN_RANGE)


def cap_promoted_value(G: Topology, v: int) -> int:
    """Point estimate of Ω_CAP(v): the upper end g of the interval."""
    return omega_cap_bounds(G, v).upper


def s_csp_bounds(G: Topology, k: int, pis: Optional[Mapping[int, int]] = None) -> IdentSetBounds:
    """Inner/outer bounds on the maximum k-identifiable set.

    k = σ-1 and k = σ are answered exactly from the monitor-neighbour tests.
    ``pis`` may supply precomputed π values.
    """
    sigma = G.sigma
    if not 1 <= k <= sigma:
        raise AnalysisError(f"k={k} outside [1, sigma={sigma}]")
    if k >= sigma - 1:
        cases = csp_sigma_cases(G, ())
        exact = _two_monitor_nodes(G) if k == sigma else cases.s_csp_sigma_minus_1
        return IdentSetBounds(k, exact, exact, exact, MechanismTag.CSP)
    pis = pi_values(G) if pis is None else pis
    inner = frozenset(v for v in G.non_monitors if pis[v] >= k + 1)
    outer = frozenset(v for v in G.non_monitors if pis[v] >= k)
    return IdentSetBounds(k, inner, outer, None, MechanismTag.CSP)


def s_cap_counts(G: Topology, k: int) -> IdentSetBounds:
    """Nodes whose CAP interval lower end (inner) or upper end (outer) reaches k."""
    intervals = {v: omega_cap_bounds(G, v) for v in G.non_monitors}
    inner = frozenset(v for v, iv in intervals.items() if iv.lower >= k)
    outer = frozenset(v for v, iv in intervals.items() if iv.upper >= k)
    return IdentSetBounds(k, inner, outer, None, MechanismTag.CAP)
