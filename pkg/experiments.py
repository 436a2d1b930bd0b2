"""Monte Carlo harness: tightness and sweep experiments, per-node analysis and the
oracle cross-check suite.

Instance ``i`` of a model uses seed ``derive_seed(config.seed, label, i)``, so
results do not depend on execution order or worker count. Records are sorted
before they are written.
"""
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from csp import (
    PI_DEFINITION, Applicability, MechanismTag, Verdict, cap_promoted_value, csp_interval_from_pi,
    csp_k_identifiable, csp_node_metrics, csp_sigma_cases, omega_cap_bounds, pi_values, s_cap_counts,
    s_csp_bounds,
)
from errors import BudgetExceededError, ConfigError
from generators import GenSpec, Model, generate, place_monitors, resolve, rpl_is_clamped, stream
from loaders import load_topology, write_topology
from oracle import (
    DEFAULT_ORACLE_BUDGET, Mechanism, brute_vertex_cut, clear_caches, exact_k_identifiable,
    exact_max_identifiable_set, exact_omega, exact_omegas, find_confusable_pair, witness_inner_set,
)
from reporting import analysis_frame, oracle_frame, oracle_sets, records_frame, summary_block, write_oracle_report
from topology import M_PRIME, Topology, build_g_m, build_gstar, minimum_cut_set, vertex_connectivity
from up import (
    PathSet, cbc_available, cover_metrics, gen_paths_shortest, load_paths, omega_up_bounds,
    s_up_bounds, up_k_identifiable,
)

logger = logging.getLogger(__name__)

EXPERIMENTS = ("tightness", "sweep", "analyze", "oracle-check")
UP_MODE_CHOICES = ("original", "relaxed", "both")
FAULTS = ("pi_off_by_one",)
SHAPE_STREAM = 4
SEED_BITS = 63

CHECKS = ("menger", "csp_sandwich", "up_sandwich", "cap_interval", "sigma_cases",
          "containment", "ordering", "greedy", "tri_state")


def default_parallel() -> int:
    raw = os.environ.get("FLOC_PARALLEL", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"FLOC_PARALLEL must be an integer, got {raw!r}") from None


def default_models(experiment: str) -> Tuple[GenSpec, ...]:
    if experiment == "oracle-check":
        return (GenSpec(Model.ER, n=8, param=0.5), GenSpec(Model.BA, n=8, param=2))
    if experiment == "tightness":
        return tuple(GenSpec(m, n=20, target_links=t)
                     for t in (51, 99) for m in (Model.ER, Model.RG, Model.BA, Model.RPL))
    return (GenSpec(Model.ER, n=20, target_links=51),)


def derive_seed(seed: int, label: str, instance: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{label}:{instance}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & ((1 << SEED_BITS) - 1)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    models: Tuple[GenSpec, ...] = ()
    mu_list: Tuple[int, ...] = (10,)
    instances: int = 100
    k_max: Optional[int] = None
    mechanisms: Tuple[MechanismTag, ...] = (MechanismTag.CAP, MechanismTag.CSP, MechanismTag.UP)
    up_mode: str = "original"
    seed: int = 0
    out: Optional[str] = None
    parallel: int = field(default_factory=default_parallel)
    oracle_budget: int = DEFAULT_ORACLE_BUDGET
    n_range: Tuple[int, int] = (6, 10)
    fault: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        models = tuple(m if isinstance(m, GenSpec) else GenSpec.from_dict(m) for m in self.models)
        object.__setattr__(self, "models", models or default_models(self.experiment))
        object.__setattr__(self, "mu_list", tuple(int(m) for m in self.mu_list))
        try:
            mechs = tuple(MechanismTag(str(getattr(m, "value", m)).upper()) for m in self.mechanisms)
        except ValueError as e:
            raise ConfigError(f"unknown mechanism: {e}") from None
        object.__setattr__(self, "mechanisms", tuple(sorted(set(mechs), key=lambda t: t.value)))
        object.__setattr__(self, "n_range", tuple(int(x) for x in self.n_range))
        if self.instances < 1:
            raise ConfigError("instances must be >= 1")
        if not self.mu_list or min(self.mu_list) < 2:
            raise ConfigError(f"monitor counts must be >= 2, got {list(self.mu_list)}")
        if self.up_mode not in UP_MODE_CHOICES:
            raise ConfigError(f"up_mode must be one of {UP_MODE_CHOICES}")
        if not self.mechanisms:
            raise ConfigError("at least one mechanism is required")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")
        if self.oracle_budget < 1:
            raise ConfigError("oracle_budget must be positive")
        if self.fault is not None and self.fault not in FAULTS:
            raise ConfigError(f"unknown fault {self.fault!r}")
        lo, hi = self.n_range
        if not 2 < lo <= hi:
            raise ConfigError(f"invalid n_range {self.n_range}")
        if self.experiment in ("sweep", "tightness"):
            for spec in self.models:
                if spec.model is Model.FILE:
                    continue
                if max(self.mu_list) >= spec.n:
                    raise ConfigError(f"{spec.label}: mu={max(self.mu_list)} needs n > mu (n={spec.n})")
                if self.k_max is not None and not 1 <= self.k_max <= spec.n - min(self.mu_list):
                    raise ConfigError(f"k_max={self.k_max} outside [1, n - min(mu)={spec.n - min(self.mu_list)}]")

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"{path}: unknown config field(s) {sorted(unknown)}")
        for key in ("mu_list", "mechanisms", "n_range"):
            if key in raw:
                raw[key] = tuple(raw[key])
        raw["models"] = tuple(GenSpec.from_dict(m) for m in raw.get("models", ()))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        if "experiment" not in raw:
            raise ConfigError(f"{path}: missing 'experiment'")
        return cls(**raw)

    def with_overrides(self, **flags) -> "ExperimentConfig":
        changes = {k: v for k, v in flags.items() if v is not None}
        unknown = set(changes) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config field(s) {sorted(unknown)}")
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "models": [m.to_dict() for m in self.models],
            "mu_list": list(self.mu_list),
            "instances": self.instances,
            "k_max": self.k_max,
            "mechanisms": [m.value for m in self.mechanisms],
            "up_mode": self.up_mode,
            "seed": self.seed,
            "out": self.out,
            "oracle_budget": self.oracle_budget,
            "n_range": list(self.n_range),
            "fault": self.fault,
        }


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    model: str
    instance: int
    seed: int
    mu: int
    k: Optional[int]
    mechanism: str
    metric: str
    value: float


@dataclass
class RunResult:
    """Records plus the metadata written next to them."""
    frame: pd.DataFrame
    meta: Dict[str, Any]


# --- instances ------------------------------------------------------------------------
@dataclass(frozen=True)
class Instance:
    G: Topology
    paths: PathSet
    model: str
    index: int
    seed: int


def _paths_for(G: Topology, spec: GenSpec) -> PathSet:
    if spec.model is Model.FILE and spec.paths_file:
        return load_paths(spec.paths_file, G)
    return gen_paths_shortest(G)


def _instances(spec: GenSpec, config: ExperimentConfig, index: int) -> List[Instance]:
    """The instances of one (model, index) unit: one per monitor count."""
    seed = derive_seed(config.seed, spec.label, index)
    if spec.model is Model.FILE:
        base = load_topology(spec.edges_file, spec.monitors_file)
        if base.mu:
            return [Instance(base, _paths_for(base, spec), spec.label, index, seed)] if index == 0 else []
        placed = [place_monitors(base, mu, seed) for mu in config.mu_list if mu < len(base.nodes)]
    else:
        base = generate(spec.with_seed(seed))
        placed = [place_monitors(base, mu, seed) for mu in config.mu_list]
    return [Instance(G, _paths_for(G, spec), spec.label, index, seed) for G in placed]


def _calibrate(config: ExperimentConfig) -> Tuple[List[GenSpec], Dict[str, Any]]:
    resolved, calibrated = [], {}
    for spec in config.models:
        if spec.model is Model.FILE:
            resolved.append(spec)
            continue
        done = resolve(spec.with_seed(config.seed))
        calibrated[spec.label] = {"model": spec.model.value, "n": spec.n, "param": done.param,
                                  "target_links": spec.target_links}
        if spec.model is Model.RPL:
            calibrated[spec.label]["rpl_clamped"] = rpl_is_clamped(spec.n, done.param)
        resolved.append(replace(done, seed=spec.seed))
    return resolved, calibrated


def _units(config: ExperimentConfig, specs: Sequence[GenSpec]) -> List[Tuple[GenSpec, int]]:
    return [(spec, i) for spec in specs for i in range(config.instances)]


def release_caches() -> None:
    """Forget memoised per-topology results."""
    for cached in (build_gstar, build_g_m, csp_node_metrics, cover_metrics):
        cached.cache_clear()
    clear_caches()


def _run_units(fn, config: ExperimentConfig, units: List[Tuple[Any, ...]]) -> List[Any]:
    jobs = [(fn, config, unit) for unit in units]
    if config.parallel == 1 or len(units) < 2:
        return [_call(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=config.parallel) as pool:
        return list(pool.map(_call, jobs))


def _call(job):
    fn, config, unit = job
    try:
        return fn(config, *unit)
    finally:
        release_caches()


def _check_file_inputs(config: ExperimentConfig, specs: Sequence[GenSpec]) -> None:
    """k_max range and usable monitor counts for FILE models, checked before any unit runs."""
    for spec in specs:
        if spec.model is not Model.FILE:
            continue
        G = load_topology(spec.edges_file, spec.monitors_file)
        n = len(G.nodes)
        if not G.mu:
            dropped = [mu for mu in config.mu_list if mu >= n]
            if dropped:
                logger.warning("%s: monitor count(s) %s need more than %d nodes; skipped",
                               spec.label, dropped, n)
        floor = G.mu or min(config.mu_list)
        if config.k_max is not None and not 1 <= config.k_max <= n - floor:
            raise ConfigError(f"{spec.label}: k_max={config.k_max} outside [1, n - mu={n - floor}]")


def _fits_oracle(G: Topology, config: ExperimentConfig) -> bool:
    return len(G.nodes) <= config.oracle_budget


# --- tightness -------------------------------------------------------------------------
def _tightness_unit(config: ExperimentConfig, spec: GenSpec, index: int) -> List[ResultRecord]:
    records = []
    for inst in _instances(spec, config, index):
        G, P = inst.G, inst.paths
        if not G.sigma:
            logger.warning("%s#%d (mu=%d): every node is a monitor; instance skipped",
                           inst.model, inst.index, G.mu)
            continue
        per_mode: Dict[str, pd.DataFrame] = {}
        for mode in ("original", "relaxed"):
            ivs = [omega_up_bounds(P, v, mode=mode) for v in G.non_monitors]
            per_mode[mode] = pd.DataFrame({"lower": [iv.lower for iv in ivs], "upper": [iv.upper for iv in ivs]})
        values: Dict[str, float] = {}
        for mode, bounds in per_mode.items():
            avg, low = bounds.mean(), bounds.min()
            values[f"{mode}_avg_lower"] = avg["lower"]
            values[f"{mode}_avg_upper"] = avg["upper"]
            values[f"{mode}_set_lower"] = low["lower"]
            values[f"{mode}_set_upper"] = low["upper"]
        values["coincidence_rate"] = (per_mode["original"]["upper"] == per_mode["relaxed"]["upper"]).mean()
        records.extend(ResultRecord("tightness", inst.model, inst.index, inst.seed, G.mu, None,
                                    MechanismTag.UP.value, metric, float(value))
                       for metric, value in values.items())
    return records


def cmd_tightness(config: ExperimentConfig) -> RunResult:
    """Original vs relaxed Ω_UP bounds over S = N, per instance."""
    if config.experiment != "tightness":
        raise ConfigError("cmd_tightness needs a tightness config")
    specs, calibrated = _calibrate(config)
    _check_file_inputs(config, specs)
    chunks = _run_units(_tightness_unit, config, _units(config, specs))
    frame = records_frame(r for chunk in chunks for r in chunk)
    return RunResult(frame, _meta(config, calibrated))


# --- sweep ---------------------------------------------------------------------------------
def _sweep_unit(config: ExperimentConfig, spec: GenSpec, index: int) -> Tuple[List[ResultRecord], int]:
    records: List[ResultRecord] = []
    omitted = 0
    for inst in _instances(spec, config, index):
        G, P = inst.G, inst.paths
        mu_floor = G.mu if spec.model is Model.FILE else min(config.mu_list)
        k_max = config.k_max if config.k_max is not None else len(G.nodes) - mu_floor - 1
        use_oracle = _fits_oracle(G, config)
        if not use_oracle:
            omitted += 1
        pis = pi_values(G) if MechanismTag.CSP in config.mechanisms else None
        mechanisms = {MechanismTag.CAP: Mechanism.cap(), MechanismTag.CSP: Mechanism.csp(),
                      MechanismTag.UP: Mechanism.up(P)}

        def emit(k, mech, metric, value):
            records.append(ResultRecord("sweep", inst.model, inst.index, inst.seed, G.mu, k,
                                        mech.value, metric, float(value)))

        for k in range(1, max(k_max, 0) + 1):
            k_eff = min(k, G.sigma)
            if k_eff < 1:
                continue
            for tag in config.mechanisms:
                if tag is MechanismTag.CSP:
                    bounds = [("", s_csp_bounds(G, k_eff, pis))]
                elif tag is MechanismTag.CAP:
                    bounds = [("", s_cap_counts(G, k_eff))]
                else:
                    modes = ("original", "relaxed") if config.up_mode == "both" else (config.up_mode,)
                    bounds = [("relaxed_" if mode == "relaxed" else "", s_up_bounds(P, k_eff, mode=mode))
                              for mode in modes]
                for prefix, b in bounds:
                    emit(k, tag, f"{prefix}inner_size", len(b.inner))
                    emit(k, tag, f"{prefix}outer_size", len(b.outer))
                if use_oracle:
                    emit(k, tag, "exact_size", len(exact_max_identifiable_set(
                        G, k_eff, mechanisms[tag], config.oracle_budget)))
    return records, omitted


def cmd_sweep(config: ExperimentConfig) -> RunResult:
    """Inner / outer (and exact, when small) maximum k-identifiable set sizes."""
    if config.experiment != "sweep":
        raise ConfigError("cmd_sweep needs a sweep config")
    specs, calibrated = _calibrate(config)
    _check_file_inputs(config, specs)
    chunks = _run_units(_sweep_unit, config, _units(config, specs))
    omitted = sum(o for _, o in chunks)
    if omitted:
        logger.warning("%d instance(s) exceed the oracle budget of %d nodes; exact_size omitted",
                       omitted, config.oracle_budget)
    frame = records_frame(r for chunk, _ in chunks for r in chunk)
    meta = _meta(config, calibrated)
    meta["oracle_omitted_instances"] = omitted
    return RunResult(frame, meta)


def _meta(config: ExperimentConfig, calibrated: Dict[str, Any]) -> Dict[str, Any]:
    return {"config": config.to_dict(), "calibrated": calibrated, "pi_definition": PI_DEFINITION}


# --- analyze --------------------------------------------------------------------------------
def cmd_analyze(edge_file, monitor_file=None, paths_file=None, oracle_out=None,
                oracle_budget: int = DEFAULT_ORACLE_BUDGET) -> Tuple[pd.DataFrame, Dict[str, int]]:
    """Per-node report for one topology and its summary (|V|, |L|, σ, μ).

    With ``oracle_out`` the exact values are written there as CSV and the exact
    identifiable sets next to it as JSON.
    """
    G = load_topology(edge_file, monitor_file)
    P = load_paths(paths_file, G) if paths_file else gen_paths_shortest(G)
    frame = analysis_frame(G, P)
    if oracle_out is not None:
        exact, sets = oracle_export(G, P, oracle_budget)
        write_oracle_report(exact, sets, oracle_out)
    return frame, summary_block(G)


def oracle_export(G: Topology, P: Optional[PathSet] = None,
                  budget: int = DEFAULT_ORACLE_BUDGET) -> Tuple[pd.DataFrame, Dict[str, Dict[str, List[str]]]]:
    """Exact Ω per node and exact maximum k-identifiable sets for k in [1, σ], per mechanism."""
    P = gen_paths_shortest(G) if P is None else P
    mechanisms = {MechanismTag.CAP: Mechanism.cap(), MechanismTag.CSP: Mechanism.csp(),
                  MechanismTag.UP: Mechanism.up(P)}
    omegas = {tag.value: exact_omegas(G, mech, budget) for tag, mech in mechanisms.items()}
    sets = {tag.value: {k: exact_max_identifiable_set(G, k, mech, budget) for k in range(1, G.sigma + 1)}
            for tag, mech in mechanisms.items()}
    return oracle_frame(G, omegas), oracle_sets(G, sets)


def analyze_topology(G: Topology, P: Optional[PathSet] = None) -> Tuple[pd.DataFrame, Dict[str, int]]:
    return analysis_frame(G, gen_paths_shortest(G) if P is None else P), summary_block(G)


# --- oracle check ---------------------------------------------------------------------------
def fixture_topologies() -> Dict[str, Topology]:
    def build(edges: str, monitors: Sequence[str]) -> Topology:
        return Topology.from_edges([tuple(e.split()) for e in edges.split(",")], monitors)

    return {
        "FIX-PATH": build("m1 a,a m2", ["m1", "m2"]),
        "FIX-CHAIN": build("m1 a,a b,b m2", ["m1", "m2"]),
        "FIX-K": build("m1 a,m1 b,a b,a c,b c,c m2", ["m1", "m2"]),
        "FIX-STAR": build("m1 a,m2 a,m2 b,m3 b,m1 w,w a,w b", ["m1", "m2", "m3"]),
    }


@dataclass
class Counterexample:
    check: str
    instance: str
    size: Tuple[int, int]
    detail: str
    topology: str


@dataclass
class OracleReport:
    passed: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    failed: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    counterexamples: List[Counterexample] = field(default_factory=list)
    cap_matches: int = 0
    cap_nodes: int = 0
    instances: int = 0

    @property
    def ok(self) -> bool:
        return not any(self.failed.values())

    @property
    def cap_match_rate(self) -> float:
        return self.cap_matches / self.cap_nodes if self.cap_nodes else 1.0

    def merge(self, other: "OracleReport") -> None:
        for c in CHECKS:
            self.passed[c] += other.passed[c]
            self.failed[c] += other.failed[c]
        self.counterexamples.extend(other.counterexamples)
        self.cap_matches += other.cap_matches
        self.cap_nodes += other.cap_nodes
        self.instances += other.instances

    def minimal_counterexamples(self) -> List[Counterexample]:
        """Smallest counterexample per failing check."""
        best: Dict[str, Counterexample] = {}
        for ce in sorted(self.counterexamples, key=lambda c: (c.size, c.instance, c.detail)):
            best.setdefault(ce.check, ce)
        return [best[c] for c in CHECKS if c in best]

    def render(self) -> str:
        lines = [f"{c:<13} passed={self.passed[c]:<7} failed={self.failed[c]}" for c in CHECKS]
        lines.append(f"instances={self.instances} cap promoted-value match rate={self.cap_match_rate:.3f}")
        if self.ok:
            lines.append("all checks passed")
        else:
            for ce in self.minimal_counterexamples():
                lines.append(f"--- {ce.check} counterexample ({ce.instance}, |V|={ce.size[0]}, |L|={ce.size[1]})")
                lines.append(ce.detail)
                lines.append(ce.topology.rstrip())
        return "\n".join(lines)


class _Checker:
    def __init__(self, G: Topology, name: str, config: ExperimentConfig):
        self.G = G
        self.name = name
        self.config = config
        self.budget = config.oracle_budget
        self.report = OracleReport()
        self.report.instances = 1

    def expect(self, check: str, ok: bool, detail) -> None:
        if ok:
            self.report.passed[check] += 1
            return
        self.report.failed[check] += 1
        buf = io.StringIO()
        write_topology(self.G, buf)
        text = detail() if callable(detail) else detail
        self.report.counterexamples.append(Counterexample(
            check, self.name, (len(self.G.nodes), self.G.num_links), text, buf.getvalue()))

    def pair_note(self, v: int, k: int, mech: Mechanism) -> str:
        if k < 1 or k > self.G.sigma:
            return ""
        pair = find_confusable_pair(self.G, {v}, k, mech, self.budget)
        if pair is None:
            return ""
        f1, f2 = (sorted(self.G.label_set(f)) for f in pair)
        return f"; indistinguishable pair at k={k}: {f1} vs {f2}"

    def run(self) -> OracleReport:
        G = self.G
        csp_mech, cap_mech = Mechanism.csp(), Mechanism.cap()
        P = gen_paths_shortest(G)
        up_mech = Mechanism.up(P)
        exact = {tag: {v: exact_omega(G, v, mech, self.budget) for v in G.non_monitors}
                 for tag, mech in ((MechanismTag.CSP, csp_mech), (MechanismTag.CAP, cap_mech),
                                   (MechanismTag.UP, up_mech))}
        pis = pi_values(G)
        if self.config.fault == "pi_off_by_one":
            pis = {v: max(p - 1, 0) for v, p in pis.items()}
        self._menger()
        cases = csp_sigma_cases(G, ())
        for v in G.non_monitors:
            label = G.label(v)
            iv = csp_interval_from_pi(G, v, pis[v], cases)
            if iv.applicability is not Applicability.RANGE_EXCEEDED:
                ex = exact[MechanismTag.CSP][v]
                self.expect("csp_sandwich", iv.contains(ex), lambda: (
                    f"node {label}: CSP interval [{iv.lower}, {iv.upper}] misses exact {ex}"
                    + self.pair_note(v, ex + 1, csp_mech)))
            up_iv = omega_up_bounds(P, v, mode="original")
            ex_up = exact[MechanismTag.UP][v]
            self.expect("up_sandwich", up_iv.contains(ex_up), lambda: (
                f"node {label}: UP interval [{up_iv.lower}, {up_iv.upper}] misses exact {ex_up}"
                + self.pair_note(v, ex_up + 1, up_mech)))
            cap_iv = omega_cap_bounds(G, v)
            ex_cap = exact[MechanismTag.CAP][v]
            self.expect("cap_interval", cap_iv.contains(ex_cap),
                        lambda: f"node {label}: CAP interval [{cap_iv.lower}, {cap_iv.upper}] misses exact {ex_cap}")
            self.report.cap_nodes += 1
            self.report.cap_matches += int(cap_promoted_value(G, v) == ex_cap)
            order = (exact[MechanismTag.UP][v], exact[MechanismTag.CSP][v], exact[MechanismTag.CAP][v])
            self.expect("ordering", order[0] <= order[1] <= order[2],
                        lambda: f"node {label}: UP/CSP/CAP exact values {order} are not ordered")
            m = cover_metrics(P, v)
            if not m.sentinel and m.msc_exact:
                ok = m.msc <= m.gsc <= math.ceil(m.harmonic * m.msc)
                self.expect("greedy", ok, lambda: f"node {label}: msc={m.msc} gsc={m.gsc} H={m.harmonic}")
                if cbc_available():
                    ilp = cover_metrics(P, v, solver="ilp").msc
                    self.expect("greedy", ilp == m.msc, lambda: f"node {label}: cover ILP {ilp} vs search {m.msc}")
        self._sigma_cases(csp_mech)
        self._containment(pis, P, {MechanismTag.CSP: csp_mech, MechanismTag.CAP: cap_mech,
                                   MechanismTag.UP: up_mech})
        self._tri_state(P, csp_mech, up_mech)
        return self.report

    def _menger(self) -> None:
        G, sigma = self.G, self.G.sigma
        graphs = [build_gstar(G)] + [build_g_m(G, m) for m in G.sorted_monitors]
        for aux in graphs:
            for v in G.non_monitors:
                fast = vertex_connectivity(aux, v, M_PRIME, sigma)
                slow = brute_vertex_cut(aux, v, M_PRIME, sigma)
                self.expect("menger", fast == slow, lambda: (
                    f"node {G.label(v)} in {'G*' if aux.excluded_monitor is None else 'G_' + G.label(aux.excluded_monitor)}: "
                    f"flow {fast.value} vs exhaustive {slow.value}"))
                if not fast.capped and not aux.graph.has_edge(v, M_PRIME):
                    cut = minimum_cut_set(aux, v, M_PRIME)
                    self.expect("menger", len(cut) == fast.value,
                                lambda: f"node {G.label(v)}: cut set {sorted(G.label_set(cut))} has wrong size")

    def _sigma_cases(self, mech: Mechanism) -> None:
        G, sigma = self.G, self.G.sigma
        subsets = [frozenset({v}) for v in G.non_monitors] + [frozenset(G.non_monitors)]
        for S in subsets:
            cases = csp_sigma_cases(G, S)
            names = sorted(G.label_set(S))
            got = exact_k_identifiable(G, S, sigma, mech, self.budget)
            self.expect("sigma_cases", got == cases.sigma_identifiable,
                        lambda: f"S={names}: sigma-identifiable test {cases.sigma_identifiable}, exact {got}")
            if sigma - 1 >= 1:
                got1 = exact_k_identifiable(G, S, sigma - 1, mech, self.budget)
                self.expect("sigma_cases", got1 == cases.sigma_minus_1_identifiable,
                            lambda: f"S={names}: (sigma-1) test {cases.sigma_minus_1_identifiable}, exact {got1}")

    def _containment(self, pis, P: PathSet, mechs: Dict[MechanismTag, Mechanism]) -> None:
        G = self.G
        for k in range(1, G.sigma + 1):
            exact = {tag: exact_max_identifiable_set(G, k, mech, self.budget) for tag, mech in mechs.items()}
            bounds = [s_csp_bounds(G, k, pis), s_up_bounds(P, k, mode="original"),
                      s_up_bounds(P, k, mode="relaxed")]
            for b in bounds:
                target = exact[b.mechanism]
                self.expect("containment", b.sandwiches(target), lambda: (
                    f"k={k} {b.mechanism.value}/{b.mode}: inner {sorted(G.label_set(b.inner))} "
                    f"exact {sorted(G.label_set(target))} outer {sorted(G.label_set(b.outer))}"))
            for tag, mech in mechs.items():
                inner = witness_inner_set(G, k, mech, self.budget)
                self.expect("containment", inner <= exact[tag], lambda: (
                    f"k={k} {tag.value}: witness set {sorted(G.label_set(inner))} "
                    f"not inside exact {sorted(G.label_set(exact[tag]))}"))
            if k > 1:
                prev = {tag: exact_max_identifiable_set(G, k - 1, mech, self.budget) for tag, mech in mechs.items()}
                for tag in mechs:
                    self.expect("containment", exact[tag] <= prev[tag],
                                lambda: f"k={k} {tag.value}: exact set grew with k")

    def _tri_state(self, P: PathSet, csp_mech: Mechanism, up_mech: Mechanism) -> None:
        G = self.G
        subsets = [frozenset({v}) for v in G.non_monitors] + [frozenset(G.non_monitors)]
        for S in subsets:
            names = sorted(G.label_set(S))
            for k in range(0, G.sigma + 1):
                for verdict, mech in ((csp_k_identifiable(G, S, k), csp_mech),
                                      (up_k_identifiable(P, S, k), up_mech)):
                    truth = exact_k_identifiable(G, S, k, mech, self.budget)
                    sound = (verdict is not Verdict.SUFFICIENT or truth) and (not truth or verdict is not Verdict.NO)
                    self.expect("tri_state", sound,
                                lambda: f"S={names} k={k} {mech.label}: verdict {verdict.value}, exact {truth}")


def _oracle_instance(config: ExperimentConfig, spec: GenSpec, index: int) -> OracleReport:
    seed = derive_seed(config.seed, spec.label, index)
    rng = stream(seed, SHAPE_STREAM)
    lo, hi = config.n_range
    n = int(rng.integers(lo, hi + 1))
    choices = [mu for mu in config.mu_list if mu <= n - 1]
    if not choices:
        raise ConfigError(f"no monitor count in {list(config.mu_list)} fits n={n}")
    mu = int(rng.choice(choices))
    G = place_monitors(generate(replace(spec, n=n, seed=seed)), mu, seed)
    return _Checker(G, f"{spec.label}#{index}(n={n},mu={mu})", config).run()


def _oracle_fixture(config: ExperimentConfig, name: str, _unused: int) -> OracleReport:
    return _Checker(fixture_topologies()[name], name, config).run()


def cmd_oracle_check(config: ExperimentConfig) -> OracleReport:
    """Cross-check every analytic bound against the exhaustive oracle."""
    if config.experiment != "oracle-check":
        raise ConfigError("cmd_oracle_check needs an oracle-check config")
    if config.n_range[1] > config.oracle_budget:
        raise BudgetExceededError(
            f"n up to {config.n_range[1]} exceeds the oracle budget of {config.oracle_budget} nodes")
    specs = [s for s in config.models if s.model is not Model.FILE]
    if not specs:
        raise ConfigError("oracle-check needs at least one generated model")
    specs = [resolve(replace(s, n=max(s.n, 4))) for s in specs]
    units = [(specs[i % len(specs)], i) for i in range(config.instances)]
    report = OracleReport()
    for part in _run_units(_oracle_fixture, config, [(name, 0) for name in fixture_topologies()]):
        report.merge(part)
    for part in _run_units(_oracle_instance, config, units):
        report.merge(part)
    log = logger.info if report.ok else logger.error
    log("oracle-check: %d instance(s), %d failing check(s)", report.instances, sum(report.failed.values()))
    if report.cap_match_rate < 1.0:
        logger.warning("CAP promoted value matches the exact value for %.1f%% of nodes", 100 * report.cap_match_rate)
    return report
