"""Random topology models, link-count calibration and monitor placement.

All randomness flows from ``GenSpec.seed`` through numpy PCG64 streams
``default_rng([seed, STREAM])``; generation is a pure function of the spec.
Disconnected draws are discarded and redrawn up to ``max_retries`` times.
"""
import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import networkx as nx
import numpy as np

from errors import CalibrationError, ConfigError, GenerationError, TopologyError
from topology import Topology

logger = logging.getLogger(__name__)

EDGES_STREAM = 0
POSITIONS_STREAM = 1
MONITORS_STREAM = 2
CALIBRATION_STREAM = 3

DEFAULT_MAX_RETRIES = 10000
SEED_MASK = (1 << 64) - 1

RG_CALIBRATION_DRAWS = 200
RPL_ALPHA_GRID = np.linspace(0.0, 8.0, 161)
BISECT_ITERATIONS = 100
CALIBRATION_TOLERANCE = 1.0


class Model(str, Enum):
    ER = "ER"
    RG = "RG"
    BA = "BA"
    RPL = "RPL"
    FILE = "FILE"


@dataclass(frozen=True)
class GenSpec:
    model: Model
    n: int = 20
    param: Optional[float] = None
    target_links: Optional[float] = None
    seed: int = 0
    max_retries: int = DEFAULT_MAX_RETRIES
    edges_file: Optional[str] = None
    monitors_file: Optional[str] = None
    paths_file: Optional[str] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "model", Model(str(getattr(self.model, "value", self.model)).upper()))
        except ValueError:
            raise ConfigError(f"unknown model {self.model!r}") from None
        object.__setattr__(self, "seed", int(self.seed) & SEED_MASK)
        if self.max_retries < 1:
            raise ConfigError("max_retries must be >= 1")
        if self.model is Model.FILE:
            if not self.edges_file:
                raise ConfigError("FILE model needs edges_file")
            return
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.model is Model.BA and self.n < 4:
            raise ConfigError("BA needs n >= 4 (G_0 has four nodes)")
        if self.param is None and self.target_links is None:
            raise ConfigError(f"{self.model.value} needs a parameter or a target link count")
        if self.param is not None:
            _check_param(self.model, self.param)

    @property
    def label(self) -> str:
        if self.model is Model.FILE:
            return f"FILE:{self.edges_file}"
        if self.target_links is not None:
            return f"{self.model.value}-L{self.target_links:g}"
        return f"{self.model.value}-{self.param:g}"

    def with_seed(self, seed: int) -> "GenSpec":
        return replace(self, seed=seed)

    def with_param(self, param: float) -> "GenSpec":
        return replace(self, param=param)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["model"] = self.model.value
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "GenSpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown model spec field(s): {sorted(unknown)}")
        if "model" not in known:
            raise ConfigError("model spec needs a 'model' field")
        return cls(**known)


def _check_param(model: Model, param: float) -> None:
    if model is Model.ER and not 0.0 <= param <= 1.0:
        raise ConfigError(f"ER p must be in [0, 1], got {param}")
    if model is Model.RG and param < 0:
        raise ConfigError(f"RG d_c must be >= 0, got {param}")
    if model is Model.BA and (param < 1 or float(param) != int(param)):
        raise ConfigError(f"BA n_min must be an integer >= 1, got {param}")
    if model is Model.RPL and param < 0:
        raise ConfigError(f"RPL alpha must be >= 0, got {param}")


def stream(seed: int, offset: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & SEED_MASK, offset])


def _nx_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**31 - 1))


# --- pre-rejection draws ---------------------------------------------------------
def draw_er(n: int, p: float, rng: np.random.Generator) -> nx.Graph:
    return nx.gnp_random_graph(n, p, seed=_nx_seed(rng))


def draw_rg(n: int, d_c: float, rng: np.random.Generator) -> Tuple[nx.Graph, np.ndarray]:
    positions = rng.random((n, 2))
    pos = {i: tuple(positions[i]) for i in range(n)}
    return nx.random_geometric_graph(n, d_c, pos=pos), positions


def rpl_degrees(n: int, alpha: float) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) ** alpha


def rpl_pair_probabilities(n: int, alpha: float) -> np.ndarray:
    d = rpl_degrees(n, alpha)
    return np.minimum(1.0, np.outer(d, d) / d.sum())


def rpl_is_clamped(n: int, alpha: float) -> bool:
    d = rpl_degrees(n, alpha)
    raw = np.outer(d, d) / d.sum()
    iu = np.triu_indices(n, 1)
    return bool((raw[iu] > 1.0).any())


def draw_rpl(n: int, alpha: float, rng: np.random.Generator) -> nx.Graph:
    return nx.expected_degree_graph(list(rpl_degrees(n, alpha)), seed=_nx_seed(rng), selfloops=False)


def draw_ba(n: int, n_min: int, rng: np.random.Generator) -> nx.Graph:
    graph = nx.star_graph(3)
    degrees = np.zeros(n)
    degrees[:4] = [3, 1, 1, 1]
    for new in range(4, n):
        if new <= n_min:
            targets = np.arange(new)
        else:
            weights = degrees[:new] / degrees[:new].sum()
            targets = rng.choice(new, size=n_min, replace=False, p=weights)
        graph.add_edges_from((new, int(t)) for t in targets)
        degrees[targets] += 1
        degrees[new] = len(targets)
    return graph


# --- generators ------------------------------------------------------------------
def _require(spec: GenSpec, model: Model) -> float:
    if spec.model is not model:
        raise ConfigError(f"expected a {model.value} spec, got {spec.model.value}")
    if spec.param is None:
        raise ConfigError(f"{model.value} spec has no parameter; calibrate it first")
    return spec.param


def _reject_disconnected(spec: GenSpec, draw: Callable[[np.random.Generator], Tuple[nx.Graph, Dict[str, Any]]]) -> Topology:
    rng = stream(spec.seed, EDGES_STREAM)
    for attempt in range(1, spec.max_retries + 1):
        graph, extra = draw(rng)
        if nx.is_connected(graph):
            logger.debug("%s: connected draw after %d attempt(s)", spec.label, attempt)
            meta = {"model": spec.model.value, "param": spec.param, "seed": spec.seed,
                    "attempts": attempt}
            meta.update(extra)
            return Topology.from_graph(graph, metadata=meta)
    raise GenerationError(
        f"{spec.label}: no connected realization in {spec.max_retries} attempt(s)"
    )


def gen_er(spec: GenSpec) -> Topology:
    p = _require(spec, Model.ER)
    return _reject_disconnected(spec, lambda rng: (draw_er(spec.n, p, rng), {}))


def gen_rg(spec: GenSpec) -> Topology:
    d_c = _require(spec, Model.RG)
    pos_rng = stream(spec.seed, POSITIONS_STREAM)

    def draw(_rng):
        graph, positions = draw_rg(spec.n, d_c, pos_rng)
        return graph, {"positions": tuple(map(tuple, positions.tolist()))}

    return _reject_disconnected(spec, draw)


def gen_ba(spec: GenSpec) -> Topology:
    n_min = int(_require(spec, Model.BA))
    graph = draw_ba(spec.n, n_min, stream(spec.seed, EDGES_STREAM))
    return Topology.from_graph(graph, metadata={"model": "BA", "param": n_min, "seed": spec.seed})


def gen_rpl(spec: GenSpec) -> Topology:
    alpha = _require(spec, Model.RPL)
    clamped = rpl_is_clamped(spec.n, alpha)
    if clamped:
        logger.info("%s: pair probabilities clamped to 1 for alpha=%g", spec.label, alpha)
    return _reject_disconnected(spec, lambda rng: (draw_rpl(spec.n, alpha, rng), {"rpl_clamped": clamped}))


GENERATORS = {Model.ER: gen_er, Model.RG: gen_rg, Model.BA: gen_ba, Model.RPL: gen_rpl}


def generate(spec: GenSpec) -> Topology:
    """Generate the (role-free) topology described by a resolved spec."""
    if spec.model is Model.FILE:
        raise ConfigError("FILE specs are loaded, not generated")
    return GENERATORS[spec.model](resolve(spec))


# --- calibration -------------------------------------------------------------------
def _bisect(fn: Callable[[float], float], lo: float, hi: float, target: float) -> Tuple[float, float]:
    """Bisect an increasing ``fn`` on [lo, hi] toward ``target``; returns (x, fn(x))."""
    best = min(((lo, fn(lo)), (hi, fn(hi))), key=lambda xv: abs(xv[1] - target))
    for _ in range(BISECT_ITERATIONS):
        mid = (lo + hi) / 2
        value = fn(mid)
        if abs(value - target) < abs(best[1] - target):
            best = (mid, value)
        if abs(value - target) <= 0.05:
            break
        if value < target:
            lo = mid
        else:
            hi = mid
    return best


def rpl_expected_links(n: int, alpha: float) -> float:
    probs = rpl_pair_probabilities(n, alpha)
    return float(probs[np.triu_indices(n, 1)].sum())


def calibrate_param(model, n: int, target_links: float, seed: int = 0) -> float:
    """Model parameter whose expected pre-rejection link count is ``target_links``."""
    model = Model(str(getattr(model, "value", model)).upper())
    pairs = n * (n - 1) / 2
    if target_links < 0 or target_links > pairs:
        raise CalibrationError(f"target {target_links} links unachievable with n={n} (max {pairs:g})")
    if model is Model.ER:
        return target_links / pairs
    if model is Model.BA:
        if n == 4:
            if target_links != 3:
                raise CalibrationError("BA with n=4 always has 3 links")
            return 1
        if n < 4:
            raise CalibrationError("BA needs n >= 4")
        n_min = int(round((target_links - 3) / (n - 4)))
        if n_min < 1:
            raise CalibrationError(f"target {target_links} below the BA minimum {3 + (n - 4)}")
        if 3 + (n - 4) * n_min != target_links:
            logger.warning("BA n=%d: target %g not exact, using n_min=%d (%d links)",
                           n, target_links, n_min, 3 + (n - 4) * n_min)
        return n_min
    if model is Model.RG:
        positions = stream(seed, CALIBRATION_STREAM).random((RG_CALIBRATION_DRAWS, n, 2))
        diff = positions[:, :, None, :] - positions[:, None, :, :]
        iu = np.triu_indices(n, 1)
        dists = np.sqrt((diff ** 2).sum(axis=-1))[:, iu[0], iu[1]]

        def mean_links(d_c: float) -> float:
            return float((dists <= d_c).sum()) / RG_CALIBRATION_DRAWS

        d_c, achieved = _bisect(mean_links, 0.0, math.sqrt(2.0), target_links)
    elif model is Model.RPL:
        values = [rpl_expected_links(n, a) for a in RPL_ALPHA_GRID]
        above = [i for i, v in enumerate(values) if v >= target_links]
        if not above:
            raise CalibrationError(f"RPL cannot reach {target_links} links with n={n}")
        i = above[0]
        if i == 0:
            d_c, achieved = 0.0, values[0]
        else:
            d_c, achieved = _bisect(lambda a: rpl_expected_links(n, a),
                                    float(RPL_ALPHA_GRID[i - 1]), float(RPL_ALPHA_GRID[i]), target_links)
    else:
        raise CalibrationError(f"cannot calibrate model {model.value}")
    if abs(achieved - target_links) > CALIBRATION_TOLERANCE:
        raise CalibrationError(
            f"{model.value} n={n}: best parameter {d_c:g} gives {achieved:.2f} links, target {target_links}"
        )
    logger.info("calibrated %s n=%d target=%g -> %g (mean links %.2f)", model.value, n, target_links, d_c, achieved)
    return d_c


def resolve(spec: GenSpec) -> GenSpec:
    """Fill ``param`` from ``target_links`` when it is missing."""
    if spec.param is not None or spec.model is Model.FILE:
        return spec
    return spec.with_param(calibrate_param(spec.model, spec.n, spec.target_links, spec.seed))


# --- monitors ----------------------------------------------------------------------
def place_monitors(G: Topology, mu: int, seed: int) -> Topology:
    """Mark a uniformly random ``mu``-subset as monitors.

    The subset is the first ``mu`` entries of a seeded permutation, so one seed
    gives nested placements for increasing ``mu``.
    """
    n = len(G.nodes)
    if not 2 <= mu <= n:
        raise TopologyError(f"monitor count {mu} outside [2, {n}]")
    order = stream(seed, MONITORS_STREAM).permutation(n)
    return G.with_monitors(int(v) for v in order[:mu])
