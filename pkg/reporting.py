"""pandas tables for per-node reports and experiment results."""
import dataclasses
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Union

import pandas as pd

from csp import csp_node_metrics, omega_cap_bounds, omega_csp_bounds
from topology import Topology
from up import PathSet, cover_metrics, omega_up_bounds

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["experiment", "model", "instance", "seed", "mu", "k", "mechanism", "metric", "value"]
SORT_COLUMNS = ["experiment", "model", "instance", "mu", "k", "mechanism", "metric"]
INT_COLUMNS = ["instance", "seed", "mu", "k"]
SUMMARY_KEYS = ["experiment", "model", "mu", "k", "mechanism", "metric"]


# --- per-node tables -----------------------------------------------------------------
def csp_node_frame(G: Topology) -> pd.DataFrame:
    rows = []
    for v in G.non_monitors:
        m = csp_node_metrics(G, v)
        iv = omega_csp_bounds(G, v)
        rows.append({
            "node_label": G.label(v),
            "gamma_star": m.gamma_star.value,
            "gamma_gm_min": m.gamma_gm_min.value,
            "pi": m.pi,
            "omega_lower": iv.lower,
            "omega_upper": iv.upper,
            "applicability": iv.applicability.value,
            "mechanism": iv.mechanism.value,
        })
    return pd.DataFrame(rows, columns=["node_label", "gamma_star", "gamma_gm_min", "pi",
                                       "omega_lower", "omega_upper", "applicability", "mechanism"])


def cap_node_frame(G: Topology) -> pd.DataFrame:
    rows = []
    for v in G.non_monitors:
        iv = omega_cap_bounds(G, v)
        rows.append({"node_label": G.label(v), "omega_lower": iv.lower, "omega_upper": iv.upper,
                     "applicability": iv.applicability.value, "mechanism": iv.mechanism.value})
    return pd.DataFrame(rows, columns=["node_label", "omega_lower", "omega_upper", "applicability", "mechanism"])


def up_node_frame(P: PathSet, mode: str = "original") -> pd.DataFrame:
    G = P.topology
    rows = []
    for v in G.non_monitors:
        m = cover_metrics(P, v)
        iv = omega_up_bounds(P, v, mode=mode)
        rows.append({"node_label": G.label(v), "msc": m.msc, "gsc": m.gsc, "d_max": m.d_max,
                     "omega_lower": iv.lower, "omega_upper": iv.upper, "mode": mode,
                     "fallback": iv.fallback})
    return pd.DataFrame(rows, columns=["node_label", "msc", "gsc", "d_max", "omega_lower",
                                       "omega_upper", "mode", "fallback"])


def analysis_frame(G: Topology, P: PathSet) -> pd.DataFrame:
    """One row per non-monitor joining CSP metrics, CAP bounds and UP cover values."""
    csp = csp_node_frame(G).drop(columns=["mechanism"]).rename(columns={
        "omega_lower": "csp_lower", "omega_upper": "csp_upper", "applicability": "csp_applicability"})
    cap = cap_node_frame(G).drop(columns=["mechanism"]).rename(columns={
        "omega_lower": "cap_lower", "omega_upper": "cap_upper", "applicability": "cap_applicability"})
    up = up_node_frame(P, "original").drop(columns=["mode", "fallback"]).rename(columns={
        "omega_lower": "up_lower", "omega_upper": "up_upper"})
    relaxed = up_node_frame(P, "relaxed")[["node_label", "omega_lower", "omega_upper"]].rename(columns={
        "omega_lower": "up_relaxed_lower", "omega_upper": "up_relaxed_upper"})
    merged = pd.merge(csp, cap, on="node_label", how="left")
    merged = pd.merge(merged, up, on="node_label", how="left")
    merged = pd.merge(merged, relaxed, on="node_label", how="left")
    missing = merged[merged["up_lower"].isna()]
    if not missing.empty:
        logger.warning("%d node(s) have no UP metrics", len(missing))
    return merged


def oracle_frame(G: Topology, omegas: Mapping[str, Mapping[int, int]]) -> pd.DataFrame:
    """Exact values per (node, mechanism) from ``{mechanism: {node: omega}}``."""
    rows = [{"node_label": G.label(v), "mechanism": mech, "exact_omega": value}
            for mech, values in omegas.items() for v, value in sorted(values.items())]
    return pd.DataFrame(rows, columns=["node_label", "mechanism", "exact_omega"])


def label_list(G: Topology, ids: Iterable[int]) -> List[str]:
    return sorted(G.label(v) for v in ids)


def oracle_sets(G: Topology, sets: Mapping[str, Mapping[int, Iterable[int]]]) -> Dict[str, Dict[str, List[str]]]:
    """Exact identifiable sets as sorted label lists, keyed by mechanism and then k."""
    return {mech: {str(k): label_list(G, sets[mech][k]) for k in sorted(sets[mech])} for mech in sorted(sets)}


def oracle_sets_path(out: Union[str, Path]) -> Path:
    return Path(str(out) + ".sets.json")


def write_oracle_report(frame: pd.DataFrame, sets: Mapping[str, Any], out: Union[str, Path]) -> Path:
    """Exact values as CSV at ``out``; the label-list sets go to ``<out>.sets.json``."""
    Path(out).write_text(frame.to_csv(index=False, lineterminator="\n"), encoding="utf-8", newline="\n")
    target = oracle_sets_path(out)
    target.write_text(json.dumps(sets, indent=2) + "\n", encoding="utf-8")
    logger.info("wrote exact values to %s and sets to %s", out, target)
    return target


def summary_block(G: Topology) -> Dict[str, int]:
    return {"V": len(G.nodes), "L": G.num_links, "sigma": G.sigma, "mu": G.mu}


# --- experiment results -------------------------------------------------------------------
def records_frame(records: Iterable[Any]) -> pd.DataFrame:
    """Result records as a frame with the fixed column order, sorted deterministically."""
    rows = [dataclasses.asdict(r) if dataclasses.is_dataclass(r) else dict(r) for r in records]
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    for col in INT_COLUMNS:
        df[col] = df[col].astype("Int64")
    df["value"] = df["value"].astype(float)
    df = df.sort_values(SORT_COLUMNS, na_position="first", kind="mergesort")
    return df.reset_index(drop=True)


def results_csv(df: pd.DataFrame) -> str:
    return df[RESULT_COLUMNS].to_csv(index=False, lineterminator="\n")


def write_results(df: pd.DataFrame, path: Union[str, Path]) -> None:
    Path(path).write_text(results_csv(df), encoding="utf-8", newline="\n")
    logger.info("wrote %d record(s) to %s", len(df), path)


def summarize(df: pd.DataFrame) -> pd.DataFrame:
    """Mean (and min / max) of each metric across instances."""
    if df.empty:
        return pd.DataFrame(columns=SUMMARY_KEYS + ["mean", "min", "max", "instances"])
    grouped = df.groupby(SUMMARY_KEYS, dropna=False, sort=True)["value"]
    out = grouped.agg(["mean", "min", "max", "count"]).reset_index()
    return out.rename(columns={"count": "instances"})


def metadata_path(out: Union[str, Path]) -> Path:
    return Path(str(out) + ".meta.json")


def write_metadata(out: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    target = metadata_path(out)
    target.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return target
