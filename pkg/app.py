# app.py
import io
import json
import tempfile
from pathlib import Path
from typing import Optional

import streamlit as st

from errors import FlocError
from experiments import analyze_topology, oracle_export
from generators import GenSpec, Model, generate, place_monitors, resolve
from loaders import load_topology, write_topology
from oracle import DEFAULT_ORACLE_BUDGET
from topology import Topology
from up import gen_paths_shortest, load_paths

st.set_page_config(page_title="Failure Localization Bounds", layout="wide")


# --- Config / mappings -----------------------------------------------------
MODEL_HELP = {
    "ER": "Erdős–Rényi, p calibrated from the link target",
    "RG": "random geometric in the unit square, d_c calibrated",
    "BA": "preferential attachment, n_min = round((L-3)/(n-4))",
    "RPL": "random power law, alpha calibrated",
}


# --- helpers ---------------------------------------------------------------
def save_upload(upload, folder: Path) -> Optional[Path]:
    """Write an uploaded file to ``folder`` keeping its name (and suffix)."""
    if upload is None:
        return None
    target = folder / Path(upload.name).name
    target.write_bytes(upload.getvalue())
    return target


def topology_text(G: Topology) -> str:
    buf = io.StringIO()
    write_topology(G, buf)
    return buf.getvalue()


# --- UI -------------------------------------------------------------------
st.title("Failure Localization: identifiability bounds")
st.write("Upload a topology (edge list plus monitors) or generate a random one.")

source = st.radio("Topology source", ["Upload", "Generate"], horizontal=True)

G = None
P = None
if source == "Upload":
    edges_file = st.file_uploader("Edge list", type=["txt", "csv", "edges"],
                                  help="`u v` per line, optional `[monitors]` section; CSV with source/target headers")
    monitors_file = st.file_uploader("Monitor file (optional)", type=["txt"])
    paths_file = st.file_uploader("Measurement paths (optional, UP)", type=["txt"])
    if not edges_file:
        st.info("Upload an edge list to start.")
        st.stop()
    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        try:
            G = load_topology(save_upload(edges_file, folder), save_upload(monitors_file, folder))
            paths_path = save_upload(paths_file, folder)
            P = load_paths(paths_path, G) if paths_path else None
        except FlocError as e:
            st.error(f"Could not load topology: {e}")
            st.stop()
else:
    model = st.selectbox("Model", list(MODEL_HELP), help="; ".join(f"{k}: {v}" for k, v in MODEL_HELP.items()))
    n = st.slider("Nodes |V|", 4, 60, 20)
    links = st.number_input("Expected links E[|L|]", min_value=1.0, value=51.0, step=1.0)
    mu = st.slider("Monitors μ", 2, n - 1, min(10, n - 1))
    seed = int(st.number_input("Seed", min_value=0, value=0, step=1))
    try:
        with st.spinner("Generating topology..."):
            spec = resolve(GenSpec(Model(model), n=n, target_links=links, seed=seed))
            G = place_monitors(generate(spec), mu, seed)
    except FlocError as e:
        st.error(f"❌ Could not generate topology: {e}")
        st.stop()
    st.caption(f"{spec.label}: calibrated parameter {spec.param:g}")
    st.download_button("Download edge list", topology_text(G).encode("utf-8"),
                       file_name=f"{model.lower()}_{n}_{seed}.txt", mime="text/plain")

if G.mu < 2:
    st.error("Need at least two monitors. Add a monitor file or a `[monitors]` section.")
    st.stop()

cols = st.columns(4)
cols[0].metric("|V|", len(G.nodes))
cols[1].metric("|L|", G.num_links)
cols[2].metric("σ (non-monitors)", G.sigma)
cols[3].metric("μ (monitors)", G.mu)

if G.sigma == 0:
    st.warning("Every node is a monitor; there are no failures to localize.")
    st.stop()

try:
    with st.spinner("Computing bounds..."):
        P = gen_paths_shortest(G) if P is None else P
        frame, _ = analyze_topology(G, P)
except FlocError as e:
    st.error(f"Analysis failed: {e}")
    st.stop()

st.markdown("### Per-node bounds")
st.dataframe(frame)

exceeded = frame[frame["csp_applicability"] == "range-exceeded"]
if not exceeded.empty:
    st.warning(f"{len(exceeded)} node(s) have π_v above σ-2; their CSP interval is outside the proven range.")

st.markdown("### Set-level bounds (min over nodes)")
st.write({
    "CSP": [int(frame["csp_lower"].min()), int(frame["csp_upper"].min())],
    "CAP": [int(frame["cap_lower"].min()), int(frame["cap_upper"].min())],
    "UP": [int(frame["up_lower"].min()), int(frame["up_upper"].min())],
    "UP relaxed": [int(frame["up_relaxed_lower"].min()), int(frame["up_relaxed_upper"].min())],
})

csv_bytes = frame.to_csv(index=False).encode("utf-8")
st.download_button("Download per-node CSV", csv_bytes, file_name="node_bounds.csv", mime="text/csv")

# --- exact values -------------------------------------------------------------
if len(G.nodes) <= DEFAULT_ORACLE_BUDGET and st.checkbox("Compute exact values (exhaustive)"):
    with st.spinner("Enumerating failure sets..."):
        exact, sets = oracle_export(G, P)
    st.dataframe(exact.pivot(index="node_label", columns="mechanism", values="exact_omega").reset_index())
    st.markdown("#### Exact maximum identifiable sets")
    st.json(sets)
    st.download_button("Download exact sets (JSON)", json.dumps(sets, indent=2).encode("utf-8"),
                       file_name="exact_sets.json", mime="application/json")
elif len(G.nodes) > DEFAULT_ORACLE_BUDGET:
    st.caption(f"Exact values need |V| ≤ {DEFAULT_ORACLE_BUDGET}.")
