"""Reading and writing topology, monitor and path files.

Edge lists are whitespace separated ``u v`` lines with ``#`` comments. A line
``[monitors]`` switches the rest of the file to one monitor label per line.
``.csv`` files are read with pandas and their endpoint columns are found by
fuzzy header matching.
"""
import io
import logging
import re
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import pandas as pd

from errors import TopologyError, TopologyFormatError
from topology import Topology

logger = logging.getLogger(__name__)

MONITOR_SECTION = "[monitors]"

SOURCE_COLUMNS = ["source", "src", "from", "u", "node1", "a", "start"]
TARGET_COLUMNS = ["target", "dst", "to", "v", "node2", "b", "end"]

PathLike = Union[str, Path]
Numbered = Tuple[str, int]


# --- helpers ---------------------------------------------------------------
def normalize_colname(c: str) -> str:
    """Normalize a column name for fuzzy matching."""
    return re.sub(r'[^a-z0-9]', '', str(c).lower())


def find_column(df: pd.DataFrame, candidates: List[str], exclude: Sequence[str] = ()) -> Optional[str]:
    """Return the actual column name in df that matches any candidate (fuzzy)."""
    columns = [c for c in df.columns if c not in exclude]
    norm_map = {normalize_colname(c): c for c in columns}
    for cand in candidates:
        n = normalize_colname(cand)
        if n in norm_map:
            return norm_map[n]
    # substring match, only for candidates long enough to be meaningful
    for col in columns:
        for cand in candidates:
            if len(cand) > 2 and normalize_colname(cand) in normalize_colname(col):
                return col
    return None


def _content_lines(lines: Iterable[str]) -> Iterable[Numbered]:
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        yield text, number


def _open_lines(path: PathLike) -> List[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise TopologyFormatError(f"cannot read file: {e.strerror or e}", path=str(path)) from e


# --- edge lists --------------------------------------------------------------
def parse_edge_lines(
    lines: Iterable[str], source: str = "<text>"
) -> Tuple[List[Tuple[str, str]], Optional[List[str]]]:
    """Parse edge-list text into (edges, monitors from a ``[monitors]`` section)."""
    edges: List[Tuple[str, str]] = []
    seen = {}
    section: Optional[List[str]] = None
    for text, number in _content_lines(lines):
        if text.lower() == MONITOR_SECTION:
            section = []
            continue
        if section is not None:
            section.append(text.split()[0])
            continue
        parts = text.split()
        if len(parts) < 2:
            raise TopologyFormatError(f"expected 'u v', got {text!r}", path=source, line=number)
        u, v = parts[0], parts[1]
        if u == v:
            raise TopologyFormatError(f"self-loop on {u!r}", path=source, line=number)
        key = frozenset((u, v))
        if key in seen:
            logger.warning("%s:%d: duplicate edge %s-%s (first on line %d) collapsed",
                           source, number, u, v, seen[key])
            continue
        seen[key] = number
        edges.append((u, v))
    return edges, section


def _read_csv_edges(path: PathLike) -> List[Tuple[str, str]]:
    try:
        df = pd.read_csv(path, dtype=str, comment="#", skipinitialspace=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise TopologyFormatError(f"could not read CSV: {e}", path=str(path)) from e
    src_col = find_column(df, SOURCE_COLUMNS)
    dst_col = find_column(df, TARGET_COLUMNS, exclude=[src_col] if src_col else ())
    if src_col is None or dst_col is None:
        if len(df.columns) < 2:
            raise TopologyFormatError("CSV needs two endpoint columns", path=str(path))
        src_col, dst_col = df.columns[0], df.columns[1]
        logger.info("%s: no endpoint headers recognised, using %r and %r", path, src_col, dst_col)
    lines = []
    # header is file line 1, so data row i sits on line i + 2
    for i, (u, v) in enumerate(zip(df[src_col], df[dst_col])):
        if pd.isna(u) or pd.isna(v):
            raise TopologyFormatError("missing endpoint", path=str(path), line=i + 2)
        lines.append(f"{str(u).strip()} {str(v).strip()}")
    edges, _ = parse_edge_lines(_pad_to_csv_lines(lines), source=str(path))
    return edges


def _pad_to_csv_lines(lines: List[str]) -> List[str]:
    # keep file line numbers: a blank line stands in for the header
    return [""] + lines


def read_label_list(path: PathLike) -> List[str]:
    return [text.split()[0] for text, _ in _content_lines(_open_lines(path))]


def _build(edges, monitors, source: str) -> Topology:
    if not edges:
        raise TopologyFormatError("empty graph", path=source)
    try:
        return Topology.from_edges(edges, monitors)
    except TopologyError as e:
        raise TopologyFormatError(str(e), path=source) from e


def load_topology(edge_file: PathLike, monitor_file: Optional[PathLike] = None) -> Topology:
    """Load a topology and its monitor roles.

    Monitors come from ``monitor_file`` when given, else from a ``[monitors]``
    section of the edge file, else the topology has no monitors.
    """
    source = str(edge_file)
    if Path(edge_file).suffix.lower() == ".csv":
        edges, section = _read_csv_edges(edge_file), None
    else:
        edges, section = parse_edge_lines(_open_lines(edge_file), source=source)
    if monitor_file is not None:
        monitors = read_label_list(monitor_file)
    else:
        monitors = section or []
    topology = _build(edges, monitors, source)
    logger.info("loaded %s: |V|=%d |L|=%d mu=%d", source, len(topology.nodes),
                topology.num_links, topology.mu)
    return topology.with_metadata(source=source)


def load_topology_text(edge_text: str, monitor_text: Optional[str] = None,
                       source: str = "<text>") -> Topology:
    edges, section = parse_edge_lines(edge_text.splitlines(), source=source)
    if monitor_text is not None:
        monitors = [t.split()[0] for t, _ in _content_lines(monitor_text.splitlines())]
    else:
        monitors = section or []
    return _build(edges, monitors, source)


def read_path_lines(path: PathLike) -> List[Tuple[List[str], int]]:
    return [(text.split(), number) for text, number in _content_lines(_open_lines(path))]


# --- writing -------------------------------------------------------------------
def write_topology(G: Topology, target: Union[PathLike, TextIO]) -> None:
    """Write ``G`` as an edge list followed by its ``[monitors]`` section."""
    buf = io.StringIO()
    buf.write(f"# |V|={len(G.nodes)} |L|={G.num_links} mu={G.mu}\n")
    for u, v in sorted(tuple(sorted(e)) for e in G.graph.edges):
        buf.write(f"{G.label(u)} {G.label(v)}\n")
    isolated = [v for v in G.nodes if G.graph.degree(v) == 0]
    if isolated:
        logger.warning("isolated nodes are not representable in an edge list: %s",
                       [G.label(v) for v in isolated])
    if G.mu:
        buf.write(MONITOR_SECTION + "\n")
        for m in G.sorted_monitors:
            buf.write(f"{G.label(m)}\n")
    if hasattr(target, "write"):
        target.write(buf.getvalue())
    else:
        Path(target).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
