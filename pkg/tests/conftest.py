import pytest

from loaders import load_topology_text

FIX_PATH = "m1 a\na m2\n[monitors]\nm1\nm2\n"
FIX_CHAIN = "m1 a\na b\nb m2\n[monitors]\nm1\nm2\n"
FIX_K = "m1 a\nm1 b\na b\na c\nb c\nc m2\n[monitors]\nm1\nm2\n"
FIX_STAR = "m1 a\nm2 a\nm2 b\nm3 b\nm1 w\nw a\nw b\n[monitors]\nm1\nm2\nm3\n"
FIX_C4 = "s x\nx t\nt y\ny s\n"

# v's four paths are covered by w1 -> {p2, p3}, w2 -> {p1, p2}, w3 -> {p3, p4};
# w1 comes first so the greedy tie goes to it
GAP_EDGES = ("m3 w1\nw1 w2\nw1 w3\nm1 w2\nw2 v\nv m2\nv m4\nm5 w1\nw3 v\nv m6\nm7 w3\nv m8\n"
             "[monitors]\nm1\nm2\nm3\nm4\nm5\nm6\nm7\nm8\n")
GAP_PATHS = "m1 w2 v m2\nm3 w1 w2 v m4\nm5 w1 w3 v m6\nm7 w3 v m8\n"


def ids(G, *labels):
    return frozenset(G.id_of(label) for label in labels)


@pytest.fixture
def fix_path():
    return load_topology_text(FIX_PATH, source="FIX-PATH")


@pytest.fixture
def fix_chain():
    return load_topology_text(FIX_CHAIN, source="FIX-CHAIN")


@pytest.fixture
def fix_k():
    return load_topology_text(FIX_K, source="FIX-K")


@pytest.fixture
def fix_star():
    return load_topology_text(FIX_STAR, source="FIX-STAR")


@pytest.fixture
def fix_c4():
    return load_topology_text(FIX_C4, source="FIX-C4")


@pytest.fixture
def fix_k_file(tmp_path):
    path = tmp_path / "fix_k.txt"
    path.write_text(FIX_K)
    return path


@pytest.fixture
def fix_k_one_path(fix_k, tmp_path):
    from up import load_paths

    path = tmp_path / "paths.txt"
    path.write_text("m1 a c m2\n")
    return load_paths(path, fix_k)


@pytest.fixture
def gap(tmp_path):
    from up import load_paths

    G = load_topology_text(GAP_EDGES, source="gap")
    path = tmp_path / "gap_paths.txt"
    path.write_text(GAP_PATHS)
    return G, load_paths(path, G)


@pytest.fixture
def small_random_topologies():
    """Connected ER graphs on 5-8 nodes with 2-3 monitors."""
    from generators import GenSpec, Model, generate, place_monitors

    out = []
    for seed in range(12):
        n = 5 + seed % 4
        G = generate(GenSpec(Model.ER, n=n, param=0.5, seed=seed))
        out.append(place_monitors(G, 2 + seed % 2, seed))
    return out
