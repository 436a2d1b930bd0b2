import itertools

import pytest

from csp import (
    Applicability, IdentSetBounds, MechanismTag, OmegaInterval, Verdict, cap_promoted_value,
    csp_interval_from_pi, csp_k_identifiable, csp_node_metrics, csp_sigma_cases, gamma_gm_min, gamma_gstar,
    omega_cap_bounds, omega_csp_bounds, pi_values, s_cap_counts, s_csp_bounds,
)
from errors import AnalysisError
from loaders import load_topology_text
from topology import M_PRIME, build_g_m, build_gstar, components_after_removal, vertex_connectivity

from conftest import ids


class TestGamma:
    def test_gstar_capped_at_sigma(self, fix_k):
        cut = gamma_gstar(fix_k, fix_k.non_monitors)
        assert (cut.value, cut.capped) == (3, True)

    def test_gstar_chain(self, fix_chain):
        assert gamma_gstar(fix_chain, ids(fix_chain, "a")).value == 2

    def test_gm_min_and_its_monitor(self, fix_k):
        cut, m = gamma_gm_min(fix_k, ids(fix_k, "a"))
        assert (cut.value, fix_k.label(m)) == (1, "m1")
        cut, m = gamma_gm_min(fix_k, ids(fix_k, "c"))
        assert (cut.value, fix_k.label(m)) == (2, "m2")

    def test_gm_min_path(self, fix_path):
        cut, _ = gamma_gm_min(fix_path, ids(fix_path, "a"))
        assert cut.value == 1

    def test_set_must_hold_non_monitors(self, fix_k):
        with pytest.raises(AnalysisError):
            gamma_gstar(fix_k, ids(fix_k, "m1"))
        with pytest.raises(AnalysisError):
            gamma_gstar(fix_k, ())

    def test_needs_two_monitors(self, fix_k):
        with pytest.raises(AnalysisError):
            gamma_gm_min(fix_k.with_monitors([0]), ids(fix_k, "a"))


class TestPi:
    def test_fix_k(self, fix_k):
        pis = pi_values(fix_k)
        assert {fix_k.label(v): p for v, p in pis.items()} == {"a": 1, "b": 1, "c": 2}

    def test_chain_and_star(self, fix_chain, fix_star):
        assert pi_values(fix_chain)[fix_chain.id_of("a")] == 1
        assert pi_values(fix_star)[fix_star.id_of("w")] == 2

    def test_pi_is_never_negative(self, fix_path):
        assert pi_values(fix_path)[fix_path.id_of("a")] == 0

    def test_metrics_keep_per_monitor_values(self, fix_k):
        m = csp_node_metrics(fix_k, fix_k.id_of("c"))
        assert {fix_k.label(k): c.value for k, c in m.gamma_m.items()} == {"m1": 3, "m2": 2}
        assert m.gamma_gm_min.value == 2
        assert m.sigma == 3

    def test_metrics_reject_monitors(self, fix_k):
        with pytest.raises(AnalysisError):
            csp_node_metrics(fix_k, fix_k.id_of("m2"))


class TestKIdentifiable:
    def test_k_zero_is_trivial(self, fix_chain):
        assert csp_k_identifiable(fix_chain, fix_chain.non_monitors, 0) is Verdict.SUFFICIENT

    def test_inconclusive_gap(self, fix_k):
        assert csp_k_identifiable(fix_k, fix_k.non_monitors, 1) is Verdict.INCONCLUSIVE

    def test_single_node_sufficient(self, fix_k):
        # Γ*(c) = 3 >= k+2 and Γ_{G_m}(c) = 2 >= k+1
        assert csp_k_identifiable(fix_k, ids(fix_k, "c"), 1) is Verdict.SUFFICIENT

    def test_chain_is_not_identifiable(self, fix_chain):
        assert csp_k_identifiable(fix_chain, fix_chain.non_monitors, 1) is Verdict.NO

    def test_sigma_cases_are_decisive(self, fix_star):
        assert csp_k_identifiable(fix_star, ids(fix_star, "a", "b"), 3) is Verdict.SUFFICIENT
        assert csp_k_identifiable(fix_star, ids(fix_star, "w"), 3) is Verdict.NO
        assert csp_k_identifiable(fix_star, ids(fix_star, "w"), 2) is Verdict.SUFFICIENT
        assert csp_k_identifiable(fix_star, fix_star.non_monitors, 2) is Verdict.SUFFICIENT

    def test_k_range(self, fix_k):
        with pytest.raises(AnalysisError):
            csp_k_identifiable(fix_k, fix_k.non_monitors, 4)
        with pytest.raises(AnalysisError):
            csp_k_identifiable(fix_k, (), 1)

    def test_s_tilde(self, fix_star, fix_k):
        cases = csp_sigma_cases(fix_star, ())
        assert cases.s_tilde == ids(fix_star, "w")
        assert cases.s_csp_sigma_minus_1 == ids(fix_star, "a", "b", "w")
        assert csp_sigma_cases(fix_k, ()).s_tilde == frozenset()


class TestOmegaCsp:
    def test_in_range(self, fix_k):
        iv = omega_csp_bounds(fix_k, fix_k.id_of("a"))
        assert (iv.lower, iv.upper, iv.applicability) == (0, 1, Applicability.IN_RANGE)

    def test_range_exceeded(self, fix_k):
        iv = omega_csp_bounds(fix_k, fix_k.id_of("c"))
        assert (iv.lower, iv.upper, iv.applicability) == (1, 2, Applicability.RANGE_EXCEEDED)

    def test_two_monitor_neighbours_is_exact_sigma(self, fix_path):
        iv = omega_csp_bounds(fix_path, fix_path.id_of("a"))
        assert iv.is_exact and iv.lower == 1

    def test_s_tilde_node_is_exact_sigma_minus_one(self, fix_star):
        iv = omega_csp_bounds(fix_star, fix_star.id_of("w"))
        assert iv == OmegaInterval.exact(2, MechanismTag.CSP)

    def test_interval_from_shifted_pi(self, fix_k):
        iv = csp_interval_from_pi(fix_k, fix_k.id_of("a"), 0)
        assert (iv.lower, iv.upper) == (0, 0)

    def test_interval_validation(self):
        with pytest.raises(AnalysisError):
            OmegaInterval(2, 1, MechanismTag.CSP, Applicability.IN_RANGE)
        with pytest.raises(AnalysisError):
            OmegaInterval(1, 2, MechanismTag.CSP, Applicability.EXACT)


class TestOmegaCap:
    def test_capped_is_exact_sigma(self, fix_k, fix_chain):
        assert omega_cap_bounds(fix_k, fix_k.id_of("a")) == OmegaInterval.exact(3, MechanismTag.CAP)
        assert omega_cap_bounds(fix_chain, fix_chain.id_of("a")).upper == 2

    def test_uncapped_interval(self):
        G = load_topology_text("m1 x\nx y\n[monitors]\nm1\n")
        iv = omega_cap_bounds(G, G.id_of("y"))
        assert (iv.lower, iv.upper, iv.applicability) == (0, 1, Applicability.IN_RANGE)
        assert cap_promoted_value(G, G.id_of("y")) == 1

    def test_counts(self):
        G = load_topology_text("m1 x\nx y\n[monitors]\nm1\n")
        bounds = s_cap_counts(G, 1)
        assert bounds.inner == ids(G, "x")
        assert bounds.outer == ids(G, "x", "y")


class TestIdentSets:
    def test_fix_k_bounds(self, fix_k):
        b = s_csp_bounds(fix_k, 1)
        assert b.inner == ids(fix_k, "c")
        assert b.outer == ids(fix_k, "a", "b", "c")
        assert b.exact is None

    def test_sigma_minus_one_is_exact(self, fix_k, fix_chain):
        assert s_csp_bounds(fix_k, 2).exact == frozenset()
        assert s_csp_bounds(fix_chain, 1).exact == frozenset()

    def test_star_exact_sets(self, fix_star):
        assert s_csp_bounds(fix_star, 3).exact == ids(fix_star, "a", "b")
        assert s_csp_bounds(fix_star, 2).exact == ids(fix_star, "a", "b", "w")

    def test_k_range(self, fix_k):
        with pytest.raises(AnalysisError):
            s_csp_bounds(fix_k, 0)

    def test_precomputed_pis(self, fix_k):
        shifted = {v: p - 1 for v, p in pi_values(fix_k).items()}
        assert s_csp_bounds(fix_k, 1, pis=shifted).inner == frozenset()

    def test_bounds_must_nest(self):
        with pytest.raises(AnalysisError):
            IdentSetBounds(1, {1, 2}, {1})

    def test_sandwiches(self):
        b = IdentSetBounds(1, {1}, {1, 2, 3})
        assert b.sandwiches({1, 3})
        assert not b.sandwiches({2})
        with pytest.raises(AnalysisError):
            b.sandwiches()


def _reaches(G, v, removed, targets):
    (component,) = [c for c in components_after_removal(G, removed) if v in c]
    return bool(component & targets)


class TestMergedGraphConditions:
    def test_gamma_matches_monitor_reachability(self, small_random_topologies):
        for G in small_random_topologies:
            sigma = G.sigma
            for v in G.non_monitors:
                others = [w for w in G.non_monitors if w != v]
                star = vertex_connectivity(build_gstar(G), v, M_PRIME, sigma).value
                per_monitor = {m: vertex_connectivity(build_g_m(G, m), v, M_PRIME, sigma).value
                               for m in G.sorted_monitors}
                for q in range(sigma):
                    removals = [set(X) for r in range(q + 1) for X in itertools.combinations(others, r)]
                    reached = all(_reaches(G, v, X, G.monitors) for X in removals)
                    assert reached == (star >= q + 1), (G, G.label(v), q)
                    for m, value in per_monitor.items():
                        reached = all(_reaches(G, v, X | {m}, G.monitors - {m}) for X in removals)
                        assert reached == (value >= q + 1), (G, G.label(v), G.label(m), q)
