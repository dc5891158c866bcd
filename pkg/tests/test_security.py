import itertools

import numpy as np
import pytest

from dersec import (
    LPF,
    compare_strategies,
    fig4_strategies,
    is_symmetric,
    optimal_security_strategy,
    solve_ad_oneshot,
    solve_dad,
)
from dersec.errors import AsymmetricNetwork, HeterogeneousRxRatio
from dersec.network import NodeSpec, build_network
from dersec.oracle import bf_security

from conftest import params_for


class TestPlacement:
    def test_budget_slack_secures_all(self, tree22):
        s = optimal_security_strategy(tree22, 99)
        assert set(s.secured) == {int(i) for i in tree22.der_nodes}

    def test_budget_zero(self, tree22):
        s = optimal_security_strategy(tree22, 0)
        assert s.u.sum() == 0

    def test_binary_height3_budget10(self, tree23):
        s = optimal_security_strategy(tree23, 10)
        secured = set(s.secured)
        level3 = set(tree23.tree.level(3))
        assert level3 <= secured
        partial = secured - level3
        # two level-2 nodes, one under each level-1 node, lowest ids first
        assert partial == {3, 5}

    def test_uniform_partial_level(self, tree23):
        s = optimal_security_strategy(tree23, 6)
        counts = {}
        for i in s.secured:
            counts.setdefault(int(tree23.tree.parent[i]), 0)
            counts[int(tree23.tree.parent[i])] += 1
        assert set(counts.values()) <= {1, 2}
        assert s.u.sum() == 6

    def test_structural_properties(self, tree23):
        for B in range(0, 15):
            s = optimal_security_strategy(tree23, B)
            u = s.u
            assert u.sum() == min(B, len(tree23.der_nodes))
            for i in np.flatnonzero(u):
                for j in tree23.tree.subtree(int(i)):
                    assert u[j] == 1
                for j in tree23.nodes:
                    if tree23.tree.depth[j] > tree23.tree.depth[i]:
                        assert u[j] == 1

    def test_preconditions(self):
        specs = [
            NodeSpec(id=0, parent=None),
            NodeSpec(id=1, parent=0, r_pu=0.01, x_pu=0.01, pc_nom=0.01, qc_nom=0.003,
                     der_cap=0.005),
            NodeSpec(id=2, parent=0, r_pu=0.02, x_pu=0.02, pc_nom=0.01, qc_nom=0.003,
                     der_cap=0.005),
        ]
        net = build_network(specs)
        with pytest.raises(AsymmetricNetwork):
            optimal_security_strategy(net, 1)
        specs[2] = NodeSpec(id=2, parent=0, r_pu=0.01, x_pu=0.02, pc_nom=0.01,
                            qc_nom=0.003, der_cap=0.005)
        net = build_network(specs)
        with pytest.raises(HeterogeneousRxRatio):
            optimal_security_strategy(net, 1)

    def test_symmetry_detector(self, tree32, homog37):
        assert is_symmetric(tree32)
        assert not is_symmetric(homog37)


class TestDAD:
    @pytest.mark.parametrize("B,M", [(0, 2), (2, 2), (4, 2), (3, 1)])
    def test_fast_path_equals_bruteforce(self, tree32, B, M):
        params = params_for(tree32, 10.0)
        dad = solve_dad(tree32, B, M, params, LPF)
        _, bf_loss = bf_security(tree32, B, M, params, LPF)
        assert dad.loss == pytest.approx(bf_loss, abs=1e-9)

    def test_budget_slack_removes_attack(self, tree22):
        params = params_for(tree22, 10.0)
        dad = solve_dad(tree22, 99, 3, params, LPF)
        assert dad.loss == pytest.approx(0.0, abs=1e-9)

    def test_fallback_on_asymmetric_identical_ratio(self):
        # an asymmetric identical-ratio tree forces the exhaustive stage-1 path
        rng = np.random.default_rng(4)
        specs = [NodeSpec(id=0, parent=None)]
        for i in range(1, 7):
            specs.append(
                NodeSpec(id=i, parent=int(rng.integers(0, i)), r_pu=0.01, x_pu=0.012,
                         pc_nom=0.02, qc_nom=0.006, der_cap=0.01 if i > 2 else 0.0,
                         nu_lo=0.985, W=70000.0, C=7000.0, gamma_lo=0.5)
            )
        net = build_network(specs)
        params = params_for(net, 10.0)
        dad = solve_dad(net, 2, 2, params, LPF)
        # exhaustive check inline
        best = None
        der = [int(i) for i in net.der_nodes]
        for k in range(3):
            for combo in itertools.combinations(der, k):
                u = np.zeros(net.n + 1, dtype=int)
                u[list(combo)] = 1
                val = solve_ad_oneshot(net, u, 2, params, LPF).loss.total
                best = val if best is None else min(best, val)
        assert dad.loss == pytest.approx(best, abs=1e-9)


class TestComparisons:
    def test_equal_strategies(self, tree32):
        params = params_for(tree32, 10.0)
        u = np.zeros(tree32.n + 1, dtype=int)
        u[[4, 5]] = 1
        cmp = compare_strategies(tree32, u, u, 2, params, LPF)
        assert cmp.relation == "equal"

    def test_fig4_ordering(self, tree23):
        params = params_for(tree23, 10.0)
        u1, u2 = fig4_strategies(tree23)
        for M in (3, 4):
            cmp = compare_strategies(tree23, u1, u2, M, params, LPF)
            assert cmp.loss2 <= cmp.loss1 + 1e-9

    def test_child_node_swap_never_hurts(self, tree32):
        # moving a secured bit from an ancestor to a descendant keeps the
        # sub-game value from increasing
        params = params_for(tree32, 10.0)
        M = 2
        for a in (1, 2, 3):
            for b in tree32.tree.subtree(a):
                if b == a:
                    continue
                u = np.zeros(tree32.n + 1, dtype=int)
                u[a] = 1
                u_t = np.zeros(tree32.n + 1, dtype=int)
                u_t[b] = 1
                la = solve_ad_oneshot(tree32, u, M, params, LPF).loss.total
                lb = solve_ad_oneshot(tree32, u_t, M, params, LPF).loss.total
                assert lb <= la + 1e-9

    def test_level_swap_never_hurts(self, tree23):
        # from a subtree-closed strategy, swapping a secured shallow bit with
        # an unsecured deeper bit at maximal shared depth cannot increase loss
        params = params_for(tree23, 10.0)
        u = np.zeros(tree23.n + 1, dtype=int)
        u[[3, 7, 8]] = 1  # node 3 and its children: subtree-closed
        pairs = [
            (i, j)
            for i in np.flatnonzero(u)
            for j in tree23.nodes
            if u[j] == 0 and tree23.tree.depth[j] > tree23.tree.depth[i]
        ]
        best_shared = max(tree23.tree.shared_depth[i, j] for i, j in pairs)
        M = 3
        base = solve_ad_oneshot(tree23, u, M, params, LPF).loss.total
        for i, j in pairs:
            if tree23.tree.shared_depth[i, j] != best_shared:
                continue
            u_t = u.copy()
            u_t[i] = 0
            u_t[j] = 1
            swapped = solve_ad_oneshot(tree23, u_t, M, params, LPF).loss.total
            assert swapped <= base + 1e-9
