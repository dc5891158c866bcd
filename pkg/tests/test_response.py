import math

import numpy as np
import pytest

from dersec import (
    CostParams,
    LPF,
    NPF,
    evaluate_loss,
    fixed_angle_setpoints,
    optimal_load_control,
    optimal_response,
    response_state,
)
from dersec.attack import attack_strategy
from dersec.errors import HeterogeneousRxRatio
from dersec.network import NodeSpec, build_network
from dersec.oracle import GridSpec, _grid_min_response

from conftest import chain_network, params_for, zeros_u


class TestFixedAngleSetpoints:
    def test_table_impedance_angle(self, homog37):
        u = zeros_u(homog37)
        sp = fixed_angle_setpoints(homog37, u, np.zeros(37, dtype=int))
        d = homog37.der_nodes[0]
        K = 0.33 / 0.38
        theta = math.atan2(1.0, K)
        assert theta == pytest.approx(0.8557046, abs=1e-6)
        assert sp[d] == pytest.approx(
            0.01155 * complex(math.cos(theta), math.sin(theta)), abs=1e-9
        )
        assert sp[d].real == pytest.approx(0.00757, abs=2e-5)
        assert sp[d].imag == pytest.approx(0.00872, abs=2e-5)

    def test_resistive_limit(self):
        net = chain_network(2, z=0.02 + 0.02e-6j, caps={2: 0.01})
        sp = fixed_angle_setpoints(net, np.zeros(3, dtype=int), np.zeros(3, dtype=int))
        assert sp[2].real == pytest.approx(0.01, rel=1e-9)
        assert sp[2].imag == pytest.approx(0.0, abs=1e-8)

    def test_compromised_nodes_omitted(self, homog37):
        delta = np.zeros(37, dtype=int)
        delta[list(homog37.der_nodes[:3])] = 1
        sp = fixed_angle_setpoints(homog37, zeros_u(homog37), delta)
        assert np.all(sp[homog37.der_nodes[:3]] == 0)
        assert np.all(np.abs(sp[homog37.der_nodes[3:]]) > 0)

    def test_secured_targets_keep_defender_setpoint(self, homog37):
        delta = np.zeros(37, dtype=int)
        u = zeros_u(homog37)
        d = homog37.der_nodes[0]
        delta[d] = 1
        u[d] = 1
        sp = fixed_angle_setpoints(homog37, u, delta)
        assert abs(sp[d]) > 0

    def test_heterogeneous_ratio_raises(self):
        specs = [
            NodeSpec(id=0, parent=None),
            NodeSpec(id=1, parent=0, r_pu=0.01, x_pu=0.01, der_cap=0.01),
            NodeSpec(id=2, parent=1, r_pu=0.01, x_pu=0.02, der_cap=0.01),
        ]
        net = build_network(specs)
        with pytest.raises(HeterogeneousRxRatio):
            fixed_angle_setpoints(net, np.zeros(3, dtype=int), np.zeros(3, dtype=int))

    def test_angle_sweep_confirms_minimum(self):
        # identical-K 4-node chain, fixed gamma, one attacked DER; sweep the
        # common uncompromised angle at half-degree steps
        net = chain_network(4, z=0.015 + 0.018j, load=0.02 + 0.006j,
                            caps={2: 0.01, 3: 0.01, 4: 0.01}, nu_lo=0.996)
        params = params_for(net, 2.0)
        delta = np.zeros(5, dtype=int)
        delta[4] = 1
        psi = attack_strategy(net, delta)
        gamma = np.ones(5)

        def lovr_at(theta):
            sp = np.where(net.der_cap > 0, net.der_cap * np.exp(1j * theta), 0)
            sp[4] = 0.0
            from dersec.response import DefenderResponse

            state = response_state(net, psi, DefenderResponse(sp, gamma), LPF)
            return evaluate_loss(state, gamma, params).lovr

        thetas = np.radians(np.arange(0.0, 90.0 + 0.25, 0.5))
        values = [lovr_at(t) for t in thetas]
        best = thetas[int(np.argmin(values))]
        target = math.atan2(1.0, 0.015 / 0.018)
        assert abs(best - target) <= math.radians(0.5) + 1e-12


class TestOptimalLoadControl:
    def test_no_attack_no_shedding(self, homog37):
        params = params_for(homog37, 10.0)
        sp = fixed_angle_setpoints(homog37, zeros_u(homog37), np.zeros(37, dtype=int))
        gamma = optimal_load_control(homog37, np.zeros(37, dtype=int), sp, params, LPF)
        assert np.all(gamma == 1.0)

    def test_high_ratio_reaches_floor(self):
        # every loaded node shares >= 2 path edges with the violated area and
        # the violation outlasts the full control capability
        net = chain_network(3, z=0.02 + 0.024j, load=0.02 + 0.012j,
                            caps={3: 0.03}, nu_lo=0.9995, qc_ratio=0.6)
        params = params_for(net, 18.0)
        delta = np.zeros(4, dtype=int)
        delta[3] = 1
        sp = fixed_angle_setpoints(net, np.zeros(4, dtype=int), delta)
        gamma = optimal_load_control(net, delta, sp, params, LPF)
        assert np.all(gamma[1:] == pytest.approx(net.gamma_lo[1:], abs=1e-9))

    def test_low_ratio_no_control(self, homog37):
        params = params_for(homog37, 2.0)
        delta = np.zeros(37, dtype=int)
        delta[list(homog37.der_nodes)] = 1
        sp = fixed_angle_setpoints(homog37, zeros_u(homog37), delta)
        gamma = optimal_load_control(homog37, delta, sp, params, LPF)
        assert np.all(gamma == 1.0)

    def test_matches_scan_on_single_knob(self):
        # one load, one attacked DER: the LP must match a dense scan over gamma
        net = chain_network(2, z=0.02 + 0.024j, load=0.03 + 0.02j,
                            caps={2: 0.025}, nu_lo=0.998)
        params = params_for(net, 12.0)
        delta = np.zeros(3, dtype=int)
        delta[2] = 1
        sp = fixed_angle_setpoints(net, np.zeros(3, dtype=int), delta)
        psi = attack_strategy(net, delta)
        gamma = optimal_load_control(net, delta, sp, params, LPF)

        from dersec.response import DefenderResponse

        def total(g1, g2):
            g = np.array([1.0, g1, g2])
            st = response_state(net, psi, DefenderResponse(sp, g), LPF)
            return evaluate_loss(st, g, params).total

        lp_val = total(gamma[1], gamma[2])
        grid = np.linspace(0.5, 1.0, 251)
        scan = min(total(a, b) for a in grid for b in grid)
        assert lp_val <= scan + 1e-9


class TestOptimalResponse:
    def test_linear_matches_gamma_lp_at_fixed_angle(self, tree22):
        # identical-K symmetric tree: joint optimization cannot beat the
        # closed-form set-points, so values agree
        params = params_for(tree22, 10.0)
        delta = np.zeros(tree22.n + 1, dtype=int)
        delta[[3, 4]] = 1
        psi = attack_strategy(tree22, delta)
        phi = optimal_response(tree22, psi, params, LPF)
        st = response_state(tree22, psi, phi, LPF)
        joint = evaluate_loss(st, phi.gamma, params).total

        sp = fixed_angle_setpoints(tree22, np.zeros(tree22.n + 1, dtype=int), delta)
        gamma = optimal_load_control(tree22, delta, sp, params, LPF)
        from dersec.response import DefenderResponse

        st2 = response_state(tree22, psi, DefenderResponse(sp, gamma), LPF)
        fixed = evaluate_loss(st2, gamma, params).total
        # the closed form is exactly optimal; the joint LP works on an inner
        # polygon of the disk, so it can only lose the facet granularity
        assert fixed <= joint + 1e-9
        assert joint - fixed < 1e-3

    def test_npf_no_attack_prefers_active_power(self, homog37):
        params = params_for(homog37, 10.0)
        psi = attack_strategy(homog37, np.zeros(37, dtype=int))
        phi = optimal_response(homog37, psi, params, NPF)
        sp = phi.sp_d[homog37.der_nodes]
        assert np.all(sp.real >= sp.imag - 1e-12)
        st = response_state(homog37, psi, phi, NPF)
        base = evaluate_loss(st, phi.gamma, params).total
        # beats the naive fixed-angle dispatch on line losses
        sp_fixed = fixed_angle_setpoints(homog37, zeros_u(homog37), np.zeros(37, dtype=int))
        from dersec.response import DefenderResponse

        st_fixed = response_state(
            homog37, psi, DefenderResponse(sp_fixed, np.ones(37)), NPF
        )
        assert base <= evaluate_loss(st_fixed, np.ones(37), params).total + 1e-12

    def test_npf_attacked_angles_near_arccot_k(self, homog37):
        params = params_for(homog37, 2.0)  # no shedding: violation stays active
        delta = np.zeros(37, dtype=int)
        delta[list(homog37.der_nodes[:10])] = 1
        psi = attack_strategy(homog37, delta)
        phi = optimal_response(homog37, psi, params, NPF)
        free = [d for d in homog37.der_nodes if delta[d] == 0]
        angles = np.degrees(np.angle(phi.sp_d[free]))
        target = math.degrees(math.atan2(1.0, 0.33 / 0.38))
        assert np.all(np.abs(angles - target) < 10.0)

    def test_npf_matches_grid_oracle_small(self):
        net = chain_network(3, z=0.02 + 0.024j, load=0.025 + 0.008j,
                            caps={2: 0.012, 3: 0.012}, nu_lo=0.9965)
        # unit-scale costs so the 1e-3 agreement tolerance is meaningful
        params = CostParams(W=net.W * (10.0 / 7000.0 / 10.0), C=net.C / 7000.0)
        delta = np.zeros(4, dtype=int)
        delta[3] = 1
        psi = attack_strategy(net, delta)
        phi = optimal_response(net, psi, params, NPF)
        st = response_state(net, psi, phi, NPF)
        mine = evaluate_loss(st, phi.gamma, params).total
        grid_loss, _ = _grid_min_response(
            net, psi, np.zeros(4, dtype=int), params,
            GridSpec(gamma_step=0.05, setpoint_angle_step=math.radians(2.0),
                     setpoint_mag_step=0.1),
        )
        assert mine <= grid_loss + 1e-3

    def test_npf_relaxation_exactness(self, homog37):
        params = params_for(homog37, 10.0)
        delta = np.zeros(37, dtype=int)
        delta[list(homog37.der_nodes[:6])] = 1
        psi = attack_strategy(homog37, delta)
        phi = optimal_response(homog37, psi, params, NPF)
        st = response_state(homog37, psi, phi, NPF)
        par = homog37.tree.parent
        resid = np.abs(st.ell[1:] * st.nu[par[1:]] - np.abs(st.S[1:]) ** 2)
        assert resid.max() < 1e-6

    def test_feasibility_is_exact(self, homog37):
        params = params_for(homog37, 18.0)
        delta = np.zeros(37, dtype=int)
        delta[list(homog37.der_nodes[:8])] = 1
        psi = attack_strategy(homog37, delta)
        for model in (LPF, NPF):
            phi = optimal_response(homog37, psi, params, model)
            assert np.all(phi.gamma[1:] >= homog37.gamma_lo[1:] - 1e-12)
            assert np.all(phi.gamma[1:] <= 1.0 + 1e-12)
            assert np.all(np.abs(phi.sp_d) <= homog37.der_cap + 1e-12)
            assert np.all(np.real(phi.sp_d) >= -1e-12)

    def test_heterogeneous_angles_in_interval(self):
        # heterogeneous r/x: optimal angles must fall in [arccot Kmax, arccot Kmin]
        rng = np.random.default_rng(2)
        specs = [NodeSpec(id=0, parent=None)]
        for i in range(1, 7):
            K = float(rng.uniform(0.6, 1.4))
            r = 0.015
            specs.append(
                NodeSpec(id=i, parent=i - 1, r_pu=r, x_pu=r / K,
                         pc_nom=0.02, qc_nom=0.006, der_cap=0.01 if i >= 4 else 0.0,
                         nu_lo=0.99, W=2.0 * 7000.0, C=7000.0, gamma_lo=0.5)
            )
        net = build_network(specs)
        params = CostParams.from_network(net)
        delta = np.zeros(7, dtype=int)
        delta[6] = 1
        psi = attack_strategy(net, delta)
        phi = optimal_response(net, psi, params, LPF)
        K = net.r[1:] / net.x[1:]
        lo_ang = math.atan2(1.0, K.max())
        hi_ang = math.atan2(1.0, K.min())
        pad = math.radians(3.0)  # facet granularity
        for d in (4, 5):
            ang = math.atan2(phi.sp_d[d].imag, phi.sp_d[d].real)
            assert lo_ang - pad <= ang <= hi_ang + pad
            assert abs(phi.sp_d[d]) == pytest.approx(net.der_cap[d], rel=2e-3)
