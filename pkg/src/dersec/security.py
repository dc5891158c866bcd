"""Stage-1 security investment: bottom-up placement on symmetric networks,
the full trilevel solve, and strategy comparison.

On a symmetric identical-r/x network the optimal budget-B placement secures
DER levels whole from the deepest level upward and spreads the partial
top-most secured level uniformly across sibling groups; any uniform choice is
equivalent up to a tree automorphism, so the deterministic round-robin here
attains the optimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .attack import attack_strategy
from .errors import AsymmetricNetwork, EnumerationCapExceeded, HeterogeneousRxRatio
from .game import ADResult, solve_ad_oneshot  # noqa: F401 (ADResult re-exported for callers)
from .loss import CostParams, evaluate_loss
from .network import Network
from .powerflow import ModelTag
from .response import optimal_response, response_state


@dataclass(frozen=True)
class SecurityStrategy:
    u: np.ndarray
    budget: int

    @property
    def secured(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.u))


@dataclass(frozen=True)
class DADResult:
    u_star: SecurityStrategy
    ad: ADResult
    loss: float


def _subtree_signature(net: Network, i: int, u: np.ndarray | None = None):
    """Canonical recursive signature of the subtree rooted at i; two siblings
    are symmetric exactly when their signatures match."""
    props = (
        round(net.r[i], 12),
        round(net.x[i], 12),
        round(float(np.real(net.sc_nom[i])), 12),
        round(float(np.imag(net.sc_nom[i])), 12),
        round(float(net.der_cap[i]), 12),
        round(float(net.nu_lo[i]), 12),
        round(float(net.nu_hi[i]), 12),
        round(float(net.W[i]), 12),
        round(float(net.C[i]), 12),
        round(float(net.gamma_lo[i]), 12),
    )
    mark = int(u[i]) if u is not None else 0
    child_sigs = tuple(
        sorted(_subtree_signature(net, c, u) for c in net.tree.children[i])
    )
    return (props, mark, child_sigs)


def is_symmetric(net: Network) -> bool:
    """Sibling subtrees identical everywhere, and all DER capabilities equal."""
    caps = net.der_cap[net.der_cap > 0.0]
    if caps.size and float(caps.max() - caps.min()) > 1e-12:
        return False
    for i in range(net.n + 1):
        kids = net.tree.children[i]
        if len(kids) < 2:
            continue
        sigs = {_subtree_signature(net, c) for c in kids}
        if len(sigs) != 1:
            return False
    return True


def optimal_security_strategy(net: Network, B: int) -> SecurityStrategy:
    """Bottom-up whole-level securing with a round-robin partial level.

    Requires a symmetric network with identical r/x ratio; the partial
    top-most secured level distributes nodes across sibling groups lowest-id
    first, which realizes the uniform choice deterministically.
    """
    if net.uniform_rx_ratio() is None:
        raise HeterogeneousRxRatio("optimal placement requires identical r/x")
    if not is_symmetric(net):
        raise AsymmetricNetwork("optimal placement requires a symmetric network")

    der = set(int(i) for i in net.der_nodes)
    u = np.zeros(net.n + 1, dtype=int)
    remaining = min(B, len(der))
    depth = net.tree.depth
    for level in range(net.tree.height, 0, -1):
        level_ders = sorted(i for i in der if depth[i] == level)
        if not level_ders:
            continue
        if remaining >= len(level_ders):
            u[level_ders] = 1
            remaining -= len(level_ders)
            if remaining == 0:
                break
        else:
            groups: dict[int, list[int]] = {}
            for i in level_ders:
                groups.setdefault(int(net.tree.parent[i]), []).append(i)
            queues = [sorted(g) for _, g in sorted(groups.items())]
            picked: list[int] = []
            round_idx = 0
            while len(picked) < remaining:
                for q in queues:
                    if round_idx < len(q) and len(picked) < remaining:
                        picked.append(q[round_idx])
                round_idx += 1
            u[picked] = 1
            break
    return SecurityStrategy(u=u, budget=B)


def solve_ad_exhaustive(
    net: Network,
    u: np.ndarray,
    M: int,
    params: CostParams,
    model: ModelTag,
    cap: int = 200_000,
) -> ADResult:
    """Linear sub-game by full attack enumeration with the joint
    (set-point, load-control) response LP per attack vector.

    Works on any network; used as the Stage-2/3 engine when the one-shot
    preconditions fail.
    """
    from .game import TraceEntry

    pool = [int(i) for i in np.flatnonzero((net.der_cap > 0.0) & (u == 0))]
    budget = min(M, len(pool))
    count = sum(_ncomb(len(pool), k) for k in range(budget + 1))
    if count > cap:
        raise EnumerationCapExceeded(f"{count} attack vectors exceed cap {cap}")
    best = None
    trace = []
    for k in range(budget + 1):
        for combo in itertools.combinations(pool, k):
            delta = np.zeros(net.n + 1, dtype=int)
            delta[list(combo)] = 1
            psi = attack_strategy(net, delta)
            phi = optimal_response(net, psi, params, model, u=u)
            state = response_state(net, psi, phi, model, u=u)
            breakdown = evaluate_loss(state, phi.gamma, params)
            trace.append(TraceEntry(delta=combo, loss=breakdown.total))
            if best is None or breakdown.total > best[3].total:
                best = (delta, psi, phi, breakdown)
    assert best is not None
    delta, psi, phi, breakdown = best
    return ADResult(
        delta_star=delta,
        psi_star=psi,
        phi_star=phi,
        loss=breakdown,
        model=model,
        trace=tuple(trace),
        converged=True,
        iterations=1,
    )


def subgame_value_exhaustive(
    net: Network,
    u: np.ndarray,
    M: int,
    params: CostParams,
    model: ModelTag,
    cap: int = 200_000,
) -> float:
    return solve_ad_exhaustive(net, u, M, params, model, cap=cap).loss.total


def solve_dad(
    net: Network,
    B: int,
    M: int,
    params: CostParams,
    model: ModelTag,
    u_enum_cap: int = 20_000,
) -> DADResult:
    """Trilevel solve: closed-form placement when the symmetry and ratio
    preconditions hold, else exhaustive Stage-1 enumeration."""
    if not model.is_linear:
        raise ValueError("solve_dad applies to linear models")
    if net.uniform_rx_ratio() is not None and is_symmetric(net):
        u_star = optimal_security_strategy(net, B)
        ad = solve_ad_oneshot(net, u_star.u, M, params, model)
        return DADResult(u_star=u_star, ad=ad, loss=ad.loss.total)

    fast_subgame = net.uniform_rx_ratio() is not None

    def subgame(u: np.ndarray) -> ADResult:
        if fast_subgame:
            return solve_ad_oneshot(net, u, M, params, model)
        return solve_ad_exhaustive(net, u, M, params, model)

    der = [int(i) for i in net.der_nodes]
    budget = min(B, len(der))
    count = sum(_ncomb(len(der), k) for k in range(budget + 1))
    if count > u_enum_cap:
        raise EnumerationCapExceeded(
            f"{count} security strategies exceed cap {u_enum_cap}"
        )
    best: tuple[ADResult, np.ndarray] | None = None
    for k in range(budget + 1):
        for combo in itertools.combinations(der, k):
            u = np.zeros(net.n + 1, dtype=int)
            u[list(combo)] = 1
            ad = subgame(u)
            if best is None or ad.loss.total < best[0].loss.total:
                best = (ad, u)
    assert best is not None
    ad, u = best
    return DADResult(u_star=SecurityStrategy(u=u, budget=B), ad=ad, loss=ad.loss.total)


@dataclass(frozen=True)
class StrategyComparison:
    loss1: float
    loss2: float

    @property
    def first_at_most_second(self) -> bool:
        return self.loss1 <= self.loss2 + 1e-9

    @property
    def second_at_most_first(self) -> bool:
        return self.loss2 <= self.loss1 + 1e-9

    @property
    def relation(self) -> str:
        if self.first_at_most_second and self.second_at_most_first:
            return "equal"
        return "u1 more secure" if self.first_at_most_second else "u2 more secure"


def compare_strategies(
    net: Network,
    u1: SecurityStrategy | np.ndarray,
    u2: SecurityStrategy | np.ndarray,
    M: int,
    params: CostParams,
    model: ModelTag,
) -> StrategyComparison:
    """Solve both sub-games and order the strategies by induced loss."""
    v1 = _as_vector(net, u1)
    v2 = _as_vector(net, u2)
    if net.uniform_rx_ratio() is not None:
        l1 = solve_ad_oneshot(net, v1, M, params, model).loss.total
        l2 = solve_ad_oneshot(net, v2, M, params, model).loss.total
    else:
        l1 = subgame_value_exhaustive(net, v1, M, params, model)
        l2 = subgame_value_exhaustive(net, v2, M, params, model)
    return StrategyComparison(loss1=l1, loss2=l2)


def _as_vector(net: Network, u) -> np.ndarray:
    if isinstance(u, SecurityStrategy):
        return u.u
    return np.asarray(u, dtype=int)


def _ncomb(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out
