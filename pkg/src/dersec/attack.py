"""Attacker-side computations: optimal false set-points, voltage-impact
algebra, pivot-node greedy attacks, and candidate optimal attack sets.

Compromising a DER moves its set-point from the defender's value to the
worst-case false set-point 0 - j*cap, which lowers the squared voltage at a
pivot node i by 2*Re(conj(Z_ij) * (sp_d_j + j*cap_j)) in the linear models;
everything here is built on that formula.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import EnumerationCapExceeded, RootArgument
from .network import Network
from .powerflow import ModelTag

_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class AttackStrategy:
    """Attack vector and false set-points (meaningful where delta = 1)."""

    delta: np.ndarray
    sp_a: np.ndarray

    @property
    def size(self) -> int:
        return int(self.delta.sum())


def attacker_setpoints(delta: np.ndarray, caps: np.ndarray) -> dict[int, complex]:
    """Worst-case false set-points: zero real power, full reactive withdrawal."""
    return {int(i): complex(0.0, -float(caps[i])) for i in np.flatnonzero(delta)}


def attack_strategy(net: Network, delta: np.ndarray) -> AttackStrategy:
    """AttackStrategy carrying the worst-case set-points for a given vector."""
    delta = np.asarray(delta)
    sp_a = np.zeros(net.n + 1, dtype=complex)
    idx = np.flatnonzero(delta)
    sp_a[idx] = -1j * net.der_cap[idx]
    return AttackStrategy(delta=delta.astype(int), sp_a=sp_a)


def effective_setpoints(
    net: Network,
    u: np.ndarray,
    delta: np.ndarray,
    sp_d: np.ndarray,
    sp_a: np.ndarray | None = None,
) -> np.ndarray:
    """Generation per node under the adversary model: a DER follows the false
    set-point iff it is targeted and not secured; otherwise the defender's."""
    if sp_a is None:
        sp_a = -1j * net.der_cap.astype(complex)
    compromised = (np.asarray(delta) == 1) & (np.asarray(u) == 0)
    sg = np.where(compromised, sp_a, np.asarray(sp_d, dtype=complex))
    sg = np.where(net.der_cap > 0.0, sg, 0.0 + 0.0j)
    sg[0] = 0.0
    return sg


def voltage_impact(
    net: Network,
    pivot: int,
    j: int,
    sp_d_j: complex,
    cap_j: float,
    model: ModelTag,
) -> float:
    """Squared-voltage drop at the pivot caused by compromising the DER at j."""
    if pivot == 0 or j == 0:
        raise RootArgument("voltage impact is defined for non-substation nodes")
    base = 2.0 * float(np.real(np.conj(net.Z[pivot, j]) * (sp_d_j + 1j * cap_j)))
    return model.load_scale * base


def impact_matrix(net: Network, sp_d: np.ndarray, model: ModelTag) -> np.ndarray:
    """D[i, j] = drop of nu_i when the DER at j is compromised (0 where no DER)."""
    w = np.asarray(sp_d, dtype=complex) + 1j * net.der_cap
    w = np.where(net.der_cap > 0.0, w, 0.0)
    w[0] = 0.0
    D = 2.0 * (np.real(net.Z) * np.real(w)[None, :] + np.imag(net.Z) * np.imag(w)[None, :])
    return model.load_scale * D


@dataclass(frozen=True)
class PivotAttack:
    """Greedy attack maximizing the voltage drop at one pivot node."""

    pivot: int
    delta: np.ndarray
    impact: float
    tied_pool: tuple[int, ...]    # boundary partition with equal marginal impact


def _vulnerable_nodes(net: Network, u: np.ndarray) -> np.ndarray:
    return np.flatnonzero((net.der_cap > 0.0) & (np.asarray(u) == 0))


def _impact_partitions(
    deltas: np.ndarray, nodes: np.ndarray
) -> list[list[int]]:
    """Group nodes into maximal equal-impact partitions, in decreasing order."""
    order = sorted((int(j) for j in nodes), key=lambda j: (-deltas[j], j))
    groups: list[list[int]] = []
    for j in order:
        if groups and np.isclose(
            deltas[groups[-1][0]], deltas[j], rtol=_TIE_RTOL, atol=1e-15
        ):
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def pivot_optimal_attack(
    net: Network,
    pivot: int,
    sp_d: np.ndarray,
    M: int,
    u: np.ndarray,
    model: ModelTag | None = None,
    rng: np.random.Generator | None = None,
) -> PivotAttack:
    """Take whole equal-impact partitions in decreasing order until the budget
    cut, then fill from the boundary partition deterministically (lowest id),
    or uniformly at random when ``rng`` is given; either completion has the
    same impact at the pivot."""
    if pivot == 0:
        raise RootArgument("pivot must be a non-substation node")
    from .powerflow import LPF

    model = model or LPF
    pool = _vulnerable_nodes(net, u)
    D = impact_matrix(net, sp_d, model)[pivot]
    delta = np.zeros(net.n + 1, dtype=int)
    if M <= 0 or pool.size == 0:
        return PivotAttack(pivot=pivot, delta=delta, impact=0.0, tied_pool=())

    groups = _impact_partitions(D, pool)
    taken: list[int] = []
    tied: tuple[int, ...] = ()
    remaining = min(M, pool.size)
    for g in groups:
        if remaining >= len(g):
            taken.extend(g)
            remaining -= len(g)
            if remaining == 0:
                break
        else:
            tied = tuple(g)
            if rng is None:
                taken.extend(sorted(g)[:remaining])
            else:
                taken.extend(rng.choice(sorted(g), size=remaining, replace=False))
            remaining = 0
            break
    delta[taken] = 1
    return PivotAttack(
        pivot=pivot,
        delta=delta,
        impact=float(D[np.flatnonzero(delta)].sum()),
        tied_pool=tied,
    )


def optimal_attack_fixed_response(
    net: Network,
    phi,
    M: int,
    u: np.ndarray,
    model: ModelTag | None = None,
    W: np.ndarray | None = None,
) -> np.ndarray:
    """Optimal attack vector against a fixed defender response.

    Evaluates every node as pivot, applies its greedy pivot attack to the
    no-attack linear state, and returns the attack of the pivot with the
    largest weighted soft-bound violation (ties to the lowest pivot id).
    ``W`` defaults to the network's violation weights.
    """
    from .powerflow import LPF, injection, solve_eps_lpf, solve_lpf

    model = model or LPF
    if W is None:
        W = net.W
    sg0 = effective_setpoints(net, np.asarray(u), np.zeros(net.n + 1, dtype=int), phi.sp_d)
    inj = injection(net, phi.gamma, sg0)
    if model.kind == "eps_lpf":
        base = solve_eps_lpf(net, inj, model.eps)
    else:
        base = solve_lpf(net, inj)

    best_score = -np.inf
    best_delta = np.zeros(net.n + 1, dtype=int)
    for pivot in net.nodes:
        atk = pivot_optimal_attack(net, pivot, phi.sp_d, M, u, model)
        score = W[pivot] * (net.nu_lo[pivot] - (base.nu[pivot] - atk.impact))
        if score > best_score + 1e-15:
            best_score = score
            best_delta = atk.delta
    return best_delta


@dataclass(frozen=True)
class CandidateAttacks:
    """Union over pivots of all budget completions of the boundary partition."""

    vectors: tuple[tuple[int, ...], ...]   # each a sorted tuple of attacked nodes
    collapsed: bool = False
    truncated_pivots: tuple[int, ...] = field(default_factory=tuple)

    def as_arrays(self, n: int) -> list[np.ndarray]:
        out = []
        for nodes in self.vectors:
            d = np.zeros(n + 1, dtype=int)
            d[list(nodes)] = 1
            out.append(d)
        return out


def candidate_attack_set(
    net: Network,
    sp_d: np.ndarray,
    M: int,
    u: np.ndarray,
    model: ModelTag | None = None,
    cap: int = 10_000,
    collapse_on_overflow: bool = True,
) -> CandidateAttacks:
    """Candidate optimal attack vectors for a fixed linear-model response.

    The boundary partition can make the union combinatorial; past ``cap``
    vectors the set falls back to one representative per pivot equivalence
    class (all completions of a pivot have identical impact at that pivot),
    unless ``collapse_on_overflow`` is cleared, in which case the op raises.
    """
    from .powerflow import LPF

    model = model or LPF
    pool = _vulnerable_nodes(net, u)
    if M <= 0 or pool.size == 0:
        return CandidateAttacks(vectors=((),))

    D = impact_matrix(net, sp_d, model)
    budget = min(M, pool.size)

    per_pivot: list[tuple[int, tuple[int, ...], tuple[int, ...], int]] = []
    total_estimate = 0
    for pivot in net.nodes:
        groups = _impact_partitions(D[pivot], pool)
        taken: list[int] = []
        boundary: tuple[int, ...] = ()
        remaining = budget
        for g in groups:
            if remaining >= len(g):
                taken.extend(g)
                remaining -= len(g)
                if remaining == 0:
                    break
            else:
                boundary = tuple(sorted(g))
                break
        fill = remaining if boundary else 0
        per_pivot.append((pivot, tuple(sorted(taken)), boundary, fill))
        total_estimate += _ncomb(len(boundary), fill)
        if total_estimate > cap and not collapse_on_overflow:
            raise EnumerationCapExceeded(
                f"candidate set exceeds cap {cap} (pivot {pivot} and beyond)"
            )

    vectors: set[tuple[int, ...]] = set()
    collapsed = False
    truncated: list[int] = []
    # enumerate tight boundaries first so only the combinatorial pivots collapse
    by_count = sorted(
        per_pivot, key=lambda item: (_ncomb(len(item[2]), item[3]), item[0])
    )
    for pivot, taken, boundary, fill in by_count:
        if not boundary:
            vectors.add(taken)
            continue
        count = _ncomb(len(boundary), fill)
        if len(vectors) + count > cap:
            collapsed = True
            truncated.append(pivot)
            vectors.add(tuple(sorted(taken + boundary[:fill])))
            continue
        for combo in itertools.combinations(boundary, fill):
            vectors.add(tuple(sorted(taken + combo)))
    return CandidateAttacks(
        vectors=tuple(sorted(vectors)),
        collapsed=collapsed,
        truncated_pivots=tuple(sorted(truncated)),
    )


def _ncomb(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out
