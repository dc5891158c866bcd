"""Radial-tree network model with path/precedence algebra.

Nodes are dense integers 0..N with 0 the substation; every per-node quantity
is stored in a length-(N+1) array indexed by node id, and every per-edge
quantity is keyed by the downstream node of the edge. All electrical values
are per-unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundOrderingViolated,
    CycleDetected,
    DisconnectedNode,
    InvalidNetwork,
    NonPositiveImpedance,
    RootArgument,
)

NodeId = int


@dataclass(frozen=True)
class NodeSpec:
    """One row of a parsed network description (all values per-unit)."""

    id: int
    parent: int | None
    r_pu: float = 0.0
    x_pu: float = 0.0
    pc_nom: float = 0.0
    qc_nom: float = 0.0
    der_cap: float = 0.0
    nu_lo: float = 0.9025
    nu_hi: float = 1.1025
    W: float = 70000.0
    C: float = 7000.0
    gamma_lo: float = 0.5
    label: str | None = None


@dataclass(frozen=True)
class TreeIndex:
    """Derived tree structure, computed once at build time.

    ``paths[i]`` is the root-to-i node sequence excluding the root;
    ``subtree_mask[j, k]`` is 1.0 iff k lies in the subtree rooted at j, so
    ``subtree_mask @ s`` accumulates net loads into downstream edge flows, and
    its transpose is the path-membership matrix.
    """

    parent: np.ndarray            # (N+1,) int, parent[0] == -1
    depth: np.ndarray             # (N+1,) int, depth[0] == 0
    height: int
    order: np.ndarray             # (N+1,) BFS order, root first
    children: tuple[tuple[int, ...], ...]
    paths: tuple[tuple[int, ...], ...]
    leaves: tuple[int, ...]
    subtree_mask: np.ndarray      # (N+1, N+1) float
    shared_depth: np.ndarray      # (N+1, N+1) int, |P_i ∩ P_j|

    def level(self, h: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.depth == h)]

    def subtree(self, i: int) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.subtree_mask[i])]


class Precedence(enum.Enum):
    """Relative ordering of two nodes with respect to a pivot node."""

    J_PRECEDES_K = "j precedes k"
    K_PRECEDES_J = "k precedes j"
    EQUAL = "equal"


@dataclass(frozen=True)
class Network:
    """Immutable radial distribution network (per-unit).

    Arrays are length N+1 and indexed by node id; edge quantities (r, x, z)
    are keyed by the downstream node, with index 0 unused.
    """

    n: int                        # number of non-substation nodes
    parent: np.ndarray
    r: np.ndarray
    x: np.ndarray
    sc_nom: np.ndarray            # complex nominal demand
    der_cap: np.ndarray
    nu0: float
    nu_lo: np.ndarray
    nu_hi: np.ndarray
    mu_lo: float
    mu_hi: float
    W: np.ndarray
    C: np.ndarray
    gamma_lo: np.ndarray
    labels: tuple[str, ...]
    tree: TreeIndex = field(repr=False)
    Z: np.ndarray = field(repr=False)   # (N+1, N+1) complex common-path impedance

    @property
    def z(self) -> np.ndarray:
        return self.r + 1j * self.x

    @property
    def nodes(self) -> range:
        """All non-substation node ids."""
        return range(1, self.n + 1)

    @property
    def der_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.der_cap > 0.0)

    @property
    def rx_ratio(self) -> np.ndarray:
        """Per-edge r/x ratio, keyed by downstream node (index 0 is nan)."""
        out = np.full(self.n + 1, np.nan)
        out[1:] = self.r[1:] / self.x[1:]
        return out

    def uniform_rx_ratio(self, rtol: float = 1e-9) -> float | None:
        """The common r/x ratio K, or None if the ratios differ beyond rtol."""
        k = self.r[1:] / self.x[1:]
        k0 = float(k[0])
        if np.all(np.abs(k - k0) <= rtol * max(1.0, abs(k0))):
            return k0
        return None

    def label_of(self, i: int) -> str:
        return self.labels[i]

    def node_by_label(self, label: str) -> int:
        return self.labels.index(label)


def _build_tree_index(parent: np.ndarray) -> TreeIndex:
    n_total = parent.shape[0]
    children: list[list[int]] = [[] for _ in range(n_total)]
    for i in range(1, n_total):
        p = int(parent[i])
        if p < 0 or p >= n_total:
            raise DisconnectedNode(f"node {i} references unknown parent {p}")
        children[p].append(i)

    depth = np.full(n_total, -1, dtype=int)
    depth[0] = 0
    order = [0]
    queue = [0]
    while queue:
        node = queue.pop(0)
        for c in children[node]:
            depth[c] = depth[node] + 1
            order.append(c)
            queue.append(c)
    unreached = np.flatnonzero(depth < 0)
    if unreached.size:
        # Distinguish a cycle (nodes reachable from each other but not the root)
        # from a dangling reference for the error message.
        i = int(unreached[0])
        seen = set()
        k = i
        while k not in seen and k > 0:
            seen.add(k)
            k = int(parent[k])
        if k in seen:
            raise CycleDetected(f"nodes {sorted(seen)} form a parent cycle")
        raise DisconnectedNode(f"node {i} never reaches the substation")

    paths: list[tuple[int, ...]] = [()] * n_total
    for node in order[1:]:
        paths[node] = paths[int(parent[node])] + (node,)

    subtree_mask = np.zeros((n_total, n_total))
    for i in range(n_total):
        subtree_mask[i, i] = 1.0
    for node in reversed(order):
        p = int(parent[node])
        if p >= 0:
            subtree_mask[p] += subtree_mask[node]
    np.clip(subtree_mask, 0.0, 1.0, out=subtree_mask)

    # path_mask[i, k] = 1 iff edge k lies on the root path of i == k in Λ-transpose
    path_mask = subtree_mask.T.copy()
    path_mask[:, 0] = 0.0
    np.fill_diagonal(path_mask, 1.0)
    path_mask[0, :] = 0.0
    shared = (path_mask @ path_mask.T).astype(int)

    leaves = tuple(i for i in range(1, n_total) if not children[i])
    return TreeIndex(
        parent=parent,
        depth=depth,
        height=int(depth.max()) if n_total > 1 else 0,
        order=np.array(order, dtype=int),
        children=tuple(tuple(c) for c in children),
        paths=tuple(paths),
        leaves=leaves,
        subtree_mask=subtree_mask,
        shared_depth=shared,
    )


def build_network(
    nodes: list[NodeSpec],
    *,
    nu0: float = 1.0,
    mu_lo: float = 0.8,
    mu_hi: float = 1.21,
) -> Network:
    """Validate a parsed description and assemble the immutable Network.

    Raises CycleDetected / DisconnectedNode / NonPositiveImpedance /
    BoundOrderingViolated on the corresponding invariant failures.
    """
    if len(nodes) < 2:
        raise InvalidNetwork("a network needs the substation and at least one node")
    ids = [spec.id for spec in nodes]
    if len(set(ids)) != len(ids):
        raise InvalidNetwork("duplicate node ids in description")
    if sorted(ids) != list(range(len(ids))):
        raise InvalidNetwork("node ids must be dense integers 0..N")
    roots = [spec for spec in nodes if spec.parent is None]
    if len(roots) != 1 or roots[0].id != 0:
        raise InvalidNetwork("exactly node 0 must have a null parent")

    n_total = len(nodes)
    by_id = sorted(nodes, key=lambda s: s.id)
    parent = np.full(n_total, -1, dtype=int)
    for spec in by_id[1:]:
        if spec.parent is None or not (0 <= spec.parent < n_total):
            raise DisconnectedNode(f"node {spec.id} references unknown parent {spec.parent}")
        if spec.parent == spec.id:
            raise CycleDetected(f"node {spec.id} is its own parent")
        parent[spec.id] = spec.parent

    tree = _build_tree_index(parent)

    r = np.array([s.r_pu for s in by_id])
    x = np.array([s.x_pu for s in by_id])
    if np.any(r[1:] <= 0.0) or np.any(x[1:] <= 0.0):
        bad = [i for i in range(1, n_total) if r[i] <= 0 or x[i] <= 0]
        raise NonPositiveImpedance(f"edges into nodes {bad} need r > 0 and x > 0")

    nu_lo = np.array([s.nu_lo for s in by_id])
    nu_hi = np.array([s.nu_hi for s in by_id])
    if not (0.0 < mu_lo < nu_lo[1:].min() <= nu_hi[1:].max() < mu_hi):
        raise BoundOrderingViolated(
            f"need 0 < mu_lo < min nu_lo <= max nu_hi < mu_hi, got "
            f"mu_lo={mu_lo}, min nu_lo={nu_lo[1:].min()}, "
            f"max nu_hi={nu_hi[1:].max()}, mu_hi={mu_hi}"
        )

    gamma_lo = np.array([s.gamma_lo for s in by_id])
    if np.any(gamma_lo < 0.0) or np.any(gamma_lo > 1.0):
        raise InvalidNetwork("gamma_lo must lie in [0, 1]")
    W = np.array([s.W for s in by_id])
    C = np.array([s.C for s in by_id])
    if np.any(W < 0.0) or np.any(C < 0.0):
        raise InvalidNetwork("W and C must be nonnegative")
    der_cap = np.array([s.der_cap for s in by_id])
    if np.any(der_cap < 0.0):
        raise InvalidNetwork("der_cap must be nonnegative")

    sc_nom = np.array([complex(s.pc_nom, s.qc_nom) for s in by_id])
    labels = tuple(s.label if s.label is not None else str(s.id) for s in by_id)

    z = r + 1j * x
    path_mask = tree.subtree_mask.T.copy()
    Z = (path_mask * z[None, :]) @ path_mask.T
    Z[0, :] = 0.0
    Z[:, 0] = 0.0

    for arr in (parent, r, x, sc_nom, der_cap, nu_lo, nu_hi, W, C, gamma_lo, Z):
        arr.setflags(write=False)
    tree.subtree_mask.setflags(write=False)
    tree.shared_depth.setflags(write=False)

    return Network(
        n=n_total - 1,
        parent=parent,
        r=r,
        x=x,
        sc_nom=sc_nom,
        der_cap=der_cap,
        nu0=nu0,
        nu_lo=nu_lo,
        nu_hi=nu_hi,
        mu_lo=mu_lo,
        mu_hi=mu_hi,
        W=W,
        C=C,
        gamma_lo=gamma_lo,
        labels=labels,
        tree=tree,
        Z=Z,
    )


def common_path_impedance(net: Network, i: NodeId, j: NodeId) -> complex:
    """Z_ij: impedance summed over the edges shared by the root paths of i and j."""
    if i == 0 or j == 0:
        raise RootArgument("common path impedance is defined for non-substation nodes")
    return complex(net.Z[i, j])


def precedence_compare(net: Network, pivot: NodeId, j: NodeId, k: NodeId) -> Precedence:
    """Classify j vs k by nestedness of their shared root-paths with the pivot.

    On a tree the intersections P_pivot ∩ P_j and P_pivot ∩ P_k are both
    prefixes of P_pivot, so comparing their lengths is exhaustive.
    """
    if pivot == 0 or j == 0 or k == 0:
        raise RootArgument("precedence is defined for non-substation nodes")
    dj = int(net.tree.shared_depth[pivot, j])
    dk = int(net.tree.shared_depth[pivot, k])
    if dj < dk:
        return Precedence.J_PRECEDES_K
    if dk < dj:
        return Precedence.K_PRECEDES_J
    return Precedence.EQUAL
