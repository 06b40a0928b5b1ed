"""Communication graphs and their Laplacians.

Vertices are numbered 1..n in the public interface. Edges are unordered
pairs. Three weight policies are supported: plain 0/1 weights, a fixed
symmetric weight map, and distance weights that grow edges permanently
whenever two agents pass within a threshold of each other.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, PolicyError


@dataclass(frozen=True)
class Unweighted:
    """Every edge carries weight 1."""


@dataclass(frozen=True)
class StaticWeights:
    """Fixed positive weight per edge, keyed by (i, j) with i < j."""

    weights: dict

    def weight(self, i, j):
        key = (i, j) if i < j else (j, i)
        return self.weights[key]


@dataclass(frozen=True)
class DistanceWeighted:
    """Edge weight equals the current inter-agent distance.

    Pairs closer than `threshold` become edges and stay edges.
    """

    threshold: float = 10.0


def _normalize_edges(n, edges):
    out = set()
    for e in edges:
        i, j = e
        i, j = int(i), int(j)
        if i == j:
            raise DomainError(f"self-loop on vertex {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise DomainError(f"edge ({i},{j}) outside vertex range 1..{n}")
        out.add((i, j) if i < j else (j, i))
    return frozenset(out)


@dataclass(frozen=True)
class Network:
    """Undirected communication graph over agents 1..n.

    Args:
        n: number of vertices, at least 1.
        edges: iterable of (i, j) pairs, 1-indexed, i != j. Order within
            a pair does not matter; duplicates collapse.
        policy: Unweighted (default), StaticWeights, or DistanceWeighted.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)
    policy: object = field(default_factory=Unweighted)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"need at least one vertex, got n={self.n}")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))
        if isinstance(self.policy, StaticWeights):
            for e in self.edges:
                if e not in self.policy.weights:
                    raise DomainError(f"no weight given for edge {e}")
            for e, w in self.policy.weights.items():
                if e not in self.edges:
                    raise DomainError(f"weight given for non-edge {e}")
                if not w > 0.0:
                    raise DomainError(f"weight for edge {e} must be positive")
        elif isinstance(self.policy, DistanceWeighted):
            if not self.policy.threshold > 0.0:
                raise DomainError("distance threshold must be positive")

    def degree(self, i):
        """Number of edges incident to vertex i (1-indexed)."""
        return sum(1 for (a, b) in self.edges if a == i or b == i)

    def neighbors(self, i):
        out = set()
        for a, b in self.edges:
            if a == i:
                out.add(b)
            elif b == i:
                out.add(a)
        return out


@dataclass(frozen=True)
class Laplacian:
    """A graph Laplacian snapshot: the matrix, its network, and a time tag."""

    matrix: np.ndarray
    source: Network
    time: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = self.source.n
        if m.shape != (n, n):
            raise DimensionError(
                f"Laplacian shape {m.shape} does not match n={n}")
        if np.max(np.abs(m - m.T), initial=0.0) != 0.0:
            raise DomainError("Laplacian must be exactly symmetric")
        if np.max(np.abs(m.sum(axis=1)), initial=0.0) > 1e-12:
            raise DomainError("Laplacian rows must sum to zero")
        off = m - np.diag(np.diag(m))
        if off.size and off.max(initial=0.0) > 0.0:
            raise DomainError("off-diagonal Laplacian entries must be <= 0")
        object.__setattr__(self, "matrix", m)


def _laplacian_from_weights(net, weight_of, t):
    n = net.n
    a = np.zeros((n, n))
    for i, j in net.edges:
        w = weight_of(i, j)
        a[i - 1, j - 1] = w
        a[j - 1, i - 1] = w
    m = np.diag(a.sum(axis=1)) - a
    return Laplacian(matrix=m, source=net, time=t)


def laplacian(net):
    """Laplacian of a network whose weights do not depend on positions.

    Raises:
        PolicyError: for a DistanceWeighted network, whose Laplacian only
            exists relative to agent positions; use weighted_laplacian_at.
    """
    if isinstance(net.policy, DistanceWeighted):
        raise PolicyError(
            "distance-weighted Laplacian needs positions; "
            "use weighted_laplacian_at")
    if isinstance(net.policy, StaticWeights):
        return _laplacian_from_weights(net, net.policy.weight, 0.0)
    return _laplacian_from_weights(net, lambda i, j: 1.0, 0.0)


def _check_positions(net, positions):
    q = np.asarray(positions, dtype=float)
    if q.ndim != 2 or q.shape[0] != net.n:
        raise DimensionError(
            f"positions shape {q.shape} does not match n={net.n} agents")
    return q


def add_proximity_edges(net, positions):
    """Grow a distance-weighted network by its proximity rule.

    Any vertex pair strictly closer than the policy threshold becomes an
    edge; existing edges are kept regardless of distance. Networks with
    other policies are returned unchanged.

    Returns:
        (network, added): the possibly augmented network and whether any
        new edge appeared.
    """
    if not isinstance(net.policy, DistanceWeighted):
        return net, False
    q = _check_positions(net, positions)
    new = set()
    thr = net.policy.threshold
    for i in range(1, net.n + 1):
        for j in range(i + 1, net.n + 1):
            if (i, j) in net.edges:
                continue
            if np.linalg.norm(q[i - 1] - q[j - 1]) < thr:
                new.add((i, j))
    if not new:
        return net, False
    grown = Network(net.n, net.edges | new, net.policy)
    return grown, True


def weighted_laplacian_at(net, positions, t=0.0):
    """Laplacian evaluated at the given agent positions.

    StaticWeights networks ignore the position values (only the shape is
    checked). DistanceWeighted networks first grow edges by the proximity
    rule, then weight every edge by the current inter-agent distance; the
    returned snapshot's `source` is the grown network.

    Args:
        positions: (n, r) array of agent positions.
        t: time tag stored on the snapshot.
    """
    q = _check_positions(net, positions)
    if isinstance(net.policy, DistanceWeighted):
        grown, _ = add_proximity_edges(net, q)
        return _laplacian_from_weights(
            grown, lambda i, j: float(np.linalg.norm(q[i - 1] - q[j - 1])), t)
    if isinstance(net.policy, StaticWeights):
        return _laplacian_from_weights(net, net.policy.weight, t)
    return _laplacian_from_weights(net, lambda i, j: 1.0, t)


def is_connected(net):
    """Breadth-first reachability of every vertex from vertex 1."""
    if net.n == 1:
        return True
    seen = {1}
    queue = deque([1])
    while queue:
        v = queue.popleft()
        for u in net.neighbors(v):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return len(seen) == net.n


def fully_connected_vertices(net):
    """Vertices adjacent to every other vertex, as a set of 1-based ids."""
    return {i for i in range(1, net.n + 1) if net.degree(i) == net.n - 1}
