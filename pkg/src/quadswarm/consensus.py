"""The linear agreement protocol q_dot = -L q and its analysis helpers.

States live in an (n, r) matrix: one row per agent, one column per
coordinate. The protocol conserves column sums, so all agents converge
to the centroid of the initial rows when the graph is connected.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedError, DomainError
from .network import (DistanceWeighted, Laplacian, Network, is_connected,
                      laplacian, weighted_laplacian_at)
from .numerics import sym_eigen


@dataclass(frozen=True)
class ConsensusTrajectory:
    """Sampled run of the agreement protocol.

    Attributes:
        times: (K,) sample times.
        states: (K, n, r) agent states at those times.
        laplacian_log: list of (time, Laplacian) snapshots, one at t=0
            plus one whenever the proximity rule added edges.
    """

    times: np.ndarray
    states: np.ndarray
    laplacian_log: list


def consensus_point(q0):
    """Centroid the protocol converges to: the mean of the initial rows."""
    q0 = np.asarray(q0, dtype=float)
    if q0.ndim != 2:
        raise DomainError(f"expected an (n, r) state matrix, got {q0.shape}")
    return q0.mean(axis=0)


def closed_form_state(lap, q0, t):
    """Exact protocol state at time t for a constant Laplacian.

    Diagonalizes L = U diag(w) U^T and applies exp(-L t) spectrally.

    Args:
        lap: Laplacian snapshot (or a plain symmetric matrix).
        q0: (n, r) initial state.
        t: elapsed time, t >= 0.
    """
    m = lap.matrix if isinstance(lap, Laplacian) else np.asarray(lap, float)
    q0 = np.asarray(q0, dtype=float)
    if q0.ndim != 2 or q0.shape[0] != m.shape[0]:
        raise DomainError(
            f"state shape {q0.shape} does not match Laplacian {m.shape}")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got {t!r}")
    w, u = sym_eigen(m)
    decay = np.exp(-w * t)
    return u @ (decay[:, None] * (u.T @ q0))


def lyapunov(q, qstar):
    """Disagreement energy 0.5 * sum of squared offsets from qstar."""
    q = np.asarray(q, dtype=float)
    qstar = np.asarray(qstar, dtype=float)
    return 0.5 * float(np.sum((q - qstar) ** 2))


def convergence_rate(lap):
    """Smallest nonzero Laplacian eigenvalue (the algebraic connectivity).

    Raises:
        DisconnectedError: if the second-smallest eigenvalue is <= 1e-9,
            i.e. the underlying graph is not connected.
    """
    m = lap.matrix if isinstance(lap, Laplacian) else np.asarray(lap, float)
    w, _ = sym_eigen(m)
    if len(w) < 2 or w[1] <= 1e-9:
        raise DisconnectedError("graph has no spectral gap; not connected")
    return float(w[1])


def integrate_protocol(net, q0, duration, dt=1e-3, stride=10, stop_tol=1e-4):
    """Integrate q_dot = -L q with fixed-step RK4.

    The Laplacian is evaluated at the start of each step and held
    constant across the step's stages. Distance-weighted networks are
    re-weighted every step and may gain edges as agents approach each
    other; each such change is recorded in the trajectory's
    laplacian_log. Integration stops early once every agent sits within
    stop_tol of the consensus point in every coordinate; the condition
    is checked whenever a sample is recorded.

    Args:
        net: communication graph; must be connected at t=0.
        q0: (n, r) initial state matrix.
        duration: time horizon, > 0.
        dt: step size, > 0.
        stride: record every stride-th step (plus t=0 and the end).
        stop_tol: early-stop threshold on max |q - consensus|.

    Returns:
        ConsensusTrajectory.
    """
    q = np.array(q0, dtype=float)
    if q.ndim != 2 or q.shape[0] != net.n:
        raise DomainError(
            f"state shape {q.shape} does not match n={net.n} agents")
    if not duration > 0.0:
        raise DomainError(f"duration must be positive, got {duration!r}")
    if not dt > 0.0:
        raise DomainError(f"step size must be positive, got {dt!r}")
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride!r}")
    if not is_connected(net):
        raise DisconnectedError("network is not connected at t=0")

    alpha = consensus_point(q)
    moving = isinstance(net.policy, DistanceWeighted)
    cur = net
    n = net.n
    complete = False
    if moving:
        lap = weighted_laplacian_at(cur, q, 0.0)
        cur = lap.source
        thr = net.policy.threshold
        adj = np.zeros((n, n), dtype=bool)
        for i, j in cur.edges:
            adj[i - 1, j - 1] = True
            adj[j - 1, i - 1] = True
        complete = int(adj.sum()) == n * (n - 1)
    else:
        lap = laplacian(net)
    log = [(0.0, lap)]

    times = [0.0]
    states = [q.copy()]
    steps = int(round(duration / dt))

    # For a matrix frozen across the step, the classical RK4 update on
    # q' = -m q collapses to the degree-4 Taylor polynomial of the step
    # propagator; same arithmetic as rk4_step, fewer temporaries.
    c1 = dt
    c2 = dt * dt / 2.0
    c3 = dt * c2 / 3.0
    c4 = dt * c3 / 4.0

    if not moving:
        # Constant Laplacian: the whole step propagator is one fixed
        # matrix, so precompute it and spend one matmul per step.
        m = lap.matrix
        prop = np.eye(n) - c1 * m + c2 * (m @ m) - c3 * (m @ m @ m) \
            + c4 * (m @ m @ m @ m)
        qn = np.empty_like(q)
        for k in range(steps):
            np.matmul(prop, q, out=qn)
            q, qn = qn, q
            if (k + 1) % stride == 0 or k == steps - 1:
                times.append((k + 1) * dt)
                states.append(q.copy())
                if np.max(np.abs(q - alpha)) < stop_tol:
                    break
        return ConsensusTrajectory(
            times=np.array(times),
            states=np.array(states),
            laplacian_log=log,
        )

    # Moving network: re-weight (and possibly grow) the graph from the
    # current positions every step. Once complete it can only
    # re-weight; that inner loop dominates the runtime, so it reuses
    # fixed buffers and views of them (q is updated in place, which
    # keeps the broadcast views below valid across steps).
    r = q.shape[1]
    coef = np.array([-c1, c2, -c3, c4])
    diff = np.empty((n, n, r))
    d2 = np.empty((n, n, r))
    sq = np.empty((n, n))
    mbuf = np.empty((n, n))
    mdiag = np.einsum("ii->i", mbuf)
    powers = np.empty((4, n, r))
    p0, p1_, p2_, p3_ = powers
    pflat = powers.reshape(4, n * r)
    acc = np.empty_like(q)
    accflat = acc.reshape(-1)
    qa = q[:, None, :]
    qb = q[None, :, :]
    subtract, multiply = np.subtract, np.multiply
    sqrt, negative, matmul, add = np.sqrt, np.negative, np.matmul, np.add
    reduce_last = np.add.reduce
    last = steps - 1

    for k in range(steps):
        subtract(qa, qb, diff)
        multiply(diff, diff, d2)
        reduce_last(d2, axis=2, out=sq)
        sqrt(sq, sq)
        if complete:
            negative(sq, mbuf)
            sq.sum(axis=1, out=mdiag)
        else:
            close = sq < thr
            np.fill_diagonal(close, False)
            new = close & ~adj
            w = np.where(adj | new, sq, 0.0)
            negative(w, mbuf)
            w.sum(axis=1, out=mdiag)
            if new.any():
                pairs = {(int(i) + 1, int(j) + 1)
                         for i, j in zip(*np.nonzero(np.triu(new)))}
                cur = Network(n, cur.edges | pairs, cur.policy)
                adj |= new | new.T
                complete = int(adj.sum()) == n * (n - 1)
                log.append((k * dt,
                            Laplacian(matrix=mbuf.copy(), source=cur,
                                      time=k * dt)))
        matmul(mbuf, q, p0)
        matmul(mbuf, p0, p1_)
        matmul(mbuf, p1_, p2_)
        matmul(mbuf, p2_, p3_)
        matmul(coef, pflat, accflat)
        add(q, acc, q)
        if (k + 1) % stride == 0 or k == last:
            times.append((k + 1) * dt)
            states.append(q.copy())
            if np.max(np.abs(q - alpha)) < stop_tol:
                break

    return ConsensusTrajectory(
        times=np.array(times),
        states=np.array(states),
        laplacian_log=log,
    )


def straightness_residual(traj, agent):
    """Largest distance from an agent's path to its ideal straight line.

    The reference line runs from the agent's initial state to the
    consensus point of the whole group. Agents adjacent to everyone ride
    this line exactly; others bow away from it.

    Args:
        traj: ConsensusTrajectory.
        agent: 1-based agent index.
    """
    k, n, _ = traj.states.shape
    if not (1 <= agent <= n):
        raise DomainError(f"agent {agent} outside 1..{n}")
    path = traj.states[:, agent - 1, :]
    p0 = path[0]
    alpha = consensus_point(traj.states[0])
    d = alpha - p0
    span = np.linalg.norm(d)
    offsets = path - p0
    if span < 1e-12:
        return float(np.max(np.linalg.norm(offsets, axis=1), initial=0.0))
    u = d / span
    along = offsets @ u
    perp = offsets - along[:, None] * u
    return float(np.max(np.linalg.norm(perp, axis=1), initial=0.0))
