"""Shared numeric kernel.

Skew-symmetric matrices, Euler-angle kinematics, a cyclic Jacobi
eigensolver for symmetric matrices, and a fixed-step RK4 integrator.
All angles are radians and all arrays are float64.
"""

import math

import numpy as np

from .errors import ConvergenceError, DomainError, GimbalLockError

# Pitch values within this distance of +-pi/2 count as gimbal lock.
GIMBAL_EPS = 1e-6

# Jacobi sweep budget and the relative off-diagonal mass threshold that
# counts as converged.
_JACOBI_MAX_SWEEPS = 100
_JACOBI_TOL = 1e-13


def hat(y):
    """Skew-symmetric matrix of a 3-vector.

    hat(y) @ z equals the cross product y x z for any 3-vector z.

    Args:
        y: length-3 array-like.

    Returns:
        3x3 ndarray, antisymmetric.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (3,):
        raise DomainError(f"hat expects a 3-vector, got shape {y.shape}")
    y1, y2, y3 = y
    return np.array([
        [0.0, -y3, y2],
        [y3, 0.0, -y1],
        [-y2, y1, 0.0],
    ])


def rotation_from_euler(phi, theta, psi):
    """Body-to-inertial rotation matrix for roll, pitch, yaw.

    Composition order is yaw about z, then pitch about y, then roll
    about x: R = Rz(psi) Ry(theta) Rx(phi). Columns are the body axes
    expressed in the inertial frame.

    Pitch must lie strictly inside (-pi/2, pi/2). Roll and yaw are
    unrestricted so integrated attitudes can pass +-pi without
    wraparound; normalize only when reporting.

    Returns:
        3x3 orthogonal ndarray with determinant +1.
    """
    if not abs(theta) < math.pi / 2:
        raise DomainError(
            f"pitch {theta!r} outside (-pi/2, pi/2); rotation chart invalid")
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def euler_rate_matrix(phi, theta):
    """Map from body angular velocity to Euler-angle rates.

    eta_dot = euler_rate_matrix(phi, theta) @ Omega, where eta is
    (roll, pitch, yaw). The map blows up as pitch approaches +-pi/2;
    within GIMBAL_EPS of that the matrix is refused.

    Returns:
        3x3 ndarray.
    """
    if abs(theta) >= math.pi / 2 - GIMBAL_EPS:
        raise GimbalLockError(
            f"pitch {theta!r} within {GIMBAL_EPS} of +-pi/2")
    cf, sf = math.cos(phi), math.sin(phi)
    ct = math.cos(theta)
    tt = math.tan(theta)
    return np.array([
        [1.0, sf * tt, cf * tt],
        [0.0, cf, -sf],
        [0.0, sf / ct, cf / ct],
    ])


def sym_eigen(a):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps zero out off-diagonal entries pairwise until the largest
    off-diagonal magnitude falls below 1e-13 relative to the largest
    entry of the input. Deterministic: no pivot search, plain row-major
    sweep order.

    Args:
        a: (n, n) symmetric array-like. Asymmetry beyond 1e-12 is refused.

    Returns:
        (eigvals, vecs): eigenvalues ascending, vecs[:, k] the unit
        eigenvector for eigvals[k], so a @ vecs == vecs @ diag(eigvals).

    Raises:
        DomainError: non-square or asymmetric input.
        ConvergenceError: sweep budget exhausted.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        raise DomainError("empty matrix")
    if np.max(np.abs(a - a.T)) > 1e-12:
        raise DomainError("matrix is not symmetric within 1e-12")

    d = a.copy()
    vecs = np.eye(n)
    scale = np.max(np.abs(a))
    if scale == 0.0 or n == 1:
        return np.diag(d).copy(), vecs

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            row = np.abs(d[p, p + 1:])
            m = row.max()
            if m > off:
                off = m
        if off <= _JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = d[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # Classic symmetric Schur rotation zeroing d[p, q].
                tau = (d[q, q] - d[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                dpp = d[p, p]
                dqq = d[q, q]
                d[p, p] = dpp - t * apq
                d[q, q] = dqq + t * apq
                d[p, q] = 0.0
                d[q, p] = 0.0
                for k in range(n):
                    if k == p or k == q:
                        continue
                    dkp = d[k, p]
                    dkq = d[k, q]
                    d[k, p] = c * dkp - s * dkq
                    d[p, k] = d[k, p]
                    d[k, q] = s * dkp + c * dkq
                    d[q, k] = d[k, q]
                vp = vecs[:, p].copy()
                vq = vecs[:, q].copy()
                vecs[:, p] = c * vp - s * vq
                vecs[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi sweeps did not converge in {_JACOBI_MAX_SWEEPS} sweeps")

    eigvals = np.diag(d).copy()
    order = np.argsort(eigvals, kind="stable")
    return eigvals[order], vecs[:, order]


def rk4_step(derivative, x, t, dt):
    """One classical Runge-Kutta step of size dt.

    Args:
        derivative: callable (t, x) -> dx/dt, same shape as x.
        x: current state (scalar or ndarray).
        t: current time.
        dt: step size, strictly positive.

    Returns:
        The state advanced to t + dt. Errors raised by the derivative
        callable propagate unchanged.
    """
    if not dt > 0.0:
        raise DomainError(f"step size must be positive, got {dt!r}")
    half = 0.5 * dt
    k1 = derivative(t, x)
    k2 = derivative(t + half, x + half * k1)
    k3 = derivative(t + half, x + half * k2)
    k4 = derivative(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
