"""Compiled fixed-step RK4 loops.

All kernels work on a uniform grid with controls known at grid points and at
interval midpoints. Failures are reported through a returned step index
(-1 means success) so the Python wrappers can raise proper exceptions.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def midpoints_cubic(y):
    """Four-point Lagrange interpolation of ``y`` at interval midpoints."""
    n = y.shape[0]
    m = np.empty(n - 1)
    if n < 4:
        for j in range(n - 1):
            m[j] = 0.5 * (y[j] + y[j + 1])
        return m
    for j in range(n - 1):
        if j == 0:
            m[j] = (5.0 * y[0] + 15.0 * y[1] - 5.0 * y[2] + y[3]) / 16.0
        elif j == n - 2:
            m[j] = (5.0 * y[n - 1] + 15.0 * y[n - 2] - 5.0 * y[n - 3] + y[n - 4]) / 16.0
        else:
            m[j] = (-y[j - 1] + 9.0 * y[j] + 9.0 * y[j + 1] - y[j + 2]) / 16.0
    return m


@njit(cache=True)
def sir_forward(dt, k, k_mid, s0, i0, neg_tol):
    """RK4 for s' = -k s i, i' = k s i - i.

    Returns (s, i, stage_i, fail) where stage_i[j] holds the infected value
    used by RK stages 2, 3 and 4 of step j.
    """
    n = k.shape[0]
    s = np.empty(n)
    i = np.empty(n)
    stage_i = np.empty((n - 1, 3))
    s[0] = s0
    i[0] = i0
    h2 = 0.5 * dt
    for j in range(n - 1):
        a = s[j]
        b = i[j]
        ka = k[j]
        kb = k_mid[j]
        kc = k[j + 1]
        f1s = -ka * a * b
        f1i = ka * a * b - b
        a2 = a + h2 * f1s
        b2 = b + h2 * f1i
        f2s = -kb * a2 * b2
        f2i = kb * a2 * b2 - b2
        a3 = a + h2 * f2s
        b3 = b + h2 * f2i
        f3s = -kb * a3 * b3
        f3i = kb * a3 * b3 - b3
        a4 = a + dt * f3s
        b4 = b + dt * f3i
        f4s = -kc * a4 * b4
        f4i = kc * a4 * b4 - b4
        stage_i[j, 0] = b2
        stage_i[j, 1] = b3
        stage_i[j, 2] = b4
        s[j + 1] = a + dt / 6.0 * (f1s + 2.0 * f2s + 2.0 * f3s + f4s)
        i[j + 1] = b + dt / 6.0 * (f1i + 2.0 * f2i + 2.0 * f3i + f4i)
        sn = s[j + 1]
        inn = i[j + 1]
        if not (np.isfinite(sn) and np.isfinite(inn)) or sn < -neg_tol or inn < -neg_tol:
            return s, i, stage_i, j + 1
    return s, i, stage_i, -1


@njit(cache=True)
def individual_forward(dt, kap, kap_mid, pop_i, stage_i, ps0, pi0, neg_tol):
    """RK4 for psi_s' = -kappa psi_s i, psi_i' = kappa psi_s i - psi_i.

    ``stage_i`` supplies the population infected fraction at RK stages 2-4,
    which makes this scheme identical to a joint RK4 of population and
    individual equations.
    """
    n = kap.shape[0]
    ps = np.empty(n)
    pi = np.empty(n)
    ps[0] = ps0
    pi[0] = pi0
    h2 = 0.5 * dt
    for j in range(n - 1):
        a = ps[j]
        b = pi[j]
        ka = kap[j]
        kb = kap_mid[j]
        kc = kap[j + 1]
        c1 = pop_i[j]
        c2 = stage_i[j, 0]
        c3 = stage_i[j, 1]
        c4 = stage_i[j, 2]
        f1s = -ka * a * c1
        f1i = ka * a * c1 - b
        a2 = a + h2 * f1s
        b2 = b + h2 * f1i
        f2s = -kb * a2 * c2
        f2i = kb * a2 * c2 - b2
        a3 = a + h2 * f2s
        b3 = b + h2 * f2i
        f3s = -kb * a3 * c3
        f3i = kb * a3 * c3 - b3
        a4 = a + dt * f3s
        b4 = b + dt * f3i
        f4s = -kc * a4 * c4
        f4i = kc * a4 * c4 - b4
        ps[j + 1] = a + dt / 6.0 * (f1s + 2.0 * f2s + 2.0 * f3s + f4s)
        pi[j + 1] = b + dt / 6.0 * (f1i + 2.0 * f2i + 2.0 * f3i + f4i)
        sn = ps[j + 1]
        inn = pi[j + 1]
        if not (np.isfinite(sn) and np.isfinite(inn)) or sn < -neg_tol or inn < -neg_tol:
            return ps, pi, j + 1
    return ps, pi, -1


@njit(cache=True)
def _rhs(x, y, kap, inf, haz, rho, alpha, beta, kstar, best_response, kap_max):
    if best_response:
        kap = kstar - (x - y) * inf / (2.0 * beta)
        if kap < 0.0:
            kap = 0.0
        elif kap > kap_max:
            kap = kap_max
    d = kap - kstar
    fx = (rho + haz) * x + beta * d * d + (x - y) * kap * inf
    fy = (rho + haz + 1.0) * y + alpha * (1.0 + haz / (rho + 1.0))
    return fx, fy


@njit(cache=True)
def adjoint_backward(dt, kap, kap_mid, inf, inf_mid, haz, haz_mid,
                     rho, alpha, beta, kstar, vs_end, vi_end, best_response):
    """Backward RK4 for the rescaled values (v_s, v_i) from the last grid point.

    With ``best_response`` the control is not read from ``kap`` but taken as
    the pointwise Hamiltonian maximiser of the current values, clipped to
    [0, kstar].
    """
    n = kap.shape[0]
    vs = np.empty(n)
    vi = np.empty(n)
    vs[n - 1] = vs_end
    vi[n - 1] = vi_end
    h2 = 0.5 * dt
    for j in range(n - 1, 0, -1):
        x = vs[j]
        y = vi[j]
        m = j - 1
        f1x, f1y = _rhs(x, y, kap[j], inf[j], haz[j], rho, alpha, beta, kstar,
                        best_response, kstar)
        x2 = x - h2 * f1x
        y2 = y - h2 * f1y
        f2x, f2y = _rhs(x2, y2, kap_mid[m], inf_mid[m], haz_mid[m], rho, alpha,
                        beta, kstar, best_response, kstar)
        x3 = x - h2 * f2x
        y3 = y - h2 * f2y
        f3x, f3y = _rhs(x3, y3, kap_mid[m], inf_mid[m], haz_mid[m], rho, alpha,
                        beta, kstar, best_response, kstar)
        x4 = x - dt * f3x
        y4 = y - dt * f3y
        f4x, f4y = _rhs(x4, y4, kap[m], inf[m], haz[m], rho, alpha, beta, kstar,
                        best_response, kstar)
        vs[m] = x - dt / 6.0 * (f1x + 2.0 * f2x + 2.0 * f3x + f4x)
        vi[m] = y - dt / 6.0 * (f1y + 2.0 * f2y + 2.0 * f3y + f4y)
    return vs, vi
