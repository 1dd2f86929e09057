"""Jitted chain drivers. Private; public API lives in samplers.py.

Each driver advances one chain and retains every ``stride``-th state after
``burn_in`` steps. Targets are dispatched by an integer kind tag with a flat
(mat, vec, s0, s1) parameter pack, so every kernel compiles once and caches.

Random draw order per step is part of the contract (the pure-python fallback
must replay the same stream): proposal/refresh normals first, then one uniform
for samplers with an accept test. Momentum samplers draw the initial momentum
before the loop.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .targets import KIND_GAUSSIAN, KIND_LMIXTURE, KIND_LOGISTIC, KIND_NN


@njit(cache=True)
def _potential(kind, q, mat, vec, s0, s1):
    if kind == KIND_GAUSSIAN:
        acc = 0.0
        for i in range(q.size):
            acc += q[i] * q[i]
        return 0.5 * acc
    elif kind == KIND_LMIXTURE:
        e1 = 0.5 * (36.0 * (q[0] + 1.0) ** 2 + (q[1] - 3.0) ** 2)
        e2 = 0.5 * ((q[0] - 2.0) ** 2 + 36.0 * (q[1] * q[1]))
        lo = min(e1, e2)
        return lo - np.log1p(np.exp(-abs(e1 - e2)))
    elif kind == KIND_NN:
        beta = s0
        alpha = s1
        acc = 0.0
        for i in range(mat.shape[0]):
            u = q[2] * np.tanh(q[0] * mat[i, 0] + q[1]) + q[3]
            r = mat[i, 1] - u
            acc += r * r
        prior = 0.0
        for j in range(q.size):
            prior += q[j] * q[j]
        return 0.5 * beta * acc + 0.5 * alpha * prior
    elif kind == KIND_LOGISTIC:
        beta = s0
        alpha = s1
        nll = 0.0
        for i in range(mat.shape[0]):
            z = 0.0
            for j in range(q.size):
                z += mat[i, j] * q[j]
            # softplus(z) - y z, stable for large |z|
            sp = max(z, 0.0) + np.log1p(np.exp(-abs(z)))
            nll += sp - vec[i] * z
        prior = 0.0
        for j in range(q.size):
            prior += q[j] * q[j]
        return beta * nll + 0.5 * alpha * prior
    return np.nan


@njit(cache=True)
def _gradient(kind, q, mat, vec, s0, s1, out):
    if kind == KIND_GAUSSIAN:
        for i in range(q.size):
            out[i] = q[i]
    elif kind == KIND_LMIXTURE:
        e1 = 0.5 * (36.0 * (q[0] + 1.0) ** 2 + (q[1] - 3.0) ** 2)
        e2 = 0.5 * ((q[0] - 2.0) ** 2 + 36.0 * (q[1] * q[1]))
        gap = e1 - e2
        if gap > 700.0:
            gap = 700.0
        elif gap < -700.0:
            gap = -700.0
        w1 = 1.0 / (1.0 + np.exp(gap))
        w2 = 1.0 - w1
        out[0] = w1 * (36.0 * (q[0] + 1.0)) + w2 * (q[0] - 2.0)
        out[1] = w1 * (q[1] - 3.0) + w2 * (36.0 * q[1])
    elif kind == KIND_NN:
        beta = s0
        alpha = s1
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        g3 = 0.0
        for i in range(mat.shape[0]):
            x = mat[i, 0]
            t = np.tanh(q[0] * x + q[1])
            r = mat[i, 1] - (q[2] * t + q[3])
            sech2 = 1.0 - t * t
            g0 -= r * q[2] * x * sech2
            g1 -= r * q[2] * sech2
            g2 -= r * t
            g3 -= r
        out[0] = beta * g0 + alpha * q[0]
        out[1] = beta * g1 + alpha * q[1]
        out[2] = beta * g2 + alpha * q[2]
        out[3] = beta * g3 + alpha * q[3]
    elif kind == KIND_LOGISTIC:
        beta = s0
        alpha = s1
        for j in range(q.size):
            out[j] = alpha * q[j]
        for i in range(mat.shape[0]):
            z = 0.0
            for j in range(q.size):
                z += mat[i, j] * q[j]
            if z >= 0.0:
                s = 1.0 / (1.0 + np.exp(-z))
            else:
                ez = np.exp(z)
                s = ez / (1.0 + ez)
            w = beta * (s - vec[i])
            for j in range(q.size):
                out[j] += w * mat[i, j]
    else:
        for i in range(q.size):
            out[i] = np.nan


@njit(cache=True)
def _all_finite(v):
    for i in range(v.size):
        if not np.isfinite(v[i]):
            return False
    return True


@njit(cache=True)
def run_em(kind, mat, vec, s0, s1, q0, dt, n_steps, burn_in, stride, rng):
    d = q0.size
    keep = (n_steps - burn_in) // stride if n_steps > burn_in else 0
    out = np.empty((keep, d))
    q = q0.copy()
    g = np.empty(d)
    b = np.sqrt(2.0 * dt)
    idx = 0
    for step in range(1, n_steps + 1):
        _gradient(kind, q, mat, vec, s0, s1, g)
        if not _all_finite(g):
            return out[:idx], idx, step, q, -1.0
        for i in range(d):
            q[i] = q[i] - dt * g[i] + b * rng.standard_normal()
        if step > burn_in and (step - burn_in) % stride == 0:
            out[idx] = q
            idx += 1
    return out, idx, 0, q, 1.0


@njit(cache=True)
def run_mala(kind, mat, vec, s0, s1, q0, dt, n_steps, burn_in, stride, rng):
    d = q0.size
    keep = (n_steps - burn_in) // stride if n_steps > burn_in else 0
    out = np.empty((keep, d))
    q = q0.copy()
    qp = np.empty(d)
    g = np.empty(d)
    gp = np.empty(d)
    u_cur = _potential(kind, q, mat, vec, s0, s1)
    _gradient(kind, q, mat, vec, s0, s1, g)
    if not (_all_finite(g) and np.isfinite(u_cur)):
        return out[:0], 0, 1, q, -1.0
    b = np.sqrt(2.0 * dt)
    inv4dt = 1.0 / (4.0 * dt)
    accepted = 0
    idx = 0
    for step in range(1, n_steps + 1):
        fwd = 0.0
        for i in range(d):
            xi = rng.standard_normal()
            qp[i] = q[i] - dt * g[i] + b * xi
            fwd += 2.0 * dt * xi * xi
        u = rng.random()
        u_prop = _potential(kind, qp, mat, vec, s0, s1)
        _gradient(kind, qp, mat, vec, s0, s1, gp)
        if _all_finite(gp) and np.isfinite(u_prop):
            bwd = 0.0
            for i in range(d):
                r = q[i] - qp[i] + dt * gp[i]
                bwd += r * r
            log_ratio = u_cur - u_prop + (fwd - bwd) * inv4dt
            if np.log(u) < log_ratio:
                for i in range(d):
                    q[i] = qp[i]
                    g[i] = gp[i]
                u_cur = u_prop
                accepted += 1
        if step > burn_in and (step - burn_in) % stride == 0:
            out[idx] = q
            idx += 1
    return out, idx, 0, q, accepted / n_steps


@njit(cache=True)
def _leapfrog(kind, mat, vec, s0, s1, q, p, g, dt, n_sub):
    # g holds grad U(q) on entry and on (successful) exit
    ok = True
    for i in range(q.size):
        p[i] -= 0.5 * dt * g[i]
    for sub in range(n_sub):
        for i in range(q.size):
            q[i] += dt * p[i]
        _gradient(kind, q, mat, vec, s0, s1, g)
        if not _all_finite(g):
            ok = False
            break
        if sub < n_sub - 1:
            for i in range(q.size):
                p[i] -= dt * g[i]
    if ok:
        for i in range(q.size):
            p[i] -= 0.5 * dt * g[i]
    return ok


@njit(cache=True)
def run_hmc(kind, mat, vec, s0, s1, q0, dt, n_steps, burn_in, stride,
            n_leapfrog, rng):
    d = q0.size
    keep = (n_steps - burn_in) // stride if n_steps > burn_in else 0
    out = np.empty((keep, d))
    q = q0.copy()
    qn = np.empty(d)
    p = np.empty(d)
    g = np.empty(d)
    u_cur = _potential(kind, q, mat, vec, s0, s1)
    _gradient(kind, q, mat, vec, s0, s1, g)
    if not (_all_finite(g) and np.isfinite(u_cur)):
        return out[:0], 0, 1, q, -1.0
    g_cur = g.copy()
    accepted = 0
    idx = 0
    for step in range(1, n_steps + 1):
        kin = 0.0
        for i in range(d):
            p[i] = rng.standard_normal()
            kin += p[i] * p[i]
            qn[i] = q[i]
            g[i] = g_cur[i]
        u = rng.random()
        h0 = u_cur + 0.5 * kin
        ok = _leapfrog(kind, mat, vec, s0, s1, qn, p, g, dt, n_leapfrog)
        if ok:
            u_prop = _potential(kind, qn, mat, vec, s0, s1)
            kin = 0.0
            for i in range(d):
                kin += p[i] * p[i]
            h1 = u_prop + 0.5 * kin
            if np.isfinite(h1) and np.log(u) < h0 - h1:
                for i in range(d):
                    q[i] = qn[i]
                    g_cur[i] = g[i]
                u_cur = u_prop
                accepted += 1
        if step > burn_in and (step - burn_in) % stride == 0:
            out[idx] = q
            idx += 1
    return out, idx, 0, q, accepted / n_steps


@njit(cache=True)
def run_ghmc(kind, mat, vec, s0, s1, q0, dt, n_steps, burn_in, stride,
             angle, flip, rng):
    d = q0.size
    keep = (n_steps - burn_in) // stride if n_steps > burn_in else 0
    out = np.empty((keep, d))
    q = q0.copy()
    qn = np.empty(d)
    p = np.empty(d)
    pn = np.empty(d)
    g = np.empty(d)
    u_cur = _potential(kind, q, mat, vec, s0, s1)
    _gradient(kind, q, mat, vec, s0, s1, g)
    if not (_all_finite(g) and np.isfinite(u_cur)):
        return out[:0], 0, 1, q, -1.0
    g_cur = g.copy()
    for i in range(d):
        p[i] = rng.standard_normal()
    ca = np.cos(angle)
    sa = np.sin(angle)
    accepted = 0
    idx = 0
    for step in range(1, n_steps + 1):
        kin = 0.0
        for i in range(d):
            p[i] = ca * p[i] + sa * rng.standard_normal()
            kin += p[i] * p[i]
            qn[i] = q[i]
            pn[i] = p[i]
            g[i] = g_cur[i]
        u = rng.random()
        h0 = u_cur + 0.5 * kin
        ok = _leapfrog(kind, mat, vec, s0, s1, qn, pn, g, dt, 1)
        acc = False
        if ok:
            u_prop = _potential(kind, qn, mat, vec, s0, s1)
            kin = 0.0
            for i in range(d):
                kin += pn[i] * pn[i]
            h1 = u_prop + 0.5 * kin
            if np.isfinite(h1) and np.log(u) < h0 - h1:
                acc = True
                for i in range(d):
                    q[i] = qn[i]
                    g_cur[i] = g[i]
                u_cur = u_prop
                accepted += 1
        # exactness requires the momentum sign to depend on the branch: the
        # accept test uses the involutive proposal (leapfrog then negate),
        # and the flip variant appends one more unconditional negation
        if flip:
            if acc:
                for i in range(d):
                    p[i] = pn[i]
            else:
                for i in range(d):
                    p[i] = -p[i]
        else:
            if acc:
                for i in range(d):
                    p[i] = -pn[i]
        if step > burn_in and (step - burn_in) % stride == 0:
            out[idx] = q
            idx += 1
    return out, idx, 0, q, accepted / n_steps


@njit(cache=True)
def run_langevin(kind, mat, vec, s0, s1, q0, dt, n_steps, burn_in, stride,
                 gamma, rng):
    d = q0.size
    keep = (n_steps - burn_in) // stride if n_steps > burn_in else 0
    out = np.empty((keep, d))
    q = q0.copy()
    p = np.empty(d)
    g = np.empty(d)
    _gradient(kind, q, mat, vec, s0, s1, g)
    if not _all_finite(g):
        return out[:0], 0, 1, q, -1.0
    for i in range(d):
        p[i] = rng.standard_normal()
    c1sq = 1.0 - 2.0 * gamma * dt
    if c1sq < 0.0:
        c1sq = 0.0
    c1 = np.sqrt(c1sq)
    c2 = np.sqrt(2.0 * gamma * dt)
    half = 0.5 * dt
    idx = 0
    for step in range(1, n_steps + 1):
        for i in range(d):
            p[i] -= half * g[i]
            q[i] += half * p[i]
        for i in range(d):
            p[i] = c1 * p[i] + c2 * rng.standard_normal()
        for i in range(d):
            q[i] += half * p[i]
        _gradient(kind, q, mat, vec, s0, s1, g)
        if not _all_finite(g):
            return out[:idx], idx, step, q, -1.0
        for i in range(d):
            p[i] -= half * g[i]
        if step > burn_in and (step - burn_in) % stride == 0:
            out[idx] = q
            idx += 1
    return out, idx, 0, q, 1.0
