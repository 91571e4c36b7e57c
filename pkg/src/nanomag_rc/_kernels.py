"""Compiled inner loop for deterministic Heun integration.

Mirrors ``magnetics.heun_step`` exactly (same operation order per magnet) so
that the numpy path can serve as a reference in tests.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def _rhs_into(out, x, hd, bk, easy, alpha, gamma, ext, sttp, stta):
    n = x.shape[0]
    for i in range(n):
        pr = x[i, 0] * easy[i, 0] + x[i, 1] * easy[i, 1] + x[i, 2] * easy[i, 2]
        hx = bk[i] * pr * easy[i, 0] + hd[3 * i] + ext[i, 0]
        hy = bk[i] * pr * easy[i, 1] + hd[3 * i + 1] + ext[i, 1]
        hz = bk[i] * pr * easy[i, 2] + hd[3 * i + 2] + ext[i, 2]
        mx, my, mz = x[i, 0], x[i, 1], x[i, 2]
        cx = my * hz - mz * hy
        cy = mz * hx - mx * hz
        cz = mx * hy - my * hx
        dx = my * cz - mz * cy
        dy = mz * cx - mx * cz
        dz = mx * cy - my * cx
        pre = -gamma / (1.0 + alpha[i] ** 2)
        fx = pre * (cx + alpha[i] * dx)
        fy = pre * (cy + alpha[i] * dy)
        fz = pre * (cz + alpha[i] * dz)
        if stta[i] != 0.0:
            px, py, pz = sttp[i, 0], sttp[i, 1], sttp[i, 2]
            ex = my * pz - mz * py
            ey = mz * px - mx * pz
            ez = mx * py - my * px
            gx = my * ez - mz * ey
            gy = mz * ex - mx * ez
            gz = mx * ey - my * ex
            fx -= gamma * stta[i] * gx
            fy -= gamma * stta[i] * gy
            fz -= gamma * stta[i] * gz
        out[i, 0] = fx
        out[i, 1] = fy
        out[i, 2] = fz


@numba.njit(cache=True)
def heun_run(m, dmat, bk, easy, alpha, gamma, dt, ext, sttp, stta, nsteps):
    """Advance ``m`` in place by ``nsteps``; returns -1 or the first non-finite magnet."""
    n = m.shape[0]
    k1 = np.empty((n, 3))
    k2 = np.empty((n, 3))
    mp = np.empty((n, 3))
    for _ in range(nsteps):
        hd = dmat @ m.reshape(3 * n)
        _rhs_into(k1, m, hd, bk, easy, alpha, gamma, ext, sttp, stta)
        for i in range(n):
            for c in range(3):
                mp[i, c] = m[i, c] + dt * k1[i, c]
        hd = dmat @ mp.reshape(3 * n)
        _rhs_into(k2, mp, hd, bk, easy, alpha, gamma, ext, sttp, stta)
        for i in range(n):
            ax = m[i, 0] + 0.5 * dt * (k1[i, 0] + k2[i, 0])
            ay = m[i, 1] + 0.5 * dt * (k1[i, 1] + k2[i, 1])
            az = m[i, 2] + 0.5 * dt * (k1[i, 2] + k2[i, 2])
            nn = np.sqrt(ax * ax + ay * ay + az * az)
            if not np.isfinite(nn) or nn == 0.0:
                return i
            m[i, 0] = ax / nn
            m[i, 1] = ay / nn
            m[i, 2] = az / nn
    return -1


@numba.njit(cache=True)
def max_torque(m, dmat, bk, easy, alpha, gamma, ext):
    n = m.shape[0]
    out = np.empty((n, 3))
    hd = dmat @ m.reshape(3 * n)
    _rhs_into(out, m, hd, bk, easy, alpha, gamma, ext, np.zeros((n, 3)), np.zeros(n))
    best = 0.0
    for i in range(n):
        v = np.sqrt(out[i, 0] ** 2 + out[i, 1] ** 2 + out[i, 2] ** 2)
        if v > best:
            best = v
    return best
