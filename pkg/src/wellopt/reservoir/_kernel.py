"""Compiled inner loops of the IMPES simulator.

Pressure: backward-Euler, weakly compressible, 5-point finite volume with
face mobility taken as the arithmetic mean of the two cells' total mobility.
The pressure increment is solved with a banded Cholesky factorization (the
matrix is SPD because of the compressibility term).

Transport: explicit single-point upwind in advective form. The update of a
cell is a convex combination of its own saturation and its upstream
neighbours' saturations whenever ``dt * throughput / Vp <= 1``; the substep is
chosen from the secant slopes of the fractional-flow curve to keep that ratio
at or below ``cfl``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

SECONDS_PER_DAY = 86400.0

OK = 0
FAIL_NONFINITE = 1
FAIL_BOUNDS = 2
FAIL_NOT_SPD = 3


@njit(cache=True)
def _power(x, n):
    if n == 2.0:
        return x * x
    if n == 1.0:
        return x
    if n == 3.0:
        return x * x * x
    return x**n


@njit(cache=True)
def fractional_flow_scalar(s, swc, sor, n_w, n_o, krw_end, kro_end, mu_w, mu_o):
    sn = (s - swc) / (1.0 - swc - sor)
    if sn < 0.0:
        sn = 0.0
    elif sn > 1.0:
        sn = 1.0
    lw = krw_end * _power(sn, n_w) / mu_w
    lo = kro_end * _power(1.0 - sn, n_o) / mu_o
    return lw / (lw + lo)


@njit(cache=True)
def total_mobility_scalar(s, swc, sor, n_w, n_o, krw_end, kro_end, mu_w, mu_o):
    sn = (s - swc) / (1.0 - swc - sor)
    if sn < 0.0:
        sn = 0.0
    elif sn > 1.0:
        sn = 1.0
    return krw_end * _power(sn, n_w) / mu_w + kro_end * _power(1.0 - sn, n_o) / mu_o


@njit(cache=True)
def band_cholesky_solve(band, rhs, b):
    """Solve in place. ``band[i, d]`` holds ``A[i, i - d]`` for ``d <= b``.

    Returns False if the matrix is not positive definite.
    """
    n = rhs.shape[0]
    for j in range(n):
        lo = j - b if j > b else 0
        for d in range(min(j, b), 0, -1):
            k = j - d
            s = band[j, d]
            for m in range(lo, k):
                s -= band[j, j - m] * band[k, k - m]
            band[j, d] = s / band[k, 0]
        s = band[j, 0]
        for m in range(lo, j):
            s -= band[j, j - m] * band[j, j - m]
        if not s > 0.0:
            return False
        band[j, 0] = math.sqrt(s)
    for j in range(n):
        lo = j - b if j > b else 0
        s = rhs[j]
        for m in range(lo, j):
            s -= band[j, j - m] * rhs[m]
        rhs[j] = s / band[j, 0]
    for j in range(n - 1, -1, -1):
        hi = j + b if j + b < n - 1 else n - 1
        s = rhs[j]
        for i in range(j + 1, hi + 1):
            s -= band[i, i - j] * rhs[i]
        rhs[j] = s / band[j, 0]
    return True


@njit(cache=True)
def march(
    nx, ny, tx, ty, vp, ct, p, s, well_idx, well_inj, rates, dts,
    swc, sor, n_w, n_o, krw_end, kro_end, mu_w, mu_o, cfl,
):
    """Advance pressure ``p`` and saturation ``s`` (flattened, modified in place).

    ``rates[k, w]`` is the rate of well ``w`` during pressure step ``k`` in
    m3/day (positive). Returns per-step per-well water and oil volumes, a
    status code, the failure time, the saturation extremes seen and the
    number of transport substeps.
    """
    n = nx * ny
    nwell = well_idx.shape[0]
    nsteps = dts.shape[0]
    vol_w = np.zeros((nsteps, nwell))
    vol_o = np.zeros((nsteps, nwell))
    lam = np.empty(n)
    f = np.empty(n)
    acc = np.empty(n)
    thr = np.empty(n)
    q = np.empty(n)
    band = np.empty((n, nx + 1))
    rhs = np.empty(n)
    tlx = np.empty((ny, nx - 1))
    tly = np.empty((ny - 1, nx))
    fx = np.empty((ny, nx - 1))
    fy = np.empty((ny - 1, nx))
    s_hi = 1.0 - sor
    s_min = s[0]
    s_max = s[0]
    for i in range(n):
        s_min = min(s_min, s[i])
        s_max = max(s_max, s[i])
    nsub = 0
    t = 0.0
    for k in range(nsteps):
        dt = dts[k]
        for i in range(n):
            lam[i] = total_mobility_scalar(s[i], swc, sor, n_w, n_o, krw_end, kro_end, mu_w, mu_o) * SECONDS_PER_DAY
            q[i] = 0.0
        for w in range(nwell):
            if well_inj[w]:
                q[well_idx[w]] += rates[k, w]
            else:
                q[well_idx[w]] -= rates[k, w]
        for i in range(n):
            band[i, 0] = vp[i] * ct / dt
            for d in range(1, nx + 1):
                band[i, d] = 0.0
            rhs[i] = q[i]
        for r in range(ny):
            for c in range(nx - 1):
                a = r * nx + c
                bb = a + 1
                tl = tx[r, c] * 0.5 * (lam[a] + lam[bb])
                tlx[r, c] = tl
                band[a, 0] += tl
                band[bb, 0] += tl
                band[bb, 1] = -tl
                flow = tl * (p[a] - p[bb])
                rhs[a] -= flow
                rhs[bb] += flow
        for r in range(ny - 1):
            for c in range(nx):
                a = r * nx + c
                bb = a + nx
                tl = ty[r, c] * 0.5 * (lam[a] + lam[bb])
                tly[r, c] = tl
                band[a, 0] += tl
                band[bb, 0] += tl
                band[bb, nx] = -tl
                flow = tl * (p[a] - p[bb])
                rhs[a] -= flow
                rhs[bb] += flow
        if not band_cholesky_solve(band, rhs, nx):
            return vol_w, vol_o, FAIL_NOT_SPD, t, s_min, s_max, nsub
        for i in range(n):
            p[i] += rhs[i]
            if not math.isfinite(p[i]):
                return vol_w, vol_o, FAIL_NONFINITE, t, s_min, s_max, nsub
        for r in range(ny):
            for c in range(nx - 1):
                a = r * nx + c
                fx[r, c] = tlx[r, c] * (p[a] - p[a + 1])
        for r in range(ny - 1):
            for c in range(nx):
                a = r * nx + c
                fy[r, c] = tly[r, c] * (p[a] - p[a + nx])

        rem = dt
        while rem > 0.0:
            for i in range(n):
                f[i] = fractional_flow_scalar(s[i], swc, sor, n_w, n_o, krw_end, kro_end, mu_w, mu_o)
                acc[i] = 0.0
                thr[i] = 0.0
            for r in range(ny):
                for c in range(nx - 1):
                    a = r * nx + c
                    flux = fx[r, c]
                    if flux > 0.0:
                        up = a
                        dn = a + 1
                    else:
                        up = a + 1
                        dn = a
                        flux = -flux
                    df = f[up] - f[dn]
                    acc[dn] += flux * df
                    ds = s[up] - s[dn]
                    if ds != 0.0:
                        thr[dn] += flux * df / ds
            for r in range(ny - 1):
                for c in range(nx):
                    a = r * nx + c
                    flux = fy[r, c]
                    if flux > 0.0:
                        up = a
                        dn = a + nx
                    else:
                        up = a + nx
                        dn = a
                        flux = -flux
                    df = f[up] - f[dn]
                    acc[dn] += flux * df
                    ds = s[up] - s[dn]
                    if ds != 0.0:
                        thr[dn] += flux * df / ds
            for w in range(nwell):
                if well_inj[w]:
                    i = well_idx[w]
                    df = 1.0 - f[i]
                    acc[i] += rates[k, w] * df
                    ds = s_hi - s[i]
                    if ds > 0.0:
                        thr[i] += rates[k, w] * df / ds
            h = rem
            for i in range(n):
                if thr[i] > 0.0:
                    lim = cfl * vp[i] / thr[i]
                    if lim < h:
                        h = lim
            if h >= rem:
                h = rem
                rem = 0.0
            else:
                rem -= h
            for w in range(nwell):
                i = well_idx[w]
                if well_inj[w]:
                    vol_w[k, w] += rates[k, w] * h
                else:
                    vol_w[k, w] += f[i] * rates[k, w] * h
                    vol_o[k, w] += (1.0 - f[i]) * rates[k, w] * h
            for i in range(n):
                s[i] += h * acc[i] / vp[i]
                if not math.isfinite(s[i]):
                    return vol_w, vol_o, FAIL_NONFINITE, t + dt - rem, s_min, s_max, nsub
                if s[i] < s_min:
                    s_min = s[i]
                if s[i] > s_max:
                    s_max = s[i]
            nsub += 1
            if s_min < swc - 1e-9 or s_max > s_hi + 1e-9:
                return vol_w, vol_o, FAIL_BOUNDS, t + dt - rem, s_min, s_max, nsub
        t += dt
    return vol_w, vol_o, OK, t, s_min, s_max, nsub
