"""Compiled inner loops for the SDE integrators.

Fields enter as truncated trigonometric series (the interpolant of their
grid samples, pruned of negligible harmonics), so a step costs a handful of
trig evaluations instead of a Python-level field lookup. Kernels are
single-threaded and branch-free in the accumulation order, which makes the
output bit-reproducible for fixed inputs regardless of chunking.

Scheme codes: 0 = Heun predictor-corrector (Stratonovich), 1 = plain Euler
(Ito), 2 = Euler with the (eps/4) Gamma' drift correction (weakly equivalent
to Heun; kept for the convention-distinction test).
"""

from __future__ import annotations

import numba
import numpy as np

SCHEME_HEUN = 0
SCHEME_EULER_ITO = 1
SCHEME_EULER_STRAT = 2

TWO_PI = 2.0 * np.pi


@numba.njit(cache=True, inline="always")
def _series_eval(x, a0, ac, asn):
    val = a0
    for k in range(ac.shape[0]):
        ang = TWO_PI * (k + 1) * x
        val += ac[k] * np.cos(ang) + asn[k] * np.sin(ang)
    return val


@numba.njit(cache=True)
def step_chunk_1d(
    x,            # (n_traj,) states, updated in place
    noise,        # (n_traj, n_chunk) standard normals
    dt,
    sqrt_eps,
    h0, hc, hs,   # drift series
    g0, gc, gs,   # Gamma series (gamma = sqrt of its value)
    d0, dc, ds,   # Gamma' series (only read by scheme 2)
    scheme,
    counts,       # (bins,) int64, updated in place
    bins,
    skip,         # leading steps of this chunk not recorded (burn-in)
):
    n_traj = x.shape[0]
    n_chunk = noise.shape[1]
    sqrt_dt = np.sqrt(dt)
    for s in range(n_chunk):
        record = s >= skip
        for t in range(n_traj):
            xt = x[t]
            dw = sqrt_dt * noise[t, s]
            h_at = _series_eval(xt, h0, hc, hs)
            gam_at = _series_eval(xt, g0, gc, gs)
            gamma_at = np.sqrt(gam_at)
            if scheme == 0:
                xp = xt + h_at * dt + sqrt_eps * gamma_at * dw
                h_pred = _series_eval(xp, h0, hc, hs)
                gamma_pred = np.sqrt(_series_eval(xp, g0, gc, gs))
                xn = xt + 0.5 * (h_at + h_pred) * dt \
                    + 0.5 * sqrt_eps * (gamma_at + gamma_pred) * dw
            elif scheme == 1:
                xn = xt + h_at * dt + sqrt_eps * gamma_at * dw
            else:
                gp_at = _series_eval(xt, d0, dc, ds)
                drift = h_at + 0.25 * sqrt_eps * sqrt_eps * gp_at
                xn = xt + drift * dt + sqrt_eps * gamma_at * dw
            xn = xn - np.floor(xn)
            x[t] = xn
            if record:
                b = int(xn * bins)
                if b >= bins:
                    b = bins - 1
                counts[b] += 1


@numba.njit(cache=True, inline="always")
def _series_eval_2d(x, y, kx, ky, cre, cim):
    # real part of sum c_m exp(2 pi i (kx_m x + ky_m y)); terms include
    # conjugate pairs, so the imaginary parts cancel
    val = 0.0
    for m in range(kx.shape[0]):
        ang = TWO_PI * (kx[m] * x + ky[m] * y)
        val += cre[m] * np.cos(ang) - cim[m] * np.sin(ang)
    return val


@numba.njit(cache=True)
def heun_chunk_2d(
    xy,           # (n_traj, 2) states, updated in place
    noise,        # (n_traj, n_chunk, 2) standard normals
    dt,
    sqrt_eps,
    kx1, ky1, re1, im1,   # h1 terms
    kx2, ky2, re2, im2,   # h2 terms
    gam11, gam12, gam21, gam22,   # constant noise matrix gamma (2x2)
    counts,       # (bins, bins) int64
    bins,
    skip,
):
    n_traj = xy.shape[0]
    n_chunk = noise.shape[1]
    sqrt_dt = np.sqrt(dt)
    for s in range(n_chunk):
        record = s >= skip
        for t in range(n_traj):
            xt = xy[t, 0]
            yt = xy[t, 1]
            dw1 = sqrt_dt * noise[t, s, 0]
            dw2 = sqrt_dt * noise[t, s, 1]
            nx = sqrt_eps * (gam11 * dw1 + gam12 * dw2)
            ny = sqrt_eps * (gam21 * dw1 + gam22 * dw2)
            h1a = _series_eval_2d(xt, yt, kx1, ky1, re1, im1)
            h2a = _series_eval_2d(xt, yt, kx2, ky2, re2, im2)
            # constant gamma: the noise increment is the same at the
            # predictor, so Heun only averages the drift
            xp = xt + h1a * dt + nx
            yp = yt + h2a * dt + ny
            h1b = _series_eval_2d(xp, yp, kx1, ky1, re1, im1)
            h2b = _series_eval_2d(xp, yp, kx2, ky2, re2, im2)
            xn = xt + 0.5 * (h1a + h1b) * dt + nx
            yn = yt + 0.5 * (h2a + h2b) * dt + ny
            xn = xn - np.floor(xn)
            yn = yn - np.floor(yn)
            xy[t, 0] = xn
            xy[t, 1] = yn
            if record:
                bx = int(xn * bins)
                if bx >= bins:
                    bx = bins - 1
                by = int(yn * bins)
                if by >= bins:
                    by = bins - 1
                counts[bx, by] += 1
