"""Numba-compiled layer-potential kernels (default backend).

Mirrors `_kernels_numpy` exactly; see there for the quadrature rules.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def _fill_k_impl(nodes, weights, zb, out):
    n = nodes.shape[0]
    inv4pi = 1.0 / (4.0 * np.pi)
    for i in prange(n):
        xi = nodes[i]
        for j in range(n):
            if j == i:
                # cell integral of e^{-zb r}/r: exact cap value for 1/r,
                # then the -zb and +zb^2 r/2 terms of the remainder
                out[i, i] = (
                    2.0 * np.sqrt(np.pi * weights[i])
                    - zb * weights[i]
                    + zb * zb * weights[i] ** 1.5 / (3.0 * np.sqrt(np.pi))
                ) * inv4pi
            else:
                dx = xi[0] - nodes[j, 0]
                dy = xi[1] - nodes[j, 1]
                dz = xi[2] - nodes[j, 2]
                r = np.sqrt(dx * dx + dy * dy + dz * dz)
                out[i, j] = np.exp(-zb * r) / r * (weights[j] * inv4pi)


def fill_k(nodes, weights, zb):
    n = nodes.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    _fill_k_impl(nodes, weights, complex(zb), out)
    return out


@njit(cache=True, parallel=True)
def _fill_w_impl(nodes, weights, zb, out):
    n = nodes.shape[0]
    inv4pi = 1.0 / (4.0 * np.pi)
    for i in prange(n):
        xi = nodes[i]
        for j in range(n):
            if j == i:
                continue
            dx = xi[0] - nodes[j, 0]
            dy = xi[1] - nodes[j, 1]
            dz = xi[2] - nodes[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            amp = 1j * np.exp(-zb * r) * (1.0 + zb * r) / (r2 * r) * (weights[j] * inv4pi)
            out[2 * i, 2 * j] = amp * dz
            out[2 * i, 2 * j + 1] = amp * (dx - 1j * dy)
            out[2 * i + 1, 2 * j] = amp * (dx + 1j * dy)
            out[2 * i + 1, 2 * j + 1] = -amp * dz


def fill_w(nodes, weights, zb):
    n = nodes.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    _fill_w_impl(nodes, weights, complex(zb), out)
    return out


@njit(cache=True, inline="always")
def _w_diff_amp(s):
    # e^{-s}(1+s) - 1, stable for small |s|
    if abs(s) < 0.2:
        return s * s * (-0.5 + s * (1.0 / 3.0 + s * (-0.125 + s * (1.0 / 30.0 - s / 144.0))))
    return np.exp(-s) * (1.0 + s) - 1.0


@njit(cache=True, parallel=True)
def _fill_w_diff_impl(nodes, weights, zb, out):
    n = nodes.shape[0]
    inv4pi = 1.0 / (4.0 * np.pi)
    for i in prange(n):
        xi = nodes[i]
        for j in range(n):
            if j == i:
                continue
            dx = xi[0] - nodes[j, 0]
            dy = xi[1] - nodes[j, 1]
            dz = xi[2] - nodes[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            amp = 1j * _w_diff_amp(zb * r) / (r2 * r) * (weights[j] * inv4pi)
            out[2 * i, 2 * j] = amp * dz
            out[2 * i, 2 * j + 1] = amp * (dx - 1j * dy)
            out[2 * i + 1, 2 * j] = amp * (dx + 1j * dy)
            out[2 * i + 1, 2 * j + 1] = -amp * dz


def fill_w_diff(nodes, weights, zb):
    n = nodes.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    _fill_w_diff_impl(nodes, weights, complex(zb), out)
    return out


@njit(cache=True, parallel=True)
def _potential_impl(nodes, weights, zb, lam, m, g, points, out):
    npts = points.shape[0]
    n = nodes.shape[0]
    inv4pi = 1.0 / (4.0 * np.pi)
    for p in prange(npts):
        acc0 = 0.0 + 0.0j
        acc1 = 0.0 + 0.0j
        acc2 = 0.0 + 0.0j
        acc3 = 0.0 + 0.0j
        for j in range(n):
            dx = points[p, 0] - nodes[j, 0]
            dy = points[p, 1] - nodes[j, 1]
            dz = points[p, 2] - nodes[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            ker = np.exp(-zb * r) * (weights[j] * inv4pi)
            ks = ker / r
            ws = 1j * ker * (1.0 + zb * r) / (r2 * r)
            gu0, gu1, gv0, gv1 = g[j, 0], g[j, 1], g[j, 2], g[j, 3]
            sd_gu0 = dz * gu0 + (dx - 1j * dy) * gu1
            sd_gu1 = (dx + 1j * dy) * gu0 - dz * gu1
            sd_gv0 = dz * gv0 + (dx - 1j * dy) * gv1
            sd_gv1 = (dx + 1j * dy) * gv0 - dz * gv1
            acc0 += (lam + m) * ks * gu0 + ws * sd_gv0
            acc1 += (lam + m) * ks * gu1 + ws * sd_gv1
            acc2 += ws * sd_gu0 + (lam - m) * ks * gv0
            acc3 += ws * sd_gu1 + (lam - m) * ks * gv1
        out[p, 0] = acc0
        out[p, 1] = acc1
        out[p, 2] = acc2
        out[p, 3] = acc3


def potential(nodes, weights, zb, lam, m, g, points):
    out = np.empty((points.shape[0], 4), dtype=np.complex128)
    _potential_impl(
        nodes, weights, complex(zb), float(lam), float(m),
        np.ascontiguousarray(g, dtype=np.complex128),
        np.ascontiguousarray(points, dtype=np.float64), out,
    )
    return out
