"""Pure-numpy layer-potential kernels (fallback backend).

Same contracts as `_kernels_numba`; row-chunked broadcasting keeps peak
memory bounded for large node counts.
"""

import numpy as np

_CHUNK = 256


def fill_k(nodes, weights, zb):
    """Nystrom matrix of the scalar kernel e^{-zb r}/(4 pi r).

    Off-diagonal: punctured rule.  Diagonal: exact polar-cell value of the
    1/r part, 2 sqrt(pi w), plus the smooth remainder -zb at r=0.
    """
    n = nodes.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    inv4pi = 1.0 / (4.0 * np.pi)
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        d = nodes[i0:i1, None, :] - nodes[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        np.fill_diagonal(r[:, i0:i1], 1.0)
        block = np.exp(-zb * r) / r * (weights[None, :] * inv4pi)
        out[i0:i1] = block
    # cell integral of e^{-zb r}/r: exact cap value for 1/r, then the
    # -zb and +zb^2 r/2 terms of the remainder
    diag = (
        2.0 * np.sqrt(np.pi * weights)
        - zb * weights
        + zb * zb * weights**1.5 / (3.0 * np.sqrt(np.pi))
    ) * inv4pi
    np.fill_diagonal(out, diag)
    return out


def fill_w(nodes, weights, zb):
    """Nystrom matrix of the Cauchy-type kernel on C^2 node data.

    Blocks w_j e^{-zb r}(1 + zb r) i (sigma.d)/(4 pi r^3); the principal
    value kills the odd leading term on symmetric patches, so the
    self-patch block is zero.
    """
    n = nodes.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    view = out.reshape(n, 2, n, 2)
    inv4pi = 1.0 / (4.0 * np.pi)
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        d = nodes[i0:i1, None, :] - nodes[None, :, :]
        r2 = np.sum(d * d, axis=-1)
        np.fill_diagonal(r2[:, i0:i1], 1.0)
        r = np.sqrt(r2)
        amp = 1j * np.exp(-zb * r) * (1.0 + zb * r) / (r2 * r) * (weights[None, :] * inv4pi)
        idx = np.arange(i0, i1)
        amp[idx - i0, idx] = 0.0
        dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
        view[i0:i1, 0, :, 0] = amp * dz
        view[i0:i1, 0, :, 1] = amp * (dx - 1j * dy)
        view[i0:i1, 1, :, 0] = amp * (dx + 1j * dy)
        view[i0:i1, 1, :, 1] = -amp * dz
    return out


def _w_diff_amp(s):
    # e^{-s}(1+s) - 1, stable for small |s|
    out = np.exp(-s) * (1.0 + s) - 1.0
    small = np.abs(s) < 0.2
    ss = s[small]
    out[small] = ss * ss * (
        -0.5 + ss * (1.0 / 3.0 + ss * (-0.125 + ss * (1.0 / 30.0 - ss / 144.0)))
    )
    return out


def fill_w_diff(nodes, weights, zb):
    """Matrix of W_lambda - W_m (bounded difference kernel, zero diagonal)."""
    n = nodes.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    view = out.reshape(n, 2, n, 2)
    inv4pi = 1.0 / (4.0 * np.pi)
    for i0 in range(0, n, _CHUNK):
        i1 = min(i0 + _CHUNK, n)
        d = nodes[i0:i1, None, :] - nodes[None, :, :]
        r2 = np.sum(d * d, axis=-1)
        np.fill_diagonal(r2[:, i0:i1], 1.0)
        r = np.sqrt(r2)
        amp = 1j * _w_diff_amp(zb * r) / (r2 * r) * (weights[None, :] * inv4pi)
        idx = np.arange(i0, i1)
        amp[idx - i0, idx] = 0.0
        dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
        view[i0:i1, 0, :, 0] = amp * dz
        view[i0:i1, 0, :, 1] = amp * (dx - 1j * dy)
        view[i0:i1, 1, :, 0] = amp * (dx + 1j * dy)
        view[i0:i1, 1, :, 1] = -amp * dz
    return out


def potential(nodes, weights, zb, lam, m, g, points):
    """Layer potential of a C^4 boundary density at interior points.

    g has shape (N, 4) split as (u, v); returns (M, 4).
    """
    inv4pi = 1.0 / (4.0 * np.pi)
    gu = g[:, :2]
    gv = g[:, 2:]
    out = np.empty((points.shape[0], 4), dtype=np.complex128)
    for p0 in range(0, points.shape[0], _CHUNK):
        p1 = min(p0 + _CHUNK, points.shape[0])
        d = points[p0:p1, None, :] - nodes[None, :, :]
        r2 = np.sum(d * d, axis=-1)
        r = np.sqrt(r2)
        ker = np.exp(-zb * r) * (weights[None, :] * inv4pi)
        ks = ker / r
        ws = 1j * ker * (1.0 + zb * r) / (r2 * r)
        dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
        # (sigma.d) @ gu and (sigma.d) @ gv
        sd_gu0 = dz * gu[None, :, 0] + (dx - 1j * dy) * gu[None, :, 1]
        sd_gu1 = (dx + 1j * dy) * gu[None, :, 0] - dz * gu[None, :, 1]
        sd_gv0 = dz * gv[None, :, 0] + (dx - 1j * dy) * gv[None, :, 1]
        sd_gv1 = (dx + 1j * dy) * gv[None, :, 0] - dz * gv[None, :, 1]
        out[p0:p1, 0] = np.sum((lam + m) * ks * gu[None, :, 0] + ws * sd_gv0, axis=1)
        out[p0:p1, 1] = np.sum((lam + m) * ks * gu[None, :, 1] + ws * sd_gv1, axis=1)
        out[p0:p1, 2] = np.sum(ws * sd_gu0 + (lam - m) * ks * gv[None, :, 0], axis=1)
        out[p0:p1, 3] = np.sum(ws * sd_gu1 + (lam - m) * ks * gv[None, :, 1], axis=1)
    return out
