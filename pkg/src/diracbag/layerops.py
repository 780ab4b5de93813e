"""Layer potentials of the free Dirac operator on a quadrature surface.

The fundamental solution of (H - lambda) factors into a scalar kernel

    k(x) = e^{-zb |x|} / |x|,            zb = sqrt(m^2 - lambda^2 + 0j),

and a Cauchy-type matrix kernel

    w(x) = e^{-zb |x|} (1 + zb |x|) i sigma.x / |x|^3,

with zb purely imaginary (propagating) for |lambda| > m and real
(self-adjoint branch) for |lambda| <= m; the principal square root makes
the seam at |lambda| = m continuous automatically.

Nystrom discretisation: punctured-node sums, the weakly singular 1/r
self-patch integrated exactly over the equal-area polar cell, and the
principal-value kernel's odd leading term dropped on the (symmetric)
self-patch.  The scalar trace K acts blockwise on C^2 data; W couples the
components.  Hot fills are delegated to the numba/numpy backend.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import _backend
from .linalg import op_norm2, symmetrize, weight_vector, weighted_hermitian_part
from .surface import apply_sigma, sigma_nu_blocks

_MAGIC = b"DBOP"


@dataclass(frozen=True)
class SpectralParams:
    """Spectral point lambda and mass m defining the kernels."""

    lam: float
    m: float = 0.0

    @property
    def zb(self):
        """Kernel decay/oscillation rate sqrt(m^2 - lambda^2 + 0j)."""
        return complex(np.sqrt(complex(self.m * self.m - self.lam * self.lam)))

    @property
    def b(self):
        """Wavenumber sqrt(lambda^2 - m^2) in the propagating regime."""
        return float(np.sqrt(max(self.lam * self.lam - self.m * self.m, 0.0)))

    @property
    def regime(self):
        return "propagating" if abs(self.lam) > self.m else "evanescent"


@dataclass
class BoundaryOperator:
    """Dense operator on C^2-valued (or C^4-valued) boundary node data."""

    matrix: np.ndarray
    surface: object
    kind: str = ""
    weight_convention: str = "plain"

    @property
    def components(self):
        return self.matrix.shape[0] // self.surface.n_nodes

    def apply(self, field):
        f = np.asarray(field, dtype=complex)
        flat = f.reshape(-1)
        out = self.matrix @ flat
        return out.reshape(f.shape)

    def weighted_adjoint(self):
        """Adjoint in the weighted inner product: D^{-2} A^H D^2."""
        w = weight_vector(self.surface, self.components)
        mat = (self.matrix.conj().T * w[None, :]) / w[:, None]
        return BoundaryOperator(mat, self.surface, self.kind + "*", self.weight_convention)

    def symmetrized(self):
        """sqrt(w)-conjugated matrix whose plain adjoint is the weighted one."""
        mat = symmetrize(self.matrix, self.surface, self.components)
        return BoundaryOperator(mat, self.surface, self.kind, "symmetrized")

    def norm2(self):
        return op_norm2(symmetrize(self.matrix, self.surface, self.components))


def kernel_phi(params, x):
    """Fundamental-solution value phi_lambda(x) as a 4x4 complex matrix."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("phi_lambda is singular at x = 0")
    zb = params.zb
    pref = np.exp(-zb * r) / (4.0 * np.pi * r)
    out = np.zeros((4, 4), dtype=complex)
    lam, m = params.lam, params.m
    np.fill_diagonal(out, (lam + m, lam + m, lam - m, lam - m))
    sd = np.array(
        [[x[2], x[0] - 1j * x[1]], [x[0] + 1j * x[1], -x[2]]], dtype=complex
    )
    coupling = (1.0 + zb * r) * 1j / (r * r) * sd
    out[:2, 2:] = coupling
    out[2:, :2] = coupling
    return pref * out


# ---------------------------------------------------------------------------
# Nystrom matrices


#: near-field cell refinement defaults: correction radius in units of the
#: local patch size, and the per-cell Gauss rule order (6 keeps the cell
#: integration below the punctured-rule error through 32x64 grids)
NEAR_RADIUS = 4.0
NEAR_NSUB = 6


def _near_refine(surface):
    """Gathered near-pair geometry (distances to target nodes), cached."""
    cache = getattr(surface, "_near_geom", None)
    if cache is not None:
        return cache
    from .surface import cell_subquadrature, near_pairs

    rows, cols = near_pairs(surface, NEAR_RADIUS)
    sub_nodes, sub_w = cell_subquadrature(surface, NEAR_NSUB)
    d = surface.nodes[rows][:, None, :] - sub_nodes[cols]
    r = np.sqrt(np.sum(d * d, axis=-1))
    geom = (rows, cols, d, r, sub_w[cols])
    object.__setattr__(surface, "_near_geom", geom)
    return geom


def kernel_matrix_K(surface, params, near_field=True):
    """Raw (N, N) matrix of the scalar single-layer trace.

    Far field by the punctured node rule; cells within NEAR_RADIUS patch
    sizes of the target re-integrated on the refined cell quadrature.  In
    the evanescent branch (real kernel exponent) the result is projected
    onto its weighted-Hermitian part, restoring the exact self-adjointness
    of the continuous operator there.
    """
    impl = _backend.active()
    out = impl.fill_k(surface.nodes, surface.weights, params.zb)
    if near_field:
        rows, cols, _, r, sub_w = _near_refine(surface)
        vals = np.sum(np.exp(-params.zb * r) / r * sub_w, axis=-1)
        out[rows, cols] = vals / (4.0 * np.pi)
    if abs(params.zb.imag) == 0.0:
        w = surface.weights
        out = 0.5 * (out + (out.conj().T * w[None, :]) / w[:, None])
    return out


def _w_near_correct(out, surface, amp_of_r):
    """Overwrite near-pair blocks of a sigma.d-type matrix on refined cells."""
    rows, cols, d, r, sub_w = _near_refine(surface)
    amp = amp_of_r(r) / (r * r * r) * sub_w / (4.0 * np.pi)
    b00 = np.sum(amp * d[..., 2], axis=-1)
    b01 = np.sum(amp * (d[..., 0] - 1j * d[..., 1]), axis=-1)
    b10 = np.sum(amp * (d[..., 0] + 1j * d[..., 1]), axis=-1)
    view = out.reshape(surface.n_nodes, 2, surface.n_nodes, 2)
    view[rows, 0, cols, 0] = b00
    view[rows, 0, cols, 1] = b01
    view[rows, 1, cols, 0] = b10
    view[rows, 1, cols, 1] = -b00


def kernel_matrix_W(surface, params, near_field=True):
    """Raw (2N, 2N) matrix of the principal-value Cauchy-type operator.

    Split as W_lambda = W_m + (W_lambda - W_m).  The static part carries
    the principal-value singularity; its self-patch is completed by the
    null-field identity W_m (sigma.nu) 1 = -(i/2) 1 (constants are traces
    of monogenic fields on every surface), which absorbs the local
    quadrature error of the punctured sum.  The difference kernel is
    bounded and needs no diagonal.
    """
    cache = getattr(surface, "_wm_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(surface, "_wm_cache", cache)
    static = cache.get(near_field)
    if static is None:
        impl = _backend.active()
        n = surface.n_nodes
        static = impl.fill_w(surface.nodes, surface.weights, 0j)
        if near_field:
            _w_near_correct(static, surface, lambda r: 1j * np.ones_like(r))
            # self-cell gradient term: the punctured principal value misses
            # -(i a / 4) sigma . grad_T u on the equal-area cell
            from .surface import tangential_gradient_entries
            from .sphspinor import sigma_dot

            rows, cols, vecs = tangential_gradient_entries(surface)
            coeff = -0.25j * np.sqrt(surface.weights / np.pi)
            gblocks = coeff[rows, None, None] * sigma_dot(vecs)
            gview = static.reshape(n, 2, n, 2)
            np.add.at(gview, (rows, slice(None), cols, slice(None)), gblocks)
        # W_m is self-adjoint in the weighted product; the cell corrections
        # are not exactly so -- project back before completing the diagonal
        static = weighted_hermitian_part(static, surface)
        blocks = sigma_nu_blocks(surface)
        view = static.reshape(n, 2, n, 2)
        idx = np.arange(n)
        # null-field completion: shift the diagonal so that the identity
        # W_m (sigma.nu) 1 = -(i/2) 1 holds row by row; keep only its
        # Hermitian part so self-adjointness stays exact
        rowsum = np.einsum("iajb,jbc->iac", view, blocks)
        adjust = np.einsum(
            "iab,ibc->iac", -0.5j * np.eye(2)[None, :, :] - rowsum, blocks
        )
        adjust = 0.5 * (adjust + np.conj(np.swapaxes(adjust, 1, 2)))
        view[idx, :, idx, :] += adjust
        cache[near_field] = static
    zb = params.zb
    if zb == 0.0:
        return static.copy()
    impl = _backend.active()
    out = impl.fill_w_diff(surface.nodes, surface.weights, zb)
    if near_field:
        from ._kernels_numpy import _w_diff_amp

        _w_near_correct(out, surface, lambda r: 1j * _w_diff_amp(zb * r))
    if zb.imag == 0.0:
        out = weighted_hermitian_part(out, surface)
    out += static
    return out


def kernel_matrix_anticommutator(surface, params):
    """Direct Nystrom matrix of {W_lambda, sigma.nu}.

    The combined kernel (sigma.nu(x))(sigma.d/r^3) + (sigma.d/r^3)(sigma.nu(y))
    is only weakly singular (it vanishes identically on spheres), so it is
    discretised directly rather than as the matrix anticommutator of W,
    whose self-patch completions would pollute the diagnostic.
    """
    n = surface.n_nodes
    zb = params.zb
    sn = sigma_nu_blocks(surface)
    out = np.zeros((n, 2, n, 2), dtype=complex)
    inv4pi = 1.0 / (4.0 * np.pi)

    def blocks_for(xi, sni, ynodes, yn_sn, wgt):
        d = xi[None, :] - ynodes
        r2 = np.sum(d * d, axis=-1)
        r = np.sqrt(r2)
        amp = 1j * np.exp(-zb * r) * (1.0 + zb * r) / (r2 * r) * (wgt * inv4pi)
        sd = np.empty((ynodes.shape[0], 2, 2), dtype=complex)
        sd[:, 0, 0] = d[:, 2]
        sd[:, 0, 1] = d[:, 0] - 1j * d[:, 1]
        sd[:, 1, 0] = d[:, 0] + 1j * d[:, 1]
        sd[:, 1, 1] = -d[:, 2]
        mixed = np.einsum("ab,nbc->nac", sni, sd) + np.einsum("nab,nbc->nac", sd, yn_sn)
        return amp[:, None, None] * mixed

    for i in range(n):
        mask = np.ones(n, dtype=bool)
        mask[i] = False
        out[i, :, mask, :] = blocks_for(
            surface.nodes[i], sn[i], surface.nodes[mask], sn[mask], surface.weights[mask]
        )
    from .surface import cell_subquadrature, near_pairs, unit_normal_at
    from .sphspinor import sigma_dot

    rows, cols = near_pairs(surface, NEAR_RADIUS)
    sub_nodes, sub_w = cell_subquadrature(surface, NEAR_NSUB)
    sub_sn = sigma_dot(unit_normal_at(surface.params, sub_nodes.reshape(-1, 3)))
    sub_sn = sub_sn.reshape(n, -1, 2, 2)
    for i, j in zip(rows, cols):
        out[i, :, j, :] = np.sum(
            blocks_for(surface.nodes[i], sn[i], sub_nodes[j], sub_sn[j], sub_w[j]),
            axis=0,
        )
    return out.reshape(2 * n, 2 * n)


def expand_scalar(kmat):
    """Lift an (N, N) scalar-block matrix to (2N, 2N) acting on C^2 data."""
    n = kmat.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=kmat.dtype)
    view = out.reshape(n, 2, n, 2)
    view[:, 0, :, 0] = kmat
    view[:, 1, :, 1] = kmat
    return out


def add_scalar_blocks(target, kmat, coeff):
    """target += coeff * (kmat acting blockwise); target is (2N, 2N)."""
    n = kmat.shape[0]
    view = target.reshape(n, 2, n, 2)
    view[:, 0, :, 0] += coeff * kmat
    view[:, 1, :, 1] += coeff * kmat
    return target


def assemble_K(surface, params):
    """Single-layer trace K_lambda on C^2 node data."""
    return BoundaryOperator(
        expand_scalar(kernel_matrix_K(surface, params)), surface, kind="K"
    )


def assemble_W(surface, params):
    """Principal-value operator W_lambda on C^2 node data."""
    return BoundaryOperator(kernel_matrix_W(surface, params), surface, kind="W")


def assemble_C(surface, params):
    """Full boundary trace operator on C^4 node data (node-interleaved).

    Per-pair blocks follow the fundamental solution's structure
    [[(lam+m) k I2, w], [w, (lam-m) k I2]]; data layout matches
    (N, 4).reshape(-1), i.e. (u0, u1, v0, v1) per node, so the weighted
    inner product uses the plain node weights.
    """
    n = surface.n_nodes
    kv = expand_scalar(kernel_matrix_K(surface, params)).reshape(n, 2, n, 2)
    wv = kernel_matrix_W(surface, params).reshape(n, 2, n, 2)
    out = np.zeros((n, 4, n, 4), dtype=complex)
    out[:, :2, :, :2] = (params.lam + params.m) * kv
    out[:, :2, :, 2:] = wv
    out[:, 2:, :, :2] = wv
    out[:, 2:, :, 2:] = (params.lam - params.m) * kv
    return BoundaryOperator(out.reshape(4 * n, 4 * n), surface, kind="C")


def alpha_nu_matrix(surface):
    """alpha.nu on node-interleaved C^4 data: per-node [[0, s], [s, 0]]."""
    n = surface.n_nodes
    blocks = sigma_nu_blocks(surface)
    out = np.zeros((n, 4, n, 4), dtype=complex)
    idx = np.arange(n)
    out[idx, :2, idx, 2:] = blocks
    out[idx, 2:, idx, :2] = blocks
    return out.reshape(4 * n, 4 * n)


def volume_potential(surface, params, g, points, min_distance_factor=2.0):
    """Layer potential Phi_lambda g at interior points; g is (N, 4) = (u, v).

    Refuses points closer to the surface than `min_distance_factor` times
    the largest patch size (quadrature accuracy collapses there); pass 0 to
    evaluate anyway.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = np.asarray(g, dtype=complex).reshape(surface.n_nodes, 4)
    if min_distance_factor > 0.0:
        hmax = float(np.max(surface.patch_h))
        for chunk in range(0, pts.shape[0], 4096):
            block = pts[chunk : chunk + 4096]
            d2 = np.min(
                np.sum((block[:, None, :] - surface.nodes[None, :, :]) ** 2, axis=-1),
                axis=1,
            )
            if np.any(d2 < (min_distance_factor * hmax) ** 2):
                raise ValueError(
                    "evaluation point closer than "
                    f"{min_distance_factor} * max patch size to the surface"
                )
    impl = _backend.active()
    return impl.potential(
        surface.nodes, surface.weights, params.zb, params.lam, params.m, g, pts
    )


def reconstruct_eigenfunction(surface, params, g, points, min_distance_factor=2.0):
    """phi = Phi_lambda(i (alpha.nu) g) at interior points."""
    g = np.asarray(g, dtype=complex).reshape(surface.n_nodes, 4)
    blocks = sigma_nu_blocks(surface)
    rotated = np.empty_like(g)
    rotated[:, :2] = 1j * apply_sigma(blocks, g[:, 2:])
    rotated[:, 2:] = 1j * apply_sigma(blocks, g[:, :2])
    return volume_potential(surface, params, rotated, points, min_distance_factor)


# ---------------------------------------------------------------------------
# binary operator dump: header (N, lambda, m, kind), row-major complex128 LE


def save_operator(path, matrix, params, kind):
    n = matrix.shape[0]
    kind_b = kind.encode()[:4].ljust(4)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<q d d 4s", n, params.lam, params.m, kind_b))
        fh.write(np.ascontiguousarray(matrix, dtype="<c16").tobytes())


def load_operator(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not an operator dump")
        n, lam, m, kind_b = struct.unpack("<q d d 4s", fh.read(28))
        data = np.frombuffer(fh.read(), dtype="<c16").reshape(n, n)
    return data.astype(np.complex128), SpectralParams(lam, m), kind_b.decode().strip()
