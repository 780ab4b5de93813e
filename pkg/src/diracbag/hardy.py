"""Skew projections P+- = 1/2 +- i W_m (sigma.nu) onto discrete Hardy spaces.

range(P+) discretises the traces of interior null solutions of sigma.grad
(constants included); P+ and P- are complementary but not orthogonal unless
the surface is a ball.  `ball_test` reports the three ball-characterisation
diagnostics: the anticommutator {W_m, sigma.nu} (assembled from its own
weakly-singular kernel), the self-adjointness defect of P+, and the
pointwise reflection identity of the normal field.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .layerops import (
    BoundaryOperator,
    SpectralParams,
    kernel_matrix_anticommutator,
    kernel_matrix_W,
)
from .linalg import lift, op_norm2, symmetrize, weight_vector
from .surface import sigma_nu_blocks
from .sphspinor import spinor, spinor_labels

#: the kernels of K_m and W_m do not depend on m
STATIC = SpectralParams(0.0, 0.0)


@dataclass
class ProjectionPair:
    """P+-, their weighted adjoints, and an orthonormal basis of range(P+)."""

    p_plus: BoundaryOperator
    p_minus: BoundaryOperator
    p_plus_adj: BoundaryOperator
    p_minus_adj: BoundaryOperator
    range_basis_plus: np.ndarray      # (2N, r), weighted-orthonormal columns
    range_basis_sym: np.ndarray       # same basis in the symmetrised metric
    singular_values: np.ndarray
    rank: int
    rank_tolerance: float
    rank_gap: float


def _sigma_matrix(surface):
    n = surface.n_nodes
    blocks = sigma_nu_blocks(surface)
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    mat.reshape(n, 2, n, 2)[np.arange(n), :, np.arange(n), :] = blocks
    return mat


def trial_frame(surface, j2_max=None):
    """Orthonormal frame of parametric spinor modes (symmetrised metric).

    Spinor fields evaluated at the parameter-sphere point of each node are
    smooth on every generator surface; the frame spans the subspace on
    which the Nystrom operators are trustworthy, and all restricted
    operator norms are measured on it.  j2_max defaults to n_theta - 1
    rounded down to odd.
    """
    cache = getattr(surface, "_frame_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(surface, "_frame_cache", cache)
    params = surface.params
    if j2_max is None:
        j2_max = params["n_theta"] // 2 * 2 - 1
    if j2_max in cache:
        return cache[j2_max]
    nt, nphi = params["n_theta"], params["n_phi"]
    t = np.repeat(np.polynomial.legendre.leggauss(nt)[0], nphi)
    phi = np.tile(2.0 * np.pi * np.arange(nphi) / nphi, nt)
    s = np.sqrt(1.0 - t * t)
    unit = np.stack([s * np.cos(phi), s * np.sin(phi), t], axis=-1)
    fields = np.stack(
        [spinor(lb, unit).reshape(-1) for lb in spinor_labels(f"{j2_max}/2")],
        axis=1,
    )
    d = np.sqrt(weight_vector(surface))
    frame, _ = np.linalg.qr(d[:, None] * fields)
    cache[j2_max] = frame
    return frame


def build_projections(surface, rank_tolerance=1e-8):
    """Assemble P+- and a rank-revealing basis of range(P+).

    The basis spans P+ applied to the resolved trial frame: the discrete
    P+ is only a projection up to quadrature error, so the rank-revealing
    SVD is taken on the restriction (where the singular values split
    cleanly into a ~1 cluster and a near-zero cluster).  Columns with
    singular value above ``rank_tolerance`` times the largest are kept; a
    warning reports an ambiguous spectral gap at the cut.
    """
    n2 = 2 * surface.n_nodes
    w_mat = kernel_matrix_W(surface, STATIC)
    sn = _sigma_matrix(surface)
    ws = w_mat @ sn
    p_plus = 0.5 * np.eye(n2) + 1j * ws
    p_minus = 0.5 * np.eye(n2) - 1j * ws
    sw = sn @ w_mat
    p_plus_adj = 0.5 * np.eye(n2) - 1j * sw
    p_minus_adj = 0.5 * np.eye(n2) + 1j * sw

    psym = symmetrize(p_plus, surface)
    frame = trial_frame(surface)
    block = psym @ frame
    u_svd, sigmas, _ = np.linalg.svd(block, full_matrices=False)
    # the discrete P+ is idempotent only up to quadrature error, so its
    # singular values split into a ~1 cluster and a cluster at the
    # discretisation scale: cut at the largest multiplicative gap above
    # the tolerance floor
    floor = rank_tolerance * sigmas[0]
    candidates = np.nonzero(sigmas > floor)[0]
    if candidates.size == 0:
        raise RuntimeError("empty range basis: projection rank collapsed")
    last = candidates[-1]
    if last + 1 < sigmas.size:
        ratios = sigmas[: last + 1] / np.maximum(sigmas[1 : last + 2], 1e-300)
    else:
        ratios = sigmas[:last] / np.maximum(sigmas[1 : last + 1], 1e-300)
    rank = int(np.argmax(ratios)) + 1
    gap = float(ratios[rank - 1])
    if gap < 10.0:
        warnings.warn(
            f"rank cut ambiguous: largest singular-value gap is only "
            f"{gap:.1f} at rank {rank}"
        )
    basis_sym = u_svd[:, :rank]
    basis = lift(basis_sym, surface)

    return ProjectionPair(
        p_plus=BoundaryOperator(p_plus, surface, kind="P+"),
        p_minus=BoundaryOperator(p_minus, surface, kind="P-"),
        p_plus_adj=BoundaryOperator(p_plus_adj, surface, kind="P+*"),
        p_minus_adj=BoundaryOperator(p_minus_adj, surface, kind="P-*"),
        range_basis_plus=basis,
        range_basis_sym=basis_sym,
        singular_values=sigmas,
        rank=rank,
        rank_tolerance=rank_tolerance,
        rank_gap=float(gap),
    )


def anticommutator_norm(surface, lam=0.0, m=0.0):
    """||{W_lambda, sigma.nu}||_2 from the direct kernel discretisation."""
    mat = kernel_matrix_anticommutator(surface, SpectralParams(lam, m))
    return op_norm2(symmetrize(mat, surface))


def reflection_residual(surface, sample=256, seed=11):
    """Max residual of nu(y) = nu(x) - 2 ((x-y).nu(x)) (x-y)/|x-y|^2.

    Zero exactly on balls; O(1) otherwise.  Sampled over `sample` rows
    against all other nodes.
    """
    rng = np.random.default_rng(seed)
    n = surface.n_nodes
    rows = rng.choice(n, size=min(sample, n), replace=False)
    x = surface.nodes[rows][:, None, :]
    nu_x = surface.normals[rows][:, None, :]
    y = surface.nodes[None, :, :]
    nu_y = surface.normals[None, :, :]
    d = x - y
    r2 = np.sum(d * d, axis=-1)
    mask = r2 > 1e-24
    proj = np.sum(d * nu_x, axis=-1)
    resid = nu_y - nu_x + 2.0 * (proj / np.where(mask, r2, 1.0))[..., None] * d
    resid_norm = np.linalg.norm(resid, axis=-1)
    return float(np.max(resid_norm[mask]))


def ball_test(surface, projections=None):
    """Ball-characterisation diagnostics as a dict.

    The self-adjointness defect of P+ is measured on the resolved frame
    (its unresolved-mode content is quadrature noise by construction).
    """
    pp = projections or build_projections(surface)
    p_plus = pp.p_plus
    defect = p_plus.matrix - p_plus.weighted_adjoint().matrix
    return {
        "anticommutator_norm": anticommutator_norm(surface),
        "projection_selfadjoint_defect": frame_norm(
            symmetrize(defect, surface), trial_frame(surface)
        ),
        "reflection_residual": reflection_residual(surface),
    }


def hardy_trace_residual(surface, projections=None):
    """||P- u|| / ||u|| for the constant-spinor trace (a Hardy field)."""
    pp = projections or build_projections(surface)
    n = surface.n_nodes
    const = np.zeros((n, 2), dtype=complex)
    const[:, 0] = 1.0
    w = weight_vector(surface)
    pu = pp.p_minus.apply(const).reshape(-1)
    return float(
        np.sqrt(np.sum(w * np.abs(pu) ** 2) / np.sum(w * np.abs(const.reshape(-1)) ** 2))
    )


def frame_norm(matrix_sym, frame):
    """Operator 2-norm of a symmetrised matrix restricted to a frame."""
    return float(np.linalg.svd(matrix_sym @ frame, compute_uv=False)[0])
