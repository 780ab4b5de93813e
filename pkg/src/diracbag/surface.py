"""Quadrature representations of closed C^2 surfaces.

Surfaces are sampled on a Gauss-Legendre (in cos theta) x uniform (in phi)
product grid, which keeps nodes off the poles and, on a sphere, integrates
smooth densities spectrally.  Weights carry the full area measure, so
boundary L^2 inner products are plain weighted sums and discrete adjoints
become matrix adjoints after sqrt(w) symmetrisation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .sphspinor import sigma_dot


@dataclass(frozen=True)
class QuadratureSurface:
    """Nodes, outward unit normals, area weights, per-node patch size."""

    nodes: np.ndarray            # (N, 3)
    normals: np.ndarray          # (N, 3), unit, outward
    weights: np.ndarray          # (N,), positive areas
    params: dict = field(default_factory=dict)
    patch_h: np.ndarray = None   # (N,) local mesh size, sqrt(weight)

    def __post_init__(self):
        if self.patch_h is None:
            object.__setattr__(self, "patch_h", np.sqrt(self.weights))

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    def area(self):
        return float(np.sum(self.weights))

    def volume(self):
        """Enclosed volume by the divergence theorem, (1/3) sum w x.nu."""
        return float(np.sum(self.weights * np.sum(self.nodes * self.normals, axis=1)) / 3.0)

    def inner(self, u, v):
        """Weighted L^2 inner product of C^2-valued node data (N, 2)."""
        return complex(np.sum(self.weights * np.sum(u * np.conj(v), axis=-1)))

    def norm(self, u):
        return math.sqrt(abs(self.inner(u, u)))


def _angular_grid(n_theta, n_phi):
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    tt = np.repeat(t, n_phi)
    ww = np.repeat(wt, n_phi) * (2.0 * np.pi / n_phi)
    pp = np.tile(phi, n_theta)
    return tt, pp, ww


def _param_map(params):
    """(t, phi) -> points map and area jacobian for the product grids."""
    if params["kind"] == "sphere":
        R = params["R"]
        axes = (R, R, R)
    else:
        axes = (params["a"], params["b"], params["c"])
    a, b, c = axes

    def to_points(t, phi):
        s = np.sqrt(1.0 - t * t)
        cp, sp = np.cos(phi), np.sin(phi)
        pts = np.stack([a * s * cp, b * s * sp, c * t], axis=-1)
        d_t = np.stack([-a * t * cp / s, -b * t * sp / s, c * np.ones_like(t)], axis=-1)
        d_phi = np.stack([-a * s * sp, b * s * cp, np.zeros_like(t)], axis=-1)
        jac = np.linalg.norm(np.cross(d_t, d_phi), axis=-1)
        return pts, jac

    return to_points


def cell_subquadrature(surface, nsub=4):
    """Per-node refinement of the quadrature cell, for near-field kernels.

    The (t, phi) product cell of each node (Gauss-midpoint edges in t,
    uniform edges in phi) is re-quadratured with an nsub x nsub Gauss rule;
    subweights are renormalised to the node weight so the global rule is
    preserved.  Returns (subnodes (N, nsub^2, 3), subweights (N, nsub^2)),
    cached on the surface.
    """
    cache = getattr(surface, "_subquad_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(surface, "_subquad_cache", cache)
    if nsub in cache:
        return cache[nsub]
    params = surface.params
    if params.get("kind") not in ("sphere", "ellipsoid"):
        raise ValueError("cell refinement needs a parametric product grid")
    n_theta, n_phi = params["n_theta"], params["n_phi"]
    t_nodes = np.polynomial.legendre.leggauss(n_theta)[0]
    t_edges = np.concatenate(([-1.0], 0.5 * (t_nodes[1:] + t_nodes[:-1]), [1.0]))
    dphi = 2.0 * np.pi / n_phi
    g, gw = np.polynomial.legendre.leggauss(nsub)
    to_points = _param_map(params)

    n = surface.n_nodes
    sub_nodes = np.empty((n, nsub * nsub, 3))
    sub_w = np.empty((n, nsub * nsub))
    for it in range(n_theta):
        t0, t1 = t_edges[it], t_edges[it + 1]
        ts = 0.5 * (t1 - t0) * g + 0.5 * (t0 + t1)
        tw = 0.5 * (t1 - t0) * gw
        for ip in range(n_phi):
            ps = 0.5 * dphi * g + ip * dphi
            pw = 0.5 * dphi * gw
            tt = np.repeat(ts, nsub)
            pp = np.tile(ps, nsub)
            ww = np.repeat(tw, nsub) * np.tile(pw, nsub)
            pts, jac = to_points(tt, pp)
            j = it * n_phi + ip
            raw = ww * jac
            sub_nodes[j] = pts
            sub_w[j] = raw * (surface.weights[j] / np.sum(raw))
    cache[nsub] = (sub_nodes, sub_w)
    return cache[nsub]


def _barycentric_diff(nodes):
    """Polynomial differentiation matrix on arbitrary 1D nodes."""
    n = len(nodes)
    lam = np.ones(n)
    for k in range(n):
        lam[k] = 1.0 / np.prod(nodes[k] - np.delete(nodes, k))
    dmat = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                dmat[i, j] = (lam[j] / lam[i]) / (nodes[i] - nodes[j])
        dmat[i, i] = -np.sum(dmat[i])
    return dmat


def _periodic_diff(n):
    """Spectral differentiation matrix on n uniform periodic points."""
    dmat = np.zeros((n, n))
    for k in range(1, n):
        if n % 2 == 0:
            dmat[np.arange(n), (np.arange(n) - k) % n] = 0.5 * (-1.0) ** k / np.tan(
                np.pi * k / n
            )
        else:
            dmat[np.arange(n), (np.arange(n) - k) % n] = 0.5 * (-1.0) ** k / np.sin(
                np.pi * k / n
            )
    return dmat


def tangential_gradient_entries(surface):
    """Sparse entries of the surface-gradient operator on the product grid.

    grad u = V1 u_t + V2 u_phi with the dual tangent frame (V1, V2);
    derivatives along t by polynomial collocation on the Gauss nodes,
    along phi by the periodic spectral matrix.  Returns (rows, cols,
    vectors (P, 3)) such that grad u(x_row) = sum_cols vec * u(x_col).
    """
    params = surface.params
    nt, nphi = params["n_theta"], params["n_phi"]
    t_nodes = np.polynomial.legendre.leggauss(nt)[0]
    dt = _barycentric_diff(t_nodes)
    dphi = _periodic_diff(nphi)
    if params["kind"] == "sphere":
        a = b = c = params["R"]
    else:
        a, b, c = params["a"], params["b"], params["c"]
    t = np.repeat(t_nodes, nphi)
    phi = np.tile(2.0 * np.pi * np.arange(nphi) / nphi, nt)
    s = np.sqrt(1.0 - t * t)
    cp, sp = np.cos(phi), np.sin(phi)
    t_t = np.stack([-a * t * cp / s, -b * t * sp / s, c * np.ones_like(t)], axis=-1)
    t_p = np.stack([-a * s * sp, b * s * cp, np.zeros_like(t)], axis=-1)
    ee = np.sum(t_t * t_t, axis=-1)
    ff = np.sum(t_t * t_p, axis=-1)
    gg = np.sum(t_p * t_p, axis=-1)
    det = ee * gg - ff * ff
    v1 = (gg[:, None] * t_t - ff[:, None] * t_p) / det[:, None]
    v2 = (ee[:, None] * t_p - ff[:, None] * t_t) / det[:, None]

    n = surface.n_nodes
    it = np.arange(n) // nphi
    ip = np.arange(n) % nphi
    # t-direction couples nodes on the same meridian
    rows_t = np.repeat(np.arange(n), nt)
    cols_t = (np.tile(np.arange(nt), n)) * nphi + np.repeat(ip, nt)
    vals_t = dt[np.repeat(it, nt), np.tile(np.arange(nt), n)]
    vecs_t = vals_t[:, None] * v1[rows_t]
    # phi-direction couples nodes on the same ring
    rows_p = np.repeat(np.arange(n), nphi)
    cols_p = np.repeat(it, nphi) * nphi + np.tile(np.arange(nphi), n)
    vals_p = dphi[np.repeat(ip, nphi), np.tile(np.arange(nphi), n)]
    vecs_p = vals_p[:, None] * v2[rows_p]
    rows = np.concatenate([rows_t, rows_p])
    cols = np.concatenate([cols_t, cols_p])
    vecs = np.concatenate([vecs_t, vecs_p])
    keep = np.any(vecs != 0.0, axis=1)
    return rows[keep], cols[keep], vecs[keep]


def near_pairs(surface, radius_factor=4.0):
    """Index pairs (i, j), i != j, with |x_i - x_j| below the patch radius."""
    cache = getattr(surface, "_near_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(surface, "_near_cache", cache)
    if radius_factor in cache:
        return cache[radius_factor]
    x = surface.nodes
    h = surface.patch_h
    rows = []
    cols = []
    chunk = 512
    for i0 in range(0, x.shape[0], chunk):
        i1 = min(i0 + chunk, x.shape[0])
        d2 = np.sum((x[i0:i1, None, :] - x[None, :, :]) ** 2, axis=-1)
        rad = radius_factor * np.maximum(h[i0:i1, None], h[None, :])
        ii, jj = np.nonzero(d2 < rad * rad)
        keep = ii + i0 != jj
        rows.append(ii[keep] + i0)
        cols.append(jj[keep])
    cache[radius_factor] = (np.concatenate(rows), np.concatenate(cols))
    return cache[radius_factor]


def make_sphere(R, n_theta, n_phi):
    """Sphere of radius R; exact normals nu = x/R."""
    if n_theta < 8 or n_phi < 16:
        raise ValueError("need n_theta >= 8 and n_phi >= 16")
    if not R > 0.0:
        raise ValueError("R must be positive")
    t, phi, w_ang = _angular_grid(n_theta, n_phi)
    s = np.sqrt(1.0 - t * t)
    normals = np.stack([s * np.cos(phi), s * np.sin(phi), t], axis=-1)
    nodes = R * normals
    weights = R * R * w_ang
    params = {"kind": "sphere", "R": R, "n_theta": n_theta, "n_phi": n_phi}
    return QuadratureSurface(nodes, normals, weights, params)


def make_ellipsoid(a, b, c, n_theta, n_phi):
    """Ellipsoid with semi-axes (a, b, c); metric-tensor area weights."""
    if min(a, b, c) <= 0.0:
        raise ValueError("semi-axes must be positive")
    if n_theta < 8 or n_phi < 16:
        raise ValueError("need n_theta >= 8 and n_phi >= 16")
    t, phi, w_ang = _angular_grid(n_theta, n_phi)
    s = np.sqrt(1.0 - t * t)
    cp, sp = np.cos(phi), np.sin(phi)
    nodes = np.stack([a * s * cp, b * s * sp, c * t], axis=-1)
    # tangents of the (t, phi) parametrisation
    d_t = np.stack([-a * t * cp / s, -b * t * sp / s, c * np.ones_like(t)], axis=-1)
    d_phi = np.stack([-a * s * sp, b * s * cp, np.zeros_like(t)], axis=-1)
    cross = np.cross(d_t, d_phi)
    jac = np.linalg.norm(cross, axis=-1)
    normals = cross / jac[:, None]
    flip = np.sum(normals * nodes, axis=-1) < 0.0
    normals[flip] *= -1.0
    weights = jac * w_ang
    params = {
        "kind": "ellipsoid", "a": a, "b": b, "c": c,
        "n_theta": n_theta, "n_phi": n_phi,
    }
    return QuadratureSurface(nodes, normals, weights, params)


def make_surface(params):
    """Build a surface from a config-style dict (kind, axes, resolution)."""
    kind = params.get("kind", "sphere")
    n_theta = int(params.get("n_theta", 24))
    n_phi = int(params.get("n_phi", 2 * n_theta))
    if kind == "sphere":
        return make_sphere(float(params.get("R", 1.0)), n_theta, n_phi)
    if kind == "ellipsoid":
        return make_ellipsoid(
            float(params["a"]), float(params["b"]), float(params["c"]),
            n_theta, n_phi,
        )
    raise ValueError(f"unknown surface kind {kind!r}")


def unit_normal_at(params, points):
    """Outward unit normal of the generator at arbitrary surface points."""
    pts = np.asarray(points, dtype=float)
    if params.get("kind") == "sphere":
        return pts / params["R"]
    if params.get("kind") == "ellipsoid":
        grad = pts / np.array([params["a"] ** 2, params["b"] ** 2, params["c"] ** 2])
        return grad / np.linalg.norm(grad, axis=-1, keepdims=True)
    raise ValueError("normals need a sphere or ellipsoid generator")


def mean_curvature(surface):
    """Pointwise mean curvature of the generator (positive for convex).

    Analytic for the sphere and ellipsoid kinds; used for the self-patch
    completion of the principal-value layer operator.
    """
    params = surface.params
    if params.get("kind") == "sphere":
        return np.full(surface.n_nodes, 1.0 / params["R"])
    if params.get("kind") == "ellipsoid":
        a, b, c = params["a"], params["b"], params["c"]
        x, y, z = surface.nodes.T
        px, py, pz = x / a**2, y / b**2, z / c**2
        pnorm = np.sqrt(px * px + py * py + pz * pz)
        num = (
            px * px * (1.0 / b**2 + 1.0 / c**2)
            + py * py * (1.0 / a**2 + 1.0 / c**2)
            + pz * pz * (1.0 / a**2 + 1.0 / b**2)
        )
        return num / (2.0 * pnorm**3)
    raise ValueError("mean curvature needs a sphere or ellipsoid generator")


def equal_volume_scale(a, b, c, target_volume):
    """Factor rescaling ellipsoid (a,b,c) to the target enclosed volume."""
    vol = 4.0 * math.pi * a * b * c / 3.0
    return (target_volume / vol) ** (1.0 / 3.0)


def sigma_nu_blocks(surface):
    """Per-node 2x2 Hermitian unitary blocks sigma . nu_i; shape (N, 2, 2)."""
    return sigma_dot(surface.normals)


def sigma_nu(surface):
    """sigma . nu as a dense block-diagonal operator on C^2 node data."""
    from .layerops import BoundaryOperator

    n = surface.n_nodes
    blocks = sigma_nu_blocks(surface)
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    mat.reshape(n, 2, n, 2)[np.arange(n), :, np.arange(n), :] = blocks
    return BoundaryOperator(mat, surface, kind="sigma_nu")


def apply_sigma(blocks, u):
    """Apply per-node sigma.nu blocks to a field of shape (N, 2)."""
    return np.einsum("nij,nj->ni", blocks, u)


def dump_nodes_csv(surface, fh):
    """Node dump: x,y,z,nx,ny,nz,w with 17 significant digits."""
    fh.write("x,y,z,nx,ny,nz,w\n")
    for p, nu, w in zip(surface.nodes, surface.normals, surface.weights):
        vals = [p[0], p[1], p[2], nu[0], nu[1], nu[2], w]
        fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
