"""General-domain eigenvalue solver via the boundary integral system.

At an eigenvalue, the trace u of the upper spinor component solves

    M1(lambda, tau) u := [I - 2i W (sigma.nu) + 2 (lambda+m) e^tau K] u = 0,

with the companion system M2 (the second boundary equation) as a
cross-check.  Since M1 = 2P- + 2(lambda+m)e^tau K and K is compact, the
raw smallest singular value of the discretised M1 collapses on unresolved
high modes and would mask the eigenvalues; detection therefore restricts
M1 to a resolved trial frame (spinor modes pulled back through the
parametric grid), where the eigenvalue dips stand out against a floor set
by the smallest resolved K eigenvalue.  Scans bracket the dips,
golden-section refines them, and curves in tau are continued with brackets
from the growth bound (lambda - m) <= (lambda(tau0) - m) e^{tau - tau0}.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_zero
from .hardy import trial_frame
from .layerops import SpectralParams, kernel_matrix_K, kernel_matrix_W
from .linalg import lift, symmetrize, weight_vector
from .surface import sigma_nu_blocks

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoEigenvalueError(RuntimeError):
    pass


@dataclass
class BoundarySystem:
    """Dense pair (M1, M2) at one spectral point."""

    m1: np.ndarray
    m2: np.ndarray
    lam: float
    tau: float
    surface: object


@dataclass
class BieEigenpair:
    """Accepted eigenvalue with its boundary trace u and diagnostics.

    v = i e^tau (sigma.nu) u holds exactly by construction; multiplicity
    counts the bottom singular-value cluster below the detection tolerance
    (even at true eigenvalues).
    """

    tau: float
    lam: float
    u: np.ndarray
    sigma_min: float
    cross_residual: float
    tol: float
    multiplicity: int
    surface: object = None

    @property
    def v(self):
        sn = sigma_nu_blocks(self.surface)
        return 1j * math.exp(self.tau) * np.einsum("nij,nj->ni", sn, self.u)


def _right_sigma(a, blocks):
    n = blocks.shape[0]
    av = a.reshape(a.shape[0], n, 2)
    return np.einsum("ajk,jkl->ajl", av, blocks).reshape(a.shape)


def _left_sigma(blocks, a):
    n = blocks.shape[0]
    av = a.reshape(n, 2, a.shape[1])
    return np.einsum("jkl,jlb->jkb", blocks, av).reshape(a.shape)


def _k_blocks(kmat):
    n = kmat.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    view = out.reshape(n, 2, n, 2)
    view[:, 0, :, 0] = kmat
    view[:, 1, :, 1] = kmat
    return out


def build_system(surface, m, tau, lam, with_m2=True):
    """Assemble M1 (and optionally M2) at the spectral point lambda.

    M2 is only needed for the cross-check at accepted eigenvalues, so scan
    and line-search evaluations skip it.
    """
    if abs(tau) > 700.0:
        raise ValueError("e^tau out of double range; use the ball asymptotics")
    params = SpectralParams(lam, m)
    kmat = kernel_matrix_K(surface, params)
    wmat = kernel_matrix_W(surface, params)
    sn = sigma_nu_blocks(surface)
    n2 = 2 * surface.n_nodes
    eye = np.eye(n2)
    kb = _k_blocks(kmat)
    m1 = eye - 2j * _right_sigma(wmat, sn) + (2.0 * (lam + m) * math.exp(tau)) * kb
    m2 = None
    if with_m2:
        sw = _left_sigma(sn, wmat)
        sks = _left_sigma(sn, _right_sigma(kb, sn))
        m2 = eye - 2j * sw - (2.0 * (lam - m) * math.exp(-tau)) * sks
    return BoundarySystem(m1, m2, lam, tau, surface)


def detection_tol(surface, m, lam_ref=None):
    """10x the operator-identity residual on the resolved frame.

    Measures the quarter identity (W sn)^2 + (lam^2-m^2)(K sn)^2 + 1/4 and
    the anticommutator identity {K sn, W sn} restricted to the trial frame
    at a reference lambda; the smaller of the two tracks the per-mode
    quadrature error that bounds how deep sigma_min can dip at a true
    eigenvalue.  Cached per (surface, m).
    """
    cache = getattr(surface, "_bie_tol_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(surface, "_bie_tol_cache", cache)
    if m in cache:
        return cache[m]
    lam = lam_ref if lam_ref is not None else m + 0.5
    params = SpectralParams(lam, m)
    sn = sigma_nu_blocks(surface)
    ws = symmetrize(_right_sigma(kernel_matrix_W(surface, params), sn), surface)
    ks = symmetrize(
        _right_sigma(_k_blocks(kernel_matrix_K(surface, params)), sn), surface
    )
    frame = trial_frame(surface)
    b2 = lam * lam - m * m
    quarter = ws @ (ws @ frame) + b2 * (ks @ (ks @ frame)) + 0.25 * frame
    anti = ks @ (ws @ frame) + ws @ (ks @ frame)
    r_quarter = float(np.linalg.svd(quarter, compute_uv=False)[0])
    r_anti = float(np.linalg.svd(anti, compute_uv=False)[0])
    cache[m] = 10.0 * min(r_quarter, r_anti)
    return cache[m]


def lambda_max_default(surface, m):
    """Scan cap sqrt((z_{5/2,1}/R_equiv)^2 + m^2), R_equiv the equal-volume radius."""
    r_eq = (3.0 * surface.volume() / (4.0 * math.pi)) ** (1.0 / 3.0)
    z = bessel_zero("5/2", 1)
    return math.sqrt((z / r_eq) ** 2 + m * m)


def _lifted_frame(surface):
    cache = getattr(surface, "_lifted_frame_cache", None)
    if cache is None:
        frame = trial_frame(surface)
        d = np.sqrt(weight_vector(surface))
        cache = (frame, frame / d[:, None], d)
        object.__setattr__(surface, "_lifted_frame_cache", cache)
    return cache


def _restricted_block(surface, m, tau, lam):
    """Columns of the symmetrised M1 applied to the trial frame.

    Never forms the (2N)^2 system matrix: one dense product per operator.
    """
    if abs(tau) > 700.0:
        raise ValueError("e^tau out of double range; use the ball asymptotics")
    params = SpectralParams(lam, m)
    kmat = kernel_matrix_K(surface, params)
    wmat = kernel_matrix_W(surface, params)
    sn = sigma_nu_blocks(surface)
    frame, lifted, d = _lifted_frame(surface)
    n = surface.n_nodes
    ncols = frame.shape[1]
    g2 = lifted.reshape(n, 2, ncols)
    sg = np.einsum("nij,njl->nil", sn, g2).reshape(2 * n, ncols)
    wsg = wmat @ sg
    kg = np.empty_like(lifted).reshape(n, 2, ncols)
    kg[:, 0, :] = kmat @ g2[:, 0, :]
    kg[:, 1, :] = kmat @ g2[:, 1, :]
    m1g = (
        lifted
        - 2j * wsg
        + (2.0 * (lam + m) * math.exp(tau)) * kg.reshape(2 * n, ncols)
    )
    return d[:, None] * m1g


def _restricted_min(surface, m, tau, lam, want_vectors=False):
    block = _restricted_block(surface, m, tau, lam)
    if not want_vectors:
        sigmas = np.linalg.svd(block, compute_uv=False)
        return sigmas[::-1], None, None
    sys = build_system(surface, m, tau, lam, with_m2=True)
    frame = trial_frame(surface)
    _, sigmas, vt = np.linalg.svd(block, full_matrices=False)
    coeff = vt.conj().T[:, ::-1]
    return sigmas[::-1], frame @ coeff, sys


def sigma_min_scan(surface, m, tau, lambda_grid):
    """(lambda, sigma_min of the frame-restricted M1) along the grid.

    Eigenvalue dips are V-shaped with O(1) slopes, so the grid spacing
    should stay below ~0.05 in lambda; `default_scan_grid` obliges.
    """
    out = []
    for lam in np.asarray(lambda_grid, dtype=float):
        sigmas, _, _ = _restricted_min(surface, m, tau, float(lam))
        out.append((float(lam), float(sigmas[0])))
    return out


def default_scan_grid(surface, m, n_points=None, lam_max=None):
    """Uniform scan grid on (m, lambda_max) resolving the expected dips."""
    hi = lam_max if lam_max is not None else lambda_max_default(surface, m)
    if n_points is None:
        n_points = max(24, int((hi - m) / 0.05))
    return np.linspace(m + 0.02 * (hi - m), hi, n_points)


def candidate_brackets(scan):
    """Brackets around interior local minima of a sigma_min scan."""
    lams = [p[0] for p in scan]
    vals = [p[1] for p in scan]
    out = []
    for i in range(1, len(scan) - 1):
        if vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
            out.append((lams[i - 1], lams[i + 1]))
    return out


def _bottom_cluster(sigmas, tol):
    """Size of the bottom singular-value cluster (largest ratio jump) under tol."""
    below = int(np.sum(sigmas < tol))
    if below == 0:
        return 0
    limit = min(max(below, 1), 8)
    best_split, best_ratio = 1, 0.0
    for i in range(1, limit + 1):
        if i == len(sigmas):
            break
        ratio = sigmas[i] / max(sigmas[i - 1], 1e-300)
        if ratio >= best_ratio:
            best_ratio, best_split = ratio, i
    return min(best_split, below)


def _tol_scale(m, tau, lam):
    """Magnitude of the boundary system relative to the tol's reference.

    The residual floor at a true eigenvalue scales with the coefficient
    2(lam+m)e^tau of the compact term (K magnitude taken at the d_1 = 1/3
    scale); detection_tol is measured at (lam_ref, tau=0).
    """
    size = 1.0 + (2.0 / 3.0) * abs(lam + m) * math.exp(tau)
    ref = 1.0 + (2.0 / 3.0) * abs(2.0 * m + 0.5)
    return max(1.0, size / ref)


def refine_eigenvalue(surface, m, tau, bracket, xtol=1e-8, tol=None):
    """Golden-section minimisation of the restricted sigma_min over a bracket.

    Accepts the minimum as an eigenvalue when sigma_min < tol (default:
    the adaptive detection tolerance, rescaled by the tau-dependent system
    magnitude); returns the eigenpair with the normalised singular vector
    and the M2 cross-check residual.
    """
    base_tol = tol if tol is not None else detection_tol(surface, m)
    tol = base_tol * _tol_scale(m, tau, 0.5 * (bracket[0] + bracket[1]))
    a, b = float(bracket[0]), float(bracket[1])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = _restricted_min(surface, m, tau, x1)[0][0]
    f2 = _restricted_min(surface, m, tau, x2)[0][0]
    while b - a > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = _restricted_min(surface, m, tau, x1)[0][0]
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = _restricted_min(surface, m, tau, x2)[0][0]
    lam = 0.5 * (a + b)
    sigmas, vecs, sys = _restricted_min(surface, m, tau, lam, want_vectors=True)
    if sigmas[0] >= tol:
        raise NoEigenvalueError(
            f"sigma_min {sigmas[0]:.3e} at lambda={lam:.6f} is above tol {tol:.3e}"
        )
    mult = _bottom_cluster(sigmas, tol)
    u_sym = vecs[:, 0]
    u = lift(u_sym, surface)
    w = weight_vector(surface)
    norm_u = math.sqrt(float(np.sum(w * np.abs(u) ** 2)))
    cross = sys.m2 @ u
    cross_residual = math.sqrt(float(np.sum(w * np.abs(cross) ** 2))) / norm_u
    return BieEigenpair(
        tau=tau,
        lam=lam,
        u=(u / norm_u).reshape(surface.n_nodes, 2),
        sigma_min=float(sigmas[0]),
        cross_residual=float(cross_residual),
        tol=tol,
        multiplicity=mult,
        surface=surface,
    )


def refine_deep_gap(surface, m, tau, projections=None, iterations=2):
    """First eigenvalue at deeply negative tau via the combined equation.

    M1's eigenvalue dip scales like e^tau and drowns in quadrature noise
    for tau << 0.  Adding the two boundary equations (they are dependent
    through the anticommutator identity) gives

        [I - i{W, sigma.nu} + (lam+m) e^tau K] u = L (sigma.nu) K (sigma.nu) u,

    with L = (lam - m) e^{-tau} an O(1) unknown: a pencil linear in L once
    the kernels are frozen at lam-hat = m + L-hat e^tau, solved on the
    discrete Hardy basis (where the constants identity pins the noise).
    Two Picard sweeps refresh the kernels at the found lambda.
    """
    from .hardy import build_projections
    from .layerops import kernel_matrix_anticommutator

    pp = projections or build_projections(surface)
    basis = pp.range_basis_sym
    sn = sigma_nu_blocks(surface)
    n2 = 2 * surface.n_nodes
    eye = np.eye(n2)
    lam_hat = m
    l_star = None
    vec = None
    resid = None
    for _ in range(iterations):
        params = SpectralParams(lam_hat, m)
        kb = _k_blocks(kernel_matrix_K(surface, params))
        ac = kernel_matrix_anticommutator(surface, params)
        b0 = eye - 1j * ac + ((lam_hat + m) * math.exp(tau)) * kb
        b1 = _left_sigma(sn, _right_sigma(kb, sn))
        a0 = basis.conj().T @ (symmetrize(b0, surface) @ basis)
        a1 = basis.conj().T @ (symmetrize(b1, surface) @ basis)
        import scipy.linalg

        vals, vecs = scipy.linalg.eig(a0, a1)
        real = vals.real
        good = (np.abs(vals.imag) < 1e-3 * np.maximum(np.abs(real), 1.0)) & (real > 0)
        if not np.any(good):
            raise NoEigenvalueError("no positive real pencil eigenvalue found")
        idx = np.nonzero(good)[0]
        pick = idx[np.argmin(real[idx])]
        l_star = float(real[pick])
        # multiplicity: pencil eigenvalues clustered at the minimum
        mult = int(np.sum(np.abs(vals[good] - l_star) < 1e-3 * l_star))
        y = vecs[:, pick]
        u_sym = basis @ y
        resid_vec = (symmetrize(b0, surface) - l_star * symmetrize(b1, surface)) @ u_sym
        resid = float(np.linalg.norm(resid_vec) / np.linalg.norm(u_sym))
        vec = u_sym
        lam_hat = m + l_star * math.exp(tau)
    u = lift(vec, surface)
    w = weight_vector(surface)
    norm_u = math.sqrt(float(np.sum(w * np.abs(u) ** 2)))
    return BieEigenpair(
        tau=tau,
        lam=lam_hat,
        u=(u / norm_u).reshape(surface.n_nodes, 2),
        sigma_min=resid,
        cross_residual=resid,
        tol=detection_tol(surface, m),
        multiplicity=mult,
        surface=surface,
    )


def trace_curve(surface, m, tau_grid, seed_bracket, xtol=1e-8):
    """Continuation of one eigenvalue curve over an ordered tau grid.

    The first point is refined inside `seed_bracket`; subsequent brackets
    follow from monotonicity and the growth bound
    (lambda - m) <= (lambda_prev - m) e^{dtau}.  A lost track truncates the
    curve with a warning.
    """
    taus = [float(t) for t in tau_grid]
    out = []
    bracket = seed_bracket
    prev = None
    for tau in taus:
        if prev is not None:
            dtau = tau - prev.tau
            gap = prev.lam - m
            grown = m + gap * math.exp(dtau)
            lo, hi = min(prev.lam, grown), max(prev.lam, grown)
            pad = max(4.0 * xtol, 0.05 * (hi - lo), 1e-6)
            bracket = (lo - pad, hi + pad)
        try:
            pair = refine_eigenvalue(surface, m, tau, bracket, xtol=xtol)
        except NoEigenvalueError as err:
            warnings.warn(f"curve lost at tau={tau}: {err}")
            break
        out.append(pair)
        prev = pair
    return out


# ---------------------------------------------------------------------------
# volume reconstruction and norm identities


def _radial_rule(surface, n_radial):
    """Star-shaped volume rule: x = t * node, dV = t^2 (x.nu) w dt.

    Gauss on [0, t_safe] plus a Simpson shell patch [t_safe, 1] whose outer
    value is the (exact) boundary trace; the potential cannot be evaluated
    accurately closer than ~2 patch sizes to the surface.
    """
    support = np.sum(surface.nodes * surface.normals, axis=1)
    t_safe = 1.0 - 2.0 * float(np.max(surface.patch_h)) / float(np.min(support))
    if not 0.2 < t_safe < 1.0:
        raise ValueError("surface too coarse for interior reconstruction")
    g, gw = np.polynomial.legendre.leggauss(n_radial)
    t_in = 0.5 * t_safe * (g + 1.0)
    w_in = 0.5 * t_safe * gw
    return t_in, w_in, t_safe


def eigenfunction_norms(pair, surface, m, n_radial=12):
    """Volume norms of the reconstructed eigenfunction and the identities.

    Reports both sides of e^tau |u|^2_dOmega = (lam-m)|u|^2_Omega -
    (lam+m)|v|^2_Omega, the u/v volume fractions, and the two derivative
    formulas (boundary and volume form).
    """
    from .layerops import reconstruct_eigenfunction

    lam, tau = pair.lam, pair.tau
    params = SpectralParams(lam, m)
    g4 = np.concatenate([pair.u, pair.v], axis=1)
    t_in, w_in, t_safe = _radial_rule(surface, n_radial)
    cone = np.sum(surface.nodes * surface.normals, axis=1) * surface.weights

    def shell_density(vals4):
        u2 = np.sum(np.abs(vals4[:, :2]) ** 2, axis=1)
        v2 = np.sum(np.abs(vals4[:, 2:]) ** 2, axis=1)
        return float(np.sum(cone * u2)), float(np.sum(cone * v2))

    uu = vv = 0.0
    for t, wt in zip(t_in, w_in):
        vals = reconstruct_eigenfunction(
            surface, params, g4, t * surface.nodes, min_distance_factor=0.0
        )
        du, dv = shell_density(vals)
        uu += wt * t * t * du
        vv += wt * t * t * dv
    # Simpson over the shell [t_safe, 1]: interior, midpoint, exact trace
    t_mid = 0.5 * (t_safe + 1.0)
    vals_a = reconstruct_eigenfunction(
        surface, params, g4, t_safe * surface.nodes, min_distance_factor=0.0
    )
    vals_m = reconstruct_eigenfunction(
        surface, params, g4, t_mid * surface.nodes, min_distance_factor=0.0
    )
    du_a, dv_a = shell_density(vals_a)
    du_m, dv_m = shell_density(vals_m)
    du_b, dv_b = shell_density(g4)
    hshell = 1.0 - t_safe
    uu += hshell / 6.0 * (t_safe**2 * du_a + 4.0 * t_mid**2 * du_m + du_b)
    vv += hshell / 6.0 * (t_safe**2 * dv_a + 4.0 * t_mid**2 * dv_m + dv_b)

    w = weight_vector(surface)
    bd_u = float(np.sum(w * np.abs(pair.u.reshape(-1)) ** 2))
    lhs = math.exp(tau) * bd_u
    rhs = (lam - m) * uu - (lam + m) * vv
    total = uu + vv
    return {
        "u_volume_sq": uu,
        "v_volume_sq": vv,
        "u_fraction": uu / total,
        "v_fraction": vv / total,
        "norm_identity_lhs": lhs,
        "norm_identity_rhs": rhs,
        "norm_identity_residual": abs(lhs - rhs) / max(abs(lhs), abs(rhs)),
        "dlambda_boundary": lhs / total,
        "dlambda_volume": (lam - m) * uu / total - (lam + m) * vv / total,
    }


# ---------------------------------------------------------------------------
# CSV: ball schema plus sigma_min, cross_residual; channel sentinel -1


BIE_CSV_HEADER = "tau,lambda,j2,branch,k,residual,multiplicity,sigma_min,cross_residual"


def write_bie_csv(pairs, fh):
    fh.write(BIE_CSV_HEADER + "\n")
    for p in pairs:
        fh.write(
            f"{p.tau:.17g},{p.lam:.17g},-1,-,-1,{p.sigma_min:.17g},"
            f"{p.multiplicity},{p.sigma_min:.17g},{p.cross_residual:.17g}\n"
        )
