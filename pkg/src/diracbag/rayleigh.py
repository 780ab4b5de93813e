"""Rayleigh functional R(u) = <(sigma.nu) K_m (sigma.nu) u, u> / |u|^2 and
its constrained maximum over the discrete Hardy space range(P+).

The restriction of the Hermitian operator (sigma.nu) K_m (sigma.nu) to the
orthonormal range basis turns the constrained maximisation into a plain
top eigenvalue problem; the maximiser satisfies the Euler-Lagrange
equation P+* u = (1/R_Omega) (sigma.nu) K_m (sigma.nu) u, and 1/R_Omega is
the smallest admissible value of the boundary eigenvalue-type problem
whose full reduced pencil is reported for diagnostics.

On a ball 1/R_Omega equals the tau -> -infty first-order coefficient
L* = lim (lambda_1^+(tau) - m) e^{-tau}; `compare_Lstar` measures the gap
between L(tau_probe) from the boundary-integral solver and 1/R_Omega.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hardy import STATIC, build_projections
from .layerops import kernel_matrix_K
from .linalg import lift, symmetrize, weight_vector
from .surface import apply_sigma, sigma_nu_blocks
from .sphspinor import SpinorLabel, spinor


@dataclass
class RayleighResult:
    r_omega: float
    maximizer: np.ndarray                 # (N, 2), weighted-normalised
    el_residual: float
    excluded_mode_overlap: float = float("nan")
    pencil: np.ndarray = field(default=None, repr=False)


def _sandwich(surface):
    """(sigma.nu) K_m (sigma.nu) as a dense matrix on C^2 node data."""
    n = surface.n_nodes
    kmat = kernel_matrix_K(surface, STATIC)
    sn = sigma_nu_blocks(surface)
    out = np.einsum("iab,ij,jbc->iajc", sn, kmat, sn)
    return out.reshape(2 * n, 2 * n)


def rayleigh_value(surface, u):
    """R(u) for a C^2 boundary field; real up to discretisation roundoff."""
    u = np.asarray(u, dtype=complex).reshape(surface.n_nodes, 2)
    w = surface.weights
    norm_sq = float(np.sum(w * np.sum(np.abs(u) ** 2, axis=1)))
    if norm_sq == 0.0:
        raise ValueError("Rayleigh quotient of the zero field")
    sn = sigma_nu_blocks(surface)
    su = apply_sigma(sn, u)
    kmat = kernel_matrix_K(surface, STATIC)
    ksu = np.stack([kmat @ su[:, 0], kmat @ su[:, 1]], axis=1)
    asu = apply_sigma(sn, ksu)
    val = complex(np.sum(w * np.sum(asu * np.conj(u), axis=1)))
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1.0) * norm_sq:
        warnings.warn(f"Rayleigh value has imaginary residue {val.imag:.2e}")
    return val.real / norm_sq


def rayleigh_max(surface, projections=None, want_pencil=False):
    """Maximise R over range(P+) via the reduced Hermitian eigenproblem."""
    pp = projections or build_projections(surface)
    basis = pp.range_basis_sym                      # (2N, r), orthonormal
    a_sym = symmetrize(_sandwich(surface), surface)
    a_basis = a_sym @ basis
    reduced = basis.conj().T @ a_basis
    reduced = 0.5 * (reduced + reduced.conj().T)
    evals, evecs = np.linalg.eigh(reduced)
    r_omega = float(evals[-1])
    u_sym = basis @ evecs[:, -1]
    u = lift(u_sym, surface)
    w = weight_vector(surface)
    norm_u = math.sqrt(float(np.sum(w * np.abs(u) ** 2)))
    u /= norm_u

    el = pp.p_plus_adj.matrix @ u - (1.0 / r_omega) * (
        lift(a_sym @ (np.sqrt(w) * u), surface)
    )
    el_residual = math.sqrt(float(np.sum(w * np.abs(el) ** 2)))

    overlap = float("nan")
    if surface.params.get("kind") == "sphere":
        unit = surface.nodes / surface.params["R"]
        # the d_0 = 1 mode of K_m enters R through its preimage psi_1
        excluded = [
            spinor(SpinorLabel.of("1/2", mu, "+"), unit).reshape(-1)
            for mu in (-0.5, 0.5)
        ]
        acc = 0.0
        for psi in excluded:
            nrm = math.sqrt(float(np.sum(w * np.abs(psi) ** 2)))
            acc += abs(np.sum(w * u * np.conj(psi)) / nrm) ** 2
        overlap = math.sqrt(acc)

    pencil = None
    if want_pencil:
        p_adj_sym = symmetrize(pp.p_plus_adj.matrix, surface)
        lhs = basis.conj().T @ (p_adj_sym @ basis)
        vals = scipy.linalg.eigvals(lhs, reduced)
        pencil = np.sort_complex(vals)

    return RayleighResult(
        r_omega=r_omega,
        maximizer=u.reshape(surface.n_nodes, 2),
        el_residual=float(el_residual),
        excluded_mode_overlap=overlap,
        pencil=pencil,
    )


def compare_Lstar(surface, m, tau_probe=-6.0, delta=0.1, result=None, projections=None):
    """Measure L(tau_probe) against 1/R_Omega.

    The eigenvalue at the deeply negative probe comes from the combined
    boundary equation (`refine_deep_gap`), which is the only conditioning
    of the boundary system that resolves gaps of order e^tau; the report
    carries L = (lambda - m) e^{-tau}, 1/R_Omega, and their product.
    """
    from .bie import refine_deep_gap

    pp = projections or build_projections(surface)
    res = result or rayleigh_max(surface, pp)
    inv_r = 1.0 / res.r_omega
    pair = refine_deep_gap(surface, m, tau_probe, projections=pp)
    l_probe = (pair.lam - m) * math.exp(-tau_probe)
    return {
        "tau_probe": tau_probe,
        "lambda": pair.lam,
        "L_probe": l_probe,
        "R_omega": res.r_omega,
        "inv_R": inv_r,
        "product": l_probe * res.r_omega,
        "inequality_ok": l_probe >= (1.0 - delta) * inv_r,
        "sigma_min": pair.sigma_min,
        "multiplicity": pair.multiplicity,
    }
