"""Spherical harmonics and C^2-valued spherical harmonic spinors.

Harmonics Y_n^l use the orthonormal L^2(S^2) convention with the
Condon-Shortley phase, evaluated by the stable fully-normalised associated
Legendre recurrence.  The phase convention is pinned down numerically by the
swap identity (sigma.nu) psi_{j +- 1/2} = psi_{j -+ 1/2}, which the test
suite enforces pointwise.

The spinors, for half-odd j and mu in {-j, ..., j},

    psi_{j-1/2}^{mu} = ( sqrt(j+mu) Y_{j-1/2}^{mu-1/2},
                         sqrt(j-mu) Y_{j-1/2}^{mu+1/2} ) / sqrt(2j)

    psi_{j+1/2}^{mu} = ( sqrt(j+1-mu) Y_{j+1/2}^{mu-1/2},
                        -sqrt(j+1+mu) Y_{j+1/2}^{mu+1/2} ) / sqrt(2j+2)

form a complete orthonormal set of L^2(S^2)^2 spanning the invariant
subspaces of the radial decomposition.
"""

import math
from dataclasses import dataclass

import numpy as np

from .halfint import HalfInt

_INV_SQRT_4PI = 0.5 / math.sqrt(math.pi)


@dataclass(frozen=True)
class SpinorLabel:
    """Labels psi^{mu}_{j -+ 1/2}: total momentum j, projection mu, branch.

    branch '-' selects psi_{j-1/2}, branch '+' selects psi_{j+1/2}.
    """

    j: HalfInt
    mu_twice: int
    branch: str

    def __post_init__(self):
        if self.branch not in ("+", "-"):
            raise ValueError("branch must be '+' or '-'")
        if self.j.is_integer:
            raise ValueError("j must be half-odd (1/2, 3/2, ...)")
        if abs(self.mu_twice) > self.j.twice_value:
            raise ValueError("|mu| must not exceed j")
        if (self.mu_twice - self.j.twice_value) % 2 != 0:
            raise ValueError("mu must be half-odd alongside j")

    @classmethod
    def of(cls, j, mu, branch):
        j = HalfInt.of(j)
        mu_twice = mu.twice_value if isinstance(mu, HalfInt) else int(round(2 * mu))
        return cls(j, mu_twice, branch)

    @property
    def mu(self):
        return self.mu_twice / 2.0

    @property
    def orbital_n(self):
        """Degree of the harmonics entering this spinor: j -+ 1/2."""
        if self.branch == "-":
            return (self.j.twice_value - 1) // 2
        return (self.j.twice_value + 1) // 2

    def swapped(self):
        return SpinorLabel(self.j, self.mu_twice, "+" if self.branch == "-" else "-")


def _legendre_norm(n, l, t, s):
    """Fully normalised P-bar_n^l(t) with s = sin(theta) = sqrt(1-t^2).

    Normalised so that Y_n^l = P-bar_n^l(cos theta) e^{i l phi} integrates
    to one on the unit sphere; includes the Condon-Shortley phase.
    """
    pll = np.full_like(t, _INV_SQRT_4PI)
    for k in range(1, l + 1):
        pll = -math.sqrt((2.0 * k + 1.0) / (2.0 * k)) * s * pll
    if n == l:
        return pll
    pnm1 = pll
    pn = math.sqrt(2.0 * l + 3.0) * t * pll
    for k in range(l + 2, n + 1):
        a = math.sqrt((4.0 * k * k - 1.0) / (k * k - l * l))
        b = math.sqrt(
            ((2.0 * k + 1.0) * (k - 1.0 + l) * (k - 1.0 - l))
            / ((2.0 * k - 3.0) * (k * k - l * l))
        )
        pn, pnm1 = a * t * pn - b * pnm1, pn
    return pn if n > l else pnm1


def spherical_harmonic(n, ell, points):
    """Orthonormal Y_n^ell at unit vectors `points` (shape (..., 3)).

    Condon-Shortley phase; raises for |ell| > n.
    """
    if abs(ell) > n:
        raise ValueError(f"|ell|={abs(ell)} exceeds degree n={n}")
    pts = np.asarray(points, dtype=float)
    scalar_in = pts.ndim == 1
    pts = np.atleast_2d(pts)
    t = pts[..., 2]
    s = np.hypot(pts[..., 0], pts[..., 1])
    phi = np.arctan2(pts[..., 1], pts[..., 0])
    l = abs(ell)
    pbar = _legendre_norm(n, l, t, s)
    val = pbar * np.exp(1j * l * phi)
    if ell < 0:
        val = (-1.0) ** l * np.conj(val)
    return val[0] if scalar_in else val


def spinor(label, points):
    """psi^{mu}_{j -+ 1/2} at unit vectors `points`; shape (..., 2) complex."""
    label = label if isinstance(label, SpinorLabel) else SpinorLabel.of(*label)
    pts = np.asarray(points, dtype=float)
    scalar_in = pts.ndim == 1
    pts = np.atleast_2d(pts)
    n = label.orbital_n
    jv = label.j.value
    mu = label.mu
    lo = (label.mu_twice - 1) // 2
    hi = (label.mu_twice + 1) // 2
    out = np.zeros(pts.shape[:-1] + (2,), dtype=complex)
    if label.branch == "-":
        c_up, c_dn = math.sqrt(jv + mu), math.sqrt(jv - mu)
        norm = 1.0 / math.sqrt(2.0 * jv)
    else:
        c_up, c_dn = math.sqrt(jv + 1.0 - mu), -math.sqrt(jv + 1.0 + mu)
        norm = 1.0 / math.sqrt(2.0 * jv + 2.0)
    if c_up != 0.0 and abs(lo) <= n:
        out[..., 0] = c_up * spherical_harmonic(n, lo, pts)
    if c_dn != 0.0 and abs(hi) <= n:
        out[..., 1] = c_dn * spherical_harmonic(n, hi, pts)
    out *= norm
    return out[0] if scalar_in else out


def spinor_labels(j_max, branches="+-"):
    """All labels with j <= j_max, every mu, given branches."""
    j_max = HalfInt.of(j_max)
    labels = []
    for tj in range(1, j_max.twice_value + 1, 2):
        for mu2 in range(-tj, tj + 1, 2):
            for br in branches:
                labels.append(SpinorLabel(HalfInt(tj), mu2, br))
    return labels


def sigma_dot(vecs):
    """Pauli matrices contracted with 3-vectors: (...,3) -> (...,2,2)."""
    v = np.asarray(vecs, dtype=float)
    out = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = v[..., 2]
    out[..., 0, 1] = v[..., 0] - 1j * v[..., 1]
    out[..., 1, 0] = v[..., 0] + 1j * v[..., 1]
    out[..., 1, 1] = -v[..., 2]
    return out
