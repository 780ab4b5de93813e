"""Exact spectral curves of the bag operator family on a ball of radius R.

On each invariant subspace the eigenvalue condition reduces to inverting

    h(lambda) = sign(lambda+m) sqrt((lambda-m)/(lambda+m))
                * J_{j+1}(x) / J_j(x),        x = sqrt(lambda^2-m^2) R,

on a channel interval whose endpoints come from Bessel zeros; tau maps to
the unique root of h(lambda) = e^tau.  The solver works in the variable x
(and in log h), so the exponentially small gaps lambda - m at tau << 0 are
produced without cancellation.  The '+' subspaces are obtained from the
exact mirror identity h+(lambda) = 1 / h-(-lambda), so the spectrum
symmetry lambda(tau) <-> -lambda(-tau) holds to machine precision by
construction.

Root finding: bisection on a logit parametrisation of the interval (the
root can sit within e^{-700} of an endpoint), then a few Newton steps using
the exact log-derivative of the Bessel ratio.  When the root is closer to
an interval endpoint than one float ulp, the sample is returned pinned to
the endpoint and flagged.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bessel import bessel_ratio, bessel_j_half, bessel_zero, ratio_log_derivative
from .halfint import HalfInt

_U_CAP = 745.0


@dataclass(frozen=True)
class BallModel:
    """Ball of radius R > 0 with particle mass m >= 0."""

    R: float
    m: float = 0.0

    def __post_init__(self):
        if not self.R > 0.0:
            raise ValueError("radius R must be positive")
        if self.m < 0.0:
            raise ValueError("mass m must be nonnegative")


@dataclass(frozen=True)
class ChannelIndex:
    """One eigenvalue curve: momentum j, subspace branch, interval index k.

    k = 0 is the interval touching +-m; k >= 1 walks outward through the
    positive-lambda intervals of the '-' branch (negative-lambda for '+'),
    k <= -1 mirrors to the other sign of lambda.
    """

    j: HalfInt
    branch: str
    k: int

    def __post_init__(self):
        if self.branch not in ("+", "-"):
            raise ValueError("branch must be '+' or '-'")
        if self.j.is_integer:
            raise ValueError("j must be half-odd")

    @classmethod
    def of(cls, j, branch, k):
        return cls(HalfInt.of(j), branch, int(k))

    @property
    def multiplicity(self):
        return self.j.twice_value + 1              # 2j + 1 mu-values


@dataclass(frozen=True)
class EigenCurveSample:
    """One (tau, lambda) point on a channel curve.

    `x` stores sqrt(lambda^2 - m^2) R; `gap` is lambda - m (for lambda > 0)
    or lambda + m (for lambda < 0), computed from x without cancellation.
    `pinned` marks samples where the root sits closer to the interval
    endpoint than one ulp (|tau| far in the limit regime).
    """

    tau: float
    lam: float
    channel: ChannelIndex
    residual: float
    multiplicity: int
    x: float = field(repr=False, default=0.0)
    gap: float = field(repr=False, default=0.0)
    pinned: bool = False


# ---------------------------------------------------------------------------
# intervals


def _x_interval_minus(j, k):
    """x-range of I^-_{j,k} plus which end is the zero of h (h -> 0)."""
    if k == 0:
        lo, hi = 0.0, bessel_zero(j, 1)
        zero_end, pole_end = lo, hi
    elif k >= 1:
        lo, hi = bessel_zero(j + HalfInt(2), k), bessel_zero(j, k + 1)
        zero_end, pole_end = lo, hi
    else:
        lo, hi = bessel_zero(j, -k), bessel_zero(j + HalfInt(2), -k)
        zero_end, pole_end = hi, lo               # lambda < -m: h grows as x drops
    return lo, hi, zero_end, pole_end


def _lam_from_x(x, model, negative):
    mu = math.hypot(x / model.R, model.m)
    return -mu if negative else mu


def interval(channel, model):
    """Open lambda-interval I^{branch}_{j,k} of the channel."""
    ch = channel
    lo_x, hi_x, _, _ = _x_interval_minus(ch.j, ch.k)
    neg = ch.k < 0
    a = _lam_from_x(lo_x, model, neg)
    b = _lam_from_x(hi_x, model, neg)
    lo, hi = min(a, b), max(a, b)
    if ch.branch == "+":
        lo, hi = -hi, -lo
    return lo, hi


# ---------------------------------------------------------------------------
# h and its logarithm, on the '-' branch, in x


def _log_h_minus(j, x, model, negative):
    """log h(lambda(x)) for the '-' branch; x strictly inside the interval."""
    R, m = model.R, model.m
    ratio = bessel_ratio(j, x, pole_check=False)
    mu = math.hypot(x / R, m)
    # abs() tolerates sub-ulp endpoint evaluations landing across the
    # ratio's zero; the sign is determined by the interval, not sampled
    if not negative:
        # h = (x/R) / (lambda + m) * ratio,  ratio > 0 inside the interval
        return math.log(x / R) - math.log(mu + m) + math.log(abs(ratio))
    # lambda < -m:  h = -(mu + m) R / x * ratio,  ratio < 0 inside
    return math.log(mu + m) + math.log(R / x) + math.log(abs(ratio))


def _dlog_h_dx(j, x, model, negative):
    R, m = model.R, model.m
    mu = math.hypot(x / R, m)
    rld = ratio_log_derivative(j, x)
    if not negative:
        return 1.0 / x - (x / (R * R * mu)) / (mu + m) + rld
    return (x / (R * R * mu)) / (mu + m) - 1.0 / x + rld


def h_of_lambda(channel, model, lam):
    """h(lambda) on the channel interval (strictly positive there)."""
    ch = channel
    if ch.branch == "+":
        mirrored = ChannelIndex(ch.j, "-", ch.k)
        return 1.0 / h_of_lambda(mirrored, model, -lam)
    lo, hi = interval(ch, model)
    if lam == model.m and ch.k == 0:
        return 0.0                                # continuity limit at lambda = m
    if not (lo < lam < hi):
        raise ValueError(f"lambda={lam!r} outside channel interval ({lo}, {hi})")
    x = model.R * math.sqrt((lam - model.m) * (lam + model.m))
    return math.exp(_log_h_minus(ch.j, x, model, ch.k < 0))


# ---------------------------------------------------------------------------
# inversion


def _u_window(zero_end, pole_end):
    w = abs(pole_end - zero_end)
    floor_lo = max(1e-320, 0.25e-16 * abs(zero_end))
    floor_hi = max(1e-320, 0.25e-16 * abs(pole_end))
    u_lo = max(-_U_CAP, math.log(floor_lo / w))
    u_hi = min(_U_CAP, -math.log(floor_hi / w))
    return u_lo, u_hi


def _sigmoid(u):
    if u >= 0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _solve_channel_minus(j, k, model, tau):
    """Root of log h = tau for channel (j, '-', k); returns (x, log-residual, pinned)."""
    _, _, zero_end, pole_end = _x_interval_minus(j, k)
    negative = k < 0
    span = pole_end - zero_end                    # signed
    u_lo, u_hi = _u_window(zero_end, pole_end)

    def g(u):
        x = zero_end + span * _sigmoid(u)
        return x, _log_h_minus(j, x, model, negative) - tau

    x_lo, g_lo = g(u_lo)
    if g_lo >= 0.0:
        return x_lo, g_lo, True, 0.0              # root beyond resolvable window
    x_hi, g_hi = g(u_hi)
    if g_hi <= 0.0:
        return x_hi, g_hi, True, 0.0

    for _ in range(60):
        u_mid = 0.5 * (u_lo + u_hi)
        x_mid, g_mid = g(u_mid)
        if g_mid <= 0.0:
            u_lo, g_lo = u_mid, g_mid
        else:
            u_hi, g_hi = u_mid, g_mid
    u = 0.5 * (u_lo + u_hi)
    x, gv = g(u)
    best_x, best_g = x, gv
    for _ in range(3):                            # Newton polish in u
        s = _sigmoid(u)
        dxdu = span * s * (1.0 - s)
        dg = _dlog_h_dx(j, x, model, negative) * dxdu
        if dg == 0.0 or not math.isfinite(dg):
            break
        step = gv / dg
        u_new = u - step
        if not (u_lo - 1.0 <= u_new <= u_hi + 1.0):
            break
        u = u_new
        x, gv = g(u)
        if abs(gv) < abs(best_g):
            best_x, best_g = x, gv
        if abs(gv) < 1e-14:
            break
    # achievable |G| is limited by the ulp quantisation of x near endpoints
    floor = abs(_dlog_h_dx(j, best_x, model, negative)) * 2.3e-16 * abs(best_x)
    return best_x, best_g, False, floor


def eigenvalue_at(channel, model, tau):
    """The unique eigenvalue-curve value lambda(tau) on the channel."""
    ch = channel
    if ch.branch == "+":
        mirrored = replace(ch, branch="-")
        sample = eigenvalue_at(mirrored, model, -tau)
        return replace(sample, tau=tau, lam=-sample.lam, gap=-sample.gap, channel=ch)
    x, gv, pinned, floor = _solve_channel_minus(ch.j, ch.k, model, tau)
    negative = ch.k < 0
    lam = _lam_from_x(x, model, negative)
    # gap to the mass shell, exact in x: |lambda| - m = (x/R)^2 / (|lambda| + m)
    mu = abs(lam)
    gap_abs = (x / model.R) ** 2 / (mu + model.m)
    gap = gap_abs if not negative else -gap_abs
    residual = abs(math.expm1(gv)) if abs(gv) < 700 else math.inf
    if not pinned and abs(gv) > max(1e-10, 16.0 * floor):
        raise RuntimeError(
            f"ball solver failed to converge: channel={ch}, tau={tau}, "
            f"log-residual={gv:.3e}"
        )
    return EigenCurveSample(
        tau=tau,
        lam=lam,
        channel=ch,
        residual=residual,
        multiplicity=ch.multiplicity,
        x=x,
        gap=gap,
        pinned=pinned,
    )


def first_positive(model, tau):
    """First positive eigenvalue lambda_1^+(tau); eigenspace dimension 2."""
    return eigenvalue_at(ChannelIndex.of("1/2", "-", 0), model, tau)


def L_of_tau(model, tau):
    """Rescaled first-eigenvalue gap L(tau) = (lambda_1^+(tau) - m) e^{-tau}."""
    sample = first_positive(model, tau)
    if sample.gap <= 0.0:
        return 0.0
    return math.exp(math.log(sample.gap) - tau)


def channels_up_to(j_max, k_max, branches="+-"):
    """All channels with j <= j_max and |k| <= k_max."""
    j_max = HalfInt.of(j_max)
    out = []
    for tj in range(1, j_max.twice_value + 1, 2):
        for br in branches:
            for k in range(-k_max, k_max + 1):
                out.append(ChannelIndex(HalfInt(tj), br, k))
    return out


def curve_sweep(channels, model, tau_grid):
    """Samples for every channel x tau; '+' channels are the mirrored curves."""
    samples = []
    for ch in channels:
        for tau in tau_grid:
            samples.append(eigenvalue_at(ch, model, float(tau)))
    return samples


# ---------------------------------------------------------------------------
# radial eigenfunctions and derivative identities


def _orders(channel):
    """Bessel orders (f, g) = (ell + 1/2, ell' + 1/2) for the channel."""
    j = channel.j
    if channel.branch == "-":
        return j, j + HalfInt(2)
    return j + HalfInt(2), j


def radial_profile(channel, model, lam, r_grid):
    """Radial components (f, g), unnormalised, with g(R) = -e^tau f(R).

    f(r) = sqrt(r) J_{ell+1/2}(b r),
    g(r) = (+-) sqrt(r) (b/(lambda+m)) J_{ell'+1/2}(b r),  b = sqrt(lam^2-m^2).
    """
    p_f, p_g = _orders(channel)
    sign = 1.0 if channel.branch == "+" else -1.0
    b = math.sqrt(max((lam - model.m) * (lam + model.m), 0.0))
    r = np.asarray(r_grid, dtype=float)
    f = np.zeros_like(r)
    gfun = np.zeros_like(r)
    pos = r > 0.0
    f[pos] = [math.sqrt(ri) * bessel_j_half(p_f, b * ri) for ri in r[pos]]
    gfun[pos] = [
        sign * math.sqrt(ri) * b / (lam + model.m) * bessel_j_half(p_g, b * ri)
        for ri in r[pos]
    ]
    return f, gfun


def _radial_norms(channel, model, lam, n_quad=400):
    """(int |f|^2 dr, int |g|^2 dr, |f(R)|^2) on [0, R], Gauss-Legendre."""
    t, w = np.polynomial.legendre.leggauss(n_quad)
    r = 0.5 * model.R * (t + 1.0)
    wr = 0.5 * model.R * w
    f, g = radial_profile(channel, model, lam, r)
    fR, _ = radial_profile(channel, model, lam, np.array([model.R]))
    return float(np.sum(wr * f * f)), float(np.sum(wr * g * g)), float(fR[0] ** 2)


def derivative_check(channel, model, tau, dtau=1e-5):
    """Cross-check the eigenvalue derivative three ways.

    Returns a dict with the finite-difference slope, the boundary-norm
    formula e^tau |u|^2_dOmega / |phi|^2_Omega, the volume-norm formula
    (lam-m)|u|^2 - (lam+m)|v|^2 over |phi|^2, the interior/boundary norm
    identity residual, and the u/v norm fractions.
    """
    s0 = eigenvalue_at(channel, model, tau)
    sp = eigenvalue_at(channel, model, tau + dtau)
    sm = eigenvalue_at(channel, model, tau - dtau)
    fd = (sp.lam - sm.lam) / (2.0 * dtau)
    iff, igg, fR2 = _radial_norms(channel, model, s0.lam)
    total = iff + igg
    lam = s0.lam
    d_boundary = math.exp(tau) * fR2 / total
    d_volume = (lam - model.m) * iff / total - (lam + model.m) * igg / total
    norm_identity_lhs = math.exp(tau) * fR2
    norm_identity_rhs = (lam - model.m) * iff - (lam + model.m) * igg
    return {
        "lambda": lam,
        "fd": fd,
        "boundary_formula": d_boundary,
        "volume_formula": d_volume,
        "norm_identity_residual": abs(norm_identity_lhs - norm_identity_rhs)
        / max(abs(norm_identity_lhs), abs(norm_identity_rhs)),
        "u_fraction": iff / total,
        "v_fraction": igg / total,
    }


# ---------------------------------------------------------------------------
# CSV emission


CSV_HEADER = "tau,lambda,j2,branch,k,residual,multiplicity"


def format_float(v):
    return f"{v:.17g}"


def write_samples_csv(samples, fh):
    """CSV rows per sample; floats at 17 significant digits."""
    fh.write(CSV_HEADER + "\n")
    for s in samples:
        fh.write(
            f"{format_float(s.tau)},{format_float(s.lam)},"
            f"{s.channel.j.twice_value},{s.channel.branch},{s.channel.k},"
            f"{format_float(s.residual)},{s.multiplicity}\n"
        )
