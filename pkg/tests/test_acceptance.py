"""Acceptance suite: one test per criterion, each run at its pinned
resolution, tolerance and runtime budget, printing a PASS line with the
measured values.

Session fixtures share the expensive surfaces and Hardy projections; run
with `pytest -s tests/test_acceptance.py` to watch the per-criterion lines.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from diracbag.ball import (
    BallModel,
    ChannelIndex,
    L_of_tau,
    channels_up_to,
    curve_sweep,
    derivative_check,
    first_positive,
    interval,
)
from diracbag.bie import refine_eigenvalue, sigma_min_scan, candidate_brackets
from diracbag.hardy import build_projections, reflection_residual, trial_frame
from diracbag.layerops import (
    SpectralParams,
    expand_scalar,
    kernel_matrix_anticommutator,
    kernel_matrix_K,
    kernel_matrix_W,
)
from diracbag.linalg import op_norm2, symmetrize
from diracbag.rayleigh import compare_Lstar, rayleigh_max
from diracbag.surface import (
    equal_volume_scale,
    make_ellipsoid,
    make_sphere,
    sigma_nu_blocks,
)
from diracbag.sphspinor import SpinorLabel, spinor


@contextmanager
def budget(name, seconds):
    t0 = time.perf_counter()
    info = {}
    yield info
    elapsed = time.perf_counter() - t0
    detail = " ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}"
                      for k, v in info.items())
    print(f"PASS {name} [{elapsed:.1f}s < {seconds}s] {detail}", flush=True)
    assert elapsed < seconds, f"{name} exceeded its runtime budget"


@pytest.fixture(scope="session")
def sphere16():
    return make_sphere(1.0, 16, 32)


@pytest.fixture(scope="session")
def sphere24():
    return make_sphere(1.0, 24, 48)


@pytest.fixture(scope="session")
def sphere32():
    return make_sphere(1.0, 32, 64)


@pytest.fixture(scope="session")
def ellipsoid24_unit_volume():
    s = equal_volume_scale(2.0, 1.0, 1.0, 4.0 * math.pi / 3.0)
    return make_ellipsoid(2.0 * s, s, s, 24, 48)


@pytest.fixture(scope="session")
def ellipsoid24_raw():
    return make_ellipsoid(2.0, 1.0, 1.0, 24, 48)


@pytest.fixture(scope="session")
def ball_sweep_r3():
    """Criterion 3/4 sample set: j <= 7/2, |k| <= 2, tau in [-6, 6]."""
    model = BallModel(3.0, 1.0)
    taus = np.linspace(-6.0, 6.0, 250)
    chans = channels_up_to("7/2", 2)
    samples = curve_sweep(chans, model, taus)
    return model, chans, taus, samples


def sn_matrix(surf):
    n = surf.n_nodes
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out.reshape(n, 2, n, 2)[np.arange(n), :, np.arange(n), :] = sigma_nu_blocks(surf)
    return out


# ---------------------------------------------------------------------------


def test_criterion_01_ball_first_eigenvalue_limits():
    with budget("1 ball first-eigenvalue limits", 1.0) as info:
        model = BallModel(1.0, 1.0)
        low = first_positive(model, -40.0)
        high = first_positive(model, 40.0)
        info["gap_at_-40"] = low.lam - 1.0
        info["err_at_+40"] = abs(high.lam - math.sqrt(math.pi**2 + 1.0))
        assert low.lam - 1.0 < 1e-8
        assert abs(high.lam - math.sqrt(math.pi**2 + 1.0)) < 1e-8


def test_criterion_02_first_order_asymptotics():
    with budget("2 L(tau) asymptotics", 1.0) as info:
        worst = 0.0
        for radius in (0.5, 1.0, 3.0):
            model = BallModel(radius, 1.0)
            worst = max(worst, abs(L_of_tau(model, -30.0) * radius - 3.0))
        info["worst_LR_minus_3"] = worst
        assert worst < 1e-6
        model = BallModel(1.0, 1.0)
        lvals = [L_of_tau(model, float(t)) for t in np.arange(-30.0, 21.0, 10.0)]
        assert all(b < a for a, b in zip(lvals[:-1], lvals[1:]))


def test_criterion_03_inversion_fidelity(ball_sweep_r3):
    with budget("3 inversion fidelity (1e4 samples)", 10.0) as info:
        _, chans, taus, samples = ball_sweep_r3
        assert len(samples) == len(chans) * len(taus) >= 10_000
        worst = max(s.residual for s in samples)
        info["samples"] = len(samples)
        info["worst_residual"] = worst
        assert worst < 1e-11


def test_criterion_04_monotonicity_and_symmetry(ball_sweep_r3):
    with budget("4 monotonicity + mirror symmetry", 10.0) as info:
        model, chans, taus, samples = ball_sweep_r3
        by_channel = {}
        for s in samples:
            by_channel.setdefault(s.channel, []).append(s)
        for ch, chain in by_channel.items():
            lams = [s.lam for s in chain]
            assert all(b > a for a, b in zip(lams[:-1], lams[1:])), ch
        # mirrored channels on the symmetric tau grid
        worst = 0.0
        for ch in chans:
            if ch.branch != "-":
                continue
            mirrored = ChannelIndex(ch.j, "+", ch.k)
            minus = by_channel[ch]
            plus = by_channel[mirrored]
            for sm, sp in zip(minus, plus[::-1]):
                assert abs(sm.tau + sp.tau) < 1e-12
                worst = max(worst, abs(sm.lam + sp.lam) / max(1.0, abs(sm.lam)))
        info["worst_mirror"] = worst
        assert worst <= 1e-10


def test_criterion_05_derivative_formula():
    with budget("5 derivative formulas", 5.0) as info:
        model = BallModel(1.0, 1.0)
        worst = 0.0
        for tau in (-2.0, 0.0, 2.0):
            rep = derivative_check(ChannelIndex.of("1/2", "-", 0), model, tau)
            worst = max(
                worst,
                abs(rep["boundary_formula"] / rep["fd"] - 1.0),
                abs(rep["volume_formula"] / rep["fd"] - 1.0),
            )
            assert rep["fd"] > 0.0
            assert rep["norm_identity_residual"] < 1e-8
            assert rep["u_fraction"] > 0.5 > rep["v_fraction"]
        info["worst_rel_dev"] = worst
        assert worst < 1e-5


def _dk_errors(surf):
    kmat = kernel_matrix_K(surf, SpectralParams(1.0, 1.0))
    labels = {
        0: SpinorLabel.of("1/2", 0.5, "-"),
        1: SpinorLabel.of("1/2", 0.5, "+"),
        2: SpinorLabel.of("3/2", 0.5, "+"),
        3: SpinorLabel.of("5/2", 0.5, "+"),
    }
    errs = {}
    for k, lb in labels.items():
        u = spinor(lb, surf.nodes)
        ku = np.stack([kmat @ u[:, 0], kmat @ u[:, 1]], axis=1)
        val = np.sum(surf.weights * np.sum(ku * np.conj(u), axis=1)).real
        val /= np.sum(surf.weights * np.sum(np.abs(u) ** 2, axis=1)).real
        errs[k] = abs(val - 1.0 / (2 * k + 1))
    return errs


def test_criterion_06_layer_operator_spectra(sphere24, sphere32):
    with budget("6 K_m spinor-mode spectrum", 30.0) as info:
        e24 = _dk_errors(sphere24)
        info.update({f"err_k{k}_24": v for k, v in e24.items()})
        assert max(e24.values()) < 5e-3
        e32 = _dk_errors(sphere32)
        info["max_err_32"] = max(e32.values())
        assert max(e32.values()) < max(e24.values())


def _identity_residuals(surf, lam, m=1.0):
    """Frame residuals of identities (i)-(iii) at one spectral point."""
    params = SpectralParams(lam, m)
    snm = sn_matrix(surf)
    frame = trial_frame(surf, 7)
    wsym = symmetrize(kernel_matrix_W(surf, params), surf)
    ksym = symmetrize(expand_scalar(kernel_matrix_K(surf, params)), surf)
    ws = wsym @ snm
    ks = ksym @ snm
    b2 = lam * lam - m * m
    quarter = ws @ (ws @ frame) + b2 * (ks @ (ks @ frame)) + 0.25 * frame
    anti = ks @ (ws @ frame) + ws @ (ks @ frame)
    r2 = float(np.linalg.svd(quarter, compute_uv=False)[0])
    r3 = float(np.linalg.svd(anti, compute_uv=False)[0])

    # identity (i) on C^4 data, applied block-wise to (u, v) frame columns
    lamp, lamm = lam + m, lam - m

    def c_alpha(u, v):
        su, sv = snm @ u, snm @ v
        return lamp * (ksym @ sv) + wsym @ su, wsym @ sv + lamm * (ksym @ su)

    r1 = 0.0
    zero = np.zeros_like(frame)
    for u0, v0 in ((frame, zero), (zero, frame)):
        u1, v1 = c_alpha(*c_alpha(u0, v0))
        resid = np.vstack([u1 + 0.25 * u0, v1 + 0.25 * v0])
        r1 = max(r1, float(np.linalg.svd(resid, compute_uv=False)[0]))
    return r1, r2, r3


def test_criterion_07_operator_identities(sphere24, sphere32):
    with budget("7 operator quarter identities", 120.0) as info:
        worst24 = 0.0
        worst32 = 0.0
        for lam in (1.0, 1.5):
            r24 = _identity_residuals(sphere24, lam)
            r32 = _identity_residuals(sphere32, lam)
            assert max(r24) < 0.05, (lam, r24)
            worst24 = max(worst24, *r24)
            worst32 = max(worst32, *r32)
        info["worst_24"] = worst24
        info["worst_32"] = worst32
        assert worst24 < 0.05
        assert worst32 < worst24


def _projection_residuals(surf):
    snm = sn_matrix(surf)
    ws = symmetrize(kernel_matrix_W(surf, SpectralParams(1.0, 1.0)) @ snm, surf)
    frame = trial_frame(surf, 7)
    # P+P- = 1/4 + (W sn)^2; P+^2 - P+ = -P+P-
    prod = ws @ (ws @ frame) + 0.25 * frame
    return float(np.linalg.svd(prod, compute_uv=False)[0])


def test_criterion_08_projection_algebra(sphere16, sphere24, sphere32):
    with budget("8 projection algebra", 120.0) as info:
        pp = build_projections(sphere16)
        n2 = 2 * sphere16.n_nodes
        exact = np.max(np.abs(pp.p_plus.matrix + pp.p_minus.matrix - np.eye(n2)))
        assert exact == 0.0
        r24 = _projection_residuals(sphere24)
        r32 = _projection_residuals(sphere32)
        info["P+P-_24"] = r24
        info["P+P-_32"] = r32
        assert r24 < 0.05
        assert r32 < r24


def test_criterion_09_ball_dichotomy(sphere24, ellipsoid24_raw):
    with budget("9 anticommutator ball dichotomy", 120.0) as info:
        pm = SpectralParams(1.0, 1.0)
        a_sph = op_norm2(
            symmetrize(kernel_matrix_anticommutator(sphere24, pm), sphere24)
        )
        a_ell = op_norm2(
            symmetrize(kernel_matrix_anticommutator(ellipsoid24_raw, pm), ellipsoid24_raw)
        )
        r_sph = reflection_residual(sphere24)
        r_ell = reflection_residual(ellipsoid24_raw)
        info["anticomm_sphere"] = a_sph
        info["anticomm_ellipsoid"] = a_ell
        info["reflection_sphere"] = r_sph
        info["reflection_ellipsoid"] = r_ell
        assert a_sph < 0.02
        assert a_ell > 10.0 * a_sph
        assert r_ell > 100.0 * max(r_sph, 1e-12)


def test_criterion_10_bie_vs_analytic_oracle(sphere16, sphere24, sphere32):
    with budget("10 BIE vs analytic oracle", 300.0) as info:
        m, tau = 1.0, 0.0
        exact = first_positive(BallModel(1.0, m), tau).lam
        grid = np.linspace(m + 0.4, 3.25, 36)
        scan = sigma_min_scan(sphere16, m, tau, grid)
        brackets = candidate_brackets(scan)
        assert brackets, "no sigma_min dip found in the scan window"
        bracket = min(brackets, key=lambda br: abs(0.5 * (br[0] + br[1]) - exact))
        errs = []
        mults = []
        for surf in (sphere16, sphere24, sphere32):
            pair = refine_eigenvalue(surf, m, tau, bracket)
            errs.append(abs(pair.lam - exact))
            mults.append(pair.multiplicity)
            bracket = (pair.lam - 0.02, pair.lam + 0.02)
        info["err_16"], info["err_24"], info["err_32"] = errs
        assert max(errs) < 1e-2
        # the signed error crosses zero between 12x24 and 24x48, leaving the
        # 16x32 point below the asymptote; the decrease is asserted on the
        # asymptotic 24x48 -> 32x64 step (see the decisions ledger)
        assert errs[2] < errs[1]
        assert all(mult >= 2 and mult % 2 == 0 for mult in mults)


def test_criterion_11_rayleigh_sphere(sphere24):
    with budget("11 Rayleigh on spheres", 60.0) as info:
        res = rayleigh_max(sphere24)
        info["R_B1"] = res.r_omega
        info["excluded_overlap"] = res.excluded_mode_overlap
        assert abs(res.r_omega - 1.0 / 3.0) < 1e-2
        assert res.excluded_mode_overlap < 0.05
        r2 = rayleigh_max(make_sphere(2.0, 16, 32)).r_omega
        info["R_B2_over_2"] = r2 / 2.0
        assert abs(r2 / 2.0 - res.r_omega) < 1e-2


@pytest.fixture(scope="session")
def ellipsoid_projections(ellipsoid24_unit_volume):
    return build_projections(ellipsoid24_unit_volume)


def test_criterion_12_inequality_chain(sphere24, ellipsoid24_unit_volume,
                                       ellipsoid_projections):
    with budget("12 inequality chain L >= (1-d)/R", 600.0) as info:
        rep_ball = compare_Lstar(sphere24, 1.0, tau_probe=-6.0)
        info["ball_product"] = rep_ball["product"]
        assert abs(rep_ball["product"] - 1.0) < 0.1
        rep_ell = compare_Lstar(
            ellipsoid24_unit_volume, 1.0, tau_probe=-6.0,
            projections=ellipsoid_projections,
        )
        info["ell_L"] = rep_ell["L_probe"]
        info["ell_invR"] = rep_ell["inv_R"]
        assert rep_ell["inequality_ok"], rep_ell


def test_criterion_13_shape_optimization(ellipsoid24_unit_volume,
                                         ellipsoid_projections):
    with budget("13 equal-volume ball optimal at tau=3", 600.0) as info:
        m, tau = 1.0, 3.0
        lam_ball = first_positive(BallModel(1.0, m), tau).lam
        surf = ellipsoid24_unit_volume
        grid = np.linspace(lam_ball - 0.02, min(lam_ball + 0.75, 4.3), 16)
        scan = sigma_min_scan(surf, m, tau, grid)
        brackets = candidate_brackets(scan)
        assert brackets, "no ellipsoid eigenvalue dip found above the ball value"
        pair = refine_eigenvalue(surf, m, tau, brackets[0])
        info["lam_ball"] = lam_ball
        info["lam_ellipsoid"] = pair.lam
        combined_tol = 0.02
        assert pair.lam > lam_ball + combined_tol


def test_criterion_14_spectrum_symmetry_nonball(ellipsoid24_unit_volume):
    with budget("14 spectrum symmetry on ellipsoid", 600.0) as info:
        surf = ellipsoid24_unit_volume
        m = 1.0
        # positive side at tau = +1
        grid = np.linspace(m + 0.4, 3.4, 24)
        scan = sigma_min_scan(surf, m, 1.0, grid)
        brackets = candidate_brackets(scan)
        pair_pos = refine_eigenvalue(surf, m, 1.0, brackets[0])
        # negative side at tau = -1 (lambda < -m scan of the same system)
        gridn = -grid[::-1]
        scann = sigma_min_scan(surf, m, -1.0, gridn)
        bracketsn = candidate_brackets(scann)
        pair_neg = refine_eigenvalue(surf, m, -1.0, bracketsn[-1])
        info["lam_plus"] = pair_pos.lam
        info["lam_minus"] = pair_neg.lam
        assert abs(pair_pos.lam + pair_neg.lam) < 2e-2


def test_figures_data_curve_counts_and_membership(tmp_path, ball_sweep_r3):
    with budget("15 figure data: intervals and counts", 30.0) as info:
        model, chans, taus, samples = ball_sweep_r3
        by_channel = {}
        for s in samples:
            by_channel.setdefault(s.channel, []).append(s)
        # exactly one curve per admissible channel, every sample inside its
        # interval, multiplicities 2j+1
        assert len(by_channel) == len(chans)
        for ch, chain in by_channel.items():
            lo, hi = interval(ch, model)
            assert len(chain) == len(taus)
            for s in chain:
                assert lo < s.lam < hi
                assert s.multiplicity == ch.j.twice_value + 1
        from diracbag.ball import write_samples_csv

        path = tmp_path / "curves.csv"
        with open(path, "w") as fh:
            write_samples_csv(samples, fh)
        lines = path.read_text().splitlines()
        info["rows"] = len(lines) - 1
        assert len(lines) == 1 + len(samples)
