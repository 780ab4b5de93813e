"""Command-line front end.

Config files are flat key=value lines ('#' starts a comment).  Modes:

* curves   -- ball eigenvalue-curve sweep to CSV (the data behind the
              eigenvalue-curve figures)
* first    -- first positive eigenvalue and L(tau) table for a ball
* bie      -- boundary-integral scan (+ optional tau curve) on a surface
* rayleigh -- Hardy-space Rayleigh report (key=value block)
* verify   -- invariant suite with one PASS/FAIL line per check

Exit codes: 0 ok, 1 usage/config error, 2 solver failure, 3 verification
failure.  The Bessel zero cache can be persisted with --cache-dir or the
DIRACBAG_CACHE environment variable.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import bessel
from .ball import (
    BallModel,
    ChannelIndex,
    L_of_tau,
    channels_up_to,
    curve_sweep,
    derivative_check,
    eigenvalue_at,
    first_positive,
    format_float,
    write_samples_csv,
)
from .halfint import HalfInt
from .surface import dump_nodes_csv, make_surface


class ConfigError(ValueError):
    pass


def parse_config(path):
    """key=value lines with '#' comments; errors carry line numbers."""
    config = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in config:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            config[key] = value
    if "mode" not in config:
        raise ConfigError(f"{path}: missing required key 'mode'")
    return config


def _floats(config, key, default=None):
    if key not in config:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(config[key])
    except ValueError as err:
        raise ConfigError(f"key {key!r}: {err}") from None


def _tau_grid(config):
    lo = _floats(config, "tau_min", 0.0)
    hi = _floats(config, "tau_max", 0.0)
    step = _floats(config, "tau_step", 0.5)
    if hi < lo:
        return np.array([])
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _surface_from(config):
    keys = ("kind", "R", "a", "b", "c", "n_theta", "n_phi")
    params = {k: config[k] for k in keys if k in config}
    return make_surface(params)


def _open_out(config, args):
    path = args.out or config.get("out")
    if path is None:
        return sys.stdout, False
    return open(path, "w"), True


def run_curves(config, args):
    model = BallModel(_floats(config, "R", 1.0), _floats(config, "m", 0.0))
    j2_max = int(config.get("j2_max", 7))
    k_max = int(config.get("k_max", 2))
    chans = channels_up_to(HalfInt(j2_max), k_max)
    samples = curve_sweep(chans, model, _tau_grid(config))
    fh, close = _open_out(config, args)
    try:
        write_samples_csv(samples, fh)
    finally:
        if close:
            fh.close()
    return 0


def run_first(config, args):
    model = BallModel(_floats(config, "R", 1.0), _floats(config, "m", 0.0))
    fh, close = _open_out(config, args)
    try:
        fh.write("tau,lambda,gap,L,residual,multiplicity\n")
        for tau in _tau_grid(config):
            s = first_positive(model, float(tau))
            lval = L_of_tau(model, float(tau))
            fh.write(
                f"{format_float(tau)},{format_float(s.lam)},{format_float(s.gap)},"
                f"{format_float(lval)},{format_float(s.residual)},{s.multiplicity}\n"
            )
    finally:
        if close:
            fh.close()
    return 0


def run_bie(config, args):
    from .bie import (
        default_scan_grid,
        candidate_brackets,
        refine_eigenvalue,
        sigma_min_scan,
        trace_curve,
        write_bie_csv,
    )

    surface = _surface_from(config)
    m = _floats(config, "m", 0.0)
    tau = _floats(config, "tau", 0.0)
    lam_lo = config.get("lambda_min")
    lam_hi = config.get("lambda_max")
    if lam_lo is not None and lam_hi is not None:
        pts = int(config.get("scan_points", 24))
        grid = np.linspace(float(lam_lo), float(lam_hi), pts)
    else:
        grid = default_scan_grid(surface, m)
    scan = sigma_min_scan(surface, m, tau, grid)
    pairs = []
    for bracket in candidate_brackets(scan):
        try:
            pairs.append(refine_eigenvalue(surface, m, tau, bracket))
        except Exception as err:  # noqa: BLE001 - reported, scan continues
            print(f"# bracket {bracket}: {err}", file=sys.stderr)
    if "tau_min" in config and "tau_max" in config and pairs:
        seed = pairs[0]
        width = 0.05 * max(1.0, abs(seed.lam))
        pairs = trace_curve(
            surface, m, _tau_grid(config), (seed.lam - width, seed.lam + width)
        )
    fh, close = _open_out(config, args)
    try:
        write_bie_csv(pairs, fh)
    finally:
        if close:
            fh.close()
    return 0


def run_rayleigh(config, args):
    from .hardy import build_projections, ball_test, hardy_trace_residual
    from .rayleigh import rayleigh_max

    surface = _surface_from(config)
    pp = build_projections(surface, float(config.get("rank_tolerance", 1e-8)))
    res = rayleigh_max(surface, pp, want_pencil="pencil_out" in config)
    diag = ball_test(surface, pp)
    fh, close = _open_out(config, args)
    try:
        fh.write(f"R_omega={format_float(res.r_omega)}\n")
        fh.write(f"inv_R_omega={format_float(1.0 / res.r_omega)}\n")
        fh.write(f"el_residual={format_float(res.el_residual)}\n")
        fh.write(f"excluded_mode_overlap={format_float(res.excluded_mode_overlap)}\n")
        fh.write(f"rank={pp.rank}\n")
        fh.write(f"rank_gap={format_float(pp.rank_gap)}\n")
        fh.write(f"constants_residual={format_float(hardy_trace_residual(surface, pp))}\n")
        for key, val in diag.items():
            fh.write(f"{key}={format_float(val)}\n")
    finally:
        if close:
            fh.close()
    if "pencil_out" in config and res.pencil is not None:
        with open(config["pencil_out"], "w") as fh2:
            fh2.write("re,im\n")
            for z in res.pencil:
                fh2.write(f"{z.real:.17g},{z.imag:.17g}\n")
    if "nodes_csv" in config:
        with open(config["nodes_csv"], "w") as fh3:
            dump_nodes_csv(surface, fh3)
    return 0


def _check(lines, name, value, bound, larger_is_bad=True):
    ok = value < bound if larger_is_bad else value > bound
    lines.append((ok, f"{'PASS' if ok else 'FAIL'} {name}: {value:.3e} (bound {bound:.1e})"))
    return ok


def run_verify(config, args):
    from .hardy import (
        anticommutator_norm,
        build_projections,
        frame_norm,
        hardy_trace_residual,
        trial_frame,
    )
    from .layerops import SpectralParams, kernel_matrix_K, kernel_matrix_W, expand_scalar
    from .linalg import symmetrize
    from .rayleigh import rayleigh_max
    from .sphspinor import SpinorLabel, spinor
    from .bessel import bessel_j_half, bessel_zero
    from .surface import make_sphere, sigma_nu_blocks

    lines = []
    ok = True

    # Bessel: interlacing and recurrence residual
    inter = 0.0
    for tj in range(1, 10, 2):
        for k in range(1, 5):
            za, zb_, zn = (
                bessel_zero(HalfInt(tj), k),
                bessel_zero(HalfInt(tj + 2), k),
                bessel_zero(HalfInt(tj), k + 1),
            )
            inter = max(inter, float(za >= zb_), float(zb_ >= zn))
    ok &= _check(lines, "bessel interlacing violations", inter, 0.5)
    rec = 0.0
    for tj in (3, 7):
        for x in np.geomspace(0.1, 40, 12):
            p = HalfInt(tj)
            r = abs(
                bessel_j_half(p - HalfInt(2), x)
                + bessel_j_half(p + HalfInt(2), x)
                - (2.0 * p.value / x) * bessel_j_half(p, x)
            )
            rec = max(rec, r / max(1.0, abs(bessel_j_half(p, x))))
    ok &= _check(lines, "bessel recurrence residual", rec, 1e-10)

    # ball: inversion residual, monotonicity, mirror symmetry
    model = BallModel(_floats(config, "R", 1.0), _floats(config, "m", 1.0))
    worst = 0.0
    mono_bad = 0.0
    for ch in channels_up_to("3/2", 1):
        prev = None
        for tau in np.linspace(-4, 4, 9):
            s = eigenvalue_at(ch, model, float(tau))
            worst = max(worst, s.residual)
            if prev is not None and s.lam <= prev:
                mono_bad = 1.0
            prev = s.lam
    ok &= _check(lines, "ball inversion residual", worst, 1e-11)
    ok &= _check(lines, "ball monotonicity violations", mono_bad, 0.5)
    mirror = 0.0
    for tau in (-1.3, 0.7):
        a = eigenvalue_at(ChannelIndex.of("3/2", "-", 0), model, tau)
        b = eigenvalue_at(ChannelIndex.of("3/2", "+", 0), model, -tau)
        mirror = max(mirror, abs(a.lam + b.lam))
    ok &= _check(lines, "ball mirror symmetry", mirror, 1e-10)
    lstar = abs(L_of_tau(BallModel(model.R, 1.0), -30.0) * model.R - 3.0)
    ok &= _check(lines, "L(-30) R vs 3", lstar, 1e-6)
    rep = derivative_check(ChannelIndex.of("1/2", "-", 0), model, 0.3)
    dev = max(
        abs(rep["boundary_formula"] / rep["fd"] - 1.0),
        abs(rep["volume_formula"] / rep["fd"] - 1.0),
    )
    ok &= _check(lines, "derivative formulas vs FD", dev, 1e-5)

    # surface + operators on a sphere
    nt = int(config.get("n_theta", 16))
    surf = make_sphere(1.0, nt, 2 * nt)
    ok &= _check(lines, "sphere area error", abs(surf.area() - 4 * math.pi), 1e-10)
    ok &= _check(
        lines, "sphere volume error", abs(surf.volume() - 4 * math.pi / 3), 1e-10
    )
    pm = SpectralParams(1.0, 1.0)
    kmat = kernel_matrix_K(surf, pm)
    u0 = spinor(SpinorLabel.of("1/2", 0.5, "-"), surf.nodes)
    kd = np.sum(surf.weights * np.sum(
        np.stack([kmat @ u0[:, 0], kmat @ u0[:, 1]], axis=1) * np.conj(u0), axis=1
    )).real / np.sum(surf.weights * np.sum(np.abs(u0) ** 2, axis=1)).real
    ok &= _check(lines, "K constant-mode eigenvalue vs 1", abs(kd - 1.0), 2e-3)
    wmat = kernel_matrix_W(surf, pm)
    sn = sigma_nu_blocks(surf)
    n = surf.n_nodes
    snm = np.zeros((2 * n, 2 * n), dtype=complex)
    snm.reshape(n, 2, n, 2)[np.arange(n), :, np.arange(n), :] = sn
    ws = wmat @ snm
    ks = expand_scalar(kmat) @ snm
    frame = trial_frame(surf, 7)
    quarter = ws @ ws + 0.25 * np.eye(2 * n)
    ok &= _check(
        lines,
        "quarter identity (frame)",
        frame_norm(symmetrize(quarter, surf), frame),
        0.05,
    )
    anti = ks @ ws + ws @ ks
    ok &= _check(
        lines,
        "K/W anticommutation (frame)",
        frame_norm(symmetrize(anti, surf), frame),
        0.05,
    )
    ok &= _check(lines, "{W_m, sigma nu} on sphere", anticommutator_norm(surf), 0.02)

    pp = build_projections(surf)
    ok &= _check(
        lines,
        "P+ + P- - I",
        float(np.max(np.abs(pp.p_plus.matrix + pp.p_minus.matrix - np.eye(2 * n)))),
        1e-14,
    )
    prod = symmetrize(pp.p_plus.matrix @ pp.p_minus.matrix, surf)
    ok &= _check(lines, "P+ P- (frame)", frame_norm(prod, frame), 0.06)
    adj = float(
        np.max(np.abs(pp.p_plus_adj.matrix - pp.p_plus.weighted_adjoint().matrix))
    )
    ok &= _check(lines, "adjoint consistency", adj, 1e-12)
    ok &= _check(lines, "constants Hardy residual", hardy_trace_residual(surf, pp), 0.02)
    res = rayleigh_max(surf, pp)
    ok &= _check(lines, "Rayleigh value vs 1/3", abs(res.r_omega - 1.0 / 3.0), 1e-2)

    fh, close = _open_out(config, args)
    try:
        for _, line in lines:
            fh.write(line + "\n")
        fh.write(f"{'OK' if ok else 'FAILED'}\n")
    finally:
        if close:
            fh.close()
    return 0 if ok else 3


_MODES = {
    "curves": run_curves,
    "first": run_first,
    "bie": run_bie,
    "rayleigh": run_rayleigh,
    "verify": run_verify,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="diracbag",
        description="Spectral solver for Dirac bag operators on bounded 3D domains",
    )
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--out", help="output path (overrides config 'out')")
    parser.add_argument("--threads", type=int, help="numba thread count")
    parser.add_argument("--cache-dir", help="directory for the Bessel zero cache")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
        mode = config["mode"]
        if mode not in _MODES:
            raise ConfigError(f"unknown mode {mode!r}; pick one of {sorted(_MODES)}")
    except (OSError, ConfigError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1

    if args.threads:
        try:
            import numba

            numba.set_num_threads(args.threads)
        except ImportError:
            pass

    cache_dir = args.cache_dir or os.environ.get("DIRACBAG_CACHE")
    cache_file = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        cache_file = os.path.join(cache_dir, "bessel_zeros.txt")
        if os.path.exists(cache_file):
            bessel.load_zero_cache(cache_file)

    try:
        status = _MODES[mode](config, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - surfaced with module context
        print(f"solver failure ({type(err).__module__}): {err}", file=sys.stderr)
        return 2

    if cache_file:
        bessel.save_zero_cache(cache_file)
    return status


if __name__ == "__main__":
    sys.exit(main())
