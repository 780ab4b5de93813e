import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from diracbag.surface import (
    cell_subquadrature,
    dump_nodes_csv,
    equal_volume_scale,
    make_ellipsoid,
    make_sphere,
    make_surface,
    mean_curvature,
    near_pairs,
    sigma_nu,
    sigma_nu_blocks,
    tangential_gradient_entries,
    unit_normal_at,
)


def test_sphere_area_and_volume_spectral():
    surf = make_sphere(1.0, 24, 48)
    assert abs(surf.area() - 4.0 * math.pi) < 1e-10
    assert abs(surf.volume() - 4.0 * math.pi / 3.0) < 1e-10


def test_sphere_normals_unit_and_outward():
    surf = make_sphere(2.5, 8, 16)
    assert np.max(np.abs(np.linalg.norm(surf.normals, axis=1) - 1.0)) < 1e-12
    assert np.all(np.sum(surf.normals * surf.nodes, axis=1) > 0)


def test_sphere_parameter_validation():
    with pytest.raises(ValueError):
        make_sphere(1.0, 4, 16)
    with pytest.raises(ValueError):
        make_sphere(-1.0, 8, 16)


def test_ellipsoid_degenerates_to_sphere():
    s = make_sphere(1.3, 12, 24)
    e = make_ellipsoid(1.3, 1.3, 1.3, 12, 24)
    assert_allclose(e.nodes, s.nodes, atol=1e-13)
    assert_allclose(e.weights, s.weights, atol=1e-10)
    assert_allclose(e.normals, s.normals, atol=1e-12)


def test_ellipsoid_volume():
    e = make_ellipsoid(2.0, 1.0, 1.0, 24, 48)
    want = 4.0 * math.pi / 3.0 * 2.0
    assert abs(e.volume() - want) / want < 5e-3


@given(
    st.floats(min_value=0.5, max_value=3.0),
    st.floats(min_value=0.5, max_value=3.0),
    st.floats(min_value=0.5, max_value=3.0),
)
@settings(max_examples=10, deadline=None)
def test_ellipsoid_area_volume_positive_and_oriented(a, b, c):
    e = make_ellipsoid(a, b, c, 8, 16)
    assert e.area() > 0
    assert e.volume() > 0
    centroid = np.average(e.nodes, axis=0, weights=e.weights)
    assert np.all(np.sum(e.normals * (e.nodes - centroid), axis=1) > 0)


def test_refinement_improves_ellipsoid_area():
    # prolate spheroid a=2, b=c=1: S = 2 pi (1 + (a/e) asin(e)), e = sqrt(3)/2
    ecc = math.sqrt(3.0) / 2.0
    want = 2.0 * math.pi * (1.0 + 2.0 / ecc * math.asin(ecc))
    errs = [
        abs(make_ellipsoid(2.0, 1.0, 1.0, nt, 2 * nt).area() - want)
        for nt in (8, 12, 16)
    ]
    assert errs[1] < errs[0] and errs[2] < errs[1]
    # the divergence-theorem volume is exact for the parametric quadrature
    assert abs(make_ellipsoid(2.0, 1.0, 1.0, 8, 16).volume() - 8.0 * math.pi / 3.0) < 1e-12


def test_equal_volume_scale():
    s = equal_volume_scale(2.0, 1.0, 1.0, 4.0 * math.pi / 3.0)
    assert s == pytest.approx(2.0 ** (-1.0 / 3.0), abs=1e-12)


def test_sigma_nu_involution_and_hermitian():
    surf = make_sphere(1.0, 8, 16)
    op = sigma_nu(surf)
    n2 = 2 * surf.n_nodes
    assert np.max(np.abs(op.matrix @ op.matrix - np.eye(n2))) < 1e-14
    assert np.max(np.abs(op.matrix - op.matrix.conj().T)) < 1e-14


def test_sigma_nu_blocks_match_dense():
    surf = make_ellipsoid(2.0, 1.0, 0.7, 8, 16)
    blocks = sigma_nu_blocks(surf)
    dense = sigma_nu(surf).matrix
    view = dense.reshape(surf.n_nodes, 2, surf.n_nodes, 2)
    idx = np.arange(surf.n_nodes)
    assert_allclose(view[idx, :, idx, :], blocks, atol=1e-15)


def test_mean_curvature_sphere_and_degenerate_ellipsoid():
    surf = make_sphere(2.0, 8, 16)
    assert_allclose(mean_curvature(surf), 0.5, atol=1e-14)
    e = make_ellipsoid(2.0, 2.0, 2.0, 8, 16)
    assert_allclose(mean_curvature(e), 0.5, atol=1e-12)


def test_unit_normal_at_matches_node_normals():
    e = make_ellipsoid(2.0, 1.0, 1.5, 8, 16)
    got = unit_normal_at(e.params, e.nodes)
    assert_allclose(got, e.normals, atol=1e-12)


def test_cell_subquadrature_preserves_weights():
    surf = make_ellipsoid(1.5, 1.0, 0.8, 8, 16)
    _, sub_w = cell_subquadrature(surf, 4)
    assert_allclose(np.sum(sub_w, axis=1), surf.weights, rtol=1e-13)


def test_near_pairs_symmetric_and_local():
    surf = make_sphere(1.0, 8, 16)
    rows, cols = near_pairs(surf, 3.0)
    assert np.all(rows != cols)
    pair_set = set(zip(rows.tolist(), cols.tolist()))
    assert all((j, i) in pair_set for i, j in list(pair_set)[:50])
    d = np.linalg.norm(surf.nodes[rows] - surf.nodes[cols], axis=1)
    hmax = np.maximum(surf.patch_h[rows], surf.patch_h[cols])
    assert np.all(d < 3.0 * hmax)


def test_tangential_gradient_differentiates_smooth_field():
    surf = make_sphere(1.0, 16, 32)
    rows, cols, vecs = tangential_gradient_entries(surf)
    # f = z on the unit sphere has surface gradient e_z - z nu
    f = surf.nodes[:, 2]
    grad = np.zeros((surf.n_nodes, 3))
    np.add.at(grad, rows, vecs * f[cols, None])
    want = np.zeros_like(grad)
    want[:, 2] = 1.0
    want -= surf.nodes[:, 2:3] * surf.normals
    assert np.max(np.linalg.norm(grad - want, axis=1)) < 1e-8


def test_make_surface_dispatch_and_node_dump():
    surf = make_surface({"kind": "sphere", "R": 1.0, "n_theta": 8, "n_phi": 16})
    buf = io.StringIO()
    dump_nodes_csv(surf, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,y,z,nx,ny,nz,w"
    assert len(lines) == 1 + surf.n_nodes
    first = [float(v) for v in lines[1].split(",")]
    assert first[6] > 0
    with pytest.raises(ValueError):
        make_surface({"kind": "torus"})
