"""Ambient geometry on R x M x R+: bundle map, metric, torsion, scaling."""

import numpy as np
import pytest

from tractor_forge.ambient import (AmbientGeometry, SingularMapError,
                                   ambient_point, orthonormal_frame,
                                   split_point)
from tractor_forge.curvature import stack_at
from tractor_forge.metric import preset

RNG = np.random.default_rng(31)


@pytest.fixture(scope="module")
def sphere_geom():
    return AmbientGeometry(preset("sphere"))


@pytest.fixture(scope="module")
def bumpy_geom():
    return AmbientGeometry(preset("bumpy", eps=0.1))


BASE3 = np.array([0.15, -0.2, 0.25])


def test_point_packing():
    p = ambient_point(0.3, BASE3, 1.2)
    s, x, q = split_point(p)
    assert s == 0.3 and q == 1.2
    assert x == pytest.approx(BASE3)


def test_orthonormal_frame_lorentzian():
    g = stack_at(preset("ppwave"), np.array([0.2, 0.1, 0.4, -0.3])).g
    E, eps = orthonormal_frame(g)
    gram = E.T @ g @ E
    assert gram == pytest.approx(np.diag(eps), abs=1e-12)
    assert list(eps).count(-1.0) == 1
    assert eps[0] == -1.0  # timelike first


def test_f_map_on_slice_is_identity(sphere_geom):
    p = ambient_point(0.0, BASE3, 1.0)
    f, m = sphere_geom.f_map(p)
    assert f == pytest.approx(np.eye(3))
    assert m == pytest.approx(np.eye(3))


def test_f_map_singular_names_eigenvalue(sphere_geom):
    # on the round sphere Psharp = -(1/2) Id, so s*Psharp + q*Id degenerates
    # exactly when s = 2q
    with pytest.raises(SingularMapError) as err:
        sphere_geom.f_map(ambient_point(2.0, BASE3, 1.0))
    assert "-0.5" in str(err.value)
    assert "singular locus" in str(err.value)
    # nearby points are fine
    f, _ = sphere_geom.f_map(ambient_point(1.9, BASE3, 1.0))
    assert np.all(np.isfinite(f))


def test_lift_pairs_to_base_metric(bumpy_geom):
    spec = bumpy_geom.spec
    st = stack_at(spec, BASE3)
    p = ambient_point(0.2, BASE3, 1.3)
    h = bumpy_geom.metric(p, st)
    for _ in range(4):
        X = RNG.standard_normal(3)
        Y = RNG.standard_normal(3)
        lhs = float(bumpy_geom.lift(p, X, st) @ h @ bumpy_geom.lift(p, Y, st))
        assert lhs == pytest.approx(float(X @ st.g @ Y), abs=1e-11)


def test_metric_corner_and_ppwave_exact_form():
    geom = AmbientGeometry(preset("ppwave"))
    x = np.array([0.3, -0.2, 0.1, 0.4])
    st = stack_at(geom.spec, x)
    q = 1.7
    h = geom.metric(ambient_point(0.5, x, q), st)
    want = np.zeros((6, 6))
    want[0, -1] = want[-1, 0] = 1.0
    want[1:-1, 1:-1] = q * q * st.g
    assert h == pytest.approx(want, abs=1e-12)


def test_fundamental_field_and_phi(bumpy_geom):
    p = ambient_point(0.4, BASE3, 1.5)
    F = bumpy_geom.fundamental_field(p)
    assert F[0] == 0.4 and F[-1] == 1.5
    assert np.max(np.abs(F[1:-1])) == 0.0
    phi = bumpy_geom.phi(p)
    # phi = q ds + s dq
    assert phi[0] == pytest.approx(1.5)
    assert phi[-1] == pytest.approx(0.4)
    assert np.max(np.abs(phi[1:-1])) < 1e-12


def test_torsion_matches_cotton_york_closed_form(bumpy_geom):
    st = stack_at(bumpy_geom.spec, BASE3)
    s = 0.3
    p = ambient_point(s, BASE3, 1.0)
    for _ in range(4):
        X = RNG.standard_normal(3)
        Y = RNG.standard_normal(3)
        u = np.concatenate(([0.0], X, [0.0]))
        w = np.concatenate(([0.0], Y, [0.0]))
        T = bumpy_geom.torsion(p, u, w, st)
        assert T == pytest.approx(bumpy_geom.torsion_closed_form(p, X, Y, st),
                                  abs=1e-12)
    # torsion vanishes on the slice and under F-contraction
    p0 = ambient_point(0.0, BASE3, 1.0)
    u = np.concatenate(([0.0], RNG.standard_normal(3), [0.0]))
    w = np.concatenate(([0.0], RNG.standard_normal(3), [0.0]))
    assert np.max(np.abs(bumpy_geom.torsion(p0, u, w, st))) < 1e-12
    F = bumpy_geom.fundamental_field(p)
    assert np.max(np.abs(bumpy_geom.torsion(p, F, u, st))) < 1e-12


def test_slice_connection_equals_induced_tractor(bumpy_geom):
    from tractor_forge.tractor import connection_matrix
    st = stack_at(bumpy_geom.spec, BASE3)
    p = ambient_point(0.0, BASE3, 1.0)
    X = RNG.standard_normal(3)
    u = np.concatenate(([0.0], X, [0.0]))
    assert bumpy_geom.omega(p, u, st) == pytest.approx(
        connection_matrix(st, X, "induced"), abs=1e-12)


def test_crude_connection_regular_everywhere(bumpy_geom):
    st = stack_at(bumpy_geom.spec, BASE3)
    # regular even where the bundle map of the main connection degenerates
    u = np.concatenate(([0.2], RNG.standard_normal(3), [0.4]))
    Om = bumpy_geom.omega_crude(ambient_point(50.0, BASE3, 0.3), u, st)
    assert np.all(np.isfinite(Om))
    # matches the induced tractor connection on the q = 1 slice
    from tractor_forge.tractor import connection_matrix
    X = RNG.standard_normal(3)
    u = np.concatenate(([0.0], X, [0.0]))
    assert bumpy_geom.omega_crude(ambient_point(0.7, BASE3, 1.0), u, st) \
        == pytest.approx(connection_matrix(st, X, "induced"), abs=1e-12)


def test_nabla_F_is_identity_and_flow_geodesic(bumpy_geom):
    p = ambient_point(0.25, BASE3, 1.4)
    assert bumpy_geom.nabF_check(p) < 1e-12
    F = bumpy_geom.fundamental_field(p)
    dF = np.zeros(5)
    dF[0], dF[-1] = F[0], F[-1]
    cov = bumpy_geom.covariant_derivative(p, F, F, dF)
    assert cov == pytest.approx(F, abs=1e-12)


def test_homogeneity_degrees(bumpy_geom):
    p = ambient_point(0.2, BASE3, 1.1)
    rep = bumpy_geom.homogeneity_checks(p)
    for t in (0.5, 2.0):
        assert rep[t]["metric_scaling"] < 1e-10
        assert rep[t]["torsion_scaling"] < 1e-10
    assert rep["torsion_F_contraction"] < 1e-12
    assert rep["dphi"] < 1e-9
    assert rep["lift_homogeneity"] < 1e-11


def test_curvature_ricci_vanishes_on_ricci_flat_slice():
    geom = AmbientGeometry(preset("ppwave"))
    x = np.array([0.2, 0.1, -0.3, 0.25])
    p = ambient_point(0.0, x, 1.0)
    pairs = geom.curvature_all_pairs(p)
    ric = geom.ricci(p, pairs)
    assert np.max(np.abs(ric)) < 1e-7
    # slice-tangent curvature kills F
    F = geom.fundamental_field(p)
    res = np.einsum("abcd,d->abc", pairs[1:-1, 1:-1], F)
    assert np.max(np.abs(res)) < 1e-7


def test_default_s_bound(sphere_geom):
    bound = sphere_geom.default_s_bound(BASE3)
    assert bound == pytest.approx(1.0)  # 0.5 / max|eig(-1/2 Id)|
    flat_geom = AmbientGeometry(preset("flat"))
    assert flat_geom.default_s_bound(BASE3) == np.inf
