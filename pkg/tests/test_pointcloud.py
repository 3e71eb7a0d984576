import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenefuse.errors import DegenerateNeighborhoodError, FormatError, UsageError, ValidationError
from scenefuse.pointcloud import (
    NeighborhoodQuery,
    PointCloud,
    augment,
    build_index,
    covariance,
    decode_binary,
    encode_binary,
    estimate_normals,
    jacobi_eigh,
    neighborhood,
    neighborhood_mean,
    oracle_normals,
    parse_ascii,
    read_cloud,
    smallest_eigenvector,
    write_cloud,
)

import oracles


def angle_up_to_sign(a, b):
    return math.atan2(np.linalg.norm(np.cross(a, b)), abs(float(a @ b)))


def plane_cloud(rng, n=100, extent=2.0):
    xy = rng.uniform(-extent, extent, (n, 2))
    return np.column_stack([xy, np.zeros(n)])


# --- index -----------------------------------------------------------------

def test_empty_index():
    index = build_index(PointCloud(np.zeros((0, 3))))
    assert index.query(np.zeros(3), 1.0, 5).size == 0


def test_single_point_index():
    cloud = PointCloud([[1.0, 2.0, 3.0]])
    assert neighborhood(build_index(cloud), 0, NeighborhoodQuery(0.5, 4)).tolist() == [0]


@pytest.mark.parametrize("seed", range(5))
def test_index_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-10, 10, (500, 3))
    index = build_index(PointCloud(pts))
    plain = pts.tolist()
    for _ in range(60):
        i = int(rng.integers(500))
        r = float(rng.uniform(0.5, 5))
        k = int(rng.choice([4, 8, 16]))
        got = neighborhood(index, i, NeighborhoodQuery(r, k)).tolist()
        assert got == oracles.exhaustive_neighbors(plain, i, r, k)


def test_isolated_point():
    cloud = PointCloud([[0, 0, 0], [10, 0, 0], [0, 10, 0]])
    assert neighborhood(build_index(cloud), 0, NeighborhoodQuery(1.0, 5)).tolist() == [0]


def test_collinear_neighbourhood_and_cap():
    pts = [[float(x), 0.0, 0.0] for x in range(5)]
    index = build_index(PointCloud(pts))
    assert sorted(neighborhood(index, 2, NeighborhoodQuery(2.5, 10)).tolist()) == [0, 1, 2, 3, 4]
    assert oracles.exhaustive_neighbors(pts, 2, 2.5, 3) == [2, 1, 3]
    assert neighborhood(index, 2, NeighborhoodQuery(2.5, 3)).tolist() == [2, 1, 3]


def test_ties_break_by_id():
    pts = [[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
    index = build_index(PointCloud(pts))
    assert neighborhood(index, 0, NeighborhoodQuery(1.0, 3)).tolist() == [0, 1, 2]


def test_duplicate_points():
    cloud = PointCloud(np.zeros((40, 3)))
    ids = neighborhood(build_index(cloud), 7, NeighborhoodQuery(0.1, 5))
    assert ids.tolist() == [0, 1, 2, 3, 4]


def test_query_validation():
    with pytest.raises(ValidationError):
        NeighborhoodQuery(0.0, 3)
    with pytest.raises(ValidationError):
        NeighborhoodQuery(1.0, 0)


# --- mean / covariance -----------------------------------------------------

def test_mean_examples():
    cloud = PointCloud([[0, 0, 0], [2, 0, 0], [5, 5, 5]])
    np.testing.assert_array_equal(neighborhood_mean(cloud, [2]), [5, 5, 5])
    np.testing.assert_array_equal(neighborhood_mean(cloud, [0, 1]), [1, 0, 0])


def test_mean_random_against_scalar_loop():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, (10, 3))
    expected = oracles.col_mean(pts.tolist())
    np.testing.assert_allclose(neighborhood_mean(PointCloud(pts), range(10)), expected, rtol=1e-14)


def test_empty_ids_raise():
    cloud = PointCloud([[0, 0, 0]])
    with pytest.raises(DegenerateNeighborhoodError):
        neighborhood_mean(cloud, [])
    with pytest.raises(DegenerateNeighborhoodError):
        covariance(cloud, [])


def test_covariance_examples():
    same = PointCloud(np.ones((4, 3)))
    np.testing.assert_array_equal(covariance(same, range(4)), np.zeros((3, 3)))
    axis = PointCloud([[0, 0, 0], [1, 0, 0], [3, 0, 0]])
    c = covariance(axis, range(3))
    assert c[0, 0] > 0
    c[0, 0] = 0.0
    np.testing.assert_array_equal(c, np.zeros((3, 3)))


def test_covariance_random_against_scalar_loop():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-3, 3, (20, 3)).tolist()
    mu = oracles.col_mean(pts)
    expected = [[sum((p[a] - mu[a]) * (p[b] - mu[b]) for p in pts) / len(pts) for b in range(3)]
                for a in range(3)]
    c = covariance(PointCloud(pts), range(20))
    np.testing.assert_allclose(c, expected, rtol=1e-12, atol=1e-14)
    assert np.abs(c - c.T).max() <= 1e-15
    assert np.linalg.eigvalsh(c).min() >= -1e-12


# --- eigen-solver ----------------------------------------------------------

def test_eigen_diagonal():
    lam, v = smallest_eigenvector(np.diag([3.0, 2.0, 1.0]))
    assert lam == 1.0
    np.testing.assert_array_equal(v, [0, 0, 1])


def test_eigen_identity_tie_break():
    lam, v = smallest_eigenvector(np.eye(3))
    assert lam == 1.0
    np.testing.assert_array_equal(v, [1, 0, 0])


def test_eigen_rejects_asymmetric():
    m = np.eye(3)
    m[0, 1] = 1e-3
    with pytest.raises(ValidationError):
        smallest_eigenvector(m)


def test_eigen_sign_convention():
    c = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.5, 1.0]])
    lam, v = smallest_eigenvector(c)
    assert lam == pytest.approx(0.5)
    # (0, 1, -1)/sqrt2: magnitudes tie, the first one wins and is made positive
    np.testing.assert_allclose(v, [0, 1 / math.sqrt(2), -1 / math.sqrt(2)], atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_eigen_against_characteristic_polynomial(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    c = a.T @ a
    roots = oracles.cubic_eigenvalues(c.tolist())
    lam, v = smallest_eigenvector(c)
    assert lam == pytest.approx(roots[0], abs=1e-10)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_eigen_residual_random_psd():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(10_000):
        a = rng.normal(size=(3, 3)) * rng.uniform(1e-3, 1e2)
        if k % 4 == 0:
            a[2] = a[0] + 1e-9 * a[1]
        if k % 4 == 1:
            a[:, 2] = 0.0
        c = a.T @ a
        lam, v = smallest_eigenvector(c)
        resid = np.linalg.norm(c @ v - lam * v) / max(1.0, np.linalg.norm(c, 2))
        worst = max(worst, resid)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12
        assert lam <= np.linalg.eigvalsh(c)[0] + 1e-9 * max(1.0, np.linalg.norm(c, 2))
    assert worst < 1e-9


def test_jacobi_matches_numpy():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.normal(size=(3, 3))
        c = a + a.T
        evals, vecs = jacobi_eigh(c)
        np.testing.assert_allclose(evals, np.linalg.eigvalsh(c), atol=1e-12)
        np.testing.assert_allclose(c @ vecs, vecs * evals, atol=1e-11)


# --- normals ---------------------------------------------------------------

def test_planar_normals():
    rng = np.random.default_rng(0)
    out = estimate_normals(PointCloud(plane_cloud(rng)), NeighborhoodQuery(1.5, 16))
    assert out.valid.all()
    np.testing.assert_allclose(np.abs(out.normals), np.tile([0, 0, 1.0], (100, 1)), atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tilted_plane_orthogonality(seed):
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    u, w = basis[:, 0], basis[:, 1]
    coef = rng.uniform(-2, 2, (60, 2))
    pts = coef[:, :1] * u + coef[:, 1:] * w + rng.uniform(-5, 5, 3)
    out = estimate_normals(PointCloud(pts), NeighborhoodQuery(1.5, 12))
    for n, ok in zip(out.normals, out.valid):
        if ok:
            assert abs(n @ u) < 1e-9 and abs(n @ w) < 1e-9
            assert abs(np.linalg.norm(n) - 1.0) < 1e-9


def test_translation_invariance():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2, 2, (200, 3))
    q = NeighborhoodQuery(1.0, 12)
    a = estimate_normals(PointCloud(pts), q)
    b = estimate_normals(PointCloud(pts + [10.0, -5.0, 3.0]), q)
    np.testing.assert_array_equal(a.valid, b.valid)
    np.testing.assert_allclose(a.normals, b.normals, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_rotation_equivariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, (200, 3))
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    q = NeighborhoodQuery(1.0, 12)
    a = estimate_normals(PointCloud(pts), q)
    b = oracle_normals(PointCloud(pts @ rot.T), q)
    assert a.valid.sum() > 150
    np.testing.assert_array_equal(a.valid, b.valid)
    for n0, n1, ok in zip(a.normals, b.normals, a.valid):
        if ok:
            assert angle_up_to_sign(rot @ n0, n1) < 1e-6


def test_sparse_neighbourhoods_are_flagged():
    cloud = PointCloud([[0, 0, 0], [0.5, 0, 0], [10, 10, 10]])
    out = estimate_normals(cloud, NeighborhoodQuery(1.0, 8))
    assert not out.valid.any()
    np.testing.assert_array_equal(out.normals, np.zeros((3, 3)))


def test_collinear_neighbourhood_is_flagged():
    cloud = PointCloud([[float(x), 0.0, 0.0] for x in range(6)])
    out = estimate_normals(cloud, NeighborhoodQuery(3.0, 8))
    assert not out.valid.any()


def test_matches_oracle_pipeline_dense():
    rng = np.random.default_rng(11)
    cloud = PointCloud(rng.uniform(-3, 3, (400, 3)))
    q = NeighborhoodQuery(1.2, 16)
    a, b = estimate_normals(cloud, q), oracle_normals(cloud, q)
    np.testing.assert_array_equal(a.valid, b.valid)
    worst = max(angle_up_to_sign(x, y) for x, y, ok in zip(a.normals, b.normals, a.valid) if ok)
    assert worst < 1e-6


# --- augmentation and I/O ---------------------------------------------------

def test_augment_examples():
    cloud = PointCloud([[1, 2, 3]], [[0, 0, 1]], [True])
    np.testing.assert_array_equal(augment(cloud), [[1, 2, 3, 0, 0, 1]])
    empty = estimate_normals(PointCloud(np.zeros((0, 3))))
    assert augment(empty).shape == (0, 6)
    with pytest.raises(UsageError):
        augment(PointCloud([[1, 2, 3]]))


def test_augment_planar():
    rng = np.random.default_rng(1)
    out = augment(estimate_normals(PointCloud(plane_cloud(rng)), NeighborhoodQuery(1.5, 16)))
    np.testing.assert_allclose(np.abs(out[:, 3:]), np.tile([0, 0, 1.0], (100, 1)), atol=1e-6)


def test_unit_normal_invariant_enforced():
    with pytest.raises(ValidationError):
        PointCloud([[0, 0, 0]], [[0, 0, 2]], [True])
    PointCloud([[0, 0, 0]], [[0, 0, 0]], [False])


def test_binary_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(17, 3)))
    write_cloud(tmp_path / "a.mmpc", cloud)
    data = (tmp_path / "a.mmpc").read_bytes()
    assert data[:4] == b"MMPC" and len(data) == 4 + 4 + 8 + 17 * 24
    np.testing.assert_array_equal(read_cloud(tmp_path / "a.mmpc").points, cloud.points)

    with_normals = estimate_normals(PointCloud(plane_cloud(rng, 30)), NeighborhoodQuery(2.0, 8))
    blob = encode_binary(with_normals)
    assert len(blob) == 16 + 30 * 49
    back = decode_binary(blob)
    np.testing.assert_array_equal(back.normals, with_normals.normals)
    np.testing.assert_array_equal(back.valid, with_normals.valid)


def test_binary_errors():
    blob = encode_binary(PointCloud(np.ones((3, 3))))
    with pytest.raises(FormatError) as err:
        decode_binary(blob[:-5])
    assert err.value.offset == len(blob) - 5
    with pytest.raises(FormatError):
        decode_binary(b"MMPX" + blob[4:])
    with pytest.raises(FormatError) as err:
        decode_binary(blob[:4] + (2).to_bytes(4, "little") + blob[8:])
    assert err.value.offset == 4


def test_ascii_round_trip(tmp_path):
    cloud = parse_ascii("# header\n1 2 3\n\n4.5 -1 0\n")
    np.testing.assert_array_equal(cloud.points, [[1, 2, 3], [4.5, -1, 0]])
    out = PointCloud(cloud.points, [[0, 0, 1], [0, 0, 0]], [True, False])
    write_cloud(tmp_path / "n.xyz", out)
    back = read_cloud(tmp_path / "n.xyz")
    np.testing.assert_array_equal(back.normals, out.normals)
    np.testing.assert_array_equal(back.valid, [True, False])
    with pytest.raises(ValidationError):
        parse_ascii("1 2\n")
