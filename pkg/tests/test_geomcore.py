import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphgrip.errors import (
    DegenerateGradientError,
    EmptyCloudError,
    EmptyMeshError,
    InvalidSdfError,
    OpenMeshError,
)
from morphgrip.geomcore import (
    BoxSdf,
    CylinderSdf,
    GridSdf,
    HalfSpaceSdf,
    RigidTransform,
    SphereSdf,
    TriMesh,
    TriPrismSdf,
    box_mesh,
    chamfer,
    icosphere_mesh,
    load_grid_sdf,
    load_mesh,
    mesh_to_sdf_grid,
    mesh_volume,
    save_grid_sdf,
    save_mesh,
    sdf_eval,
    sdf_gradient,
    surface_sample,
)


# ---------------------------------------------------------------- sdf_eval

def test_box_center():
    box = BoxSdf([0.5, 0.5, 0.5])
    assert sdf_eval(box, [0.0, 0.0, 0.0]) == pytest.approx(-0.5)


def test_box_exterior_axis():
    box = BoxSdf([0.5, 0.5, 0.5])
    assert sdf_eval(box, [1.5, 0.0, 0.0]) == pytest.approx(1.0)


def test_cylinder_lateral_surface():
    # r=0.03, h=0.08; a point on the lateral surface is at distance 0
    cyl = CylinderSdf(radius=0.03, height=0.08)
    theta = 0.7
    x = [0.03 * np.cos(theta), 0.03 * np.sin(theta), 0.01]
    assert abs(sdf_eval(cyl, x)) <= 1e-9


def test_box_brute_force_surface_points():
    # analytic box SDF vs minimum distance over a dense surface lattice
    # (>= 1e5 points; lattice gap well under the 1e-4 tolerance)
    from scipy.spatial import cKDTree

    from morphgrip.geomcore.sdf import _surface_lattice

    rng = np.random.default_rng(0)
    half = np.array([0.005, 0.004, 0.008])
    box = BoxSdf(half)
    mesh = box_mesh(half)
    area = mesh.face_areas().sum()
    spacing = np.sqrt(area / 1e5)
    surf = _surface_lattice(mesh, spacing)
    assert len(surf) >= 100_000
    queries = rng.uniform(-0.02, 0.02, size=(100, 3))
    brute = cKDTree(surf).query(queries)[0]
    vals = box.evaluate(queries)
    assert np.all(np.abs(np.abs(vals) - brute) < 1e-4)
    inside = np.all(np.abs(queries) < half, axis=1)
    assert np.array_equal(vals < 0, inside)


def test_cylinder_brute_force_surface_points():
    # dense parametric surface grid: lateral sheet plus both caps
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(3)
    r, h = 0.008, 0.02
    cyl = CylinderSdf(r, h)
    s = 8e-5
    nth = int(np.ceil(2 * np.pi * r / s))
    th = np.linspace(0.0, 2 * np.pi, nth, endpoint=False)
    zs = np.linspace(-h / 2, h / 2, int(np.ceil(h / s)) + 1)
    tt, zz = np.meshgrid(th, zs, indexing="ij")
    lateral = np.stack([r * np.cos(tt).ravel(), r * np.sin(tt).ravel(), zz.ravel()], axis=1)
    rr = np.arange(0.0, r + s, s)
    cap_pts = []
    for rho in rr:
        m = max(1, int(np.ceil(2 * np.pi * rho / s)))
        ang = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
        ring = np.stack([rho * np.cos(ang), rho * np.sin(ang)], axis=1)
        cap_pts.append(ring)
    cap = np.concatenate(cap_pts)
    caps = np.concatenate([
        np.column_stack([cap, np.full(len(cap), -h / 2)]),
        np.column_stack([cap, np.full(len(cap), h / 2)]),
    ])
    surf = np.concatenate([lateral, caps])
    assert len(surf) >= 100_000
    queries = rng.uniform(-0.025, 0.025, size=(100, 3))
    brute = cKDTree(surf).query(queries)[0]
    vals = cyl.evaluate(queries)
    assert np.all(np.abs(np.abs(vals) - brute) < 1e-4)
    inside = (np.hypot(queries[:, 0], queries[:, 1]) < r) & (np.abs(queries[:, 2]) < h / 2)
    assert np.array_equal(vals < 0, inside)


def test_grid_sdf_zero_resolution_rejected():
    grid = GridSdf(np.zeros(3), 0.1, np.zeros((1, 1, 1)))
    with pytest.raises(InvalidSdfError):
        sdf_eval(grid, [0.0, 0.0, 0.0])


def test_sdf_eval_rejects_nonfinite():
    with pytest.raises(ValueError):
        sdf_eval(BoxSdf([1, 1, 1]), [np.nan, 0.0, 0.0])


def test_posed_sdf():
    # rotating the box by 90 deg about z swaps its x/y half extents
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    box = BoxSdf([0.2, 0.1, 0.1], pose=RigidTransform(rot, [0.0, 0.0, 0.0]))
    assert sdf_eval(box, [0.3, 0.0, 0.0]) == pytest.approx(0.2)
    assert sdf_eval(box, [0.0, 0.3, 0.0]) == pytest.approx(0.1)


# ------------------------------------------------------------ sdf_gradient

def test_sphere_gradient_radial():
    sph = SphereSdf(0.05)
    g = sdf_gradient(sph, [0.1, 0.0, 0.0])
    assert np.allclose(g, [1.0, 0.0, 0.0], atol=1e-12)


def test_halfspace_gradient():
    hs = HalfSpaceSdf()
    g = sdf_gradient(hs, [0.3, -0.2, 0.7])
    assert np.allclose(g, [0.0, 0.0, 1.0])
    # solid is below the plane
    assert sdf_eval(hs, [0.0, 0.0, -0.1]) < 0 < sdf_eval(hs, [0.0, 0.0, 0.1])


def test_box_gradient_nearest_face():
    box = BoxSdf([0.5, 0.5, 0.5])
    g = sdf_gradient(box, [0.6, 0.2, 0.1])
    assert np.allclose(g, [1.0, 0.0, 0.0], atol=1e-6)


def test_gradient_unit_norm_random():
    rng = np.random.default_rng(7)
    sdfs = [BoxSdf([0.04, 0.03, 0.02]), CylinderSdf(0.03, 0.06), SphereSdf(0.05),
            TriPrismSdf(0.06, 0.05, 0.04)]
    for sdf in sdfs:
        pts = rng.uniform(-0.09, 0.09, size=(200, 3))
        g = sdf.gradient(pts)
        assert np.allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-6)


def test_degenerate_gradient_raises():
    with pytest.raises(DegenerateGradientError):
        sdf_gradient(SphereSdf(0.05), [0.0, 0.0, 0.0])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    sdfs = [BoxSdf([0.04, 0.03, 0.02]), CylinderSdf(0.03, 0.06), TriPrismSdf(0.05, 0.04, 0.03)]
    h = 1e-7
    for sdf in sdfs:
        pts = rng.uniform(-0.08, 0.08, size=(50, 3))
        # keep away from surfaces and medial axes where the field is non-smooth
        pts = pts[np.abs(sdf.evaluate(pts)) > 2e-3]
        g = sdf.gradient(pts)
        num = np.empty_like(g)
        for ax in range(3):
            d = np.zeros(3)
            d[ax] = h
            num[:, ax] = (sdf.evaluate(pts + d) - sdf.evaluate(pts - d)) / (2 * h)
        norms = np.linalg.norm(num, axis=1)
        smooth = np.abs(norms - 1.0) < 1e-4  # skip points straddling a gradient crease
        assert smooth.mean() > 0.8
        assert np.allclose(g[smooth], num[smooth] / norms[smooth, None], atol=1e-4)


# --------------------------------------------------------- mesh_to_sdf_grid

def test_cube_grid_center_value():
    mesh = box_mesh([0.5, 0.5, 0.5])
    grid = mesh_to_sdf_grid(mesh, 32, padding=0.1)
    diag = grid.cell_size * np.sqrt(3)
    assert sdf_eval(grid, [0.0, 0.0, 0.0]) == pytest.approx(-0.5, abs=diag)


def test_cube_grid_corner_positive():
    mesh = box_mesh([0.5, 0.5, 0.5])
    grid = mesh_to_sdf_grid(mesh, 32, padding=0.1)
    corner = grid.origin  # first grid node, outside the padded interior
    assert grid.values[0, 0, 0] > 0
    assert sdf_eval(grid, corner) > 0


def test_sphere_grid_matches_analytic():
    mesh = icosphere_mesh(0.05, refinements=3)
    grid = mesh_to_sdf_grid(mesh, 32, padding=0.02)
    node = np.array([0.08, 0.0, 0.0])
    assert sdf_eval(grid, node) == pytest.approx(0.03, abs=grid.cell_size)


def test_grid_agrees_with_analytic_primitive():
    # icosphere: grid values vs the analytic sphere at 1000 random points
    r = 0.05
    mesh = icosphere_mesh(r, refinements=4)
    grid = mesh_to_sdf_grid(mesh, 48, padding=0.02)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.06, 0.06, size=(1000, 3))
    exact = np.linalg.norm(pts, axis=1) - r
    approx = grid.evaluate(pts)
    diag = grid.cell_size * np.sqrt(3)
    # icosphere underestimates the ball slightly; allowance covers faceting
    assert np.max(np.abs(approx - exact)) < diag


def test_open_mesh_rejected():
    mesh = box_mesh([0.5, 0.5, 0.5])
    open_mesh = TriMesh(mesh.vertices, mesh.faces[:-1])
    with pytest.raises(OpenMeshError) as ei:
        mesh_to_sdf_grid(open_mesh, 16, padding=0.1)
    assert ei.value.open_edge_count == 3


def test_low_resolution_rejected():
    with pytest.raises(ValueError):
        mesh_to_sdf_grid(box_mesh([0.5, 0.5, 0.5]), 4, padding=0.1)


def test_grid_sdf_roundtrip(tmp_path):
    mesh = box_mesh([0.03, 0.02, 0.05])
    grid = mesh_to_sdf_grid(mesh, 16, padding=0.01)
    path = tmp_path / "finger.sdf"
    save_grid_sdf(grid, str(path))
    loaded = load_grid_sdf(str(path))
    assert loaded.values.shape == grid.values.shape
    assert np.allclose(loaded.values, grid.values, atol=1e-6)
    assert np.allclose(loaded.origin, grid.origin)
    assert loaded.cell_size == pytest.approx(grid.cell_size)


# ------------------------------------------------------------ surface_sample

def test_single_triangle_in_plane():
    mesh = TriMesh(np.array([[0.0, 0, 0], [1.0, 0, 0], [0.0, 1.0, 0]]), np.array([[0, 1, 2]]))
    pts = surface_sample(mesh, 1000, seed=0)
    assert np.all(np.abs(pts[:, 2]) < 1e-9)
    assert np.all(pts[:, 0] >= -1e-12) and np.all(pts[:, 1] >= -1e-12)
    assert np.all(pts[:, 0] + pts[:, 1] <= 1 + 1e-12)


def test_cube_per_face_counts():
    mesh = box_mesh([0.5, 0.5, 0.5])  # 6 equal-area faces, 2 triangles each
    pts = surface_sample(mesh, 6000, seed=42)
    on_face = [
        np.isclose(pts[:, 0], -0.5), np.isclose(pts[:, 0], 0.5),
        np.isclose(pts[:, 1], -0.5), np.isclose(pts[:, 1], 0.5),
        np.isclose(pts[:, 2], -0.5), np.isclose(pts[:, 2], 0.5),
    ]
    counts = np.array([m.sum() for m in on_face])
    assert counts.sum() == 6000
    assert np.all(np.abs(counts - 1000) <= 150)


def test_sample_determinism():
    mesh = box_mesh([0.5, 0.5, 0.5])
    a = surface_sample(mesh, 500, seed=9)
    b = surface_sample(mesh, 500, seed=9)
    assert np.array_equal(a, b)
    c = surface_sample(mesh, 500, seed=10)
    assert not np.array_equal(a, c)


def test_samples_lie_on_mesh():
    mesh = box_mesh([0.04, 0.02, 0.06], subdivisions=(2, 2, 3))
    pts = surface_sample(mesh, 2000, seed=1)
    box = BoxSdf([0.04, 0.02, 0.06])
    assert np.max(np.abs(box.evaluate(pts))) < 1e-9


def test_empty_mesh_error():
    mesh = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    with pytest.raises(EmptyMeshError):
        surface_sample(mesh, 10, seed=0)


# ---------------------------------------------------------------- chamfer

def test_chamfer_identical_zero():
    pts = np.random.default_rng(2).random((100, 3))
    assert chamfer(pts, pts) == 0.0


def test_chamfer_single_points():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[1.0, 0.0, 0.0]])
    assert chamfer(a, b) == pytest.approx(2.0)


def test_chamfer_hand_computed():
    a = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    b = np.array([[0.0, 0, 0]])
    # mean over a: (0 + 1)/2 = 0.5; mean over b: 0 -> nearest of b in a is 0
    assert chamfer(a, b) == pytest.approx(1.5 - 1.0)  # 0.5 + 0.0


def test_chamfer_asymmetric_cloud_hand_value():
    a = np.array([[0.0, 0, 0], [1.0, 0, 0]])
    b = np.array([[2.0, 0.0, 0.0]])
    # a-side: (4 + 1)/2 = 2.5 ; b-side: 1.0
    assert chamfer(a, b) == pytest.approx(3.5)


def test_chamfer_empty_error():
    with pytest.raises(EmptyCloudError):
        chamfer(np.zeros((0, 3)), np.ones((3, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=1, max_value=40),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_chamfer_symmetry(na, nb, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(na, 3))
    b = rng.normal(size=(nb, 3))
    assert chamfer(a, b) == pytest.approx(chamfer(b, a), rel=1e-12)
    assert chamfer(a, b) >= 0.0


# ------------------------------------------------------------------- mesh

def test_mesh_volume_cube():
    mesh = box_mesh([0.5, 0.5, 0.5])
    assert mesh_volume(mesh) == pytest.approx(1.0)


def test_mesh_volume_icosphere():
    mesh = icosphere_mesh(0.05, refinements=4)
    assert mesh_volume(mesh) == pytest.approx(4 / 3 * np.pi * 0.05**3, rel=5e-3)


def test_mesh_validation():
    with pytest.raises(ValueError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))  # index out of range
    with pytest.raises(ValueError):
        TriMesh(np.zeros((3, 3)), np.array([[0, 1, 2]]))  # degenerate face
    with pytest.raises(ValueError):
        TriMesh(np.array([[np.inf, 0, 0], [0, 1, 0], [1, 0, 0]]), np.array([[0, 1, 2]]))


def test_mesh_io_roundtrip(tmp_path):
    mesh = box_mesh([0.03, 0.01, 0.02], subdivisions=(2, 1, 1))
    path = tmp_path / "m.obj"
    save_mesh(mesh, str(path))
    loaded = load_mesh(str(path))
    assert np.allclose(loaded.vertices, mesh.vertices, atol=1e-8)
    assert np.array_equal(loaded.faces, mesh.faces)


def test_mirrored_mesh_keeps_volume_sign():
    mesh = box_mesh([0.02, 0.01, 0.03], center=(0.05, 0.0, 0.0))
    mirrored = mesh.mirrored_x()
    assert mesh_volume(mirrored) == pytest.approx(mesh_volume(mesh))
    assert mirrored.vertices[:, 0].max() == pytest.approx(-0.03)
