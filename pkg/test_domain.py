"""Meshes, fields, regions, quadrature and interpolation."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from services.domain import (
    BOX,
    POLAR,
    DegenerateMeshError,
    EmptyRegionError,
    InvalidInputError,
    OutsideRegionError,
    Region,
    ScalarField,
    annulus_region,
    ball_region,
    box_mesh,
    disk_mesh,
    dump_field,
    gradient,
    half_space_region,
    integrate,
    interpolate,
    interpolate_many,
    load_field,
    lq_norm,
    oscillation,
    radial_mesh,
)


@pytest.fixture(scope="module")
def disk():
    return disk_mesh(33, 64)


def test_disk_weights_sum_to_pi(disk):
    assert disk.kind == POLAR
    assert disk.volume == pytest.approx(math.pi, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_radial_weights_give_ball_volume(n):
    mesh = radial_mesh(n, 101)
    expected = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
    assert mesh.volume == pytest.approx(expected, rel=1e-12)


def test_box_weights_give_box_volume():
    mesh = box_mesh(3, 2.0, 9, center=(1.0, 0.0, -1.0))
    assert mesh.kind == BOX
    assert mesh.volume == pytest.approx(64.0)
    assert mesh.contains(np.array([[3.0, 2.0, -3.0]]))[0]
    assert not mesh.contains(np.array([[3.1, 0.0, 0.0]]))[0]


def test_graded_box_keeps_its_extent():
    mesh = box_mesh(2, 5.0, 17, grading=2.0)
    assert mesh.axes[0][0] == -5.0 and mesh.axes[0][-1] == 5.0
    spacing = np.diff(mesh.axes[0])
    assert spacing[8] < spacing[0]
    assert mesh.volume == pytest.approx(100.0)


def test_degenerate_meshes_are_rejected():
    with pytest.raises(DegenerateMeshError):
        radial_mesh(2, 2)
    with pytest.raises(DegenerateMeshError):
        disk_mesh(2, 16)
    with pytest.raises(InvalidInputError):
        box_mesh(2, -1.0, 9)


def test_lq_norm_of_constant(disk):
    u = ScalarField.constant(disk, 2.0)
    assert lq_norm(u, 2) == pytest.approx(2.0 * math.sqrt(math.pi))
    assert lq_norm(u, math.inf) == 2.0
    assert lq_norm(u, 0.5) == pytest.approx(2.0 * math.pi ** 2)


def test_lq_norm_on_empty_region_raises(disk):
    u = ScalarField.constant(disk, 1.0)
    with pytest.raises(EmptyRegionError):
        lq_norm(u, 2, Region(disk, np.zeros(disk.size, dtype=bool)))


def test_oscillation_of_affine_kappa(disk):
    kappa = ScalarField(disk, 1.0 + 0.1 * disk.points[:, 1])
    assert oscillation(kappa) == pytest.approx(0.2, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5.0, 5.0), st.floats(-5.0, 5.0))
def test_oscillation_is_homogeneous_and_shift_invariant(disk, a, b):
    kappa = ScalarField(disk, np.sin(3.0 * disk.points[:, 0]) + disk.points[:, 1] ** 2)
    scaled = ScalarField(disk, a * kappa.values + b)
    assert oscillation(scaled) == pytest.approx(abs(a) * oscillation(kappa), rel=1e-9, abs=1e-9)


def test_integrate_quadratic_on_disk(disk):
    r2 = ScalarField(disk, np.sum(disk.points ** 2, axis=1))
    # int_B |x|^2 = pi / 2
    assert integrate(r2) == pytest.approx(math.pi / 2, rel=2e-3)


def test_gradient_of_affine_field_is_exact(disk):
    u = ScalarField(disk, 2.0 * disk.points[:, 0] - 3.0 * disk.points[:, 1])
    g = gradient(u).components
    assert np.allclose(g[:, 0], 2.0, atol=1e-8)
    assert np.allclose(g[:, 1], -3.0, atol=1e-8)


def test_gradient_on_box_matches_quadratic():
    mesh = box_mesh(2, 1.0, 21)
    u = ScalarField(mesh, mesh.points[:, 0] ** 2 + mesh.points[:, 1])
    g = gradient(u).components
    assert np.allclose(g[:, 0], 2.0 * mesh.points[:, 0], atol=1e-10)
    assert np.allclose(g[:, 1], 1.0, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_interpolation_reproduces_affine_fields(x, y):
    mesh = disk_mesh(17, 32)
    if math.hypot(x, y) > 0.95:
        return
    u = ScalarField(mesh, 1.0 + mesh.points[:, 0] - 2.0 * mesh.points[:, 1])
    assert interpolate(u, (x, y)) == pytest.approx(1.0 + x - 2.0 * y, abs=1e-10)


def test_interpolation_outside_disk(disk):
    u = ScalarField.constant(disk, 1.0)
    with pytest.raises(OutsideRegionError):
        interpolate(u, (1.2, 0.0))
    values = interpolate_many(u, np.array([[0.0, 0.0], [0.0, 1.5]]), outside="nan")
    assert values[0] == pytest.approx(1.0)
    assert math.isnan(values[1])


def test_region_set_operations(disk):
    ball = ball_region(disk, (0.0, 0.0), 0.5)
    ring = annulus_region(disk, (0.0, 0.0), 0.25, 1.0)
    cap = half_space_region(disk, (0.0, 1.0), 0.0)
    assert (ball & ring).count < ball.count
    assert (ball | ring).count == disk.size
    assert (~cap).count + cap.count == disk.size
    assert cap.measure == pytest.approx(math.pi / 2, rel=0.05)


def test_boundary_nodes_of_whole_disk_are_the_outer_ring(disk):
    edge = Region.whole(disk).boundary_nodes()
    assert np.array_equal(edge.mask, disk.boundary_mask())


def test_boundary_nodes_of_cap_sit_next_to_the_plane(disk):
    cap = half_space_region(disk, (1.0, 0.0), 0.3)
    edge = cap.boundary_nodes()
    assert edge.count > 0
    assert np.all(cap.mask[edge.mask])


def test_dump_and_load_field(tmp_path):
    mesh = box_mesh(2, 1.5, 7, center=(0.5, -0.5))
    u = ScalarField(mesh, np.sin(mesh.points[:, 0]) * mesh.points[:, 1])
    path = dump_field(u, tmp_path / "u.csv")
    loaded = load_field(path)
    assert loaded.mesh.kind == BOX
    assert np.array_equal(loaded.values, u.values)


def test_load_field_without_sidecar(tmp_path):
    mesh = disk_mesh(5, 8)
    path = dump_field(ScalarField.constant(mesh, 1.0), tmp_path / "u.csv")
    path.with_suffix(".json").unlink()
    with pytest.raises(InvalidInputError):
        load_field(path)


def test_field_size_must_match_mesh(disk):
    with pytest.raises(InvalidInputError):
        ScalarField(disk, np.zeros(3))
