"""Reflections, critical hyperplanes, centers, symmetry deficits and the log-law fit."""
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from services import moving_planes
from services.bubbles import TalentiBubble
from services.domain import InvalidInputError, NumericalError, ScalarField, box_mesh, disk_mesh
from services.moving_planes import (
    HalfSpaceSpec,
    LogLawFit,
    SweepSample,
    analyze,
    angular_oscillation,
    approximate_center,
    critical_lambda,
    excess,
    fit_log_law,
    grid_spacing,
    log_law,
    max_rotation_deficit,
    plane_rotation,
    reflect_point,
    reflection_pair,
    rotation_deficit,
    rotation_family,
    run_sweep,
    sphere_directions,
)
from services.problem import Coefficient, Nonlinearity, ProblemSpec


@pytest.fixture(scope="module")
def disk():
    return disk_mesh(33, 64)


@pytest.fixture(scope="module")
def paraboloid(disk):
    return ScalarField(disk, 1.0 - np.sum(disk.points ** 2, axis=1))


def test_reflection_is_an_involution():
    h = HalfSpaceSpec((1.0, 0.0), 0.1)
    x = np.array([[0.5, 0.2], [-0.3, 0.7]])
    assert np.allclose(reflect_point(x[0], h), [-0.3, 0.2])
    assert np.allclose(reflect_point(reflect_point(x, h), h), x)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(-1.0, 1.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_reflection_involution_in_any_direction(angle, level, x, y):
    h = HalfSpaceSpec((math.cos(angle), math.sin(angle)), level)
    point = np.array([x, y])
    image = reflect_point(point, h)
    assert np.allclose(reflect_point(image, h), point, atol=1e-12)
    assert np.dot(image, h.omega) - level == pytest.approx(level - np.dot(point, h.omega), abs=1e-12)


def test_half_space_needs_a_unit_direction():
    with pytest.raises(InvalidInputError):
        HalfSpaceSpec((1.0, 1.0), 0.0)
    h = HalfSpaceSpec.along((3.0, 4.0), 0.5)
    assert np.allclose(h.omega, [0.6, 0.8])


def test_excess_vanishes_for_caps_away_from_the_center(paraboloid):
    assert excess(paraboloid, HalfSpaceSpec((1.0, 0.0), 0.5)) <= 1e-2
    assert excess(paraboloid, HalfSpaceSpec((1.0, 0.0), -0.5)) > 0.5


def test_excess_of_an_empty_cap_is_vacuous(paraboloid):
    result = moving_planes.excess_details(paraboloid, HalfSpaceSpec((0.0, 1.0), 1.5))
    assert result.vacuous
    assert result.value == 0.0


def test_excess_in_integral_and_sup_norms(paraboloid):
    h = HalfSpaceSpec((1.0, 0.0), -0.3)
    assert excess(paraboloid, h, "L3") > 0
    assert excess(paraboloid, h, "sup") > 0
    with pytest.raises(InvalidInputError):
        excess(paraboloid, h, "Lfoo")


def test_reflection_pair_difference_quotient(paraboloid):
    f = Nonlinearity("power", 1.0, 2.0)
    pair = reflection_pair(paraboloid, HalfSpaceSpec((1.0, 0.0), 0.2), Coefficient(), f, 3.0)
    assert pair.c_sup <= pair.lipschitz_f * (1.0 + 1e-3)
    assert np.allclose(pair.g1, paraboloid.values ** 2)
    assert pair.boundary.count > 0


def test_critical_lambda_of_a_radial_field(paraboloid):
    forward = critical_lambda(paraboloid, (1.0, 0.0), threshold=0.05, levels=100)
    backward = critical_lambda(paraboloid, (-1.0, 0.0), threshold=0.05, levels=100)
    assert forward.boundary is None and backward.boundary is None
    assert forward.value == pytest.approx(backward.value, abs=2e-2)
    assert -0.1 < forward.value <= 0.0


def test_critical_lambda_with_infinite_threshold(paraboloid):
    result = critical_lambda(paraboloid, (1.0, 0.0), threshold=math.inf)
    assert result.value == -1.0


def test_center_of_a_radial_field_is_the_origin(paraboloid):
    estimate = approximate_center(paraboloid, 0.05, levels=100)
    assert not estimate.degraded
    assert np.allclose(estimate.center, 0.0, atol=2e-2)


def test_center_recovery_on_a_box():
    mesh = box_mesh(2, 3.0, 41)
    z = np.array([0.4, -0.3])
    u = ScalarField(mesh, np.exp(-np.sum((mesh.points - z) ** 2, axis=1)))
    estimate = approximate_center(u, 0.03, levels=120)
    spacing = 6.0 / 40
    assert np.max(np.abs(estimate.center - z)) <= 2 * spacing


def test_sphere_directions_are_unit_vectors():
    assert sphere_directions(2).shape == (256, 2)
    directions = sphere_directions(3, seed=7)
    assert directions.shape == (1024, 3)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)
    assert np.array_equal(directions, sphere_directions(3, seed=7))


def test_angular_oscillation_separates_radial_and_shifted_fields(disk, paraboloid):
    assert angular_oscillation(paraboloid, (0.0, 0.0)) < 1e-2
    shifted = ScalarField(disk, 1.0 - np.sum((disk.points - [0.3, 0.0]) ** 2, axis=1))
    assert angular_oscillation(shifted, (0.0, 0.0)) > 0.1


def test_rotations_are_orthogonal():
    theta = plane_rotation(3, 0, 2, 0.7)
    assert np.allclose(theta.T @ theta, np.eye(3))
    assert len(rotation_family(3)) == 12
    with pytest.raises(InvalidInputError):
        plane_rotation(3, 1, 1, 0.2)


def test_rotation_deficit_of_a_radial_field(paraboloid):
    sup_part, _ = rotation_deficit(paraboloid, (0.0, 0.0), plane_rotation(2, 0, 1, math.pi / 3), 3.0)
    assert sup_part < 1e-2
    summary = max_rotation_deficit(paraboloid, (0.0, 0.0), 3.0)
    assert summary.sup < 1e-2


def test_analyze_reports_every_direction(paraboloid):
    report = analyze(paraboloid, 3.0, threshold=0.05, levels=60)
    assert len(report.lambdas) == 4
    assert np.allclose(report.center, 0.0, atol=3e-2)
    data = report.to_dict()
    assert data["deficit_kind"] == "osc"
    assert len(data["hyperplane_distances"]) == 4


def test_log_law_formula():
    assert log_law(1e-3, 2.0, 0.5) == pytest.approx(2.0 / math.sqrt(abs(math.log(2e-3))))


def test_fit_recovers_exact_log_law():
    d = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    fit = fit_log_law(list(zip(d, log_law(d, 2.0, 0.5))))
    assert fit.c == pytest.approx(2.0, abs=1e-4)
    assert fit.alpha == pytest.approx(0.5, abs=1e-4)
    assert not fit.degenerate
    assert LogLawFit.from_dict(fit.to_dict()) == fit


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0.2, 1.0))
def test_fit_inverts_the_log_law(c, alpha):
    d = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    fit = fit_log_law(list(zip(d, log_law(d, c, alpha))))
    assert fit.c == pytest.approx(c, rel=1e-2)
    assert fit.alpha == pytest.approx(alpha, rel=1e-2)


def test_fit_rejects_bad_samples():
    with pytest.raises(InvalidInputError):
        fit_log_law([(0.1, 1.0), (0.01, 0.5)])
    with pytest.raises(InvalidInputError):
        fit_log_law([(0.1, 1.0), (1.5, 0.5), (0.01, 0.2)])
    with pytest.raises(InvalidInputError):
        fit_log_law([(0.1, 1.0), (0.05, 0.0), (0.01, 0.2)])


def test_fit_flags_flat_data_as_degenerate():
    fit = fit_log_law([(1e-2, 0.3), (1e-3, 0.3), (1e-4, 0.3)])
    assert fit.degenerate


def test_sweep_drops_failing_samples_and_fits_the_rest(monkeypatch):
    def fake_point(base, mesh, epsilon, c3, levels, seed):
        if epsilon == 0.3:
            raise NumericalError("no convergence")
        report = SimpleNamespace(angular_oscillation=float(log_law(epsilon, 2.0, 0.5)))
        return SweepSample(epsilon, epsilon, report)

    monkeypatch.setattr(moving_planes, "_ball_point", fake_point)
    result = run_sweep(ProblemSpec(2, 3.0), "ball", [0.3, 1e-2, 1e-3, 1e-4, 1e-5],
                       mesh=disk_mesh(5, 8))
    assert [eps for eps, _ in result.dropped] == [0.3]
    assert "NumericalError" in result.dropped[0][1]
    assert len(result.samples) == 4
    assert result.fit.c == pytest.approx(2.0, abs=1e-4)
    assert result.fit.alpha == pytest.approx(0.5, abs=1e-4)


def test_sweep_without_enough_samples_skips_the_fit(monkeypatch):
    def fake_point(base, mesh, epsilon, c3, levels, seed):
        return SweepSample(epsilon, epsilon, SimpleNamespace(angular_oscillation=0.1))

    monkeypatch.setattr(moving_planes, "_ball_point", fake_point)
    result = run_sweep(ProblemSpec(2, 3.0), "ball", [0.1, 0.01], mesh=disk_mesh(5, 8))
    assert result.fit is None
    assert "2 usable samples" in result.fit_error


def test_sweep_rejects_unknown_family():
    with pytest.raises(InvalidInputError):
        run_sweep(ProblemSpec(2, 3.0), "torus", [0.1])


@pytest.mark.slow
def test_ball_sweep_oscillation_shrinks_with_the_coefficient_tilt():
    spec = ProblemSpec(2, 3.0, f=Nonlinearity.parse("power:1,2"))
    epsilons = [0.2, 0.1, 0.05, 0.025, 0.0]
    result = run_sweep(spec, "ball", epsilons, levels=80)
    assert result.dropped == []
    by_epsilon = {sample.epsilon: sample for sample in result.samples}
    assert sorted(by_epsilon) == sorted(epsilons)
    for eps in epsilons[:-1]:
        assert by_epsilon[eps].deficit == pytest.approx(2 * eps, rel=1e-12)
    noise = max(by_epsilon[0.0].deviation, 1e-8)
    deviations = [by_epsilon[eps].deviation for eps in epsilons[:-1]]
    for larger, smaller in zip(deviations, deviations[1:]):
        assert smaller <= larger + 2 * noise
    assert result.fit is not None
    assert result.fit.alpha > 0


@pytest.mark.slow
def test_space_sweep_fits_the_log_law():
    result = run_sweep(ProblemSpec(3, 2.5), "space", [0.05, 0.025, 0.0125, 0.00625], levels=80)
    assert len(result.samples) >= 3
    assert result.fit is not None


def test_center_spacing_of_a_graded_box():
    uniform = box_mesh(2, 3.0, 41)
    assert grid_spacing(uniform) == pytest.approx(6.0 / 40)
    graded = box_mesh(3, 20.0, 33, grading=4.0)
    assert grid_spacing(graded) < 0.2
    assert grid_spacing(graded) < np.diff(graded.axes[0]).max() / 10


@pytest.fixture(scope="module")
def bubble_box():
    return box_mesh(3, 4.0, 33)


def test_excess_detects_a_translated_bubble(bubble_box):
    plane = HalfSpaceSpec((1.0, 0.0, 0.0), 0.0)
    centered = TalentiBubble.standard(3, 2.5)
    shifted = TalentiBubble((0.5, 0.0, 0.0), 1.0, 3, 2.5)
    a = centered.decay_exponent
    assert excess(centered.field(bubble_box), plane, decay_exponent=a) <= 1e-10
    assert excess(shifted.field(bubble_box), plane, decay_exponent=a) > 0.05


def test_oscillation_grows_with_miscentering(bubble_box):
    u = TalentiBubble.standard(3, 2.5).field(bubble_box)
    h = grid_spacing(bubble_box)
    radii = [1.5, 2.0]
    values = [angular_oscillation(u, (delta, 0.0, 0.0), radii) for delta in (h, 2 * h, 4 * h)]
    assert values[0] > 0
    assert values[0] < values[1] < values[2]


def test_rotation_deficit_shrinks_as_the_center_approaches(paraboloid):
    theta = plane_rotation(2, 0, 1, math.pi)
    deficits = [rotation_deficit(paraboloid, (shift, 0.0), theta, 3.0)[0] for shift in (0.3, 0.15, 0.0)]
    assert deficits[0] > deficits[1] > deficits[2]
    assert deficits[2] < 1e-8


def test_critical_lambda_is_monotone_in_the_threshold(disk):
    u = ScalarField(disk, 1.0 - np.sum((disk.points - [0.2, 0.0]) ** 2, axis=1))
    values = [critical_lambda(u, (1.0, 0.0), threshold=tau, levels=100).value for tau in (0.01, 0.05, 0.2)]
    for smaller_tau, larger_tau in zip(values, values[1:]):
        assert larger_tau <= smaller_tau + 2e-4
