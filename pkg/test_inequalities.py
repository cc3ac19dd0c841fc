"""Fundamental vector inequalities, weighted Sobolev/Poincare, comparison and Harnack checks."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from services.domain import (
    InvalidInputError,
    PreconditionError,
    Region,
    ScalarField,
    ball_region,
    box_mesh,
    disk_mesh,
    radial_mesh,
)
from services.harness import polynomial_bump_bank
from services.inequalities import (
    HarnackConfig,
    admissible_t_range,
    check_weighted_poincare,
    check_weighted_sobolev,
    exponent_2M,
    fundamental_ineq_check,
    grad_integrability,
    harnack_check,
    harnack_radius_factor,
    kappa_hat_stability,
    local_bound_check,
    reference_constants,
    small_domain_comparison,
    sobolev_exponent_t,
    weight_condition_constant,
    weight_report,
)
from services.problem import Coefficient, Nonlinearity, ProblemSpec
from services.solver import solve_dirichlet_2d, torsion_profile


@pytest.fixture(scope="module")
def disk():
    return disk_mesh(33, 64)


@pytest.fixture(scope="module")
def torsion_pair(disk):
    r2 = np.sum(disk.points ** 2, axis=1)
    return ScalarField(disk, (1.0 - r2) / 2.0), ScalarField(disk, (1.0 - r2) / 4.0)


def test_reference_constants():
    assert reference_constants(3.0) == {"c": 0.5, "C": 2.0, "c_hat": 0.5}
    low = reference_constants(1.5)
    assert low["c"] == 0.5
    assert low["C"] == pytest.approx(2.0 ** 0.5 / 0.5)
    with pytest.raises(InvalidInputError):
        reference_constants(1.0)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.0])
def test_fundamental_inequalities_hold_on_samples(p):
    check = fundamental_ineq_check(p, samples=200_000, seed=11)
    assert check.holds
    assert check.adopted == check.reference


@pytest.mark.slow
@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_fundamental_inequalities_hold_on_a_million_samples(p):
    assert fundamental_ineq_check(p, samples=1_000_000).holds


def test_exponent_2M_example():
    assert exponent_2M(4, 3.0) == pytest.approx(8.0 / 3.0)
    assert admissible_t_range(3.0) == (1.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.floats(2.05, 20.0))
def test_exponent_2M_exceeds_two(n, p):
    assert exponent_2M(n, p) > 2.0


def test_sobolev_exponent_of_the_weight():
    assert sobolev_exponent_t(2, 1.5) == pytest.approx(3.0)
    assert sobolev_exponent_t(3, 1.0) == pytest.approx(3.0)


def test_weight_condition_of_unit_weight_is_the_area(disk):
    result = weight_condition_constant(ScalarField.constant(disk, 1.0), 1.5)
    assert result.value == pytest.approx(math.pi, abs=1e-4)
    assert not result.degraded


def test_weighted_sobolev_bank_respects_the_constant(disk):
    rho = ScalarField.constant(disk, 1.0)
    report = weight_report(rho, 1.5, 2.0)
    for v in polynomial_bump_bank(disk, 25, seed=3):
        check = check_weighted_sobolev(rho, v, 2.0, report)
        assert check.passed, check.ratio


def test_weighted_sobolev_needs_vanishing_fields(disk):
    rho = ScalarField.constant(disk, 1.0)
    report = weight_report(rho, 1.5, 2.0)
    with pytest.raises(PreconditionError):
        check_weighted_sobolev(rho, ScalarField.constant(disk, 1.0), 2.0, report)


def test_poincare_constant_shrinks_with_the_cap(disk):
    rho = ScalarField.constant(disk, 1.0)
    x2 = disk.points[:, 1]
    constants = []
    for level in (0.2, 0.4, 0.6):
        cap = Region(disk, x2 > level)
        v = ScalarField(disk, np.where(x2 > level, (x2 - level) * (1.0 - np.sum(disk.points ** 2, axis=1)), 0.0))
        check = check_weighted_poincare(rho, v, weight_report(rho, 1.5, 2.0, region=cap), 0.5, 3.0, region=cap)
        assert check.passed
        constants.append(check.c_p)
    assert constants[0] > constants[1] > constants[2]


def test_torsion_comparison_constant(disk, torsion_pair):
    u_big, u_small = torsion_pair
    check = small_domain_comparison(u_big, u_small, Region.whole(disk),
                                    np.full(disk.size, 2.0), np.full(disk.size, 1.0))
    assert check.k_hat == pytest.approx(0.25, abs=1e-12)
    assert check.passed


def test_comparison_requires_boundary_ordering(disk, torsion_pair):
    u_big, u_small = torsion_pair
    with pytest.raises(PreconditionError) as info:
        small_domain_comparison(u_big, u_small, ball_region(disk, (0.0, 0.0), 0.5),
                                np.full(disk.size, 2.0), np.full(disk.size, 1.0))
    assert info.value.node is not None


def test_kappa_hat_is_finite_on_reflection_caps():
    # Levels on grid lines keep the reflected nodes on the grid.
    mesh = box_mesh(2, 1.0, 21)
    u = ScalarField(mesh, np.exp(-mesh.points[:, 1]))
    family = kappa_hat_stability(u, (0.0, 1.0), [0.2, 0.4, 0.6], Coefficient("affine", 1.0, 0.1),
                                 Nonlinearity("constant", 1.0), 3.0)
    assert family.bounded
    assert family.to_dict()["levels"] == [0.2, 0.4, 0.6]


def test_harnack_config_validation():
    with pytest.raises(InvalidInputError):
        HarnackConfig(n=2, p=3.0, s=0.5, q=2.0, frak_q=3.0)
    with pytest.raises(InvalidInputError):
        HarnackConfig(n=2, p=3.0, s=0.5, q=8.0, frak_q=4.5)
    with pytest.raises(InvalidInputError):
        HarnackConfig(n=2, p=2.5, s=3.0, q=8.0, frak_q=4.0)


def test_harnack_radius_factor_example():
    config = HarnackConfig(n=2, p=2.5, s=1.0, q=8.0, frak_q=4.0, c_flat=0.5, c_natural=2.0)
    assert harnack_radius_factor(config, 1.0) == pytest.approx(0.25)
    assert harnack_radius_factor(config, 0.1) < harnack_radius_factor(config, 1.0)
    with pytest.raises(InvalidInputError):
        harnack_radius_factor(config, 0.0)


def test_harnack_check_on_ordered_pair(disk, torsion_pair):
    u_big, u_small = torsion_pair
    config = HarnackConfig.default_for(2, 3.0)
    result = harnack_check(u_small, u_big, (0.0, 0.0), 0.15, config,
                           np.full(disk.size, 1.0), np.full(disk.size, 2.0))
    assert result.passed
    assert result.infimum > 0


def test_local_bound_measures_a_finite_constant(disk, torsion_pair):
    u_big, u_small = torsion_pair
    config = HarnackConfig.default_for(2, 3.0)
    result = local_bound_check(u_big, u_small, (0.0, 0.0), 0.15, 2.0, config, 1.0,
                               np.full(disk.size, 2.0), np.full(disk.size, 1.0))
    assert result.sup > 0
    assert 0 < result.measured_constant < math.inf


def test_gradient_integrability_of_torsion():
    mesh = radial_mesh(2, 2001)
    u = ScalarField(mesh, torsion_profile(2, 3.0, mesh.axes[0]))
    result = grad_integrability(u, 0.5, 3.0)
    assert result.value == pytest.approx(4.0 * math.pi * math.sqrt(2.0) / 3.0, rel=1e-3)
    assert not result.divergent


def test_gradient_integrability_of_a_plateau_diverges(disk):
    result = grad_integrability(ScalarField.constant(disk, 0.3), 0.5, 3.0)
    assert result.divergent
    assert math.isinf(result.value)


@pytest.mark.slow
@pytest.mark.parametrize("epsilon", [0.1, 0.05])
def test_kappa_hat_on_solver_caps_is_stable(epsilon):
    kappa = Coefficient("affine", 1.0, epsilon)
    spec = ProblemSpec(2, 3.0, f=Nonlinearity.parse("power:1,2"), kappa=kappa)
    report = solve_dirichlet_2d(spec)
    assert report.converged
    # caps on the side where kappa falls keep u below its reflection on the cap boundary
    family = kappa_hat_stability(report.solution, (0.0, -1.0), [0.3, 0.5], kappa,
                                 report.effective_f(spec), 3.0)
    assert family.bounded
    assert all(math.isfinite(check.k_hat) for check in family.checks)
    assert family.checks[0].measure > family.checks[1].measure
    assert family.spread < 2.0
