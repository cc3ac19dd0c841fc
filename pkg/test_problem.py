"""Problem specs: family parsing, hypotheses and serialization."""
import numpy as np
import pytest

from services.domain import InvalidInputError, disk_mesh
from services.problem import (
    Coefficient,
    Nonlinearity,
    ProblemSpec,
    conjugate,
    critical_exponent,
)


def test_parse_power_nonlinearity():
    f = Nonlinearity.parse("power:2,1.5")
    assert f.family == "power"
    assert f.power_exponent(3.0) == 1.5
    assert np.allclose(f.evaluate(np.array([0.0, 4.0]), 3.0), [0.0, 16.0])


def test_power_defaults_to_eigen_exponent():
    f = Nonlinearity.parse("power:1")
    assert f.power_exponent(3.0) == 2.0


def test_unknown_family_is_rejected():
    with pytest.raises(InvalidInputError):
        Nonlinearity.parse("cubic:1")
    with pytest.raises(InvalidInputError):
        Coefficient.parse("wave:1,2")


def test_tabulated_primitive_is_the_integral():
    f = Nonlinearity.parse("tabulated:0=1,1=3")
    # f(u) = 1 + 2u on [0, 1], constant 3 beyond
    assert f.primitive(np.array([1.0]), 3.0)[0] == pytest.approx(2.0)
    assert f.primitive(np.array([2.0]), 3.0)[0] == pytest.approx(5.0)


def test_lipschitz_of_power():
    f = Nonlinearity("power", 2.0, 2.0)
    assert f.lipschitz(3.0, 3.0) == pytest.approx(12.0)
    assert Nonlinearity("constant", 5.0).lipschitz(3.0, 3.0) == 0.0


def test_affine_coefficient_defaults_to_last_axis():
    kappa = Coefficient.parse("affine:1,0.1")
    values = kappa.evaluate(np.array([[0.0, 1.0], [1.0, 0.0]]), 2)
    assert np.allclose(values, [1.1, 1.0])
    assert not kappa.is_radial()


def test_check_hypotheses_rejects_nonpositive_kappa():
    spec = ProblemSpec(2, 3.0, kappa=Coefficient("affine", 0.5, 1.0))
    with pytest.raises(InvalidInputError):
        spec.check_hypotheses(disk_mesh(9, 16))


def test_check_hypotheses_power_bound():
    spec = ProblemSpec(2, 3.0, f=Nonlinearity("power", 2.0, 2.0), power_bound=1.0)
    with pytest.raises(InvalidInputError):
        spec.check_hypotheses(disk_mesh(9, 16))


def test_spec_roundtrips_through_dict():
    spec = ProblemSpec(2, 3.0, Nonlinearity.parse("power:1,2"), Coefficient.parse("affine:1,0.05"))
    again = ProblemSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()


def test_spec_accepts_compact_strings():
    spec = ProblemSpec.from_dict({"n": 2, "p": 3, "f": "constant:2", "kappa": "affine:1,0.1"})
    assert spec.f.value == 2.0
    assert spec.kappa.epsilon == 0.1


@pytest.mark.parametrize("n, p", [(1, 3.0), (2, 1.0), (2, 0.5)])
def test_invalid_dimension_or_exponent(n, p):
    with pytest.raises(InvalidInputError):
        ProblemSpec(n, p)


def test_critical_exponent_and_conjugate():
    assert critical_exponent(3, 2.5) == pytest.approx(15.0)
    assert conjugate(15.0) == pytest.approx(15.0 / 14.0)
    with pytest.raises(InvalidInputError):
        critical_exponent(2, 3.0)
