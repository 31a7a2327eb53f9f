import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import equilibrium
from pdflow import _kernels
from pdflow.dynamics import (
    FlowState, Perturbation, eval_perturbation, make_rhs, perturbation_l1_norm, vector_field,
)
from pdflow.errors import DimensionError, NumericalError, UsageError
from pdflow.integrate import _quadratic_params
from pdflow.problem import ConstrainedProblem, quadratic_problem, random_quad, solve_saddle_quadratic
from pdflow.scaling import DampingParams, ScalingSchedule, beta


def loop_field(Q, c, A, b, gamma, delta, sigma, bt, x, v, lam, eps=None):
    """Explicit-loop evaluation of the flow, independent of numpy linear algebra."""
    n, m = len(x), len(lam)
    r = [sum(A[k][i] * x[i] for i in range(n)) - b[k] for k in range(m)]
    dv = []
    for i in range(n):
        grad = sum(Q[i][j] * x[j] for j in range(n)) + c[i]
        mult = sum(A[k][i] * lam[k] for k in range(m))
        pen = sigma * sum(A[k][i] * r[k] for k in range(m))
        dv.append(-gamma * v[i] - bt * (grad + mult + pen) + (0.0 if eps is None else eps[i]))
    dl = [bt * (sum(A[k][i] * (x[i] + delta * v[i]) for i in range(n)) - b[k]) for k in range(m)]
    return list(v), dv, dl


def test_saddle_point_at_rest_is_equilibrium():
    p = random_quad(6, 3, seed=3)
    ref = solve_saddle_quadratic(p)
    for s in (ScalingSchedule(), ScalingSchedule("exponential", 2.0, 0.3)):
        der = vector_field(p, DampingParams(), s, equilibrium(ref, 1.5))
        assert np.abs(np.concatenate([der.dx, der.dv, der.dlambda])).max() <= 1e-10


def test_hand_example():
    p = quadratic_problem([[0.0]], [0.0], [[1.0]], [1.0])
    der = vector_field(p, DampingParams(1.0, 1.0, 0.0), ScalingSchedule(), FlowState([1.0], [1.0], [0.0]))
    assert (der.dx[0], der.dv[0], der.dlambda[0]) == (1.0, -1.0, 1.0)


@given(seed=st.integers(0, 100), t=st.floats(0, 3), sigma=st.floats(0, 3))
def test_matches_loop_oracle(seed, t, sigma):
    rng = np.random.default_rng(seed)
    p = random_quad(4, 2, seed=seed)
    d = DampingParams(1.5, 0.8, sigma)
    s = ScalingSchedule("exponential", 1.3, 0.4)
    x, v, lam = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(2)
    eps = Perturbation("power_decay", eps0=0.7, power=1.5, direction=2)
    der = vector_field(p, d, s, FlowState(x, v, lam, t), eps)
    e = eval_perturbation(eps, t, 4)
    dx, dv, dl = loop_field(p.quadratic.hessian.tolist(), p.quadratic.linear.tolist(),
                            p.constraint_matrix.tolist(), p.constraint_rhs.tolist(),
                            1.5, 0.8, sigma, beta(s, t), x, v, lam, e)
    np.testing.assert_allclose(der.dx, dx, rtol=0, atol=0)
    np.testing.assert_allclose(der.dv, dv, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(der.dlambda, dl, rtol=1e-12, atol=1e-12)


@given(lam1=arrays(np.float64, 2, elements=st.floats(-5, 5)),
       lam2=arrays(np.float64, 2, elements=st.floats(-5, 5)), a=st.floats(-3, 3))
def test_velocity_equation_affine_in_multiplier(lam1, lam2, a):
    p = random_quad(4, 2, seed=1)
    d, s = DampingParams(), ScalingSchedule("constant", 2.0)
    x, v = np.ones(4), np.zeros(4)

    def dv(lam):
        return vector_field(p, d, s, FlowState(x, v, lam)).dv

    lhs = dv(a * lam1 + (1 - a) * lam2)
    rhs = a * dv(lam1) + (1 - a) * dv(lam2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


def test_penalty_term_matches_gradient_of_squared_residual():
    p = random_quad(5, 2, seed=8)
    x = np.linspace(-1, 1, 5)
    st0 = FlowState(x, np.zeros(5), np.zeros(2))
    s = ScalingSchedule()
    diff = vector_field(p, DampingParams(sigma=0.0), s, st0).dv - vector_field(p, DampingParams(sigma=2.5), s, st0).dv
    r = p.constraint_matrix @ x - p.constraint_rhs
    np.testing.assert_allclose(diff, 2.5 * p.constraint_matrix.T @ r, rtol=1e-12, atol=1e-13)


def test_non_finite_gradient_names_term():
    p = ConstrainedProblem(lambda x: 0.0, lambda x: np.full_like(x, np.nan), [[1.0]], [0.0])
    with pytest.raises(NumericalError) as info:
        vector_field(p, DampingParams(), ScalingSchedule(), FlowState([1.0], [0.0], [0.0]))
    assert info.value.term == "gradient"
    rhs = make_rhs(p, DampingParams(), ScalingSchedule())
    with pytest.raises(NumericalError) as info:
        rhs(0.0, np.array([1.0, 0.0, 0.0]))
    assert info.value.term == "gradient"


def test_state_validation():
    with pytest.raises(NumericalError):
        FlowState([np.inf], [0.0], [0.0])
    with pytest.raises(DimensionError):
        FlowState([1.0, 2.0], [0.0], [0.0])
    p = random_quad(3, 1)
    with pytest.raises(DimensionError):
        vector_field(p, DampingParams(), ScalingSchedule(), FlowState([1.0], [0.0], [0.0]))


def test_state_vector_roundtrip():
    st0 = FlowState([1.0, 2.0], [3.0, 4.0], [5.0], 0.5)
    y = st0.to_vector()
    back = FlowState.from_vector(y, 2, 0.5)
    assert np.array_equal(back.to_vector(), y) and back.t == 0.5


def test_perturbation_examples():
    e = eval_perturbation(Perturbation("power_decay", eps0=1.0, power=2.0), 1.0, 3)
    np.testing.assert_array_equal(e, [0.25, 0.0, 0.0])
    e = eval_perturbation(Perturbation("exponential_decay", eps0=1.0, rate=1.0, direction=1), 0.0, 2)
    np.testing.assert_array_equal(e, [0.0, 1.0])
    assert perturbation_l1_norm(Perturbation("power_decay", power=2.0), 0.0, 9.0) == pytest.approx(0.9, abs=1e-8)
    assert perturbation_l1_norm(Perturbation("power_decay", power=2.0), 0.0, 1e9) == pytest.approx(1.0, abs=1e-8)
    assert perturbation_l1_norm(Perturbation(), 0.0, 5.0) == 0.0


def test_perturbation_integrability_flags():
    assert Perturbation("power_decay", power=2.0).claims_integrable
    assert not Perturbation("power_decay", power=1.0).claims_integrable
    assert not Perturbation("power_decay", power=0.5).claims_integrable
    assert Perturbation("exponential_decay").claims_integrable
    assert Perturbation("power_decay", eps0=0.0).is_zero


def test_perturbation_validation():
    with pytest.raises(UsageError):
        Perturbation("sine")
    with pytest.raises(UsageError):
        Perturbation("custom")
    with pytest.raises(UsageError):
        Perturbation("exponential_decay", rate=0.0)
    with pytest.raises(DimensionError):
        eval_perturbation(Perturbation("power_decay", direction=5), 0.0, 3)
    with pytest.raises(DimensionError):
        eval_perturbation(Perturbation("custom", oracle=lambda t: np.zeros(2)), 0.0, 3)


def test_custom_perturbation_l1():
    eps = Perturbation("custom", oracle=lambda t: np.array([3.0, 4.0]) * np.exp(-t), custom_integrable=True)
    assert perturbation_l1_norm(eps, 0.0, 50.0, n=2) == pytest.approx(5.0 * (1 - np.exp(-50.0)), rel=1e-9)


@given(seed=st.integers(0, 100), t=st.floats(0, 4))
def test_make_rhs_equals_vector_field(seed, t):
    rng = np.random.default_rng(seed)
    p = random_quad(5, 3, seed=seed % 7)
    d, s = DampingParams(3.0, 0.5, 0.7), ScalingSchedule("polynomial", 1.0, 1.5, t0=0.0 + 1.0)
    eps = Perturbation("exponential_decay", eps0=-2.0, rate=0.3, direction=4)
    y = rng.standard_normal(13)
    tt = 1.0 + t
    der = vector_field(p, d, s, FlowState.from_vector(y, 5, tt), eps)
    np.testing.assert_allclose(make_rhs(p, d, s, eps)(tt, y), np.concatenate([der.dx, der.dv, der.dlambda]),
                               rtol=1e-13, atol=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("schedule", [ScalingSchedule("constant", 2.0), ScalingSchedule("exponential", 1.0, 0.5),
                                      ScalingSchedule("polynomial", 1.0, 2.0, t0=1.0)])
@pytest.mark.parametrize("eps", [None, Perturbation("power_decay", eps0=0.5, power=2.0, direction=1, t0=1.0),
                                 Perturbation("exponential_decay", eps0=-1.0, rate=2.0)])
def test_compiled_field_matches_generic(schedule, eps):
    rng = np.random.default_rng(0)
    p = random_quad(5, 2, seed=4)
    ref = solve_saddle_quadratic(p)
    d = DampingParams(2.5, 0.7, 1.3)
    P = _quadratic_params(p, d, schedule, eps, ref)
    rhs = make_rhs(p, d, schedule, eps)
    out = np.empty(12)
    for t in (1.0, 1.7, 4.2):
        y = rng.standard_normal(12)
        _kernels.quad_rhs_compiled(t, y, P, out)
        np.testing.assert_allclose(out, rhs(t, y), rtol=1e-13, atol=1e-13)
