import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdflow.errors import DimensionError, SingularKKTError, UsageError
from pdflow.problem import (
    ConstrainedProblem, QuadraticObjective, SaddlePoint, aug_lagrangian, dump_problem, kkt_residual,
    lagrangian, load_problem, problem_from_dict, problem_to_dict, quad1d, quadratic_problem, random_quad,
    solve_saddle_quadratic,
)


def loop_lagrangian(Q, c, A, b, x, lam):
    n, m = len(x), len(b)
    f = sum(0.5 * x[i] * Q[i][j] * x[j] for i in range(n) for j in range(n)) + sum(c[i] * x[i] for i in range(n))
    r = [sum(A[k][i] * x[i] for i in range(n)) - b[k] for k in range(m)]
    return f + sum(lam[k] * r[k] for k in range(m)), r


def test_lagrangian_feasible_point_drops_multiplier():
    assert lagrangian(quad1d(), [1.0], [7.0]) == pytest.approx(0.5, abs=1e-15)


def test_lagrangian_direct_substitution():
    p = quadratic_problem([[1.0]], [0.0], [[1.0]], [0.0])
    assert lagrangian(p, [2.0], [3.0]) == pytest.approx(8.0, abs=1e-14)


def test_lagrangians_match_loop_oracle():
    rng = np.random.default_rng(5)
    p = random_quad(5, 2, seed=4, penalty=1.7)
    Q, c = p.quadratic.hessian, p.quadratic.linear
    A, b = p.constraint_matrix, p.constraint_rhs
    for _ in range(10):
        x, lam = rng.standard_normal(5), rng.standard_normal(2)
        L, r = loop_lagrangian(Q.tolist(), c.tolist(), A.tolist(), b.tolist(), x.tolist(), lam.tolist())
        assert lagrangian(p, x, lam) == pytest.approx(L, rel=1e-13, abs=1e-13)
        La = L + 0.5 * 1.7 * sum(ri * ri for ri in r)
        assert aug_lagrangian(p, x, lam) == pytest.approx(La, rel=1e-13, abs=1e-13)


def test_aug_lagrangian_equals_lagrangian_when_feasible():
    p = quadratic_problem(np.eye(2), [1.0, -1.0], [[1.0, 1.0]], [2.0], penalty=5.0)
    x = np.array([0.5, 1.5])
    assert aug_lagrangian(p, x, [3.0]) == lagrangian(p, x, [3.0])


def test_aug_lagrangian_pure_penalty():
    p = quadratic_problem([[0.0]], [0.0], [[1.0]], [0.0], penalty=2.0)
    assert aug_lagrangian(p, [3.0], [0.0]) == pytest.approx(9.0)


def test_kkt_residual_hand_values():
    p = quad1d()
    assert kkt_residual(p, [1.0], [-1.0]) == (0.0, 0.0)
    assert kkt_residual(p, [0.0], [0.0]) == (0.0, 1.0)


def test_dimension_mismatch_is_usage_error():
    p = quad1d()
    with pytest.raises(DimensionError):
        lagrangian(p, [1.0, 2.0], [0.0])
    with pytest.raises(UsageError):
        kkt_residual(p, [1.0], [0.0, 1.0])


def test_saddle_1d_and_2d():
    ref = solve_saddle_quadratic(quad1d())
    np.testing.assert_allclose(ref.primal_star, [1.0], atol=1e-15)
    np.testing.assert_allclose(ref.dual_star, [-1.0], atol=1e-15)
    ref2 = solve_saddle_quadratic(quadratic_problem(np.eye(2), [0.0, 0.0], [[1.0, 1.0]], [2.0]))
    np.testing.assert_allclose(ref2.primal_star, [1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(ref2.dual_star, [-1.0], atol=1e-14)


def test_saddle_random_against_dense_lu():
    p = random_quad(8, 3, seed=2)
    ref = solve_saddle_quadratic(p)
    assert max(kkt_residual(p, ref.primal_star, ref.dual_star)) <= 1e-10
    Q, c, A, b = p.quadratic.hessian, p.quadratic.linear, p.constraint_matrix, p.constraint_rhs
    K = np.block([[Q, A.T], [A, np.zeros((3, 3))]])
    sol = scipy.linalg.lu_solve(scipy.linalg.lu_factor(K), np.concatenate([-c, b]))
    np.testing.assert_allclose(np.concatenate([ref.primal_star, ref.dual_star]), sol, rtol=1e-10, atol=1e-12)
    assert ref.check(p)


def test_singular_kkt_reports_rank():
    p = quadratic_problem(np.eye(2), [0.0, 0.0], [[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0])
    with pytest.raises(SingularKKTError) as info:
        solve_saddle_quadratic(p)
    assert info.value.rank == 3 and info.value.size == 4
    assert "rank" in str(info.value)


def test_saddle_needs_quadratic():
    p = ConstrainedProblem(lambda x: float(x @ x), lambda x: 2 * x, [[1.0]], [1.0])
    with pytest.raises(UsageError):
        solve_saddle_quadratic(p)


@pytest.mark.parametrize("kwargs, err", [
    (dict(Q=[[1.0, 2.0], [0.0, 1.0]], c=[0.0, 0.0], A=[[1.0, 0.0]], b=[0.0]), UsageError),
    (dict(Q=[[1.0, 0.0], [0.0, -1.0]], c=[0.0, 0.0], A=[[1.0, 0.0]], b=[0.0]), UsageError),
    (dict(Q=[[1.0]], c=[0.0, 0.0], A=[[1.0]], b=[0.0]), DimensionError),
    (dict(Q=[[1.0]], c=[0.0], A=[[1.0]], b=[0.0, 1.0]), DimensionError),
])
def test_invalid_problem_data(kwargs, err):
    with pytest.raises(err):
        quadratic_problem(**kwargs)


def test_penalty_must_be_positive():
    with pytest.raises(UsageError):
        quad1d(penalty=0.0)


def test_problem_arrays_are_read_only():
    p = random_quad(3, 1)
    with pytest.raises(ValueError):
        p.constraint_matrix[0, 0] = 1.0
    with pytest.raises(ValueError):
        p.quadratic.hessian[0, 0] = 1.0


def test_random_quad_is_seeded():
    a, b = random_quad(4, 2, seed=9), random_quad(4, 2, seed=9)
    np.testing.assert_array_equal(a.quadratic.hessian, b.quadratic.hessian)
    np.testing.assert_array_equal(a.constraint_rhs, b.constraint_rhs)
    with pytest.raises(UsageError):
        random_quad(2, 3)


def test_yaml_roundtrip(tmp_path):
    p = random_quad(4, 2, seed=1, penalty=0.5)
    dump_problem(p, tmp_path / "p.yaml")
    q = load_problem(tmp_path / "p.yaml")
    np.testing.assert_array_equal(q.quadratic.hessian, p.quadratic.hessian)
    np.testing.assert_array_equal(q.constraint_matrix, p.constraint_matrix)
    assert q.penalty == 0.5
    assert problem_to_dict(problem_from_dict(problem_to_dict(p))) == problem_to_dict(p)


def test_load_problem_without_section(tmp_path):
    (tmp_path / "bad.yaml").write_text("hessian: [[1]]\n")
    with pytest.raises(UsageError):
        load_problem(tmp_path / "bad.yaml")


vec5 = arrays(np.float64, 5, elements=st.floats(-10, 10))
vec2 = arrays(np.float64, 2, elements=st.floats(-10, 10))


@given(x=vec5, lam=vec2, seed=st.integers(0, 50))
def test_saddle_inequality(x, lam, seed):
    p = random_quad(5, 2, seed=seed)
    ref = solve_saddle_quadratic(p)
    xs, ls = ref.primal_star, ref.dual_star
    mid = lagrangian(p, xs, ls)
    tol = 1e-8 * (1 + abs(mid))
    assert lagrangian(p, xs, lam) <= mid + tol
    assert mid <= lagrangian(p, x, ls) + tol


@given(lam=vec2, seed=st.integers(0, 50))
def test_aug_lagrangian_flat_in_multiplier_at_solution(lam, seed):
    p = random_quad(5, 2, seed=seed)
    ref = solve_saddle_quadratic(p)
    a = aug_lagrangian(p, ref.primal_star, lam)
    b = aug_lagrangian(p, ref.primal_star, ref.dual_star)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


@given(x=arrays(np.float64, 5, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3),
       scale=st.floats(0.1, 10), seed=st.integers(0, 50))
def test_gradient_matches_central_differences(x, scale, seed):
    p = random_quad(5, 2, seed=seed)
    x = x / np.linalg.norm(x) * scale
    h = 1e-5
    fd = np.array([(p.objective(x + h * e) - p.objective(x - h * e)) / (2 * h) for e in np.eye(5)])
    g = p.gradient(x)
    assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_quadratic_objective_oracles_agree():
    q = QuadraticObjective([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0])
    x = np.array([0.3, -0.7])
    assert q.value(x) == pytest.approx(0.5 * x @ q.hessian @ x + q.linear @ x)
    np.testing.assert_allclose(q.gradient(x), q.hessian @ x + q.linear)


def test_saddle_point_check_flags_bad_reference():
    p = quad1d()
    assert not SaddlePoint([0.0], [0.0]).check(p)
    assert SaddlePoint([1.0], [-1.0]).check(p)
