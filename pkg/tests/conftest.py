import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pdflow.dynamics import FlowState
from pdflow.problem import quad1d, random_quad, solve_saddle_quadratic

settings.register_profile("pdflow", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pdflow")

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def q1():
    p = quad1d()
    return p, solve_saddle_quadratic(p)


@pytest.fixture
def rq():
    p = random_quad(6, 3, seed=11)
    return p, solve_saddle_quadratic(p)


def zero_state(p, t0=0.0):
    n, m = p.dim_primal, p.dim_dual
    return FlowState(np.zeros(n), np.zeros(n), np.zeros(m), t0)


def equilibrium(ref, t0=0.0):
    return FlowState(ref.primal_star, np.zeros_like(ref.primal_star), ref.dual_star, t0)
