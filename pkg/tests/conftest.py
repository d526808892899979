import numpy as np
import pytest

from sigmak.catalog import scalar_field
from sigmak.geometry import GridField, TensorField, TorusGrid
from sigmak.pde import Problem, PsiSpec

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)


def make_problem(N=32, k=2, s=2.0, f_spec=None, a=1.0, sign="positive", dim=2, lengths=None):
    grid = TorusGrid((N,) * dim, lengths)
    S = TensorField.constant(grid, s * np.eye(dim))
    f = scalar_field(f_spec, grid) if f_spec else GridField.constant(grid, 1.0)
    return Problem(grid, k, S, PsiSpec(f, a), sign)


def smooth_random(grid, rng, amplitude, modes=3):
    """Random trigonometric field with wave numbers up to ``modes``."""
    X = grid.coords()
    out = np.zeros(grid.shape)
    for _ in range(4):
        ks = rng.integers(0, modes + 1, grid.dim)
        phase = rng.uniform(0, 2 * np.pi)
        arg = sum(2 * np.pi * kk * x / L for kk, x, L in zip(ks, X, grid.lengths))
        out += rng.uniform(-1, 1) * np.cos(arg + phase)
    return amplitude * out / 4


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
