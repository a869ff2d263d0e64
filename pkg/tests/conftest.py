import sys

import numpy as np
import pytest

from jetqcnn.jetprep.kinematics import Jet


def random_massless_jet(rng: np.random.Generator, n_min: int = 3, n_max: int = 40,
                        label: int | None = None) -> Jet:
    """Massless constituents scattered in a cone around a random axis."""
    n = int(rng.integers(n_min, n_max + 1))
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    spread = rng.uniform(0.02, 0.6)
    d = axis + spread * rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    E = rng.exponential(50.0, n) + 1.0
    cons = np.column_stack([E, E[:, None] * d])
    return Jet(cons, int(rng.integers(0, 2)) if label is None else label)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
