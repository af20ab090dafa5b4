import numpy as np
import pytest

from ncrelay import NetworkCode

# lines appended by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []

# encoding matrices (one row per relay) of the figure presets and their SVs
FIG_CODES = {
    "fig1": ([[1, 1], [1, 1]], [2, 2]),
    "fig2": ([[1, 0], [1, 1]], [3, 2]),
    "fig3": ([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [2, 2, 2]),
    "fig4": ([[1, 1, 1], [1, 1, 1], [1, 1, 1]], [2, 2, 2]),
    "fig5": ([[1, 0, 0], [0, 1, 0], [1, 1, 1]], [3, 3, 2]),
    "fig6": ([[1, 0], [1, 0], [1, 0], [0, 1], [0, 1]], [4, 3]),
    "fig7": ([[1, 1], [1, 1], [1, 1], [1, 1], [1, 1]], [2, 2]),
    "fig8": ([[1, 0], [1, 0], [1, 1], [1, 1], [0, 1]], [5, 4]),
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(FIG_CODES))
def fig_code(request):
    enc, sv = FIG_CODES[request.param]
    return NetworkCode(np.array(enc, dtype=np.uint8)), sv


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
