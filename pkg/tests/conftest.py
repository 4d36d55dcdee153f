import numpy as np
import pytest

from copulacov import make_copula

MODEL_SPECS = [
    ("independence", None),
    ("fgm", -0.7),
    ("fgm", 0.5),
    ("fgm", 1.0),
    ("gumbel-barnett", 0.6),
    ("clayton", 0.5),
    ("clayton", 2.0),
    ("gaussian", -0.5),
    ("gaussian", 0.75),
]


def model_id(param):
    fam, th = param
    return fam if th is None else f"{fam}-{th:g}"


@pytest.fixture(params=MODEL_SPECS, ids=model_id)
def model(request):
    return make_copula(*request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
