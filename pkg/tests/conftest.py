import pytest

from pepaflow.core import compile_model
from pepaflow.parser import parse_model

CLIENT_SERVER = """
C1 = (req, 1.0).C2;
C2 = (done, 1.0).C1;
S1 = (req, 1.0).S1;
system: C1[{n}] <req> S1[{m}]
"""

TWO_STATE = """
A = (a, {a}).B;
B = (b, {b}).A;
system: A[{n}]
"""


def client_server(n=10, m=2):
    return parse_model(CLIENT_SERVER.format(n=n, m=m))


def two_state(a=2.0, b=1.0, n=1):
    return parse_model(TWO_STATE.format(a=a, b=b, n=n))


@pytest.fixture
def cs_model():
    return compile_model(client_server(10, 2))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
