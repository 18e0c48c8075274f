import pytest
from hypothesis import strategies as st

from aqp.vector import QueryVector

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(label: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" ({detail})" if detail else ""))
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def sparse_vectors(max_feature=12, max_size=8, allow_zero=True):
    weights = st.floats(min_value=0.0, max_value=10.0, allow_nan=False, allow_infinity=False)
    vec = st.dictionaries(st.integers(0, max_feature), weights, max_size=max_size).map(QueryVector)
    if not allow_zero:
        vec = vec.filter(lambda v: not v.is_zero and v.norm() > 1e-6)
    return vec
