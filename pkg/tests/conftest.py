import numpy as np
import pytest

from tplkit.matrix_model import TransitionMatrix


@pytest.fixture
def two_state():
    return TransitionMatrix.from_rows([[0.8, 0.2], [0.2, 0.8]])


@pytest.fixture
def asym_pair():
    """Backward and forward matrices used in the allocation walkthrough."""
    return (
        TransitionMatrix.from_rows([[0.8, 0.2], [0.1, 0.9]]),
        TransitionMatrix.from_rows([[0.8, 0.2], [0.3, 0.7]], kind="forward"),
    )


def random_matrix(rng: np.random.Generator, n: int, sparsity: float = 0.0) -> TransitionMatrix:
    raw = rng.uniform(size=(n, n))
    if sparsity:
        raw[rng.uniform(size=(n, n)) < sparsity] = 0.0
        raw[np.arange(n), rng.integers(0, n, size=n)] += 0.1
    return TransitionMatrix.from_rows(raw / raw.sum(axis=1, keepdims=True))


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, taken from the real test outcomes."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("title", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, status, title in sorted(lines):
            terminalreporter.write_line(f"criterion {num:>2}: {status}  {title}")
