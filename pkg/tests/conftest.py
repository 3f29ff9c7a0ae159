from __future__ import annotations

import numpy as np
import pytest

# acceptance criteria register their outcome here; printed at session end
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


class ScriptedRng:
    """Replays a fixed list of uniform draws; raises when exhausted."""

    def __init__(self, draws):
        self._draws = list(draws)

    def random(self) -> float:
        if not self._draws:
            raise AssertionError("scripted rng exhausted")
        return self._draws.pop(0)

    @property
    def remaining(self) -> int:
        return len(self._draws)


# Dense oracle, written from textbook definitions and independent of qsim.
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
SXDG = SX.conj().T
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def embed(u: np.ndarray, target: int, n: int) -> np.ndarray:
    """Full 2^n operator; the leftmost kron factor is the highest qubit."""
    ops = [u if q == target else I2 for q in reversed(range(n))]
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def cnot_dense(control: int, target: int, n: int = 2) -> np.ndarray:
    return embed(P0, control, n) + embed(P1, control, n) @ embed(X, target, n)


@pytest.fixture
def scripted():
    return ScriptedRng


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
