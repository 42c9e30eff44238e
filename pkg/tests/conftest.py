import random

import pytest
from hypothesis import strategies as st

from sspi.core import Instance

WORKED = [(4, 3), (2, 1)]


@st.composite
def instances(draw, min_n=1, max_n=6, k=None, hi=12):
    """Small integer instances; a narrow value range makes ties common."""
    n = draw(st.integers(min_n, max_n))
    pairs = []
    for _ in range(n):
        a = draw(st.integers(0, hi))
        b = draw(st.integers(0, hi))
        pairs.append((max(a, b), min(a, b)))
    rank = k if k is not None else draw(st.integers(1, 3))
    return Instance.from_values(pairs, rank)


def random_instance(rng: random.Random, n: int, k: int, hi: int = 20) -> Instance:
    pairs = [sorted((rng.randint(0, hi), rng.randint(0, hi)), reverse=True) for _ in range(n)]
    return Instance.from_values(pairs, k)


@pytest.fixture
def worked():
    return Instance.from_values(WORKED, 2)


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
