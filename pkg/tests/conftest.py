import math
from pathlib import Path

import pytest

from hiersparse.dictionary import build_dictionary
from hiersparse.synth import MIN_RULE, RAW_RATE, generate_embeddings, make_schedule
from hiersparse.taxonomy import build_balanced_tree

FIXTURES = Path(__file__).parent / "fixtures"


def synthetic(b, L, d, theta0_deg=60.0, rate=0.25, mode=MIN_RULE, norm=0.8, seed=0):
    t = build_balanced_tree(b, L)
    sched = make_schedule(math.radians(theta0_deg), rate, b, L, mode)
    e = generate_embeddings(t, d, sched, norm, seed=seed)
    return t, sched, e, build_dictionary(e, t)


@pytest.fixture(scope="session")
def small_tree():
    """b=3, L=4, d=12 min-rule tree with its dictionary."""
    return synthetic(3, 4, 12, theta0_deg=60.0, rate=0.25, mode=MIN_RULE)


@pytest.fixture(scope="session")
def benchmark_tree():
    """The b=3, L=7, d=50 raw-rate 0.4 construction."""
    return synthetic(3, 7, 50, theta0_deg=85.0, rate=0.4, mode=RAW_RATE)


@pytest.fixture(scope="session")
def benchmark_tree_min_rule():
    return synthetic(3, 7, 50, theta0_deg=85.0, rate=0.4, mode=MIN_RULE)


@pytest.fixture
def toy_dir():
    return FIXTURES / "toy"


ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_RESULTS[name] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda s: (int(s.split()[0].rstrip('abc')), s)):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
