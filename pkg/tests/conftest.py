import itertools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def naive_closure(alg, rows):
    """Fixpoint of coordinatewise application over all n-tuples of rows."""
    have = {tuple(r) for r in rows}
    while True:
        cur = sorted(have)
        new = set()
        for args in itertools.product(cur, repeat=alg.arity):
            new.add(tuple(alg(*col) for col in zip(*args)))
        if new <= have:
            return have
        have |= new


def is_closed_set(alg, rows) -> bool:
    rows = {tuple(r) for r in rows}
    for args in itertools.product(sorted(rows), repeat=alg.arity):
        if tuple(alg(*col) for col in zip(*args)) not in rows:
            return False
    return True


def all_assignments(inst):
    """Every satisfying assignment by plain enumeration (no pruning)."""
    out = []
    for a in itertools.product(*inst.domains):
        if inst.satisfies(a):
            out.append(list(a))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Note one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
