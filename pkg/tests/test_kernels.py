import numpy as np
import pytest
from hypothesis import given, strategies as st

from zhukcsp import _kernels
from zhukcsp.algebra import FiniteAlgebra
from zhukcsp.catalog import NAMES, catalog
from zhukcsp.errors import CapExceeded

from conftest import naive_closure


def _run(alg, gens, use_numba, keep_trail=True):
    return _kernels.closure(alg.automaton, np.asarray(gens, dtype=np.int64), 10**6,
                            keep_trail=keep_trail, use_numba=use_numba)


@st.composite
def closure_case(draw):
    alg = catalog(draw(st.sampled_from(NAMES)))
    k = draw(st.integers(1, 4 if alg.arity == 3 else 2))
    gens = draw(st.lists(st.tuples(*[st.integers(0, alg.size - 1)] * k), min_size=1, max_size=3))
    return alg, gens


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@given(closure_case())
def test_backends_agree_exactly(case):
    alg, gens = case
    a = _run(alg, gens, True)
    b = _run(alg, gens, False)
    assert np.array_equal(a[0], b[0])
    assert a[1] == b[1] and a[2] == b[2]


@given(closure_case())
def test_numpy_backend_matches_naive(case):
    alg, gens = case
    rows = _run(alg, gens, False, keep_trail=False)[0]
    assert set(map(tuple, rows.tolist())) == naive_closure(alg, gens)


def test_env_switch(monkeypatch):
    monkeypatch.setenv("ZHUKCSP_NUMBA", "0")
    assert not _kernels.numba_enabled()
    monkeypatch.setenv("ZHUKCSP_NUMBA", "1")
    assert _kernels.numba_enabled() == _kernels.HAVE_NUMBA


def test_automaton_levels_merge_equal_residuals():
    # a projection onto the first argument has one residual class after level 1
    proj = FiniteAlgebra(3, 3, np.repeat(np.arange(3), 9))
    auto = proj.automaton
    assert [t.shape for t in auto.trans] == [(1, 3), (3, 3), (3, 3)]


def test_generation_order_and_provenance_shape():
    alg = catalog("Z2")
    rows, gen_of, prov, hit = _run(alg, [(1, 0, 0), (0, 1, 0), (0, 0, 1)], None)
    assert hit is None
    assert gen_of[:3] == [0, 0, 0] and prov[:3] == [None] * 3
    assert len(rows) == 4 and rows[3].tolist() == [1, 1, 1]
    assert all(len(p) == 3 for p in prov[3:])


def test_stop_hook_ends_search():
    alg = catalog("Z2")
    gens = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    rows, _, _, hit = _kernels.closure(alg.automaton, np.array(gens), 100,
                                       stop=lambda r, off: off if (r == 1).all(axis=1).any() else None)
    assert hit == 3 and len(rows) == 4


def test_cap_is_explicit():
    alg = catalog("MAJ")
    gens = np.eye(5, dtype=np.int64)
    with pytest.raises(CapExceeded):
        _kernels.closure(alg.automaton, gens, 5)


@pytest.mark.parametrize("use_numba", [False, True])
def test_state_budget_raises_instead_of_exhausting_memory(monkeypatch, use_numba):
    if use_numba and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_kernels, "MAX_STATES", 8)
    alg = catalog("MAJ")
    with pytest.raises(CapExceeded, match="intermediate states"):
        _kernels.closure(alg.automaton, np.eye(6, dtype=np.int64), 10**6, use_numba=use_numba)


def test_encode_rows_wide_rows_fall_back_to_void_keys():
    rows = np.zeros((2, 80), np.int64)
    rows[1, -1] = 1
    keys = _kernels.encode_rows(rows, 3)
    assert keys.dtype.kind == "V" and keys[0] != keys[1]
