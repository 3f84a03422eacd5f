import itertools

import numpy as np
import pytest

from zhukcsp.algebra import FiniteAlgebra, make_algebra
from zhukcsp.catalog import catalog
from zhukcsp.errors import InputError
from zhukcsp.xy import (
    IndexKey,
    build_generated_relation,
    check_k_wnu,
    check_xy_symmetric,
    derive_xy,
    evaluate_table,
    index_count,
    reduce_symmetric_fully,
    special_wnus,
    symmetric_reduce,
    two_tuples,
)

NONSPECIAL_WNU = [0, 2, 0, 2, 2, 2, 0, 2, 0, 2, 2, 0, 2, 1, 2, 1, 2, 2, 0, 1, 0, 2, 2, 2, 0, 2, 2]


def _table(f, size, n):
    return np.array([f(*t) for t in itertools.product(range(size), repeat=n)])


# -- the generated relation ---------------------------------------------------------------

def test_z2_relation_is_the_four_sums():
    rel = build_generated_relation(catalog("Z2"), 3)
    assert rel.arity == 6 and len(rel) == 4
    gamma = np.array([[k.alpha[i] for k in rel.keys] for i in range(3)])
    sums = {tuple((np.array(lam) @ gamma % 2).tolist()) for lam in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]}
    assert {tuple(r) for r in rel.tuples.tolist()} == sums


def test_relation_contains_majority():
    rel = build_generated_relation(catalog("MAJ"), 3)
    maj = tuple(max(set(k.alpha), key=k.alpha.count) for k in rel.keys)
    assert maj in {tuple(r) for r in rel.tuples.tolist()}


def test_trivial_algebra():
    one = FiniteAlgebra(1, 3, np.zeros(1, np.int64))
    rel = build_generated_relation(one, 3)
    assert rel.arity == 0 and rel.tuples.shape == (1, 0)


@pytest.mark.parametrize("name", ["Z2", "MAJ", "AND3", "F3", "DD3", "MIN3"])
def test_index_count_and_symmetry(name):
    alg = catalog(name)
    rel = build_generated_relation(alg, 3)
    assert rel.arity == index_count([len(u) for u in rel.algebras], 3)
    assert rel.is_symmetric()
    for i, t in enumerate(rel.terms):
        col = [int(evaluate_table(alg, t, 3).reshape((alg.size,) * 3)[k.alpha]) for k in rel.keys]
        assert col == rel.tuples[i].tolist()


def test_subalgebra_columns_repeat_the_whole_algebra():
    rel = build_generated_relation(catalog("F3"), 3)
    assert len(rel.algebras) == 4  # F3 plus its three two-element subuniverses
    for i, k in enumerate(rel.keys):
        if k.algebra:
            assert np.array_equal(rel.tuples[:, i], rel.tuples[:, rel.column(IndexKey(0, k.alpha))])


def test_two_tuples_and_orbits():
    tt = two_tuples((0, 1), 3)
    assert len(tt) == 6 and (0, 0, 0) not in tt
    assert IndexKey(0, (1, 0, 1)).orbit == (0, 1, 1)
    assert index_count([2], 3) == 6 and index_count([3, 2, 2], 5) == 15 * 10


def test_even_arity_rejected():
    with pytest.raises(InputError):
        build_generated_relation(catalog("Z2"), 4)


# -- checks -----------------------------------------------------------------------------

def test_check_examples():
    sum3 = _table(lambda x, y, z: (x + y + z) % 2, 2, 3).reshape(2, 2, 2)
    assert check_xy_symmetric(sum3)
    proj = _table(lambda x, y, z: x, 2, 3).reshape(2, 2, 2)
    assert not check_xy_symmetric(proj) and not check_k_wnu(proj, 1)
    assert check_xy_symmetric(catalog("F3"))
    with pytest.raises(InputError):
        check_k_wnu(sum3, 3)


def test_wnu_that_is_not_xy_symmetric():
    # 5-ary: symmetric on one odd value, but 2 ones vs 3 ones treated differently by position
    def f(*xs):
        return xs[0] if len(set(xs)) > 1 and xs.count(xs[0]) == 2 and xs[1] == xs[0] else max(set(xs), key=xs.count)
    op = _table(f, 2, 5).reshape((2,) * 5)
    assert check_k_wnu(op, 1) and check_k_wnu(op, 4)
    assert not check_xy_symmetric(op)


# -- symmetric reductions ----------------------------------------------------------------

def test_majority_reduces_to_majority_values():
    rel = build_generated_relation(catalog("MAJ"), 3)
    doms = reduce_symmetric_fully(rel)
    assert doms == [(max(set(k.alpha), key=k.alpha.count),) for k in rel.keys]
    assert symmetric_reduce(rel, doms) is None


def test_linear_has_no_symmetric_reduction():
    rel = build_generated_relation(catalog("Z2"), 3)
    assert symmetric_reduce(rel, rel.domains) is None


def test_symmetric_reduce_input_checks():
    rel = build_generated_relation(catalog("MAJ"), 3)
    doms = [tuple(d) for d in rel.domains]
    with pytest.raises(InputError, match="one domain per index"):
        symmetric_reduce(rel, doms[:-1])
    bad = list(doms)
    bad[rel.column(IndexKey(0, (0, 0, 1)))] = (0,)
    with pytest.raises(InputError, match="not symmetric"):
        symmetric_reduce(rel, bad)


# -- derivation -------------------------------------------------------------------------

def test_z2_gives_the_sum():
    res = derive_xy(catalog("Z2"), 3)
    assert res.table.tolist() == _table(lambda x, y, z: (x + y + z) % 2, 2, 3).tolist()
    assert res.route == "direct" and res.generation == 1


def test_majority_gives_majority():
    res = derive_xy(catalog("MAJ"), 3)
    assert res.table.tolist() == _table(lambda x, y, z: int(x + y + z >= 2), 2, 3).tolist()


@pytest.mark.parametrize("name", ["Z2", "MAJ", "AND3", "F3", "DD3", "MIN3"])
def test_derivation_is_certified(name):
    alg = catalog(name)
    res = derive_xy(alg, 3)
    assert check_xy_symmetric(res.as_algebra())
    assert all(check_k_wnu(res.as_algebra(), k) for k in (1, 2))
    assert np.array_equal(evaluate_table(alg, res.term, 3), res.table)


def test_arity_five_over_ternary():
    res = derive_xy(catalog("Z2"), 5)
    assert res.table.tolist() == _table(lambda *xs: sum(xs) % 2, 2, 5).tolist()
    assert all(check_k_wnu(res.as_algebra(), k) for k in range(1, 5))


def test_non_special_input_is_specialized_first():
    alg = FiniteAlgebra(3, 3, np.array(NONSPECIAL_WNU))
    assert alg.is_wnu and not alg.is_special
    res = derive_xy(alg, 3)
    assert res.route.startswith("specialized")
    assert check_xy_symmetric(res.as_algebra())
    assert np.array_equal(evaluate_table(alg, res.term, 3), res.table)


def test_block_substitution_route():
    # a 9-ary WNU: derive the 9-ary symmetric witness, then group arguments in threes
    alg = make_algebra(2, 9, lambda *xs: sum(xs) % 2, "Z2_9")
    res = derive_xy(alg, 3)
    assert check_xy_symmetric(res.as_algebra())
    assert np.array_equal(evaluate_table(alg, res.term, 3), res.table)


def test_even_n_rejected():
    with pytest.raises(InputError):
        derive_xy(catalog("Z2"), 2)


def _brute_special_wnus():
    grid = list(itertools.product((0, 1), repeat=3))
    out = set()
    for vals in itertools.product((0, 1), repeat=8):
        w = dict(zip(grid, vals))
        if any(w[(a, a, a)] != a for a in (0, 1)):
            continue
        if any(len({w[(y, x, x)], w[(x, y, x)], w[(x, x, y)]}) > 1 for x in (0, 1) for y in (0, 1)):
            continue
        if all(w[(x, x, w[(x, x, y)])] == w[(x, x, y)] for x in (0, 1) for y in (0, 1)):
            out.add(vals)
    return out


def test_special_wnu_enumeration_and_sweep():
    algs = special_wnus(2, 3)
    assert {tuple(a.table.tolist()) for a in algs} == _brute_special_wnus()
    assert len(algs) == 4
    for alg in algs:
        res = derive_xy(alg, 3)
        assert check_xy_symmetric(res.as_algebra())
        assert np.array_equal(evaluate_table(alg, res.term, 3), res.table)
