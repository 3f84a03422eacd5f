import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zhukcsp.algebra import (
    FiniteAlgebra,
    Term,
    canonical_labels,
    check_special,
    dump_algebra,
    free_ops,
    is_subuniverse,
    isomorphic,
    load_algebra,
    make_algebra,
    quotient,
    restrict,
    sg_generate,
    specialize,
    substitute,
)
from zhukcsp.catalog import NAMES, catalog
from zhukcsp.congruence import all_congruences
from zhukcsp.errors import CapExceeded, InputError, NotSpecialError, NotWNUError, ParseError

from conftest import is_closed_set, naive_closure

MAJ_TABLE = "0 0 0 1 0 1 1 1"
# a random 3-element WNU found by search; u(0, 1) = 2 but u(0, 2) = 0
NONSPECIAL_WNU = [0, 2, 0, 2, 2, 2, 0, 2, 0, 2, 2, 0, 2, 1, 2, 1, 2, 2, 0, 1, 0, 2, 2, 2, 0, 2, 2]


# -- loading ------------------------------------------------------------------

def test_load_z2_flags():
    alg = load_algebra("size 2\narity 3\ntable 0 1 1 0 1 0 0 1\n")
    assert (alg.is_idempotent, alg.is_wnu, alg.is_special) == (True, True, True)
    assert alg == catalog("Z2")


def test_load_majority_flags():
    alg = load_algebra(f"size 2\narity 3\ntable {MAJ_TABLE}")
    assert alg.is_idempotent and alg.is_wnu and alg.is_special
    assert alg == catalog("MAJ")


def test_sum_mod4_is_wnu_but_not_special():
    text = dump_algebra(make_algebra(4, 3, lambda x, y, z: (x + y + z) % 4))
    with pytest.raises(NotWNUError):
        # x+y+z mod 4 is not idempotent (3x != x)
        load_algebra(text)
    alg = load_algebra(text, force=True)
    assert not alg.is_idempotent and not alg.is_special


def test_require_special_rejects_nonspecial_wnu():
    alg = FiniteAlgebra(3, 3, np.array(NONSPECIAL_WNU))
    with pytest.raises(NotSpecialError):
        load_algebra(dump_algebra(alg), require_special=True)
    assert load_algebra(dump_algebra(alg)) == alg


def test_load_comments_and_multiline_table():
    text = "# majority\nsize 2  # elements\narity 3\ntable 0 0 0 1\n 0 1 1 1\n"
    assert load_algebra(text) == catalog("MAJ")


@pytest.mark.parametrize("text, fragment", [
    ("size 2\narity 3\ntable 0 1 1\n", "table length"),
    ("size 2\narity 3\ntable 0 1 1 0 1 0 0 2\n", "out of range"),
    ("size 2\ntable 0 1\n", "missing 'arity'"),
    ("size two\narity 3\n", "expected integer"),
    ("bogus 2\n", "unexpected token"),
])
def test_load_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        load_algebra(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        load_algebra("size 2\narity 3\ntable 0 1 x 0 1 0 0 1\n")
    assert exc.value.line == 3 and exc.value.column == 11


def test_force_accepts_non_wnu():
    proj = make_algebra(2, 3, lambda x, y, z: x)
    with pytest.raises(NotWNUError):
        load_algebra(dump_algebra(proj))
    assert not load_algebra(dump_algebra(proj), force=True).is_wnu


@pytest.mark.parametrize("name", NAMES)
def test_dump_roundtrip(name):
    alg = catalog(name)
    assert load_algebra(dump_algebra(alg)) == alg


# -- catalog ------------------------------------------------------------------

@pytest.mark.parametrize("name", NAMES)
def test_catalog_is_special_wnu(name):
    alg = catalog(name)
    assert alg.is_idempotent and alg.is_wnu and alg.is_special
    assert alg.arity % 2 == 1


def test_catalog_values():
    f = catalog("F3")
    assert (f(0, 1, 1), f(2, 0, 1), f(2, 2, 2)) == (0, 0, 2)
    assert catalog("Z4w5")(1, 1, 1, 1, 3) == 3
    d = catalog("DD3")
    assert (d(2, 0, 1), d(2, 1, 1)) == (2, 1)


def test_f3_returns_a_coordinate():
    f = catalog("F3")
    for t in itertools.product(range(3), repeat=3):
        assert f(*t) in t


def test_f5_recursion():
    f3, f5 = catalog("F3"), catalog("F5")
    for t in itertools.product(range(3), repeat=5):
        assert f5(*t) == f3(f3(*t[:3]), t[3], t[4])


def test_catalog_unknown():
    with pytest.raises(InputError, match="unknown catalog"):
        catalog("Z7")


def test_table_order_first_argument_most_significant():
    alg = make_algebra(2, 3, lambda x, y, z: x)
    assert alg.table.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]


# -- Sg ---------------------------------------------------------------------------

def test_sg_examples():
    assert sg_generate(catalog("Z2"), 2, [(0, 1), (1, 0)]).as_set() == {(0, 1), (1, 0)}
    assert sg_generate(catalog("MAJ"), 2, [(0, 1), (1, 0)]).as_set() == {(0, 1), (1, 0)}
    for name in NAMES:
        alg = catalog(name)
        for a in range(alg.size):
            assert sg_generate(alg, 1, [(a,)]).as_set() == {(a,)}


def test_sg_cap():
    with pytest.raises(CapExceeded) as exc:
        sg_generate(catalog("Z2"), 6, [tuple(r) for r in np.eye(6, dtype=int)], cap=10)
    assert exc.value.reached > 10


def test_sg_rejects_out_of_range():
    with pytest.raises(InputError):
        sg_generate(catalog("Z2"), 1, [(2,)])


small_algebras = st.sampled_from(["Z2", "MAJ", "AND3", "DD3", "F3", "Z2xZ2"])


@st.composite
def alg_and_gens(draw, max_power=3, max_gens=4):
    alg = catalog(draw(small_algebras))
    k = draw(st.integers(1, max_power))
    tup = st.tuples(*[st.integers(0, alg.size - 1)] * k)
    gens = draw(st.lists(tup, min_size=1, max_size=max_gens))
    return alg, k, gens


@given(alg_and_gens())
def test_sg_matches_naive_closure(case):
    alg, k, gens = case
    assert sg_generate(alg, k, gens).as_set() == naive_closure(alg, gens)


@given(alg_and_gens(), st.data())
def test_sg_extensive_monotone_idempotent(case, data):
    alg, k, gens = case
    s = sg_generate(alg, k, gens).as_set()
    assert set(map(tuple, gens)) <= s
    more = data.draw(st.lists(st.tuples(*[st.integers(0, alg.size - 1)] * k), max_size=2))
    assert s <= sg_generate(alg, k, list(gens) + more).as_set()
    assert sg_generate(alg, k, sorted(s)).as_set() == s
    assert is_closed_set(alg, s)


@given(alg_and_gens())
def test_provenance_reevaluates(case):
    alg, k, gens = case
    sub = sg_generate(alg, k, gens, with_provenance=True)
    # variable x_i stands for the i-th generator as given
    assignment = [np.array(g) for g in gens]
    for row, term in zip(sub.tuples.tolist(), sub.provenance):
        assert term.evaluate(alg, assignment).tolist() == row


# -- terms ----------------------------------------------------------------------

def test_term_parse_roundtrip():
    t = Term.parse("(w x1 (w x2 x2 x3) x3)")
    assert str(t) == "(w x1 (w x2 x2 x3) x3)"
    assert t.depth() == 2
    alg = catalog("Z2")
    assert int(t.evaluate(alg, [1, 0, 1])) == (1 + (0 + 0 + 1) + 1) % 2


@pytest.mark.parametrize("bad", ["(w x1", "(f x1 x2 x3)", "x0", "x1 x2", "(w x1 y)"])
def test_term_parse_errors(bad):
    with pytest.raises(ParseError):
        Term.parse(bad)


def test_substitute_keeps_sharing():
    t = Term.parse("(w x1 x2 x2)")
    s = substitute(t, [Term.x(2), Term.parse("(w x1 x1 x3)")])
    assert str(s) == "(w x2 (w x1 x1 x3) (w x1 x1 x3))"
    assert s.args[1] is s.args[2]


# -- free_ops -------------------------------------------------------------------

def _binary(alg, fn):
    return tuple(fn(x, y) for x in range(alg.size) for y in range(alg.size))


def test_free_ops_examples():
    z2 = free_ops(catalog("Z2"), 2).as_set()
    assert z2 == {_binary(catalog("Z2"), lambda x, y: x), _binary(catalog("Z2"), lambda x, y: y)}
    assert free_ops(catalog("MAJ"), 2).as_set() == z2
    and3 = free_ops(catalog("AND3"), 2)
    meet = _binary(catalog("AND3"), lambda x, y: x & y)
    assert meet in and3
    assert int(and3.term_of(meet).evaluate(catalog("AND3"), [0, 1])) == 0


def test_free_ops_terms_define_their_tables():
    alg = catalog("DD3")
    ops = free_ops(alg, 2)
    grid = np.array(list(itertools.product(range(3), repeat=2))).T
    for row, term in zip(ops.tuples.tolist(), ops.provenance):
        assert term.evaluate(alg, list(grid)).tolist() == row


def test_free_ops_width_cap():
    with pytest.raises(CapExceeded):
        free_ops(catalog("F3"), 4)


def test_free_ops_with_constants_contains_constants():
    ops = free_ops(catalog("Z2"), 1, constants=True)
    assert {(0, 0), (1, 1), (0, 1)} <= ops.as_set()


# -- special ---------------------------------------------------------------------

def test_check_special_examples():
    assert check_special(catalog("Z2")) and check_special(catalog("F3"))
    assert not make_algebra(4, 3, lambda x, y, z: (x + y + z) % 4).is_special


def test_specialize_identity_on_special():
    alg = catalog("MAJ")
    out, term = specialize(alg)
    assert out is alg and str(term) == "(w x1 x2 x3)"


def test_specialize_fails_without_idempotence():
    with pytest.raises(NotWNUError):
        specialize(make_algebra(4, 3, lambda x, y, z: (x + y + z) % 4))


def test_specialize_fails_on_affine_z4():
    # -x-y-z mod 4 is an idempotent WNU with u(x, y) = 2x + 3y; its ternary
    # terms are affine, and a special one would need u(x, y) = y, forcing
    # coefficient 1 at every position, whose sum 3 is not 1 mod 4
    alg = make_algebra(4, 3, lambda x, y, z: (-x - y - z) % 4)
    assert alg.is_wnu and not alg.is_special
    with pytest.raises(NotSpecialError):
        specialize(alg)


def test_specialize_nonspecial_wnu():
    alg = FiniteAlgebra(3, 3, np.array(NONSPECIAL_WNU))
    assert alg.is_wnu and not alg.is_special
    out, term = specialize(alg)
    assert out.is_wnu and out.is_special
    grid = np.array(list(itertools.product(range(alg.size), repeat=3))).T
    assert term.evaluate(alg, list(grid)).tolist() == out.table.tolist()
    # breadth-first: no special WNU among terms of smaller depth
    assert term.depth() == 2


# -- quotient / restrict -------------------------------------------------------------

def test_quotient_z4w5_mod2():
    q = quotient(catalog("Z4w5"), (0, 1, 0, 1))
    assert isomorphic(q, make_algebra(2, 5, lambda *xs: sum(xs) % 2))
    assert q.blocks == (0, 1, 0, 1)


def test_restrict_f3_is_z2():
    r = restrict(catalog("F3"), (0, 1))
    assert r == catalog("Z2")
    assert r.embedding == (0, 1)


@pytest.mark.parametrize("name", NAMES)
def test_quotient_identity_is_isomorphic(name):
    alg = catalog(name)
    q = quotient(alg, range(alg.size))
    assert q.table.tolist() == alg.table.tolist()


def test_quotient_rejects_non_congruence():
    with pytest.raises(InputError, match="not a congruence"):
        quotient(catalog("Z4w5"), (0, 0, 1, 1))


def test_restrict_rejects_non_subuniverse():
    with pytest.raises(InputError):
        restrict(catalog("Z2xZ2"), (0, 1, 2))
    assert not is_subuniverse(catalog("Z2xZ2"), (0, 1, 2))


def test_quotient_relabels_by_least_member():
    assert canonical_labels((5, 3, 5, 3)) == (0, 1, 0, 1)


@pytest.mark.parametrize("name", ["Z4w5", "Z2xZ2", "DD3", "F3", "MAJ"])
def test_restrict_quotient_commute(name):
    alg = catalog(name)
    subs = [b for b in _subuniverses(alg) if len(b) > 1]
    for con in all_congruences(alg):
        for b in subs:
            r = restrict(alg, b)
            local = [con.labels[e] for e in b]
            rq = quotient(r, local)
            # quotient first: the image of b in A/con is a subuniverse
            q = quotient(alg, con.labels)
            img = sorted({canonical_labels(con.labels)[e] for e in b})
            qr = restrict(q, img)
            assert isomorphic(rq, qr)


def _subuniverses(alg):
    from zhukcsp.subuniverse import enumerate_subuniverses
    return enumerate_subuniverses(alg)


def test_algebra_validation():
    with pytest.raises(InputError):
        FiniteAlgebra(2, 3, np.zeros(7, int))
    with pytest.raises(InputError):
        FiniteAlgebra(2, 3, np.full(8, 2))
