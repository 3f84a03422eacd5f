import hashlib
from dataclasses import replace

import numpy as np
import pytest

from zhukcsp import harness
from zhukcsp.catalog import catalog
from zhukcsp.csp import build_instance, check_invariant, dump_instance, parse_instance
from zhukcsp.errors import CapExceeded
from zhukcsp.harness import (
    GOLDEN_GAMMA,
    MIX_1,
    MIX_2,
    GenParams,
    SplitMix64,
    brute_force,
    case_params,
    derive_seed,
    fuzz_compare,
    gen_instance,
    run_case,
)

Z2 = catalog("Z2")
NEQ = [(0, 1), (1, 0)]

SEED42_Z2 = """\
algebra Z2
var x1
var x2
var x3
var x4
rel R0 2
0 1
1 1
end
rel R1 3
1 1 1
end
rel R2 3
0 1 0
end
con R0 x3 x1
con R1 x3 x4 x1
con R2 x3 x4 x1
"""


# -- PRNG -------------------------------------------------------------------------------

def test_constants():
    assert (GOLDEN_GAMMA, MIX_1, MIX_2) == (0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB)


def test_splitmix_reference_outputs():
    r = SplitMix64(0)
    assert [r.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    r = SplitMix64(1234567)
    assert [r.next() for _ in range(2)] == [6457827717110365317, 3203168211198807973]


def test_below_is_in_range_and_deterministic():
    a, b = SplitMix64(9), SplitMix64(9)
    xs = [a.below(7) for _ in range(500)]
    assert xs == [b.below(7) for _ in range(500)]
    assert set(xs) == set(range(7))
    with pytest.raises(ValueError):
        a.below(0)


def test_substreams_are_independent_of_draw_order():
    r = SplitMix64(5)
    s1 = r.substream(3).next()
    assert SplitMix64(5).substream(3).next() == s1
    assert SplitMix64(5).substream(4).next() != s1
    assert derive_seed(5, 3) != derive_seed(5, 4)


# -- oracle -------------------------------------------------------------------------------

def test_brute_force_examples():
    assert brute_force(build_instance(Z2, 2, [((0, 1), NEQ)]), "count") == 2
    tri = build_instance(Z2, 3, [((0, 1), NEQ), ((1, 2), NEQ), ((0, 2), NEQ)])
    assert brute_force(tri, "count") == 0 and brute_force(tri) is None
    assert brute_force(build_instance(Z2, 1, []), "count") == 2
    assert brute_force(build_instance(Z2, 2, [((0, 1), NEQ)]), "all") == [[0, 1], [1, 0]]


def test_brute_force_unary_and_repeated_scopes():
    inst = build_instance(Z2, 2, [((0,), [(1,)]), ((1, 1), [(0, 0), (1, 1)])])
    assert brute_force(inst, "all") == [[1, 0], [1, 1]]


def test_brute_force_cap_and_mode():
    with pytest.raises(CapExceeded):
        brute_force(build_instance(Z2, 10, []), "count", cap=1000)
    with pytest.raises(ValueError):
        brute_force(build_instance(Z2, 1, []), "some")


# -- generation ---------------------------------------------------------------------------

def test_seed_42_is_frozen():
    text = dump_instance(gen_instance(GenParams("Z2", n_vars=4, n_constraints=3, seed=42)))
    assert text == SEED42_Z2
    planted = dump_instance(gen_instance(GenParams("MAJ", n_vars=5, n_constraints=4, seed=42, planted=True)))
    assert hashlib.sha256(planted.encode()).hexdigest() == \
        "ca8afd7b0ae318cf637b2168d08d00a1703e6859814f77e428db2380bd807b11"


@pytest.mark.parametrize("name", ["Z2", "MAJ", "AND3", "F3", "DD3", "Z3", "Z2xZ2", "Z4w5"])
def test_generated_instances_are_valid(name):
    p = GenParams(name, n_vars=6, n_constraints=6, max_arity=3, max_generators=3, seed=11, vary=True)
    for i in range(15):
        cp = case_params(p, i)
        inst = gen_instance(cp)
        for c in inst.constraints:
            check_invariant(inst.alg, c.name, c.rows)
            assert len(set(c.scope)) == c.arity
        again = parse_instance(dump_instance(inst))
        assert dump_instance(again) == dump_instance(inst)
        if cp.planted:
            assert brute_force(inst) is not None


def test_planted_instances_are_satisfiable():
    for seed in range(20):
        inst = gen_instance(GenParams("F3", n_vars=6, n_constraints=10, seed=seed, planted=True))
        assert brute_force(inst) is not None


def test_case_params_vary_shapes():
    p = GenParams("Z2", n_vars=8, n_constraints=12, seed=3, vary=True)
    shapes = {(c.n_vars, c.n_constraints, c.planted) for c in map(lambda i: case_params(p, i), range(60))}
    assert len(shapes) > 10
    assert all(2 <= v <= 8 and 1 <= k <= 12 for v, k, _ in shapes)
    fixed = case_params(replace(p, vary=False), 0)
    assert (fixed.n_vars, fixed.n_constraints) == (8, 12)


def test_genparams_validation():
    with pytest.raises(ValueError):
        GenParams("Z2", n_vars=0)


# -- differential fuzzing ------------------------------------------------------------------

@pytest.mark.parametrize("name", ["Z2", "F3", "MAJ"])
def test_fuzz_examples_clean(name):
    rep = fuzz_compare(GenParams(name, seed=1), 200)
    assert rep.ok and not rep.mismatches, "\n".join(rep.lines())
    assert len(rep.cases) == 200
    assert rep.summary().startswith(f"algebra={name} cases=200 ")


def test_fuzz_report_is_deterministic_across_workers():
    p = GenParams("AND3", n_vars=6, n_constraints=6, seed=8, vary=True)
    a = fuzz_compare(p, 24, workers=1)
    b = fuzz_compare(p, 24, workers=2)
    assert [(c.index, c.seed, c.expected, c.got, c.reductions) for c in a.cases] == \
           [(c.index, c.seed, c.expected, c.got, c.reductions) for c in b.cases]


def test_mismatch_report_carries_repro(monkeypatch):
    monkeypatch.setattr(harness.Solver, "solve", lambda self, inst: False)
    p = GenParams("Z2", seed=1, planted=True)
    res = run_case(p, 0)
    assert res.mismatch and res.expected and res.got is False
    regenerated = gen_instance(case_params(p, 0))
    assert res.dump == dump_instance(regenerated)
    rep = harness.FuzzReport(p, [res])
    lines = rep.lines()
    assert lines[1] == f"case 0 seed={res.seed} expected=True got=False"
    assert all(ln.startswith("  | ") for ln in lines[2:])
    assert not rep.ok
