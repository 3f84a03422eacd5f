"""Brute-force oracle, seeded instance generation, and differential fuzzing."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import sg_generate
from .csp import Constraint, Instance, dump_instance, enforce_consistency, resolve_algebra, sorted_rows
from .errors import CapExceeded, ZhukError
from .solver import Solver

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB

# substream tags; relation j uses TAG_RELATION + j
TAG_SCOPES = 1
TAG_PLANTED = 2
TAG_CASE = 3
TAG_SHAPE = 4
TAG_RELATION = 16


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * MIX_1 & MASK64
    z = (z ^ (z >> 27)) * MIX_2 & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """64-bit splitmix generator; `below` uses rejection to stay unbiased."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - (1 << 64) % n
        while True:
            x = self.next()
            if x < limit:
                return x % n

    def substream(self, tag: int) -> "SplitMix64":
        return SplitMix64(derive_seed(self.state, tag))


def derive_seed(seed: int, tag: int) -> int:
    return mix64((seed & MASK64) ^ mix64((tag * GOLDEN_GAMMA) & MASK64))


# -- oracle -----------------------------------------------------------------

def brute_force(inst: Instance, mode: str = "first", cap: int = 10**8):
    """Backtracking with forward checking, variables in declaration order.

    mode "first" returns the first solution or None, "count" the number of
    solutions, "all" the list of solutions in lexicographic order.
    """
    if mode not in ("first", "count", "all"):
        raise ValueError(f"unknown mode {mode!r}")
    inst = inst.normalized()
    v = inst.n_vars
    space = 1
    for d in inst.domains:
        space *= len(d)
    if space > cap:
        raise CapExceeded("brute-force search space", space, cap)
    doms = [set(d) for d in inst.domains]
    cons = []
    for c in inst.constraints:
        rows = c.rows
        if c.arity == 1:
            doms[c.scope[0]] &= set(rows[:, 0].tolist())
            continue
        cons.append((c.scope, rows))
    touching = [[] for _ in range(v)]
    for ci, (sc, _) in enumerate(cons):
        for j, x in enumerate(sc):
            touching[x].append((ci, j))
    out = []
    count = 0
    assign = [0] * v

    def search(i, doms, masks):
        nonlocal count
        if i == v:
            count += 1
            if mode != "count":
                out.append(list(assign))
            return mode == "first"
        x = i
        for a in sorted(doms[x]):
            nd = list(doms)
            nm = list(masks)
            ok = True
            for ci, j in touching[x]:
                sc, rows = cons[ci]
                m = nm[ci] & (rows[:, j] == a)
                if not m.any():
                    ok = False
                    break
                nm[ci] = m
                for jj, y in enumerate(sc):
                    if y > x:
                        vals = nd[y] & set(rows[m, jj].tolist())
                        if not vals:
                            ok = False
                            break
                        nd[y] = vals
                if not ok:
                    break
            if not ok:
                continue
            nd[x] = {a}
            assign[x] = a
            if search(i + 1, nd, nm):
                return True
        return False

    if all(doms):
        search(0, doms, [np.ones(len(r), bool) for _, r in cons])
    if mode == "first":
        return out[0] if out else None
    if mode == "count":
        return count
    return out


# -- generation ----------------------------------------------------------------

@dataclass(frozen=True)
class GenParams:
    algebra: str = "Z2"
    n_vars: int = 4
    n_constraints: int = 3
    max_arity: int = 3
    max_generators: int = 3
    seed: int = 0
    planted: bool = False
    vary: bool = False  # per case: sizes drawn up to the maxima, planting by coin flip

    def __post_init__(self):
        for name in ("n_vars", "n_constraints", "max_arity", "max_generators"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def gen_instance(p: GenParams, cap: int = 10**6) -> Instance:
    """Random instance whose relations are Sg-closures of random tuples."""
    alg = resolve_algebra(p.algebra)
    s = alg.size
    root = SplitMix64(p.seed)
    scopes_rng = root.substream(TAG_SCOPES)
    planted = None
    if p.planted:
        prng = root.substream(TAG_PLANTED)
        planted = [prng.below(s) for _ in range(p.n_vars)]
    cons = []
    rels = {}
    for j in range(p.n_constraints):
        top = min(p.max_arity, p.n_vars)
        k = 1 if top == 1 else 2 + scopes_rng.below(top - 1)
        # partial Fisher-Yates for k distinct variables
        pool = list(range(p.n_vars))
        for t in range(k):
            u = t + scopes_rng.below(p.n_vars - t)
            pool[t], pool[u] = pool[u], pool[t]
        scope = tuple(pool[:k])
        rng = root.substream(TAG_RELATION + j)
        g = 1 + rng.below(p.max_generators)
        gens = [tuple(rng.below(s) for _ in range(k)) for _ in range(g)]
        if planted is not None:
            gens.append(tuple(planted[x] for x in scope))
        rows = sorted_rows(sg_generate(alg, k, gens, cap=cap).tuples, k)
        name = f"R{j}"
        rels[name] = (k, rows)
        cons.append(Constraint(scope, rows, name))
    names = tuple(f"x{i + 1}" for i in range(p.n_vars))
    domains = tuple(tuple(range(s)) for _ in names)
    return Instance(alg, names, domains, tuple(cons), rels, p.algebra)


def case_params(p: GenParams, index: int) -> GenParams:
    seed = derive_seed(derive_seed(p.seed, TAG_CASE), index)
    if not p.vary:
        return replace(p, seed=seed)
    rng = SplitMix64(derive_seed(seed, TAG_SHAPE))
    n_vars = 2 + rng.below(max(1, p.n_vars - 1)) if p.n_vars > 1 else 1
    n_cons = 1 + rng.below(p.n_constraints)
    planted = p.planted or rng.below(2) == 1
    return replace(p, seed=seed, n_vars=n_vars, n_constraints=n_cons, planted=planted, vary=False)


# -- differential fuzzing --------------------------------------------------------

@dataclass
class CaseResult:
    index: int
    seed: int
    expected: bool
    got: bool | None
    error: str = ""
    reduction_violations: list = field(default_factory=list)
    consistency_violations: list = field(default_factory=list)
    reductions: int = 0
    dump: str = ""

    @property
    def mismatch(self) -> bool:
        return self.got != self.expected or bool(self.error)

    @property
    def clean(self) -> bool:
        return not (self.mismatch or self.reduction_violations or self.consistency_violations)


@dataclass
class FuzzReport:
    params: GenParams
    cases: list
    seconds: float = 0.0

    @property
    def mismatches(self) -> list:
        return [c for c in self.cases if c.mismatch]

    @property
    def reduction_violations(self) -> int:
        return sum(len(c.reduction_violations) for c in self.cases)

    @property
    def consistency_violations(self) -> int:
        return sum(len(c.consistency_violations) for c in self.cases)

    @property
    def ok(self) -> bool:
        return all(c.clean for c in self.cases)

    def summary(self) -> str:
        sat = sum(1 for c in self.cases if c.expected)
        red = sum(c.reductions for c in self.cases)
        return (f"algebra={self.params.algebra} cases={len(self.cases)} sat={sat} "
                f"mismatches={len(self.mismatches)} reductions={red} "
                f"reduction_violations={self.reduction_violations} "
                f"consistency_violations={self.consistency_violations} seconds={self.seconds:.2f}")

    def lines(self) -> list[str]:
        out = [self.summary()]
        for c in self.cases:
            if c.clean:
                continue
            out.append(f"case {c.index} seed={c.seed} expected={c.expected} got={c.got} {c.error}".rstrip())
            for v in c.reduction_violations + c.consistency_violations:
                out.append(f"  {v}")
            out.extend("  | " + ln for ln in c.dump.splitlines())
        return out


def _solution_values(solutions, n_vars):
    vals = [set() for _ in range(n_vars)]
    for s in solutions:
        for x, a in enumerate(s):
            vals[x].add(a)
    return vals


def run_case(p: GenParams, index: int, properties: bool = True) -> CaseResult:
    cp = case_params(p, index)
    inst = gen_instance(cp)
    sols = brute_force(inst, "all")
    expected = bool(sols)
    res = CaseResult(index, cp.seed, expected, None)
    oracle_cache: dict = {}

    def oracle(sub):
        key = sub.key
        if key not in oracle_cache:
            oracle_cache[key] = brute_force(sub, "all")
        return oracle_cache[key]

    def on_reduce(sub, x, subset, kind):
        res.reductions += 1
        if not properties:
            return
        found = oracle(sub)
        if found and not any(s[x] in subset for s in found):
            res.reduction_violations.append(
                f"reduction {kind} of {sub.names[x]} to {list(subset)} loses every solution")

    solver = Solver(on_reduce=on_reduce)
    try:
        res.got = solver.solve(inst)
    except ZhukError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    if properties:
        vals = _solution_values(sols, inst.n_vars)
        once = enforce_consistency(inst)
        if once.unsat:
            if expected:
                res.consistency_violations.append("consistency reports unsat on a satisfiable instance")
        else:
            for x, d in enumerate(once.instance.domains):
                lost = vals[x] - set(d)
                if lost:
                    res.consistency_violations.append(
                        f"consistency removed {inst.names[x]}={sorted(lost)} used by a solution")
            twice = enforce_consistency(once.instance)
            if twice.unsat or twice.instance.key != once.instance.key:
                res.consistency_violations.append("consistency is not idempotent")
    if not res.clean:
        res.dump = dump_instance(inst)
    return res


def _run_chunk(args):
    p, indices, properties = args
    return [run_case(p, i, properties) for i in indices]


def fuzz_compare(p: GenParams, cases: int, properties: bool = True, workers: int = 1) -> FuzzReport:
    """Generate `cases` instances and compare the solver with the oracle."""
    t0 = time.perf_counter()
    if workers <= 1:
        results = [run_case(p, i, properties) for i in range(cases)]
    else:
        chunks = [(p, list(range(w, cases, workers)), properties) for w in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            results = [r for part in ex.map(_run_chunk, chunks) for r in part]
        results.sort(key=lambda r: r.index)
    return FuzzReport(p, results, time.perf_counter() - t0)
