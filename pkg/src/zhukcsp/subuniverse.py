"""Absorbing, central and strong subuniverses."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from .algebra import FiniteAlgebra, Term, is_subuniverse, sg_generate, _closure
from .congruence import Congruence, full_cover_congruences
from .errors import CapExceeded, InputError, UbiquityViolated

BA, CENTRAL, PCBLOCK, LINEAR_ONLY, NONE = "BA", "Central", "PCBlock", "LinearOnly", "None"


@dataclass
class AbsorptionResult:
    absorbing: bool
    witness: Term | None = None  # binary (or ternary) term when absorbing
    counter: tuple | None = None  # generating tuples whose closure misses B^k

    def __bool__(self) -> bool:
        return self.absorbing


@dataclass
class StrongFinding:
    kind: str
    subset: tuple | None = None
    witness: object = None
    linear: list = field(default_factory=list)  # congruences with full cover, when LinearOnly


def _key(subset: Iterable[int]) -> tuple:
    s = tuple(sorted(set(subset)))
    return (len(s), s)


def enumerate_subuniverses(alg: FiniteAlgebra, max_size: int = 8) -> list[tuple]:
    """Nonempty subuniverses ascending by size, then lexicographically."""
    if alg.size > max_size:
        raise CapExceeded("enumerate_subuniverses domain size", alg.size, max_size)
    return list(_subuniverses(alg))


@lru_cache(maxsize=4096)
def _subuniverses(alg: FiniteAlgebra) -> tuple:
    out = []
    for r in range(1, alg.size + 1):
        for b in itertools.combinations(range(alg.size), r):
            if is_subuniverse(alg, b):
                out.append(b)
    return tuple(out)


def _pattern_coords(size: int, subset: tuple, k: int) -> np.ndarray:
    """Argument tuples with one free position and the rest in B, one per row.

    Position i ranges over A, every other position over B; rows are listed
    position by position, each block lexicographic.
    """
    a = range(size)
    rows = []
    for i in range(k):
        doms = [subset] * k
        doms[i] = a
        rows.extend(itertools.product(*doms))
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def _joint_absorption(alg: FiniteAlgebra, subset: tuple, k: int, cap: int):
    """Search Sg of the k coordinate tuples over all absorption patterns.

    A row of the closure is the graph of a k-ary term operation on the
    pattern tuples; B absorbs by a k-ary term iff some row lies in B^m.
    """
    pts = _pattern_coords(alg.size, subset, k)
    gens = pts.T.copy()
    inb = np.zeros(alg.size, bool)
    inb[list(subset)] = True

    def stop(rows, offset):
        hits = np.nonzero(inb[rows].all(axis=1))[0]
        return None if not len(hits) else offset + int(hits[0])

    sub, hit = _closure(alg, gens, gens.shape[1], True, cap, f"{k}-ary absorption", stop=stop,
                        gen_terms=_distinct_terms(gens, k))
    if hit is None:
        return None
    return sub.provenance[hit]


def _distinct_terms(gens: np.ndarray, k: int) -> list:
    first: dict = {}
    for i, g in enumerate(map(tuple, gens.tolist())):
        first.setdefault(g, Term.x(i + 1))
    return [first[g] for g in dict.fromkeys(map(tuple, gens.tolist()))]


def _pair_counterwitness(alg: FiniteAlgebra, subset: tuple, k: int, cap: int):
    """First generator family u_1..u_k (u_i free at position i) with Sg ∩ B^k = ∅."""
    a = range(alg.size)
    inb = np.zeros(alg.size, bool)
    inb[list(subset)] = True
    families = []
    for i in range(k):
        doms = [subset] * k
        doms[i] = a
        families.append(list(itertools.product(*doms)))
    for combo in itertools.product(*families):
        sub = sg_generate(alg, k, combo, cap=cap)
        if not inb[sub.tuples].all(axis=1).any():
            return combo
    return None


def _check_absorbing(alg, subset, k, cap, exhaustive):
    b = tuple(sorted(set(subset)))
    if not b or len(b) == alg.size:
        raise InputError("absorption is tested for proper nonempty subsets")
    if not is_subuniverse(alg, b):
        raise InputError(f"{b} is not a subuniverse")
    witness = _joint_absorption(alg, b, k, cap)
    if witness is not None:
        return AbsorptionResult(True, witness=witness)
    counter = _pair_counterwitness(alg, b, k, cap) if exhaustive else None
    return AbsorptionResult(False, counter=counter)


def is_binary_absorbing(alg: FiniteAlgebra, subset, cap: int = 10**6, counterwitness: bool = True) -> AbsorptionResult:
    return _cached_abs(alg, tuple(sorted(set(subset))), 2, cap, counterwitness)


def is_ternary_absorbing(alg: FiniteAlgebra, subset, cap: int = 10**6, counterwitness: bool = True) -> AbsorptionResult:
    return _cached_abs(alg, tuple(sorted(set(subset))), 3, cap, counterwitness)


@lru_cache(maxsize=8192)
def _cached_abs(alg, subset, k, cap, counterwitness):
    return _check_absorbing(alg, subset, k, cap, counterwitness)


def sg_pairs_absorbing(alg: FiniteAlgebra, subset, k: int, cap: int = 10**6) -> bool:
    """The generator-family criterion verbatim: every family's Sg meets B^k."""
    b = tuple(sorted(set(subset)))
    return _pair_counterwitness(alg, b, k, cap) is None


def absorbs(alg: FiniteAlgebra, term: Term, subset, k: int) -> bool:
    """Exhaustively check t(B..A..B) ⊆ B for every position of A."""
    pts = _pattern_coords(alg.size, tuple(sorted(set(subset))), k)
    vals = term.evaluate(alg, [pts[:, i] for i in range(k)])
    return bool(np.isin(vals, list(subset)).all())


def is_central(alg: FiniteAlgebra, subset, cap: int = 10**6) -> bool:
    b = tuple(sorted(set(subset)))
    return _central(alg, b, cap)


@lru_cache(maxsize=8192)
def _central(alg, b, cap):
    if not is_ternary_absorbing(alg, b, cap, counterwitness=False):
        return False
    for a in range(alg.size):
        if a in b:
            continue
        gens = [(a, c) for c in b] + [(c, a) for c in b]
        if (a, a) in sg_generate(alg, 2, gens, cap=cap):
            return False
    return True


def find_strong_subuniverse(alg: FiniteAlgebra) -> StrongFinding:
    """Strong subuniverse of the whole algebra in priority BA, Central, PC block."""
    return _find_strong(alg)


@lru_cache(maxsize=4096)
def _find_strong(alg: FiniteAlgebra) -> StrongFinding:
    if alg.size == 1:
        return StrongFinding(NONE)
    proper = [b for b in _subuniverses(alg) if len(b) < alg.size]
    for b in proper:
        r = is_binary_absorbing(alg, b, counterwitness=False)
        if r:
            return StrongFinding(BA, b, r.witness)
    for b in proper:
        if is_central(alg, b):
            return StrongFinding(CENTRAL, b, is_ternary_absorbing(alg, b, counterwitness=False).witness)
    lin, pc = full_cover_congruences(alg)
    if pc:
        sigma = pc[0].sigma
        return StrongFinding(PCBLOCK, sigma.block_of(0), sigma)
    if lin:
        return StrongFinding(LINEAR_ONLY, None, None, [r.sigma for r in lin])
    raise UbiquityViolated("ubiquity violated", algebra=alg)


def strong_on_domain(alg: FiniteAlgebra, domain: Iterable[int]) -> StrongFinding:
    """find_strong_subuniverse on the restriction to `domain`, in parent labels."""
    from .algebra import restrict

    d = tuple(sorted(set(domain)))
    sub = restrict(alg, d)
    f = _find_strong(sub)
    if f.subset is None:
        return f
    return StrongFinding(f.kind, tuple(d[i] for i in f.subset), f.witness, f.linear)
