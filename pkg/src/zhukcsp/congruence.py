"""Congruences: generation, lattices, irreducibility with covers, abelianness,
and the linear/PC classification of irreducible congruences."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .algebra import (
    DEFAULT_CAP,
    FiniteAlgebra,
    canonical_labels,
    is_compatible,
    quotient,
    restrict,
    sg_generate,
)
from .errors import CapExceeded, ClassificationUndecided, InputError, InternalDiagnostic


@dataclass(frozen=True)
class Congruence:
    """Partition of 0..size-1 as canonical block labels (blocks by least member)."""

    labels: tuple

    @classmethod
    def of(cls, labels: Sequence[int]) -> "Congruence":
        return cls(canonical_labels(labels))

    @classmethod
    def equality(cls, size: int) -> "Congruence":
        return cls(tuple(range(size)))

    @classmethod
    def full(cls, size: int) -> "Congruence":
        return cls((0,) * size)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def n_blocks(self) -> int:
        return max(self.labels) + 1 if self.labels else 0

    @property
    def is_equality(self) -> bool:
        return self.n_blocks == self.size

    @property
    def is_full(self) -> bool:
        return self.n_blocks <= 1

    def blocks(self) -> list[tuple]:
        out: list[list] = [[] for _ in range(self.n_blocks)]
        for e, b in enumerate(self.labels):
            out[b].append(e)
        return [tuple(b) for b in out]

    def block_of(self, a: int) -> tuple:
        return tuple(e for e, b in enumerate(self.labels) if b == self.labels[a])

    def related(self, a: int, b: int) -> bool:
        return self.labels[a] == self.labels[b]

    def matrix(self) -> np.ndarray:
        lab = np.asarray(self.labels)
        return lab[:, None] == lab[None, :]

    def pairs(self) -> set:
        return {(a, b) for a in range(self.size) for b in range(self.size) if self.labels[a] == self.labels[b]}

    def meet(self, other: "Congruence") -> "Congruence":
        return Congruence.of(list(zip(self.labels, other.labels)))

    def leq(self, other: "Congruence") -> bool:
        return all(other.labels[a] == other.labels[b] for a, b in self.pairs())

    def __str__(self) -> str:
        return "|".join("".join(map(str, b)) if max(self.labels, default=0) < 10 else ",".join(map(str, b))
                        for b in self.blocks())


def _union_find_labels(size: int, pairs: Iterable) -> tuple:
    parent = list(range(size))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return canonical_labels([find(a) for a in range(size)])


def cg(alg: FiniteAlgebra, pairs: Iterable) -> Congruence:
    """Least congruence containing the given pairs."""
    labels = _union_find_labels(alg.size, pairs)
    while True:
        rel = Congruence(labels).pairs()
        closed = sg_generate(alg, 2, sorted(rel))
        new = _union_find_labels(alg.size, closed.tuples.tolist())
        if new == labels:
            return Congruence(labels)
        labels = new


def set_partitions(n: int):
    """All partitions of range(n) as canonical label tuples."""
    def go(i, labels, m):
        if i == n:
            yield tuple(labels)
            return
        for b in range(m + 1):
            labels.append(b)
            yield from go(i + 1, labels, max(m, b + 1))
            labels.pop()

    yield from go(0, [], 0)


def _sort_key(c: Congruence):
    return (c.n_blocks, c.labels)


def all_congruences(alg: FiniteAlgebra, max_size: int = 8) -> list[Congruence]:
    """Every congruence, ascending by number of blocks (ties by labels)."""
    if alg.size > max_size:
        raise CapExceeded("all_congruences domain size", alg.size, max_size)
    return list(_all_congruences_cached(alg))


@lru_cache(maxsize=4096)
def _all_congruences_cached(alg: FiniteAlgebra) -> tuple:
    if alg.size <= 5:
        found = [Congruence(p) for p in set_partitions(alg.size) if is_compatible(alg, p)]
    else:
        principal = {cg(alg, [(a, b)]) for a in range(alg.size) for b in range(a + 1, alg.size)}
        found = {Congruence.equality(alg.size)} | principal
        frontier = set(found)
        while frontier:
            nxt = set()
            for x in frontier:
                for y in list(found):
                    j = cg(alg, x.pairs() | y.pairs())
                    if j not in found:
                        nxt.add(j)
            found |= nxt
            frontier = nxt
        found = list(found)
    return tuple(sorted(found, key=_sort_key))


def relation_matrix(size: int, pairs: Iterable) -> np.ndarray:
    m = np.zeros((size, size), bool)
    for a, b in pairs:
        m[a, b] = True
    return m


@dataclass
class IrreducibleReport:
    sigma: Congruence
    irreducible: bool
    cover: np.ndarray | None = None  # boolean matrix of sigma*
    covers: dict = field(default_factory=dict)  # (a, b) in the quotient -> D_ab matrix
    classification: "Classification | None" = None


def irreducible_with_cover(alg: FiniteAlgebra, sigma: Congruence) -> IrreducibleReport:
    """Decide irreducibility of sigma and compute its cover sigma*."""
    if sigma.is_full:
        raise InputError("irreducibility is defined for proper congruences")
    q = quotient(alg, sigma.labels)
    diag = [(a, a) for a in range(q.size)]
    inter = np.ones((q.size, q.size), bool)
    covers = {}
    for a in range(q.size):
        for b in range(q.size):
            if a == b:
                continue
            d = relation_matrix(q.size, sg_generate(q, 2, diag + [(a, b)]).tuples.tolist())
            covers[(a, b)] = d
            inter &= d
    irreducible = bool(inter.sum() > q.size)
    cover = None
    if irreducible:
        lab = np.asarray(sigma.labels)
        cover = inter[lab[:, None], lab[None, :]]
    return IrreducibleReport(sigma, irreducible, cover, covers)


def product_algebra(alg: FiniteAlgebra, k: int = 2) -> FiniteAlgebra:
    """A^k with elements encoded in mixed radix (first coordinate most significant)."""
    s, n = alg.size, alg.arity
    elems = np.array(list(itertools.product(range(s), repeat=k)), dtype=np.int64).reshape(-1, k)
    m = len(elems)
    grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
    code = np.zeros(grids[0].shape, np.int64)
    for c in range(k):
        val = alg.apply([elems[g, c] for g in grids])
        code = code * s + val
    return FiniteAlgebra(m, n, code.ravel(), name=f"{alg.name}^{k}")


@lru_cache(maxsize=2048)
def is_abelian(alg: FiniteAlgebra) -> bool:
    """The congruence of A^2 generated by the diagonal has the diagonal as a block."""
    if alg.size == 1:
        return True
    sq = product_algebra(alg, 2)
    diag = [a * alg.size + a for a in range(alg.size)]
    theta = cg(sq, [(diag[0], d) for d in diag[1:]])
    block = set(theta.block_of(diag[0]))
    return block == set(diag)


@dataclass
class GroupStructure:
    """Abelian group on 0..size-1 read off a special affine WNU."""

    zero: int
    add: np.ndarray  # (size, size)
    neg: np.ndarray  # (size,)
    moduli: tuple = ()  # prime orders of the cyclic factors
    generators: tuple = ()
    coords: np.ndarray | None = None  # (size, len(moduli)) coordinates per element
    element_of: dict = field(default_factory=dict)  # coordinate tuple -> element

    def sub(self, a, b):
        return self.add[a, self.neg[b]]

    def order(self, a: int) -> int:
        k, x = 1, a
        while x != self.zero:
            x = self.add[x, a]
            k += 1
        return k


def _is_prime(q: int) -> bool:
    return q >= 2 and all(q % d for d in range(2, int(q ** 0.5) + 1))


def linear_group_structure(alg: FiniteAlgebra, decompose: bool = True) -> GroupStructure:
    """Group with zero = 0, x+y = m(x,0,y), -x = m(0,x,0) where m(x,y,z) = w(x,y,..,y,z)."""
    s, n = alg.size, alg.arity
    if n < 3:
        raise InternalDiagnostic("block is not affine", reason="arity below 3")
    x = np.arange(s)
    zero = 0

    def m(a, b, c):
        return alg.apply([a] + [b] * (n - 2) + [c])

    a_, b_ = np.meshgrid(x, x, indexing="ij")
    add = m(a_, np.zeros_like(a_), b_)
    neg = m(np.zeros(s, np.int64), x, np.zeros(s, np.int64))
    ok = (
        np.array_equal(add[zero], x)
        and np.array_equal(add, add.T)
        and np.array_equal(add[x, neg], np.full(s, zero))
        and np.array_equal(add[add[:, :, None], x[None, None, :]], add[x[:, None, None], add[None, :, :]])
    )
    if not ok:
        raise InternalDiagnostic("block is not affine", reason="group axioms fail", algebra=alg)
    # w must be the n-ary sum
    total = np.zeros((s,) * n, np.int64)
    idx = np.indices((s,) * n)
    acc = idx[0]
    for i in range(1, n):
        acc = add[acc, idx[i]]
    if not np.array_equal(acc, alg.nd):
        raise InternalDiagnostic("block is not affine", reason="w is not the n-ary sum", algebra=alg)
    del total
    g = GroupStructure(zero, add, neg)
    if decompose:
        _decompose(g, s)
        for q in g.moduli:
            if (n - 1) % q:
                raise InternalDiagnostic("block is not affine", reason=f"{q} does not divide n-1")
    return g


def _decompose(g: GroupStructure, s: int) -> None:
    """Greedy product of prime-order cyclic factors; least element of maximal order first."""
    span = {g.zero: ()}
    gens, mods = [], []
    while len(span) < s:
        cands = [(g.order(a), a) for a in range(s) if a not in span and _is_prime(g.order(a))]
        if not cands:
            raise InternalDiagnostic("block is not affine", reason="not a product of prime-order cyclic groups")
        best = max(o for o, _ in cands)
        a = min(e for o, e in cands if o == best)
        new = {}
        mult = g.zero
        for c in range(best):
            for e, co in span.items():
                new[int(g.add[e, mult])] = co + (c,)
            mult = int(g.add[mult, a])
        span = new
        gens.append(a)
        mods.append(best)
    g.generators = tuple(gens)
    g.moduli = tuple(mods)
    coords = np.zeros((s, len(mods)), np.int64)
    for e, co in span.items():
        coords[e] = co
    g.coords = coords
    g.element_of = {tuple(co): e for e, co in span.items()}


@dataclass
class Classification:
    kind: str  # "Linear" or "PC"
    p: int | None = None
    bridge: "np.ndarray | None" = None  # (m, 4) quadruples when Linear
    via: str = ""  # "construction" or "search" or the failed condition


def _equivalence(m: np.ndarray) -> bool:
    return bool((m == m.T).all() and ((m.astype(np.int64) @ m.astype(np.int64) > 0) <= m).all()
                and m.diagonal().all())


def classify_irreducible(alg: FiniteAlgebra, sigma: Congruence, cover: np.ndarray,
                         search_cap: int = 20_000) -> Classification:
    """Linear(p, bridge) or PC; Linear is only emitted with a verified bridge."""
    from .bridge import verify_bridge

    if not _equivalence(cover):
        return Classification("PC", via="cover is not a congruence")
    star = Congruence.of(_union_find_labels(alg.size, zip(*np.nonzero(cover))))
    primes = set()
    groups = {}
    for blk in star.blocks():
        sub = restrict(alg, blk)
        local = Congruence.of([sigma.labels[e] for e in blk])
        qb = quotient(sub, local.labels)
        if qb.size == 1:
            continue
        if not is_abelian(qb):
            return Classification("PC", via="non-abelian block")
        fac = _prime_power(qb.size)
        if fac is None:
            return Classification("PC", via="block order is not a prime power")
        primes.add(fac)
        groups[blk] = (local, qb, linear_group_structure(qb, decompose=False))
    if len(primes) != 1:
        return Classification("PC", via="no common prime")
    p = primes.pop()
    quads = []
    for blk, (local, qb, grp) in groups.items():
        for x1, x2, x3, x4 in itertools.product(blk, repeat=4):
            l = [local.labels[blk.index(v)] for v in (x1, x2, x3, x4)]
            if grp.sub(l[0], l[1]) == grp.sub(l[2], l[3]):
                quads.append((x1, x2, x3, x4))
    # singleton-quotient blocks contribute all their quadruples (difference 0 = 0)
    for blk in star.blocks():
        if blk not in groups:
            quads.extend(itertools.product(blk, repeat=4))
    rel = np.array(sorted(quads), dtype=np.int64).reshape(-1, 4)
    ok, _, _ = verify_bridge(alg, rel, sigma, sigma)
    if ok and _tilde_matrix(rel, alg.size).__eq__(cover).all():
        return Classification("Linear", p, rel, via="construction")
    found = _bridge_search(alg, sigma, cover, search_cap)
    if found is not None:
        return Classification("Linear", p, found, via="search")
    return Classification("PC", via="no bridge found")


def _prime_power(m: int) -> int | None:
    for q in range(2, m + 1):
        if m % q == 0:
            while m % q == 0:
                m //= q
            return q if m == 1 else None
    return None


def _tilde_matrix(rel: np.ndarray, size: int) -> np.ndarray:
    t = np.zeros((size, size), bool)
    sel = (rel[:, 0] == rel[:, 1]) & (rel[:, 2] == rel[:, 3])
    t[rel[sel, 0], rel[sel, 2]] = True
    return t


def stabilize(rel: np.ndarray, s1: Congruence, s2: Congruence) -> np.ndarray:
    """Close a quadruple set under σ1 on coordinates 1,2 and σ2 on 3,4."""
    b1 = [np.array(s1.block_of(a)) for a in range(s1.size)]
    b2 = [np.array(s2.block_of(a)) for a in range(s2.size)]
    out = set()
    for a, b, c, d in rel.tolist():
        for t in itertools.product(b1[a], b1[b], b2[c], b2[d]):
            out.add(t)
    return np.array(sorted(out), dtype=np.int64).reshape(-1, 4)


def _bridge_search(alg, sigma, cover, cap):
    from .bridge import verify_bridge

    outside = [(a, b) for a, b in zip(*np.nonzero(cover)) if not sigma.related(a, b)]
    tried = 0
    for (a, b), (c, d) in itertools.product(outside, repeat=2):
        rel = np.array([(a, b, c, d)], dtype=np.int64)
        while True:
            tried += 1
            if tried > cap:
                raise ClassificationUndecided("classification undecided", algebra=alg, sigma=sigma)
            closed = sg_generate(alg, 4, stabilize(rel, sigma, sigma).tolist()).tuples
            if len(closed) == len(rel):
                break
            rel = closed
        rel = rel[np.lexsort(rel.T[::-1])]
        ok, _, _ = verify_bridge(alg, rel, sigma, sigma)
        if ok:
            t = _tilde_matrix(rel, alg.size)
            if (t & ~sigma.matrix()).any():
                return rel
    return None


def classify(alg: FiniteAlgebra, sigma: Congruence) -> IrreducibleReport:
    rep = irreducible_with_cover(alg, sigma)
    if rep.irreducible:
        rep.classification = classify_irreducible(alg, sigma, rep.cover)
    return rep


@lru_cache(maxsize=4096)
def _classified(alg: FiniteAlgebra) -> tuple:
    out = []
    for c in all_congruences(alg):
        if c.is_full:
            continue
        out.append(classify(alg, c))
    return tuple(out)


def congruence_reports(alg: FiniteAlgebra) -> list[IrreducibleReport]:
    """Irreducibility report (with classification) for every proper congruence."""
    return list(_classified(alg))


def full_cover_congruences(alg: FiniteAlgebra) -> tuple[list, list]:
    """Irreducible congruences with σ* = A², split into (linear, pc) reports."""
    lin, pc = [], []
    for rep in _classified(alg):
        if rep.irreducible and rep.cover.all():
            (lin if rep.classification.kind == "Linear" else pc).append(rep)
    return lin, pc


def minimal_full_linear(alg: FiniteAlgebra) -> Congruence:
    """Meet of every linear congruence whose cover is the full relation."""
    lin, _ = full_cover_congruences(alg)
    out = Congruence.full(alg.size)
    for rep in lin:
        out = out.meet(rep.sigma)
    return out
