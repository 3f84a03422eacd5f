"""Bridges between congruences, their composition, and perfect-linear witnesses."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .algebra import FiniteAlgebra, make_algebra, quotient
from .congruence import (
    Congruence,
    _tilde_matrix,
    irreducible_with_cover,
    linear_group_structure,
)
from .errors import InputError, InternalDiagnostic
from . import _kernels


def _rows(rel) -> np.ndarray:
    arr = np.array(sorted(set(map(tuple, np.asarray(rel).tolist()))), dtype=np.int64)
    return arr.reshape(-1, 4)


@dataclass(eq=False)
class Bridge:
    alg: FiniteAlgebra
    sigma1: Congruence
    sigma2: Congruence
    relation: np.ndarray  # (m, 4), sorted unique

    def __post_init__(self):
        self.relation = _rows(self.relation)

    def as_set(self) -> set:
        return set(map(tuple, self.relation.tolist()))

    def inverse(self) -> "Bridge":
        return Bridge(self.alg, self.sigma2, self.sigma1, self.relation[:, [2, 3, 0, 1]])


def is_closed(alg: FiniteAlgebra, rows: np.ndarray) -> tuple[bool, tuple | None]:
    """Closure of a row set under coordinatewise w, with an escaping image."""
    rows = np.asarray(rows, dtype=np.int64)
    if not len(rows):
        return True, None
    out, _ = _kernels.apply_all(alg.automaton, np.zeros((0, rows.shape[1]), np.int64), rows)
    have = set(map(tuple, rows.tolist()))
    for t in map(tuple, out.tolist()):
        if t not in have:
            return False, t
    return True, None


def verify_bridge(alg: FiniteAlgebra, rel, sigma1: Congruence, sigma2: Congruence):
    """(ok, first failing axiom number or None, witness) for the four bridge axioms."""
    rows = _rows(rel)
    ok, esc = is_closed(alg, rows)
    if not ok:
        return False, 1, esc
    have = set(map(tuple, rows.tolist()))
    for a, b, c, d in have:
        for t in itertools.product(sigma1.block_of(a), sigma1.block_of(b), sigma2.block_of(c), sigma2.block_of(d)):
            if t not in have:
                return False, 2, t
    p12 = {(a, b) for a, b, _, _ in have}
    p34 = {(c, d) for _, _, c, d in have}
    s1, s2 = sigma1.pairs(), sigma2.pairs()
    if not (p12 > s1):
        return False, 3, tuple(sorted(s1 - p12))[:1] or None
    if not (p34 > s2):
        return False, 3, tuple(sorted(s2 - p34))[:1] or None
    for a, b, c, d in sorted(have):
        if sigma1.related(a, b) != sigma2.related(c, d):
            return False, 4, (a, b, c, d)
    return True, None, None


def tilde(b) -> np.ndarray:
    """Binary shadow {(x, y) : (x, x, y, y) in b} as a boolean matrix."""
    if isinstance(b, Bridge):
        return _tilde_matrix(b.relation, b.alg.size)
    raise TypeError("tilde expects a Bridge")


def compose_relations(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """{(x1,x2,z1,z2) : ∃ y1 y2. r1(x1,x2,y1,y2) ∧ r2(y1,y2,z1,z2)} by hash join."""
    index: dict = {}
    for y1, y2, z1, z2 in np.asarray(r2).tolist():
        index.setdefault((y1, y2), []).append((z1, z2))
    out = set()
    for x1, x2, y1, y2 in np.asarray(r1).tolist():
        for z in index.get((y1, y2), ()):
            out.add((x1, x2) + z)
    return _rows(list(out)) if out else np.zeros((0, 4), np.int64)


def compose_bridges(b1: Bridge, b2: Bridge, check: bool = True) -> Bridge:
    if b1.sigma2 != b2.sigma1 or b1.alg != b2.alg:
        raise InputError("bridge endpoints do not match")
    if check:
        for s in {b1.sigma1, b1.sigma2, b2.sigma2}:
            if s.is_full or not irreducible_with_cover(b1.alg, s).irreducible:
                raise InputError("bridge composition needs irreducible endpoint congruences")
    return Bridge(b1.alg, b1.sigma1, b2.sigma2, compose_relations(b1.relation, b2.relation))


def trivial_bridge(alg: FiniteAlgebra, sigma: Congruence) -> Bridge:
    """σ(x1,x3) ∧ σ(x2,x4)."""
    quads = [(a, b, c, d) for a, b, c, d in itertools.product(range(alg.size), repeat=4)
             if sigma.related(a, c) and sigma.related(b, d)]
    return Bridge(alg, sigma, sigma, quads)


def bool_compose(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    return (r.astype(np.int64) @ s.astype(np.int64)) > 0


def is_linked_relation(r: np.ndarray) -> bool:
    """Bipartite graph of a binary relation on D×D is connected over its support."""
    n = r.shape[0]
    if not r.any():
        return False
    left, right = {0} if r[0].any() else set(), set()
    if not left:
        left = {int(np.nonzero(r.any(axis=1))[0][0])}
    frontier = True
    while frontier:
        nr = {int(j) for i in left for j in np.nonzero(r[i])[0]} - right
        right |= nr
        nl = {int(i) for j in right for i in np.nonzero(r[:, j])[0]} - left
        left |= nl
        frontier = bool(nr or nl)
    return left == set(np.nonzero(r.any(axis=1))[0].tolist()) and right == set(np.nonzero(r.any(axis=0))[0].tolist())


@dataclass(eq=False)
class PerfectWitness:
    p: int
    zeta: np.ndarray  # (m, 3) triples (x1, x2, z)
    functional: dict  # σ*-block -> (coordinate map on the block, scalar)
    composite: Bridge | None = None


def zp_algebra(p: int, n: int) -> FiniteAlgebra:
    return make_algebra(p, n, lambda *xs: sum(xs) % p, f"Z{p}")


def check_perfect(alg: FiniteAlgebra, sigma: Congruence, cover: np.ndarray, p: int, zeta: np.ndarray):
    """(ok, reason) for proj12 = σ*, zero fiber = σ, and closure."""
    proj = np.zeros((alg.size, alg.size), bool)
    proj[zeta[:, 0], zeta[:, 1]] = True
    if not np.array_equal(proj, cover):
        return False, "projection differs from the cover"
    zero = np.zeros_like(proj)
    sel = zeta[:, 2] == 0
    zero[zeta[sel, 0], zeta[sel, 1]] = True
    if not np.array_equal(zero, sigma.matrix()):
        return False, "zero fiber differs from sigma"
    have = set(map(tuple, zeta.tolist()))
    for a, b, z in have:
        if sigma.related(a, b) != (z == 0):
            return False, "nonzero label inside sigma"
    # closure under (w, w, n-ary sum mod p): columns never mix, so one check
    # over the disjoint union of A and Z_p suffices
    ok, esc = is_closed(_union_algebra(alg, p), zeta + np.array([0, 0, alg.size]))
    return ok, "" if ok else f"not closed: {esc}"


def _union_algebra(alg: FiniteAlgebra, p: int) -> FiniteAlgebra:
    s, n = alg.size, alg.arity
    idx = np.indices((s + p,) * n).reshape(n, -1)
    out = idx[0].copy()
    in_a = (idx < s).all(axis=0)
    in_z = (idx >= s).all(axis=0)
    out[in_a] = alg.apply([i[in_a] for i in idx])
    out[in_z] = s + (idx[:, in_z] - s).sum(axis=0) % p
    return FiniteAlgebra(s + p, n, out)


def build_perfect_witness(alg: FiniteAlgebra, sigma: Congruence, b: Bridge, max_rounds: int = 64) -> PerfectWitness:
    rep = irreducible_with_cover(alg, sigma)
    if not rep.irreducible:
        raise InputError("sigma is not irreducible")
    cover = rep.cover
    dt = tilde(b)
    if not is_linked_relation(dt):
        raise InputError("bridge shadow is not linked")
    step = compose_bridges(b, b.inverse(), check=False)
    comp = step
    seen = set()
    for _ in range(max_rounds):
        t = tilde(comp)
        if t.all():
            break
        key = t.tobytes()
        if key in seen:
            break
        seen.add(key)
        comp = compose_bridges(comp, step, check=False)
    q = quotient(alg, sigma.labels)
    lab = np.asarray(sigma.labels)
    star = Congruence.of(_components(cover))
    blocks = star.blocks()
    local = {}
    p = None
    for blk in blocks:
        qlabels = sorted({int(lab[e]) for e in blk})
        if len(qlabels) == 1:
            continue
        from .algebra import restrict
        sub = restrict(q, qlabels)
        grp = linear_group_structure(sub)
        if len(grp.moduli) != 1:
            raise InternalDiagnostic("atlas incoherent", reason="block quotient is not cyclic of prime order")
        if p is None:
            p = grp.moduli[0]
        elif p != grp.moduli[0]:
            raise InternalDiagnostic("atlas incoherent", reason="blocks over different primes")
        local[blk] = {e: int(grp.coords[qlabels.index(int(lab[e])), 0]) for e in blk}
    if p is None:
        raise InputError("sigma* equals sigma")
    multi = list(local)
    for scalars in itertools.product(range(1, p), repeat=max(0, len(multi) - 1)):
        scal = dict(zip(multi, (1,) + scalars))
        zeta = []
        for blk in blocks:
            coord = local.get(blk)
            for x1, x2 in itertools.product(blk, repeat=2):
                z = 0 if coord is None else (scal[blk] * (coord[x1] - coord[x2])) % p
                zeta.append((x1, x2, z))
        zeta = np.array(sorted(zeta), dtype=np.int64)
        ok, _ = check_perfect(alg, sigma, cover, p, zeta)
        if ok:
            return PerfectWitness(p, zeta, {blk: (local[blk], scal[blk]) for blk in multi}, comp)
    raise InternalDiagnostic("atlas incoherent", sigma=sigma)


def _components(m: np.ndarray) -> list:
    from .congruence import _union_find_labels
    return list(_union_find_labels(m.shape[0], zip(*np.nonzero(m))))
