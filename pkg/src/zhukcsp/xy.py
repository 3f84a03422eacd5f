"""XY-symmetric term operations from a special WNU.

The generated relation R has one coordinate per (subalgebra, two-valued
n-tuple) pair; its generators are the n coordinate projections.  Any tuple
of R that takes equal values on permuted indices defines an XY-symmetric
term operation, and its provenance term is the certificate.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import DEFAULT_CAP, FiniteAlgebra, Term, _closure, projection_tables, specialize, substitute
from .errors import CapExceeded, InputError, InternalDiagnostic
from .subuniverse import BA, CENTRAL, enumerate_subuniverses, strong_on_domain


@dataclass(frozen=True, order=True)
class IndexKey:
    algebra: int  # position in GeneratedRelation.algebras
    alpha: tuple

    @property
    def values(self) -> tuple:
        return tuple(sorted(set(self.alpha)))

    @property
    def orbit(self) -> tuple:
        """Canonical member of Perm(alpha)."""
        return tuple(sorted(self.alpha))


def two_tuples(universe, n: int) -> list[tuple]:
    """Tuples over `universe` of length n with exactly two distinct entries."""
    return [t for t in itertools.product(sorted(universe), repeat=n) if len(set(t)) == 2]


def index_count(sizes, n: int) -> int:
    return (2 ** (n - 1) - 1) * sum(s * (s - 1) for s in sizes)


@dataclass
class GeneratedRelation:
    alg: FiniteAlgebra
    n: int
    algebras: list  # universes; index 0 is the whole algebra
    keys: list
    tuples: np.ndarray  # one row per member, columns follow `keys`
    terms: list  # provenance of each row over x1..xn
    domains: list  # D0 per key: Sg of the two values of alpha
    generation: list = field(default_factory=list)

    @property
    def arity(self) -> int:
        return len(self.keys)

    def __len__(self) -> int:
        return len(self.tuples)

    def column(self, key: IndexKey) -> int:
        return self._col[key]

    def __post_init__(self):
        self._col = {k: i for i, k in enumerate(self.keys)}

    def permutation_action(self, sigma) -> np.ndarray:
        """Column map c with (gamma^sigma)[i] = gamma[c[i]]."""
        return np.array([self._col[IndexKey(k.algebra, tuple(k.alpha[s] for s in sigma))]
                         for k in self.keys], dtype=np.int64)

    def is_symmetric(self) -> bool:
        rows = {tuple(r) for r in self.tuples.tolist()}
        for sigma in itertools.permutations(range(self.n)):
            c = self.permutation_action(sigma)
            if {tuple(r) for r in self.tuples[:, c].tolist()} != rows:
                return False
        return True

    def orbit_representatives(self) -> np.ndarray:
        """rep[i] is the column of the canonical member of Perm(key i)."""
        return np.array([self._col[IndexKey(k.algebra, k.orbit)] for k in self.keys], dtype=np.int64)

    def orbit_constant_rows(self) -> np.ndarray:
        if not len(self.keys):
            return np.arange(len(self.tuples))
        rep = self.orbit_representatives()
        return np.nonzero((self.tuples == self.tuples[:, rep]).all(axis=1))[0]


def subalgebra_universes(alg: FiniteAlgebra) -> list[tuple]:
    """The whole universe first, then proper subuniverses with at least two elements."""
    full = tuple(range(alg.size))
    subs = [b for b in enumerate_subuniverses(alg, max_size=max(8, alg.size)) if 1 < len(b) < alg.size]
    return [full] + subs


class _Layout:
    """Index set plus the reduction of duplicated columns to base columns.

    A key (B, alpha) on a subalgebra carries the same column as (A, alpha),
    since the generators only read alpha; closure runs on base columns.
    """

    def __init__(self, alg: FiniteAlgebra, n: int, universes):
        self.keys = [IndexKey(i, a) for i, u in enumerate(universes) for a in two_tuples(u, n)]
        base = [k.alpha for k in self.keys if k.algebra == 0]
        pos = {a: j for j, a in enumerate(base)}
        self.base = base
        self.source = np.array([pos[k.alpha] for k in self.keys], dtype=np.int64)
        self.gens = np.array([[a[i] for a in base] for i in range(n)], dtype=np.int64).reshape(n, len(base))
        orbit = {a: pos[tuple(sorted(a))] for a in base}
        self.rep = np.array([orbit[a] for a in base], dtype=np.int64)


def _d0(alg, alpha, cache):
    pair = tuple(sorted(set(alpha)))
    if pair not in cache:
        from .algebra import sg_generate

        cache[pair] = tuple(sorted(int(v) for v in sg_generate(alg, 1, [(a,) for a in pair]).tuples[:, 0]))
    return cache[pair]


def build_generated_relation(alg: FiniteAlgebra, n: int, cap: int = DEFAULT_CAP,
                             with_subalgebras: bool = True) -> GeneratedRelation:
    """Sg of the generators gamma_1..gamma_n over the (sub)algebra index set."""
    _check_arity(n)
    universes = subalgebra_universes(alg) if with_subalgebras else [tuple(range(alg.size))]
    lay = _Layout(alg, n, universes)
    cache: dict = {}
    domains = [_d0(alg, k.alpha, cache) for k in lay.keys]
    if not lay.base:
        return GeneratedRelation(alg, n, universes, lay.keys, np.zeros((1, 0), np.int64),
                                 [Term.x(1)], domains, [0])
    try:
        sub, _ = _closure(alg, lay.gens, len(lay.base), True, cap, f"generated relation n={n}",
                          gen_terms=[Term.x(i + 1) for i in range(n)])
    except CapExceeded as exc:
        raise CapExceeded(f"{exc.what} (prune with symmetric_reduce)", exc.reached, exc.cap) from None
    return GeneratedRelation(alg, n, universes, lay.keys, sub.tuples[:, lay.source], sub.provenance,
                             domains, sub.generation)


def _check_arity(n: int):
    if n < 1 or n % 2 == 0:
        raise InputError(f"arity must be odd and positive, got {n}")


# -- checks ---------------------------------------------------------------------

def _table_of(op) -> tuple[np.ndarray, int, int]:
    if isinstance(op, FiniteAlgebra):
        return op.nd, op.size, op.arity
    t = np.asarray(op)
    return t, t.shape[0], t.ndim


def check_k_wnu(op, k: int) -> bool:
    """Symmetric on (x repeated k times, y repeated n-k times), for all x != y."""
    nd, size, n = _table_of(op)
    if not 0 < k < n:
        raise InputError(f"k must lie in 1..{n - 1}")
    for x, y in itertools.permutations(range(size), 2):
        vals = set()
        for pos in itertools.combinations(range(n), k):
            args = [y] * n
            for p in pos:
                args[p] = x
            vals.add(int(nd[tuple(args)]))
            if len(vals) > 1:
                return False
    return True


def check_xy_symmetric(op) -> bool:
    """Every k-WNU identity, 1 <= k < n, on two-valued tuples."""
    _, _, n = _table_of(op)
    return all(check_k_wnu(op, k) for k in range(1, n))


# -- symmetric reductions --------------------------------------------------------

def _orbits(rel: GeneratedRelation) -> dict:
    out: dict = {}
    for i, k in enumerate(rel.keys):
        out.setdefault((k.algebra, k.orbit), []).append(i)
    return out


def _project_to_fixpoint(rel: GeneratedRelation, doms: list) -> list:
    rows = rel.tuples
    while True:
        mask = np.ones(len(rows), bool)
        for i, d in enumerate(doms):
            mask &= np.isin(rows[:, i], d)
        rows = rows[mask]
        new = [tuple(sorted(set(rows[:, i].tolist()))) for i in range(rel.arity)]
        if any(not d for d in new):
            raise InternalDiagnostic("symmetric reduction emptied a projection")
        if new == doms:
            return doms
        doms = new


def symmetric_reduce(rel: GeneratedRelation, reduction) -> list | None:
    """One BA/central step on a symmetric 1-consistent reduction, or None.

    The first key (in index order) whose domain has a binary absorbing or
    central subuniverse B gets B on its whole Perm-orbit; the result is
    projected back to 1-consistency.
    """
    doms = [tuple(sorted(set(d))) for d in reduction]
    if len(doms) != rel.arity:
        raise InputError("reduction must give one domain per index")
    orbits = _orbits(rel)
    for members in orbits.values():
        if len({doms[i] for i in members}) > 1:
            raise InputError("reduction is not symmetric")
    if _project_to_fixpoint(rel, doms) != doms:
        raise InputError("reduction is not 1-consistent")
    for i, k in enumerate(rel.keys):
        if len(doms[i]) < 2:
            continue
        found = strong_on_domain(rel.alg, doms[i])
        if found.kind not in (BA, CENTRAL):
            continue
        cut = list(doms)
        for j in orbits[(k.algebra, k.orbit)]:
            cut[j] = found.subset
        return _project_to_fixpoint(rel, cut)
    return None


def reduce_symmetric_fully(rel: GeneratedRelation, reduction=None) -> list:
    doms = list(rel.domains) if reduction is None else list(reduction)
    doms = _project_to_fixpoint(rel, [tuple(d) for d in doms])
    while True:
        nxt = symmetric_reduce(rel, doms)
        if nxt is None:
            return doms
        doms = nxt


# -- derivation --------------------------------------------------------------

@dataclass
class XYResult:
    alg: FiniteAlgebra
    n: int
    table: np.ndarray  # flat, first argument most significant
    term: Term
    generation: int
    explored: int
    seconds: float
    route: str

    def as_algebra(self) -> FiniteAlgebra:
        return FiniteAlgebra(self.alg.size, self.n, self.table, name=f"{self.alg.name}-xy{self.n}")


def evaluate_table(alg: FiniteAlgebra, term: Term, n: int) -> np.ndarray:
    grid = projection_tables(alg.size, n)
    out = term.evaluate(alg, list(grid))
    return np.broadcast_to(out, grid.shape[1:]).astype(np.int64).ravel()


def expand_w(term: Term, w_term: Term) -> Term:
    """Rewrite every w-node of `term` as w_term applied to its arguments."""
    memo: dict = {}

    def go(t):
        if id(t) in memo:
            return memo[id(t)]
        r = t if t.is_var else substitute(w_term, [go(c) for c in t.args])
        memo[id(t)] = r
        return r

    return go(term)


def block_substitute(term: Term, big: int, n: int) -> Term:
    """f(x1..xn) = t(x1 repeated big/n times, ..., xn repeated big/n times)."""
    m = big // n
    return substitute(term, [Term.x(i // m + 1) for i in range(big)])


def _search(alg: FiniteAlgebra, n: int, cap: int):
    lay = _Layout(alg, n, [tuple(range(alg.size))])
    if not lay.base:
        return Term.x(1), 0, 1

    def stop(rows, offset):
        hit = np.nonzero((rows == rows[:, lay.rep]).all(axis=1))[0]
        return offset + int(hit[0]) if len(hit) else None

    sub, hit = _closure(alg, lay.gens, len(lay.base), True, cap, f"XY witness search n={n}",
                        stop=stop, gen_terms=[Term.x(i + 1) for i in range(n)])
    if hit is None:
        return None, None, len(sub)
    return sub.provenance[hit], sub.generation[hit], len(sub)


def derive_xy(alg: FiniteAlgebra, n: int | None = None, cap: int = DEFAULT_CAP) -> XYResult:
    """An n-ary XY-symmetric term operation of alg with its term.

    Breadth-first over closure generations of R, so the witness has least
    w-depth.  A WNU that is not special is first replaced by a special one
    from its clone.  When n differs from the arity N of w and divides it,
    the N-ary operation is derived and its arguments are grouped in blocks.
    """
    t0 = time.perf_counter()
    n = alg.arity if n is None else n
    _check_arity(n)
    base, w_term = specialize(alg)
    route = "direct" if base is alg else "specialized"
    size = alg.size
    found, gen, explored = _search(base, n, cap)
    if found is None and base.arity != n and base.arity % n == 0:
        big, gen, explored = _search(base, base.arity, cap)
        if big is not None:
            found = block_substitute(big, base.arity, n)
            route += "+blocks"
    if found is None:
        if base.arity == n:
            raise InternalDiagnostic("generated relation has no orbit-constant tuple", explored=explored)
        raise InputError(f"no XY-symmetric witness of arity {n} from a WNU of arity {base.arity}")
    term = found if base is alg else expand_w(found, w_term)
    table = evaluate_table(alg, term, n)
    res = XYResult(alg, n, table, term, gen, explored, time.perf_counter() - t0, route)
    if size > 1 and not check_xy_symmetric(res.as_algebra()):
        raise InternalDiagnostic("derived operation failed the XY check", term=str(term))
    return res


def special_wnus(size: int, n: int) -> list[FiniteAlgebra]:
    """All special idempotent WNU tables of arity n on `size` elements.

    A WNU is fixed by its binary part u(x, y) = w(x,...,x,y) together with
    its values on the tuples that are neither constant nor near-unanimous.
    """
    pairs = [(x, y) for x in range(size) for y in range(size) if x != y]
    grid = list(itertools.product(range(size), repeat=n))

    def near_unanimous(t):
        s = set(t)
        if len(s) != 2:
            return None
        a, b = sorted(s)
        if t.count(a) == 1:
            return (b, a)
        if t.count(b) == 1:
            return (a, b)
        return None

    free = [t for t in grid if len(set(t)) > 1 and near_unanimous(t) is None]
    count = size ** (len(pairs) + len(free))
    if count > 1 << 20:
        raise CapExceeded("special WNU enumeration", count, 1 << 20)
    out = []
    for uvals in itertools.product(range(size), repeat=len(pairs)):
        u = dict(zip(pairs, uvals))
        for fvals in itertools.product(range(size), repeat=len(free)):
            rest = dict(zip(free, fvals))
            table = [t[0] if len(set(t)) == 1 else u[near_unanimous(t)] if t not in rest else rest[t]
                     for t in grid]
            alg = FiniteAlgebra(size, n, np.array(table, dtype=np.int64))
            if alg.is_special:
                out.append(alg)
    return out
