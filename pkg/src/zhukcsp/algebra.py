"""Finite algebras with one WNU operation, terms, and subpower generation."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import CapExceeded, NotSpecialError, NotWNUError, ParseError, InputError

DEFAULT_CAP = 10**6


class Term:
    """Node of a term DAG over variables x1..xk; shared children are allowed."""

    __slots__ = ("var", "args")

    def __init__(self, var: int | None = None, args: tuple = ()):
        self.var = var
        self.args = tuple(args)

    @classmethod
    def x(cls, i: int) -> "Term":
        return cls(var=i)

    @property
    def is_var(self) -> bool:
        return self.var is not None

    def evaluate(self, alg: "FiniteAlgebra", assignment: Sequence) -> np.ndarray:
        """Evaluate at assignment[i-1] for xi; entries may be ints or arrays."""
        memo: dict[int, np.ndarray] = {}
        vals = [np.asarray(a, dtype=np.int64) for a in assignment]

        def go(t: Term):
            key = id(t)
            if key in memo:
                return memo[key]
            if t.var is not None:
                r = vals[t.var - 1]
            else:
                r = alg.apply([go(c) for c in t.args])
            memo[key] = r
            return r

        return go(self)

    def depth(self) -> int:
        memo: dict[int, int] = {}

        def go(t):
            if id(t) in memo:
                return memo[id(t)]
            d = 0 if t.var is not None else 1 + max(go(c) for c in t.args)
            memo[id(t)] = d
            return d

        return go(self)

    def __str__(self) -> str:
        memo: dict[int, str] = {}

        def go(t):
            if id(t) in memo:
                return memo[id(t)]
            s = f"x{t.var}" if t.var is not None else "(w " + " ".join(go(c) for c in t.args) + ")"
            memo[id(t)] = s
            return s

        return go(self)

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> "Term":
        tokens = re.findall(r"\(|\)|[^\s()]+", text)
        pos = 0

        def go():
            nonlocal pos
            if pos >= len(tokens):
                raise ParseError("unexpected end of term")
            tok = tokens[pos]
            pos += 1
            if tok == "(":
                if pos >= len(tokens) or tokens[pos] != "w":
                    raise ParseError("expected 'w' after '('")
                pos += 1
                args = []
                while pos < len(tokens) and tokens[pos] != ")":
                    args.append(go())
                if pos >= len(tokens):
                    raise ParseError("unbalanced parentheses in term")
                pos += 1
                return cls(args=tuple(args))
            m = re.fullmatch(r"x(\d+)", tok)
            if not m or int(m.group(1)) < 1:
                raise ParseError(f"bad term token {tok!r}")
            return cls.x(int(m.group(1)))

        t = go()
        if pos != len(tokens):
            raise ParseError("trailing tokens after term")
        return t


def substitute(term: Term, images: Sequence[Term]) -> Term:
    """Replace x_i by images[i-1], preserving sharing."""
    memo: dict[int, Term] = {}

    def go(t):
        if id(t) in memo:
            return memo[id(t)]
        r = images[t.var - 1] if t.var is not None else Term(args=tuple(go(c) for c in t.args))
        memo[id(t)] = r
        return r

    return go(term)


@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    size: int
    arity: int
    table: np.ndarray  # flat, length size**arity, first argument most significant
    name: str = ""
    embedding: tuple | None = None  # restrict: new element -> parent element
    blocks: tuple | None = None  # quotient: parent element -> block label

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64).ravel()
        if self.size < 1:
            raise InputError("size must be positive")
        if self.arity < 1:
            raise InputError("arity must be positive")
        if t.size != self.size ** self.arity:
            raise InputError(f"table has {t.size} entries, expected {self.size ** self.arity}")
        if t.size and (t.min() < 0 or t.max() >= self.size):
            raise InputError("table value out of range")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @cached_property
    def nd(self) -> np.ndarray:
        return self.table.reshape((self.size,) * self.arity)

    @cached_property
    def automaton(self) -> _kernels.Automaton:
        return _kernels.Automaton.from_table(self.table, self.size, self.arity)

    def __call__(self, *args: int) -> int:
        return int(self.nd[tuple(args)])

    def apply(self, args: Sequence) -> np.ndarray:
        """Coordinatewise application to n equally shaped arrays."""
        return self.nd[tuple(np.asarray(a, dtype=np.int64) for a in args)]

    def apply_rows(self, rows: np.ndarray) -> np.ndarray:
        """rows has shape (n, k): returns w applied columnwise."""
        return self.nd[tuple(np.asarray(rows, dtype=np.int64))]

    @cached_property
    def near_unanimous(self) -> np.ndarray:
        """u[p, x, y] = w with y at position p and x elsewhere."""
        s, n = self.size, self.arity
        x, y = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
        out = np.empty((n, s, s), np.int64)
        for p in range(n):
            args = [x] * n
            args[p] = y
            out[p] = self.apply(args)
        return out

    @cached_property
    def is_idempotent(self) -> bool:
        d = np.arange(self.size)
        return bool(np.array_equal(self.apply([d] * self.arity), d))

    @cached_property
    def is_wnu(self) -> bool:
        u = self.near_unanimous
        return self.is_idempotent and bool((u == u[-1]).all())

    @cached_property
    def is_special(self) -> bool:
        if not self.is_wnu:
            return False
        u = self.near_unanimous[-1]
        x = np.arange(self.size)[:, None]
        return bool(np.array_equal(u[np.broadcast_to(x, u.shape), u], u))

    def xy(self, x, y):
        """w(x,...,x,y)."""
        return self.near_unanimous[-1][x, y]

    @cached_property
    def key(self) -> tuple:
        return (self.size, self.arity, self.table.tobytes())

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteAlgebra) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        tag = self.name or "algebra"
        return f"FiniteAlgebra({tag}, size={self.size}, arity={self.arity})"


def check_idempotent(alg: FiniteAlgebra) -> bool:
    return alg.is_idempotent


def check_wnu(alg: FiniteAlgebra) -> bool:
    return alg.is_wnu


def check_special(alg: FiniteAlgebra) -> bool:
    return alg.is_special


def table_from_function(size: int, arity: int, fn) -> np.ndarray:
    return np.array([fn(*t) for t in itertools.product(range(size), repeat=arity)], dtype=np.int64)


def make_algebra(size: int, arity: int, fn, name: str = "") -> FiniteAlgebra:
    return FiniteAlgebra(size, arity, table_from_function(size, arity, fn), name=name)


def _strip(line: str) -> str:
    return line.split("#", 1)[0]


def load_algebra(text: str, force: bool = False, require_special: bool = False) -> FiniteAlgebra:
    """Parse .alg text.  Non-WNU tables are rejected unless force is set."""
    header: dict[str, int] = {}
    values: list[int] = []
    in_table = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if not toks:
            continue
        col, head = toks[0]
        if head in ("size", "arity"):
            if len(toks) != 2:
                raise ParseError(f"'{head}' takes one integer", lineno, col)
            header[head] = _int(toks[1], lineno)
            in_table = False
            continue
        if head == "table":
            in_table = True
            toks = toks[1:]
        elif not in_table:
            raise ParseError(f"unexpected token {head!r}", lineno, col)
        values.extend(_int(t, lineno) for t in toks)
    for key in ("size", "arity"):
        if key not in header:
            raise ParseError(f"missing '{key}' line")
    size, arity = header["size"], header["arity"]
    if size < 1 or arity < 1:
        raise ParseError("size and arity must be positive")
    if len(values) != size ** arity:
        raise ParseError(f"table length {len(values)} does not match size^arity = {size ** arity}")
    bad = [v for v in values if not 0 <= v < size]
    if bad:
        raise ParseError(f"table value {bad[0]} out of range 0..{size - 1}")
    alg = FiniteAlgebra(size, arity, np.array(values, dtype=np.int64))
    if not force:
        if not alg.is_wnu:
            raise NotWNUError("operation is not an idempotent WNU")
        if require_special and not alg.is_special:
            raise NotSpecialError("operation is not special")
    return alg


def _int(tok, lineno: int) -> int:
    col, s = tok
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"expected integer, got {s!r}", lineno, col) from None


def dump_algebra(alg: FiniteAlgebra) -> str:
    return f"size {alg.size}\narity {alg.arity}\ntable " + " ".join(map(str, alg.table.tolist())) + "\n"


@dataclass(eq=False)
class Subpower:
    """Subset of A^k closed under coordinatewise w, rows in generation order."""

    alg: FiniteAlgebra
    power: int
    tuples: np.ndarray
    generation: list = field(default_factory=list)
    provenance: list | None = None  # Term per row, over generator variables

    def __len__(self) -> int:
        return len(self.tuples)

    def as_set(self) -> set:
        return set(map(tuple, self.tuples.tolist()))

    def __contains__(self, t) -> bool:
        return tuple(t) in self._index

    @cached_property
    def _index(self) -> dict:
        return {tuple(r): i for i, r in enumerate(self.tuples.tolist())}

    def term_of(self, t) -> Term:
        if self.provenance is None:
            raise ValueError("closure computed without provenance")
        return self.provenance[self._index[tuple(t)]]

    def sorted(self) -> np.ndarray:
        if not len(self.tuples):
            return self.tuples
        return self.tuples[np.lexsort(self.tuples.T[::-1])]


def _terms_from(prov, n_gens_vars: Sequence[Term]) -> list:
    terms: list = []
    for i, p in enumerate(prov):
        if p is None:
            terms.append(n_gens_vars[i])
        else:
            terms.append(Term(args=tuple(terms[a] for a in p)))
    return terms


def _closure(alg, gens, power, with_provenance, cap, what, stop=None, gen_terms=None):
    gens = np.asarray(gens, dtype=np.int64).reshape(-1, power)
    if gens.size and (gens.min() < 0 or gens.max() >= alg.size):
        raise InputError("generator entry out of range")
    rows, gen_of, prov, hit = _kernels.closure(
        alg.automaton, gens, cap, keep_trail=with_provenance, what=what, stop=stop
    )
    terms = None
    if with_provenance:
        # generator terms follow the order of first occurrence among inputs
        if gen_terms is None:
            first = {}
            for i, g in enumerate(map(tuple, gens.tolist())):
                first.setdefault(g, Term.x(i + 1))
            gen_terms = [first[tuple(r)] for r, p in zip(rows.tolist(), prov) if p is None]
        terms = _terms_from(prov, gen_terms)
    return Subpower(alg, power, rows, gen_of, terms), hit


def sg_generate(alg: FiniteAlgebra, power: int, generators: Iterable, with_provenance: bool = False,
                cap: int = DEFAULT_CAP) -> Subpower:
    """Least subset of A^power containing the generators and closed under w."""
    if power < 1:
        raise InputError("power must be at least 1")
    gens = np.array([tuple(g) for g in generators], dtype=np.int64).reshape(-1, power)
    sub, _ = _closure(alg, gens, power, with_provenance, cap, f"Sg in A^{power}")
    return sub


def projection_tables(size: int, k: int) -> np.ndarray:
    """Row i is the table of the i-th k-ary projection."""
    grid = np.array(list(itertools.product(range(size), repeat=k)), dtype=np.int64).reshape(-1, k)
    return grid.T.copy()


def free_ops(alg: FiniteAlgebra, k: int, constants: bool = False, cap: int = DEFAULT_CAP,
             max_coords: int = 32) -> Subpower:
    """The k-ary term operations of alg (polynomials if constants) as tables."""
    coords = alg.size ** k
    if coords > max_coords:
        raise CapExceeded(f"free_ops width size^k", coords, max_coords)
    gens = projection_tables(alg.size, k)
    gen_terms = [Term.x(i + 1) for i in range(k)]
    if constants:
        consts = np.repeat(np.arange(alg.size)[:, None], coords, axis=1)
        gens = np.concatenate([gens, consts])
        gen_terms += [Term.x(k + c + 1) for c in range(alg.size)]
    # projections are distinct whenever size > 1, so rows 0..k-1 keep x1..xk
    keys = [tuple(r) for r in gens.tolist()]
    first: dict = {}
    for key, t in zip(keys, gen_terms):
        first.setdefault(key, t)
    sub, _ = _closure(alg, gens, coords, True, cap, f"free_ops k={k}",
                      gen_terms=[first[k_] for k_ in dict.fromkeys(keys)])
    return sub


def wnu_special_table(table: np.ndarray, size: int, n: int) -> tuple[bool, bool]:
    a = FiniteAlgebra(size, n, table)
    return a.is_wnu, a.is_special


def specialize(alg: FiniteAlgebra, cap: int = 200_000, max_coords: int = 4096):
    """Return (special algebra, Term) in Clo(w) at the same arity, or raise."""
    if alg.is_special:
        return alg, Term(args=tuple(Term.x(i + 1) for i in range(alg.arity)))
    if not alg.is_wnu:
        raise NotWNUError("operation is not an idempotent WNU")
    s, n = alg.size, alg.arity
    coords = s ** n
    if coords > max_coords:
        raise CapExceeded("specialize width size^n", coords, max_coords)
    idx = _near_unanimous_index(s, n)
    xs = np.arange(s)

    def stop(rows, offset):
        # idempotent WNU whose binary part u satisfies u(x, u(x, y)) = u(x, y)
        v = rows[:, idx]  # (r, n, s, s)
        ok = (v == v[:, -1:]).all(axis=(1, 2, 3)) & (v[:, 0, xs, xs] == xs).all(axis=1)
        u = v[:, -1]
        uu = np.take_along_axis(u, u, axis=2)
        ok &= (uu == u).all(axis=(1, 2))
        hit = np.nonzero(ok)[0]
        return offset + int(hit[0]) if len(hit) else None

    gens = projection_tables(s, n)
    sub, hit = _closure(alg, gens, coords, True, cap, f"specialize n={n}", stop=stop,
                        gen_terms=[Term.x(i + 1) for i in range(n)])
    if hit is None:
        raise NotSpecialError(f"no special WNU of arity {n} among the {len(sub)} term operations")
    return FiniteAlgebra(s, n, sub.tuples[hit], name=f"{alg.name}*"), sub.provenance[hit]


def _near_unanimous_index(s: int, n: int) -> np.ndarray:
    """idx[p, x, y]: table position of (x,..,y at p,..,x)."""
    out = np.empty((n, s, s), np.int64)
    for p in range(n):
        for x in range(s):
            for y in range(s):
                code = 0
                for i in range(n):
                    code = code * s + (y if i == p else x)
                out[p, x, y] = code
    return out


def is_subuniverse(alg: FiniteAlgebra, subset: Iterable[int]) -> bool:
    b = sorted(set(subset))
    if not b:
        return True
    vals = alg.nd[np.ix_(*([b] * alg.arity))]
    return bool(np.isin(vals, b).all())


def restrict(alg: FiniteAlgebra, subset: Iterable[int]) -> FiniteAlgebra:
    b = sorted(set(subset))
    if not b:
        raise InputError("cannot restrict to the empty set")
    if not is_subuniverse(alg, b):
        raise InputError(f"{b} is not closed under the operation")
    relabel = np.full(alg.size, -1, np.int64)
    relabel[b] = np.arange(len(b))
    vals = relabel[alg.nd[np.ix_(*([b] * alg.arity))]]
    return FiniteAlgebra(len(b), alg.arity, vals.ravel(), name=f"{alg.name}|{''.join(map(str, b))}",
                         embedding=tuple(b))


def canonical_labels(labels: Sequence[int]) -> tuple:
    """Relabel a partition so blocks are numbered by least member."""
    seen: dict = {}
    return tuple(seen.setdefault(l, len(seen)) for l in labels)


def is_compatible(alg: FiniteAlgebra, labels: Sequence[int]) -> bool:
    lab = np.asarray(canonical_labels(labels), np.int64)
    m = int(lab.max()) + 1
    reps = [int(np.nonzero(lab == b)[0][0]) for b in range(m)]
    img = lab[alg.nd]
    q = img[np.ix_(*([reps] * alg.arity))]
    return bool(np.array_equal(img, q[np.ix_(*([lab] * alg.arity))]))


def quotient(alg: FiniteAlgebra, labels: Sequence[int]) -> FiniteAlgebra:
    """Quotient by a partition given as block labels per element."""
    lab = canonical_labels(labels)
    if len(lab) != alg.size:
        raise InputError("partition does not cover the domain")
    if not is_compatible(alg, lab):
        raise InputError("partition is not a congruence")
    arr = np.asarray(lab, np.int64)
    m = int(arr.max()) + 1
    reps = [lab.index(b) for b in range(m)]
    q = arr[alg.nd[np.ix_(*([reps] * alg.arity))]]
    return FiniteAlgebra(m, alg.arity, q.ravel(), name=f"{alg.name}/~", blocks=lab)


def canonical_form(alg: FiniteAlgebra) -> tuple:
    """Least table over all relabelings (for isomorphism tests at desk scale)."""
    best = None
    for perm in itertools.permutations(range(alg.size)):
        p = np.asarray(perm)
        inv = np.argsort(p)
        t = p[alg.nd[np.ix_(*([inv] * alg.arity))]].ravel()
        key = tuple(t.tolist())
        if best is None or key < best:
            best = key
    return (alg.size, alg.arity, best)


def isomorphic(a: FiniteAlgebra, b: FiniteAlgebra) -> bool:
    return a.size == b.size and a.arity == b.arity and canonical_form(a) == canonical_form(b)
