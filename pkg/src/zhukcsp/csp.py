"""CSP instances over one algebra: parsing, validation, consistency, linkedness."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .algebra import FiniteAlgebra, is_subuniverse, load_algebra
from .catalog import NAMES, catalog
from .errors import InputError, InvarianceError, ParseError
from . import _kernels


@dataclass(frozen=True, eq=False)
class Constraint:
    scope: tuple  # variable indices, pairwise distinct after normalization
    rows: np.ndarray  # (m, len(scope)), sorted unique
    name: str = ""

    @property
    def arity(self) -> int:
        return len(self.scope)

    @cached_property
    def key(self) -> bytes:
        return np.asarray(self.scope, np.int64).tobytes() + b"|" + self.rows.astype(np.int8).tobytes()

    def project(self, positions: Sequence[int]) -> "Constraint":
        pos = list(positions)
        rows = np.unique(self.rows[:, pos], axis=0) if len(self.rows) else self.rows[:, pos]
        return Constraint(tuple(self.scope[i] for i in pos), rows.reshape(-1, len(pos)), self.name)


def sorted_rows(rows, k: int) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, k)
    if not len(arr) or k == 0:
        return arr[:1] if k == 0 and len(arr) else arr
    return np.unique(arr, axis=0)


def normalize_constraint(scope: Sequence[int], rows: np.ndarray, name: str = "") -> Constraint:
    """Merge repeated variables in a scope (rows must agree on repeats)."""
    scope = tuple(scope)
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, len(scope))
    first: dict = {}
    keep = []
    mask = np.ones(len(rows), bool)
    for i, v in enumerate(scope):
        if v in first:
            mask &= rows[:, first[v]] == rows[:, i]
        else:
            first[v] = i
            keep.append(i)
    rows = rows[mask][:, keep]
    return Constraint(tuple(scope[i] for i in keep), sorted_rows(rows, len(keep)), name)


@dataclass(frozen=True, eq=False)
class Instance:
    alg: FiniteAlgebra
    names: tuple  # variable names in declaration order
    domains: tuple  # per variable: sorted tuple of allowed values
    constraints: tuple  # of Constraint
    relations: dict = field(default_factory=dict)  # name -> (arity, rows), for dumping
    algebra_ref: str = ""

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @cached_property
    def key(self) -> bytes:
        parts = [repr(self.domains).encode()]
        parts.extend(c.key for c in self.constraints)
        return b"#".join(parts)

    def with_domains(self, domains: Sequence) -> "Instance":
        return replace(self, domains=tuple(tuple(sorted(set(d))) for d in domains))

    def with_constraints(self, constraints: Sequence[Constraint]) -> "Instance":
        return replace(self, constraints=tuple(constraints))

    def normalized(self) -> "Instance":
        cons = [normalize_constraint(c.scope, c.rows, c.name) for c in self.constraints]
        return self.with_constraints(cons)

    def domain_mask(self) -> np.ndarray:
        m = np.zeros((self.n_vars, self.alg.size), bool)
        for x, d in enumerate(self.domains):
            m[x, list(d)] = True
        return m

    def satisfies(self, assignment: Sequence[int]) -> bool:
        a = np.asarray(assignment, dtype=np.int64)
        for x, d in enumerate(self.domains):
            if a[x] not in d:
                return False
        for c in self.constraints:
            t = a[list(c.scope)]
            if not (c.rows == t).all(axis=1).any():
                return False
        return True


# -- parsing -------------------------------------------------------------

def resolve_algebra(ref: str, base: Path | None = None) -> FiniteAlgebra:
    if ref in NAMES:
        return catalog(ref)
    path = Path(ref)
    if not path.is_absolute() and base is not None:
        path = base / path
    if not path.exists():
        raise InputError(f"algebra {ref!r} is neither a catalog name nor a file")
    return load_algebra(path.read_text())


def parse_instance(text: str, base: Path | None = None, alg: FiniteAlgebra | None = None,
                   validate: bool = True) -> Instance:
    algebra_ref = ""
    var_names: list[str] = []
    var_doms: list = []
    rels: dict[str, tuple[int, list]] = {}
    cons: list[tuple[str, list[str], int]] = []
    current: tuple[str, int, list] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if not toks:
            continue
        col, head = toks[0]
        if current is not None:
            name, k, rows = current
            if head == "end":
                if len(toks) != 1:
                    raise ParseError("'end' takes no arguments", lineno, toks[1][0])
                rels[name] = (k, rows)
                current = None
                continue
            vals = [_int(t, lineno) for t in toks]
            if len(vals) != k:
                raise ParseError(f"tuple has {len(vals)} entries, relation {name!r} has arity {k}", lineno, col)
            rows.append(vals)
            continue
        if head == "algebra":
            if len(toks) != 2:
                raise ParseError("'algebra' takes one argument", lineno, col)
            algebra_ref = toks[1][1]
        elif head == "var":
            if len(toks) < 2:
                raise ParseError("'var' needs a name", lineno, col)
            name = toks[1][1]
            if name in var_names:
                raise ParseError(f"variable {name!r} declared twice", lineno, toks[1][0])
            var_names.append(name)
            var_doms.append([_int(t, lineno) for t in toks[2:]] or None)
        elif head == "rel":
            if len(toks) != 3:
                raise ParseError("'rel' takes a name and an arity", lineno, col)
            name = toks[1][1]
            if name in rels:
                raise ParseError(f"relation {name!r} declared twice", lineno, toks[1][0])
            k = _int(toks[2], lineno)
            if k < 1:
                raise ParseError("relation arity must be positive", lineno, toks[2][0])
            current = (name, k, [])
        elif head == "con":
            if len(toks) < 3:
                raise ParseError("'con' needs a relation and at least one variable", lineno, col)
            cons.append((toks[1][1], [t[1] for t in toks[2:]], lineno))
        else:
            raise ParseError(f"unknown directive {head!r}", lineno, col)
    if current is not None:
        raise ParseError(f"relation {current[0]!r} is missing 'end'")
    if alg is None:
        if not algebra_ref:
            raise ParseError("missing 'algebra' line")
        alg = resolve_algebra(algebra_ref, base)
    s = alg.size
    domains = []
    for name, d in zip(var_names, var_doms):
        if d is None:
            domains.append(tuple(range(s)))
            continue
        bad = [v for v in d if not 0 <= v < s]
        if bad:
            raise InputError(f"domain of {name!r} has value {bad[0]} outside 0..{s - 1}")
        if validate and not is_subuniverse(alg, d):
            raise InputError(f"domain of {name!r} is not closed under the operation")
        domains.append(tuple(sorted(set(d))))
    relations = {}
    for name, (k, rows) in rels.items():
        arr = np.array(rows, dtype=np.int64).reshape(-1, k)
        if arr.size and (arr.min() < 0 or arr.max() >= s):
            raise InputError(f"relation {name!r} has a value outside 0..{s - 1}")
        arr = sorted_rows(arr, k)
        if validate:
            check_invariant(alg, name, arr)
        relations[name] = (k, arr)
    index = {n: i for i, n in enumerate(var_names)}
    constraints = []
    for rname, vars_, lineno in cons:
        if rname not in relations:
            raise InputError(f"line {lineno}: undeclared relation {rname!r}")
        k, arr = relations[rname]
        if len(vars_) != k:
            raise InputError(f"line {lineno}: relation {rname!r} has arity {k}, got {len(vars_)} variables")
        for v in vars_:
            if v not in index:
                raise InputError(f"line {lineno}: undeclared variable {v!r}")
        constraints.append(Constraint(tuple(index[v] for v in vars_), arr, rname))
    return Instance(alg, tuple(var_names), tuple(domains), tuple(constraints), relations, algebra_ref)


def _int(tok, lineno):
    col, s = tok
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"expected integer, got {s!r}", lineno, col) from None


def check_invariant(alg: FiniteAlgebra, name: str, rows: np.ndarray) -> None:
    """Raise InvarianceError with an offending n-tuple of rows and its image."""
    if not len(rows):
        return
    out, trail = _kernels.apply_all(alg.automaton, np.zeros((0, rows.shape[1]), np.int64), rows)
    have = set(map(tuple, rows.tolist()))
    for i, t in enumerate(map(tuple, out.tolist())):
        if t not in have:
            args = _kernels.arguments(trail, i)
            src = [tuple(rows[a].tolist()) for a in args]
            raise InvarianceError(
                name, src, t, f"relation {name!r} is not invariant: w applied to rows {src} gives {t}"
            )


def dump_instance(inst: Instance) -> str:
    lines = [f"algebra {inst.algebra_ref or inst.alg.name}"]
    full = tuple(range(inst.alg.size))
    for name, d in zip(inst.names, inst.domains):
        lines.append(f"var {name}" + ("" if d == full else " " + " ".join(map(str, d))))
    rels = dict(inst.relations)
    for c in inst.constraints:
        if c.name not in rels:
            rels[c.name] = (c.arity, c.rows)
    for name, (k, rows) in rels.items():
        lines.append(f"rel {name} {k}")
        lines.extend(" ".join(map(str, r)) for r in np.asarray(rows).tolist())
        lines.append("end")
    for c in inst.constraints:
        lines.append(f"con {c.name} " + " ".join(inst.names[v] for v in c.scope))
    return "\n".join(lines) + "\n"


def build_instance(alg: FiniteAlgebra, n_vars: int, constraints: Sequence[tuple], domains=None,
                   names=None, algebra_ref: str = "") -> Instance:
    """Convenience constructor: constraints are (scope, rows[, name]) triples."""
    names = tuple(names or (f"x{i + 1}" for i in range(n_vars)))
    doms = tuple(tuple(sorted(d)) for d in domains) if domains else tuple(tuple(range(alg.size)) for _ in names)
    cons = []
    for j, c in enumerate(constraints):
        scope, rows = c[0], c[1]
        name = c[2] if len(c) > 2 else f"R{j}"
        cons.append(Constraint(tuple(scope), sorted_rows(rows, len(scope)), name))
    rels = {c.name: (c.arity, c.rows) for c in cons}
    return Instance(alg, names, doms, tuple(cons), rels, algebra_ref or alg.name)


# -- consistency ---------------------------------------------------------

@dataclass
class ConsistencyResult:
    instance: Instance | None  # None when unsatisfiable
    pairs: np.ndarray | None = None  # (V, V, d, d) pair relations

    @property
    def unsat(self) -> bool:
        return self.instance is None


def _pair_masks(c: Constraint, d: int):
    k = c.arity
    for i in range(k):
        for j in range(k):
            if i != j:
                m = np.zeros((d, d), bool)
                m[c.rows[:, i], c.rows[:, j]] = True
                yield c.scope[i], c.scope[j], m


def enforce_consistency(inst: Instance) -> ConsistencyResult:
    """Pairwise path closure with constraint re-projection, to a fixpoint."""
    inst = inst.normalized()
    v, d = inst.n_vars, inst.alg.size
    dom = inst.domain_mask()
    rho = dom[:, None, :, None] & dom[None, :, None, :]
    eye = np.eye(d, dtype=bool)
    for x in range(v):
        rho[x, x] &= eye
    rows = [c.rows for c in inst.constraints]
    scopes = [c.scope for c in inst.constraints]
    while True:
        # filter rows by domains and pair relations, then tighten pairs
        for ci, (sc, r) in enumerate(zip(scopes, rows)):
            if not len(r):
                return ConsistencyResult(None)
            mask = np.ones(len(r), bool)
            k = len(sc)
            for i in range(k):
                for j in range(i, k):
                    mask &= rho[sc[i], sc[j]][r[:, i], r[:, j]]
            r = r[mask]
            rows[ci] = r
            if not len(r):
                return ConsistencyResult(None)
            for i in range(k):
                for j in range(k):
                    m = np.zeros((d, d), bool)
                    m[r[:, i], r[:, j]] = True
                    rho[sc[i], sc[j]] &= m
        ri = rho.astype(np.int32)
        comp = np.einsum("xzab,zybc->xzyac", ri, ri) > 0
        new = rho & comp.all(axis=1)
        # keep pairs consistent with the (possibly shrunk) domains
        diag = np.einsum("xxaa->xa", new)
        new &= diag[:, None, :, None] & diag[None, :, None, :]
        if not diag.any(axis=1).all():
            return ConsistencyResult(None)
        stable = np.array_equal(new, rho)
        rho = new
        if stable and all(
            len(r) == len(r[_row_filter(rho, sc, r)]) for sc, r in zip(scopes, rows)
        ):
            break
    domains = [tuple(np.nonzero(np.einsum("aa->a", rho[x, x]))[0].tolist()) for x in range(v)]
    cons = [Constraint(c.scope, r, c.name) for c, r in zip(inst.constraints, rows)]
    out = inst.with_domains(domains).with_constraints(cons)
    return ConsistencyResult(out, rho)


def _row_filter(rho, sc, r):
    mask = np.ones(len(r), bool)
    for i in range(len(sc)):
        for j in range(i, len(sc)):
            mask &= rho[sc[i], sc[j]][r[:, i], r[:, j]]
    return mask


# -- structure -----------------------------------------------------------

@dataclass
class LinkReport:
    components: list  # each a dict var -> tuple of values
    linked: bool
    fragments: list  # variable sets of the fragments (connected parts)

    @property
    def fragmented(self) -> bool:
        return len(self.fragments) > 1


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        p = self.p
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def linked_components(inst: Instance, variables: Sequence[int] | None = None) -> LinkReport:
    """Components of the (variable, value) graph; edges from constraint pair projections."""
    d = inst.alg.size
    vs = list(range(inst.n_vars)) if variables is None else list(variables)
    vset = set(vs)
    uf = _UF(inst.n_vars * d)
    vuf = _UF(inst.n_vars)
    for c in inst.constraints:
        pos = [i for i, x in enumerate(c.scope) if x in vset]
        for a in pos[1:]:
            vuf.union(c.scope[pos[0]], c.scope[a])
        if len(pos) < 2:
            continue
        i0 = pos[0]
        for j in pos[1:]:
            pairs = np.unique(c.rows[:, [i0, j]], axis=0)
            for a, b in pairs.tolist():
                uf.union(c.scope[i0] * d + a, c.scope[j] * d + b)
    comps: dict = {}
    for x in vs:
        for a in inst.domains[x]:
            comps.setdefault(uf.find(x * d + a), {}).setdefault(x, []).append(a)
    components = [{x: tuple(v) for x, v in sorted(c.items())} for c in comps.values()]
    frags: dict = {}
    for x in vs:
        frags.setdefault(vuf.find(x), []).append(x)
    linked = all(len({uf.find(x * d + a) for a in inst.domains[x]}) <= 1 for x in vs)
    return LinkReport(components, linked, list(frags.values()))


@dataclass
class ConOne:
    relation: set
    rectangular: bool


def con_one(rows: np.ndarray, i: int) -> ConOne:
    """Pairs (y, y') at coordinate i of rows that agree off coordinate i."""
    rows = np.asarray(rows, dtype=np.int64)
    k = rows.shape[1]
    rest = [j for j in range(k) if j != i]
    groups: dict = {}
    for r in rows.tolist():
        groups.setdefault(tuple(r[j] for j in rest), set()).add(r[i])
    rel = {(a, b) for g in groups.values() for a in g for b in g}
    trans = all((a, c) in rel for a, b in rel for b2, c in rel if b == b2)
    return ConOne(rel, trans)


def project_instance(inst: Instance, variables: Sequence[int], domains=None) -> Instance:
    """All constraint projections onto `variables` (those touching ≥ 2 of them)."""
    vs = list(variables)
    pos = {x: i for i, x in enumerate(vs)}
    cons = []
    for c in inst.constraints:
        keep = [j for j, x in enumerate(c.scope) if x in pos]
        if len(keep) < 2:
            continue
        pc = c.project(keep)
        cons.append(Constraint(tuple(pos[x] for x in pc.scope), pc.rows, c.name))
    doms = [inst.domains[x] for x in vs] if domains is None else domains
    return Instance(inst.alg, tuple(inst.names[x] for x in vs), tuple(tuple(d) for d in doms), tuple(cons),
                    {}, inst.algebra_ref)


def restrict_rows(inst: Instance) -> Instance:
    """Drop constraint rows that leave the current domains."""
    dm = inst.domain_mask()
    cons = []
    for c in inst.constraints:
        mask = np.ones(len(c.rows), bool)
        for j, x in enumerate(c.scope):
            mask &= dm[x][c.rows[:, j]]
        cons.append(Constraint(c.scope, c.rows[mask], c.name))
    return inst.with_constraints(cons)
