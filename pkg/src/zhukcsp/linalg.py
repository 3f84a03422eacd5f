"""Affine subspaces and affine maps over products of prime cyclic groups.

A space Z_{q_1} x ... x Z_{q_m} with possibly different primes splits into
its per-prime parts, so every affine subspace is a product of per-prime
affine subspaces.  Vectors are int64 arrays of length m; a basis vector is
supported on coordinates of a single prime.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def stack_rows(vecs, m: int) -> np.ndarray:
    """Vectors of length m as a (len, m) int64 array, also when either is 0."""
    return np.array(vecs, dtype=np.int64).reshape(len(vecs), m)


def inv_mod(a: int, q: int) -> int:
    return pow(int(a) % q, q - 2, q)


def rref_mod(a: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(q) and the pivot columns."""
    r = np.array(a, dtype=np.int64) % q
    rows, cols = r.shape
    pivots = []
    i = 0
    for j in range(cols):
        if i == rows:
            break
        nz = np.nonzero(r[i:, j])[0]
        if not len(nz):
            continue
        k = i + nz[0]
        if k != i:
            r[[i, k]] = r[[k, i]]
        r[i] = (r[i] * inv_mod(r[i, j], q)) % q
        others = np.nonzero(r[:, j])[0]
        for k in others:
            if k != i:
                r[k] = (r[k] - r[k, j] * r[i]) % q
        pivots.append(j)
        i += 1
    return r, pivots


def solve_mod(a: np.ndarray, b: np.ndarray, q: int):
    """(particular solution or None, nullspace basis rows) of a y = b over GF(q)."""
    a = np.asarray(a, dtype=np.int64).reshape(-1, np.shape(a)[-1] if np.ndim(a) > 1 else len(a))
    n = a.shape[1]
    aug = np.concatenate([a % q, np.asarray(b, dtype=np.int64).reshape(-1, 1) % q], axis=1)
    r, piv = rref_mod(aug, q)
    if n in piv:
        return None, np.zeros((0, n), np.int64)
    y = np.zeros(n, np.int64)
    for i, j in enumerate(piv):
        y[j] = r[i, n]
    free = [j for j in range(n) if j not in piv]
    basis = np.zeros((len(free), n), np.int64)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for i, j in enumerate(piv):
            basis[t, j] = (-r[i, f]) % q
    return y, basis


@dataclass
class AffineSubspace:
    """point + span(basis) inside Z_{moduli}; empty when point is None."""

    moduli: tuple
    point: np.ndarray | None
    basis: np.ndarray = field(default=None)  # (dim, m)

    def __post_init__(self):
        m = len(self.moduli)
        if self.basis is None:
            self.basis = np.zeros((0, m), np.int64)
        b = np.asarray(self.basis, dtype=np.int64)
        self.basis = b.reshape(-1, m) if m else np.zeros((0, 0), np.int64)
        if self.point is not None:
            self.point = np.asarray(self.point, dtype=np.int64) % np.asarray(self.moduli, dtype=np.int64)
            self.basis = _canonical_basis(self.basis, self.moduli)

    @classmethod
    def full(cls, moduli: Sequence[int]) -> "AffineSubspace":
        m = len(moduli)
        return cls(tuple(moduli), np.zeros(m, np.int64), np.eye(m, dtype=np.int64))

    @classmethod
    def empty(cls, moduli: Sequence[int]) -> "AffineSubspace":
        return cls(tuple(moduli), None)

    @property
    def is_empty(self) -> bool:
        return self.point is None

    @property
    def dim(self) -> int:
        return -1 if self.is_empty else len(self.basis)

    @property
    def is_full(self) -> bool:
        return not self.is_empty and self.dim == len(self.moduli)

    @property
    def tag(self) -> str:
        return "Empty" if self.is_empty else "Full" if self.is_full else "Affine"

    def primes(self) -> list[int]:
        return sorted(set(self.moduli))

    def coords_of(self, q: int) -> list[int]:
        return [i for i, p in enumerate(self.moduli) if p == q]

    def contains(self, y) -> bool:
        if self.is_empty:
            return False
        d = (np.asarray(y, dtype=np.int64) - self.point)
        for q in self.primes():
            idx = self.coords_of(q)
            rows = [b[idx] for b in self.basis if b[idx].any()]
            target = d[idx] % q
            if not rows:
                if target.any():
                    return False
                continue
            sol, _ = solve_mod(np.array(rows).T, target, q)
            if sol is None:
                return False
        return True

    def size(self) -> int:
        if self.is_empty:
            return 0
        out = 1
        for b in self.basis:
            out *= self.moduli[int(np.nonzero(b)[0][0])]
        return out

    def points(self):
        if self.is_empty:
            return
        mods = np.asarray(self.moduli, dtype=np.int64)
        ranges = [range(self.moduli[int(np.nonzero(b)[0][0])]) for b in self.basis]
        for t in itertools.product(*ranges):
            v = self.point.copy()
            for c, b in zip(t, self.basis):
                v = v + c * b
            yield v % mods

    def equations(self):
        """Per prime: (coefficient rows, constants) cutting out the subspace."""
        out = {}
        for q in self.primes():
            idx = self.coords_of(q)
            rows = np.array([b[idx] for b in self.basis if b[idx].any()], dtype=np.int64).reshape(-1, len(idx))
            _, ann = solve_mod(rows, np.zeros(len(rows), np.int64), q) if len(rows) else (None, np.eye(len(idx), dtype=np.int64))
            consts = (ann @ self.point[idx]) % q if len(ann) else np.zeros(0, np.int64)
            out[q] = (idx, ann, consts)
        return out

    def same_as(self, other: "AffineSubspace") -> bool:
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return self.dim == other.dim and other.contains(self.point) and all(
            other.contains((self.point + b) % np.asarray(self.moduli)) for b in self.basis)

    def describe(self) -> str:
        if self.is_empty:
            return "Empty"
        if self.is_full:
            return "Full"
        parts = []
        for q, (idx, ann, consts) in self.equations().items():
            for row, c in zip(ann, consts):
                terms = [f"{'' if v == 1 else v}y{idx[i] + 1}" for i, v in enumerate(row) if v]
                parts.append(" + ".join(terms) + f" = {c} (mod {q})")
        return "; ".join(parts)


def _canonical_basis(basis: np.ndarray, moduli: Sequence[int]) -> np.ndarray:
    """Split into per-prime parts, row reduce, drop zero rows."""
    m = len(moduli)
    out = []
    for q in sorted(set(moduli)):
        idx = [i for i, p in enumerate(moduli) if p == q]
        part = basis[:, idx] % q
        part = part[part.any(axis=1)]
        if not len(part):
            continue
        r, piv = rref_mod(part, q)
        for row in r[: len(piv)]:
            v = np.zeros(m, np.int64)
            v[idx] = row
            out.append(v)
    return stack_rows(out, m)


def subspace_from_equation(moduli: Sequence[int], coeffs: dict, const: int, q: int) -> AffineSubspace:
    """{y : Σ coeffs[i] y_i = const (mod q)}; coefficients only on prime-q coordinates."""
    moduli = tuple(moduli)
    idx = [i for i, p in enumerate(moduli) if p == q]
    row = np.array([coeffs.get(i, 0) for i in idx], dtype=np.int64)
    sol, null = solve_mod(row.reshape(1, -1), np.array([const]), q)
    if sol is None:
        return AffineSubspace.empty(moduli)
    m = len(moduli)
    point = np.zeros(m, np.int64)
    point[idx] = sol
    basis = []
    for b in null:
        v = np.zeros(m, np.int64)
        v[idx] = b
        basis.append(v)
    for i, p in enumerate(moduli):
        if p != q:
            v = np.zeros(m, np.int64)
            v[i] = 1
            basis.append(v)
    return AffineSubspace(moduli, point, stack_rows(basis, m))


def affine_hull(spaces: Sequence[AffineSubspace]) -> AffineSubspace:
    live = [s for s in spaces if not s.is_empty]
    if not live:
        return AffineSubspace.empty(spaces[0].moduli)
    moduli = live[0].moduli
    mods = np.asarray(moduli, dtype=np.int64)
    p0 = live[0].point
    vecs = [b for s in live for b in s.basis] + [(s.point - p0) % mods for s in live[1:]]
    return AffineSubspace(moduli, p0, stack_rows(vecs, len(moduli)))


def intersect(a: AffineSubspace, b: AffineSubspace) -> AffineSubspace:
    if a.is_empty or b.is_empty:
        return AffineSubspace.empty(a.moduli)
    moduli = a.moduli
    m = len(moduli)
    point = np.zeros(m, np.int64)
    basis = []
    for q in a.primes():
        idx = a.coords_of(q)
        rows, consts = [], []
        for s in (a, b):
            _, ann, c = s.equations()[q]
            rows.extend(ann.tolist())
            consts.extend(c.tolist())
        if rows:
            sol, null = solve_mod(np.array(rows), np.array(consts), q)
            if sol is None:
                return AffineSubspace.empty(moduli)
        else:
            sol, null = np.zeros(len(idx), np.int64), np.eye(len(idx), dtype=np.int64)
        point[idx] = sol
        for v in null:
            full = np.zeros(m, np.int64)
            full[idx] = v
            basis.append(full)
    return AffineSubspace(moduli, point, stack_rows(basis, m))


def union_size(spaces: Sequence[AffineSubspace], limit: int = 12) -> int | None:
    """Exact size of a union of subspaces by inclusion-exclusion.

    Returns None when there are more than `limit` nonempty members.
    """
    live = [s for s in spaces if not s.is_empty]
    if len(live) > limit:
        return None
    total = 0

    def walk(start, acc, depth):
        nonlocal total
        for i in range(start, len(live)):
            cut = live[i] if acc is None else intersect(acc, live[i])
            if cut.is_empty:
                continue
            total += cut.size() if depth % 2 == 0 else -cut.size()
            walk(i + 1, cut, depth + 1)

    walk(0, None, 0)
    return total


@dataclass
class AffineMap:
    """y -> offset + M y with per-row modulus; M[t, i] = 0 unless moduli agree."""

    src_moduli: tuple
    dst_moduli: tuple
    matrix: np.ndarray  # (T, m)
    offset: np.ndarray  # (T,)

    @classmethod
    def identity(cls, moduli: Sequence[int]) -> "AffineMap":
        m = len(moduli)
        return cls(tuple(moduli), tuple(moduli), np.eye(m, dtype=np.int64), np.zeros(m, np.int64))

    @property
    def m(self) -> int:
        return len(self.src_moduli)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        return (self.offset + self.matrix @ y) % np.asarray(self.dst_moduli, dtype=np.int64) if len(self.dst_moduli) \
            else np.zeros(0, np.int64)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self ∘ inner."""
        mods = np.asarray(self.dst_moduli, dtype=np.int64)
        mat = (self.matrix @ inner.matrix) % mods[:, None] if len(mods) else np.zeros((0, inner.m), np.int64)
        off = (self.offset + self.matrix @ inner.offset) % mods if len(mods) else np.zeros(0, np.int64)
        return AffineMap(inner.src_moduli, self.dst_moduli, mat, off)

    def check_blocks(self) -> bool:
        for t, q in enumerate(self.dst_moduli):
            for i, p in enumerate(self.src_moduli):
                if p != q and self.matrix[t, i] % q:
                    return False
        return True


def parametrize(space: AffineSubspace) -> AffineMap:
    """Bijective affine map Z_{q_1..q_d} -> space (source order follows the basis)."""
    if space.is_empty:
        raise ValueError("cannot parametrize the empty set")
    src = tuple(space.moduli[int(np.nonzero(b)[0][0])] for b in space.basis)
    return AffineMap(src, space.moduli, space.basis.T.copy().reshape(len(space.moduli), len(space.basis)), space.point.copy())


def push_forward(phi: AffineMap, space: AffineSubspace) -> AffineSubspace:
    """φ(space) as a subspace of the target of φ."""
    if space.is_empty:
        return AffineSubspace.empty(phi.dst_moduli)
    mods = np.asarray(phi.dst_moduli, dtype=np.int64)
    basis = (space.basis @ phi.matrix.T) % mods if len(space.basis) else np.zeros((0, len(mods)), np.int64)
    return AffineSubspace(phi.dst_moduli, phi(space.point), basis)


def image(phi: AffineMap) -> AffineSubspace:
    return AffineSubspace(phi.dst_moduli, phi.offset.copy(), phi.matrix.T.copy())
