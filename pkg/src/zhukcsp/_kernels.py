"""Closure kernels for coordinatewise application of a single n-ary operation.

The operation table is compiled into a curried automaton: the state after
reading j arguments is the class of the residual (n-j)-ary function.  Applying
the operation to every n-tuple of rows then becomes a level-by-level walk where
duplicate partial states are merged, which keeps the work proportional to the
number of distinct partial states rather than E**n.

Two interchangeable backends implement the level step: numba (default when
importable) and plain numpy.  Set ZHUKCSP_NUMBA=0 to force numpy.  Both return
states in first-occurrence order of a row-major (state, element) scan, so
provenance is identical across backends.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_INT64_LIMIT = 2**62
_CHUNK_CELLS = 1 << 22
# bound on partial states held by one level step (cells = states * row width)
STATE_CELLS = 1 << 25
MAX_STATES = 1 << 22


def numba_enabled() -> bool:
    return HAVE_NUMBA and os.environ.get("ZHUKCSP_NUMBA", "1") != "0"


def _fits(radix: int, k: int) -> bool:
    return k == 0 or radix ** k < _INT64_LIMIT


def encode_rows(rows: np.ndarray, radix: int) -> np.ndarray:
    """Mixed-radix int64 codes (first column most significant) or void keys."""
    rows = np.asarray(rows)
    m, k = rows.shape
    if _fits(max(radix, 2), k):
        codes = np.zeros(m, dtype=np.int64)
        for j in range(k):
            codes *= radix
            codes += rows[:, j]
        return codes
    arr = np.ascontiguousarray(rows, dtype=np.int16 if radix < 2**15 else np.int64)
    return arr.view(np.dtype((np.void, arr.dtype.itemsize * k))).ravel()


def _first_unique(keys: np.ndarray) -> np.ndarray:
    """Indices of first occurrences, in order of appearance."""
    _, idx = np.unique(keys, return_index=True)
    return np.sort(idx)


@dataclass
class Automaton:
    size: int
    arity: int
    trans: list = field(default_factory=list)  # trans[j]: (C_j, size) int64

    @classmethod
    def from_table(cls, table: np.ndarray, size: int, arity: int) -> "Automaton":
        trans = []
        resid = np.asarray(table, dtype=np.int64).reshape(1, -1)
        for j in range(arity):
            c = resid.shape[0]
            nxt = resid.reshape(c * size, -1)
            if j == arity - 1:
                trans.append(np.ascontiguousarray(nxt.reshape(c, size)))
            else:
                uniq, inv = np.unique(nxt, axis=0, return_inverse=True)
                trans.append(np.ascontiguousarray(inv.reshape(c, size).astype(np.int64)))
                resid = uniq
        return cls(size, arity, trans)

    def radix(self, j: int) -> int:
        """Number of classes after level j (states produced by trans[j])."""
        if j == self.arity - 1:
            return self.size
        return self.trans[j + 1].shape[0]


def _extend_numpy(states, elems, trans_j, radix, limit):
    s, k = states.shape
    e = elems.shape[0]
    if s == 0 or e == 0:
        return (np.zeros((0, k), np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))
    step = max(1, _CHUNK_CELLS // max(1, e * max(k, 1)))
    outs, parents, picks, keys = [], [], [], []
    held = 0
    for lo in range(0, s, step):
        blk = states[lo:lo + step]
        new = trans_j[blk[:, None, :], elems[None, :, :]].reshape(-1, k)
        kk = encode_rows(new, radix)
        idx = _first_unique(kk)
        outs.append(new[idx])
        parents.append(lo + idx // e)
        picks.append(idx % e)
        keys.append(kk[idx])
        held += len(idx)
        if held > 2 * limit:
            return None
    new = np.concatenate(outs)
    par = np.concatenate(parents)
    pick = np.concatenate(picks)
    if len(outs) > 1:
        idx = _first_unique(np.concatenate(keys))
        new, par, pick = new[idx], par[idx], pick[idx]
    if len(new) > limit:
        return None
    return new, par, pick


if HAVE_NUMBA:

    @njit(cache=True)
    def _extend_nb(states, elems, trans_j, radix, limit):
        s, k = states.shape
        e = elems.shape[0]
        seen = dict()
        out = np.empty((min(s * e, 1 << 16) + 1, k), np.int64)
        par = np.empty(out.shape[0], np.int64)
        pick = np.empty(out.shape[0], np.int64)
        row = np.empty(k, np.int64)
        n = 0
        for a in range(s):
            for b in range(e):
                code = 0
                for c in range(k):
                    v = trans_j[states[a, c], elems[b, c]]
                    row[c] = v
                    code = code * radix + v
                if code in seen:
                    continue
                if n >= limit:
                    return out[:0].copy(), par[:0].copy(), pick[:0].copy(), False
                seen[code] = n
                if n == out.shape[0]:
                    grow = out.shape[0] * 2
                    o2 = np.empty((grow, k), np.int64)
                    o2[:n] = out[:n]
                    out = o2
                    p2 = np.empty(grow, np.int64)
                    p2[:n] = par[:n]
                    par = p2
                    q2 = np.empty(grow, np.int64)
                    q2[:n] = pick[:n]
                    pick = q2
                out[n] = row
                par[n] = a
                pick[n] = b
                n += 1
        return out[:n].copy(), par[:n].copy(), pick[:n].copy(), True


def extend(states, elems, trans_j, radix, use_numba=None, what="closure"):
    """All distinct trans_j[state, elem] rows with back-pointers (parent, elem).

    Raises CapExceeded when the level would hold more than STATE_CELLS cells.
    """
    if use_numba is None:
        use_numba = numba_enabled()
    k = states.shape[1]
    limit = max(1, min(STATE_CELLS // max(k, 1), MAX_STATES))
    if use_numba and HAVE_NUMBA and k > 0 and _fits(radix, k):
        *res, ok = _extend_nb(states, elems, trans_j, radix, limit)
        res = tuple(res) if ok else None
    else:
        res = _extend_numpy(states, elems, trans_j, radix, limit)
    if res is None:
        raise CapExceeded(f"{what} (intermediate states)", limit + 1, limit)
    return res


def _concat_unique(a, b, radix):
    """Merge two (rows, parent, pick, group) batches keeping first occurrences."""
    rows = np.concatenate([a[0], b[0]])
    idx = _first_unique(encode_rows(rows, radix)) if len(rows) else np.zeros(0, np.int64)
    return tuple(np.concatenate([x, y])[idx] for x, y in zip(a, b))


def apply_all(auto: Automaton, old: np.ndarray, new: np.ndarray, use_numba=None, what="closure"):
    """Rows w(r_1..r_n) with every r_i in old∪new and at least one r_i in new.

    Element indices refer to the concatenation [old; new].  Returns
    (rows, trail) where trail lets `arguments` recover the n element indices
    of each output row.
    """
    k = new.shape[1]
    n_old = old.shape[0]
    both = np.concatenate([old, new]) if n_old else new
    o_states = np.zeros((1, k), np.int64)
    n_states = np.zeros((0, k), np.int64)
    trail = []
    for j in range(auto.arity):
        tj = auto.trans[j]
        rad = auto.radix(j)
        oo = extend(o_states, old, tj, rad, use_numba, what)
        on = extend(o_states, new, tj, rad, use_numba, what)
        ne = extend(n_states, both, tj, rad, use_numba, what)
        nn = _concat_unique(
            (on[0], on[1], on[2] + n_old, np.zeros(len(on[0]), np.int64)),
            (ne[0], ne[1], ne[2], np.ones(len(ne[0]), np.int64)),
            rad,
        )
        trail.append((oo[1], oo[2], nn[1], nn[2], nn[3]))
        o_states, n_states = oo[0], nn[0]
    return n_states, trail


def arguments(trail, index: int) -> list[int]:
    """Element indices (into [old; new]) that produced output row `index`."""
    out = []
    group, i = 1, index
    for level in reversed(trail):
        o_par, o_pick, n_par, n_pick, n_src = level
        if group == 1:
            out.append(int(n_pick[i]))
            group, i = int(n_src[i]), int(n_par[i])
        else:
            out.append(int(o_pick[i]))
            i = int(o_par[i])
    out.reverse()
    return out


def closure(auto: Automaton, gens: np.ndarray, cap: int, keep_trail=False,
            use_numba=None, what="closure", stop=None):
    """Semi-naive closure of `gens` under coordinatewise application.

    Returns (rows, generation, provenance, hit).  provenance[r] is None for
    the deduplicated generators and otherwise the tuple of argument row
    indices (empty when keep_trail is off).  `stop(fresh_rows, offset)` may
    return a row index to end the search early; it is reported as `hit`.
    """
    gens = np.asarray(gens, dtype=np.int64)
    k = gens.shape[1]
    radix = auto.size
    keys = encode_rows(gens, radix)
    idx = _first_unique(keys) if len(gens) else np.zeros(0, np.int64)
    rows = gens[idx]
    seen_keys = keys[idx]
    gen_of = [0] * len(rows)
    prov: list = [None] * len(rows)
    if len(rows) > cap:
        raise CapExceeded(what, len(rows), cap)
    if stop is not None and len(rows):
        hit = stop(rows, 0)
        if hit is not None:
            return rows, gen_of, prov, hit
    old = np.zeros((0, k), np.int64)
    delta = rows
    gen = 0
    while len(delta):
        gen += 1
        out, trail = apply_all(auto, old, delta, use_numba, what)
        okeys = encode_rows(out, radix)
        fidx = np.nonzero(~np.isin(okeys, seen_keys))[0] if len(out) else np.zeros(0, np.int64)
        if len(rows) + len(fidx) > cap:
            raise CapExceeded(what, len(rows) + len(fidx), cap)
        start = len(rows)
        # element indices in the trail address [old; delta], which is `rows`
        if keep_trail:
            prov.extend(tuple(arguments(trail, int(i))) for i in fidx)
        else:
            prov.extend([()] * len(fidx))
        gen_of.extend([gen] * len(fidx))
        old = rows
        delta = out[fidx]
        rows = np.concatenate([rows, delta])
        seen_keys = np.concatenate([seen_keys, okeys[fidx]])
        if stop is not None and len(delta):
            hit = stop(delta, start)
            if hit is not None:
                return rows, gen_of, prov, hit
    return rows, gen_of, prov, None
