"""The decision procedure: consistency, strong reductions, and SolveLinear."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import FiniteAlgebra, quotient, restrict, sg_generate
from .congruence import GroupStructure, linear_group_structure, minimal_full_linear
from .csp import (
    Constraint,
    Instance,
    enforce_consistency,
    linked_components,
    restrict_rows,
    sorted_rows,
)
from .errors import InternalDiagnostic, MixedPrimeError, NotAffineError, InputError, NotSpecialError
from .linalg import (
    AffineMap,
    AffineSubspace,
    affine_hull,
    union_size,
    image,
    push_forward,
    intersect,
    inv_mod,
    parametrize,
    solve_mod,
    stack_rows,
)
from .subuniverse import BA, CENTRAL, LINEAR_ONLY, PCBLOCK, strong_on_domain

REDUCING = (BA, CENTRAL, PCBLOCK)


@dataclass
class LinearFrame:
    """Per-variable linear quotients D_x/σ_x ≅ ∏ Z_q of the SolveLinear instance."""

    domains: tuple  # top-level domains
    labels: list  # per variable: element -> coordinate tuple (dict)
    moduli: tuple  # all target coordinates, variable-major
    slices: list  # per variable: slice into the target coordinates

    def block(self, x: int, target: np.ndarray) -> set:
        want = tuple(int(v) for v in target[self.slices[x]])
        return {a for a, c in self.labels[x].items() if c == want}


@lru_cache(maxsize=4096)
def _linear_coords(alg: FiniteAlgebra, domain: tuple):
    """(element -> coords, moduli) for D/σ_D with σ_D the minimal full linear congruence."""
    if len(domain) == 1:
        return {domain[0]: ()}, ()
    sub = restrict(alg, domain)
    sigma = minimal_full_linear(sub)
    if sigma.is_full:
        return {a: () for a in domain}, ()
    q = quotient(sub, sigma.labels)
    grp = linear_group_structure(q)
    labels = {domain[i]: tuple(int(v) for v in grp.coords[sigma.labels[i]]) for i in range(len(domain))}
    return labels, grp.moduli


@dataclass
class SolveStats:
    solve_calls: int = 0
    memo_hits: int = 0
    reductions: int = 0
    linear_calls: int = 0
    p0_calls: int = 0


class Solver:
    """Stateful front end carrying memo tables, trace output and hooks."""

    def __init__(self, trace: Callable[[str], None] | None = None, check_p3: bool = False,
                 on_reduce: Callable | None = None, irreducibility: bool = True,
                 max_subset_vars: int = 10):
        self.trace = trace
        self.check_p3 = check_p3
        self.on_reduce = on_reduce
        self.irreducibility = irreducibility
        self.max_subset_vars = max_subset_vars
        self.memo: dict[bytes, bool] = {}
        self.active: set[bytes] = set()
        self.stats = SolveStats()
        self.depth = 0
        self.linear_log: list = []  # (depth, list of m per iteration)
        self.p3_checks: list = []  # (ok, equation, n points) when check_p3
        self._open: set = set()  # (instance, φ) pairs on the subspace stack

    # -- tracing -------------------------------------------------------------

    def _emit(self, kind: str, var: str, detail: str) -> None:
        if self.trace is not None:
            self.trace(f"step {kind} {var} depth={self.depth} {detail}".rstrip())

    # -- top level -------------------------------------------------------------

    def solve(self, inst: Instance) -> bool:
        alg = inst.alg
        if not (alg.is_idempotent and alg.is_wnu):
            raise InputError("operation is not an idempotent WNU")
        if not alg.is_special:
            raise NotSpecialError("operation is not special")
        return self._solve(inst.normalized())

    def _solve(self, inst: Instance) -> bool:
        key = inst.key
        if key in self.memo:
            self.stats.memo_hits += 1
            return self.memo[key]
        if key in self.active:
            raise InternalDiagnostic("solver recursion did not shrink the instance")
        self.active.add(key)
        self.stats.solve_calls += 1
        self.depth += 1
        try:
            out = self._solve_body(inst)
        finally:
            self.depth -= 1
            self.active.discard(key)
        self.memo[key] = out
        return out

    def _solve_body(self, inst: Instance) -> bool:
        while True:
            inst = self.force_consistency(inst)
            if inst is None:
                self._emit("unsat", "-", "consistency emptied a domain or constraint")
                return False
            if all(len(d) == 1 for d in inst.domains):
                return True
            reduced = None
            for x, d in enumerate(inst.domains):
                if len(d) < 2:
                    continue
                f = strong_on_domain(inst.alg, d)
                if f.kind in REDUCING:
                    reduced = (x, f)
                    break
            if reduced is None:
                return self.solve_linear(inst)
            x, f = reduced
            if self.on_reduce is not None:
                self.on_reduce(inst, x, f.subset, f.kind)
            self.stats.reductions += 1
            self._emit(f"reduce-{f.kind}", inst.names[x],
                       "{" + ",".join(map(str, inst.domains[x])) + "} -> {" + ",".join(map(str, f.subset)) + "}")
            inst = reduce_domain(inst, x, f.subset)

    # -- consistency -------------------------------------------------------------

    def force_consistency(self, inst: Instance) -> Instance | None:
        while True:
            res = enforce_consistency(inst)
            if res.unsat:
                return None
            inst = res.instance
            if not self.irreducibility:
                return inst
            nxt = self._irreducibility_pass(inst)
            if nxt is None:
                return inst
            if any(not d for d in nxt.domains):
                return None
            inst = nxt

    def _irreducibility_pass(self, inst: Instance) -> Instance | None:
        """Remove values with no support in a non-linked projection of the instance.

        For every connected set X of variables, take all constraint
        projections onto X; if that instance is not linked and not a tree,
        solve each linked component (smaller domains) value by value.
        Returns the shrunk instance, or None when nothing changed.
        """
        v = inst.n_vars
        d = inst.alg.size
        if v > self.max_subset_vars:
            return None
        scopes = [c.scope for c in inst.constraints if c.arity >= 2]
        if not scopes:
            return None
        adj = _value_graph(inst)
        for size in range(2, v + 1):
            for xs in itertools.combinations(range(v), size):
                xset = set(xs)
                sub_scopes = [tuple(x for x in sc if x in xset) for sc in scopes]
                sub_scopes = [s for s in sub_scopes if len(s) >= 2]
                if not _connected(xs, sub_scopes):
                    continue
                comps = _components(adj, inst.domains, xs, d)
                if all(len({comps[(x, a)] for a in inst.domains[x]}) == 1 for x in xs):
                    continue  # linked
                if _is_tree(xs, sub_scopes):
                    continue
                removed = self._unsupported(inst, xs, comps)
                if removed:
                    doms = [set(dd) for dd in inst.domains]
                    for x, a in removed:
                        doms[x].discard(a)
                    self._emit("irreducible", "-", f"vars={[inst.names[x] for x in xs]} removed="
                               + ",".join(f"{inst.names[x]}={a}" for x, a in sorted(removed)))
                    return restrict_rows(inst.with_domains(doms))
        return None

    def _unsupported(self, inst: Instance, xs: Sequence[int], comps: dict) -> list:
        groups: dict = {}
        for (x, a), c in comps.items():
            groups.setdefault(c, {}).setdefault(x, set()).add(a)
        removed = []
        proj = _projection(inst, xs)
        for values in groups.values():
            doms = list(proj.domains)
            for x in xs:
                doms[x] = tuple(sorted(values.get(x, ())))
            if any(not doms[x] for x in xs):
                removed.extend((x, a) for x in xs for a in values.get(x, ()))
                continue
            base = restrict_rows(proj.with_domains(doms))
            for x in xs:
                for a in doms[x]:
                    dd = list(doms)
                    dd[x] = (a,)
                    if not self._solve(restrict_rows(base.with_domains(dd))):
                        removed.append((x, a))
        return removed

    # -- SolveLinear -------------------------------------------------------------

    def solve_linear(self, inst: Instance) -> bool:
        self.stats.linear_calls += 1
        frame = self._frame(inst)
        phi = AffineMap.identity(frame.moduli)
        self._emit("linear", "-", f"m={phi.m} moduli={list(frame.moduli)}")
        space = self.subspace(inst, frame, phi, top=True)
        return not space.is_empty

    def _frame(self, inst: Instance) -> LinearFrame:
        labels, moduli, slices = [], [], []
        for d in inst.domains:
            lab, mods = _linear_coords(inst.alg, tuple(d))
            labels.append(lab)
            slices.append(slice(len(moduli), len(moduli) + len(mods)))
            moduli.extend(mods)
        return LinearFrame(inst.domains, labels, tuple(moduli), slices)

    def p0(self, inst: Instance, frame: LinearFrame, phi: AffineMap, alpha) -> bool:
        """Does the instance have a solution inside the blocks φ(α)?"""
        self.stats.p0_calls += 1
        target = phi(np.asarray(alpha, dtype=np.int64))
        doms = []
        for x, d in enumerate(inst.domains):
            nd = tuple(a for a in d if a in frame.block(x, target))
            if not nd:
                return False
            doms.append(nd)
        sub = restrict_rows(inst.with_domains(doms))
        if all(len(dd) == 1 for dd in doms):
            return sub.satisfies([dd[0] for dd in doms])
        return self._solve(sub)

    def p1(self, inst: Instance, frame: LinearFrame, phi: AffineMap):
        """(passes, probes) where probes lists (point, result) for 0 and each e_i."""
        m = phi.m
        probes = []
        pts = [np.zeros(m, np.int64)] + [np.eye(m, dtype=np.int64)[i] for i in range(m)]
        for pt in pts:
            ok = self.p0(inst, frame, phi, pt)
            probes.append((pt, ok))
            if not ok:
                return False, probes
        return True, probes

    def _active(self, inst: Instance, frame: LinearFrame) -> list[int]:
        used = {x for c in inst.constraints for x in c.scope}
        return [x for x in range(inst.n_vars) if x in used or inst.domains[x] != frame.domains[x]]

    def subspace(self, inst: Instance, frame: LinearFrame, phi: AffineMap, top: bool = False) -> AffineSubspace:
        """φ⁻¹(inst) in the source coordinates of φ."""
        key = self._open_key(inst, frame, phi)
        if key in self._open:
            raise InternalDiagnostic("SolveLinear recursion revisited an instance", domains=inst.domains)
        self._open.add(key)
        try:
            return self._subspace(inst, frame, phi, top)
        finally:
            self._open.discard(key)

    @staticmethod
    def _open_key(inst: Instance, frame: LinearFrame, phi: AffineMap):
        # views of one frame share its label table, nested solves build their own
        return id(frame.labels), inst.key, phi.matrix.tobytes(), phi.offset.tobytes(), phi.src_moduli

    def _restriction_space(self, inst: Instance, frame: LinearFrame, phi: AffineMap) -> AffineSubspace:
        """Exact superset of φ⁻¹(inst) cut out by the domains alone (their label hulls)."""
        out = AffineSubspace.full(phi.src_moduli)
        for x, d in enumerate(inst.domains):
            mods = frame.moduli[frame.slices[x]]
            if d == frame.domains[x] or not mods:
                continue
            pts = sorted({frame.labels[x][a] for a in d})
            hull = affine_hull([AffineSubspace(mods, np.array(p, dtype=np.int64)) for p in pts])
            out = intersect(out, preimage(phi, frame.slices[x], hull))
            if out.is_empty:
                break
        return out

    def _subspace(self, inst, frame, phi, top):
        if any(not d for d in inst.domains) or any(len(c.rows) == 0 for c in inst.constraints):
            return AffineSubspace.empty(phi.src_moduli)
        if not top:
            cut = self._restriction_space(inst, frame, phi)
            if cut.is_empty:
                return cut
            if not cut.is_full:
                psi = parametrize(cut)
                self._emit("linear-domains", "-", f"m={phi.m}->{psi.m} {cut.describe()}")
                return push_forward(psi, self.subspace(inst, frame, phi.compose(psi)))
        total = AffineMap.identity(phi.src_moduli)
        cur = phi
        ms = [cur.m]
        if top:
            self.linear_log.append(ms)
        while True:
            view = self._view(frame, cur)
            inst = restrict_rows(inst.with_domains(
                [tuple(a for a in d if a in set(v)) for d, v in zip(inst.domains, view.domains)]))
            ok, probes = self.p1(inst, view, cur)
            if ok:
                self._emit("linear-full", "-", f"m={cur.m}")
                return image(total)
            if cur.m == 0:
                return AffineSubspace.empty(phi.src_moduli)
            reduced = self.minimize(inst, view, cur)
            rep = linked_components(reduced, self._active(reduced, view))
            if not rep.linked:
                f = self.p2(reduced, view, cur)
            else:
                f = self.p3(reduced, view, cur)
            if f.is_empty:
                self._emit("linear-empty", "-", f"m={cur.m}")
                return AffineSubspace.empty(phi.src_moduli)
            if f.is_full:
                raise InternalDiagnostic("SolveLinear made no progress", m=cur.m)
            psi = parametrize(f)
            self._emit("linear-step", "-", f"m={cur.m}->{psi.m} {f.describe()}")
            cur = cur.compose(psi)
            total = total.compose(psi)
            ms.append(cur.m)

    @staticmethod
    def _view(frame: LinearFrame, phi: AffineMap) -> LinearFrame:
        """The frame with each domain cut to the values whose block φ can reach.

        Other values never enter a p0 probe, so dropping them leaves φ⁻¹
        unchanged; linkedness and constraint minimization are judged on
        what remains.
        """
        img = image(phi)
        doms = []
        for x, d in enumerate(frame.domains):
            sl = frame.slices[x]
            if sl.start == sl.stop:
                doms.append(d)
                continue
            proj = AffineSubspace(frame.moduli[sl], img.point[sl], img.basis[:, sl])
            doms.append(tuple(a for a in d if proj.contains(frame.labels[x][a])))
        return LinearFrame(tuple(doms), frame.labels, frame.moduli, frame.slices)

    def minimize(self, inst: Instance, frame: LinearFrame, phi: AffineMap) -> Instance:
        """Drop constraints, relax domains, then weaken relations, while p1 keeps failing.

        Domains narrower than the frame's act as unary constraints; they are
        relaxed in variable order after the constraints (declaration order).
        """
        cons = list(inst.constraints)
        i = 0
        while i < len(cons):
            trial = inst.with_constraints(cons[:i] + cons[i + 1:])
            if not self.p1(trial, frame, phi)[0]:
                cons = cons[:i] + cons[i + 1:]
            else:
                i += 1
        cur = inst.with_constraints(cons)
        for x in range(cur.n_vars):
            if cur.domains[x] == frame.domains[x]:
                continue
            trial = cur.with_domains(cur.domains[:x] + (frame.domains[x],) + cur.domains[x + 1:])
            if self._open_key(trial, frame, phi) not in self._open and not self.p1(trial, frame, phi)[0]:
                cur = trial
        return self._weaken(cur, frame, phi)

    def _weaken(self, inst: Instance, frame: LinearFrame, phi: AffineMap) -> Instance:
        """Loosen each constraint to a larger invariant relation while p1 keeps failing.

        Candidates are Sg(R ∪ {t}) for tuples t of the domain product outside R;
        every strictly weaker relation contains one of them, so at the end each
        constraint is as weak as it can be without making φ⁻¹ full.
        """
        cons = list(inst.constraints)
        for i in range(len(cons)):
            while True:
                for rows in self._weaker(inst, cons[i]):
                    c = Constraint(cons[i].scope, rows, cons[i].name)
                    trial = inst.with_constraints(cons[:i] + [c] + cons[i + 1:])
                    if not self.p1(trial, frame, phi)[0]:
                        self._emit("weaken", inst.names[c.scope[0]],
                                   f"scope={[inst.names[x] for x in c.scope]} rows {len(cons[i].rows)}->{len(rows)}")
                        cons[i] = c
                        break
                else:
                    break
        return inst.with_constraints(cons)

    def _weaker(self, inst: Instance, c: Constraint, cap: int = 4096):
        doms = [inst.domains[x] for x in c.scope]
        total = 1
        for d in doms:
            total *= len(d)
        if total > cap or len(c.rows) == total:
            return
        have = {tuple(r) for r in c.rows.tolist()}
        seen = set()
        for t in itertools.product(*doms):
            if t in have:
                continue
            rows = sorted_rows(sg_generate(inst.alg, c.arity, c.rows.tolist() + [t]).tuples, c.arity)
            key = rows.tobytes()
            if key in seen:
                continue
            seen.add(key)
            yield rows

    def p2(self, inst: Instance, frame: LinearFrame, phi: AffineMap) -> AffineSubspace:
        """φ⁻¹ of a non-linked instance from its fragments and linked components."""
        active = self._active(inst, frame)
        rep = linked_components(inst, active)
        moduli = phi.src_moduli
        if not active:
            return AffineSubspace.full(moduli)
        if not inst.constraints:
            out = self._domain_space(inst, frame, phi, active)
            self._emit("p2-domains", "-", out.describe())
            return out
        if rep.fragmented:
            out = AffineSubspace.full(moduli)
            for frag in rep.fragments:
                fs = set(frag)
                doms = [d if x in fs else frame.domains[x] for x, d in enumerate(inst.domains)]
                cons = [c for c in inst.constraints if c.scope[0] in fs]
                part = inst.with_domains(doms).with_constraints(cons)
                out = intersect(out, self._fragment_space(part, frame, phi, frag))
                if out.is_empty:
                    break
            self._emit("p2-fragments", "-", f"{len(rep.fragments)} fragments -> {out.describe()}")
            return out
        return self._union_of_components(inst, frame, phi, rep)

    def _fragment_space(self, part: Instance, frame, phi, frag) -> AffineSubspace:
        if not part.constraints:
            return self._domain_space(part, frame, phi, frag)
        return self.subspace(part, frame, phi)

    def _domain_space(self, part: Instance, frame, phi, xs) -> AffineSubspace:
        """{α : φ(α)_x meets D_x} for unconstrained variables."""
        out = AffineSubspace.full(phi.src_moduli)
        for x in xs:
            sl = frame.slices[x]
            pts = {frame.labels[x][a] for a in part.domains[x]}
            sub_mods = frame.moduli[sl]
            img = [AffineSubspace(sub_mods, np.array(p, dtype=np.int64)) for p in sorted(pts)]
            hull = affine_hull(img)
            if hull.size() != len(pts):
                raise NotAffineError("union not affine", variable=part.names[x])
            out = intersect(out, preimage(phi, sl, hull))
        return out

    def _union_of_components(self, inst, frame, phi, rep) -> AffineSubspace:
        spaces = []
        for comp in rep.components:
            doms = [comp.get(x, d) for x, d in enumerate(inst.domains)]
            sub = restrict_rows(inst.with_domains(doms))
            spaces.append(self.subspace(sub, frame, phi))
        hull = affine_hull(spaces)
        self._emit("p2-components", "-", f"{len(spaces)} components -> {hull.describe()}")
        if hull.is_empty:
            return hull
        live = [s for s in spaces if not s.is_empty]
        if any(s.same_as(hull) for s in live):
            return hull
        covered = union_size(live)
        if covered is None and hull.size() <= 4096:
            covered = sum(1 for pt in hull.points() if any(s.contains(pt) for s in live))
        if covered == hull.size():
            return hull
        raise NotAffineError("union not affine", hull=hull.describe())

    def p3(self, inst: Instance, frame: LinearFrame, phi: AffineMap) -> AffineSubspace:
        """One equation from a failing probe and per-coordinate repairs."""
        ok, probes = self.p1(inst, frame, phi)
        if ok:
            raise InternalDiagnostic("p3 called on an instance passing p1")
        a = probes[-1][0].copy()
        moduli = phi.src_moduli
        b = {}
        for i, q in enumerate(moduli):
            for v in range(q):
                if v == a[i]:
                    continue
                pt = a.copy()
                pt[i] = v
                if self.p0(inst, frame, phi, pt):
                    b[i] = v
                    break
        if not b:
            # a nonempty set of codimension ≤ 1 always has a repair; confirm emptiness
            # on small spaces so a set outside the trichotomy is reported, not misread
            if any(r for _, r in probes) or self._has_point(inst, frame, phi):
                raise NotAffineError("solution set is not of codimension 1", probe=a.tolist())
            out = AffineSubspace.empty(moduli)
        else:
            primes = {moduli[i] for i in b}
            if len(primes) != 1:
                raise MixedPrimeError("mixed-prime equation", coords=sorted(b), moduli=moduli)
            q = primes.pop()
            coeffs = {i: inv_mod(b[i] - a[i], q) for i in b}
            const = (1 + sum(c * int(a[i]) for i, c in coeffs.items())) % q
            from .linalg import subspace_from_equation
            out = subspace_from_equation(moduli, coeffs, const, q)
            self._emit("p3", "-", f"a={a.tolist()} b={ {i + 1: v for i, v in b.items()} } -> {out.describe()}")
        if self.check_p3:
            self._verify_p3(inst, frame, phi, out)
        return out

    def _has_point(self, inst, frame, phi, limit: int = 4096) -> bool:
        total = int(np.prod(phi.src_moduli)) if phi.m else 1
        if total > limit:
            return False
        return any(self.p0(inst, frame, phi, pt) for pt in itertools.product(*[range(q) for q in phi.src_moduli]))

    def _verify_p3(self, inst, frame, phi, out) -> None:
        total = int(np.prod(phi.src_moduli)) if phi.m else 1
        if total > 4096:
            return
        bad = 0
        for pt in itertools.product(*[range(q) for q in phi.src_moduli]):
            if self.p0(inst, frame, phi, pt) != out.contains(pt):
                bad += 1
        self.p3_checks.append((bad == 0, out.describe(), total))


def preimage(phi: AffineMap, sl: slice, target: AffineSubspace) -> AffineSubspace:
    """{α : φ(α)[sl] ∈ target}."""
    moduli = phi.src_moduli
    m = len(moduli)
    if target.is_empty:
        return AffineSubspace.empty(moduli)
    rows_all = phi.matrix[sl]
    off = phi.offset[sl]
    out = AffineSubspace.full(moduli)
    for q, (idx, ann, consts) in target.equations().items():
        for row, c in zip(ann, consts):
            coeff = np.zeros(m, np.int64)
            for r, t in zip(row, idx):
                coeff = coeff + int(r) * rows_all[t]
            rhs = (int(c) - int(sum(int(r) * int(off[t]) for r, t in zip(row, idx)))) % q
            cols = [i for i, p in enumerate(moduli) if p == q]
            coeff_q = coeff[cols] % q
            if not coeff_q.any():
                if rhs:
                    return AffineSubspace.empty(moduli)
                continue
            sol, null = solve_mod(coeff_q.reshape(1, -1), np.array([rhs]), q)
            point = np.zeros(m, np.int64)
            point[cols] = sol
            basis = []
            for v in null:
                full = np.zeros(m, np.int64)
                full[cols] = v
                basis.append(full)
            for i, p in enumerate(moduli):
                if p != q:
                    e = np.zeros(m, np.int64)
                    e[i] = 1
                    basis.append(e)
            out = intersect(out, AffineSubspace(moduli, point, stack_rows(basis, m)))
    return out


def reduce_domain(inst: Instance, x: int, subset) -> Instance:
    b = tuple(sorted(set(subset)))
    if not b:
        raise InputError("cannot reduce to the empty set")
    if not set(b) <= set(inst.domains[x]):
        raise InputError("reduction is not a subset of the current domain")
    doms = list(inst.domains)
    doms[x] = b
    return restrict_rows(inst.with_domains(doms))


def checked_reduce(inst: Instance, x: int, subset) -> Instance:
    """reduce_domain after confirming the subset is an admitted strong subuniverse."""
    d = inst.domains[x]
    if len(d) == 1:
        return inst
    f = strong_on_domain(inst.alg, d)
    b = tuple(sorted(set(subset)))
    if f.kind not in REDUCING:
        raise InputError(f"domain of {inst.names[x]} has no BA, central or PC-block reduction")
    if f.kind == PCBLOCK:
        ok = b in {tuple(sorted(blk)) for blk in _pc_blocks(inst.alg, d)}
    else:
        ok = _admissible_absorbing(inst.alg, d, b)
    if not ok:
        raise InputError(f"{b} is not an admitted reduction of {d}")
    return reduce_domain(inst, x, b)


def _admissible_absorbing(alg, d, b) -> bool:
    from .subuniverse import is_binary_absorbing, is_central

    sub = restrict(alg, d)
    local = tuple(d.index(v) for v in b)
    if len(local) in (0, len(d)) or not all(v in d for v in b):
        return False
    from .algebra import is_subuniverse
    if not is_subuniverse(sub, local):
        return False
    return bool(is_binary_absorbing(sub, local, counterwitness=False)) or is_central(sub, local)


def _pc_blocks(alg, d):
    from .congruence import full_cover_congruences

    sub = restrict(alg, d)
    _, pc = full_cover_congruences(sub)
    for rep in pc:
        for blk in rep.sigma.blocks():
            yield tuple(d[i] for i in blk)


# -- graph helpers for the irreducibility pass -------------------------------------

def _value_graph(inst: Instance) -> dict:
    """(x, a) -> set of (y, b) adjacent through some constraint pair projection."""
    adj: dict = {}
    for c in inst.constraints:
        k = c.arity
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                x, y = c.scope[i], c.scope[j]
                for a, b in set(map(tuple, c.rows[:, [i, j]].tolist())):
                    adj.setdefault((x, a), set()).add((y, b))
    return adj


def _components(adj: dict, domains, xs, d) -> dict:
    xset = set(xs)
    comp: dict = {}
    n = 0
    for x in xs:
        for a in domains[x]:
            if (x, a) in comp:
                continue
            stack = [(x, a)]
            comp[(x, a)] = n
            while stack:
                u = stack.pop()
                for w in adj.get(u, ()):
                    if w[0] in xset and w not in comp:
                        comp[w] = n
                        stack.append(w)
            n += 1
    return comp


def _connected(xs, scopes) -> bool:
    if not xs:
        return False
    seen = {xs[0]}
    changed = True
    while changed:
        changed = False
        for s in scopes:
            if seen.intersection(s) and not seen.issuperset(s):
                seen.update(s)
                changed = True
    return len(seen) == len(xs)


def _is_tree(xs, scopes) -> bool:
    """Incidence graph (variables + scopes) is a forest."""
    parent = {("v", x): ("v", x) for x in xs}
    for i in range(len(scopes)):
        parent[("c", i)] = ("c", i)

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for i, s in enumerate(scopes):
        for x in s:
            ru, rv = find(("c", i)), find(("v", x))
            if ru == rv:
                return False
            parent[ru] = rv
    return True


def _projection(inst: Instance, xs) -> Instance:
    """All constraint projections onto xs (≥ 2 variables), on the full variable list."""
    xset = set(xs)
    cons = []
    for c in inst.constraints:
        keep = [j for j, x in enumerate(c.scope) if x in xset]
        if len(keep) < 2:
            continue
        cons.append(c.project(keep))
    doms = [d if x in xset else d for x, d in enumerate(inst.domains)]
    out = inst.with_constraints(cons).with_domains(doms)
    # variables outside xs are irrelevant: give them a single value
    doms = [d if x in xset else d[:1] for x, d in enumerate(out.domains)]
    return out.with_domains(doms)


# -- public entry points ------------------------------------------------------------

def solve_decision(inst: Instance, trace: Callable[[str], None] | None = None, **kw) -> bool:
    return Solver(trace=trace, **kw).solve(inst)


def extract_solution(inst: Instance, solver: Solver | None = None) -> list[int] | None:
    """Self-reduction: fix variables in order to the least value keeping Sat."""
    solver = solver or Solver()
    if not solver.solve(inst):
        return None
    cur = inst.normalized()
    assignment = []
    for x in range(inst.n_vars):
        for a in cur.domains[x]:
            trial = reduce_domain(cur, x, (a,))
            if solver._solve(trial):
                cur = trial
                assignment.append(a)
                break
        else:
            raise InternalDiagnostic("no value survives during extraction", variable=inst.names[x])
    if not inst.satisfies(assignment):
        raise InternalDiagnostic("extracted assignment violates a constraint", assignment=assignment)
    return assignment
