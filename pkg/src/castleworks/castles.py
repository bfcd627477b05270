"""Towers and castles on finite subshift models.

A castle is verified exactly: every level ``σ·B`` is computed as a cylinder
set, all levels are refined to a common resolution and checked for
overlaps atom by atom.  Measures are empirical frequencies over the model's
measure window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .cylinders import CylinderSet, ResolutionError, Subshift, preimage
from .groups import DirectProduct, Group, GroupError, InfiniteDihedral, Integers, verify_folner


class CastleError(ValueError):
    """A construction step failed; the message names the condition."""


@dataclass(frozen=True)
class Tower:
    shape: tuple
    base: CylinderSet


@dataclass
class Castle:
    towers: list
    K: tuple | None = None
    eps: Fraction | None = None
    notes: dict = field(default_factory=dict)

    def to_json(self, X: Subshift, patterns: bool = True) -> dict:
        gp = X.acting
        out = {"towers": [{"shape": [gp.to_json(s) for s in t.shape],
                           "base": _set_json(X, t.base, patterns)} for t in self.towers]}
        if patterns and self.towers:
            r = max(t.base.resolution for t in self.towers)
            out["cells"] = [X.group.to_json(c) for c in X.cells[: X.ncols(r)]]
        if self.K is not None:
            out["folner"] = {"K": [gp.to_json(k) for k in self.K], "eps": fmt(self.eps)}
        return out

    @classmethod
    def from_json(cls, obj: dict, X: Subshift) -> "Castle":
        gp = X.acting
        towers = []
        for t in obj["towers"]:
            shape = tuple(_element(gp, s) for s in t["shape"])
            towers.append(Tower(shape, set_from_json(X, t["base"])))
        K = eps = None
        if "folner" in obj:
            K = tuple(_element(gp, k) for k in obj["folner"]["K"])
            eps = Fraction(obj["folner"]["eps"])
        return cls(towers, K, eps)


def _element(gp: Group, obj):
    return gp.from_json(obj)


def fmt(q) -> str | None:
    if q is None:
        return None
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _set_json(X: Subshift, A: CylinderSet, patterns: bool) -> dict:
    if not patterns:
        return A.to_json()
    pats = X.patterns(A.resolution)
    return {"resolution": A.resolution,
            "atoms": [[X.symbols[i] for i in pats[a]] for a in sorted(A.atoms)]}


def set_from_json(X: Subshift, obj: dict) -> CylinderSet:
    r = int(obj["resolution"])
    atoms = obj["atoms"]
    if all(isinstance(a, int) for a in atoms):
        n = X.num_atoms(r)
        bad = [a for a in atoms if not 0 <= a < n]
        if bad:
            raise CastleError(f"atom ids {bad} outside the language at resolution {r}")
        return CylinderSet(r, frozenset(atoms))
    lookup = {tuple(X.symbols[i] for i in row): a for a, row in enumerate(X.patterns(r))}
    ids = []
    for pat in atoms:
        key = tuple(pat) if isinstance(pat, list) else tuple(pat)
        if key not in lookup:
            raise CastleError(f"pattern {''.join(map(str, key))[:40]}... is not in the language")
        ids.append(lookup[key])
    return CylinderSet(r, frozenset(ids))


# ---------------------------------------------------------------------------
# levels


def levels(X: Subshift, tower: Tower) -> list[tuple[object, CylinderSet]]:
    return [(s, X.translate(s, tower.base)) for s in tower.shape]


def castle_resolution(X: Subshift, c: Castle) -> int:
    return max((t.base.resolution + max(X.length(s) for s in t.shape)
                for t in c.towers if t.shape), default=0)


def covered_set(X: Subshift, c: Castle, r: int | None = None) -> CylinderSet:
    r = castle_resolution(X, c) if r is None else r
    atoms: set = set()
    for t in c.towers:
        for _, L in levels(X, t):
            atoms |= X.refine(L, r).atoms
    return CylinderSet(r, frozenset(atoms))


def remainder_set(X: Subshift, c: Castle, r: int | None = None) -> CylinderSet:
    return X.complement(covered_set(X, c, r))


def remainder_measure(c: Castle, X: Subshift) -> Fraction:
    """Empirical measure of the complement of all levels."""
    return X.measure(remainder_set(X, c))


def shape_defects(X: Subshift, c: Castle, K=None) -> list[Fraction]:
    K = c.K if K is None else K
    return [verify_folner(X.acting, t.shape, K) for t in c.towers]


def verify_castle(c: Castle, X: Subshift, max_witnesses: int = 10) -> dict:
    """Exact pairwise disjointness of all levels, plus Følner defects if declared."""
    r = castle_resolution(X, c)
    owner: dict[int, tuple] = {}
    violations = []
    for i, t in enumerate(c.towers):
        if len(set(t.shape)) != len(t.shape):
            violations.append({"tower": i, "reason": "repeated shape element"})
        for s, L in levels(X, t):
            for a in X.refine(L, r).atoms:
                if a in owner:
                    if len(violations) < max_witnesses:
                        j, s2 = owner[a]
                        violations.append({"atom": int(a), "resolution": r,
                                           "levels": [[j, X.acting.to_json(s2)],
                                                      [i, X.acting.to_json(s)]]})
                    else:
                        violations.append(None)
                else:
                    owner[a] = (i, s)
    report = {"pass": not violations, "resolution": r, "towers": len(c.towers),
              "violations": [v for v in violations if v is not None],
              "violationCount": len(violations),
              "remainderAtoms": X.num_atoms(r) - len(owner)}
    if c.K is not None:
        defects = shape_defects(X, c)
        report["defects"] = [fmt(d) for d in defects]
        report["maxDefect"] = fmt(max(defects, default=Fraction(0)))
        report["folnerPass"] = all(d < c.eps for d in defects)
        report["pass"] = report["pass"] and report["folnerPass"]
    return report


# ---------------------------------------------------------------------------
# Kakutani-Rokhlin


def first_returns(X: Subshift, B: CylinderSet, step) -> tuple[int, dict[int, CylinderSet]]:
    """Split ``B`` by first return time along ``step``.

    Returns ``(H, {k: B_k})`` with all ``B_k`` at resolution ``B.resolution + H``.
    """
    if not B:
        raise CastleError("base is empty")
    gp = X.acting
    parts: dict[int, CylinderSet] = {}
    remaining = B
    k = 0
    while remaining:
        k += 1
        if B.resolution + k > X.depth:
            raise CastleError(f"return time exceeds {k - 1}: base too small for depth {X.depth}")
        E = X.translate(gp.power(step, -k), B)
        hit = X.intersect(remaining, E)
        if hit:
            parts[k] = hit
        remaining = X.difference(remaining, E)
    H = k
    r = B.resolution + H
    return H, {k: X.refine(P, r) for k, P in parts.items()}


def kakutani_rokhlin(X: Subshift, base: CylinderSet, step=1) -> Castle:
    """First-return castle: towers ``({0,..,k-1}, B_k)``."""
    gp = X.acting
    _, parts = first_returns(X, base, step)
    towers = [Tower(tuple(gp.power(step, j) for j in range(k)), Bk) for k, Bk in sorted(parts.items())]
    return Castle(towers)


def return_times(X: Subshift, B: CylinderSet, step=1) -> dict[int, int]:
    """Independent scan: first return time for every base position in the measure window."""
    gp = X.acting
    r = B.resolution
    ids = X.atom_ids(r)
    out: dict[int, int] = {}
    for i in range(X.n_measure):
        g = X.positions[i]
        if ids[i] not in B.atoms:
            continue
        k = 1
        while True:
            j = X.index.get(gp.mul(g, gp.power(step, -k)))
            if j is None or j >= len(ids):
                k = None
                break
            if ids[j] in B.atoms:
                break
            k += 1
        if k is not None:
            out[i] = k
    return out


# ---------------------------------------------------------------------------
# reflection-equivariant castles for the infinite dihedral group


def pair_shape(k: int) -> tuple:
    """``{s^j : 0<=j<k} ∪ {s^i t : 1-k<=i<=0}``: an interval and its mirror."""
    return tuple([(j, 0) for j in range(k)] + [(-i, 1) for i in range(k)])


def symmetric_shape(k: int) -> tuple:
    """Shape for an interval mapped onto itself by the reflection, shifted to contain e."""
    h = k // 2
    return tuple([(p - h, 0) for p in range(h, k)] + [(p - k + 1 + h, 1) for p in range(h)])


def dihedral_castle(X: Subshift, B0: CylinderSet) -> Castle:
    """Exact castle for a D∞-model, built from first returns along ``s``.

    The base ``B = B0 ∪ (st)B0`` is invariant under the reflection ``st``, so
    the reflection ``φ(y) = s^{1-k} t y`` permutes the points with return
    time ``k``.  Points with ``y < φ(y)`` (comparing patterns at the base
    resolution) carry both intervals in one tower; points with
    ``y = φ(y)`` at that resolution get a tower of their own.
    """
    if not isinstance(X.acting, InfiniteDihedral):
        raise CastleError("dihedral_castle needs a model acted on by the infinite dihedral group")
    gp = X.acting
    B = X.union(B0, X.translate((1, 1), B0))
    rB = B.resolution
    H, parts = first_returns(X, B, (1, 0))
    R2 = rB + H
    towers = []
    for k, Bk in sorted(parts.items()):
        g = (1 - k, 1)
        pair, sym = [], []
        for b in sorted(Bk.atoms):
            pos = X.representative(R2, b)
            a1 = X.atom_at(pos, rB)
            a2 = X.atom_at(gp.mul(pos, g), rB)
            if a1 < a2:
                pair.append(b)
            elif a1 == a2:
                sym.append(b)
        if pair:
            towers.append(Tower(pair_shape(k), CylinderSet(R2, frozenset(pair))))
        if sym:
            V = CylinderSet(R2, frozenset(sym))
            towers.append(Tower(symmetric_shape(k), X.translate((k // 2, 0), V)))
    return Castle(towers)


# ---------------------------------------------------------------------------
# lifting through a finite normal subgroup


def fixed_neighbourhood(X: Subshift, r: int) -> CylinderSet:
    """Atoms whose pattern is fixed by some nontrivial kernel element."""
    out: set = set()
    for f in X.kernel:
        if f != X.group.identity:
            out |= X.fixed_atoms(f, r).atoms
    return CylinderSet(r, frozenset(out))


def kernel_orbit(X: Subshift, a: int, r: int) -> set:
    gp = X.group
    return {int(X.pull_map(gp.inv(f), r)[a]) for f in X.kernel}


def lift_castle(qc: Castle, X: Subshift, Y: Subshift, eps=None) -> Castle:
    """Lift a castle of ``Y = X/H`` to ``X`` (``H`` finite).

    Shapes become ``lift(S)·H``; each preimage ``π^-1(V)`` is reduced to one
    atom per ``H``-orbit (lexicographically first), dropping atoms fixed by
    a nontrivial kernel element.
    """
    if X.mode != "blocks" or Y.mode != "quotient":
        raise CastleError("lift_castle needs the blocks model of X and the quotient model Y")
    gp = X.group
    towers = []
    dropped: set = set()
    for t in qc.towers:
        W = preimage(X, Y, t.base)
        r = W.resolution
        N = fixed_neighbourhood(X, r)
        seen: set = set()
        reps = []
        for a in sorted(W.atoms):
            if a in seen:
                continue
            seen |= kernel_orbit(X, a, r)
            if a in N.atoms:
                dropped.add((r, a))
                continue
            reps.append(a)
        shape = tuple(gp.mul(X.lift(s), f) for s in t.shape for f in X.kernel)
        if reps:
            towers.append(Tower(shape, CylinderSet(r, frozenset(reps))))
    K = None
    if qc.K is not None:
        K = tuple(gp.mul(X.lift(k), f) for k in qc.K for f in X.kernel)
    out = Castle(towers, K, qc.eps if eps is None else Fraction(eps))
    out.notes["fixedAtomsDropped"] = len(dropped)
    if eps is not None:
        rem = remainder_measure(out, X)
        if rem > Fraction(eps):
            raise CastleError(f"remainder {fmt(rem)} exceeds eps {fmt(eps)}: grow the window or resolution")
    return out


# ---------------------------------------------------------------------------
# diameters


def resolution_for(eps) -> int:
    """Smallest ``r`` with ``2^-r < eps``."""
    eps = Fraction(eps)
    r = 0
    while Fraction(1, 2 ** r) >= eps:
        r += 1
    return r


def level_diameter_bound(X: Subshift, t: Tower) -> Fraction:
    """Points of ``σB`` agree on ``ball(res(B) - |σ|)``."""
    M = max(X.length(s) for s in t.shape)
    return Fraction(1, 2 ** max(t.base.resolution - M, 0))


def split_for_diameter(X: Subshift, c: Castle, eps) -> Castle:
    """Split bases so that every level has diameter below ``eps``."""
    r_eps = resolution_for(eps)
    towers = []
    for t in c.towers:
        q = r_eps + max(X.length(s) for s in t.shape)
        B = X.refine(t.base, q) if t.base.resolution < q else t.base
        m = X.restrict_map(B.resolution, q)
        groups: dict[int, list] = {}
        for a in sorted(B.atoms):
            groups.setdefault(int(m[a]), []).append(a)
        for key in sorted(groups):
            towers.append(Tower(t.shape, CylinderSet(B.resolution, frozenset(groups[key]))))
    return Castle(towers, c.K, c.eps, dict(c.notes))


# ---------------------------------------------------------------------------
# certificates


def _min_height(defect, eps, limit=512) -> int:
    """Smallest ``k0`` such that ``defect(k) < eps`` for every ``k0 <= k <= limit``."""
    k0 = None
    for k in range(limit, 0, -1):
        if defect(k) < eps:
            k0 = k
        else:
            break
    if k0 is None:
        raise CastleError("no tower height reaches the requested Følner defect")
    return k0


def min_return(X: Subshift, B: CylinderSet, step, limit: int) -> int:
    """First ``k < limit`` with ``B ∩ step^-k B`` nonempty, else ``limit``."""
    gp = X.acting
    for k in range(1, limit):
        if B.resolution + k > X.depth:
            return k
        if not X.disjoint(B, X.translate(gp.power(step, -k), B)):
            return k
    return limit


def choose_base(X: Subshift, r: int, k0: int, reflect: bool) -> CylinderSet | None:
    """First atom at resolution ``r`` (heaviest first) whose base returns no sooner than ``k0``.

    With ``reflect`` the base is closed under ``st`` first.
    """
    counts = X.counts(r)
    order = sorted(range(len(counts)), key=lambda a: (-int(counts[a]), a))
    step = (1, 0) if reflect else X.acting.symmetric_generators()[0]
    for a in order:
        if not counts[a]:
            break
        B = X.atom(r, a)
        if reflect:
            B = X.union(B, X.translate((1, 1), B))
        if min_return(X, B, step, k0) >= k0:
            return X.atom(r, a)
    return None


def af_in_measure_certificate(w, K: Iterable, eps, window: int = 1024, depth: int = 256,
                              split: bool = True, models: dict | None = None,
                              max_depth: int = 768) -> tuple[Castle, dict, Subshift]:
    """Castle with Følner shapes, small levels and small remainder (empirical measure).

    ``ℤ``: first-return castle; ``D∞``: reflection-equivariant castle;
    ``D∞ × F``: castle of the quotient lifted through ``F``.  When the model
    is too shallow for the return times found, it is rebuilt with 1.5 times
    the depth (up to ``max_depth``).
    """
    while True:
        try:
            return _certificate(w, K, eps, window, depth, split, models)
        except _TooShallow as exc:
            if models or depth >= max_depth:
                raise CastleError(str(exc)) from None
            depth = min(max_depth, depth * 3 // 2)


class _TooShallow(CastleError):
    pass


def _certificate(w, K, eps, window, depth, split, models):
    eps = Fraction(eps)
    if eps <= 0:
        raise CastleError("eps must be positive")
    gp = w.group
    K = tuple(gp.check(k) for k in K)
    r_eps = resolution_for(eps)
    models = {} if models is None else models
    if isinstance(gp, Integers):
        X = models.get("X") or Subshift(w, window, depth)
        build = lambda B0: kakutani_rokhlin(X, B0)
        q, Xq, Kq = X, X, K
    elif isinstance(gp, InfiniteDihedral):
        X = models.get("X") or Subshift(w, window, depth)
        Kq = K
        q = Xq = X
        build = lambda B0: dihedral_castle(X, B0)
    elif isinstance(gp, DirectProduct) and gp.extension is not None and \
            isinstance(gp.extension.quotient, InfiniteDihedral):
        X = models.get("X") or Subshift(w, window, depth, mode="blocks")
        Xq = models.get("Y") or Subshift(w, window, depth, mode="quotient")
        Kq = tuple(dict.fromkeys(gp.extension.project(k) for k in K))
        build = lambda B0: dihedral_castle(Xq, B0)
    else:
        raise CastleError(f"no certificate pipeline for {gp.kind}")
    G = Xq.acting
    if isinstance(G, InfiniteDihedral):
        k0 = max(_min_height(lambda k: verify_folner(G, pair_shape(k), Kq), eps),
                 _min_height(lambda k: verify_folner(G, symmetric_shape(k), Kq), eps))
    else:
        k0 = _min_height(lambda k: verify_folner(G, range(k), Kq), eps)
    qc = None
    for r0 in range(r_eps, Xq.depth + 1):
        B0 = choose_base(Xq, r0, k0, isinstance(G, InfiniteDihedral))
        if B0 is None:
            continue
        try:
            cand = build(B0)
        except (CastleError, ResolutionError) as exc:
            raise _TooShallow(f"base search stopped at resolution {r0}: {exc}") from None
        if all(verify_folner(G, t.shape, Kq) < eps for t in cand.towers):
            qc = cand
            break
    if qc is None:
        raise CastleError(f"no base with tower heights >= {k0} within depth {Xq.depth}")
    qc.K, qc.eps = Kq, eps
    qc.notes.update({"baseResolution": r0, "minHeightNeeded": k0})
    if Xq is not X:
        try:
            c = lift_castle(qc, X, Xq, eps)
        except ResolutionError as exc:
            raise _TooShallow(str(exc)) from None
        c.K = K
    else:
        c = qc
    c.notes.update(qc.notes)
    try:
        if split:
            c = split_for_diameter(X, c, eps)
        report = certify_report(c, X, eps)
    except ResolutionError as exc:
        raise _TooShallow(str(exc)) from None
    report["window"], report["depth"] = X.window, X.depth
    return c, report, X


def certify_report(c: Castle, X: Subshift, eps) -> dict:
    eps = Fraction(eps)
    check = verify_castle(c, X)
    rem = remainder_measure(c, X)
    diam = max((level_diameter_bound(X, t) for t in c.towers), default=Fraction(0))
    defects = shape_defects(X, c)
    return {"eps": fmt(eps), "towers": len(c.towers),
            "heights": sorted({len(t.shape) for t in c.towers}),
            "resolution": check["resolution"],
            "disjoint": check["violationCount"] == 0,
            "maxDefect": fmt(max(defects)), "folner": all(d < eps for d in defects),
            "maxLevelDiameter": fmt(diam), "diameter": diam < eps,
            "remainder": fmt(rem), "remainderSmall": rem < eps,
            "pass": check["violationCount"] == 0 and all(d < eps for d in defects)
            and diam < eps and rem < eps,
            "measureNote": "remainder is certified for the empirical measure of the window only",
            **{k: v for k, v in c.notes.items() if isinstance(v, (int, str))}}


# ---------------------------------------------------------------------------
# essential freeness bound


def ess_free_bound(c: Castle, g, X: Subshift) -> dict:
    """Upper estimate for the measure of ``Fix(g)`` from a castle.

    With ``T_i = g^-1 S_i ∩ S_i`` the fixed set misses ``⊔ T_i B_i``, so its
    measure is at most ``μ(⊔ (S_i∖T_i) B_i) + μ(remainder)``.
    """
    gp = X.acting
    g = gp.check(g)
    if g == gp.identity:
        raise CastleError("g must be nontrivial")
    r = castle_resolution(X, c) + X.length(g)
    if r > X.depth:
        raise ResolutionError(f"bound needs resolution {r} beyond depth {X.depth}")
    inner: set = set()
    outer: set = set()
    for t in c.towers:
        S = set(t.shape)
        T = {s for s in t.shape if gp.mul(g, s) in S}   # s in g^-1 S
        for s, L in levels(X, t):
            atoms = X.refine(L, r).atoms
            (inner if s in T else outer).update(atoms)
    rem = X.complement(covered_set(X, c, r))
    fixed = X.fixed_atoms(g, r) if X.mode != "quotient" else X.empty(r)
    witness = sorted(fixed.atoms & inner)
    lhs = X.full(r).atoms - inner
    rhs_parts_disjoint = not (outer & rem.atoms)
    identity_holds = lhs == (outer | rem.atoms) and rhs_parts_disjoint
    bound = Fraction(X.count(CylinderSet(r, frozenset(outer))), X.n_measure) + X.measure(rem)
    return {"g": gp.to_json(g), "resolution": r, "bound": bound,
            "fixedMissesInner": not witness, "witnessAtoms": witness[:5],
            "coverageIdentity": identity_holds,
            "outerMass": Fraction(X.count(CylinderSet(r, frozenset(outer))), X.n_measure),
            "remainder": X.measure(rem)}
