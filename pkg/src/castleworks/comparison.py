"""Subequivalence witnesses on the clopen algebra and the almost-finite upgrade."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .castles import (Castle, CastleError, Tower, fmt, level_diameter_bound, levels,
                      remainder_set, shape_defects, verify_castle)
from .cylinders import CylinderSet, Subshift


class SearchBudgetExceeded(RuntimeError):
    """The backtracking search ran out of nodes before finishing."""


@dataclass
class SubequivalenceWitness:
    pieces: list = field(default_factory=list)   # (CylinderSet, element)

    def to_json(self, X: Subshift) -> list:
        gp = X.acting
        return [[V.to_json(), gp.to_json(s)] for V, s in self.pieces]


@dataclass
class AFWitness:
    castle: Castle
    subsets: list
    remainderWitness: SubequivalenceWitness
    n: int
    report: dict = field(default_factory=dict)


def _merge(pieces: list) -> SubequivalenceWitness:
    by: dict = {}
    order = []
    for V, s in pieces:
        if s not in by:
            by[s] = set()
            order.append((s, V.resolution))
        by[s] |= V.atoms
    return SubequivalenceWitness([(CylinderSet(r, frozenset(by[s])), s) for s, r in order])


def subequivalence_search(X: Subshift, src: CylinderSet, tgt: CylinderSet, translateRadius: int,
                          budget: int = 200_000) -> SubequivalenceWitness | None:
    """Backtracking search for ``src ≺ tgt`` with translates from ``ball(translateRadius)``.

    Returns None only when the whole search space was exhausted; raises
    :class:`SearchBudgetExceeded` when ``budget`` nodes did not suffice.
    """
    src, tgt = X.align(src, tgt)
    if not src:
        return SubequivalenceWitness([])
    gp = X.acting
    r = src.resolution
    R = r + translateRadius
    T = X.refine(tgt, R).atoms
    cands = [s for s in gp.ball(translateRadius)]
    options: dict[int, list] = {}
    for a in sorted(src.atoms):
        opts = []
        A = X.atom(r, a)
        for s in cands:
            img = X.refine(X.translate(s, A), R).atoms
            if img and img <= T:
                opts.append((s, img))
        if not opts:
            return None
        options[a] = opts
    # fewest options first; ties by atom id
    order = sorted(options, key=lambda a: (len(options[a]), a))
    used: set = set()
    chosen: list = []
    nodes = 0

    def dfs(i: int) -> bool:
        nonlocal nodes
        if i == len(order):
            return True
        a = order[i]
        for s, img in options[a]:
            nodes += 1
            if nodes > budget:
                raise SearchBudgetExceeded(f"search budget of {budget} nodes exhausted")
            if used.isdisjoint(img):
                used.update(img)
                chosen.append((X.atom(r, a), s))
                if dfs(i + 1):
                    return True
                chosen.pop()
                used.difference_update(img)
        return False

    return _merge(chosen) if dfs(0) else None


def verify_subequivalence(X: Subshift, wit: SubequivalenceWitness, src: CylinderSet,
                          tgt: CylinderSet) -> bool:
    """Covering, disjoint images and containment, rechecked from scratch."""
    if not wit.pieces:
        return not src
    cover = X.union(*[V for V, _ in wit.pieces])
    if not X.subset(src, cover):
        return False
    images = [X.translate(s, V) for V, s in wit.pieces]
    R = max([im.resolution for im in images] + [tgt.resolution])
    images = [X.refine(im, R) for im in images]
    seen: set = set()
    for im in images:
        if seen & im.atoms:
            return False
        seen |= im.atoms
    return seen <= X.refine(tgt, R).atoms


# ---------------------------------------------------------------------------
# witnesses from castles


def interior(X: Subshift, B: CylinderSet) -> CylinderSet:
    """Atoms of ``B`` whose parent one resolution coarser lies entirely in ``B``."""
    r = B.resolution
    if r == 0:
        return B
    parent = X.restrict_map(r, r - 1)
    outside = {int(parent[a]) for a in range(X.num_atoms(r)) if a not in B.atoms}
    return CylinderSet(r, frozenset(a for a in B.atoms if int(parent[a]) not in outside))


def split_bases(X: Subshift, c: Castle, r: int) -> Castle:
    """Refine bases so that every level ``σ[a]`` sits inside one atom at resolution ``r``."""
    towers = []
    for t in c.towers:
        q = r + max(X.length(s) for s in t.shape)
        B = X.refine(t.base, max(q, t.base.resolution))
        for a in sorted(B.atoms):
            towers.append(Tower(t.shape, X.atom(B.resolution, a)))
    return Castle(towers, c.K, c.eps, dict(c.notes))


def comparison_from_castle(X: Subshift, A: CylinderSet, B: CylinderSet, c: Castle,
                           margins: Sequence | None = None,
                           remainderWitness: SubequivalenceWitness | None = None,
                           translateRadius: int = 4, budget: int = 200_000) -> SubequivalenceWitness | None:
    """``A ≺ B`` from a castle whose towers have room to spare.

    Per tower: ``S1`` = levels meeting ``A``, ``S2`` = levels meeting the
    interior of ``B``; injections ``φ: S1 -> S2`` and ``ψ: S'_i -> S2`` with
    disjoint ranges move the ``A``-levels and (through ``remainderWitness``)
    the part of ``A`` outside the castle.
    """
    if not A:
        return SubequivalenceWitness([])
    gp = X.acting
    Bm = interior(X, B)
    r = max(A.resolution, B.resolution)
    idx = {id(t): i for i, t in enumerate(c.towers)}
    fine = split_bases(X, c, r)
    # margins are indexed by the original towers
    parent = []
    for t in c.towers:
        q = r + max(X.length(s) for s in t.shape)
        parent += [idx[id(t)]] * len(X.refine(t.base, max(q, t.base.resolution)))
    pieces = []
    targets: list = []   # (tower, S'-element -> ψ-element)
    for j, t in enumerate(fine.towers):
        S1, S2 = [], []
        for s, L in levels(X, t):
            if not X.disjoint(L, A):
                S1.append(s)
            if not X.disjoint(L, Bm):
                if X.subset(L, B):
                    S2.append(s)
        Sp = list(margins[parent[j]]) if margins is not None else []
        if len(S1) + len(Sp) >= len(S2) and (S1 or Sp):
            raise CastleError(f"counting condition fails in tower {parent[j]}: "
                              f"|S1|={len(S1)}, |S'|={len(Sp)}, |S2|={len(S2)}")
        phi = {}
        for s in S1:
            phi[s] = s if s in S2 else None
        pool = [s for s in S2 if s not in phi.values()]
        for s in S1:
            if phi[s] is None:
                phi[s] = pool.pop(0)
        psi = {sp: pool.pop(0) for sp in Sp}
        for s in S1:
            move = gp.mul(phi[s], gp.inv(s))
            pieces.append((X.translate(s, t.base), move))
        targets.append((t, psi))
    outside = X.intersect(A, remainder_set(X, c))
    if outside:
        O = X.union(*[X.translate(sp, t.base) for t, psi in targets for sp in psi]) \
            if any(psi for _, psi in targets) else None
        if O is None:
            raise CastleError("A meets the remainder but no margins S'_i were given")
        if remainderWitness is None:
            remainderWitness = subequivalence_search(X, outside, O, translateRadius, budget)
            if remainderWitness is None:
                return None
        for P, g in remainderWitness.pieces:
            P = X.intersect(P, outside)
            if not P:
                continue
            for t, psi in targets:
                for sp, tgt in psi.items():
                    Q = X.intersect(P, X.translate(gp.inv(g), X.translate(sp, t.base)))
                    if Q:
                        pieces.append((Q, gp.mul(gp.mul(tgt, gp.inv(sp)), g)))
    wit = SubequivalenceWitness(pieces)
    if not verify_subequivalence(X, wit, A, B):
        raise CastleError("assembled comparison witness failed verification")
    return wit


# ---------------------------------------------------------------------------
# upgrade


def upgrade_to_af(X: Subshift, cert: Castle, n: int, translateRadius: int = 4,
                  budget: int = 200_000) -> AFWitness | None:
    """Turn a certificate castle into an almost-finiteness witness for ``n``."""
    if n < 1:
        raise ValueError("n must be positive")
    if cert.eps is None or cert.K is None:
        raise CastleError("certificate castle must carry K and eps")
    eps = Fraction(cert.eps)
    small = [len(t.shape) for t in cert.towers if len(t.shape) <= n * (n + 1)]
    if small:
        raise CastleError(f"size precondition |S_i| > n(n+1) = {n * (n + 1)} fails for shapes of size {sorted(set(small))}")
    delta = min(eps, Fraction(1, n + 2))
    rem = remainder_set(X, cert)
    mu_rem = X.measure(rem)
    if not mu_rem < delta:
        raise CastleError(f"remainder measure {fmt(mu_rem)} is not below δ = {fmt(delta)}")
    subsets = []
    for t in cert.towers:
        m = len(t.shape) // (n + 1) + 1
        if not Fraction(m) < Fraction(len(t.shape), n):
            raise CastleError(f"no integer strictly between |S|/(n+1) and |S|/n for |S| = {len(t.shape)}")
        subsets.append(tuple(t.shape[:m]))
    O = X.union(*[X.translate(s, t.base) for t, Sp in zip(cert.towers, subsets) for s in Sp])
    mu_O = X.measure(O)
    if not mu_O > (1 - delta) / (n + 1):
        raise CastleError(f"μ(⊔S'B) = {fmt(mu_O)} is not above (1-δ)/(n+1)")
    wit = subequivalence_search(X, rem, O, translateRadius, budget) if rem else SubequivalenceWitness([])
    if wit is None:
        return None
    out = AFWitness(cert, subsets, wit, n)
    out.report = verify_af(X, out)
    out.report.update({"delta": fmt(delta), "remainderMeasure": fmt(mu_rem), "marginMeasure": fmt(mu_O)})
    return out


def verify_af(X: Subshift, af: AFWitness) -> dict:
    """Recheck the three clauses of almost finiteness for ``af``."""
    c, n = af.castle, af.n
    check = verify_castle(c, X)
    eps = Fraction(c.eps)
    defects = shape_defects(X, c)
    diam = max((level_diameter_bound(X, t) for t in c.towers), default=Fraction(0))
    sizes = all(Fraction(len(t.shape), n + 1) < len(Sp) < Fraction(len(t.shape), n)
                and set(Sp) <= set(t.shape) for t, Sp in zip(c.towers, af.subsets))
    rem = remainder_set(X, c)
    O = X.union(*[X.translate(s, t.base) for t, Sp in zip(c.towers, af.subsets) for s in Sp]) \
        if c.towers else X.empty(0)
    comp = verify_subequivalence(X, af.remainderWitness, rem, O)
    clauses = {"folnerShapes": all(d < eps for d in defects),
               "smallLevels": diam < eps and check["violationCount"] == 0,
               "remainderSubequivalent": comp and sizes}
    return {"n": n, "eps": fmt(eps), "clauses": clauses, "subsetSizes": sizes,
            "pass": all(clauses.values()), "pieces": len(af.remainderWitness.pieces)}
