"""Recurrence sets, syndeticity, balanced witnesses and fixed-pattern counts."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .cylinders import Subshift
from .groups import Group, GroupError, Integers, InfiniteDihedral
from .words import CylinderPattern, ShiftedWord, WordError, WordGenerator


class PeriodicityError(ValueError):
    """The word shows a short period where the argument needs aperiodicity."""


@dataclass(frozen=True)
class RecurrenceReport:
    word: WordGenerator
    pattern: CylinderPattern
    radius: int
    window: tuple
    hits: frozenset

    def to_json(self) -> dict:
        gp = self.word.group
        return {"word": self.word.to_json(),
                "pattern": {"domain": [gp.to_json(c) for c in self.pattern.domain],
                            "symbols": list(self.pattern.symbols)},
                "windowRadius": self.radius,
                "hits": [gp.to_json(g) for g in self.window if g in self.hits]}


@dataclass(frozen=True)
class SyndeticityWitness:
    K: tuple
    m: int
    coreRadius: int


@dataclass(frozen=True)
class BalancedWitness:
    P: frozenset
    period: int | None
    syndetic: SyndeticityWitness


@dataclass
class EmpiricalMeasure:
    resolution: int
    windowRadius: int
    domain: tuple
    table: dict = field(default_factory=dict)   # pattern tuple -> Fraction
    counts: dict = field(default_factory=dict)  # pattern tuple -> int

    def total(self) -> Fraction:
        return sum(self.table.values(), Fraction(0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["pattern", "count", "frequency_numerator", "frequency_denominator"])
        for pat in sorted(self.table):
            f = self.table[pat]
            out.writerow(["".join(pat) if all(len(s) == 1 for s in pat) else " ".join(pat),
                          self.counts[pat], f.numerator, f.denominator])
        return buf.getvalue()


def _window(gp: Group, window) -> tuple[int, list]:
    if isinstance(window, int):
        return window, gp.ball(window)
    elems = list(window)
    return max((gp.length(g) for g in elems), default=0), elems


def recurrence_set(w: WordGenerator, U: CylinderPattern, window) -> RecurrenceReport:
    """``{g in window : (g·w) agrees with U}``; ``window`` is a radius or a set."""
    gp = w.group
    bad = [s for s in U.symbols if s not in w.alphabet]
    if bad:
        raise WordError(f"pattern symbols {bad} not in alphabet {list(w.alphabet)}")
    radius, elems = _window(gp, window)
    items = [(gp.check(i), s) for i, s in zip(U.domain, U.symbols)]
    hits = set()
    for g in elems:
        gi = gp.inv(g)
        if all(w.eval(gp.mul(gi, i)) == s for i, s in items):
            hits.add(g)
    return RecurrenceReport(w, U, radius, tuple(elems), frozenset(hits))


def covers(gp: Group, K: Iterable, hits: Iterable, core: Iterable) -> bool:
    """Whether every element of ``core`` lies in ``K·hits``."""
    hits = set(hits)
    Kinv = [gp.inv(k) for k in K]
    return all(any(gp.mul(ki, c) in hits for ki in Kinv) for c in core)


def syndetic_check(report: RecurrenceReport, maxK: int, hits=None) -> SyndeticityWitness | None:
    """Smallest ``m <= maxK`` with ``ball(R - m) ⊆ ball(m)·hits``."""
    gp = report.word.group
    hits = report.hits if hits is None else frozenset(hits)
    for m in range(min(maxK, report.radius) + 1):
        K = gp.ball(m)
        core = gp.ball(report.radius - m)
        if covers(gp, K, hits, core):
            return SyndeticityWitness(tuple(K), m, report.radius - m)
    return None


def balanced_witness(report: RecurrenceReport, maxK: int) -> BalancedWitness | None:
    """Symmetric syndetic ``P ⊆ hits``: progressions ``pℤ`` first, then ``hits ∩ -hits``."""
    if not isinstance(report.word.group, Integers):
        raise GroupError("balanced witnesses are defined for integer words")
    R = report.radius
    hits = report.hits
    # pZ with p > 2*maxK + 1 cannot be covered by ball(maxK)
    for p in range(1, 2 * maxK + 2):
        P = frozenset(range(-(R // p) * p, R + 1, p))
        if P <= hits:
            wit = syndetic_check(report, maxK, P)
            if wit is not None:
                return BalancedWitness(P, p, wit)
    P = frozenset(h for h in hits if -h in hits)
    wit = syndetic_check(report, maxK, P)
    return BalancedWitness(P, None, wit) if wit is not None else None


def fixed_frequency(X: Subshift, g, resolution: int) -> Fraction:
    return X.measure(X.fixed_atoms(g, resolution))


def fixed_point_frequency(w: WordGenerator, g, resolution: int, windowRadius: int) -> Fraction:
    """Share of positions in ``ball(windowRadius)`` whose pattern is ``g``-fixed.

    Upper-bound evidence only: a fixed pattern is necessary, not sufficient,
    for the point to be fixed.
    """
    if resolution > windowRadius:
        raise GroupError("resolution exceeds window radius")
    X = Subshift(w, windowRadius, resolution)
    return fixed_frequency(X, w.group.check(g), resolution)


def stabilizer_probe(w: WordGenerator, depth: int, candidateRadius: int) -> set:
    """``g`` in ``ball(candidateRadius)`` with ``g·w = w`` on ``ball(depth)``."""
    gp = w.group
    dom = gp.ball(depth)
    base = [w.eval(h) for h in dom]
    out = set()
    for g in gp.ball(candidateRadius):
        gi = gp.inv(g)
        if all(w.eval(gp.mul(gi, h)) == v for h, v in zip(dom, base)):
            out.add(g)
    return out


def dihedral_fixedset_report(w: WordGenerator, n: int, kRange: int, resolution: int,
                             window: int = 1024, X: Subshift | None = None) -> dict:
    """Pattern-level check of ``s^k X_n ⊆ X_{2k+n}`` with ``X_m = Fix(s^m t)``.

    ``s^k`` maps the radius-``ρ`` approximation of ``X_n`` into the radius
    ``ρ - |k|`` approximation of ``X_{2k+n}``; disjointness is checked at ``ρ``.
    """
    if not isinstance(w.group, InfiniteDihedral):
        raise GroupError("dihedral_fixedset_report needs a word over the infinite dihedral group")
    if kRange > resolution:
        raise GroupError("kRange must not exceed the resolution")
    rho = resolution
    if X is None:
        X = Subshift(w, window, rho + kRange)
    for p in range(1, 2 * kRange + 1):
        per = X.fixed_atoms((p, 0), rho)
        if per:
            raise PeriodicityError(f"patterns of radius {rho} with period {p} occur in the window")
    Xn = X.fixed_atoms((n, 1), rho)
    rows = []
    contained = disjoint = True
    total = Fraction(0)
    for k in range(-kRange, kRange + 1):
        img = X.translate((k, 0), Xn)
        m = 2 * k + n
        coarse = X.fixed_atoms((m, 1), rho - abs(k))
        fine = X.fixed_atoms((m, 1), rho)
        inside = X.subset(img, coarse)
        apart = True if k == 0 else X.disjoint(Xn, fine)
        freq = X.measure(img)
        contained &= inside
        disjoint &= apart
        total += freq
        rows.append({"k": k, "m": m, "contained": inside, "disjoint": apart,
                     "frequency": freq})
    return {"n": n, "kRange": kRange, "resolution": rho, "windowRadius": X.window,
            "fixedAtoms": len(Xn), "frequencyOfXn": X.measure(Xn),
            "containment": contained, "disjointness": disjoint,
            "frequencySum": total, "frequencySumAtMostOne": total <= 1, "rows": rows}


def empirical_measure(w: WordGenerator, resolution: int, windowRadius: int,
                      base=None) -> EmpiricalMeasure:
    """Pattern frequencies over ``ball(windowRadius)`` (optionally around ``base·w``)."""
    if resolution > windowRadius:
        raise GroupError("resolution exceeds window radius")
    if base is not None and base != w.group.identity:
        w = ShiftedWord(base, w)
    X = Subshift(w, windowRadius, resolution)
    counts = X.counts(resolution)
    pats = X.patterns(resolution)
    em = EmpiricalMeasure(resolution, windowRadius, tuple(X.cells[: X.ncols(resolution)]))
    for a, row in enumerate(pats):
        c = int(counts[a])
        if c:
            key = tuple(X.symbols[i] for i in row)
            em.counts[key] = c
            em.table[key] = Fraction(c, X.n_measure)
    return em


def toeplitz_period_for(w, domain: Sequence[int]) -> int | None:
    """Period ``p`` with ``pℤ`` inside the recurrence set of any pattern on ``domain``.

    Stage periods divide each other, so the largest controlling period works.
    None when some cell is only reached by the fill symbol.
    """
    ps = [w.controlling_period(i) for i in domain]
    if not ps or any(p is None for p in ps):
        return None
    return max(ps)
