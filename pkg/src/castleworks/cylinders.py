"""Finite models of subshifts and their clopen algebras.

The orbit closure of a word is approximated by the set of points
``y_g = g^-1 · w`` with ``g`` in a ball of positions.  An *atom* at
resolution ``r`` is a pattern on ``ball(r)``; the language ``L_r`` collects
the atoms seen at positions ``ball(window + depth - r)``.  Shrinking the
position set as ``r`` grows makes every sub-pattern (at any offset inside
``ball(r')``) of an ``L_r'`` atom an element of ``L_r``, so translation and
restriction never leave the language.

The empirical measure counts positions in ``ball(window)``.

A :class:`CylinderSet` is a resolution together with a set of atom ids.  Ids
index the lexicographically sorted language, so they are deterministic.

For an extension ``Γ -> G`` with finite kernel ``H`` two more models exist.
Both use the cells ``lift(c)·h`` with ``c`` in ``ball_G(r)``, a domain that
``H`` permutes.

* ``mode="blocks"``: the ``Γ``-subshift itself, with positions
  ``lift(ball_G(·))·H``.  Kernel elements act on atoms without changing
  the resolution.
* ``mode="quotient"``: ``X/H`` as a ``G``-subshift.  Each row is replaced by
  the lexicographically least member of its ``H``-orbit.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import kernels
from .groups import Group, GroupError
from .words import CylinderPattern, WordGenerator


class ResolutionError(ValueError):
    """Requested resolution lies beyond the validated depth."""


@dataclass(frozen=True)
class CylinderSet:
    resolution: int
    atoms: frozenset

    def __len__(self):
        return len(self.atoms)

    def __bool__(self):
        return bool(self.atoms)

    def to_json(self, X: "Subshift | None" = None) -> dict:
        if X is None:
            return {"resolution": self.resolution, "atoms": sorted(int(a) for a in self.atoms)}
        return {"resolution": self.resolution,
                "atoms": [X.pattern_json(self.resolution, a) for a in sorted(self.atoms)]}


class Subshift:
    """Finite window onto the orbit closure of ``word``."""

    def __init__(self, word: WordGenerator, window: int, depth: int, mode: str = "plain"):
        if window < 0 or depth < 0:
            raise GroupError("window and depth must be non-negative")
        if mode not in ("plain", "blocks", "quotient"):
            raise GroupError(f"unknown subshift mode {mode!r}")
        gp = word.group
        self.word = word
        self.group = gp
        self.window = window
        self.depth = depth
        self.mode = mode
        if mode == "plain":
            self.base = self.acting = gp
            self.lift = lambda g: g
            self.project = lambda g: g
            self.kernel = [gp.identity]
        else:
            ext = gp.extension
            if ext is None or ext.kernel_elements is None:
                raise GroupError(f"{mode} model needs an extension with a finite kernel")
            self.base = ext.quotient
            self.acting = gp if mode == "blocks" else ext.quotient
            self.lift = ext.lift
            self.project = ext.project
            self.kernel = list(ext.kernel_elements())
        B = self.base
        self.cells = [gp.mul(self.lift(c), h) for c in B.ball(depth) for h in self.kernel]
        per = len(self.kernel) if mode == "blocks" else 1
        self._per = per
        if mode == "blocks":
            self.positions = [gp.mul(self.lift(p), h) for p in B.ball(window + depth)
                              for h in self.kernel]
        else:
            self.positions = list(B.ball(window + depth))
        self.index = {g: i for i, g in enumerate(self.positions)}
        self.n_measure = len(B.ball(window)) * per
        self.symbols: list[str] = list(getattr(word, "alphabet", ()))
        self._sym = {s: i for i, s in enumerate(self.symbols)}
        self.values = self._materialize()
        if mode == "quotient" and len(self.kernel) > 1:
            self.values = self._canonicalize(self.values)
        self._langs: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._pulls: dict = {}
        self._restricts: dict = {}

    @property
    def quotient(self) -> bool:
        return self.mode == "quotient"

    def length(self, k) -> int:
        """Resolution cost of translating by ``k``."""
        if self.mode == "blocks":
            return self.base.length(self.project(k))
        return self.acting.length(k)

    def locate_products(self, rows: np.ndarray, k) -> np.ndarray:
        """Row indices of ``positions[i]·k`` for ``i`` in ``rows``."""
        A = self.acting
        if A.vectorized:
            if not hasattr(self, "_pos_codes"):
                codes = np.array([A.encode(g) for g in self.positions], dtype=np.int64)
                self._pos_order = np.argsort(codes, kind="stable")
                self._pos_codes = codes[self._pos_order]
                self._codes = codes
            prod = A.vec_mul(self._codes[rows], np.int64(A.encode(k)))
            at = np.searchsorted(self._pos_codes, prod)
            if len(prod) and (at.max() >= len(self._pos_codes) or
                              (self._pos_codes[at] != prod).any()):
                raise ResolutionError("translate leaves the position window")
            return self._pos_order[at]
        mul, pos, index = A.mul, self.positions, self.index
        return np.array([index[mul(pos[i], k)] for i in rows.tolist()], dtype=np.int64)

    # construction -----------------------------------------------------
    def _symbol_id(self, s: str) -> int:
        i = self._sym.get(s)
        if i is None:
            i = self._sym[s] = len(self.symbols)
            self.symbols.append(s)
        return i

    def _materialize(self) -> np.ndarray:
        gp, w = self.group, self.word
        rows = self.positions if self.mode == "blocks" else [self.lift(g) for g in self.positions]
        if gp.vectorized:
            rc = np.array([gp.encode(g) for g in rows], dtype=np.int64)
            cc = np.array([gp.encode(c) for c in self.cells], dtype=np.int64)
            prod = gp.vec_mul(rc[:, None], cc[None, :])
            codes, inverse = np.unique(prod, return_inverse=True)
            sym = np.array([self._symbol_id(w.eval(gp.decode(c))) for c in codes], dtype=np.int32)
            return np.ascontiguousarray(sym[inverse.reshape(prod.shape)])
        out = np.empty((len(rows), len(self.cells)), dtype=np.int32)
        for i, g in enumerate(rows):
            for j, c in enumerate(self.cells):
                out[i, j] = self._symbol_id(w.eval(gp.mul(g, c)))
        return out

    def _canonicalize(self, V: np.ndarray) -> np.ndarray:
        # (h·x)(cell) = x(h^-1 cell); h^-1 lift(c) k stays in the block of c
        gp = self.group
        where = {c: j for j, c in enumerate(self.cells)}
        best = V
        for h in self.kernel[1:]:
            hi = gp.inv(h)
            perm = np.array([where[gp.mul(hi, c)] for c in self.cells], dtype=np.int64)
            cand = V[:, perm]
            diff = cand != best
            first = diff.argmax(axis=1)
            rows = np.arange(V.shape[0])
            less = diff.any(axis=1) & (cand[rows, first] < best[rows, first])
            best = np.where(less[:, None], cand, best)
        return np.ascontiguousarray(best)

    # languages --------------------------------------------------------
    def _check(self, r: int):
        if not 0 <= r <= self.depth:
            raise ResolutionError(f"resolution {r} outside validated range [0, {self.depth}]")

    def ncols(self, r: int) -> int:
        return len(self.base.ball(r)) * len(self.kernel)

    def nrows(self, r: int) -> int:
        return len(self.base.ball(self.window + self.depth - r)) * self._per

    def _lang(self, r: int):
        # ids at r extend ids at r-1 by the new columns; sorting the pair
        # (prefix id, new columns) reproduces lexicographic order
        self._check(r)
        if r not in self._langs:
            lo = max((q for q in self._langs if q < r), default=None)
            if lo is None:
                P = self.values[: self.nrows(0), : self.ncols(0)]
                _, first, inv = np.unique(P, axis=0, return_index=True, return_inverse=True)
                self._langs[0] = (first, inv.reshape(-1).astype(np.int64))
                lo = 0
            for q in range(lo + 1, r + 1):
                n = self.nrows(q)
                prev = self._langs[q - 1][1][:n]
                M = np.column_stack([prev, self.values[:n, self.ncols(q - 1): self.ncols(q)]])
                _, first, inv = np.unique(M, axis=0, return_index=True, return_inverse=True)
                self._langs[q] = (first, inv.reshape(-1).astype(np.int64))
        return self._langs[r]

    def patterns(self, r: int) -> np.ndarray:
        """Language ``L_r`` as a matrix, one atom per row (row index = atom id)."""
        first = self._lang(r)[0]
        return np.ascontiguousarray(self.values[first, : self.ncols(r)])

    def atom_ids(self, r: int) -> np.ndarray:
        """Atom id of every position in ``ball(window + depth - r)``."""
        return self._lang(r)[1]

    def representative(self, r: int, atom: int):
        return self.positions[int(self._lang(r)[0][atom])]

    def num_atoms(self, r: int) -> int:
        return len(self._lang(r)[0])

    def atom_at(self, g, r: int) -> int:
        return int(self.atom_ids(r)[self.index[g]])

    def pattern(self, r: int, atom: int) -> CylinderPattern:
        row = self.patterns(r)[atom]
        cells = self.cells[: self.ncols(r)]
        return CylinderPattern(tuple(cells), tuple(self.symbols[i] for i in row))

    def pattern_json(self, r: int, atom: int) -> dict:
        p = self.pattern(r, atom)
        gp = self.group
        return {"domain": [gp.to_json(c) for c in p.domain], "symbols": list(p.symbols)}

    def counts(self, r: int) -> np.ndarray:
        """Number of measure positions in each atom."""
        return np.bincount(self.atom_ids(r)[: self.n_measure], minlength=self.num_atoms(r))

    # cylinder algebra -------------------------------------------------
    def full(self, r: int) -> CylinderSet:
        return CylinderSet(r, frozenset(range(self.num_atoms(r))))

    def empty(self, r: int) -> CylinderSet:
        self._check(r)
        return CylinderSet(r, frozenset())

    def atom(self, r: int, a: int) -> CylinderSet:
        return CylinderSet(r, frozenset([int(a)]))

    def cylinder(self, pattern: CylinderPattern) -> CylinderSet:
        """All atoms extending a pattern given on cells (group elements)."""
        where = {c: j for j, c in enumerate(self.cells)}
        try:
            cols = [where[c] for c in pattern.domain]
        except KeyError as exc:
            raise ResolutionError(f"cell {exc.args[0]!r} beyond depth {self.depth}") from None
        r = 0
        while self.ncols(r) <= max(cols, default=-1):
            r += 1
        target = [self._sym.get(s, -1) for s in pattern.symbols]
        mask = kernels.match_rows(self.patterns(r), cols, target)
        return CylinderSet(r, frozenset(np.flatnonzero(mask).tolist()))

    def restrict_map(self, r2: int, r: int) -> np.ndarray:
        """For each atom at ``r2 >= r`` its restriction (an atom id at ``r``)."""
        key = (r2, r)
        if key not in self._restricts:
            if r2 < r:
                raise ResolutionError("cannot restrict to a finer resolution")
            first = self._lang(r2)[0]
            self._restricts[key] = self.atom_ids(r)[first]
        return self._restricts[key]

    def refine(self, A: CylinderSet, r: int) -> CylinderSet:
        if r == A.resolution:
            return A
        m = self.restrict_map(r, A.resolution)
        keep = np.isin(m, np.fromiter(A.atoms, dtype=np.int64, count=len(A.atoms)))
        return CylinderSet(r, frozenset(np.flatnonzero(keep).tolist()))

    def align(self, *sets: CylinderSet) -> list[CylinderSet]:
        r = max(s.resolution for s in sets)
        return [self.refine(s, r) for s in sets]

    def union(self, *sets: CylinderSet) -> CylinderSet:
        al = self.align(*sets)
        return CylinderSet(al[0].resolution, frozenset().union(*(s.atoms for s in al)))

    def intersect(self, A: CylinderSet, B: CylinderSet) -> CylinderSet:
        a, b = self.align(A, B)
        return CylinderSet(a.resolution, a.atoms & b.atoms)

    def difference(self, A: CylinderSet, B: CylinderSet) -> CylinderSet:
        a, b = self.align(A, B)
        return CylinderSet(a.resolution, a.atoms - b.atoms)

    def complement(self, A: CylinderSet) -> CylinderSet:
        return CylinderSet(A.resolution, self.full(A.resolution).atoms - A.atoms)

    def subset(self, A: CylinderSet, B: CylinderSet) -> bool:
        a, b = self.align(A, B)
        return a.atoms <= b.atoms

    def equal(self, A: CylinderSet, B: CylinderSet) -> bool:
        a, b = self.align(A, B)
        return a.atoms == b.atoms

    def disjoint(self, A: CylinderSet, B: CylinderSet) -> bool:
        a, b = self.align(A, B)
        return not (a.atoms & b.atoms)

    def pull_map(self, k, r: int) -> np.ndarray:
        """For each atom ``b`` at ``r + |k|``: the atom at ``r`` of ``k^-1·b``."""
        key = (k, r)
        if key not in self._pulls:
            r2 = r + self.length(k)
            first = self._lang(r2)[0]
            self._pulls[key] = self.atom_ids(r)[self.locate_products(first, k)]
        return self._pulls[key]

    def translate(self, k, A: CylinderSet) -> CylinderSet:
        """``k·A`` at resolution ``A.resolution + |k|``."""
        k = self.acting.check(k)
        if k == self.acting.identity:
            return A
        r2 = A.resolution + self.length(k)
        self._check(r2)
        m = self.pull_map(k, A.resolution)
        keep = np.isin(m, np.fromiter(A.atoms, dtype=np.int64, count=len(A.atoms)))
        return CylinderSet(r2, frozenset(np.flatnonzero(keep).tolist()))

    def count(self, A: CylinderSet) -> int:
        c = self.counts(A.resolution)
        return int(sum(int(c[a]) for a in A.atoms))

    def measure(self, A: CylinderSet) -> Fraction:
        """Empirical frequency of ``A`` over positions in ``ball(window)``."""
        return Fraction(self.count(A), self.n_measure)

    def atom_measure(self, r: int, a: int) -> Fraction:
        return Fraction(int(self.counts(r)[a]), self.n_measure)

    @staticmethod
    def diameter_bound(A: CylinderSet) -> Fraction:
        """Upper bound ``2^-r`` on the diameter of every atom of ``A``."""
        return Fraction(1, 2 ** A.resolution)

    # fixed patterns ---------------------------------------------------
    def fixed_atoms(self, k, r: int) -> CylinderSet:
        """Atoms whose pattern is unchanged by ``k`` wherever both cells are seen."""
        if self.quotient:
            raise GroupError("fixed_atoms is defined on the plain model only")
        gp = self.group
        cells = self.cells[: self.ncols(r)]
        where = {c: j for j, c in enumerate(cells)}
        ki = gp.inv(k)
        a, b = [], []
        for j, c in enumerate(cells):
            i = where.get(gp.mul(ki, c))
            if i is not None and i != j:
                a.append(j)
                b.append(i)
        mask = kernels.match_pairs(self.patterns(r), a, b)
        return CylinderSet(r, frozenset(np.flatnonzero(mask).tolist()))


def projection_map(X: Subshift, Y: Subshift, r: int) -> np.ndarray:
    """Factor map ``X -> X/H`` on atoms at resolution ``r`` (blocks model to quotient model)."""
    if X.mode != "blocks" or Y.mode != "quotient" or Y.group is not X.group:
        raise GroupError("projection needs the blocks model of X and the quotient model of the same group")
    key = ("proj", id(Y), r)
    if key not in X._pulls:
        first = X._lang(r)[0]
        ids = Y.atom_ids(r)
        X._pulls[key] = np.array([ids[Y.index[X.project(X.positions[i])]] for i in first.tolist()],
                                 dtype=np.int64)
    return X._pulls[key]


def preimage(X: Subshift, Y: Subshift, V: CylinderSet) -> CylinderSet:
    """``π^-1(V)`` at the resolution of ``V``."""
    m = projection_map(X, Y, V.resolution)
    keep = np.isin(m, np.fromiter(V.atoms, dtype=np.int64, count=len(V.atoms)))
    return CylinderSet(V.resolution, frozenset(np.flatnonzero(keep).tolist()))


def cylinder_algebra(X: Subshift, op: str, A: CylinderSet, B: CylinderSet | None = None,
                     g=None, resolution: int | None = None) -> CylinderSet:
    if op == "union":
        return X.union(A, B)
    if op == "intersect":
        return X.intersect(A, B)
    if op == "complement":
        return X.complement(A)
    if op == "difference":
        return X.difference(A, B)
    if op == "translate":
        return X.translate(g, A)
    if op == "refine":
        return X.refine(A, resolution)
    raise ValueError(f"unknown cylinder operation {op!r}")


def union_all(X: Subshift, sets: Iterable[CylinderSet], resolution: int | None = None) -> CylinderSet:
    sets = list(sets)
    if not sets:
        return X.empty(resolution or 0)
    out = X.union(*sets)
    return X.refine(out, resolution) if resolution is not None and resolution > out.resolution else out
