from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from castleworks.cylinders import (CylinderSet, ResolutionError, Subshift, cylinder_algebra,
                                   preimage, projection_map, union_all)
from castleworks.groups import GroupError
from castleworks.words import CylinderPattern, PeriodicWord, amplify, pattern_at, period_doubling

from conftest import complete_pd


@pytest.fixture(scope="module")
def XD():
    return Subshift(amplify(complete_pd()), 128, 16)


@pytest.fixture(scope="module")
def XZ():
    return Subshift(period_doubling(), 256, 12)


def brute_symbols(X, w, g, r):
    return pattern_at(w, g, X.cells[: X.ncols(r)])


def test_period_doubling_radius1_counts(XZ):
    # direct window count of the 3-blocks around n in [-256, 256]
    expected = {"000": 85, "001": 86, "010": 171, "100": 85, "101": 86}
    cells = XZ.cells[: XZ.ncols(1)]
    got = {}
    for a, row in enumerate(XZ.patterns(1)):
        by_cell = dict(zip(cells, (XZ.symbols[i] for i in row)))
        got["".join(by_cell[c] for c in (-1, 0, 1))] = int(XZ.counts(1)[a])
    assert got == expected
    assert sum(got.values()) == XZ.n_measure == 513


@pytest.mark.parametrize("p", [1, 2, 3, 5, 12])
def test_periodic_language(p):
    cyc = "001011010111"[:p] if p == 12 else "".join("01"[i % 2] for i in range(p - 1)) + "1"
    w = PeriodicWord(cyc)
    distinct = len({cyc[i:] + cyc[:i] for i in range(p)})
    X = Subshift(w, 4 * p, 2 * p)
    assert X.num_atoms(2 * p) == distinct
    assert X.measure(X.full(0)) == 1


def test_translate_matches_brute_force(XD):
    w = XD.word
    D = XD.acting
    r = 3
    A = CylinderSet(r, frozenset(range(0, XD.num_atoms(r), 2)))
    pats = {tuple(XD.symbols[i] for i in XD.patterns(r)[a]) for a in A.atoms}
    for k in [(1, 0), (0, 1), (-2, 1), (3, 0)]:
        kA = XD.translate(k, A)
        assert kA.resolution == r + D.length(k)
        for g in D.ball(60):
            inside = XD.atom_at(g, kA.resolution) in kA.atoms
            # y_g lies in kA iff the pattern seen from g·k lies in A
            assert inside == (brute_symbols(XD, w, D.mul(g, k), r) in pats)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(n, e) for n in range(-3, 4) for e in (0, 1) if abs(n) + e <= 3]),
       st.sampled_from([(n, e) for n in range(-3, 4) for e in (0, 1) if abs(n) + e <= 3]),
       st.integers(0, 2**30))
def test_translate_composes(g, h, seed):
    X = Subshift(amplify(complete_pd()), 64, 12)
    rng = np.random.default_rng(seed)
    r = 2
    atoms = frozenset(int(a) for a in np.flatnonzero(rng.random(X.num_atoms(r)) < 0.5))
    A = CylinderSet(r, atoms)
    lhs = X.translate(g, X.translate(h, A))
    rhs = X.translate(X.acting.mul(g, h), A)
    assert X.equal(lhs, rhs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2**30))
def test_boolean_algebra(ra, rb, seed):
    X = Subshift(period_doubling(), 64, 8)
    rng = np.random.default_rng(seed)

    def rand(r):
        return CylinderSet(r, frozenset(int(a) for a in np.flatnonzero(rng.random(X.num_atoms(r)) < 0.4)))
    A, B = rand(ra), rand(rb)
    U, I = X.union(A, B), X.intersect(A, B)
    assert X.measure(U) + X.measure(I) == X.measure(A) + X.measure(B)
    assert X.measure(X.complement(A)) == 1 - X.measure(A)
    assert X.equal(X.difference(A, B), X.intersect(A, X.complement(B)))
    assert X.subset(I, A) and X.subset(A, U)
    assert X.disjoint(X.difference(A, B), B)
    assert X.measure(X.refine(A, 7)) == X.measure(A)


def test_cylinder_from_pattern(XZ):
    U = CylinderPattern((0, 1), ("1", "0"))
    C = XZ.cylinder(U)
    for n in range(-50, 50):
        seen = XZ.atom_at(n, C.resolution) in C.atoms
        assert seen == (XZ.word.eval(n) == "1" and XZ.word.eval(n + 1) == "0")


def test_resolution_guard(XZ):
    with pytest.raises(ResolutionError):
        XZ.full(13)
    with pytest.raises(ResolutionError):
        XZ.translate(2, XZ.full(11))


def test_measure_counts_window(XZ):
    A = XZ.cylinder(CylinderPattern((0,), ("1",)))
    ones = sum(XZ.word.eval(n) == "1" for n in range(-256, 257))
    assert XZ.measure(A) == Fraction(ones, 513)


def test_blocks_and_quotient(x0):
    Xb = Subshift(x0, 32, 6, mode="blocks")
    Xq = Subshift(x0, 32, 6, mode="quotient")
    f = ((0, 0), 1)
    for r in (0, 3, 6):
        assert Xb.length(f) == 0
        m = projection_map(Xb, Xq, r)
        # the kernel permutes atoms and never changes the projection
        A = Xb.full(r)
        for a in range(Xb.num_atoms(r)):
            fa = Xb.translate(f, Xb.atom(r, a))
            assert len(fa) == 1 and fa.resolution == r
            assert m[next(iter(fa.atoms))] == m[a]
        V = CylinderSet(r, frozenset([0]))
        assert Xb.measure(preimage(Xb, Xq, V)) == Xq.measure(V)
        assert Xb.measure(A) == 1
    with pytest.raises(GroupError):
        Xq.fixed_atoms(f, 2)
    with pytest.raises(GroupError):
        Subshift(amplify(complete_pd()), 8, 2, mode="blocks")


def test_fixed_atoms_periodic():
    X = Subshift(PeriodicWord("011"), 30, 6)
    assert X.fixed_atoms(3, 6) == X.full(6)
    assert not X.fixed_atoms(1, 6)


def test_json_and_helpers(XZ):
    A = XZ.atom(2, 1)
    assert A.to_json() == {"resolution": 2, "atoms": [1]}
    pats = A.to_json(XZ)["atoms"]
    assert len(pats) == 1
    B = XZ.atom(2, 0)
    assert cylinder_algebra(XZ, "union", A, B) == XZ.union(A, B)
    assert union_all(XZ, [A, B], 4) == XZ.refine(XZ.union(A, B), 4)
    assert union_all(XZ, [], 3) == XZ.empty(3)
    with pytest.raises(ValueError):
        cylinder_algebra(XZ, "xor", A, B)
