"""Exact arithmetic for the acting groups.

Element encodings (all hashable, immutable):

* integers: ``int``
* finite-table: ``int`` index into the multiplication table
* dihedral-infinite: ``(n, r)`` meaning ``s**n t**r``
* direct-product: ``(left, right)``
* lamplighter: :class:`LampElement` ``(lo, code, shift)``; the lamp
  configuration is packed into ``code`` as base-``q`` digits starting at
  position ``lo`` (``q`` = order of the lamp group, digit 0 = identity)

Cardinalities and Følner defects are :class:`fractions.Fraction`; nothing in
this module touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, NamedTuple, Sequence

Element = Hashable

#: default resource guard for ball enumeration
BALL_CAP = 10**7


class GroupError(ValueError):
    """Invalid element, descriptor or precondition."""


class ResourceCapError(RuntimeError):
    """An enumeration would exceed the configured cap."""


class LampElement(NamedTuple):
    lo: int
    code: int
    shift: int


class Group:
    """Base class: subclasses implement the group law."""

    kind: str = "abstract"

    def __init__(self, generators: Sequence[Element] | None = None,
                 extension: str | None = None, cap: int = BALL_CAP):
        self.generators = list(generators) if generators is not None else self.default_generators()
        for g in self.generators:
            self.check(g)
        self.extension_kind = extension
        self.cap = cap
        self._balls: dict[int, list[Element]] = {}
        self._extension: Extension | None = None

    # group law --------------------------------------------------------
    @property
    def identity(self) -> Element:
        raise NotImplementedError

    def mul(self, g: Element, h: Element) -> Element:
        raise NotImplementedError

    def inv(self, g: Element) -> Element:
        raise NotImplementedError

    def is_element(self, g) -> bool:
        raise NotImplementedError

    def default_generators(self) -> list[Element]:
        raise NotImplementedError

    def check(self, g) -> Element:
        if not self.is_element(g):
            raise GroupError(f"{g!r} is not an element of {self.kind}")
        return g

    def sort_key(self, g: Element):
        return g

    # derived ----------------------------------------------------------
    def power(self, g: Element, n: int) -> Element:
        base = g if n >= 0 else self.inv(g)
        out = self.identity
        for _ in range(abs(n)):
            out = self.mul(out, base)
        return out

    def symmetric_generators(self) -> list[Element]:
        out: list[Element] = []
        for g in self.generators:
            for x in (g, self.inv(g)):
                if x != self.identity and x not in out:
                    out.append(x)
        return out

    def ball(self, radius: int) -> list[Element]:
        """Elements of word length <= radius, ordered by (length, sort_key).

        Because of the ordering, ``ball(r)`` is a prefix of ``ball(r + 1)``.
        """
        if radius < 0:
            raise GroupError("radius must be non-negative")
        if radius in self._balls:
            return self._balls[radius]
        gens = self.symmetric_generators()
        if not gens and radius > 0:
            raise GroupError("ball() needs at least one non-trivial generator")
        layers = [[self.identity]]
        seen = {self.identity}
        for _ in range(radius):
            nxt = set()
            for g in layers[-1]:
                for a in gens:
                    x = self.mul(a, g)
                    if x not in seen:
                        nxt.add(x)
            seen |= nxt
            if len(seen) > self.cap:
                raise ResourceCapError(
                    f"ball of radius {radius} exceeds cap {self.cap} in {self.kind}")
            layers.append(sorted(nxt, key=self.sort_key))
        out = [g for layer in layers for g in layer]
        self._balls[radius] = out
        return out

    def length(self, g: Element, limit: int = 10**4) -> int:
        """Word length with respect to the symmetric generating set."""
        r = 0
        while True:
            if g in set(self.ball(r)):
                return r
            r += 1
            if r > limit:
                raise ResourceCapError(f"word length of {g!r} exceeds {limit}")

    # integer codes for vectorized multiplication (optional) ------------
    vectorized = False

    def encode(self, g: Element) -> int:
        raise NotImplementedError

    def decode(self, c: int) -> Element:
        raise NotImplementedError

    def vec_mul(self, a, b):
        """Elementwise product of numpy code arrays (broadcasting)."""
        raise NotImplementedError

    # json -------------------------------------------------------------
    def to_json(self, g: Element):
        return g

    def from_json(self, obj) -> Element:
        return self.check(obj)

    # extension --------------------------------------------------------
    @property
    def extension(self) -> "Extension | None":
        if self.extension_kind is None:
            return None
        if self._extension is None:
            self._extension = build_extension(self, self.extension_kind)
        return self._extension

    def describe(self) -> dict:
        return {"kind": self.kind,
                "generators": [self.to_json(g) for g in self.generators],
                **({"extension": {"kind": self.extension_kind}} if self.extension_kind else {})}

    def __repr__(self):
        return f"<{self.kind} group>"


class Integers(Group):
    kind = "integers"

    @property
    def identity(self):
        return 0

    def mul(self, g, h):
        return g + h

    def inv(self, g):
        return -g

    def is_element(self, g):
        return isinstance(g, int) and not isinstance(g, bool)

    def default_generators(self):
        return [1]

    def sort_key(self, g):
        return (abs(g), g < 0)

    vectorized = True

    def encode(self, g):
        return g

    def decode(self, c):
        return int(c)

    def vec_mul(self, a, b):
        return a + b

    def length(self, g, limit=10**4):
        if self.generators == [1] or self.generators == [-1]:
            return abs(g)
        return super().length(g, limit)


class FiniteGroup(Group):
    """Group given by an explicit multiplication table ``table[i][j] = i*j``."""

    kind = "finite-table"

    def __init__(self, table: Sequence[Sequence[int]], generators=None, extension=None,
                 names: Sequence[str] | None = None):
        self.table = tuple(tuple(int(x) for x in row) for row in table)
        self.order = len(self.table)
        self._validate()
        self.names = list(names) if names is not None else [str(i) for i in range(self.order)]
        super().__init__(generators, extension)

    def _validate(self):
        n = self.order
        if n == 0 or any(len(row) != n for row in self.table):
            raise GroupError("multiplication table must be square and non-empty")
        T = self.table
        if any(not 0 <= x < n for row in T for x in row):
            raise GroupError("table entries out of range")
        ids = [e for e in range(n) if all(T[e][x] == x and T[x][e] == x for x in range(n))]
        if not ids:
            raise GroupError("multiplication table has no identity")
        self._identity = ids[0]
        self._inverse = []
        for x in range(n):
            inv = [y for y in range(n) if T[x][y] == self._identity and T[y][x] == self._identity]
            if not inv:
                raise GroupError(f"element {x} has no inverse")
            self._inverse.append(inv[0])
        for a in range(n):
            for b in range(n):
                ab = T[a][b]
                for c in range(n):
                    if T[ab][c] != T[a][T[b][c]]:
                        raise GroupError(f"table is not associative at ({a}, {b}, {c})")

    @classmethod
    def cyclic(cls, n: int, **kw) -> "FiniteGroup":
        return cls([[(i + j) % n for j in range(n)] for i in range(n)], **kw)

    @property
    def identity(self):
        return self._identity

    def mul(self, g, h):
        return self.table[g][h]

    def inv(self, g):
        return self._inverse[g]

    def is_element(self, g):
        return isinstance(g, int) and not isinstance(g, bool) and 0 <= g < self.order

    def default_generators(self):
        return [g for g in range(self.order) if g != self._identity]

    def elements(self) -> list[int]:
        return list(range(self.order))

    vectorized = True

    def encode(self, g):
        return g

    def decode(self, c):
        return int(c)

    def vec_mul(self, a, b):
        import numpy as np
        return np.asarray(self.table, dtype=np.int64)[a, b]

    def describe(self):
        d = super().describe()
        d["table"] = [list(r) for r in self.table]
        return d


class InfiniteDihedral(Group):
    """``Z ⋊ Z_2 = <s, t | t^2, tsts>`` in the normal form ``s^n t^r``."""

    kind = "dihedral-infinite"
    s = (1, 0)
    t = (0, 1)

    @property
    def identity(self):
        return (0, 0)

    def mul(self, g, h):
        m, a = g
        n, b = h
        return (m - n if a else m + n, a ^ b)

    def inv(self, g):
        n, r = g
        return (n, 1) if r else (-n, 0)

    def is_element(self, g):
        return (isinstance(g, tuple) and len(g) == 2 and isinstance(g[0], int)
                and g[1] in (0, 1))

    def default_generators(self):
        return [self.s, self.t]

    def sort_key(self, g):
        return (abs(g[0]), g[0] < 0, g[1])

    vectorized = True

    def encode(self, g):
        return 2 * g[0] + g[1]

    def decode(self, c):
        c = int(c)
        return (c >> 1, c & 1)

    def vec_mul(self, a, b):
        m, x = a >> 1, a & 1
        n, y = b >> 1, b & 1
        return 2 * (m + (1 - 2 * x) * n) + (x ^ y)

    def length(self, g, limit=10**4):
        if self.generators == [self.s, self.t]:
            n, r = g
            if r == 0:
                return abs(n)
            # s^n t = t s^-n: a reflection costs one extra letter
            return abs(n) + 1
        return super().length(g, limit)

    def to_json(self, g):
        return {"n": g[0], "r": g[1]}

    def from_json(self, obj):
        if isinstance(obj, dict):
            return self.check((int(obj["n"]), int(obj["r"])))
        return self.check(tuple(obj))


class DirectProduct(Group):
    kind = "direct-product"

    def __init__(self, left: Group, right: Group, generators=None, extension=None):
        self.left, self.right = left, right
        super().__init__(generators, extension)

    @property
    def identity(self):
        return (self.left.identity, self.right.identity)

    def mul(self, g, h):
        return (self.left.mul(g[0], h[0]), self.right.mul(g[1], h[1]))

    def inv(self, g):
        return (self.left.inv(g[0]), self.right.inv(g[1]))

    def is_element(self, g):
        return (isinstance(g, tuple) and len(g) == 2 and self.left.is_element(g[0])
                and self.right.is_element(g[1]))

    def default_generators(self):
        return ([(a, self.right.identity) for a in self.left.generators]
                + [(self.left.identity, b) for b in self.right.generators])

    def sort_key(self, g):
        return (self.left.sort_key(g[0]), self.right.sort_key(g[1]))

    @property
    def vectorized(self):
        return (self.left.vectorized and isinstance(self.right, FiniteGroup))

    def encode(self, g):
        return self.left.encode(g[0]) * self.right.order + g[1]

    def decode(self, c):
        c = int(c)
        q = self.right.order
        return (self.left.decode(c // q), c % q)

    def vec_mul(self, a, b):
        q = self.right.order
        return (self.left.vec_mul(a // q, b // q) * q
                + self.right.vec_mul(a % q, b % q))

    def length(self, g, limit=10**4):
        if self.generators == self.default_generators():
            return self.left.length(g[0], limit) + self.right.length(g[1], limit)
        return super().length(g, limit)

    def to_json(self, g):
        return [self.left.to_json(g[0]), self.right.to_json(g[1])]

    def from_json(self, obj):
        return self.check((self.left.from_json(obj[0]), self.right.from_json(obj[1])))

    def describe(self):
        d = super().describe()
        d["left"] = self.left.describe()
        d["right"] = self.right.describe()
        return d


class Lamplighter(Group):
    """Wreath product ``base ≀ Z`` with product ``(f,m)(g,n) = (f·shift_m(g), m+n)``."""

    kind = "lamplighter"

    def __init__(self, base: FiniteGroup | None = None, generators=None, extension=None):
        self.base = base if base is not None else FiniteGroup.cyclic(2)
        b = self.base
        # digits: identity first, then the remaining elements in index order
        self._digit_to_elem = [b.identity] + [x for x in range(b.order) if x != b.identity]
        self._elem_to_digit = {x: d for d, x in enumerate(self._digit_to_elem)}
        self.q = b.order
        self._xor = self.q == 2
        super().__init__(generators, extension)

    # lamp configurations as {position: base element}
    def lamps(self, g: LampElement) -> dict[int, int]:
        out = {}
        code, pos = g.code, g.lo
        while code:
            code, d = divmod(code, self.q)
            if d:
                out[pos] = self._digit_to_elem[d]
            pos += 1
        return out

    def make(self, lamps: dict[int, int] | Iterable[int], shift: int) -> LampElement:
        if not isinstance(lamps, dict):
            nontriv = [x for x in range(self.base.order) if x != self.base.identity]
            if len(nontriv) != 1:
                raise GroupError("lamp sets need a two-element base; pass a {pos: value} map")
            lamps = {p: nontriv[0] for p in lamps}
        lamps = {p: v for p, v in lamps.items() if v != self.base.identity}
        if not lamps:
            return LampElement(0, 0, shift)
        lo, hi = min(lamps), max(lamps)
        code = 0
        for p in range(hi, lo - 1, -1):
            code = code * self.q + self._elem_to_digit[lamps.get(p, self.base.identity)]
        return LampElement(lo, code, shift)

    @property
    def identity(self):
        return LampElement(0, 0, 0)

    def lamp(self, pos: int = 0, value: int | None = None) -> LampElement:
        if value is None:
            value = self._digit_to_elem[1]
        return self.make({pos: value}, 0)

    def shift_elem(self, n: int = 1) -> LampElement:
        return LampElement(0, 0, n)

    def mul(self, g, h):
        shift = g.shift + h.shift
        if not h.code:
            return LampElement(g.lo, g.code, shift)
        hlo = h.lo + g.shift
        if not g.code:
            return LampElement(hlo, h.code, shift)
        if self._xor:
            base = min(g.lo, hlo)
            x = (g.code << (g.lo - base)) ^ (h.code << (hlo - base))
            if not x:
                return LampElement(0, 0, shift)
            tz = (x & -x).bit_length() - 1
            return LampElement(base + tz, x >> tz, shift)
        f = self.lamps(g)
        for p, v in self.lamps(LampElement(hlo, h.code, 0)).items():
            f[p] = self.base.mul(f.get(p, self.base.identity), v)
        return self.make(f, shift)

    def inv(self, g):
        # (f, m)^-1 = (shift_{-m}(f^-1), -m)
        if self._xor:
            return LampElement(g.lo - g.shift if g.code else 0, g.code, -g.shift)
        f = {p - g.shift: self.base.inv(v) for p, v in self.lamps(g).items()}
        return self.make(f, -g.shift)

    def is_element(self, g):
        if not (isinstance(g, tuple) and len(g) == 3):
            return False
        lo, code, shift = g
        if not all(isinstance(x, int) for x in g) or code < 0:
            return False
        return (code == 0 and lo == 0) or (code > 0 and code % self.q != 0)

    def check(self, g):
        if isinstance(g, tuple) and not isinstance(g, LampElement) and len(g) == 3:
            g = LampElement(*g)
        return super().check(g)

    def default_generators(self):
        return [self.lamp(0), self.shift_elem(1)]

    def sort_key(self, g):
        return (abs(g.shift), g.shift < 0, g.lo, g.code)

    def to_json(self, g):
        lamps = self.lamps(g)
        if self.q == 2:
            return {"lamps": sorted(lamps), "shift": g.shift}
        return {"lamps": [[p, v] for p, v in sorted(lamps.items())], "shift": g.shift}

    def from_json(self, obj):
        raw = obj["lamps"]
        if raw and isinstance(raw[0], list):
            lamps = {int(p): int(v) for p, v in raw}
        else:
            lamps = [int(p) for p in raw]
        return self.make(lamps, int(obj["shift"]))

    def describe(self):
        d = super().describe()
        d["base"] = self.base.describe()
        return d


# ---------------------------------------------------------------------------
# extensions 0 -> H -> Γ -> G -> 0


@dataclass(frozen=True)
class Extension:
    """Normal subgroup ``kernel`` of ``group`` with quotient ``quotient``.

    ``include`` embeds kernel elements, ``project`` is the quotient
    homomorphism and ``lift`` a fixed set-theoretic section.
    """

    group: Group
    kernel: Group
    quotient: Group
    include: Callable[[Element], Element]
    project: Callable[[Element], Element]
    lift: Callable[[Element], Element]
    in_kernel: Callable[[Element], bool]
    kind: str = ""
    kernel_elements: Callable[[], list] | None = field(default=None, compare=False)


def build_extension(gp: Group, kind: str) -> Extension:
    if kind == "trivial":
        triv = FiniteGroup([[0]])
        return Extension(gp, triv, gp, lambda h: gp.identity, lambda g: g, lambda q: q,
                         lambda g: g == gp.identity, kind, lambda: [gp.identity])
    if kind == "right-factor" and isinstance(gp, DirectProduct):
        L, R = gp.left, gp.right
        return Extension(gp, R, L, lambda h: (L.identity, h), lambda g: g[0],
                         lambda q: (q, R.identity), lambda g: g[0] == L.identity, kind,
                         (lambda: [(L.identity, f) for f in R.elements()])
                         if isinstance(R, FiniteGroup) else None)
    if kind == "left-factor" and isinstance(gp, DirectProduct):
        L, R = gp.left, gp.right
        return Extension(gp, L, R, lambda h: (h, R.identity), lambda g: g[1],
                         lambda q: (L.identity, q), lambda g: g[1] == R.identity, kind,
                         (lambda: [(f, R.identity) for f in L.elements()])
                         if isinstance(L, FiniteGroup) else None)
    if kind == "lamps" and isinstance(gp, Lamplighter):
        Z = Integers()
        return Extension(gp, gp, Z, lambda h: h, lambda g: g.shift,
                         lambda q: LampElement(0, 0, q), lambda g: g.shift == 0, kind)
    if kind == "rotations" and isinstance(gp, InfiniteDihedral):
        Z2 = FiniteGroup.cyclic(2)
        return Extension(gp, Integers(), Z2, lambda n: (n, 0), lambda g: g[1],
                         lambda q: (0, q), lambda g: g[1] == 0, kind)
    raise GroupError(f"extension kind {kind!r} not available for {gp.kind}")


# ---------------------------------------------------------------------------
# module-level operations


def mul(desc: Group, g, h):
    return desc.mul(desc.check(g), desc.check(h))


def inv(desc: Group, g):
    return desc.inv(desc.check(g))


def ball(desc: Group, radius: int) -> set:
    return set(desc.ball(radius))


def _ext(desc: Group) -> Extension:
    if desc.extension is None:
        raise GroupError(f"no extension configured on {desc.kind}")
    return desc.extension


def project(desc: Group, g):
    return _ext(desc).project(desc.check(g))


def lift(desc: Group, q):
    ext = _ext(desc)
    return ext.lift(ext.quotient.check(q))


def product_set(desc: Group, A: Iterable, B: Iterable) -> set:
    B = list(B)
    return {desc.mul(a, b) for a in A for b in B}


def verify_folner(desc: Group, A: Iterable, K: Iterable) -> Fraction:
    """Exact ``|K·A \\ A| / |A|``."""
    A = A if isinstance(A, (set, frozenset)) else set(A)
    if not A:
        raise GroupError("Følner test set A is empty")
    escaped = set()
    m = desc.mul
    for k in set(K):
        for a in A:
            x = m(k, a)
            if x not in A:
                escaped.add(x)
    return Fraction(len(escaped), len(A))


def generated_subgroup(desc: Group, gens: Iterable, cap: int | None = None) -> set:
    cap = cap or desc.cap
    gens = list(gens)
    out = {desc.identity}
    frontier = [desc.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = desc.mul(x, g)
                if y not in out:
                    out.add(y)
                    nxt.append(y)
        if len(out) > cap:
            raise ResourceCapError("generated subgroup exceeds cap")
        frontier = nxt
    return out


def is_subgroup(desc: Group, F: Iterable) -> tuple[bool, object]:
    """Closure test by incremental generation.

    Returns ``(True, None)`` or ``(False, witness)`` where the witness is an
    element of the generated subgroup missing from ``F``.
    """
    F = set(F)
    if desc.identity not in F:
        return False, desc.identity
    gens: list = []
    H = {desc.identity}
    for f in sorted(F, key=desc.sort_key):
        if f in H:
            continue
        gens.append(f)
        H = generated_subgroup(desc, gens, cap=len(F) + 1)
        extra = H - F
        if extra:
            return False, min(extra, key=desc.sort_key)
    return H == F, None


@dataclass(frozen=True)
class FolnerCertificate:
    A: frozenset
    K: tuple
    defect: Fraction
    eps: Fraction | None = None
    S: tuple | None = None
    S_lift: tuple | None = None
    F: frozenset | None = None

    def to_json(self, desc: Group) -> dict:
        d = {"size": len(self.A), "K": [desc.to_json(k) for k in self.K],
             "defect": f"{self.defect.numerator}/{self.defect.denominator}"}
        if self.eps is not None:
            d["eps"] = f"{self.eps.numerator}/{self.eps.denominator}"
        if self.S is not None:
            q = desc.extension.quotient
            d["trace"] = {"S": [q.to_json(x) for x in self.S],
                          "S_lift": [desc.to_json(x) for x in self.S_lift],
                          "F_size": len(self.F)}
        return d


def folner_in_extension(desc: Group, K: Iterable, eps, S: Iterable, F_n: Iterable) -> FolnerCertificate:
    """Build ``A = lift(S)·F_n`` and certify ``|K·A \\ A| < eps |A|``.

    Preconditions (each checked, failure names the witness):
    ``S`` is ``(project(K), eps/|K|)``-Følner in the quotient, ``F_n`` is a
    subgroup of the kernel, and ``F_n`` contains ``lift(S)^-1 K lift(S) ∩ H``.
    """
    ext = _ext(desc)
    eps = Fraction(eps)
    K = list(dict.fromkeys(desc.check(k) for k in K))
    S = list(dict.fromkeys(ext.quotient.check(q) for q in S))
    F = set(F_n)
    if not K:
        raise GroupError("K is empty")
    for f in F:
        if not ext.in_kernel(desc.check(f)):
            raise GroupError(f"F_n element {desc.to_json(f)} is not in the normal subgroup")
    pK = {ext.project(k) for k in K}
    qdef = verify_folner(ext.quotient, S, pK)
    if not qdef < eps / len(K):
        raise GroupError(f"S is not (project(K), eps/|K|)-Følner: defect {qdef} >= {eps / len(K)}")
    ok, wit = is_subgroup(desc, F)
    if not ok:
        raise GroupError(f"F_n is not a subgroup; closure produces {desc.to_json(wit)}")
    S_lift = [ext.lift(q) for q in S]
    S_inv = [desc.inv(g) for g in S_lift]
    for gi in S_inv:
        for k in K:
            gk = desc.mul(gi, k)
            for gj in S_lift:
                x = desc.mul(gk, gj)
                if ext.in_kernel(x) and x not in F:
                    raise GroupError(
                        f"F_n misses {desc.to_json(x)} from lift(S)^-1 K lift(S) ∩ H")
    A = set()
    for g in S_lift:
        coset = {desc.mul(g, f) for f in F}
        if not A.isdisjoint(coset):
            raise GroupError(f"cosets of F_n overlap at {desc.to_json(g)}")
        A |= coset
    defect = verify_folner(desc, A, K)
    if not defect < eps:
        raise GroupError(f"constructed A has defect {defect} >= {eps}")
    return FolnerCertificate(frozenset(A), tuple(K), defect, eps, tuple(S), tuple(S_lift), frozenset(F))


def lamp_subgroup(desc: Lamplighter, lo: int, hi: int) -> set:
    """All lamp configurations supported on ``[lo, hi]`` (shift 0)."""
    n = hi - lo + 1
    out = {LampElement(0, 0, 0)}
    for code in range(1, desc.q ** n):
        c, tz = code, 0
        while c % desc.q == 0:
            c //= desc.q
            tz += 1
        out.add(LampElement(lo + tz, c, 0))
    return out


def group_from_json(obj: dict) -> Group:
    kind = obj["kind"]
    ext = obj.get("extension")
    ext_kind = ext.get("kind") if isinstance(ext, dict) else ext
    gens = obj.get("generators")
    if kind == "integers":
        g: Group = Integers(extension=ext_kind)
    elif kind == "finite-table":
        g = FiniteGroup(obj["table"], extension=ext_kind, names=obj.get("names"))
    elif kind in ("cyclic",):
        g = FiniteGroup.cyclic(int(obj["order"]), extension=ext_kind)
    elif kind == "dihedral-infinite":
        g = InfiniteDihedral(extension=ext_kind)
    elif kind == "direct-product":
        g = DirectProduct(group_from_json(obj["left"]), group_from_json(obj["right"]),
                          extension=ext_kind)
    elif kind == "lamplighter":
        base = group_from_json(obj["base"]) if "base" in obj else None
        g = Lamplighter(base, extension=ext_kind)
    else:
        raise GroupError(f"unknown group kind {kind!r}")
    if gens is not None:
        g.generators = [g.from_json(x) for x in gens]
        g._balls.clear()
    return g
