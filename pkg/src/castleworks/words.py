"""Lazily evaluated configurations in ``A^Γ``.

A word is a pure function from group elements to symbols (strings).  The
constructions here are the periodic and Toeplitz words over ``Z``, the mirror
``n -> w(-n)``, the amplified word over the infinite dihedral group, the
product word over ``D∞ × F`` and left shifts ``(g·w)(h) = w(g^-1 h)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .groups import DirectProduct, FiniteGroup, Group, GroupError, InfiniteDihedral, Integers

Z = Integers()
D_INF = InfiniteDihedral()


class WordError(ValueError):
    pass


class Alphabet(tuple):
    """Ordered tuple of distinct symbols."""

    def __new__(cls, symbols: Iterable[str]):
        symbols = tuple(str(s) for s in symbols)
        if not symbols:
            raise WordError("alphabet is empty")
        if len(set(symbols)) != len(symbols):
            raise WordError(f"alphabet has duplicate symbols: {symbols}")
        return super().__new__(cls, symbols)


@dataclass(frozen=True)
class CylinderPattern:
    """Finite partial configuration ``domain[i] -> symbols[i]``."""

    domain: tuple
    symbols: tuple

    @classmethod
    def from_map(cls, m: dict) -> "CylinderPattern":
        items = list(m.items())
        return cls(tuple(k for k, _ in items), tuple(str(v) for _, v in items))

    def as_map(self) -> dict:
        return dict(zip(self.domain, self.symbols))

    def mirror(self) -> "CylinderPattern":
        """Integer patterns only: ``i -> a_i`` becomes ``-i -> a_i``."""
        return CylinderPattern(tuple(-i for i in self.domain), self.symbols)


class WordGenerator:
    """Base class.  Subclasses implement ``_eval``; results are memoized."""

    group: Group
    alphabet: Alphabet

    def __init__(self):
        self._memo: dict = {}

    def eval(self, g) -> str:
        try:
            return self._memo[g]
        except KeyError:
            pass
        if not self.group.is_element(g):
            raise WordError(f"{g!r} is not an element of the word's group ({self.group.kind})")
        v = self._memo[g] = self._eval(g)
        return v

    __call__ = eval

    def _eval(self, g) -> str:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class FunctionWord(WordGenerator):
    """Escape hatch: any total function on the group."""

    def __init__(self, group: Group, fn: Callable, alphabet: Iterable[str]):
        super().__init__()
        self.group, self.fn, self.alphabet = group, fn, Alphabet(alphabet)

    def _eval(self, g):
        return str(self.fn(g))


class PeriodicWord(WordGenerator):
    group = Z

    def __init__(self, cycle: Sequence[str]):
        super().__init__()
        self.cycle = tuple(str(c) for c in cycle)
        if not self.cycle:
            raise WordError("empty cycle")
        self.period = len(self.cycle)
        self.alphabet = Alphabet(dict.fromkeys(sorted(self.cycle)))

    def _eval(self, n):
        return self.cycle[n % self.period]

    def to_json(self):
        return {"kind": "periodic", "cycle": list(self.cycle)}


class ToeplitzWord(WordGenerator):
    """``w(n)`` = symbol of the earliest stage ``(p, r, a)`` with ``n ≡ r mod p``.

    Periods must divide each other along the stage list.  Positions never
    assigned take ``fill`` if given; otherwise construction fails with the
    smallest uncovered ``|n|`` in the validation window.
    """

    group = Z

    def __init__(self, stages: Sequence[tuple[int, int, str]], fill: str | None = None,
                 validate: int = 4096):
        super().__init__()
        self._stages = [(int(p), int(r) % int(p), str(a)) for p, r, a in stages]
        if not self._stages:
            raise WordError("no stages")
        for (p, _, _), (q, _, _) in zip(self._stages, self._stages[1:]):
            if q % p:
                raise WordError(f"stage periods must divide: {p} does not divide {q}")
        self.fill = fill
        self.alphabet = Alphabet(dict.fromkeys(sorted({a for _, _, a in self._stages}
                                                      | ({fill} if fill is not None else set()))))
        if validate:
            self.validate(validate)

    def stages(self):
        return iter(self._stages)

    def validate(self, radius: int):
        for m in range(radius + 1):
            for n in ((m, -m) if m else (0,)):
                if self.stage_of(n) is None and self.fill is None:
                    raise WordError(f"Toeplitz stages leave position {n} unassigned "
                                    f"(smallest uncovered |n| = {m})")

    def stage_of(self, n: int):
        """The stage assigning ``n``, or ``None`` for a hole."""
        for st in self.stages():
            p, r, _ = st
            if n % p == r:
                return st
        return None

    def controlling_period(self, n: int) -> int | None:
        st = self.stage_of(n)
        return None if st is None else st[0]

    def _eval(self, n):
        st = self.stage_of(n)
        if st is None:
            if self.fill is None:
                raise WordError(f"position {n} is a hole of the Toeplitz word")
            return self.fill
        return st[2]

    def to_json(self):
        d = {"kind": "toeplitz", "stages": [list(s) for s in self._stages]}
        if self.fill is not None:
            d["fill"] = self.fill
        return d


class DyadicToeplitz(ToeplitzWord):
    """Infinite Toeplitz word with periods ``2, 4, 8, ...``.

    At stage ``k`` the current hole class ``h mod 2^k`` splits in two; the
    half selected by ``holes[k % len(holes)]`` stays open and the other half
    receives ``symbols[k % len(symbols)]``.  ``holes=[1]`` with symbols
    ``0, 1`` is the period-doubling word; its only unassigned integer is -1.
    Hole digits that are not eventually constant (e.g. ``[1, 0]``) assign every
    integer.
    """

    def __init__(self, symbols: Sequence[str] = ("0", "1"), holes: Sequence[int] = (1,),
                 fill: str | None = None, validate: int = 4096):
        WordGenerator.__init__(self)
        self.symbols = tuple(str(s) for s in symbols)
        self.holes = tuple(int(b) & 1 for b in holes)
        if not self.symbols or not self.holes:
            raise WordError("symbols and holes must be non-empty")
        self.fill = fill
        self.alphabet = Alphabet(dict.fromkeys(sorted(set(self.symbols)
                                                      | ({fill} if fill is not None else set()))))
        if validate:
            self.validate(validate)

    def stage(self, k: int) -> tuple[int, int, str]:
        h = 0
        for j in range(k):
            h += self.holes[j % len(self.holes)] << j
        b = self.holes[k % len(self.holes)]
        return (2 << k, h + ((1 - b) << k), self.symbols[k % len(self.symbols)])

    def stages(self, count: int | None = None):
        h, k = 0, 0
        while count is None or k < count:
            b = self.holes[k % len(self.holes)]
            yield (2 << k, h + ((1 - b) << k), self.symbols[k % len(self.symbols)])
            h += b << k
            k += 1

    def stage_of(self, n: int):
        cap = abs(n).bit_length() + 2 + 2 * len(self.holes)
        for st in self.stages(cap):
            p, r, _ = st
            if n % p == r:
                return st
        return None

    def to_json(self):
        d = {"kind": "dyadic-toeplitz", "symbols": list(self.symbols), "holes": list(self.holes)}
        if self.fill is not None:
            d["fill"] = self.fill
        return d


def period_doubling(fill: str | None = "1", holes: Sequence[int] = (1,)) -> DyadicToeplitz:
    """Period-doubling word ``0100010101000100...``; ``holes`` picks the point of the subshift."""
    return DyadicToeplitz(("0", "1"), holes, fill=fill if 1 not in holes or 0 not in holes else None)


class MirrorWord(WordGenerator):
    group = Z

    def __init__(self, inner: WordGenerator):
        super().__init__()
        if not isinstance(inner.group, Integers):
            raise WordError("mirror() needs a word over Z")
        self.inner = inner
        self.alphabet = inner.alphabet

    def _eval(self, n):
        return self.inner.eval(-n)

    def to_json(self):
        return {"kind": "mirror", "inner": self.inner.to_json()}


class AmplifiedWord(WordGenerator):
    """``ŵ(s^n) = w(n)`` and ``ŵ(s^n t) = w(-n)``."""

    group = D_INF

    def __init__(self, inner: WordGenerator):
        super().__init__()
        if not isinstance(inner.group, Integers):
            raise WordError("amplify() needs a word over Z")
        self.inner = inner
        self.alphabet = inner.alphabet

    def _eval(self, g):
        n, r = g
        return self.inner.eval(-n if r else n)

    def to_json(self):
        return {"kind": "amplified", "inner": self.inner.to_json()}


class ProductWord(WordGenerator):
    """``x0((g, s)) = a_s`` where the binary inner word reads ``'1'``, else ``'0'``."""

    def __init__(self, inner: WordGenerator, F: FiniteGroup):
        super().__init__()
        if set(inner.alphabet) - {"0", "1"}:
            raise WordError(f"product_word needs a binary inner word, got {tuple(inner.alphabet)}")
        if not isinstance(F, FiniteGroup):
            raise WordError("product_word needs a finite-table group")
        self.inner, self.F = inner, F
        self.group = DirectProduct(inner.group, F, extension="right-factor")
        self.alphabet = Alphabet(["0"] + [self.letter(s) for s in F.elements()])

    def letter(self, s: int) -> str:
        return f"a{self.F.names[s]}"

    def _eval(self, g):
        h, s = g
        return self.letter(s) if self.inner.eval(h) == "1" else "0"

    def to_json(self):
        return {"kind": "product", "inner": self.inner.to_json(), "group": self.F.describe()}


class ShiftedWord(WordGenerator):
    """``(g·w)(h) = w(g^-1 h)``."""

    def __init__(self, g, inner: WordGenerator):
        super().__init__()
        self.group = inner.group
        self.g = self.group.check(g)
        self.g_inv = self.group.inv(self.g)
        self.inner = inner
        self.alphabet = inner.alphabet

    def _eval(self, h):
        return self.inner.eval(self.group.mul(self.g_inv, h))

    def to_json(self):
        return {"kind": "shifted", "by": self.group.to_json(self.g), "inner": self.inner.to_json()}


# ---------------------------------------------------------------------------
# operations


def eval_word(w: WordGenerator, g) -> str:
    return w.eval(g)


def mirror(w: WordGenerator) -> WordGenerator:
    if isinstance(w, MirrorWord):
        return w.inner
    return MirrorWord(w)


def amplify(w: WordGenerator) -> AmplifiedWord:
    return AmplifiedWord(w)


def product_word(w: WordGenerator, F: FiniteGroup) -> ProductWord:
    return ProductWord(w, F)


def toeplitz(stages, fill: str | None = None, validate: int = 4096) -> ToeplitzWord:
    return ToeplitzWord(stages, fill=fill, validate=validate)


def shift(g, w: WordGenerator) -> WordGenerator:
    if g == w.group.identity:
        return w
    if isinstance(w, ShiftedWord):
        return ShiftedWord(w.group.mul(g, w.g), w.inner)
    return ShiftedWord(g, w)


def pattern_at(w: WordGenerator, g, domain: Sequence) -> tuple:
    """Symbols of the point ``g^-1·w`` on ``domain``: ``(w(g·h))_h``."""
    mul = w.group.mul
    return tuple(w.eval(mul(g, h)) for h in domain)


def factor_language(w: WordGenerator, radius: int, window: Iterable) -> set[CylinderPattern]:
    dom = tuple(w.group.ball(radius))
    window = list(window)
    if not set(dom) <= set(window):
        raise WordError("window must contain ball(radius)")
    return {CylinderPattern(dom, pattern_at(w, g, dom)) for g in window}


def word_from_json(obj: dict) -> WordGenerator:
    kind = obj["kind"]
    if kind == "periodic":
        return PeriodicWord(list(obj["cycle"]))
    if kind == "toeplitz":
        return ToeplitzWord([tuple(s) for s in obj["stages"]], fill=obj.get("fill"),
                            validate=obj.get("validate", 4096))
    if kind == "dyadic-toeplitz":
        return DyadicToeplitz(obj.get("symbols", ("0", "1")), obj.get("holes", (1,)),
                              fill=obj.get("fill"))
    if kind == "period-doubling":
        return period_doubling(fill=obj.get("fill", "1"), holes=obj.get("holes", (1,)))
    if kind == "mirror":
        return MirrorWord(word_from_json(obj["inner"]))
    if kind == "amplified":
        return AmplifiedWord(word_from_json(obj["inner"]))
    if kind == "product":
        from .groups import group_from_json
        g = obj.get("group", {"kind": "cyclic", "order": 2})
        if isinstance(g, int):
            g = {"kind": "cyclic", "order": g}
        F = group_from_json(g)
        if not isinstance(F, FiniteGroup):
            raise GroupError("product word group must be finite")
        return ProductWord(word_from_json(obj["inner"]), F)
    if kind == "shifted":
        inner = word_from_json(obj["inner"])
        return ShiftedWord(inner.group.from_json(obj["by"]), inner)
    raise WordError(f"unknown word kind {kind!r}")
