"""Reduced words in the free group of rank n and the sphere enumeration.

Letters are integer codes ``1..2n``. The code order for rank 2 is
``(x, Y, y, X)``, i.e. xi, eta^-1, eta, xi^-1, and code ``r`` is inverse to
code ``2n + 1 - r``. For general rank the order is

    x_1, x_2^-1, x_3, x_4^-1, ..., (mirror image inverted)

so position ``r`` and ``2n + 1 - r`` are always an inverse pair. With this
convention the residue of a sphere index modulo 2n equals the code of the
word's last letter (2n counting as residue 0) for every rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

GENERATOR_NAMES = "xyzwvutsrqponmlkjihgfedcba"

DEFAULT_WORD_CAP = 10**6


class EnumerationCapError(RuntimeError):
    """Raised when an enumeration would exceed the configured word cap."""


@dataclass(frozen=True, order=True)
class Letter:
    generator_index: int
    inverted: bool

    def code(self, rank: int) -> int:
        i = self.generator_index
        if not 1 <= i <= rank:
            raise ValueError(f"generator index {i} outside [1, {rank}]")
        # position i holds x_i for odd i and x_i^-1 for even i
        natural_inverted = i % 2 == 0
        return i if self.inverted == natural_inverted else 2 * rank + 1 - i

    @classmethod
    def from_code(cls, code: int, rank: int) -> "Letter":
        if not 1 <= code <= 2 * rank:
            raise ValueError(f"letter code {code} outside [1, {2 * rank}]")
        if code <= rank:
            return cls(code, code % 2 == 0)
        i = 2 * rank + 1 - code
        return cls(i, i % 2 == 1)

    def __str__(self) -> str:
        ch = GENERATOR_NAMES[self.generator_index - 1]
        return ch.upper() if self.inverted else ch


def inverse_code(code: int, rank: int) -> int:
    return 2 * rank + 1 - code


def reduce_codes(codes: Iterable[int], rank: int) -> tuple[int, ...]:
    top = 2 * rank + 1
    out: list[int] = []
    for c in codes:
        if out and out[-1] + c == top:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def multiply_codes(a: tuple[int, ...], b: tuple[int, ...], rank: int) -> tuple[int, ...]:
    top = 2 * rank + 1
    i = 0
    la, lb = len(a), len(b)
    while i < la and i < lb and a[la - 1 - i] + b[i] == top:
        i += 1
    return a[: la - i] + b[i:]


def invert_codes(a: tuple[int, ...], rank: int) -> tuple[int, ...]:
    top = 2 * rank + 1
    return tuple(top - c for c in reversed(a))


@dataclass(frozen=True)
class Word:
    """A reduced word; ``letters`` holds letter codes (see module docstring)."""

    letters: tuple[int, ...]
    rank: int = 2

    def __post_init__(self):
        top = 2 * self.rank
        for c in self.letters:
            if not 1 <= c <= top:
                raise ValueError(f"letter code {c} outside [1, {top}]")
        for a, b in zip(self.letters, self.letters[1:]):
            if a + b == top + 1:
                raise ValueError(f"word {self.letters} is not reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __str__(self) -> str:
        return word_to_string(self)

    def __repr__(self) -> str:
        return f"Word({word_to_string(self)!r})"

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def inverse(self) -> "Word":
        return Word(invert_codes(self.letters, self.rank), self.rank)

    def as_letters(self) -> list[Letter]:
        return [Letter.from_code(c, self.rank) for c in self.letters]

    def sort_key(self) -> tuple:
        return (len(self.letters), self.letters)


def identity(rank: int = 2) -> Word:
    return Word((), rank)


def reduce(seq: Sequence[Letter | int], rank: int = 2) -> Word:
    """Freely reduce a sequence of letters (``Letter`` objects or codes)."""
    codes = [s.code(rank) if isinstance(s, Letter) else int(s) for s in seq]
    for c in codes:
        if not 1 <= c <= 2 * rank:
            raise ValueError(f"letter code {c} outside [1, {2 * rank}]")
    return Word(reduce_codes(codes, rank), rank)


def multiply(a: Word, b: Word) -> Word:
    if a.rank != b.rank:
        raise ValueError("words from free groups of different rank")
    return Word(multiply_codes(a.letters, b.letters, a.rank), a.rank)


def has_prefix(u: Word, psi: Word) -> bool:
    m = len(psi.letters)
    return len(u.letters) >= m and u.letters[:m] == psi.letters


def parse_word(text: str, rank: int = 2) -> Word:
    """Parse ``"xYX"``-style strings; uppercase letters are inverses."""
    names = GENERATOR_NAMES[:rank]
    text = text.strip()
    if text in ("", "1"):
        return identity(rank)
    letters = []
    for ch in text:
        idx = names.find(ch.lower())
        if idx < 0:
            raise ValueError(f"unknown letter {ch!r} for rank {rank}")
        letters.append(Letter(idx + 1, ch.isupper()))
    return reduce(letters, rank)


def word_to_string(w: Word) -> str:
    return "".join(str(Letter.from_code(c, w.rank)) for c in w.letters)


def _child_codes(position: int, rank: int) -> list[int]:
    """Codes of the 2n-1 children of the prefix sitting at ``position``.

    Children are listed cyclically through the code order, starting at the
    residue that the first child's own index must carry. The excluded code is
    then exactly the inverse of the prefix's last letter.
    """
    m = 2 * rank
    start = ((m - 1) * (position - 1) + 1) % m
    out = []
    for step in range(m - 1):
        r = (start + step) % m
        out.append(r if r else m)
    return out


@dataclass(frozen=True)
class SphereIndexing:
    rank: int
    radius: int
    words: tuple[Word, ...]
    index_of: dict = field(compare=False, repr=False)
    convention: str = "canonical"

    @property
    def d(self) -> int:
        return len(self.words)

    def word(self, index: int) -> Word:
        return self.words[index - 1]

    def block_size(self) -> int:
        return (2 * self.rank - 1) ** (self.radius - 1)

    def block_of(self, index: int) -> int:
        return (index - 1) // self.block_size() + 1

    def block(self, j: int) -> range:
        b = self.block_size()
        return range((j - 1) * b + 1, j * b + 1)


def sphere_size(rank: int, radius: int) -> int:
    if radius == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (radius - 1)


def _check_cap(count: int, cap: int | None) -> None:
    limit = DEFAULT_WORD_CAP if cap is None else cap
    if count > limit:
        raise EnumerationCapError(f"{count} words requested, cap is {limit}")


def _sphere_codes(rank: int, radius: int) -> list[tuple[int, ...]]:
    level: list[tuple[int, ...]] = [(c,) for c in range(1, 2 * rank + 1)]
    for _ in range(radius - 1):
        nxt = []
        for pos, prefix in enumerate(level, start=1):
            for c in _child_codes(pos, rank):
                nxt.append(prefix + (c,))
        level = nxt
    return level


@lru_cache(maxsize=64)
def _enumerate_sphere_cached(rank: int, radius: int) -> SphereIndexing:
    words = tuple(Word(codes, rank) for codes in _sphere_codes(rank, radius))
    index_of = {w.letters: i for i, w in enumerate(words, start=1)}
    return SphereIndexing(
        rank, radius, words, index_of,
        convention="canonical" if rank == 2 else "rank-n cyclic (repo convention)",
    )


def enumerate_sphere(n: int, k: int, cap: int | None = None) -> SphereIndexing:
    if n < 2 or k < 1:
        raise ValueError("need rank n >= 2 and radius k >= 1")
    _check_cap(sphere_size(n, k), cap)
    return _enumerate_sphere_cached(n, k)


def enumerate_ball_interior(n: int, k: int, cap: int | None = None) -> list[Word]:
    """Non-identity reduced words of length < k, shortest first."""
    if k < 2:
        raise ValueError("ball interior needs k >= 2")
    _check_cap(sum(sphere_size(n, l) for l in range(1, k)), cap)
    out: list[Word] = []
    for l in range(1, k):
        out.extend(_enumerate_sphere_cached(n, l).words)
    return out


def enumerate_ball(n: int, k: int, cap: int | None = None) -> list[Word]:
    """Non-identity reduced words of length <= k."""
    _check_cap(sum(sphere_size(n, l) for l in range(1, k + 1)), cap)
    out: list[Word] = []
    for l in range(1, k + 1):
        out.extend(_enumerate_sphere_cached(n, l).words)
    return out


def iter_words_naive(n: int, length: int) -> Iterator[tuple[int, ...]]:
    """All reduced code tuples of a given length, by filtering the full product."""
    from itertools import product

    top = 2 * n + 1
    for t in product(range(1, 2 * n + 1), repeat=length):
        if all(a + b != top for a, b in zip(t, t[1:])):
            yield t


def letter_permutations(rank: int) -> list[dict[int, int]]:
    """All inverse-respecting bijections of the letter set (signed permutations)."""
    from itertools import permutations, product

    perms = []
    for order in permutations(range(1, rank + 1)):
        for signs in product((False, True), repeat=rank):
            mapping = {}
            for i, (target, flip) in enumerate(zip(order, signs), start=1):
                src = Letter(i, False).code(rank)
                dst = Letter(target, flip).code(rank)
                mapping[src] = dst
                mapping[inverse_code(src, rank)] = inverse_code(dst, rank)
            perms.append(mapping)
    return perms


def relabel(w: Word, mapping: dict[int, int]) -> Word:
    return Word(tuple(mapping[c] for c in w.letters), w.rank)
