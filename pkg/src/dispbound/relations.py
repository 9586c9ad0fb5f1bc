"""Group-theoretical relations (gamma, s(gamma), S(gamma)) of the sphere decomposition.

A relation says that translating the cone J_s by gamma gives the complement of
the cones indexed by S, up to finitely many words of length <= k. Enumeration
follows the cancellation parametrization gamma = w (psi_1...psi_i)^-1, but
S is always recomputed from cone membership so the two can disagree only if
something is wrong.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .freegroup import (
    SphereIndexing,
    Word,
    _enumerate_sphere_cached,
    enumerate_ball,
    enumerate_sphere,
    invert_codes,
    multiply_codes,
    parse_word,
    sphere_size,
    word_to_string,
)


@dataclass(frozen=True)
class Relation:
    gamma: Word
    s_gamma: Word
    S_gamma: frozenset
    product_length: int

    @property
    def rank(self) -> int:
        return self.gamma.rank

    @property
    def radius(self) -> int:
        return len(self.s_gamma)

    def record(self) -> dict:
        return {
            "gamma": word_to_string(self.gamma),
            "s": word_to_string(self.s_gamma),
            "S": sorted(self.S_gamma),
            "j": self.product_length,
        }


@dataclass(frozen=True)
class RelationCensus:
    n: int
    k: int
    relations: tuple[Relation, ...]

    @property
    def total(self) -> int:
        return len(self.relations)

    @property
    def count_by_product_length(self) -> dict[int, int]:
        c = Counter(r.product_length for r in self.relations)
        return {j: c[j] for j in sorted(c)}

    def with_product_length(self, j: int) -> list[Relation]:
        return [r for r in self.relations if r.product_length == j]


def _geom_sum(n: int, upper: int) -> int:
    # sum_{j=1}^{upper} (2n-1)^(j-1)
    return sum((2 * n - 1) ** (j - 1) for j in range(1, upper + 1))


def r_k_sum_over_cancellations(n: int, k: int) -> int:
    if n < 2 or k < 2:
        raise ValueError("need n >= 2 and k >= 2")
    return 1 + sum(1 + (2 * n - 2) * _geom_sum(n, min(i, k - i)) for i in range(1, k))


def a_coefficients(n: int, k: int) -> list[int]:
    """Number of relations per fixed s(gamma) whose product has length j = 0..k."""
    if n < 2 or k < 2:
        raise ValueError("need n >= 2 and k >= 2")
    a = []
    for j in range(k + 1):
        if j <= 1:
            a.append(1)
        elif j < k:
            a.append(1 + (2 * n - 2) * _geom_sum(n, j // 2))
        else:
            a.append((2 * n - 2) * _geom_sum(n, k // 2))
    return a


def r_k_sum_over_lengths(n: int, k: int) -> int:
    return sum(a_coefficients(n, k))


def relation_count(n: int, k: int) -> int:
    return sphere_size(n, k) * r_k_sum_over_cancellations(n, k)


def _cone_image_member(g_inv: tuple, s: tuple, u: tuple, rank: int) -> bool:
    # u in gamma J_s  <=>  gamma^-1 u starts with s
    return multiply_codes(g_inv, u, rank)[: len(s)] == s


@lru_cache(maxsize=16)
def _extensions(n: int, k: int, extra: int) -> tuple[tuple[int, tuple], ...]:
    """Words of length k+1..k+extra paired with the index of their length-k prefix."""
    idx = _enumerate_sphere_cached(n, k).index_of
    out = []
    for length in range(k + 1, k + extra + 1):
        for w in _enumerate_sphere_cached(n, length).words:
            out.append((idx[w.letters[:k]], w.letters))
    return tuple(out)


def disjoint_cones(gamma: Word, s: Word, indexing: SphereIndexing, depth: int | None = None) -> frozenset:
    """Indices chi whose cone J_chi misses gamma J_s on words of length k < |u| <= depth."""
    n, k = indexing.rank, indexing.radius
    depth = k + 1 if depth is None else depth
    g_inv = invert_codes(gamma.letters, n)
    hit = set()
    for chi, u in _extensions(n, k, depth - k):
        if chi not in hit and _cone_image_member(g_inv, s.letters, u, n):
            hit.add(chi)
    return frozenset(range(1, indexing.d + 1)) - hit


def _w_words(n: int, length: int, last_excluded: set[int]) -> list[tuple[int, ...]]:
    if length == 0:
        return [()]
    return [
        w.letters
        for w in _enumerate_sphere_cached(n, length).words
        if w.letters[-1] not in last_excluded
    ]


def _parametrized_gammas(psi: tuple, n: int) -> list[tuple[tuple, int]]:
    """(gamma, cancellations) pairs for a fixed s(gamma) = psi."""
    k = len(psi)
    top = 2 * n + 1
    out = []
    for i in range(1, k + 1):
        tail = invert_codes(psi[:i], n)
        if i == k:
            out.append((tail, i))
            continue
        # last letter of w must neither cancel against psi_i^-1 nor against psi_{i+1}
        excluded = {psi[i - 1], top - psi[i]}
        for length in range(0, min(i, k - i) + 1):
            for w in _w_words(n, length, excluded):
                out.append((w + tail, i))
    return out


def _sort_key(rel: Relation, indexing: SphereIndexing):
    return (indexing.index_of[rel.s_gamma.letters], len(rel.gamma), rel.gamma.letters)


def enumerate_relations(n: int, k: int, cap: int | None = None) -> RelationCensus:
    indexing = enumerate_sphere(n, k, cap)
    if k < 2:
        raise ValueError("need k >= 2")
    if cap is not None and relation_count(n, k) > cap:
        from .freegroup import EnumerationCapError

        raise EnumerationCapError(f"{relation_count(n, k)} relations, cap is {cap}")
    rels = []
    for psi_word in indexing.words:
        psi = psi_word.letters
        for g, _ in _parametrized_gammas(psi, n):
            gamma = Word(g, n)
            prod = multiply_codes(g, psi, n)
            S = disjoint_cones(gamma, psi_word, indexing)
            rels.append(Relation(gamma, psi_word, S, len(prod)))
    rels.sort(key=lambda r: _sort_key(r, indexing))
    return RelationCensus(n, k, tuple(rels))


def brute_force_relation_pairs(n: int, k: int) -> list[tuple[Word, Word]]:
    """All (gamma, s) with 1 <= |gamma| <= k, |s| = k and |gamma s| <= k, by exhaustion."""
    sphere = enumerate_sphere(n, k).words
    out = []
    for g in enumerate_ball(n, k):
        for s in sphere:
            if len(multiply_codes(g.letters, s.letters, n)) <= k:
                out.append((g, s))
    return out


def verify_relation(rel: Relation, depth: int | None = None) -> bool:
    """Check u in gamma J_s  <=>  u not in J_S for every word with k < |u| <= depth."""
    n, k = rel.rank, rel.radius
    depth = k + 2 if depth is None else depth
    if depth < k + 1:
        raise ValueError("depth must be at least k + 1")
    g_inv = invert_codes(rel.gamma.letters, n)
    s = rel.s_gamma.letters
    for chi, u in _extensions(n, k, depth - k):
        if _cone_image_member(g_inv, s, u, n) == (chi in rel.S_gamma):
            return False
    return True


def short_word_discrepancy(rel: Relation) -> list[str]:
    """Words of length <= k (identity included) where the literal set identity fails."""
    n, k = rel.rank, rel.radius
    indexing = enumerate_sphere(n, k)
    g_inv = invert_codes(rel.gamma.letters, n)
    s = rel.s_gamma.letters
    words = [()] + [w.letters for w in enumerate_ball(n, k)]
    out = []
    for u in words:
        left = _cone_image_member(g_inv, s, u, n)
        right = not (len(u) == k and indexing.index_of[u] in rel.S_gamma)
        if left != right:
            out.append(word_to_string(Word(u, n)) or "1")
    return out


def census_for_k3_length0() -> list[Relation]:
    return enumerate_relations(2, 3).with_product_length(0)


# --- golden tables -------------------------------------------------------

TABLE_FILES = {
    1: "k2_table1.json",
    2: "k2_table2.json",
    3: "k2_table3.json",
    4: "k3_table4.json",
}


def load_table(number: int) -> dict:
    with resources.files("dispbound.tables").joinpath(TABLE_FILES[number]).open() as fh:
        return json.load(fh)


def _expand_S(spec, indexing: SphereIndexing) -> frozenset[str]:
    all_words = [word_to_string(w) for w in indexing.words]
    if isinstance(spec, list):
        return frozenset(spec)
    if "all_except" in spec:
        return frozenset(all_words) - frozenset(spec["all_except"])
    if "first_letter" in spec:
        return frozenset(w for w in all_words if w[0] == spec["first_letter"])
    raise ValueError(f"unknown S spec {spec!r}")


def table_triples(number: int) -> set[tuple[str, str, frozenset]]:
    """Normalized (gamma, s, S-as-word-strings) triples of a transcribed table."""
    table = load_table(number)
    indexing = enumerate_sphere(2, table["k"])
    out = set()
    for row in table["rows"]:
        g = word_to_string(parse_word(row["gamma"]))
        s = word_to_string(parse_word(row["s"]))
        out.add((g, s, _expand_S(row["S"], indexing)))
    return out


def census_triples(relations, indexing: SphereIndexing) -> set[tuple[str, str, frozenset]]:
    return {
        (
            word_to_string(r.gamma),
            word_to_string(r.s_gamma),
            frozenset(word_to_string(indexing.word(i)) for i in r.S_gamma),
        )
        for r in relations
    }


def paper_check(census: RelationCensus) -> dict:
    """Diff a census against the transcribed tables (k=2: tables 1-3; k=3: table 4)."""
    indexing = enumerate_sphere(census.n, census.k)
    if census.n != 2 or census.k not in (2, 3):
        return {"applicable": False}
    if census.k == 2:
        golden = table_triples(1) | table_triples(2) | table_triples(3)
        ours = census_triples(census.relations, indexing)
    else:
        golden = table_triples(4)
        ours = census_triples(census.with_product_length(0), indexing)

    def fmt(t):
        return {"gamma": t[0], "s": t[1], "S": sorted(t[2])}

    missing = sorted(golden - ours)
    extra = sorted(ours - golden)
    return {
        "applicable": True,
        "golden_count": len(golden),
        "census_count": len(ours),
        "missing": [fmt(t) for t in missing],
        "extra": [fmt(t) for t in extra],
        "diffs": len(missing) + len(extra),
    }


# --- on-disk memo --------------------------------------------------------

def _cache_path(n: int, k: int) -> Path | None:
    root = os.environ.get("DISPBOUND_CACHE_DIR")
    if not root:
        return None
    return Path(root) / f"relations_n{n}_k{k}.json"


def census_to_json(census: RelationCensus) -> dict:
    return {"n": census.n, "k": census.k, "relations": [r.record() for r in census.relations]}


def census_from_json(data: dict) -> RelationCensus:
    n = data["n"]
    rels = tuple(
        Relation(parse_word(r["gamma"], n), parse_word(r["s"], n), frozenset(r["S"]), r["j"])
        for r in data["relations"]
    )
    return RelationCensus(n, data["k"], rels)


def load_or_enumerate(n: int, k: int, cap: int | None = None) -> RelationCensus:
    path = _cache_path(n, k)
    if path is not None and path.exists():
        return census_from_json(json.loads(path.read_text()))
    census = enumerate_relations(n, k, cap)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(census_to_json(census)))
    return census
