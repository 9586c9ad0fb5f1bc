"""Displacement functions x -> sigma(sum_A x) * sigma(x_t) on the open simplex.

Indices are 1-based everywhere in the public API, matching the sphere
enumeration; arrays are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .freegroup import SphereIndexing, word_to_string
from .relations import RelationCensus

SIMPLEX_TOL = 1e-12
TIE_RTOL = 1e-9
CLAMP_LO = 1e-300
CLAMP_HI = 1.0 - 1e-16


class DomainError(ValueError):
    pass


def sigma(x: float) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"sigma is defined on (0, 1), got {x!r}")
    return (1.0 - x) / x


def _sigma_clamped(v: np.ndarray) -> tuple[np.ndarray, bool]:
    c = np.clip(v, CLAMP_LO, CLAMP_HI)
    return (1.0 - c) / c, bool(np.any(c != v))


@dataclass(frozen=True)
class SimplexPoint:
    coords: np.ndarray
    renormalized: bool = False

    @classmethod
    def from_array(cls, values) -> "SimplexPoint":
        x = np.asarray(values, dtype=float).copy()
        if x.ndim != 1 or x.size < 2:
            raise DomainError("simplex point must be a vector of length >= 2")
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            raise DomainError("simplex coordinates must be finite and strictly positive")
        total = x.sum()
        renorm = bool(abs(total - 1.0) > SIMPLEX_TOL)
        if renorm:
            x /= total
        x.setflags(write=False)
        return cls(x, renorm)

    @classmethod
    def uniform(cls, d: int) -> "SimplexPoint":
        return cls.from_array(np.full(d, 1.0 / d))

    @property
    def d(self) -> int:
        return self.coords.size

    def __getitem__(self, i: int) -> float:
        return float(self.coords[i - 1])


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, SimplexPoint) else np.asarray(x, dtype=float)


def block_sum(x, j: int, n: int = 2, k: int | None = None) -> float:
    """Partial sum over block I_j; blocks have (2n-1)^(k-1) consecutive indices."""
    v = _coords(x)
    size = v.size // (2 * n)
    if k is not None and size != (2 * n - 1) ** (k - 1):
        raise ValueError(f"point of dimension {v.size} does not match n={n}, k={k}")
    if not 1 <= j <= 2 * n:
        raise ValueError(f"block index {j} outside [1, {2 * n}]")
    return float(v[(j - 1) * size : j * size].sum())


@dataclass(frozen=True)
class DisplacementFunction:
    numerator_set: frozenset
    target_index: int
    product_length: int
    gamma: str = ""
    s: str = ""

    @property
    def tag(self) -> str:
        return "F" if self.product_length == 0 else f"g{self.product_length}"

    @property
    def is_F(self) -> bool:
        return self.product_length == 0


def eval_function(f: DisplacementFunction, x) -> float:
    v = _coords(x)
    idx = np.fromiter(f.numerator_set, dtype=int) - 1
    total = float(v[idx].sum())
    return sigma(total) * sigma(float(v[f.target_index - 1]))


def gradient(f: DisplacementFunction, x) -> np.ndarray:
    v = _coords(x)
    idx = np.fromiter(f.numerator_set, dtype=int) - 1
    total = float(v[idx].sum())
    xt = float(v[f.target_index - 1])
    g = np.zeros_like(v)
    g[idx] = -sigma(xt) / total**2
    g[f.target_index - 1] += -sigma(total) / xt**2
    return g


@dataclass
class FunctionFamily:
    n: int
    k: int
    d: int
    G_all: list[DisplacementFunction]
    blocks: list[range]
    _A: np.ndarray = field(init=False, repr=False)
    _t: np.ndarray = field(init=False, repr=False)
    _F_rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.zeros((len(self.G_all), self.d))
        for r, f in enumerate(self.G_all):
            A[r, np.fromiter(f.numerator_set, dtype=int) - 1] = 1.0
        self._A = A
        self._t = np.array([f.target_index - 1 for f in self.G_all])
        F_rows = [r for r, f in enumerate(self.G_all) if f.is_F]
        F_rows.sort(key=lambda r: self.G_all[r].target_index)
        self._F_rows = np.array(F_rows, dtype=int)

    @property
    def F_subset(self) -> list[DisplacementFunction]:
        return [self.G_all[r] for r in self._F_rows]

    def rows(self, which: str) -> np.ndarray:
        if which == "F":
            return self._F_rows
        if which == "G":
            return np.arange(len(self.G_all))
        raise ValueError(f"which must be 'F' or 'G', got {which!r}")

    def members(self, which: str) -> list[DisplacementFunction]:
        return [self.G_all[r] for r in self.rows(which)]

    def values(self, x, which: str = "G", report_saturation: bool = False):
        v = _coords(x)
        rows = self.rows(which)
        sums = self._A[rows] @ v
        s1, sat1 = _sigma_clamped(sums)
        s2, sat2 = _sigma_clamped(v[self._t[rows]])
        with np.errstate(over="ignore"):
            out = s1 * s2
        if report_saturation:
            return out, sat1 or sat2
        return out

    def log_values(self, x, which: str = "G") -> np.ndarray:
        """log of each member's value, finite even where the product would overflow."""
        v = _coords(x)
        rows = self.rows(which)
        sums = np.clip(self._A[rows] @ v, CLAMP_LO, CLAMP_HI)
        xt = np.clip(v[self._t[rows]], CLAMP_LO, CLAMP_HI)
        return np.log1p(-sums) - np.log(sums) + np.log1p(-xt) - np.log(xt)

    def gradients(self, x, which: str = "G", rows: np.ndarray | None = None) -> np.ndarray:
        """Row r holds the gradient of member r (restricted to ``rows`` if given)."""
        v = _coords(x)
        rows = self.rows(which) if rows is None else rows
        A = self._A[rows]
        sums = np.clip(A @ v, CLAMP_LO, CLAMP_HI)
        xt = np.clip(v[self._t[rows]], CLAMP_LO, CLAMP_HI)
        sig_sum = (1.0 - sums) / sums
        sig_t = (1.0 - xt) / xt
        G = A * (-sig_t / sums**2)[:, None]
        G[np.arange(len(rows)), self._t[rows]] += -sig_sum / xt**2
        return G

    def _max(self, x, which: str) -> tuple[float, set[int]]:
        vals = self.values(x, which)
        top = float(vals.max())
        ties = np.nonzero(vals >= top * (1.0 - TIE_RTOL))[0]
        return top, {int(self.rows(which)[r]) for r in ties}

    def eval_F(self, x) -> tuple[float, set[int]]:
        """Max of the F members; the tie set holds row indices into ``G_all``."""
        return self._max(x, "F")

    def eval_G(self, x) -> tuple[float, set[int]]:
        return self._max(x, "G")

    def index_permutation_preserves(self, perm: dict[int, int], which: str = "F") -> bool:
        fam = {(f.numerator_set, f.target_index) for f in self.members(which)}
        img = {
            (frozenset(perm[i] for i in f.numerator_set), perm[f.target_index])
            for f in self.members(which)
        }
        return fam == img


def build_family(census: RelationCensus, indexing: SphereIndexing) -> FunctionFamily:
    if (census.n, census.k) != (indexing.rank, indexing.radius):
        raise ValueError("census and indexing disagree on (n, k)")
    funcs = [
        DisplacementFunction(
            numerator_set=frozenset(r.S_gamma),
            target_index=indexing.index_of[r.s_gamma.letters],
            product_length=r.product_length,
            gamma=word_to_string(r.gamma),
            s=word_to_string(r.s_gamma),
        )
        for r in census.relations
    ]
    b = indexing.block_size()
    blocks = [range(j * b + 1, (j + 1) * b + 1) for j in range(2 * census.n)]
    return FunctionFamily(census.n, census.k, indexing.d, funcs, blocks)


def family_for(n: int, k: int) -> FunctionFamily:
    from .freegroup import enumerate_sphere
    from .relations import load_or_enumerate

    return build_family(load_or_enumerate(n, k), enumerate_sphere(n, k))


def numerator_block(f: DisplacementFunction, family: FunctionFamily) -> int | None:
    """Block j with A = I_j, or None when A is not a single block."""
    for j, blk in enumerate(family.blocks, start=1):
        if f.numerator_set == frozenset(blk):
            return j
    return None
