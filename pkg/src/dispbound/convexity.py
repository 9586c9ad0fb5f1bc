"""Hessians of the two-variable reductions f, g and their convexity regions.

    f(x, y) = sigma(x) sigma(y)
    g(x, y) = sigma(x + y) sigma(y)

on the open triangle x, y > 0, x + y < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispfun import FunctionFamily, SimplexPoint, _coords, numerator_block

SQRT2 = math.sqrt(2.0)
CF_SLOPE = 18.0 - 8.0 * SQRT2
CF_RHS = 3.0 + SQRT2
TANGENCY_POINT = ((2.0 - SQRT2) / 2.0, SQRT2 / 4.0)
PD_MARGIN = 1e-12


def _check_triangle(x: float, y: float) -> None:
    if not (x > 0 and y > 0 and x + y < 1):
        raise ValueError(f"({x}, {y}) is outside the open triangle")


def f_two(x, y):
    return (1 - x) / x * (1 - y) / y


def g_two(x, y):
    return (1 - x - y) / (x + y) * (1 - y) / y


def hessian_f(x: float, y: float) -> np.ndarray:
    _check_triangle(x, y)
    fxx = 2 * (1 - y) / (x**3 * y)
    fxy = 1 / (x**2 * y**2)
    fyy = 2 * (1 - x) / (y**3 * x)
    return np.array([[fxx, fxy], [fxy, fyy]])


def det_hessian_f(x, y):
    return (3 + 4 * x * (-1 + y) - 4 * y) / (x**4 * y**4)


def hessian_g(x: float, y: float) -> np.ndarray:
    _check_triangle(x, y)
    s = x + y
    gxx = 2 * (1 - y) / (s**3 * y)
    gxy = (x + 3 * y - 2 * y**2) / (s**3 * y**2)
    gyy = 2 * (x**2 + 3 * x * y + 3 * y**2 - x**3 - 3 * x**2 * y - 3 * x * y**2 - 2 * y**3) / (
        y**3 * s**3
    )
    return np.array([[gxx, gxy], [gxy, gyy]])


def det_hessian_g(x, y):
    return (3 + 4 * x * (-1 + y) - 8 * y + 4 * y**2) / (y**4 * (x + y) ** 4)


def f_det_zero_x(y):
    """x on the curve det H_f = 0, i.e. (1 - x)(1 - y) = 1/4."""
    return 1 - 1 / (4 * (1 - y))


def g_det_zero_x(y):
    """x on the boundary of C_g, where det H_g = 0."""
    return (0.75 + y**2 - 2 * y) / (1 - y)


def g_boundary_second_derivative(y):
    return 1 / (2 * (-1 + y) ** 3)


@dataclass(frozen=True)
class Region2:
    kind: str  # "Cf" or "Cg"

    def residual(self, x, y):
        """Negative inside; the region is {residual < 0} within the triangle."""
        if self.kind == "Cf":
            return 7 * x + CF_SLOPE * y - CF_RHS
        if self.kind == "Cg":
            return x + 2 * y - x * y - y**2 - 0.75
        raise ValueError(f"unknown region kind {self.kind!r}")

    def hessian(self, x, y):
        return hessian_f(x, y) if self.kind == "Cf" else hessian_g(x, y)


CF = Region2("Cf")
CG = Region2("Cg")


def in_region2(r: Region2, x: float, y: float) -> bool:
    return bool(x > 0 and y > 0 and x + y < 1 and r.residual(x, y) < 0)


@dataclass(frozen=True)
class RegionD:
    """C_{f_i}: convexity region of the F member with target i and numerator block j."""

    i: int
    j: int
    n: int
    k: int

    @property
    def block(self) -> range:
        size = (2 * self.n - 1) ** (self.k - 1)
        return range((self.j - 1) * size + 1, self.j * size + 1)

    @property
    def target_in_block(self) -> bool:
        return self.i in self.block

    def residual(self, x) -> float:
        v = _coords(x)
        blk = np.array(self.block) - 1
        xi = float(v[self.i - 1])
        total = float(v[blk].sum())
        if self.target_in_block:
            rest = total - xi
            return rest + 2 * xi - rest * xi - xi**2 - 0.75
        return 7 * total + CF_SLOPE * xi - CF_RHS


def in_regionD(r: RegionD, x) -> bool:
    return r.residual(x) < 0


def regions_for_family(family: FunctionFamily) -> list[RegionD]:
    out = []
    for f in family.F_subset:
        j = numerator_block(f, family)
        if j is None:
            raise ValueError(f"F member with target {f.target_index} has no block numerator")
        out.append(RegionD(f.target_index, j, family.n, family.k))
    return out


def pd_status(H: np.ndarray, margin: float = PD_MARGIN) -> str:
    """'pd', 'not_pd' or 'indeterminate' from the leading principal minors."""
    m1 = H[0, 0]
    m2 = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
    if m1 > margin and m2 > margin:
        return "pd"
    if m1 < -margin or m2 < -margin:
        return "not_pd"
    return "indeterminate"


def _sample_triangle(rng: np.random.Generator, size: int) -> np.ndarray:
    u = rng.random((size, 2))
    flip = u.sum(axis=1) >= 1
    u[flip] = 1 - u[flip]
    return u


def _rejection_sample(rng, accept, count, batch=4096, max_rounds=10_000):
    got: list[np.ndarray] = []
    n = 0
    for _ in range(max_rounds):
        pts = _sample_triangle(rng, batch)
        pts = pts[(pts > 0).all(axis=1) & (pts.sum(axis=1) < 1)]
        pts = pts[accept(pts[:, 0], pts[:, 1])]
        got.append(pts)
        n += len(pts)
        if n >= count:
            break
    return np.concatenate(got)[:count]


@dataclass
class PDReport:
    region: str
    samples: int
    seed: int
    inside_pd: int = 0
    inside_not_pd: int = 0
    inside_indeterminate: int = 0
    min_margin: float = math.inf
    outside_samples: int = 0
    outside_not_pd: int = 0
    outside_example: list | None = None
    batch_seeds: list = field(default_factory=list)

    @property
    def inside_all_pd(self) -> bool:
        return self.inside_pd == self.samples

    def to_dict(self) -> dict:
        return {
            "region": self.region,
            "samples": self.samples,
            "seed": self.seed,
            "batch_seeds": self.batch_seeds,
            "inside": {
                "pd": self.inside_pd,
                "not_pd": self.inside_not_pd,
                "indeterminate": self.inside_indeterminate,
                "all_pd": self.inside_all_pd,
                "min_scaled_margin": self.min_margin,
            },
            "outside": {
                "samples": self.outside_samples,
                "not_pd": self.outside_not_pd,
                "example": self.outside_example,
            },
        }


def _scaled_minors(H: np.ndarray) -> tuple[float, float]:
    # minors divided by their natural magnitude so the margin is scale-free
    scale = max(abs(H[0, 0]), abs(H[1, 1]), abs(H[0, 1]))
    m1 = H[0, 0] / scale
    m2 = (H[0, 0] * H[1, 1] - H[0, 1] ** 2) / scale**2
    return m1, m2


def pd_scan(region: Region2, samples: int, seed: int, batches: int = 4,
            outside_gap: float = 0.05) -> PDReport:
    """Rejection-sample the region and test positive definiteness of the matching Hessian."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(batches)
    report = PDReport(region.kind, samples, seed,
                      batch_seeds=[int(s.generate_state(1)[0]) for s in seeds])
    sizes = [samples // batches + (1 if b < samples % batches else 0) for b in range(batches)]
    for ss, size in zip(seeds, sizes):
        if size == 0:
            continue
        rng = np.random.default_rng(ss)
        inside = _rejection_sample(rng, lambda x, y: region.residual(x, y) < 0, size)
        for x, y in inside:
            H = region.hessian(x, y)
            status = pd_status(H)
            m1, m2 = _scaled_minors(H)
            report.min_margin = min(report.min_margin, m1, m2)
            if status == "pd":
                report.inside_pd += 1
            elif status == "not_pd":
                report.inside_not_pd += 1
            else:
                report.inside_indeterminate += 1
        outside = _rejection_sample(rng, lambda x, y: region.residual(x, y) > outside_gap, size)
        for x, y in outside:
            report.outside_samples += 1
            if pd_status(region.hessian(x, y)) == "not_pd":
                report.outside_not_pd += 1
                if report.outside_example is None:
                    report.outside_example = [float(x), float(y)]
    return report


def region_membership(family: FunctionFamily, x) -> dict:
    """Residuals of every C_{f_i} at x (all negative means x lies in the intersection)."""
    regions = regions_for_family(family)
    res = [r.residual(x) for r in regions]
    return {
        "all_inside": all(v < 0 for v in res),
        "max_residual": float(max(res)),
        "outside": [r.i for r, v in zip(regions, res) if v >= 0],
        "kinds": {
            "C1": sum(r.target_in_block for r in regions),
            "C2": sum(not r.target_in_block for r in regions),
        },
    }


def region_membership_uniform(family: FunctionFamily) -> dict:
    return region_membership(family, SimplexPoint.uniform(family.d))
