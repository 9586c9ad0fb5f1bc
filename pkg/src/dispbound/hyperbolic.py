"""Upper half-space model of H^3, PSL(2,C) isometries and a Schottky test bench.

Points are w = z + t j with z complex and t > 0. A matrix [[a, b], [c, d]]
acts by w -> (a w + b)(c w + d)^-1 in the quaternions, which works out to

    z' = ((a z + b) conj(c z + d) + a conj(c) t^2) / N
    t' = t / N,          N = |c z + d|^2 + |c|^2 t^2

when ad - bc = 1.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize as nm_minimize

from .freegroup import Letter, Word, enumerate_ball, word_to_string
from .minimax import closed_form_alpha

DET_TOL = 1e-12
CLASSIFY_BAND = 1e-9
EXACT_BAND = 1e-12
RENORM_EVERY = 8


class SamplingError(RuntimeError):
    pass


def _det_divisor(det: complex, scale: float) -> complex | None:
    """sqrt(det) when det measurably differs from 1, else None.

    For large entries ad - bc is mostly rounding noise (about eps * scale), so
    rescaling by it would inject error rather than remove drift.
    """
    noise = 8 * np.finfo(float).eps * scale
    if noise >= 0.5 or abs(det - 1) <= max(DET_TOL, noise):
        return None
    if abs(det) <= max(noise, 1e-300):
        raise ValueError("singular matrix")
    return cmath.sqrt(det)


@dataclass(frozen=True)
class MoebiusMap:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(getattr(self, n)) for n in "abcd")
        det = a * d - b * c
        s = _det_divisor(det, abs(a * d) + abs(b * c))
        if s is not None:
            for name in "abcd":
                object.__setattr__(self, name, complex(getattr(self, name)) / s)
        else:
            for name in "abcd":
                object.__setattr__(self, name, complex(getattr(self, name)))

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_array(cls, m) -> "MoebiusMap":
        return cls(m[0][0], m[0][1], m[1][0], m[1][1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def on_sphere(self, z: complex) -> complex:
        """Action on the Riemann sphere; ``math.inf`` stands for infinity."""
        if z == math.inf:
            return self.a / self.c if self.c != 0 else math.inf
        den = self.c * z + self.d
        if den == 0:
            return math.inf
        return (self.a * z + self.b) / den


@dataclass(frozen=True)
class H3Point:
    z: complex
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"height must be positive, got {self.t!r}")
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "t", float(self.t))


def apply(m: MoebiusMap, p: H3Point) -> H3Point:
    q = m.c * p.z + m.d
    t2 = p.t * p.t
    den = abs(q) ** 2 + abs(m.c) ** 2 * t2
    z = ((m.a * p.z + m.b) * q.conjugate() + m.a * m.c.conjugate() * t2) / den
    return H3Point(z, p.t / den)


def distance(p: H3Point, q: H3Point) -> float:
    num = abs(p.z - q.z) ** 2 + (p.t - q.t) ** 2
    return math.acosh(1.0 + num / (2.0 * p.t * q.t))


def classify(m: MoebiusMap) -> str:
    """identity / parabolic / elliptic / loxodromic, or indeterminate near a boundary."""
    tr2 = m.trace**2
    off4 = abs(tr2 - 4)
    if off4 <= EXACT_BAND:
        near_id = max(abs(m.b), abs(m.c), abs(m.a - m.d)) <= 1e-9
        return "identity" if near_id else "parabolic"
    if off4 < CLASSIFY_BAND:
        return "indeterminate"
    im, re = abs(tr2.imag), tr2.real
    if im <= EXACT_BAND and 0 <= re < 4:
        return "elliptic"
    if im < CLASSIFY_BAND and -CLASSIFY_BAND < re < 4 + CLASSIFY_BAND:
        return "indeterminate"
    if im <= EXACT_BAND and -CLASSIFY_BAND < re < 0:
        return "indeterminate"
    return "loxodromic"


def translation_length(m: MoebiusMap) -> float:
    """Real part of the complex translation length, 2 Re arccosh(tr/2)."""
    return 2.0 * abs(cmath.acosh(m.trace / 2).real)


# --- words to matrices ----------------------------------------------------

def word_to_matrix(w: Word, generators) -> MoebiusMap:
    """Left fold of letter matrices; ``generators[i]`` is the image of x_{i+1}."""
    if len(generators) != w.rank:
        raise ValueError("need one matrix per generator")
    inverses = [g.inverse() for g in generators]
    acc = np.eye(2, dtype=complex)
    for step, code in enumerate(w.letters, start=1):
        let = Letter.from_code(code, w.rank)
        g = (inverses if let.inverted else generators)[let.generator_index - 1]
        acc = acc @ g.as_array()
        if step % RENORM_EVERY == 0:
            det = acc[0, 0] * acc[1, 1] - acc[0, 1] * acc[1, 0]
            s = _det_divisor(det, abs(acc[0, 0] * acc[1, 1]) + abs(acc[0, 1] * acc[1, 0]))
            if s is not None:
                acc = acc / s
    return MoebiusMap.from_array(acc)


def _stack(maps) -> tuple[np.ndarray, ...]:
    arr = np.array([[m.a, m.b, m.c, m.d] for m in maps], dtype=complex)
    return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]


def displacements(stack, p: H3Point) -> np.ndarray:
    """dist(p, g p) for every map in a stacked (a, b, c, d) array."""
    a, b, c, d = stack
    q = c * p.z + d
    t2 = p.t * p.t
    den = np.abs(q) ** 2 + np.abs(c) ** 2 * t2
    z = ((a * p.z + b) * np.conj(q) + a * np.conj(c) * t2) / den
    t = p.t / den
    num = np.abs(z - p.z) ** 2 + (t - p.t) ** 2
    return np.arccosh(1.0 + num / (2.0 * p.t * t))


# --- Schottky pairs --------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z) -> bool:
        return abs(z - self.center) < self.radius


@dataclass
class SchottkyConfig:
    margin_factor: float = 0.9     # radii <= margin_factor * gap / 2
    ring_radius: float = 1.0
    angle_jitter: float = 0.3      # fraction of a quarter turn
    radius_floor: float = 0.3      # radii drawn in [floor, 1] * bound
    boundary_samples: int = 64
    probe_offset: float = 1e-3     # relative offset of probe points off the circles
    attempts: int = 100

    def to_dict(self) -> dict:
        return asdict(self)


def pairing_map(src: Disk, dst: Disk, theta: float) -> MoebiusMap:
    """The map z -> c2 + k/(z - c1), |k| = r1 r2, carrying ext(src) onto int(dst)."""
    k = src.radius * dst.radius * cmath.exp(1j * theta)
    c1, c2 = src.center, dst.center
    return MoebiusMap(c2, k - c1 * c2, 1, -c1)


@dataclass
class SchottkyPair:
    xi: MoebiusMap
    eta: MoebiusMap
    disks: tuple[Disk, Disk, Disk, Disk]
    seed: int | None = None
    certificate: dict = field(default_factory=dict)

    @property
    def generators(self) -> tuple[MoebiusMap, MoebiusMap]:
        return (self.xi, self.eta)

    @property
    def certified(self) -> bool:
        return bool(self.certificate.get("valid", False))


def _pairing_margin(m: MoebiusMap, src: Disk, dst: Disk, samples: int, offset: float):
    ang = np.exp(2j * np.pi * np.arange(samples) / samples)
    on = src.center + src.radius * ang
    off = src.center + src.radius * (1 + offset) * ang
    a, b, c, d = m.a, m.b, m.c, m.d
    img_on = (a * on + b) / (c * on + d)
    img_off = (a * off + b) / (c * off + d)
    circle_err = float(np.max(np.abs(np.abs(img_on - dst.center) - dst.radius)))
    inside = float(np.min(dst.radius - np.abs(img_off - dst.center)))
    return circle_err, inside


def certify(pair: SchottkyPair, cfg: SchottkyConfig | None = None) -> dict:
    """Numerical ping-pong certificate for a pair built on four disks."""
    cfg = cfg or SchottkyConfig()
    D = pair.disks
    gaps = [
        abs(D[i].center - D[j].center) - D[i].radius - D[j].radius
        for i in range(4) for j in range(i + 1, 4)
    ]
    checks = [
        (pair.xi, D[0], D[1]),
        (pair.xi.inverse(), D[1], D[0]),
        (pair.eta, D[2], D[3]),
        (pair.eta.inverse(), D[3], D[2]),
    ]
    errs, insides = zip(*(_pairing_margin(m, s, t, cfg.boundary_samples, cfg.probe_offset)
                          for m, s, t in checks))
    infinity_ok = all(t.contains(m.on_sphere(math.inf)) for m, _, t in checks)
    types = {
        "xi": classify(pair.xi),
        "eta": classify(pair.eta),
        "xi_eta": classify(pair.xi @ pair.eta),
    }
    valid = (
        min(gaps) > 0
        and max(errs) < 1e-9
        and min(insides) > 0
        and infinity_ok
        and all(v == "loxodromic" for v in types.values())
    )
    return {
        "valid": bool(valid),
        "min_disk_gap": float(min(gaps)),
        "max_circle_error": float(max(errs)),
        "min_image_margin": float(min(insides)),
        "infinity_inside": bool(infinity_ok),
        "types": types,
    }


def sample_schottky(seed: int, cfg: SchottkyConfig | None = None) -> SchottkyPair:
    cfg = cfg or SchottkyConfig()
    if not 0 < cfg.margin_factor < 1:
        raise ValueError("margin_factor must lie in (0, 1)")
    if cfg.attempts < 1:
        raise ValueError("attempts must be >= 1")
    rng = np.random.default_rng(seed)
    last = None
    for _ in range(cfg.attempts):
        base = rng.uniform(0, 2 * np.pi)
        jitter = rng.uniform(-1, 1, 4) * cfg.angle_jitter * np.pi / 4
        angles = base + np.arange(4) * np.pi / 2 + jitter
        centers = cfg.ring_radius * np.exp(1j * angles)
        gap = min(abs(centers[i] - centers[j]) for i in range(4) for j in range(i + 1, 4))
        radii = rng.uniform(cfg.radius_floor, 1.0, 4) * cfg.margin_factor * gap / 2
        order = rng.permutation(4)
        disks = tuple(Disk(complex(centers[i]), float(radii[i])) for i in order)
        th1, th2 = rng.uniform(0, 2 * np.pi, 2)
        pair = SchottkyPair(
            pairing_map(disks[0], disks[1], th1),
            pairing_map(disks[2], disks[3], th2),
            disks,
            seed,
        )
        pair.certificate = certify(pair, cfg)
        if pair.certified:
            return pair
        last = pair.certificate
    raise SamplingError(f"no certified pair after {cfg.attempts} attempts (last: {last})")


# --- the displacement bound -----------------------------------------------

def bound_for(k: int, n: int = 2) -> float:
    return 0.5 * math.log(closed_form_alpha(n, k))


class WordBank:
    """Matrices of every nontrivial word of length <= k for a fixed pair."""

    def __init__(self, pair: SchottkyPair, k: int):
        if k < 2:
            raise ValueError("need k >= 2")
        self.k = k
        self.words = enumerate_ball(2, k)
        self.maps = [word_to_matrix(w, pair.generators) for w in self.words]
        self.stack = _stack(self.maps)

    def max_displacement(self, p: H3Point) -> tuple[float, int]:
        vals = displacements(self.stack, p)
        i = int(np.argmax(vals))
        return float(vals[i]), i


def test_bound(pair: SchottkyPair, k: int, z0: H3Point, bank: WordBank | None = None) -> dict:
    """D = max over the radius-k ball of dist(z0, g z0) against the bound."""
    bank = bank if bank is not None and bank.k == k else WordBank(pair, k)
    D, i = bank.max_displacement(z0)
    bound = bound_for(k)
    return {
        "k": k,
        "z0": [z0.z.real, z0.z.imag, z0.t],
        "D": D,
        "bound": bound,
        "margin": D - bound,
        "argmax_word": word_to_string(bank.words[i]),
        "status": "certified" if pair.certified else "hypothesis unverified",
    }


# test_bound is not a pytest test despite the name
test_bound.__test__ = False


def sample_base_points(seed: int, count: int, scale: float = 1.0) -> list[H3Point]:
    """Base points spread over the hull of the disks: |z| <= 2 scale, log-uniform heights."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    r = 2 * scale * np.sqrt(rng.random(count))
    phi = rng.uniform(0, 2 * np.pi, count)
    t = scale * np.exp(rng.uniform(math.log(0.05), math.log(5.0), count))
    return [H3Point(complex(ri * np.cos(pi), ri * np.sin(pi)), float(ti)) for ri, pi, ti in zip(r, phi, t)]


def infimum_search(bank: WordBank, scale: float = 1.0, grid: int = 7) -> dict:
    """Grid over (Re z, Im z, log t) then Nelder-Mead on the max displacement.

    The result is an upper bound on inf over z0 of the max displacement.
    """
    xs = np.linspace(-scale, scale, grid)
    ts = scale * np.exp(np.linspace(math.log(0.1), math.log(3.0), grid))

    def obj(v):
        return bank.max_displacement(H3Point(complex(v[0], v[1]), math.exp(v[2])))[0]

    best = min(
        ((obj((x, y, math.log(t))), (x, y, math.log(t))) for x in xs for y in xs for t in ts),
        key=lambda p: p[0],
    )
    res = nm_minimize(obj, np.array(best[1]), method="Nelder-Mead",
                      options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000})
    v = res.x if res.fun <= best[0] else np.array(best[1])
    return {"z0": H3Point(complex(v[0], v[1]), math.exp(v[2])), "D": float(min(res.fun, best[0]))}


@dataclass
class TrialConfig:
    k: int = 2
    trials: int = 100
    seed: int = 7
    base_points: int = 10
    infimum: bool = False
    threads: int = 1
    schottky: SchottkyConfig = field(default_factory=SchottkyConfig)

    def to_dict(self) -> dict:
        return asdict(self)


def trial_seeds(cfg: TrialConfig) -> list[int]:
    ss = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    return [int(s.generate_state(1)[0]) for s in ss]


def run_trial(seed: int, cfg: TrialConfig) -> list[dict]:
    pair = sample_schottky(seed, cfg.schottky)
    bank = WordBank(pair, cfg.k)
    pts = sample_base_points(seed, cfg.base_points, cfg.schottky.ring_radius)
    rows = []
    for p in pts:
        rows.append({"seed": seed, "kind": "sampled", **test_bound(pair, cfg.k, p, bank)})
    if cfg.infimum:
        inf = infimum_search(bank, cfg.schottky.ring_radius)
        rows.append({"seed": seed, "kind": "infimum", **test_bound(pair, cfg.k, inf["z0"], bank)})
    return rows


def run_trials(cfg: TrialConfig) -> dict:
    seeds = trial_seeds(cfg)
    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            chunks = list(ex.map(lambda s: run_trial(s, cfg), seeds))
    else:
        chunks = [run_trial(s, cfg) for s in seeds]
    rows = [r for c in chunks for r in c]
    margins = [r["margin"] for r in rows]
    return {
        "config": cfg.to_dict(),
        "rows": rows,
        "min_margin": float(min(margins)),
        "violations": sum(m < 0 for m in margins),
        "bound": bound_for(cfg.k),
        "scope": "Schottky (geometrically finite) pairs only",
    }
