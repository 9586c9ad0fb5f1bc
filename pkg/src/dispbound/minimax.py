"""Minimax over the open simplex: minimize max_i f_i(x) for a displacement family.

The solver runs three stages per restart:

1. entropic mirror descent on a log-sum-exp smoothing of max_i log f_i,
   annealing the temperature from 1 down to 1e-4;
2. entropic subgradient descent on the unsmoothed max with steps c/sqrt(t),
   averaging gradients over the tie set;
3. an active-set Newton polish that solves f_a(x) = alpha for the near-active
   members a together with sum(x) = 1. The polished point is kept only if it
   lowers the true objective.

Working with log f instead of f keeps step sizes comparable across k.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import nnls

from .dispfun import TIE_RTOL, FunctionFamily, SimplexPoint
from .freegroup import enumerate_sphere, letter_permutations, relabel


def closed_form_alpha(n: int, k: int) -> int:
    if n < 2 or k < 2:
        raise ValueError("need n >= 2 and k >= 2")
    m = 2 * n - 1
    return m * (2 * n * m ** (k - 1) - 1)


@dataclass
class SolverConfig:
    tol: float = 1e-9
    max_iter: int = 400
    restarts: int = 10
    seed: int = 42
    temperatures: tuple = (1.0, 0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 3e-4, 1e-4)
    subgradient_iters: int = 200
    step_constant: float = 0.05
    tie_tol: float = TIE_RTOL
    active_tol: float = 1e-2
    polish: bool = True
    polish_iters: int = 60
    kkt_tol: float = 1e-6
    threads: int = 1
    start: str = "dirichlet"  # or "facet": one coordinate pushed to 1e-6

    def to_dict(self) -> dict:
        d = asdict(self)
        d["temperatures"] = list(self.temperatures)
        return d


@dataclass
class MinimaxResult:
    x_star: SimplexPoint
    alpha_star: float
    iterations: int
    restarts: int
    tie_set: list[int]
    converged: bool
    residuals: dict
    which: str = "F"
    best_restart: int = 0
    restart_alphas: list[float] = field(default_factory=list)
    restart_points: list[np.ndarray] = field(default_factory=list, repr=False)
    stage_history: list[float] = field(default_factory=list)
    kkt: dict = field(default_factory=dict)

    def to_dict(self, include_points: bool = False) -> dict:
        out = {
            "which": self.which,
            "alpha_star": self.alpha_star,
            "x_star": [float(v) for v in self.x_star.coords],
            "iterations": self.iterations,
            "restarts": self.restarts,
            "best_restart": self.best_restart,
            "tie_set": self.tie_set,
            "tie_set_size": len(self.tie_set),
            "converged": self.converged,
            "residuals": self.residuals,
            "restart_alphas": self.restart_alphas,
            "stage_history": self.stage_history,
            "kkt": self.kkt,
        }
        if include_points:
            out["restart_points"] = [[float(v) for v in p] for p in self.restart_points]
        return out


def _floor(x: np.ndarray) -> np.ndarray:
    d = x.size
    x = np.maximum(x, 1e-9 / d)
    return x / x.sum()


def _md_step(x: np.ndarray, g: np.ndarray, eta: float) -> np.ndarray:
    # shift so every exponent is <= 0
    y = x * np.exp(-eta * (g - g.min()))
    y /= y.sum()
    return _floor(y) if y.min() < 1e-300 else y


class _Objective:
    def __init__(self, family: FunctionFamily, which: str):
        self.family = family
        self.which = which
        self.rows = family.rows(which)

    def logvals(self, x):
        return self.family.log_values(x, self.which)

    def value(self, x) -> float:
        with np.errstate(over="ignore"):
            return float(self.family.values(x, self.which).max())

    def smoothed(self, x, T):
        lv = self.logvals(x)
        m = lv.max()
        w = np.exp((lv - m) / T)
        s = w.sum()
        return m + T * math.log(s), w / s, lv

    def smoothed_grad(self, x, w, lv):
        keep = w > 1e-14
        rows = self.rows[keep]
        G = self.family.gradients(x, rows=rows)
        vals = np.exp(lv[keep])
        return (w[keep] / vals) @ G

    def tie_rows(self, x, rtol):
        vals = self.family.values(x, self.which)
        top = vals.max()
        return self.rows[vals >= top * (1 - rtol)], vals


def _smoothing_stage(obj: _Objective, x, cfg: SolverConfig, history: list[float]):
    iters = 0
    eta = 1.0
    best = obj.value(x)
    for T in cfg.temperatures:
        phi, w, lv = obj.smoothed(x, T)
        prev = phi
        for _ in range(cfg.max_iter):
            g = obj.smoothed_grad(x, w, lv)
            accepted = False
            for _ in range(40):
                xn = _md_step(x, g, eta)
                phin, wn, lvn = obj.smoothed(xn, T)
                if math.isfinite(phin) and phin <= phi - 1e-4 * float(g @ (x - xn)):
                    accepted = True
                    break
                eta *= 0.5
            iters += 1
            if not accepted:
                break
            x, phi, w, lv = xn, phin, wn, lvn
            eta = min(eta * 2.0, 1e6)
            if prev - phi <= cfg.tol * max(1.0, abs(phi)) * 1e-3:
                break
            prev = phi
        best = min(best, obj.value(x))
        history.append(best)
    return x, iters


def _subgradient_stage(obj: _Objective, x, cfg: SolverConfig, history: list[float]):
    best_x, best = x, obj.value(x)
    for t in range(1, cfg.subgradient_iters + 1):
        rows, vals = obj.tie_rows(x, cfg.tie_tol)
        G = obj.family.gradients(x, rows=rows)
        top = vals.max()
        g = G.mean(axis=0) / top
        gn = np.abs(g - g.mean()).max()
        if gn == 0:
            break
        x = _md_step(x, g, cfg.step_constant / (gn * math.sqrt(t)))
        v = obj.value(x)
        if v < best:
            best, best_x = v, x
    history.append(best)
    return best_x, cfg.subgradient_iters


def _newton_polish(obj: _Objective, x, cfg: SolverConfig, history: list[float]):
    """Solve log f_a(x) = log alpha on the near-active set, sum(x) = 1."""
    best = obj.value(x)
    rows, vals = obj.tie_rows(x, cfg.active_tol)
    if len(rows) < 2:
        history.append(best)
        return x, 0, False
    d = x.size
    z = np.concatenate([x, [math.log(vals.max())]])
    ok = False
    it = 0
    for it in range(1, cfg.polish_iters + 1):
        xc = z[:d]
        lv = np.log(obj.family.values(xc, "G")[rows])
        r = np.concatenate([lv - z[d], [xc.sum() - 1.0]])
        if np.abs(r).max() < 1e-15:
            ok = True
            break
        G = obj.family.gradients(xc, rows=rows) / np.exp(lv)[:, None]
        J = np.zeros((len(rows) + 1, d + 1))
        J[: len(rows), :d] = G
        J[: len(rows), d] = -1.0
        J[len(rows), :d] = 1.0
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-8:
            zn = z + lam * step
            if zn[:d].min() > 0:
                lvn = np.log(obj.family.values(zn[:d], "G")[rows])
                rn = np.concatenate([lvn - zn[d], [zn[:d].sum() - 1.0]])
                if np.abs(rn).max() < np.abs(r).max() or lam < 1e-3:
                    break
            lam *= 0.5
        else:
            break
        z = zn
        if np.abs(step).max() < 1e-16:
            ok = True
            break
    xp = z[:d] / z[:d].sum()
    if xp.min() > 0 and obj.value(xp) <= best:
        history.append(obj.value(xp))
        return xp, it, ok
    history.append(best)
    return x, it, False


def _start_point(rng: np.random.Generator, d: int, mode: str) -> np.ndarray:
    x = rng.dirichlet(np.ones(d))
    if mode == "facet":
        x[rng.integers(d)] = 1e-6
        x /= x.sum()
    return _floor(x)


def _run_restart(family, which, cfg, seed_seq):
    rng = np.random.default_rng(seed_seq)
    obj = _Objective(family, which)
    x = _start_point(rng, family.d, cfg.start)
    history = [obj.value(x)]
    x, it1 = _smoothing_stage(obj, x, cfg, history)
    x, it2 = _subgradient_stage(obj, x, cfg, history)
    polished = False
    it3 = 0
    if cfg.polish:
        x, it3, polished = _newton_polish(obj, x, cfg, history)
    return x, obj.value(x), it1 + it2 + it3, polished, history


def kkt_certificate(family: FunctionFamily, x, which: str = "F", rtol: float = TIE_RTOL) -> dict:
    """Smallest projected norm over convex combinations of tie-set gradients.

    A zero projected norm means some convex combination of active gradients is
    parallel to (1, ..., 1), the first-order optimality condition on the simplex.
    """
    obj = _Objective(family, which)
    rows, vals = obj.tie_rows(np.asarray(x), rtol)
    G = family.gradients(np.asarray(x), rows=rows)
    P = G - G.mean(axis=1, keepdims=True)
    scale = np.abs(G).max()
    rho = 1e3
    A = np.vstack([P.T / scale, rho * np.ones((1, len(rows)))])
    b = np.concatenate([np.zeros(P.shape[1]), [rho]])
    lam, _ = nnls(A, b)
    lam = lam / lam.sum()
    norm = float(np.linalg.norm(P.T @ lam) / scale)
    return {"tie_size": int(len(rows)), "projected_norm": norm}


def minimize(family: FunctionFamily, which: str = "F", cfg: SolverConfig | None = None) -> MinimaxResult:
    cfg = cfg or SolverConfig()
    family.rows(which)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    if cfg.threads > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            runs = list(pool.map(lambda s: _run_restart(family, which, cfg, s), seeds))
    else:
        runs = [_run_restart(family, which, cfg, s) for s in seeds]
    best_id = min(range(len(runs)), key=lambda r: (runs[r][1], r))
    x, alpha, _, polished, history = runs[best_id]
    total_iters = sum(r[2] for r in runs)
    obj = _Objective(family, which)
    rows, _ = obj.tie_rows(x, cfg.tie_tol)
    n, k, d = family.n, family.k, family.d
    target = closed_form_alpha(n, k)
    gap = abs(alpha - target) / target
    spread = max(abs(r[1] - alpha) / alpha for r in runs)
    kkt = kkt_certificate(family, x, which, cfg.tie_tol)
    converged = bool(polished or (len(history) > 2 and abs(history[-2] - history[-1]) <= cfg.tol * alpha))
    residuals = {
        "max_dev_from_uniform": float(np.abs(x - 1.0 / d).max()),
        "rel_gap_closed_form": float(gap),
        "closed_form": target,
        "restart_alpha_spread": float(spread),
        "polished": bool(polished),
    }
    return MinimaxResult(
        x_star=SimplexPoint.from_array(x),
        alpha_star=float(alpha),
        iterations=total_iters,
        restarts=cfg.restarts,
        tie_set=sorted(int(r) for r in rows),
        converged=converged,
        residuals=residuals,
        which=which,
        best_restart=best_id,
        restart_alphas=[float(r[1]) for r in runs],
        restart_points=[r[0] for r in runs],
        stage_history=[float(h) for h in history],
        kkt={**kkt, "within_tol": kkt["projected_norm"] < cfg.kkt_tol},
    )


def verify_uniform_optimum(family: FunctionFamily) -> dict:
    d, n, k = family.d, family.n, family.k
    u = SimplexPoint.uniform(d)
    alpha = closed_form_alpha(n, k)
    vals = family.values(u, "G")
    strata: dict[int, list[float]] = {}
    for f, v in zip(family.G_all, vals):
        strata.setdefault(f.product_length, []).append(float(v))
    m = 2 * n - 1
    expected = {0: float(alpha)}
    for j in range(1, k + 1):
        share = (d - m ** (k - j)) / d
        expected[j] = (1 - share) / share * (d - 1)
    report = {"alpha": alpha, "d": d, "strata": {}}
    ok = True
    for j in sorted(strata):
        vs = np.array(strata[j])
        rel = float(np.abs(vs - expected[j]).max() / expected[j])
        entry = {
            "count": len(vs),
            "min": float(vs.min()),
            "max": float(vs.max()),
            "expected": expected[j],
            "max_rel_dev": rel,
        }
        report["strata"][j] = entry
        if j == 0:
            ok &= rel < 1e-12
        else:
            ok &= bool(vs.max() < alpha)
    F_val, _ = family.eval_F(u)
    G_val, _ = family.eval_G(u)
    report.update(F_uniform=F_val, G_uniform=G_val, ok=bool(ok and abs(F_val - G_val) <= 1e-12 * alpha))
    return report


# --- symmetries ----------------------------------------------------------

def _cycles_to_perm(cycles, d: int) -> dict[int, int]:
    perm = {i: i for i in range(1, d + 1)}
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a] = b
    return perm


LISTED_TAUS_K2 = {
    "tau1": [(1, 12), (2, 10), (3, 11), (4, 5), (8, 9)],
    "tau2": [(1, 9), (2, 8), (3, 7), (4, 6), (10, 12)],
    "tau3": [(1, 5), (2, 6), (3, 4), (7, 8), (11, 12)],
}


def listed_permutations(d: int = 12) -> dict[str, dict[int, int]]:
    return {name: _cycles_to_perm(c, d) for name, c in LISTED_TAUS_K2.items()}


def relabeling_permutations(n: int, k: int) -> dict[str, dict[int, int]]:
    """Index permutations induced by inverse-respecting relabelings of the letters."""
    idx = enumerate_sphere(n, k)
    out = {}
    for m, mapping in enumerate(letter_permutations(n)):
        perm = {i: idx.index_of[relabel(w, mapping).letters] for i, w in enumerate(idx.words, 1)}
        if any(perm[i] != i for i in perm):
            out[f"relabel{m}"] = perm
    return out


class InvalidPermutation(ValueError):
    pass


def apply_permutation(perm: dict[int, int], x) -> np.ndarray:
    """(T x)_{perm(i)} = x_i."""
    v = np.asarray(x.coords if isinstance(x, SimplexPoint) else x, dtype=float)
    out = np.empty_like(v)
    for i, j in perm.items():
        out[j - 1] = v[i - 1]
    return out


def symmetry_check(family: FunctionFamily, x, perms: dict[str, dict[int, int]] | None = None,
                   which: str = "F") -> dict:
    if perms is None:
        perms = relabeling_permutations(family.n, family.k)
        if (family.n, family.k) == (2, 2):
            perms = {**listed_permutations(), **perms}
    v = np.asarray(x.coords if isinstance(x, SimplexPoint) else x, dtype=float)
    base = float(family.values(v, which).max())
    out = {}
    for name, perm in perms.items():
        if sorted(perm) != list(range(1, family.d + 1)) or sorted(perm.values()) != sorted(perm):
            raise InvalidPermutation(f"{name} is not a permutation of 1..{family.d}")
        if not family.index_permutation_preserves(perm, which):
            raise InvalidPermutation(f"{name} does not preserve the {which} family")
        tv = apply_permutation(perm, v)
        val = float(family.values(tv, which).max())
        out[name] = {
            "value_rel_change": abs(val - base) / base,
            "invariant": abs(val - base) <= 1e-12 * base,
            "displacement_inf": float(np.abs(tv - v).max()),
        }
    return out


def uniqueness_probe(family: FunctionFamily, cfg: SolverConfig | None = None, which: str = "F") -> dict:
    cfg = cfg or SolverConfig()
    if cfg.restarts < 10:
        raise ValueError("uniqueness probe needs at least 10 restarts")
    res = minimize(family, which, cfg)
    pts = res.restart_points
    spread = max(
        (float(np.abs(a - b).max()) for a, b in itertools.combinations(pts, 2)), default=0.0
    )
    dev = max(float(np.abs(p - 1.0 / family.d).max()) for p in pts)
    return {
        "restarts": len(pts),
        "pairwise_max_inf": spread,
        "max_dev_from_uniform": dev,
        "agree": spread < 1e-5,
        "alphas": res.restart_alphas,
        "result": res,
    }
