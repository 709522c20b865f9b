"""Fidelities, nearest-target searches, Wigner grids and the scan drivers.

All searches are deterministic: a fixed coarse grid, then golden-section (1-D)
or Nelder-Mead (multi-D) refinement started from the best grid point.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import coherent as cr
from .fock import FockDensity, FockVector, wigner_fock
from .protocol import ScenarioConfig, iterative_oracle, synthesize
from .states import GKPParams, TargetSpec, target_overlap_cr, target_vector
from .window import HomodyneWindow

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fidelity(rho, spec: TargetSpec) -> float:
    """<psi_t| rho |psi_t> against a pure target."""
    if isinstance(rho, cr.CoherentRank):
        return target_overlap_cr(spec, rho)
    if isinstance(rho, FockVector):
        rho = rho.density()
    if rho.modes != 1:
        raise ValueError("fidelity needs a single-mode state")
    v = target_vector(spec, rho.dim)
    return float((v.conj() @ rho.matrix @ v).real)


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-4):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x*, f(x*))."""
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _grid_then_golden(f, grid: np.ndarray, tol: float = 1e-4):
    values = np.array([f(x) for x in grid])
    i = int(np.argmax(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi - lo <= tol:
        return float(grid[i]), float(values[i])
    x, fx = golden_max(f, float(lo), float(hi), tol)
    if fx > values[i]:
        return float(x), float(fx)
    return float(grid[i]), float(values[i])


def _extent(rho) -> float:
    """sqrt(<n>), the amplitude scale used to size search grids and plot axes."""
    if isinstance(rho, cr.CoherentRank):
        return math.sqrt(max(0.0, rho.mean_photons()))
    if isinstance(rho, FockVector):
        rho = rho.density()
    n = np.arange(rho.dim)
    return math.sqrt(max(0.0, float(np.real(np.diag(rho.matrix)) @ n)))


def nearest_cat(rho, parity: str = "even", gamma_max: float | None = None, step: float = 0.05):
    """(gamma*, F*) maximising the fidelity with an ideal cat of the given parity."""
    if gamma_max is None:
        gamma_max = 1.5 * _extent(rho) + 2.0
    grid = np.arange(0.0, gamma_max + step / 2, step)
    if parity == "odd":
        grid = grid[1:]

    def f(g):
        return fidelity(rho, TargetSpec.cat(max(g, 0.0), parity))

    return _grid_then_golden(f, grid)


@dataclass(frozen=True)
class SqueezedCatFit:
    alpha: float
    s: float
    fidelity: float
    parity: str


def nearest_squeezed_cat(
    rho,
    parities: Sequence[str] = ("even", "odd"),
    alpha_grid: np.ndarray | None = None,
    s_grid: np.ndarray | None = None,
) -> SqueezedCatFit:
    """Best squeezed cat over (alpha, s, parity): coarse grid then Nelder-Mead."""
    if alpha_grid is None:
        alpha_grid = np.round(np.arange(0.0, 4.0 + 1e-9, 0.05), 10)
    if s_grid is None:
        s_grid = np.round(np.arange(0.3, 1.5 + 1e-9, 0.02), 10)
    best: SqueezedCatFit | None = None
    for parity in parities:
        alphas = alpha_grid if parity == "even" else alpha_grid[alpha_grid > 0]

        def f(a, s, parity=parity):
            if s <= 0 or a < 0 or (parity == "odd" and a == 0):
                return -1.0
            return fidelity(rho, TargetSpec.squeezed_cat(a, s, parity))

        table = np.array([[f(a, s) for s in s_grid] for a in alphas])
        i, j = np.unravel_index(int(np.argmax(table)), table.shape)
        a0, s0, f0 = float(alphas[i]), float(s_grid[j]), float(table[i, j])
        if a0 > 0:
            res = minimize(
                lambda v: -f(v[0], v[1]),
                x0=[a0, s0],
                method="Nelder-Mead",
                options={"xatol": 1e-5, "fatol": 1e-10},
            )
            if -res.fun > f0:
                a0, s0, f0 = float(res.x[0]), float(res.x[1]), float(-res.fun)
        cand = SqueezedCatFit(a0, s0, f0, parity)
        if best is None or cand.fidelity > best.fidelity + 1e-12:
            best = cand
    return best


def nearest_gkp(rho, a_seeds: Sequence[float] = ()) -> tuple[GKPParams, float]:
    """Best approximate GKP codeword over (s1, s2, a, mu).

    The coarse grid always contains the square-lattice spacing 2*sqrt(pi) and
    any caller-supplied spacings (e.g. 2*sqrt(2)*alpha for cat inputs).
    """
    s1_grid = np.array([0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.2, 2.0, 3.0])
    s2_grid = np.array([0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2])
    a_grid = np.unique(
        np.round(np.concatenate([np.arange(1.0, 8.01, 0.25), [2 * math.sqrt(math.pi)], a_seeds]), 10)
    )
    best = (None, -1.0)
    for mu in (0, 1):

        def f(s1, s2, a, mu=mu):
            if min(s1, s2, a) <= 0:
                return -1.0
            return fidelity(rho, TargetSpec.gkp_code(s1, s2, a, mu))

        top = max(
            ((f(s1, s2, a), s1, s2, a) for s1 in s1_grid for s2 in s2_grid for a in a_grid),
            key=lambda t: t[0],
        )
        res = minimize(
            lambda v: -f(*np.exp(v)),
            x0=np.log(top[1:]),
            method="Nelder-Mead",
            options={"xatol": 1e-5, "fatol": 1e-10, "maxiter": 2000},
        )
        cand = (top[0], top[1:]) if top[0] >= -res.fun else (float(-res.fun), tuple(np.exp(res.x)))
        if cand[0] > best[1]:
            s1, s2, a = (float(v) for v in cand[1])
            best = (GKPParams(s1, s2, a, mu), float(cand[0]))
    return best


@dataclass(frozen=True)
class WignerGrid:
    xs: np.ndarray
    ps: np.ndarray
    values: np.ndarray  # values[i, j] = W(xs[i], ps[j])
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.ps, axis=1), self.xs))


def wigner_grid(rho, xs, ps, meta: dict | None = None) -> WignerGrid:
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ps) <= 0):
        raise ValueError("Wigner grids must be strictly increasing")
    if isinstance(rho, cr.CoherentRank):
        values = cr.wigner_cr(rho, xs[:, None], ps[None, :])
    else:
        if isinstance(rho, FockVector):
            rho = rho.density()
        values = wigner_fock(rho, xs, ps)
    return WignerGrid(xs, ps, values, dict(meta or {}))


def default_wigner_axis(rho, gamma: float | None = None, points: int = 201) -> np.ndarray:
    g = _extent(rho) if gamma is None else gamma
    half = math.sqrt(2.0) * g + 4.0
    return np.linspace(-half, half, points)


@dataclass(frozen=True)
class ScanResult:
    r_grid: np.ndarray
    gamma_grid: np.ndarray
    fidelity: np.ndarray  # shape (len(r_grid), len(gamma_grid))
    p_success: np.ndarray  # per r
    r_star: float
    gamma_star: float
    f_star: float
    p_star: float


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def scan_reflectivity(
    config: ScenarioConfig,
    r_grid,
    gamma_grid,
    parity: str = "even",
    threads: int = 1,
) -> ScanResult:
    """Fidelity of rho_out(r) with ideal cats gamma over the (r, gamma) grid."""
    r_grid = np.asarray(r_grid, dtype=float)
    gamma_grid = np.asarray(gamma_grid, dtype=float)

    def row(r):
        rho, p = synthesize(config.replace(r=float(r)))
        return [fidelity(rho, TargetSpec.cat(g, parity)) for g in gamma_grid], p

    rows = _map(row, r_grid, threads)
    table = np.array([fr for fr, _ in rows])
    probs = np.array([p for _, p in rows])
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    return ScanResult(
        r_grid, gamma_grid, table, probs,
        float(r_grid[i]), float(gamma_grid[j]), float(table[i, j]), float(probs[i]),
    )


def optimize_reflectivity(
    config: ScenarioConfig,
    score: Callable,
    r_grid,
    tol: float = 1e-3,
    threads: int = 1,
):
    """Maximise ``score(rho)`` over r: grid, then golden refinement around the best cell.

    Returns (r*, score*, rho*, p*).
    """
    r_grid = np.asarray(r_grid, dtype=float)
    cache: dict[float, tuple] = {}

    def run(r):
        if r not in cache:
            rho, p = synthesize(config.replace(r=float(r)))
            cache[r] = (score(rho), rho, p)
        return cache[r]

    _map(run, r_grid, threads)
    r_star, _ = _grid_then_golden(lambda r: run(r)[0], r_grid, tol)
    s, rho, p = run(r_star)
    return r_star, s, rho, p


def success_compare(config: ScenarioConfig, dx_grid) -> list[tuple[float, float, float]]:
    """(dx, p_multiplexed, p_iterative) with the same window on every iterative step."""
    rows = []
    for dx in dx_grid:
        w = HomodyneWindow(config.window.theta, config.window.x0, float(dx))
        cfg = config.replace(window=w)
        _, p_mult = synthesize(cfg)
        _, p_iter = iterative_oracle(cfg, [w] * (cfg.n_total - 1))
        rows.append((float(dx), float(p_mult), float(p_iter)))
    return rows


def coarse_squeezed_fidelity(rho) -> float:
    """Cheap squeezed-cat score for inner loops (0.1 x 0.05 grid, both parities)."""
    return nearest_squeezed_cat(
        rho,
        alpha_grid=np.round(np.arange(0.0, 4.0 + 1e-9, 0.1), 10),
        s_grid=np.round(np.arange(0.3, 1.5 + 1e-9, 0.05), 10),
    ).fidelity


@dataclass(frozen=True)
class FockFeedResult:
    n_total: int
    r: float
    dx: float
    p_success: float
    fit: SqueezedCatFit
    rho: object = field(repr=False, compare=False)


def fit_fock_feed(config: ScenarioConfig, r_grid, dx_values, threads: int = 1) -> FockFeedResult:
    """Optimise r and the window width for the best squeezed-cat fidelity.

    The inner search uses :func:`coarse_squeezed_fidelity`; the returned fit is
    the full :func:`nearest_squeezed_cat` at the selected (r, dx).
    """
    best = None
    for dx in dx_values:
        w = HomodyneWindow(config.window.theta, config.window.x0, float(dx))
        r, f, rho, p = optimize_reflectivity(
            config.replace(window=w), coarse_squeezed_fidelity, r_grid, threads=threads
        )
        if best is None or f > best[1]:
            best = (r, f, rho, p, float(dx))
    r, _, rho, p, dx = best
    return FockFeedResult(config.n_total, r, dx, p, nearest_squeezed_cat(rho), rho)
