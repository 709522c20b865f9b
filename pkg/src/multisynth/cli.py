"""Command-line scenario runner.

Every command reads one INI config (see :mod:`multisynth.config`), writes CSV
and JSON results into the output directory, and finishes with a
``manifest.json`` listing each file with its SHA-256 digest. Exit status is 0 on
success, 2 for configuration problems and 3 for numerical/engine failures.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError
from .exceptions import SynthError
from .metrics import (
    default_wigner_axis,
    fidelity,
    fit_fock_feed,
    nearest_cat,
    nearest_gkp,
    optimize_reflectivity,
    scan_reflectivity,
    success_compare,
    wigner_grid,
)
from .protocol import synthesize
from .states import TargetSpec
from .window import HomodyneWindow

log = logging.getLogger("multisynth")

OUT_ENV = "MULTISYNTH_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_ENGINE = 0, 2, 3


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:  # running from a source tree
        return "0+unknown"


class Writer:
    """Collects output files so the manifest can list them in write order."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: list[str], rows) -> None:
        rows = np.asarray(rows, dtype=float).reshape(-1, len(header))
        lines = [",".join(header)]
        lines += [",".join(f"{v:.16e}" for v in row) for row in rows]
        self._put(name, "\n".join(lines) + "\n")

    def json(self, name: str, payload) -> None:
        self._put(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def _put(self, name: str, text: str) -> None:
        path = self.out / name
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        self.files.append(path)

    def manifest(self, command: str, run_cfg, engine: str, extra: dict, wall: float) -> None:
        outputs = [
            {"file": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
            for p in self.files
        ]
        payload = {
            "command": command,
            "config": run_cfg.as_dict(),
            "config_path": str(run_cfg.path),
            "engine": engine,
            "package": "multisynth",
            "version": _version(),
            "wall_clock_s": round(wall, 3),
            "outputs": outputs,
            **extra,
        }
        path = self.out / "manifest.json"
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _wigner_rows(grid) -> np.ndarray:
    xs, ps = np.meshgrid(grid.xs, grid.ps, indexing="ij")
    return np.column_stack([xs.ravel(), ps.ravel(), grid.values.ravel()])


WIGNER_HEADER = ["x_natural", "p_natural", "W_per_natural_area"]


def _axis(run_cfg, rho, gamma=None) -> np.ndarray:
    points = run_cfg.number("wigner", "points", 121, kind=int)
    half = run_cfg.number("wigner", "half_width", 0.0)
    if points < 2:
        raise ConfigError(f"{run_cfg.where('wigner', 'points')}: need at least 2 points")
    if half > 0:
        return np.linspace(-half, half, points)
    return default_wigner_axis(rho, gamma, points)


def _n_values(run_cfg, default) -> list[int]:
    values = run_cfg.numbers("sweep", "n_values", default, kind=int)
    for n in values:
        if n < 2:
            raise ConfigError(
                f"{run_cfg.where('sweep', 'n_values')}: protocol requires N >= 2 (got {n})"
            )
    return values


def _r_grid(run_cfg, step=0.01):
    grid = cfgmod.grid(run_cfg, "scan", "r", 0.05, 0.7071, step)
    if grid[0] <= 0 or grid[-1] >= 1:
        raise ConfigError(f"{run_cfg.where('scan', 'r_max')}: reflectivities must lie in (0, 1)")
    return grid


def cmd_breed_cats(run_cfg, w: Writer, args) -> dict:
    scen = cfgmod.scenario_from(run_cfg, args.engine)
    parity = run_cfg.raw("scan", "parity", "even")
    if parity not in ("even", "odd"):
        raise ConfigError(f"{run_cfg.where('scan', 'parity')}: parity must be even or odd")
    g_hi = math.sqrt(scen.n_total) * scen.alpha * 1.5 + 1.0
    gammas = cfgmod.grid(run_cfg, "scan", "gamma", 0.0 if parity == "even" else 0.02, g_hi, 0.02)
    rs = _r_grid(run_cfg)
    res = scan_reflectivity(scen, rs, gammas, parity, threads=args.threads)
    rr, gg = np.meshgrid(res.r_grid, res.gamma_grid, indexing="ij")
    w.csv("scan.csv", ["r", "gamma", "fidelity"], np.column_stack([rr.ravel(), gg.ravel(), res.fidelity.ravel()]))
    w.json("argmax.json", {
        "r_star": res.r_star, "gamma_star": res.gamma_star,
        "fidelity_star": res.f_star, "p_success": res.p_star, "parity": parity,
    })
    rho, _ = synthesize(scen.replace(r=res.r_star))
    axis = _axis(run_cfg, rho, res.gamma_star)
    w.csv("wigner.csv", WIGNER_HEADER, _wigner_rows(wigner_grid(rho, axis, axis)))
    return {"engine": scen.resolved_engine}


def cmd_gkp(run_cfg, w: Writer, args) -> dict:
    base = cfgmod.scenario_from(run_cfg, args.engine, default_theta=math.pi / 2)
    seeds = run_cfg.numbers("fit", "a_seeds", [2 * math.sqrt(2) * base.alpha])
    ns = _n_values(run_cfg, [base.n_total])
    table = []
    for n in ns:
        scen = base.replace(n_total=n)
        if run_cfg.has("scan"):
            r, _, rho, p = optimize_reflectivity(
                scen, lambda s: nearest_gkp(s, seeds)[1], _r_grid(run_cfg), threads=args.threads
            )
        else:
            r = scen.r
            rho, p = synthesize(scen)
        params, f = nearest_gkp(rho, seeds)
        axis = _axis(run_cfg, rho)
        w.csv(f"wigner_N{n}.csv", WIGNER_HEADER, _wigner_rows(wigner_grid(rho, axis, axis)))
        table.append({
            "n_total": n, "r": r, "p_success": p, "fidelity": f,
            "s1": params.s1, "s2": params.s2, "a": params.a, "inv_a": 1.0 / params.a, "mu": params.mu,
        })
    w.json("nearest_gkp.json", table)
    return {"engine": base.resolved_engine}


def cmd_fock_feed(run_cfg, w: Writer, args) -> dict:
    base = cfgmod.scenario_from(run_cfg, args.engine)
    ns = _n_values(run_cfg, [2, 3, 4, 5])
    dxs = run_cfg.numbers("sweep", "dx_values", [base.window.dx])
    rs = cfgmod.grid(run_cfg, "scan", "r", 0.05, 0.5, 0.05)
    table = []
    for n in ns:
        res = fit_fock_feed(base.replace(n_total=n), rs, dxs, threads=args.threads)
        axis = _axis(run_cfg, res.rho, res.fit.alpha)
        w.csv(f"wigner_N{n}.csv", WIGNER_HEADER, _wigner_rows(wigner_grid(res.rho, axis, axis)))
        table.append({
            "n_total": n, "r": res.r, "dx_sigma0": res.dx, "p_success": res.p_success,
            "alpha": res.fit.alpha, "s": res.fit.s, "parity": res.fit.parity,
            "fidelity": res.fit.fidelity,
        })
    w.json("squeezed_cat_fits.json", table)
    return {"engine": base.resolved_engine}


def cmd_success_compare(run_cfg, w: Writer, args) -> dict:
    scen = cfgmod.scenario_from(run_cfg, args.engine)
    dxs = run_cfg.numbers("compare", "dx_values", [0.05, 0.1, 0.2, 0.5, 1.0, math.inf])
    if any(not dx > 0 for dx in dxs):
        raise ConfigError(f"{run_cfg.where('compare', 'dx_values')}: window widths must be > 0")
    rows = success_compare(scen, dxs)
    w.csv("success.csv", ["dx_sigma0", "p_multiplexed", "p_iterative"], rows)
    return {"engine": scen.resolved_engine}


def cmd_wigner(run_cfg, w: Writer, args) -> dict:
    scen = cfgmod.scenario_from(run_cfg, args.engine)
    rho, p = synthesize(scen)
    axis = _axis(run_cfg, rho)
    grid = wigner_grid(rho, axis, axis)
    w.csv("wigner.csv", WIGNER_HEADER, _wigner_rows(grid))
    gamma, f = nearest_cat(rho, "even")
    w.json("state.json", {
        "p_success": p, "wigner_integral": grid.integral(),
        "nearest_even_cat_gamma": gamma, "nearest_even_cat_fidelity": f,
        "fidelity_with_input_cat": fidelity(rho, TargetSpec.cat(scen.alpha)) if scen.alpha > 0 else None,
    })
    return {"engine": scen.resolved_engine}


COMMANDS = {
    "breed-cats": (cmd_breed_cats, "scan r and gamma for bred cats"),
    "gkp": (cmd_gkp, "p-conditioned runs fitted to approximate GKP codewords"),
    "fock-feed": (cmd_fock_feed, "single-photon feeds fitted to squeezed cats over N"),
    "success-compare": (cmd_success_compare, "multiplexed vs iterative success probability"),
    "wigner": (cmd_wigner, "Wigner function of one scenario"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multisynth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI scenario file")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for scans")
        p.add_argument("--engine", choices=("fock", "coherent-rank", "auto"), default=None,
                       help="override the engine named in the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    func, _ = COMMANDS[args.command]
    start = time.perf_counter()
    try:
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        run_cfg = cfgmod.load(args.config)
        writer = Writer(out)
        extra = func(run_cfg, writer, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SynthError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"engine error in {args.command} ({args.config}): {exc}", file=sys.stderr)
        return EXIT_ENGINE
    engine = extra.pop("engine")
    writer.manifest(args.command, run_cfg, engine, extra, time.perf_counter() - start)
    log.info("wrote %d files to %s", len(writer.files) + 1, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
