"""The multiplexed synthesizer and its iterative (cascaded) counterpart.

Feeds are merged into one effective mode by a beamsplitter cascade whose
departing ports are traced out; the merged mode then meets the seed on the
final beamsplitter, and a homodyne window on one output heralds the state in
the other. The iterative oracle runs the same cascade but heralds every
departing port instead of discarding it.

Port layout at every two-mode step: mode 0 carries the merged/accumulated
state, mode 1 the newcomer (a feed, or the seed at the final step). Output
mode 0 (tau*merged + r*newcomer) is kept and output mode 1 is traced or
heralded, so a low final reflectivity r passes mostly the merged resource.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import coherent as cr
from . import fock
from .exceptions import HeraldUnderflowError
from .window import HomodyneWindow

log = logging.getLogger(__name__)

INPUT_KINDS = ("even-cat", "odd-cat", "single-photon", "vacuum")
ENGINES = ("fock", "coherent-rank", "auto")


@dataclass(frozen=True)
class MergePlan:
    n_feeds: int
    taus: tuple[float, ...]

    def weights(self) -> np.ndarray:
        """Amplitude with which each feed reaches the surviving port."""
        w = np.ones(self.n_feeds)
        for i, tau in enumerate(self.taus):
            r = math.sqrt(1.0 - tau * tau)
            w[: i + 1] *= tau
            w[i + 1] *= r
        return w


def build_merge_plan(n_feeds: int) -> MergePlan:
    """Cascade giving every one of ``n_feeds`` inputs weight 1/sqrt(n_feeds).

    Step i mixes the running merge of i+1 feeds with feed i+1 and keeps the
    port tau*merged + r*feed, so tau_i = sqrt((i+1)/(i+2)).
    """
    if n_feeds < 1:
        raise ValueError(f"need at least one feed, got {n_feeds}")
    return MergePlan(n_feeds, tuple(math.sqrt((i + 1) / (i + 2)) for i in range(n_feeds - 1)))


@dataclass(frozen=True)
class ScenarioConfig:
    input_kind: str = "even-cat"
    alpha: float = 1.0
    n_total: int = 2
    r: float = 1.0 / math.sqrt(2.0)
    window: HomodyneWindow = field(default_factory=lambda: HomodyneWindow(0.0, 0.0, 0.1))
    engine: str = "auto"
    dim: int | None = None
    seed_kind: str | None = None

    def __post_init__(self):
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"input_kind must be one of {INPUT_KINDS}, got {self.input_kind!r}")
        if self.seed_kind is not None and self.seed_kind not in INPUT_KINDS:
            raise ValueError(f"seed_kind must be one of {INPUT_KINDS}, got {self.seed_kind!r}")
        if self.n_total < 2:
            raise ValueError(f"protocol requires N >= 2 (n_total={self.n_total})")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"reflectivity r must lie in (0, 1), got {self.r}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be >= 1")
        if "single-photon" in (self.input_kind, self.seed_kind) and self.engine == "coherent-rank":
            raise ValueError("single-photon inputs are only supported by the fock engine")

    @property
    def tau(self) -> float:
        return math.sqrt(1.0 - self.r * self.r)

    @property
    def resolved_engine(self) -> str:
        if self.engine != "auto":
            return self.engine
        if "single-photon" in (self.input_kind, self.seed_kind):
            return "fock"
        return "coherent-rank"

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def auto_dim(config: ScenarioConfig) -> int:
    """Per-mode truncation: photon-number bound for Fock inputs, else a Poisson envelope.

    For cats no mode ever holds amplitude above sqrt(N)*alpha. Truncation
    errors enter amplitudes as the square root of the dropped probability, so
    the Poisson(N alpha^2) tail is pushed below 1e-15 rather than to MASS_TOL.
    """
    if config.dim is not None:
        return config.dim
    if config.input_kind in ("single-photon", "vacuum") and config.seed_kind in (
        None,
        "single-photon",
        "vacuum",
    ):
        return config.n_total + 1
    return max(8, fock.required_dim(config.n_total * config.alpha**2, 1e-15) + 2)


def _input_state(kind: str, config: ScenarioConfig, engine: str, dim: int):
    a = config.alpha
    if engine == "coherent-rank":
        if kind == "vacuum" or (kind == "even-cat" and a == 0):
            return cr.coherent_cr(0.0)
        if kind in ("even-cat", "odd-cat"):
            return cr.cat_cr(a, kind.split("-")[0])
        raise ValueError(f"{kind} input is not representable in the coherent-rank engine")
    if kind == "vacuum":
        return fock.number_fock(0, dim).density()
    if kind == "single-photon":
        return fock.number_fock(1, dim).density()
    return fock.cat_fock(a, kind.split("-")[0], dim).density()


def input_states(config: ScenarioConfig):
    """(feeds, seed) in the representation of the resolved engine."""
    engine = config.resolved_engine
    dim = auto_dim(config)
    feed = _input_state(config.input_kind, config, engine, dim)
    seed = _input_state(config.seed_kind or config.input_kind, config, engine, dim)
    return [feed] * (config.n_total - 1), seed


# engine-generic two-mode steps


def _product(a, b):
    if isinstance(a, cr.CoherentRank):
        return cr.product_cr(a, b)
    return fock.tensor(a, b)


def _beamsplitter(state, tau):
    if isinstance(state, cr.CoherentRank):
        return cr.beamsplitter_cr(state, tau)
    return fock.beamsplitter_fock(state, tau)


def _discard(state, keep):
    if isinstance(state, cr.CoherentRank):
        return cr.partial_trace_cr(state, keep)
    return fock.partial_trace(state, keep)


def _herald(state, window, measured):
    if isinstance(state, cr.CoherentRank):
        return cr.condition_and_trace_cr(state, window, measured)
    return fock.condition_and_trace(state, window, measured)


def merge_feeds(feeds, plan: MergePlan):
    """Mixed state of the merged mode; departing ports are traced as soon as they leave."""
    if len(feeds) != plan.n_feeds:
        raise ValueError(f"plan expects {plan.n_feeds} feeds, got {len(feeds)}")
    merged = feeds[0]
    for tau, feed in zip(plan.taus, feeds[1:]):
        merged = _discard(_beamsplitter(_product(merged, feed), tau), keep=0)
    return merged


def _final_step(merged, seed, config: ScenarioConfig, window: HomodyneWindow):
    two = _beamsplitter(_product(merged, seed), config.tau)
    return _herald(two, window, measured=1)


def synthesize(config: ScenarioConfig):
    """Run the single-herald protocol; returns (rho_out, p_success)."""
    feeds, seed = input_states(config)
    merged = merge_feeds(feeds, build_merge_plan(len(feeds)))
    return _final_step(merged, seed, config, config.window)


def iterative_oracle(config: ScenarioConfig, per_step_windows):
    """Cascade in which every one of the N-1 steps is heralded.

    ``per_step_windows[i]`` conditions the departing port of merge step i; the
    last entry conditions the final beamsplitter. Returns (rho_out, p_success)
    with p the product of the conditional herald probabilities.
    """
    windows = list(per_step_windows)
    if len(windows) != config.n_total - 1:
        raise ValueError(f"need {config.n_total - 1} windows, got {len(windows)}")
    feeds, seed = input_states(config)
    plan = build_merge_plan(len(feeds))
    merged, p_total = feeds[0], 1.0
    for stage, (tau, feed, window) in enumerate(zip(plan.taus, feeds[1:], windows)):
        two = _beamsplitter(_product(merged, feed), tau)
        try:
            merged, p = _herald(two, window, measured=1)
        except HeraldUnderflowError as exc:
            raise HeraldUnderflowError(f"stage {stage}: {exc}") from exc
        p_total *= p
    try:
        rho, p = _final_step(merged, seed, config, windows[-1])
    except HeraldUnderflowError as exc:
        raise HeraldUnderflowError(f"stage {len(windows) - 1}: {exc}") from exc
    return rho, p_total * p
