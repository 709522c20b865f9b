"""Input and target states for both engines.

Every fidelity target used here (ideal cat, squeezed cat, approximate GKP) has a
real x-wavefunction that is a sum of equal-width Gaussians,
``psi(x) = sum_k c_k exp(-(x - x_k)^2 / (2 w^2))``. That form gives closed-form
overlaps with coherent states, and a quadrature projection onto the Fock basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import coherent as cr
from .exceptions import TruncationError
from .fock import MASS_TOL, FockVector, cat_fock, hermite_functions

ENVELOPE_CUTOFF = 1e-12


@dataclass(frozen=True)
class GKPParams:
    s1: float
    s2: float
    a: float
    mu: int = 0

    def __post_init__(self):
        if not (self.s1 > 0 and self.s2 > 0 and self.a > 0):
            raise ValueError(f"GKP parameters must be positive: {self}")
        if self.mu not in (0, 1):
            raise ValueError(f"logical value mu must be 0 or 1, got {self.mu}")


@dataclass(frozen=True)
class TargetSpec:
    """Fidelity target.

    ``kind`` selects which fields matter: ``gamma`` for "ideal-cat",
    ``alpha``/``s`` for "squeezed-cat" (s scales the x quadrature, s < 1
    compresses it), ``gkp`` for "gkp". ``parity`` applies to both cat kinds.
    """

    kind: str
    gamma: float = 0.0
    alpha: float = 0.0
    s: float = 1.0
    gkp: GKPParams | None = None
    parity: str = "even"

    def __post_init__(self):
        if self.kind not in ("ideal-cat", "squeezed-cat", "gkp"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind == "gkp" and self.gkp is None:
            raise ValueError("gkp target needs GKPParams")
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.kind == "squeezed-cat" and not self.s > 0:
            raise ValueError("squeezing scale s must be > 0")

    @classmethod
    def cat(cls, gamma: float, parity: str = "even") -> "TargetSpec":
        return cls("ideal-cat", gamma=gamma, parity=parity)

    @classmethod
    def squeezed_cat(cls, alpha: float, s: float, parity: str = "even") -> "TargetSpec":
        return cls("squeezed-cat", alpha=alpha, s=s, parity=parity)

    @classmethod
    def gkp_code(cls, s1: float, s2: float, a: float, mu: int = 0) -> "TargetSpec":
        return cls("gkp", gkp=GKPParams(s1, s2, a, mu))


@dataclass(frozen=True)
class GaussianComb:
    coeffs: np.ndarray
    centers: np.ndarray
    width: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = x[..., None] - self.centers
        return np.exp(-0.5 * d * d / self.width**2) @ self.coeffs


def _gkp_centers(p: GKPParams) -> np.ndarray:
    shift = 0.5 * p.mu
    kmax = math.ceil(math.sqrt(-2.0 * math.log(ENVELOPE_CUTOFF)) / (p.s1 * p.a)) + 1
    k = np.arange(-kmax, kmax + 1) + shift
    x = k * p.a
    return x[np.exp(-0.5 * (p.s1 * x) ** 2) >= ENVELOPE_CUTOFF]


def gkp_comb(p: GKPParams) -> GaussianComb:
    x = _gkp_centers(p)
    c = np.exp(-0.5 * (p.s1 * x) ** 2)
    # <g_k|g_l> for unnormalised teeth of width s2
    gram = math.sqrt(math.pi) * p.s2 * np.exp(-((x[:, None] - x[None, :]) ** 2) / (4 * p.s2**2))
    norm = math.sqrt(c @ gram @ c)
    return GaussianComb(c / norm, x, p.s2)


def target_comb(spec: TargetSpec) -> GaussianComb:
    if spec.kind == "gkp":
        return gkp_comb(spec.gkp)
    amp = spec.gamma if spec.kind == "ideal-cat" else spec.alpha
    s = 1.0 if spec.kind == "ideal-cat" else spec.s
    if amp == 0:
        if spec.parity == "odd":
            raise ValueError("odd cat with zero amplitude is the null vector")
        return GaussianComb(np.array([math.pi**-0.25 / math.sqrt(s)]), np.array([0.0]), s)
    sign = 1.0 if spec.parity == "even" else -1.0
    pref = math.pi**-0.25 / math.sqrt(s) / cr.cat_normalization(amp, spec.parity)
    centers = math.sqrt(2.0) * amp * s * np.array([1.0, -1.0])
    return GaussianComb(pref * np.array([1.0, sign]), centers, s)


def gkp_wavefunction(params: GKPParams, x):
    """Approximate GKP codeword <x|mu~>, normalised on the real line."""
    return gkp_comb(params)(x)


def comb_coherent_overlap(comb: GaussianComb, alpha) -> np.ndarray:
    """<psi|alpha> for a real Gaussian-comb wavefunction, vectorised over alpha."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    w2 = comb.width**2
    A = 0.5 / w2 + 0.5
    xk = comb.centers[:, None]
    B = xk / w2 + math.sqrt(2.0) * alpha[None, :]
    C = -0.5 * xk**2 / w2 - 0.5 * alpha**2 - 0.5 * np.abs(alpha) ** 2
    terms = np.exp(B * B / (4 * A) + C)
    return math.pi**-0.25 * math.sqrt(math.pi / A) * (comb.coeffs @ terms)


def target_overlap_cr(spec: TargetSpec, state: cr.CoherentRank) -> float:
    """<psi_t| rho |psi_t> for a single-mode coherent-rank state."""
    if state.modes != 1:
        raise ValueError("target_overlap_cr needs a single-mode state")
    v = comb_coherent_overlap(target_comb(spec), state.kets[:, 0])
    return float((v.conj() @ state.coeffs @ v).real)


# --- Fock projections ---------------------------------------------------------


@lru_cache(maxsize=8)
def _hermite_table(dim: int, span: float):
    """Hermite functions on a composite Gauss-Legendre grid covering [-span, span]."""
    t, w = np.polynomial.legendre.leggauss(24)
    edges = np.linspace(-span, span, int(math.ceil(2 * span / 0.5)) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    psi = hermite_functions(dim - 1, xs)
    psi.setflags(write=False)
    return xs, ws, psi


def _span(dim: int) -> float:
    return math.ceil(math.sqrt(2 * dim + 1) + 12.0)


def project_wavefunction(func, dim: int) -> np.ndarray:
    """<n|psi> for n < dim of a real x-wavefunction, by Gauss-Legendre quadrature."""
    xs, ws, psi = _hermite_table(dim, _span(dim))
    return psi @ (ws * func(xs))


def squeeze_matrix(s: float, dim_out: int, dim_in: int) -> np.ndarray:
    """<n| S |m> for the x-scaling  psi(x) -> psi(x/s)/sqrt(s)."""
    dim = max(dim_out, dim_in)
    span = _span(dim) * max(1.0, s)
    xs, ws, psi = _hermite_table(dim, float(span))
    psi_in = hermite_functions(dim_in - 1, xs / s) / math.sqrt(s)
    return (psi[:dim_out] * ws) @ psi_in.T


def _checked(amps: np.ndarray, what: str) -> FockVector:
    mass = max(0.0, 1.0 - float(np.vdot(amps, amps).real))
    if mass > MASS_TOL:
        raise TruncationError(f"{what}: dim={amps.size} drops probability {mass:.3g}; enlarge dim")
    return FockVector(amps / np.linalg.norm(amps), truncated_mass=mass)


def target_fock(spec: TargetSpec, dim: int) -> FockVector:
    if spec.kind == "ideal-cat":
        if spec.gamma == 0:
            return cat_fock(0.0, "even", dim)
        return cat_fock(spec.gamma, spec.parity, dim)
    if spec.kind == "squeezed-cat":
        if spec.s == 1.0:
            return target_fock(TargetSpec.cat(spec.alpha, spec.parity), dim)
        cat = target_fock(TargetSpec.cat(spec.alpha, spec.parity), dim)
        amps = squeeze_matrix(spec.s, dim, dim) @ cat.amps
        return _checked(amps.astype(complex), "squeezed cat")
    amps = project_wavefunction(gkp_comb(spec.gkp), dim)
    return _checked(amps.astype(complex), "GKP target")


def target_vector(spec: TargetSpec, dim: int) -> np.ndarray:
    """First ``dim`` Fock amplitudes of the target, without any truncation check.

    Used to score states that live entirely inside ``dim`` levels, where the
    tail of the target cannot contribute.
    """
    return project_wavefunction(target_comb(spec), dim)
