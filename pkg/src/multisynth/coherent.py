"""Exact coherent-dyad engine.

A state is stored as ``rho = sum_ij C[i, j] |k_i><k_j|`` where each ``k_i`` is a
tuple of coherent amplitudes (one per mode) and the ket list is shared by the
bra side, so Hermiticity is just ``C == C^dagger``. Beamsplitters move the
amplitudes, partial traces and homodyne windows rescale ``C`` entrywise by
closed-form overlaps, and nothing is truncated. Cat inputs of any size stay
cheap: N feeds of a cat never produce more than a few dozen distinct kets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import wofz

from .exceptions import ConsistencyError, HeraldUnderflowError, TruncationError
from .fock import HERALD_FLOOR, MASS_TOL, FockDensity, poisson_tail, required_dim
from .window import HomodyneWindow

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class CoherentRank:
    kets: np.ndarray  # (K, modes) complex amplitudes
    coeffs: np.ndarray  # (K, K) Hermitian

    def __post_init__(self):
        kets = np.asarray(self.kets, dtype=complex)
        if kets.ndim == 1:
            kets = kets[:, None]
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (kets.shape[0], kets.shape[0]):
            raise ValueError(f"coeffs shape {coeffs.shape} does not match {kets.shape[0]} kets")
        if kets.shape[1] not in (1, 2):
            raise ValueError("only 1 or 2 modes are supported")
        object.__setattr__(self, "kets", kets)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def modes(self) -> int:
        return self.kets.shape[1]

    @property
    def size(self) -> int:
        return self.kets.shape[0]

    def gram(self) -> np.ndarray:
        """G[i, j] = <k_j|k_i>, the matrix needed for traces."""
        g = np.ones((self.size, self.size), dtype=complex)
        for m in range(self.modes):
            a = self.kets[:, m]
            g *= coherent_overlap(a[:, None], a[None, :])
        return g

    def trace(self) -> complex:
        return complex(np.sum(self.coeffs * self.gram()))

    def normalized(self) -> "CoherentRank":
        return CoherentRank(self.kets, self.coeffs / self.trace().real)

    def mean_photons(self, mode: int = 0) -> float:
        """<n> of one mode: sum_ij C_ij <k_j|k_i> conj(a_j) a_i."""
        a = self.kets[:, mode]
        return float(np.sum(self.coeffs * self.gram() * a[:, None] * a.conj()[None, :]).real)

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.kets))) if self.size else 0.0


def coherent_overlap(alpha, beta):
    """<beta|alpha> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(beta) alpha)."""
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    out = np.exp(-0.5 * np.abs(alpha) ** 2 - 0.5 * np.abs(beta) ** 2 + beta.conj() * alpha)
    return out if out.ndim else complex(out)


def cat_normalization(alpha: float, parity: str = "even") -> float:
    sign = 1.0 if parity == "even" else -1.0
    return math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2)))


def coherent_cr(alpha: complex) -> CoherentRank:
    return CoherentRank(np.array([[alpha]]), np.array([[1.0]]))


def cat_cr(alpha: float, parity: str = "even") -> CoherentRank:
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if parity == "odd" and alpha == 0:
        raise ValueError("odd cat with alpha=0 is the null vector")
    if alpha == 0:
        return coherent_cr(0.0)
    sign = 1.0 if parity == "even" else -1.0
    amp = np.array([1.0, sign]) / cat_normalization(alpha, parity)
    return CoherentRank(np.array([[alpha], [-alpha]]), np.outer(amp, amp))


def product_cr(a: CoherentRank, b: CoherentRank) -> CoherentRank:
    if a.modes != 1 or b.modes != 1:
        raise ValueError("product_cr expects single-mode states")
    ia, ib = np.meshgrid(np.arange(a.size), np.arange(b.size), indexing="ij")
    kets = np.stack([a.kets[ia.ravel(), 0], b.kets[ib.ravel(), 0]], axis=1)
    return CoherentRank(kets, np.kron(a.coeffs, b.coeffs))


def beamsplitter_cr(state: CoherentRank, tau: float) -> CoherentRank:
    """(alpha, beta) -> (tau alpha + r beta, -r alpha + tau beta) on every ket."""
    if state.modes != 2:
        raise ValueError("beamsplitter_cr needs a two-mode state")
    r = math.sqrt(max(0.0, 1.0 - tau * tau))
    a, b = state.kets[:, 0], state.kets[:, 1]
    kets = np.stack([tau * a + r * b, -r * a + tau * b], axis=1)
    return CoherentRank(kets, state.coeffs.copy())


def rotate_cr(state: CoherentRank, phi: float, mode: int | None = None) -> CoherentRank:
    """Phase rotation exp(-i phi n) on one mode (or all modes when ``mode`` is None)."""
    kets = state.kets.copy()
    cols = range(state.modes) if mode is None else [mode]
    for m in cols:
        kets[:, m] *= np.exp(-1j * phi)
    return CoherentRank(kets, state.coeffs.copy())


def _scaled_erfc(z: np.ndarray, log_pref: np.ndarray):
    """Split exp(log_pref) * erfc(z) into 2*exp(log_pref)*flag + rest, overflow-free.

    Uses erfc(z) = exp(-z^2) w(iz) for Re z >= 0 and the reflection
    erfc(z) = 2 - exp(-z^2) w(-iz) otherwise, so the Faddeeva function is only
    evaluated in the half plane where it is bounded.
    """
    neg = z.real < 0
    s = np.where(neg, -1.0, 1.0)
    rest = s * np.exp(log_pref - z * z) * wofz(1j * s * z)
    return neg.astype(float), rest


def window_moment(alpha, beta, window: HomodyneWindow):
    """Window matrix element  int_window <x_theta|alpha><beta|x_theta> dx.

    With u = (alpha' + conj(beta'))/sqrt(2) (amplitudes rotated by -theta) the
    integrand is <beta|alpha> exp(-(x-u)^2)/sqrt(pi), so the integral is
    <beta|alpha> [erf(hi-u) - erf(lo-u)]/2, evaluated through the Faddeeva
    function to stay finite when |Im u| is large.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    if window.is_infinite:
        return coherent_overlap(alpha, beta)
    rot = np.exp(-1j * window.theta)
    a, b = alpha * rot, beta * rot
    log_ov = -0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + b.conj() * a
    u = (a + b.conj()) / math.sqrt(2.0)
    lo, hi = window.bounds()
    flag_lo, rest_lo = _scaled_erfc(lo - u, log_ov)
    flag_hi, rest_hi = _scaled_erfc(hi - u, log_ov)
    out = 0.5 * ((flag_lo - flag_hi) * 2.0 * np.exp(log_ov) + rest_lo - rest_hi)
    return out if out.ndim else complex(out)


def partial_trace_cr(state: CoherentRank, keep: int, tol: float = DEFAULT_TOL) -> CoherentRank:
    if state.modes != 2:
        raise ValueError("partial_trace_cr needs a two-mode state")
    t = state.kets[:, 1 - keep]
    c = state.coeffs * coherent_overlap(t[:, None], t[None, :])
    return compress_terms(CoherentRank(state.kets[:, [keep]], c), tol)


def condition_and_trace_cr(
    state: CoherentRank, window: HomodyneWindow, measured_mode: int, tol: float = DEFAULT_TOL
) -> tuple[CoherentRank, float]:
    """Herald on a homodyne window in ``measured_mode``; return the normalised other mode and p."""
    if state.modes != 2:
        raise ValueError("condition_and_trace_cr needs a two-mode state")
    m = state.kets[:, measured_mode]
    c = state.coeffs * window_moment(m[:, None], m[None, :], window)
    kept = CoherentRank(state.kets[:, [1 - measured_mode]], c)
    p_c = kept.trace()
    p = p_c.real
    if p < HERALD_FLOOR:
        raise HeraldUnderflowError(f"herald probability underflow (p={p:.3g})")
    if abs(p_c.imag) > 1e-9 * p:
        raise ConsistencyError(f"herald probability has imaginary part {p_c.imag:.3g}")
    out = CoherentRank(kept.kets, kept.coeffs / p)
    return compress_terms(out, tol), p


def compress_terms(state: CoherentRank, tol: float = DEFAULT_TOL) -> CoherentRank:
    """Merge kets closer than ``tol`` and drop dyads with |C_ij| < ``tol``.

    Each dyad |a><b| has unit trace norm, so dropping it changes any expectation
    value by at most |C_ij|.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if tol == 0 or state.size == 0:
        return state
    reps: list[np.ndarray] = []
    label = np.empty(state.size, dtype=int)
    for i, k in enumerate(state.kets):
        for j, rep in enumerate(reps):
            if np.linalg.norm(k - rep) <= tol:
                label[i] = j
                break
        else:
            label[i] = len(reps)
            reps.append(k)
    proj = np.zeros((state.size, len(reps)))
    proj[np.arange(state.size), label] = 1.0
    c = proj.T @ state.coeffs @ proj
    c = 0.5 * (c + c.conj().T)
    c[np.abs(c) < tol] = 0.0
    alive = np.any(c != 0, axis=1)
    kets = np.array(reps)[alive]
    return CoherentRank(kets, c[np.ix_(alive, alive)])


def wigner_cr(state: CoherentRank, x, p) -> np.ndarray:
    """W(x, p) summed over dyads, with W(0,0) = 1/pi for vacuum.

    The dyad |a><b| contributes <b|a> exp(-2 (z - a)(conj z - conj b)) / pi at
    z = (x + i p)/sqrt(2).
    """
    if state.modes != 1:
        raise ValueError("wigner_cr needs a single-mode state")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    z = (x + 1j * p) / math.sqrt(2.0)
    a = state.kets[:, 0]
    total = np.zeros(np.broadcast(x, p).shape, dtype=complex)
    for i in range(state.size):
        ai = a[i]
        expo = (
            -2.0 * (z[..., None] - ai) * (z[..., None].conj() - a.conj())
            - 0.5 * abs(ai) ** 2
            - 0.5 * np.abs(a) ** 2
            + a.conj() * ai
        )
        total += np.exp(expo) @ state.coeffs[i]
    return total.real / np.pi


def coherent_amplitudes(alpha, dim: int) -> np.ndarray:
    """Exact (un-renormalised) <n|alpha> for n < dim; shape (dim, len(alpha))."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    out = np.empty((dim, alpha.size), dtype=complex)
    out[0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    for n in range(1, dim):
        out[n] = out[n - 1] * alpha / math.sqrt(n)
    return out


def to_fock(state: CoherentRank, dim: int) -> FockDensity:
    """Project onto the first ``dim`` Fock levels of every mode (no renormalisation)."""
    mean = state.max_amplitude() ** 2
    if poisson_tail(mean, dim) > MASS_TOL:
        raise TruncationError(
            f"dim={dim} too small for amplitudes up to {state.max_amplitude():.3g}; "
            f"needs dim >= {required_dim(mean)}"
        )
    f = coherent_amplitudes(state.kets[:, 0], dim)
    if state.modes == 2:
        g = coherent_amplitudes(state.kets[:, 1], dim)
        f = (f[:, None, :] * g[None, :, :]).reshape(dim * dim, state.size)
    return FockDensity(f @ state.coeffs @ f.conj().T, modes=state.modes)
