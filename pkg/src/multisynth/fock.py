"""Truncated Fock-basis engine.

Everything here is a plain function of numpy arrays wrapped in two small
containers: :class:`FockVector` for single-mode kets and :class:`FockDensity`
for one- or two-mode density operators. Two-mode matrices use mode 0 as the
major index, i.e. ``|n0, n1>`` sits at ``n0 * dim + n1``.

Beamsplitter convention (shared with the coherent-rank engine)::

    |alpha, beta>  ->  |tau*alpha + r*beta, -r*alpha + tau*beta>,   r = sqrt(1 - tau^2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammainc

from .exceptions import HeraldUnderflowError, TruncationError
from .window import HomodyneWindow

MASS_TOL = 1e-6
LEAK_TOL = 1e-8
HERALD_FLOOR = 1e-12


@dataclass(frozen=True)
class FockVector:
    amps: np.ndarray
    truncated_mass: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("FockVector needs a non-empty 1-D amplitude array")
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    def density(self) -> "FockDensity":
        return FockDensity(np.outer(self.amps, self.amps.conj()), modes=1)


@dataclass(frozen=True)
class FockDensity:
    matrix: np.ndarray
    modes: int = 1
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if self.modes not in (1, 2):
            raise ValueError("only 1 or 2 modes are supported")
        dim = round(m.shape[0] ** (1.0 / self.modes))
        if dim**self.modes != m.shape[0]:
            raise ValueError(f"matrix side {m.shape[0]} is not dim**{self.modes}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", dim)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "FockDensity":
        return FockDensity(self.matrix / self.trace(), self.modes)

    def tensor(self) -> np.ndarray:
        """Two-mode matrix as a (d, d, d, d) array indexed [n0, n1, n0', n1']."""
        d = self.dim
        return self.matrix.reshape(d, d, d, d)


def poisson_tail(mean: float, dim: int) -> float:
    """Probability that a Poisson(mean) variable is >= dim."""
    if mean <= 0:
        return 0.0
    return float(gammainc(dim, mean))


def required_dim(mean_photons: float, tol: float = MASS_TOL) -> int:
    """Smallest dim whose Poisson(mean_photons) tail is below ``tol``."""
    dim = 1
    while poisson_tail(mean_photons, dim) > tol:
        dim += 1
    return dim


def coherent_fock(alpha: complex, dim: int) -> FockVector:
    """Renormalised truncation of the coherent state |alpha>."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    mean = abs(alpha) ** 2
    mass = poisson_tail(mean, dim)
    if mass > MASS_TOL:
        raise TruncationError(
            f"coherent state alpha={alpha}: dim={dim} drops probability {mass:.3g}; "
            f"needs dim >= {required_dim(mean)}"
        )
    amps = np.empty(dim, dtype=complex)
    amps[0] = math.exp(-mean / 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps /= np.linalg.norm(amps)
    return FockVector(amps, truncated_mass=mass)


def cat_fock(alpha: float, parity: str = "even", dim: int = 40) -> FockVector:
    """(|alpha> +/- |-alpha>) / N in the Fock basis."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if parity == "odd" and alpha == 0:
        raise ValueError("odd cat with alpha=0 is the null vector")
    coh = coherent_fock(alpha, dim)
    keep = np.arange(dim) % 2 == (0 if parity == "even" else 1)
    amps = np.where(keep, coh.amps, 0.0)
    amps = amps / np.linalg.norm(amps)
    return FockVector(amps, truncated_mass=coh.truncated_mass)


def number_fock(n: int, dim: int) -> FockVector:
    if not 0 <= n < dim:
        raise TruncationError(f"Fock state |{n}> needs dim > {n}, got {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps)


def tensor(a: FockDensity, b: FockDensity) -> FockDensity:
    if a.modes != 1 or b.modes != 1 or a.dim != b.dim:
        raise ValueError("tensor expects two single-mode states of equal dim")
    return FockDensity(np.kron(a.matrix, b.matrix), modes=2)


# --- beamsplitter -----------------------------------------------------------


def _raise_a(c: np.ndarray, tau: float, r: float, sign: float) -> np.ndarray:
    """Apply (tau*a0^dag + sign*r*a1^dag)-type creation to a fixed-N block vector.

    ``c[k]`` is the amplitude of |k, N-k>. With ``sign=-1`` and (tau, r) this is
    the image of a0^dag; with the roles swapped it is the image of a1^dag.
    """
    n_tot = c.size - 1
    k = np.arange(n_tot + 2)
    out = np.zeros(n_tot + 2)
    out[1:] += tau * np.sqrt(k[1:]) * c
    out[:-1] += sign * r * np.sqrt(n_tot + 1 - k[:-1]) * c
    return out


@lru_cache(maxsize=8)
def _bs_blocks(tau: float, dim: int):
    """Per-total-photon-number blocks of the truncated beamsplitter unitary.

    Columns are built by repeated creation-operator action,
    U|n, m> = (U a0^dag U^dag)^n (U a1^dag U^dag)^m |0,0> / sqrt(n! m!),
    which keeps every intermediate vector normalised.
    """
    r = math.sqrt(max(0.0, 1.0 - tau * tau))
    n_max = 2 * dim - 2
    full = [np.zeros((n + 1, n + 1)) for n in range(n_max + 1)]
    base = np.array([1.0])
    for m in range(dim):
        if m > 0:
            # U a1^dag U^dag = r a0^dag + tau a1^dag
            base = _raise_a(base, r, tau, +1.0) / math.sqrt(m)
        v = base
        for n in range(dim):
            if n > 0:
                # U a0^dag U^dag = tau a0^dag - r a1^dag
                v = _raise_a(v, tau, r, -1.0) / math.sqrt(n)
            full[n + m][:, n] = v
    blocks = []
    for n_tot in range(n_max + 1):
        lo, hi = max(0, n_tot - dim + 1), min(n_tot, dim - 1)
        ks = np.arange(lo, hi + 1)
        idx = ks * dim + (n_tot - ks)
        blocks.append((idx, full[n_tot][lo : hi + 1, lo : hi + 1]))
    return tuple(blocks)


def beamsplitter_matrix(tau: float, dim: int) -> np.ndarray:
    """Dense truncated beamsplitter matrix (dim**2 square); handy for small checks."""
    out = np.zeros((dim * dim, dim * dim))
    for idx, u in _bs_blocks(float(tau), dim):
        out[np.ix_(idx, idx)] = u
    return out


def apply_beamsplitter(x: np.ndarray, tau: float, dim: int) -> np.ndarray:
    """Left-multiply the (dim**2, ...) array ``x`` by the truncated beamsplitter."""
    x = np.asarray(x)
    y = np.empty_like(x, dtype=complex)
    for idx, u in _bs_blocks(float(tau), dim):
        y[idx] = u @ x[idx]
    return y


def beamsplitter_fock(state: FockDensity, tau: float) -> FockDensity:
    if state.modes != 2:
        raise ValueError("beamsplitter_fock needs a two-mode state")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"transmittivity must lie in (0, 1], got {tau}")
    d = state.dim
    half = apply_beamsplitter(state.matrix, tau, d)
    out = apply_beamsplitter(half.conj().T, tau, d).conj().T
    before, after = state.trace(), float(np.trace(out).real)
    if before - after > LEAK_TOL:
        raise TruncationError(
            f"beamsplitter leaks {before - after:.3g} of the trace out of dim={d}; "
            "use a larger dim"
        )
    return FockDensity(out, modes=2)


def beamsplitter_ket(vec: np.ndarray, tau: float, dim: int) -> np.ndarray:
    """Beamsplitter on a two-mode ket stored as a flat (dim**2,) vector."""
    return apply_beamsplitter(vec, tau, dim)


# --- quadratures and homodyne windows ----------------------------------------


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Rows 0..nmax of <x|n> evaluated at ``x`` (any shape), by stable recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quad_wavefunction(n: int, x: float) -> float:
    """<x|n> = pi^-1/4 (2^n n!)^-1/2 H_n(x) exp(-x^2/2)."""
    return float(hermite_functions(n, x)[n])


def _window_gram(lo: float, hi: float, dim: int, nodes: int) -> np.ndarray:
    panels = max(1, math.ceil(hi - lo))
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    psi = hermite_functions(dim - 1, xs)
    return (psi * ws) @ psi.T


def homodyne_window_povm(window: HomodyneWindow, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Matrix of the window effect  int_window |x_theta><x_theta| dx  in the Fock basis."""
    if window.is_infinite:
        return np.eye(dim, dtype=complex)
    lo, hi = window.bounds()
    # Hermite functions up to dim-1 are below 1e-30 past this radius
    reach = math.sqrt(2 * dim + 1) + 12.0
    lo, hi = max(lo, -reach), min(hi, reach)
    if hi <= lo:
        return np.zeros((dim, dim), dtype=complex)
    nodes = 16
    prev = _window_gram(lo, hi, dim, nodes)
    while nodes < 2048:
        nodes *= 2
        cur = _window_gram(lo, hi, dim, nodes)
        if np.max(np.abs(cur - prev)) < tol:
            break
        prev = cur
    n = np.arange(dim)
    phase = np.exp(1j * window.theta * (n[:, None] - n[None, :]))
    return cur * phase


def rotate(state: FockDensity, phi: float, mode: int = 0) -> FockDensity:
    """Phase rotation exp(-i phi n) on one mode: rho -> R rho R^dagger."""
    d = state.dim
    ph = np.exp(-1j * phi * np.arange(d))
    if state.modes == 1:
        diag = ph
    else:
        ones = np.ones(d)
        diag = np.kron(ph, ones) if mode == 0 else np.kron(ones, ph)
    return FockDensity(diag[:, None] * state.matrix * diag.conj()[None, :], state.modes)


def partial_trace(state: FockDensity, keep: int) -> FockDensity:
    if state.modes != 2:
        raise ValueError("partial_trace needs a two-mode state")
    t = state.tensor()
    sub = "abcb->ac" if keep == 0 else "abad->bd"
    return FockDensity(np.einsum(sub, t), modes=1)


def condition_and_trace(
    state: FockDensity, window: HomodyneWindow, measured_mode: int
) -> tuple[FockDensity, float]:
    """Herald on a homodyne window in ``measured_mode``; return the other mode and p."""
    if state.modes != 2:
        raise ValueError("condition_and_trace needs a two-mode state")
    if window.is_infinite:
        kept = partial_trace(state, keep=1 - measured_mode)
        p = kept.trace()
        return FockDensity(kept.matrix / p, 1), p
    povm = homodyne_window_povm(window, state.dim)
    t = state.tensor()
    if measured_mode == 0:
        rho = np.einsum("ac,cbad->bd", povm, t)
    else:
        rho = np.einsum("ac,bcda->bd", povm, t)
    p = float(np.trace(rho).real)
    if p < HERALD_FLOOR:
        raise HeraldUnderflowError(f"herald probability underflow (p={p:.3g})")
    return FockDensity(rho / p, 1), p


# --- Wigner function -----------------------------------------------------------


def wigner_fock(rho: FockDensity, xs, ps) -> np.ndarray:
    """W(x, p) on the grid ``xs`` x ``ps`` (returned shape (len(xs), len(ps))).

    Normalised so that the integral over dx dp is one; vacuum gives 1/pi at the
    origin. Uses the displaced-parity matrix elements <n| D P D^dag |m>, built
    row by row through their three-term recurrence.
    """
    if rho.modes != 1:
        raise ValueError("wigner_fock needs a single-mode state")
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    zeta = (xs[:, None] + 1j * ps[None, :]) / math.sqrt(2.0)
    d = rho.dim
    m = rho.matrix
    row = np.empty((d,) + zeta.shape, dtype=complex)
    row[0] = np.exp(-2.0 * np.abs(zeta) ** 2) / np.pi
    for n in range(1, d):
        row[n] = 2.0 * zeta * row[n - 1] / math.sqrt(n)
    sqrt_n = np.sqrt(np.arange(d))
    total = np.tensordot(m[0], row, axes=1)
    for k in range(1, d):
        new = 2.0 * zeta.conj() * row
        new[1:] -= sqrt_n[1:, None, None] * row[:-1]
        row = new / math.sqrt(k)
        total += np.tensordot(m[k], row, axes=1)
    return total.real
