"""Property tests for the structural invariants of every module.

The shared hypothesis profile (conftest.py) runs 200 derandomized examples
per property.
"""
import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from multisynth import coherent as cr
from multisynth.exceptions import HeraldUnderflowError
from multisynth.fock import (
    FockDensity,
    beamsplitter_fock,
    cat_fock,
    coherent_fock,
    condition_and_trace,
    homodyne_window_povm,
    required_dim,
    rotate,
)
from multisynth.metrics import fidelity, nearest_cat, wigner_grid
from multisynth.protocol import ScenarioConfig, build_merge_plan, iterative_oracle, synthesize
from multisynth.states import GKPParams, TargetSpec, gkp_comb, target_fock, target_vector
from multisynth.window import HomodyneWindow

amplitude = st.floats(0.0, 2.0)
phase = st.floats(0.0, 2 * math.pi)
thetas = st.floats(-10.0, 10.0)
centres = st.floats(-3.0, 3.0)
widths = st.floats(0.01, 4.0)
parities = st.sampled_from(["even", "odd"])


@st.composite
def complex_amp(draw, rmax=2.0):
    return draw(st.floats(0.0, rmax)) * np.exp(1j * draw(phase))


@st.composite
def random_rho(draw, dim):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    rank = draw(st.integers(1, 3))
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@st.composite
def windows(draw):
    return HomodyneWindow(draw(thetas), draw(centres), draw(widths))


@st.composite
def small_cr_state(draw):
    """A normalised two-mode dyad state from cat/coherent inputs and a beamsplitter."""
    def single():
        if draw(st.booleans()):
            return cr.coherent_cr(draw(complex_amp()))
        a = draw(st.floats(0.05, 2.0))
        return cr.cat_cr(a, draw(parities))

    return cr.beamsplitter_cr(cr.product_cr(single(), single()), draw(st.floats(0.05, 1.0)))


# --- hilbert-fock -------------------------------------------------------------


@given(complex_amp(), parities)
def test_constructed_vectors_unit_norm(alpha, parity):
    assert abs(np.linalg.norm(coherent_fock(alpha, 40).amps) - 1) < 1e-12
    assume(abs(alpha) > 1e-3 or parity == "even")
    amps = cat_fock(abs(alpha), parity, 40).amps
    assert abs(np.linalg.norm(amps) - 1) < 1e-12
    # parity selection is exact
    off = amps[1::2] if parity == "even" else amps[0::2]
    assert np.all(off == 0)


@given(windows())
def test_window_fields(w):
    assert w.dx > 0 and 0 <= w.theta < 2 * math.pi
    lo, hi = w.bounds()
    assert hi > lo


@given(random_rho(4), random_rho(4), st.floats(0.01, 1.0))
def test_beamsplitter_preserves_trace_and_purity(a, b, tau):
    # support below 4 photons per mode stays inside dim = 8
    d = 8
    pad = lambda m: np.pad(m, ((0, d - 4), (0, d - 4)))
    rho = FockDensity(np.kron(pad(a), pad(b)), 2)
    out = beamsplitter_fock(rho, tau)
    assert abs(out.trace() - rho.trace()) < 1e-9
    purity = lambda m: np.trace(m @ m).real
    assert abs(purity(out.matrix) - purity(rho.matrix)) < 1e-9
    assert np.max(np.abs(out.matrix - out.matrix.conj().T)) < 1e-10


@given(windows(), st.integers(1, 16))
def test_povm_eigenvalues_bounded(w, dim):
    ev = np.linalg.eigvalsh(homodyne_window_povm(w, dim))
    assert ev.min() >= -1e-9 and ev.max() <= 1 + 1e-9


@given(thetas, centres, widths, widths)
def test_window_additivity(theta, x0, d1, d2):
    # [x0 - d1, x0] and [x0, x0 + d2] in shot-noise units
    left = HomodyneWindow(theta, x0 - d1 / 2, d1)
    right = HomodyneWindow(theta, x0 + d2 / 2, d2)
    union = HomodyneWindow(theta, x0 + (d2 - d1) / 2, d1 + d2)
    dim = 12
    total = homodyne_window_povm(left, dim) + homodyne_window_povm(right, dim)
    assert np.max(np.abs(total - homodyne_window_povm(union, dim))) < 1e-9


@given(random_rho(36), thetas, centres, widths, st.sampled_from([0, 1]))
def test_rotation_covariance(rho, theta, x0, dx, mode):
    state = FockDensity(rho, 2)
    try:
        direct, p1 = condition_and_trace(state, HomodyneWindow(theta, x0, dx), mode)
        rotated = rotate(state, theta, mode)
        via, p2 = condition_and_trace(rotated, HomodyneWindow(0.0, x0, dx), mode)
    except HeraldUnderflowError:  # far-off windows; not what is tested here
        assume(False)
    assert abs(p1 - p2) < 1e-9
    assert np.max(np.abs(direct.matrix - via.matrix)) < 1e-9


@given(random_rho(25), windows(), st.sampled_from([0, 1]))
def test_heralded_state_is_a_density_matrix(rho, w, mode):
    try:
        out, p = condition_and_trace(FockDensity(rho, 2), w, mode)
    except HeraldUnderflowError:
        assume(False)
    assert 0 < p <= 1 + 1e-10
    m = out.matrix
    assert np.max(np.abs(m - m.conj().T)) < 1e-10
    assert abs(np.trace(m).real - 1) < 1e-10
    assert np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() > -1e-8


# --- coherent-rank ------------------------------------------------------------


@given(small_cr_state(), windows(), st.sampled_from([0, 1]))
def test_cr_operations_keep_hermiticity_and_trace(state, w, mode):
    assert abs(state.trace() - 1) < 1e-10
    traced = cr.partial_trace_cr(state, keep=mode)
    for s in (state, traced):
        anti = s.coeffs - s.coeffs.conj().T
        assert abs(np.sum(anti * s.gram())) < 1e-10
    assert abs(traced.trace() - 1) < 1e-10
    try:
        out, p = cr.condition_and_trace_cr(state, w, mode)
    except HeraldUnderflowError:
        assume(False)
    assert 0 < p <= 1 + 1e-9
    assert abs(out.trace() - 1) < 1e-10
    assert np.max(np.abs(out.coeffs - out.coeffs.conj().T)) < 1e-12


@given(small_cr_state(), st.sampled_from([0, 1]))
def test_cr_wigner_normalisation(state, keep):
    rho = cr.partial_trace_cr(state, keep=keep)
    half = math.sqrt(2) * rho.max_amplitude() + 6.0
    xs = np.linspace(-half, half, int(20 * half) + 1)
    assert abs(wigner_grid(rho, xs, xs).integral() - 1) < 1e-3


@given(st.floats(0.0, 1.0), st.integers(2, 3), st.floats(0.05, 0.95), windows())
def test_engine_equivalence(alpha, n, r, w):
    cfg = ScenarioConfig("even-cat", alpha, n, r, w, "coherent-rank")
    try:
        rho_c, p_c = synthesize(cfg)
    except HeraldUnderflowError:
        assume(False)
    assume(p_c > 1e-6)
    rho_f, p_f = synthesize(cfg.replace(engine="fock", dim=24))
    assert abs(p_c - p_f) < 1e-8
    assert np.max(np.abs(cr.to_fock(rho_c, 24).matrix - rho_f.matrix)) < 1e-7


@given(small_cr_state(), st.floats(1e-14, 1e-8))
def test_compress_error_bound(state, tol):
    one = cr.partial_trace_cr(state, keep=0, tol=0.0)
    small = cr.compress_terms(one, tol)
    # any bounded observable moves by at most the sum of dropped |C_ij|
    dropped = np.sum(np.abs(one.coeffs)) - np.sum(np.abs(small.coeffs))
    assert abs(small.trace() - one.trace()) <= max(dropped, 0) + one.size**2 * tol + 1e-12


# --- states -------------------------------------------------------------------


@given(st.floats(0.0, 2.5), st.floats(0.5, 1.5), parities)
def test_target_norms_and_engine_overlap(alpha, s, parity):
    assume(alpha > 0.05 or parity == "even")
    spec = TargetSpec.squeezed_cat(alpha, s, parity)
    assert abs(np.linalg.norm(target_fock(spec, 80).amps) - 1) < 1e-10
    probe = cr.cat_cr(alpha * 0.9 + 0.1, "even")
    f_cr = fidelity(probe, spec)
    f_fock = fidelity(cr.to_fock(probe, 60), spec)
    assert abs(f_cr - f_fock) < 1e-7


def _codeword_overlap(s1, s2, a):
    zero, one = gkp_comb(GKPParams(s1, s2, a, 0)), gkp_comb(GKPParams(s1, s2, a, 1))
    d = zero.centers[:, None] - one.centers[None, :]
    gram = math.sqrt(math.pi) * s2 * np.exp(-d * d / (4 * s2 * s2))
    return abs(zero.coeffs @ gram @ one.coeffs)


@given(st.floats(0.1, 0.6), st.floats(0.25, 0.6), st.floats(6.0, 9.0))
def test_gkp_codewords_orthogonal(s1, s2, ratio):
    assert _codeword_overlap(s1, s2, ratio * s2) < 1e-6


@given(st.floats(0.1, 0.6), st.floats(0.25, 0.6), st.floats(6.0, 20.0))
def test_gkp_codeword_overlap_tracks_tooth_offset(s1, s2, ratio):
    # neighbouring |0> and |1> teeth sit a/2 apart, so the leakage scale is
    # exp(-(a/2)^2 / (4 s2^2)) times an O(1) envelope-dependent factor
    scale = math.exp(-(ratio**2) / 16)
    assert _codeword_overlap(s1, s2, ratio * s2) <= 2.0 * scale


# --- protocol -----------------------------------------------------------------


@given(st.integers(1, 1000))
def test_merge_weights(n):
    plan = build_merge_plan(n)
    assert np.allclose(plan.taus, [math.sqrt((i + 1) / (i + 2)) for i in range(n - 1)])
    assert np.max(np.abs(plan.weights() - 1 / math.sqrt(n))) < 1e-12


@given(st.floats(0.1, 3.0), st.integers(2, 8), st.floats(0.05, 0.95), thetas, centres, widths)
def test_equivalence_theorem_cr(alpha, n, r, theta, x0, dx):
    w = HomodyneWindow(theta, x0, dx)
    cfg = ScenarioConfig("even-cat", alpha, n, r, w, "coherent-rank")
    try:
        a, pa = synthesize(cfg)
    except HeraldUnderflowError:
        assume(False)
    b, pb = iterative_oracle(cfg, [HomodyneWindow.infinite()] * (n - 2) + [w])
    assert abs(pa - pb) < 1e-10
    dim = required_dim(max(a.max_amplitude(), b.max_amplitude()) ** 2, 1e-14)
    assert np.max(np.abs(cr.to_fock(a, dim).matrix - cr.to_fock(b, dim).matrix)) < 1e-9


@given(st.floats(0.1, 2.0), st.integers(3, 5), st.floats(0.1, 0.9), st.floats(0.05, 1.0))
def test_dominance_and_monotonicity(alpha, n, r, dx):
    w = HomodyneWindow(0.0, 0.0, dx)
    cfg = ScenarioConfig("even-cat", alpha, n, r, w)
    _, p_mult = synthesize(cfg)
    _, p_iter = iterative_oracle(cfg, [w] * (n - 1))
    assert p_mult > p_iter
    _, p_wider = synthesize(cfg.replace(window=HomodyneWindow(0.0, 0.0, 1.5 * dx)))
    assert p_wider >= p_mult


@given(st.floats(0.1, 1.5), st.integers(2, 3), st.floats(0.05, 0.95), st.floats(0.05, 2.0), phase)
def test_parity_symmetry(alpha, n, r, dx, theta):
    cfg = ScenarioConfig("even-cat", alpha, n, r, HomodyneWindow(theta, 0.0, dx))
    rho, _ = synthesize(cfg)
    m = cr.to_fock(rho, 30).matrix
    assert np.max(np.abs(m[0::2, 1::2])) < 1e-9


# --- metrics ------------------------------------------------------------------


@given(small_cr_state())
def test_nearest_cat_bounds_grid(state):
    rho = cr.partial_trace_cr(state, keep=0)
    gamma, f = nearest_cat(rho, "even", gamma_max=3.0)
    grid = np.arange(0.0, 3.0 + 0.025, 0.05)
    assert all(fidelity(rho, TargetSpec.cat(g)) <= f + 1e-12 for g in grid)
