import math

import mpmath
import numpy as np
import pytest
from scipy.stats import poisson

from multisynth.exceptions import HeraldUnderflowError, TruncationError
from multisynth.fock import (
    FockDensity,
    beamsplitter_fock,
    beamsplitter_ket,
    beamsplitter_matrix,
    cat_fock,
    coherent_fock,
    condition_and_trace,
    hermite_functions,
    homodyne_window_povm,
    number_fock,
    partial_trace,
    poisson_tail,
    quad_wavefunction,
    required_dim,
    rotate,
    tensor,
    wigner_fock,
)
from multisynth.window import HomodyneWindow

from conftest import random_density


def test_hermite_function_high_order_against_mpmath():
    n, x = 50, 1.3
    exact = mpmath.hermite(n, x) * mpmath.exp(-x * x / 2) / mpmath.sqrt(
        mpmath.sqrt(mpmath.pi) * 2**n * mpmath.factorial(n)
    )
    assert quad_wavefunction(n, x) == pytest.approx(float(exact), rel=1e-12)


def test_hermite_functions_orthonormal():
    t, w = np.polynomial.legendre.leggauss(200)
    x, w = 15 * t, 15 * w
    psi = hermite_functions(19, x)
    assert np.allclose((psi * w) @ psi.T, np.eye(20), atol=1e-12)


def test_poisson_tail_matches_direct_sum():
    # probability that Poisson(9) >= 10
    direct = 1.0 - sum(math.exp(-9) * 9**k / math.factorial(k) for k in range(10))
    assert poisson_tail(9.0, 10) == pytest.approx(direct, rel=1e-12)
    assert poisson_tail(9.0, 10) == pytest.approx(poisson.sf(9, 9.0), rel=1e-12)
    assert poisson_tail(0.0, 3) == 0.0


def test_coherent_truncation_error_names_needed_dim():
    with pytest.raises(TruncationError, match=r"needs dim >= \d+"):
        coherent_fock(3.0, 10)
    need = required_dim(9.0)
    assert coherent_fock(3.0, need).truncated_mass <= 1e-6
    assert poisson_tail(9.0, need - 1) > 1e-6


def test_coherent_amplitudes():
    v = coherent_fock(0.7 - 0.2j, 30)
    n = np.arange(30)
    ref = np.array([np.exp(-abs(0.7 - 0.2j) ** 2 / 2) * (0.7 - 0.2j) ** k / math.sqrt(math.factorial(k)) for k in n])
    assert np.allclose(v.amps, ref, atol=1e-14)


def test_cat_parity_support():
    even = cat_fock(1.5, "even", 30).amps
    odd = cat_fock(1.5, "odd", 30).amps
    assert np.all(even[1::2] == 0) and np.all(odd[::2] == 0)
    assert np.linalg.norm(even) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        cat_fock(0.0, "odd", 10)
    assert np.allclose(cat_fock(0.0, "even", 5).amps, [1, 0, 0, 0, 0])


def test_beamsplitter_hong_ou_mandel():
    d = 4
    ket = np.zeros(d * d, dtype=complex)
    ket[1 * d + 1] = 1.0
    out = beamsplitter_ket(ket, 1 / math.sqrt(2), d)
    assert abs(out[1 * d + 1]) < 1e-14
    assert abs(out[2 * d + 0]) ** 2 == pytest.approx(0.5)
    assert abs(out[0 * d + 2]) ** 2 == pytest.approx(0.5)


def test_beamsplitter_moves_coherent_amplitudes():
    d, tau = 30, 0.8
    r = 0.6
    a, b = 0.9, -0.4j
    ket = np.kron(coherent_fock(a, d).amps, coherent_fock(b, d).amps)
    out = beamsplitter_ket(ket, tau, d)
    ref = np.kron(coherent_fock(tau * a + r * b, d).amps, coherent_fock(-r * a + tau * b, d).amps)
    assert np.allclose(out, ref, atol=1e-9)


def test_beamsplitter_identity_and_unitary_blocks():
    d = 6
    assert np.allclose(beamsplitter_matrix(1.0, d), np.eye(d * d))
    u = beamsplitter_matrix(0.37, d)
    # the truncated operator is unitary on every total-photon block that fits
    low = [i for i in range(d * d) if i // d + i % d < d]
    sub = u[np.ix_(low, low)]
    assert np.allclose(sub.T @ sub, np.eye(len(low)), atol=1e-12)


def test_beamsplitter_leak_detected():
    d = 4
    rho = tensor(number_fock(3, d).density(), number_fock(3, d).density())
    with pytest.raises(TruncationError):
        beamsplitter_fock(rho, 0.7)


def test_povm_full_line_is_identity_and_window_matches_integral():
    d = 12
    wide = homodyne_window_povm(HomodyneWindow(0.0, 0.0, 200.0), d)
    assert np.allclose(wide, np.eye(d), atol=1e-10)
    w = HomodyneWindow(0.0, 0.4, 0.6)
    lo, hi = w.bounds()
    ref = mpmath.quad(lambda x: quad_wavefunction(0, float(x)) * quad_wavefunction(2, float(x)), [lo, hi])
    assert homodyne_window_povm(w, d)[0, 2].real == pytest.approx(float(ref), abs=1e-12)


def test_povm_rotation_phase():
    d = 8
    base = homodyne_window_povm(HomodyneWindow(0.0, 0.3, 1.0), d)
    rot = homodyne_window_povm(HomodyneWindow(0.9, 0.3, 1.0), d)
    n = np.arange(d)
    assert np.allclose(rot, base * np.exp(0.9j * (n[:, None] - n[None, :])))


def test_partial_trace_of_product(rng):
    d = 5
    a, b = random_density(rng, d), random_density(rng, d)
    rho = FockDensity(np.kron(a, b), 2)
    assert np.allclose(partial_trace(rho, 0).matrix, a)
    assert np.allclose(partial_trace(rho, 1).matrix, b)


def test_condition_on_product_state_returns_other_mode(rng):
    d = 6
    a, b = random_density(rng, d), random_density(rng, d)
    w = HomodyneWindow(0.2, -0.5, 1.5)
    povm = homodyne_window_povm(w, d)
    out, p = condition_and_trace(FockDensity(np.kron(a, b), 2), w, measured_mode=1)
    assert p == pytest.approx(np.trace(povm @ b).real)
    assert np.allclose(out.matrix, a)
    out, p = condition_and_trace(FockDensity(np.kron(a, b), 2), w, measured_mode=0)
    assert p == pytest.approx(np.trace(povm @ a).real)
    assert np.allclose(out.matrix, b)


def test_herald_underflow():
    d = 4
    rho = tensor(number_fock(0, d).density(), number_fock(0, d).density())
    with pytest.raises(HeraldUnderflowError):
        condition_and_trace(rho, HomodyneWindow(0.0, 30.0, 0.1), measured_mode=1)


def test_rotate_is_phase_on_coherent_state():
    d = 25
    rho = coherent_fock(1.1, d).density()
    out = rotate(rho, 0.7)
    ref = coherent_fock(1.1 * np.exp(-0.7j), d).density()
    assert np.allclose(out.matrix, ref.matrix, atol=1e-12)


def test_wigner_vacuum_and_single_photon():
    xs = np.array([0.0, 1.0])
    ps = np.array([0.0, 0.5])
    vac = wigner_fock(number_fock(0, 3).density(), xs, ps)
    r2 = xs[:, None] ** 2 + ps[None, :] ** 2
    assert np.allclose(vac, np.exp(-r2) / np.pi)
    one = wigner_fock(number_fock(1, 3).density(), xs, ps)
    assert np.allclose(one, (2 * r2 - 1) * np.exp(-r2) / np.pi)


def test_wigner_cat_interference_sign():
    rho = cat_fock(2.0, "odd", 30).density()
    assert wigner_fock(rho, [0.0], [0.0])[0, 0] == pytest.approx(-1 / np.pi, rel=1e-10)
