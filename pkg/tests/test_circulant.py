import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from convnorm.circulant import (
    build_circulant,
    circular_conv_layer,
    circular_convolve,
    cross_correlate,
    crosscorr_layer,
    cyclic_shift,
    dft,
    linear_convolve_full,
    verify_circulant_decomposition,
)
from convnorm.tensor import zero_pad

from conftest import naive_circular, naive_circular_2d, naive_dft


def test_cyclic_shift():
    np.testing.assert_array_equal(cyclic_shift([1, 2, 3], 1), [3, 1, 2])
    v = np.arange(5.0)
    np.testing.assert_array_equal(cyclic_shift(v, 0), v)
    np.testing.assert_array_equal(cyclic_shift(v, 5), v)
    np.testing.assert_array_equal(cyclic_shift(v, -1), [1, 2, 3, 4, 0])


def test_build_circulant_columns():
    c = build_circulant([1, 2], 3)
    np.testing.assert_array_equal(c[:, 0], [1, 2, 0])
    np.testing.assert_array_equal(c[:, 1], [0, 1, 2])
    np.testing.assert_array_equal(c[:, 2], [2, 0, 1])
    np.testing.assert_array_equal(build_circulant([1], 2), np.eye(2))


def test_build_circulant_matvec():
    x = np.array([3.0, 4.0, 5.0])
    expected = naive_circular([1, 2, 0], x)
    np.testing.assert_array_equal(expected, [13, 10, 13])
    np.testing.assert_array_equal(build_circulant([1, 2, 0], 3) @ x, expected)


def test_build_circulant_kernel_too_long():
    with pytest.raises(ValueError):
        build_circulant([1, 2, 3], 2)


def test_build_circulant_2d_matches_direct(rng):
    a = rng.normal(size=(3, 2))
    x = rng.normal(size=(5, 4))
    c = build_circulant(a, (5, 4))
    assert c.shape == (20, 20)
    np.testing.assert_allclose((c @ x.ravel()).reshape(5, 4), naive_circular_2d(a, x), atol=1e-12)


def test_dft_examples():
    np.testing.assert_allclose(dft(np.array([1.0, 0, 0, 0])), np.ones(4), atol=1e-15)
    np.testing.assert_allclose(dft(np.ones(4)), [4, 0, 0, 0], atol=1e-15)
    expected = naive_dft([1.0, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(expected, [2, 1 - 1j, 0, 1 + 1j], atol=1e-12)
    np.testing.assert_allclose(dft(zero_pad([1.0, 1.0], (0, 2))), expected, atol=1e-12)


def test_dft_inverse_round_trip(rng):
    v = rng.normal(size=13)
    np.testing.assert_allclose(dft(dft(v), inverse=True).real, v, atol=1e-12)
    g = rng.normal(size=(6, 7))
    np.testing.assert_allclose(dft(dft(g), inverse=True).real, g, atol=1e-12)


def test_dft_2d_separable(rng):
    g = rng.normal(size=(4, 5))
    rows = np.array([naive_dft(r) for r in g])
    both = np.array([naive_dft(c) for c in rows.T]).T
    np.testing.assert_allclose(dft(g), both, atol=1e-10)


def test_circular_convolve_examples(rng):
    np.testing.assert_allclose(circular_convolve([1, 2], [3, 4, 5], mode="direct"), [13, 10, 13])
    np.testing.assert_allclose(circular_convolve([1, 2], [3, 4, 5], mode="fft"), [13, 10, 13], atol=1e-12)
    x = rng.normal(size=9)
    np.testing.assert_array_equal(circular_convolve([1.0], x, mode="direct"), x)
    a, x = rng.normal(size=5), rng.normal(size=16)
    diff = circular_convolve(a, x, "direct") - circular_convolve(a, x, "fft")
    assert np.max(np.abs(diff)) < 1e-10
    np.testing.assert_allclose(circular_convolve(a, x, "direct"), naive_circular(a, x), atol=1e-12)


def test_circular_convolve_2d(rng):
    a, x = rng.normal(size=(3, 3)), rng.normal(size=(8, 8))
    np.testing.assert_allclose(circular_convolve(a, x, "fft"), naive_circular_2d(a, x), atol=1e-12)
    np.testing.assert_allclose(circular_convolve(a, x, "direct"), naive_circular_2d(a, x), atol=1e-12)


def test_circular_convolve_errors():
    with pytest.raises(ValueError):
        circular_convolve([], [1.0])
    with pytest.raises(ValueError):
        circular_convolve([1, 2, 3], [1, 2])


def test_linear_convolve_full():
    np.testing.assert_array_equal(linear_convolve_full([1, 2], [3, 4, 5]), [3, 10, 13, 10])
    circ = circular_convolve(zero_pad([1, 2], (0, 2)), zero_pad([3, 4, 5], (0, 1)), mode="direct")
    np.testing.assert_array_equal(circ, [3, 10, 13, 10])
    np.testing.assert_array_equal(linear_convolve_full([1.0], [3, 4]), [3, 4])
    np.testing.assert_array_equal(linear_convolve_full([1.0, 0.0], [3, 4]), [3, 4, 0])


def test_cross_correlate():
    np.testing.assert_array_equal(cross_correlate([1, 2, 3], [4, 5, 6]), [32])
    x = np.array([3.0, -1.0, 2.5])
    np.testing.assert_array_equal(cross_correlate([1.0], x), x)
    np.testing.assert_array_equal(cross_correlate([1, 2], [3, 4, 5], pad=1), linear_convolve_full([2, 1], [3, 4, 5]))
    with pytest.raises(ValueError):
        cross_correlate([1, 2, 3], [1, 2])


def test_verify_circulant_decomposition(rng):
    assert verify_circulant_decomposition([1.0], 4) == pytest.approx(0.0, abs=1e-15)
    assert verify_circulant_decomposition(rng.normal(size=3), 8) < 1e-10
    assert verify_circulant_decomposition([1.0, 1.0], 4) < 1e-10
    assert verify_circulant_decomposition(rng.normal(size=(2, 3)), (4, 5)) < 1e-10


def test_layer_helpers_match_per_channel(rng):
    z = rng.normal(size=(2, 3, 6, 5))
    k = rng.normal(size=(4, 3, 3, 2))
    out = circular_conv_layer(z, k)
    ref = np.array([[sum(naive_circular_2d(k[o, j], z[b, j]) for j in range(3)) for o in range(4)] for b in range(2)])
    np.testing.assert_allclose(out, ref, atol=1e-12)
    cc = crosscorr_layer(z, k, pad=(1, 1))
    assert cc.shape == (2, 4, 6, 6)
    ref_cc = sum(cross_correlate(k[1, j], z[0, j], pad=1) for j in range(3))
    np.testing.assert_allclose(cc[0, 1], ref_cc, atol=1e-12)


sig = st.integers(2, 64)
floats = st.floats(-10, 10)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_convolution_theorem_1d(data):
    n = data.draw(sig)
    m = data.draw(st.integers(1, n))
    a = data.draw(arrays(np.float64, m, elements=floats))
    x = data.draw(arrays(np.float64, n, elements=floats))
    lhs = dft(circular_convolve(a, x, "direct"))
    rhs = dft(zero_pad(a, (0, n - m))) * dft(x)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.abs(rhs).max())
    np.testing.assert_allclose(
        circular_convolve(zero_pad(a, (0, n - m)), x, "direct"),
        circular_convolve(x, zero_pad(a, (0, n - m)), "direct"),
        atol=1e-9,
    )
    np.testing.assert_allclose(build_circulant(a, n) @ x, circular_convolve(a, x, "direct"), atol=1e-9)
    # Parseval under the unnormalized convention
    assert np.sum(x**2) == pytest.approx(np.sum(np.abs(dft(x)) ** 2) / n, rel=1e-10, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_convolution_theorem_2d(data):
    H, W = data.draw(st.integers(1, 8)), data.draw(st.integers(1, 8))
    a = data.draw(arrays(np.float64, (data.draw(st.integers(1, H)), data.draw(st.integers(1, W))), elements=floats))
    x = data.draw(arrays(np.float64, (H, W), elements=floats))
    ap = zero_pad(a, [(0, H - a.shape[0]), (0, W - a.shape[1])])
    lhs = dft(circular_convolve(a, x, "direct"))
    rhs = dft(ap) * dft(x)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.abs(rhs).max())


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_crosscorr_equals_reversed_linear(data):
    n = data.draw(st.integers(1, 20))
    m = data.draw(st.integers(1, n))
    a = data.draw(arrays(np.float64, m, elements=floats))
    x = data.draw(arrays(np.float64, n, elements=floats))
    np.testing.assert_array_equal(cross_correlate(a, x, pad=m - 1), linear_convolve_full(a[::-1], x))
