import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays, array_shapes

from convnorm.tensor import (
    FormatError,
    as_kernels,
    downsample,
    flip_kernel,
    read_tensor,
    read_freq_grid,
    tensor_io,
    write_freq_grid,
    write_tensor,
    zero_pad,
)


def test_round_trip_2x2(tmp_path):
    t = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = tmp_path / "t.cnt1"
    tensor_io(p, "write", t)
    back = tensor_io(p, "read")
    assert back.shape == (2, 2)
    assert back.tobytes() == t.tobytes()


def test_round_trip_degenerate_rank1(tmp_path):
    p = tmp_path / "z.cnt1"
    write_tensor(p, np.array([0.0]))
    back = read_tensor(p)
    assert back.shape == (1,) and back[0] == 0.0


def test_file_layout(tmp_path):
    p = tmp_path / "t.cnt1"
    write_tensor(p, np.array([1.5, -2.0, 3.25]))
    raw = p.read_bytes()
    assert raw[:4] == b"CNT1"
    assert struct.unpack("<I", raw[4:8]) == (1,)
    assert struct.unpack("<Q", raw[8:16]) == (3,)
    assert struct.unpack("<3d", raw[16:]) == (1.5, -2.0, 3.25)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.cnt1"
    write_tensor(p, np.ones(3))
    p.write_bytes(b"XXXX" + p.read_bytes()[4:])
    with pytest.raises(FormatError, match="magic"):
        read_tensor(p)


def test_rank_too_large(tmp_path):
    p = tmp_path / "r5.cnt1"
    p.write_bytes(b"CNT1" + struct.pack("<I", 5) + struct.pack("<5Q", 1, 1, 1, 1, 1) + struct.pack("<d", 1.0))
    with pytest.raises(FormatError, match="rank"):
        read_tensor(p)
    with pytest.raises(FormatError):
        write_tensor(tmp_path / "x", np.ones((1, 1, 1, 1, 1)))


def test_length_mismatch(tmp_path):
    p = tmp_path / "short.cnt1"
    write_tensor(p, np.ones(4))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(FormatError, match="payload"):
        read_tensor(p)


def test_non_finite_rejected(tmp_path):
    with pytest.raises(FormatError):
        write_tensor(tmp_path / "nan.cnt1", np.array([1.0, np.nan]))
    p = tmp_path / "inf.cnt1"
    p.write_bytes(b"CNT1" + struct.pack("<I", 1) + struct.pack("<Q", 1) + struct.pack("<d", np.inf))
    with pytest.raises(FormatError, match="non-finite"):
        read_tensor(p)


def test_freq_grid_pair(tmp_path):
    g = np.array([[1 + 2j, 3 - 1j]])
    write_freq_grid(tmp_path / "re", tmp_path / "im", g)
    np.testing.assert_array_equal(read_freq_grid(tmp_path / "re", tmp_path / "im"), g)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, array_shapes(min_dims=1, max_dims=4, max_side=5), elements=finite))
def test_round_trip_bit_exact(tmp_path_factory, t):
    p = tmp_path_factory.mktemp("rt") / "t.cnt1"
    write_tensor(p, t)
    back = read_tensor(p)
    assert back.shape == t.shape
    assert back.tobytes() == t.tobytes()


def test_as_kernels_promotes_1d():
    assert as_kernels(np.ones((2, 3, 5))).shape == (2, 3, 5, 1)


@pytest.mark.parametrize(
    "x, pads, expected",
    [
        ([1, 2], (0, 1), [1, 2, 0]),
        ([3, 4, 5], (2, 2), [0, 0, 3, 4, 5, 0, 0]),
        ([3, 4, 5], (0, 0), [3, 4, 5]),
    ],
)
def test_zero_pad(x, pads, expected):
    np.testing.assert_array_equal(zero_pad(x, pads), expected)


def test_zero_pad_2d():
    out = zero_pad(np.ones((2, 2)), [(1, 0), (0, 2)])
    assert out.shape == (3, 4)
    assert out.sum() == 4 and np.all(out[1:, :2] == 1)


@pytest.mark.parametrize(
    "x, s, expected",
    [([10, 20, 30, 40], 2, [10, 30]), ([10, 20, 30, 40], 1, [10, 20, 30, 40]), ([1, 2, 3, 4, 5], 2, [1, 3, 5])],
)
def test_downsample(x, s, expected):
    np.testing.assert_array_equal(downsample(np.array(x, float), s), expected)


def test_downsample_zero_stride():
    with pytest.raises(ValueError):
        downsample(np.ones(4), 0)


def test_downsample_spatial_axes():
    z = np.arange(2 * 3 * 5 * 5, dtype=float).reshape(2, 3, 5, 5)
    out = downsample(z, 2)
    assert out.shape == (2, 3, 3, 3)
    np.testing.assert_array_equal(out, z[:, :, ::2, ::2])


def test_flip_kernel():
    np.testing.assert_array_equal(flip_kernel([1, 2, 3, 4]), [1, 4, 3, 2])
    np.testing.assert_array_equal(flip_kernel([7.0]), [7.0])
    a = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(flip_kernel(a)[0], [0, 3, 2, 1])
    np.testing.assert_array_equal(flip_kernel(a)[:, 0], [0, 8, 4])


vectors = arrays(np.float64, st.integers(1, 16), elements=st.floats(-1e3, 1e3))


@given(vectors, st.integers(0, 4), st.integers(0, 4))
def test_zero_pad_preserves_sum(x, left, right):
    out = zero_pad(x, (left, right))
    assert out.shape == (len(x) + left + right,)
    assert out.sum() == pytest.approx(x.sum(), abs=1e-9)
    np.testing.assert_array_equal(out[left : left + len(x)], x)


@given(vectors, st.integers(0, 4), st.integers(1, 4))
def test_downsample_keeps_order(x, left, s):
    kept = downsample(zero_pad(x, (left, 0)), s)
    idx = np.arange(0, len(x) + left, s) - left
    survivors = x[idx[idx >= 0]]
    np.testing.assert_array_equal(kept[kept.size - survivors.size :], survivors)


@given(arrays(np.float64, array_shapes(min_dims=1, max_dims=2, max_side=9), elements=st.floats(-1e3, 1e3)))
def test_flip_involution_and_magnitude(a):
    np.testing.assert_array_equal(flip_kernel(flip_kernel(a)), a)
    np.testing.assert_allclose(np.abs(np.fft.fftn(flip_kernel(a))), np.abs(np.fft.fftn(a)), atol=1e-8)
