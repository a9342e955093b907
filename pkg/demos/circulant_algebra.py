"""
Circulant matrices and the DFT
==============================

A circular convolution is a circulant matrix, and every circulant matrix is
diagonalized by the discrete Fourier transform. This script checks both
facts numerically on small signals.
"""

import numpy as np

from convnorm import build_circulant, circular_convolve, cross_correlate, linear_convolve_full
from convnorm.circulant import dft_matrix

rng = np.random.default_rng(0)
a = rng.normal(size=3)
x = rng.normal(size=8)

# column k of C_a is the zero-padded kernel shifted by k
C = build_circulant(a, 8)
print("C_a x == a (*) x:", np.allclose(C @ x, circular_convolve(a, x)))

# C_a = F^-1 diag(F a) F
F = dft_matrix(8)
a_hat = np.fft.fft(np.pad(a, (0, 5)))
print("F C F^-1 is diagonal:", np.allclose(F @ C @ np.linalg.inv(F), np.diag(a_hat)))

# the eigenvalues of C_a are the DFT of a, so its singular values are |a_hat|
print("singular values:", np.round(np.sort(np.linalg.svd(C, compute_uv=False)), 4))
print("|a_hat| sorted: ", np.round(np.sort(np.abs(a_hat)), 4))

# zero padding turns circular convolution into linear convolution
L = 8 + 3 - 1
lin = linear_convolve_full(a, x)
circ = circular_convolve(np.pad(a, (0, L - 3)), np.pad(x, (0, L - 8)))
print("linear == padded circular:", np.allclose(lin, circ))

# the sliding-window operator of ConvNets is linear convolution with a flipped kernel
print("cross-correlation == flipped linear:", np.array_equal(cross_correlate(a, x, pad=2), linear_convolve_full(a[::-1], x)))

# 2-D grids work the same way, with a doubly block-circulant matrix
k2 = rng.normal(size=(3, 3))
img = rng.normal(size=(5, 6))
C2 = build_circulant(k2, (5, 6))
print("2-D block circulant:", C2.shape, np.allclose(C2 @ img.ravel(), circular_convolve(k2, img).ravel()))
