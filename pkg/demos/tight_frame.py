"""
ConvNorm turns each channel into a tight frame
==============================================

For output channel k the layer acts as A_k = [C_a_k1 ... C_a_kC]. Multiplying
by P_k = (A_k A_k^T)^{-1/2} gives Q_k = P_k A_k with orthonormal rows. Since
every block is circulant, P_k is a circulant too, with spectrum
v_hat_k = (sum_j |a_hat_kj|^2)^{-1/2}.
"""

import numpy as np

from convnorm import circular_conv_layer, normalize_activations, precond_spectra, reparam_kernels
from convnorm.dense import channel_operator, dense_normalized_output

rng = np.random.default_rng(1)
shape = (8, 8)
a = rng.normal(size=(3, 2, 3, 3))  # C_O=3, C_I=2, 3x3 kernels

# one FFT-domain multiply per channel
z = rng.normal(size=(4, 2, *shape))
fast = normalize_activations(circular_conv_layer(z, a), a, epsilon=0)

# the same map, built as explicit 64 x 128 matrices and an eigendecomposition
slow = dense_normalized_output(z, a)
print("FFT vs dense max difference:", np.abs(fast - slow).max())

# the spectrum of the preconditioner, channel 0
v_hat = precond_spectra(a, shape, epsilon=0)
print("v_hat range for channel 0: [%.3f, %.3f]" % (v_hat[0].min(), v_hat[0].max()))

# the reparametrized kernels g_kj = v_k * a_kj form a tight frame
g = reparam_kernels(a, shape, epsilon=0)
for k in range(3):
    Q = channel_operator(g, k, shape)
    print(f"channel {k}: max |Q Q^T - I| = {np.abs(Q @ Q.T - np.eye(64)).max():.2e}")

# normalizing is scale-free and idempotent
print("scale invariant:", np.allclose(reparam_kernels(5.0 * a, shape, epsilon=0), g))
print("idempotent:     ", np.allclose(reparam_kernels(g, shape, epsilon=0), g))

# with a spectral zero the preconditioner does not exist; epsilon regularizes it
try:
    precond_spectra(np.array([1.0, 1.0]).reshape(1, 1, 2, 1), (4, 1), epsilon=0)
except ValueError as e:
    print("eps = 0:", e)
print("eps = 1e-6 spectrum:", precond_spectra(np.array([1.0, 1.0]).reshape(1, 1, 2, 1), (4, 1), 1e-6).ravel())
