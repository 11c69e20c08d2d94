"""Image operators: discrete gradient with Neumann boundaries, circular
Gaussian blur with an exact adjoint, test images, and the ISNR metric."""

import math

import numpy as np
from scipy import ndimage

from .errors import MetricUndefinedError, ParameterError

ISNR_CAP_DB = 300.0


def make_test_image(name, size):
    """Procedural grayscale test images in [0, 1].

    name is one of "checkerboard", "disk", "ramp".
    """
    if size < 4:
        raise ParameterError("size must be >= 4")
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    if name == "checkerboard":
        tile = max(size // 8, 1)
        img = ((ii // tile + jj // tile) % 2).astype(float)
    elif name == "disk":
        c = (size - 1) / 2.0
        img = ((ii - c) ** 2 + (jj - c) ** 2 <= (0.35 * size) ** 2).astype(float)
    elif name == "ramp":
        img = (ii + jj) / float(2 * (size - 1))
    else:
        raise ParameterError(f"unknown test image '{name}'")
    return img


def discrete_gradient(theta, adjoint=False):
    """Forward differences with Neumann boundaries, or the exact adjoint.

    Forward mode maps an (M, N) image to the pair (row differences, column
    differences), zero on the last row/column. Adjoint mode maps such a pair
    back so that <L theta, (u, v)> == <theta, L*(u, v)> exactly.
    """
    if not adjoint:
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 2:
            raise ParameterError("image must be 2-D")
        u = np.zeros_like(theta)
        v = np.zeros_like(theta)
        u[:-1, :] = theta[1:, :] - theta[:-1, :]
        v[:, :-1] = theta[:, 1:] - theta[:, :-1]
        return u, v
    u, v = theta
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 2:
        raise ParameterError("adjoint input must be a pair of equal 2-D fields")
    # the last row of u (column of v) is outside the range of the forward map
    out_u = np.zeros_like(u)
    out_u[1:, :] = u[:-1, :]
    out_u -= u
    out_u[-1, :] = u[-2, :] if u.shape[0] > 1 else 0.0
    out_v = np.zeros_like(v)
    out_v[:, 1:] = v[:, :-1]
    out_v -= v
    out_v[:, -1] = v[:, -2] if v.shape[1] > 1 else 0.0
    return out_u + out_v


def gradient_norm_estimate(size, iters=200, seed=0):
    """Power-iteration estimate of ||L||^2 on a size x size grid."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((size, size))
    x /= np.linalg.norm(x)
    val = 0.0
    for _ in range(iters):
        u, v = discrete_gradient(x)
        y = discrete_gradient((u, v), adjoint=True)
        val = float(np.vdot(x, y))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
    return val


def gaussian_kernel(size, sigma):
    """Normalized truncated Gaussian weights on a size x size stencil."""
    if size < 1 or size % 2 == 0:
        raise ParameterError("kernel size must be odd (center required)")
    if sigma <= 0 and size > 1:
        raise ParameterError("sigma must be positive")
    half = size // 2
    idx = np.arange(-half, half + 1, dtype=float)
    if size == 1:
        return np.ones((1, 1))
    g = np.exp(-(idx ** 2) / (2.0 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


_factor_cache = {}


def _separable_factor(kernel):
    key = (kernel.shape, kernel.tobytes())
    if key in _factor_cache:
        return _factor_cache[key]
    u, s, vt = np.linalg.svd(kernel)
    if s.size > 1 and s[1] > 1e-13 * s[0]:
        fac = None
    else:
        col = u[:, 0] * math.sqrt(s[0])
        row = vt[0, :] * math.sqrt(s[0])
        if col.sum() < 0:
            col, row = -col, -row
        fac = (col, row)
    if len(_factor_cache) > 64:
        _factor_cache.clear()
    _factor_cache[key] = fac
    return fac


def _circulant(weights, n):
    """Circular-correlation matrix: row i carries the taps at (i + a) mod n."""
    half = weights.size // 2
    mat = np.zeros((n, n))
    for a in range(-half, half + 1):
        w = weights[a + half]
        for i in range(n):
            mat[i, (i + a) % n] += w
    return mat


_circulant_cache = {}


def _circulant_pair(col, row, shape):
    key = (col.tobytes(), row.tobytes(), shape)
    if key not in _circulant_cache:
        if len(_circulant_cache) > 64:
            _circulant_cache.clear()
        _circulant_cache[key] = (_circulant(col, shape[0]),
                                 _circulant(row, shape[1]))
    return _circulant_cache[key]


def gaussian_blur(img, kernel, adjoint=False):
    """Circular (periodic) correlation with the kernel, or its exact adjoint.

    The adjoint correlates with the point-reflected kernel, which makes
    <K x, y> == <x, K* y> hold to rounding. Separable kernels take the
    two-pass fast path; the result is identical either way.
    """
    img = np.asarray(img, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ParameterError("kernel must be square")
    if kernel.shape[0] % 2 == 0:
        raise ParameterError("kernel size must be odd (center required)")
    if kernel.shape == (1, 1):
        return img * kernel[0, 0]
    fac = _separable_factor(kernel)
    if fac is not None:
        # circular correlation as two circulant matmuls; the adjoint is the
        # transposed pair, so <Kx, y> == <x, K*y> holds exactly
        a, b = _circulant_pair(fac[0], fac[1], img.shape)
        if adjoint:
            return a.T @ img @ b
        return a @ img @ b.T
    k = kernel[::-1, ::-1] if adjoint else kernel
    return ndimage.correlate(img, k, mode="wrap")


def isnr(original, degraded, restored):
    """Improvement in signal-to-noise ratio, in decibels (capped at +300).

    10 * log10(||original - degraded||^2 / ||original - restored||^2).
    """
    x = np.asarray(original, dtype=float)
    y = np.asarray(degraded, dtype=float)
    xh = np.asarray(restored, dtype=float)
    if x.shape != y.shape or x.shape != xh.shape:
        raise ParameterError("images must share a shape")
    num = float(np.sum((x - y) ** 2))
    den = float(np.sum((x - xh) ** 2))
    if num == 0.0:
        raise MetricUndefinedError("degraded equals original; ISNR undefined")
    if den == 0.0:
        return ISNR_CAP_DB
    return min(10.0 * math.log10(num / den), ISNR_CAP_DB)
