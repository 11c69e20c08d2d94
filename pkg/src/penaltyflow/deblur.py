"""Total-variation deblurring as a product-space inclusion.

The state is (theta, u, v) of length 3*M*N: the image block carries the box
constraint, the dual pair (u, v) carries the unit-disc constraint of the
total-variation dual, the skew coupling moves gradients between them, and the
penalty block drives theta into the data-fit solution set of the blur system.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .imaging import discrete_gradient, gaussian_blur, gaussian_kernel, isnr
from .operators import box_normal_cone, pair_ball_cone, product_op
from .problem import LipschitzOperator, PenaltyOperator, ProblemInstance

_GRAD_NORM_SQ = 8.0  # the forward-difference stencil satisfies ||L||^2 <= 8


@dataclass(frozen=True)
class DeblurInstance:
    """Assembled deblurring problem plus the data that produced it."""

    problem: ProblemInstance
    shape: tuple
    kernel: np.ndarray
    sigma: float
    original: Optional[np.ndarray]
    observed: np.ndarray
    noise_std: float
    seed: int
    clipped_count: int

    @property
    def x0(self):
        z = np.zeros(2 * self.observed.size)
        return np.concatenate([self.observed.ravel(), z])

    def theta_of(self, state):
        n = self.observed.size
        return np.asarray(state)[:n].reshape(self.shape)

    def metadata(self):
        return {"kernel_size": int(self.kernel.shape[0]), "sigma": self.sigma,
                "noise_std": self.noise_std, "seed": self.seed,
                "clipped_count": self.clipped_count,
                "shape": [int(s) for s in self.shape]}


def box_muller_noise(shape, std, seed):
    """Seeded Gaussian field via the Box-Muller transform."""
    n = int(np.prod(shape))
    rng = np.random.default_rng(seed)
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2),
                        r * np.sin(2.0 * np.pi * u2)])[:n]
    return std * z.reshape(shape)


def degrade_image(original, kernel, noise_std, seed):
    """Blur, add seeded noise, clip to [0, 1]; returns (image, clipped_count)."""
    blurred = gaussian_blur(original, kernel)
    noisy = blurred + box_muller_noise(original.shape, noise_std, seed) \
        if noise_std > 0 else blurred
    clipped = int(np.sum((noisy < 0.0) | (noisy > 1.0)))
    return np.clip(noisy, 0.0, 1.0), clipped


def build_tv_deblur(original, kernel_size=9, sigma=4.0, noise_std=1e-3, seed=0):
    """Degrade ``original`` and assemble the product-space instance.

    The smooth coupling (theta, u, v) -> (L*(u, v), -L theta) is monotone and
    sqrt(8)-Lipschitz but not cocoercive, so this instance is for the
    forward-backward-forward integrator. The penalty block K*(K theta - b) is
    1-cocoercive for a normalized circular kernel.
    """
    original = np.asarray(original, dtype=float)
    if original.ndim != 2:
        raise ParameterError("original must be a 2-D image")
    if original.min() < 0.0 or original.max() > 1.0:
        raise ParameterError("original pixels must lie in [0, 1]")
    m, n = original.shape
    npx = m * n
    kernel = gaussian_kernel(kernel_size, sigma)
    observed, clipped = degrade_image(original, kernel, noise_std, seed)
    b_img = observed

    def d_eval(x):
        theta = x[:npx].reshape(m, n)
        u = x[npx:2 * npx].reshape(m, n)
        v = x[2 * npx:].reshape(m, n)
        lt_u, lt_v = discrete_gradient(theta)
        adj = discrete_gradient((u, v), adjoint=True)
        return np.concatenate([adj.ravel(), -lt_u.ravel(), -lt_v.ravel()])

    def b_eval(x):
        theta = x[:npx].reshape(m, n)
        resid = gaussian_blur(theta, kernel) - b_img
        out = np.zeros_like(x)
        out[:npx] = gaussian_blur(resid, kernel, adjoint=True).ravel()
        return out

    a_op = product_op([(box_normal_cone(0.0, 1.0), npx),
                       (pair_ball_cone(npx), 2 * npx)])
    d_op = LipschitzOperator(eval=d_eval, eta=1.0 / math.sqrt(_GRAD_NORM_SQ),
                             cocoercive=False)
    b_op = PenaltyOperator(eval=b_eval, mu=1.0)
    problem = ProblemInstance(a=a_op, d=d_op, b1=b_op, dim=3 * npx,
                              name="tv-deblur")
    return DeblurInstance(problem=problem, shape=(m, n), kernel=kernel,
                          sigma=float(sigma), original=original,
                          observed=observed, noise_std=noise_std, seed=seed,
                          clipped_count=clipped)


def isnr_series(instance, traj):
    """ISNR of the stored theta samples against the original/observed pair."""
    if instance.original is None:
        raise ParameterError("instance carries no original image")
    out = np.empty(traj.times.size)
    for i in range(traj.times.size):
        theta = instance.theta_of(traj.states[i])
        out[i] = isnr(instance.original, instance.observed, theta)
    return out
