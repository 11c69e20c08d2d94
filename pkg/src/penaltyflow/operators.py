"""Monotone operators given through resolvent oracles, plus the projection calculus.

Every operator here is immutable after construction and all operations are
pure functions, so concurrent evaluation is safe.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, ParameterError

_LAM_FLOOR = 1e-300  # below this the resolvent is treated as the identity limit


def as_vector(x, dim=None):
    """Validate and return ``x`` as a finite 1-D float array.

    Raises
    ------
    ParameterError
        If the array is empty, not 1-D after ravel, non-finite, or has the
        wrong length.
    """
    v = np.asarray(x, dtype=float).ravel()
    if v.size < 1:
        raise ParameterError("vector must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ParameterError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise ParameterError(f"vector has dimension {v.size}, expected {dim}")
    return v


def soft_threshold(x, tau):
    """Componentwise shrinkage sign(x) * max(|x| - tau, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def project_box(lo, hi, x):
    """Componentwise clamp of ``x`` onto the box [lo, hi].

    Bounds may be -inf/+inf. Idempotent.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ParameterError("box has lo > hi in some coordinate")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def project_pair_ball(u, v):
    """Scale each pair (u_i, v_i) into the unit disc.

    Returns (u, v) / max(1, sqrt(u^2 + v^2)) componentwise, so every output
    pair has norm at most 1.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ParameterError("pair components must have the same shape")
    scale = np.maximum(1.0, np.sqrt(u * u + v * v))
    return u / scale, v / scale


class MonotoneOperator:
    """Maximally monotone operator represented by its resolvent oracle.

    Parameters
    ----------
    kind : str
        Descriptor tag ("zero", "box", "l1", "scaled", "product", "inverse",
        "affine", "pair-ball", "custom").
    resolvent_fn : callable
        Map (lam, x) -> y with x - y in lam * op(y).
    eval_fn : callable, optional
        Pointwise evaluation when the operator is single-valued.
    dim : int, optional
        Ambient dimension when the descriptor fixes one.
    params : dict, optional
        Descriptor data (box bounds, matrices, ...) kept for introspection.
    """

    __slots__ = ("kind", "_resolvent_fn", "eval", "dim", "params")

    def __init__(self, kind, resolvent_fn, eval_fn=None, dim=None, params=None):
        self.kind = kind
        self._resolvent_fn = resolvent_fn
        self.eval = eval_fn
        self.dim = dim
        self.params = dict(params or {})

    def resolvent(self, lam, x):
        """Evaluate (Id + lam*op)^{-1} at x.

        lam = 0 returns x (identity limit); negative lam is an error.
        """
        if lam < 0:
            raise ParameterError("resolvent parameter must be nonnegative")
        x = np.asarray(x, dtype=float)
        if lam < _LAM_FLOOR:
            return x.copy()
        y = self._resolvent_fn(float(lam), x)
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            finite = y[np.isfinite(y)]
            worst = float(np.max(np.abs(finite))) if finite.size else math.inf
            raise ConvergenceFailure(
                f"resolvent oracle for '{self.kind}' produced non-finite output",
                residual=worst)
        return y

    def __repr__(self):
        return f"MonotoneOperator(kind={self.kind!r}, dim={self.dim})"


def resolvent_eval(op, lam, x):
    """Resolvent of ``op`` with parameter ``lam`` at ``x`` (validated entry point)."""
    x = as_vector(x, op.dim)
    return op.resolvent(lam, x)


def yosida_eval(op, lam, x):
    """Yosida regularization (x - resolvent(lam, x)) / lam."""
    if lam <= 0:
        raise ParameterError("Yosida parameter must be positive")
    x = as_vector(x, op.dim)
    return (x - op.resolvent(lam, x)) / lam


def zero_op(dim=None):
    """The zero operator; its resolvent is the identity."""
    return MonotoneOperator("zero", lambda lam, x: x.copy(),
                            eval_fn=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                            dim=dim, params={})


def box_normal_cone(lo, hi, dim=None):
    """Normal cone of the box [lo, hi]; resolvent is the clamp, for any lam."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ParameterError("box has lo > hi in some coordinate")
    if dim is None and lo.ndim > 0:
        dim = lo.size if lo.size > 1 else None
    return MonotoneOperator("box", lambda lam, x: np.clip(x, lo, hi),
                            dim=dim, params={"lo": lo, "hi": hi})


def l1_subgradient(weight=1.0, dim=None):
    """Subdifferential of weight * ||.||_1; resolvent is soft thresholding."""
    if weight < 0:
        raise ParameterError("l1 weight must be nonnegative")
    w = float(weight)
    return MonotoneOperator("l1", lambda lam, x: soft_threshold(x, lam * w),
                            dim=dim, params={"weight": w})


def scaled_op(inner, alpha):
    """The operator alpha * inner for alpha > 0."""
    if alpha <= 0:
        raise ParameterError("scaling factor must be positive")
    a = float(alpha)
    ev = None if inner.eval is None else (lambda x: a * inner.eval(x))
    return MonotoneOperator("scaled", lambda lam, x: inner.resolvent(lam * a, x),
                            eval_fn=ev, dim=inner.dim,
                            params={"alpha": a, "inner": inner})


def inverse_op(inner):
    """The inverse operator, via the Moreau identity.

    resolvent(lam, x) = x - lam * inner.resolvent(1/lam, x/lam).
    """
    def _res(lam, x):
        return x - lam * inner.resolvent(1.0 / lam, x / lam)

    return MonotoneOperator("inverse", _res, dim=inner.dim, params={"inner": inner})


def affine_op(M, q=None):
    """The affine operator x -> M x + q with M + M^T positive semidefinite.

    The resolvent solves (I + lam*M) y = x - lam*q directly.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise ParameterError("affine operator needs a square matrix")
    q = np.zeros(n) if q is None else as_vector(q, n)
    sym_eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    if sym_eigs.min() < -1e-10 * max(1.0, abs(sym_eigs).max()):
        raise ParameterError("affine operator is not monotone (M + M^T has negative eigenvalue)")
    eye = np.eye(n)

    def _res(lam, x):
        return np.linalg.solve(eye + lam * M, x - lam * q)

    return MonotoneOperator("affine", _res, eval_fn=lambda x: M @ x + q,
                            dim=n, params={"M": M, "q": q})


def product_op(blocks):
    """Block product of operators acting on contiguous slices.

    Parameters
    ----------
    blocks : list of (MonotoneOperator, int)
        Operators and the lengths of the slices they act on.
    """
    sizes = [int(n) for _, n in blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    dim = int(offsets[-1])
    ops = [op for op, _ in blocks]

    def _res(lam, x):
        out = np.empty_like(x)
        for op, a, b in zip(ops, offsets[:-1], offsets[1:]):
            out[a:b] = op.resolvent(lam, x[a:b])
        return out

    return MonotoneOperator("product", _res, dim=dim,
                            params={"blocks": list(zip(ops, sizes))})


def pair_ball_cone(n_pairs):
    """Normal cone of the set of (u, v) fields with pairwise norms <= 1.

    Acts on a flattened state [u; v] of length 2 * n_pairs; the resolvent is
    the pairwise disc projection, for any lam.
    """
    n = int(n_pairs)

    def _res(lam, x):
        u, v = project_pair_ball(x[:n], x[n:])
        return np.concatenate([u, v])

    return MonotoneOperator("pair-ball", _res, dim=2 * n, params={"n_pairs": n})


def custom_op(resolvent_fn, dim=None, eval_fn=None):
    """Wrap a user-supplied resolvent oracle."""
    return MonotoneOperator("custom", resolvent_fn, eval_fn=eval_fn, dim=dim, params={})


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of sampling one of the defining operator inequalities."""

    kind: str
    modulus: float | None
    samples: int
    seed: int
    worst_violation: float
    passed: bool
    threshold: float

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"certificate[{self.kind}] {status}: worst normalized violation "
                f"{self.worst_violation:.3e} over {self.samples} pairs (seed {self.seed})")


def _sample_pairs(rng, dim, samples):
    # Gaussian pairs rescaled to radii {0.1, 1, 10}; deterministic given the seed.
    radii = np.array([0.1, 1.0, 10.0])
    for k in range(samples):
        x = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        r = radii[k % 3]
        nx = np.linalg.norm(x)
        ny = np.linalg.norm(y)
        if nx > 0:
            x *= r / nx
        if ny > 0:
            y *= r / ny
        yield x, y


def verify_certificate(op, kind, modulus=None, samples=1000, seed=0, dim=None):
    """Sample a defining inequality of an operator class and report the worst violation.

    Parameters
    ----------
    op : MonotoneOperator or object with .eval or plain callable
        For kind "firmly-nonexpansive-resolvent" a MonotoneOperator is required;
        the other kinds sample a single-valued map.
    kind : {"monotone", "lipschitz", "cocoercive", "firmly-nonexpansive-resolvent"}
    modulus : float, optional
        Lipschitz constant for "lipschitz", cocoercivity modulus for "cocoercive".
    samples : int
        Number of sampled pairs (>= 1).
    seed : int
        Seed of the sampling distribution, recorded in the report.
    dim : int, optional
        Ambient dimension; defaults to op.dim.

    Violations are normalized by 1 + ||x|| + ||y||; the report passes iff the
    worst normalized violation is at most 1e-9 (1e-10 for the resolvent check).
    """
    if samples < 1:
        raise ParameterError("samples must be >= 1")
    d = dim if dim is not None else getattr(op, "dim", None)
    if d is None:
        raise ParameterError("dimension required (operator does not fix one)")
    rng = np.random.default_rng(seed)
    threshold = 1e-10 if kind == "firmly-nonexpansive-resolvent" else 1e-9

    if kind == "firmly-nonexpansive-resolvent":
        if not isinstance(op, MonotoneOperator):
            raise ParameterError("resolvent certificate needs a MonotoneOperator")
        lams = (0.1, 1.0, 10.0)
        worst = 0.0
        for k, (x, y) in enumerate(_sample_pairs(rng, d, samples)):
            lam = lams[(k // 3) % 3]
            jx = op.resolvent(lam, x)
            jy = op.resolvent(lam, y)
            dj = jx - jy
            gap = float(dj @ dj - dj @ (x - y))
            scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(y)
            worst = max(worst, gap / scale)
        return CertificateReport(kind, None, samples, seed, float(worst),
                                 bool(worst <= threshold), threshold)

    fn = op.eval if hasattr(op, "eval") and op.eval is not None else op
    if not callable(fn):
        raise ParameterError("operator has no pointwise evaluation")
    worst = 0.0
    for x, y in _sample_pairs(rng, d, samples):
        fx = fn(x)
        fy = fn(y)
        df = fx - fy
        dx = x - y
        scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(y)
        if kind == "monotone":
            gap = -float(df @ dx)
        elif kind == "lipschitz":
            if modulus is None:
                raise ParameterError("lipschitz certificate needs a modulus")
            gap = float(np.linalg.norm(df) - modulus * np.linalg.norm(dx))
        elif kind == "cocoercive":
            if modulus is None:
                raise ParameterError("cocoercive certificate needs a modulus")
            gap = float(modulus * (df @ df) - df @ dx)
        else:
            raise ParameterError(f"unknown certificate kind '{kind}'")
        worst = max(worst, gap / scale)
    return CertificateReport(kind, modulus, samples, seed, float(worst),
                             bool(worst <= threshold), threshold)


def operator_from_dict(spec):
    """Build a MonotoneOperator from its JSON-friendly descriptor."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError("operator descriptor must be a dict with a 'kind'")
    kind = spec["kind"]
    if kind == "zero":
        return zero_op(spec.get("dim"))
    if kind == "box":
        return box_normal_cone(spec["lo"], spec["hi"], spec.get("dim"))
    if kind == "l1":
        return l1_subgradient(spec.get("weight", 1.0), spec.get("dim"))
    if kind == "affine":
        return affine_op(spec["M"], spec.get("q"))
    raise ParameterError(f"unknown operator kind '{kind}'")
