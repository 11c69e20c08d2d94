"""Explicit Euler integrators for the three splitting flows and their diagnostics.

The discrete schemes are

  FB    X+ = (1 - gamma*h) X + gamma*h * J_{lam A}(X - lam V(X))
  FBF   P  = J_{lam A}(X - lam V(X));  X+ = X + h (P - X + lam (V(X) - V(P)))
  SFBP  X+ = (1 - h) X + h * J_{lam (A + beta B2)}(X - lam V(X))

with V(x) = D(x) + eps*x + beta*B1(x) evaluated on the schedule. Step sizes
are capped by the local Lipschitz bound of the vector field unless the caller
disables it (needed when a test pins an exact recursion).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergenceError, ParameterError, PreconditionError
from .operators import as_vector

_BLOWUP = 1e12


@dataclass(frozen=True)
class UniformGrid:
    h: float
    T: float


@dataclass(frozen=True)
class GeometricGrid:
    h0: float
    ratio: float
    T: float


@dataclass(frozen=True)
class IntegratorSpec:
    """How to march: grid request, stability cap, storage thinning.

    safety_factor scales the Lipschitz step cap; cap_steps=False keeps the
    requested steps untouched (relaxation bounds gamma*h <= 1 still apply).
    max_steps, when set, truncates the run after that many steps.
    """

    grid: object
    safety_factor: float = 0.5
    cap_steps: bool = True
    store_every: int = 1
    max_steps: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.safety_factor <= 1.0):
            raise ParameterError("safety_factor must lie in (0, 1]")
        if self.store_every < 1:
            raise ParameterError("store_every must be >= 1")
        g = self.grid
        if isinstance(g, UniformGrid):
            if g.h <= 0 or g.T <= 0:
                raise ParameterError("grid needs h > 0 and T > 0")
        elif isinstance(g, GeometricGrid):
            if g.h0 <= 0 or g.T <= 0 or g.ratio < 1.0:
                raise ParameterError("geometric grid needs h0 > 0, T > 0, ratio >= 1")
        else:
            raise ParameterError("grid must be UniformGrid or GeometricGrid")


@dataclass
class Trajectory:
    """Stored samples of one integration run.

    States are kept every ``store_every`` steps plus the final one; parallel
    arrays hold schedule values, the step vector field (xdots) and per-step
    diagnostics at those samples.
    """

    mode: str
    times: np.ndarray
    states: np.ndarray
    step_sizes: np.ndarray
    xdots: np.ndarray
    b1_norms: np.ndarray
    psi_sums: Optional[np.ndarray]
    aux_points: Optional[np.ndarray]
    lam: np.ndarray
    eps: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    lips: np.ndarray
    n_steps_total: int
    store_every: int

    @property
    def xdot_norms(self):
        return np.linalg.norm(self.xdots, axis=1)

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return float(self.times[-1])


def _build_grid(spec, cap_fn):
    """Times and steps honoring the requested grid, the cap and max_steps."""
    g = spec.grid
    if isinstance(g, UniformGrid):
        h_req = lambda t, h=g.h: h
    else:
        state = {"h": g.h0}

        def h_req(t, state=state, ratio=g.ratio):
            h = state["h"]
            state["h"] = h * ratio
            return h

    T = g.T
    max_steps = spec.max_steps if spec.max_steps is not None else 50_000_000
    ts = [0.0]
    hs = []
    t = 0.0
    while t < T - 1e-12 and len(hs) < max_steps:
        h = h_req(t)
        cap = cap_fn(t)
        if cap is not None:
            h = min(h, cap)
        h = min(h, T - t)
        if h <= 0:
            raise ParameterError("step size collapsed to zero")
        hs.append(h)
        t += h
        ts.append(t)
    if not hs:
        raise ParameterError("empty time grid")
    return np.asarray(ts), np.asarray(hs)


def _schedule_arrays(sch, times):
    t = times
    try:
        eps = np.asarray(sch.eps(t), dtype=float)
        beta = np.asarray(sch.beta(t), dtype=float)
        lam = np.asarray(sch.lam(t), dtype=float)
        gam = np.asarray(sch.gamma(t), dtype=float)
        if eps.shape != t.shape or gam.shape != t.shape:
            raise ValueError
    except Exception:
        eps = np.array([float(sch.eps(x)) for x in t])
        beta = np.array([float(sch.beta(x)) for x in t])
        lam = np.array([float(sch.lam(x)) for x in t])
        gam = np.array([float(sch.gamma(x)) for x in t])
    return eps, beta, lam, gam


class _Recorder:
    def __init__(self, n_steps, dim, store_every, with_aux, with_psi):
        n_slots = (n_steps + store_every - 1) // store_every + 2
        self.every = store_every
        self.times = np.empty(n_slots)
        self.states = np.empty((n_slots, dim))
        self.hs = np.empty(n_slots)
        self.xdots = np.empty((n_slots, dim))
        self.b1n = np.empty(n_slots)
        self.psi = np.empty(n_slots) if with_psi else None
        self.aux = np.empty((n_slots, dim)) if with_aux else None
        self.lam = np.empty(n_slots)
        self.eps = np.empty(n_slots)
        self.beta = np.empty(n_slots)
        self.gam = np.empty(n_slots)
        self.lips = np.empty(n_slots)
        self.n = 0

    def want(self, k, last):
        return k % self.every == 0 or k == last

    def push(self, t, x, h, xdot, b1_norm, psi, p, lam, eps, beta, gam, lips):
        i = self.n
        self.times[i] = t
        self.states[i] = x
        self.hs[i] = h
        self.xdots[i] = xdot
        self.b1n[i] = b1_norm
        if self.psi is not None:
            self.psi[i] = psi
        if self.aux is not None:
            self.aux[i] = p
        self.lam[i] = lam
        self.eps[i] = eps
        self.beta[i] = beta
        self.gam[i] = gam
        self.lips[i] = lips
        self.n += 1

    def build(self, mode, n_total, store_every):
        n = self.n
        return Trajectory(
            mode=mode, times=self.times[:n].copy(), states=self.states[:n].copy(),
            step_sizes=self.hs[:n].copy(), xdots=self.xdots[:n].copy(),
            b1_norms=self.b1n[:n].copy(),
            psi_sums=None if self.psi is None else self.psi[:n].copy(),
            aux_points=None if self.aux is None else self.aux[:n].copy(),
            lam=self.lam[:n].copy(), eps=self.eps[:n].copy(),
            beta=self.beta[:n].copy(), gamma=self.gam[:n].copy(),
            lips=self.lips[:n].copy(), n_steps_total=n_total,
            store_every=store_every)


def _check_state(x, k):
    nx = float(np.linalg.norm(x))
    if not math.isfinite(nx) or nx > _BLOWUP:
        raise DivergenceError(f"state norm {nx:.3e} exceeded {_BLOWUP:g} at step {k}",
                              step_index=k, norm=nx)


def _psi_at(prob, point):
    if prob.psi1 is None or prob.psi2 is None:
        return math.nan
    return prob.psi1(point) + prob.psi2(point)


def integrate_fb(prob, sch, x0, spec):
    """Relaxed forward-backward marching; requires a cocoercive smooth part."""
    if not prob.d.cocoercive:
        raise PreconditionError("forward-backward flow needs a cocoercive D "
                                "(the 'cocoercive' certificate fails on this instance)")
    if prob.b2 is not None:
        raise PreconditionError("forward-backward flow handles a single penalty; "
                                "use the full-splitting integrator")
    x = as_vector(x0, prob.dim).copy()
    eta, mu = prob.d.eta, prob.b1.mu

    def cap(t):
        gam = float(sch.gamma(t))
        h_relax = 1.0 / gam  # keeps the relaxation a convex combination
        if not spec.cap_steps:
            return h_relax
        lam = float(sch.lam(t))
        lips = 1.0 / eta + float(sch.eps(t)) + float(sch.beta(t)) / mu
        return min(h_relax, spec.safety_factor / (gam * (2.0 + lam * lips)))

    times, hs = _build_grid(spec, cap)
    eps_a, beta_a, lam_a, gam_a = _schedule_arrays(sch, times[:-1])
    n = len(hs)
    rec = _Recorder(n, prob.dim, spec.store_every, with_aux=False,
                    with_psi=prob.psi1 is not None)
    resolvent = prob.a._resolvent_fn
    d_eval, b_eval = prob.d.eval, prob.b1.eval
    inv_eta = 1.0 / eta
    for k in range(n):
        lam = lam_a[k]; eps = eps_a[k]; bet = beta_a[k]; gam = gam_a[k]; h = hs[k]
        bx = b_eval(x)
        v = d_eval(x) + eps * x + bet * bx
        p = resolvent(lam, x - lam * v)
        dx = gam * (p - x)
        if rec.want(k, n - 1):
            rec.push(times[k], x, h, dx, float(np.linalg.norm(bx)),
                     _psi_at(prob, x + dx), None, lam, eps, bet, gam,
                     inv_eta + eps + bet / mu)
        x = x + h * dx
        if k % 64 == 0 or k == n - 1:
            _check_state(x, k)
    _push_final(rec, prob, sch, times[-1], x, hs[-1], mode="FB")
    return rec.build("FB", n, spec.store_every)


def integrate_fbf(prob, sch, x0, spec):
    """Forward-backward-forward marching; no cocoercivity needed for D."""
    if prob.b2 is not None:
        raise PreconditionError("forward-backward-forward flow handles a single penalty")
    x = as_vector(x0, prob.dim).copy()
    eta, mu = prob.d.eta, prob.b1.mu

    def cap(t):
        if not spec.cap_steps:
            return None
        lam = float(sch.lam(t))
        lips = 1.0 / eta + float(sch.eps(t)) + float(sch.beta(t)) / mu
        return spec.safety_factor / (2.0 + 2.0 * lam * lips)

    times, hs = _build_grid(spec, cap)
    eps_a, beta_a, lam_a, gam_a = _schedule_arrays(sch, times[:-1])
    n = len(hs)
    rec = _Recorder(n, prob.dim, spec.store_every, with_aux=True,
                    with_psi=prob.psi1 is not None)
    resolvent = prob.a._resolvent_fn
    d_eval, b_eval = prob.d.eval, prob.b1.eval
    inv_eta = 1.0 / eta
    for k in range(n):
        lam = lam_a[k]; eps = eps_a[k]; bet = beta_a[k]; h = hs[k]
        bx = b_eval(x)
        vx = d_eval(x) + eps * x + bet * bx
        p = resolvent(lam, x - lam * vx)
        vp = d_eval(p) + eps * p + bet * b_eval(p)
        dx = p - x + lam * (vx - vp)
        if rec.want(k, n - 1):
            rec.push(times[k], x, h, dx, float(np.linalg.norm(bx)),
                     _psi_at(prob, x + dx), p, lam, eps, bet, gam_a[k],
                     inv_eta + eps + bet / mu)
        x = x + h * dx
        if k % 64 == 0 or k == n - 1:
            _check_state(x, k)
    _push_final(rec, prob, sch, times[-1], x, hs[-1], mode="FBF")
    return rec.build("FBF", n, spec.store_every)


def integrate_sfbp(prob, sch, x0, spec):
    """Full-splitting marching with the second penalty inside the backward step.

    Records ||B1(x)|| and the penalty sum (psi1+psi2)(x + xdot) per stored
    step; x + xdot is exactly the resolvent output of the discrete scheme.
    """
    if prob.b2 is None:
        raise PreconditionError("full-splitting flow needs a second penalty operator")
    x = as_vector(x0, prob.dim).copy()
    eta, mu = prob.d.eta, prob.b1.mu

    def cap(t):
        # x+ stays a convex combination of x and the resolvent point for h <= 1
        return 1.0

    times, hs = _build_grid(spec, cap)
    eps_a, beta_a, lam_a, gam_a = _schedule_arrays(sch, times[:-1])
    n = len(hs)
    rec = _Recorder(n, prob.dim, spec.store_every, with_aux=False, with_psi=True)
    shifted = prob.shifted_resolvent_fn()
    d_eval, b_eval = prob.d.eval, prob.b1.eval
    inv_eta = 1.0 / eta
    for k in range(n):
        lam = lam_a[k]; eps = eps_a[k]; bet = beta_a[k]; h = hs[k]
        bx = b_eval(x)
        v = d_eval(x) + eps * x + bet * bx
        j = shifted(lam, bet, x - lam * v)
        dx = j - x
        if rec.want(k, n - 1):
            rec.push(times[k], x, h, dx, float(np.linalg.norm(bx)),
                     _psi_at(prob, j), None, lam, eps, bet, gam_a[k],
                     inv_eta + eps + bet / mu)
        x = x + h * dx
        if k % 64 == 0 or k == n - 1:
            _check_state(x, k)
    _push_final(rec, prob, sch, times[-1], x, hs[-1], mode="SFBP")
    return rec.build("SFBP", n, spec.store_every)


def _push_final(rec, prob, sch, t, x, h, mode):
    """Record the final state with a freshly evaluated vector field."""
    lam = float(sch.lam(t)); eps = float(sch.eps(t))
    bet = float(sch.beta(t)); gam = float(sch.gamma(t))
    bx = prob.b1.eval(x)
    v = prob.d.eval(x) + eps * x + bet * bx
    p = None
    if mode == "FB":
        p_res = prob.a.resolvent(lam, x - lam * v)
        dx = gam * (p_res - x)
    elif mode == "FBF":
        p = prob.a.resolvent(lam, x - lam * v)
        vp = prob.d.eval(p) + eps * p + bet * prob.b1.eval(p)
        dx = p - x + lam * (v - vp)
    else:
        j = prob.resolvent_shifted(lam, bet, x - lam * v)
        dx = j - x
    rec.push(t, x, h, dx, float(np.linalg.norm(bx)), _psi_at(prob, x + dx), p,
             lam, eps, bet, gam, prob.lipschitz_bound(eps, bet))


def ergodic_average(traj, sch):
    """lam-weighted time average of the stored trajectory (trapezoid rule)."""
    if traj.times.size == 0:
        raise ParameterError("trajectory is empty")
    if traj.times.size == 1:
        return traj.states[0].copy()
    lam = traj.lam
    t = traj.times
    num = np.trapezoid(lam[:, None] * traj.states, t, axis=0)
    den = float(np.trapezoid(lam, t))
    return num / den


@dataclass
class TrackingReport:
    """Gap-to-path diagnostics on a subgrid of the trajectory."""

    mode: str
    times: np.ndarray
    theta: np.ndarray
    burn_in_index: int
    final_gap: float
    inequality_residuals: np.ndarray
    inequality_nonpositive_fraction: float


def _match_indices(traj_times, path_times):
    idx = np.searchsorted(traj_times, path_times)
    idx = np.clip(idx, 0, traj_times.size - 1)
    out = []
    for i, tp in zip(idx, path_times):
        best = i
        if i > 0 and abs(traj_times[i - 1] - tp) < abs(traj_times[i] - tp):
            best = i - 1
        if abs(traj_times[best] - tp) > 1e-9 * max(1.0, abs(tp)):
            raise ParameterError(f"path time {tp:g} is not on the trajectory grid")
        out.append(best)
    return np.asarray(out, dtype=int)


def tracking_report(traj, path):
    """Compare a trajectory with central-path points sampled on its grid.

    Emits theta(t) = ||x - xbar||^2 / 2, the mode's differential inequality
    residual evaluated with the discrete derivative, the first index after
    which theta is nonincreasing (1e-8 slack), and the final gap.
    """
    if not path:
        raise ParameterError("path is empty")
    if any(p.t is None for p in path):
        raise ParameterError("path points need times attached")
    p_times = np.array([p.t for p in path], dtype=float)
    idx = _match_indices(traj.times, p_times)
    theta = np.empty(len(path))
    residuals = np.empty(len(path))
    for j, (i, pt) in enumerate(zip(idx, path)):
        x = traj.states[i]
        diff = x - pt.xbar
        theta[j] = 0.5 * float(diff @ diff)
        lam, eps, gam, lips = traj.lam[i], traj.eps[i], traj.gamma[i], traj.lips[i]
        xdot = traj.xdots[i]
        if traj.mode == "FBF" and traj.aux_points is not None:
            # <x - xbar, xdot> <= (lam L - 1)||x - p||^2 - lam eps ||p - xbar||^2
            p = traj.aux_points[i]
            lhs = float(diff @ xdot)
            rhs = ((lam * lips - 1.0) * float(np.sum((x - p) ** 2))
                   - lam * eps * float(np.sum((p - pt.xbar) ** 2)))
            residuals[j] = lhs - rhs
        else:
            # 2<xdot, x - xbar> <= gam lam eps (lam eps - 2) ||x - xbar||^2
            lhs = 2.0 * float(xdot @ diff)
            rhs = gam * lam * eps * (lam * eps - 2.0) * float(diff @ diff)
            residuals[j] = lhs - rhs
    burn_in = 0
    for j in range(len(theta) - 1):
        if theta[j + 1] > theta[j] + 1e-8 * max(1.0, theta[j]):
            burn_in = j + 1
    scale = 1.0 + theta
    frac = float(np.mean(residuals <= 1e-6 * scale))
    return TrackingReport(traj.mode, p_times, theta, burn_in,
                          math.sqrt(2.0 * theta[-1]), residuals, frac)
