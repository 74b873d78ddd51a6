"""Euler-Maruyama simulation of the controlled goodwill SDDE.

The goodwill stock follows

    dy(t) = [a0 y(t) + int a1(xi) y(t+xi) dxi + b0 z(t)
             + int b1(xi) z(t+xi) dxi] dt + sigma dW(t),

with prescribed goodwill and advertising histories on [-r, 0]. The
delay integrals are trapezoid quadratures on the simulation time step,
so every lookback lands on a stored sample. Each path draws its noise
from a Philox stream keyed by (seed, path index), which makes ensembles
reproducible independently of how paths are scheduled.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .hilbert import (
    ConstantKernel,
    ExponentialKernel,
    Kernel,
    SampledKernel,
    SegmentGrid,
    kernel_eval,
    kernel_is_zero,
)

BLOWUP_LIMIT = 1e12


class ConfigurationError(ValueError):
    """Inconsistent simulation configuration (step sizes, bounds, ...)."""


class BlowupError(RuntimeError):
    """A path left the finite range during integration."""


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the goodwill SDDE and the control interval."""

    a0: float
    a1: Kernel
    b0: float
    b1: Kernel
    sigma: float
    r: float
    T: float
    u_min: float = 0.0
    u_max: float = np.inf

    def __post_init__(self):
        if self.a0 > 0:
            raise ValueError(f"a0 must be <= 0, got {self.a0}")
        if self.b0 < 0:
            raise ValueError(f"b0 must be >= 0, got {self.b0}")
        if self.r <= 0 or self.T <= 0:
            raise ValueError("r and T must be positive")
        if not 0 <= self.u_min <= self.u_max:
            raise ValueError(
                f"need 0 <= u_min <= u_max, got [{self.u_min}, {self.u_max}]"
            )
        _check_kernel_nonneg(self.b1, "b1")


def _check_kernel_nonneg(k: Kernel, name: str):
    if isinstance(k, ConstantKernel) and k.c < 0:
        raise ValueError(f"{name} must be non-negative")
    if isinstance(k, ExponentialKernel) and k.amp < 0:
        raise ValueError(f"{name} must be non-negative")
    if isinstance(k, SampledKernel) and np.any(k.values < 0):
        raise ValueError(f"{name} must be non-negative at every node")


@dataclass(frozen=True)
class HistoryPair:
    """Initial goodwill level plus goodwill and advertising histories."""

    grid: SegmentGrid
    x0: float
    x1: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "delta", delta)
        if len(x1) != self.grid.n_nodes or len(delta) != self.grid.n_nodes:
            raise ConfigurationError("history profiles must live on the grid")
        if self.x0 < 0 or np.any(x1 < 0) or np.any(delta < 0):
            raise ValueError("histories must be non-negative")
        if abs(x1[-1] - self.x0) > 1e-9 * (1.0 + abs(self.x0)):
            raise ValueError("x1(0) must equal x0")


# --- policies ---------------------------------------------------------------


@dataclass(frozen=True)
class OpenLoop:
    """Control given as samples z(t_k) on a time grid."""

    t: np.ndarray
    z: np.ndarray

    def sample(self, params: ModelParams, t: np.ndarray) -> np.ndarray:
        return np.interp(t, self.t, self.z)


@dataclass(frozen=True)
class Memoryless:
    """z0(t) = gamma*b0*exp((T-t)*a0)/(2*beta), optimal when a1 = b1 = 0."""

    gamma: float
    beta: float

    def sample(self, params: ModelParams, t: np.ndarray) -> np.ndarray:
        return (
            self.gamma * params.b0 * np.exp((params.T - t) * params.a0)
            / (2.0 * self.beta)
        )


@dataclass(frozen=True)
class LQOptimal:
    """z*(t) = <B, w(t)>^+ / (2*beta), read off a solved costate."""

    costate: "object"  # lq.CostateSolution; kept loose to avoid an import cycle
    beta: float

    def sample(self, params: ModelParams, t: np.ndarray) -> np.ndarray:
        cs = self.costate
        return np.interp(t, cs.t, np.maximum(cs.bw, 0.0) / (2.0 * self.beta))


@dataclass(frozen=True)
class FeedbackPolicy:
    """State feedback z = control_fn(t, y); y is the per-path state array."""

    control_fn: Callable[[float, np.ndarray], np.ndarray]

    def sample(self, params: ModelParams, t: np.ndarray) -> None:
        return None


Policy = OpenLoop | Memoryless | LQOptimal | FeedbackPolicy


# --- ensembles and estimates ------------------------------------------------


@dataclass(frozen=True)
class PathEnsemble:
    t: np.ndarray
    y: np.ndarray  # (n_paths, steps+1)
    z: np.ndarray  # (n_paths, steps+1) or (1, steps+1) when shared
    dt: float
    seed: int
    clip_count: int = 0

    @property
    def n_paths(self) -> int:
        return self.y.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("path_id,t,y,z\n")
        shared = self.z.shape[0] == 1
        for p in range(self.n_paths):
            zrow = self.z[0] if shared else self.z[p]
            for k, tk in enumerate(self.t):
                buf.write(f"{p},{tk:.10g},{self.y[p, k]:.10g},{zrow[k]:.10g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "mean": self.mean,
                "stderr": self.stderr,
                "n_paths": self.n_paths,
                "seed": self.seed,
            }
        )


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    stderr: float


# --- objective specification ------------------------------------------------


@dataclass(frozen=True)
class LinearReward:
    gamma: float

    def __call__(self, x):
        return self.gamma * x


@dataclass(frozen=True)
class PowerReward:
    """Concave power reward coeff * max(x,0)^exponent, 0 < exponent <= 1."""

    coeff: float
    exponent: float

    def __post_init__(self):
        if not 0 < self.exponent <= 1:
            raise ValueError("exponent must lie in (0, 1]")

    def __call__(self, x):
        return self.coeff * np.maximum(x, 0.0) ** self.exponent


@dataclass(frozen=True)
class CustomReward:
    fn: Callable

    def __call__(self, x):
        return self.fn(x)


@dataclass(frozen=True)
class QuadraticCost:
    beta: float

    def __call__(self, z):
        return self.beta * z * z


@dataclass(frozen=True)
class LinearCost:
    beta: float

    def __call__(self, z):
        return self.beta * z


@dataclass(frozen=True)
class CustomCost:
    fn: Callable

    def __call__(self, z):
        return self.fn(z)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Terminal reward phi0 and running advertising cost h0.

    growth_K and growth_m bound the reward, |phi0(x)| <= K(1+|x|)^m.
    """

    phi0: Callable
    h0: Callable
    growth_K: float = 1.0
    growth_m: float = 1.0

    def check_growth(self, xs) -> bool:
        xs = np.asarray(xs, dtype=float)
        return bool(
            np.all(
                np.abs(self.phi0(xs))
                <= self.growth_K * (1.0 + np.abs(xs)) ** self.growth_m + 1e-12
            )
        )


# --- simulation -------------------------------------------------------------


def _steps_of(span: float, dt: float, what: str) -> int:
    n = round(span / dt)
    if n < 1 or abs(n * dt - span) > 1e-9 * span:
        raise ConfigurationError(f"dt={dt} does not divide {what}={span}")
    return n


def path_normals(seed: int, path_index: int, shape) -> np.ndarray:
    """Noise increments for one path from a counter-based substream."""
    gen = np.random.Generator(np.random.Philox(key=[seed, path_index]))
    return gen.standard_normal(shape)


def _trapezoid_weights(m: int, dt: float) -> np.ndarray:
    w = np.full(m + 1, dt)
    w[0] = w[-1] = dt / 2
    return w


def simulate_paths(
    params: ModelParams,
    history: HistoryPair,
    policy: Policy,
    dt: float,
    n_paths: int,
    seed: int,
    a1_point: float = 0.0,
) -> PathEnsemble:
    """Explicit Euler-Maruyama over [0, T] for n_paths independent paths.

    a1_point adds a discrete lag term a1_point * y(t - r) to the drift,
    used by the state-delay-only model where the forgetting distribution
    is concentrated on a point.
    """
    if dt > params.r or dt > params.T:
        raise ConfigurationError("dt must not exceed r or T")
    steps = _steps_of(params.T, dt, "T")
    m = _steps_of(params.r, dt, "r")
    grid = history.grid
    t = dt * np.arange(steps + 1)
    xi = -params.r + dt * np.arange(m + 1)
    wq = _trapezoid_weights(m, dt)

    ka = None
    if not kernel_is_zero(params.a1):
        ka = wq * kernel_eval(params.a1, xi, grid)
    kb = None
    if not kernel_is_zero(params.b1):
        kb = wq * kernel_eval(params.b1, xi, grid)

    hist_y = np.interp(xi, grid.nodes, history.x1)
    hist_z = np.interp(xi, grid.nodes, history.delta)

    y_pad = np.empty((n_paths, m + steps + 1))
    y_pad[:, :m] = hist_y[:m]
    y_pad[:, m] = history.x0

    z_open = policy.sample(params, t)
    clip_count = 0
    if z_open is not None:
        clipped = np.clip(z_open, params.u_min, params.u_max)
        clip_count = int(np.count_nonzero(clipped != z_open))
        z_pad = np.concatenate([hist_z[:m], clipped])
        qb = sliding_window_view(z_pad, m + 1) @ kb if kb is not None else None
        z_store = clipped[None, :]
    else:
        z_pad = np.empty((n_paths, m + steps + 1))
        z_pad[:, :m] = hist_z[:m]
        qb = None
        z_store = None

    noise = np.empty((n_paths, steps))
    for p in range(n_paths):
        noise[p] = path_normals(seed, p, steps)
    sig = params.sigma * np.sqrt(dt)

    for k in range(steps):
        ycur = y_pad[:, m + k]
        drift = params.a0 * ycur
        if ka is not None:
            drift = drift + y_pad[:, k : k + m + 1] @ ka
        if a1_point != 0.0:
            drift = drift + a1_point * y_pad[:, k]
        if z_open is not None:
            drift = drift + params.b0 * z_pad[m + k]
            if qb is not None:
                drift = drift + qb[k]
        else:
            zk = np.asarray(policy.control_fn(t[k], ycur), dtype=float)
            zk = np.broadcast_to(zk, ycur.shape)
            zc = np.clip(zk, params.u_min, params.u_max)
            clip_count += int(np.count_nonzero(zc != zk))
            z_pad[:, m + k] = zc
            drift = drift + params.b0 * zc
            if kb is not None:
                drift = drift + (z_pad[:, k : k + m + 1] * kb).sum(axis=1)
        ynew = ycur + drift * dt + sig * noise[:, k]
        if not np.all(np.isfinite(ynew)) or np.max(np.abs(ynew)) > BLOWUP_LIMIT:
            bad = int(np.argmax(~np.isfinite(ynew) | (np.abs(ynew) > BLOWUP_LIMIT)))
            raise BlowupError(
                f"path {bad} left the finite range at step {k + 1} (t={t[k + 1]:g})"
            )
        y_pad[:, m + k + 1] = ynew

    if z_open is None:
        # terminal control stored for completeness; it never enters the drift
        zT = np.asarray(policy.control_fn(t[-1], y_pad[:, -1]), dtype=float)
        z_pad[:, -1] = np.clip(np.broadcast_to(zT, (n_paths,)), params.u_min, params.u_max)
        z_store = z_pad[:, m:]

    return PathEnsemble(
        t=t, y=y_pad[:, m:], z=z_store, dt=dt, seed=seed, clip_count=clip_count
    )


def objective_estimate(ensemble: PathEnsemble, obj: ObjectiveSpec) -> MCEstimate:
    """Per-path phi0(y(T)) minus the left-endpoint cost integral, averaged."""
    if ensemble.n_paths == 0:
        raise ConfigurationError("ensemble is empty")
    terminal = obj.phi0(ensemble.y[:, -1])
    costs = obj.h0(ensemble.z[:, :-1]).sum(axis=1) * ensemble.dt
    values = terminal - costs  # broadcasts when z is shared across paths
    n = ensemble.n_paths
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(mean=mean, stderr=stderr, n_paths=n, seed=ensemble.seed)


def evaluate_policy(
    params: ModelParams,
    history: HistoryPair,
    policy: Policy,
    obj: ObjectiveSpec,
    dt: float,
    n_paths: int,
    seed: int,
    a1_point: float = 0.0,
) -> MCEstimate:
    ens = simulate_paths(params, history, policy, dt, n_paths, seed, a1_point)
    return objective_estimate(ens, obj)


def relative_gap(v_opt: MCEstimate, v_base: MCEstimate) -> GapEstimate:
    """(v_opt - v_base)/v_opt with first-order propagated standard error."""
    if v_opt.mean == 0.0:
        raise ZeroDivisionError("reference value is zero")
    gap = (v_opt.mean - v_base.mean) / v_opt.mean
    se = np.hypot(
        v_base.mean / v_opt.mean**2 * v_opt.stderr, v_base.stderr / v_opt.mean
    )
    return GapEstimate(gap=float(gap), stderr=float(se))
