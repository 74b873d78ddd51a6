"""Regularization schemes for the value function approximation study.

Mollified reward/cost (truncate-then-convolve for the reward, plain
convolution for the cost), the Lasry-Lions sup-inf convolution, a
finite-difference scheme for the lifted evolution with the rank-one
perturbed diffusion, and the empirical convergence table for the
regularized objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hilbert import ProfileX, SegmentGrid, kernel_eval, kernel_is_zero
from .sdde import (
    ConfigurationError,
    MCEstimate,
    ModelParams,
    Policy,
    path_normals,
)

_MOLLIFIER_POINTS = 2001


def _bump(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class MollifierConfig:
    """Smooth unit-mass bump on [-1, 1] plus the two scheme parameters."""

    eps1: float = 0.0
    eps2: float = 0.1
    u: np.ndarray = field(init=False, repr=False, compare=False)
    zeta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.eps1 < 0 or self.eps2 <= 0:
            raise ConfigurationError("need eps1 >= 0 and eps2 > 0")
        u = np.linspace(-1.0, 1.0, _MOLLIFIER_POINTS)
        z = _bump(u)
        z = z / np.trapezoid(z, u)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "zeta", z)


def _convolve(fn, eps: float, eval_points: np.ndarray, moll: MollifierConfig):
    """(fn * zeta_eps)(x) by quadrature: int fn(x - eps u) zeta(u) du."""
    pts = np.asarray(eval_points, dtype=float)
    args = pts[:, None] - eps * moll.u[None, :]
    vals = fn(args)
    return np.trapezoid(vals * moll.zeta[None, :], moll.u, axis=1)


def mollify_phi(phi0, eps2: float, eval_points, moll: MollifierConfig | None = None):
    """Truncate the reward outside [-1/eps2, 1/eps2], then mollify at
    scale eps2."""
    moll = moll or MollifierConfig(eps2=eps2)
    cutoff = 1.0 / eps2

    def truncated(x):
        return np.where(np.abs(x) <= cutoff, phi0(x), 0.0)

    return _convolve(truncated, eps2, np.atleast_1d(eval_points), moll)


def mollify_h(h0, eps2: float, eval_points, moll: MollifierConfig | None = None):
    """Mollify the cost at scale eps2 (no truncation)."""
    moll = moll or MollifierConfig(eps2=eps2)
    return _convolve(h0, eps2, np.atleast_1d(eval_points), moll)


def sup_inf_convolution(
    h_values: np.ndarray, grid_x: np.ndarray, eps: float, delta: float
) -> np.ndarray:
    """Lasry-Lions regularization on a bounded grid:

        h_{eps,delta}(x) = sup_z inf_y (|z-y|^2/(2 eps) - |z-x|^2/(2 delta)
                                        + h(y)),   0 < delta < eps.

    Nested grid scans; the result is sandwiched between inf h and h.
    """
    if not 0 < delta < eps:
        raise ConfigurationError(f"need 0 < delta < eps, got delta={delta}, eps={eps}")
    h = np.asarray(h_values, dtype=float)
    x = np.asarray(grid_x, dtype=float)
    if h.shape != x.shape:
        raise ConfigurationError("h_values and grid_x must have the same shape")
    d2 = (x[:, None] - x[None, :]) ** 2
    inner = np.min(d2 / (2.0 * eps) + h[None, :], axis=1)  # inf over y, per z
    return np.max(inner[:, None] - d2 / (2.0 * delta), axis=0)  # sup over z, per x


@dataclass(frozen=True)
class LiftedEnsemble:
    """Terminal lifted states of the perturbed evolution."""

    y0: np.ndarray  # (n_paths,)
    y1: np.ndarray  # (n_paths, n_nodes)
    t_final: float
    seed: int


def simulate_lifted_perturbed(
    params: ModelParams,
    lifted_init: ProfileX,
    policy: Policy,
    eps1: float,
    grid: SegmentGrid,
    dt: float,
    n_paths: int,
    seed: int,
) -> LiftedEnsemble:
    """Finite-difference evolution of the lifted state with perturbed noise.

    Scalar component: dY0 = (a0 Y0 + Y1(0) + b0 z) dt + sigma dW0.
    Function component: first-order upwind transport for -d/dxi with the
    a1(xi) Y0 + b1(xi) z source, boundary Y1(-r) = 0, plus a single
    shared Brownian increment scaled by eps1 * b1(xi) (the rank-one
    perturbation).
    """
    dxi = grid.spacing
    if dt > dxi + 1e-15:
        raise ConfigurationError(
            f"CFL violation: dt={dt} exceeds grid spacing {dxi:.6g}"
        )
    steps = round(params.T / dt)
    if abs(steps * dt - params.T) > 1e-9 * params.T:
        raise ConfigurationError(f"dt={dt} does not divide T={params.T}")
    if len(lifted_init.x1) != grid.n_nodes:
        raise ConfigurationError("lifted initial state must live on the grid")

    t = dt * np.arange(steps + 1)
    z = policy.sample(params, t)
    if z is None:
        raise ConfigurationError("simulate_lifted_perturbed needs an open-loop policy")
    z = np.clip(z, params.u_min, params.u_max)

    a1v = kernel_eval(params.a1, grid.nodes, grid)
    b1v = kernel_eval(params.b1, grid.nodes, grid)
    lam = dt / dxi

    y0 = np.full(n_paths, float(lifted_init.x0))
    y1 = np.tile(np.asarray(lifted_init.x1, dtype=float), (n_paths, 1))

    noise = np.empty((n_paths, 2, steps))
    for p in range(n_paths):
        noise[p] = path_normals(seed, p, (2, steps))
    sig0 = params.sigma * np.sqrt(dt)
    sig1 = eps1 * np.sqrt(dt)

    for k in range(steps):
        tip = y1[:, -1]
        y0_new = y0 + (params.a0 * y0 + tip + params.b0 * z[k]) * dt
        y0_new += sig0 * noise[:, 0, k]

        upwind = np.empty_like(y1)
        upwind[:, 0] = y1[:, 0]  # ghost value 0 at xi = -r
        upwind[:, 1:] = y1[:, 1:] - y1[:, :-1]
        source = a1v[None, :] * y0[:, None] + (b1v * z[k])[None, :]
        y1_new = y1 - lam * upwind + dt * source
        if sig1 > 0 and not kernel_is_zero(params.b1):
            y1_new += sig1 * noise[:, 1, k][:, None] * b1v[None, :]

        if not (np.all(np.isfinite(y0_new)) and np.all(np.isfinite(y1_new))):
            raise ConfigurationError(f"lifted evolution lost finiteness at step {k+1}")
        y0, y1 = y0_new, y1_new

    return LiftedEnsemble(y0=y0, y1=y1, t_final=params.T, seed=seed)


@dataclass(frozen=True)
class ConvergenceRow:
    eps1: float
    eps2: float
    j_eps: float
    stderr: float
    gap: float


def convergence_study(
    params: ModelParams,
    lifted_init: ProfileX,
    policy: Policy,
    gamma: float,
    beta: float,
    baseline: float,
    eps1_seq,
    eps2_seq,
    grid: SegmentGrid,
    dt: float,
    n_paths: int,
    seed: int,
) -> list[ConvergenceRow]:
    """Gap table |J_eps - baseline| for the regularized objective under a
    fixed open-loop policy, one row per (eps1, eps2) pair."""
    steps = round(params.T / dt)
    t = dt * np.arange(steps + 1)
    z = policy.sample(params, t)
    if z is None:
        raise ConfigurationError("convergence_study needs an open-loop policy")
    z = np.clip(z, params.u_min, params.u_max)

    rows = []
    for eps1 in eps1_seq:
        ens = simulate_lifted_perturbed(
            params, lifted_init, policy, eps1, grid, dt, n_paths, seed
        )
        for eps2 in eps2_seq:
            moll = MollifierConfig(eps1=eps1, eps2=eps2)
            terminal = mollify_phi(lambda x: gamma * x, eps2, ens.y0, moll)
            cost_vals = mollify_h(lambda x: beta * x**2, eps2, z[:-1], moll)
            j_vals = terminal - np.sum(cost_vals) * dt
            mean = float(np.mean(j_vals))
            se = float(np.std(j_vals, ddof=1) / np.sqrt(len(j_vals)))
            rows.append(
                ConvergenceRow(
                    eps1=float(eps1),
                    eps2=float(eps2),
                    j_eps=mean,
                    stderr=se,
                    gap=abs(mean - baseline),
                )
            )
    return rows


def convergence_rows_to_csv(rows: list[ConvergenceRow]) -> str:
    lines = ["eps1,eps2,J_eps,stderr,gap"]
    for row in rows:
        lines.append(
            f"{row.eps1:.10g},{row.eps2:.10g},{row.j_eps:.10g},"
            f"{row.stderr:.10g},{row.gap:.10g}"
        )
    return "\n".join(lines) + "\n"
