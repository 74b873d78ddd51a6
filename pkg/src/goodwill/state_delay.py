"""Feedback machinery for delay in the state only (b1 = 0, point lag).

Covers the scaled Hamiltonians of the goodwill model with forgetting,
the quadratic-cost and bang-bang feedback maps, closed-loop simulation
driven by an externally supplied gradient of the value function, and
the transcendental parameter condition for the invariant measure of the
uncontrolled dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .sdde import (
    ConfigurationError,
    FeedbackPolicy,
    HistoryPair,
    ModelParams,
    PathEnsemble,
    simulate_paths,
)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Control cost shape plus the scalings used by the scaled Hamiltonians.

    cost is "quadratic" (h0(z) = beta z^2) or "linear" (h0(z) = beta z);
    the control set is U = [0, R].
    """

    cost: str
    beta: float
    b0: float
    sigma: float
    R: float

    def __post_init__(self):
        if self.cost not in ("quadratic", "linear"):
            raise ConfigurationError(f"unknown cost form {self.cost!r}")
        if min(self.beta, self.b0, self.sigma, self.R) <= 0:
            raise ConfigurationError("beta, b0, sigma, R must all be positive")

    @property
    def R_tilde(self) -> float:
        return self.b0 * self.R / self.sigma

    @property
    def beta_tilde(self) -> float:
        # quadratic cost composes h0 with the sigma/b0 rescaling twice,
        # the linear cost only once
        if self.cost == "quadratic":
            return self.sigma**2 * self.beta / self.b0**2
        return self.sigma * self.beta / self.b0


def hamiltonian_H0(p0, spec: HamiltonianSpec):
    """H0(p0) = sup over scaled controls z0 in [0, R~] of
    sigma*z0*p0 - h0(sigma*z0/b0)."""
    p0 = np.asarray(p0, dtype=float)
    s, bt, Rt = spec.sigma, spec.beta_tilde, spec.R_tilde
    if spec.cost == "quadratic":
        interior = (s * p0) ** 2 / (4.0 * bt)
        upper = s * p0 * Rt - bt * Rt**2
        out = np.where(p0 < 0, 0.0, np.where(p0 <= 2 * bt * Rt / s, interior, upper))
    else:
        out = np.where(p0 > bt / s, (s * p0 - bt) * Rt, 0.0)
    return out if out.ndim else float(out)


def hamiltonian_H(q0, spec: HamiltonianSpec):
    """H(q0) = H0(q0 / sigma)."""
    return hamiltonian_H0(np.asarray(q0, dtype=float) / spec.sigma, spec)


def feedback_quadratic(d0v, spec: HamiltonianSpec):
    """Optimal control for quadratic cost given the value gradient d0v:
    0 below 0, b0*d0v/(2 beta) in between, R above 2 beta R / b0."""
    if spec.cost != "quadratic":
        raise ConfigurationError("feedback_quadratic needs a quadratic cost spec")
    d0v = np.asarray(d0v, dtype=float)
    out = np.clip(spec.b0 * d0v / (2.0 * spec.beta), 0.0, spec.R)
    return out if out.ndim else float(out)


def bangbang_threshold(spec: HamiltonianSpec) -> float:
    # argmax over [0, R] of b0*z*d0v - beta*z switches at d0v = beta/b0
    return spec.beta / spec.b0


def feedback_bangbang(d0v, spec: HamiltonianSpec, tie_value: float = 0.0):
    """Bang-bang control for linear cost: 0 below the threshold, R above,
    tie_value exactly at it."""
    if spec.cost != "linear":
        raise ConfigurationError("feedback_bangbang needs a linear cost spec")
    if not 0.0 <= tie_value <= spec.R:
        raise ConfigurationError(f"tie_value {tie_value} outside [0, {spec.R}]")
    d0v = np.asarray(d0v, dtype=float)
    thr = bangbang_threshold(spec)
    out = np.where(d0v < thr, 0.0, np.where(d0v > thr, spec.R, tie_value))
    return out if out.ndim else float(out)


def quadratic_feedback_policy(spec: HamiltonianSpec, gradient_fn) -> FeedbackPolicy:
    return FeedbackPolicy(lambda t, y: feedback_quadratic(gradient_fn(t, y), spec))


def bangbang_feedback_policy(
    spec: HamiltonianSpec, gradient_fn, tie_value: float = 0.0
) -> FeedbackPolicy:
    return FeedbackPolicy(
        lambda t, y: feedback_bangbang(gradient_fn(t, y), spec, tie_value)
    )


def simulate_feedback(
    params: ModelParams,
    a1_scalar: float,
    history: HistoryPair,
    policy: FeedbackPolicy,
    dt: float,
    n_paths: int,
    seed: int,
) -> PathEnsemble:
    """Closed-loop Euler-Maruyama for dy = [a0 y + a1 y(t-r) + b0 z] dt + s dW.

    The control at each step is the feedback policy applied to the
    current state; params must carry zero a1/b1 kernels (the lag is the
    explicit point term a1_scalar).
    """
    from .hilbert import kernel_is_zero

    if not kernel_is_zero(params.b1) or not kernel_is_zero(params.a1):
        raise ConfigurationError(
            "simulate_feedback covers the state-delay-only model: "
            "a1 and b1 kernels must be zero"
        )
    return simulate_paths(
        params, history, policy, dt, n_paths, seed, a1_point=a1_scalar
    )


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    gamma_root: float | None
    upper_bound: float | None
    diagnostic: str


def invariant_measure_condition(
    a0: float, a1_scalar: float, variant: str = "cot"
) -> ConditionReport:
    """Check a0 < -a1 < sqrt(g^2 + a0^2) where g solves the transcendental
    equation on ]0, pi[.

    variant "cot" solves g*cot(g) = a0 (the standard delay-stability
    form, the default); variant "coth" solves g*coth(g) = a0 as printed,
    which has no root on ]0, pi[ unless a0 > 1.
    """
    if variant == "cot":
        f = lambda g: g / np.tan(g) - a0
        has_root = a0 < 1.0  # g*cot(g) decreases from 1 to -inf on ]0, pi[
    elif variant == "coth":
        f = lambda g: g / np.tanh(g) - a0
        # g*coth(g) increases from 1 to pi*coth(pi) on ]0, pi[
        has_root = 1.0 < a0 < np.pi / np.tanh(np.pi)
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")

    if not has_root:
        return ConditionReport(
            holds=False,
            gamma_root=None,
            upper_bound=None,
            diagnostic=(
                f"no root of the {variant} equation in ]0, pi[ for a0={a0}"
            ),
        )
    eps = 1e-12
    g = float(brentq(f, eps, np.pi - eps, xtol=1e-14))
    bound = float(np.sqrt(g * g + a0 * a0))
    holds = bool(a0 < -a1_scalar < bound)
    return ConditionReport(
        holds=holds, gamma_root=g, upper_bound=bound, diagnostic="ok"
    )
