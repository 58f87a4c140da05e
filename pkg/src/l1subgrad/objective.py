"""Composite objectives f(x) = g(x) + gamma * |x|_1 and their subdifferential operators.

The solvers never look inside g; they only use the interface defined here:
value, smooth gradient, the minimal-norm subgradient, and (for the momentum
restart test) a one-sided subgradient consistent with a sign-constrained
region around a pair of points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import as_vector


def soft_threshold(z, tau: float) -> np.ndarray:
    """Componentwise sign(z) * max(|z| - tau, 0), the prox of tau * |.|_1."""
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def _min_norm_from_grad(grad: np.ndarray, x: np.ndarray, gamma: float) -> np.ndarray:
    # On the support the l1 term is differentiable (grad + gamma*sign(x)); on
    # zero components the least-|.| choice over [-gamma, gamma] is the
    # soft-threshold of the smooth partial derivative.
    return np.where(x != 0.0, grad + gamma * np.sign(x), soft_threshold(grad, gamma))


def _directional_from_grad(
    grad: np.ndarray, q: np.ndarray, qp: np.ndarray, gamma: float
) -> np.ndarray:
    if np.any(q * qp < 0.0):
        bad = int(np.argmax(q * qp < 0.0))
        raise ValueError(
            f"sign-inconsistent pair at component {bad}: q={q[bad]}, q'={qp[bad]}"
        )
    pos = (q > 0.0) | (qp > 0.0)
    neg = (q < 0.0) | (qp < 0.0)
    return grad + gamma * (pos.astype(np.float64) - neg.astype(np.float64))


@dataclass(frozen=True)
class CompositeObjective:
    """f(x) = eval_g(x) + gamma * |x|_1 with metadata used by the solvers.

    eval_g / grad_g evaluate the smooth convex term and its (analytic)
    gradient. lipschitz_L is a Lipschitz constant of grad_g, and mu an
    optional strong-convexity constant of g when one is known.
    """

    eval_g: Callable[[np.ndarray], float]
    grad_g: Callable[[np.ndarray], np.ndarray]
    gamma: float
    lipschitz_L: float
    dim: int
    mu: float | None = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.lipschitz_L <= 0:
            raise ValueError(f"lipschitz_L must be > 0, got {self.lipschitz_L}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.mu is not None and not 0 < self.mu <= self.lipschitz_L:
            raise ValueError(f"mu must satisfy 0 < mu <= L, got mu={self.mu}, L={self.lipschitz_L}")

    def value(self, x) -> float:
        """f(x) = g(x) + gamma * |x|_1."""
        x = as_vector(x, dim=self.dim)
        return float(self.eval_g(x)) + self.gamma * float(np.sum(np.abs(x)))

    def smooth_value(self, x) -> float:
        return float(self.eval_g(as_vector(x, dim=self.dim)))

    def smooth_grad(self, x) -> np.ndarray:
        x = as_vector(x, dim=self.dim)
        return as_vector(self.grad_g(x), dim=self.dim)

    def min_norm_subgradient(self, x) -> np.ndarray:
        """The least-Euclidean-norm element of the subdifferential of f at x.

        The l1 subdifferential decouples across components, so the minimizer
        is found per coordinate: grad_g(x)_i + gamma * sign(x_i) where x_i is
        nonzero, and the soft-threshold of grad_g(x)_i by gamma where x_i is
        exactly zero. Evaluates grad_g once.
        """
        x = as_vector(x, dim=self.dim)
        return _min_norm_from_grad(self.smooth_grad(x), x, self.gamma)

    def directional_subgradient(self, q, q_prime) -> np.ndarray:
        """Subgradient of f at q_prime consistent with the sign region of (q, q_prime).

        Requires q_i * q'_i >= 0 for every component (the momentum phase
        guarantees this); a violation indicates a solver bug. Componentwise:
        grad_g(q')_i + gamma where either point is positive, grad_g(q')_i -
        gamma where either is negative, and plain grad_g(q')_i where both are
        exactly zero.
        """
        q = as_vector(q, dim=self.dim)
        qp = as_vector(q_prime, dim=self.dim)
        return _directional_from_grad(self.smooth_grad(qp), q, qp, self.gamma)


@dataclass(frozen=True)
class Partition:
    """Index sets {x>0}, {x<0}, {x=0} induced by a point (0-based, sorted)."""

    alpha_plus: tuple[int, ...]
    alpha_minus: tuple[int, ...]
    beta: tuple[int, ...]

    def __post_init__(self):
        merged = sorted(self.alpha_plus) + sorted(self.alpha_minus) + sorted(self.beta)
        n = len(merged)
        if sorted(merged) != list(range(n)):
            raise ValueError("index sets must be disjoint and cover 0..n-1")


def partition(x) -> Partition:
    """Classify components by exact sign; zero means exactly 0.0."""
    x = as_vector(x)
    return Partition(
        alpha_plus=tuple(int(i) for i in np.flatnonzero(x > 0.0)),
        alpha_minus=tuple(int(i) for i in np.flatnonzero(x < 0.0)),
        beta=tuple(int(i) for i in np.flatnonzero(x == 0.0)),
    )
