"""Separable regularizers psi(x) = w |x|_1 + l2/2 |x|^2 + sw/2 |x - c|^2 + const.

The shifted quadratic term is what the regularize transform adds around a
center point; `with_shifted` merges a new such term into an existing one
exactly (two quadratics centered at different points combine into one plus a
scalar constant, which is kept so objective values stay exact).

Strong convexity is l2 + sw.  The proximal operator and the conjugate both
have closed forms built on soft-thresholding.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def soft_threshold(v, tau):
    """Componentwise sign(v) * max(|v| - tau, 0)."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Regularizer:
    l1: float = 0.0
    l2: float = 0.0
    shift_weight: float = 0.0
    shift_center: np.ndarray | None = None
    const: float = 0.0

    def __post_init__(self):
        if self.l1 < 0.0 or self.l2 < 0.0 or self.shift_weight < 0.0:
            raise ConfigError("regularizer weights must be nonnegative")
        if self.shift_weight > 0.0:
            if self.shift_center is None:
                raise ConfigError("shifted quadratic needs a center")
            object.__setattr__(self, "shift_center", _readonly(self.shift_center))
        elif self.shift_center is not None:
            object.__setattr__(self, "shift_center", None)

    @property
    def strong_convexity(self) -> float:
        return self.l2 + self.shift_weight

    @property
    def is_zero(self) -> bool:
        return self.l1 == 0.0 and self.strong_convexity == 0.0 and self.const == 0.0

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        v = self.const
        if self.l1 > 0.0:
            v += self.l1 * np.abs(x).sum()
        if self.l2 > 0.0:
            v += 0.5 * self.l2 * float(x @ x)
        if self.shift_weight > 0.0:
            d = x - self.shift_center
            v += 0.5 * self.shift_weight * float(d @ d)
        return float(v)

    def differentiable_gradient(self, x):
        """Gradient of the quadratic (non-l1) part of psi."""
        x = np.asarray(x, dtype=float)
        g = self.l2 * x
        if self.shift_weight > 0.0:
            g = g + self.shift_weight * (x - self.shift_center)
        return g

    def prox(self, v, eta: float):
        """argmin_x eta*psi(x) + 1/2 |x - v|^2."""
        if eta < 0.0:
            raise ConfigError("prox step size must be nonnegative")
        v = np.asarray(v, dtype=float)
        if eta == 0.0:
            return v.copy()
        u = v
        if self.shift_weight > 0.0:
            u = v + eta * self.shift_weight * self.shift_center
        return soft_threshold(u, eta * self.l1) / (1.0 + eta * self.strong_convexity)

    def conjugate_argmax(self, u):
        """The maximizer of <u, x> - psi(x); requires strong convexity."""
        sigma = self.strong_convexity
        if sigma <= 0.0:
            raise ConfigError("conjugate maximizer needs strong convexity")
        u = np.asarray(u, dtype=float)
        w = u
        if self.shift_weight > 0.0:
            w = u + self.shift_weight * self.shift_center
        return soft_threshold(w / sigma, self.l1 / sigma)

    def conjugate_value(self, u) -> float:
        """psi*(u) = sup_x <u, x> - psi(x)."""
        u = np.asarray(u, dtype=float)
        if self.strong_convexity > 0.0:
            x = self.conjugate_argmax(u)
            return float(u @ x) - self.value(x)
        # pure l1 (+const): an indicator of the l-infinity ball of radius l1
        if np.max(np.abs(u), initial=0.0) <= self.l1 + 1e-12:
            return -self.const
        return np.inf

    def with_shifted(self, weight: float, center) -> "Regularizer":
        """psi + weight/2 |x - center|^2, merged into a single shifted term."""
        if weight < 0.0:
            raise ConfigError("quadratic weight must be nonnegative")
        if weight == 0.0:
            return self
        center = np.asarray(center, dtype=float)
        if self.shift_weight == 0.0:
            return Regularizer(self.l1, self.l2, weight, center, self.const)
        total = self.shift_weight + weight
        merged = (self.shift_weight * self.shift_center + weight * center) / total
        d = self.shift_center - center
        cross = 0.5 * self.shift_weight * weight / total * float(d @ d)
        return Regularizer(self.l1, self.l2, total, merged, self.const + cross)
