"""Composite objectives F(x) = (1/n) sum_i f_i(<a_i, x>) + psi(x).

An objective bundles a dataset, one loss kind with per-sample labels, a
regularizer, and an optional smoothing level lambda (when set, every loss
is replaced by its smoothed variant).  Objectives are immutable: the
`regularize` and `smooth` transforms return new objects.

Case classification:
    Case1  sigma > 0 and L < inf   (strongly convex, smooth)
    Case2  sigma = 0 and L < inf   (smooth only)
    Case3  sigma > 0 and L = inf   (strongly convex only)
    Case4  otherwise
where sigma is psi's strong convexity and L the reported smoothness of f.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import data as data_mod
from . import losses
from .data import Dataset
from .errors import ConfigError
from .regularizers import Regularizer


class Case(Enum):
    Case1 = 1
    Case2 = 2
    Case3 = 3
    Case4 = 4


@dataclass(frozen=True, eq=False)
class CompositeObjective:
    data: Dataset
    loss: str
    reg: Regularizer
    smoothing: float | None = None

    def __post_init__(self):
        if self.loss not in losses.KINDS:
            raise ConfigError(f"unknown loss kind {self.loss!r}")
        if self.smoothing is not None and self.smoothing <= 0.0:
            raise ConfigError("smoothing parameter must be positive")

    # -- shape ---------------------------------------------------------
    @property
    def n(self) -> int:
        return self.data.n

    @property
    def dim(self) -> int:
        return self.data.dim

    # -- constants -----------------------------------------------------
    @property
    def smoothness(self) -> float:
        """Reported L = max_i |a_i|^2 * L_loss (L_loss = 1/lambda if smoothed)."""
        sq = self.data.row_sq_norms()
        if len(sq) == 0:
            return 0.0
        if self.smoothing is not None:
            return float(sq.max() / self.smoothing)
        per = losses.loss_smoothness(self.loss, self.data.labels)
        with np.errstate(invalid="ignore"):  # 0 * inf lanes are masked below
            terms = np.where(sq == 0.0, 0.0, sq * per)
        return float(terms.max())

    @property
    def lipschitz_G(self) -> float:
        """Largest per-loss Lipschitz constant G (inf for squared loss)."""
        if self.n == 0:
            return 0.0
        return float(losses.loss_lipschitz(self.loss, self.data.labels).max())

    @property
    def strong_convexity(self) -> float:
        return self.reg.strong_convexity

    def classify_case(self) -> Case:
        sc = self.strong_convexity > 0.0
        smooth = np.isfinite(self.smoothness)
        if sc and smooth:
            return Case.Case1
        if smooth:
            return Case.Case2
        if sc:
            return Case.Case3
        return Case.Case4

    # -- loss dispatch over margins z = A x -----------------------------
    def margins(self, x) -> np.ndarray:
        return data_mod.matvec(self.data, np.asarray(x, dtype=float))

    def loss_values(self, z) -> np.ndarray:
        b = self.data.labels
        if self.smoothing is not None:
            return losses.smoothed_value(self.loss, z, b, self.smoothing)
        return losses.loss_value(self.loss, z, b)

    def loss_derivs(self, z, allow_subgradient: bool = False) -> np.ndarray:
        b = self.data.labels
        if self.smoothing is not None:
            return losses.smoothed_deriv(self.loss, z, b, self.smoothing)
        if not allow_subgradient and not np.isfinite(self.smoothness):
            raise ConfigError(
                "gradient unavailable: loss is nonsmooth and no smoothing is active")
        return losses.loss_deriv(self.loss, z, b)

    # -- evaluation ------------------------------------------------------
    def f_value(self, x) -> float:
        if self.n == 0:
            return 0.0
        return float(self.loss_values(self.margins(x)).mean())

    def full_value(self, x) -> float:
        return self.f_value(x) + self.reg.value(x)

    def full_gradient(self, x, include_quadratic_reg: bool = False) -> np.ndarray:
        """Gradient of the f part; psi is normally handled by its prox.

        `include_quadratic_reg` opts in to adding the gradient of psi's
        quadratic terms (never the l1 term), for solvers or statistics that
        treat those terms as part of the smooth piece.
        """
        x = np.asarray(x, dtype=float)
        if self.n == 0:
            g = np.zeros(self.dim)
        else:
            derivs = self.loss_derivs(self.margins(x))
            g = data_mod.rmatvec(self.data, derivs) / self.n
        if include_quadratic_reg:
            g = g + self.reg.differentiable_gradient(x)
        return g

    def stochastic_gradient(self, i: int, x) -> np.ndarray:
        """f_i'(<a_i, x>) * a_i as a dense vector (subgradient at kinks)."""
        if not 0 <= i < self.n:
            raise IndexError(f"sample index {i} out of range [0, {self.n})")
        x = np.asarray(x, dtype=float)
        z = data_mod.row_dot(self.data, i, x)
        d = self._deriv_scalar(z, i)
        out = np.zeros(self.dim)
        idx, val = self.data.row(i)
        out[idx] = d * val
        return out

    def _deriv_scalar(self, z: float, i: int) -> float:
        b = self.data.labels[i]
        if self.smoothing is not None:
            return float(losses.smoothed_deriv(self.loss, z, b, self.smoothing))
        return float(losses.loss_deriv(self.loss, z, b))

    def grad_norm(self, x, include_quadratic_reg: bool = False) -> float:
        g = self.full_gradient(x, include_quadratic_reg=include_quadratic_reg)
        return float(np.linalg.norm(g))

    def prox(self, v, eta: float) -> np.ndarray:
        return self.reg.prox(v, eta)

    # -- duality ---------------------------------------------------------
    def duality_gap(self, x) -> float:
        """Primal value minus Fenchel dual value at alpha_i = f_i'(z_i).

        Nonnegative by weak duality; zero at the minimizer when the losses
        are differentiable.  Requires psi strongly convex.
        """
        if self.strong_convexity <= 0.0:
            raise ConfigError("duality gap unavailable: psi is not strongly convex")
        x = np.asarray(x, dtype=float)
        z = self.margins(x)
        alpha = self.loss_derivs(z, allow_subgradient=True)
        b = self.data.labels
        if self.smoothing is not None:
            fstar = losses.smoothed_conjugate(self.loss, alpha, b, self.smoothing)
        else:
            fstar = losses.loss_conjugate(self.loss, alpha, b)
        v = -data_mod.rmatvec(self.data, alpha) / self.n
        dual = -float(fstar.mean()) - self.reg.conjugate_value(v)
        return self.full_value(x) - dual

    # -- transforms ------------------------------------------------------
    def regularize(self, weight: float, center) -> "CompositeObjective":
        """Add weight/2 |x - center|^2 to psi."""
        if weight <= 0.0:
            raise ConfigError("added regularization weight must be positive")
        return CompositeObjective(
            self.data, self.loss, self.reg.with_shifted(weight, center), self.smoothing)

    def smooth(self, lam: float) -> "CompositeObjective":
        """Replace every loss by its lam-smoothed variant."""
        if lam <= 0.0:
            raise ConfigError("smoothing parameter must be positive")
        if self.smoothing is not None:
            raise ConfigError("objective is already smoothed; smooth the base objective")
        return CompositeObjective(self.data, self.loss, self.reg, lam)

    # -- identity --------------------------------------------------------
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.data.content_bytes())
        h.update(self.loss.encode())
        r = self.reg
        center = b"" if r.shift_center is None else np.asarray(r.shift_center).tobytes()
        h.update(repr((r.l1, r.l2, r.shift_weight, r.const)).encode())
        h.update(center)
        h.update(repr(self.smoothing).encode())
        return h.hexdigest()
