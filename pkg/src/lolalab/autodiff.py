"""Forward-mode automatic differentiation with truncated multivariate Taylor jets.

A :class:`Jet` carries a value together with all of its partial derivatives up
to a fixed order (1, 2 or 3) with respect to ``nvars`` seeded variables. The
derivatives are stored densely as plain derivative tensors (not divided by
factorials)::

    value      f
    grad       df/dx_i                 shape (n,)
    hess       d2f/dx_i dx_j           shape (n, n)
    third      d3f/dx_i dx_j dx_k      shape (n, n, n)

Arithmetic uses the Leibniz rule for products and the Faa di Bruno formula for
univariate functions, so polynomials of degree <= order are represented
without truncation error. Mixed partial tensors are exactly symmetric: the
Hessian update formulas are symmetric term by term, and third-order tensors are
re-gathered from canonical (sorted) index positions after every operation.

Python floats and ints mix freely with jets, which lets numeric code such as
:func:`lolalab.games.exact_value` run unchanged on either.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_ORDER = 3
MAX_VARS = 10

# sigmoid switches to the one-sided form past this magnitude
_SIGMOID_BRANCH = 30.0


class JetError(ValueError):
    """Structural misuse of jets (mismatched shapes, bad order)."""


class JetDomainError(ArithmeticError):
    """A jet operation left the domain of the underlying function."""


@lru_cache(maxsize=None)
def _canonical_index(n: int) -> np.ndarray:
    # flat position of sorted(i, j, k) for every (i, j, k)
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    idx = np.sort(np.stack([i, j, k]), axis=0)
    return np.ravel_multi_index(tuple(idx), (n, n, n)).ravel()


def _symmetrize3(t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    return t.ravel()[_canonical_index(n)].reshape(n, n, n)


def _sym_outer(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """h_ij g_k + h_ik g_j + h_jk g_i (before canonical symmetrization)."""
    x = h[:, :, None] * g[None, None, :]
    return x + x.transpose(0, 2, 1) + x.transpose(2, 1, 0)


class Jet:
    """Truncated Taylor value of a scalar function of ``nvars`` variables."""

    __slots__ = ("order", "nvars", "value", "grad", "hess", "third")

    def __init__(self, order, nvars, value, grad=None, hess=None, third=None):
        if not 1 <= order <= MAX_ORDER:
            raise JetError(f"order must be in 1..{MAX_ORDER}, got {order}")
        if not 1 <= nvars <= MAX_VARS:
            raise JetError(f"nvars must be in 1..{MAX_VARS}, got {nvars}")
        self.order = order
        self.nvars = nvars
        self.value = float(value)
        self.grad = np.zeros(nvars) if grad is None else grad
        if order >= 2:
            self.hess = np.zeros((nvars, nvars)) if hess is None else hess
        else:
            self.hess = None
        if order >= 3:
            self.third = np.zeros((nvars,) * 3) if third is None else third
        else:
            self.third = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value, order, nvars):
        return cls(order, nvars, value)

    def _like(self, value, grad, hess, third):
        return Jet(self.order, self.nvars, value, grad, hess, third)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order or other.nvars != self.nvars:
                raise JetError(
                    f"jet mismatch: (order={self.order}, nvars={self.nvars}) vs "
                    f"(order={other.order}, nvars={other.nvars})"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return None
        return NotImplemented

    # -- arithmetic -----------------------------------------------------------

    def __neg__(self):
        return self._like(
            -self.value,
            -self.grad,
            None if self.hess is None else -self.hess,
            None if self.third is None else -self.third,
        )

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return self._like(self.value + float(other), self.grad, self.hess, self.third)
        return self._like(
            self.value + o.value,
            self.grad + o.grad,
            None if self.hess is None else self.hess + o.hess,
            None if self.third is None else self.third + o.third,
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            return self._like(self.value - float(other), self.grad, self.hess, self.third)
        return self._like(
            self.value - o.value,
            self.grad - o.grad,
            None if self.hess is None else self.hess - o.hess,
            None if self.third is None else self.third - o.third,
        )

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = float(other)
            return self._like(
                c * self.value,
                c * self.grad,
                None if self.hess is None else c * self.hess,
                None if self.third is None else c * self.third,
            )
        a0, b0 = self.value, o.value
        ga, gb = self.grad, o.grad
        grad = a0 * gb + b0 * ga
        hess = third = None
        if self.order >= 2:
            cross = np.outer(ga, gb)
            hess = a0 * o.hess + b0 * self.hess + (cross + cross.T)
        if self.order >= 3:
            third = _symmetrize3(
                a0 * o.third
                + b0 * self.third
                + _sym_outer(self.hess, gb)
                + _sym_outer(o.hess, ga)
            )
        return self._like(a0 * b0, grad, hess, third)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if o is None:
            c = float(other)
            if c == 0.0:
                raise JetDomainError("division of a jet by zero")
            return self * (1.0 / c)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    # -- univariate functions -------------------------------------------------

    def _compose(self, f0, f1, f2=0.0, f3=0.0):
        """Apply a scalar function given its derivatives at ``self.value``."""
        g = self.grad
        grad = f1 * g
        hess = third = None
        if self.order >= 2:
            hess = f1 * self.hess + f2 * np.outer(g, g)
        if self.order >= 3:
            gg = np.multiply.outer(np.outer(g, g), g)
            third = _symmetrize3(
                f1 * self.third + f2 * _sym_outer(self.hess, g) + f3 * gg
            )
        return self._like(f0, grad, hess, third)

    def reciprocal(self):
        x = self.value
        if x == 0.0:
            raise JetDomainError("reciprocal of a jet with zero value part")
        r = 1.0 / x
        return self._compose(r, -r * r, 2.0 * r**3, -6.0 * r**4)

    def exp(self):
        e = math.exp(self.value)
        return self._compose(e, e, e, e)

    def log(self):
        x = self.value
        if x <= 0.0:
            raise JetDomainError(f"log of a jet with non-positive value {x}")
        r = 1.0 / x
        return self._compose(math.log(x), r, -r * r, 2.0 * r**3)

    def sigmoid(self):
        s = _sigmoid_float(self.value)
        d1 = s * (1.0 - s)
        d2 = d1 * (1.0 - 2.0 * s)
        d3 = d1 * (1.0 - 6.0 * s + 6.0 * s * s)
        return self._compose(s, d1, d2, d3)

    # -- misc -----------------------------------------------------------------

    def __abs__(self):
        return -self if self.value < 0 else self

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, value={self.value!r})"


def _sigmoid_float(x: float) -> float:
    if x > _SIGMOID_BRANCH:
        return 1.0 / (1.0 + math.exp(-x))
    if x < -_SIGMOID_BRANCH:
        e = math.exp(x)
        return e / (1.0 + e)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sigmoid(x):
    """Logistic function for floats, numpy arrays, or jets."""
    if isinstance(x, Jet):
        return x.sigmoid()
    if isinstance(x, np.ndarray):
        out = np.empty_like(x, dtype=float)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        e = np.exp(x[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    return _sigmoid_float(float(x))


def exp(x):
    return x.exp() if isinstance(x, Jet) else math.exp(x)


def log(x):
    if isinstance(x, Jet):
        return x.log()
    if x <= 0:
        raise JetDomainError(f"log of non-positive value {x}")
    return math.log(x)


def seed_variables(values: Sequence[float], order: int) -> list[Jet]:
    """Independent variables: jet ``i`` has unit first partial along ``i``."""
    n = len(values)
    if not 1 <= order <= MAX_ORDER:
        raise JetError(f"order must be in 1..{MAX_ORDER}, got {order}")
    if not 1 <= n <= MAX_VARS:
        raise JetError(f"number of variables must be in 1..{MAX_VARS}, got {n}")
    jets = []
    for i, v in enumerate(values):
        g = np.zeros(n)
        g[i] = 1.0
        jets.append(Jet(order, n, v, g))
    return jets


def extract(jet, order: int | None = None):
    """Return ``(value, grad[, hess[, third]])`` up to ``order`` (default: the jet's)."""
    if order is None:
        order = jet.order
    if order > jet.order:
        raise JetError(f"requested order {order} exceeds jet order {jet.order}")
    out = [jet.value, jet.grad.copy()]
    if order >= 2:
        out.append(jet.hess.copy())
    if order >= 3:
        out.append(jet.third.copy())
    return tuple(out)
