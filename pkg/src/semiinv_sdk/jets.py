"""Second-order jets and the scalar algebra expressions evaluate over.

A :class:`Jet2` carries a value, a gradient and a Hessian with respect to a
fixed list of active variables. Entries may themselves be jets, which is how
third (and fourth) order information is recovered without symbolic work.
"""

from __future__ import annotations

import math
from typing import Any, Callable

import numpy as np

from .errors import DomainError

Scalar = Any


class Jet2:
    """Second-order forward-mode jet ``(value, grad, hess)``."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: Scalar, grad: np.ndarray, hess: np.ndarray) -> None:
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value: Scalar, index: int, size: int) -> Jet2:
        """Seed the ``index``-th of ``size`` active variables."""
        grad = np.zeros(size)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((size, size)))

    @classmethod
    def constant(cls, value: Scalar, size: int) -> Jet2:
        return cls(value, np.zeros(size), np.zeros((size, size)))

    @property
    def size(self) -> int:
        return len(self.grad)

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad!r})"

    # ---- chain rule ---------------------------------------------------------

    def _chain(self, f0: Scalar, f1: Scalar, f2: Scalar) -> Jet2:
        """Compose with a univariate function given f, f', f'' at ``value``."""
        outer = np.multiply.outer(self.grad, self.grad)
        return Jet2(f0, self.grad * f1, self.hess * f1 + outer * f2)

    # ---- arithmetic ---------------------------------------------------------

    def __neg__(self) -> Jet2:
        return Jet2(-self.value, -self.grad, -self.hess)

    def __pos__(self) -> Jet2:
        return self

    def __add__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        return Jet2(self.value + other, self.grad, self.hess)

    def __radd__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet2(other + self.value, self.grad, self.hess)

    def __sub__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Jet2):
            return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)
        return Jet2(self.value - other, self.grad, self.hess)

    def __rsub__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet2(other - self.value, -self.grad, -self.hess)

    def __mul__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Jet2):
            cross = np.multiply.outer(self.grad, other.grad)
            return Jet2(
                self.value * other.value,
                self.grad * other.value + other.grad * self.value,
                self.hess * other.value + other.hess * self.value + cross + cross.T,
            )
        return Jet2(self.value * other, self.grad * other, self.hess * other)

    def __rmul__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet2(other * self.value, self.grad * other, self.hess * other)

    def reciprocal(self) -> Jet2:
        if real_value(self) == 0.0:
            raise DomainError("1/x", 0.0)
        inv = 1.0 / self.value
        return self._chain(inv, -(inv * inv), 2.0 * inv * inv * inv)

    def __truediv__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Jet2):
            q = self * other.reciprocal()
            return Jet2(self.value / other.value, q.grad, q.hess)
        if real_value(other) == 0.0:
            raise DomainError("x/0", 0.0)
        return Jet2(self.value / other, self.grad / other, self.hess / other)

    def __rtruediv__(self, other: Any) -> Jet2:
        if isinstance(other, np.ndarray):
            return NotImplemented
        q = self.reciprocal() * other
        return Jet2(other / self.value, q.grad, q.hess)

    def __pow__(self, exponent: int) -> Jet2:
        return ipow(self, exponent)


# ---- generic scalar functions ----------------------------------------------


def real_value(x: Scalar) -> float:
    """Innermost real value of a (possibly nested) jet."""
    while isinstance(x, Jet2):
        x = x.value
    return float(x)


def ipow(x: Scalar, n: int) -> Scalar:
    """Integer power over reals or jets."""
    if n < 0:
        if real_value(x) == 0.0:
            raise DomainError(f"x^{n}", 0.0)
        return 1.0 / ipow(x, -n)
    if not isinstance(x, Jet2):
        return x**n
    if n == 0:
        return 1.0
    if n == 1:
        return x
    v = x.value
    return x._chain(ipow(v, n), n * ipow(v, n - 1), n * (n - 1) * ipow(v, n - 2))


def sin(x: Scalar) -> Scalar:
    if isinstance(x, Jet2):
        s = sin(x.value)
        return x._chain(s, cos(x.value), -s)
    return math.sin(x)


def cos(x: Scalar) -> Scalar:
    if isinstance(x, Jet2):
        c = cos(x.value)
        return x._chain(c, -sin(x.value), -c)
    return math.cos(x)


def exp(x: Scalar) -> Scalar:
    if isinstance(x, Jet2):
        e = exp(x.value)
        return x._chain(e, e, e)
    return math.exp(x)


def log(x: Scalar) -> Scalar:
    if real_value(x) <= 0.0:
        raise DomainError("log", real_value(x))
    if isinstance(x, Jet2):
        inv = 1.0 / x.value
        return x._chain(log(x.value), inv, -(inv * inv))
    return math.log(x)


def sqrt(x: Scalar) -> Scalar:
    v = real_value(x)
    if v < 0.0:
        raise DomainError("sqrt", v)
    if isinstance(x, Jet2):
        if v == 0.0:
            if _is_constant(x):
                return Jet2.constant(sqrt(x.value), x.size)
            # sqrt is not differentiable at 0 along a varying argument
            raise DomainError("sqrt", v)
        s = sqrt(x.value)
        inv = 1.0 / s
        return x._chain(s, 0.5 * inv, -0.25 * inv * inv * inv)
    return math.sqrt(x)


def _is_constant(x: Jet2) -> bool:
    return all(_is_zero(d) for d in x.grad) and all(_is_zero(d) for d in x.hess.flat)


def _is_zero(x: Scalar) -> bool:
    if isinstance(x, Jet2):
        return _is_zero(x.value) and _is_constant(x)
    return x == 0.0


FUNCTIONS: dict[str, Callable[[Scalar], Scalar]] = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
}


# ---- object arrays of jets --------------------------------------------------


def as_jet(x: Scalar, size: int) -> Jet2:
    """Promote a plain number to a constant jet of ``size`` variables."""
    if isinstance(x, Jet2):
        return x
    return Jet2.constant(float(x), size)


def jet_array(entries: Any, size: int) -> np.ndarray:
    """Object array of jets with every entry promoted to ``size`` variables."""
    arr = np.asarray(entries, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = as_jet(arr[idx], size)
    return out


def values(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape)
    for idx in np.ndindex(arr.shape):
        out[idx] = real_value(arr[idx]) if isinstance(arr[idx], Jet2) else float(arr[idx])
    return out


def gradients(arr: np.ndarray, size: int) -> np.ndarray:
    """Float gradients, stacked on a trailing axis of length ``size``."""
    out = np.zeros(arr.shape + (size,))
    for idx in np.ndindex(arr.shape):
        if isinstance(arr[idx], Jet2):
            out[idx] = [real_value(g) for g in arr[idx].grad]
    return out


def hessians(arr: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(arr.shape + (size, size))
    for idx in np.ndindex(arr.shape):
        if isinstance(arr[idx], Jet2):
            h = arr[idx].hess
            out[idx] = [[real_value(h[i, j]) for j in range(size)] for i in range(size)]
    return out


def generic_inv(a: np.ndarray) -> np.ndarray:
    """Inverse of a square matrix over any scalar algebra (Gauss-Jordan).

    Pivots are chosen on the real part, so the routine is safe for the
    symmetric positive definite and full-rank Gram matrices it is used on.
    """
    n = a.shape[0]
    work = np.empty((n, 2 * n), dtype=object)
    work[:, :n] = a
    work[:, n:] = np.eye(n)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(real_value(work[r, col])))
        if real_value(work[pivot, col]) == 0.0:
            raise DomainError("inverse", 0.0)
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        inv_p = 1.0 / work[col, col]
        work[col] = work[col] * inv_p
        for row in range(n):
            if row != col:
                factor = work[row, col]
                if isinstance(factor, Jet2) or factor != 0.0:
                    work[row] = work[row] - work[col] * factor
    return work[:, n:]
