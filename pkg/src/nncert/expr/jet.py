"""Batched second-order forward-mode jets.

A scalar in the evaluator is either a plain ``ndarray`` of shape ``(N,)``
(value mode, or a quantity constant with respect to the seeded variables) or
a :class:`Jet` carrying value ``(N,)``, gradient ``(N, p)`` and optionally a
Hessian ``(N, p, p)``.  All helpers below accept either kind.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


class Jet:
    __slots__ = ("val", "grad", "hess")
    # make ndarray defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, val, grad, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @property
    def nvars(self):
        return self.grad.shape[1]

    @property
    def order(self):
        return 1 if self.hess is None else 2

    @classmethod
    def variables(cls, values, order=2):
        """Identity-seeded jets for the columns of ``values`` (shape (N, p))."""
        values = np.asarray(values, dtype=float)
        n, p = values.shape
        out = []
        for i in range(p):
            grad = np.zeros((n, p))
            grad[:, i] = 1.0
            hess = np.zeros((n, p, p)) if order >= 2 else None
            out.append(cls(values[:, i].copy(), grad, hess))
        return out

    @classmethod
    def constant(cls, val, p, order=2):
        n = val.shape[0]
        return cls(val, np.zeros((n, p)), np.zeros((n, p, p)) if order >= 2 else None)

    def chain(self, f0, f1, f2=None):
        """Compose a scalar function with derivatives f1 = f', f2 = f'' (evaluated at self.val)."""
        grad = f1[:, None] * self.grad
        hess = None
        if self.hess is not None:
            hess = f1[:, None, None] * self.hess
            if f2 is not None:
                hess = hess + f2[:, None, None] * (self.grad[:, :, None] * self.grad[:, None, :])
        return Jet(f0, grad, hess)

    def take(self, idx):
        return Jet(self.val[idx], self.grad[idx], None if self.hess is None else self.hess[idx])

    def tile(self, reps):
        return Jet(
            np.tile(self.val, reps),
            np.tile(self.grad, (reps, 1)),
            None if self.hess is None else np.tile(self.hess, (reps, 1, 1)),
        )

    def scale(self, c):
        """Multiply by a per-sample array (or float) treated as a constant."""
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            return Jet(self.val * c, self.grad * c, None if self.hess is None else self.hess * c)
        return Jet(
            self.val * c,
            self.grad * c[:, None],
            None if self.hess is None else self.hess * c[:, None, None],
        )

    # ---- arithmetic -------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, _hadd(self.hess, other.hess))
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        a, b = self, other
        grad = a.grad * b.val[:, None] + b.grad * a.val[:, None]
        hess = None
        if a.hess is not None and b.hess is not None:
            cross = a.grad[:, :, None] * b.grad[:, None, :]
            hess = (
                a.hess * b.val[:, None, None]
                + b.hess * a.val[:, None, None]
                + cross
                + np.swapaxes(cross, 1, 2)
            )
        return Jet(a.val * b.val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, e):
        return power(self, e)

    def __repr__(self):
        return f"Jet(n={self.val.shape[0]}, p={self.nvars}, order={self.order})"


def _hadd(a, b):
    if a is None or b is None:
        return None
    return a + b


def is_jet(a):
    return isinstance(a, Jet)


def value(a):
    return a.val if isinstance(a, Jet) else a


def as_jet(a, p, order=2):
    if isinstance(a, Jet):
        return a
    return Jet.constant(np.asarray(a, dtype=float), p, order)


def take(a, idx):
    return a.take(idx) if isinstance(a, Jet) else a[idx]


def tile(a, reps):
    return a.tile(reps) if isinstance(a, Jet) else np.tile(a, reps)


def _check(cond, message):
    if np.any(cond):
        raise DomainError(message)


def reciprocal(a):
    v = value(a)
    _check(v == 0.0, "division by zero")
    inv = 1.0 / v
    if not isinstance(a, Jet):
        return inv
    return a.chain(inv, -inv * inv, 2.0 * inv * inv * inv)


def power(a, e):
    e = int(e)
    if e < 0:
        return reciprocal(power(a, -e))
    v = value(a)
    f0 = v**e if e > 0 else np.ones_like(v)
    if not isinstance(a, Jet):
        return f0
    f1 = e * v ** (e - 1) if e >= 1 else np.zeros_like(v)
    f2 = e * (e - 1) * v ** (e - 2) if e >= 2 else np.zeros_like(v)
    return a.chain(f0, f1, f2)


def sin(a):
    v = value(a)
    s = np.sin(v)
    if not isinstance(a, Jet):
        return s
    return a.chain(s, np.cos(v), -s)


def cos(a):
    v = value(a)
    c = np.cos(v)
    if not isinstance(a, Jet):
        return c
    return a.chain(c, -np.sin(v), -c)


def exp(a):
    v = value(a)
    e = np.exp(v)
    if not isinstance(a, Jet):
        return e
    return a.chain(e, e, e)


def log(a):
    v = value(a)
    _check(v <= 0.0, "log of non-positive argument")
    lv = np.log(v)
    if not isinstance(a, Jet):
        return lv
    inv = 1.0 / v
    return a.chain(lv, inv, -inv * inv)


def sqrt(a):
    v = value(a)
    if isinstance(a, Jet):
        # derivative blows up at 0
        _check(v <= 0.0, "sqrt of non-positive argument")
    else:
        _check(v < 0.0, "sqrt of negative argument")
    r = np.sqrt(v)
    if not isinstance(a, Jet):
        return r
    return a.chain(r, 0.5 / r, -0.25 / (r * v))


def sqrt_positive(a):
    _check(value(a) <= 0.0, "sqrt-positive argument lost positivity")
    return sqrt(a)


def ramp_power(a, e):
    """max(0, a)**e; C^(e-1) across a = 0."""
    v = value(a)
    pos = np.maximum(v, 0.0)
    f0 = pos**e
    if not isinstance(a, Jet):
        return f0
    f1 = e * pos ** (e - 1)
    f2 = e * (e - 1) * pos ** (e - 2) if e >= 2 else np.zeros_like(v)
    return a.chain(f0, f1, f2)


def lincomb(coeffs, xs, offset=0.0):
    """sum_c coeffs[c] * xs[c] + offset, skipping exact-zero coefficients."""
    out = None
    for c, x in zip(coeffs, xs):
        if c == 0.0:
            continue
        term = x * float(c)
        out = term if out is None else out + term
    if out is None:
        n = value(xs[0]).shape[0] if xs else 1
        return np.full(n, float(offset))
    if offset != 0.0:
        out = out + float(offset)
    return out


def unpack(a, p, order=2):
    """(val, grad, hess) arrays for a scalar that may be a plain array."""
    if isinstance(a, Jet):
        hess = a.hess if a.hess is not None else np.zeros(a.grad.shape + (p,))
        return a.val, a.grad, hess
    n = a.shape[0]
    return a, np.zeros((n, p)), np.zeros((n, p, p))


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a scalar function at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def dimension(self):
        return self.gradient.shape[0]
