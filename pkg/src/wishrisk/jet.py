"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` in ``d`` formal variables ``nu_1..nu_d`` stores the Taylor
coefficients ``c[k_1, ..., k_d]`` for ``k_i <= orders[i]`` and, optionally,
``sum(k) <= max_degree``. Both truncations are ideals, so products stay exact
on the retained coefficients. Coefficient values may be scalars, batches or
batches of matrices; the coefficient axes always come first.

The q-th mixed derivative at ``nu = 0`` is ``c[q] * prod(q_i!)``.
"""

from functools import lru_cache
from math import factorial

import numpy as np

from . import matcore


@lru_cache(maxsize=None)
def _index_set(orders, max_degree):
    idx = [k for k in np.ndindex(*[q + 1 for q in orders]) if sum(k) <= max_degree]
    return tuple(idx)


@lru_cache(maxsize=None)
def _product_pairs(orders, max_degree):
    """For every retained multi-index k, the pairs (i, k - i) with i <= k."""
    pairs = []
    for k in _index_set(orders, max_degree):
        terms = []
        for i in np.ndindex(*[kk + 1 for kk in k]):
            j = tuple(a - b for a, b in zip(k, i))
            terms.append((i, j))
        pairs.append((k, tuple(terms)))
    return tuple(pairs)


class Jet:
    __slots__ = ("coeffs", "orders", "max_degree")
    # Make ndarray operators defer to the reflected Jet methods.
    __array_ufunc__ = None

    def __init__(self, coeffs, orders, max_degree=None):
        self.orders = tuple(int(q) for q in orders)
        total = sum(self.orders)
        self.max_degree = total if max_degree is None else min(int(max_degree), total)
        self.coeffs = np.asarray(coeffs)
        expected = tuple(q + 1 for q in self.orders)
        if self.coeffs.shape[: len(expected)] != expected:
            raise ValueError(f"coefficient array shape {self.coeffs.shape} does not "
                             f"start with {expected}")

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, value, orders, max_degree=None):
        value = np.asarray(value)
        orders = tuple(orders)
        c = np.zeros(tuple(q + 1 for q in orders) + value.shape,
                     dtype=np.result_type(value, float))
        c[(0,) * len(orders)] = value
        return cls(c, orders, max_degree)

    @classmethod
    def linear(cls, value, directions, orders, max_degree=None):
        """``value + sum_i nu_i * directions[i]``."""
        value = np.asarray(value)
        dirs = [np.asarray(d) for d in directions]
        shape = np.broadcast_shapes(value.shape, *[d.shape for d in dirs])
        dtype = np.result_type(value, *dirs, float)
        orders = tuple(orders)
        if len(dirs) != len(orders):
            raise ValueError("one direction per formal variable is required")
        c = np.zeros(tuple(q + 1 for q in orders) + shape, dtype=dtype)
        c[(0,) * len(orders)] = value
        for i, d in enumerate(dirs):
            if orders[i] >= 1:
                k = [0] * len(orders)
                k[i] = 1
                c[tuple(k)] = d
        return cls(c, orders, max_degree)

    def _like(self, coeffs):
        return Jet(coeffs, self.orders, self.max_degree)

    # accessors --------------------------------------------------------------
    @property
    def nvars(self):
        return len(self.orders)

    @property
    def value(self):
        return self.coeffs[(0,) * self.nvars]

    def __getitem__(self, k):
        return self.coeffs[tuple(k)]

    def derivative(self, k):
        k = tuple(k)
        scale = 1
        for q in k:
            scale *= factorial(q)
        return self.coeffs[k] * scale

    def indices(self):
        return _index_set(self.orders, self.max_degree)

    def nilpotent(self):
        c = self.coeffs.copy()
        c[(0,) * self.nvars] = 0
        return self._like(c)

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.orders != self.orders:
                raise ValueError("jets with different truncation orders")
            return other
        return Jet.constant(other, self.orders, self.max_degree)

    def __add__(self, other):
        other = self._coerce(other)
        a, b = _align(self.coeffs, other.coeffs, self.nvars)
        return Jet(a + b, self.orders, min(self.max_degree, other.max_degree))

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Jet):
            return _convolve(self, other, np.multiply)
        other = np.asarray(other)
        pad = other.reshape((1,) * self.nvars + other.shape)
        return self._like(self.coeffs * pad)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def trace(self):
        return self._like(np.trace(self.coeffs, axis1=-2, axis2=-1))

    def exp(self):
        """Exponential of a scalar(-batch) jet."""
        c0 = self.value
        e = self.nilpotent()
        out = Jet.constant(np.ones_like(c0), self.orders, self.max_degree)
        term = out
        for k in range(1, self.max_degree + 1):
            term = term * e * (1.0 / k)
            out = out + term
        return out * np.exp(c0)

    def inv(self):
        """Matrix inverse by the Neumann series of the nilpotent part."""
        m0inv = matcore.inv(self.value)
        e = matmul(m0inv, self.nilpotent())
        out = Jet.constant(m0inv, self.orders, self.max_degree)
        power = None
        for _ in range(self.max_degree):
            power = -e if power is None else matmul(power, -e)
            out = out + matmul(power, m0inv)
        return out

    def logdet(self, logdet0=None):
        """``log det`` of a matrix jet; ``logdet0`` overrides the constant term's branch."""
        m0 = self.value
        if logdet0 is None:
            logdet0 = matcore.logdet(m0)
        e = matmul(matcore.inv(m0), self.nilpotent())
        out = Jet.constant(np.asarray(logdet0, dtype=complex), self.orders, self.max_degree)
        power = None
        for k in range(1, self.max_degree + 1):
            power = e if power is None else matmul(power, e)
            sign = 1.0 if k % 2 else -1.0
            out = out + power.trace() * (sign / k)
        return out


def _align(a, b, nvars):
    """Insert singleton axes after the coefficient axes so value shapes broadcast."""
    da, db = a.ndim - nvars, b.ndim - nvars
    if da < db:
        a = a.reshape(a.shape[:nvars] + (1,) * (db - da) + a.shape[nvars:])
    elif db < da:
        b = b.reshape(b.shape[:nvars] + (1,) * (da - db) + b.shape[nvars:])
    return a, b


def _convolve(a, b, op):
    orders, deg = a.orders, min(a.max_degree, b.max_degree)
    sample = op(a.value, b.value)
    out = np.zeros(tuple(q + 1 for q in orders) + np.shape(sample),
                   dtype=np.result_type(a.coeffs, b.coeffs))
    for k, terms in _product_pairs(orders, deg):
        acc = 0
        for i, j in terms:
            acc = acc + op(a.coeffs[i], b.coeffs[j])
        out[k] = acc
    return Jet(out, orders, deg)


def matmul(a, b):
    """Matrix product where either operand may be a plain array."""
    if isinstance(a, Jet) and isinstance(b, Jet):
        return _convolve(a, b, np.matmul)
    if isinstance(a, Jet):
        return a._like(np.matmul(a.coeffs, np.asarray(b)))
    if isinstance(b, Jet):
        return b._like(np.matmul(np.asarray(a), b.coeffs))
    return np.matmul(a, b)
