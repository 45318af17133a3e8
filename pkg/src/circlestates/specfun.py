"""Special functions and bivariate truncated Taylor arithmetic.

The jets here are expansions about the point (x, y) = (1, 1).  A jet stores
normalised Taylor coefficients ``c[i, j] = d^{i+j} f / dx^i dy^j / (i! j!)``
so that mixed partial derivatives are recovered with :func:`jet_extract`.

Jets carry an optional leading batch shape: ``coeffs`` has shape
``batch + (order_x + 1, order_y + 1)``.  All arithmetic broadcasts over the
batch, which is how the quadruple sums of the coherence module stay cheap.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SingularJetError, UsageError

# |z| above which bessel_i switches from the power series to the asymptotic form
BESSEL_SWITCH = 20.0
_SERIES_TERMS = 90
_ASYMPTOTIC_TERMS = 45
# series cancellation ratio above which the periodic trapezoid rule takes over
_MAX_SERIES_LOSS = 1e3
_TRAPEZOID_NODES = 128


# ---------------------------------------------------------------------------
# Laguerre polynomials
# ---------------------------------------------------------------------------

def laguerre(n, alpha, z):
    """Generalized Laguerre polynomial L_n^(alpha)(z) by forward recurrence.

    ``z`` and ``alpha`` broadcast against each other; ``alpha`` must exceed -1.
    """
    if n < 0:
        raise UsageError(f"laguerre degree must be non-negative, got {n}")
    if np.any(np.asarray(alpha) <= -1):
        raise UsageError(f"laguerre alpha must exceed -1, got {alpha}")
    z, alpha = np.broadcast_arrays(np.asarray(z), np.asarray(alpha))
    prev = np.ones(z.shape, dtype=np.result_type(z, float))
    if n == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + alpha - z
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - z) * cur - (k + alpha) * prev) / (k + 1)
    return cur[()] if np.ndim(cur) == 0 else cur


def laguerre_coefficients(n, alpha=0.0):
    """Power-series coefficients of L_n^(alpha): ``L = sum_k c[k] z**k``."""
    k = np.arange(n + 1)
    log_binom = np.array([
        math.lgamma(n + alpha + 1) - math.lgamma(n - kk + 1) - math.lgamma(alpha + kk + 1)
        for kk in k
    ])
    fact = np.array([math.lgamma(kk + 1) for kk in k])
    return (-1.0) ** k * np.exp(log_binom - fact)


# ---------------------------------------------------------------------------
# Modified Bessel functions of integer order
# ---------------------------------------------------------------------------

def _scaled_series(nu, w):
    """sum_k (w/4)^k / (k! (k+nu)!), i.e. I_nu(z) / (z/2)^nu with w = z**2.

    Also returns the same sum taken over |terms|; their ratio measures the
    cancellation the series suffered.
    """
    w = np.asarray(w, dtype=complex)
    term = np.full(w.shape, 1.0 / math.factorial(nu), dtype=complex)
    total = term.copy()
    mag = np.abs(total)
    q = w / 4.0
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + nu))
        total = total + term
        mag = mag + np.abs(term)
        if np.all(np.abs(term) <= 1e-18 * mag):
            break
    return total, mag


def _trapezoid(nu, z):
    """(1/2pi) int_0^{2pi} exp(z cos t) cos(nu t) dt on a periodic grid."""
    t = 2.0 * np.pi * np.arange(_TRAPEZOID_NODES) / _TRAPEZOID_NODES
    z = np.asarray(z, dtype=complex)
    vals = np.exp(z[..., None] * np.cos(t)) * np.cos(nu * t)
    return vals.mean(axis=-1)


def _series_region(nu, z):
    s, mag = _scaled_series(nu, z * z)
    out = (z / 2.0) ** nu * s
    lossy = mag > _MAX_SERIES_LOSS * np.abs(s)
    if np.any(lossy):
        out[lossy] = _trapezoid(nu, z[lossy])
    return out


def _asymptotic(nu, z):
    """Large-|z| expansion for Re z >= 0, including the subdominant e^{-z} part."""
    z = np.asarray(z, dtype=complex)
    mu = 4.0 * nu * nu
    s_alt = np.ones_like(z)
    s_pos = np.ones_like(z)
    term = np.ones_like(z)
    best = np.abs(term)
    done = np.zeros(z.shape, dtype=bool)
    for k in range(1, _ASYMPTOTIC_TERMS):
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(nxt)
        # optimal truncation: stop each entry once its terms start to grow
        done |= mag > best
        best = np.where(done, best, mag)
        term = np.where(done, term, nxt)
        s_alt = np.where(done, s_alt, s_alt + (-1) ** k * nxt)
        s_pos = np.where(done, s_pos, s_pos + nxt)
    pref = 1.0 / np.sqrt(2.0 * np.pi * z)
    sign = np.where(np.imag(z) >= 0, 1.0, -1.0)
    sub = sign * 1j * np.exp(sign * 1j * nu * np.pi) * np.exp(-z) * pref * s_pos
    return np.exp(z) * pref * s_alt + sub


def bessel_i(nu, z):
    """Modified Bessel function I_nu(z) for integer nu >= 0 and complex z.

    Power series for |z| <= 20, asymptotic expansion beyond (after reflecting
    to Re z >= 0 through I_nu(-z) = (-1)^nu I_nu(z)).  Near the imaginary axis
    the series cancels badly; there the periodic trapezoid rule on
    (1/2pi) int exp(z cos t) cos(nu t) dt is used instead.
    """
    nu = abs(int(nu))
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) <= BESSEL_SWITCH
    if np.any(small):
        out[small] = _series_region(nu, z[small])
    if np.any(~small):
        zl = z[~small]
        flip = np.real(zl) < 0
        zr = np.where(flip, -zl, zl)
        val = _asymptotic(nu, zr)
        out[~small] = np.where(flip, (-1) ** nu * val, val)
    return out[()] if out.ndim == 0 else out


def bessel_i0(z):
    """I_0(z); see :func:`bessel_i`."""
    return bessel_i(0, z)


def bessel_i_over_power(nu, w):
    """I_nu(sqrt(w)) / sqrt(w)^nu, an entire function of w (branch free)."""
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) <= BESSEL_SWITCH ** 2
    if np.any(small):
        ws = w[small]
        s, mag = _scaled_series(nu, ws)
        vals = s / 2.0 ** nu
        lossy = mag > _MAX_SERIES_LOSS * np.abs(s)
        if np.any(lossy):
            z = np.sqrt(ws[lossy])
            vals[lossy] = _trapezoid(nu, z) / z ** nu
        out[small] = vals
    if np.any(~small):
        z = np.sqrt(w[~small])
        out[~small] = bessel_i(nu, z) / z ** nu
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Bivariate jets
# ---------------------------------------------------------------------------

class Jet2:
    """Truncated bivariate Taylor expansion about (1, 1), optionally batched."""

    __array_priority__ = 100

    def __init__(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.ndim < 2:
            raise UsageError("jet coefficients need at least two axes")
        if not np.all(np.isfinite(coeffs)):
            raise FloatingPointError("non-finite jet coefficient")
        self.coeffs = coeffs

    @property
    def order_x(self):
        return self.coeffs.shape[-2] - 1

    @property
    def order_y(self):
        return self.coeffs.shape[-1] - 1

    @property
    def orders(self):
        return self.order_x, self.order_y

    @property
    def batch_shape(self):
        return self.coeffs.shape[:-2]

    @property
    def constant(self):
        return self.coeffs[..., 0, 0]

    @classmethod
    def constant_jet(cls, value, order_x, order_y):
        value = np.asarray(value, dtype=complex)
        c = np.zeros(value.shape + (order_x + 1, order_y + 1), dtype=complex)
        c[..., 0, 0] = value
        return cls(c)

    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.orders != self.orders:
                raise UsageError(f"jet order mismatch: {self.orders} vs {other.orders}")
            return other
        return Jet2.constant_jet(other, *self.orders)

    def __add__(self, other):
        return jet_add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.coeffs)

    def __sub__(self, other):
        return jet_add(self, -self._coerce(other))

    def __rsub__(self, other):
        return jet_add(-self, other)

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return jet_mul(self, jet_compose_analytic("reciprocal", other))
        return jet_scale(self, 1.0 / np.asarray(other))

    def __rtruediv__(self, other):
        return jet_scale(jet_compose_analytic("reciprocal", self), other)

    def __pow__(self, m):
        return jet_compose_analytic("integer_power", self, m)

    def sum(self, axis=None):
        """Sum over batch axes (all of them by default)."""
        nb = len(self.batch_shape)
        if axis is None:
            axis = tuple(range(nb))
        return Jet2(self.coeffs.sum(axis=axis))

    def __getitem__(self, idx):
        return Jet2(self.coeffs[idx])

    def __repr__(self):
        return f"Jet2(orders={self.orders}, batch={self.batch_shape})"


def jet_from_variable(which, order_x, order_y):
    """Jet of f(x, y) = x or f(x, y) = y."""
    if order_x < 0 or order_y < 0:
        raise UsageError("jet orders must be non-negative")
    c = np.zeros((order_x + 1, order_y + 1), dtype=complex)
    c[0, 0] = 1.0
    if which == "x":
        if order_x >= 1:
            c[1, 0] = 1.0
    elif which == "y":
        if order_y >= 1:
            c[0, 1] = 1.0
    else:
        raise UsageError(f"unknown jet variable {which!r}")
    return Jet2(c)


def jet_add(a, b):
    if not isinstance(a, Jet2):
        a, b = b, a
    b = a._coerce(b)
    return Jet2(a.coeffs + b.coeffs)


def jet_scale(a, s):
    s = np.asarray(s)
    return Jet2(a.coeffs * s[..., None, None])


def jet_mul(a, b):
    """Truncated Cauchy product of two jets of equal orders."""
    b = a._coerce(b)
    ox, oy = a.orders
    ac, bc = np.broadcast_arrays(a.coeffs, b.coeffs)
    out = np.zeros(ac.shape, dtype=complex)
    for p in range(ox + 1):
        for q in range(oy + 1):
            apq = ac[..., p, q]
            if not np.any(apq):
                continue
            out[..., p:, q:] += apq[..., None, None] * bc[..., : ox + 1 - p, : oy + 1 - q]
    return Jet2(out)


def _taylor_coefficients(f, c, order, param=None):
    """f^{(k)}(c) / k! for k = 0..order, each with the batch shape of c."""
    c = np.asarray(c, dtype=complex)
    ks = range(order + 1)
    if f == "exp":
        e = np.exp(c)
        return [e / math.factorial(k) for k in ks]
    if f == "reciprocal":
        if np.any(c == 0):
            bad = c[c == 0].flat[0] if c.ndim else c
            raise SingularJetError(complex(bad))
        return [(-1.0) ** k / c ** (k + 1) for k in ks]
    if f == "integer_power":
        m = int(param)
        return [math.comb(m, k) * c ** (m - k) if k <= m else np.zeros_like(c) for k in ks]
    if f == "i0":
        bess = {j: bessel_i(j, c) for j in range(order + 1)}
        out = []
        for k in ks:
            s = sum(math.comb(k, j) * bess[abs(k - 2 * j)] for j in range(k + 1))
            out.append(s / (2.0 ** k * math.factorial(k)))
        return out
    if f == "i0_sqrt":
        # d^k/dw^k I0(sqrt w) = I_k(sqrt w) / (2 sqrt w)^k
        return [bessel_i_over_power(k, c) / (2.0 ** k * math.factorial(k)) for k in ks]
    raise UsageError(f"unsupported analytic function {f!r}")


def jet_compose_analytic(f, a, param=None):
    """Jet of f(a) for f in {exp, reciprocal, i0, i0_sqrt, integer_power, laguerre_n}.

    ``param`` is the exponent for ``integer_power`` and ``(n, alpha)`` (or just
    ``n``) for ``laguerre_n``.  Laguerre polynomials are expanded as their
    explicit finite sum, so truncation stays exact.
    """
    if f == "laguerre_n":
        n, alpha = (param, 0.0) if np.isscalar(param) else param
        coeffs = laguerre_coefficients(int(n), alpha)
        out = Jet2.constant_jet(np.full(a.batch_shape, coeffs[-1]), *a.orders)
        for ck in coeffs[-2::-1]:
            out = jet_mul(out, a) + ck
        return out
    ox, oy = a.orders
    order = ox + oy
    c0 = a.constant
    d = _taylor_coefficients(f, c0, order, param)
    h = Jet2(a.coeffs.copy())
    h.coeffs[..., 0, 0] = 0.0
    out = Jet2.constant_jet(d[order], ox, oy)
    for k in range(order - 1, -1, -1):
        out = jet_mul(out, h) + d[k]
    return out


def jet_extract(a, i, j):
    """Mixed partial derivative d^{i+j} f / dx^i dy^j at (1, 1)."""
    if not (0 <= i <= a.order_x and 0 <= j <= a.order_y):
        raise UsageError(f"derivative ({i}, {j}) outside jet orders {a.orders}")
    val = math.factorial(i) * math.factorial(j) * a.coeffs[..., i, j]
    return val[()] if np.ndim(val) == 0 else val


def exp(a):
    return jet_compose_analytic("exp", a)


def reciprocal(a):
    return jet_compose_analytic("reciprocal", a)
