"""Superpositions of displaced number states evenly spaced on a circle.

The target state is

    |Psi> = Norm * sum_{r=1}^{N} D(beta_r) |n>,   beta_r = |beta| exp(i theta_r),

with theta_r = theta1 + 2 pi (r - 1) / N.  The default theta1 = 2 pi / N gives
theta_r = 2 pi r / N, the orientation produced by the pulse protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStateError, TruncationError, UsageError
from .specfun import laguerre


@dataclass(frozen=True)
class SuperpositionSpec:
    n: int
    N: int
    beta_abs: float
    theta1: float | None = None

    def __post_init__(self):
        if self.n < 0:
            raise UsageError(f"excitation degree must be >= 0, got {self.n}")
        if self.N < 1:
            raise UsageError(f"component count must be >= 1, got {self.N}")
        if self.beta_abs < 0:
            raise UsageError(f"|beta| must be >= 0, got {self.beta_abs}")
        if self.theta1 is None:
            object.__setattr__(self, "theta1", 2.0 * math.pi / self.N)

    @classmethod
    def from_cycles(cls, n, ell, beta_abs, theta1=None):
        """Spec with N = 2^(ell+1) components, as reached after ell cycles."""
        return cls(n=n, N=2 ** (ell + 1), beta_abs=beta_abs, theta1=theta1)

    @property
    def half_angle(self):
        return math.pi / self.N

    @property
    def phases(self):
        return self.theta1 + 2.0 * math.pi * np.arange(self.N) / self.N

    @property
    def betas(self):
        return self.beta_abs * np.exp(1j * self.phases)

    @property
    def ell(self):
        """Cycle count if N is a power of two >= 2, else None."""
        k = self.N.bit_length() - 1
        return k - 1 if self.N >= 2 and 2 ** k == self.N else None

    def to_dict(self):
        return {"n": self.n, "N": self.N, "beta_abs": self.beta_abs, "theta1": self.theta1}


@dataclass(frozen=True)
class FockVector:
    amps: np.ndarray
    loss: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @property
    def dim(self):
        return self.amps.shape[0]

    @property
    def norm2(self):
        return float(np.vdot(self.amps, self.amps).real)

    def populations(self):
        return np.abs(self.amps) ** 2

    def density(self):
        return np.outer(self.amps, self.amps.conj())

    def factorial_moment(self, k):
        """<a^dagger^k a^k> = sum_m m!/(m-k)! |c_m|^2."""
        m = np.arange(self.dim)
        ff = np.ones(self.dim)
        for j in range(k):
            ff = ff * np.clip(m - j, 0, None)
        return float(np.sum(ff * self.populations()))


def default_dim(spec_or_n, beta_abs=None):
    """Truncation rule ceil(|b|^2) + 6 ceil(|b|) + n + 10."""
    if isinstance(spec_or_n, SuperpositionSpec):
        n, b = spec_or_n.n, spec_or_n.beta_abs
    else:
        n, b = spec_or_n, beta_abs
    return int(math.ceil(b * b) + 6 * math.ceil(b) + n + 10)


def normalization_constant(spec):
    """Norm such that Norm * sum_r D(beta_r)|n> has unit length."""
    N, b2 = spec.N, spec.beta_abs ** 2
    phi = spec.half_angle
    r = np.arange(1, N)
    ang = (N - r) * phi
    s2 = np.sin(ang) ** 2
    terms = 2 * r * np.exp(-2 * b2 * s2) * np.cos(b2 * np.sin(2 * ang)) * laguerre(spec.n, 0, 4 * b2 * s2)
    terms = terms[np.argsort(np.abs(terms))]
    radicand = N + float(np.sum(terms))
    if radicand <= 0:
        raise DegenerateStateError(f"normalization radicand {radicand:g} is not positive")
    return radicand ** -0.5


def displaced_number_overlap(m, n, beta):
    """Matrix element <m| D(beta) |n>, vectorised over ``m``.

    For m >= n:  sqrt(n!/m!) beta^(m-n) exp(-|beta|^2/2) L_n^(m-n)(|beta|^2)
    For m <  n:  sqrt(m!/n!) (-beta*)^(n-m) exp(-|beta|^2/2) L_m^(n-m)(|beta|^2)
    with D(beta) = exp(beta a^dagger - beta* a).
    """
    m_arr = np.atleast_1d(np.asarray(m, dtype=int))
    beta = complex(beta)
    b2 = abs(beta) ** 2
    out = np.zeros(m_arr.shape, dtype=complex)
    if beta == 0:
        out[m_arr == n] = 1.0
        return out if np.ndim(m) else out[0]
    logb = math.log(abs(beta))
    ph = beta / abs(beta)
    lg = np.vectorize(math.lgamma)

    up = m_arr >= n
    if np.any(up):
        mu = m_arr[up]
        k = mu - n
        logmag = 0.5 * (math.lgamma(n + 1) - lg(mu + 1)) + k * logb - b2 / 2
        out[up] = np.exp(logmag) * ph ** k * laguerre(n, k.astype(float), b2)
    for i in np.flatnonzero(~up):
        mm = int(m_arr[i])
        k = n - mm
        logmag = 0.5 * (math.lgamma(mm + 1) - math.lgamma(n + 1)) + k * logb - b2 / 2
        out[i] = math.exp(logmag) * (-ph.conjugate()) ** k * laguerre(mm, float(k), b2)
    return out if np.ndim(m) else out[0]


def unnormalized_amplitudes(spec, dim):
    m = np.arange(dim)
    return sum(displaced_number_overlap(m, spec.n, b) for b in spec.betas)


def build_fock_vector(spec, dim=None, max_loss=1e-8):
    """Truncated Fock amplitudes of the normalized superposition.

    ``loss`` on the result is 1 - ||amps||^2.  Raises TruncationError when it
    exceeds ``max_loss``.
    """
    if dim is None:
        dim = default_dim(spec)
    if dim <= spec.n:
        raise TruncationError(f"dim={dim} does not contain |{spec.n}>", spec.n + 1)
    amps = normalization_constant(spec) * unnormalized_amplitudes(spec, dim)
    loss = 1.0 - float(np.vdot(amps, amps).real)
    if loss > max_loss:
        raise TruncationError(
            f"truncation loss {loss:.3e} exceeds {max_loss:.1e} at dim={dim}",
            required_dim(spec, max_loss),
        )
    return FockVector(amps, loss=loss)


def required_dim(spec, max_loss=1e-8):
    """Smallest dim whose truncation loss stays below ``max_loss``."""
    big = 2 * default_dim(spec) + 20
    amps = normalization_constant(spec) * unnormalized_amplitudes(spec, big)
    tail = 1.0 - np.cumsum(np.abs(amps) ** 2)
    ok = np.flatnonzero(tail <= max_loss)
    return int(ok[0]) + 1 if ok.size else big


def coherent_vector(beta, dim):
    """Truncated coherent state |beta>."""
    return FockVector(displaced_number_overlap(np.arange(dim), 0, beta))


def number_vector(n, dim):
    a = np.zeros(dim, dtype=complex)
    a[n] = 1.0
    return FockVector(a)
