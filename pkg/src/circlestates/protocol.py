"""Pulse protocol: line superposition, circle cycles, timings and probabilities.

Times are in microseconds and angular frequencies in rad/us throughout, so
the default Lambda = 2 pi corresponds to 2 pi / Lambda = 1 us.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ProtocolMismatchError, TruncationError, UsageError
from .specfun import laguerre
from .states import (
    FockVector,
    SuperpositionSpec,
    build_fock_vector,
    default_dim,
    displaced_number_overlap,
)


@dataclass(frozen=True)
class ProtocolParams:
    Lambda: float = 2.0 * math.pi
    eta: float = 0.1
    lambda_c: float = 2.0 * math.pi
    tau_d: float = 200.0
    phi_b: float = 0.0
    phi_r: float = 0.0

    def __post_init__(self):
        if self.Lambda <= 0:
            raise UsageError("Lambda must be positive")
        if self.eta <= 0 or self.lambda_c <= 0:
            raise UsageError("eta and lambda_c must be positive")
        if self.tau_d < 0:
            raise UsageError("tau_d must be non-negative")

    @property
    def Omega(self):
        return self.eta * self.lambda_c

    @property
    def theta(self):
        return 0.5 * (self.phi_b - self.phi_r)

    @property
    def varphi(self):
        return 0.5 * (self.phi_b + self.phi_r)

    def beta_at(self, t):
        """Displacement reached after a bichromatic pulse of length t."""
        return 1j * self.Omega * t * np.exp(-1j * self.theta)

    def to_dict(self):
        d = asdict(self)
        d.update(Omega=self.Omega, theta=self.theta, varphi=self.varphi)
        return d


@dataclass(frozen=True)
class SequencePlan:
    ell: int
    n: int
    kappa_sq: float
    pulse_durations: tuple
    T: float
    T_sum: float
    tau: float
    T_t: float
    beta: complex

    @property
    def kappa(self):
        return math.sqrt(self.kappa_sq)

    def to_dict(self):
        return {
            "ell": self.ell,
            "n": self.n,
            "kappa_sq": self.kappa_sq,
            "kappa": self.kappa,
            "pulse_durations_us": list(self.pulse_durations),
            "T_us": self.T,
            "T_sum_us": self.T_sum,
            "tau_us": self.tau,
            "T_t_us": self.T_t,
            "beta": [self.beta.real, self.beta.imag],
        }


def kappa_squared(n, ell):
    return 1.0 / (n + 2 ** (ell + 2))


def line_probability(n, beta_abs):
    """No-fluorescence probability after the two-component line step."""
    b2 = np.asarray(beta_abs, dtype=float) ** 2
    return 0.5 * (1.0 + np.exp(-2.0 * b2) * laguerre(n, 0, 4.0 * b2))


def circle_probability(n, ell, beta_abs):
    """Probability of ending in the upper level after the full sequence."""
    if ell < 0:
        raise UsageError("ell must be >= 0")
    M = 2 ** (ell + 1)
    b2 = float(beta_abs) ** 2
    r = np.arange(1, M)
    s = np.sin(np.pi * r / M)
    terms = r * np.exp(-2 * b2 * s**2) * np.cos(b2 * np.sin(2 * np.pi * r / M)) * laguerre(n, 0, 4 * b2 * s**2)
    terms = terms[np.argsort(np.abs(terms))]
    return 1.0 / M + float(np.sum(terms)) / 2 ** (2 * ell + 1)


def plan_sequence(params, n, ell, beta):
    """Pulse durations, total pulse time and total preparation time."""
    if ell < 0:
        raise UsageError("ell must be >= 0")
    k2 = kappa_squared(n, ell)
    lam_bar = k2 * params.Lambda
    durations = tuple(math.pi / (2 ** (k + 1) * lam_bar) for k in range(1, ell + 1))
    T = math.pi / (2 * params.Lambda) * (n + 2 ** (ell + 2)) * (1 - 2.0 ** -ell)
    tau = abs(beta) / params.Omega
    T_t = T + ell * params.tau_d + (tau + params.tau_d)
    return SequencePlan(
        ell=ell, n=n, kappa_sq=k2, pulse_durations=durations, T=T,
        T_sum=math.fsum(durations), tau=tau, T_t=T_t, beta=complex(beta),
    )


def step2_state(n, beta, varphi, dim, max_loss=1e-8):
    """Vibronic state after the bichromatic pulse, as (up, down) branches.

    up   =  (D(beta) + D(-beta)) |n> / 2
    down = -exp(i varphi) (D(beta) - D(-beta)) |n> / 2
    """
    if dim <= n:
        raise TruncationError(f"dim={dim} does not contain |{n}>", n + 1)
    m = np.arange(dim)
    dp = displaced_number_overlap(m, n, beta)
    dm = displaced_number_overlap(m, n, -beta)
    up = 0.5 * (dp + dm)
    down = -0.5 * np.exp(1j * varphi) * (dp - dm)
    loss = 1.0 - float(np.vdot(up, up).real + np.vdot(down, down).real)
    if loss > max_loss:
        need = default_dim(n, abs(beta))
        while 1.0 - np.sum(np.abs(displaced_number_overlap(np.arange(need), n, abs(beta))) ** 2) > max_loss:
            need += 4
        raise TruncationError(f"vibronic truncation loss {loss:.3e} at dim={dim}", need)
    return FockVector(up, loss=loss), FockVector(down, loss=loss)


def quadrature_operator(theta, dim):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return (a * np.exp(1j * theta) + a.T * np.exp(-1j * theta)) / math.sqrt(2)


def step2_state_operator(n, beta, varphi, dim, pad=60):
    """Same as :func:`step2_state` but by applying the cos/sin evolution
    operator to |n>|up> through an eigendecomposition of the rotated quadrature
    in a padded truncated basis."""
    omega_t = abs(beta)
    theta = math.pi / 2 - np.angle(beta) if omega_t > 0 else 0.0
    big = dim + pad + 2 * int(math.ceil(omega_t)) ** 2
    evals, evecs = np.linalg.eigh(quadrature_operator(theta, big))
    start = np.zeros(big)
    start[n] = 1.0
    proj = evecs.conj().T @ start
    arg = math.sqrt(2) * omega_t * evals
    up = evecs @ (np.cos(arg) * proj)
    down = -1j * np.exp(1j * varphi) * (evecs @ (np.sin(arg) * proj))
    return FockVector(up[:dim]), FockVector(down[:dim])


def carrier_validity_ratio(state, kappa):
    """(kappa^2 / 4) <a^dag^2 a^2> / <a^dag a>; small values mean the
    linearised carrier Hamiltonian is trustworthy."""
    if isinstance(state, SuperpositionSpec):
        state = build_fock_vector(state)
    nbar = state.factorial_moment(1)
    if nbar <= 1e-15:
        raise UsageError("carrier validity ratio undefined for the vacuum")
    return kappa**2 / 4.0 * state.factorial_moment(2) / nbar


def target_orientation(beta, ell):
    """theta1 of the superposition reached from displacement ``beta``."""
    N = 2 ** (ell + 1)
    base = float(np.angle(beta)) if beta != 0 else 0.0
    return base + (math.pi / N if ell >= 1 else 0.0)


@dataclass
class SequenceResult:
    final: FockVector
    fidelity: float
    line_probability: float
    cycle_probabilities: list = field(default_factory=list)
    target: FockVector | None = None

    @property
    def cumulative_probability(self):
        return float(np.prod(self.cycle_probabilities)) if self.cycle_probabilities else 1.0

    @property
    def total_probability(self):
        return self.line_probability * self.cumulative_probability


def run_sequence_oracle(params, n, ell, beta, dim=None, min_fidelity=1 - 1e-8):
    """State-vector simulation of the line step and ``ell`` carrier cycles.

    Each cycle applies exp[-i t_k (Lambda - Lambda_bar n) sigma_x] exactly (it
    is diagonal in Fock x sigma_x eigenbasis) and keeps the |up> branch, then
    renormalises.  The final motional state is compared with the target
    superposition.
    """
    beta = complex(beta)
    if dim is None:
        dim = default_dim(n, abs(beta) * 1.0) + 20
    plan = plan_sequence(params, n, ell, beta)
    up, _ = step2_state(n, beta, params.varphi, dim)
    p_line = up.norm2
    psi = up.amps / math.sqrt(p_line)
    lam_bar = plan.kappa_sq * params.Lambda
    m = np.arange(dim)
    probs = []
    for t_k in plan.pulse_durations:
        psi = np.cos(t_k * (params.Lambda - lam_bar * m)) * psi
        p = float(np.vdot(psi, psi).real)
        probs.append(p)
        psi = psi / math.sqrt(p)
    spec = SuperpositionSpec(n=n, N=2 ** (ell + 1), beta_abs=abs(beta),
                             theta1=target_orientation(beta, ell))
    target = build_fock_vector(spec, dim)
    fid = abs(np.vdot(target.amps, psi)) ** 2 / target.norm2
    result = SequenceResult(FockVector(psi), fid, p_line, probs, target)
    if fid < min_fidelity:
        raise ProtocolMismatchError(f"sequence fidelity {fid:.12f} below {min_fidelity}")
    return result
