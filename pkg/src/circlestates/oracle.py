"""Brute-force reference machinery.

Everything here is deliberately independent of the closed forms elsewhere in
the package: a truncated Fock-basis master-equation integrator, Wigner
reconstruction from a density matrix, and tensor Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_genlaguerre, gammaln, i0e

from .errors import BudgetExhaustedError, StepSizeUnderflowError, TruncationError, UsageError
from .phasespace import CompactTime, wigner0

LEAK_TOL = 1e-8


@dataclass(frozen=True)
class FockDensity:
    rho: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise UsageError("density matrix must be square")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def from_vector(cls, vec):
        amps = getattr(vec, "amps", vec)
        amps = np.asarray(amps, dtype=complex)
        return cls(np.outer(amps, amps.conj()))

    @classmethod
    def thermal(cls, nbar, dim):
        m = np.arange(dim)
        return cls(np.diag(nbar**m / (1 + nbar) ** (m + 1)))

    @property
    def dim(self):
        return self.rho.shape[0]

    def check(self, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-8):
        """Raise ValueError if the matrix is not a valid density operator."""
        h = np.abs(self.rho - self.rho.conj().T).max()
        tr = abs(np.trace(self.rho) - 1)
        ev = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min()
        if h > herm_tol or tr > trace_tol or ev < -eig_tol:
            raise ValueError(f"invalid density: hermiticity {h:.2e}, trace {tr:.2e}, min eig {ev:.2e}")
        return self


def dissipator(rho, nbar):
    """Thermal damping part of the master equation, per unit gamma.

    (nbar+1)(2 a rho a^+ - n rho - rho n) + nbar(2 a^+ rho a - a a^+ rho - rho a a^+)
    with the truncated ladder operators, so the trace is preserved exactly.
    """
    dim = rho.shape[0]
    m = np.arange(dim, dtype=float)
    sq = np.sqrt(m[1:])
    aa_dag = np.append(m[1:], 0.0)
    out = -(nbar + 1) * (m[:, None] + m[None, :]) * rho
    out -= nbar * (aa_dag[:, None] + aa_dag[None, :]) * rho
    out[:-1, :-1] += 2 * (nbar + 1) * sq[:, None] * sq[None, :] * rho[1:, 1:]
    out[1:, 1:] += 2 * nbar * sq[:, None] * sq[None, :] * rho[:-1, :-1]
    return out


def _rk4(rho, h, steps, nbar):
    top = 0.0
    for _ in range(steps):
        k1 = dissipator(rho, nbar)
        k2 = dissipator(rho + 0.5 * h * k1, nbar)
        k3 = dissipator(rho + 0.5 * h * k2, nbar)
        k4 = dissipator(rho + h * k3, nbar)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        top = max(top, abs(rho[-1, -1]))
    return rho, top


def evolve_density(rho0, res, t, tol=1e-9, max_steps=2**20):
    """Integrate the damped-oscillator master equation from 0 to ``t``.

    The free rotation is removed analytically (the dissipator commutes with
    it) and restored at the end; the dissipator is integrated with classic
    RK4.  The step count doubles until the Richardson estimate of the global
    error falls below ``tol``.
    """
    if not isinstance(rho0, FockDensity):
        rho0 = FockDensity(rho0)
    if t < 0:
        raise UsageError("time must be non-negative")
    rho = rho0.rho.copy()
    dim = rho0.dim
    if t == 0:
        return FockDensity(rho, {"steps": 0, "error": 0.0, "trace_defect": abs(np.trace(rho) - 1)})
    g, nb = res.gamma, res.nbar
    gt = g * t
    stiff = 4 * (2 * nb + 1) * dim
    steps = max(8, int(math.ceil(gt * stiff / 2.0)))
    coarse, _ = _rk4(rho, gt / steps, steps, nb)
    while True:
        if 2 * steps > max_steps:
            raise StepSizeUnderflowError(f"step count exceeded {max_steps} before reaching tol={tol}")
        fine, top = _rk4(rho, gt / (2 * steps), 2 * steps, nb)
        err = np.abs(fine - coarse).max() / 15.0
        steps *= 2
        if err <= tol:
            break
        coarse = fine
    if top > LEAK_TOL:
        raise TruncationError(f"population {top:.2e} reached the truncation edge", int(1.5 * dim) + 10)
    m = np.arange(dim)
    fine = fine * np.exp(-1j * res.omega0 * t * (m[:, None] - m[None, :]))
    fine = 0.5 * (fine + fine.conj().T)
    return FockDensity(fine, {"steps": steps, "error": err, "edge_population": top,
                              "trace_defect": abs(np.trace(fine).real - 1)})


def wigner_from_density(rho, p, q):
    """W(p, q) = sum_{m,k} rho_mk W[|m><k|](p, q), normalised to integrate to 1.

    For m >= k the kernel is
    (-1)^k / pi sqrt(k!/m!) (sqrt2 z^*)^(m-k) exp(-|z|^2) L_k^(m-k)(2|z|^2), z = q + i p.
    """
    if isinstance(rho, FockDensity):
        rho = rho.rho
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    z = q + 1j * p
    x = 2 * np.abs(z) ** 2
    gauss = np.exp(-np.abs(z) ** 2) / math.pi
    out = np.zeros(p.shape)
    dim = rho.shape[0]
    logz = np.log(np.maximum(np.abs(z), 1e-300))
    phase = np.exp(-1j * np.angle(z))
    for d in range(dim):
        k = np.arange(dim - d)
        coeff = rho[k + d, k]
        if not np.any(coeff):
            continue
        acc = np.zeros(p.shape, dtype=complex)
        for kk, c in zip(k, coeff):
            if c == 0:
                continue
            logpref = 0.5 * (gammaln(kk + 1) - gammaln(kk + d + 1)) + d * (0.5 * math.log(2) + logz)
            acc += c * (-1) ** kk * np.exp(logpref) * eval_genlaguerre(int(kk), d, x)
        term = acc * phase**d
        out += term.real if d == 0 else 2 * term.real
    return gauss * out


def purity(rho):
    r = rho.rho if isinstance(rho, FockDensity) else np.asarray(rho)
    return float(np.sum(np.abs(r) ** 2))


def populations(rho):
    r = rho.rho if isinstance(rho, FockDensity) else np.asarray(rho)
    return np.real(np.diag(r)).copy()


def diagonal_purity_fock(rho):
    return float(np.sum(populations(rho) ** 2))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Tensor product of composite Gauss-Legendre rules, one per axis.

    Each axis uses ``panels`` equal sub-intervals with ``order`` nodes each, so
    polynomials of degree 2*order-1 are integrated exactly per panel.
    """

    bounds: tuple
    order: int = 16
    panels: tuple | int = 8

    def __post_init__(self):
        if len(self.bounds) not in (1, 2, 3, 4):
            raise UsageError("quadrature supports 1 to 4 dimensions")
        pan = self.panels if isinstance(self.panels, tuple) else (self.panels,) * len(self.bounds)
        object.__setattr__(self, "panels", tuple(int(x) for x in pan))

    @property
    def ndim(self):
        return len(self.bounds)

    def axis(self, i):
        lo, hi = self.bounds[i]
        x, w = leggauss(self.order)
        edges = np.linspace(lo, hi, self.panels[i] + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()

    def refined(self):
        return QuadratureRule(self.bounds, self.order, tuple(2 * p for p in self.panels))

    @property
    def size(self):
        return int(np.prod([p * self.order for p in self.panels]))


def _apply(rule, integrand):
    axes = [rule.axis(i) for i in range(rule.ndim)]
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij", sparse=True)
    shape = tuple(a[0].size for a in axes)
    vals = np.broadcast_to(np.asarray(integrand(*mesh)), shape)
    for i in range(rule.ndim - 1, -1, -1):
        vals = vals @ axes[i][1]
    return vals


def quad_nd(rule, integrand, tol=1e-10, max_nodes=4_000_000, rel=False):
    """Integrate by doubling the panel count until successive values agree.

    ``integrand`` receives broadcastable coordinate arrays (one per axis).
    Raises BudgetExhaustedError when the next refinement would exceed
    ``max_nodes`` without meeting ``tol``.
    """
    prev = _apply(rule, integrand)
    history = [prev]
    while True:
        nxt = rule.refined()
        if nxt.size > max_nodes:
            raise BudgetExhaustedError(
                f"quadrature did not reach tol={tol:g} within {max_nodes} nodes "
                f"(last change {abs(history[-1] - history[-2]) if len(history) > 1 else float('nan'):.3e})"
            )
        cur = _apply(nxt, integrand)
        history.append(cur)
        scale = max(abs(cur), 1e-300) if rel else 1.0
        if np.max(np.abs(cur - prev)) <= tol * scale:
            return QuadResult(complex(cur).real if np.isrealobj(cur) else cur, nxt, history)
        rule, prev = nxt, cur


@dataclass
class QuadResult:
    value: float
    rule: QuadratureRule
    history: list

    def __float__(self):
        return float(np.real(self.value))


def support_radius(spec, floor=1e-14):
    """Radius beyond which the initial Wigner function is below ``floor``."""
    core = math.sqrt(2) * spec.beta_abs
    return core + math.sqrt(2 * spec.n + 1) + math.sqrt(-math.log(floor)) + 0.5


def _adaptive_1d_pair(build, tol, start_panels, max_panels):
    """Shared doubling loop for the separable oracles below."""
    panels = start_panels
    prev = build(panels)
    while True:
        panels *= 2
        if panels > max_panels:
            raise BudgetExhaustedError(f"no convergence to {tol:g} within {max_panels} panels")
        cur = build(panels)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur, panels
        prev = cur


def convolve_wigner0(spec, res, t, p, q, tol=1e-8, order=16, max_panels=1024):
    """Kernel-propagated initial Wigner function by 2D Gauss-Legendre quadrature.

    The kernel factorises into a p' Gaussian times a q' Gaussian, so the 2D
    sum collapses to matrix products over the tensor nodes.
    """
    ct = CompactTime(t, res.gamma)
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    if ct.u == 0:
        return wigner0(spec, p, q)
    var = (1 + 2 * res.nbar) * ct.u
    e = ct.decay
    wt = res.omega0 * t
    pt = (p * math.cos(wt) + q * math.sin(wt)).ravel()
    qt = (q * math.cos(wt) - p * math.sin(wt)).ravel()
    R = support_radius(spec)
    width = max(math.sqrt(var / 2) / e, 1e-3)
    # 16 nodes per panel resolve both the kernel width and the fringe spacing
    start = max(4, int(math.ceil(2 * R / min(1.0, 4 * width))))

    def build(panels):
        rule = QuadratureRule(((-R, R),), order, panels)
        x, w = rule.axis(0)
        W = wigner0(spec, x[:, None], x[None, :]) * w[:, None] * w[None, :]
        Kp = np.exp(-((pt[:, None] - e * x[None, :]) ** 2) / var)
        Kq = np.exp(-((qt[:, None] - e * x[None, :]) ** 2) / var)
        return np.einsum("gi,ij,gj->g", Kp, W, Kq) / (math.pi * var)

    val, _ = _adaptive_1d_pair(build, tol, start, max_panels)
    return val.reshape(p.shape)


def _wigner_nodes(spec, R, order, panels):
    rule = QuadratureRule(((-R, R),), order, panels)
    x, w = rule.axis(0)
    W = wigner0(spec, x[:, None], x[None, :]) * w[:, None] * w[None, :]
    return x, W


def total_purity_quadrature(spec, nbar, u, tol=1e-9, order=16, max_panels=512):
    """Four-dimensional overlap integral of two initial Wigner functions with
    the Gaussian purity kernel; returns Tr rho^2."""
    R = support_radius(spec)
    if u == 0:
        def build0(panels):
            x, W = _wigner_nodes(spec, R, order, panels)
            return np.array(2 * math.pi * np.sum(W * wigner0(spec, x[:, None], x[None, :])))
        return float(_adaptive_1d_pair(build0, tol, 8, max_panels)[0])
    s = (1 + 2 * nbar) * u
    c = (1 - u) / (2 * s)

    def build(panels):
        x, W = _wigner_nodes(spec, R, order, panels)
        K = np.exp(-c * (x[:, None] - x[None, :]) ** 2)
        return np.array(np.sum((K @ W @ K.T) * W) / s)

    return float(_adaptive_1d_pair(build, tol, max(8, int(2 * R / max(0.25, math.sqrt(1 / c)))), max_panels)[0])


def _radial_profile(spec, order, r_panels, phi_nodes, R):
    """w(r) = integral over angle of the initial Wigner function, on GL radial nodes."""
    rule = QuadratureRule(((0.0, R),), order, r_panels)
    r, wr = rule.axis(0)
    phi = 2 * math.pi * np.arange(phi_nodes) / phi_nodes
    W = wigner0(spec, r[:, None] * np.sin(phi)[None, :], r[:, None] * np.cos(phi)[None, :])
    return r, wr, W.mean(axis=1) * 2 * math.pi


def diagonal_purity_quadrature(spec, nbar, u, tol=1e-9, order=16, max_panels=512):
    """Sum_m P_m^2 via the Bessel-kernel 4D integral, done in polar coordinates.

    The kernel depends on the two radii only, so the angular integrals are
    periodic trapezoid sums (spectrally accurate) and the radial ones use
    composite Gauss-Legendre.
    """
    if u == 0:
        raise UsageError("the Bessel kernel is a distribution at u = 0")
    R = support_radius(spec)
    s = (1 + 2 * nbar) * u
    c = (1 - u) / (2 * s)
    phi_nodes = 4 * int(math.ceil(math.sqrt(2) * spec.beta_abs * R + 2 * spec.n + 16))

    def build(panels):
        r, wr, prof = _radial_profile(spec, order, panels, phi_nodes, R)
        f = prof * r * wr
        a, b = r[:, None], r[None, :]
        K = np.exp(-c * (a - b) ** 2) * i0e(2 * c * a * b) / s
        return np.array(f @ K @ f)

    return float(_adaptive_1d_pair(build, tol, 8, max_panels)[0])


def number_state_kernel(m, nbar, u, p, q):
    """Kernel mapping the initial Wigner function to the population P_m(t)."""
    s = (1 + 2 * nbar) * u
    rho2 = np.asarray(p) ** 2 + np.asarray(q) ** 2
    lo, hi = 1 - s, 1 + s
    y = 2 * (1 - u) * rho2 / hi
    if abs(lo) > 1e-3:
        poly = lo**m * eval_genlaguerre(m, 0, y / lo)
    else:
        # lo^m L_m(y / lo) expanded so the 1/lo poles cancel
        poly = sum(math.comb(m, k) * (-y) ** k / math.factorial(k) * lo ** (m - k) for k in range(m + 1))
    return 2 * (-1) ** m / hi ** (m + 1) * np.exp(-(1 - u) * rho2 / hi) * poly


def phonon_quadrature(spec, nbar, u, m, tol=1e-10, order=16, max_panels=512):
    """P_m(t) as a 2D integral of the initial Wigner function against the
    number-state kernel, returned in the unit-trace convention."""
    R = support_radius(spec)

    def build(panels):
        x, W = _wigner_nodes(spec, R, order, panels)
        K = number_state_kernel(m, nbar, u, x[:, None], x[None, :])
        return np.array(np.sum(W * K))

    return float(_adaptive_1d_pair(build, tol, 8, max_panels)[0])
