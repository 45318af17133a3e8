"""Cross-checks of the closed forms against the brute-force oracles."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import coherence, oracle, phasespace, protocol
from .states import SuperpositionSpec, build_fock_vector, default_dim


@dataclass
class Check:
    name: str
    error: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def row(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status:4}  {self.name:<58} err={self.error:.3e}  tol={self.tol:.1e}  ({self.seconds:.1f}s)"


def _timed(name, tol, fn):
    t0 = time.perf_counter()
    try:
        err = float(fn())
    except Exception as exc:  # a crashing check is a failing check
        err = float("nan")
        name = f"{name} [{type(exc).__name__}: {exc}]"
    return Check(name, err, tol, time.perf_counter() - t0)


def check_sequence(params, n, ell, beta_abs, tol):
    def run():
        r = protocol.run_sequence_oracle(params, n, ell, 1j * beta_abs, min_fidelity=0.0)
        return 1 - r.fidelity
    return _timed(f"sequence fidelity l={ell} n={n} |b|={beta_abs}", tol, run)


def _probe_grid(points=41, half=6.0):
    x = np.linspace(-half, half, points)
    return np.meshgrid(x, x, indexing="ij")


def check_kernel(spec, res, u, tol, points=41):
    P, Q = _probe_grid(points)
    t = res.time_for_u(u)

    def run():
        a = phasespace.wigner_t(spec, res, t, P, Q)
        b = oracle.convolve_wigner0(spec, res, t, P, Q, tol=min(tol / 10, 1e-8))
        return np.abs(a - b).max()
    return _timed(f"kernel quadrature vs closed form {_tag(spec)} nbar={res.nbar} u={u}", tol, run)


def check_fock_wigner(spec, res, u, tol, points=41, dim=None):
    P, Q = _probe_grid(points)
    t = res.time_for_u(u)

    def run():
        rho = oracle.evolve_density(oracle.FockDensity.from_vector(build_fock_vector(spec, dim or fock_dim(spec, res))), res, t)
        return np.abs(oracle.wigner_from_density(rho, P, Q) - phasespace.wigner_t(spec, res, t, P, Q)).max()
    return _timed(f"master equation Wigner vs closed form {_tag(spec)} nbar={res.nbar} u={u}", tol, run)


def fock_dim(spec, res):
    return default_dim(spec) + int(12 * res.nbar) + 20


def check_fock_purities(spec, res, u, tol, form="exact"):
    t = res.time_for_u(u)

    def run():
        rho = oracle.evolve_density(oracle.FockDensity.from_vector(build_fock_vector(spec, fock_dim(spec, res))), res, t)
        mu = coherence.total_purity(spec, res, u=u, form=form)
        lam = coherence.diagonal_purity(spec, res, u=u, form=form)
        return max(abs(mu / oracle.purity(rho) - 1), abs(lam / oracle.diagonal_purity_fock(rho) - 1))
    return _timed(f"jet purities vs master equation {_tag(spec)} u={u} [{form}]", tol, run)


def check_phonon(spec, res, u, tol):
    def run():
        dim = fock_dim(spec, res)
        rho = oracle.FockDensity.from_vector(build_fock_vector(spec, dim))
        if u > 0:
            rho = oracle.evolve_density(rho, res, res.time_for_u(u))
        P = coherence.phonon_distribution(spec, res, u=u, m_max=dim - 1)
        return np.abs(P - oracle.populations(rho)).max()
    return _timed(f"phonon distribution vs master equation {_tag(spec)} u={u}", tol, run)


def check_quadrature(spec, res, u, tol):
    def run():
        mu_q = oracle.total_purity_quadrature(spec, res.nbar, u)
        lam_q = oracle.diagonal_purity_quadrature(spec, res.nbar, u)
        mu = coherence.total_purity(spec, res, u=u)
        lam = coherence.diagonal_purity(spec, res, u=u)
        return max(abs(mu - mu_q), abs(lam - lam_q))
    return _timed(f"4D quadrature vs jet purities {_tag(spec)} u={u}", tol, run)


def _tag(spec):
    return f"(n={spec.n},N={spec.N},|b|={spec.beta_abs})"


def run_suite(cfg, extended=False):
    tol = cfg.tol
    params = cfg.protocol()
    checks = []
    for ell in (1, 2):
        for n in (0, 1, 2):
            for b in (1.0, 3.03):
                checks.append(check_sequence(params, n, ell, b, tol.fidelity))
    small = SuperpositionSpec(0, 4, 1.5)
    big = SuperpositionSpec(2, 8, 3.03)
    specs = (small, big) if extended else (small,)
    for spec in specs:
        for nbar in (0.0, 1.0):
            res = phasespace.ReservoirParams(cfg.omega0, cfg.gamma, nbar)
            for u in (0.1, 0.5, 0.9):
                checks.append(check_kernel(spec, res, u, tol.kernel))
                checks.append(check_fock_wigner(spec, res, u, tol.fock_wigner))
    res = phasespace.ReservoirParams(cfg.omega0, cfg.gamma, cfg.nbar)
    cases = [(n, N) for n in (0, 1, 2) for N in (2, 4, 8)] if extended else [(1, 4), (2, 8)]
    for n, N in cases:
        spec = SuperpositionSpec(n, N, 3.03)
        for u in (0.1, 0.2, 0.5):
            checks.append(check_fock_purities(spec, res, u, tol.fock_purity))
        checks.append(check_phonon(spec, res, 0.2, tol.phonon))
    quad_cases = [(0, 2, 1.0), (1, 2, 1.0), (1, 4, 1.5)] if extended else [(1, 2, 1.0)]
    for n, N, b in quad_cases:
        for u in (0.2,) if not extended else (0.1, 0.3):
            checks.append(check_quadrature(SuperpositionSpec(n, N, b), res, u, tol.quadrature))
    return checks
