"""Total purity, diagonal purity, phonon distribution and the coherence measure
of the damped circle superposition.

Two closed forms are offered.

``form="exact"`` (default) writes each term D(b_r)|n><n|D(b_s)^+ of the state
through the generating representation

    L_n(z) = e^z / n! d^n/dx^n [x^n e^{-xz}] at x = 1,

so that every Wigner term is a complex Gaussian in phase space with an
x-dependent width.  Gaussians stay Gaussians under the damping kernel, the
purity integrals are then elementary, and the x (and y) derivatives are taken
exactly with truncated Taylor jets.

``form="printed"`` evaluates the literature closed forms in the H, J and I_m
auxiliary functions term by term.  They agree with ``exact`` for n = 0 only
(see README) and are kept for reproducing published numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateStateError, SingularJetError, UsageError
from .specfun import Jet2, jet_compose_analytic, jet_extract, jet_from_variable
from .states import build_fock_vector, default_dim, normalization_constant

FORMS = ("exact", "printed")
DEGENERATE_GAP = 1e-12


@dataclass
class CoherenceReport:
    u: float
    t: float | None
    mu: float
    lam: float
    C: float
    phonon: list = field(default_factory=list)
    form: str = "exact"
    flags: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def _u_of(res, t, u):
    if u is not None:
        if not 0 <= u <= 1:
            raise UsageError("u must lie in [0, 1]")
        return float(u)
    if t is None:
        raise UsageError("give either t or u")
    return res.compact_time(t).u


def _check_form(form, spec):
    if form not in FORMS:
        raise UsageError(f"form must be one of {FORMS}, got {form!r}")
    if form == "printed":
        N = spec.N
        if N < 2 or N & (N - 1):
            raise UsageError("the printed closed forms need N = 2^(l+1) components")


def _richardson(fn, u, h=1e-6):
    """Limit of fn at u from symmetric (or one-sided) shifts, two step sizes."""
    def g(step):
        if u - step >= 0 and u + step <= 1:
            return 0.5 * (fn(u + step) + fn(u - step))
        sgn = 1.0 if u - step < 0 else -1.0
        return 2 * fn(u + sgn * step) - fn(u + 2 * sgn * step)
    return (4 * g(h / 2) - g(h)) / 3


def _guarded(fn, u, flags):
    try:
        return fn(u)
    except SingularJetError:
        flags.append("singular-jet: value from shifted-u extrapolation")
        return _richardson(fn, u)


# ---------------------------------------------------------------------------
# Exact Gaussian-jet form
# ---------------------------------------------------------------------------

def _gaussian_terms(spec, nbar, u, var, ox, oy):
    """Damped Wigner term parameters for every ordered pair (r, s).

    In real coordinates v = (q, p) each term is
        pref * exp(-A |v|^2 + b . v + c)
    with A, b = (b_q, b_p), c and pref jets in the variable ``var``.
    """
    betas = spec.betas
    br, bs = np.meshgrid(betas, betas, indexing="ij")
    br, bs = br.ravel(), bs.ravel()
    centre = (br + bs) / math.sqrt(2)
    cq, cp = centre.real, centre.imag
    w = bs - br
    kq, kp = math.sqrt(2) * w.imag, -math.sqrt(2) * w.real
    phi0 = (br * bs.conj()).imag
    x = jet_from_variable(var, ox, oy)
    a = 2.0 * x - 1.0
    a = Jet2(np.broadcast_to(a.coeffs, br.shape + a.coeffs.shape).copy())
    bq = a * (2 * cq) - 1j * kq
    bp = a * (2 * cp) - 1j * kp
    c0 = -(a * (cq**2 + cp**2)) - 1j * phi0
    s = (1 + 2 * nbar) * u
    e2 = 1.0 - u
    den = a * s + e2
    inv = 1.0 / den
    c = c0 + (bq * bq + bp * bp) * inv * (s / 4)
    e = math.sqrt(e2)
    return a * inv, bq * inv * e, bp * inv * e, c, inv


def _mu_exact(spec, nbar, u):
    n = spec.n
    A1, bq1, bp1, c1, p1 = _pairwise_terms(spec, nbar, u, "x")
    A2, bq2, bp2, c2, p2 = _pairwise_terms(spec, nbar, u, "y")
    A = A1 + A2
    inv = 1.0 / A
    Bq, Bp = bq1 + bq2, bp1 + bp2
    expo = c1 + c2 + (Bq * Bq + Bp * Bp) * inv * 0.25
    tot = (p1 * p2 * inv * jet_compose_analytic("exp", expo)).sum() * math.pi
    return _finish_pair(tot, spec)


def _lam_exact(spec, nbar, u):
    A1, bq1, bp1, c1, p1 = _pairwise_terms(spec, nbar, u, "x")
    A2, bq2, bp2, c2, p2 = _pairwise_terms(spec, nbar, u, "y")
    A = A1 + A2
    inv = 1.0 / A
    D = bq1 * bq2 + bp1 * bp2
    X = bq1 * bp2 - bp1 * bq2
    w = (D * D + X * X) * inv * inv * 0.25
    expo = c1 + c2 + (bq1 * bq1 + bp1 * bp1 + bq2 * bq2 + bp2 * bp2) * inv * 0.25
    tot = (p1 * p2 * inv * jet_compose_analytic("exp", expo)
           * jet_compose_analytic("i0_sqrt", w)).sum() * math.pi
    return _finish_pair(tot, spec)


def _pairwise_terms(spec, nbar, u, var):
    n = spec.n
    terms = _gaussian_terms(spec, nbar, u, var, n, n)
    sl = (slice(None), None) if var == "x" else (None, slice(None))
    return tuple(Jet2(t.coeffs[sl]) for t in terms)


def _finish_pair(tot, spec):
    n = spec.n
    x = jet_from_variable("x", n, n)
    y = jet_from_variable("y", n, n)
    g = tot * ((x * y) ** n)
    d = jet_extract(g, n, n)
    N2 = normalization_constant(spec) ** 2
    val = 2 * math.pi * N2**2 / (math.pi**2 * math.factorial(n) ** 2) * d
    return _real(val, "purity")


def _real(val, what, tol=1e-9):
    val = complex(val)
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ArithmeticError(f"{what} has imaginary residue {val.imag:.3e}")
    return val.real


def _laguerre_ratio_jets(alpha, ytil, m_max):
    """R_k = (alpha)^k L_k(ytil / alpha) for k = 0..m_max, as jets.

    Uses the three-term recurrence multiplied through by alpha^(k+1),
        (k+1) R_{k+1} = ((2k+1) alpha - ytil) R_k - k alpha^2 R_{k-1},
    which has no division by alpha and is forward-stable.
    """
    out = [Jet2.constant_jet(np.ones(alpha.batch_shape), *alpha.orders)]
    if m_max == 0:
        return out
    out.append(alpha - ytil)
    a2 = alpha * alpha
    for k in range(1, m_max):
        nxt = (out[k] * ((2 * k + 1) * alpha - ytil) - out[k - 1] * a2 * k) * (1.0 / (k + 1))
        out.append(nxt)
    return out


def _phonon_exact(spec, nbar, u, m_max):
    n = spec.n
    A, bq, bp, c, pref = _gaussian_terms(spec, nbar, u, "x", n, 0)
    P = A + 1.0
    invP = 1.0 / P
    bb = bq * bq + bp * bp
    alpha = (P - 2.0) * invP
    ytil = bb * invP * invP * 0.5
    base = pref * invP * jet_compose_analytic("exp", c + bb * invP * 0.25) * math.pi
    x = jet_from_variable("x", n, 0)
    xn = x**n
    N2 = normalization_constant(spec) ** 2
    out = []
    for m, R in enumerate(_laguerre_ratio_jets(alpha, ytil, m_max)):
        g = (base * R).sum() * xn
        d = jet_extract(g, n, 0)
        val = 2 * (-1) ** (m + n) / math.pi * N2 / math.factorial(n) * d
        out.append(_real(val, f"P_{m}", tol=1e-8))
    return np.array(out)


# ---------------------------------------------------------------------------
# Printed closed forms
# ---------------------------------------------------------------------------

def _diff_grid(N):
    k = np.arange(N)[:, None] - np.arange(N)[None, :]
    return k.ravel(), (np.arange(N)[:, None] + np.arange(N)[None, :]).ravel()


def _mu_printed(spec, nbar, u):
    n, N, b2 = spec.n, spec.N, spec.beta_abs**2
    g = 1 + 2 * nbar
    x = jet_from_variable("x", n, n)
    y = jet_from_variable("y", n, n)
    Ax = x * (2 * g * u) + (1 - u)
    Ay = y * (2 * g * u) + (1 - u)
    den = x * Ay + y * (1 - u)
    inv = 1.0 / den
    k, ssum = _diff_grid(N)
    th = math.pi * k / N
    # U over (r, s), V over (p, q); batch (N^2, N^2)
    U = Jet2((x * np.cos(th) + 1j * np.sin(th)).coeffs[:, None])
    V = Jet2((y * np.cos(th) + 1j * np.sin(th)).coeffs[None, :])
    cos_rs = np.cos(th)[:, None]
    cos_pq = np.cos(th)[None, :]
    cmix = np.cos(math.pi * (ssum[:, None] - ssum[None, :]) / N)
    Cf = (Ay * U * U + U * V * (2 * (1 - u) * cmix) + Ax * V * V) * inv
    Df = U * cos_rs + V * cos_pq
    H = jet_compose_analytic("exp", (Df - Cf) * (-2 * b2)).sum()
    d = jet_extract((x * y) ** n * inv * H, n, n)
    N2 = normalization_constant(spec) ** 2
    return _real(0.5 * (2 * N2 / math.factorial(n)) ** 2 * d, "printed purity")


def _lam_printed(spec, nbar, u):
    n, N, b2 = spec.n, spec.N, spec.beta_abs**2
    g = 1 + 2 * nbar
    x = jet_from_variable("x", n, n)
    y = jet_from_variable("y", n, n)
    Ap = x * (1 + g * u) + (1 - u)
    Am = x * (1 - g * u) - (1 - u)
    Bp = y * (1 + g * u) + (1 - u)
    Bm = y * (1 - g * u) - (1 - u)
    den = Ap * Bp - Am * Bm
    inv = 1.0 / den
    invAB = 1.0 / (Ap * Bp)
    k, _ = _diff_grid(N)
    th = math.pi * k / N
    U = Jet2((x * np.cos(th) + 1j * np.sin(th)).coeffs[:, None])
    V = Jet2((y * np.cos(th) + 1j * np.sin(th)).coeffs[None, :])
    coef = np.cos(th) * (1 - u) - 1j * np.sin(th) * (1 + g * u)
    Ars, Bpq = coef[:, None], coef[None, :]
    E = (Bp * U * Ars + Ap * V * Bpq) * invAB \
        + (Bp * Bm * U * U + Ap * Am * V * V) * invAB * inv * (2 * (1 - u))
    arg = U * V * inv * (8 * (1 - u) * b2)
    J = (jet_compose_analytic("exp", E * (-2 * b2)) * jet_compose_analytic("i0", arg)).sum()
    d = jet_extract((x * y) ** n * inv * J, n, n)
    N2 = normalization_constant(spec) ** 2
    return _real((2 * N2 / math.factorial(n)) ** 2 * d, "printed diagonal purity")


def _phonon_printed(spec, nbar, u, m_max):
    n, N, b2 = spec.n, spec.N, spec.beta_abs**2
    g = 1 + 2 * nbar
    x = jet_from_variable("x", n, 0)
    Ap = x * (1 + g * u) + (1 - u)
    Am = x * (1 - g * u) - (1 - u)
    invAp = 1.0 / Ap
    k, _ = _diff_grid(N)
    th = math.pi * k / N
    U = x * np.cos(th) + 1j * np.sin(th)
    Ars = np.cos(th) * (1 - u) - 1j * np.sin(th) * (1 + g * u)
    ex = jet_compose_analytic("exp", U * Ars * invAp * (-2 * b2))
    # A-^m / A+^(m+1) L_m(Y / A-) with Y = 4(1-u) U^2 |b|^2 / A+
    alpha = Am * invAp
    ytil = U * U * invAp * invAp * (4 * (1 - u) * b2)
    xn = x**n
    N2 = normalization_constant(spec) ** 2
    out = []
    for m, R in enumerate(_laguerre_ratio_jets(alpha, ytil, m_max)):
        d = jet_extract((ex * R).sum() * invAp * xn, n, 0)
        out.append(_real(2 * N2 * (-1) ** (n + m) / math.factorial(n) * d, f"printed P_{m}", 1e-8))
    return np.array(out)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

_MU = {"exact": _mu_exact, "printed": _mu_printed}
_LAM = {"exact": _lam_exact, "printed": _lam_printed}
_PHON = {"exact": _phonon_exact, "printed": _phonon_printed}


def total_purity(spec, res, t=None, *, u=None, form="exact", flags=None):
    """Tr rho^2 of the damped state."""
    _check_form(form, spec)
    uu = _u_of(res, t, u)
    return _guarded(lambda v: _MU[form](spec, res.nbar, v), uu, flags if flags is not None else [])


def diagonal_purity(spec, res, t=None, *, u=None, form="exact", flags=None):
    """sum_m P_m^2 of the damped state."""
    _check_form(form, spec)
    uu = _u_of(res, t, u)
    return _guarded(lambda v: _LAM[form](spec, res.nbar, v), uu, flags if flags is not None else [])


def phonon_distribution(spec, res, t=None, m=None, *, u=None, form="exact", m_max=None):
    """P_m(t).  With ``m`` given returns that single value, otherwise the
    array for m = 0..m_max (default: the state's truncation rule plus a
    thermal allowance)."""
    _check_form(form, spec)
    uu = _u_of(res, t, u)
    if m is not None:
        if m < 0:
            raise UsageError("m must be non-negative")
        return float(_PHON[form](spec, res.nbar, uu, int(m))[m])
    if m_max is None:
        m_max = default_phonon_cutoff(spec, res.nbar)
    return _PHON[form](spec, res.nbar, uu, int(m_max))


def default_phonon_cutoff(spec, nbar):
    thermal = int(math.ceil(40 * (nbar + 0.1) + 10 * math.sqrt(nbar * (nbar + 1))))
    return max(default_dim(spec), thermal) + 10


def coherence_measure(spec, res, t=None, *, u=None, form="exact", with_phonon=False):
    """C(u) = (mu(u) - lambda(u)) / (mu(0) - lambda(0))."""
    _check_form(form, spec)
    uu = _u_of(res, t, u)
    flags = []
    mu0 = total_purity(spec, res, u=0.0, form=form, flags=flags)
    lam0 = diagonal_purity(spec, res, u=0.0, form=form, flags=flags)
    gap0 = mu0 - lam0
    if gap0 < DEGENERATE_GAP:
        raise DegenerateStateError(
            f"mu(0) - lambda(0) = {gap0:.3e}: state has no Fock-basis coherence to track")
    if uu == 0:
        mu, lam, C = mu0, lam0, 1.0
    else:
        mu = total_purity(spec, res, u=uu, form=form, flags=flags)
        lam = diagonal_purity(spec, res, u=uu, form=form, flags=flags)
        C = (mu - lam) / gap0
    if mu < lam - 1e-9:
        flags.append(f"mu < lambda by {lam - mu:.3e}")
    phonon = phonon_distribution(spec, res, u=uu, form=form).tolist() if with_phonon else []
    return CoherenceReport(u=uu, t=t, mu=mu, lam=lam, C=C, phonon=phonon, form=form, flags=flags)


def coherence_sweep(spec, res, us, form="exact"):
    """Rows (u, t, mu, lambda, C) for each compact time in ``us``."""
    flags = []
    mu0 = total_purity(spec, res, u=0.0, form=form, flags=flags)
    lam0 = diagonal_purity(spec, res, u=0.0, form=form, flags=flags)
    if mu0 - lam0 < DEGENERATE_GAP:
        raise DegenerateStateError("state has no Fock-basis coherence to track")
    rows = []
    for u in us:
        mu = total_purity(spec, res, u=u, form=form, flags=flags)
        lam = diagonal_purity(spec, res, u=u, form=form, flags=flags)
        t = res.time_for_u(u) if u < 1 else math.inf
        rows.append((u, t, mu, lam, 1.0 if u == 0 else (mu - lam) / (mu0 - lam0)))
    return rows


def fock_reference_state(spec, dim=None):
    """Normalised Fock vector used when comparing against the oracle."""
    return build_fock_vector(spec, dim)
