"""Wigner function of the circle superposition, at t = 0 and under thermal damping.

Phase-space coordinates are (p, q) with z = q + i p = sqrt(2) alpha, so that
a coherent state |beta> has W = exp(-|z - sqrt(2) beta|^2) / pi and
integral W dp dq = 1.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DeltaLimitError, UsageError
from .specfun import laguerre
from .states import normalization_constant

PARTS = ("total", "diagonal", "nondiagonal")
SINGULAR_BAND = 1e-3


@dataclass(frozen=True)
class ReservoirParams:
    omega0: float = 1.0
    gamma: float = 1.0
    nbar: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise UsageError("gamma must be positive")
        if self.nbar < 0:
            raise UsageError("nbar must be non-negative")

    def compact_time(self, t):
        return CompactTime(t, self.gamma)

    def time_for_u(self, u):
        """Time at which the compact time reaches ``u``."""
        if not 0 <= u < 1:
            raise UsageError("u must lie in [0, 1)")
        return -math.log1p(-u) / (2 * self.gamma)

    @property
    def singular_u(self):
        return 1.0 / (2.0 * (self.nbar + 1.0))


@dataclass(frozen=True)
class CompactTime:
    t: float
    gamma: float

    def __post_init__(self):
        if self.t < 0:
            raise UsageError("time must be non-negative")

    @property
    def u(self):
        return -math.expm1(-2.0 * self.gamma * self.t)

    @property
    def decay(self):
        """e^{-gamma t} = sqrt(1 - u)."""
        return math.exp(-self.gamma * self.t)


@dataclass
class PhaseGrid:
    p_min: float = -6.5
    p_max: float = 6.5
    q_min: float = -6.5
    q_max: float = 6.5
    n_p: int = 261
    n_q: int = 261
    values: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_p < 2 or self.n_q < 2:
            raise UsageError("grids need at least two points per axis")
        if self.values is not None:
            v = np.asarray(self.values, dtype=float)
            if v.shape != (self.n_p, self.n_q):
                raise UsageError(f"values shape {v.shape} != {(self.n_p, self.n_q)}")
            if not np.all(np.isfinite(v)):
                raise FloatingPointError("non-finite grid value")
            self.values = v

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def q(self):
        return np.linspace(self.q_min, self.q_max, self.n_q)

    @property
    def spacing(self):
        return (self.p_max - self.p_min) / (self.n_p - 1), (self.q_max - self.q_min) / (self.n_q - 1)

    def bounds(self):
        return dict(p_min=self.p_min, p_max=self.p_max, q_min=self.q_min,
                    q_max=self.q_max, n_p=self.n_p, n_q=self.n_q)

    def trapezoid(self):
        """Trapezoid-rule integral of the stored values."""
        dp, dq = self.spacing
        return float(np.trapezoid(np.trapezoid(self.values, dx=dq, axis=1), dx=dp))

    def to_csv_bytes(self):
        buf = io.StringIO()
        b = self.bounds()
        buf.write("# " + ",".join(f"{k}={b[k]!r}" for k in b) + ",layout=rows_p_cols_q\n")
        np.savetxt(buf, self.values, delimiter=",", fmt="%.17g")
        return buf.getvalue().encode()

    def save(self, path, extra_meta=None):
        """Write CSV plus a JSON sidecar (``path`` with ``.json`` suffix)."""
        data = self.to_csv_bytes()
        meta = dict(self.meta)
        meta.update(extra_meta or {})
        meta.update(grid=self.bounds(), sha256=hashlib.sha256(data).hexdigest())
        atomic_write(path, data)
        atomic_write(os.path.splitext(path)[0] + ".json",
                     json.dumps(meta, indent=2, sort_keys=True, default=_json_default).encode())
        return meta

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().lstrip("# ").strip()
        kv = dict(item.split("=", 1) for item in header.split(","))
        values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(float(kv["p_min"]), float(kv["p_max"]), float(kv["q_min"]),
                   float(kv["q_max"]), int(kv["n_p"]), int(kv["n_q"]), values)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pairs(N, part):
    """(r, s, weight) index arrays for the requested part of the double sum."""
    r, s = np.tril_indices(N)
    w = np.where(r == s, 1.0, 2.0)
    if part == "diagonal":
        keep = r == s
    elif part == "nondiagonal":
        keep = r != s
    elif part == "total":
        keep = np.ones_like(r, dtype=bool)
    else:
        raise UsageError(f"part must be one of {PARTS}, got {part!r}")
    return r[keep], s[keep], w[keep]


def _R(z, br, bs, shrink, b2):
    """R_rs = [z - sqrt(2) e br][z - sqrt(2) e bs]^* + (|b|^2 - br bs^*) e^2, e^2 = shrink."""
    e = math.sqrt(2.0 * shrink)
    return (z - e * br) * np.conj(z - e * bs) + (b2 - br * np.conj(bs)) * shrink


def wigner0_part(spec, p, q, part="total"):
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    z = q + 1j * p
    betas = spec.betas
    b2 = spec.beta_abs ** 2
    out = np.zeros(p.shape)
    # one pair at a time keeps memory at the size of the evaluation grid
    for r, s, w in zip(*_pairs(spec.N, part)):
        R = _R(z, betas[r], betas[s], 1.0, b2)
        out += w * np.exp(-R.real) * np.cos(R.imag) * laguerre(spec.n, 0, 2 * R.real)
    return (-1) ** spec.n / math.pi * normalization_constant(spec) ** 2 * out


def wigner0(spec, p, q):
    return wigner0_part(spec, p, q, "total")


def _rotated(res, t, p, q):
    wt = res.omega0 * t
    c, s = math.cos(wt), math.sin(wt)
    return p * c + q * s, q * c - p * s


def fp_kernel(res, t, p, q, p_prime, q_prime):
    """Transition density of the damped-oscillator Fokker-Planck equation."""
    ct = CompactTime(t, res.gamma)
    if ct.u == 0.0:
        raise DeltaLimitError("kernel is a delta function at t = 0; use wigner0 directly")
    var = (1 + 2 * res.nbar) * ct.u
    pt, qt = _rotated(res, t, np.asarray(p, float), np.asarray(q, float))
    d2 = (pt - ct.decay * np.asarray(p_prime)) ** 2 + (qt - ct.decay * np.asarray(q_prime)) ** 2
    return np.exp(-d2 / var) / (math.pi * var)


def _laguerre_factor(n, G_tilde, d, E):
    """(d/E)^n L_n(2 G_tilde / d), finite as d -> 0."""
    if abs(d) > SINGULAR_BAND:
        return (d / E) ** n * laguerre(n, 0, 2 * G_tilde / d)
    acc = np.zeros_like(G_tilde)
    for k in range(n + 1):
        acc = acc + math.comb(n, k) * (-2 * G_tilde) ** k / math.factorial(k) * d ** (n - k)
    return acc / E**n


def wigner_t_compact(spec, nbar, u, p, q, part="total"):
    """Damped Wigner function at compact time ``u`` in the co-rotating frame,
    i.e. with omega0 t = 0.  ``p``, ``q`` are the rotated coordinates."""
    if u == 0:
        return wigner0_part(spec, p, q, part)
    if not 0 < u <= 1:
        raise UsageError("u must lie in [0, 1]")
    p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    z = q + 1j * p
    betas = spec.betas
    b2 = spec.beta_abs ** 2
    sig = (1 + 2 * nbar) * u
    E = 1 + 2 * nbar * u
    d = 1 - 2 * (nbar + 1) * u
    out = np.zeros(p.shape)
    for r, s, w in zip(*_pairs(spec.N, part)):
        R = _R(z, betas[r], betas[s], 1.0 - u, b2)
        ang = math.pi * (r - s) / spec.N
        F = (R.real + 2 * sig * b2 * math.sin(ang) ** 2) / E \
            + 1j * (-R.imag + sig * b2 * math.sin(2 * ang)) / E
        G_tilde = ((1 - u) * R.real - 2 * sig**2 * b2 * math.sin(ang) ** 2) / E \
            + 1j * (sig * R.imag + (1 - u) * sig * b2 * math.sin(2 * ang)) / E
        out += w * (np.exp(-F) * _laguerre_factor(spec.n, G_tilde, d, E)).real
    return (-1) ** spec.n / math.pi * normalization_constant(spec) ** 2 / E * out


def wigner_t_part(spec, res, t, p, q, part="total"):
    ct = CompactTime(t, res.gamma)
    pt, qt = _rotated(res, t, np.asarray(p, float), np.asarray(q, float))
    return wigner_t_compact(spec, res.nbar, ct.u, pt, qt, part)


def wigner_t(spec, res, t, p, q):
    return wigner_t_part(spec, res, t, p, q, "total")


def thermal_wigner(nbar, p, q):
    v = 1 + 2 * nbar
    return np.exp(-(np.asarray(p) ** 2 + np.asarray(q) ** 2) / v) / (math.pi * v)


def grid_eval(f, grid=None, workers=None, **bounds):
    """Evaluate ``f(p, q)`` on a PhaseGrid, one p-row at a time.

    Every row is computed by the same call shape, so the result does not
    depend on ``workers``.
    """
    g = grid if grid is not None else PhaseGrid(**bounds)
    p, q = g.p, g.q
    rows = [None] * g.n_p

    def row(i):
        rows[i] = np.asarray(f(np.full(g.n_q, p[i]), q), dtype=float)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(row, range(g.n_p)))
    else:
        for i in range(g.n_p):
            row(i)
    return PhaseGrid(g.p_min, g.p_max, g.q_min, g.q_max, g.n_p, g.n_q, np.vstack(rows), dict(g.meta))
