"""Exact pure-dephasing coherence function I(t) and qubit evolution.

The decoherence exponent is

    Phi(t) = lambda^2 Omega_c^{1-s} int_0^inf dw w^{s-2} e^{-2w/Omega_c} (1 - e^{-iwt})
           = lambda^2 Gamma(s-1) 2^{1-s} [1 - (1 + i Omega_c t / 2)^{1-s}]

and I(t) = exp(-Phi(t)).  The closed form continues analytically to
0 < s < 1; s = 1 is its removable limit Phi = lambda^2 log(1 + i Omega_c t/2).
The imaginary part of Phi (a deterministic phase) is kept.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .baths import BathSpec


class QuadratureError(RuntimeError):
    pass


class Method(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    QUADRATURE = "Quadrature"


def _check(spec: BathSpec, t: float):
    if spec.s == 0:
        raise ValueError("s = 0 is the 1/f limit; use one_over_f_divergence_probe")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")


def decoherence_exponent(spec: BathSpec, t: float) -> complex:
    """Phi(t) from the closed form; I(t) = exp(-Phi)."""
    _check(spec, t)
    lam2 = spec.lam**2
    if lam2 == 0 or t == 0:
        return 0j
    if math.isinf(t):
        if spec.s > 1:
            return complex(lam2 * special.gamma(spec.s - 1) * 2 ** (1 - spec.s))
        return complex(math.inf)
    # log(1 + i x/2) and 1 - z^{-a} = -expm1(-a log z) without cancellation at small x
    h = 0.5 * spec.omega_uc * t
    log_z = complex(0.5 * math.log1p(h * h), math.atan(h))
    if spec.s == 1:
        return lam2 * log_z
    a = spec.s - 1
    u, v = -a * log_z.real, -a * log_z.imag
    expm1 = complex(math.expm1(u) * math.cos(v) - 2 * math.sin(0.5 * v) ** 2, math.exp(u) * math.sin(v))
    return complex(-lam2 * special.gamma(a) * 2.0 ** (-a) * expm1)


def decoherence_closed_form(spec: BathSpec, t: float) -> complex:
    phi = decoherence_exponent(spec, t)
    if math.isinf(phi.real):
        return 0j
    return complex(np.exp(-phi))


_MAX_PLAIN_PERIODS = 64


def _quad(f, a, b, what, **kw):
    kw.setdefault("limit", 400)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, **kw)[:2]
            err = abs(err)  # QAWS can report a signed estimate
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"{what} on [{a:.6g}, {b:.6g}] did not converge: {exc}") from exc
    return val, err


def quadrature_exponent(spec: BathSpec, t: float, rel_tol: float = 1e-10) -> tuple[complex, float]:
    """Phi(t) by adaptive quadrature, with an error estimate.

    In units y = w / Omega_c the integrand is y^{s-2} e^{-2y} (1 - e^{-ixy}),
    x = Omega_c t.  The range is split at y = 1/x (w = 1/t): below it the
    w^{s-2} endpoint behaviour goes into an algebraic weight, above it the
    oscillating pieces go to Fourier-weighted quadrature on octave subintervals.
    Raises QuadratureError naming the piece and interval that failed.
    """
    _check(spec, t)
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    if spec.lam == 0 or t == 0:
        return 0j, 0.0
    s = spec.s
    x = spec.omega_uc * t
    y0 = 1.0 / x
    eps = rel_tol * 1e-2

    # (1 - cos xy)/y^2 and sin(xy)/y are smooth and positive below y0; the
    # y^s, y^{s-1} endpoint behaviour goes into algebraic weights
    def low_re(y):
        return np.exp(-2 * y) * 2 * (np.sin(0.5 * x * y) / y) ** 2 if y > 0 else 0.5 * x * x

    def low_im(y):
        return np.exp(-2 * y) * (np.sin(x * y) / y if y > 0 else x)

    re_lo, e1 = _quad(low_re, 0, y0, "low band (real part)", weight="alg", wvar=(s, 0), epsabs=0, epsrel=eps)
    im_lo, e2 = _quad(low_im, 0, y0, "low band (imaginary part)", weight="alg", wvar=(s - 1, 0),
                      epsabs=0, epsrel=eps)

    def envelope(y):
        return y ** (s - 2) * np.exp(-2 * y)

    # tail on octaves [y0 2^k, y0 2^{k+1}] up to y0 + 40, where e^{-2y} < 1e-34;
    # the envelope changes by at most 2^{|s-2|} per octave
    y_end = y0 + 40.0
    edges = [y0]
    while edges[-1] < y_end:
        edges.append(min(2 * edges[-1], y_end))
    plain = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(lambda u: np.exp((s - 1) * u - 2 * np.exp(u)), math.log(lo), math.log(hi),
                     "tail envelope", epsabs=0, epsrel=eps)
        plain += v
        err += e
    scale = abs(re_lo) + abs(im_lo) + plain
    atol = eps * scale / len(edges)
    cos_part = sin_part = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if x * (hi - lo) <= 2 * np.pi * _MAX_PLAIN_PERIODS:
            # QAWO can return a wrong value with a tiny error estimate at tight
            # tolerance; few periods are safe for plain Gauss-Kronrod
            kw = dict(epsabs=atol, epsrel=eps, limit=2000)
            c, e4 = _quad(lambda y: envelope(y) * np.cos(x * y), lo, hi, "tail cosine part", **kw)
            sn, e5 = _quad(lambda y: envelope(y) * np.sin(x * y), lo, hi, "tail sine part", **kw)
        else:
            kw = dict(weight="cos", wvar=x, epsabs=atol, epsrel=eps)
            c, e4 = _quad(envelope, lo, hi, "tail cosine transform", **kw)
            kw["weight"] = "sin"
            sn, e5 = _quad(envelope, lo, hi, "tail sine transform", **kw)
        cos_part += c
        sin_part += sn
        err += e4 + e5
    lam2 = spec.lam**2
    phi = lam2 * complex(re_lo + plain - cos_part, im_lo + sin_part)
    return phi, lam2 * (e1 + e2 + err)


def decoherence_quadrature(spec: BathSpec, t: float, rel_tol: float = 1e-10) -> complex:
    phi, _ = quadrature_exponent(spec, t, rel_tol)
    return complex(np.exp(-phi))


@dataclass(frozen=True)
class DecoherenceCurve:
    times: np.ndarray
    values: np.ndarray
    method: Method
    spec: BathSpec

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def to_csv(self) -> str:
        rows = ["t,re_I,im_I,abs_I"]
        for t, v in zip(self.times, self.values):
            rows.append(f"{float(t)!r},{float(v.real)!r},{float(v.imag)!r},{float(abs(v))!r}")
        return "\n".join(rows) + "\n"


def decoherence_curve(spec: BathSpec, times, method: Method = Method.CLOSED_FORM,
                      rel_tol: float = 1e-10) -> DecoherenceCurve:
    ts = np.asarray(times, dtype=float)
    if method is Method.CLOSED_FORM:
        vals = [decoherence_closed_form(spec, t) for t in ts]
    else:
        vals = [decoherence_quadrature(spec, t, rel_tol) for t in ts]
    return DecoherenceCurve(ts, np.array(vals, dtype=complex), method, spec)


def one_over_f_divergence_probe(lam: float, omega_uc: float, t: float, s_grid) -> list[tuple[float, float]]:
    """|I(t)| along a descending sequence s -> 0+."""
    s_vals = [float(s) for s in s_grid]
    if not s_vals or any(not 0 < s <= 0.2 for s in s_vals):
        raise ValueError("s_grid values must lie in (0, 0.2]")
    if any(b >= a for a, b in zip(s_vals, s_vals[1:])):
        raise ValueError("s_grid must be strictly descending")
    if not t > 0:
        raise ValueError("t must be positive")
    return [(s, abs(decoherence_closed_form(BathSpec(s, lam, omega_uc, omega_uc), t)))
            for s in s_vals]


CROSSVAL_S = (0.5, 1.0, 1.5, 3.0)
CROSSVAL_LAMBDA = (0.3, 1.0)
CROSSVAL_X = (0.1, 1.0, 10.0, 100.0)


def cross_validation_report(rel_tol: float = 1e-6, omega_uc: float = 1.0) -> dict:
    """Closed form against quadrature on the s x lambda x Omega_c t grid."""
    rows = []
    for s in CROSSVAL_S:
        for lam in CROSSVAL_LAMBDA:
            spec = BathSpec(s, lam, omega_uc, omega_uc)
            for x in CROSSVAL_X:
                t = x / omega_uc
                cf = decoherence_closed_form(spec, t)
                qd = decoherence_quadrature(spec, t, rel_tol=min(rel_tol, 1e-10))
                err = abs(qd - cf) / abs(cf)
                rows.append({
                    "s": s, "lambda": lam, "omega_uc_t": x,
                    "closed_form": [cf.real, cf.imag], "quadrature": [qd.real, qd.imag],
                    "rel_error": err, "pass": bool(err < rel_tol),
                })
    return {
        "schema": "pijunction.crossval/1",
        "rel_tol": rel_tol,
        "max_rel_error": max(r["rel_error"] for r in rows),
        "all_pass": all(r["pass"] for r in rows),
        "rows": rows,
    }


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class QubitState:
    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (2, 2):
            raise ValueError("rho must be 2x2")
        if not np.allclose(r, r.conj().T, atol=1e-12):
            raise ValueError("rho must be Hermitian")
        if abs(np.trace(r) - 1) > 1e-12:
            raise ValueError("rho must have unit trace")
        if np.min(np.linalg.eigvalsh(r)) < -1e-12:
            raise ValueError("rho must be positive semidefinite")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)

    @classmethod
    def pure(cls, a: complex, b: complex) -> "QubitState":
        v = np.array([a, b], dtype=complex)
        v /= np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def evolve_offdiagonal(initial: QubitState, curve: DecoherenceCurve) -> list[QubitState]:
    """rho_{up,down}(t) = rho_{up,down}(0) I(t); populations untouched."""
    out = []
    for v in curve.values:
        r = initial.rho.copy()
        r[0, 1] = initial.rho[0, 1] * v
        r[1, 0] = np.conj(r[0, 1])
        out.append(QubitState(r))
    return out
