"""Perturbative RG flow of the frustrated two-bath model.

    d lambda / d ell = (1 - s) lambda - lambda^3

with the Ohmic case s = 1 reducing to -lambda^3.  The flow is a Bernoulli
equation, so an exact solution is available as an oracle for the integrator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

S_STAR = 0.76
S_STAR_UNCERTAINTY = 0.01


class RGError(RuntimeError):
    pass


class Stability(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


class RGMethod(enum.Enum):
    RK4 = "RK4"
    CLOSED_FORM = "ClosedForm"


class Phase(enum.Enum):
    SUPER_OHMIC_PERTURBATIVE = "SuperOhmicPerturbative"
    OHMIC_FRUSTRATED = "OhmicFrustrated"
    CRITICAL_INTERMEDIATE = "CriticalIntermediate"
    LOCALIZED = "Localized"


class EntropyClass(enum.Enum):
    LN2 = "Ln2"
    BETWEEN_ZERO_AND_LN2 = "BetweenZeroAndLn2"
    ZERO = "Zero"


ENTROPY_OF = {
    Phase.SUPER_OHMIC_PERTURBATIVE: EntropyClass.LN2,
    Phase.OHMIC_FRUSTRATED: EntropyClass.LN2,
    Phase.CRITICAL_INTERMEDIATE: EntropyClass.BETWEEN_ZERO_AND_LN2,
    Phase.LOCALIZED: EntropyClass.ZERO,
}


@dataclass(frozen=True)
class PhaseLabel:
    label: Phase
    entropy_class: EntropyClass
    free: bool = False             # lambda0 = 0: decoupled qubit
    strong_coupling: bool = False  # lambda0 beyond the perturbative fixed point
    s_star: float = S_STAR
    s_star_uncertainty: float = S_STAR_UNCERTAINTY

    def __post_init__(self):
        if ENTROPY_OF[self.label] is not self.entropy_class:
            raise ValueError(f"{self.label.value} pairs with {ENTROPY_OF[self.label].value}")


def beta_function(lam: float, s: float) -> float:
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return (1 - s) * lam - lam**3


def fixed_points(s: float) -> list[tuple[float, Stability]]:
    if s < 1:
        return [(0.0, Stability.UNSTABLE), (math.sqrt(1 - s), Stability.STABLE)]
    if s == 1:
        return [(0.0, Stability.MARGINAL)]
    return [(0.0, Stability.STABLE)]


def _growth(a: float, ell):
    """(e^{2 a ell} - 1) / a, continuous through a = 0 where it equals 2 ell."""
    ell = np.asarray(ell, dtype=float)
    if a == 0:
        return 2 * ell
    return np.expm1(2 * a * ell) / a


def closed_form_lambda(lambda0: float, s: float, ell):
    """Exact Bernoulli solution lambda(ell)^2 = lambda0^2 e^{2a ell} / (1 + lambda0^2 (e^{2a ell}-1)/a)."""
    if lambda0 < 0:
        raise ValueError("lambda0 must be >= 0")
    a = 1.0 - s
    ell = np.asarray(ell, dtype=float)
    l2 = lambda0**2
    if l2 == 0:
        return np.zeros_like(ell) if ell.ndim else 0.0
    g = _growth(a, ell)
    if a > 0:
        # divide through by e^{2a ell} to stay finite at large ell
        e = np.exp(-2 * a * ell)
        val = l2 / (e + l2 * (1 - e) / a)
    else:
        val = l2 * np.exp(2 * a * ell) / (1 + l2 * g)
    out = np.sqrt(val)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RGTrajectory:
    ell: np.ndarray
    lam: np.ndarray
    s: float
    method: RGMethod

    def __post_init__(self):
        if np.any(np.diff(self.ell) <= 0):
            raise ValueError("ell must be strictly increasing")
        if np.any(self.lam < 0):
            raise ValueError("lambda must stay >= 0")
        self.ell.setflags(write=False)
        self.lam.setflags(write=False)

    @property
    def terminal(self) -> float:
        return float(self.lam[-1])

    def to_csv(self) -> str:
        rows = ["ell,lambda"]
        rows += [f"{e!r},{v!r}" for e, v in zip(self.ell.tolist(), self.lam.tolist())]
        return "\n".join(rows) + "\n"


def _rk4_step(lam: float, s: float, h: float) -> float:
    # no clipping: an overshoot below zero must show up as a rejected step
    def f(x):
        return (1 - s) * x - x**3
    k1 = f(lam)
    k2 = f(lam + 0.5 * h * k1)
    k3 = f(lam + 0.5 * h * k2)
    k4 = f(lam + h * k3)
    return lam + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def integrate_flow(lambda0: float, s: float, ell_max: float, step: float,
                   tol: float = 1e-12, max_halvings: int = 20) -> RGTrajectory:
    """Classical RK4 on a fixed output grid of spacing ``step``.

    Each output step is checked by step doubling; when the local error
    estimate exceeds ``tol`` (relative) the step is subdivided.  Failing after
    ``max_halvings`` subdivisions raises RGError.
    """
    if lambda0 < 0:
        raise ValueError(f"lambda0 must be >= 0, got {lambda0}")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    if not ell_max > 0:
        raise ValueError(f"ell_max must be > 0, got {ell_max}")
    n = max(1, int(math.ceil(ell_max / step - 1e-12)))
    ells = np.linspace(0.0, ell_max, n + 1)
    lams = np.empty(n + 1)
    lams[0] = lambda0
    lam = float(lambda0)
    for i in range(n):
        h = ells[i + 1] - ells[i]
        lam = _advance(lam, s, h, tol, max_halvings, ells[i])
        lams[i + 1] = lam
    return RGTrajectory(ells, lams, float(s), RGMethod.RK4)


def _advance(lam: float, s: float, h: float, tol: float, max_halvings: int, ell0: float) -> float:
    if lam == 0:
        return 0.0
    for k in range(max_halvings + 1):
        m = 2**k
        hs = h / m
        coarse, fine = lam, lam
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                for _ in range(m):
                    coarse = _rk4_step(coarse, s, hs)
                    fine = _rk4_step(_rk4_step(fine, s, hs / 2), s, hs / 2)
            except OverflowError:
                coarse = fine = math.nan
        # Richardson estimate of the local error of the fine result
        err = abs(fine - coarse) / 15
        if not (math.isfinite(err) and coarse > 0 and fine > 0):
            err = math.inf
        elif err <= tol * fine:
            return fine + (fine - coarse) / 15
    raise RGError(f"step rejected at ell={ell0:.6g}: local error {err:.3g} above tol {tol:.3g}")


def closed_form_trajectory(lambda0: float, s: float, ell_max: float, step: float) -> RGTrajectory:
    n = max(1, int(math.ceil(ell_max / step - 1e-12)))
    ells = np.linspace(0.0, ell_max, n + 1)
    return RGTrajectory(ells, np.asarray(closed_form_lambda(lambda0, s, ells)), float(s), RGMethod.CLOSED_FORM)


def classify_phase(s: float, lambda0: float, s_star: float = S_STAR) -> PhaseLabel:
    """Decoherence phase of the symmetric two-bath model.

    s = s_star is assigned to Localized.  lambda0 = 0 returns the
    super-Ohmic (Ln2, disentangled) label with ``free`` set.
    """
    if s < 0 or lambda0 < 0:
        raise ValueError(f"s and lambda0 must be >= 0, got s={s}, lambda0={lambda0}")
    if not 0 < s_star < 1:
        raise ValueError(f"s_star must lie in (0, 1), got {s_star}")
    if lambda0 == 0:
        p = Phase.SUPER_OHMIC_PERTURBATIVE
        return PhaseLabel(p, ENTROPY_OF[p], free=True, s_star=s_star)
    strong = False
    if s > 1:
        p = Phase.SUPER_OHMIC_PERTURBATIVE
    elif s == 1:
        p = Phase.OHMIC_FRUSTRATED
    elif s > s_star:
        p = Phase.CRITICAL_INTERMEDIATE
        strong = lambda0 > math.sqrt(1 - s)
    else:
        p = Phase.LOCALIZED
    return PhaseLabel(p, ENTROPY_OF[p], strong_coupling=strong, s_star=s_star)
