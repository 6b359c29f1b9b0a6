"""Bosonic bath parametrization and telegraph-noise ensembles.

Conventions: Omega_c (``omega_uc``) is the only ultraviolet scale that enters
an exponential; omega_c is the mode-density normalization and cancels from
every closed form.  S(omega) carries a unit prefactor, so only its slope and
ratios mean anything.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: rate * dt above this is flagged as under-resolved
RTN_RESOLUTION_LIMIT = 0.1


class Regime(enum.Enum):
    ONE_OVER_F = "1/f"
    SUB_OHMIC = "sub-Ohmic"
    OHMIC = "Ohmic"
    SUPER_OHMIC = "super-Ohmic"


@dataclass(frozen=True)
class BathSpec:
    s: float
    lam: float
    omega_c: float = 1.0
    omega_uc: float = 1.0

    def __post_init__(self):
        if not self.s >= 0:
            raise ValueError(f"spectral exponent s must be >= 0, got {self.s}")
        if not self.lam >= 0:
            raise ValueError(f"coupling lambda must be >= 0, got {self.lam}")
        if not (self.omega_c > 0 and self.omega_uc > 0):
            raise ValueError("cutoffs must be positive")
        if self.omega_c > self.omega_uc:
            raise ValueError(
                f"infrared cutoff {self.omega_c} exceeds ultraviolet cutoff {self.omega_uc}"
            )

    @property
    def regime(self) -> Regime:
        if self.s == 0:
            return Regime.ONE_OVER_F
        if self.s < 1:
            return Regime.SUB_OHMIC
        if self.s == 1:
            return Regime.OHMIC
        return Regime.SUPER_OHMIC


@dataclass(frozen=True)
class FrustratedPair:
    """Two baths coupled through sigma^z and sigma^x respectively."""

    bath_z: BathSpec
    bath_x: BathSpec
    symmetric: bool = True

    def __post_init__(self):
        if self.symmetric and self.bath_z != self.bath_x:
            raise ValueError("symmetric (U(1)) pair requires identical baths")

    def swapped(self) -> "FrustratedPair":
        return FrustratedPair(self.bath_x, self.bath_z, self.symmetric)


def _as_omega(omega, strict: bool):
    w = np.asarray(omega, dtype=float)
    bad = w <= 0 if strict else w < 0
    if np.any(bad):
        raise ValueError(f"omega must be {'> 0' if strict else '>= 0'}, got {omega}")
    return w


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def coupling_f(spec: BathSpec, omega):
    """F(w) = sqrt(w_c) Omega_c^{(1-s)/2} w^{s/2} exp(-w / 2 Omega_c)."""
    w = _as_omega(omega, strict=False)
    oc, uc, s = spec.omega_c, spec.omega_uc, spec.s
    return _scalar(math.sqrt(oc) * uc ** ((1 - s) / 2) * w ** (s / 2) * np.exp(-w / (2 * uc)))


def polaron_g(spec: BathSpec, omega):
    """G(w) = F(w) / w, the displacement amplitude of the polaron rotation."""
    w = _as_omega(omega, strict=True)
    oc, uc, s = spec.omega_c, spec.omega_uc, spec.s
    return _scalar(math.sqrt(oc) * uc ** ((1 - s) / 2) * w ** (s / 2 - 1) * np.exp(-w / (2 * uc)))


def noise_spectrum(spec: BathSpec, omega):
    """S(w) = w^{s-1} exp(-w / Omega_c) with unit prefactor."""
    w = _as_omega(omega, strict=True)
    return _scalar(w ** (spec.s - 1) * np.exp(-w / spec.omega_uc))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class RateDistribution(enum.Enum):
    LOG_UNIFORM = "LogUniform"
    EXPLICIT = "Explicit"


@dataclass(frozen=True)
class RTNEnsemble:
    """Independent symmetric telegraph fluctuators.

    Each fluctuator flips sign at ``rate`` (Poisson), so its autocorrelation
    is amplitude^2 exp(-2 rate |tau|).
    """

    rates: tuple[float, ...]
    amplitudes: tuple[float, ...]
    seed: int
    rate_distribution: RateDistribution = RateDistribution.EXPLICIT
    rate_range: tuple[float, float] | None = field(default=None)

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        amps = tuple(float(a) for a in self.amplitudes)
        if len(rates) != len(amps) or not rates:
            raise ValueError("need one amplitude per rate and at least one fluctuator")
        if min(rates) <= 0:
            raise ValueError("switching rates must be positive")
        dist = RateDistribution(self.rate_distribution)
        if dist is RateDistribution.LOG_UNIFORM:
            if self.rate_range is None:
                raise ValueError("LogUniform ensemble needs rate_range")
            lo, hi = self.rate_range
            if not 0 < lo < hi:
                raise ValueError(f"need 0 < rate_min < rate_max, got {self.rate_range}")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "rate_distribution", dist)
        object.__setattr__(self, "seed", int(self.seed))

    def __len__(self):
        return len(self.rates)

    @classmethod
    def log_uniform(
        cls, n: int, rate_min: float, rate_max: float, seed: int, amplitude: float = 1.0
    ) -> "RTNEnsemble":
        """Rates drawn log-uniformly; each amplitude is amplitude/sqrt(n)."""
        if not 0 < rate_min < rate_max:
            raise ValueError(f"need 0 < rate_min < rate_max, got ({rate_min}, {rate_max})")
        rng = np.random.default_rng([int(seed), 0xD0771])
        rates = np.exp(rng.uniform(math.log(rate_min), math.log(rate_max), size=n))
        amps = np.full(n, amplitude / math.sqrt(n))
        return cls(tuple(rates), tuple(amps), seed, RateDistribution.LOG_UNIFORM,
                   (float(rate_min), float(rate_max)))

    @classmethod
    def explicit(cls, rates, amplitudes=None, seed: int = 0) -> "RTNEnsemble":
        rates = list(rates)
        if amplitudes is None:
            amplitudes = [1.0 / math.sqrt(len(rates))] * len(rates)
        return cls(tuple(rates), tuple(amplitudes), seed)

    def variance(self) -> float:
        return float(np.sum(np.square(self.amplitudes)))

    def psd(self, omega):
        """One-sided PSD in angular frequency (integrates to the variance)."""
        w = np.asarray(omega, dtype=float)
        out = np.zeros_like(w)
        for rate, amp in zip(self.rates, self.amplitudes):
            out += lorentzian_psd(w, rate, amp)
        return out

    def to_text(self) -> str:
        lines = [
            f"seed {self.seed}",
            f"rate_distribution {self.rate_distribution.value}",
        ]
        if self.rate_range is not None:
            lines += [f"rate_min {self.rate_range[0]!r}", f"rate_max {self.rate_range[1]!r}"]
        lines.append("# i rate amplitude")
        lines += [f"{i} {r!r} {a!r}" for i, (r, a) in enumerate(zip(self.rates, self.amplitudes))]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RTNEnsemble":
        header: dict[str, str] = {}
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) == 2:
                header[parts[0]] = parts[1]
            elif len(parts) == 3:
                rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
            else:
                raise ValueError(f"malformed line: {raw!r}")
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError("fluctuator indices must run 0..n-1")
        rng = None
        if "rate_min" in header:
            rng = (float(header["rate_min"]), float(header["rate_max"]))
        return cls(
            tuple(r[1] for r in rows),
            tuple(r[2] for r in rows),
            int(header["seed"]),
            RateDistribution(header.get("rate_distribution", "Explicit")),
            rng,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RTNEnsemble":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def lorentzian_psd(omega, rate: float, amplitude: float):
    """One-sided PSD of a symmetric telegraph process: (4 a^2 g / pi) / (w^2 + 4 g^2)."""
    w = np.asarray(omega, dtype=float)
    return 4 * amplitude**2 * rate / (np.pi * (w**2 + 4 * rate**2))


def telegraph(rate: float, n_samples: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Unit telegraph signal sampled at k*dt from exponential waiting times."""
    t_end = (n_samples - 1) * dt
    s0 = 1.0 if rng.random() < 0.5 else -1.0
    expected = rate * t_end
    chunk = int(expected + 6 * math.sqrt(expected) + 16)
    times = np.cumsum(rng.exponential(1.0 / rate, size=chunk))
    while times[-1] <= t_end:
        more = np.cumsum(rng.exponential(1.0 / rate, size=chunk)) + times[-1]
        times = np.concatenate([times, more])
    grid = np.arange(n_samples) * dt
    flips = np.searchsorted(times, grid, side="right")
    return s0 * (1.0 - 2.0 * (flips & 1))


def simulate_rtn(ensemble: RTNEnsemble, t_max: float, dt: float) -> np.ndarray:
    """Summed telegraph trajectory on the grid 0, dt, ..., up to t_max.

    Fluctuator ``i`` draws from its own generator seeded by (seed, i), and the
    sum runs in index order, so output is bit-reproducible and each term can
    be generated independently.
    """
    if not dt > 0 or not t_max >= dt:
        raise ValueError(f"need dt > 0 and t_max >= dt, got dt={dt}, t_max={t_max}")
    worst = max(ensemble.rates) * dt
    if worst > RTN_RESOLUTION_LIMIT:
        warnings.warn(
            f"fastest switching rate * dt = {worst:.3g} under-resolves the telegraph noise",
            RuntimeWarning,
            stacklevel=2,
        )
    n = int(math.floor(t_max / dt + 1e-9)) + 1
    total = np.zeros(n)
    for i, (rate, amp) in enumerate(zip(ensemble.rates, ensemble.amplitudes)):
        rng = np.random.default_rng([ensemble.seed, i])
        total += amp * telegraph(rate, n, dt, rng)
    return total


def psd_estimate(samples, dt: float, segments: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Segment-averaged one-sided periodogram in angular frequency.

    The global mean is removed first; the returned power then satisfies
    sum(power) * d_omega == variance(samples) up to rounding.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    if segments < 1 or x.size % segments:
        raise ValueError(f"{x.size} samples do not split into {segments} equal segments")
    m = x.size // segments
    if m < 2:
        raise ValueError("segments must hold at least two samples")
    blocks = (x - x.mean()).reshape(segments, m)
    spec = np.mean(np.abs(np.fft.rfft(blocks, axis=1)) ** 2, axis=0)
    power = spec * dt / (np.pi * m)
    power[0] /= 2
    if m % 2 == 0:
        power[-1] /= 2
    omega = 2 * np.pi * np.fft.rfftfreq(m, dt)
    return omega, power


def expected_periodogram(rate: float, amplitude: float, m: int, dt: float) -> np.ndarray:
    """Exact mean of :func:`psd_estimate` for one sampled telegraph record of length m.

    Sums the finite-record autocovariance a^2 exp(-2 rate |d| dt) with the
    Bartlett weights (m - |d|); no continuum or infinite-record approximation.
    """
    d = np.arange(1, m)
    acov = amplitude**2 * np.exp(-2 * rate * d * dt) * (m - d)
    k = np.arange(m // 2 + 1)
    phase = np.cos(2 * np.pi * np.outer(k, d) / m)
    two_sided = amplitude**2 * m + 2 * phase @ acov
    power = two_sided * dt / (np.pi * m)
    power[0] /= 2
    if m % 2 == 0:
        power[-1] /= 2
    return power


def log_binned_slope(omega, power, lo: float, hi: float, n_bins: int = 20) -> float:
    """Log-log slope of a periodogram after averaging into log-spaced bins on [lo, hi]."""
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got ({lo}, {hi})")
    w = np.asarray(omega, dtype=float)
    p = np.asarray(power, dtype=float)
    edges = np.geomspace(lo, hi, n_bins + 1)
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (w >= a) & (w < b)
        if np.any(sel):
            xs.append(np.exp(np.mean(np.log(w[sel]))))
            ys.append(np.mean(p[sel]))
    if len(xs) < 2:
        raise ValueError("fewer than two occupied frequency bins")
    return loglog_slope(xs, ys)
