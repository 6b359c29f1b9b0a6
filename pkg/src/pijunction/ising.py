"""Imaginary-time Ising representation of the dephasing and frustrated models.

After Trotter discretization the qubit worldline becomes a chain of L Ising
spins sigma_i = +-1 on slices of width delta_tau, with weights
exp[sum_{i<j} J(i,j) sigma_i sigma_j].  J > 0 is ferromagnetic.  Small chains
(L <= 24) are summed exactly; this is a verification tool, not a sampler.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .baths import BathSpec

MAX_ENUM_SLICES = 24
# spins summed in the inner (vectorized) block of the enumeration
_INNER_BITS = 11
_CHUNK = 1024


class KernelVariant(enum.Enum):
    PURE_DEPHASING = "PureDephasing"
    FRUSTRATED_OHMIC = "FrustratedOhmic"
    FRUSTRATED_SUB_OHMIC = "FrustratedSubOhmic"


class Tendency(enum.Enum):
    FERROMAGNETIC = "FerromagneticTendency"
    PARAMAGNETIC = "ParamagneticTendency"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class KernelSpec:
    variant: KernelVariant
    bath: BathSpec

    def __post_init__(self):
        v = KernelVariant(self.variant)
        object.__setattr__(self, "variant", v)
        s = self.bath.s
        if v is KernelVariant.FRUSTRATED_SUB_OHMIC and not 0 < s < 1:
            raise ValueError(f"FrustratedSubOhmic requires 0 < s < 1, got s={s}")
        if v is KernelVariant.FRUSTRATED_OHMIC and s != 1:
            raise ValueError(f"FrustratedOhmic requires s = 1, got s={s}")

    @property
    def lam(self) -> float:
        return self.bath.lam


def kernel_g(spec: BathSpec, dtau: float) -> float:
    """Bath propagator G(dtau) = Gamma(s+1) 2^{-(s+1)} Omega_c^2 (1 + Omega_c dtau / 2)^{-(s+1)}."""
    if not dtau >= 0:
        raise ValueError(f"dtau must be >= 0, got {dtau}")
    s, uc = spec.s, spec.omega_uc
    return float(special.gamma(s + 1) * 2.0 ** (-(s + 1)) * uc**2 * (1 + 0.5 * uc * dtau) ** (-(s + 1)))


def kernel_g_asymptotic(spec: BathSpec, dtau: float) -> float:
    """Large-separation form Gamma(s+1) Omega_c^2 (Omega_c dtau)^{-(s+1)}."""
    if not dtau > 0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    s, uc = spec.s, spec.omega_uc
    return float(special.gamma(s + 1) * uc**2 * (uc * dtau) ** (-(s + 1)))


def frustrated_kernel(lam: float, s: float, dtau: float) -> float:
    """Domain-wall interaction of the two-bath model.

    s = 1:  lam^2 / dtau^{2(1 + lam^2)}
    s < 1:  lam^2 exp(-lam^2 dtau^{1-s}) / dtau^2
    """
    if not dtau > 0:
        raise ValueError(f"dtau must be > 0, got {dtau}")
    if s > 1:
        raise ValueError(f"no frustrated kernel for s > 1 (got s={s})")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    lam2 = lam * lam
    if lam2 == 0:
        return 0.0
    # log space: the power of a tiny dtau overflows before the product does
    if s == 1:
        log_k = math.log(lam2) - 2 * (1 + lam2) * math.log(dtau)
    else:
        log_k = math.log(lam2) - lam2 * dtau ** (1 - s) - 2 * math.log(dtau)
    return math.exp(log_k) if log_k < 709.0 else math.inf


def evaluate_kernel(kernel: KernelSpec, dtau: float) -> float:
    if kernel.variant is KernelVariant.PURE_DEPHASING:
        return kernel_g(kernel.bath, dtau)
    return frustrated_kernel(kernel.lam, kernel.bath.s, dtau)


def decay_exponent(kernel: KernelSpec) -> float:
    """Asymptotic power-law exponent p of kernel ~ dtau^{-p}; inf for exponential decay."""
    if kernel.variant is KernelVariant.PURE_DEPHASING:
        return kernel.bath.s + 1
    if kernel.variant is KernelVariant.FRUSTRATED_OHMIC:
        return 2 * (1 + kernel.lam**2)
    return math.inf if kernel.lam > 0 else 2.0


def ferro_para_diagnostic(kernel: KernelSpec) -> Tendency:
    """Compare the decay with the 1/dtau^2 threshold of long-range Ising chains."""
    p = decay_exponent(kernel)
    if p < 2:
        return Tendency.FERROMAGNETIC
    if p > 2:
        return Tendency.PARAMAGNETIC
    return Tendency.MARGINAL


@dataclass(frozen=True)
class IsingInstance:
    n_slices: int
    delta_tau: float
    couplings: np.ndarray
    lam: float

    def __post_init__(self):
        j = np.asarray(self.couplings, dtype=float)
        L = self.n_slices
        if j.shape != (L, L):
            raise ValueError(f"couplings must be {L}x{L}")
        if not np.array_equal(j, j.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(j) != 0):
            raise ValueError("couplings must have zero diagonal")
        for r in range(1, L):
            d = np.diagonal(j, r)
            if np.any(d != d[0]):
                raise ValueError("couplings must depend on |i - j| only")
        j.setflags(write=False)
        object.__setattr__(self, "couplings", j)

    def to_csv(self) -> str:
        rows = ["i,j,J"]
        for i in range(self.n_slices):
            for k in range(i + 1, self.n_slices):
                rows.append(f"{i},{k},{float(self.couplings[i, k])!r}")
        return "\n".join(rows) + "\n"


def build_instance(kernel: KernelSpec, L: int, delta_tau: float) -> IsingInstance:
    """J(i,j) = w(|i-j| delta_tau) delta_tau^2 (midpoint rule for the double integral).

    w = lam^2 G for pure dephasing; the frustrated kernels already carry lam^2.
    """
    if int(L) != L or L < 2:
        raise ValueError(f"L must be an integer >= 2, got {L}")
    if not delta_tau > 0:
        raise ValueError(f"delta_tau must be > 0, got {delta_tau}")
    L = int(L)
    pref = kernel.lam**2 if kernel.variant is KernelVariant.PURE_DEPHASING else 1.0
    row = np.zeros(L)
    for r in range(1, L):
        row[r] = pref * evaluate_kernel(kernel, r * delta_tau) * delta_tau**2
    idx = np.abs(np.subtract.outer(np.arange(L), np.arange(L)))
    return IsingInstance(L, float(delta_tau), row[idx], kernel.lam)


@dataclass(frozen=True)
class EnumerationResult:
    log_z_ratio: float
    correlations: np.ndarray   # <sigma_0 sigma_r>, r = 0 .. L-1
    magnetization: np.ndarray  # <sigma_r>

    @property
    def z_ratio(self) -> float:
        return math.exp(self.log_z_ratio)

    def to_csv(self) -> str:
        rows = ["r,corr,magnetization"]
        for r, (c, m) in enumerate(zip(self.correlations, self.magnetization)):
            rows.append(f"{r},{float(c)!r},{float(m)!r}")
        return "\n".join(rows) + "\n"


def _spin_table(n: int) -> np.ndarray:
    codes = np.arange(2**n)[:, None]
    return 1.0 - 2.0 * ((codes >> np.arange(n)) & 1)


def enumerate_partition(instance: IsingInstance) -> EnumerationResult:
    """Exact Z / 2^L and correlations by summing all 2^L configurations.

    Only sigma_0 = +1 is enumerated; the sigma_0 = -1 half is its global spin
    flip with identical weights.  Sums are accumulated in a streaming
    log-sum-exp so no weight overflows.
    """
    L = instance.n_slices
    if L > MAX_ENUM_SLICES:
        raise ValueError(f"exact enumeration is limited to L <= {MAX_ENUM_SLICES}, got {L}")
    J = instance.couplings
    a = min(L, _INNER_BITS + 1)        # inner block: sigma_0 (fixed) + a-1 free spins
    sa = np.hstack([np.ones((2 ** (a - 1), 1)), _spin_table(a - 1)])
    ea = 0.5 * np.einsum("ki,ij,kj->k", sa, J[:a, :a], sa)
    b = L - a
    sb_all = _spin_table(b) if b else np.ones((1, 0))
    jab = J[:a, a:]

    m = -math.inf
    z = 0.0
    acc = np.zeros(L)
    for lo in range(0, sb_all.shape[0], _CHUNK):
        sb = sb_all[lo:lo + _CHUNK]
        eb = 0.5 * np.einsum("ki,ij,kj->k", sb, J[a:, a:], sb)
        e = ea[:, None] + eb[None, :] + sa @ jab @ sb.T
        mc = float(e.max())
        if mc > m:
            scale = math.exp(m - mc) if m > -math.inf else 0.0
            z *= scale
            acc *= scale
            m = mc
        w = np.exp(e - m)
        z += float(w.sum())
        acc[:a] += w.sum(axis=1) @ sa
        acc[a:] += w.sum(axis=0) @ sb
    corr = acc / z
    corr[0] = 1.0
    # flip partner contributes -acc: the magnetization cancels pairwise
    mag = (acc - acc) / (2 * z)
    log_z_ratio = math.log(2.0) + m + math.log(z) - L * math.log(2.0)
    return EnumerationResult(log_z_ratio, corr, mag)
