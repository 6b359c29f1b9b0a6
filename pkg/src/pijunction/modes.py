"""Single-particle spectrum, zero modes and the semiconductor-wire dispersion.

The BdG block [[0, iM], [-iM^T, 0]] has eigenvalues +/-Lambda_k where Lambda_k
are the singular values of M.  Left singular vectors phi_k solve
M M^T phi = Lambda^2 phi (eta components), right singular vectors xi_k solve
M^T M xi = Lambda^2 xi (nu components), and M^T phi = Lambda xi,
M xi = Lambda phi.  Zero modes of the eta sector sit in ker M^T, those of the
nu sector in ker M.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .wire import (
    JunctionProfile,
    SingleParticleMatrix,
    WireParameters,
    assemble_m,
    build_pi_junction,
    junction_centers,
)

log = logging.getLogger(__name__)

ZERO_TOL = 1e-10
# growing recursion solutions are rescaled; only their span matters
_RESCALE = 1e150


class ModeSolverError(RuntimeError):
    pass


class RecursionPivotWarning(UserWarning):
    """A vanishing recursion coefficient forced a restart of the propagation."""


class Sector(enum.Enum):
    ETA = "EtaSector"
    NU = "NuSector"


class Symmetry(enum.Enum):
    SYMMETRIC = "Symmetric"
    ANTISYMMETRIC = "Antisymmetric"
    EDGE_LEFT = "EdgeLeft"
    EDGE_RIGHT = "EdgeRight"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class ModeSet:
    """Singular triplets of M in ascending order of Lambda.

    ``phi[:, k]`` and ``xi[:, k]`` are the unit vectors belonging to
    ``lambdas[k]``.
    """

    lambdas: np.ndarray
    phi: np.ndarray
    xi: np.ndarray
    zero_tol: float = ZERO_TOL

    def __len__(self):
        return len(self.lambdas)

    def bdg_energies(self) -> np.ndarray:
        """All 2N eigenvalues +/-Lambda_k of the BdG block, sorted."""
        return np.sort(np.concatenate([-self.lambdas, self.lambdas]))

    def zero_levels(self, tol: float | None = None) -> np.ndarray:
        tol = self.zero_tol if tol is None else tol
        return np.flatnonzero(self.lambdas < tol)

    def count_zero_energy(self, tol: float | None = None) -> int:
        """Zero eigenvalues of the 2N x 2N BdG block (= Majorana zero modes)."""
        tol = self.zero_tol if tol is None else tol
        return int(np.count_nonzero(np.abs(self.bdg_energies()) < tol))

    def pairing_residuals(self, m: np.ndarray) -> np.ndarray:
        """max(|M^T phi - Lambda xi|, |M xi - Lambda phi|) per level."""
        r1 = np.linalg.norm(m.T @ self.phi - self.xi * self.lambdas, axis=0)
        r2 = np.linalg.norm(m @ self.xi - self.phi * self.lambdas, axis=0)
        return np.maximum(r1, r2)


def solve_modes(m: SingleParticleMatrix | np.ndarray, zero_tol: float = ZERO_TOL) -> ModeSet:
    """Full single-particle solution of the chain.

    Uses the SVD of M rather than the eigenvalues of M M^T: the square root
    of an eigenvalue carries only half the working precision, which would bury
    exponentially split levels under ~1e-8 noise.
    """
    mat = m.m if isinstance(m, SingleParticleMatrix) else np.asarray(m, dtype=float)
    try:
        u, s, vt = np.linalg.svd(mat)
    except np.linalg.LinAlgError as exc:
        raise ModeSolverError(
            f"SVD of the {mat.shape[0]}x{mat.shape[1]} single-particle matrix did not "
            f"converge (max |entry| = {np.max(np.abs(mat)):.3g}): {exc}"
        ) from exc
    order = np.argsort(s, kind="stable")
    lambdas = s[order]
    phi = u[:, order]
    # the SVD pairs are already consistent (M xi = Lambda phi); rebuilding xi
    # from M^T phi / Lambda would amplify rounding on small nonzero levels
    xi = vt.T[:, order]
    return ModeSet(lambdas, phi, xi, zero_tol)


def five_term_residual(params: WireParameters, vec: np.ndarray, lam2: float) -> float:
    """Largest interior violation of the five-term band recursion.

    alpha_n beta_{n+1} v_{n+2} + mu (alpha_n + beta_n) v_{n+1}
    + (alpha_n^2 + beta_{n-1}^2 + mu^2) v_n + mu (alpha_{n-1} + beta_{n-1}) v_{n-1}
    + beta_{n-1} alpha_{n-2} v_{n-2} = lam2 v_n

    With M laid out as in :mod:`pijunction.wire` this is the row form of
    M^T M, so it is satisfied by the xi vectors of a :class:`ModeSet`.
    """
    a, b, mu = params.alphas, params.betas, params.mu
    v = np.asarray(vec, dtype=float)
    worst = 0.0
    for i in range(2, params.n_sites - 2):
        lhs = (
            a[i] * b[i + 1] * v[i + 2]
            + mu * (a[i] + b[i]) * v[i + 1]
            + (a[i] ** 2 + b[i - 1] ** 2 + mu**2) * v[i]
            + mu * (a[i - 1] + b[i - 1]) * v[i - 1]
            + b[i - 1] * a[i - 2] * v[i - 2]
        )
        worst = max(worst, abs(lhs - lam2 * v[i]))
    return worst


@dataclass(frozen=True)
class ZeroMode:
    profile: np.ndarray
    sector: Sector
    symmetry: Symmetry
    energy_residual: float
    sites: np.ndarray

    def __post_init__(self):
        self.profile.setflags(write=False)

    def parity(self, center: int = 0) -> float:
        """<profile|P|profile> for the reflection n -> 2*center - n."""
        return float(self.profile @ _reflection(self.sites, center) @ self.profile)


def _reflection(sites: np.ndarray, center: int) -> np.ndarray:
    n = len(sites)
    p = np.zeros((n, n))
    lookup = {int(s): i for i, s in enumerate(sites)}
    for i, s in enumerate(sites):
        j = lookup.get(2 * center - int(s))
        if j is not None:
            p[j, i] = 1.0
    return p


def _sector_bands(params: WireParameters, sector: Sector):
    """(lower, upper) off-diagonals of the sector matrix T (T = M^T or M)."""
    a, b = params.alphas, params.betas
    if sector is Sector.ETA:
        return b, a
    return a, b


def _sweep_right(vecs, lower, upper, mu, r0, n, pivots):
    """Rows r >= r0 of T v = 0, each fixing v[r+1]."""
    for r in range(r0, n - 1):
        if upper[r] != 0.0:
            for w in vecs:
                left = lower[r - 1] * w[r - 1] if r > 0 else 0.0
                w[r + 1] = -(left + mu * w[r]) / upper[r]
                if abs(w[r + 1]) > _RESCALE:
                    w /= _RESCALE
        else:
            # v[r+1] is unconstrained: restart on the decoupled segment
            pivots.append(r)
            fresh = np.zeros(n)
            fresh[r + 1] = 1.0
            vecs.append(fresh)


def _sweep_left(vecs, lower, upper, mu, r0, n, pivots):
    """Rows r <= r0 of T v = 0, each fixing v[r-1]."""
    for r in range(r0, 0, -1):
        if lower[r - 1] != 0.0:
            for w in vecs:
                right = upper[r] * w[r + 1] if r + 1 < n else 0.0
                w[r - 1] = -(mu * w[r] + right) / lower[r - 1]
                if abs(w[r - 1]) > _RESCALE:
                    w /= _RESCALE
        else:
            pivots.append(r)
            fresh = np.zeros(n)
            fresh[r - 1] = 1.0
            vecs.append(fresh)


def _truncate_growth(v: np.ndarray, from_left: bool) -> np.ndarray:
    """Cut a boundary solution where its envelope bottoms out.

    A mode bound to one end decays into the bulk, but the exact recursion
    picks up the growing branch on the far side of a junction; the kept part
    ends at the envelope minimum, where the cut costs the least residual.
    """
    env = np.hypot(v[:-1], v[1:])
    order = env if from_left else env[::-1]
    k = int(np.argmin(order))
    out = v.copy()
    if from_left:
        out[k + 2:] = 0.0
    else:
        out[: len(v) - k - 2] = 0.0
    return out


def _seed_basis(lower, upper, mu, n, seed, pivots):
    if seed == "left":
        v = np.zeros(n)
        v[0] = 1.0
        vecs = [v]
        _sweep_right(vecs, lower, upper, mu, 0, n, pivots)
        return [_truncate_growth(w, from_left=True) for w in vecs]
    if seed == "right":
        v = np.zeros(n)
        v[n - 1] = 1.0
        vecs = [v]
        _sweep_left(vecs, lower, upper, mu, n - 1, n, pivots)
        return [_truncate_growth(w, from_left=False) for w in vecs]
    c = seed
    a, b = np.zeros(n), np.zeros(n)
    a[c] = 1.0
    b[c + 1] = 1.0
    vecs = [a, b]
    _sweep_right(vecs, lower, upper, mu, c + 1, n, pivots)
    _sweep_left(vecs, lower, upper, mu, c, n, pivots)
    return vecs


def _kernel_from_basis(t_mat: np.ndarray, basis: list[np.ndarray], tol: float) -> np.ndarray:
    cols = [v / np.linalg.norm(v) for v in basis if np.all(np.isfinite(v)) and np.linalg.norm(v) > 0]
    if not cols:
        return np.zeros((t_mat.shape[0], 0))
    b = np.column_stack(cols)
    q, r = np.linalg.qr(b)
    keep = np.abs(np.diag(r)) > 1e-12
    q = q[:, keep]
    _, s, vt = np.linalg.svd(t_mat @ q, full_matrices=False)
    return q @ vt[s <= tol].T


def _classify(vectors: np.ndarray, sites: np.ndarray, centers: list[int], parity_tol: float):
    """Rotate a kernel basis into edge-localized and parity-definite vectors."""
    n = len(sites)
    if vectors.shape[1] == 0:
        return []
    quarter = n // 4
    w = np.zeros(n)
    w[:quarter] = -1.0
    w[n - quarter:] = 1.0
    evals, evecs = np.linalg.eigh(vectors.T @ (w[:, None] * vectors))
    out = []
    central = []
    for val, c in zip(evals, evecs.T):
        vec = vectors @ c
        if val < -0.5:
            out.append((vec, Symmetry.EDGE_LEFT))
        elif val > 0.5:
            out.append((vec, Symmetry.EDGE_RIGHT))
        else:
            central.append(vec)
    if central:
        cmat = np.column_stack(central)
        if centers:
            p = _reflection(sites, centers[0])
            pv, pe = np.linalg.eigh(cmat.T @ p @ cmat)
            for val, c in zip(pv, pe.T):
                vec = cmat @ c
                if val > 1 - parity_tol:
                    out.append((vec, Symmetry.SYMMETRIC))
                elif val < -1 + parity_tol:
                    out.append((vec, Symmetry.ANTISYMMETRIC))
                else:
                    out.append((vec, Symmetry.UNCLASSIFIED))
        else:
            out.extend((cmat[:, i], Symmetry.UNCLASSIFIED) for i in range(cmat.shape[1]))
    return out


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(vec))
    return vec if vec[k] >= 0 else -vec


def zero_modes_by_recursion(
    params: WireParameters, tol: float = ZERO_TOL, parity_tol: float = 1e-6
) -> list[ZeroMode]:
    """Zero modes from the three-term kernel recursion.

    For each sector the rows ``T v = 0`` (T = M^T for eta, M for nu) are
    propagated away from each chain end and from each pi-junction center.
    Where a recursion coefficient vanishes (the generic situation in the
    Kitaev limit) the amplitude beyond it is free; propagation restarts there
    with a fresh basis vector.  Within the span generated by each seed the
    combinations with ``|T v| <= tol`` are kept, the kept vectors of a sector
    are orthonormalized and then labelled EdgeLeft/EdgeRight by where their
    weight sits, or Symmetric/Antisymmetric under reflection about the
    junction center.
    """
    n = params.n_sites
    m = assemble_m(params).m
    centers = junction_centers(params)
    sites = params.sites
    half = n // 2
    seeds = ["left", "right"] + [c + half for c in centers]
    modes: list[ZeroMode] = []
    pivots: list[int] = []
    for sector in (Sector.ETA, Sector.NU):
        lower, upper = _sector_bands(params, sector)
        t_mat = m.T if sector is Sector.ETA else m
        found = []
        for seed in seeds:
            basis = _seed_basis(lower, upper, params.mu, n, seed, pivots)
            k = _kernel_from_basis(t_mat, basis, tol)
            found.extend(k.T)
        if not found:
            continue
        u, s, _ = np.linalg.svd(np.column_stack(found), full_matrices=False)
        kernel = u[:, s > 1e-8]
        for vec, sym in _classify(kernel, sites, centers, parity_tol):
            vec = _fix_sign(vec / np.linalg.norm(vec))
            res = float(np.linalg.norm(t_mat @ vec))
            if res <= tol:
                modes.append(ZeroMode(vec, sector, sym, res, sites))
    if pivots:
        warnings.warn(
            f"{len(pivots)} vanishing recursion coefficients; propagation restarted on "
            "the decoupled segments",
            RecursionPivotWarning,
            stacklevel=2,
        )
    return modes


def kernel_basis(modes: ModeSet, sector: Sector, tol: float | None = None) -> np.ndarray:
    """Orthonormal zero-level vectors of one sector from a solved ModeSet."""
    idx = modes.zero_levels(tol)
    return (modes.phi if sector is Sector.ETA else modes.xi)[:, idx]


def max_principal_angle(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape[1] != b.shape[1]:
        return float(np.pi / 2)
    if a.shape[1] == 0:
        return 0.0
    return float(np.max(subspace_angles(a, b)))


def analytic_junction_modes(
    mu: float, t: float, upsilon: float, N: int, pairing_sign: int = 1
) -> tuple[ZeroMode, ZeroMode]:
    """Closed-form symmetric and antisymmetric junction Majoranas.

    Kitaev limit |gamma| = 1 of the short pi-junction, infinite-wire series
    truncated to the sites of an N-site chain and normalized to unit norm.
    With p = t + upsilon and q = t - upsilon:

        zeta_s: 1 at n=0, -mu/(2p) at n=+/-1, -(q/2 - mu^2/(4p)) at n=+/-2,
                then times (-mu/2) per further site;
        zeta_a: +/-(-mu/2)^(|n|-1) at n=+/-1, +/-2, ...

    Both live in the eta sector (ker M^T) for pairing_sign = +1.  Flipping
    every pairing (pairing_sign = -1) swaps alpha and beta on all bonds, i.e.
    M -> M^T, so the same vectors reappear in the nu sector (ker M).
    """
    if not abs(mu) < 1:
        raise ValueError(f"series needs |mu| < 1, got mu={mu}")
    if N % 2 or N < 6:
        raise ValueError("N must be even and >= 6")
    if pairing_sign not in (1, -1):
        raise ValueError("pairing_sign must be +1 or -1")
    p, q = t + upsilon, t - upsilon
    sector = Sector.ETA if pairing_sign == 1 else Sector.NU
    sites = np.arange(-N // 2, N // 2)
    r = -mu / 2
    c2 = -(q / 2 - mu**2 / (4 * p))
    sym = np.zeros(N)
    anti = np.zeros(N)
    for i, n in enumerate(sites):
        k = abs(int(n))
        if k == 0:
            sym[i] = 1.0
        elif k == 1:
            sym[i] = -mu / (2 * p)
            anti[i] = np.sign(n)
        else:
            sym[i] = c2 * r ** (k - 2)
            anti[i] = np.sign(n) * r ** (k - 1)
    sym /= np.linalg.norm(sym)
    anti /= np.linalg.norm(anti)
    return (
        ZeroMode(sym, sector, Symmetry.SYMMETRIC, float("nan"), sites),
        ZeroMode(anti, sector, Symmetry.ANTISYMMETRIC, float("nan"), sites),
    )


def _edge_weight(vec: np.ndarray) -> float:
    n = len(vec)
    quarter = max(n // 4, 1)
    w = vec**2
    return float(w[:quarter].sum() + w[n - quarter:].sum())


def edge_splitting(params: WireParameters, edge_fraction: float = 0.5) -> float:
    """Smallest Lambda whose phi or xi keeps most weight in the outer quarters."""
    modes = solve_modes(assemble_m(params))
    for k in range(len(modes)):
        if max(_edge_weight(modes.phi[:, k]), _edge_weight(modes.xi[:, k])) > edge_fraction:
            return float(modes.lambdas[k])
    return float("nan")


def edge_splitting_scan(profile: JunctionProfile, mu: float, N_list) -> list[tuple[int, float]]:
    ns = [int(x) for x in N_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("N_list must be strictly ascending")
    return [(n, edge_splitting(build_pi_junction(n, profile, mu))) for n in ns]


def fit_splitting_decay(scan) -> float | None:
    """Slope of log(splitting) against N; None when there is nothing to fit."""
    pts = [(n, v) for n, v in scan if v > 0 and np.isfinite(v)]
    if len(pts) < 2:
        return None
    n, v = np.array(pts).T
    return float(np.polyfit(n, np.log(v), 1)[0])


@dataclass(frozen=True)
class DispersionPoint:
    k: float
    e_plus: float
    e_minus: float


def dispersion(k: float, k_so: float, delta_abs: float) -> DispersionPoint:
    """Proximitized Rashba wire bands, units hbar^2/2m = 1."""
    root = np.sqrt((2 * k_so * k) ** 2 + delta_abs**2)
    base = k**2 + k_so**2
    return DispersionPoint(float(k), float(base + root), float(base - root))


def dispersion_curve(ks, k_so: float, delta_abs: float) -> list[DispersionPoint]:
    return [dispersion(k, k_so, delta_abs) for k in np.asarray(ks, dtype=float)]
