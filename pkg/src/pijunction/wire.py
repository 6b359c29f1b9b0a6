"""Majorana chain parameter profiles and the single-particle matrix M.

Sites are labelled n = -N/2 ... N/2-1 and bond n couples sites n and n+1,
so a chain of N sites carries N-1 bonds indexed -N/2 ... N/2-2.  Every bond
stores the Majorana couplings (alpha_n, beta_n) = (t_n + gamma_n, t_n - gamma_n),
with hopping t_n and pairing gamma_n.  Energies are in units of the bulk
hopping, which is fixed to 1.

The quadratic Hamiltonian is (1/4) v^T [[0, iM], [-iM^T, 0]] v with
v = (eta_{-N/2}, ..., eta_{N/2-1}, nu_{-N/2}, ..., nu_{N/2-1}) and M the
tridiagonal matrix with mu on the diagonal, alpha_n below it and beta_n above.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: Bohr magneton in natural units; only ratios and phases of the effective
#: pairing are ever used, so the value is a convention.
MU_B = 1.0


class JunctionKind(enum.Enum):
    UNIFORM_KITAEV = "UniformKitaev"
    SHORT_JUNCTION = "ShortJunction"
    LONG_JUNCTION = "LongJunction"


def _check_length(n_sites: int) -> None:
    if int(n_sites) != n_sites or n_sites < 4 or n_sites % 2:
        raise ValueError(f"n_sites must be an even integer >= 4, got {n_sites!r}")


@dataclass(frozen=True)
class WireParameters:
    """Per-bond couplings of an open chain.

    ``bonds[i]`` is the (alpha, beta) pair of bond ``n = -N/2 + i``.
    """

    n_sites: int
    mu: float
    bonds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        _check_length(self.n_sites)
        bonds = tuple((float(a), float(b)) for a, b in self.bonds)
        if len(bonds) != self.n_sites - 1:
            raise ValueError(
                f"expected {self.n_sites - 1} bonds for N={self.n_sites}, got {len(bonds)}"
            )
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "n_sites", int(self.n_sites))

    @property
    def sites(self) -> np.ndarray:
        half = self.n_sites // 2
        return np.arange(-half, half)

    @property
    def bond_indices(self) -> np.ndarray:
        half = self.n_sites // 2
        return np.arange(-half, half - 1)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.bonds])

    @property
    def betas(self) -> np.ndarray:
        return np.array([b for _, b in self.bonds])

    def bond(self, n: int) -> tuple[float, float]:
        """(alpha_n, beta_n) addressed by the physical bond label n."""
        i = n + self.n_sites // 2
        if not 0 <= i < len(self.bonds):
            raise IndexError(f"bond {n} outside chain of {self.n_sites} sites")
        return self.bonds[i]

    def hopping_pairing(self) -> tuple[np.ndarray, np.ndarray]:
        """Split the bonds into hopping t_n and pairing gamma_n."""
        a, b = self.alphas, self.betas
        return (a + b) / 2, (a - b) / 2

    @classmethod
    def from_hopping_pairing(cls, mu: float, hopping, pairing) -> "WireParameters":
        t = np.asarray(hopping, dtype=float)
        g = np.asarray(pairing, dtype=float)
        return cls(len(t) + 1, mu, tuple(zip(t + g, t - g)))

    # plain-text key-value serialization
    def to_text(self) -> str:
        lines = [f"n_sites {self.n_sites}", f"mu {self.mu!r}", "# n alpha beta"]
        for n, (a, b) in zip(self.bond_indices, self.bonds):
            lines.append(f"{n} {a!r} {b!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WireParameters":
        header: dict[str, str] = {}
        rows: list[tuple[int, float, float]] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] in ("n_sites", "mu"):
                if len(parts) != 2:
                    raise ValueError(f"malformed header line: {raw!r}")
                header[parts[0]] = parts[1]
            elif len(parts) == 3:
                rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
            else:
                raise ValueError(f"malformed bond line: {raw!r}")
        missing = {"n_sites", "mu"} - header.keys()
        if missing:
            raise ValueError(f"missing header keys: {sorted(missing)}")
        n_sites = int(header["n_sites"])
        rows.sort()
        expected = list(range(-(n_sites // 2), n_sites // 2 - 1))
        if [r[0] for r in rows] != expected:
            raise ValueError("bond labels must cover -N/2 .. N/2-2 exactly once")
        return cls(n_sites, float(header["mu"]), tuple((a, b) for _, a, b in rows))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WireParameters":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class JunctionProfile:
    """Shape of the pairing profile along the wire.

    For ``SHORT_JUNCTION`` the two Kitaev segments (pairing -gamma / +gamma)
    meet through two bonds of tunneling ``tunneling`` and transition pairing
    -``upsilon`` / +``upsilon``.  ``LONG_JUNCTION`` inserts ``normal_length``
    unpaired bonds of hopping ``tunneling`` between the segments.
    """

    kind: JunctionKind
    gamma: float
    tunneling: float = 1.0
    upsilon: float = 0.0
    normal_length: int = 0

    def __post_init__(self):
        kind = JunctionKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is JunctionKind.SHORT_JUNCTION:
            if not self.tunneling < 1:
                raise ValueError(f"short junction needs t < 1, got t={self.tunneling}")
            if not self.upsilon < self.gamma:
                raise ValueError(
                    f"short junction needs upsilon < gamma, got {self.upsilon} >= {self.gamma}"
                )
            if self.upsilon < 0:
                # a negative transition pairing would flip the sign three times
                raise ValueError("short junction needs upsilon >= 0 for a single pi phase jump")
        if kind is JunctionKind.LONG_JUNCTION and self.normal_length < 1:
            raise ValueError("long junction needs normal_length >= 1")
        if kind is not JunctionKind.UNIFORM_KITAEV and self.gamma <= 0:
            raise ValueError("junction profiles need a positive bulk pairing gamma")


def build_uniform_kitaev(N: int, t: float, gamma: float, mu: float) -> WireParameters:
    _check_length(N)
    return WireParameters(N, mu, ((t + gamma, t - gamma),) * (N - 1))


def _long_junction_window(normal_length: int) -> tuple[int, int]:
    # bonds -ceil(L/2) .. floor(L/2)-1; mirror symmetric about site 0 for even L
    lo = -((normal_length + 1) // 2)
    return lo, lo + normal_length - 1


def build_pi_junction(N: int, profile: JunctionProfile, mu: float) -> WireParameters:
    _check_length(N)
    g = profile.gamma
    if profile.kind is JunctionKind.UNIFORM_KITAEV:
        return build_uniform_kitaev(N, 1.0, g, mu)

    half = N // 2
    bonds = []
    if profile.kind is JunctionKind.SHORT_JUNCTION:
        t, u = profile.tunneling, profile.upsilon
        for n in range(-half, half - 1):
            if n <= -2:
                bonds.append((1 - g, 1 + g))
            elif n == -1:
                bonds.append((t - u, t + u))
            elif n == 0:
                bonds.append((t + u, t - u))
            else:
                bonds.append((1 + g, 1 - g))
        return WireParameters(N, mu, tuple(bonds))

    lo, hi = _long_junction_window(profile.normal_length)
    if lo <= -half or hi >= half - 2:
        raise ValueError(
            f"N={N} too short for a normal region of {profile.normal_length} bonds"
        )
    t = profile.tunneling
    for n in range(-half, half - 1):
        if n < lo:
            bonds.append((1 - g, 1 + g))
        elif n <= hi:
            bonds.append((t, t))
        else:
            bonds.append((1 + g, 1 - g))
    return WireParameters(N, mu, tuple(bonds))


@dataclass(frozen=True)
class SingleParticleMatrix:
    m: np.ndarray
    params: WireParameters = field(repr=False)
    layout: str = "H = (1/4) v^T [[0, iM], [-iM^T, 0]] v, v = (eta..., nu...)"

    def __post_init__(self):
        self.m.setflags(write=False)


def assemble_m(params: WireParameters) -> SingleParticleMatrix:
    n = params.n_sites
    m = np.zeros((n, n))
    m[np.diag_indices(n)] = params.mu
    idx = np.arange(n - 1)
    m[idx + 1, idx] = params.alphas
    m[idx, idx + 1] = params.betas
    return SingleParticleMatrix(m, params)


def pairing_sign_changes(params: WireParameters, atol: float = 0.0) -> int:
    """Number of sign flips of gamma_n along the chain, zeros skipped."""
    _, gamma = params.hopping_pairing()
    signs = np.sign(gamma[np.abs(gamma) > atol])
    return int(np.count_nonzero(np.diff(signs)))


def junction_centers(params: WireParameters, atol: float = 0.0) -> list[int]:
    """Site labels sitting midway across each sign flip of the pairing."""
    _, gamma = params.hopping_pairing()
    labels = params.bond_indices
    nz = np.flatnonzero(np.abs(gamma) > atol)
    centers = []
    for i, j in zip(nz[:-1], nz[1:]):
        if np.sign(gamma[i]) != np.sign(gamma[j]):
            # last bond before the flip ends on site labels[i]+1, first after starts at labels[j]
            centers.append(int(np.floor((labels[i] + 1 + labels[j]) / 2)))
    return centers


@dataclass(frozen=True)
class PairingParameters:
    alpha_so: float
    delta: complex
    g_factor: float
    b_field: float
    e_hat_arg: float = 0.0
    mu_b: float = MU_B


def effective_pairing(p: PairingParameters) -> complex:
    """gamma e^{i phi} = alpha Delta e^{i arg(e)} / (g mu_B |B0|)."""
    if not p.b_field > 0:
        raise ValueError(f"b_field must be positive, got {p.b_field}")
    if p.g_factor == 0:
        raise ValueError("g_factor must be nonzero")
    return p.alpha_so * complex(p.delta) * cmath.exp(1j * p.e_hat_arg) / (
        p.g_factor * p.mu_b * p.b_field
    )
