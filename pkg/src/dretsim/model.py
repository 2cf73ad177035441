"""Domain types and operator builders for exciton chains coupled to phonons.

Unit conventions used throughout the package:

* hbar = 1.
* Every energy-like quantity (site energies Omega_j, dipolar couplings
  J_jk, mode frequency omega, mode couplings f_j, reorganization energies
  lambda_j, relaxation rates gamma_j, thermal energy k_B T / hbar) is an
  angular frequency expressed in units of a declared reference coupling
  J_ref.
* Time is measured in units of 1 / J_ref.
* Phase space is dimensionless: Q = q sqrt(m omega / hbar),
  P = p / sqrt(m omega hbar).  The oscillator mass m and the equilibrium
  displacements d_j never appear on their own; they enter only through
  f_j = sqrt(m omega^3 / 2 hbar) d_j, which puts the equilibrium position
  of the mode for an exciton on site j at Q_j = sqrt(2) f_j / omega.

Site indices in the public API are 1-based (molecule 1 .. molecule N),
matching the usual labelling of chain figures; array storage is 0-based.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UnitSystem",
    "DIMENSIONLESS",
    "MoleculeChain",
    "SharedMode",
    "BathSpec",
    "ValidationReport",
    "validate_chain",
    "validate_mode",
    "validate_bath",
    "build_polaron_hamiltonian",
    "build_effective_electronic_hamiltonian",
    "electronic_hamiltonian",
    "lamb_shift",
    "spectral_density",
    "bath_response_highT",
    "MAX_POLARON_DIM",
]

# Hard ceiling on the site (x) Fock product dimension; protects against
# runaway truncation escalation rather than physical limits.
MAX_POLARON_DIM = 20000


@dataclass(frozen=True)
class UnitSystem:
    """Record of the dimensionless convention (see module docstring)."""

    hbar: float = 1.0
    reference: str = "J_ref"

    def describe(self) -> str:
        return (
            "hbar = 1; energies are angular frequencies in units of "
            f"{self.reference}; time in units of 1/{self.reference}"
        )


DIMENSIONLESS = UnitSystem()


@dataclass
class ValidationReport:
    """Outcome of a structural validation; failures name the violated rule."""

    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def require(self) -> None:
        """Raise ValueError carrying every failure if validation failed."""
        if self.failures:
            raise ValueError("; ".join(self.failures))


@dataclass
class MoleculeChain:
    """Electronic sites: energies Omega_j and dipolar couplings J_jk.

    Parameters
    ----------
    site_energies : array_like, shape (N,)
        Omega_j in units of J_ref.
    couplings : array_like, shape (N, N)
        Symmetric real matrix J_jk with zero diagonal.
    """

    site_energies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        self.site_energies = np.atleast_1d(
            np.asarray(self.site_energies, dtype=float))
        self.couplings = np.atleast_2d(np.asarray(self.couplings, dtype=float))

    @property
    def n_sites(self) -> int:
        return self.site_energies.size

    @classmethod
    def linear(cls, site_energies, coupling: float = 1.0) -> "MoleculeChain":
        """Nearest-neighbour chain with uniform coupling."""
        energies = np.atleast_1d(np.asarray(site_energies, dtype=float))
        n = energies.size
        J = np.zeros((n, n))
        for i in range(n - 1):
            J[i, i + 1] = J[i + 1, i] = coupling
        return cls(energies, J)


@dataclass
class SharedMode:
    """A single phonon mode of frequency omega with per-site couplings f_j."""

    frequency: float
    site_couplings: np.ndarray

    def __post_init__(self):
        self.frequency = float(self.frequency)
        self.site_couplings = np.atleast_1d(
            np.asarray(self.site_couplings, dtype=float))

    def equilibrium_position(self, site: int) -> float:
        """Dimensionless mode center Q_j = sqrt(2) f_j / omega (1-based j)."""
        return math.sqrt(2.0) * self.site_couplings[site - 1] / self.frequency


@dataclass
class BathSpec:
    """Per-site Drude bath: reorganization lambda_j, relaxation gamma_j,
    shared-coupling scaling s_j, and thermal energy k_B T / hbar.

    s_j = 0 describes independent local baths.  Nonzero s_j describes a
    shared bath in which every mode of bath j also couples to all other
    molecules with relative weight s_j, producing the time-dependent Lamb
    shift 2 s_j lambda_j exp(-gamma_j t).
    """

    reorganization: np.ndarray
    relaxation: np.ndarray
    scaling: np.ndarray
    thermal_energy: float

    def __post_init__(self):
        self.reorganization = np.atleast_1d(
            np.asarray(self.reorganization, dtype=float))
        self.relaxation = np.atleast_1d(
            np.asarray(self.relaxation, dtype=float))
        self.scaling = np.atleast_1d(np.asarray(self.scaling, dtype=float))
        self.thermal_energy = float(self.thermal_energy)
        sites = self.high_temperature_violations()
        if sites:
            warnings.warn(
                "high-temperature kernel is unreliable: beta*hbar*gamma_j >= 1 "
                f"at sites {sites}; results outside the validity regime",
                stacklevel=2,
            )

    @property
    def n_sites(self) -> int:
        return self.reorganization.size

    @property
    def beta(self) -> float:
        """Inverse thermal energy (hbar / k_B T)."""
        return 1.0 / self.thermal_energy

    def high_temperature_violations(self) -> list[int]:
        """1-based sites where beta*hbar*gamma_j >= 1 (kernel invalid)."""
        if self.thermal_energy <= 0:
            return []
        bad = np.nonzero(self.beta * self.relaxation >= 1.0)[0]
        return [int(j) + 1 for j in bad]

    @property
    def is_local(self) -> bool:
        return bool(np.all(self.scaling == 0.0))

    @classmethod
    def uniform(cls, n_sites: int, reorganization: float, relaxation: float,
                thermal_energy: float, scaling=0.0) -> "BathSpec":
        s = np.broadcast_to(np.asarray(scaling, dtype=float), (n_sites,))
        return cls(
            np.full(n_sites, reorganization),
            np.full(n_sites, relaxation),
            np.array(s, dtype=float),
            thermal_energy,
        )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_chain(chain: MoleculeChain) -> ValidationReport:
    """Check MoleculeChain structural invariants, naming each violation."""
    r = ValidationReport()
    n = chain.n_sites
    if n < 1:
        r.failures.append("chain must have at least one site")
        return r
    J = chain.couplings
    if J.shape != (n, n):
        r.failures.append(
            f"couplings must be {n}x{n}, got {J.shape}")
        return r
    if not np.all(np.isfinite(chain.site_energies)):
        r.failures.append("site energies must be finite")
    if not np.all(np.isfinite(J)):
        r.failures.append("couplings must be finite")
        return r
    if not np.array_equal(J, J.T):
        r.failures.append("asymmetric couplings: J_jk != J_kj")
    if np.any(np.diag(J) != 0.0):
        r.failures.append("coupling matrix must have zero diagonal")
    return r


def validate_mode(mode: SharedMode, n_sites: int) -> ValidationReport:
    r = ValidationReport()
    if not (mode.frequency > 0.0 and np.isfinite(mode.frequency)):
        r.failures.append("mode frequency must be positive and finite")
    if mode.site_couplings.shape != (n_sites,):
        r.failures.append(
            f"mode needs {n_sites} site couplings, got "
            f"{mode.site_couplings.shape}")
    elif not np.all(np.isfinite(mode.site_couplings)):
        r.failures.append("mode couplings must be finite")
    return r


def validate_bath(bath: BathSpec, n_sites: int) -> ValidationReport:
    r = ValidationReport()
    for name, arr in (("reorganization", bath.reorganization),
                      ("relaxation", bath.relaxation),
                      ("scaling", bath.scaling)):
        if arr.shape != (n_sites,):
            r.failures.append(
                f"bath {name} needs length {n_sites}, got {arr.shape}")
    if r.failures:
        return r
    if np.any(bath.reorganization < 0.0):
        r.failures.append("reorganization energies must be >= 0")
    if np.any(bath.relaxation <= 0.0):
        r.failures.append("relaxation rates must be > 0")
    if not bath.thermal_energy > 0.0:
        r.failures.append("thermal energy must be > 0")
    if not all(np.all(np.isfinite(a)) for a in
               (bath.reorganization, bath.relaxation, bath.scaling)):
        r.failures.append("bath parameters must be finite")
    return r


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def electronic_hamiltonian(chain: MoleculeChain,
                           mode: SharedMode | None = None) -> np.ndarray:
    """Bare electronic Hamiltonian H_e (N x N, units of hbar J_ref).

    Diagonal Omega_j, plus the polaron shift f_j^2/omega when a shared
    mode is given; off-diagonal J_jk.
    """
    h = np.diag(chain.site_energies.astype(float)) + chain.couplings
    if mode is not None:
        h = h + np.diag(mode.site_couplings ** 2 / mode.frequency)
    return h


def build_polaron_hamiltonian(chain: MoleculeChain, mode: SharedMode,
                              n_max: int) -> np.ndarray:
    """Exciton + single shared mode Hamiltonian on |site> x |Fock|.

    H = H_e + H_ph + H_int with site-major basis index j*(n_max+1)+n:

    * H_e: diagonal Omega_j + f_j^2/omega, off-diagonal J_jk,
    * H_ph = omega (n + 1/2),
    * H_int = -f_j |j><j| (b^dag + b), ladder elements sqrt(n+1).

    Dense Hermitian ndarray, dimension N*(n_max+1).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n_sites = chain.n_sites
    dim = n_sites * (n_max + 1)
    if dim > MAX_POLARON_DIM:
        raise ValueError(
            f"polaron dimension {dim} exceeds guard {MAX_POLARON_DIM}")
    levels = np.arange(n_max + 1)
    ladder = np.diag(np.sqrt(levels[1:]), 1)     # annihilation operator b
    position = ladder + ladder.T                 # b^dag + b
    h_ph = np.diag(mode.frequency * (levels + 0.5))
    h_e = electronic_hamiltonian(chain, mode)
    eye_ph = np.eye(n_max + 1)
    h = np.kron(h_e, eye_ph) + np.kron(np.eye(n_sites), h_ph)
    for j in range(n_sites):
        proj = np.zeros((n_sites, n_sites))
        proj[j, j] = 1.0
        h -= mode.site_couplings[j] * np.kron(proj, position)
    return h


def lamb_shift(bath: BathSpec, site: int, t) -> np.ndarray | float:
    """Time-dependent Lamb shift of site j: 2 s_j lambda_j exp(-gamma_j t).

    `site` is 1-based; `t` may be a scalar or array of times >= 0.
    """
    j = site - 1
    return (2.0 * bath.scaling[j] * bath.reorganization[j]
            * np.exp(-bath.relaxation[j] * np.asarray(t, dtype=float)))


def build_effective_electronic_hamiltonian(chain: MoleculeChain,
                                           bath: BathSpec,
                                           t: float) -> np.ndarray:
    """Effective electronic Hamiltonian under a shared Drude bath.

    Diagonal Omega_j + lambda_j + 2 s_j lambda_j exp(-gamma_j t);
    off-diagonal J_jk.  At t=0 the diagonal is Omega_j + lambda_j(1+2s_j);
    as t -> inf it relaxes to Omega_j + lambda_j.
    """
    shift = (2.0 * bath.scaling * bath.reorganization
             * np.exp(-bath.relaxation * float(t)))
    return (np.diag(chain.site_energies + bath.reorganization + shift)
            + chain.couplings)


# ---------------------------------------------------------------------------
# bath kernels
# ---------------------------------------------------------------------------

def spectral_density(bath: BathSpec, site: int, omega) -> np.ndarray | float:
    """Ohmic spectral density with Lorentz-Drude cutoff.

    Lambda_j(omega) = (2 lambda_j / pi) omega gamma_j / (omega^2 + gamma_j^2)
    for omega >= 0 (hbar = 1).  `site` is 1-based.
    """
    j = site - 1
    w = np.asarray(omega, dtype=float)
    lam, gam = bath.reorganization[j], bath.relaxation[j]
    return (2.0 * lam / np.pi) * w * gam / (w * w + gam * gam)


def bath_response_highT(bath: BathSpec, site: int, tau) -> np.ndarray | complex:
    """High-temperature (Matsubara-free) Drude bath response kernel.

    alpha_j(tau) ~= (2 lambda_j k_B T / hbar - i lambda_j gamma_j)
    exp(-gamma_j tau), valid for beta*hbar*gamma_j < 1.  This is the kernel
    the hierarchy integrates exactly; the full finite-temperature kernel is
    available by quadrature in `dretsim.oracles.response_quadrature`.
    """
    j = site - 1
    lam, gam = bath.reorganization[j], bath.relaxation[j]
    c = 2.0 * lam * bath.thermal_energy - 1j * lam * gam
    return c * np.exp(-gam * np.asarray(tau, dtype=float))
