"""Unitary dynamics of an exciton chain plus one shared phonon mode.

The total state lives on |site> x |Fock(0..n_max)> with site-major
ordering (amplitude index j*(n_max+1) + n, j zero-based internally).
Propagation evaluates exp(-iHt) on the sparse Hamiltonian at all output
times, which conserves norm and energy to near machine precision; a
convergence driver escalates the Fock truncation until populations are
insensitive to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .model import (MoleculeChain, SharedMode, build_polaron_hamiltonian,
                    validate_chain, validate_mode)

__all__ = [
    "FockTruncation",
    "PolaronState",
    "TrajectoryResult",
    "NumericalFailure",
    "initial_state",
    "evolve_closed",
    "site_populations",
    "rms_displacement",
    "total_energy_expectation",
    "reduced_phonon_state",
    "reduced_electronic_state",
    "simulate_closed",
    "output_times",
]


class NumericalFailure(RuntimeError):
    """Raised when a solver cannot reach its accuracy or convergence target."""


@dataclass
class FockTruncation:
    """Phonon basis truncation with automatic escalation policy.

    A truncation is accepted once doubling n_max changes no population by
    more than `tolerance` anywhere on the time grid; otherwise n_max is
    escalated by `growth` until `cap` would be exceeded.
    """

    n_max: int = 30
    cap: int = 600
    growth: float = 1.5
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not self.n_max < self.cap:
            raise ValueError("n_max must be below the escalation cap")


@dataclass
class PolaronState:
    """Joint exciton--phonon amplitudes sum_k |k> x |psi_k>.

    `amplitudes` has length n_sites*(n_max+1); a normalized physical state
    has norm 1 within 1e-9.
    """

    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        if len(self.amplitudes) % self.n_sites:
            raise ValueError("length must be a multiple of n_sites")

    @property
    def n_max(self) -> int:
        return len(self.amplitudes) // self.n_sites - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class TrajectoryResult:
    """Closed-system trajectory sampled on a uniform output grid.

    Populations satisfy sum_k P_k(t) = 1 within 1e-8 with each P_k in
    [-1e-10, 1+1e-10]; `delta` is the RMS displacement about the start
    site; `energy` is <H>(t).  `wigner_frames` stays None unless a
    phase-space rendering pass fills it.
    """

    times: np.ndarray
    states: np.ndarray            # (T, dim) complex amplitudes
    populations: np.ndarray       # (T, N)
    delta: np.ndarray
    energy: np.ndarray
    start_site: int
    n_sites: int
    n_max: int
    norm_error: float = 0.0
    truncation_error: float = float("nan")
    escalations: list[int] = field(default_factory=list)
    wigner_frames: np.ndarray | None = None

    def state_at(self, index: int) -> PolaronState:
        return PolaronState(self.states[index], self.n_sites)


def output_times(tmax: float, dt_out: float) -> np.ndarray:
    """Uniform grid 0, dt_out, ... ending at the last multiple <= tmax."""
    if tmax <= 0 or dt_out <= 0:
        raise ValueError("tmax and dt_out must be positive")
    n = int(np.floor(tmax / dt_out + 1e-9)) + 1
    return dt_out * np.arange(n)


def initial_state(chain: MoleculeChain, mode: SharedMode,
                  trunc: FockTruncation | int,
                  start_site: int) -> PolaronState:
    """|start_site> x |0>_ph as amplitudes (start_site is 1-based)."""
    n_max = trunc if isinstance(trunc, int) else trunc.n_max
    if not 1 <= start_site <= chain.n_sites:
        raise IndexError(
            f"start site {start_site} outside 1..{chain.n_sites}")
    amps = np.zeros(chain.n_sites * (n_max + 1), dtype=complex)
    amps[(start_site - 1) * (n_max + 1)] = 1.0
    return PolaronState(amps, chain.n_sites)


def _amplitudes(state, n_sites: int | None):
    if isinstance(state, PolaronState):
        return state.amplitudes, state.n_sites
    if n_sites is None:
        raise ValueError("n_sites required for raw amplitude arrays")
    return np.asarray(state, dtype=complex), n_sites


def site_populations(state, n_sites: int | None = None) -> np.ndarray:
    """P_k = sum_n |amp(k,n)|^2 for one state or a stack of state rows."""
    amps, n_sites = _amplitudes(state, n_sites)
    rows = np.atleast_2d(amps)
    prob = (rows.real ** 2 + rows.imag ** 2).reshape(rows.shape[0], n_sites, -1)
    pops = prob.sum(axis=2)
    return pops[0] if amps.ndim == 1 else pops


def rms_displacement(populations: np.ndarray, start_site: int) -> np.ndarray:
    """Delta = sqrt(sum_k (k - k0)^2 P_k), sites 1-based, k0 = start_site."""
    pops = np.atleast_2d(populations)
    k = np.arange(1, pops.shape[1] + 1, dtype=float)
    val = np.sqrt(np.clip(pops @ (k - start_site) ** 2, 0.0, None))
    return val[0] if np.ndim(populations) == 1 else val


def total_energy_expectation(h: np.ndarray, state) -> float:
    """<psi|H|psi>; imaginary residue beyond 1e-12 signals a broken H."""
    amps = state.amplitudes if isinstance(state, PolaronState) else state
    e = np.vdot(amps, h @ amps)
    if abs(e.imag) > 1e-12 * max(1.0, abs(e.real)):
        raise ValueError("energy expectation is not real; H not Hermitian?")
    return float(e.real)


def reduced_phonon_state(state, n_sites: int | None = None) -> np.ndarray:
    """Trace out the sites: rho_ph[n,m] = sum_k amp(k,n) conj(amp(k,m))."""
    amps, n_sites = _amplitudes(state, n_sites)
    block = amps.reshape(n_sites, -1)
    return block.T @ block.conj()


def reduced_electronic_state(state, n_sites: int | None = None) -> np.ndarray:
    """Trace out the mode: rho_e[j,k] = sum_n amp(j,n) conj(amp(k,n))."""
    amps, n_sites = _amplitudes(state, n_sites)
    block = amps.reshape(n_sites, -1)
    return block @ block.conj().T


def evolve_closed(h: np.ndarray, psi0, tmax: float, dt_out: float,
                  n_sites: int | None = None,
                  start_site: int | None = None) -> TrajectoryResult:
    """Propagate psi0 under the static Hamiltonian h, sampling every dt_out.

    Exponential stepping on the sparse generator keeps unitarity at
    working precision, so the conservation invariants are limited only by
    accumulation across output points.  `start_site` fixes the
    displacement origin; if omitted it is the dominant site of psi0.
    """
    amps, n_sites = _amplitudes(psi0, n_sites)
    dim = h.shape[0]
    if amps.shape != (dim,):
        raise ValueError("state/Hamiltonian dimension mismatch")
    if dim % n_sites:
        raise ValueError("dimension is not a multiple of the site count")
    times = output_times(tmax, dt_out)
    states = expm_multiply(sp.csr_matrix(-1j * h), amps, start=0.0,
                           stop=float(times[-1]), num=len(times),
                           endpoint=True)
    pops = site_populations(states, n_sites)
    if start_site is None:
        start_site = int(np.argmax(pops[0])) + 1
    energy = np.einsum("ti,ti->t", states.conj(), states @ h.T).real
    norms = np.linalg.norm(states, axis=1)
    return TrajectoryResult(
        times=times,
        states=states,
        populations=pops,
        delta=rms_displacement(pops, start_site),
        energy=energy,
        start_site=start_site,
        n_sites=n_sites,
        n_max=dim // n_sites - 1,
        norm_error=float(np.max(np.abs(norms - np.linalg.norm(amps)))),
    )


def simulate_closed(chain: MoleculeChain, mode: SharedMode, start_site: int,
                    tmax: float, dt_out: float,
                    trunc: FockTruncation | None = None) -> TrajectoryResult:
    """Run the closed dynamics with automatic Fock-truncation escalation.

    Starting from trunc.n_max, each candidate truncation is checked by
    rerunning at twice the levels; it is accepted when every population
    differs by less than trunc.tolerance at every output time, else n_max
    grows by trunc.growth up to trunc.cap.
    """
    validate_chain(chain).require()
    validate_mode(mode, chain.n_sites).require()
    if trunc is None:
        trunc = FockTruncation()
    n_max = trunc.n_max
    trail: list[int] = []
    while True:
        trail.append(n_max)
        run = _run_fixed(chain, mode, start_site, tmax, dt_out, n_max)
        check = _run_fixed(chain, mode, start_site, tmax, dt_out, 2 * n_max)
        err = float(np.max(np.abs(run.populations - check.populations)))
        if err < trunc.tolerance:
            run.truncation_error = err
            run.escalations = trail
            return run
        n_max = int(np.ceil(trunc.growth * n_max))
        if n_max >= trunc.cap:
            raise NumericalFailure(
                f"Fock truncation not converged below cap {trunc.cap} "
                f"(last population shift {err:.2e})")


def _run_fixed(chain: MoleculeChain, mode: SharedMode, start_site: int,
               tmax: float, dt_out: float, n_max: int) -> TrajectoryResult:
    h = build_polaron_hamiltonian(chain, mode, n_max)
    psi0 = initial_state(chain, mode, n_max, start_site)
    return evolve_closed(h, psi0, tmax, dt_out, start_site=start_site)
