"""Hierarchically coupled master equations for Drude baths with a
time-dependent frequency shift.

The reduced electronic state rho_e(t) = sigma(0, t) sits at the bottom of
a hierarchy of auxiliary N x N operators sigma(n, t), one per multi-index
n = (n_1..n_N) with sum(n) < cutoff:

    d sigma(n)/dt = -i [H_eff(t), sigma(n)] - (sum_j n_j gamma_j) sigma(n)
                    + sum_j i [V_j, sigma(n_{j+})]
                    + sum_j n_j ( i (2 lambda_j kT) [V_j, sigma(n_{j-})]
                                  + lambda_j gamma_j {V_j, sigma(n_{j-})} )

with V_j = |j><j| and H_eff(t) carrying the static reorganization shift
plus the decaying shift 2 s_j lambda_j exp(-gamma_j t) on the diagonal.
The generator is assembled once as a sparse matrix over the stacked,
row-major vectorized hierarchy; the time dependence reduces to a few
exp(-gamma t)-weighted extra matvecs grouped by distinct gamma.

Validity: no low-temperature (Matsubara) correction terms are included,
so results are trustworthy in the high-temperature regime
beta*hbar*gamma_j < 1 (a warning is emitted otherwise).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import RK45

from .closed import NumericalFailure, output_times, rms_displacement
from .model import BathSpec, MoleculeChain, validate_bath, validate_chain

__all__ = [
    "HierarchyIndex",
    "AdoSet",
    "HeomGenerator",
    "HeomResult",
    "ConvergenceReport",
    "hierarchy_count",
    "enumerate_hierarchy",
    "build_generator",
    "heom_rhs",
    "heom_evolve",
    "convergence_scan",
]

# guard against runaway hierarchies: total complex elements in the stack
MAX_ADO_ELEMENTS = 20_000_000

# transient negativity this small is numerical noise; beyond it, abort
PSD_ABORT = -1e-5


@dataclass(frozen=True)
class HierarchyIndex:
    """One multi-index n = (n_1..n_N) of the hierarchy."""

    vector: tuple[int, ...]

    @property
    def rank(self) -> int:
        return sum(self.vector)

    def raised(self, j: int) -> "HierarchyIndex":
        v = list(self.vector)
        v[j] += 1
        return HierarchyIndex(tuple(v))

    def lowered(self, j: int) -> "HierarchyIndex":
        if self.vector[j] == 0:
            raise ValueError(f"component {j} already zero")
        v = list(self.vector)
        v[j] -= 1
        return HierarchyIndex(tuple(v))


def hierarchy_count(n_sites: int, cutoff: int) -> int:
    """Number of multi-indices with sum < cutoff: C(cutoff-1+N, N)."""
    return math.comb(cutoff - 1 + n_sites, n_sites)


@dataclass
class AdoSet:
    """The full stack of auxiliary density operators plus index tables.

    `indices` is lexicographic; `plus[i, j]` / `minus[i, j]` give the
    position of the j-raised / j-lowered neighbor of index i, or -1 when
    that neighbor falls outside the hierarchy.  `data` is the contiguous
    (K, N, N) complex stack; data[0] is rho_e.
    """

    n_sites: int
    cutoff: int
    indices: list[tuple[int, ...]]
    plus: np.ndarray
    minus: np.ndarray
    data: np.ndarray

    @property
    def count(self) -> int:
        return len(self.indices)

    @property
    def rho_e(self) -> np.ndarray:
        return self.data[0]

    def index_position(self, vector: tuple[int, ...]) -> int:
        pos = self._position_map().get(tuple(vector))
        if pos is None:
            raise KeyError(f"{vector} not in hierarchy")
        return pos

    def _position_map(self) -> dict:
        if not hasattr(self, "_pos"):
            self._pos = {n: i for i, n in enumerate(self.indices)}
        return self._pos

    def ranks(self) -> np.ndarray:
        return np.array([sum(n) for n in self.indices])


def enumerate_hierarchy(n_sites: int, cutoff: int) -> AdoSet:
    """Build the empty hierarchy skeleton (all matrices zero).

    Indices are enumerated lexicographically; neighbor tables are dense
    int arrays with -1 marking absent (rank-overflow) neighbors.
    """
    if n_sites < 1 or cutoff < 1:
        raise ValueError("need n_sites >= 1 and cutoff >= 1")
    count = hierarchy_count(n_sites, cutoff)
    if count * n_sites * n_sites > MAX_ADO_ELEMENTS:
        raise MemoryError(
            f"hierarchy of {count} operators ({n_sites}x{n_sites}) exceeds "
            f"the {MAX_ADO_ELEMENTS}-element guard; lower the cutoff")

    indices: list[tuple[int, ...]] = []

    def emit(prefix: list[int], remaining: int):
        if len(prefix) == n_sites:
            indices.append(tuple(prefix))
            return
        for v in range(remaining + 1):
            prefix.append(v)
            emit(prefix, remaining - v)
            prefix.pop()

    emit([], cutoff - 1)
    assert len(indices) == count
    pos = {n: i for i, n in enumerate(indices)}
    plus = np.full((count, n_sites), -1, dtype=np.int64)
    minus = np.full((count, n_sites), -1, dtype=np.int64)
    for i, n in enumerate(indices):
        for j in range(n_sites):
            up = n[:j] + (n[j] + 1,) + n[j + 1:]
            if up in pos:
                plus[i, j] = pos[up]
            if n[j] > 0:
                down = n[:j] + (n[j] - 1,) + n[j + 1:]
                minus[i, j] = pos[down]
    data = np.zeros((count, n_sites, n_sites), dtype=complex)
    return AdoSet(n_sites=n_sites, cutoff=cutoff, indices=indices,
                  plus=plus, minus=minus, data=data)


@dataclass
class HeomGenerator:
    """Sparse generator acting on the stacked row-major vectorized ADOs.

    d vec / dt = static @ vec + sum_g exp(-gamma_g t) (shift_g @ vec)
    """

    n_sites: int
    cutoff: int
    count: int
    static: sp.csr_matrix
    shifts: list[tuple[float, sp.csr_matrix]]

    def apply(self, t: float, vec: np.ndarray) -> np.ndarray:
        out = self.static @ vec
        for gamma, op in self.shifts:
            out += math.exp(-gamma * t) * (op @ vec)
        return out


def _site_projector(n_sites: int, j: int) -> np.ndarray:
    v = np.zeros((n_sites, n_sites))
    v[j, j] = 1.0
    return v


def build_generator(chain: MoleculeChain, bath: BathSpec,
                    ados: AdoSet) -> HeomGenerator:
    """Assemble the sparse hierarchy generator for a chain and bath.

    Row-major vec convention: vec(A X B) = (A kron B^T) vec(X), so the
    commutator with V becomes V kron I - I kron V^T on each N^2 block and
    the hierarchy couplings are small selection matrices on the K axis.
    """
    n = chain.n_sites
    k_count = ados.count
    lam, gam, kt = bath.reorganization, bath.relaxation, bath.thermal_energy
    ident_n = sp.identity(n, format="csr")
    ident_block = sp.identity(n * n, format="csr")
    ident_k = sp.identity(k_count, format="csr")

    def comm(v):
        m = sp.csr_matrix(v)
        return sp.kron(m, ident_n) - sp.kron(ident_n, m.T)

    def acomm(v):
        m = sp.csr_matrix(v)
        return sp.kron(m, ident_n) + sp.kron(ident_n, m.T)

    # static electronic part: site energies + reorganization shift + J
    h_static = (np.diag(chain.site_energies + lam)
                + chain.couplings).astype(float)
    gen = sp.kron(ident_k, -1j * comm(h_static))
    decay = np.array([float(np.dot(idx, gam)) for idx in ados.indices])
    gen = gen - sp.kron(sp.diags(decay), ident_block)
    for j in range(n):
        proj = _site_projector(n, j)
        c_j = comm(proj)
        up_rows, up_cols = [], []
        down_rows, down_cols, down_vals = [], [], []
        for i, idx in enumerate(ados.indices):
            if ados.plus[i, j] >= 0:
                up_rows.append(i)
                up_cols.append(ados.plus[i, j])
            if ados.minus[i, j] >= 0:
                down_rows.append(i)
                down_cols.append(ados.minus[i, j])
                down_vals.append(float(idx[j]))
        sel_up = sp.csr_matrix(
            (np.ones(len(up_rows)), (up_rows, up_cols)),
            shape=(k_count, k_count))
        sel_down = sp.csr_matrix(
            (np.array(down_vals), (down_rows, down_cols)),
            shape=(k_count, k_count))
        theta = 1j * (2.0 * lam[j] * kt) * c_j + (lam[j] * gam[j]) * acomm(proj)
        gen = gen + sp.kron(sel_up, 1j * c_j) + sp.kron(sel_down, theta)

    # decaying diagonal shift 2 s_j lambda_j e^{-gamma_j t}, grouped by gamma
    groups: dict[float, sp.csr_matrix] = {}
    for j in range(n):
        weight = 2.0 * bath.scaling[j] * lam[j]
        if weight == 0.0:
            continue
        part = -1j * weight * comm(_site_projector(n, j))
        key = float(gam[j])
        groups[key] = part if key not in groups else groups[key] + part
    shifts = [(g, sp.kron(ident_k, m).tocsr()) for g, m in sorted(groups.items())]
    return HeomGenerator(n_sites=n, cutoff=ados.cutoff, count=k_count,
                         static=gen.tocsr(), shifts=shifts)


def heom_rhs(ados: AdoSet, chain: MoleculeChain, bath: BathSpec,
             t: float, generator: HeomGenerator | None = None) -> AdoSet:
    """Time derivative of the full hierarchy at time t.

    Builds the sparse generator on the fly unless one is passed in;
    returns a new AdoSet holding the derivative matrices.
    """
    if generator is None:
        generator = build_generator(chain, bath, ados)
    dvec = generator.apply(t, ados.data.reshape(-1))
    out = AdoSet(n_sites=ados.n_sites, cutoff=ados.cutoff,
                 indices=ados.indices, plus=ados.plus, minus=ados.minus,
                 data=dvec.reshape(ados.data.shape))
    return out


@dataclass
class HeomResult:
    """Reduced electronic dynamics plus convergence metadata.

    `rho` holds rho_e at each output time; `coherences` are the magnitudes
    |rho_jk|(t).  Populations stay within [-1e-6, 1+1e-6] and the trace is
    conserved to 1e-6 for a converged run.
    """

    times: np.ndarray
    rho: np.ndarray               # (T, N, N)
    populations: np.ndarray       # (T, N) real
    delta: np.ndarray
    start_site: int
    cutoff: int
    method: str
    rtol: float
    atol: float
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float

    @property
    def coherences(self) -> np.ndarray:
        return np.abs(self.rho)

    @property
    def n_sites(self) -> int:
        return self.rho.shape[1]


def _check_rho0(rho0: np.ndarray, n_sites: int) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (n_sites, n_sites):
        raise ValueError("initial state has wrong shape")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-8:
        raise ValueError("initial state must be Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-8:
        raise ValueError("initial state must have unit trace")
    if np.linalg.eigvalsh(rho0).min() < -1e-10:
        raise ValueError("initial state must be positive semidefinite")
    return rho0


def _fixed_rk4(generator: HeomGenerator, v0: np.ndarray, times: np.ndarray,
               dt: float, head: int) -> np.ndarray:
    """Classic RK4 with a fixed step subdividing each output interval.

    Only the leading `head` components (the physical block) are stored per
    output time; the hierarchy itself lives in a single working vector.
    """
    out = np.empty((len(times), head), dtype=complex)
    out[0] = v0[:head]
    v = v0.copy()
    t = float(times[0])
    for i in range(1, len(times)):
        span = float(times[i]) - t
        nsub = max(1, int(math.ceil(span / dt - 1e-12)))
        h = span / nsub
        for _ in range(nsub):
            k1 = generator.apply(t, v)
            k2 = generator.apply(t + 0.5 * h, v + 0.5 * h * k1)
            k3 = generator.apply(t + 0.5 * h, v + 0.5 * h * k2)
            k4 = generator.apply(t + h, v + h * k3)
            v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = float(times[i])
        out[i] = v[:head]
    return out


def _adaptive_rk45(generator: HeomGenerator, v0: np.ndarray,
                   times: np.ndarray, rtol: float, atol: float,
                   head: int) -> np.ndarray:
    """Embedded RK 4/5 sampled at `times` via per-step dense output.

    Streaming keeps memory at one hierarchy vector regardless of how many
    output times are requested.
    """
    out = np.empty((len(times), head), dtype=complex)
    out[0] = v0[:head]
    stepper = RK45(generator.apply, float(times[0]), v0,
                   t_bound=float(times[-1]), rtol=rtol, atol=atol)
    pending = 1
    while pending < len(times):
        message = stepper.step()
        if stepper.status == "failed":
            raise NumericalFailure(
                f"hierarchy integration failed: {message}")
        interpolant = None
        while pending < len(times) and times[pending] <= stepper.t + 1e-12:
            if interpolant is None:
                interpolant = stepper.dense_output()
            out[pending] = interpolant(times[pending])[:head]
            pending += 1
        if stepper.status == "finished" and pending < len(times):
            raise NumericalFailure("integration stopped before tmax")
    return out


def heom_evolve(chain: MoleculeChain, bath: BathSpec, rho0: np.ndarray,
                tmax: float, dt_out: float, cutoff: int,
                start_site: int | None = None, method: str = "adaptive",
                rtol: float = 1e-7, atol: float = 1e-10,
                fixed_dt: float | None = None,
                check_physical: bool = True) -> HeomResult:
    """Integrate the hierarchy from sigma(0) = rho0, all other ADOs zero.

    `method` is "adaptive" (embedded RK 4/5 at rtol/atol) or "rk4" (fixed
    step `fixed_dt`, bit-reproducible across runs).  The run aborts with a
    diagnostic if rho_e develops an eigenvalue below -1e-5; smaller
    transient negativity is tolerated and reported in the result.
    """
    validate_chain(chain).require()
    validate_bath(bath, chain.n_sites).require()
    for msg in bath.high_temperature_violations():
        warnings.warn(msg, stacklevel=2)
    n = chain.n_sites
    rho0 = _check_rho0(rho0, n)
    ados = enumerate_hierarchy(n, cutoff)
    generator = build_generator(chain, bath, ados)
    times = output_times(tmax, dt_out)
    v0 = np.zeros(ados.count * n * n, dtype=complex)
    v0[:n * n] = rho0.reshape(-1)

    if method == "adaptive":
        head = _adaptive_rk45(generator, v0, times, rtol, atol, n * n)
    elif method == "rk4":
        if fixed_dt is None:
            fixed_dt = min(dt_out, 0.02)
        head = _fixed_rk4(generator, v0, times, fixed_dt, n * n)
    else:
        raise ValueError(f"unknown method {method!r}")

    rho = head.reshape(len(times), n, n)
    pops = np.real(np.einsum("tii->ti", rho))
    if start_site is None:
        start_site = int(np.argmax(pops[0])) + 1

    trace_err = float(np.max(np.abs(pops.sum(axis=1) - 1.0)))
    herm_err = float(np.max(np.abs(rho - rho.conj().transpose(0, 2, 1))))
    eig_min = float(min(np.linalg.eigvalsh(
        0.5 * (r + r.conj().T)).min() for r in rho))
    if check_physical:
        if eig_min < PSD_ABORT:
            raise NumericalFailure(
                f"reduced state developed eigenvalue {eig_min:.2e} < "
                f"{PSD_ABORT}; raise the cutoff or tighten tolerances")
        if trace_err > 1e-4:
            raise NumericalFailure(
                f"trace drifted by {trace_err:.2e}; integration unreliable")

    return HeomResult(
        times=times,
        rho=rho,
        populations=pops,
        delta=rms_displacement(pops, start_site),
        start_site=start_site,
        cutoff=cutoff,
        method=method,
        rtol=rtol,
        atol=atol,
        trace_error=trace_err,
        hermiticity_error=herm_err,
        min_eigenvalue=eig_min,
    )


@dataclass
class ConvergenceReport:
    """Population deviations between successive hierarchy cutoffs."""

    cutoffs: list[int]
    deviations: list[float]       # deviations[i] between cutoffs[i], [i+1]
    tolerance: float
    results: list[HeomResult] = field(repr=False, default_factory=list)

    @property
    def accepted_cutoff(self) -> int | None:
        """Smallest cutoff whose populations moved < tolerance at the next."""
        for c, dev in zip(self.cutoffs, self.deviations):
            if dev < self.tolerance:
                return c
        return None

    @property
    def converged(self) -> bool:
        return self.accepted_cutoff is not None


def convergence_scan(chain: MoleculeChain, bath: BathSpec, rho0: np.ndarray,
                     tmax: float, dt_out: float, cutoffs: list[int],
                     tolerance: float = 1e-3, **kwargs) -> ConvergenceReport:
    """Run heom_evolve at each cutoff and compare successive populations."""
    if len(cutoffs) < 2:
        raise ValueError("need at least two cutoffs to compare")
    if sorted(cutoffs) != list(cutoffs):
        raise ValueError("cutoffs must be increasing")
    results = [heom_evolve(chain, bath, rho0, tmax, dt_out, c, **kwargs)
               for c in cutoffs]
    deviations = [
        float(np.max(np.abs(a.populations - b.populations)))
        for a, b in zip(results, results[1:])
    ]
    return ConvergenceReport(cutoffs=list(cutoffs), deviations=deviations,
                             tolerance=tolerance, results=results)
