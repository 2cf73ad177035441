"""Brute-force reference implementations for validating the fast paths.

Everything here is deliberately independent of the production code:
propagation uses dense matrix exponentials or an index-by-index hierarchy
evaluation, spectral integrals use adaptive quadrature of the defining
formulas, and Wigner values come from the defining transform.  These
references are slow by design; they exist so an installation can be
re-verified end to end.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg
from scipy.integrate import DOP853, quad

from .model import (BathSpec, MoleculeChain,
                    build_effective_electronic_hamiltonian,
                    bath_response_highT)

__all__ = [
    "OracleReport",
    "QuadratureFailure",
    "dense_expm_evolve",
    "dephasing_analytic",
    "response_quadrature",
    "naive_heom_rhs",
    "reference_local_heom",
    "harmonic_eigenfunction",
    "wigner_quadrature_point",
]

MAX_DENSE_DIM = 512


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature did not converge to the requested accuracy."""


@dataclass
class OracleReport:
    """Outcome of one reference-vs-implementation comparison."""

    quantity: str
    reference: np.ndarray
    target: np.ndarray
    max_deviation: float
    threshold: float

    def __post_init__(self):
        if self.max_deviation < 0:
            raise ValueError("deviation must be non-negative")

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.threshold

    @classmethod
    def compare(cls, quantity: str, reference, target,
                threshold: float) -> "OracleReport":
        reference = np.asarray(reference)
        target = np.asarray(target)
        dev = float(np.max(np.abs(reference - target))) if reference.size \
            else 0.0
        return cls(quantity=quantity, reference=reference, target=target,
                   max_deviation=dev, threshold=threshold)


def dense_expm_evolve(h: np.ndarray, psi0: np.ndarray, t: float,
                      method: str = "expm") -> np.ndarray:
    """exp(-i h t) psi0 via dense Pade scaling-and-squaring or eigenvectors.

    Guarded to dimension 512.  The two methods are mutually independent,
    so their cross-agreement is itself a useful check.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[0] > MAX_DENSE_DIM:
        raise ValueError(f"dense oracle limited to dim {MAX_DENSE_DIM}")
    if method == "expm":
        return scipy.linalg.expm(-1j * t * h) @ psi0
    if method == "eig":
        vals, vecs = np.linalg.eigh(h)
        return vecs @ (np.exp(-1j * t * vals) * (vecs.conj().T @ psi0))
    raise ValueError(f"unknown method {method!r}")


def _quad_complex(func, a, b, **kw):
    val, err = quad(func, a, b, complex_func=True, **kw)
    return val


def dephasing_analytic(bath: BathSpec, chain: MoleculeChain,
                       times, initial_coherence: complex = 0.5) -> np.ndarray:
    """Coherence rho_12(t) of an uncoupled two-site chain, by quadrature.

    With J = 0 the populations freeze and the coherence obeys

        rho_12(t) = rho_12(0) exp(-i Phi(t)) exp(-g_1(t) - conj(g_2(t)))

    where Phi(t) integrates the instantaneous (shift-dressed) splitting
    and g_j(t) is the double time integral of the site-j exponential
    response kernel.  The second site's kernel enters conjugated because
    the two sites couple to the coherence with opposite signs, which flips
    the odd (imaginary) part of the kernel.  Every integral is evaluated
    numerically rather than from the hand-reduced closed form.
    """
    if chain.n_sites != 2:
        raise ValueError("dephasing oracle requires exactly two sites")
    if chain.couplings[0, 1] != 0.0:
        raise ValueError("dephasing oracle requires J_12 = 0")
    times = np.atleast_1d(np.asarray(times, dtype=float))

    def splitting(t):
        heff = build_effective_electronic_hamiltonian(chain, bath, t)
        return heff[0, 0].real - heff[1, 1].real

    def inner(site, s):
        return _quad_complex(
            lambda tau: bath_response_highT(bath, site, tau), 0.0, s,
            limit=200)

    out = np.empty(len(times), dtype=complex)
    for i, t in enumerate(times):
        if t == 0.0:
            out[i] = initial_coherence
            continue
        phase = quad(splitting, 0.0, t, limit=200)[0]
        g1 = _quad_complex(lambda s: inner(1, s), 0.0, t, limit=200)
        g2 = _quad_complex(lambda s: inner(2, s), 0.0, t, limit=200)
        out[i] = (initial_coherence * np.exp(-1j * phase)
                  * np.exp(-g1 - np.conj(g2)))
    return out if out.size > 1 else out[0]


def response_quadrature(bath: BathSpec, site: int, tau: float,
                        tail_start_factor: float = 50.0) -> complex:
    """Bath response kernel alpha(tau) from its frequency integral.

    Integrates spectral_density * [coth(beta w / 2) cos(w tau) - i sin(w tau)]
    over w in (0, inf): an adaptive Gauss-Kronrod pass up to
    tail_start_factor * gamma, then oscillatory-weighted quadrature for the
    slowly decaying tail.  At tau = 0 the real part diverges
    logarithmically (no oscillation tames the 1/w tail), which surfaces as
    a quadrature failure rather than a number.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    lam = bath.reorganization[site - 1]
    gam = bath.relaxation[site - 1]
    if lam == 0.0:
        return 0.0 + 0.0j
    beta = bath.beta
    split = tail_start_factor * gam

    def dens(w):
        return (2.0 * lam / math.pi) * w * gam / (w * w + gam * gam)

    def thermal(w):
        if w < 1e-12 * gam:
            # w -> 0 limit of dens(w) * coth(beta w / 2)
            return 4.0 * lam / (math.pi * beta * gam)
        return dens(w) / math.tanh(0.5 * beta * w)

    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
        try:
            re_head = quad(lambda w: thermal(w) * math.cos(w * tau),
                           0.0, split, limit=400)[0]
            im_head = quad(lambda w: dens(w) * math.sin(w * tau),
                           0.0, split, limit=400)[0]
            if tau == 0.0:
                # cos weight degenerates to 1 and thermal ~ 1/w: divergent
                raise QuadratureFailure(
                    "response kernel diverges at tau = 0 for a Drude "
                    "density; evaluate at tau > 0")
            re_tail = quad(thermal, split, np.inf, weight="cos", wvar=tau,
                           limit=400)[0]
            im_tail = quad(dens, split, np.inf, weight="sin", wvar=tau,
                           limit=400)[0]
        except scipy.integrate.IntegrationWarning as exc:
            raise QuadratureFailure(
                f"bath response quadrature did not converge: {exc}") from exc
    return complex(re_head + re_tail, -(im_head + im_tail))


def naive_heom_rhs(indices, matrices, chain: MoleculeChain, bath: BathSpec,
                   t: float) -> dict:
    """Index-by-index hierarchy derivative, dict in, dict out.

    Textbook transcription of the coupled equations with explicit
    projector algebra; used to pin down the sparse assembly.
    """
    n = chain.n_sites
    lam, gam = bath.reorganization, bath.relaxation
    kt = bath.thermal_energy
    heff = build_effective_electronic_hamiltonian(chain, bath, t)
    table = {tuple(k): np.asarray(matrices[k]) for k in indices}
    out = {}
    for idx in indices:
        idx = tuple(idx)
        sig = table[idx]
        deriv = -1j * (heff @ sig - sig @ heff)
        deriv = deriv - sum(idx[j] * gam[j] for j in range(n)) * sig
        for j in range(n):
            proj = np.zeros((n, n))
            proj[j, j] = 1.0
            up = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
            if up in table:
                s_up = table[up]
                deriv = deriv + 1j * (proj @ s_up - s_up @ proj)
            if idx[j] > 0:
                down = idx[:j] + (idx[j] - 1,) + idx[j + 1:]
                s_dn = table[down]
                deriv = deriv + idx[j] * (
                    1j * (2.0 * lam[j] * kt) * (proj @ s_dn - s_dn @ proj)
                    + lam[j] * gam[j] * (proj @ s_dn + s_dn @ proj))
        out[idx] = deriv
    return out


def _compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def reference_local_heom(chain: MoleculeChain, bath: BathSpec,
                         rho0: np.ndarray, tmax: float, dt_out: float,
                         cutoff: int, rtol: float = 1e-9,
                         atol: float = 1e-12):
    """Standard local-bath hierarchy with a static Hamiltonian.

    Independent of the production solver on purpose: rank-major index
    ordering, gather-based vectorized derivative instead of an assembled
    sparse generator, and a different integrator (DOP853).  Returns
    (times, rho_e trajectory).  No time-dependent shift: the Hamiltonian
    is the bare site energies plus the reorganization offsets.
    """
    n = chain.n_sites
    lam, gam = bath.reorganization, bath.relaxation
    kt = bath.thermal_energy
    indices = [c for rank in range(cutoff) for c in _compositions(rank, n)]
    k_count = len(indices)
    pos = {c: i for i, c in enumerate(indices)}
    up_table = np.full((k_count, n), -1, dtype=int)
    down_table = np.full((k_count, n), -1, dtype=int)
    for i, idx in enumerate(indices):
        for j in range(n):
            raised = idx[:j] + (idx[j] + 1,) + idx[j + 1:]
            up_table[i, j] = pos.get(raised, -1)
            if idx[j] > 0:
                down_table[i, j] = pos[idx[:j] + (idx[j] - 1,) + idx[j + 1:]]
    idx_mat = np.array(indices, dtype=float)
    nu = idx_mat @ gam
    ham = np.diag(chain.site_energies + lam) + chain.couplings

    def rhs(_t, y):
        sig = y.reshape(k_count, n, n)
        out = -1j * (ham[None] @ sig - sig @ ham[None])
        out -= nu[:, None, None] * sig
        for j in range(n):
            has_up = up_table[:, j] >= 0
            if np.any(has_up):
                s_up = sig[up_table[has_up, j]]
                block = np.zeros_like(s_up)
                block[:, j, :] += s_up[:, j, :]
                block[:, :, j] -= s_up[:, :, j]
                out[has_up] += 1j * block
            has_dn = down_table[:, j] >= 0
            if np.any(has_dn):
                s_dn = sig[down_table[has_dn, j]]
                comm = np.zeros_like(s_dn)
                comm[:, j, :] += s_dn[:, j, :]
                comm[:, :, j] -= s_dn[:, :, j]
                anti = np.zeros_like(s_dn)
                anti[:, j, :] += s_dn[:, j, :]
                anti[:, :, j] += s_dn[:, :, j]
                out[has_dn] += idx_mat[has_dn, j, None, None] * (
                    1j * (2.0 * lam[j] * kt) * comm
                    + (lam[j] * gam[j]) * anti)
        return out.reshape(-1)

    steps = int(math.floor(tmax / dt_out + 1e-9)) + 1
    times = dt_out * np.arange(steps)
    y0 = np.zeros(k_count * n * n, dtype=complex)
    y0[:n * n] = np.asarray(rho0, dtype=complex).reshape(-1)
    rho = np.empty((steps, n, n), dtype=complex)
    rho[0] = y0[:n * n].reshape(n, n)
    stepper = DOP853(rhs, 0.0, y0, t_bound=float(times[-1]),
                     rtol=rtol, atol=atol)
    pending = 1
    while pending < steps:
        message = stepper.step()
        if stepper.status == "failed":
            raise RuntimeError(f"reference hierarchy failed: {message}")
        interpolant = None
        while pending < steps and times[pending] <= stepper.t + 1e-12:
            if interpolant is None:
                interpolant = stepper.dense_output()
            rho[pending] = interpolant(times[pending])[:n * n].reshape(n, n)
            pending += 1
        if stepper.status == "finished" and pending < steps:
            raise RuntimeError("reference integration stopped early")
    return times, rho


def harmonic_eigenfunction(n: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunction psi_n(x), dimensionless units."""
    x = np.asarray(x, dtype=float)
    prev = math.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if n == 0:
        return prev
    cur = math.sqrt(2.0) * x * prev
    for m in range(1, n):
        cur, prev = (math.sqrt(2.0 / (m + 1)) * x * cur
                     - math.sqrt(m / (m + 1.0)) * prev), cur
    return cur


def wigner_quadrature_point(rho: np.ndarray, q: float, p: float,
                            n_points: int = 4001,
                            y_max: float | None = None) -> complex:
    """W(q, p) from the defining integral over the off-diagonal coordinate.

    W = (1/2pi) int dy <q - y/2| rho |q + y/2> exp(i p y), with the matrix
    element expanded over oscillator eigenfunctions.  The imaginary part
    of the result is a discretization diagnostic and should be ~0.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    if y_max is None:
        y_max = 2.0 * (math.sqrt(2.0 * dim) + 6.0)
    y = np.linspace(-y_max, y_max, n_points)
    left = np.array([harmonic_eigenfunction(n, q - y / 2.0)
                     for n in range(dim)])
    right = np.array([harmonic_eigenfunction(n, q + y / 2.0)
                      for n in range(dim)])
    integrand = np.einsum("my,mn,ny->y", left, rho, right.conj())
    integrand = integrand * np.exp(1j * p * y)
    return complex(np.trapezoid(integrand, y) / (2.0 * math.pi))
