import numpy as np
import pytest

from dretsim import BathSpec, MoleculeChain, heom_evolve
from dretsim.oracles import (
    MAX_DENSE_DIM,
    OracleReport,
    QuadratureFailure,
    dense_expm_evolve,
    dephasing_analytic,
    reference_local_heom,
    response_quadrature,
)


def test_dense_expm_methods_agree():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = 0.5 * (a + a.conj().T)
    psi0 = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi0 /= np.linalg.norm(psi0)
    by_expm = dense_expm_evolve(h, psi0, 2.3, method="expm")
    by_eig = dense_expm_evolve(h, psi0, 2.3, method="eig")
    assert np.max(np.abs(by_expm - by_eig)) < 1e-12
    assert np.linalg.norm(by_expm) == pytest.approx(1.0, abs=1e-12)


def test_dense_expm_dimension_guard_and_methods():
    h = np.zeros((MAX_DENSE_DIM + 1, MAX_DENSE_DIM + 1))
    with pytest.raises(ValueError, match="limited"):
        dense_expm_evolve(h, np.zeros(MAX_DENSE_DIM + 1), 1.0)
    with pytest.raises(ValueError, match="method"):
        dense_expm_evolve(np.eye(2), np.array([1.0, 0.0]), 1.0,
                          method="taylor")


def test_oracle_report_pass_fail():
    ok = OracleReport.compare("x", [1.0, 2.0], [1.0, 2.0 + 1e-9], 1e-6)
    assert ok.passed
    bad = OracleReport.compare("x", [1.0], [1.1], 1e-6)
    assert not bad.passed
    assert bad.max_deviation == pytest.approx(0.1)


def test_dephasing_analytic_requires_uncoupled_dimer():
    bath = BathSpec.uniform(2, 0.3, 0.5, 2.0)
    with pytest.raises(ValueError, match="two sites"):
        dephasing_analytic(bath, MoleculeChain.linear([0.0, 0.0, 0.0]),
                           [1.0])
    with pytest.raises(ValueError, match="J_12"):
        dephasing_analytic(bath, MoleculeChain.linear([1.0, 0.0]), [1.0])


def test_dephasing_analytic_matches_hierarchy():
    chain = MoleculeChain([1.0, 0.0], np.zeros((2, 2)))
    bath = BathSpec([0.3, 0.2], [0.5, 0.8], [0.0, 0.0], 2.0)
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    res = heom_evolve(chain, bath, rho0, 6.0, 0.5, 12,
                      rtol=1e-10, atol=1e-13)
    predicted = dephasing_analytic(bath, chain, res.times)
    # the dephasing hierarchy never closes exactly; depth 12 leaves a
    # ~1e-5 truncation residual
    assert np.max(np.abs(res.rho[:, 0, 1] - predicted)) < 5e-5


def test_response_quadrature_matches_kernel_at_high_temperature():
    # beta*gamma = 0.005: Matsubara corrections are negligible and the
    # frequency integral reproduces the exponential kernel
    bath = BathSpec.uniform(1, 0.3, 0.5, 100.0)
    for tau in (0.5, 1.0, 3.0):
        val = response_quadrature(bath, 1, tau)
        ref = 0.3 * (2 * 100.0 - 0.5j) * np.exp(-0.5 * tau)
        assert abs(val - ref) / abs(ref) < 1e-3
        # the imaginary part is temperature-independent and exact
        assert val.imag == pytest.approx(-0.3 * 0.5 * np.exp(-0.5 * tau),
                                         rel=1e-8)


def test_response_quadrature_diverges_at_tau_zero():
    bath = BathSpec.uniform(1, 0.3, 0.5, 2.0)
    with pytest.raises(QuadratureFailure):
        response_quadrature(bath, 1, 0.0)
    with pytest.raises(ValueError):
        response_quadrature(bath, 1, -1.0)
    assert response_quadrature(BathSpec.uniform(1, 0.0, 0.5, 2.0), 1,
                               1.0) == 0.0


def test_reference_hierarchy_matches_production_solver():
    chain = MoleculeChain.linear([2.0, 0.0], coupling=1.0)
    bath = BathSpec.uniform(2, 0.35, 0.35, 2.0)
    rho0 = np.zeros((2, 2), dtype=complex)
    rho0[0, 0] = 1.0
    res = heom_evolve(chain, bath, rho0, 8.0, 0.1, 6, rtol=1e-9, atol=1e-12)
    times, rho_ref = reference_local_heom(chain, bath, rho0, 8.0, 0.1, 6)
    assert np.allclose(times, res.times)
    assert np.max(np.abs(res.rho - rho_ref)) < 1e-8
