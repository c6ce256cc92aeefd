import numpy as np
import pytest
import scipy.sparse as sp

import sbfock._solvers as solvers
from sbfock import CouplingDecomposition, ModeGrid, SIGMA_MINUS, SIGMA_Z, separable, zero_form_factor
from sbfock._solvers import StructuredResolvent
from sbfock.fock import SpinSpace, build_basis
from sbfock.renorm import HamiltonianSpec, h_reg, h_renormalized


@pytest.fixture
def ex2_operators():
    om = np.geomspace(0.5, 16, 10)
    mu = np.diff(np.geomspace(0.45, 17, 11))
    g = ModeGrid(labels=om, omegas=om, mus=mu, kappa=1.0)
    basis = build_basis(g, SpinSpace(2), 3)
    v = np.ones(10)
    coupling = CouplingDecomposition(
        v_le=separable(g, np.where(om <= 1, v, 0), SIGMA_MINUS),
        v_d=zero_form_factor(g, 2),
        v_n=separable(g, np.where(om > 1, v, 0), SIGMA_MINUS),
        s_n=1.5,
    )
    spec = HamiltonianSpec(S=SIGMA_Z.real, coupling=coupling, lam=50.0, n_max=3)
    H_ren = h_renormalized(basis, spec)
    H_reg = h_reg(basis, spec.S, coupling.total())
    totals = np.repeat(basis.totals, 2)
    return basis, H_ren, H_reg, totals


def residuals(solver, A_dense, rng, n=4):
    worst = 0.0
    worst_adj = 0.0
    for _ in range(n):
        b = rng.standard_normal(A_dense.shape[0]) + 1j * rng.standard_normal(A_dense.shape[0])
        x = solver.solve(b)
        worst = max(worst, np.linalg.norm(A_dense @ x - b) / np.linalg.norm(b))
        y = solver.adjoint_solve(b)
        worst_adj = max(
            worst_adj, np.linalg.norm(A_dense.conj().T @ y - b) / np.linalg.norm(b)
        )
    return worst, worst_adj


def test_dense_path_matches_inverse(ex2_operators):
    basis, H_ren, _, totals = ex2_operators
    rng = np.random.default_rng(0)
    solver = StructuredResolvent(H_ren.tocsr(), 1j, totals)
    A = H_ren.dense() - 1j * np.eye(basis.dim)
    fwd, adj = residuals(solver, A, rng)
    assert fwd <= 1e-12 and adj <= 1e-12


@pytest.mark.parametrize("which", ["ren", "reg"])
def test_structured_paths_forced(ex2_operators, which, monkeypatch):
    basis, H_ren, H_reg, totals = ex2_operators
    H = H_ren if which == "ren" else H_reg
    rng = np.random.default_rng(1)
    monkeypatch.setattr(solvers, "DENSE_SOLVE_CAP", 64)
    monkeypatch.setattr(solvers, "SCHUR_KEPT_CAP", 400)
    monkeypatch.setattr(solvers, "TRIDIAG_BLOCK_CAP", 2000)
    solver = StructuredResolvent(H.tocsr(), 1j, totals)
    kinds = {type(s).__name__ for _, s in solver.parts}
    assert len(kinds) > 1  # several strategies exercised
    A = H.dense() - 1j * np.eye(basis.dim)
    fwd, adj = residuals(solver, A, rng)
    assert fwd <= 1e-9 and adj <= 1e-9


def test_tridiag_path_on_scalar_field_hamiltonian(monkeypatch):
    from sbfock.model import FormFactor

    om = np.array([0.7, 1.9])
    g = ModeGrid(labels=om, omegas=om, mus=np.array([0.8, 1.1]), kappa=1.0)
    basis = build_basis(g, SpinSpace(1), 8)
    H = h_reg(basis, np.zeros((1, 1)), FormFactor(g, np.array([0.8, 0.5])))
    totals = basis.totals.astype(np.int64)
    monkeypatch.setattr(solvers, "DENSE_SOLVE_CAP", 8)
    monkeypatch.setattr(solvers, "SCHUR_KEPT_CAP", 10)
    monkeypatch.setattr(solvers, "TRIDIAG_BLOCK_CAP", 50)
    solver = StructuredResolvent(H.tocsr(), 1j, totals)
    kinds = {type(s).__name__ for _, s in solver.parts}
    assert "_PermutedSolver" in kinds
    rng = np.random.default_rng(2)
    A = H.dense() - 1j * np.eye(basis.dim)
    fwd, adj = residuals(solver, A, rng)
    assert fwd <= 1e-11 and adj <= 1e-11


def test_gmres_zero_rhs_guard():
    A = sp.csr_matrix(np.diag([2.0, 3.0]) + 0j)
    g = solvers._GmresSolve(A)
    out = g.solve(np.zeros(2, dtype=complex))
    assert not np.any(out)
