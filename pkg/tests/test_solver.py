from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from scipy.linalg import null_space

from nahm import derive_type
from nahm.adhm import assemble, equivariance_check, fibre, monad_check
from nahm.errors import NoConvergence, UnsupportedType, ValidationError
from nahm.lattice import (
    GaugeTransform,
    NahmSolution,
    check_stability,
    gauge_invariants,
    gauge_transform,
    random_init,
    total_residual,
)
from nahm.solver import (
    SolverOptions,
    jacobian,
    refine,
    residual_vector,
    solve,
    su2_k1_fit,
    su2_k1_oracle,
)


@pytest.mark.parametrize("masses,charges", [(["-3/2"], [1]), ([-3, -1], [1, 1]), ([-1, 0], [2, 1])])
def test_jacobian_matches_finite_differences(masses, charges):
    t = derive_type(masses, charges)
    s = random_init(t, 11)
    x = s.to_vector()
    J = jacobian(s)
    eps = 1e-6
    num = np.empty_like(J)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = eps
        num[:, k] = (residual_vector(NahmSolution.from_vector(t, x + e))
                     - residual_vector(NahmSolution.from_vector(t, x - e))) / (2 * eps)
    assert np.abs(J - num).max() < 1e-7


def residual_symbolic(p2):
    """Scalar SU(2) k=1 equations with the oracle ansatz, as sympy expressions."""
    beta, t = sp.symbols("beta t")
    n = p2  # number of beta sites
    bs = [beta] * n
    gs = [t] * (n - 1)
    eqs = [bs[i] * gs[i] - gs[i] * bs[i + 1] for i in range(n - 1)]
    # scalars commute; real chain keeps only the squared moduli
    mods = [t ** 2] + [g ** 2 for g in gs] + [t ** 2]
    eqs += [mods[i + 1] - mods[i] for i in range(n)]
    return [sp.simplify(e) for e in eqs]


def chain_null_space(p2):
    """Kernel of the real chain as a linear map on (|a|^2, |gamma|^2..., |b|^2)."""
    n = p2
    m = np.zeros((n, n + 1))
    for i in range(n):
        m[i, i], m[i, i + 1] = -1.0, 1.0
    return null_space(m)


def beta_null_space(p2):
    """Kernel of the complex chain gamma_w (beta_left - beta_right) = 0 with gamma = 1."""
    n = p2
    if n == 1:
        return np.ones((1, 1))
    m = np.zeros((n - 1, n))
    for i in range(n - 1):
        m[i, i], m[i, i + 1] = 1.0, -1.0
    return null_space(m)


@pytest.mark.parametrize("p", ["1/2", "3/2", "5/2", "7/2", "9/2"])
def test_oracle_against_elimination(p):
    p2 = int(2 * Fraction(p))
    assert all(e == 0 for e in residual_symbolic(p2))
    ker = chain_null_space(p2)
    assert ker.shape[1] == 1
    assert np.allclose(ker[:, 0] / ker[0, 0], 1.0)
    bker = beta_null_space(p2)
    assert bker.shape[1] == 1
    assert np.allclose(bker[:, 0] / bker[0, 0], 1.0)
    s = su2_k1_oracle(p, beta=0.2 + 0.1j, scale=1.3)
    assert total_residual(s) < 1e-26
    assert check_stability(s).ok


def test_oracle_rejects_unsupported():
    for p in (0, Fraction(1, 3), -1, "x"):
        with pytest.raises(UnsupportedType):
            su2_k1_oracle(p)


@pytest.mark.parametrize("p", ["1/2", "3/2", "5/2"])
def test_solver_matches_oracle_family(su2_solved, p):
    s, rep = su2_solved[p]
    assert rep.converged and rep.final_residual < 1e-18 and rep.restart_index < 5
    fit = su2_k1_fit(s)
    assert gauge_invariants(s).max_deviation(gauge_invariants(fit)) < 1e-6


def test_converged_outputs_pass_all_checks(su3_solved, rng):
    s, rep = su3_solved
    assert rep.converged and total_residual(s) < 1e-18
    assert check_stability(s).ok
    d = assemble(s)
    for _ in range(10):
        X = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert monad_check(d, X).relative_exactness < 1e-10
        assert fibre(d, X).shape[1] == 3
        c = complex(*rng.standard_normal(2))
        assert equivariance_check(d, c, tol=1e-12).ok


def test_no_convergence_carries_best():
    t = derive_type([-3, -1], [1, 1])
    with pytest.raises(NoConvergence) as info:
        solve(t, SolverOptions(max_iterations=1, restarts=2))
    assert isinstance(info.value.best, NahmSolution)
    assert info.value.report is not None and not info.value.report.converged


def test_determinism_and_threads(monkeypatch):
    t = derive_type(["-3/2"], [1])
    s1, r1 = solve(t, SolverOptions(seed=3))
    s2, r2 = solve(t, SolverOptions(seed=3))
    assert np.array_equal(s1.to_vector(), s2.to_vector())
    assert r1.to_json() == r2.to_json()
    monkeypatch.setenv("NAHM_THREADS", "3")
    s3, r3 = solve(t, SolverOptions(seed=3))
    assert np.array_equal(s1.to_vector(), s3.to_vector())
    assert r3.restart_index == r1.restart_index


def test_refine_solved_is_a_no_op(su2_solved):
    s, _ = su2_solved["3/2"]
    out, rep = refine(s)
    assert rep.iterations == 0
    assert np.allclose(out.to_vector(), s.to_vector(), atol=1e-12)


def test_refine_perturbed_oracle(rng):
    s = su2_k1_oracle("3/2", beta=0.1, scale=1.0)
    x = s.to_vector() + 1e-3 * rng.standard_normal(s.to_vector().size)
    out, rep = refine(NahmSolution.from_vector(s.type, x))
    assert rep.converged
    fit = su2_k1_fit(out)
    assert gauge_invariants(out).max_deviation(gauge_invariants(fit)) < 1e-6
    # the answer stays next to the starting member of the family
    assert gauge_invariants(out).max_deviation(gauge_invariants(s)) < 1e-2


def test_refine_zero_rejected():
    with pytest.raises(NoConvergence):
        refine(NahmSolution.zeros(derive_type(["-3/2"], [1])))


def test_unitary_gauge_equivariant_iteration(rng):
    t = derive_type([-3, -1], [1, 1])
    s0 = random_init(t, 23)
    u = GaugeTransform.random_unitary(t, rng)
    opts = SolverOptions(max_iterations=200)
    try:
        a, _ = refine(s0, opts)
        b, _ = refine(gauge_transform(s0, u), opts)
    except NoConvergence as exc:
        pytest.skip(f"start point does not converge: {exc}")
    assert gauge_invariants(a).max_deviation(gauge_invariants(b)) < 1e-6


def test_options_validated():
    with pytest.raises(ValidationError):
        SolverOptions(tolerance=0)
    with pytest.raises(ValidationError):
        SolverOptions(restarts=0)
