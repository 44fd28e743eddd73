import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import path_density, unit_step_loop, unit_step_pmf
from smrm import reproduce
from smrm.convkernel import conv_k, deconv_k
from smrm.direct import (
    ResidualWarning,
    _raise_first_singular,
    back_substitute,
    convolution_matrix,
    fixed_point_residual,
    gauss_reduce,
    solve_ge,
    solve_lu_approx,
)
from smrm.errors import InvalidParameter, SingularSliceMatrix
from smrm.iterative import IterationConfig, solve_power_exact
from smrm.model import QuadratureGrid, Termination, chain_model, preprocess
from smrm.rewards import Exponential, ExplicitLattice, Geometric


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.05, 0.45))
def test_ge_single_loop_closed_form(p_exit, p_loop):
    system = preprocess(unit_step_loop(p_exit, p_loop), k=60)
    rep = solve_ge(system)
    assert rep.termination == Termination.DIRECT
    assert np.allclose(rep.solution[:, 0], unit_step_pmf(p_exit, p_loop, 60), atol=1e-12)


def test_ge_two_state_formulas():
    A = np.array([[0.2, 0.5], [0.3, 0.1]])
    b = np.array([0.3, 0.6])
    system = preprocess(chain_model(A, b, Geometric(0.6)), k=40)
    acal = convolution_matrix(system)
    h = system.h
    k = 40
    # eliminate the (1,0) entry and back-substitute by hand
    sigma = deconv_k(acal[:, 1, 0], acal[:, 0, 0], k)
    d = acal[:, 1, 1] - conv_k(sigma, acal[:, 0, 1], k)
    hbar = h[:, 1] - conv_k(sigma, h[:, 0], k)
    f2 = deconv_k(hbar, d, k)
    f1 = deconv_k(h[:, 0] - conv_k(acal[:, 0, 1], f2, k), acal[:, 0, 0], k)
    sol = solve_ge(system).solution
    assert np.allclose(sol[:, 0], f1, atol=1e-14)
    assert np.allclose(sol[:, 1], f2, atol=1e-14)


def test_gauss_reduce_is_upper_triangular():
    system = preprocess(reproduce.toy_model(), k=30)
    U, _ = gauss_reduce(convolution_matrix(system), system.h)
    for i in range(4):
        for j in range(i):
            assert np.all(U[:, i, j] == 0.0)
        assert U[0, i, i] > 0


def test_ge_matches_path_enumeration_on_short_rewards():
    rng = np.random.default_rng(9)
    A = rng.random((3, 3)) * 0.2
    b = 1 - A.sum(axis=1)
    model = chain_model(A, b, lambda i, j: ExplicitLattice([0.0, 0.6, 0.4]))
    k = 8
    system = preprocess(model, k=k)
    sol = solve_ge(system).solution
    for s in system.s_question:
        # rewards are >= 1 per step, so paths longer than k-1 cannot land inside the window
        ref = path_density(model, s, k, k)
        assert np.allclose(sol[:, system.index(s)], ref, atol=1e-12)


def test_ge_residual_small_on_toy():
    system = preprocess(reproduce.toy_model(), k=reproduce.TOY_K)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ResidualWarning)
        f = solve_ge(system).solution
    assert fixed_point_residual(system, f) < 1e-12


def test_back_substitute_diagonal():
    k = 5
    U = np.zeros((k, 2, 2))
    U[0] = np.eye(2)
    h = np.random.default_rng(2).random((k, 2))
    assert np.allclose(back_substitute(U, h), h)


def test_lu_error_shrinks_with_padding():
    system = preprocess(unit_step_loop(0.3, 0.6), k=50)
    exact = unit_step_pmf(0.3, 0.6, 50)
    errs = [np.max(np.abs(solve_lu_approx(system, pad).solution[:, 0] - exact)) for pad in (0, 49, 250, 1000)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9


def test_lu_matches_power_with_large_padding():
    system = preprocess(reproduce.toy_model(), k=reproduce.TOY_K)
    power = solve_power_exact(system, IterationConfig(epsilon=1e-15)).solution
    assert np.max(np.abs(solve_lu_approx(system, 20 * reproduce.TOY_K).solution - power)) < 1e-6


def test_lu_rejects_negative_padding():
    system = preprocess(unit_step_loop(0.3, 0.6), k=10)
    with pytest.raises(InvalidParameter):
        solve_lu_approx(system, -1)


def test_singular_slice_reports_frequency():
    mats = np.stack([np.eye(2), np.zeros((2, 2)), np.eye(2)]).astype(complex)
    rhs = np.ones((3, 2), dtype=complex)
    with pytest.raises(SingularSliceMatrix) as info:
        _raise_first_singular(mats, rhs)
    assert info.value.tau == 1


def test_direct_methods_reject_continuous_systems():
    model = chain_model([[0.5]], [0.5], Exponential(1.0))
    system = preprocess(model, grid=QuadratureGrid(5.0, 11))
    with pytest.raises(InvalidParameter):
        solve_ge(system)
    with pytest.raises(InvalidParameter):
        solve_lu_approx(system, 5)
