"""Front solver, lattice speed oracle, linearization, hyperbolicity screen."""

import numpy as np
import pytest

from mfde.grids import uniform_nodes
from mfde.kernels import compute_kernel
from mfde.nagumo import (FrontSolution, cubic, cubic_derivative,
                         gamma_exponential, gamma_gaussian, solve_front,
                         lattice_front_speed, linearize,
                         gaussian_hyperbolicity)
from mfde.system import KernelFamily


@pytest.fixture(scope="module")
def front_a03():
    return solve_front(gamma_exponential(k_max=20), None, 0.3, L=28.0, h=0.05)


def test_cubic_rest_state_multipliers():
    a = 0.3
    assert cubic(0.0, a) == 0.0 and cubic(1.0, a) == 0.0 and cubic(a, a) == 0.0
    assert cubic_derivative(0.0, a) == pytest.approx(-a)
    assert cubic_derivative(1.0, a) == pytest.approx(a - 1.0)


def test_symmetric_front_is_stationary():
    fr = solve_front(gamma_exponential(k_max=12), None, 0.5, L=12.0, h=0.1)
    assert abs(fr.c) < 1e-10
    assert fr.residual < 1e-10
    assert fr.pinned
    assert abs(complex(fr.profile(0.0)).real - 0.5) < 1e-12
    # odd symmetry of the profile about the phase point
    t = uniform_nodes(0.0, 8.0, 0.1)
    sym = np.max(np.abs(fr.profile(t) + fr.profile(-t) - 1.0))
    assert sym < 1e-9


def test_front_a03_converged_monotone(front_a03):
    fr = front_a03
    assert fr.residual < 1e-10
    assert fr.c > 0.0
    assert not fr.pinned
    assert fr.min_step >= -1e-8
    U = fr.profile.values[:, 0]
    assert U.min() >= -1e-8 and U.max() <= 1.0 + 1e-8
    assert abs(complex(fr.profile(0.0)).real - 0.5) < 1e-12


def test_front_speed_matches_lattice_oracle(front_a03):
    c_lat = lattice_front_speed(gamma_exponential(k_max=20), 0.3)
    assert abs(c_lat - front_a03.c) <= 0.02 * abs(front_a03.c)


def test_translation_gauge_unique(front_a03):
    fr2 = solve_front(gamma_exponential(k_max=20), None, 0.3, L=28.0, h=0.05,
                      guess_shift=2.0)
    diff = np.max(np.abs(fr2.profile.values - front_a03.profile.values))
    assert diff < 1e-8
    assert abs(fr2.c - front_a03.c) < 1e-10


def test_derivative_residual_refines():
    # u' should satisfy the linearization with error falling at least as h^2;
    # couplings short enough that no shifted argument leaves the window, and
    # the window wide enough that the edge-closure boundary layer (decaying
    # like exp(-beta (L - |t|)) into the interior) stays below the
    # discretization term at the sample points
    errs = {}
    for h in (0.1, 0.05):
        fr = solve_front(gamma_exponential(k_max=6), None, 0.35, L=20.0, h=h)
        lin = linearize(fr)
        v = fr.profile.derivative()
        vp = v.derivative()
        errs[h] = max(abs(complex(np.atleast_1d(vp(tt))[0])
                          - complex(np.atleast_1d(lin.eval_rhs(v, tt))[0]))
                      for tt in (-4.0, -2.0, 0.0, 1.0, 3.0))
    assert errs[0.05] < errs[0.1] / 3.0


def test_theta_kernel_front_and_linearization():
    theta = KernelFamily.named("exp_symmetric", weight=np.array([[0.15]]),
                               decay=1.5)
    fr = solve_front(gamma_exponential(k_max=10, weight=0.5), theta, 0.4,
                     L=18.0, h=0.1)
    assert fr.residual < 1e-10
    assert fr.c > 0.0
    lin = linearize(fr)
    assert not lin.kernel.is_zero()
    # kernel carries the 1/c factor
    val = lin.kernel.eval(np.array([0.7]))[0, 0, 0]
    assert val == pytest.approx(0.15 * np.exp(-1.5 * 0.7) / fr.c, rel=1e-12)
    # u' solves the linearized equation
    v = fr.profile.derivative()
    vp = v.derivative()
    for tt in (-2.0, 0.0, 1.5):
        r = abs(complex(np.atleast_1d(vp(tt))[0])
                - complex(np.atleast_1d(lin.eval_rhs(v, tt))[0]))
        assert r < 5e-5


def test_linearize_structure(front_a03):
    gamma = gamma_exponential(k_max=20)
    lin = linearize(front_a03)
    c = front_a03.c
    by_shift = {round(r, 6): fam for r, fam in lin.shifts}
    # tail weights gamma_k / c on both sides
    for k in (1, 2, 5):
        wplus = by_shift[float(k)](0.0)[0, 0]
        wminus = by_shift[float(-k)](0.0)[0, 0]
        assert wplus == pytest.approx(gamma[k - 1] / c, rel=1e-12)
        assert wminus == pytest.approx(wplus, rel=1e-12)
    # centre coefficient limits in the c-weighted normalization
    sg = float(np.sum(gamma))
    a0 = by_shift[0.0]
    assert c * a0.limit(-1)[0, 0] == pytest.approx(-2 * sg - 0.3, rel=1e-10)
    assert c * a0.limit(+1)[0, 0] == pytest.approx(-2 * sg + 0.3 - 1.0,
                                                   rel=1e-10)
    # adjoint keeps equal weights on mirrored shifts (scalar, symmetric)
    adj = lin.adjoint()
    adj_by_shift = {round(r, 6): fam for r, fam in adj.shifts}
    for k in (1, 3):
        ap = adj_by_shift[float(k)](0.3)[0, 0]
        am = adj_by_shift[float(-k)](0.3)[0, 0]
        assert ap == pytest.approx(am, rel=1e-12)


def test_linearized_kernel_is_front_derivative(front_a03):
    lin = linearize(front_a03)
    b = compute_kernel(lin, "lambda", L=25.0, h=0.05, refine=False)
    assert b.dim == 1
    assert b.report["sigma-gap"].passed
    w = b.functions[0]
    t = np.linspace(-20.0, 20.0, 801)
    got = np.real(w(t))
    ref = front_a03.profile.derivative()(t)
    cos = abs(np.dot(got, ref)) / (np.linalg.norm(got) * np.linalg.norm(ref))
    assert cos > 0.999


def test_pinned_front_linearize_raises():
    fr = solve_front(gamma_exponential(k_max=12), None, 0.5, L=12.0, h=0.1)
    with pytest.raises(ValueError, match="pinned"):
        linearize(fr)


def test_gaussian_hyperbolicity_examples():
    rep = gaussian_hyperbolicity(np.ones(8), 1.0, (-0.3, -0.7))
    assert rep["laplacian-sign"].passed
    assert rep["limit-multipliers"].passed
    # the symbol vanishes at the ends of (0, 2 pi): grid minimum is tiny
    assert 0.0 < rep["laplacian-sign"].value < 1e-4
    rep2 = gaussian_hyperbolicity([-10.0] + [1.0] * 7, 1.0, (-0.3, -0.7))
    assert not rep2["laplacian-sign"].passed
    assert rep2["laplacian-sign"].value < -1.0
    rep3 = gaussian_hyperbolicity(np.ones(8), 1.0, (-0.3, 0.2))
    assert not rep3["limit-multipliers"].passed


def test_gamma_builders():
    g = gamma_exponential(k_max=5, rate=2.0, weight=3.0)
    assert g.shape == (5,)
    assert g[0] == pytest.approx(3.0 * np.exp(-2.0))
    gg = gamma_gaussian([1.0, -2.0], 0.5)
    assert gg[0] == pytest.approx(np.exp(-1.0) / 0.25)
    assert gg[1] == pytest.approx(-2.0 * np.exp(-4.0) / 0.25)


def test_misaligned_shift_raises():
    with pytest.raises(ValueError, match="aligned"):
        solve_front(gamma_exponential(k_max=3), None, 0.4, L=9.0, h=0.15)
