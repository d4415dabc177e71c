import numpy as np
import pytest

from mfde.grids import GridFunction, uniform_nodes
from mfde.kernels import (compute_kernel, discretize_lambda, fit_decay_rates,
                          fredholm_index)
from mfde.system import CoefficientFamily, KernelFamily, MfdeSystem


def sech_ode(alpha=0.8):
    """x'(t) = -alpha tanh(alpha t) x(t), with the exact bounded solution
    sech(alpha t); the adjoint has no bounded solution, so the index is 1."""
    fam = CoefficientFamily.named("tanh_interp",
                                  limit_minus=np.array([[alpha]]),
                                  limit_plus=np.array([[-alpha]]),
                                  width=1.0 / alpha)
    return MfdeSystem(M=1, shifts=[(0.0, fam)], kernel=KernelFamily.zero(),
                      eta=0.5 * alpha)


def bistable_ladder(a=0.3, k_max=8):
    gam = [np.exp(-k) for k in range(1, k_max + 1)]
    shifts = [(float(k), CoefficientFamily.constant(g))
              for k, g in zip(range(1, k_max + 1), gam)]
    shifts += [(-float(k), CoefficientFamily.constant(g))
               for k, g in zip(range(1, k_max + 1), gam)]
    shifts.append((0.0, CoefficientFamily.constant(-2.0 * sum(gam) - a)))
    return MfdeSystem(M=1, shifts=shifts, kernel=KernelFamily.zero(),
                      eta=1.0 / 3.0, decay_rate=1.0)


def test_derivative_rows_exact_on_quartic():
    # five-point stencils differentiate t^4 exactly, one-sided rows included
    sys = MfdeSystem(M=1, shifts=[], kernel=KernelFamily.zero(), eta=1.0)
    D, t = discretize_lambda(sys, L=2.0, h=0.1, penalty=0.0, damping=0.0)
    err = D @ t ** 4 - 4.0 * t ** 3
    assert np.max(np.abs(err)) < 1e-10


def test_discretization_matches_direct_evaluation():
    # matrix rows reproduce x' - rhs(x) for a smooth probe, checked against
    # the quadrature evaluation path on interior nodes
    sys = MfdeSystem(
        M=1, shifts=[(-1.0, CoefficientFamily.constant(0.4)),
                     (1.0, CoefficientFamily.constant(-0.3))],
        kernel=KernelFamily.named("gaussian_symmetric", weight=0.2, decay=2.0),
        eta=0.4, decay_rate=2.0)
    L, h = 6.0, 0.05
    D, t = discretize_lambda(sys, L=L, h=h)
    tt = uniform_nodes(-12.0, 12.0, h)
    f = GridFunction(-12.0, h, np.sin(1.2 * tt) * np.exp(-0.1 * tt ** 2))
    Df = D @ f(t)
    fp = lambda s: (1.2 * np.cos(1.2 * s) - 0.2 * s * np.sin(1.2 * s)) \
        * np.exp(-0.1 * s ** 2)
    inner = np.abs(t) <= 2.0
    for i in np.nonzero(inner)[0][::5]:
        direct = fp(t[i]) - sys.eval_rhs(f, t[i])[0]
        assert abs(Df[i] - direct) < 2e-5


def test_sech_kernel_recovered():
    sys = sech_ode()
    basis = compute_kernel(sys, "lambda", L=20.0, h=0.05)
    assert basis.dim == 1
    assert basis.report.passed
    assert basis.gap_ratio > 1e3
    v = basis.functions[0]
    t = uniform_nodes(-20.0, 20.0, 0.05)
    ref = 1.0 / np.cosh(0.8 * t)
    got = v(t)
    cos = abs(np.vdot(got, ref)) / (np.linalg.norm(got) * np.linalg.norm(ref))
    assert cos > 0.9999
    fits = fit_decay_rates(v)
    assert abs(fits["rate_minus"] - 0.8) < 0.016
    assert abs(fits["rate_plus"] - 0.8) < 0.016
    assert fits["resid_minus"] < 0.05 and fits["resid_plus"] < 0.05


def test_sech_adjoint_empty_and_index_one():
    sys = sech_ode()
    bs = compute_kernel(sys, "adjoint", L=20.0, h=0.05)
    assert bs.dim == 0
    assert bs.report.passed
    assert fredholm_index(sys, L=20.0, h=0.05) == 1
    # the adjoint of the adjoint recovers the original index with its sign
    # flipped
    assert fredholm_index(sys.adjoint(), L=20.0, h=0.05) == -1


def test_hyperbolic_constant_system_has_no_kernel():
    sys = bistable_ladder()
    basis = compute_kernel(sys, "lambda", L=20.0, h=0.05)
    bstar = compute_kernel(sys, "adjoint", L=20.0, h=0.05)
    assert basis.dim == 0 and bstar.dim == 0
    assert basis.report.passed and bstar.report.passed
    assert basis.gap_ratio > 100.0


def test_misaligned_shift_rejected():
    sys = MfdeSystem(M=1, shifts=[(0.33, CoefficientFamily.constant(1.0))],
                     kernel=KernelFamily.zero(), eta=0.5)
    with pytest.raises(ValueError):
        discretize_lambda(sys, L=5.0, h=0.05)


def test_normalization_and_phase():
    basis = compute_kernel(sech_ode(), "lambda", L=20.0, h=0.05, refine=False)
    v = basis.functions[0]
    assert abs(v.sup_norm() - 1.0) < 1e-12
    # peak value is real and positive after the phase fix
    assert v(0.0).real > 0.99
