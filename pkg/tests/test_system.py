import numpy as np
import pytest

from mfde.grids import GridFunction, uniform_nodes
from mfde.system import CoefficientFamily, KernelFamily, MfdeSystem


def scalar_ode(rate=-1.0, eta=1.0):
    return MfdeSystem(
        M=1,
        shifts=[(0.0, CoefficientFamily.constant(rate))],
        kernel=KernelFamily.zero(),
        eta=eta,
    )


def two_sided_exponential(a=0.3, k_max=40, eta=1.0 / 3.0):
    """Discrete diffusion with tails gamma_k = e^{-k} and a bistable
    linearization at the rest states; A_0 limit is -2 sum gamma - a."""
    gam = [np.exp(-k) for k in range(1, k_max + 1)]
    shifts = [(float(k), CoefficientFamily.constant(g))
              for k, g in zip(range(1, k_max + 1), gam)]
    shifts += [(-float(k), CoefficientFamily.constant(g))
               for k, g in zip(range(1, k_max + 1), gam)]
    s = 2.0 * sum(gam)
    shifts.append((0.0, CoefficientFamily.constant(-s - a)))
    return MfdeSystem(M=1, shifts=shifts, kernel=KernelFamily.zero(), eta=eta,
                      decay_rate=1.0)


def test_duplicate_shifts_are_merged():
    sys = MfdeSystem(
        M=1,
        shifts=[(1.0, CoefficientFamily.constant(0.5)),
                (1.0, CoefficientFamily.constant(0.25)),
                (-1.0, CoefficientFamily.constant(1.0))],
        kernel=KernelFamily.zero(),
        eta=0.5,
    )
    assert len(sys.shifts) == 2
    r, fam = [(r, f) for r, f in sys.shifts if r == 1.0][0]
    assert np.allclose(fam(0.0), 0.75)


def test_shift_range_and_kernel_radius():
    sys = two_sided_exponential()
    assert sys.r_min == -40.0 and sys.r_max == 40.0
    assert sys.kernel_radius() == 0.0
    ker = KernelFamily.named("exp_symmetric", weight=0.25, decay=1.0)
    sys2 = MfdeSystem(M=1, shifts=[(0.0, CoefficientFamily.constant(-1.0))],
                      kernel=ker, eta=0.5, decay_rate=1.0)
    R = sys2.kernel_radius()
    # absolute two-sided tail mass 0.5 e^{-R} sits below the default 1e-10
    assert 0.5 * np.exp(-R) < 1e-10
    assert 0.5 * np.exp(-(R - 0.5)) > 1e-10


def test_validate_scalar_ode_margins():
    rep = scalar_ode().validate()
    assert rep.passed
    # Delta(iy) = iy + 1 has modulus >= 1 with minimum exactly at y = 0
    assert abs(rep["hyperbolic-minus"].value - 1.0) < 1e-12
    assert abs(rep["hyperbolic-plus"].value - 1.0) < 1e-12


def test_validate_weighted_sums_match_closed_form():
    sys = two_sided_exponential()
    rep = sys.validate(check_hyperbolicity=False)
    eta = 1.0 / 3.0
    expect = 2.0 * sum(np.exp(-k) * np.exp(eta * k) for k in range(1, 41))
    expect += 2.0 * sum(np.exp(-k) for k in range(1, 41)) + 0.3
    assert abs(rep["coeff-sum"].value - expect) < 1e-10
    assert rep["eta-margin"].passed


def test_validate_flags_eta_too_large():
    # decay rate 1 with eta = 2 breaks the summability requirement
    gam = [np.exp(-k) for k in range(1, 30)]
    shifts = [(float(k), CoefficientFamily.constant(g))
              for k, g in zip(range(1, 30), gam)]
    sys = MfdeSystem(M=1, shifts=shifts, kernel=KernelFamily.zero(),
                     eta=2.0, decay_rate=1.0)
    rep = sys.validate(check_hyperbolicity=False)
    assert not rep["eta-margin"].passed


def test_truncate_two_sided_exponential():
    sys = two_sided_exponential()
    out = sys.truncate(tol=1e-10)
    # discarded mass 2 * sum_{k>24} e^{-k} = 4.39e-11 clears 1e-10,
    # adding the |r| = 24 pair (7.5e-11) would push it over
    assert out.r_max == 24.0
    info = out.provenance["truncation"]
    assert info["discarded_shift_mass"] < 1e-10
    assert abs(info["discarded_shift_mass"]
               - 2.0 * sum(np.exp(-k) for k in range(25, 41))) < 1e-22

    tight = sys.truncate(tol=1e-12)
    assert tight.r_max == 28.0


def test_truncate_keeps_weighted_mass_in_provenance():
    sys = two_sided_exponential()
    out = sys.truncate(tol=1e-10)
    info = out.provenance["truncation"]
    expect_weighted = 2.0 * sum(np.exp(-k) * np.exp(k / 3.0)
                                for k in range(25, 41))
    assert abs(info["discarded_weighted_mass"] - expect_weighted) < 1e-18


def test_adjoint_double_is_identity():
    sys = two_sided_exponential()
    back = sys.adjoint().adjoint()
    t = np.linspace(-3.0, 3.0, 7)
    for (r1, f1), (r2, f2) in zip(sys.shifts, back.shifts):
        assert abs(r1 - r2) < 1e-12
        assert np.max(np.abs(f1(t) - f2(t))) < 1e-14


def test_adjoint_shift_and_coefficient_convention():
    # nonautonomous table coefficient at shift r = 1; the adjoint must
    # carry shift -1 with value -A(t - 1)^dagger
    h = 0.1
    tg = uniform_nodes(-5.0, 5.0, h)
    mats = np.array([[[np.tanh(t), 0.3], [0.0, 1.0]] for t in tg])
    fam = CoefficientFamily.table(-5.0, h, mats,
                                  limit_minus=[[-1.0, 0.3], [0.0, 1.0]],
                                  limit_plus=[[1.0, 0.3], [0.0, 1.0]])
    sys = MfdeSystem(M=2, shifts=[(1.0, fam)], kernel=KernelFamily.zero(M=2),
                     eta=0.5)
    adj = sys.adjoint()
    (r_adj, fam_adj), = adj.shifts
    assert r_adj == -1.0
    for t in (-2.0, 0.0, 1.7):
        expect = -np.conj(fam(np.array([t - 1.0]))[0]).T
        got = fam_adj(np.array([t]))[0]
        assert np.max(np.abs(got - expect)) < 1e-12


def test_adjoint_kernel_convention():
    # K(xi; t) -> -K(-xi; t + xi)^dagger
    ker = KernelFamily.named("exp_symmetric", weight=0.25, decay=1.0)
    sys = MfdeSystem(M=1, shifts=[(0.0, CoefficientFamily.constant(-1.0))],
                     kernel=ker, eta=0.5, decay_rate=1.0)
    adj = sys.adjoint()
    xi = np.linspace(-3.0, 3.0, 13)
    got = adj.kernel.eval(xi, 0.7)[:, 0, 0]
    expect = -0.25 * np.exp(-np.abs(xi))
    assert np.max(np.abs(got - expect)) < 1e-14


def test_eval_rhs_discrete_laplacian():
    gam = 1.0
    shifts = [(1.0, CoefficientFamily.constant(gam)),
              (-1.0, CoefficientFamily.constant(gam)),
              (0.0, CoefficientFamily.constant(-2.0 * gam))]
    sys = MfdeSystem(M=1, shifts=shifts, kernel=KernelFamily.zero(), eta=0.5)
    h = 0.05
    tg = uniform_nodes(-10.0, 10.0, h)
    x = GridFunction(-10.0, h, tg**2)
    # second difference of t^2 with unit steps is exactly 2
    val = sys.eval_rhs(x, 0.0)
    assert abs(val[0] - 2.0) < 1e-10


def test_eval_rhs_kernel_constant_function():
    ker = KernelFamily.named("exp_symmetric", weight=0.5, decay=1.0)
    sys = MfdeSystem(M=1, shifts=[], kernel=ker, eta=0.3, decay_rate=1.0)
    h = 0.05
    R = sys.kernel_radius() + 2.0
    tg = uniform_nodes(-R - 1.0, R + 1.0, h)
    x = GridFunction(-R - 1.0, h, np.ones_like(tg), extension="constant",
                     limits=(1.0, 1.0))
    val = sys.eval_rhs(x, 0.0)
    assert abs(val[0] - 1.0) < 1e-8   # int 0.5 e^{-|xi|} dxi = 1


def test_tail_bound_certificate():
    sys = two_sided_exponential()
    tb = sys.tail_bound()
    assert tb.alpha == pytest.approx(1.0 / 9.0)
    # independent check of the certificate on a fine grid of times
    alpha = tb.alpha
    for t in np.arange(-12.0, -1.0, 0.1):
        mass = 2.0 * sum(np.exp(-k) * np.exp(alpha * k)
                         for k in range(1, 41) if k >= -t)
        if -t <= 40.0:
            assert mass <= tb.K_exp * np.exp(-2.0 * alpha * abs(t)) + 1e-12


def test_tail_bound_finite_range_is_trivial():
    gam = [(1.0, CoefficientFamily.constant(0.5)),
           (-1.0, CoefficientFamily.constant(0.5)),
           (0.0, CoefficientFamily.constant(-1.3))]
    sys = MfdeSystem(M=1, shifts=gam, kernel=KernelFamily.zero(), eta=1.0)
    tb = sys.tail_bound()
    assert tb.K_exp == 0.0
    assert tb.p == 1.0


def test_tail_bound_rejects_large_alpha():
    sys = two_sided_exponential()
    with pytest.raises(ValueError):
        sys.tail_bound(alpha=0.2)   # above eta / 3


def test_json_round_trip(tmp_path):
    h = 0.1
    tg = uniform_nodes(-4.0, 4.0, h)
    mats = np.tanh(tg)
    fam = CoefficientFamily.table(-4.0, h, mats, limit_minus=-1.0,
                                  limit_plus=1.0)
    ker = KernelFamily.named("gaussian_symmetric", weight=0.1, decay=2.0)
    sys = MfdeSystem(M=1,
                     shifts=[(0.0, fam), (1.5, CoefficientFamily.constant(0.2))],
                     kernel=ker, eta=0.4, decay_rate=2.0,
                     provenance={"origin": "test"})
    path = tmp_path / "sys.json"
    sys.to_json(path)
    back = MfdeSystem.from_json(path)
    assert back.M == 1 and back.eta == 0.4
    t = np.linspace(-6.0, 6.0, 25)
    for (r1, f1), (r2, f2) in zip(sys.shifts, back.shifts):
        assert r1 == r2
        assert np.max(np.abs(f1(t) - f2(t))) < 1e-14
    xi = np.linspace(-2.0, 2.0, 9)
    assert np.max(np.abs(sys.kernel.eval(xi, 0.0)
                         - back.kernel.eval(xi, 0.0))) < 1e-14
    assert back.provenance["origin"] == "test"


def test_named_family_with_matrix_params_serializes():
    fam = CoefficientFamily.named(
        "tanh_interp",
        limit_minus=np.array([[-1.0, 0.0], [0.0, -2.0]]),
        limit_plus=np.array([[1.0, 0.0], [0.0, 2.0]]),
        width=2.0)
    sys = MfdeSystem(M=2, shifts=[(0.0, fam)], kernel=KernelFamily.zero(M=2),
                     eta=0.5)
    back = MfdeSystem.from_json(sys.to_json())
    t = np.linspace(-5.0, 5.0, 11)
    f2 = back.shifts[0][1]
    assert np.max(np.abs(fam(t) - f2(t))) < 1e-14
