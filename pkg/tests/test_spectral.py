import numpy as np
from scipy.optimize import brentq

from mfde.spectral import char_det, characteristic_matrix, check_hyperbolicity, spectral_gap
from mfde.system import CoefficientFamily, KernelFamily, MfdeSystem

from test_system import scalar_ode, two_sided_exponential


def test_characteristic_matrix_scalar_ode():
    sys = scalar_ode(rate=-1.0)
    z = np.array([0.0, 1j, -1.0])
    d = char_det(sys, z, sign=+1)
    assert np.allclose(d, [1.0, 1.0 + 1j, 0.0], atol=1e-14)


def test_characteristic_matrix_shifts():
    # Delta(z) = z - e^z - e^{-z} + 2 + a for the discrete bistable system
    gam = [(1.0, CoefficientFamily.constant(1.0)),
           (-1.0, CoefficientFamily.constant(1.0)),
           (0.0, CoefficientFamily.constant(-2.0 - 0.3))]
    sys = MfdeSystem(M=1, shifts=gam, kernel=KernelFamily.zero(), eta=0.5)
    for z in (0.0, 0.5j, 1.0 + 2.0j):
        expect = z - np.exp(z) - np.exp(-z) + 2.3
        got = char_det(sys, np.array([z]), sign=-1)[0]
        assert abs(got - expect) < 1e-13


def test_characteristic_matrix_kernel_transform():
    # int 0.25 e^{-|xi|} e^{z xi} dxi = 0.5 / (1 - z^2) for |Re z| < 1
    ker = KernelFamily.named("exp_symmetric", weight=0.25, decay=1.0)
    sys = MfdeSystem(M=1, shifts=[(0.0, CoefficientFamily.constant(-1.0))],
                     kernel=ker, eta=0.3, decay_rate=1.0)
    for z in (0.0, 0.4j):
        expect = z + 1.0 - 0.5 / (1.0 - z**2)
        got = char_det(sys, np.array([z]), sign=+1)[0]
        assert abs(got - expect) < 1e-8
    # off the imaginary axis the integrand tail decays only like
    # e^{-(1 - Re z)|xi|}, so truncation at the absolute cut dominates
    z = 0.3 + 0.5j
    expect = z + 1.0 - 0.5 / (1.0 - z**2)
    got = char_det(sys, np.array([z]), sign=+1)[0]
    assert abs(got - expect) < 1e-5


def test_char_det_conjugate_symmetry():
    sys = two_sided_exponential()
    y = np.array([0.3, 1.7, 4.0])
    up = char_det(sys, 1j * y, sign=-1)
    dn = char_det(sys, -1j * y, sign=-1)
    assert np.max(np.abs(up - np.conj(dn))) < 1e-12


def test_det_dominance_for_large_frequency():
    sys = two_sided_exponential()
    C = sum(np.exp(-k) for k in range(1, 41)) * 2.0
    C += 2.0 * sum(np.exp(-k) for k in range(1, 41)) + 0.3
    y = C + 5.0
    d = char_det(sys, np.array([1j * y]), sign=+1)[0]
    assert abs(d) >= 5.0 - 1e-9


def test_check_hyperbolicity_passes_bistable():
    sys = two_sided_exponential(a=0.3)
    for sign in (-1, +1):
        rep = check_hyperbolicity(sys, sign)
        assert rep.passed
        # Re Delta(iy) = a + 2 sum gamma_k (1 - cos ky) has minimum a at y = 0
        assert abs(rep["det-margin"].value - 0.3) < 1e-6


def test_check_hyperbolicity_detects_root_at_origin():
    sys = MfdeSystem(M=1, shifts=[(0.0, CoefficientFamily.constant(0.0))],
                     kernel=KernelFamily.zero(), eta=1.0)
    rep = check_hyperbolicity(sys, +1)
    assert not rep.passed


def test_spectral_gap_capped_by_weight():
    # root of z + 1 sits at -1, far beyond the eta/2 cap
    gap = spectral_gap(scalar_ode(rate=-1.0, eta=1.0), sign=+1)
    assert abs(gap - 0.5) < 1e-12


def test_spectral_gap_finds_nearby_root():
    sys = scalar_ode(rate=-0.1, eta=1.0)
    gap = spectral_gap(sys, sign=-1)
    assert gap <= 0.1 + 1e-9
    assert gap >= 0.1 - 0.002


def test_spectral_gap_bistable_matches_real_root():
    sys = two_sided_exponential(a=0.3, eta=1.0)

    def f(x):
        # real characteristic function at the -infinity limit
        val = x + 0.3
        for k in range(1, 41):
            val += np.exp(-k) * (2.0 - np.exp(x * k) - np.exp(-x * k))
        return val

    root = brentq(f, -0.45, -0.01)
    gap = spectral_gap(sys, sign=-1)
    assert gap <= abs(root) + 1e-9
    assert gap >= abs(root) - 0.005
