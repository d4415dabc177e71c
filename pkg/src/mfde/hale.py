"""Hale-type inner product between adjoint-side and state-side segments.

For a system x'(t) = sum_j A_j(t) x(t + r_j) + int K(xi; t) x(t + xi) dxi
the pairing between psi in C(D_Y), D_Y = [-r_max, -r_min], and
phi in C(D_X), D_X = [r_min, r_max], at time tau is

    <psi, phi>_tau = psi(0)^H phi(0)
        - sum_j int_0^{r_j} psi(s - r_j)^H A_j(tau + s - r_j) phi(s) ds
        - int_R int_0^r psi(s - r)^H K(r; tau + s - r) phi(s) ds dr.

It is the bilinear pairing whose time derivative along trajectories equals
y(t)^H (L x)(t) + ((L* y)(t))^H x(t), so kernel elements of the adjoint
annihilate ranges of L and vice versa.

Everything is reduced to a weight covector on the D_X quadrature grid:
    <psi, phi>_tau = w_pt^H phi(0) + sum_m W[m]^H phi(theta_m),
with W assembled once per (system, tau, psi) and reused across phi. The
kernel double integral is reordered so the inner integral runs over the
psi variable u = s - r:

    - int_0^inf [int_{u<=0} psi(u)^H K(s-u; tau+u) du] phi(s) ds
    + int_{-inf}^0 [int_{u>=0} psi(u)^H K(s-u; tau+u) du] phi(s) ds

which for autonomous kernels is a discrete convolution.

Accumulating per-node weights instead of per-shift integrals matters for
accuracy: test functions annihilating the form do so through pointwise
cancellation across shifts, which survives in W but would be lost to
quadrature error if each shift integral were evaluated separately.
"""

import numpy as np

from .grids import GridFunction, simpson_weights, uniform_nodes
from .reports import DiagnosticsReport

__all__ = [
    "HaleForm",
    "hale_inner",
    "hale_gram",
    "annihilation_check",
    "verify_duality_identity",
    "fourier_probe",
]

_SNAP = 1e-9


def _col_values(f, pts, M):
    """Evaluate f at pts and return an (n, M) complex array."""
    vals = np.asarray(f(pts), dtype=complex)
    return vals.reshape(len(pts), M)


class HaleWeights:
    """Covector representation of phi -> <psi, phi>_tau on the D_X grid."""

    def __init__(self, a, h, point, fine, coarse):
        self.a = a          # left end of D_X
        self.h = h          # quadrature step
        self.point = point  # (M,) weight paired with phi(0)
        self.fine = fine    # (n, M) node weights
        self.coarse = coarse  # (n//2 + 1, M) weights on every second node


class HaleForm:
    """The pairing <psi, phi>_tau for one system at one time.

    The quadrature step h defaults to a quarter of the usual working grid
    (0.05 / 4) so that interpolation of psi and the coefficients stays well
    below the 1e-8 scale targeted by the annihilation checks. Every shift
    must be an integer multiple of 2h so that the Richardson pair of grids
    aligns with the integration windows.
    """

    def __init__(self, system, tau, h=0.0125):
        self.system = system
        self.tau = float(tau)
        self.h = float(h)
        self.M = system.M
        a, b = system.r_min, system.r_max
        if b - a < 2.0 * h:
            # degenerate state space (pure ODE); keep a two-node window
            a, b = -2.0 * h, 2.0 * h
        self.a, self.b = a, b
        self.nodes = uniform_nodes(a, b, h)
        self.i_zero = int(round(-a / h))
        if abs(a + self.i_zero * h) > _SNAP:
            raise ValueError("state-space window must contain 0 as a grid node")
        for r, _ in system.shifts:
            if r != 0.0 and abs(r / (2.0 * h) - round(r / (2.0 * h))) > _SNAP:
                raise ValueError(f"shift {r} is not aligned with step {2 * h}")

    # -- weight assembly ----------------------------------------------------

    def weights(self, psi):
        fine = self._assemble(psi, self.h)
        coarse = self._assemble(psi, 2.0 * self.h)
        point = np.asarray(psi(0.0), dtype=complex).reshape(self.M)
        return HaleWeights(self.a, self.h, point, fine, coarse)

    def _assemble(self, psi, h):
        M = self.M
        n = int(round((self.b - self.a) / h)) + 1
        W = np.zeros((n, M), dtype=complex)
        tau = self.tau
        for r, fam in self.system.shifts:
            if r == 0.0:
                continue
            lo, hi = (0.0, r) if r > 0 else (r, 0.0)
            s = uniform_nodes(lo, hi, h)
            sw = simpson_weights(s.size, h)
            psis = _col_values(psi, s - r, M)
            As = np.asarray(fam(tau + s - r), dtype=complex)
            cols = np.einsum("imn,im->in", np.conj(As), psis)
            sign = -1.0 if r > 0 else 1.0
            i0 = int(round((lo - self.a) / h))
            W[i0:i0 + s.size] += sign * sw[:, None] * cols
        if not self.system.kernel.is_zero():
            self._add_kernel(W, psi, h)
        return W

    def _add_kernel(self, W, psi, h):
        M = self.M
        kernel = self.system.kernel
        tau = self.tau
        a, b = self.a, self.b
        # u-windows carry psi and live on D_Y = [-b, -a]; s-windows carry phi
        # on D_X = [a, b]. The pair (u <= 0, s >= 0) enters with a minus
        # sign, (u >= 0, s <= 0) with a plus sign.
        for u_sel, s_sel, sign in (("neg", "pos", -1.0), ("pos", "neg", +1.0)):
            # both windows of a pass are empty together: the first needs
            # b > 0, the second a < 0
            if (u_sel == "neg" and b < h) or (u_sel == "pos" and -a < h):
                continue
            u = uniform_nodes(-b, 0.0, h) if u_sel == "neg" else uniform_nodes(0.0, -a, h)
            s = uniform_nodes(0.0, b, h) if s_sel == "pos" else uniform_nodes(a, 0.0, h)
            wu = simpson_weights(u.size, h)
            ws = simpson_weights(s.size, h)
            psiu = _col_values(psi, u, M)
            if M == 1 and kernel.is_autonomous():
                cols = self._kernel_convolution(kernel, u, s, wu, psiu)
            else:
                cols = self._kernel_direct(kernel, u, s, wu, psiu, tau)
            i0 = int(round((s[0] - a) / h))
            W[i0:i0 + s.size] += sign * ws[:, None] * cols

    @staticmethod
    def _kernel_convolution(kernel, u, s, wu, psiu):
        # scalar autonomous case: inner integral is a lattice correlation
        g = (wu * psiu[:, 0]).astype(complex)
        xi = (s[0] - u[-1]) + (s[1] - s[0]) * np.arange(s.size + u.size - 1)
        Kv = kernel.eval(xi, 0.0)[:, 0, 0].astype(complex)
        full = np.convolve(np.conj(Kv), g)
        return full[u.size - 1:u.size - 1 + s.size][:, None]

    @staticmethod
    def _kernel_direct(kernel, u, s, wu, psiu, tau):
        M = psiu.shape[1]
        cols = np.zeros((s.size, M), dtype=complex)
        for i in range(u.size):
            Kv = np.asarray(kernel.eval(s - u[i], tau + u[i]), dtype=complex)
            cols += wu[i] * np.einsum("smn,m->sn", np.conj(Kv), psiu[i])
        return cols

    # -- evaluation -----------------------------------------------------------

    def apply(self, weights, phi, with_error=False):
        vals = _col_values(phi, self.nodes, self.M)
        pt = complex(np.vdot(weights.point, vals[self.i_zero]))
        fine = pt + complex(np.sum(np.conj(weights.fine) * vals))
        if not with_error:
            return fine
        coarse = pt + complex(np.sum(np.conj(weights.coarse) * vals[::2]))
        return fine, abs(fine - coarse) / 15.0

    def __call__(self, psi, phi, with_error=False):
        return self.apply(self.weights(psi), phi, with_error=with_error)


def hale_inner(system, psi, phi, tau, h=0.0125, with_error=False):
    """One-shot <psi, phi>_tau; see HaleForm for reuse across many phi."""
    return HaleForm(system, tau, h=h)(psi, phi, with_error=with_error)


def hale_gram(system, psis, phis, tau, h=0.0125):
    """Matrix G[i, j] = <psi_i, phi_j>_tau."""
    form = HaleForm(system, tau, h=h)
    G = np.zeros((len(psis), len(phis)), dtype=complex)
    for i, psi in enumerate(psis):
        w = form.weights(psi)
        for j, phi in enumerate(phis):
            G[i, j] = form.apply(w, phi)
    return G


def fourier_probe(a, b, h, M, rng, n_modes=20, omega_max=3.0, decay=0.75):
    """Smooth random test function on [a, b] with bounded derivatives.

    A short cosine sum with geometrically decaying amplitudes and capped top
    frequency, normalized to sup-norm 1. Used to probe annihilation claims
    with functions whose fourth derivative stays of order omega_max^4.
    """
    t = uniform_nodes(a, b, h)
    vals = np.zeros((t.size, M))
    omegas = rng.uniform(0.0, omega_max, size=n_modes)
    for k in range(n_modes):
        amp = decay ** k * rng.standard_normal(M)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        vals += amp[None, :] * np.cos(omegas[k] * t + phase)[:, None]
    top = np.max(np.abs(vals))
    if top > 0:
        vals /= top
    return GridFunction(a, h, vals if M > 1 else vals[:, 0])


def annihilation_check(system, psi, taus, n_probes=100, seed=0, tol=1e-8,
                       h=0.0125):
    """Check that psi annihilates the state space through the pairing.

    For each tau the report records max_phi |<psi, phi>_tau| / sup|phi|
    over seeded random probes; psi lies in the kernel of the transposed
    pairing exactly when these ratios vanish.
    """
    rep = DiagnosticsReport()
    rng = np.random.default_rng(seed)
    a, b = system.r_min, system.r_max
    probes = [fourier_probe(a, b, h, system.M, rng) for _ in range(n_probes)]
    for tau in taus:
        form = HaleForm(system, tau, h=h)
        w = form.weights(psi)
        worst = 0.0
        for phi in probes:
            val = form.apply(w, phi)
            worst = max(worst, abs(val) / phi.sup_norm())
        rep.add(f"annihilation-tau={tau:g}", worst < tol, value=worst,
                threshold=tol, detail=f"{n_probes} random probes")
    return rep


def verify_duality_identity(system, x, y, ts, delta=1e-3, tol=1e-5,
                            h=0.0125, adjoint=None):
    """Check d/dt <y^t, x_t>_t = y(t)^H (L x)(t) + ((L~ y)(t))^H x(t).

    Here L is the operator of the system, L x = x' - rhs(x), and L~ is the
    operator of the adjoint system, L~ y = y' - rhs_adj(y) = -(L* y) with
    L* the formal L2 adjoint of L. Both trajectories pair through their own
    differential operator; the pairing is constant exactly when x solves the
    system and y solves the adjoint system. x and y are GridFunctions on
    absolute time and the left side is a centered difference of the pairing
    of their segments.
    """
    if adjoint is None:
        adjoint = system.adjoint()
    dom = (system.r_min, system.r_max)
    hx = x.h
    xp = x.derivative()
    yp = y.derivative()
    rep = DiagnosticsReport()

    def pairing(t):
        from .grids import adjoint_segment_at, segment_at
        phi = segment_at(x, t, dom, hx)
        psi = adjoint_segment_at(y, t, dom, hx)
        return HaleForm(system, t, h=h)(psi, phi)

    for t in ts:
        lhs = (pairing(t + delta) - pairing(t - delta)) / (2.0 * delta)
        yv = np.atleast_1d(np.asarray(y(t), dtype=complex))
        xv = np.atleast_1d(np.asarray(x(t), dtype=complex))
        Lx = np.atleast_1d(np.asarray(xp(t), dtype=complex)) \
            - np.asarray(system.eval_rhs(x, t), dtype=complex)
        Lay = np.atleast_1d(np.asarray(yp(t), dtype=complex)) \
            - np.asarray(adjoint.eval_rhs(y, t), dtype=complex)
        rhs = complex(np.vdot(yv, Lx) + np.vdot(Lay, xv))
        resid = abs(lhs - rhs)
        scale = max(1.0, abs(lhs), abs(rhs))
        rep.add(f"duality-t={t:g}", resid / scale < tol, value=resid / scale,
                threshold=tol, detail=f"lhs={lhs:.6e} rhs={rhs:.6e}")
    return rep
