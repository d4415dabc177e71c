"""Characteristic matrices and hyperbolicity of the limit systems.

The limits A_j(+-infinity), K(xi; +-infinity) define autonomous systems
whose characteristic matrices are

    Delta(z) = z I - sum_j A_j e^{z r_j} - int K(xi) e^{z xi} dxi,

analytic on the strip |Re z| < eta. Hyperbolicity means det Delta(iy) != 0
for all real y. Since |det Delta(iy)| >= (|y| - C)^M once |y| exceeds
C = sum_j |A_j| + int |K|, a scan of the compact window [-C-1, C+1]
suffices. The spectral gap (distance from the imaginary axis to the
nearest characteristic root) is certified with an argument-principle
winding count over rectangle boundaries.
"""

import numpy as np

from .grids import simpson_weights, uniform_nodes
from .reports import DiagnosticsReport

__all__ = [
    "characteristic_matrix",
    "char_det",
    "check_hyperbolicity",
    "spectral_gap",
]


def _kernel_quad(system, sign):
    """Nodes, weights and limit-kernel samples for the transform integral."""
    if system.kernel.is_zero():
        return None
    R = system.kernel_radius()
    if R == 0.0:
        return None
    h = 0.025
    xi = uniform_nodes(-R, R, h)
    w = simpson_weights(xi.size, h)
    Kv = system.kernel.limit(sign, xi)
    return xi, w, Kv


def characteristic_matrix(system, z, sign):
    """Delta(z) of the limit system at t -> sign*infinity; z may be an array."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    M = system.M
    out = z[:, None, None] * np.eye(M)[None]
    for r, A in system.limit_matrices(sign):
        out -= np.exp(z * r)[:, None, None] * np.asarray(A, dtype=complex)[None]
    kq = _kernel_quad(system, sign)
    if kq is not None:
        xi, w, Kv = kq
        wK = w[:, None, None] * Kv
        # chunk over z to keep the (n_z, n_xi) exponential table small
        for lo in range(0, z.size, 256):
            hi = min(lo + 256, z.size)
            E = np.exp(np.outer(z[lo:hi], xi))
            out[lo:hi] -= np.einsum("zi,ijk->zjk", E, wK)
    return out


def char_det(system, z, sign):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if system.M == 1:
        return characteristic_matrix(system, z, sign)[:, 0, 0]
    return np.linalg.det(characteristic_matrix(system, z, sign))


def _coefficient_mass(system, sign, alpha=0.0):
    """C_alpha = sum_j |A_j| e^{alpha |r_j|} + int |K| e^{alpha |xi|} dxi."""
    C = 0.0
    for r, A in system.limit_matrices(sign):
        C += np.linalg.norm(A, 2) * np.exp(alpha * abs(r))
    kq = _kernel_quad(system, sign)
    if kq is not None:
        xi, w, Kv = kq
        norms = np.array([np.linalg.norm(A, 2) for A in Kv])
        C += float(np.sum(w * norms * np.exp(alpha * np.abs(xi))))
    return C


def check_hyperbolicity(system, sign, n_scan=4096, margin=1e-8):
    """Scan det Delta(iy) on [-y_max, y_max] for roots on the axis.

    y_max = C + 1 with C the coefficient mass, so the unscanned part of the
    axis is covered by the dominance bound |det Delta(iy)| >= (|y| - C)^M.
    """
    rep = DiagnosticsReport()
    C = _coefficient_mass(system, sign)
    y_max = C + 1.0
    n = int(n_scan) | 1  # odd count so y = 0 is sampled exactly
    y = np.linspace(-y_max, y_max, n)
    dets = char_det(system, 1j * y, sign)
    dmin = float(np.min(np.abs(dets)))
    rep.add("det-margin", dmin > margin, value=dmin, threshold=margin,
            detail=f"min |det Delta(iy)| over {int(n_scan)} samples, y_max={y_max:.3g}")
    rep.add("scan-window", True, value=y_max,
            detail=f"dominance bound active beyond |y| = C = {C:.3g}")
    return rep


def _edge_arg_sum(f, z0, z1, n0=64, tol_angle=np.pi / 4, max_pts=40000):
    """Accumulated argument increment of f along the segment z0 -> z1.

    Samples are refined until consecutive increments stay below tol_angle,
    which rules out missed windings. Returns None if |f| comes too close
    to zero along the edge (a root on or near the contour).
    """
    t = np.linspace(0.0, 1.0, n0)
    z = z0 + t * (z1 - z0)
    fv = f(z)
    scale = float(np.max(np.abs(fv)))
    if scale == 0.0:
        return None
    while True:
        if float(np.min(np.abs(fv))) < 1e-13 * scale:
            return None
        dphi = np.angle(fv[1:] / fv[:-1])
        bad = np.abs(dphi) > tol_angle
        if not bad.any():
            return float(np.sum(dphi))
        if t.size > max_pts:
            return None
        idx = np.flatnonzero(bad)
        tm = 0.5 * (t[idx] + t[idx + 1])
        zm = z0 + tm * (z1 - z0)
        fm = f(zm)
        t = np.insert(t, idx + 1, tm)
        z = np.insert(z, idx + 1, zm)
        fv = np.insert(fv, idx + 1, fm)
        scale = max(scale, float(np.max(np.abs(fm))))


def _rectangle_clear(system, sign, alpha, y_max):
    """True if det Delta has no roots in [-alpha, alpha] x [-y_max, y_max]."""
    f = lambda z: char_det(system, z, sign)  # noqa: E731
    corners = [alpha - 1j * y_max, alpha + 1j * y_max,
               -alpha + 1j * y_max, -alpha - 1j * y_max]
    total = 0.0
    for k in range(4):
        inc = _edge_arg_sum(f, corners[k], corners[(k + 1) % 4])
        if inc is None:
            return False
        total += inc
    return int(round(total / (2.0 * np.pi))) == 0


def spectral_gap(system, sign, alpha_cap=None, bisect_steps=30):
    """Largest certified root-free strip half-width, capped at eta/2.

    Bisects on alpha and checks each candidate rectangle with the winding
    count. The vertical extent y_max = C_alpha + 1 uses the alpha-weighted
    coefficient mass so no root can escape through the horizontal edges.
    Returns 0.0 when even tiny strips contain roots (non-hyperbolic limit).
    """
    cap = system.eta / 2.0 if alpha_cap is None else float(alpha_cap)
    y_cap = _coefficient_mass(system, sign, alpha=cap) + 1.0
    if _rectangle_clear(system, sign, cap, y_cap):
        return cap
    lo, hi = 0.0, cap
    for _ in range(int(bisect_steps)):
        mid = 0.5 * (lo + hi)
        if mid <= 1e-6:
            break
        y_max = _coefficient_mass(system, sign, alpha=mid) + 1.0
        if _rectangle_clear(system, sign, mid, y_max):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-3 * cap:
            break
    return lo
