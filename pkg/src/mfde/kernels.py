"""Bounded solution spaces of the full-line operator.

The operator L x = x' - rhs(x) is collocated on the uniform grid of
[-L, L] with fourth order five-point derivative stencils (one-sided at the
two rows nearest each edge) and composite Simpson weights for the
convolution term. Shifted arguments that leave the window are treated as
zero; genuine bounded solutions decay exponentially toward both ends, so
for adequate L this truncation perturbs their rows at the level of the
tail mass while keeping every other singular value at unit scale.

Truncation alone does not force decay where nothing reaches past an edge
(pure ODE terms, or the unreached side of a one-sided system), so solutions
of the interval equation that grow toward an edge would masquerade as
kernel elements. Small penalty rows on the outer buffer of the window act
as soft decay conditions: they lift those modes to the penalty scale while
perturbing a genuinely decaying solution only at the level of its tail
values. The centered stencils also admit a grid-scale sawtooth parasite
that decays on its own and slips past the penalty; second-difference
damping rows lift it to the damping scale while reading only damping * h^2
* x'' on resolved functions.

The kernel dimension is read off the singular spectrum: values below
sigma_rel times the largest singular value count as zero. The verdict is
only trusted when the spectrum shows a wide gap at the cut and the count
is reproduced both on a longer window and on a finer grid.
"""

import numpy as np

from .grids import GridFunction, simpson_weights, uniform_nodes
from .reports import DiagnosticsReport

__all__ = ["KernelBasis", "discretize_lambda", "compute_kernel",
           "fredholm_index", "fit_decay_rates"]

_SNAP = 1e-9


def _derivative_matrix(n, h):
    """Fourth order first-derivative collocation matrix on n uniform nodes."""
    if n < 5:
        raise ValueError("derivative stencils need at least 5 nodes")
    D = np.zeros((n, n))
    c = 1.0 / (12.0 * h)
    for i in range(2, n - 2):
        D[i, i - 2:i + 3] = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) * c
    D[0, :5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) * c
    D[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) * c
    D[n - 1, n - 5:] = -np.array([-3.0, 16.0, -36.0, 48.0, -25.0]) * c
    D[n - 2, n - 5:] = -np.array([1.0, -6.0, 18.0, -10.0, -3.0]) * c
    return D


def _aligned_offset(value, h, what):
    k = value / h
    if abs(k - round(k)) > _SNAP / h:
        raise ValueError(f"{what} {value} is not aligned with step {h}")
    return int(round(k))


def discretize_lambda(system, L=40.0, h=0.05, penalty=0.05, buffer=0.1,
                      damping=5e-3, window=None, guards=True):
    """Collocation matrix of L x = x' - rhs(x) on [-L, L].

    Returns (D, t) with t the n collocation times and D acting on the
    stacked node values. The first n M rows are the collocation rows; two
    groups of guard rows follow. Soft decay conditions penalty * x(t_i) on
    the nodes with |t_i| >= (1 - buffer) L pin solutions of the interval
    equation that grow toward an unreached edge, and damping rows
    damping * (x_{i-1} - 2 x_i + x_{i+1}) suppress the alternating parasite
    of the centered stencils; on smooth functions the latter read as
    damping h^2 x'' and stay far below the kernel threshold. Pass
    penalty=0 / damping=0 to drop either group. Every shift and both
    kernel cut radii must be integer multiples of h; arguments outside the
    window are treated as zero.

    window=(lo, hi) collocates on that interval instead of [-L, L] (the
    penalty buffer then sits at the outer fraction of each half-width).
    guards=False returns the bare n M x n M collocation block so callers
    can append their own boundary treatment.
    """
    if window is None:
        window = (-L, L)
    lo, hi = float(window[0]), float(window[1])
    n = _aligned_offset(hi - lo, h, "window length") + 1
    t = lo + h * np.arange(n)
    M = system.M
    D = np.kron(_derivative_matrix(n, h), np.eye(M)).astype(complex)
    Db = D.reshape(n, M, n, M)
    for r, fam in system.shifts:
        k = _aligned_offset(r, h, "shift")
        rows = np.arange(max(0, -k), min(n, n - k))
        A = np.asarray(fam(t[rows]), dtype=complex)
        Db[rows, :, rows + k, :] -= A
    kernel = system.kernel
    if not kernel.is_zero() and sum(system.kernel_support()) >= h:
        Rm, Rp = system.kernel_support()
        xi = uniform_nodes(-Rm, Rp, h)
        w = simpson_weights(xi.size, h)
        ks = np.array([_aligned_offset(x, h, "kernel radius") for x in xi])
        if kernel.is_autonomous():
            Kv = np.asarray(kernel.eval(xi, 0.0), dtype=complex)
            for m in range(xi.size):
                k = ks[m]
                rows = np.arange(max(0, -k), min(n, n - k))
                Db[rows, :, rows + k, :] -= w[m] * Kv[m]
        else:
            for i in range(n):
                cols = i + ks
                valid = (cols >= 0) & (cols < n)
                Kv = np.asarray(kernel.eval(xi[valid], t[i]), dtype=complex)
                Db[i, :, cols[valid], :] -= w[valid, None, None] * Kv
    if not guards:
        if not np.any(D.imag):
            D = D.real.copy()
        return D, t
    if penalty > 0.0:
        half = 0.5 * (hi - lo)
        idx = np.nonzero(np.abs(t - (lo + half)) >= (1.0 - buffer) * half - _SNAP)[0]
        P = np.zeros((idx.size, M, n, M), dtype=complex)
        for row, i in enumerate(idx):
            P[row, :, i, :] = penalty * np.eye(M)
        D = np.concatenate([D, P.reshape(idx.size * M, n * M)], axis=0)
    if damping > 0.0:
        F = np.zeros((n - 2, n))
        for i in range(1, n - 1):
            F[i - 1, i - 1:i + 2] = damping * np.array([1.0, -2.0, 1.0])
        D = np.concatenate([D, np.kron(F, np.eye(M)).astype(D.dtype)], axis=0)
    if not np.any(D.imag):
        D = D.real.copy()
    return D, t


class KernelBasis:
    """Kernel of the discretized operator with its acceptance diagnostics.

    functions hold the kernel elements as sup-normalized GridFunctions with
    a fixed phase (largest entry real and positive); vectors keeps the raw
    l2-orthonormal rows. report carries the sigma-gap and the two
    refinement reproducibility checks; dim is only meaningful when
    report.passed is true.
    """

    def __init__(self, system, which, L, h, sigma_rel, dim, functions,
                 vectors, singular_values, threshold, gap_ratio, report):
        self.system = system
        self.which = which
        self.L = L
        self.h = h
        self.sigma_rel = sigma_rel
        self.dim = dim
        self.functions = functions
        self.vectors = vectors
        self.singular_values = singular_values
        self.threshold = threshold
        self.gap_ratio = gap_ratio
        self.report = report

    def __repr__(self):
        return (f"KernelBasis(which={self.which!r}, dim={self.dim}, "
                f"gap={self.gap_ratio:.3g}, ok={self.report.passed})")


def _svd_dim(system, L, h, sigma_rel, penalty, buffer, damping,
             want_vectors=False):
    D, t = discretize_lambda(system, L=L, h=h, penalty=penalty,
                             buffer=buffer, damping=damping)
    if want_vectors:
        _, s, Vh = np.linalg.svd(D)
    else:
        s = np.linalg.svd(D, compute_uv=False)
        Vh = None
    thresh = sigma_rel * s[0]
    dim = int(np.sum(s < thresh))
    if dim > 0:
        gap = s[-dim - 1] / max(s[-dim], 1e-300)
    else:
        gap = s[-1] / thresh
    return dim, gap, s, thresh, Vh, t


def compute_kernel(system, which="lambda", L=40.0, h=0.05, sigma_rel=1e-6,
                   refine=True, penalty=0.05, buffer=0.1, damping=5e-3):
    """Basis of the bounded solutions of the system or its adjoint.

    which is "lambda" for the system itself or "adjoint" for its adjoint
    system (whose bounded solutions span the kernel of the formal adjoint
    L*, since the two operators differ only by sign). With refine=True the
    dimension must be reproduced on the window stretched to 1.25 L and on
    the grid refined to h / 2 before the verdict counts as trusted. The
    window must be long enough that kernel elements decay through the
    penalty buffer: alpha (1 - buffer) L of about 10 or more, with alpha
    the slowest decay rate.
    """
    if which == "adjoint":
        target = system.adjoint()
    elif which == "lambda":
        target = system
    else:
        raise ValueError(f"which must be 'lambda' or 'adjoint', got {which!r}")
    dim, gap, s, thresh, Vh, t = _svd_dim(target, L, h, sigma_rel, penalty,
                                          buffer, damping, want_vectors=True)
    rep = DiagnosticsReport()
    rep.add("sigma-gap", gap > 100.0, value=gap, threshold=100.0,
            detail=f"dim={dim} threshold={thresh:.3e}")
    if refine:
        dim_L, gap_L, _, _, _, _ = _svd_dim(target, 1.25 * L, h, sigma_rel,
                                            penalty, buffer, damping)
        rep.add("refine-window", dim_L == dim, value=dim_L, threshold=dim,
                detail=f"window 1.25L gap={gap_L:.3g}")
        dim_h, gap_h, _, _, _, _ = _svd_dim(target, L, h / 2.0, sigma_rel,
                                            penalty, buffer, damping)
        rep.add("refine-step", dim_h == dim, value=dim_h, threshold=dim,
                detail=f"step h/2 gap={gap_h:.3g}")
    n = t.size
    M = target.M
    vectors = Vh[Vh.shape[0] - dim:].conj().reshape(dim, n, M) if dim else \
        np.zeros((0, n, M))
    functions = []
    for v in vectors:
        flat = np.abs(v).max(axis=1) if M > 1 else np.abs(v[:, 0])
        i = int(np.argmax(flat))
        j = int(np.argmax(np.abs(v[i])))
        ph = v[i, j] / abs(v[i, j])
        vec = v * np.conj(ph)
        if not np.any(vec.imag):
            vec = vec.real
        g = GridFunction(t[0], h, vec / np.max(np.abs(vec)))
        functions.append(g)
    return KernelBasis(target, which, L, h, sigma_rel, dim, functions,
                       vectors, s, thresh, gap, rep)


def fredholm_index(system, L=40.0, h=0.05, sigma_rel=1e-6, refine=False):
    """dim ker(L) - dim ker(L*), from the two singular spectra."""
    b = compute_kernel(system, "lambda", L=L, h=h, sigma_rel=sigma_rel,
                       refine=refine)
    bs = compute_kernel(system, "adjoint", L=L, h=h, sigma_rel=sigma_rel,
                        refine=refine)
    return b.dim - bs.dim


def fit_decay_rates(fn, window=(0.5, 0.9)):
    """Exponential decay rates of a kernel element toward both ends.

    Fits log |fn| linearly on the outer window fraction of each side of the
    domain and returns a dict with rate_minus, rate_plus (positive when the
    function decays) and the maximum absolute fit residuals. Nodes where
    the magnitude underflows are dropped.
    """
    wlo, whi = window
    out = {}
    for side in ("minus", "plus"):
        edge = fn.a if side == "minus" else fn.b
        t = np.linspace(wlo * edge, whi * edge, 60)
        vals = np.atleast_2d(np.asarray(fn(t)).reshape(t.size, -1))
        mag = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
        keep = mag > 1e-280
        if np.sum(keep) < 10:
            raise ValueError(f"too few usable nodes on the {side} side")
        coef = np.polyfit(t[keep], np.log(mag[keep]), 1)
        slope = coef[0]
        rate = slope if side == "minus" else -slope
        resid = np.max(np.abs(np.polyval(coef, t[keep]) - np.log(mag[keep])))
        out[f"rate_{side}"] = float(rate)
        out[f"resid_{side}"] = float(resid)
    return out
