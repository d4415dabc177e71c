"""Half-line solution spaces and exponential splittings of the state space.

Bounded solutions of L x = x' - rhs(x) on a half line (-infty, tau]
(side "P") or [tau, infty) (side "Q") occupy the interval from the far
side of the window out to tau plus the forward reach of the operator
(resp. back to tau plus the backward reach). halfline_basis collocates
the operator there, imposing the equation only at t <= tau (resp.
t >= tau) together with soft decay penalties on the outer buffer of the
constrained side; the remaining node values, the state content beyond
the base time, stay free and enter the constrained rows only as shifted
values. SVD directions below threshold span the discrete space: the
free data contributes exact null directions, solutions decaying through
the far buffer contribute directions at the closure scale, and
everything else sits at the penalty scale or above.

Segments are the restrictions of those window functions to the state
interval [r_min, r_max] shifted to tau, which is where the splitting
theorems live: with "hat" orthogonality rows the bases span complements
of the full-line kernel B inside the half-line spaces, and segments
decompose as phi = p + q + b + gamma with gamma in the finite complement
computed by compute_gamma. The dimension of that complement equals the
number of independent duality functionals <d, .>_tau carried by the
adjoint kernel basis, which beta_tau counts as the rank of the pairing
against the piecewise linear hat functions of the segment grid.

On half lines the splitting X = Q(tau) + R(tau) needs dual data: for
each adjoint kernel element d^i, duality_basis builds a bump forcing g^i
on [-r_0, 0] normalized so that integral d^j(s)^* g^i(s) ds = delta_ij
and solves L y^i = g^i - f^i on the line, where f^i is the matching bump
combination on [tau, tau + r_0] that carries away the adjoint component
of g^i and makes the right side solvable. The pairing
<(d^i)^t, (y^j)_t>_t then equals delta_ij throughout [0, tau] and dies
off past tau + r_0; split_half_line uses the resulting family to
complete Q(tau) with R(tau) = Ptilde(tau) + span{y^i}.
"""

import numpy as np
from scipy.integrate import simpson

from .grids import GridFunction, simpson_weights
from .hale import HaleForm
from .kernels import _derivative_matrix, discretize_lambda
from .reports import DiagnosticsReport

__all__ = ["HalfLineBasis", "DualityBasis", "SplitResult", "halfline_basis",
           "compute_gamma", "split_full_line", "duality_basis",
           "split_half_line", "beta_tau", "fit_halfline_rate",
           "verify_decay_rates"]

_SNAP = 1e-9


def _reach(system):
    """Extreme argument offsets (lo <= 0 <= hi) the operator reads."""
    lo = min((r for r, _ in system.shifts), default=0.0)
    hi = max((r for r, _ in system.shifts), default=0.0)
    if not system.kernel.is_zero():
        Rm, Rp = system.kernel_support()
        lo = min(lo, -Rm)
        hi = max(hi, Rp)
    return min(lo, 0.0), max(hi, 0.0)


def _as_functions(basis):
    if basis is None:
        return []
    return list(getattr(basis, "functions", basis))


def _normalized_function(vec, t0, h):
    """Sup-normalized GridFunction with the largest entry rotated positive."""
    flat = np.abs(vec).max(axis=1) if vec.shape[1] > 1 else np.abs(vec[:, 0])
    i = int(np.argmax(flat))
    j = int(np.argmax(np.abs(vec[i])))
    ph = vec[i, j] / abs(vec[i, j])
    out = vec * np.conj(ph)
    if not np.any(out.imag):
        out = out.real
    return GridFunction(t0, h, out / np.max(np.abs(out)))


def _sample_segment(fn, tau, theta, M):
    """Values of fn(tau + theta) as an (n_theta, M) array."""
    return np.asarray(fn(tau + theta)).reshape(theta.size, M)


class HalfLineBasis:
    """Discrete basis of a half-line solution space at one base time.

    functions hold the elements on the absolute-time window (the
    constrained half line out to the operator reach past tau); segments
    their restrictions to the state interval as theta functions on
    [r_min, r_max], which is the data the splitting operates on. vectors
    keeps the raw l2-orthonormal directions of shape (dim, n, M).
    residuals are the sup norms of the constrained collocation rows
    applied to the sup-normalized elements. hat lists the kernel elements
    the basis was orthogonalized against (empty for the plain space) and
    norm_cut the inner integration limit used for those rows, if any.
    """

    def __init__(self, system, side, tau, L, h, dim, functions, segments,
                 vectors, window, singular_values, threshold, gap_ratio,
                 residuals, hat, norm_cut, report):
        self.system = system
        self.side = side
        self.tau = tau
        self.L = L
        self.h = h
        self.dim = dim
        self.functions = functions
        self.segments = segments
        self.vectors = vectors
        self.window = window
        self.singular_values = singular_values
        self.threshold = threshold
        self.gap_ratio = gap_ratio
        self.residuals = residuals
        self.hat = hat
        self.norm_cut = norm_cut
        self.report = report

    def __repr__(self):
        tag = "hat " if self.hat else ""
        return (f"HalfLineBasis({tag}{self.side}({self.tau:g}), dim={self.dim}, "
                f"gap={self.gap_ratio:.3g}, ok={self.report.passed})")


def halfline_basis(system, side, tau, L=40.0, h=0.05, hat=None, norm_cut=None,
                   sigma_rel=1e-5, penalty=0.05, buffer=0.1, damping=0.0):
    """Basis of the bounded solutions on one side of tau, as window data.

    side "P" collocates on [tau - L, tau + r_max] and constrains the rows
    at t <= tau, side "Q" mirrors this on [tau + r_min, tau + L]. The
    free nodes past the base time carry the state content out to the
    operator reach; nothing extends further, so every constrained row
    finds its shifted arguments inside the window (the zero closure only
    acts at the far, penalized end).

    The derivative stencils of the constrained rows are built on the
    constrained nodes alone, one-sided at the base time exactly as at a
    window edge; the free side enters the rows only through shifted
    values and the kernel. A solution's segment is therefore allowed a
    corner at the base point, which it genuinely has: past tau the
    element carries arbitrary continuous state content, not another
    piece of solution.

    hat takes a kernel basis (or list of full-line GridFunctions) and
    appends one quadrature row per element enforcing
    integral b(t)^* x(t) dt = 0 over the whole window. norm_cut moves the
    inner limit of that integral; norm_cut=0.0 gives the spaces
    normalized against the kernel on the negative half axis only, whose
    defining constraint no longer moves with tau.

    The window must be long enough that kernel-scale solutions decay
    through the penalty buffer: alpha (1 - buffer) L of about 10 or more,
    with alpha the slowest decay rate of the system. damping adds
    second-difference rows on fully constrained stencils; it defaults to
    off because the sampling terms lift the grid-scale parasite on their
    own for typical systems, while damping rows read the fast transients
    of genuine elements near the base time and blur the spectral gap.
    """
    if side not in ("P", "Q"):
        raise ValueError(f"side must be 'P' or 'Q', got {side!r}")
    tau = float(tau)
    lo_reach, hi_reach = _reach(system)
    if L <= 2.0 * max(-lo_reach, hi_reach, h):
        raise ValueError(f"window half-length {L} too short for the "
                         f"operator reach [{lo_reach}, {hi_reach}]")
    if side == "P":
        window = (tau - L, tau + hi_reach)
    else:
        window = (tau + lo_reach, tau + L)
    D, t = discretize_lambda(system, h=h, window=window, guards=False)
    n = t.size
    M = system.M
    eps = _SNAP * max(1.0, abs(tau) + L)
    if side == "P":
        keep = t <= tau + eps
        edge = t <= tau - (1.0 - buffer) * L + eps
    else:
        keep = t >= tau - eps
        edge = t >= tau + (1.0 - buffer) * L - eps
    # sampling part of the rows (shifts and kernel, with their minus sign)
    S = D - np.kron(_derivative_matrix(n, h), np.eye(M)).astype(D.dtype)
    kidx = np.nonzero(keep)[0]
    nk = kidx.size
    colloc = S.reshape(n, M, n * M)[kidx].reshape(nk * M, n * M)
    # derivative stencils confined to the constrained nodes (contiguous),
    # one-sided at the base time like at a window edge
    Dk = np.kron(_derivative_matrix(nk, h), np.eye(M))
    csl = slice(kidx[0] * M, (kidx[-1] + 1) * M)
    colloc[:, csl] += Dk
    rows = [colloc]
    if penalty > 0.0:
        pidx = np.nonzero(edge)[0]
        P = np.zeros((pidx.size, M, n, M), dtype=D.dtype)
        for row, i in enumerate(pidx):
            P[row, :, i, :] = penalty * np.eye(M)
        rows.append(P.reshape(pidx.size * M, n * M))
    if damping > 0.0:
        cidx = kidx[(kidx >= 1) & (kidx <= n - 2)]
        # all three stencil points must be constrained nodes
        cidx = cidx[np.isin(cidx - 1, kidx) & np.isin(cidx + 1, kidx)]
        F = np.zeros((cidx.size, n))
        for row, i in enumerate(cidx):
            F[row, i - 1:i + 2] = damping * np.array([1.0, -2.0, 1.0])
        rows.append(np.kron(F, np.eye(M)).astype(D.dtype))
    hat_fns = _as_functions(hat)
    if hat_fns:
        if norm_cut is None:
            sub = np.ones(n, dtype=bool)
        elif side == "P":
            sub = t <= norm_cut + eps
        else:
            sub = t >= norm_cut - eps
        sidx = np.nonzero(sub)[0]
        if sidx.size < 3:
            raise ValueError("normalization window too short for quadrature")
        w = simpson_weights(sidx.size, h)
        for b in hat_fns:
            vals = np.asarray(b(t[sidx])).reshape(sidx.size, M)
            row = np.zeros((n, M), dtype=complex)
            row[sidx] = w[:, None] * np.conj(vals)
            flat = row.ravel()
            nrm = np.linalg.norm(flat)
            if nrm == 0.0:
                raise ValueError("kernel element vanishes on the "
                                 "normalization window")
            rows.append((penalty / nrm) * flat[None, :])
    if any(np.iscomplexobj(r) for r in rows):
        rows = [np.asarray(r, dtype=complex) for r in rows]
    A = np.concatenate(rows, axis=0)
    if np.iscomplexobj(A) and not np.any(A.imag):
        A = A.real.copy()
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    thresh = sigma_rel * s[0]
    pad = Vh.shape[0] - s.size
    small = np.nonzero(s < thresh)[0]
    dim = small.size + pad
    if small.size:
        i0 = small[0]
        gap = (s[i0 - 1] / max(s[i0], 1e-300)) if i0 > 0 else np.inf
    elif pad:
        gap = np.inf
    else:
        gap = s[-1] / thresh
    vecs = Vh[Vh.shape[0] - dim:].conj().reshape(dim, n, M) if dim else \
        np.zeros((0, n, M), dtype=A.dtype)
    colloc = rows[0]
    r_lo, r_hi = system.r_min, system.r_max
    with_segments = r_hi - r_lo >= 2.0 * h - _SNAP
    functions, segments, residuals = [], [], []
    for v in vecs:
        g = _normalized_function(v, t[0], h)
        functions.append(g)
        if with_segments:
            seg = g.restrict(tau + r_lo, tau + r_hi)
            segments.append(GridFunction(r_lo, h, seg.values,
                                         interp=seg.interp))
        r = colloc @ g.values.ravel()
        residuals.append(float(np.max(np.abs(r))))
    residuals = np.asarray(residuals)
    rep = DiagnosticsReport()
    # with nothing cut the relevant margin is spectrum bottom over
    # threshold, and a factor 10 already rules out a hidden direction
    bar = 100.0 if small.size else 10.0
    rep.add("sigma-gap", gap > bar, value=float(min(gap, 1e300)),
            threshold=bar, detail=f"dim={dim} threshold={thresh:.3e}")
    worst = float(residuals.max()) if dim else 0.0
    rep.add("element-residual", worst < 100.0 * thresh, value=worst,
            threshold=100.0 * thresh,
            detail="constrained rows applied to sup-normalized elements")
    return HalfLineBasis(system, side, tau, L, h, dim, functions, segments,
                         vecs, window, s, thresh, gap, residuals,
                         hat_fns, norm_cut, rep)


def _orth(cols, rel=1e-8):
    """Orthonormal basis of the column space, rank-cut at rel * sigma_max."""
    if cols.shape[1] == 0:
        return cols
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    keep = s > rel * s[0]
    return U[:, keep]


def _segment_columns(functions, tau, theta, M):
    """Sample absolute-time functions as stacked segment columns at tau."""
    cols = np.zeros((theta.size * M, len(functions)), dtype=complex)
    for j, f in enumerate(functions):
        cols[:, j] = _sample_segment(f, tau, theta, M).ravel()
    if not np.any(cols.imag):
        cols = cols.real
    return cols


def _state_grid(system, h):
    lo, hi = system.r_min, system.r_max
    if hi - lo < 2.0 * h - _SNAP:
        raise ValueError("state interval too short for segment operations")
    n = int(round((hi - lo) / h)) + 1
    return lo + h * np.arange(n)


def _segment_block(basis):
    """Segment values of a half-line basis as columns on the state grid."""
    if basis.dim == 0:
        return np.zeros((0, 0))
    segs = basis.segments
    n = segs[0].n_nodes
    M = segs[0].M
    cols = np.zeros((n * M, len(segs)), dtype=segs[0].values.dtype)
    for j, seg in enumerate(segs):
        cols[:, j] = seg.values.ravel()
    return cols


def _smooth_probe_columns(theta, M, omega_max):
    """Orthonormal bandlimited probe family on the state grid.

    Real Fourier modes per component up to angular frequency omega_max;
    the splitting statements concern resolved state content, and probing
    inside this family keeps grid-scale slivers (which no fixed-h
    half-line space can carry) out of the complement count.
    """
    a, b = theta[0], theta[-1]
    K = int(np.floor(omega_max * (b - a) / np.pi))
    profs = [np.ones(theta.size)]
    for k in range(1, K + 1):
        arg = k * np.pi * (theta - a) / (b - a)
        profs.append(np.cos(arg))
        profs.append(np.sin(arg))
    W = np.zeros((theta.size * M, len(profs) * M))
    for j, p in enumerate(profs):
        for m in range(M):
            col = np.zeros((theta.size, M))
            col[:, m] = p
            W[:, j * M + m] = col.ravel()
    return _orth(W, rel=1e-12)


def compute_gamma(system, tau, p_basis, q_basis, kernel, omega_max=None,
                  kappa=0.5, block_rel=1e-8):
    """Finite complement of span(P, Q, B) segments at time tau.

    Orthonormalizes the segment restrictions of the two (hat) half-line
    bases and the kernel, stacks them as columns over the state grid and
    measures what a bandlimited probe family (frequencies up to
    omega_max, default a quarter of the grid Nyquist) cannot reach
    through that span: probe directions keeping more than kappa of their
    norm after projecting the span out are returned as sup-normalized
    theta GridFunctions. With hat bases the complement consists exactly
    of the directions obstructed by the duality functionals of the
    adjoint kernel, so its dimension equals beta(tau).
    """
    if abs(p_basis.tau - tau) > _SNAP or abs(q_basis.tau - tau) > _SNAP:
        raise ValueError("bases were computed at a different tau")
    if p_basis.h != q_basis.h:
        raise ValueError("P and Q bases use different steps")
    h = p_basis.h
    M = system.M
    theta = _state_grid(system, h)
    blocks = []
    for basis in (p_basis, q_basis):
        cols = _segment_block(basis)
        if cols.shape[1]:
            blocks.append(_orth(cols, rel=block_rel))
    kfns = _as_functions(kernel)
    if kfns:
        blocks.append(_orth(_segment_columns(kfns, tau, theta, M)))
    if not blocks:
        raise ValueError("no spanning vectors supplied")
    if any(np.iscomplexobj(b) for b in blocks):
        blocks = [np.asarray(b, dtype=complex) for b in blocks]
    A = _orth(np.concatenate(blocks, axis=1), rel=1e-10)
    if omega_max is None:
        omega_max = 0.25 * np.pi / h
    W = _smooth_probe_columns(theta, M, omega_max)
    if np.iscomplexobj(A):
        W = W.astype(complex)
    R = W - A @ (A.conj().T @ W)
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    gammas = []
    for i in np.nonzero(s > kappa)[0]:
        vec = U[:, i].reshape(theta.size, M)
        gammas.append(_normalized_function(vec, theta[0], h))
    return gammas


class SplitResult:
    """Decomposition of a segment against a stacked frame of subspaces.

    components maps block names to theta GridFunctions on the state grid,
    coefficients to the coefficient vectors in the orthonormalized block
    frames. residual is the sup norm of phi - sum(components),
    rel_residual the same relative to sup|phi|, cond the condition number
    of the stacked frame.
    """

    def __init__(self, tau, components, coefficients, residual, rel_residual,
                 cond):
        self.tau = tau
        self.components = components
        self.coefficients = coefficients
        self.residual = residual
        self.rel_residual = rel_residual
        self.cond = cond

    def norm(self, name):
        """Sup norm of one component."""
        return self.components[name].sup_norm()

    def __repr__(self):
        names = ", ".join(self.components)
        return (f"SplitResult(tau={self.tau:g}, [{names}], "
                f"rel_residual={self.rel_residual:.3e}, cond={self.cond:.3g})")


def _split_against(blocks, tau, phis, theta, h, M, cond_cap):
    """Least-squares split of each phi over named orthonormal blocks."""
    live = [(name, cols) for name, cols in blocks if cols.shape[1]]
    if not live:
        raise ValueError("no spanning vectors supplied")
    if any(np.iscomplexobj(c) for _, c in live):
        live = [(nm, np.asarray(c, dtype=complex)) for nm, c in live]
    A = np.concatenate([c for _, c in live], axis=1)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    cond = float(s[0] / s[-1])
    if cond > cond_cap:
        raise np.linalg.LinAlgError(
            f"stacked frame condition {cond:.3e} exceeds {cond_cap:.1e}; "
            "the supplied subspaces overlap")
    results = []
    single = not isinstance(phis, (list, tuple))
    zeros = GridFunction(theta[0], h, np.zeros((theta.size, M)))
    for phi in ([phis] if single else phis):
        rhs = _sample_segment(phi, 0.0, theta, M).ravel()
        coef = Vh.conj().T @ ((U.conj().T @ rhs) / s)
        comps = {name: zeros for name, _ in blocks}
        coefs = {name: np.zeros(0) for name, _ in blocks}
        off = 0
        recon = np.zeros(rhs.size, dtype=coef.dtype)
        for name, cols in live:
            k = cols.shape[1]
            c = coef[off:off + k]
            part = cols @ c
            recon = recon + part
            vec = part.reshape(theta.size, M)
            if np.iscomplexobj(vec) and not np.any(vec.imag):
                vec = vec.real
            comps[name] = GridFunction(theta[0], h, vec)
            coefs[name] = c
            off += k
        resid = float(np.max(np.abs(rhs - recon)))
        sup = float(np.max(np.abs(rhs)))
        results.append(SplitResult(tau, comps, coefs, resid,
                                   resid / max(sup, 1e-300), cond))
    return results[0] if single else results


def split_full_line(system, phi, tau, bases, cond_cap=1e8, block_rel=1e-8):
    """Decompose segments phi = p + q + b + gamma at tau.

    bases maps "P" and "Q" to hat HalfLineBasis objects at tau, "B" to
    the kernel basis (or list of full-line GridFunctions) and "Gamma" to
    the complement functions from compute_gamma. phi may be one theta
    GridFunction on the state interval or a list; the frame is factored
    once either way. Raises when the stacked frame condition exceeds
    cond_cap, which signals overlapping subspaces (for example non-hat
    bases, or a missing complement direction).
    """
    p_basis, q_basis = bases["P"], bases["Q"]
    h = p_basis.h
    M = system.M
    theta = _state_grid(system, h)
    blocks = [("p", _orth(_segment_block(p_basis), rel=block_rel)),
              ("q", _orth(_segment_block(q_basis), rel=block_rel))]
    kfns = _as_functions(bases.get("B"))
    blocks.append(("b", _orth(_segment_columns(kfns, tau, theta, M))
                   if kfns else np.zeros((theta.size * M, 0))))
    gfns = _as_functions(bases.get("Gamma"))
    blocks.append(("gamma", _orth(_segment_columns(gfns, 0.0, theta, M))
                   if gfns else np.zeros((theta.size * M, 0))))
    return _split_against(blocks, tau, phi, theta, h, M, cond_cap)


def beta_tau(system, adjoint, tau, h=0.0125, grid=0.05, tol=1e-6):
    """Number of independent duality functionals at tau.

    Assembles the Gram of <d^i, .>_tau against the piecewise linear hat
    functions on the segment grid of spacing `grid` and returns its rank,
    counting singular values above tol * max(1, sigma_max). The adjoint
    elements are expected sup-normalized, so a functional whose weights
    only carry cancellation residue stays below any sane tol.
    """
    duals = _as_functions(adjoint)
    if not duals:
        return 0
    form = HaleForm(system, tau, h=h)
    theta_f = form.nodes
    a, b = form.a, form.b
    nc = int(round((b - a) / grid)) + 1
    theta_c = a + grid * np.arange(nc)
    B = np.clip(1.0 - np.abs(theta_f[:, None] - theta_c[None, :]) / grid,
                0.0, None)
    G = np.zeros((len(duals), nc * system.M), dtype=complex)
    j0 = int(round(-a / grid))
    for i, d in enumerate(duals):
        w = form.weights(lambda th: d(tau + th))
        rows = np.conj(w.fine).T @ B
        rows[:, j0] += np.conj(w.point)
        G[i] = rows.T.ravel()
    s = np.linalg.svd(G, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


class DualityBasis:
    """Dual solution family for the half-line splitting at one tau.

    solutions hold y^i on [-L, tau + L]; forcings the bump combinations
    g^i on [-r_0, 0] with integral d^j* g^i = delta_ij, parked the bump
    combinations on [tau, tau + r_0] subtracted to make the right side
    solvable on the line. duals keeps the adjoint elements the family is
    normalized against. The report carries the pairing deviation from
    delta_ij sampled over [0, tau], the forcing residual away from the
    bumps, and the kernel normalization on the negative half axis.
    """

    def __init__(self, system, tau, r_0, L, h, solutions, forcings, parked,
                 duals, report):
        self.system = system
        self.tau = tau
        self.r_0 = r_0
        self.L = L
        self.h = h
        self.solutions = solutions
        self.forcings = forcings
        self.parked = parked
        self.duals = duals
        self.report = report

    @property
    def dim(self):
        return len(self.solutions)

    def segments(self, t, domain=None):
        """Theta segments of the solutions at time t on the state grid."""
        if domain is None:
            domain = (self.system.r_min, self.system.r_max)
        lo, hi = domain
        h = self.h
        n = int(round((hi - lo) / h)) + 1
        theta = lo + h * np.arange(n)
        out = []
        for y in self.solutions:
            vals = _sample_segment(y, t, theta, self.system.M)
            out.append(GridFunction(lo, h, vals))
        return out

    def __repr__(self):
        return (f"DualityBasis(tau={self.tau:g}, dim={self.dim}, "
                f"r_0={self.r_0:g}, ok={self.report.passed})")


def _bump_family(count, lo, width, M):
    """Vector bumps s(1-s) P_k(2s-1) on [lo, lo+width], one per index.

    Index j places polynomial degree j // M in component j % M; the
    Legendre factors keep the family well conditioned as count grows.
    """
    fams = []
    for j in range(count):
        m, p = j % M, j // M

        def f(t, m=m, p=p):
            s = (np.asarray(t, dtype=float) - lo) / width
            c = np.zeros(p + 1)
            c[p] = 1.0
            prof = s * (1.0 - s) * np.polynomial.legendre.legval(2.0 * s - 1.0, c)
            prof = np.where((s >= 0.0) & (s <= 1.0), prof, 0.0)
            out = np.zeros(np.shape(prof) + (M,))
            out[..., m] = prof
            return out

        fams.append(f)
    return fams


def _bump_gram(duals, bumps, lo, width, quad_h):
    nq = 2 * max(int(np.ceil(width / quad_h / 2.0)), 16)
    s = np.linspace(lo, lo + width, nq + 1)
    Z = np.zeros((len(duals), len(bumps)), dtype=complex)
    for i, d in enumerate(duals):
        dv = np.asarray(d(s)).reshape(s.size, -1)
        for j, psi in enumerate(bumps):
            pv = psi(s)
            Z[i, j] = simpson(np.sum(np.conj(dv) * pv, axis=1), x=s)
    return Z


def duality_basis(system, tau, adjoint, kernel=None, r_0=1.0, L=40.0, h=0.05,
                  quad_h=0.0125, cond_cap=1e6, penalty=0.05, buffer=0.1,
                  damping=5e-3):
    """Dual solutions y^i with <(d^i)^t, (y^j)_t>_t = delta_ij on [0, tau].

    adjoint supplies the normalized adjoint kernel elements d^i (a basis
    object or list of GridFunctions), kernel optionally the forward
    kernel elements used to normalize integral_{-infty}^0 b^* y = 0. The
    forcing for y^i is g^i - f^i with g^i a bump combination on [-r_0, 0]
    and f^i the analogous combination on [tau, tau + r_0]; both are
    normalized against the restricted adjoint basis, so the difference
    has no adjoint component and the line collocation solves it directly.
    r_0 doubles until the bump Grams on both intervals have condition
    below cond_cap; running out of room (r_0 beyond L / 2) means the
    adjoint basis is numerically degenerate on every tried restriction
    interval, and the construction genuinely fails there.
    """
    duals = _as_functions(adjoint)
    nd = len(duals)
    tau = float(tau)
    if tau < -_SNAP:
        raise ValueError("duality construction expects tau >= 0")
    M = system.M
    rep = DiagnosticsReport()
    if nd == 0:
        return DualityBasis(system, tau, r_0, L, h, [], [], [], [], rep)
    width = float(r_0)
    while True:
        bumps_l = _bump_family(nd, -width, width, M)
        bumps_r = _bump_family(nd, tau, width, M)
        Zl = _bump_gram(duals, bumps_l, -width, width, quad_h)
        Zr = _bump_gram(duals, bumps_r, tau, width, quad_h)
        cl = float(np.linalg.cond(Zl))
        cr = float(np.linalg.cond(Zr))
        if max(cl, cr) < cond_cap:
            break
        width *= 2.0
        if width > L / 2.0:
            raise ValueError(
                f"adjoint basis numerically degenerate on the restriction "
                f"intervals up to r_0={width / 2.0:g} "
                f"(Gram condition {max(cl, cr):.3e})")
    Cl = np.linalg.inv(Zl)
    Cr = np.linalg.inv(Zr)
    D, t = discretize_lambda(system, h=h, window=(-L, tau + L),
                             penalty=penalty, buffer=buffer, damping=damping)
    n = t.size
    rhs = np.zeros((D.shape[0], nd), dtype=complex)
    for i in range(nd):
        F = np.zeros((n, M), dtype=complex)
        for k in range(nd):
            F += Cl[k, i] * bumps_l[k](t)
            F -= Cr[k, i] * bumps_r[k](t)
        rhs[:n * M, i] = F.ravel()
    if not np.any(D.imag) and not np.any(rhs.imag):
        D = D.real
        rhs = rhs.real
    Y, _, _, _ = np.linalg.lstsq(D, rhs, rcond=1e-12)
    kfns = _as_functions(kernel)
    i0 = int(round((0.0 - t[0]) / h))
    if kfns:
        w0 = simpson_weights(i0 + 1, h)
        Bc = _segment_columns(kfns, 0.0, t, M)
        Bneg = Bc.reshape(n, M, -1)[: i0 + 1]
        Yneg = Y.reshape(n, M, nd)[: i0 + 1]
        G0 = np.einsum("k,kml,kmj->lj", w0, np.conj(Bneg), Bneg)
        v = np.einsum("k,kml,kmj->lj", w0, np.conj(Bneg), Yneg)
        beta = -np.linalg.solve(G0, v)
        Y = Y + Bc @ beta
    solutions = []
    for i in range(nd):
        vec = Y[:, i].reshape(n, M)
        if np.iscomplexobj(vec) and not np.any(vec.imag):
            vec = vec.real
        solutions.append(GridFunction(t[0], h, vec))
    forcings, parked = [], []
    sq = np.linspace(0.0, width, 257)
    for i in range(nd):
        gv = np.zeros((sq.size, M), dtype=complex)
        pv = np.zeros((sq.size, M), dtype=complex)
        for k in range(nd):
            gv += Cl[k, i] * bumps_l[k](-width + sq)
            pv += Cr[k, i] * bumps_r[k](tau + sq)
        if not np.any(gv.imag) and not np.any(pv.imag):
            gv, pv = gv.real, pv.real
        forcings.append(GridFunction(-width, sq[1] - sq[0], gv))
        parked.append(GridFunction(tau, sq[1] - sq[0], pv))
    # collocation residual where the equation should hold exactly: skip a
    # stencil width around the bump edges (the s(1-s) profile has curvature
    # kinks there) and the penalty buffers at the window ends
    E = (D[:n * M] @ Y - rhs[:n * M]).reshape(n, M, nd)
    guard = 3.0 * h
    quiet = ((t <= -width - guard) | ((t >= guard) & (t <= tau - guard))
             | (t >= tau + width + guard))
    quiet &= (t >= t[0] + buffer * L) & (t <= t[-1] - buffer * L)
    worst = float(np.max(np.abs(E[quiet]))) if np.any(quiet) else 0.0
    rep.add("forcing-residual", worst < 1e-6, value=worst, threshold=1e-6,
            detail="collocation rows away from the bumps")
    dev = 0.0
    for tc in (0.0, 0.5 * tau, tau):
        form = HaleForm(system, tc)
        pair = np.zeros((nd, nd), dtype=complex)
        for i, d in enumerate(duals):
            w = form.weights(lambda th: d(tc + th))
            for j, y in enumerate(solutions):
                pair[i, j] = form.apply(w, lambda th: y(tc + th))
        dev = max(dev, float(np.max(np.abs(pair - np.eye(nd)))))
    rep.add("duality-delta", dev < 1e-6, value=dev, threshold=1e-6,
            detail="max |<d^i,(y^j)_t> - delta_ij| at t in {0, tau/2, tau}")
    if kfns:
        w0 = simpson_weights(i0 + 1, h)
        worst0 = 0.0
        for b in kfns:
            bv = np.asarray(b(t[: i0 + 1])).reshape(i0 + 1, M)
            for y in solutions:
                yv = y.values[: i0 + 1]
                worst0 = max(worst0, abs(complex(
                    np.sum(w0[:, None] * np.conj(bv) * yv))))
        rep.add("kernel-normalization", worst0 < 1e-8, value=worst0,
                threshold=1e-8,
                detail="integral of b^* y over the negative half axis")
    return DualityBasis(system, tau, width, L, h, solutions, forcings,
                        parked, duals, rep)


def split_half_line(system, phi, tau, q_basis, ptilde_basis, duals,
                    cond_cap=1e8, block_rel=1e-8):
    """Decompose segments phi = q + r at tau, r = ptilde + y.

    q_basis is the plain Q basis at tau, ptilde_basis the P basis with
    hat rows cut at zero (norm_cut=0.0), duals a DualityBasis at the same
    tau. Components are named "q", "ptilde" and "y"; the "r" entry holds
    their sum. phi may be a single theta GridFunction or a list.
    """
    h = q_basis.h
    M = system.M
    theta = _state_grid(system, h)
    blocks = [("q", _orth(_segment_block(q_basis), rel=block_rel)),
              ("ptilde", _orth(_segment_block(ptilde_basis), rel=block_rel))]
    if duals.dim:
        cols = np.zeros((theta.size * M, duals.dim), dtype=complex)
        for j, seg in enumerate(duals.segments(tau)):
            cols[:, j] = seg.values.ravel()
        if not np.any(cols.imag):
            cols = cols.real
        nrm = np.linalg.norm(cols, axis=0)
        blocks.append(("y", cols / np.where(nrm > 0, nrm, 1.0)))
    else:
        blocks.append(("y", np.zeros((theta.size * M, 0))))
    out = _split_against(blocks, tau, phi, theta, h, M, cond_cap)
    for res in (out if isinstance(out, list) else [out]):
        rvals = res.components["ptilde"].values + res.components["y"].values
        res.components["r"] = GridFunction(theta[0], h, rvals)
    return out


def fit_halfline_rate(fn, tau, side, window=(0.1, 0.8), n_samples=60,
                      floor=1e-280):
    """Exponential rate of |fn| on the constrained side of tau.

    Fits log magnitude linearly in the distance from tau over the span
    from window[0] to window[1] of the reach between tau and the relevant
    domain end (fn.a for side "P", fn.b for side "Q"). Positive rate
    means decay away from tau. Returns a dict with rate and the maximum
    fit residual.
    """
    if side not in ("P", "Q"):
        raise ValueError("side must be 'P' or 'Q'")
    end = fn.a if side == "P" else fn.b
    span = end - tau
    ts = tau + span * np.linspace(window[0], window[1], n_samples)
    vals = np.asarray(fn(ts)).reshape(ts.size, -1)
    mag = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
    keep = mag > floor
    if np.sum(keep) < 10:
        raise ValueError("too few usable nodes for a rate fit")
    dist = np.abs(ts - tau)
    coef = np.polyfit(dist[keep], np.log(mag[keep]), 1)
    resid = float(np.max(np.abs(np.polyval(coef, dist[keep])
                                - np.log(mag[keep]))))
    return {"rate": float(-coef[0]), "resid": resid}


def verify_decay_rates(basis, window=(0.1, 0.8), n_samples=60):
    """Decay diagnostics of a half-line or duality basis.

    For a HalfLineBasis the envelope max_i |x_i(t)| over the
    sup-normalized elements is fitted on the constrained side away from
    tau; the envelope decays at the slowest rate genuinely present, which
    is the robust observable when the basis carries many free-tail
    directions of tiny constrained-side mass. The same fit runs on the
    difference-quotient envelope. For a DualityBasis each solution is
    fitted toward -infty. Checks pass when every fitted rate is positive.
    """
    rep = DiagnosticsReport()
    if hasattr(basis, "solutions"):
        for i, y in enumerate(basis.solutions):
            r = fit_halfline_rate(y, 0.0, "P", window=window,
                                  n_samples=n_samples)
            rep.add(f"dual-decay-{i}", r["rate"] > 0.0, value=r["rate"],
                    detail=f"fit residual {r['resid']:.3g}")
        return rep
    if basis.dim == 0:
        raise ValueError("empty basis has no decay rates")
    side, tau, h = basis.side, basis.tau, basis.h
    t0 = basis.functions[0].a
    n = basis.vectors.shape[1]
    env = np.zeros(n)
    denv = np.zeros(n)
    for f in basis.functions:
        mag = np.sqrt(np.sum(np.abs(f.values) ** 2, axis=1))
        env = np.maximum(env, mag)
        dmag = np.sqrt(np.sum(np.abs(f.derivative().values) ** 2, axis=1))
        denv = np.maximum(denv, dmag)
    for name, e in (("envelope", env), ("derivative-envelope", denv)):
        g = GridFunction(t0, h, e)
        r = fit_halfline_rate(g, tau, side, window=window,
                              n_samples=n_samples)
        rep.add(f"{name}-decay", r["rate"] > 0.0, value=r["rate"],
                detail=f"side {side}, fit residual {r['resid']:.3g}")
    return rep
