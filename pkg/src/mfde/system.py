"""System model for linear mixed-type functional differential equations.

The equation of interest is

    x'(t) = sum_j A_j(t) x(t + r_j) + int K(xi; t) x(t + xi) dxi,

with x(t) in C^M, discrete shifts r_j of either sign and a convolution
kernel K. Well-posedness of everything downstream rests on exponentially
weighted summability of the coefficients: for the working weight eta > 0,

    sum_j sup_t |A_j(t)| e^{eta |r_j|} < infinity,
    sup_t int |K(xi; t)| e^{eta |xi|} dxi < infinity,

plus hyperbolicity of the constant limit systems at t -> +-infinity.

MfdeSystem stores finitely many shifts. Families with infinitely many
shifts enter through the builders (see the front-equation module), which
generate shifts out to a radius where the discarded weighted mass is
negligible and record what was dropped in the provenance dictionary.
"""

import json
import os

import numpy as np

from .grids import GridFunction, simpson_weights, uniform_nodes
from .reports import DiagnosticsReport

__all__ = [
    "CoefficientFamily",
    "KernelFamily",
    "MfdeSystem",
    "TailBound",
]

_SNAP = 1e-9


def _as_matrix(value, M=None):
    A = np.asarray(value)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("coefficient must be a square matrix")
    if M is not None and A.shape[0] != M:
        raise ValueError(f"expected a {M}x{M} matrix")
    return A


def _op_norm(A):
    return float(np.linalg.norm(A, 2))


def _mat_to_json(A):
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def _mat_from_json(d):
    A = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
    if np.max(np.abs(A.imag)) == 0.0:
        return A.real
    return A


# ---------------------------------------------------------------------------
# coefficient families


class CoefficientFamily:
    """Time-dependent M x M coefficient with known limits at t -> +-infinity.

    kinds:
      constant     fixed matrix
      table        matrix samples on a uniform grid, cubic interpolation,
                   clamped to the declared limits outside the window
      named        closed form from the registry (see _NAMED_COEFS)
      transformed  scale * (base(t + tshift))^dagger, used by adjoints
      sum          pointwise sum of families (merged duplicate shifts)
    """

    def __init__(self, kind, **data):
        self.kind = kind
        self.data = data

    # -- constructors ------------------------------------------------------

    @staticmethod
    def constant(value):
        return CoefficientFamily("constant", value=_as_matrix(value))

    @staticmethod
    def table(t0, h, matrices, limit_minus, limit_plus):
        mats = np.asarray(matrices)
        if mats.ndim == 1:
            mats = mats[:, None, None]
        n, M = mats.shape[0], mats.shape[1]
        grid = GridFunction(t0, h, mats.reshape(n, M * M),
                            extension="constant",
                            limits=(_as_matrix(limit_minus, M).ravel(),
                                    _as_matrix(limit_plus, M).ravel()))
        return CoefficientFamily("table", grid=grid, M=M)

    @staticmethod
    def named(name, **params):
        if name not in _NAMED_COEFS:
            raise ValueError(f"unknown coefficient family {name!r}")
        return CoefficientFamily("named", name=name, params=params)

    @staticmethod
    def transformed(base, tshift=0.0, dagger=False, scale=1.0):
        return CoefficientFamily("transformed", base=base, tshift=float(tshift),
                                 dagger=bool(dagger), scale=scale)

    @staticmethod
    def sum_of(terms):
        terms = list(terms)
        if all(f.kind == "constant" for f in terms):
            return CoefficientFamily.constant(sum(f.data["value"] for f in terms))
        return CoefficientFamily("sum", terms=terms)

    # -- evaluation ----------------------------------------------------------

    @property
    def M(self):
        if self.kind == "constant":
            return self.data["value"].shape[0]
        if self.kind == "table":
            return self.data["M"]
        if self.kind == "named":
            return _NAMED_COEFS[self.data["name"]]["M"](self.data["params"])
        if self.kind == "transformed":
            return self.data["base"].M
        return self.data["terms"][0].M

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).ravel()
        out = self._eval(tt)
        if scalar:
            return out[0]
        return out.reshape(t.shape + out.shape[1:])

    def _eval(self, tt):
        M = self.M
        if self.kind == "constant":
            return np.broadcast_to(self.data["value"], (tt.size, M, M)).copy()
        if self.kind == "table":
            flat = self.data["grid"](tt)
            return flat.reshape(tt.size, M, M)
        if self.kind == "named":
            return _NAMED_COEFS[self.data["name"]]["eval"](tt, self.data["params"])
        if self.kind == "transformed":
            vals = self.data["base"]._eval(tt + self.data["tshift"])
            if self.data["dagger"]:
                vals = np.conj(np.swapaxes(vals, -1, -2))
            return self.data["scale"] * vals
        return sum(f._eval(tt) for f in self.data["terms"])

    def limit(self, sign):
        """Constant limit matrix at t -> sign * infinity."""
        if self.kind == "constant":
            return self.data["value"].copy()
        if self.kind == "table":
            v = self.data["grid"].limits[0 if sign < 0 else 1]
            M = self.data["M"]
            return v.reshape(M, M).copy()
        if self.kind == "named":
            return _NAMED_COEFS[self.data["name"]]["limit"](sign, self.data["params"])
        if self.kind == "transformed":
            A = self.data["base"].limit(sign)
            if self.data["dagger"]:
                A = np.conj(A.T)
            return self.data["scale"] * A
        return sum(f.limit(sign) for f in self.data["terms"])

    def sup_norm(self):
        """sup_t |A(t)| in the matrix 2-norm, sampled for non-constant kinds."""
        if self.kind == "constant":
            return _op_norm(self.data["value"])
        if self.kind == "transformed":
            return abs(self.data["scale"]) * self.data["base"].sup_norm()
        if self.kind == "table":
            grid = self.data["grid"]
            tt = grid.nodes
        else:
            tt = np.linspace(-60.0, 60.0, 481)
        vals = self._eval(np.atleast_1d(tt))
        m = max(_op_norm(A) for A in vals)
        m = max(m, _op_norm(self.limit(-1)), _op_norm(self.limit(+1)))
        return m

    # -- serialization -------------------------------------------------------

    def descriptor(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": _mat_to_json(self.data["value"])}
        if self.kind == "table":
            grid = self.data["grid"]
            M = self.data["M"]
            n = grid.n_nodes
            return {
                "kind": "table",
                "t0": grid.a,
                "h": grid.h,
                "M": M,
                "values": _mat_to_json(grid.values.reshape(n, M, M).reshape(n, -1)),
                "limit_minus": _mat_to_json(grid.limits[0].reshape(M, M)),
                "limit_plus": _mat_to_json(grid.limits[1].reshape(M, M)),
            }
        if self.kind == "named":
            params = {k: ({"__mat__": _mat_to_json(v)} if isinstance(v, np.ndarray)
                          else v)
                      for k, v in self.data["params"].items()}
            return {"kind": "named", "name": self.data["name"], "params": params}
        if self.kind == "transformed":
            return {"kind": "transformed", "base": self.data["base"].descriptor(),
                    "tshift": self.data["tshift"], "dagger": self.data["dagger"],
                    "scale": self.data["scale"]}
        return {"kind": "sum", "terms": [f.descriptor() for f in self.data["terms"]]}

    @staticmethod
    def from_descriptor(d):
        kind = d["kind"]
        if kind == "constant":
            return CoefficientFamily.constant(_mat_from_json(d["value"]))
        if kind == "table":
            M = d["M"]
            vals = _mat_from_json(d["values"])
            mats = vals.reshape(vals.shape[0], M, M)
            return CoefficientFamily.table(d["t0"], d["h"], mats,
                                           _mat_from_json(d["limit_minus"]),
                                           _mat_from_json(d["limit_plus"]))
        if kind == "named":
            params = {k: (_mat_from_json(v["__mat__"])
                          if isinstance(v, dict) and "__mat__" in v else v)
                      for k, v in d["params"].items()}
            return CoefficientFamily.named(d["name"], **params)
        if kind == "transformed":
            return CoefficientFamily.transformed(
                CoefficientFamily.from_descriptor(d["base"]),
                tshift=d["tshift"], dagger=d["dagger"], scale=d["scale"])
        if kind == "sum":
            return CoefficientFamily.sum_of(
                CoefficientFamily.from_descriptor(t) for t in d["terms"])
        raise ValueError(f"unknown coefficient descriptor kind {kind!r}")


def _tanh_interp_eval(tt, p):
    Am = _as_matrix(p["limit_minus"])
    Ap = _as_matrix(p["limit_plus"])
    width = p.get("width", 1.0)
    center = p.get("center", 0.0)
    s = 0.5 * (1.0 + np.tanh((tt - center) / width))
    return Am[None] + s[:, None, None] * (Ap - Am)[None]


_NAMED_COEFS = {
    # smooth interpolation between two limit matrices
    "tanh_interp": {
        "M": lambda p: _as_matrix(p["limit_minus"]).shape[0],
        "eval": _tanh_interp_eval,
        "limit": lambda sign, p: _as_matrix(
            p["limit_minus"] if sign < 0 else p["limit_plus"]).astype(float),
    },
}


# ---------------------------------------------------------------------------
# convolution kernels


class KernelFamily:
    """Convolution kernel K(xi; t), M x M valued.

    kinds:
      zero         no convolution term
      named        closed form from the registry (see _NAMED_KERNELS)
      transformed  scale * (base(-xi; t + xi))^dagger when reflect/shear are
                   set; produced by system adjoints
    """

    def __init__(self, kind, M=1, **data):
        self.kind = kind
        self._M = M
        self.data = data

    @staticmethod
    def zero(M=1):
        return KernelFamily("zero", M=M)

    @staticmethod
    def named(name, **params):
        if name not in _NAMED_KERNELS:
            raise ValueError(f"unknown kernel family {name!r}")
        M = _as_matrix(params["weight"]).shape[0]
        return KernelFamily("named", M=M, name=name, params=params)

    @staticmethod
    def transformed(base, reflect=False, shear=False, dagger=False, scale=1.0):
        return KernelFamily("transformed", M=base.M, base=base,
                            reflect=bool(reflect), shear=bool(shear),
                            dagger=bool(dagger), scale=scale)

    @property
    def M(self):
        return self._M

    def is_zero(self):
        return self.kind == "zero"

    def is_autonomous(self):
        """True when K(xi; t) does not depend on t."""
        if self.kind in ("zero", "named"):
            return True   # registry kernels carry no explicit time dependence
        return self.data["base"].is_autonomous()

    def eval(self, xi, t=0.0):
        """K(xi; t) for an array of xi; t may be scalar or match xi."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), xi.shape)
        if self.kind == "zero":
            return np.zeros((xi.size, self.M, self.M))
        if self.kind == "named":
            return _NAMED_KERNELS[self.data["name"]]["eval"](xi, t, self.data["params"])
        base = self.data["base"]
        bxi = -xi if self.data["reflect"] else xi
        bt = t + xi if self.data["shear"] else t
        vals = base.eval(bxi, bt)
        if self.data["dagger"]:
            vals = np.conj(np.swapaxes(vals, -1, -2))
        return self.data["scale"] * vals

    def limit(self, sign, xi):
        """Kernel of the limit system at t -> sign*infinity, sampled at xi."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.kind == "zero":
            return np.zeros((xi.size, self.M, self.M))
        if self.kind == "named":
            # named kernels are autonomous
            return self.eval(xi, 0.0)
        base = self.data["base"]
        bxi = -xi if self.data["reflect"] else xi
        vals = base.limit(sign, bxi)
        if self.data["dagger"]:
            vals = np.conj(np.swapaxes(vals, -1, -2))
        return self.data["scale"] * vals

    @property
    def decay_rate(self):
        if self.kind == "zero":
            return None
        if self.kind == "named":
            return _NAMED_KERNELS[self.data["name"]]["decay"](self.data["params"])
        return self.data["base"].decay_rate

    def cut_radius(self, tol):
        """Radius beyond which the absolute kernel tail mass is below tol."""
        return max(self.support_radii(tol))

    def support_radii(self, tol):
        """Per-side radii (R_minus, R_plus), each a multiple of 0.5, with
        int_{xi < -R_minus} |K| and int_{xi > R_plus} |K| below tol / 2."""
        if self.kind == "zero":
            return (0.0, 0.0)
        h = 0.05
        R = 5.0
        while True:
            xi = uniform_nodes(-R, R, h)
            w = simpson_weights(xi.size, h)
            norms = np.array([_op_norm(A) for A in self.eval(xi)])
            out = []
            for side in (-1, +1):
                found = None
                for r in np.arange(0.0, R + 1e-9, 0.5):
                    # the node at the cut stays inside the window; only the
                    # open tail beyond it is discarded
                    mask = (side * xi) > r + 1e-12
                    if float(np.sum(w[mask] * norms[mask])) < tol / 2.0:
                        found = float(r)
                        break
                out.append(found)
            edge = norms[0] + norms[-1]
            if None not in out and max(out) < R - 1.0 and edge * R < tol:
                return tuple(out)
            R *= 2.0
            if R > 400.0:
                raise ValueError("kernel tail mass does not fall below tol")

    def weighted_norm(self, eta, radius=None):
        """int |K(xi; t)| e^{eta |xi|} dxi, maximized over sample times t."""
        if self.kind == "zero":
            return 0.0
        R = radius if radius is not None else self.cut_radius(1e-14)
        if R == 0.0:
            return 0.0
        h = 0.025
        xi = uniform_nodes(-R, R, h)
        w = simpson_weights(xi.size, h)
        out = 0.0
        for t in (-30.0, -5.0, 0.0, 5.0, 30.0):
            vals = self.eval(xi, t)
            norms = np.array([_op_norm(A) for A in vals])
            out = max(out, float(np.sum(w * norms * np.exp(eta * np.abs(xi)))))
        return out

    def descriptor(self):
        if self.kind == "zero":
            return {"kind": "zero", "M": self.M}
        if self.kind == "named":
            p = dict(self.data["params"])
            p["weight"] = _mat_to_json(_as_matrix(p["weight"]))
            return {"kind": "named", "name": self.data["name"], "params": p}
        return {"kind": "transformed", "base": self.data["base"].descriptor(),
                "reflect": self.data["reflect"], "shear": self.data["shear"],
                "dagger": self.data["dagger"], "scale": self.data["scale"]}

    @staticmethod
    def from_descriptor(d):
        kind = d["kind"]
        if kind == "zero":
            return KernelFamily.zero(M=d.get("M", 1))
        if kind == "named":
            p = dict(d["params"])
            p["weight"] = _mat_from_json(p["weight"])
            return KernelFamily.named(d["name"], **p)
        if kind == "transformed":
            return KernelFamily.transformed(
                KernelFamily.from_descriptor(d["base"]),
                reflect=d["reflect"], shear=d["shear"], dagger=d["dagger"],
                scale=d["scale"])
        raise ValueError(f"unknown kernel descriptor kind {kind!r}")


def _exp_symmetric_eval(xi, t, p):
    W = _as_matrix(p["weight"])
    return np.exp(-p["decay"] * np.abs(xi))[:, None, None] * W[None]


def _exp_onesided_eval(xi, t, p):
    W = _as_matrix(p["weight"])
    prof = np.exp(-p["decay"] * np.abs(xi)) * ((p["side"] * xi) >= 0.0)
    return prof[:, None, None] * W[None]


def _gaussian_symmetric_eval(xi, t, p):
    W = _as_matrix(p["weight"])
    return np.exp(-p["decay"] * xi ** 2)[:, None, None] * W[None]


_NAMED_KERNELS = {
    # weight * exp(-decay |xi|)
    "exp_symmetric": {
        "eval": _exp_symmetric_eval,
        "decay": lambda p: p["decay"],
    },
    # weight * exp(-decay |xi|) on xi >= 0 (side=+1) or xi <= 0 (side=-1)
    "exp_onesided": {
        "eval": _exp_onesided_eval,
        "decay": lambda p: p["decay"],
    },
    # weight * exp(-decay xi^2); effective exponential decay rate reported
    # at the truncation radius
    "gaussian_symmetric": {
        "eval": _gaussian_symmetric_eval,
        "decay": lambda p: 2.0 * p["decay"],
    },
}


# ---------------------------------------------------------------------------
# the system


class TailBound:
    """Certificate sum_{|r_j| >= |t|} |A_j| e^{alpha |r_j|} + kernel tail
    <= K_exp e^{-2 alpha |t|} for t <= -p."""

    def __init__(self, alpha, p, K_exp):
        self.alpha = alpha
        self.p = p
        self.K_exp = K_exp

    def __repr__(self):
        return f"TailBound(alpha={self.alpha:g}, p={self.p:g}, K_exp={self.K_exp:g})"


class MfdeSystem:
    """Mixed-type system with finitely many stored shifts.

    shifts: iterable of (r, CoefficientFamily | matrix); duplicates are
    merged by summing. kernel: KernelFamily or None. eta is the working
    exponential weight; decay_rate is the declared asymptotic decay of the
    coefficient tails (None for genuinely finite-range systems).
    """

    def __init__(self, M, shifts, kernel=None, eta=None, decay_rate=None,
                 provenance=None):
        self.M = int(M)
        merged = {}
        for r, fam in shifts:
            if not isinstance(fam, CoefficientFamily):
                fam = CoefficientFamily.constant(_as_matrix(fam, self.M))
            key = round(float(r) / _SNAP)
            if key in merged:
                merged[key] = (merged[key][0], CoefficientFamily.sum_of(
                    [merged[key][1], fam]))
            else:
                merged[key] = (float(r), fam)
        self.shifts = sorted(merged.values(), key=lambda p: p[0])
        self.kernel = kernel if kernel is not None else KernelFamily.zero(M=self.M)
        self.decay_rate = decay_rate
        if eta is None:
            eta = decay_rate / 3.0 if decay_rate else 1.0
        self.eta = float(eta)
        self.provenance = dict(provenance or {})

    # -- geometry -----------------------------------------------------------

    def kernel_support(self):
        """Cached per-side kernel truncation radii (R_minus, R_plus)."""
        if self.kernel.is_zero():
            return (0.0, 0.0)
        if "kernel_cut" not in self.provenance:
            tol = self.provenance.get("truncation", {}).get("tol", 1e-10)
            self.provenance["kernel_cut"] = list(self.kernel.support_radii(tol))
        cut = self.provenance["kernel_cut"]
        if np.isscalar(cut):
            return (float(cut), float(cut))
        return (float(cut[0]), float(cut[1]))

    def kernel_radius(self):
        return max(self.kernel_support())

    @property
    def r_min(self):
        lo = min((r for r, _ in self.shifts), default=0.0)
        return min(lo, -self.kernel_support()[0], 0.0)

    @property
    def r_max(self):
        hi = max((r for r, _ in self.shifts), default=0.0)
        return max(hi, self.kernel_support()[1], 0.0)

    def limit_matrices(self, sign):
        return [(r, fam.limit(sign)) for r, fam in self.shifts]

    # -- diagnostics ----------------------------------------------------------

    def validate(self, check_hyperbolicity=True):
        """Summability, limit and hyperbolicity diagnostics."""
        rep = DiagnosticsReport()
        norms = np.array([fam.sup_norm() for _, fam in self.shifts])
        rs = np.array([r for r, _ in self.shifts])
        s1 = float(np.sum(norms * np.exp(self.eta * np.abs(rs))))
        s2 = float(np.sum(norms * np.abs(rs) * np.exp(self.eta * np.abs(rs))))
        rep.add("coeff-sum", np.isfinite(s1), value=s1, detail="sum |A_j| e^{eta |r_j|}")
        rep.add("coeff-sum-strong", np.isfinite(s2), value=s2,
                detail="sum |A_j| |r_j| e^{eta |r_j|}")
        if self.decay_rate is not None:
            rep.add("eta-margin", self.eta < self.decay_rate, value=self.eta,
                    threshold=self.decay_rate,
                    detail="eta below the declared tail decay rate")
        kn = self.kernel.weighted_norm(self.eta)
        krate = self.kernel.decay_rate
        k_ok = np.isfinite(kn) and (krate is None or self.eta < krate)
        rep.add("kernel-norm", k_ok, value=kn,
                detail="sup_t int |K(xi;t)| e^{eta |xi|} dxi")
        try:
            for sign in (-1, +1):
                for _, fam in self.shifts:
                    fam.limit(sign)
            rep.add("limits-exist", True)
        except Exception as err:  # noqa: BLE001
            rep.add("limits-exist", False, detail=str(err))
        if check_hyperbolicity and rep["limits-exist"].passed:
            from .spectral import check_hyperbolicity as _check
            for sign, label in ((-1, "hyperbolic-minus"), (+1, "hyperbolic-plus")):
                hyp = _check(self, sign)
                rep.add(label, hyp["det-margin"].passed,
                        value=hyp["det-margin"].value,
                        threshold=hyp["det-margin"].threshold,
                        detail="min |det Delta(iy)| on the scan")
        return rep

    def tail_bound(self, alpha=None):
        """Exponential tail certificate used by the decay estimates.

        alpha defaults to eta/3, matching the regime in which the remainder
        sum decays at least twice as fast as e^{-alpha |t|}.
        """
        if alpha is None:
            alpha = self.eta / 3.0
        if alpha > self.eta / 3.0 + _SNAP:
            raise ValueError("tail bound requires alpha <= eta/3")
        finite = self.decay_rate is None and self.kernel.is_zero()
        p = self.r_max if finite else 1.0
        rs = np.array([abs(r) for r, _ in self.shifts])
        norms = np.array([fam.sup_norm() for _, fam in self.shifts])
        T = max(rs.max(initial=0.0), self.r_max, p) + 5.0
        K_exp = 0.0
        kern_R = 0.0 if self.kernel.is_zero() else self.kernel.cut_radius(1e-14)
        for tt in np.arange(p + 0.25, T, 0.25):
            S = float(np.sum(norms[rs >= tt - 1e-12]
                             * np.exp(alpha * rs[rs >= tt - 1e-12])))
            if not self.kernel.is_zero() and tt < kern_R:
                h = 0.025
                for sgn in (-1, +1):
                    lo, hi = (tt, kern_R) if sgn > 0 else (-kern_R, -tt)
                    xi = uniform_nodes(lo, hi, h)
                    w = simpson_weights(xi.size, h)
                    vals = self.kernel.eval(xi, 0.0)
                    S += float(np.sum(
                        w * np.exp(alpha * np.abs(xi))
                        * np.array([_op_norm(A) for A in vals])))
            K_exp = max(K_exp, S * np.exp(2.0 * alpha * tt))
        return TailBound(alpha, p, K_exp)

    # -- truncation -----------------------------------------------------------

    def truncate(self, tol=1e-10):
        """Drop shifts and kernel mass whose plain tail falls below tol.

        The cut radius is the smallest R with sum_{|r_j| > R} |A_j| < tol.
        Both the plain and the eta-weighted discarded masses are recorded.
        """
        rs = np.array([abs(r) for r, _ in self.shifts])
        norms = np.array([fam.sup_norm() for _, fam in self.shifts])
        tail = 0.0
        tail_w = 0.0
        keep = set(range(len(self.shifts)))
        # whole |r| groups are dropped together so +-r pairs stay symmetric
        for radius in sorted(set(np.round(rs / _SNAP) * _SNAP), reverse=True):
            group = [i for i in keep if abs(rs[i] - radius) < _SNAP]
            cand_tail = tail + float(np.sum(norms[group]))
            if cand_tail >= tol:
                break
            tail = cand_tail
            tail_w += float(np.sum(norms[group] * np.exp(self.eta * rs[group])))
            keep.difference_update(group)
        new_shifts = [self.shifts[i] for i in sorted(keep)]
        prov = dict(self.provenance)
        info = {
            "tol": tol,
            "shift_cut": float(max((abs(r) for r, _ in new_shifts), default=0.0)),
            "discarded_shift_mass": float(tail),
            "discarded_weighted_mass": float(tail_w),
        }
        kernel = self.kernel
        if not kernel.is_zero():
            info["kernel_cut"] = list(kernel.support_radii(tol))
            prov["kernel_cut"] = info["kernel_cut"]
        prov["truncation"] = info
        return MfdeSystem(self.M, new_shifts, kernel=kernel, eta=self.eta,
                          decay_rate=self.decay_rate, provenance=prov)

    # -- adjoint ---------------------------------------------------------------

    def adjoint(self):
        """System whose solutions are kernel elements of the formal adjoint.

        The adjoint operator acts as
            (L* y)(t) = -y'(t) - sum_j A_j(t - r_j)^dagger y(t - r_j) - ...,
        so y solves y'(t) = sum_j B_j(t) y(t + s_j) + int K'(xi;t) y(t+xi) dxi
        with s_j = -r_j, B_j(t) = -A_j(t + s_j)^dagger and
        K'(xi; t) = -K(-xi; t + xi)^dagger.
        """
        shifts = [(-r, CoefficientFamily.transformed(fam, tshift=-r, dagger=True,
                                                     scale=-1.0))
                  for r, fam in self.shifts]
        kernel = self.kernel
        if not kernel.is_zero():
            kernel = KernelFamily.transformed(kernel, reflect=True, shear=True,
                                              dagger=True, scale=-1.0)
        prov = dict(self.provenance)
        prov["adjoint_parity"] = 1 - prov.get("adjoint_parity", 0)
        return MfdeSystem(self.M, shifts, kernel=kernel, eta=self.eta,
                          decay_rate=self.decay_rate, provenance=prov)

    # -- action -----------------------------------------------------------------

    def eval_rhs(self, x, t, h=0.0125):
        """sum_j A_j(t) x(t + r_j) + int K(xi; t) x(t + xi) dxi at scalar t."""
        t = float(t)
        acc = np.zeros(self.M, dtype=complex)
        for r, fam in self.shifts:
            xv = np.atleast_1d(np.asarray(x(t + r), dtype=complex))
            acc += fam(t) @ xv
        if not self.kernel.is_zero():
            R = self.kernel_radius()
            xi = uniform_nodes(-R, R, h)
            w = simpson_weights(xi.size, h)
            Kv = self.kernel.eval(xi, t)
            xv = np.asarray(x(t + xi), dtype=complex).reshape(xi.size, self.M)
            acc += np.einsum("i,ijk,ik->j", w, Kv, xv)
        if np.max(np.abs(acc.imag)) == 0.0:
            return acc.real
        return acc

    # -- serialization ------------------------------------------------------------

    def to_json(self, path=None):
        doc = {
            "M": self.M,
            "eta": self.eta,
            "decay_rate": self.decay_rate,
            "shifts": [{"r": r, "coef": fam.descriptor()} for r, fam in self.shifts],
            "kernel": self.kernel.descriptor(),
            "provenance": self.provenance,
        }
        if path is not None:
            with open(path, "w") as f:
                json.dump(doc, f, indent=2, sort_keys=True)
                f.write("\n")
        return doc

    @staticmethod
    def from_json(doc):
        if isinstance(doc, (str, os.PathLike)):
            with open(doc) as f:
                doc = json.load(f)
        shifts = [(item["r"], CoefficientFamily.from_descriptor(item["coef"]))
                  for item in doc["shifts"]]
        kernel = KernelFamily.from_descriptor(doc["kernel"])
        return MfdeSystem(doc["M"], shifts, kernel=kernel, eta=doc["eta"],
                          decay_rate=doc.get("decay_rate"),
                          provenance=doc.get("provenance", {}))
