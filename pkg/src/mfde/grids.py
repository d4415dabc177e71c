"""Uniform grids, sampled functions and state-space segments.

Functions of one real variable are stored as values on a uniform grid
together with an extension rule that defines them on the whole line:

    zero       x(t) = 0 outside [a, b]
    constant   x(t) = v_minus for t < a, v_plus for t > b
    exp        x(a - s) = x(a) exp(-rate_minus s),
               x(b + s) = x(b) exp(-rate_plus s)   for s > 0

Evaluation between nodes uses 4-point cubic interpolation by default;
piecewise-linear data (kinked test functions) should request linear
interpolation so the interpolant does not overshoot at the kinks.
Scalar-valued functions (M = 1) evaluate to arrays matching the input
shape; vector-valued ones gain a trailing component axis.

Segments are windows of a trajectory: the forward segment of x at time t
is theta -> x(t + theta) on [r_min, r_max], the adjoint segment lives on
the reflected window [-r_max, -r_min].
"""

import numpy as np

__all__ = [
    "GridFunction",
    "uniform_nodes",
    "simpson_weights",
    "segment_at",
    "adjoint_segment_at",
    "restrict_pi",
]

# Relative slack when deciding whether a time lies on the grid.
_SNAP = 1e-9


def uniform_nodes(a, b, h):
    """Nodes a, a+h, ..., b. Requires (b-a)/h to be an integer up to snap."""
    span = (b - a) / h
    n = int(round(span))
    if n < 1 or abs(span - n) > _SNAP * max(1.0, abs(span)):
        raise ValueError(f"interval [{a}, {b}] is not an integer multiple of h={h}")
    return a + h * np.arange(n + 1)


def simpson_weights(n_nodes, h):
    """Composite Simpson weights for n_nodes uniform nodes spaced h.

    For an odd interval count the last three intervals use the 3/8 rule.
    n_nodes = 1 returns [0] (empty window), n_nodes = 2 falls back to the
    trapezoid rule.
    """
    n = n_nodes - 1  # interval count
    if n < 0:
        raise ValueError("need at least one node")
    w = np.zeros(n_nodes)
    if n == 0:
        return w
    if n == 1:
        w[:] = h / 2.0
        return w
    if n % 2 == 0:
        w[0] = w[-1] = h / 3.0
        w[1:-1:2] = 4.0 * h / 3.0
        w[2:-1:2] = 2.0 * h / 3.0
        return w
    # odd interval count: Simpson on the first n-3, then 3/8 on the tail
    m = n - 3
    if m > 0:
        w[: m + 1] = simpson_weights(m + 1, h)
    w[m] += 3.0 * h / 8.0
    w[m + 1] += 9.0 * h / 8.0
    w[m + 2] += 9.0 * h / 8.0
    w[m + 3] += 3.0 * h / 8.0
    return w


def _cubic_coeffs(x):
    """Lagrange weights at offset x for nodes 0,1,2,3."""
    w0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0
    w1 = x * (x - 2.0) * (x - 3.0) / 2.0
    w2 = -x * (x - 1.0) * (x - 3.0) / 2.0
    w3 = x * (x - 1.0) * (x - 2.0) / 6.0
    return w0, w1, w2, w3


class GridFunction:
    """Vector-valued function sampled on a uniform grid.

    values has shape (n_nodes, M); scalar input of shape (n_nodes,) is
    stored as a single component. Extension rules and the interpolation
    order are part of the data so that downstream quadrature can evaluate
    the function anywhere on the line.
    """

    def __init__(self, a, h, values, extension="zero", limits=None, rates=None,
                 interp="cubic"):
        values = np.asarray(values)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 2:
            raise ValueError("values must be (n_nodes,) or (n_nodes, M) with n_nodes >= 2")
        if extension not in ("zero", "constant", "exp"):
            raise ValueError(f"unknown extension rule {extension!r}")
        if interp not in ("cubic", "linear"):
            raise ValueError(f"unknown interpolation rule {interp!r}")
        self.a = float(a)
        self.h = float(h)
        self.values = values
        self.extension = extension
        self.interp = interp
        M = values.shape[1]
        if extension == "constant":
            if limits is None:
                raise ValueError("constant extension needs limits=(v_minus, v_plus)")
            vm = np.broadcast_to(np.asarray(limits[0]), (M,)).astype(values.dtype)
            vp = np.broadcast_to(np.asarray(limits[1]), (M,)).astype(values.dtype)
            self.limits = (vm.copy(), vp.copy())
        else:
            self.limits = None
        if extension == "exp":
            if rates is None:
                raise ValueError("exp extension needs rates=(rate_minus, rate_plus)")
            rm, rp = float(rates[0]), float(rates[1])
            if rm <= 0 or rp <= 0:
                raise ValueError("exp extension rates must be positive")
            self.rates = (rm, rp)
        else:
            self.rates = None

    @property
    def b(self):
        return self.a + self.h * (self.values.shape[0] - 1)

    @property
    def n_nodes(self):
        return self.values.shape[0]

    @property
    def M(self):
        return self.values.shape[1]

    @property
    def nodes(self):
        return self.a + self.h * np.arange(self.n_nodes)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = np.atleast_1d(t).ravel()
        out = np.zeros((tt.size, self.M), dtype=self.values.dtype)
        eps = _SNAP * max(1.0, abs(self.a), abs(self.b))
        left = tt < self.a - eps
        right = tt > self.b + eps
        inside = ~(left | right)
        if inside.any():
            out[inside] = self._interp_inside(np.clip(tt[inside], self.a, self.b))
        if left.any():
            out[left] = self._extend(tt[left], side=-1)
        if right.any():
            out[right] = self._extend(tt[right], side=+1)
        if scalar:
            return out[0, 0] if self.M == 1 else out[0]
        if self.M == 1:
            return out.reshape(t.shape)
        return out.reshape(t.shape + (self.M,))

    def _interp_inside(self, tt):
        s = (tt - self.a) / self.h
        n = self.n_nodes
        if self.interp == "linear":
            i = np.clip(np.floor(s).astype(int), 0, n - 2)
            u = (s - i)[:, None]
            return (1.0 - u) * self.values[i] + u * self.values[i + 1]
        i = np.clip(np.floor(s).astype(int), 0, n - 2)
        k = np.clip(i - 1, 0, n - 4)
        x = s - k
        w0, w1, w2, w3 = _cubic_coeffs(x)
        v = self.values
        return (w0[:, None] * v[k] + w1[:, None] * v[k + 1]
                + w2[:, None] * v[k + 2] + w3[:, None] * v[k + 3])

    def _extend(self, tt, side):
        m = tt.size
        if self.extension == "zero":
            return np.zeros((m, self.M), dtype=self.values.dtype)
        if self.extension == "constant":
            v = self.limits[0] if side < 0 else self.limits[1]
            return np.tile(v, (m, 1))
        rate = self.rates[0] if side < 0 else self.rates[1]
        edge = self.values[0] if side < 0 else self.values[-1]
        dist = (self.a - tt) if side < 0 else (tt - self.b)
        return np.exp(-rate * dist)[:, None] * edge[None, :]

    def derivative(self):
        """4th-order finite-difference derivative as a new GridFunction."""
        v = self.values
        h = self.h
        n = self.n_nodes
        d = np.zeros_like(v, dtype=np.result_type(v.dtype, float))
        if n >= 5:
            d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12.0 * h)
            d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12.0 * h)
            d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12.0 * h)
            d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12.0 * h)
            d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12.0 * h)
        else:
            d[:] = np.gradient(v, h, axis=0)
        if self.extension == "exp":
            ext, lim, rates = "exp", None, self.rates
            d[0] = -self.rates[0] * v[0]
            d[-1] = -self.rates[1] * v[-1]
        else:
            # derivative of a constant or zero extension vanishes
            ext, lim, rates = "zero", None, None
        return GridFunction(self.a, h, d, extension=ext, limits=lim, rates=rates,
                            interp=self.interp)

    def sup_norm(self):
        m = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if self.extension == "constant":
            m = max(m, float(np.max(np.abs(self.limits[0]))),
                    float(np.max(np.abs(self.limits[1]))))
        return m

    def restrict(self, lo, hi):
        """Restriction to [lo, hi]; endpoints must lie on the grid."""
        i0 = int(round((lo - self.a) / self.h))
        i1 = int(round((hi - self.a) / self.h))
        if not (0 <= i0 <= i1 < self.n_nodes):
            raise ValueError("restriction window outside the grid")
        for target, idx in ((lo, i0), (hi, i1)):
            if abs(self.a + idx * self.h - target) > _SNAP * max(1.0, abs(target)):
                raise ValueError(f"{target} is not a grid node")
        return GridFunction(self.a + i0 * self.h, self.h, self.values[i0:i1 + 1].copy(),
                            extension=self.extension, limits=self.limits,
                            rates=self.rates, interp=self.interp)

    def shifted(self, dt):
        """The function t -> x(t - dt), i.e. the graph moved right by dt."""
        return GridFunction(self.a + dt, self.h, self.values.copy(),
                            extension=self.extension, limits=self.limits,
                            rates=self.rates, interp=self.interp)

    # ---- serialization --------------------------------------------------

    def to_csv(self, path):
        meta = [f"# a={self.a!r} h={self.h!r} M={self.M} extension={self.extension}"
                f" interp={self.interp}"]
        if self.limits is not None:
            lm = ",".join(repr(complex(z)) for z in self.limits[0])
            lp = ",".join(repr(complex(z)) for z in self.limits[1])
            meta.append(f"# limits_minus={lm} limits_plus={lp}")
        if self.rates is not None:
            meta.append(f"# rates={self.rates[0]!r},{self.rates[1]!r}")
        cols = ["t"]
        for k in range(self.M):
            cols += [f"re{k}", f"im{k}"]
        lines = meta + [",".join(cols)]
        t = self.nodes
        v = self.values.astype(complex)
        for i in range(self.n_nodes):
            row = [repr(float(t[i]))]
            for k in range(self.M):
                row += [repr(float(v[i, k].real)), repr(float(v[i, k].imag))]
            lines.append(",".join(row))
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @staticmethod
    def from_csv(path):
        meta = {}
        rows = []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for item in line[1:].split():
                        if "=" in item:
                            key, val = item.split("=", 1)
                            meta[key] = val
                    continue
                if line.startswith("t,"):
                    continue
                rows.append([complex(x) for x in line.split(",")])
        data = np.array(rows)
        M = int(meta["M"])
        vals = np.zeros((data.shape[0], M), dtype=complex)
        for k in range(M):
            vals[:, k] = data[:, 1 + 2 * k].real + 1j * data[:, 2 + 2 * k].real
        if np.max(np.abs(vals.imag)) == 0.0:
            vals = vals.real
        limits = None
        if "limits_minus" in meta:
            lm = [complex(x) for x in meta["limits_minus"].split(",")]
            lp = [complex(x) for x in meta["limits_plus"].split(",")]
            limits = (np.array(lm), np.array(lp))
        rates = None
        if "rates" in meta:
            rates = tuple(float(x) for x in meta["rates"].split(","))
        return GridFunction(float(meta["a"]), float(meta["h"]), vals,
                            extension=meta["extension"], limits=limits,
                            rates=rates, interp=meta["interp"])


def segment_at(x, t, domain, h):
    """Forward segment theta -> x(t + theta) sampled on domain = (lo, hi)."""
    lo, hi = domain
    theta = uniform_nodes(lo, hi, h)
    vals = x(t + theta)
    return GridFunction(lo, h, vals, extension="zero",
                        interp=getattr(x, "interp", "cubic"))


def adjoint_segment_at(y, t, domain, h):
    """Adjoint segment theta -> y(t + theta) on the reflected window.

    domain is the forward state window (r_min, r_max); the adjoint state
    lives on [-r_max, -r_min].
    """
    lo, hi = domain
    return segment_at(y, t, (-hi, -lo), h)


def restrict_pi(seg, sign):
    """Restriction pi^+ (to [0, hi]) or pi^- (to [lo, 0]) of a segment."""
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign > 0:
        return seg.restrict(0.0, seg.b)
    return seg.restrict(seg.a, 0.0)
