"""dY = Y dw on SU(n): rough and smooth drivers, developments, U_k and tangent projections.

Conventions on a grid with increments X_j = w(t_j) - w(t_{j-1}):

* smooth (piecewise-linear) drivers: Y_j = Y_{j-1} exp(X_j), exact per segment;
* U_k and Q(k) use the orthogonal weights M_j = Ad(Y at the segment midpoint),
  which keeps U_k exactly isometric and P(k) an exact projection;
* derivative_dy and the chart use the exact segment derivative
  Ad(Y_{j-1}) Phi(X_j), Phi(X) = (e^{ad X} - 1) / ad X.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError
from .lie_core import (
    adjoint_matrix,
    algebra,
    dim_to_n,
    from_matrix,
    group_exp,
    phi_matrix,
    polar_project,
    to_matrix,
)
from .rough_path import GridPath, LeveledLift, lift_piecewise_linear


@dataclass
class GroupPath:
    level: int
    values: np.ndarray  # (2**level + 1, n, n) complex
    defects: np.ndarray | None = None  # pre-projection defects per step

    @property
    def M(self) -> int:
        return 2**self.level

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M + 1)

    def subsample(self, N: int) -> "GroupPath":
        return GroupPath(N, self.values[:: 2 ** (self.level - N)])

    def inverse(self) -> np.ndarray:
        return np.swapaxes(self.values.conj(), -1, -2)

    def to_csv(self) -> str:
        n = self.values.shape[-1]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        head = ["t"]
        for i in range(n):
            for j in range(n):
                head += [f"re{i + 1}{j + 1}", f"im{i + 1}{j + 1}"]
        wr.writerow(head)
        for t, y in zip(self.times, self.values):
            row = [repr(float(t))]
            for z in y.reshape(-1):
                row += [repr(float(z.real)), repr(float(z.imag))]
            wr.writerow(row)
        return buf.getvalue()


def _identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def _chain(x0: np.ndarray, steps: np.ndarray) -> np.ndarray:
    out = np.empty((steps.shape[0] + 1,) + x0.shape, complex)
    out[0] = x0
    cur = x0
    for j in range(steps.shape[0]):
        cur = cur @ steps[j]
        out[j + 1] = cur
    return out


def log_signature_step(lift: LeveledLift) -> np.ndarray:
    """Per-interval algebra element X + sum_{i<j} A^{ij} [e_i, e_j] (coefficients)."""
    inc = lift.base.increments
    anti = 0.5 * (lift.seg_areas - np.swapaxes(lift.seg_areas, -1, -2))
    f = algebra(dim_to_n(inc.shape[-1])).structure
    return inc + 0.5 * np.einsum("jab,abc->jc", anti, f)


def solve_rde(lift: LeveledLift, x0: np.ndarray | None = None, scheme: str = "log") -> GroupPath:
    """Solve dY = Y dw for a level-2 lift.

    scheme="log": Y_t = Y_s exp(w1 + sum_{i<j} A^{ij}[e_i, e_j]), which agrees with
    the Davie expansion I + sum e_i w^i + sum e_i e_j w^{ij} to third order and
    is exact for linear segments.
    scheme="davie": the polynomial expansion itself, followed by polar projection.
    """
    d = lift.base.d
    n = dim_to_n(d)
    x0 = _identity(n) if x0 is None else np.asarray(x0, complex)
    if scheme == "log":
        steps = group_exp(log_signature_step(lift))
        _, defects = polar_project(steps)
        return GroupPath(lift.level, _chain(x0, steps), defects)
    if scheme != "davie":
        raise ValueError(f"unknown scheme {scheme}")
    basis = algebra(n).basis
    inc = lift.base.increments
    lin = np.tensordot(inc, basis, axes=(1, 0))
    prod = np.einsum("aij,bjk->abik", basis, basis)
    quad = np.einsum("mab,abik->mik", lift.seg_areas, prod)
    steps = _identity(n) + lin + quad
    out = np.empty((steps.shape[0] + 1, n, n), complex)
    defects = np.empty(steps.shape[0])
    out[0] = x0
    cur = x0
    for j in range(steps.shape[0]):
        raw = cur @ steps[j]
        cur, defects[j] = polar_project(raw)
        out[j + 1] = cur
    return GroupPath(lift.level, out, defects)


def solve_ode(h: GridPath, x0: np.ndarray | None = None) -> GroupPath:
    """Exact solution for a piecewise-linear H-path: Y_j = Y_{j-1} exp(dh_j)."""
    n = dim_to_n(h.d)
    x0 = _identity(n) if x0 is None else np.asarray(x0, complex)
    return GroupPath(h.level, _chain(x0, group_exp(h.increments)))


def _stack(vals: np.ndarray) -> GridPath:
    level = int(round(np.log2(vals.shape[0] - 1)))
    return GridPath(level, vals)


def development_left(Y: GroupPath, N: int | None = None) -> GridPath:
    """J^N_t: midpoint sums of (Y_{i-1}^{-1} + Y_i^{-1})/2 (Y_i - Y_{i-1})."""
    Yn = Y if N is None else Y.subsample(N)
    y = Yn.values
    yinv = np.swapaxes(y.conj(), -1, -2)
    terms = 0.5 * (yinv[:-1] + yinv[1:]) @ (y[1:] - y[:-1])
    coeffs = from_matrix(terms)
    return _stack(np.concatenate([np.zeros((1, coeffs.shape[1])), np.cumsum(coeffs, axis=0)]))


def development_right_midpoint(Y: GroupPath, N: int | None = None) -> GridPath:
    """K^N_t: midpoint sums of (Y_i - Y_{i-1}) (Y_{i-1}^{-1} + Y_i^{-1}) / 2."""
    Yn = Y if N is None else Y.subsample(N)
    y = Yn.values
    yinv = np.swapaxes(y.conj(), -1, -2)
    terms = (y[1:] - y[:-1]) @ (0.5 * (yinv[:-1] + yinv[1:]))
    coeffs = from_matrix(terms)
    return _stack(np.concatenate([np.zeros((1, coeffs.shape[1])), np.cumsum(coeffs, axis=0)]))


def rough_integral_b(Y: GroupPath, lift: LeveledLift) -> GridPath:
    """b_t = int Ad(Y_s) dw_s with the second-order term Ad(Y_s) sum e_k e_l (2 w^{kl} - w^k w^l)."""
    if Y.level != lift.level:
        raise ValueError("Y and lift must share a grid")
    d = lift.base.d
    n = dim_to_n(d)
    basis = algebra(n).basis
    inc = lift.base.increments
    corr = 2 * lift.seg_areas - np.einsum("jk,jl->jkl", inc, inc)
    prod = np.einsum("aij,bjk->abik", basis, basis)
    second = from_matrix(np.einsum("mab,abik->mik", corr, prod))
    ad = adjoint_matrix(Y.values[:-1])
    xi = np.einsum("jab,jb->ja", ad, inc + second)
    return _stack(np.concatenate([np.zeros((1, d)), np.cumsum(xi, axis=0)]))


def development_right(Y: GroupPath, lift: LeveledLift, N: int | None = None, tol: float = 1e-3):
    """(K^N, b) with b restricted to the level-N grid; checks their sup-difference."""
    b = rough_integral_b(Y, lift)
    K = development_right_midpoint(Y, N)
    bN = b if N is None else b.subsample(N)
    diff = float(np.max(np.abs(K.values - bN.values)))
    if N is None and diff > tol:
        raise ConsistencyError(f"K^N and rough integral differ by {diff:.3g}")
    return K, bN, diff


# --------------------------------------------------------------- U_k and projections


@dataclass
class BasePath:
    """Cached data for an H-path k: Y(., e, k) and segment weights."""

    k: GridPath
    Y: GroupPath
    mid: np.ndarray  # (M, d, d) orthogonal Ad(Y at segment midpoints)
    phi: np.ndarray  # (M, d, d) Ad(Y_{j-1}) Phi(dk_j)

    @classmethod
    def of(cls, k: GridPath) -> "BasePath":
        Y = solve_ode(k)
        inc = k.increments
        half = group_exp(0.5 * inc)
        mid = adjoint_matrix(Y.values[:-1] @ half)
        phi = adjoint_matrix(Y.values[:-1]) @ phi_matrix(inc)
        return cls(k, Y, mid, phi)

    @property
    def dt(self) -> float:
        return self.k.dt


def _base(k) -> BasePath:
    return k if isinstance(k, BasePath) else BasePath.of(k)


def u_k_transform(k, w: GridPath) -> GridPath:
    """(U_k w)(t) = int_0^t Ad(Y(s, e, k)) dw_s."""
    bp = _base(k)
    inc = np.einsum("jab,jb->ja", bp.mid, w.increments)
    return GridPath.from_increments(inc)


def u_k_inverse(k, g: GridPath) -> GridPath:
    bp = _base(k)
    inc = np.einsum("jba,jb->ja", bp.mid, g.increments)
    return GridPath.from_increments(inc)


def q_map(k, v: np.ndarray) -> GridPath:
    """Q(k) v = int_0^. Ad(Y(s, e, k)^{-1}) v ds."""
    bp = _base(k)
    inc = bp.dt * np.einsum("jba,b->ja", bp.mid, np.asarray(v, float))
    return GridPath.from_increments(inc)


def endpoint_integral(k, w: GridPath) -> np.ndarray:
    bp = _base(k)
    return np.einsum("jab,jb->a", bp.mid, w.increments)


def projections(k, w: GridPath) -> tuple[GridPath, GridPath, np.ndarray]:
    """(P(k) w, N(k) w, v) with v = int Ad(Y) dw and N(k) w = Q(k) v."""
    bp = _base(k)
    v = endpoint_integral(bp, w)
    nw = q_map(bp, v)
    return w - nw, nw, v


def derivative_dy(w: GridPath, h: GridPath) -> np.ndarray:
    """Directional derivative of Y(., e, w) along h: (int_0^t Ad(Y_s) dh_s) Y_t, exact on the grid."""
    bp = BasePath.of(w)
    inc = np.einsum("jab,jb->ja", bp.phi, h.increments)
    z = np.concatenate([np.zeros((1, w.d)), np.cumsum(inc, axis=0)])
    return to_matrix(z) @ bp.Y.values


def group_energy(Y: GroupPath) -> float:
    """Discrete int |dY Y^{-1} / dt|^2 dt using exact segment logs."""
    from .lie_core import group_log

    y = Y.values
    steps = np.swapaxes(y[:-1].conj(), -1, -2) @ y[1:]
    logs = group_log(steps)
    return float(np.sum(logs**2) * Y.M)
