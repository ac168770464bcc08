"""Submanifold chart at a base path k with Y(1, e, k) = a.

A point of S_x near k is written w = k + eta + Q(k) v with eta tangent
(int Ad(Y(s, e, k)) d eta = 0) and v in g fixed by Y(1, e, w) = x.

Discrete conventions (grid of the base path):
  * Q(k), P(k) as in group_rde (midpoint-orthogonal weights);
  * the endpoint map w -> Y(1, e, w) is the exact product of segment
    exponentials, and its right-trivialized derivative along h is
    J_w h = sum_j Ad(Y_{j-1}) Phi(dw_j) dh_j.

G(a, eta, k) = det(D_x v(a, eta) (R_a)_*): the operator in its definition is
block triangular on H_0 + H_0^perp, so only the g-block survives.  With
x = exp(u) a, differentiating Y(1, e, k + eta + Q v) = x gives
D_u v = (J_w Q)^{-1}, which the implicit route evaluates directly.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ChartDegenerateError, OutOfChartError, PreconditionError
from .group_rde import (
    BasePath,
    projections,
    rough_integral_b,
    solve_ode,
    solve_rde,
    u_k_inverse,
    u_k_transform,
)
from .hessian_spectrum import galerkin_eigen
from .lie_core import (
    adjoint_matrix,
    bracket,
    group_distance,
    group_exp,
    group_log,
    phi_matrix,
)
from .rough_path import (
    GridPath,
    cutoff_chi,
    h_inner,
    h_norm,
    lift_piecewise_linear,
    rough_holder_norm,
    worker_rng,
)

ALPHA = 0.4
ETA_SCALE = 0.1
X_RADIUS = 0.1
GL_NODES = 8
RESIDUAL_TOL = 1e-10
TANGENCY_TOL = 1e-8


@dataclass
class Chart:
    """Cached data for the base path k."""

    k: GridPath
    bp: BasePath
    a: np.ndarray
    log_a: np.ndarray
    dQ: np.ndarray  # (M, d, d): dQ[j] @ v is the j-th increment of Q(k) v
    k_norm: float

    @classmethod
    def of(cls, k) -> "Chart":
        if isinstance(k, Chart):
            return k
        bp = BasePath.of(k)
        a = bp.Y.values[-1]
        dQ = bp.dt * np.swapaxes(bp.mid, -1, -2)
        return cls(k, bp, a, group_log(a), dQ, rough_holder_norm(lift_piecewise_linear(k), ALPHA))

    @property
    def d(self) -> int:
        return self.k.d

    def eta_threshold(self) -> float:
        return ETA_SCALE / (1.0 + self.k_norm)


@dataclass
class ChartState:
    k: GridPath
    eta: GridPath
    v: np.ndarray
    x: np.ndarray
    iterations: int
    contraction_ratio: float
    residual: float
    newton_steps: int = 0
    meta: dict = field(default_factory=dict)


def _log_prime(y: np.ndarray) -> np.ndarray:
    """d/ds log(exp(s h) y) at s = 0, as a matrix acting on h."""
    return np.linalg.inv(phi_matrix(group_log(y)))


def _segment_weights(z: GridPath):
    """(Y(1, e, z), W) with W[j] = Ad(Y_{j-1}) Phi(dz_j)."""
    Y = solve_ode(z)
    W = adjoint_matrix(Y.values[:-1]) @ phi_matrix(z.increments)
    return Y.values[-1], W


def _qv(ch: Chart, v: np.ndarray) -> GridPath:
    return GridPath.from_increments(np.einsum("jab,b->ja", ch.dQ, v))


def tangency_defect(k, eta: GridPath) -> float:
    ch = Chart.of(k)
    return float(np.linalg.norm(np.einsum("jab,jb->a", ch.bp.mid, eta.increments)))


def project_to_tangent(k, w: GridPath) -> GridPath:
    """P(k) w: the component of w with int Ad(Y(s, e, k)) dw_s = 0."""
    ch = Chart.of(k)
    return projections(ch.bp, w)[0]


def _check_smallness(ch: Chart, x: np.ndarray, eta: GridPath):
    en = rough_holder_norm(lift_piecewise_linear(eta), ALPHA)
    if en > ch.eta_threshold():
        raise OutOfChartError(f"|eta|_{ALPHA} = {en:.3g} exceeds {ch.eta_threshold():.3g}")
    dx = group_distance(x, ch.a)
    if dx > X_RADIUS:
        raise OutOfChartError(f"d(x, a) = {dx:.3g} exceeds {X_RADIUS}")


def _contraction_map(ch: Chart, target: np.ndarray, eta: GridPath, v: np.ndarray, nodes, weights):
    """M_{x,eta}(v) = A(eta, v)^{-1} (log x - log a - B(eta, v))."""
    d = ch.d
    A = np.zeros((d, d))
    B = np.zeros(d)
    direction = eta + _qv(ch, v)
    for th, wt in zip(nodes, weights):
        z = ch.k + direction * th
        y1, W = _segment_weights(z)
        lp = _log_prime(y1)
        A += wt * lp @ np.einsum("jab,jbc->ac", W, ch.dQ)
        B += wt * lp @ np.einsum("jab,jb->a", W, eta.increments)
    return np.linalg.solve(A, target - B)


def _newton(ch: Chart, x: np.ndarray, eta: GridPath, v: np.ndarray, steps: int = 8):
    """Polish v so that Y(1, e, k + eta + Q v) = x to rounding."""
    used = 0
    for _ in range(steps):
        w = ch.k + eta + _qv(ch, v)
        y1, W = _segment_weights(w)
        r = group_log(x @ y1.conj().T)
        if np.linalg.norm(r) < 1e-15:
            break
        J = np.einsum("jab,jbc->ac", W, ch.dQ)
        dv = np.linalg.solve(J, r)
        v = v + dv
        used += 1
        if np.linalg.norm(dv) < 1e-16:
            break
    return v, used


def endpoint_jacobian(k, eta: GridPath, v: np.ndarray) -> np.ndarray:
    """J = d/dv (right-trivialized) of Y(1, e, k + eta + Q(k) v)."""
    ch = Chart.of(k)
    _, W = _segment_weights(ch.k + eta + _qv(ch, v))
    return np.einsum("jab,jbc->ac", W, ch.dQ)


def solve_v(
    x: np.ndarray,
    eta: GridPath,
    k,
    method: str = "contraction",
    max_iter: int = 100,
    tol: float = 1e-12,
    enforce_thresholds: bool = True,
) -> ChartState:
    """Find v with Y(1, e, k + eta + Q(k) v) = x.

    method="contraction" iterates M_{x,eta} (8-node Gauss-Legendre in theta)
    and then polishes with Newton; method="newton" runs Newton alone.
    """
    ch = Chart.of(k)
    x = np.asarray(x, complex)
    if tangency_defect(ch, eta) > TANGENCY_TOL:
        raise PreconditionError("eta is not tangent at k")
    if enforce_thresholds:
        _check_smallness(ch, x, eta)
    d = ch.d
    v = np.zeros(d)
    iterations, ratio = 0, 0.0
    if method == "contraction":
        target = group_log(x) - ch.log_a
        nodes, weights = np.polynomial.legendre.leggauss(GL_NODES)
        nodes, weights = 0.5 * (nodes + 1.0), 0.5 * weights
        prev_step = None
        converged = False
        for iterations in range(1, max_iter + 1):
            nv = _contraction_map(ch, target, eta, v, nodes, weights)
            step = float(np.linalg.norm(nv - v))
            if prev_step is not None and prev_step > 1e-13:
                ratio = max(ratio, step / prev_step)
            v, prev_step = nv, step
            if ratio > 0.9:
                raise OutOfChartError(f"contraction ratio {ratio:.3g} > 0.9")
            if step < tol:
                converged = True
                break
        if not converged:
            raise OutOfChartError(f"no convergence in {max_iter} iterations")
    elif method != "newton":
        raise ValueError(f"unknown method {method}")
    v, used = _newton(ch, x, eta, v)
    y1 = solve_ode(ch.k + eta + _qv(ch, v)).values[-1]
    residual = float(np.linalg.norm(y1 - x))
    if residual > RESIDUAL_TOL or not np.all(np.isfinite(v)):
        raise OutOfChartError(f"residual {residual:.3g} after solve")
    return ChartState(ch.k, eta, v, x, iterations, ratio, residual, used)


def chart_maps(k, x: np.ndarray, eta: GridPath, **kw) -> tuple[GridPath, ChartState]:
    """w = Phi_{k,x}(eta) = k + eta + Q(k) v(x, eta)."""
    ch = Chart.of(k)
    st = solve_v(x, eta, ch, **kw)
    return ch.k + eta + _qv(ch, st.v), st


def chart_inverse(k, w: GridPath) -> tuple[np.ndarray, GridPath]:
    """Psi_k(w) = (Y(1, e, w), P(k)(w - k))."""
    ch = Chart.of(k)
    return solve_ode(w).values[-1], project_to_tangent(ch, w - ch.k)


def weight_F(state: ChartState, k=None) -> float:
    ch = Chart.of(k if k is not None else state.k)
    phi = _qv(ch, state.v)
    eta = state.eta
    return (
        h_inner(eta, ch.k)
        + h_inner(phi, ch.k)
        + 0.5 * h_norm(ch.k) ** 2
        + 0.5 * h_norm(phi) ** 2
    )


def det_G(a: np.ndarray, eta: GridPath, k, method: str = "fd", step: float = 1e-5, state: ChartState | None = None) -> float:
    """G(a, eta, k) = det(D_x v(a, eta) (R_a)_*).

    method="fd": central differences of v(exp(u) a, eta) in the d exponential
    coordinates u (Newton-polished solves).  method="implicit": 1 / det J.
    """
    ch = Chart.of(k)
    if method == "implicit":
        if state is None:
            state = solve_v(a, eta, ch, method="newton", enforce_thresholds=False)
        val = 1.0 / float(np.linalg.det(endpoint_jacobian(ch, eta, state.v)))
    elif method == "fd":
        d = ch.d
        D = np.zeros((d, d))
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            vp = solve_v(group_exp(e) @ a, eta, ch, method="newton", enforce_thresholds=False).v
            vm = solve_v(group_exp(-e) @ a, eta, ch, method="newton", enforce_thresholds=False).v
            D[:, i] = (vp - vm) / (2 * step)
        val = float(np.linalg.det(D))
    else:
        raise ValueError(f"unknown method {method}")
    if abs(val) < 1e-12 or not math.isfinite(val):
        raise ChartDegenerateError(f"G = {val:.3g}")
    return val


def det_G_richardson(a, eta, k, step: float = 1e-5) -> tuple[float, float]:
    """G at steps h and 2h; agreement guards the finite-difference accuracy."""
    return det_G(a, eta, k, "fd", step), det_G(a, eta, k, "fd", 2 * step)


# ------------------------------------------------------------------ quadratic forms


def geodesic_xi(k: GridPath) -> np.ndarray:
    inc = k.increments
    xi = inc[0] / k.dt
    if np.max(np.abs(inc / k.dt - xi)) > 1e-9:
        raise PreconditionError("k is not of the form t xi")
    return xi


def _quad_form_rhs(g: GridPath, xi: np.ndarray) -> float:
    """int ([g_s, xi], dg_s), exact for piecewise-linear g."""
    mid = 0.5 * (g.values[:-1] + g.values[1:])
    return float(np.sum(bracket(mid, xi) * g.increments))


def galerkin_modes_on_grid(xi: np.ndarray, modes: int, level: int):
    """(zeta, paths) of T_xi's Galerkin eigenvectors as grid paths in H_{0,0}."""
    d = xi.shape[-1]
    vals, vecs = galerkin_eigen(xi, modes)
    t = np.linspace(0.0, 1.0, 2**level + 1)
    m = np.arange(1, modes + 1)
    phi = math.sqrt(2.0) * np.sin(np.pi * np.outer(t, m)) / (np.pi * m)  # (M+1, modes)
    coeff = vecs.T.reshape(-1, modes, d)  # (n_eig, m, a)
    paths = np.einsum("tm,ima->ita", phi, coeff)
    return vals - 1.0, paths


def sine_coefficients(g: GridPath, modes: int) -> np.ndarray:
    """(g, phi_m e_a)_H for piecewise-linear g, exact per segment."""
    t = g.times
    m = np.arange(1, modes + 1)
    phi = math.sqrt(2.0) * np.sin(np.pi * np.outer(t, m)) / (np.pi * m)
    dphi = np.diff(phi, axis=0)
    return np.einsum("jm,ja->ma", dphi, g.increments) / g.dt


def wick_form(eta: GridPath, k: GridPath, lam: float, modes: int) -> tuple[float, float]:
    """(sum_i zeta_i ((eta, e~_i)^2 - 1/lam), int ([U_k eta, xi], d U_k eta)).

    e~_i = U_k^{-1} e_i for the Galerkin eigenvectors e_i of T_xi with
    `modes` sine modes; (eta, e~_i)_H = (U_k eta, e_i)_H by isometry.
    """
    xi = geodesic_xi(k)
    g = u_k_transform(k, eta)
    vals, vecs = galerkin_eigen(xi, modes)
    zeta = vals - 1.0
    c = sine_coefficients(g, modes).reshape(-1)
    proj = vecs.T @ c
    lhs = float(np.sum(zeta * (proj**2 - 1.0 / lam)))
    return lhs, _quad_form_rhs(g, xi)


def expansion_F_terms(state: ChartState, k) -> dict:
    """F, the geodesic energy and the quadratic form at eta."""
    ch = Chart.of(k)
    xi = geodesic_xi(ch.k)
    g = u_k_transform(ch.bp, state.eta)
    return {
        "F": weight_F(state, ch),
        "half_energy": 0.5 * h_norm(ch.k) ** 2,
        "quad": _quad_form_rhs(g, xi),
    }


def _fit_slope(scales, values) -> float:
    s = np.log(np.asarray(scales, float))
    v = np.log(np.maximum(np.abs(np.asarray(values, float)), 1e-300))
    return float(np.polyfit(s, v, 1)[0])


def expansion_F_check(eta: GridPath, k, scales=(1.0, 0.5, 0.25, 0.125), quad_weight: float = 0.5) -> tuple[float, list]:
    """Slope of |F - |k|^2 / 2 - quad_weight * (T eta, eta)| against the eta scale."""
    ch = Chart.of(k)
    rem = []
    for s in scales:
        st = solve_v(ch.a, eta * s, ch)
        t = expansion_F_terms(st, ch)
        rem.append(t["F"] - t["half_energy"] - quad_weight * t["quad"])
    return _fit_slope(scales, rem), rem


def expansion_G_check(eta: GridPath, k, scales=(1.0, 0.5, 0.25, 0.125), method: str = "fd") -> tuple[float, list]:
    ch = Chart.of(k)
    rem = [det_G(ch.a, eta * s, ch, method) - 1.0 for s in scales]
    return _fit_slope(scales, rem), rem


def expansion_b_terms(eta: GridPath, k, s: float) -> tuple[float, float]:
    """(|b(1)|^2 / 2 along Phi_{k,a}(s eta), the quadratic main terms)."""
    ch = Chart.of(k)
    xi = geodesic_xi(ch.k)
    e = eta * s
    w, _ = chart_maps(ch, ch.a, e)
    lift = lift_piecewise_linear(w)
    b1 = rough_integral_b(solve_rde(lift), lift).values[-1]
    lhs = 0.5 * float(b1 @ b1)
    g = u_k_transform(ch.bp, e)
    br0 = bracket(g.values[:-1], xi)
    br1 = bracket(g.values[1:], xi)
    # int |[g, xi]|^2 and int [g, xi] for piecewise-linear g
    sq = np.sum((br0**2 + br0 * br1 + br1**2) / 3.0, axis=-1)
    int_sq = float(np.sum(sq) * g.dt)
    int_br = 0.5 * np.sum(br0 + br1, axis=0) * g.dt
    rhs = 0.5 * h_norm(ch.k) ** 2 - 0.5 * _quad_form_rhs(g, xi) - 0.5 * (int_sq - float(int_br @ int_br))
    return lhs, rhs


def expansion_b_check(eta: GridPath, k, scales=(1.0, 0.5, 0.25, 0.125)) -> tuple[float, list]:
    """Log-log slope of |LHS - RHS| in the expansion of |b(1)|^2 / 2."""
    diffs = []
    for s in scales:
        lhs, rhs = expansion_b_terms(eta, k, s)
        diffs.append(lhs - rhs)
    return _fit_slope(scales, diffs), diffs


def smooth_tangent_eta(k, seed: int, amplitude: float = 1.0, harmonics: int = 3) -> GridPath:
    """A random smooth H_{0,0} path pushed through U_k^{-1} (tangent by construction)."""
    ch = Chart.of(k)
    rng = worker_rng(seed)
    t = ch.k.times
    d = ch.d
    coef = rng.standard_normal((harmonics, d)) / np.arange(1, harmonics + 1)[:, None] ** 2
    g = np.einsum("tm,ma->ta", np.sin(np.pi * np.outer(t, np.arange(1, harmonics + 1))), coef)
    return u_k_inverse(ch.bp, GridPath(ch.k.level, amplitude * g))


def threshold_scaled_eta(k, seed: int, fraction: float = 0.8, harmonics: int = 3) -> GridPath:
    """smooth_tangent_eta rescaled so that its rough norm is `fraction` of the chart threshold."""
    ch = Chart.of(k)
    eta = smooth_tangent_eta(ch, seed, 1.0, harmonics)
    norm = rough_holder_norm(lift_piecewise_linear(eta), ALPHA)
    return eta * (fraction * ch.eta_threshold() / norm)


# ------------------------------------------------------------------ Monte Carlo

MC_CHUNK = 1000


@dataclass
class MCResult:
    estimate: float
    stderr: float
    ess_fraction: float
    failures: int
    meta: dict


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PATHGROUP_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class _MCSetup:
    k: GridPath
    n: tuple
    lam: float
    zeta: np.ndarray
    basis_vals: np.ndarray
    m: int
    theta: float
    delta: float
    sanity: bool
    seed: int


def _mc_chunk(setup: _MCSetup, index: int, size: int) -> tuple[np.ndarray, int]:
    from numpy.polynomial import hermite_e as He

    ch = Chart.of(setup.k)
    modes = len(setup.zeta)
    K = np.abs(1.0 + setup.zeta)
    rng = worker_rng(setup.seed, index)
    z = rng.standard_normal((size, modes))
    coords = z / np.sqrt(setup.lam * K)
    half_energy = 0.5 * h_norm(ch.k) ** 2
    herm = np.ones(size)
    for i, ni in enumerate(setup.n):
        c = np.zeros(ni + 1)
        c[ni] = 1.0
        herm *= He.hermeval(z[:, i], c) ** 2 / math.factorial(ni)
    if setup.sanity:
        return herm, 0
    weights = np.zeros(size)
    failures = 0
    for s in range(size):
        eta = GridPath(ch.k.level, np.einsum("i,itd->td", coords[s], setup.basis_vals))
        chi, _ = cutoff_chi(eta, setup.m, setup.theta, setup.lam, setup.delta)
        if chi == 0.0:
            continue
        try:
            st = solve_v(ch.a, eta, ch, method="newton", enforce_thresholds=False)
        except OutOfChartError:
            failures += 1
            continue
        FR = weight_F(st, ch) - half_energy - 0.5 * float(np.sum(setup.zeta * coords[s] ** 2))
        G = 1.0 / float(np.linalg.det(endpoint_jacobian(ch, eta, st.v)))
        weights[s] = herm[s] * chi**2 * math.exp(-setup.lam * FR) * G
    return weights, failures


def approx_eigennorm_mc(
    k: GridPath,
    n,
    lam: float,
    modes: int = 4,
    samples: int = 10_000,
    seed: int = 0,
    m: int = 4,
    theta: float = 0.5,
    delta: float = 0.8,
    galerkin_modes: int = 32,
    sanity: bool = False,
    workers: int | None = None,
) -> MCResult:
    """Squared L^2 norm of the cut-off approximate eigenfunction.

    Retained coordinates eta_i ~ N(0, 1 / (lam |1 + zeta_i|)), the law of
    e_n^2 dmu_{lam,T} up to the Hermite factor; every other direction is frozen
    at 0.  Weight: He_n^2 / n! * chi^2 * exp(-lam F_R) * G with
    F_R = F - |k|^2 / 2 - (1/2) sum zeta_i eta_i^2.
    sanity=True forces chi = 1, F_R = 0, G = 1.

    Samples are drawn in chunks of MC_CHUNK seeded by (seed, chunk index), so
    the result does not depend on the number of workers.
    """
    if modes > 8:
        raise PreconditionError("modes must be <= 8")
    if lam < 10:
        raise PreconditionError("lambda must be >= 10")
    if samples < 2:
        raise PreconditionError("need at least 2 samples")
    ch = Chart.of(k)
    xi = geodesic_xi(ch.k)
    n = tuple(int(x) for x in n)
    if len(n) > modes:
        raise PreconditionError("multi-index longer than the retained modes")
    n = n + (0,) * (modes - len(n))
    zeta_all, paths = galerkin_modes_on_grid(xi, galerkin_modes, ch.k.level)
    order = np.argsort(zeta_all, kind="stable")[:modes]
    basis = []
    for i in order:
        e = u_k_inverse(ch.bp, GridPath(ch.k.level, paths[i]))
        basis.append(e * (1.0 / h_norm(e)))
    setup = _MCSetup(ch.k, n, lam, zeta_all[order], np.stack([b.values for b in basis]), m, theta, delta, sanity, seed)
    sizes = [min(MC_CHUNK, samples - i) for i in range(0, samples, MC_CHUNK)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(sizes) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mc_chunk, [setup] * len(sizes), range(len(sizes)), sizes))
    else:
        parts = [_mc_chunk(setup, i, sz) for i, sz in enumerate(sizes)]
    weights = np.concatenate([p[0] for p in parts])
    failures = sum(p[1] for p in parts)
    est = float(np.mean(weights))
    se = float(np.std(weights, ddof=1) / math.sqrt(samples))
    ess = float(np.sum(weights) ** 2 / max(np.sum(weights**2), 1e-300)) / samples
    if ess < 0.1:
        warnings.warn(f"weight degeneracy: effective sample size {ess:.1%}", RuntimeWarning)
    meta = {
        "retained_zeta": [float(x) for x in setup.zeta],
        "frozen_directions": "all non-retained modes set to 0",
        "level": ch.k.level,
        "m": m,
        "theta": theta,
        "delta": delta,
        "lambda": lam,
        "samples": samples,
        "seed": seed,
        "sanity": sanity,
    }
    return MCResult(est, se, ess, failures, meta)
