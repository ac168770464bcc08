"""Ornstein-Uhlenbeck type operators on finitely many retained modes.

Mode i carries the reference density sqrt(lam / 2 pi) exp(-lam eta^2 / 2) times
exp(-(lam / 2) zeta_i (eta^2 - 1 / lam)).  With K_i = |1 + zeta_i| the
eigenfunctions are products of

    c(K) He_n(sqrt(lam K) eta) / sqrt(n!)                                   (1 + zeta > 0)
    c(K) He_n(sqrt(lam K) eta) / sqrt(n!) exp(-(lam / 2) K (eta^2 - 1/lam))  (1 + zeta < 0)

where c(K) = (K e^{1 - K})^{1/4} is the one-mode regularized determinant factor.
Each squared eigenfunction times the reference density is then exactly the
Gaussian N(0, 1 / (lam K)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e as He

from .errors import DegeneracyError, PreconditionError
from .hessian_spectrum import closed_form_values

NONDEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class ModeSpec:
    zetas: tuple[float, ...]
    lam: float

    def __post_init__(self):
        z = tuple(float(x) for x in self.zetas)
        if self.lam <= 0:
            raise PreconditionError("lambda must be positive")
        for x in z:
            if abs(1 + x) < NONDEGENERACY_TOL:
                raise DegeneracyError(f"1 + zeta = {1 + x:.3g} is degenerate")
        neg = [x for x in z if 1 + x < 0]
        pos = [x for x in z if 1 + x > 0]
        object.__setattr__(self, "zetas", tuple(neg + pos))

    @property
    def N(self) -> int:
        return sum(1 for x in self.zetas if 1 + x < 0)

    @property
    def K(self) -> np.ndarray:
        return np.abs(1.0 + np.asarray(self.zetas, float))

    def __len__(self) -> int:
        return len(self.zetas)

    def absolute(self) -> "ModeSpec":
        """Mode data of |I + T| - I in the same order."""
        return ModeSpec(tuple(float(k) - 1.0 for k in self.K), self.lam)


def mode_spec_from_hessian(xi: np.ndarray, m_max: int, lam: float) -> ModeSpec:
    """zeta = (Hessian value) - 1 for every closed-form Hessian mode with m <= m_max."""
    return ModeSpec(tuple(closed_form_values(xi, m_max) - 1.0), lam)


def _pad(spec: ModeSpec, n) -> tuple[int, ...]:
    n = tuple(int(x) for x in n)
    if len(n) > len(spec):
        raise PreconditionError("multi-index longer than the retained mode list")
    if any(x < 0 for x in n):
        raise PreconditionError("multi-index entries must be nonnegative")
    return n + (0,) * (len(spec) - len(n))


def ou_eigenvalue(spec: ModeSpec, n) -> float:
    n = _pad(spec, n)
    K = spec.K
    return spec.lam * (float(np.sum(K[: spec.N])) + float(np.dot(n, K)))


def normalization(K) -> np.ndarray:
    K = np.asarray(K, float)
    return (K * np.exp(1.0 - K)) ** 0.25


def _hermite(n: int, x: np.ndarray) -> np.ndarray:
    c = np.zeros(n + 1)
    c[n] = 1.0
    return He.hermeval(x, c) / math.sqrt(math.factorial(n))


def _mode_log_abs_and_sign(K: float, negative: bool, lam: float, n: int, eta: np.ndarray):
    """log|e_n| and sign(e_n) for one mode."""
    h = _hermite(n, math.sqrt(lam * K) * eta)
    with np.errstate(divide="ignore"):
        log = np.log(np.abs(h)) + 0.25 * math.log(K * math.exp(1.0 - K))
    if negative:
        log = log - 0.5 * lam * K * (eta**2 - 1.0 / lam)
    return log, np.sign(h)


def _mode_log_density(zeta: float, lam: float, eta: np.ndarray) -> np.ndarray:
    return 0.5 * math.log(lam / (2 * math.pi)) - 0.5 * lam * eta**2 - 0.5 * lam * zeta * (eta**2 - 1.0 / lam)


def ou_eigenfunction(spec: ModeSpec, n, point) -> float:
    n = _pad(spec, n)
    point = np.atleast_1d(np.asarray(point, float))
    if point.shape != (len(spec),):
        raise PreconditionError("point dimension must equal the number of retained modes")
    total, sign = 0.0, 1.0
    for i, (K, nn, eta) in enumerate(zip(spec.K, n, point)):
        lg, sg = _mode_log_abs_and_sign(float(K), i < spec.N, spec.lam, nn, np.array(eta))
        total += float(lg)
        sign *= float(sg)
    return sign * math.exp(total) if sign != 0 else 0.0


def verify_generator_1d(K: float, lam: float, n: int, grid: int) -> float:
    """Relative sup residual of -f'' + (lam K / 2)^2 x^2 f + (lam K / 2) f = lam K (n + 1) f.

    f = He_n(sqrt(lam K) x) exp(-lam K x^2 / 4) on [-10, 10] / sqrt(lam K), central
    differences, compared over the middle half of the domain.
    """
    if grid < 256:
        raise PreconditionError("grid must be >= 256")
    a = math.sqrt(lam * K)
    L = 10.0 / a
    x = np.linspace(-L, L, grid + 1)
    h = x[1] - x[0]
    f = _hermite(n, a * x) * np.exp(-0.25 * a * a * x * x)
    lap = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    xi = x[1:-1]
    lhs = -lap + (0.5 * lam * K) ** 2 * xi**2 * f[1:-1] + 0.5 * lam * K * f[1:-1]
    rhs = lam * K * (n + 1) * f[1:-1]
    mid = np.abs(xi) <= L / 2
    return float(np.max(np.abs(lhs - rhs)[mid]) / np.max(np.abs(rhs[mid])))


def _nodes(order: int):
    x, w = He.hermegauss(order)
    return x, w * np.exp(0.5 * x * x)  # weights for plain dx


def _moment_table(spec: ModeSpec, n, m, max_degree: int, order: int) -> dict:
    """{alpha: int eta^alpha e_n e_m dmu_{lam,T}} on a tensor Gauss-Hermite grid."""
    n, m = _pad(spec, n), _pad(spec, m)
    x, w = _nodes(order)
    axes_eta, axes_logw, axes_sign = [], [], []
    for i, (zeta, K) in enumerate(zip(spec.zetas, spec.K)):
        eta = x / math.sqrt(spec.lam * K)
        logw = np.log(w) - 0.5 * math.log(spec.lam * K)
        neg = i < spec.N
        ln, sn = _mode_log_abs_and_sign(float(K), neg, spec.lam, n[i], eta)
        lm, sm = _mode_log_abs_and_sign(float(K), neg, spec.lam, m[i], eta)
        axes_eta.append(eta)
        axes_logw.append(logw + ln + lm + _mode_log_density(zeta, spec.lam, eta))
        axes_sign.append(sn * sm)
    grids_eta = np.meshgrid(*axes_eta, indexing="ij")
    logw = sum(np.meshgrid(*axes_logw, indexing="ij"))
    sign = np.prod(np.meshgrid(*axes_sign, indexing="ij"), axis=0)
    weight = sign * np.exp(logw)
    out = {}
    for alpha in itertools.product(range(max_degree + 1), repeat=len(spec)):
        if sum(alpha) > max_degree:
            continue
        mono = np.ones_like(weight)
        for g, a in zip(grids_eta, alpha):
            mono = mono * g**a
        out[alpha] = float(np.sum(mono * weight))
    return out


def measure_identity_check(spec: ModeSpec, n, m, quad_order: int = 96, max_degree: int = 4) -> float:
    """Max moment discrepancy between e_n e_m dmu_{lam,T} and the same for |I+T| - I."""
    if len(spec) > 2:
        raise PreconditionError("at most 2 retained modes")
    if quad_order < 64:
        raise PreconditionError("quad_order must be >= 64")
    lhs = _moment_table(spec, n, m, max_degree, quad_order)
    rhs = _moment_table(spec.absolute(), n, m, max_degree, quad_order)
    return max(abs(lhs[a] - rhs[a]) for a in lhs)


def inner_product(spec: ModeSpec, n, m, quad_order: int = 96) -> float:
    return _moment_table(spec, n, m, 0, quad_order)[(0,) * len(spec)]


def lp_norm(spec: ModeSpec, n, p: float, quad_order: int = 160) -> float:
    """||e_n||_{L^p(mu_{lam,T})}; the measure and e_n factor over modes."""
    n = _pad(spec, n)
    x, w = _nodes(quad_order)
    total = 0.0
    for i, (zeta, K) in enumerate(zip(spec.zetas, spec.K)):
        neg = i < spec.N
        # integrand decays like exp(-s x^2 / 2) in x = sqrt(lam K) eta
        s = (p - 1.0) if neg else 1.0
        s = max(s, 1e-3)
        u = x / math.sqrt(s)
        eta = u / math.sqrt(spec.lam * K)
        lg, _ = _mode_log_abs_and_sign(float(K), neg, spec.lam, n[i], eta)
        logf = p * lg + _mode_log_density(float(zeta), spec.lam, eta)
        integ = np.sum(w * np.exp(logf)) / math.sqrt(s * spec.lam * K)
        total += math.log(integ)
    return math.exp(total / p)


@dataclass(frozen=True)
class FloatLevel:
    value: float
    multiplicity: int


def ou_spectrum_below(spec: ModeSpec, R: float, tol: float = 1e-12) -> list[FloatLevel]:
    """lam^{-1}-normalized eigenvalues <= R: sum_{neg} K_i + sum n_i K_i."""
    if R <= 0:
        raise PreconditionError("R must be positive")
    K = spec.K
    base = float(np.sum(K[: spec.N]))
    if base > R + tol:
        return []
    counts: dict[float, int] = {}
    # distinct quanta with their multiplicities; the multiset of sums over
    # occupation numbers is built by a bounded DP
    levels = {0.0: 1}
    for k in K:
        if k > R - base + tol:
            continue
        new: dict[float, int] = {}
        for v, c in levels.items():
            j = 0
            while v + j * k <= R - base + tol:
                key = v + j * k
                new[key] = new.get(key, 0) + c
                j += 1
        levels = new
    for v, c in levels.items():
        key = round(base + v, 12)
        counts[float(key)] = counts.get(float(key), 0) + c
    return [FloatLevel(v, c) for v, c in sorted(counts.items())]
