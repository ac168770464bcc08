"""Dyadic grid paths, level-2 lifts, path norms and the cut-off functional.

A GridPath lives on t_j = j 2^{-level}.  A LeveledLift stores one d x d area
per grid interval and recombines them with Chen's relation through prefix
sums, so w2_{s,t} for any grid pair costs O(1).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadArgsError, ResolutionError


@dataclass
class GridPath:
    level: int
    values: np.ndarray  # (2**level + 1, *shape)

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape[0] != 2**self.level + 1:
            raise ValueError("values must have 2**level + 1 rows")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite path values")

    @property
    def M(self) -> int:
        return 2**self.level

    @property
    def dt(self) -> float:
        return 2.0**-self.level

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M + 1)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @classmethod
    def from_function(cls, f, level: int) -> "GridPath":
        t = np.linspace(0.0, 1.0, 2**level + 1)
        return cls(level, np.array([f(s) for s in t]))

    @classmethod
    def from_increments(cls, inc: np.ndarray) -> "GridPath":
        inc = np.asarray(inc, float)
        level = int(round(math.log2(inc.shape[0])))
        vals = np.concatenate([np.zeros((1,) + inc.shape[1:]), np.cumsum(inc, axis=0)])
        return cls(level, vals)

    def __add__(self, other: "GridPath") -> "GridPath":
        _same_grid(self, other)
        return GridPath(self.level, self.values + other.values)

    def __sub__(self, other: "GridPath") -> "GridPath":
        _same_grid(self, other)
        return GridPath(self.level, self.values - other.values)

    def __mul__(self, c: float) -> "GridPath":
        return GridPath(self.level, self.values * c)

    __rmul__ = __mul__

    def subsample(self, N: int) -> "GridPath":
        """Values at the level-N dyadic points."""
        if N > self.level:
            raise ResolutionError(f"level {N} exceeds path level {self.level}")
        return GridPath(N, self.values[:: 2 ** (self.level - N)])

    def refine(self, level: int) -> "GridPath":
        """Piecewise-linear resampling onto a finer grid."""
        if level < self.level:
            raise ResolutionError("refine needs a finer level")
        t = np.linspace(0, 1, 2**level + 1)
        cols = [np.interp(t, self.times, self.values[:, i]) for i in range(self.d)]
        return GridPath(level, np.stack(cols, axis=1))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t"] + [f"x{i + 1}" for i in range(self.d)])
        for t, row in zip(self.times, self.values):
            wr.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridPath":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[0] != "t":
            raise BadArgsError("GridPath CSV must start with a t column")
        vals = np.array([[float(v) for v in r[1:]] for r in body])
        level = int(round(math.log2(len(body) - 1)))
        return cls(level, vals)


def _same_grid(a: GridPath, b: GridPath):
    if a.level != b.level:
        raise BadArgsError("paths live on different grids")


def h_inner(a: GridPath, b: GridPath) -> float:
    """Cameron-Martin inner product of the piecewise-linear interpolants."""
    _same_grid(a, b)
    return float(np.sum(a.increments * b.increments) / a.dt)


def h_norm(a: GridPath) -> float:
    return math.sqrt(max(h_inner(a, a), 0.0))


def dyadic_approx(path: GridPath, N: int) -> GridPath:
    """Polygonal approximation through the level-N dyadic points, on the original grid."""
    if N > path.level:
        raise ResolutionError(f"level {N} exceeds path level {path.level}")
    return path.subsample(N).refine(path.level)


@dataclass
class LeveledLift:
    """Level-2 rough path data on a dyadic grid.

    seg_areas[j] is w2 over [t_j, t_{j+1}]; prefix[j] = w2_{0, t_j}.
    """

    base: GridPath
    seg_areas: np.ndarray
    prefix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = self.base.values
        inc = self.base.increments
        step = self.seg_areas + np.einsum("ji,jk->jik", x[:-1], inc)
        self.prefix = np.concatenate([np.zeros((1,) + step.shape[1:]), np.cumsum(step, axis=0)])

    @property
    def level(self) -> int:
        return self.base.level

    def increment(self, s, t) -> np.ndarray:
        x = self.base.values
        return x[t] - x[s]

    def area(self, s, t) -> np.ndarray:
        """w2_{s,t} for grid indices s <= t (arrays broadcast)."""
        x = self.base.values
        s = np.asarray(s)
        t = np.asarray(t)
        return self.prefix[t] - self.prefix[s] - np.einsum("...i,...k->...ik", x[s], x[t] - x[s])

    def restrict(self, N: int) -> "LeveledLift":
        """The same rough path seen on the coarser level-N grid (areas kept)."""
        if N > self.level:
            raise ResolutionError(f"level {N} exceeds lift level {self.level}")
        step = 2 ** (self.level - N)
        idx = np.arange(0, self.base.M + 1, step)
        areas = self.area(idx[:-1], idx[1:])
        return LeveledLift(self.base.subsample(N), areas)


def lift_piecewise_linear(path: GridPath) -> LeveledLift:
    inc = path.increments
    return LeveledLift(path, 0.5 * np.einsum("ji,jk->jik", inc, inc))


def chen_defect(lift: LeveledLift, triples: np.ndarray) -> float:
    """max |w2_{s,t} - w2_{s,u} - w2_{u,t} - w1_{s,u} (x) w1_{u,t}| over (s, u, t)."""
    s, u, t = np.asarray(triples).T
    lhs = lift.area(s, t)
    rhs = lift.area(s, u) + lift.area(u, t) + np.einsum("...i,...k->...ik", lift.increment(s, u), lift.increment(u, t))
    return float(np.max(np.abs(lhs - rhs))) if len(s) else 0.0


def cross_area(x: GridPath, y: GridPath, s: int, t: int) -> np.ndarray:
    """int_s^t x_{s,u} (x) dy_u, exact for piecewise-linear x and y."""
    _same_grid(x, y)
    xv = x.values
    dx = np.diff(xv[s : t + 1], axis=0)
    dy = np.diff(y.values[s : t + 1], axis=0)
    mid = xv[s:t] - xv[s] + 0.5 * dx
    return np.einsum("ji,jk->ik", mid, dy)


def cross_area_lift(x: GridPath, y: GridPath) -> LeveledLift:
    """Lift-like container for C(x, y) on every grid pair (Chen with x and y)."""
    _same_grid(x, y)
    dx, dy = x.increments, y.increments
    seg = 0.5 * np.einsum("ji,jk->jik", dx, dy)
    step = seg + np.einsum("ji,jk->jik", x.values[:-1], dy)
    prefix = np.concatenate([np.zeros((1,) + step.shape[1:]), np.cumsum(step, axis=0)])

    class _C:
        def area(self_inner, s, t):
            s = np.asarray(s)
            t = np.asarray(t)
            return prefix[t] - prefix[s] - np.einsum("...i,...k->...ik", x.values[s], y.values[t] - y.values[s])

    return _C()


def dN_correction(w: LeveledLift, N: int) -> np.ndarray:
    """Running sums of w^{k,l} - 1/2 w^k w^l over level-N dyadic blocks.

    Returns an array of shape (2**N + 1, d, d) on the level-N grid.
    """
    coarse = w.restrict(N)
    inc = coarse.base.increments
    per_block = coarse.seg_areas - 0.5 * np.einsum("ji,jk->jik", inc, inc)
    return np.concatenate([np.zeros((1,) + per_block.shape[1:]), np.cumsum(per_block, axis=0)])


def p_variation(values: np.ndarray, p: float) -> float:
    """Discrete p-variation over all sub-partitions of the given points (exact DP)."""
    x = np.asarray(values, float)
    x = x.reshape(x.shape[0], -1)
    K = x.shape[0]
    best = np.zeros(K)
    for j in range(1, K):
        jumps = np.linalg.norm(x[j] - x[:j], axis=1) ** p
        best[j] = np.max(best[:j] + jumps)
    return float(best[-1] ** (1.0 / p))


def holder_norm(path: GridPath, alpha: float) -> float:
    """sup over grid pairs |x_t - x_s| / |t - s|^alpha."""
    x = path.values.reshape(path.M + 1, -1)
    best = 0.0
    for lag in range(1, path.M + 1):
        diff = np.linalg.norm(x[lag:] - x[:-lag], axis=1).max()
        best = max(best, diff / (lag * path.dt) ** alpha)
    return best


def rough_holder_norm(lift: LeveledLift, alpha: float) -> float:
    """||w1||_alpha + ||w2||_{2 alpha}^{1/2} over grid pairs."""
    M = lift.base.M
    b1 = b2 = 0.0
    for lag in range(1, M + 1):
        s = np.arange(0, M + 1 - lag)
        h = lag * lift.base.dt
        b1 = max(b1, np.linalg.norm(lift.increment(s, s + lag), axis=-1).max() / h**alpha)
        b2 = max(b2, np.abs(lift.area(s, s + lag)).max() / h ** (2 * alpha))
    return b1 + math.sqrt(b2)


def rough_distance(a: LeveledLift, b: LeveledLift, alpha: float, eval_level: int | None = None) -> float:
    """Inhomogeneous alpha-Hoelder distance on the common level-eval_level grid."""
    L = min(a.level, b.level) if eval_level is None else eval_level
    a, b = a.restrict(L), b.restrict(L)
    M = 2**L
    d1 = d2 = 0.0
    for lag in range(1, M + 1):
        s = np.arange(0, M + 1 - lag)
        h = lag / M
        e1 = np.linalg.norm(a.increment(s, s + lag) - b.increment(s, s + lag), axis=-1).max()
        e2 = np.abs(a.area(s, s + lag) - b.area(s, s + lag)).max()
        d1 = max(d1, e1 / h**alpha)
        d2 = max(d2, e2 / h ** (2 * alpha))
    return d1 + d2


def cross_area_norm(x: GridPath, y: GridPath, alpha: float) -> float:
    """||C(x, y)||_{2 alpha} over grid pairs."""
    c = cross_area_lift(x, y)
    M = x.M
    best = 0.0
    for lag in range(1, M + 1):
        s = np.arange(0, M + 1 - lag)
        best = max(best, np.abs(c.area(s, s + lag)).max() / (lag / M) ** (2 * alpha))
    return best


# ------------------------------------------------------------ Gamma functionals


def _check_m_theta(m: int, theta: float):
    if not (m >= 1 and 0 < theta < 1 and m * (1 - theta) > 1):
        raise BadArgsError("Gamma functionals need m (1 - theta) > 1")


def _pair_grid(M: int):
    s, t = np.triu_indices(M + 1, k=1)
    return s, t


def gamma_functionals(w: LeveledLift, m: int, theta: float) -> tuple[float, float]:
    """(Gamma_1, sum_ij Gamma_2^{ij}) as Riemann sums over grid pairs s < t."""
    _check_m_theta(m, theta)
    M = w.base.M
    h = w.base.dt
    s, t = _pair_grid(M)
    wt = h * h / ((t - s) * h) ** (2 + 2 * m * theta)
    inc = w.increment(s, t)
    g1 = float(np.sum(wt * np.sum(inc**2, axis=-1) ** (2 * m)))
    a = w.area(s, t)
    g2 = float(np.sum(wt[:, None, None] * a ** (2 * m)))
    return g1, g2


def gamma_bar(w: LeveledLift, m: int, theta: float) -> float:
    g1, g2 = gamma_functionals(w, m, theta)
    return (g1 + g2) ** (1.0 / (4 * m))


def gamma_gradient(path: GridPath, m: int, theta: float) -> np.ndarray:
    """Euclidean gradient of Gamma_1 + sum Gamma_2 (piecewise-linear lift) w.r.t. increments.

    For u in (s, t]:  d w_{s,t} / d Delta_u = I and
    d w2^{ij}_{s,t} / d Delta_u^p = delta_{ip} (x_t - x_mid(u))^j + delta_{jp} (x_mid(u) - x_s)^i.
    Sums over pairs containing u use 2-D prefix sums.
    """
    _check_m_theta(m, theta)
    lift = lift_piecewise_linear(path)
    M, h = path.M, path.dt
    x = path.values
    d = path.d
    S, T = np.meshgrid(np.arange(M + 1), np.arange(M + 1), indexing="ij")
    mask = T > S
    lag = np.where(mask, T - S, 1)
    wt = np.where(mask, h * h / (lag * h) ** (2 + 2 * m * theta), 0.0)
    inc = x[T] - x[S]
    sq = np.sum(inc**2, axis=-1)
    g1 = wt[..., None] * 4 * m * sq[..., None] ** (2 * m - 1) * inc  # (M+1, M+1, d)
    area = lift.area(S, T)
    W = wt[..., None, None] * 2 * m * area ** (2 * m - 1)  # W[s,t,i,j]
    # per pair: vector part A^p and matrix part B^{pq} acting on x_mid(u)
    A = np.einsum("stpj,tj->stp", W, x) - np.einsum("stip,si->stp", W, x)
    B = np.swapaxes(W, -1, -2) - W  # B^{pq} = W^{qp} - W^{pq}
    # contributions for segment u (1..M) sum over s <= u-1, t >= u
    def block_sum(F):
        # G[u] = sum_{s<u, t>=u} F[s, t]
        cs = np.cumsum(F, axis=0)  # over s
        out = np.empty((M,) + F.shape[2:])
        # sum over t >= u of cs[u-1, t]
        rev = np.cumsum(cs[:, ::-1], axis=1)[:, ::-1]
        for u in range(1, M + 1):
            out[u - 1] = rev[u - 1, u]
        return out

    grad = block_sum(g1) + block_sum(A)
    xmid = 0.5 * (x[:-1] + x[1:])
    grad += np.einsum("upq,uq->up", block_sum(B), xmid)
    return grad


def smooth_step(u):
    """C^infinity bump: 1 on [-1, 1], 0 off (-2, 2), built from exp(-1/x)."""
    u = np.abs(np.asarray(u, float))

    def f(z):
        zz = np.where(z > 0, z, 1.0)
        return np.where(z > 0, np.exp(-1.0 / zz), 0.0)

    a, b = f(2.0 - u), f(u - 1.0)
    return a / (a + b)


def smooth_step_derivative(u):
    u = np.asarray(u, float)
    au = np.abs(u)

    def f(z):
        zz = np.where(z > 0, z, 1.0)
        return np.where(z > 0, np.exp(-1.0 / zz), 0.0)

    def fp(z):
        zz = np.where(z > 0, z, 1.0)
        return np.where(z > 0, np.exp(-1.0 / zz) / zz**2, 0.0)

    a, b = f(2.0 - au), f(au - 1.0)
    da, db = -fp(2.0 - au), fp(au - 1.0)
    denom = np.where(a + b > 0, a + b, 1.0)
    val = (da * (a + b) - a * (da + db)) / denom**2
    return np.sign(u) * val


def cutoff_chi(path: GridPath, m: int, theta: float, lam: float, delta: float) -> tuple[float, float]:
    """chi(lam^{2 m delta} Gamma_bar^{4m}) and the H-norm of its gradient."""
    if not 2.0 / 3.0 < delta < 1.0:
        raise BadArgsError("delta must lie in (2/3, 1)")
    lift = lift_piecewise_linear(path)
    g1, g2 = gamma_functionals(lift, m, theta)
    arg = lam ** (2 * m * delta) * (g1 + g2)
    val = float(smooth_step(arg))
    if arg <= 1.0 or arg >= 2.0:
        return val, 0.0
    grad = smooth_step_derivative(arg) * lam ** (2 * m * delta) * gamma_gradient(path, m, theta)
    # H-gradient has increments dt * grad, so its H-norm is sqrt(dt * sum grad^2)
    return val, float(math.sqrt(path.dt * np.sum(grad**2)))


@dataclass
class NormReport:
    holder_alpha: float
    besov_m_theta: float
    gamma_bar: float
    p_variation: float
    params: dict


def path_norms(w, alpha: float, m: int, theta: float, p: float) -> NormReport:
    lift = w if isinstance(w, LeveledLift) else lift_piecewise_linear(w)
    _check_m_theta(m, theta)
    g1, g2 = gamma_functionals(lift, m, theta)
    return NormReport(
        holder_alpha=holder_norm(lift.base, alpha),
        besov_m_theta=g1 ** (1.0 / (4 * m)),
        gamma_bar=(g1 + g2) ** (1.0 / (4 * m)),
        p_variation=p_variation(lift.base.values, p),
        params={"alpha": alpha, "m": m, "theta": theta, "p": p},
    )


# --------------------------------------------------------------- sampling


def worker_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for (seed, task index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)]))


def sample_brownian(level: int, lam: float, seed, d: int = 3, index: int = 0) -> GridPath:
    """Brownian path with variance 2^{-level} / lam per step in each coordinate."""
    if level > 20:
        raise ResolutionError("level must be <= 20")
    rng = seed if isinstance(seed, np.random.Generator) else worker_rng(seed, index)
    inc = rng.standard_normal((2**level, d)) * math.sqrt(2.0**-level / lam)
    return GridPath.from_increments(inc)


# ------------------------------------------------------------ domain functionals


def domain_functionals(gamma: np.ndarray, K: int, m: int, theta: float, beta: float) -> tuple[float, float, float]:
    """(phi_inf_K, phi_B_m_theta, phi_H_beta) of a matrix path on a dyadic grid."""
    g = np.asarray(gamma)
    M = g.shape[0] - 1
    flat = g.reshape(M + 1, -1)
    t = np.linspace(0, 1, M + 1)

    def dist(a, b):
        return np.linalg.norm(flat[a] - flat[b], axis=-1)

    phi_inf = 0.0
    for i in range(K + 1):
        idx = np.nonzero((t >= i / K - 1e-15) & (t <= (i + 1) / K + 1e-15))[0]
        if len(idx) > 1:
            blk = flat[idx]
            dd = np.linalg.norm(blk[:, None, :] - blk[None, :, :], axis=-1)
            phi_inf = max(phi_inf, float(dd.max()))
    s, tt = _pair_grid(M)
    h = 1.0 / M
    dd = dist(tt, s)
    besov = float(np.sum(dd ** (4 * m) * h * h / ((tt - s) * h) ** (2 + 2 * m * theta))) ** (1.0 / (4 * m))
    hold = float(np.max(dd / ((tt - s) * h) ** beta))
    return phi_inf, besov, hold
