"""Matrix Lie group and algebra primitives for su(n) inside M(n, C).

Algebra elements are carried as real coefficient arrays of length
d = n**2 - 1 over a fixed orthonormal basis; the inner product is
(A, B) = Re tr(A B*).  Most routines accept stacked inputs of shape
(..., d) or (..., n, n) so that whole grid paths are processed at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import BranchError, CutLocusError, InvalidDimensionError

GROUP_TOL = 1e-10


@dataclass(frozen=True)
class SUAlgebra:
    """Basis data for su(n): basis matrices and structure constants."""

    n: int
    basis: np.ndarray  # (d, n, n) complex
    structure: np.ndarray  # f[a, b, c] = ([e_a, e_b], e_c)

    @property
    def d(self) -> int:
        return self.basis.shape[0]


def _gell_mann(n: int) -> np.ndarray:
    mats = []
    for j in range(n):
        for k in range(j + 1, n):
            a = np.zeros((n, n), complex)
            a[j, k], a[k, j] = 1.0, -1.0
            mats.append(a / math.sqrt(2.0))
            b = np.zeros((n, n), complex)
            b[j, k] = b[k, j] = 1j
            mats.append(b / math.sqrt(2.0))
    for l in range(1, n):
        diag = np.zeros(n, complex)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(1j * diag) / math.sqrt(l * (l + 1)))
    return np.array(mats)


@lru_cache(maxsize=None)
def algebra(n: int) -> SUAlgebra:
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"su(n) needs n >= 2, got {n}")
    basis = _gell_mann(int(n))
    comm = np.einsum("aij,bjk->abik", basis, basis)
    comm = comm - comm.transpose(1, 0, 2, 3)
    structure = np.einsum("abij,cij->abc", comm, basis.conj()).real
    basis.setflags(write=False)
    structure.setflags(write=False)
    return SUAlgebra(int(n), basis, structure)


def dim_to_n(d: int) -> int:
    n = int(round(math.sqrt(d + 1)))
    if n * n - 1 != d or n < 2:
        raise InvalidDimensionError(f"{d} is not dim su(n)")
    return n


def su_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of su(n) as a list of n x n matrices."""
    return list(algebra(n).basis)


def to_matrix(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, float)
    alg = algebra(dim_to_n(coeffs.shape[-1]))
    return np.tensordot(coeffs, alg.basis, axes=(-1, 0))


def from_matrix(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    alg = algebra(mat.shape[-1])
    return np.einsum("...ij,aij->...a", mat, alg.basis.conj()).real


def inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(u) * np.asarray(v), axis=-1)


def bracket(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Commutator [u, v] in coefficients."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    f = algebra(dim_to_n(u.shape[-1])).structure
    return np.einsum("...a,...b,abc->...c", u, v, f)


def ad_matrix(xi: np.ndarray) -> np.ndarray:
    """Matrix of ad(xi) acting on coefficient vectors: (ad xi) v = [xi, v]."""
    xi = np.asarray(xi, float)
    f = algebra(dim_to_n(xi.shape[-1])).structure
    return np.einsum("...a,abc->...cb", xi, f)


def _is_su2(arr: np.ndarray, axis_len: int) -> bool:
    return axis_len == 3


def group_exp(v: np.ndarray) -> np.ndarray:
    """Matrix exponential of algebra coefficients (stacked allowed)."""
    v = np.asarray(v, float)
    d = v.shape[-1]
    n = dim_to_n(d)
    x = to_matrix(v)
    if n == 2:
        # X^2 = -r^2 I with r = |v| / sqrt(2)
        r = np.linalg.norm(v, axis=-1) / math.sqrt(2.0)
        sinc = np.sinc(r / np.pi)
        eye = np.eye(2)
        return np.cos(r)[..., None, None] * eye + sinc[..., None, None] * x
    w, vecs = np.linalg.eigh(-1j * x)
    return np.einsum("...ij,...j,...kj->...ik", vecs, np.exp(1j * w), vecs.conj())


def _unitary_eig(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t, z = scipy.linalg.schur(x, output="complex")
    return np.diag(t), z


def group_log(x: np.ndarray, guard: float = 1e-9) -> np.ndarray:
    """Principal logarithm of a group element, returned as coefficients."""
    x = np.asarray(x, complex)
    if x.ndim > 2:
        return np.array([group_log(xx, guard) for xx in x])
    n = x.shape[-1]
    if n == 2:
        # x = cos r I + sin r / r X with tr X = 0
        c = np.clip(np.trace(x).real / 2.0, -1.0, 1.0)
        r = math.acos(c)
        if r > math.pi - guard:
            raise BranchError("eigenvalue phase at the branch cut")
        skew = (x - x.conj().T) / 2.0
        scale = 1.0 if r < 1e-300 else r / math.sin(r) if r > 1e-8 else 1.0 + r * r / 6
        return from_matrix(skew * scale)
    lam, z = _unitary_eig(x)
    phases = np.angle(lam)
    if np.any(np.abs(phases) > math.pi - guard):
        raise BranchError("eigenvalue phase at the branch cut")
    if abs(phases.sum()) > 1e-8:
        raise BranchError("principal logarithm leaves su(n)")
    mat = (z * (1j * phases)) @ z.conj().T
    return from_matrix(mat)


def adjoint_matrix(x: np.ndarray) -> np.ndarray:
    """Orthogonal d x d matrix of Ad(x) on coefficients (stacked allowed)."""
    x = np.asarray(x, complex)
    basis = algebra(x.shape[-1]).basis
    conj = np.einsum("...ij,bjk,...lk->...bil", x, basis, x.conj())
    return np.einsum("...bil,ail->...ab", conj, basis.conj()).real


def adjoint(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Ad(x) v = x v x^{-1}."""
    x = np.asarray(x, complex)
    m = to_matrix(v)
    return from_matrix(x @ m @ np.swapaxes(x.conj(), -1, -2))


def phi_matrix(v: np.ndarray) -> np.ndarray:
    """(e^{ad v} - 1) / ad v as d x d matrices (stacked allowed).

    This is the right-trivialized differential of exp: d/ds exp(v + s h)
    at s = 0 equals exp(v) * (Phi(-v) h) and (Phi(v) h) * exp(v).
    """
    v = np.asarray(v, float)
    d = v.shape[-1]
    k = ad_matrix(v)
    if d == 3:
        # ad v is a 3x3 skew matrix with K^3 = -phi^2 K, phi = sqrt(2)|v|
        phi = math.sqrt(2.0) * np.linalg.norm(v, axis=-1)
        small = phi < 1e-4
        ph = np.where(small, 1.0, phi)
        c1 = np.where(small, 0.5 - phi**2 / 24.0, (1.0 - np.cos(ph)) / ph**2)
        c2 = np.where(small, 1.0 / 6.0 - phi**2 / 120.0, (ph - np.sin(ph)) / ph**3)
        k2 = k @ k
        return np.eye(3) + c1[..., None, None] * k + c2[..., None, None] * k2
    w, vecs = np.linalg.eigh(-1j * k)
    z = 1j * w
    safe = np.where(np.abs(z) < 1e-8, 1.0, z)
    f = np.where(np.abs(z) < 1e-8, 1.0 + z / 2.0, np.expm1(safe) / safe)
    out = np.einsum("...ij,...j,...kj->...ik", vecs, f, vecs.conj())
    return out.real


def log_derivative(x: np.ndarray) -> np.ndarray:
    """log'(x) in right trivialization: d log(exp(s h) x)/ds at 0 applied to h."""
    return np.linalg.inv(phi_matrix(group_log(x)))


def polar_project(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest special unitary matrix (unitary polar factor, det fixed).

    Returns the projected matrices and the Frobenius defect ||m - proj||.
    """
    m = np.asarray(m, complex)
    u, _, vh = np.linalg.svd(m)
    q = u @ vh
    det = np.linalg.det(q)
    n = m.shape[-1]
    q = q * (det ** (-1.0 / n))[..., None, None]
    defect = np.linalg.norm(m - q, axis=(-2, -1))
    return q, defect


def group_distance(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))


def is_group_point(x: np.ndarray, tol: float = GROUP_TOL) -> bool:
    x = np.asarray(x, complex)
    n = x.shape[-1]
    unit = np.linalg.norm(x @ x.conj().T - np.eye(n)) < tol
    return bool(unit and abs(np.linalg.det(x) - 1.0) < tol)


@dataclass(frozen=True)
class DiagonalEndpoint:
    """Endpoint a = exp(2 pi i D[theta_1, ..., theta_n]) with sum theta = 0.

    Thetas may be Fractions (treated as exact symbols) or floats.
    """

    thetas: tuple

    def __post_init__(self):
        if len(self.thetas) < 2:
            raise InvalidDimensionError("need n >= 2 thetas")
        s = sum(self.thetas)
        if isinstance(s, Fraction) or isinstance(s, int):
            if s != 0:
                raise ValueError("thetas must sum to zero")
        elif abs(s) > 1e-12:
            raise ValueError("thetas must sum to zero")

    @classmethod
    def su2(cls, theta) -> "DiagonalEndpoint":
        return cls((theta, -theta))

    @property
    def n(self) -> int:
        return len(self.thetas)

    @property
    def regular(self) -> bool:
        for a, b in product(self.thetas, repeat=2):
            diff = a - b
            if diff == 0:
                continue
            if isinstance(diff, Fraction):
                if diff.denominator == 1:
                    return False
            elif abs(diff - round(diff)) < 1e-12:
                return False
        # equal thetas on distinct slots are a difference of 0, which is in Z
        return len(set(self.thetas)) == len(self.thetas)

    def matrix(self) -> np.ndarray:
        th = np.array([float(t) for t in self.thetas])
        return np.diag(np.exp(2j * np.pi * th))


def diagonal_algebra(phases: Sequence[float]) -> np.ndarray:
    """Coefficients of 2 pi i D[phases] (phases summing to zero)."""
    ph = np.asarray(phases, float)
    return from_matrix(np.diag(2j * np.pi * ph))


def enumerate_geodesics(endpoint: DiagonalEndpoint, norm_bound: float) -> list[np.ndarray]:
    """All xi = 2 pi i D[theta + k] (k integer, sum k = 0) with |xi| <= norm_bound."""
    if not endpoint.regular:
        raise CutLocusError("endpoint lies on the cut locus")
    if norm_bound < 0:
        return []
    th = np.array([float(t) for t in endpoint.thetas])
    n = len(th)
    # |xi|^2 = (2 pi)^2 sum (theta_i + k_i)^2 so each |theta_i + k_i| <= bound / 2 pi
    rad = norm_bound / (2 * np.pi)
    ranges = [range(math.floor(-rad - t) , math.ceil(rad - t) + 1) for t in th[:-1]]
    found = []
    for ks in product(*ranges):
        k = list(ks) + [-sum(ks)]
        ph = th + np.array(k)
        norm = 2 * np.pi * math.sqrt(float(np.sum(ph**2)))
        if norm <= norm_bound * (1 + 1e-14):
            found.append((norm, tuple(k), diagonal_algebra(ph)))
    found.sort(key=lambda t: (t[0], t[1]))
    return [f[2] for f in found]


def su2_geodesic(theta: float, k: int) -> np.ndarray:
    """xi(k) = 2 pi i D[theta + k, -(theta + k)] for SU(2)."""
    t = float(theta) + k
    return diagonal_algebra([t, -t])


def geodesic_energy(xi: np.ndarray) -> float:
    return 0.5 * float(np.dot(xi, xi))
