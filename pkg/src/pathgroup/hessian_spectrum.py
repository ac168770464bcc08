"""Spectrum of ad(xi) and of the energy Hessian I + T_xi at a geodesic.

(T_xi h)(t) = int_0^t [h, xi] ds - t int_0^1 [h, xi] ds on H_{0,0} (x) g.
Closed form: Xi(xi) = {1 +- zeta_i / m, each twice} U {1 repeated forever},
where ad(xi) has rotation blocks with angular speeds 2 pi zeta_i.
A Galerkin matrix in the sine basis of H_{0,0} provides an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError
from .lie_core import ad_matrix

INFINITE = math.inf
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class SkewSpectrum:
    zero_multiplicity: int
    positive_pairs: list = field(default_factory=list)  # [(zeta, mult)]

    @property
    def zetas(self) -> list[float]:
        out = []
        for z, mult in self.positive_pairs:
            out.extend([z] * mult)
        return out


@dataclass(frozen=True)
class HessianLine:
    value: float
    multiplicity: float  # int, or INFINITE for the value-1 tier


def ad_spectrum(xi: np.ndarray, tol: float = 1e-9) -> SkewSpectrum:
    """Read the zeta_i off the eigenvalues of ad(xi)^2 (symmetric, <= 0)."""
    k = ad_matrix(np.asarray(xi, float))
    sq = k @ k
    sq = 0.5 * (sq + sq.T)
    ev = np.linalg.eigvalsh(sq)
    if ev.max() > 1e-10 * max(1.0, abs(ev).max()):
        raise ArithmeticError("ad(xi)^2 is not negative semidefinite")
    scale = max(1.0, float(abs(ev).max()))
    zeros = int(np.sum(np.abs(ev) <= tol * scale))
    pos = np.sort(np.sqrt(np.clip(-ev[np.abs(ev) > tol * scale], 0, None)) / (2 * np.pi))
    # every rotation block contributes the same zeta twice
    pairs: list[tuple[float, int]] = []
    i = 0
    while i < len(pos):
        j = i
        while j < len(pos) and abs(pos[j] - pos[i]) <= 1e-9 * max(1.0, pos[i]):
            j += 1
        count = j - i
        if count % 2:
            raise ArithmeticError("unpaired rotation eigenvalue")
        pairs.append((float(np.mean(pos[i:j])), count // 2))
        i = j
    return SkewSpectrum(zeros, pairs)


def hessian_eigenvalues(xi: np.ndarray, cap: float, m_max: int = 100) -> list[HessianLine]:
    """Values of Xi(xi) with |value| <= cap, ascending; includes (1, INFINITE).

    For cap >= 1 the values 1 +- zeta/m accumulate at 1, so the listing is
    truncated at m <= m_max.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    spec = ad_spectrum(xi)
    lines: dict[float, float] = {}
    for zeta, mult in spec.positive_pairs:
        for m in range(1, m_max + 1):
            for val in (1 - zeta / m, 1 + zeta / m):
                if abs(val) <= cap:
                    key = round(val, 13)
                    lines[key] = lines.get(key, 0) + 2 * mult
    out = [HessianLine(v, mult) for v, mult in lines.items()]
    if 1.0 <= cap:
        out.append(HessianLine(1.0, INFINITE))
    out.sort(key=lambda l: (l.value, l.multiplicity))
    return out


def negative_hessian_values(xi: np.ndarray) -> list[HessianLine]:
    """All negative values of Xi(xi): 1 - zeta/m < 0 happens for m < zeta only."""
    spec = ad_spectrum(xi)
    out = []
    for zeta, mult in spec.positive_pairs:
        for m in range(1, int(math.ceil(zeta)) + 1):
            val = 1 - zeta / m
            if abs(val) < DEGENERACY_TOL:
                raise DegeneracyError(f"Hessian value within {DEGENERACY_TOL} of 0 at m={m}")
            if val < 0:
                out.append(HessianLine(val, 2 * mult))
    out.sort(key=lambda l: l.value)
    return out


def morse_index(xi: np.ndarray) -> int:
    return int(sum(l.multiplicity for l in negative_hessian_values(xi)))


def sine_coupling(modes: int) -> np.ndarray:
    """K[m, n] = int_0^1 phi_m(t) phi_n'(t) dt for phi_m = sqrt(2) sin(m pi t) / (m pi)."""
    m = np.arange(1, modes + 1)[:, None].astype(float)
    n = np.arange(1, modes + 1)[None, :].astype(float)
    odd = ((m + n) % 2 == 1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(m != n, 4.0 * odd / (np.pi**2 * (m**2 - n**2)), 0.0)
    return k


def galerkin_hessian(xi: np.ndarray, modes: int) -> np.ndarray:
    """Matrix of I + T_xi in the basis phi_m (x) e_a, index (m - 1) * d + a.

    <T(phi_m e_a), phi_n e_b>_H = ([e_a, xi], e_b) * int phi_m phi_n' dt,
    the constant part of d/dt T h integrates to zero against phi_n'.
    """
    if modes < 1:
        raise ValueError("modes must be >= 1")
    xi = np.asarray(xi, float)
    d = xi.shape[-1]
    c = -ad_matrix(xi).T  # c[a, b] = ([e_a, xi], e_b)
    t = np.kron(sine_coupling(modes), c)
    t = 0.5 * (t + t.T)
    return np.eye(modes * d) + t


def galerkin_eigen(xi: np.ndarray, modes: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the Galerkin Hessian."""
    return np.linalg.eigh(galerkin_hessian(xi, modes))


def closed_form_values(xi: np.ndarray, m_max: int) -> np.ndarray:
    """Multiset {1 +- zeta/m : m <= m_max} (each doubled) as a sorted array."""
    spec = ad_spectrum(xi)
    vals = []
    for zeta, mult in spec.positive_pairs:
        for m in range(1, m_max + 1):
            vals.extend([1 - zeta / m] * (2 * mult) + [1 + zeta / m] * (2 * mult))
    return np.sort(np.array(vals))
