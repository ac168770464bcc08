"""Exact spectral sets for SU(2) geodesics.

Every value here has the form p + q*theta with rational p, q and theta a
formally irrational symbol; the configured rational literal is used only for
numeric ordering and search budgets.  Because {1, theta} is treated as
Q-linearly independent, equality is componentwise.

For the geodesic xi(k) write c = |theta(k)| = 2|theta + k|.  Mode m of the
Hessian contributes the quanta 1 + c/m and |1 - c/m| (each with two copies);
the value-1 tier contributes the integer shift n with infinite multiplicity.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable

from .errors import DegeneracyError, IllPosedCapError, InconclusiveError, PreconditionError

NODE_LIMIT = 10_000_000
DIST_MARGIN = 1e-12


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**12)


@dataclass(frozen=True, order=False)
class AffineValue:
    """p + q*theta with exact rational coefficients."""

    p: Fraction
    q: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "p", _frac(self.p))
        object.__setattr__(self, "q", _frac(self.q))

    def __add__(self, other):
        other = as_affine(other)
        return AffineValue(self.p + other.p, self.q + other.q)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_affine(other)
        return AffineValue(self.p - other.p, self.q - other.q)

    def __rsub__(self, other):
        return as_affine(other) - self

    def __neg__(self):
        return AffineValue(-self.p, -self.q)

    def __mul__(self, k):
        k = _frac(k)
        return AffineValue(self.p * k, self.q * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        k = _frac(k)
        return AffineValue(self.p / k, self.q / k)

    def numeric(self, theta) -> float:
        return float(self.p + self.q * _frac(theta)) if not isinstance(theta, float) else (
            float(self.p) + float(self.q) * theta
        )

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def to_json(self) -> dict:
        return {"p": str(self.p), "q": str(self.q)}

    def __str__(self):
        if self.q == 0:
            return str(self.p)
        sign = "+" if self.q > 0 else "-"
        return f"{self.p} {sign} {abs(self.q)}*theta"


def as_affine(x) -> AffineValue:
    if isinstance(x, AffineValue):
        return x
    return AffineValue(_frac(x), Fraction(0))


def sort_key(v: AffineValue, theta) -> tuple:
    return (v.numeric(theta), v.q, v.p)


# ---------------------------------------------------------------- geodesic data


def abs_theta_k(k: int) -> AffineValue:
    """|theta(k)| = 2|theta + k| for 0 < theta < 1/2."""
    return AffineValue(2 * k, 2) if k >= 0 else AffineValue(2 * abs(k), -2)


def negative_mode_count(k: int) -> int:
    """Number of modes m with 1 - |theta(k)|/m < 0."""
    return 2 * k if k >= 0 else 2 * abs(k) - 1


def _harmonic(lo: int, hi: int) -> Fraction:
    return sum((Fraction(1, m) for m in range(lo, hi + 1)), Fraction(0))


def e_zero(k: int, theta=None) -> AffineValue:
    """Bottom E_0(theta(k)) of the spectrum: sum of |negative Hessian values|."""
    if k >= 0:
        return AffineValue(4 * k * _harmonic(2, 2 * k), 4 * _harmonic(1, 2 * k))
    a = abs(k)
    return AffineValue(2 * (2 * a * _harmonic(2, 2 * a - 1) + 1), -4 * _harmonic(1, 2 * a - 1))


def e_zero_from_modes(k: int) -> AffineValue:
    """Independent route: twice the sum of c/m - 1 over negative modes."""
    c = abs_theta_k(k)
    total = AffineValue(0)
    for m in range(1, negative_mode_count(k) + 1):
        total = total + (c / m - 1) * 2
    return total


def _check_theta(theta) -> Fraction:
    th = _frac(theta)
    if not 0 < th < Fraction(1, 2):
        raise PreconditionError("theta must lie in (0, 1/2)")
    return th


@dataclass(frozen=True)
class Quantum:
    kind: str  # "low" (c/m - 1), "plus" (1 + c/m), "minus" (1 - c/m), "int"
    m: int
    value: AffineValue


def quanta(k: int, mode_cutoff: int) -> list[Quantum]:
    c = abs_theta_k(k)
    low = negative_mode_count(k)
    out = []
    for m in range(1, mode_cutoff + 1):
        if m <= low:
            out.append(Quantum("low", m, c / m - 1))
        else:
            val = 1 - c / m
            if val.is_zero():
                raise DegeneracyError(f"degenerate Hessian value at m={m}")
            out.append(Quantum("minus", m, val))
        out.append(Quantum("plus", m, c / m + 1))
    return out


# --------------------------------------------------------------- multisets


@dataclass
class SpectrumItem:
    value: AffineValue
    multiplicity: int  # finite count from the n = 0 tier
    infinite: bool = False  # also reachable with an integer shift n >= 1

    def to_json(self, theta) -> dict:
        d = self.value.to_json()
        d["mult"] = "inf" if self.infinite else self.multiplicity
        d["value"] = self.value.numeric(theta)
        return d


@dataclass
class SpectrumMultiset:
    theta: Fraction
    cap: float
    items: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def values(self) -> set:
        return {(it.value.p, it.value.q) for it in self.items}

    def numeric(self) -> list[float]:
        return [it.value.numeric(self.theta) for it in self.items]

    def to_json(self) -> dict:
        return {
            "theta": str(self.theta),
            "cap": self.cap,
            "items": [it.to_json(self.theta) for it in self.items],
            **self.meta,
        }


def _enumerate(k: int, theta: Fraction, R: float, mode_cutoff: int, min_int: int, max_int: int | None):
    """DP over quantum types: {(p, q): [mult, n_min]} for values <= R.

    Each non-integer type has two copies, so using it j times contributes a
    factor j + 1 to the multiplicity.
    """
    th = float(theta)
    e0 = e_zero(k)
    states: dict[AffineValue, list] = {}
    if e0.numeric(th) > R + 1e-12:
        return states
    states[e0] = [1]
    tol = 1e-12
    for qt in quanta(k, mode_cutoff):
        v = qt.value.numeric(th)
        new: dict[AffineValue, list] = {}
        for val, (mult,) in states.items():
            base = val.numeric(th)
            j = 0
            cur = val
            while base + j * v <= R + tol:
                entry = new.setdefault(cur, [0])
                entry[0] += mult * (j + 1)
                j += 1
                cur = cur + qt.value
        states = new
    # integer tier
    result: dict[AffineValue, list] = {}
    for val, (mult,) in states.items():
        base = val.numeric(th)
        n = 0
        while base + n <= R + tol and (max_int is None or n <= max_int):
            if n >= min_int:
                key = val + n
                entry = result.setdefault(key, [0, False])
                if n == 0:
                    entry[0] += mult
                else:
                    entry[1] = True
            n += 1
    return result


def _to_multiset(states, theta, R, meta=None) -> SpectrumMultiset:
    items = [SpectrumItem(v, m, inf) for v, (m, inf) in states.items()]
    items.sort(key=lambda it: sort_key(it.value, theta))
    return SpectrumMultiset(theta, R, items, meta or {})


def lambda_set(k: int, R: float, mode_cutoff: int, theta=Fraction(3, 20)) -> SpectrumMultiset:
    """Lambda(theta(k)) below R using Hessian modes m <= mode_cutoff."""
    theta = _check_theta(theta)
    if mode_cutoff < max(abs(2 * k), abs(2 * k + 1)):
        raise PreconditionError("mode_cutoff must cover all negative modes")
    if R < 0:
        return SpectrumMultiset(theta, R, [], {"mode_cutoff": mode_cutoff})
    states = _enumerate(k, theta, R, mode_cutoff, 0, None)
    return _to_multiset(states, theta, R, {"mode_cutoff": mode_cutoff, "k": k})


def accumulation_set(k: int, R: float, mode_cutoff: int, theta=Fraction(3, 20)) -> SpectrumMultiset:
    """Lambda^a = Lambda + N (n >= 1), as a set (multiplicity 1)."""
    theta = _check_theta(theta)
    if mode_cutoff < max(abs(2 * k), abs(2 * k + 1)):
        raise PreconditionError("mode_cutoff must cover all negative modes")
    if R < 1:
        return SpectrumMultiset(theta, R, [], {"mode_cutoff": mode_cutoff})
    base = lambda_set(k, R - 1, mode_cutoff, theta)
    th = float(theta)
    vals: set[AffineValue] = set()
    for it in base.items:
        n = 1
        while it.value.numeric(th) + n <= R + 1e-12:
            vals.add(it.value + n)
            n += 1
    items = [SpectrumItem(v, 1, True) for v in vals]
    items.sort(key=lambda it: sort_key(it.value, theta))
    return SpectrumMultiset(theta, R, items, {"mode_cutoff": mode_cutoff, "k": k})


def accumulation_set_direct(k: int, R: float, mode_cutoff: int, theta=Fraction(3, 20)) -> SpectrumMultiset:
    """Same set as accumulation_set, from an enumeration forcing n >= 1."""
    theta = _check_theta(theta)
    states = _enumerate(k, theta, R, mode_cutoff, 1, None)
    items = [SpectrumItem(v, 1, True) for v in states]
    items.sort(key=lambda it: sort_key(it.value, theta))
    return SpectrumMultiset(theta, R, items, {"mode_cutoff": mode_cutoff, "k": k})


# ------------------------------------------------------------ distance to Lambda^a


class _AccumulationIndex:
    """Search structure for dist(x, Lambda(theta(k))^a) with modes <= M."""

    def __init__(self, k: int, theta: Fraction, M: int):
        self.k = k
        self.theta = theta
        self.th = float(theta)
        self.M = M
        qs = quanta(k, M) + [Quantum("int", 0, AffineValue(1))]
        qs.sort(key=lambda q: q.value.numeric(self.th))
        self.qs = qs
        self.vals = [q.value.numeric(self.th) for q in qs]
        self.e0 = e_zero(k)
        self.minq = self.vals[0]

    def nearest(self, x: AffineValue, radius: float):
        """Closest element of the truncated Lambda^a to x, searched within radius.

        Returns (element or None, numeric distance).
        """
        target = x.numeric(self.th)
        best: list = [None, math.inf]
        vals, qs = self.vals, self.qs

        def visit(cur_val: float, cur: AffineValue):
            d = abs(target - cur_val)
            if d < best[1]:
                best[0], best[1] = cur, d

        def rec(cur_val: float, cur: AffineValue, idx: int):
            visit(cur_val, cur)
            room = target + radius - cur_val + 1e-12
            end = bisect.bisect_right(vals, room, lo=idx)
            if end == idx:
                return
            if 2 * vals[idx] > room:
                # only one more quantum fits: the closest one to the gap wins
                pos = bisect.bisect_left(vals, target - cur_val, lo=idx, hi=end)
                for j in (pos - 1, pos):
                    if idx <= j < end:
                        visit(cur_val + vals[j], cur + qs[j].value)
                return
            for j in range(idx, end):
                rec(cur_val + vals[j], cur + qs[j].value, j)

        start = self.e0 + 1  # n >= 1
        rec(start.numeric(self.th), start, 0)
        if best[1] > radius:
            return None, best[1]
        return best[0], best[1]


@dataclass
class SigmaResult:
    theta: Fraction
    items: list
    R: float
    r: float
    mode_cutoff: dict
    warnings: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(it.multiplicity for it in self.items)

    def to_json(self) -> dict:
        return {
            "theta": str(self.theta),
            "R": self.R,
            "r": self.r,
            "mode_cutoff": {str(k): v for k, v in self.mode_cutoff.items()},
            "N_R": self.count,
            "items": [it.to_json(self.theta) for it in self.items],
            "warnings": self.warnings,
        }


def sigma_set(ks: Iterable[int], R: float, r: float, theta=Fraction(3, 20)) -> SigmaResult:
    """Sigma_{R,r}: union of Lambda values in [0, R] minus open r-balls around Lambda^a.

    Any combination using a mode m with c/m < r sits within r of a point of
    Lambda + 1, so only modes m <= ceil(c / r) can survive.
    """
    theta = _check_theta(theta)
    ks = list(dict.fromkeys(ks))
    if not 0 < r < 1:
        raise PreconditionError("r must lie in (0, 1)")
    if R < 0:
        raise PreconditionError("R must be nonnegative")
    th = float(theta)
    R_aff = as_affine(_frac(R))
    warnings: list[str] = []
    cutoffs = {}
    candidates: dict[AffineValue, int] = {}
    for k in ks:
        c = abs_theta_k(k).numeric(th)
        mmax = max(math.ceil(c / r), max(abs(2 * k), abs(2 * k + 1)), 1)
        cutoffs[k] = mmax
        states = _enumerate(k, theta, R, mmax, 0, 0)
        for val, (mult, _) in states.items():
            if val == R_aff:
                raise IllPosedCapError(f"R = {R} belongs to Lambda(theta({k}))")
            if abs(val.numeric(th) - R) <= 1e-12:
                warnings.append(f"cap_tie: {val} equals R numerically at the literal theta")
            candidates[val] = candidates.get(val, 0) + mult
    indexes = {}
    for k in ks:
        c = abs_theta_k(k).numeric(th)
        M = max(64, 4 * cutoffs[k])
        indexes[k] = _AccumulationIndex(k, theta, M)
    kept = []
    for val, mult in candidates.items():
        excluded = False
        for k in ks:
            idx = indexes[k]
            near, dist = idx.nearest(val, 2 * r)
            if near is None:
                continue
            diff = val - near
            if diff.is_zero():
                excluded = True
                break
            if dist < r - DIST_MARGIN:
                excluded = True
                break
            # high modes beyond M move points by < c/M per quantum
            c = abs_theta_k(k).numeric(th)
            qmax = max(1, math.floor((R + r) / max(idx.minq, 1e-12)))
            slack = qmax * c / (idx.M + 1)
            if dist < r + slack or abs(dist - r) <= DIST_MARGIN:
                warnings.append(
                    f"r_continuity: {val} at distance {dist:.3g} from Lambda^a(k={k}), truncation slack {slack:.2g}"
                )
        if not excluded:
            kept.append(SpectrumItem(val, mult))
    kept.sort(key=lambda it: sort_key(it.value, theta))
    return SigmaResult(theta, kept, R, r, cutoffs, warnings)


def counting_function(ks: Iterable[int], R: float, r: float, theta=Fraction(3, 20)) -> int:
    return sigma_set(ks, R, r, theta).count


# ------------------------------------------------------------------ membership


@dataclass
class MembershipResult:
    member: bool
    witness: dict | None
    certificate: dict

    def __bool__(self):
        return self.member


def _signed_fraction_search(t: Fraction, q: int, mmin: int, low: int, counter: list, path: list):
    """Find <= q terms +1/m (any m) or -1/m (m > low), m >= mmin, summing to t.

    Terms are taken with non-decreasing denominators, so the first term has the
    largest magnitude and |t| <= q/m bounds it.
    """
    counter[0] += 1
    if counter[0] > NODE_LIMIT:
        raise InconclusiveError("membership search exceeded node limit")
    if t == 0:
        return list(path)
    if q == 0:
        return None
    if q == 1:
        if t.numerator in (1, -1):
            m = t.denominator
            if m >= mmin and (t > 0 or m > low):
                return path + [(1 if t > 0 else -1, m)]
        return None
    m_hi = math.floor(q / abs(t))
    for m in range(mmin, m_hi + 1):
        for sign in (1, -1):
            if sign < 0 and m <= low:
                continue
            path.append((sign, m))
            res = _signed_fraction_search(t - Fraction(sign, m), q - 1, m, low, counter, path)
            path.pop()
            if res is not None:
                return res
    return None


def member_lambda_plus_n(x, l: int, bound: float, theta=Fraction(3, 20), min_shift: int = 1) -> MembershipResult:
    """Decide x in Lambda(theta(l)) + {n >= min_shift} exactly.

    min_shift = 1 gives Lambda + N; min_shift = 0 gives Lambda itself.

    Write c = P + S*theta.  The theta part of the equation fixes
    t = sum(+1/m for plus and low quanta) - sum(1/m for high minus quanta),
    and the constant part then reads Q_plus + Q_high - Q_low + n = Z with Z an
    integer.  Low quanta are enumerated inside the numeric budget and the
    remaining signed unit-fraction problem is searched exhaustively.
    """
    theta = _check_theta(theta)
    th = float(theta)
    x = as_affine(x) if not isinstance(x, AffineValue) else x
    xn = x.numeric(th)
    if xn > bound + 1e-12:
        raise PreconditionError("target exceeds the search bound")
    c = abs_theta_k(l)
    P, S = c.p, c.q
    low = negative_mode_count(l)
    e0 = e_zero(l)
    cert = {"l": l, "bound": bound, "min_shift": min_shift, "nodes": 0}
    budget = xn - e0.numeric(th)
    if budget < -1e-12:
        cert["reason"] = "below E_0"
        return MembershipResult(False, None, cert)
    D = x.q - e0.q
    t = D / S
    Z = x.p - e0.p - P * t
    cert.update({"t": str(t), "Z": str(Z)})
    if Z.denominator != 1:
        cert["reason"] = "constant part not integral"
        return MembershipResult(False, None, cert)
    Z = int(Z)
    # smallest value of a non-low quantum: 1 + c/m > 1 or 1 - c/m with m > low
    cnum = c.numeric(th)
    # non-low quanta: 1 + c/m > 1, or 1 - c/m with m > low (smallest at m = low + 1)
    min_nonlow = min(1.0, 1 - cnum / (low + 1))
    low_vals = [(m, cnum / m - 1) for m in range(1, low + 1)]
    counter = [0]
    explored = []

    def low_rec(i: int, used: float, q_low: int, t_rem: Fraction, counts: dict):
        if i == len(low_vals):
            q_max = Z + q_low - min_shift
            q_budget = math.floor((budget - used) / min_nonlow + 1e-9) if min_nonlow > 0 else q_max
            q = min(q_max, q_budget)
            if q < 0:
                return None
            explored.append((dict(counts), str(t_rem), q))
            res = _signed_fraction_search(t_rem, q, 1, low, counter, [])
            if res is None:
                return None
            n = Z + q_low - len(res)
            return {"low": dict(counts), "terms": res, "n": n}
        m, v = low_vals[i]
        j = 0
        while used + j * v <= budget + 1e-12:
            counts_j = dict(counts)
            if j:
                counts_j[m] = j
            out = low_rec(i + 1, used + j * v, q_low + j, t_rem - Fraction(j, m), counts_j)
            if out is not None:
                return out
            j += 1
        return None

    res = low_rec(0, 0.0, 0, t, {})
    cert["nodes"] = counter[0]
    cert["low_assignments"] = len(explored)
    if res is None:
        cert["exhausted"] = True
        return MembershipResult(False, None, cert)
    plus, minus = {}, {}
    for sign, m in res["terms"]:
        if sign > 0:
            plus[m] = plus.get(m, 0) + 1
        else:
            minus[m] = minus.get(m, 0) + 1
    # low-range plus terms are "plus" quanta; high-range ones too
    witness = {"n": res["n"], "low": res["low"], "plus": plus, "high_minus": minus}
    assert reconstruct(l, witness) == x
    return MembershipResult(True, witness, cert)


def reconstruct(l: int, witness: dict) -> AffineValue:
    c = abs_theta_k(l)
    val = e_zero(l) + witness["n"]
    for m, cnt in witness["low"].items():
        val = val + (c / m - 1) * cnt
    for m, cnt in witness["plus"].items():
        val = val + (c / m + 1) * cnt
    for m, cnt in witness["high_minus"].items():
        val = val + (1 - c / m) * cnt
    return val


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(math.isqrt(p)) + 1))


def prime_target(k: int, M: int, p: int) -> AffineValue:
    """E_0(theta(k)) + M (1 + |theta(k)|/p)."""
    return e_zero(k) + (abs_theta_k(k) / p + 1) * M


def prime_criterion_check(k: int, M: int, p: int, l_range: Iterable[int], theta=Fraction(3, 20)):
    """True iff the prime-mode target avoids Lambda(theta(l)) + N for every l.

    Returns (ok, certificates) with one membership certificate per l.
    """
    theta = _check_theta(theta)
    l_range = list(l_range)
    if not is_prime(p):
        raise PreconditionError(f"{p} is not prime")
    th = float(theta)
    need = 2 * max([abs(k)] + [abs(l) for l in l_range] + [M * abs(th + k)])
    if not p > need:
        raise PreconditionError(f"p = {p} must exceed {need}")
    x = prime_target(k, M, p)
    bound = x.numeric(th)
    certs = {}
    ok = True
    for l in l_range:
        res = member_lambda_plus_n(x, l, bound, theta)
        certs[l] = res.certificate if not res.member else {"witness": res.witness}
        if res.member:
            ok = False
    return ok, certs


def lcm_upto(m: int) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), range(1, m + 1), 1)
