"""
Sparse multivariate polynomials with exact rational coefficients and the
Newton-polytope operations used by the continuation.

The envelope of a polynomial is the downward closure of the convex hull of
its exponents. A monomial is extremal when it is a vertex of that envelope
on every coordinate face that contains it (see :func:`extremal_monomials`).
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._lp import feasible
from .errors import ParseError

__all__ = [
    "MultiPoly",
    "PolytopeInfo",
    "CoercivityReport",
    "parse_poly",
    "support",
    "extremal_monomials",
    "split_extremal",
    "homogenize",
    "shift_remainder",
    "coercive_check",
]

Index = tuple[int, ...]


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10**12) if c != int(c) else Fraction(int(c))
    return Fraction(c)


class MultiPoly:
    """Polynomial in ``n`` variables stored as {exponent tuple: Fraction}."""

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Sequence[int], object] | None = None):
        if n < 1:
            raise ValueError("a polynomial needs at least one variable")
        clean: dict[Index, Fraction] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"exponent {alpha} does not have {n} entries")
            if any(a < 0 for a in alpha):
                raise ValueError("exponents must be non-negative")
            c = _frac(c)
            if c:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
                if not clean[alpha]:
                    del clean[alpha]
        self.n = n
        self.terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, n: int, c) -> "MultiPoly":
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> "MultiPoly":
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1})

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "MultiPoly":
        return parse_poly(text, n)

    # basic queries
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(a) for a in self.terms)

    @property
    def min_degree(self) -> int:
        return min(sum(a) for a in self.terms) if self.terms else -1

    def is_homogeneous(self) -> bool:
        return len({sum(a) for a in self.terms}) <= 1

    def coefficient(self, alpha: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(alpha), Fraction(0))

    def pure_power_coefficients(self) -> list[Fraction]:
        """Coefficients of x_i^d for each variable i (zero when absent)."""
        d = self.degree
        out = []
        for i in range(self.n):
            alpha = [0] * self.n
            alpha[i] = d
            out.append(self.coefficient(alpha))
        return out

    def float_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponent matrix (terms, n) and float coefficient vector."""
        if not self.terms:
            return np.zeros((0, self.n), dtype=np.int64), np.zeros(0)
        keys = sorted(self.terms)
        return np.array(keys, dtype=np.int64), np.array([float(self.terms[k]) for k in keys])

    # arithmetic
    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, Fraction(0)) + c
        return MultiPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[Index, Fraction] = {}
        for a, c in self.terms.items():
            for b, e in other.terms.items():
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out.get(k, Fraction(0)) + c * e
        return MultiPoly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = MultiPoly.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.n != self.n:
                raise ValueError("arity mismatch")
            return other
        return MultiPoly.constant(self.n, other)

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.n == other.n and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.constant(self.n, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    # evaluation
    def __call__(self, *x):
        if len(x) == 1 and isinstance(x[0], (tuple, list)):
            x = tuple(x[0])
        if len(x) != self.n:
            raise ValueError(f"expected {self.n} arguments")
        # numpy integers would overflow silently; exact arithmetic needs Python ints
        x = tuple(int(v) if isinstance(v, np.integer) else v for v in x)
        total = 0
        for a, c in self.terms.items():
            term = c
            for xi, ai in zip(x, a):
                if ai:
                    term = term * xi**ai
            total = total + term
        return total

    def eval_int(self, points: np.ndarray) -> np.ndarray:
        """Exact values at integer points, returned as floats.

        Coefficients are brought to a common denominator so the sum is an
        integer computation; object arithmetic takes over when int64 could
        overflow.
        """
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.n)
        if not self.terms:
            return np.zeros(points.shape[0])
        den = math.lcm(*(c.denominator for c in self.terms.values()))
        keys = list(self.terms)
        nums = [int(self.terms[a] * den) for a in keys]
        bound = int(np.abs(points).max(initial=0)) + 1
        worst = sum(abs(c) for c in nums) * bound ** max(self.degree, 0)
        arr = points if worst < 2**62 else points.astype(object)
        total = np.zeros(points.shape[0], dtype=arr.dtype)
        for a, c in zip(keys, nums):
            term = np.full(points.shape[0], c, dtype=arr.dtype)
            for i, ai in enumerate(a):
                if ai:
                    term = term * arr[:, i] ** ai
            total = total + term
        return np.asarray(total, dtype=float) / den

    def eval_float(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.n)
        exps, coefs = self.float_terms()
        if not len(coefs):
            return np.zeros(points.shape[0])
        return (np.prod(points[:, None, :] ** exps[None, :, :], axis=2) * coefs).sum(axis=1)

    # transformations
    def compose_affine(self, scale: Sequence, shift: Sequence) -> "MultiPoly":
        """p(scale_1 x_1 + shift_1, ..., scale_n x_n + shift_n)."""
        result: dict[Index, Fraction] = {}
        for a, c in self.terms.items():
            factors = []
            for i, ai in enumerate(a):
                s, b = _frac(scale[i]), _frac(shift[i])
                factors.append(
                    [(j, math.comb(ai, j) * s**j * b ** (ai - j)) for j in range(ai + 1)]
                )
            for combo in itertools.product(*factors):
                k = tuple(j for j, _ in combo)
                v = c
                for _, f in combo:
                    v *= f
                result[k] = result.get(k, Fraction(0)) + v
        return MultiPoly(self.n, result)

    def specialize_last(self, value) -> "MultiPoly":
        """Substitute ``value`` for the last variable."""
        if self.n < 2:
            raise ValueError("cannot drop the only variable")
        value = _frac(value)
        out: dict[Index, Fraction] = {}
        for a, c in self.terms.items():
            k = a[:-1]
            out[k] = out.get(k, Fraction(0)) + c * value ** a[-1]
        return MultiPoly(self.n - 1, out)

    def __repr__(self):
        return f"MultiPoly({self.n}, {self!s})"

    def __str__(self):
        if not self.terms:
            return "0"
        names = _var_names(self.n)
        parts = []
        for a in sorted(self.terms, key=lambda k: (-sum(k), [-v for v in k])):
            c = self.terms[a]
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(a) if e
            )
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = str(mag) if not mono else (mono if mag == 1 else f"{mag}*{mono}")
            parts.append((sign, body))
        head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return head + "".join(f" {s} {b}" for s, b in parts[1:])


_LETTERS = "xyzwuv"


def _var_names(n: int) -> list[str]:
    if n <= len(_LETTERS):
        return list(_LETTERS[:n])
    return [f"x{i + 1}" for i in range(n)]


_TERM = re.compile(r"([+-])?\s*([^+-]+)")
_NUMBER = re.compile(r"^\d+(?:\.\d+)?(?:/\d+)?$")
_FACTOR = re.compile(r"^([a-z]\d*)(?:(?:\^|\*\*)(\d+))?$")


def parse_poly(text: str, n: int | None = None) -> MultiPoly:
    """Parse a sum of terms such as ``5*x^2 - x - 1`` or ``x1^2*x2 + 3/2``.

    Variables are either x1, x2, ... or the letters x, y, z, w, u, v (in
    that order); the two styles cannot be mixed.
    """
    src = text.replace("**", "^").replace(" ", "")
    if not src:
        raise ParseError("empty polynomial")
    if src[0] not in "+-":
        src = "+" + src
    pos = 0
    raw_terms = []
    for m in re.finditer(r"([+-])([^+-]+)", src):
        if m.start() != pos:
            raise ParseError(f"cannot parse polynomial {text!r}")
        pos = m.end()
        raw_terms.append((m.group(1), m.group(2)))
    if pos != len(src):
        raise ParseError(f"cannot parse polynomial {text!r}")

    parsed = []
    indexed = lettered = False
    for sign, body in raw_terms:
        coef = Fraction(-1 if sign == "-" else 1)
        powers: dict[int, int] = {}
        for factor in body.split("*"):
            if not factor:
                raise ParseError(f"empty factor in {text!r}")
            if _NUMBER.match(factor):
                coef *= Fraction(factor)
                continue
            fm = _FACTOR.match(factor)
            if not fm:
                raise ParseError(f"bad factor {factor!r} in {text!r}")
            name, exp = fm.group(1), int(fm.group(2) or 1)
            if len(name) > 1:
                if name[0] != "x" or int(name[1:]) < 1:
                    raise ParseError(f"bad variable {name!r}")
                idx = int(name[1:]) - 1
                indexed = True
            else:
                if name not in _LETTERS:
                    raise ParseError(f"unknown variable {name!r}")
                idx = _LETTERS.index(name)
                lettered = True
            powers[idx] = powers.get(idx, 0) + exp
        parsed.append((coef, powers))
    if indexed and lettered:
        raise ParseError("mixing x1, x2, ... with letter variables is not allowed")
    used = max((max(p) + 1 for _, p in parsed if p), default=1)
    arity = used if n is None else n
    if arity < used:
        raise ParseError(f"polynomial uses {used} variables but arity {n} was requested")
    terms: dict[Index, Fraction] = {}
    for coef, powers in parsed:
        alpha = tuple(powers.get(i, 0) for i in range(arity))
        terms[alpha] = terms.get(alpha, Fraction(0)) + coef
    return MultiPoly(arity, terms)


def support(p: MultiPoly) -> set[Index]:
    return set(p.terms)


@dataclass(frozen=True)
class PolytopeInfo:
    support: frozenset
    extremal: frozenset
    degree: int

    @property
    def min_extremal_degree(self) -> int:
        return min(sum(a) for a in self.extremal)


def _dominated(alpha: Index, others: Iterable[Index]) -> bool:
    """Is alpha in conv(others) - R_+^n ?  Exact LP feasibility."""
    others = list(others)
    if not others:
        return False
    n = len(alpha)
    k = len(others)
    # variables: lambda_1..lambda_k, slack u_1..u_n; rows: n coordinates + sum(lambda) = 1
    a_eq = []
    for i in range(n):
        row = [Fraction(b[i]) for b in others] + [Fraction(-1 if j == i else 0) for j in range(n)]
        a_eq.append(row)
    a_eq.append([Fraction(1)] * k + [Fraction(0)] * n)
    b_eq = [Fraction(v) for v in alpha] + [Fraction(1)]
    return feasible(a_eq, b_eq)


def extremal_monomials(p: MultiPoly) -> PolytopeInfo:
    """Flag the extremal exponents of ``p``.

    An exponent alpha is kept unless it is dominated, on every coordinate
    face containing it, by a convex combination of the other exponents on
    that face. Testing only the full space would discard x and y in
    x^2*y + x + y, whose envelope faces {x = 0} and {y = 0} they span.
    """
    if p.is_zero():
        raise ValueError("the zero polynomial has no Newton polytope")
    supp = sorted(p.terms)
    n = p.n
    extremal = set()
    for alpha in supp:
        others = [b for b in supp if b != alpha]
        zeros = [i for i in range(n) if alpha[i] == 0]
        keep = False
        for size in range(len(zeros) + 1):
            for z in itertools.combinations(zeros, size):
                if len(z) == n:
                    continue
                face = [b for b in others if all(b[i] == 0 for i in z)]
                if not _dominated(alpha, face):
                    keep = True
                    break
            if keep:
                break
        if keep:
            extremal.add(alpha)
    return PolytopeInfo(frozenset(supp), frozenset(extremal), p.degree)


def split_extremal(p: MultiPoly) -> tuple[MultiPoly, MultiPoly]:
    """Return (p0, res) with p0 the sum of the extremal monomials of p."""
    ext = extremal_monomials(p).extremal
    p0 = MultiPoly(p.n, {a: c for a, c in p.terms.items() if a in ext})
    res = MultiPoly(p.n, {a: c for a, c in p.terms.items() if a not in ext})
    return p0, res


def homogenize(p: MultiPoly) -> MultiPoly:
    """Pad every term with a new last variable up to the total degree."""
    if p.is_zero():
        raise ValueError("cannot homogenize the zero polynomial")
    d = p.degree
    return MultiPoly(p.n + 1, {a + (d - sum(a),): c for a, c in p.terms.items()})


def shift_remainder(p: MultiPoly, beta: Sequence[int], q: int) -> MultiPoly:
    """p_beta = q^-d (p(q x + beta) - p(q x)) for homogeneous p of degree d.

    Satisfies p(q x + beta) = q^d (p(x) + p_beta(x)) identically.
    """
    if p.is_zero() or not p.is_homogeneous():
        raise ValueError("shift_remainder needs a non-zero homogeneous polynomial")
    beta = tuple(beta)
    if len(beta) != p.n:
        raise ValueError("digit tuple has the wrong length")
    d = p.degree
    shifted = p.compose_affine([q] * p.n, beta)
    base = p.compose_affine([q] * p.n, [0] * p.n)
    return (shifted - base) * Fraction(1, q**d)


@dataclass(frozen=True)
class CoercivityReport:
    coercive: bool
    min_abs: float
    argmin: tuple[int, ...]
    witness: tuple[int, ...] | None
    reason: str

    def __bool__(self):
        return self.coercive


def shell_points(n: int, radius: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Points of the sup-norm shell max_i x_i == radius in N^n."""
    if n == 1:
        return np.array([[radius]], dtype=np.int64)
    if radius == 0:
        return np.zeros((1, n), dtype=np.int64)
    total = (radius + 1) ** n - radius**n
    if total <= samples:
        grid = np.array(list(itertools.product(range(radius + 1), repeat=n)), dtype=np.int64)
        return grid[grid.max(axis=1) == radius]
    # structured points: rays through small rational directions, then random fill
    pts = []
    for direction in itertools.product(range(5), repeat=n):
        if max(direction) == 4:
            pts.append([radius * v // 4 for v in direction])
    rand = rng.integers(0, radius + 1, size=(samples, n))
    face = rng.integers(0, n, size=samples)
    rand[np.arange(samples), face] = radius
    pts = np.vstack([np.array(pts, dtype=np.int64), rand])
    return np.unique(pts, axis=0)


def coercive_check(p: MultiPoly, box_limit: int = 10_000, samples: int = 400,
                   seed: int = 0) -> CoercivityReport:
    """Heuristic test that |p(x)| grows without bound on N^n.

    Extremal coefficients must share one sign, and the minimum of |p| over
    sampled sup-norm shells must keep growing out to ``box_limit``.
    """
    if p.is_zero():
        return CoercivityReport(False, 0.0, (0,) * p.n, (0,) * p.n, "zero polynomial")
    rng = np.random.default_rng(seed)
    radii = sorted({0, 1, 2} | {int(v) for v in np.geomspace(4, max(box_limit, 4), 12)})
    shell_min = []
    best = (math.inf, (0,) * p.n)
    for rad in radii:
        pts = shell_points(p.n, rad, samples, rng)
        vals = np.abs(p.eval_int(pts))
        i = int(np.argmin(vals))
        shell_min.append((float(vals[i]), tuple(int(v) for v in pts[i])))
        if vals[i] < best[0]:
            best = (float(vals[i]), tuple(int(v) for v in pts[i]))

    ext = extremal_monomials(p).extremal
    signs = {p.terms[a] > 0 for a in ext}
    far = shell_min[len(shell_min) // 2:]
    if len(signs) > 1:
        witness = min(far, key=lambda t: t[0])[1]
        return CoercivityReport(False, best[0], best[1], witness,
                                "extremal coefficients have mixed signs")
    for (m0, _), (m1, pt) in zip(far, far[1:]):
        if m1 <= m0:
            return CoercivityReport(False, best[0], best[1], pt,
                                    "sampled shell minimum stopped growing")
    return CoercivityReport(True, best[0], best[1], None, "ok")
