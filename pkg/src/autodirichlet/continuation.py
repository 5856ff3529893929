"""
Evaluation and analytic continuation of automatic Dirichlet series

    F_mu(s) = sum over x in N^n \\ {0} of A_x * x^mu / p(x)^s

where A_x is the kernel vector of a q-automatic sequence and p is a
polynomial that does not vanish on N^n \\ {0}.

Right of the abscissa the series is summed directly. Everywhere else the
decimation x = q z + y turns the tail of the series into a linear system
whose right-hand side involves the same kind of tails at s + k, with extra
monomial weights coming from the binomial expansion of
(1 + p_y(z)/p(z))^(-s). The tails are computed bottom-up: tails far to the
right are negligible and bounded analytically, and every level to the left
is obtained from the levels to its right.
"""
from __future__ import annotations

import cmath
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _exact
from .automaton import (
    AutomatonSpec,
    KernelSystem,
    digit_tuples,
    kernel_closure,
    lift_sequence,
)
from .errors import (
    AbscissaViolation,
    DepthExceeded,
    NearPole,
    NotCoercive,
    TruncationBudgetExceeded,
    ZeroDenominator,
)
from .polynomial import (
    MultiPoly,
    coercive_check,
    extremal_monomials,
    homogenize,
    shell_points,
    shift_remainder,
    split_extremal,
)

__all__ = [
    "Controls",
    "SeriesQuery",
    "EvalResult",
    "PoleLattice",
    "PoleCertificate",
    "abscissa",
    "direct_sum",
    "functional_matrix",
    "continue_eval",
    "extremal_split_eval",
    "theorem2_eval",
    "evaluate_many",
    "pole_lattice",
    "simple_pole_certificate",
    "functional_residual",
    "binom_neg",
]

EPS = np.finfo(float).eps
_MAX_DIRECT_POINTS = 20_000_000
_CIRCLE_RADIUS = 0.02
_CIRCLE_POINTS = 16


@dataclass(frozen=True)
class Controls:
    """Truncation controls.

    K: binomial truncation order per level. depth: maximal number of
    levels left of the abscissa. N0: head cube size (None picks one from
    the polynomial). tol: near-pole radius and budget for the k-tail.
    box: direct-sum box size. workers: threads for the direct sum.
    """

    K: int = 30
    depth: int = 8
    N0: int | None = None
    tol: float = 1e-6
    box: int = 100_000
    workers: int = 1
    block: int = 1 << 16

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.N0 is not None and self.N0 < 1:
            raise ValueError("N0 must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.box < 1:
            raise ValueError("box must be at least 1")
        if self.workers < 1 or self.block < 1:
            raise ValueError("workers and block must be positive")


@dataclass(frozen=True)
class SeriesQuery:
    kernel: KernelSystem
    p: MultiPoly
    s: complex
    mu: tuple[int, ...] | None = None
    controls: Controls = field(default_factory=Controls)

    def __post_init__(self):
        if self.p.n != self.kernel.n:
            raise ValueError("polynomial arity does not match the sequence")
        mu = (0,) * self.p.n if self.mu is None else tuple(int(v) for v in self.mu)
        if len(mu) != self.p.n or any(v < 0 for v in mu):
            raise ValueError("mu must be a non-negative multi-index of the right length")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "s", complex(self.s))


@dataclass
class EvalResult:
    value: complex
    err_estimate: float
    abscissa_used: float
    vector: np.ndarray | None = None
    truncation_report: list = field(default_factory=list)
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "err": self.err_estimate,
            "abscissa": self.abscissa_used,
            "method": self.method,
            "levels": self.truncation_report,
        }


def binom_neg(s: complex, kmax: int) -> np.ndarray:
    """C(-s, k) for k = 0..kmax, the coefficients of (1+u)^(-s)."""
    out = np.empty(kmax + 1, dtype=complex)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (-s - (k - 1)) / k
    return out


def _exact_zero_binom(s: complex, k: int) -> bool:
    """C(-s, k) vanishes exactly iff s is an integer in (-k, 0]."""
    return s.imag == 0 and s.real == round(s.real) and -k < s.real <= 0


def abscissa(p: MultiPoly, mu: Sequence[int] | None = None) -> float:
    """Heuristic abscissa of absolute convergence, (n + |mu|) / d_low.

    d_low is the smallest total degree among the extremal monomials, the
    slowest growth rate of |p| along a coordinate face.
    """
    mu = (0,) * p.n if mu is None else tuple(mu)
    d_low = extremal_monomials(p).min_extremal_degree
    if d_low == 0:
        return math.inf
    return (p.n + sum(mu)) / d_low


def _growth_constant(p: MultiPoly, d_low: int, radius: int) -> float:
    """Sampled min of |p(x)| / |x|_inf^d_low over shells beyond ``radius``."""
    rng = np.random.default_rng(1)
    best = math.inf
    for rad in (radius, 2 * radius, 4 * radius, 16 * radius, 64 * radius):
        pts = shell_points(p.n, rad, 300, rng)
        vals = np.abs(p.eval_int(pts)) / float(rad) ** d_low
        best = min(best, float(vals.min()))
    return best


def _box_blocks(n: int, box: int, block: int):
    total = (box + 1) ** n
    shape = (box + 1,) * n
    for start in range(0, total, block):
        flat = np.arange(start, min(start + block, total), dtype=np.int64)
        pts = np.stack(np.unravel_index(flat, shape), axis=1).astype(np.int64)
        if start == 0:
            pts = pts[1:]
        yield pts


def _weighted_sum(kernel: KernelSystem, p: MultiPoly, mu, s: complex, pts: np.ndarray):
    vals = p.eval_int(pts)
    if np.any(vals == 0):
        bad = pts[np.argmax(vals == 0)]
        raise ZeroDenominator(f"polynomial vanishes at {tuple(int(v) for v in bad)}")
    logw = -s * np.log(vals.astype(complex))
    for i, m in enumerate(mu):
        if m:
            with np.errstate(divide="ignore"):
                logw = logw + m * np.log(pts[:, i].astype(float))
    w = np.exp(logw)
    vecs = np.ascontiguousarray(kernel.kernel_vectors(pts).T)
    # row-wise np.sum is pairwise, unlike the BLAS product
    log_scale = float(np.abs(logw).max(initial=0.0))
    return np.sum(vecs * w, axis=1), float(np.abs(w).sum()), log_scale


def direct_sum(query: SeriesQuery) -> EvalResult:
    """Partial sum over the box [0, box]^n minus the origin, with a tail bound."""
    kernel, p, mu, s, ctl = query.kernel, query.p, query.mu, query.s, query.controls
    n = p.n
    ab = abscissa(p, mu)
    if not s.real > ab:
        raise AbscissaViolation(f"Re(s) = {s.real} is not above the abscissa {ab}")
    box = min(ctl.box, int(round(_MAX_DIRECT_POINTS ** (1.0 / n))) - 1)
    blocks = list(_box_blocks(n, box, ctl.block))
    if ctl.workers > 1:
        with ThreadPoolExecutor(max_workers=ctl.workers) as pool:
            parts = list(pool.map(lambda b: _weighted_sum(kernel, p, mu, s, b), blocks))
    else:
        parts = [_weighted_sum(kernel, p, mu, s, b) for b in blocks]
    vec = np.zeros(kernel.t, dtype=complex)
    mass = 0.0
    log_scale = 0.0
    for v, m, ls in parts:  # fixed block order keeps the result bit-stable
        vec += v
        mass += m
        log_scale = max(log_scale, ls)
    d_low = extremal_monomials(p).min_extremal_degree
    sigma = s.real
    a = d_low * sigma - sum(mu) - n + 1
    c = _growth_constant(p, d_low, box + 1)
    amax = float(np.abs(kernel.outputs).max())
    tail = amax * n * (1 + 1 / box) ** (n - 1) * c ** (-sigma) * box ** (1 - a) / (a - 1)
    # each term carries about |s log p| eps from exp/log; pairwise and block sums add the rest
    rounding = EPS * mass * amax * (log_scale + math.log2(ctl.block) + len(blocks) + 4)
    err = tail + rounding
    report = [{"level": 0, "box": box, "tail_bound": tail}]
    return EvalResult(complex(vec[kernel.component_index]), float(err), ab, vec, report, "direct")


def functional_matrix(kernel: KernelSystem, q: int, d: int, mu: Sequence[int], s: complex) -> np.ndarray:
    """Id - q^(|mu| - d s) * sum_y M_y."""
    msum = kernel.sum_matrix().astype(complex)
    return np.eye(kernel.t) - q ** (sum(mu) - d * complex(s)) * msum


# ---------------------------------------------------------------------------
# bottom-up tail recursion
# ---------------------------------------------------------------------------


def _zeta_tail(n0: int, a: float) -> float:
    """Upper bound for sum_{m >= n0} m^(-a)."""
    if a <= 1:
        return math.inf
    return n0 ** (-a) + n0 ** (1 - a) / (a - 1)


def _sphere_bounds(p: MultiPoly) -> tuple[float, float]:
    """(min, max) of p on the orthant sup-norm sphere; min is exact or sampled."""
    coefs = list(p.terms.values())
    pmax = float(sum(abs(c) for c in coefs))
    pure = p.pure_power_coefficients()
    if all(c >= 0 for c in coefs) and all(c > 0 for c in pure):
        return float(min(pure)), pmax
    n = p.n
    grid = np.linspace(0.0, 1.0, 41 if n <= 2 else 13)
    best = math.inf
    for i in range(n):
        rest = np.array(list(itertools.product(grid, repeat=n - 1))) if n > 1 else np.zeros((1, 0))
        pts = np.insert(rest, i, 1.0, axis=1)
        best = min(best, float(p.eval_float(pts).min()))
    return best, pmax


@dataclass
class _Request:
    nu: tuple[int, ...]
    level: int


class _TailEngine:
    """Tails T(nu, s + j) over z outside [0, N0)^n, in reduced coordinates.

    ``p`` must be homogeneous and positive on the orthant minus the origin.
    """

    def __init__(self, kernel: KernelSystem, p: MultiPoly, s: complex,
                 requests: Sequence[tuple[tuple[int, ...], int]], controls: Controls,
                 base_abscissa: float, skip_points: Iterable[tuple[int, ...]] = ()):
        self.kernel = kernel
        self.p = p
        self.s = complex(s)
        self.ctl = controls
        self.q = kernel.q
        self.n = p.n
        self.d = p.degree
        self.requests = [_Request(tuple(nu), int(j)) for nu, j in requests]
        self.base_abscissa = base_abscissa
        self.skip = {tuple(pt) for pt in skip_points}

        red = kernel.reduced
        self.W = red.basis
        self.N = red.matrices
        self.r = red.rank
        self.Nsum = self.N.sum(axis=0)
        self.Nnorm = np.array([np.linalg.norm(m, 2) for m in self.N])
        self.ys = digit_tuples(self.q, self.n)

        self.pmin, self.pmax = _sphere_bounds(p)
        if not self.pmin > 1e-12:
            raise NotCoercive("polynomial is not positive on the orthant sphere")
        self.py_terms = []
        sy = []
        for y in self.ys:
            py = shift_remainder(p, y, self.q)
            terms = [(a, float(c)) for a, c in py.terms.items()]
            self.py_terms.append(terms)
            sy.append(sum(abs(c) for _, c in terms))
        self.Sy = np.array(sy)
        lip = float(self.Sy.max()) / self.pmin
        self.N0 = controls.N0 or max(16, math.ceil(4 * lip))
        self.cmax = math.sqrt(kernel.t) * float(np.abs(kernel.outputs).max())
        self._plan()

    # planning -----------------------------------------------------------
    def _D(self, j: int) -> int:
        best = -1
        for rq in self.requests:
            if rq.level <= j:
                best = max(best, sum(rq.nu) + (j - rq.level) * (self.d - 1))
        return best

    def _plan(self):
        thresh = 18 * math.log(10) / math.log(self.N0) + 2
        top = max(rq.level for rq in self.requests)
        J = top + 1
        while J < top + 200:
            e_min = self.d * (self.s.real + J) - self._D(J) - self.n
            if e_min >= thresh:
                break
            J += 1
        self.J = J
        self.Dlev = [self._D(j) for j in range(J)]
        self.Dmax = max(self.Dlev)
        K = self.ctl.K
        needed = [False] * J
        reach = [False] * J
        for rq in self.requests:
            needed[rq.level] = reach[rq.level] = True
        for j in range(J):
            if not reach[j]:
                continue
            sig = self.s + j
            for k in range(1, K + 1):
                if j + k >= J:
                    break
                reach[j + k] = True
                if needed[j] and not _exact_zero_binom(sig, k):
                    needed[j + k] = True
        self.needed = needed
        self.reach = reach
        below = sum(1 for j in range(J) if needed[j] and (self.s + j).real <= self.base_abscissa)
        if below > self.ctl.depth:
            raise DepthExceeded(f"{below} levels left of the abscissa exceed depth {self.ctl.depth}")

    def singular_levels(self) -> tuple[list[int], list[int]]:
        """Levels whose solve is near singular: (needed ones, removable ones)."""
        hard, soft = [], []
        logq = self.d * math.log(self.q)
        eye = np.eye(self.r)
        for j in range(self.J):
            if not self.reach[j]:
                continue
            sig = self.s + j
            for g in range(self.Dlev[j] + 1):
                mat = eye - self.q ** (g - self.d * sig) * self.Nsum
                smin = np.linalg.svd(mat, compute_uv=False).min() if self.r else 1.0
                if smin / logq < self.ctl.tol:
                    (hard if self.needed[j] else soft).append(j)
                    break
        return hard, soft

    # array helpers ------------------------------------------------------
    def _shape(self, D: int, vec: bool = True):
        return (D + 1,) * self.n + ((self.r,) if vec else ())

    def _degree_grid(self, D: int) -> np.ndarray:
        grids = np.indices((D + 1,) * self.n)
        return grids.sum(axis=0)

    def _apply_L(self, X: np.ndarray, terms, absolute: bool = False) -> np.ndarray:
        """(L X)[nu] = sum_gamma c_gamma X[nu + gamma]."""
        out = np.zeros_like(X)
        size = X.shape[0]
        for gamma, c in terms:
            if any(g >= size for g in gamma):
                continue
            src = tuple(slice(g, None) for g in gamma)
            dst = tuple(slice(0, size - g) for g in gamma)
            out[dst] += (abs(c) if absolute else c) * X[src]
        return out

    def _binom_axes(self, D: int) -> dict[int, np.ndarray]:
        """Per-axis matrices Bax[v][a, b] = C(a, b) q^b v^(a-b)."""
        mats = {}
        for v in range(self.q):
            m = np.zeros((D + 1, D + 1))
            for a in range(D + 1):
                for b in range(a + 1):
                    m[a, b] = math.comb(a, b) * float(self.q) ** b * float(v) ** (a - b)
            mats[v] = m
        return mats

    def _apply_B(self, X: np.ndarray, y, bax) -> np.ndarray:
        out = X
        for i in range(self.n):
            out = np.moveaxis(np.tensordot(bax[y[i]], out, axes=([1], [i])), 0, i)
        return out

    # point sums ---------------------------------------------------------
    def _points(self, lo: int, hi: int) -> np.ndarray:
        grid = np.indices((hi,) * self.n).reshape(self.n, -1).T.astype(np.int64)
        keep = grid.max(axis=1) >= lo
        if lo == 0:
            keep &= grid.any(axis=1)
        pts = grid[keep]
        if self.skip:
            mask = np.array([tuple(pt) not in self.skip for pt in pts], dtype=bool)
            pts = pts[mask]
        return pts

    def _region(self, lo: int, hi: int):
        pts = self._points(lo, hi)
        vals = self.p.eval_int(pts)
        if np.any(vals <= 0):
            raise ZeroDenominator("polynomial is not positive on the summation region")
        coords = self.kernel.kernel_vectors(pts) @ self.W.conj()
        return pts, np.log(vals), coords

    def _region_sum(self, region, sigma: complex, D: int):
        """sum c_x x^nu p(x)^-sigma for all nu in the (D+1)^n grid; plus abs mass."""
        pts, logp, coords = region
        w = np.exp(-sigma * logp)
        mono = np.ones((pts.shape[0],) + (1,) * self.n)
        for i in range(self.n):
            powers = pts[:, i : i + 1].astype(float) ** np.arange(D + 1)[None, :]
            shape = [pts.shape[0]] + [1] * self.n
            shape[i + 1] = D + 1
            mono = mono * powers.reshape(shape)
        mono = mono.reshape(pts.shape[0], -1)
        val = (mono.T @ (w[:, None] * coords)).reshape(self._shape(D))
        mass = (mono.T @ (np.abs(w) * np.linalg.norm(coords, axis=1))).reshape(self._shape(D, False))
        return val, mass

    # main recursion -----------------------------------------------------
    def _child_bound(self, sigma: complex, ks: Iterable[int], g: int, y_idx: int) -> float:
        """Bound on the omitted k-children of one level, for output degree g."""
        total = 0.0
        sre = sigma.real
        coef = binom_neg(sigma, max(list(ks) + [0]))
        for k in ks:
            ck = abs(coef[k])
            if ck == 0:
                continue
            P = self.pmin if -sre - k <= 0 else self.pmax
            zt = _zeta_tail(self.N0, self.d * sre + k - g - self.n + 1)
            if math.isinf(zt):
                return math.inf
            total += (ck * self.cmax * self.n * 2 ** (self.n - 1)
                      * (self.q * (1 + 1 / self.N0)) ** g * self.Sy[y_idx] ** k
                      * P ** (-sre - k) * zt)
        return total

    def _k_tail(self, sigma: complex, g: int, y_idx: int, n0: int | None = None) -> float:
        """Bound on the sum over k > K of the children, with a geometric remainder."""
        n0 = n0 or self.N0
        K = self.ctl.K
        sy = self.Sy[y_idx]
        if sy == 0:
            return 0.0
        ks = np.arange(K + 1, K + 401)
        steps = np.abs(-sigma - np.arange(0, K + 400))
        if np.any(steps == 0):
            return 0.0  # sigma is a non-positive integer; C(-sigma, k) vanishes for large k
        logc = np.cumsum(np.log(steps / np.arange(1, K + 401)))[K:]
        a = self.d * sigma.real + ks - g - self.n + 1
        if a[0] <= 1:
            return math.inf
        logP = np.where(-sigma.real - ks <= 0, math.log(self.pmin), math.log(self.pmax))
        with np.errstate(divide="ignore"):
            zt = np.log(n0 ** (-a) + n0 ** (1 - a) / (a - 1))
        logt = (logc + math.log(self.cmax * self.n * 2 ** (self.n - 1))
                + g * math.log(self.q * (1 + 1 / n0)) + ks * math.log(sy)
                + (-sigma.real - ks) * logP + zt)
        terms = np.exp(np.minimum(logt, 700.0))
        total = float(terms.sum())
        ratio = terms[-1] / terms[-2] if terms[-2] > 0 else 0.0
        if ratio >= 1:
            return math.inf
        return total + float(terms[-1]) * ratio / (1 - ratio)

    def run(self) -> list[tuple[np.ndarray, float]]:
        """Reduced-coordinate values F(nu, s + j) and error bounds for every request."""
        q, n, d, K = self.q, self.n, self.d, self.ctl.K
        Dm = self.Dmax
        nY = len(self.ys)
        annulus = self._region(self.N0, self.N0 * q)
        bax_full = self._binom_axes(Dm)
        deg_full = self._degree_grid(Dm)
        eye = np.eye(self.r)
        U: dict[int, list[np.ndarray]] = {}
        Ue: dict[int, list[np.ndarray]] = {}
        T: dict[int, np.ndarray] = {}
        E: dict[int, np.ndarray] = {}
        keep = {rq.level for rq in self.requests}
        report = []
        for j in range(self.J - 1, -1, -1):
            for i in list(U):
                U[i] = [self._apply_L(U[i][yi], self.py_terms[yi]) for yi in range(nY)]
                Ue[i] = [self._apply_L(Ue[i][yi], self.py_terms[yi], absolute=True) for yi in range(nY)]
            if self.needed[j]:
                Dj = self.Dlev[j]
                sigma = self.s + j
                coef = binom_neg(sigma, K)
                sl = (slice(0, Dj + 1),) * n
                bax = {v: m[: Dj + 1, : Dj + 1] for v, m in bax_full.items()}
                baxabs = {v: np.abs(m) for v, m in bax.items()}
                deg = deg_full[sl]
                ann, ann_mass = self._region_sum(annulus, sigma, Dj)
                scale = q ** (-d * sigma)
                scale_abs = abs(scale)
                acc = ann.copy()
                acc_err = np.zeros(self._shape(Dj, False))
                child = np.zeros((nY, Dj + 1))
                ktail = np.zeros((nY, Dj + 1))
                for yi, y in enumerate(self.ys):
                    S = np.zeros(self._shape(Dj), dtype=complex)
                    Se = np.zeros(self._shape(Dj, False))
                    missing = []
                    for k in range(1, K + 1):
                        if coef[k] == 0:
                            continue
                        if j + k >= self.J:
                            missing.append(k)
                        elif j + k in U:
                            S += coef[k] * U[j + k][yi][sl]
                            Se += abs(coef[k]) * Ue[j + k][yi][sl]
                    if S.any():
                        acc += scale * (self._apply_B(S, y, bax) @ self.N[yi].T)
                    acc_err += scale_abs * self.Nnorm[yi] * self._apply_B(Se, y, baxabs)
                    for g in range(Dj + 1):
                        child[yi, g] = self._child_bound(sigma, missing, g, yi) if missing else 0.0
                        ktail[yi, g] = self._k_tail(sigma, g, yi)
                Tj = np.zeros(self._shape(Dj), dtype=complex)
                Ej = np.zeros(self._shape(Dj, False))
                for g in range(Dj + 1):
                    mask = deg == g
                    mat = eye - q ** (g - d * sigma) * self.Nsum
                    minv = np.linalg.inv(mat)
                    mnorm = np.linalg.norm(minv, 2)
                    kt = scale_abs * float((self.Nnorm * ktail[:, g]).sum())
                    if not kt <= self.ctl.tol:
                        raise TruncationBudgetExceeded(
                            f"binomial tail bound {kt:.3g} at level {j}, degree {g} exceeds tol")
                    cb = scale_abs * float((self.Nnorm * child[:, g]).sum())
                    rhs = acc[mask]
                    Tj[mask] = rhs @ minv.T
                    rnd = 16 * EPS * (np.linalg.norm(rhs, axis=1) + ann_mass[mask])
                    Ej[mask] = mnorm * (acc_err[mask] + cb + kt + rnd)
                    delta = np.where(mask[..., None], Tj, 0)
                    delta_e = np.where(mask, Ej, 0)
                    for yi, y in enumerate(self.ys):
                        acc += scale * (self._apply_B(delta, y, bax) @ self.N[yi].T)
                        acc_err += scale_abs * self.Nnorm[yi] * self._apply_B(delta_e, y, baxabs)
                report.append({
                    "level": j,
                    "sigma": [sigma.real, sigma.imag],
                    "degree": Dj,
                    "child_bound": float(child.max(initial=0.0)),
                    "k_tail": float(ktail.max(initial=0.0)),
                    "err": float(Ej.max()),
                })
                full = np.zeros(self._shape(Dm), dtype=complex)
                full[sl] = Tj
                full_e = np.zeros(self._shape(Dm, False))
                full_e[sl] = Ej
                U[j] = [full] * nY
                Ue[j] = [full_e] * nY
                if j in keep:
                    T[j], E[j] = full, full_e
            for i in [i for i in U if i >= j + K]:
                del U[i], Ue[i]
        self.report = sorted(report, key=lambda r: r["level"])
        head = self._region(0, self.N0)
        out = []
        for rq in self.requests:
            h, hmass = self._region_sum(head, self.s + rq.level, sum(rq.nu))
            val = h[rq.nu] + T[rq.level][rq.nu]
            err = E[rq.level][rq.nu] + 16 * EPS * hmass[rq.nu]
            out.append((val, float(err)))
        return out


def _engine_values(kernel: KernelSystem, p: MultiPoly, s: complex,
                   requests: Sequence[tuple[tuple[int, ...], int]], controls: Controls,
                   base_abscissa: float, skip_points=()) -> tuple[list, list, list]:
    """Run the tail engine, averaging over a small circle when s is a removable point."""
    eng = _TailEngine(kernel, p, s, requests, controls, base_abscissa, skip_points)
    hard, soft = eng.singular_levels()
    if hard:
        raise NearPole(f"s = {s} is within {controls.tol} of a pole (levels {hard})")
    if not soft:
        res = eng.run()
        return [v for v, _ in res], [e for _, e in res], eng.report
    # the singular levels are only reached through vanishing binomial
    # coefficients; the function is analytic at s, so take its circle mean
    vals = None
    errs = None
    reports = []
    for m in range(_CIRCLE_POINTS):
        sm = s + _CIRCLE_RADIUS * cmath.exp(2j * math.pi * (m + 0.5) / _CIRCLE_POINTS)
        e = _TailEngine(kernel, p, sm, requests, controls, base_abscissa, skip_points)
        res = e.run()
        v = [x for x, _ in res]
        er = [x for _, x in res]
        vals = v if vals is None else [a + b for a, b in zip(vals, v)]
        errs = er if errs is None else [a + b for a, b in zip(errs, er)]
        reports = e.report
    vals = [v / _CIRCLE_POINTS for v in vals]
    # the spread around the circle bounds the discarded Taylor terms
    errs = [e / _CIRCLE_POINTS for e in errs]
    for r in reports:
        r["circle_mean"] = True
    return vals, errs, reports


def _orthant_sign(p: MultiPoly) -> int:
    """+1 or -1 if all coefficients of homogeneous p share a sign and p does not vanish there."""
    signs = {c > 0 for c in p.terms.values()}
    if len(signs) != 1:
        return 0
    sign = 1 if signs.pop() else -1
    pmin, _ = _sphere_bounds(p * sign)
    return sign if pmin > 1e-12 else 0


def _homogeneous_eval(kernel: KernelSystem, p: MultiPoly, mu, s: complex,
                      controls: Controls) -> EvalResult:
    sign = _orthant_sign(p)
    if sign == 0:
        raise NotCoercive("homogeneous polynomial changes sign or vanishes on the orthant")
    pp = p if sign > 0 else -p
    ab = abscissa(pp, mu)
    vals, errs, report = _engine_values(kernel, pp, s, [(tuple(mu), 0)], controls, ab)
    phase = 1.0 if sign > 0 else cmath.exp(-1j * math.pi * s)
    vec = phase * (kernel.reduced.basis @ vals[0])
    err = errs[0] * abs(phase)
    return EvalResult(complex(vec[kernel.component_index]), float(err), ab, vec, report,
                      "functional-equation")


def continue_eval(query: SeriesQuery) -> EvalResult:
    """Value of the meromorphic continuation of F_mu at s.

    Homogeneous polynomials of one sign go straight through the tail
    recursion; everything else takes the extremal-split route.
    """
    p = query.p
    if p.is_homogeneous() and _orthant_sign(p) != 0:
        return _homogeneous_eval(query.kernel, p, query.mu, query.s, query.controls)
    return extremal_split_eval(query.kernel, p, query.mu, query.s, query.controls)


def evaluate_many(kernel: KernelSystem, p: MultiPoly, mu, s: complex,
                  shifts: Sequence[tuple[tuple[int, ...], int]],
                  controls: Controls | None = None) -> list[tuple[complex, float]]:
    """F(nu, s + j) for several (nu, j) in one recursion; p homogeneous of one sign."""
    controls = controls or Controls()
    sign = _orthant_sign(p)
    if sign == 0:
        raise NotCoercive("homogeneous polynomial changes sign or vanishes on the orthant")
    pp = p if sign > 0 else -p
    ab = abscissa(pp, mu)
    vals, errs, _ = _engine_values(kernel, pp, complex(s), shifts, controls, ab)
    out = []
    for (nu, j), v, e in zip(shifts, vals, errs):
        phase = 1.0 if sign > 0 else cmath.exp(-1j * math.pi * (s + j))
        full = kernel.reduced.basis @ v
        out.append((complex(phase * full[kernel.component_index]), e))
    return out


def _as_kernel(seq) -> tuple[KernelSystem, AutomatonSpec]:
    if isinstance(seq, KernelSystem):
        return seq, seq.as_automaton()
    if isinstance(seq, AutomatonSpec):
        return kernel_closure(seq), seq
    raise TypeError("expected an AutomatonSpec or a KernelSystem")


def _ratio_sup(num: MultiPoly, den: MultiPoly, x0: int) -> float:
    """Sampled sup of |num/den| over |x|_inf > x0."""
    if num.is_zero():
        return 0.0
    rng = np.random.default_rng(2)
    best = 0.0
    rad = x0 + 1
    for _ in range(12):
        pts = shell_points(num.n, rad, 300, rng)
        dv = den.eval_int(pts)
        if np.any(dv == 0):
            return math.inf
        best = max(best, float(np.abs(num.eval_int(pts) / dv).max()))
        rad *= 2
    return best


def _box_sum(kernel: KernelSystem, p: MultiPoly, nu, s: complex, x0: int,
             include_origin: bool = False) -> tuple[complex, float]:
    """sum over |x|_inf <= x0 of a_x x^nu p(x)^-s (principal branch)."""
    n = p.n
    pts = np.indices((x0 + 1,) * n).reshape(n, -1).T.astype(np.int64)
    if not include_origin:
        pts = pts[pts.any(axis=1)]
    vals = p.eval_int(pts)
    if np.any(vals == 0):
        bad = pts[np.argmax(vals == 0)]
        raise ZeroDenominator(f"polynomial vanishes at {tuple(int(v) for v in bad)}")
    logw = -s * np.log(vals.astype(complex))
    for i, m in enumerate(nu):
        if m:
            with np.errstate(divide="ignore"):
                logw = logw + m * np.log(pts[:, i].astype(float))
    w = np.exp(logw)
    a = kernel.values(pts)
    return complex(w @ a), float(np.abs(w).sum())


def extremal_split_eval(seq, p: MultiPoly, mu=None, s: complex = 2.0,
                  controls: Controls | None = None) -> EvalResult:
    """Continuation for a general coercive polynomial.

    p is split into its extremal part p0 and a residual. Close to the
    origin the series is summed with p itself; beyond a radius x0 where
    |Res/p0| is small, p^-s = sum_k C(-s, k) Res^k p0^(-s-k) and each
    term is a tail of a series with the homogeneous (or homogenized)
    denominator p0, obtained from a single tail recursion.
    """
    controls = controls or Controls()
    kernel, spec = _as_kernel(seq)
    n = p.n
    mu = (0,) * n if mu is None else tuple(int(v) for v in mu)
    s = complex(s)
    if p.n != kernel.n:
        raise ValueError("polynomial arity does not match the sequence")
    cc = coercive_check(p)
    if not cc.coercive:
        raise NotCoercive(f"{cc.reason}; witness {cc.witness}")
    p0, res = split_extremal(p)
    sign = 1 if next(iter(p0.terms.values())) > 0 else -1
    p0s, ress = p0 * sign, res * sign
    ab = abscissa(p, mu)
    phase = 1.0 if sign > 0 else cmath.exp(-1j * math.pi * s)

    if res.is_zero() and p0.is_homogeneous():
        out = _homogeneous_eval(kernel, p, mu, s, controls)
        out.method = "functional-equation"
        return out

    lifted = not p0s.is_homogeneous()
    if lifted:
        ekernel = kernel_closure(lift_sequence(spec))
        ep = homogenize(p0s)
        pad = (0,)
        origin_ok = p0s.coefficient((0,) * n) != 0
        skip = () if origin_ok else [(0,) * n + (1,)]
    else:
        ekernel, ep, pad, origin_ok, skip = kernel, p0s, (), False, ()
    if _orthant_sign(ep) != 1:
        raise NotCoercive("extremal part is not positive on the orthant")

    x0 = 1
    ratio = _ratio_sup(ress, p0s, x0)
    while ratio > 0.25 and x0 < 4096:
        x0 *= 2
        ratio = _ratio_sup(ress, p0s, x0)
    if not ratio < 1:
        raise NotCoercive("residual part does not become small against the extremal part")

    target = controls.tol * 1e-3
    coef = binom_neg(s, 400)
    K2 = 4
    while K2 < 150 and abs(coef[K2 + 1]) * max(ratio, 1e-300) ** (K2 + 1) > target:
        K2 += 1
    if ratio == 0:
        K2 = 0

    requests = []
    plan = []
    power = MultiPoly.constant(n, 1)
    for k in range(K2 + 1):
        if k:
            power = power * ress
        for gamma, c in power.terms.items():
            nu = tuple(m + g for m, g in zip(mu, gamma))
            plan.append((k, nu, c))
            requests.append((nu + pad, k))
    uniq = list(dict.fromkeys(requests))
    vals, errs, report = _engine_values(ekernel, ep, s, uniq, controls,
                                        abscissa(ep, tuple(mu) + pad), skip)
    W = ekernel.reduced.basis
    lookup = {}
    for rq, v, e in zip(uniq, vals, errs):
        lookup[rq] = (complex((W @ v)[ekernel.component_index]), e)

    head, head_mass = _box_sum(kernel, p, mu, s, x0)
    total = head
    err = 16 * EPS * head_mass
    term_sizes = []
    for k in range(K2 + 1):
        term = 0j
        for kk, nu, c in plan:
            if kk != k:
                continue
            f, fe = lookup[nu + pad, k]
            h, hm = _box_sum(kernel, p0s, nu, s + k, x0, include_origin=lifted and origin_ok)
            term += float(c) * (f - h)
            err += abs(coef[k]) * abs(float(c)) * (fe + 16 * EPS * hm)
        term_sizes.append(abs(coef[k] * term))
        total += phase * coef[k] * term
    if ratio > 0 and K2 >= 1:
        last = max(term_sizes[-3:])
        err += last * ratio / (1 - ratio)
    report = report + [{"level": "split", "x0": x0, "ratio": ratio, "K": K2,
                        "lifted": lifted}]
    return EvalResult(complex(total), float(err * abs(phase)), ab, None, report,
                      "extremal-split")


# ---------------------------------------------------------------------------
# poles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoleLattice:
    eigenvalues: tuple[complex, ...]
    points: tuple[tuple[complex, complex, int, int], ...]  # (lambda, s, k, l)
    k_range: tuple[int, ...]
    l_range: tuple[int, ...]

    @property
    def lattice(self) -> set[complex]:
        return {s for _, s, _, _ in self.points}

    def distance(self, s: complex) -> float:
        return min((abs(complex(s) - pt) for _, pt, _, _ in self.points), default=math.inf)

    def rows(self) -> list[tuple[float, float, int, int, float, float]]:
        return [(lam.real, lam.imag, k, l, s.real, s.imag) for lam, s, k, l in self.points]


def pole_lattice(kernel: KernelSystem, q: int | None = None, d: int = 1,
                 k_range: Iterable[int] = range(-2, 3),
                 l_range: Iterable[int] = range(0, 6)) -> PoleLattice:
    """Candidate poles (1/d)(log lambda / log q + 2 pi i k / log q - l)."""
    q = q or kernel.q
    eig = np.linalg.eigvals(kernel.sum_matrix().astype(float))
    lams = []
    for lam in eig:
        lam = complex(lam)
        if abs(lam) < 1e-9:
            continue
        lam = complex(round(lam.real, 12), round(lam.imag, 12))
        if all(abs(lam - m) > 1e-9 for m in lams):
            lams.append(lam)
    lams.sort(key=lambda z: (-abs(z), z.real, z.imag))
    k_range, l_range = tuple(k_range), tuple(l_range)
    logq = math.log(q)
    pts = []
    for lam in lams:
        base = cmath.log(lam) / logq
        for k in k_range:
            for l in l_range:
                sv = (base + 2j * math.pi * k / logq - l) / d
                sv = complex(round(sv.real, 14), round(sv.imag, 14))
                pts.append((lam, sv, k, l))
    return PoleLattice(tuple(lams), tuple(pts), k_range, l_range)


@dataclass(frozen=True)
class PoleCertificate:
    matrix: tuple[tuple[Fraction, ...], ...]
    charpoly: tuple[Fraction, ...]  # det(B - X I), lowest degree first
    minpoly: tuple[Fraction, ...]   # monic
    delta: tuple[Fraction, ...]
    sign: int
    factorization_exact: bool
    multiplicity_of_one: int
    first_real_pole: float

    @property
    def simple(self) -> bool:
        return self.multiplicity_of_one == 1

    def to_dict(self) -> dict:
        fmt = lambda poly: [str(c) for c in poly]
        return {
            "charpoly": fmt(self.charpoly),
            "minpoly": fmt(self.minpoly),
            "delta": fmt(self.delta),
            "sign": self.sign,
            "factorization_exact": self.factorization_exact,
            "multiplicity_of_one": self.multiplicity_of_one,
            "simple": self.simple,
            "first_real_pole": self.first_real_pole,
        }


def simple_pole_certificate(kernel: KernelSystem, q: int | None = None, d: int = 1,
                            mu: Sequence[int] | None = None) -> PoleCertificate:
    """Exact check that 1 is a simple root of the minimal polynomial of q^-n sum_y M_y."""
    q = q or kernel.q
    n = kernel.n
    mu = (0,) * n if mu is None else tuple(mu)
    msum = kernel.sum_matrix()
    scale = Fraction(1, q**n)
    B = [[Fraction(int(v)) * scale for v in row] for row in msum]
    t = len(B)
    cp = _exact.charpoly(B)  # det(X I - B)
    sign = -1 if t % 2 else 1
    pb = [c * sign for c in cp]  # det(B - X I) = (-1)^t det(X I - B)
    mp = _exact.minpoly(B)
    delta, rem = _exact.poly_divmod(pb, [c * sign for c in mp])
    mult = _exact.root_multiplicity(mp, Fraction(1))
    return PoleCertificate(
        tuple(tuple(r) for r in B),
        tuple(pb),
        tuple(mp),
        tuple(delta),
        sign,
        not rem,
        mult,
        (n + sum(mu)) / d,
    )


# ---------------------------------------------------------------------------
# functional-equation residual
# ---------------------------------------------------------------------------


def functional_residual(kernel: KernelSystem, p: MultiPoly, s: complex, mu=None,
                        controls: Controls | None = None,
                        n0_check: int | None = None) -> tuple[float, float]:
    """Residual of the decimation identity at a cube size different from the engine's.

    With H_M the sum over [0, M)^n minus the origin and c = q^(|mu| - d s),
    the continued values must satisfy

      (I - c sum M_y) F(mu, s) = H_{M q}(mu, s) - c sum M_y H_M(mu, s)
          + q^(-d s) sum_y M_y sum_{nu <= mu} C(mu, nu) y^(mu - nu) q^|nu|
            sum_k C(-s, k) <z^nu p_y^k, F(., s + k) - H_M(., s + k)>

    where the (nu, k) = (mu, 0) term is the one moved to the left. Returns
    (residual norm, bound implied by the reported errors).
    """
    controls = controls or Controls()
    n, q, d = p.n, kernel.q, p.degree
    mu = (0,) * n if mu is None else tuple(int(v) for v in mu)
    s = complex(s)
    if not p.is_homogeneous() or _orthant_sign(p) != 1:
        raise NotCoercive("the residual check needs a positive homogeneous polynomial")
    K = controls.K
    ys = digit_tuples(q, n)
    pys = [shift_remainder(p, y, q) for y in ys]
    # powers p_y^k, k = 0..K
    powers = []
    for py in pys:
        cur = MultiPoly.constant(n, 1)
        row = [cur]
        for _ in range(K):
            cur = cur * py
            row.append(cur)
        powers.append(row)
    lower = list(itertools.product(*(range(m + 1) for m in mu)))
    requests = {(mu, 0)}
    for yi in range(len(ys)):
        for k in range(K + 1):
            for nu in lower:
                for gamma in powers[yi][k].terms:
                    requests.add((tuple(a + b for a, b in zip(nu, gamma)), k))
    requests = sorted(requests, key=lambda r: (r[1], r[0]))
    ab = abscissa(p, mu)
    eng_ctl = controls
    vals, errs, _ = _engine_values(kernel, p, s, requests, eng_ctl, ab)
    F = {rq: (v, e) for rq, v, e in zip(requests, vals, errs)}

    eng = _TailEngine(kernel, p, s, [(mu, 0)], eng_ctl, ab)
    M = n0_check or eng.N0 + 7
    W = kernel.reduced.basis
    Nm = kernel.reduced.matrices
    Nsum = Nm.sum(axis=0)
    small = eng._region(0, M)
    big = eng._region(0, M * q)

    def head(region, nu, sigma):
        val, mass = eng._region_sum(region, sigma, max(nu) if nu else 0)
        return val[nu], mass[nu]

    coef = binom_neg(s, K)
    c = q ** (sum(mu) - d * s)
    lhs = (np.eye(eng.r) - c * Nsum) @ F[mu, 0][0]
    bound = np.linalg.norm(np.eye(eng.r) - c * Nsum, 2) * F[mu, 0][1]
    hb, hbm = head(big, mu, s)
    hs, hsm = head(small, mu, s)
    rhs = hb - c * (Nsum @ hs)
    mag = hbm + abs(c) * np.linalg.norm(Nsum, 2) * hsm
    scale = q ** (-d * s)
    for yi, y in enumerate(ys):
        inner = np.zeros(eng.r, dtype=complex)
        for nu in lower:
            bcoef = 1.0
            for a, b, yy in zip(mu, nu, y):
                bcoef *= math.comb(a, b) * float(yy) ** (a - b)
            if bcoef == 0:
                continue
            bcoef *= float(q) ** sum(nu)
            for k in range(K + 1):
                if nu == mu and k == 0:
                    continue
                if coef[k] == 0:
                    continue
                for gamma, g in powers[yi][k].terms.items():
                    key = (tuple(a + b for a, b in zip(nu, gamma)), k)
                    fv, fe = F[key]
                    hv, hm = head(small, key[0], s + k)
                    w = bcoef * coef[k] * float(g)
                    inner += w * (fv - hv)
                    bound += abs(scale) * eng.Nnorm[yi] * abs(w) * fe
                    mag += abs(scale) * eng.Nnorm[yi] * abs(w) * (np.linalg.norm(fv) + hm)
        rhs += scale * (Nm[yi] @ inner)
        # children beyond K, bounded on the check cube
        for g in range(sum(mu) + 1):
            bound += abs(scale) * eng.Nnorm[yi] * eng._k_tail(s, g, yi, n0=M)
    resid = float(np.linalg.norm(lhs - rhs))
    bound = float(bound + 64 * EPS * mag)
    return resid, bound


# name used by the published interface
theorem2_eval = extremal_split_eval
