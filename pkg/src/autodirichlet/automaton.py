"""
Multi-index q-automatic sequences.

An automaton reads the base-q digits of an index tuple x = (x_1, ..., x_n)
least significant digit first, all coordinates in parallel (shorter
coordinates padded with zeros). A digit column is the tuple
y = (y_1, ..., y_n) in [0, q)^n and columns are enumerated in
lexicographic order, which fixes the indexing of the transition matrices.

Reading an extra zero column must not change the output; this makes the
kernel recurrence A_{qx+y} = M_y A_x hold at x = 0 as well.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import InvalidAutomaton, KernelOverflow, ParseError

__all__ = [
    "AutomatonSpec",
    "KernelSystem",
    "PeriodicSeq",
    "ReducedSystem",
    "digit_tuples",
    "digit_sum",
    "digit_sums",
    "evaluate",
    "kernel_closure",
    "periodic_product",
    "lift_sequence",
    "thue_morse",
    "digit_sum_zeta",
    "constant",
    "named_automaton",
    "load_automaton",
    "automaton_to_dict",
    "automaton_from_dict",
]

DEFAULT_CLOSURE_CAP = 4096


def digit_tuples(q: int, n: int) -> list[tuple[int, ...]]:
    """All digit columns of [0, q)^n in lexicographic order."""
    return list(itertools.product(range(q), repeat=n))


def digit_sum(q: int, m: int) -> int:
    """Sum of the base-q digits of m."""
    if q < 2:
        raise ValueError("radix must be at least 2")
    if m < 0:
        raise ValueError("digit_sum is defined for non-negative integers")
    total = 0
    while m:
        m, a = divmod(m, q)
        total += a
    return total


def digit_sums(q: int, m: np.ndarray) -> np.ndarray:
    """Vectorised base-q digit sums of a non-negative integer array."""
    m = np.array(m, dtype=np.int64, copy=True)
    total = np.zeros_like(m)
    while m.any():
        total += m % q
        m //= q
    return total


@dataclass(frozen=True)
class AutomatonSpec:
    """Finite-state description of an n-index q-automatic sequence.

    ``transitions[i][c]`` is the index of the state reached from state ``i``
    on the digit column with lexicographic index ``c``.
    """

    q: int
    n: int
    states: tuple[Hashable, ...]
    initial: int
    transitions: tuple[tuple[int, ...], ...]
    outputs: tuple[complex, ...]

    def __post_init__(self):
        if self.q < 2:
            raise InvalidAutomaton("radix must be at least 2")
        if self.n < 1:
            raise InvalidAutomaton("arity must be at least 1")
        t = len(self.states)
        if t == 0:
            raise InvalidAutomaton("automaton has no states")
        if len(set(self.states)) != t:
            raise InvalidAutomaton("state identifiers must be distinct")
        if not 0 <= self.initial < t:
            raise InvalidAutomaton("initial state out of range")
        if len(self.transitions) != t or len(self.outputs) != t:
            raise InvalidAutomaton("transition table and outputs must cover every state")
        width = self.q ** self.n
        for row in self.transitions:
            if len(row) != width:
                raise InvalidAutomaton(f"each state needs exactly {width} transitions")
            if any(not 0 <= k < t for k in row):
                raise InvalidAutomaton("transition target out of range")
        for i in self.reachable():
            if self.outputs[self.transitions[i][0]] != self.outputs[i]:
                raise InvalidAutomaton(
                    f"state {self.states[i]!r}: reading a zero column changes the output"
                )

    @classmethod
    def from_mapping(
        cls,
        q: int,
        n: int,
        states: Sequence[Hashable],
        initial: Hashable,
        transitions: Mapping[tuple[Hashable, tuple[int, ...]], Hashable],
        outputs: Mapping[Hashable, complex],
    ) -> "AutomatonSpec":
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        table = []
        for s in states:
            row = []
            for y in digit_tuples(q, n):
                try:
                    row.append(index[transitions[(s, y)]])
                except KeyError as exc:
                    raise InvalidAutomaton(f"missing transition from {s!r} on {y}") from exc
            table.append(tuple(row))
        try:
            outs = tuple(complex(outputs[s]) for s in states)
        except KeyError as exc:
            raise InvalidAutomaton(f"missing output for state {exc.args[0]!r}") from exc
        if initial not in index:
            raise InvalidAutomaton(f"unknown initial state {initial!r}")
        return cls(q, n, states, index[initial], tuple(table), outs)

    @property
    def size(self) -> int:
        return len(self.states)

    def reachable(self, start: int | None = None) -> list[int]:
        start = self.initial if start is None else start
        seen = {start}
        order = [start]
        queue = deque(order)
        while queue:
            i = queue.popleft()
            for k in self.transitions[i]:
                if k not in seen:
                    seen.add(k)
                    order.append(k)
                    queue.append(k)
        return order

    def column_index(self, y: Sequence[int]) -> int:
        c = 0
        for yi in y:
            c = c * self.q + yi
        return c


def _digit_columns(q: int, n: int, x: Sequence[int]):
    x = list(x)
    if len(x) != n:
        raise ValueError(f"index must have {n} coordinates")
    if any(v < 0 for v in x):
        raise ValueError("indices must be non-negative")
    while any(x):
        c = 0
        for i in range(n):
            x[i], yi = divmod(x[i], q)
            c = c * q + yi
        yield c


def evaluate(spec: AutomatonSpec, x: Sequence[int] | int) -> complex:
    """The term a_x of the sequence described by ``spec``."""
    if isinstance(x, (int, np.integer)):
        x = (int(x),)
    state = spec.initial
    for c in _digit_columns(spec.q, spec.n, x):
        state = spec.transitions[state][c]
    return spec.outputs[state]


def _walk(successors: np.ndarray, q: int, start: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Final states after reading every point's digits from the given start states."""
    points = np.array(points, dtype=np.int64, copy=True)
    state = np.array(start, dtype=np.int64, copy=True)
    n = points.shape[1]
    while points.any():
        col = np.zeros(points.shape[0], dtype=np.int64)
        for i in range(n):
            col = col * q + points[:, i] % q
        points //= q
        state = successors[state, col]
    return state


@dataclass(frozen=True)
class ReducedSystem:
    """Kernel recurrence restricted to the span of the kernel vectors.

    ``basis`` has orthonormal columns spanning {A_x}; ``matrices[c]`` is the
    restriction of M_y, so that M_y @ basis == basis @ matrices[c].
    """

    basis: np.ndarray
    matrices: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def coordinates(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.basis.conj()


@dataclass(frozen=True)
class KernelSystem:
    """Kernel vectors A_x and the 0/1 transition matrices M_y.

    Component ``i`` of A_x is the i-th kernel sequence evaluated at x.
    """

    q: int
    n: int
    component_index: int
    successors: np.ndarray  # (t, q^n) next component for each digit column
    outputs: np.ndarray  # (t,) value of each kernel sequence at x = 0
    labels: tuple = field(default=(), compare=False)

    @property
    def t(self) -> int:
        return self.successors.shape[0]

    @cached_property
    def matrices(self) -> dict[tuple[int, ...], np.ndarray]:
        mats = {}
        rows = np.arange(self.t)
        for c, y in enumerate(digit_tuples(self.q, self.n)):
            m = np.zeros((self.t, self.t), dtype=np.int64)
            m[rows, self.successors[:, c]] = 1
            mats[y] = m
        return mats

    def matrix_stack(self) -> np.ndarray:
        return np.stack([self.matrices[y] for y in digit_tuples(self.q, self.n)])

    def sum_matrix(self) -> np.ndarray:
        return self.matrix_stack().sum(axis=0)

    def kernel_vector(self, x: Sequence[int] | int) -> np.ndarray:
        if isinstance(x, (int, np.integer)):
            x = (int(x),)
        return self.kernel_vectors(np.asarray([x]))[0]

    @cached_property
    def _low_maps(self) -> tuple[int, np.ndarray]:
        """State maps for every block of L low digit columns: (L, array (q^(L n), t))."""
        L = max(1, int(math.log(4096) / (self.n * math.log(self.q))))
        side = self.q**L
        grid = np.stack(np.unravel_index(np.arange(side**self.n), (side,) * self.n), axis=1)
        state = np.broadcast_to(np.arange(self.t), (grid.shape[0], self.t)).copy()
        pts = grid.astype(np.int64)
        for _ in range(L):
            col = np.zeros(pts.shape[0], dtype=np.int64)
            for i in range(self.n):
                col = col * self.q + pts[:, i] % self.q
            pts //= self.q
            state = self.successors[state, col[:, None]]
        return L, state

    def kernel_vectors(self, points: np.ndarray) -> np.ndarray:
        """Kernel vectors at each row of ``points``; shape (m, t).

        Points are split as x = q^L h + l: the low digits of every l are
        read once from a precomputed table and each distinct h is walked
        once from every state.
        """
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.n)
        m = points.shape[0]
        if m < 256:
            start = np.broadcast_to(np.arange(self.t), (m, self.t)).T.reshape(-1)
            pts = np.tile(points, (self.t, 1))
            final = _walk(self.successors, self.q, start, pts)
            return self.outputs[final].reshape(self.t, m).T
        L, low_maps = self._low_maps
        side = self.q**L
        low = np.ravel_multi_index(tuple((points % side).T), (side,) * self.n)
        high = points // side
        dims = tuple(int(v) + 1 for v in high.max(axis=0))
        keys, inv = np.unique(np.ravel_multi_index(tuple(high.T), dims), return_inverse=True)
        highs = np.stack(np.unravel_index(keys, dims), axis=1).astype(np.int64)
        u = highs.shape[0]
        start = np.broadcast_to(np.arange(self.t), (u, self.t)).T.reshape(-1)
        high_final = _walk(self.successors, self.q, start, np.tile(highs, (self.t, 1)))
        high_final = high_final.reshape(self.t, u).T  # (u, t): final state from each start
        final = high_final[inv.reshape(-1)[:, None], low_maps[low]]
        return self.outputs[final]

    def values(self, points: np.ndarray) -> np.ndarray:
        """The original sequence at each row of ``points``."""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.n)
        start = np.full(points.shape[0], self.component_index)
        return self.outputs[_walk(self.successors, self.q, start, points)]

    def as_automaton(self) -> AutomatonSpec:
        """The closure itself read as an automaton whose states are the components."""
        return AutomatonSpec(
            self.q,
            self.n,
            tuple(range(self.t)),
            self.component_index,
            tuple(tuple(int(k) for k in row) for row in self.successors),
            tuple(complex(v) for v in self.outputs),
        )

    @cached_property
    def reduced(self) -> ReducedSystem:
        mats = self.matrix_stack().astype(complex)
        basis: list[np.ndarray] = []
        scale = max(1.0, float(np.abs(self.outputs).max()))

        def absorb(v):
            w = v.astype(complex)
            for b in basis:
                w = w - (b.conj() @ w) * b
            for b in basis:
                w = w - (b.conj() @ w) * b
            nrm = np.linalg.norm(w)
            if nrm > 1e-10 * scale:
                basis.append(w / nrm)
                return True
            return False

        pending = deque()
        if absorb(self.outputs):
            pending.append(basis[-1])
        while pending:
            v = pending.popleft()
            for m in mats:
                if absorb(m @ v):
                    pending.append(basis[-1])
        if not basis:
            # the zero sequence: any invariant subspace will do, take the whole space
            return ReducedSystem(np.eye(self.t, dtype=complex), mats)
        w = np.stack(basis, axis=1)
        red = np.einsum("ti,ctu,uj->cij", w.conj(), mats, w)
        return ReducedSystem(w, red)


def _signature(spec: AutomatonSpec, start: int) -> tuple:
    """Canonical form of the sub-automaton reachable from ``start``."""
    order = spec.reachable(start)
    relabel = {s: i for i, s in enumerate(order)}
    return tuple(
        (spec.outputs[s], tuple(relabel[k] for k in spec.transitions[s])) for s in order
    )


def kernel_closure(spec: AutomatonSpec, cap: int = DEFAULT_CLOSURE_CAP) -> KernelSystem:
    """Close the sequence under the q^n decimations x -> qx + y.

    Each reachable state stands for one decimated subsequence; states whose
    reachable sub-automata are isomorphic are the same sequence and are
    merged. The original sequence is component 0.
    """
    reach = spec.reachable()
    if len(reach) > cap:
        raise KernelOverflow(f"closure has {len(reach)} elements, cap is {cap}")
    classes: dict[tuple, int] = {}
    cls_of = {}
    for s in reach:
        sig = _signature(spec, s)
        cls_of[s] = classes.setdefault(sig, len(classes))
    # number the classes in breadth-first order from the initial state
    rep = {}
    for s in reach:
        rep.setdefault(cls_of[s], s)
    order = []
    seen = set()
    queue = deque([cls_of[spec.initial]])
    seen.add(queue[0])
    while queue:
        c = queue.popleft()
        order.append(c)
        for k in spec.transitions[rep[c]]:
            ck = cls_of[k]
            if ck not in seen:
                seen.add(ck)
                queue.append(ck)
    pos = {c: i for i, c in enumerate(order)}
    succ = np.array(
        [[pos[cls_of[k]] for k in spec.transitions[rep[c]]] for c in order], dtype=np.int64
    )
    outs = np.array([spec.outputs[rep[c]] for c in order], dtype=complex)
    labels = tuple(spec.states[rep[c]] for c in order)
    return KernelSystem(spec.q, spec.n, 0, succ, outs, labels)


@dataclass(frozen=True)
class PeriodicSeq:
    """A sequence on N^n with period ``c`` in every coordinate."""

    c: int
    n: int
    values: np.ndarray  # shape (c,)*n

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("period must be positive")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.c,) * self.n:
            raise ValueError(f"expected values of shape {(self.c,) * self.n}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_list(cls, values: Sequence[complex]) -> "PeriodicSeq":
        return cls(len(values), 1, np.asarray(values, dtype=complex))

    def __call__(self, x: Sequence[int]) -> complex:
        return complex(self.values[tuple(int(v) % self.c for v in x)])


def periodic_product(spec: AutomatonSpec, b: PeriodicSeq) -> AutomatonSpec:
    """Automaton for the pointwise product a_x * b_x.

    States are (state of ``spec``, residues of x mod c read so far,
    q^(digits read) mod c). The state set and transitions only depend on
    q, n, c and ``spec``; the values of ``b`` enter through the outputs.
    """
    if b.n != spec.n:
        raise ValueError("sequence and periodic factor must have the same arity")
    q, n, c = spec.q, spec.n, b.c
    cols = digit_tuples(q, n)
    start = (spec.initial, (0,) * n, 1 % c)
    index = {start: 0}
    order = [start]
    table = []
    k = 0
    while k < len(order):
        s, res, w = order[k]
        row = []
        for ci, y in enumerate(cols):
            nxt = (
                spec.transitions[s][ci],
                tuple((r + yi * w) % c for r, yi in zip(res, y)),
                (w * q) % c,
            )
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        table.append(tuple(row))
        k += 1
    outs = tuple(spec.outputs[s] * complex(b.values[res]) for s, res, _ in order)
    labels = tuple((spec.states[s], res, w) for s, res, w in order)
    return AutomatonSpec(q, n, labels, 0, tuple(table), outs)


def lift_sequence(spec: AutomatonSpec) -> AutomatonSpec:
    """The (n+1)-index sequence b with b_(x, z) = a_x if z == 1 else 0."""
    q, n = spec.q, spec.n
    phases = ("start", "one", "dead")
    states = [(s, ph) for s in range(spec.size) for ph in phases]
    index = {st: i for i, st in enumerate(states)}
    table = []
    for s, ph in states:
        row = []
        for y in digit_tuples(q, n + 1):
            ns = spec.transitions[s][spec.column_index(y[:n])]
            yz = y[n]
            if ph == "start":
                nph = "one" if yz == 1 else "dead"
            elif ph == "one":
                nph = "one" if yz == 0 else "dead"
            else:
                nph = "dead"
            row.append(index[(ns, nph)])
        table.append(tuple(row))
    outs = tuple(spec.outputs[s] if ph == "one" else 0j for s, ph in states)
    labels = tuple((spec.states[s], ph) for s, ph in states)
    full = AutomatonSpec(q, n + 1, labels, index[(spec.initial, "start")], tuple(table), outs)
    keep = full.reachable()
    remap = {old: new for new, old in enumerate(keep)}
    return AutomatonSpec(
        q,
        n + 1,
        tuple(full.states[i] for i in keep),
        0,
        tuple(tuple(remap[k] for k in full.transitions[i]) for i in keep),
        tuple(full.outputs[i] for i in keep),
    )


def digit_sum_zeta(q: int, r: int, j: int = 1, n: int = 1) -> AutomatonSpec:
    """a_x = zeta^(s_q(x_1) + ... + s_q(x_n)) with zeta = exp(2 pi i j / r)."""
    if r < 1:
        raise InvalidAutomaton("root order must be positive")
    zeta = cmath.exp(2j * cmath.pi * j / r)
    powers = [1 + 0j] + [zeta**e for e in range(1, r)]
    for e in range(r):
        if abs(powers[e].imag) < 1e-15:
            powers[e] = complex(round(powers[e].real, 15), 0.0)
        if abs(powers[e].real) < 1e-15:
            powers[e] = complex(0.0, powers[e].imag)
    cols = digit_tuples(q, n)
    table = tuple(tuple((e + sum(y)) % r for y in cols) for e in range(r))
    return AutomatonSpec(q, n, tuple(range(r)), 0, table, tuple(powers))


def thue_morse(n: int = 1) -> AutomatonSpec:
    """(-1)^(s_2(x_1) + ... + s_2(x_n))."""
    return digit_sum_zeta(2, 2, 1, n)


def constant(q: int = 2, n: int = 1, value: complex = 1.0) -> AutomatonSpec:
    return AutomatonSpec(q, n, (0,), 0, ((0,) * q**n,), (complex(value),))


_NAMED = re.compile(r"^\s*([a-z\-]+)\s*(?:\(([^)]*)\))?\s*$")


def named_automaton(name: str, q: int | None = None, n: int = 1) -> AutomatonSpec:
    """Resolve 'thue-morse', 'constant', 'constant(q)' or 'digit-sum-zeta(q, r, j)'."""
    m = _NAMED.match(name)
    if not m:
        raise ParseError(f"unrecognised automaton name {name!r}")
    key, argtext = m.group(1), m.group(2)
    try:
        args = [int(a) for a in argtext.split(",")] if argtext else []
    except ValueError as exc:
        raise ParseError(f"bad arguments in {name!r}") from exc
    if key == "thue-morse":
        if args or (q is not None and q != 2):
            raise ParseError("thue-morse is defined in base 2 only")
        return thue_morse(n)
    if key == "constant":
        radix = args[0] if args else (q or 2)
        return constant(radix, n)
    if key == "digit-sum-zeta":
        if len(args) not in (2, 3):
            raise ParseError("digit-sum-zeta takes (q, r) or (q, r, j)")
        if q is not None and q != args[0]:
            raise ParseError("radix given twice with different values")
        return digit_sum_zeta(args[0], args[1], args[2] if len(args) == 3 else 1, n)
    raise ParseError(f"unknown automaton {key!r}")


def automaton_to_dict(spec: AutomatonSpec) -> dict:
    names = [str(s) for s in spec.states]
    return {
        "radix": spec.q,
        "arity": spec.n,
        "states": names,
        "initial": names[spec.initial],
        "transitions": [
            {"from": names[i], "digits": list(y), "to": names[spec.transitions[i][c]]}
            for i in range(spec.size)
            for c, y in enumerate(digit_tuples(spec.q, spec.n))
        ],
        "outputs": {names[i]: [v.real, v.imag] for i, v in enumerate(spec.outputs)},
    }


def automaton_from_dict(data: Mapping) -> AutomatonSpec:
    try:
        q, n = int(data["radix"]), int(data["arity"])
        states = [str(s) for s in data["states"]]
        trans = {(str(t["from"]), tuple(int(v) for v in t["digits"])): str(t["to"])
                 for t in data["transitions"]}
        outs = {}
        for k, v in data["outputs"].items():
            outs[str(k)] = complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return AutomatonSpec.from_mapping(q, n, states, str(data["initial"]), trans, outs)
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed automaton definition: {exc}") from exc


def load_automaton(path: str | Path) -> AutomatonSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return automaton_from_dict(data)
