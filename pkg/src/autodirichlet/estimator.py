"""
Estimator-style wrapper around the evaluation routines.

``fit`` resolves the automaton and polynomial and builds the kernel;
``predict`` maps an array of complex s to continued series values and
``transform`` returns values alongside their error estimates.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .automaton import AutomatonSpec, KernelSystem, kernel_closure, named_automaton
from .continuation import Controls, SeriesQuery, abscissa, continue_eval, direct_sum
from .polynomial import MultiPoly, parse_poly

__all__ = ["AutomaticDirichletSeries"]


def _check_s(S) -> np.ndarray:
    arr = np.asarray(S)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError("S must be a 1-d array of complex s, or an (m, 2) array of (re, im)")
    arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("S contains non-finite values")
    return arr


class AutomaticDirichletSeries(BaseEstimator):
    """sum_x a_x x^mu / p(x)^s for an automatic sequence a, as a function of s.

    Parameters
    ----------
    automaton : str or AutomatonSpec
        Built-in name (see ``named_automaton``) or an explicit spec.
    poly : str or MultiPoly
        Denominator polynomial.
    mu : sequence of int, optional
        Monomial exponent in the numerator.
    q, n : int, optional
        Radix and arity used to resolve a built-in name.
    method : {"continue", "direct"}
        Continuation everywhere, or direct summation (convergent half-plane only).
    K, depth, N0, tol, box : truncation controls, see ``Controls``.
    """

    def __init__(self, automaton="thue-morse", poly="x", mu=None, q=None, n=1,
                 method="continue", K=30, depth=8, N0=None, tol=1e-6, box=100_000):
        self.automaton = automaton
        self.poly = poly
        self.mu = mu
        self.q = q
        self.n = n
        self.method = method
        self.K = K
        self.depth = depth
        self.N0 = N0
        self.tol = tol
        self.box = box

    def fit(self, X=None, y=None):
        """Resolve inputs and build the kernel. X and y are ignored."""
        if self.method not in ("continue", "direct"):
            raise ValueError(f"unknown method {self.method!r}")
        if isinstance(self.automaton, KernelSystem):
            self.kernel_ = self.automaton
        elif isinstance(self.automaton, AutomatonSpec):
            self.kernel_ = kernel_closure(self.automaton)
        else:
            self.kernel_ = kernel_closure(named_automaton(str(self.automaton), self.q, self.n))
        n = self.kernel_.n
        self.poly_ = self.poly if isinstance(self.poly, MultiPoly) else parse_poly(str(self.poly), n)
        self.mu_ = None if self.mu is None else tuple(int(v) for v in self.mu)
        self.controls_ = Controls(K=self.K, depth=self.depth, N0=self.N0, tol=self.tol, box=self.box)
        SeriesQuery(self.kernel_, self.poly_, 2.0, self.mu_, self.controls_)  # validates arity and mu
        self.abscissa_ = abscissa(self.poly_, self.mu_)
        return self

    def _results(self, S: Sequence[complex]):
        check_is_fitted(self, "kernel_")
        run = continue_eval if self.method == "continue" else direct_sum
        return [run(SeriesQuery(self.kernel_, self.poly_, s, self.mu_, self.controls_))
                for s in _check_s(S)]

    def predict(self, S) -> np.ndarray:
        """Series values at each s."""
        return np.array([r.value for r in self._results(S)], dtype=complex)

    def transform(self, S) -> np.ndarray:
        """(m, 2) array of value and error estimate at each s."""
        res = self._results(S)
        return np.array([[r.value, r.err_estimate] for r in res], dtype=complex)

    def fit_transform(self, X=None, y=None, S=None):
        return self.fit(X, y).transform(X if S is None else S)
