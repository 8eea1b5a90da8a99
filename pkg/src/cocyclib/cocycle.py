"""Locally constant linear cocycles over a subshift of finite type.

A generator is a table from admissible windows of radius k to invertible
matrices.  Locally constant generators make every construction downstream
exact: orbit products are finite table products, holonomies stabilize after
k steps, and integrals over the measure reduce to finite cylinder sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .sft import (
    SymbolicPoint,
    TransitionMatrix,
    Word,
    admissible_words,
    as_word,
)

MAX_CONDITION = 1e14


@dataclass(frozen=True, eq=False)
class LocallyConstantCocycle:
    """Generator table over admissible windows x_{-k}..x_{k}.

    Also used for plain locally constant matrix maps (conjugators, frames):
    the cocycle structure only enters through :func:`iterate`.
    """

    q: TransitionMatrix
    window_radius: int
    dimension: int
    table: Mapping[Word, np.ndarray]

    @classmethod
    def from_table(cls, q: TransitionMatrix, window_radius: int,
                   table: Mapping) -> "LocallyConstantCocycle":
        fixed: dict[Word, np.ndarray] = {}
        dim = None
        for word, mat in table.items():
            w = as_word(word)
            m = np.array(mat, dtype=float)
            if dim is None:
                dim = m.shape[0]
            if m.shape != (dim, dim):
                raise ValueError(f"inconsistent matrix shape at window {w}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"non-finite matrix at window {w}")
            s = np.linalg.svd(m, compute_uv=False)
            if s[-1] <= 0 or s[0] / s[-1] > MAX_CONDITION:
                raise ValueError(f"matrix at window {w} is not safely invertible")
            fixed[w] = m
        if dim is None:
            raise ValueError("empty table")
        expected = list(admissible_words(q, 2 * window_radius + 1))
        missing = [w for w in expected if w not in fixed]
        if missing:
            raise ValueError(
                f"table incomplete: missing admissible windows {missing[:5]}"
                + ("..." if len(missing) > 5 else "")
            )
        return cls(q, window_radius, dim, fixed)

    @classmethod
    def from_function(cls, q: TransitionMatrix, window_radius: int,
                      func: Callable[[Word], np.ndarray]) -> "LocallyConstantCocycle":
        table = {w: func(w) for w in admissible_words(q, 2 * window_radius + 1)}
        return cls.from_table(q, window_radius, table)

    @classmethod
    def constant(cls, q: TransitionMatrix, matrix) -> "LocallyConstantCocycle":
        m = np.array(matrix, dtype=float)
        return cls.from_function(q, 0, lambda w: m)

    @cached_property
    def log_bound(self) -> float:
        """eta = max over the table of log max(||A||, ||A^-1||); always >= 0."""
        eta = 0.0
        for m in self.table.values():
            s = np.linalg.svd(m, compute_uv=False)
            eta = max(eta, math.log(s[0]), -math.log(s[-1]))
        return eta

    def window_of(self, x: SymbolicPoint) -> Word:
        k = self.window_radius
        return x.window(-k, k)


def evaluate(a: LocallyConstantCocycle, x: SymbolicPoint) -> np.ndarray:
    """Generator value at x: the table entry of the window x_{-k}..x_{k}."""
    return a.table[a.window_of(x)]


def iterate(a: LocallyConstantCocycle, x: SymbolicPoint, n: int) -> np.ndarray:
    """Orbit product A^n(x): forward product for n > 0, identity at 0, and
    the inverse-factor backward product for n < 0."""
    d = a.dimension
    result = np.eye(d)
    with np.errstate(over="ignore", invalid="ignore"):
        if n > 0:
            for j in range(n):
                result = evaluate(a, x.shifted(j)) @ result
        elif n < 0:
            for j in range(1, -n + 1):
                result = np.linalg.inv(evaluate(a, x.shifted(-j))) @ result
    if not np.all(np.isfinite(result)):
        raise OverflowError(
            f"orbit product at n={n} exceeded floating point range"
        )
    return result


def inverse_cocycle(a: LocallyConstantCocycle) -> LocallyConstantCocycle:
    """Table-level inverse: same windows, entrywise matrix inverse.

    The contract is exactly table inversion.  Orbit products of the result
    are reversed-order factors of (A^n)^{-1}; the backward product A^{-n}(x)
    is recovered from the inverted table by :func:`backward_product`.
    """
    table = {w: np.linalg.inv(m) for w, m in a.table.items()}
    return LocallyConstantCocycle(a.q, a.window_radius, a.dimension, table)


def backward_product(inv: LocallyConstantCocycle, x: SymbolicPoint,
                     n: int) -> np.ndarray:
    """A^{-n}(x) assembled from the inverted table:
    inv(shift^-n x) ... inv(shift^-1 x), equal to iterate(a, x, -n)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    result = np.eye(inv.dimension)
    for j in range(1, n + 1):
        result = evaluate(inv, x.shifted(-j)) @ result
    return result


def coboundary_conjugate(a: LocallyConstantCocycle,
                         u: LocallyConstantCocycle) -> LocallyConstantCocycle:
    """Conjugated generator x -> u(shift x) A(x) u(x)^{-1}.

    u is any locally constant invertible matrix map; the result is locally
    constant with window radius max(k_A, k_u + 1).
    """
    if u.dimension != a.dimension:
        raise ValueError("conjugator dimension does not match the cocycle")
    k = max(a.window_radius, u.window_radius + 1)
    ka, ku = a.window_radius, u.window_radius
    mid = k  # index of coordinate 0 inside a window word of length 2k+1

    def build(word: Word) -> np.ndarray:
        a_val = a.table[word[mid - ka: mid + ka + 1]]
        u_val = u.table[word[mid - ku: mid + ku + 1]]
        u_shift = u.table[word[mid + 1 - ku: mid + 2 + ku]]
        return u_shift @ a_val @ np.linalg.inv(u_val)

    return LocallyConstantCocycle.from_function(a.q, k, build)


def scale(a: LocallyConstantCocycle, factor: float) -> LocallyConstantCocycle:
    table = {w: factor * m for w, m in a.table.items()}
    return LocallyConstantCocycle(a.q, a.window_radius, a.dimension, table)


def qc_distortion(a: LocallyConstantCocycle, x: SymbolicPoint, n: int) -> float:
    """Quasiconformal distortion ||A^n(x)|| * ||(A^n(x))^{-1}|| (operator norms)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = iterate(a, x, n)
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[0] / s[-1])


def distortion_of(m: np.ndarray) -> float:
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[0] / s[-1])
