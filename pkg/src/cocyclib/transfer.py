"""Reconstruction of transfer functions between cohomologous cocycles.

The conjugacy convention throughout is A(x) = C(shift x) B(x) C(x)^{-1}.
Values of C are propagated from per-symbol basepoint seeds by two-leg
holonomy transport: a value moves along a leg as C -> H^A C (H^B)^{-1}.
For block upper-triangular pairs the superdiagonal peel recovers C block by
block: orthogonal diagonal blocks first, then one upper-diagonal offset at
a time through 2x2-block subsystems, conjugating off each recovered layer.

Corner recovery transports the embedded unipotent [[Id, C_ij], [0, Id]] by
the full 2x2-subsystem holonomies.  Their diagonal parts are exactly the
diagonal-block holonomies H^1, H^2, so this specializes to the plain
C -> H^1 C (H^2)^{-1} rule whenever the subsystem holonomy corners of the
two cocycles agree (window-0 data); in general the corner correction term
is required for the recovered evaluator to conjugate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cocycle import LocallyConstantCocycle, coboundary_conjugate, iterate
from .holonomy import stable_holonomy, unstable_holonomy
from .linalg import condition_number
from .sft import (
    BudgetExceededError,
    MetricParams,
    PeriodicPoint,
    SymbolicPoint,
    TransitionMatrix,
    Word,
    admissible_words,
    bracket,
    close_word,
    distance,
    periodic_point,
    shortest_return_cycle,
)
from .zimmer import ZimmerDescriptor, membership

HOLDER_SENTINEL = math.inf

MATERIALIZE_BUDGET = 600_000


class StageError(RuntimeError):
    """A peeling stage left a residual above tolerance."""

    def __init__(self, stage: str, residual: float, tol: float):
        super().__init__(
            f"peel stage {stage!r} residual {residual:.3e} exceeds {tol:.3e}"
        )
        self.stage = stage
        self.residual = residual
        self.tol = tol


def default_basepoints(q: TransitionMatrix) -> tuple[SymbolicPoint, ...]:
    """One periodic basepoint per symbol i, lying in the cylinder [0; i]."""
    return tuple(periodic_point(q, shortest_return_cycle(q, i)).as_point()
                 for i in range(q.size))


def _leg(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
         value: np.ndarray, frm: SymbolicPoint, to: SymbolicPoint,
         kind: str) -> np.ndarray:
    if kind == "stable":
        ha = stable_holonomy(a, frm, to).matrix
        hb = stable_holonomy(b, frm, to).matrix
    else:
        ha = unstable_holonomy(a, frm, to).matrix
        hb = unstable_holonomy(b, frm, to).matrix
    return ha @ value @ np.linalg.inv(hb)


@dataclass(frozen=True, eq=False)
class TransferEvaluator:
    """Transfer values propagated from basepoint seeds by holonomy transport."""

    cocycle_a: LocallyConstantCocycle
    cocycle_b: LocallyConstantCocycle
    basepoints: tuple[SymbolicPoint, ...]
    base_values: tuple[np.ndarray, ...]
    rule: str = "holonomy-two-leg"

    def __post_init__(self):
        q = self.cocycle_a.q
        if len(self.basepoints) != q.size or len(self.base_values) != q.size:
            raise ValueError("need one basepoint and seed per symbol")
        for i, w in enumerate(self.basepoints):
            if w[0] != i:
                raise ValueError(f"basepoint {i} does not lie in the cylinder [0; {i}]")
        for i, v in enumerate(self.base_values):
            if condition_number(np.asarray(v)) > 1e14:
                raise ValueError(f"base value {i} is not safely invertible")

    def evaluate(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        """Two-leg transport of the seed at the basepoint sharing x_0.

        order "us": stable leg basepoint -> bracket(x, basepoint), then
        unstable leg on to x.  order "su" runs the legs through the other
        bracket point.
        """
        i = x[0]
        w = self.basepoints[i]
        value = np.asarray(self.base_values[i], dtype=float)
        a, b = self.cocycle_a, self.cocycle_b
        if order == "us":
            mid = bracket(x, w)  # past of x, future of the basepoint
            value = _leg(a, b, value, w, mid, "stable")
            return _leg(a, b, value, mid, x, "unstable")
        if order == "su":
            mid = bracket(w, x)  # past of the basepoint, future of x
            value = _leg(a, b, value, w, mid, "unstable")
            return _leg(a, b, value, mid, x, "stable")
        raise ValueError(f"unknown transport order {order!r}")

    def __call__(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        return self.evaluate(x, order)

    def to_jsonable(self) -> dict:
        return {
            "rule": self.rule,
            "basepoints": [
                {"left_period": list(w.left_period), "core": list(w.core),
                 "right_period": list(w.right_period),
                 "origin_offset": w.origin_offset}
                for w in self.basepoints
            ],
            "base_values": [np.asarray(v).tolist() for v in self.base_values],
            "cocycles": {
                name: {"window_radius": c.window_radius,
                       "table": {" ".join(map(str, w)): m.tolist()
                                 for w, m in sorted(c.table.items())}}
                for name, c in (("a", self.cocycle_a), ("b", self.cocycle_b))
            },
        }


def propagate(evaluator, x: SymbolicPoint, order: str = "us") -> np.ndarray:
    """Evaluate a transfer evaluator (or plain callable) at a point."""
    if hasattr(evaluator, "evaluate"):
        return evaluator.evaluate(x, order=order)
    return evaluator(x)


# ---------------------------------------------------------------------------
# block extraction helpers


def block_cocycle(a: LocallyConstantCocycle, desc: ZimmerDescriptor,
                  i: int) -> LocallyConstantCocycle:
    """Generator of the i-th diagonal block (valid for block-triangular tables)."""
    table = {w: desc.block(m, i, i).copy() for w, m in a.table.items()}
    return LocallyConstantCocycle(a.q, a.window_radius, desc.block_dims[i], table)


def subsystem_cocycle(a: LocallyConstantCocycle, desc: ZimmerDescriptor,
                      i: int, j: int) -> LocallyConstantCocycle:
    """2x2-block corner subsystem [[M_ii, M_ij], [0, M_jj]]; again a cocycle."""
    di, dj = desc.block_dims[i], desc.block_dims[j]
    d = di + dj

    def embed(m: np.ndarray) -> np.ndarray:
        out = np.zeros((d, d))
        out[:di, :di] = desc.block(m, i, i)
        out[:di, di:] = desc.block(m, i, j)
        out[di:, di:] = desc.block(m, j, j)
        return out

    table = {w: embed(m) for w, m in a.table.items()}
    return LocallyConstantCocycle(a.q, a.window_radius, d, table)


def embed_corner(corner: np.ndarray, di: int, dj: int) -> np.ndarray:
    out = np.eye(di + dj)
    out[:di, di:] = corner
    return out


def _refined_value(a: LocallyConstantCocycle, word: Word, radius: int) -> np.ndarray:
    k = a.window_radius
    return a.table[word[radius - k: radius + k + 1]]


def _block_difference(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
                      desc: ZimmerDescriptor,
                      blocks: Sequence[tuple[int, int]]) -> float:
    """Max norm difference of the chosen blocks over a common refinement."""
    radius = max(a.window_radius, b.window_radius)
    worst = 0.0
    for w in admissible_words(a.q, 2 * radius + 1):
        va = _refined_value(a, w, radius)
        vb = _refined_value(b, w, radius)
        for i, j in blocks:
            worst = max(worst, float(np.max(np.abs(
                desc.block(va, i, j) - desc.block(vb, i, j)))))
    return worst


def materialize(q: TransitionMatrix, func: Callable[[SymbolicPoint], np.ndarray],
                radius: int, dimension: int,
                budget: int = MATERIALIZE_BUDGET) -> LocallyConstantCocycle:
    """Tabulate a locally constant point function over admissible windows."""
    if q.size ** (2 * radius + 1) > budget:
        raise BudgetExceededError(
            f"materializing a window-{radius} table exceeds the budget"
        )
    table = {}
    for w in admissible_words(q, 2 * radius + 1):
        rep = close_word(q, w, origin_offset=radius)
        table[w] = func(rep)
    return LocallyConstantCocycle(q, radius, dimension, table)


def minimize_table(a: LocallyConstantCocycle, tol: float = 1e-13) -> LocallyConstantCocycle:
    """Shrink the window radius while all refinements of a subword agree."""
    current = a
    while current.window_radius > 0:
        k = current.window_radius
        groups: dict[Word, np.ndarray] = {}
        ok = True
        for w, m in current.table.items():
            sub = w[1:-1]
            if sub in groups:
                if np.max(np.abs(groups[sub] - m)) > tol:
                    ok = False
                    break
            else:
                groups[sub] = m
        if not ok:
            return current
        current = LocallyConstantCocycle(current.q, k - 1, current.dimension,
                                         dict(groups))
    return current


def _is_identity_table(a: LocallyConstantCocycle, tol: float = 1e-12) -> bool:
    eye = np.eye(a.dimension)
    return all(np.max(np.abs(m - eye)) <= tol for m in a.table.values())


# ---------------------------------------------------------------------------
# corner and diagonal stage evaluators


@dataclass(frozen=True, eq=False)
class CornerEvaluator:
    """Upper-corner recovery over a 2x2-block subsystem."""

    subsystem: TransferEvaluator
    d_top: int
    d_bottom: int
    diag_tol: float = 1e-8

    def evaluate(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        m = self.subsystem.evaluate(x, order=order)
        di = self.d_top
        eye_res = max(
            float(np.max(np.abs(m[:di, :di] - np.eye(di)))),
            float(np.max(np.abs(m[di:, di:] - np.eye(self.d_bottom)))),
            float(np.max(np.abs(m[di:, :di]))),
        )
        if eye_res > self.diag_tol:
            raise StageError("corner-transport-diagonal", eye_res, self.diag_tol)
        return m[:di, di:]

    def __call__(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        return self.evaluate(x, order)


def two_block_recover(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
                      desc: ZimmerDescriptor,
                      base_corner_values: Sequence[np.ndarray],
                      tol: float = 1e-8) -> CornerEvaluator:
    """Evaluator for the upper corner of a unipotent conjugacy between two
    2-block cocycles with matching diagonal blocks.

    Corner seeds (one per symbol) are transported by the subsystem
    holonomies, whose diagonal parts are the diagonal-block holonomies
    H^1 and H^2 of the recovery rule C(x') = H^1 C(x) (H^2)^{-1}.
    """
    if desc.num_blocks != 2:
        raise ValueError("two_block_recover needs a 2-block descriptor")
    if desc.exponent != 0.0:
        raise ValueError("descriptor exponent must be 0")
    for cocycle, name in ((a, "first"), (b, "second")):
        for w, m in cocycle.table.items():
            if not membership(m, desc, tol):
                raise ValueError(f"{name} cocycle fails membership at window {w}")
    diag_gap = _block_difference(a, b, desc, [(0, 0), (1, 1)])
    if diag_gap > tol:
        raise ValueError(
            f"diagonal blocks differ by {diag_gap:.3e}; an identity-diagonal "
            f"conjugacy cannot exist"
        )
    d1, d2 = desc.block_dims
    basepoints = default_basepoints(a.q)
    seeds = tuple(embed_corner(np.asarray(v, dtype=float), d1, d2)
                  for v in base_corner_values)
    sub = TransferEvaluator(a, b, basepoints, seeds, rule="two-block-corner")
    return CornerEvaluator(sub, d1, d2)


@dataclass(frozen=True, eq=False)
class _DiagonalStage:
    descriptor: ZimmerDescriptor
    evaluators: tuple[TransferEvaluator, ...]

    def evaluate(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        d = self.descriptor.dim
        o = self.descriptor.offsets()
        out = np.zeros((d, d))
        for t, ev in enumerate(self.evaluators):
            out[o[t]:o[t + 1], o[t]:o[t + 1]] = ev.evaluate(x, order=order)
        return out


@dataclass(frozen=True, eq=False)
class _OffsetStage:
    descriptor: ZimmerDescriptor
    offset: int
    corners: tuple[tuple[int, CornerEvaluator], ...]

    def evaluate(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        d = self.descriptor.dim
        o = self.descriptor.offsets()
        out = np.eye(d)
        for i, ev in self.corners:
            j = i + self.offset
            out[o[i]:o[i + 1], o[j]:o[j + 1]] = ev.evaluate(x, order=order)
        return out


@dataclass(eq=False)
class PeeledEvaluator:
    """Composed transfer evaluator produced by the superdiagonal peel.

    Stages apply in construction order: the value at x is the left-ordered
    product stage_R(x) ... stage_0(x).
    """

    cocycle_a: LocallyConstantCocycle
    cocycle_b: LocallyConstantCocycle
    descriptor: ZimmerDescriptor
    basepoints: tuple[SymbolicPoint, ...]
    stages: list = field(default_factory=list)
    stage_tables: list = field(default_factory=list)
    stage_names: list = field(default_factory=list)
    stage_residuals: list = field(default_factory=list)
    final_residual: float = 0.0

    def evaluate(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        out = np.eye(self.descriptor.dim)
        if order == "us":
            # The materialized stage tables agree with the us-ordered
            # transport by construction; lookups are much cheaper.
            for table in self.stage_tables:
                k = table.window_radius
                out = table.table[x.window(-k, k)] @ out
            return out
        for stage in self.stages:
            out = stage.evaluate(x, order=order) @ out
        return out

    def __call__(self, x: SymbolicPoint, order: str = "us") -> np.ndarray:
        return self.evaluate(x, order)

    def to_jsonable(self) -> dict:
        tables = []
        for name, table in zip(self.stage_names, self.stage_tables):
            entry = {
                "stage": name,
                "window_radius": table.window_radius,
                "table": {" ".join(map(str, w)): m.tolist()
                          for w, m in sorted(table.table.items())},
            }
            tables.append(entry)
        return {
            "rule": "superdiagonal-peel",
            "basepoints": [list(w.window(-4, 4)) for w in self.basepoints],
            "stage_tables": tables,
            "stage_residuals": list(self.stage_residuals),
            "final_residual": self.final_residual,
        }


def superdiagonal_peel(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
                       desc: ZimmerDescriptor,
                       base_values: Sequence[np.ndarray],
                       tol: float = 1e-8,
                       membership_tol: float = 1e-8) -> PeeledEvaluator:
    """Recover C with A(x) = C(shift x) B(x) C(x)^{-1} one block layer at a
    time.

    Pipeline: (i) recover the orthogonal diagonal blocks by holonomy
    propagation from the basepoint seeds, (ii) conjugate the block-diagonal
    part off B, (iii) for each offset r recover the (i, i+r) corners through
    2x2-block subsystems, assemble the unipotent layer, conjugate it off and
    repeat.  Every stage checks that the entries of B now agree with A up to
    the current offset; a failed check aborts with a stage-tagged error.
    """
    if desc.exponent != 0.0:
        raise ValueError("descriptor exponent must be 0 (normalize first)")
    if len(base_values) != a.q.size:
        raise ValueError("need one base value per symbol")
    for cocycle, name in ((a, "first"), (b, "second")):
        for w, m in cocycle.table.items():
            if not membership(m, desc, membership_tol):
                raise ValueError(f"{name} cocycle fails membership at window {w}")

    basepoints = default_basepoints(a.q)
    result = PeeledEvaluator(a, b, desc, basepoints)
    acc = [np.eye(desc.dim) for _ in range(a.q.size)]
    b_current = b
    cond_scale = 1.0

    def remaining_seed(symbol: int) -> np.ndarray:
        return np.asarray(base_values[symbol], float) @ np.linalg.inv(acc[symbol])

    def install_stage(stage, name: str, check_blocks) -> None:
        nonlocal b_current, cond_scale
        radius = 2 * max(a.window_radius, b_current.window_radius)
        table = materialize(a.q, lambda pt: stage.evaluate(pt, order="us"),
                            radius, desc.dim)
        table = minimize_table(table)
        if _is_identity_table(table):
            residual = _block_difference(a, b_current, desc, check_blocks)
            stage_tol = tol * cond_scale
            if residual > stage_tol:
                raise StageError(name, residual, stage_tol)
            result.stage_residuals.append(residual)
            return
        result.stages.append(stage)
        result.stage_tables.append(table)
        result.stage_names.append(name)
        b_current = coboundary_conjugate(b_current, table)
        b_current = minimize_table(b_current)
        cond_scale *= max(condition_number(m) for m in table.table.values())
        for s in range(a.q.size):
            acc[s] = stage.evaluate(basepoints[s], order="us") @ acc[s]
        residual = _block_difference(a, b_current, desc, check_blocks)
        stage_tol = tol * cond_scale
        if residual > stage_tol:
            raise StageError(name, residual, stage_tol)
        result.stage_residuals.append(residual)

    # (i) + (ii): orthogonal diagonal blocks.
    diag_evs = []
    for t in range(desc.num_blocks):
        a_t = block_cocycle(a, desc, t)
        b_t = block_cocycle(b_current, desc, t)
        seeds = tuple(desc.block(remaining_seed(s), t, t)
                      for s in range(a.q.size))
        diag_evs.append(TransferEvaluator(a_t, b_t, basepoints, seeds,
                                          rule="diagonal-block"))
    install_stage(_DiagonalStage(desc, tuple(diag_evs)), "diagonal",
                  [(t, t) for t in range(desc.num_blocks)])

    # (iii): superdiagonal offsets.
    checked = [(t, t) for t in range(desc.num_blocks)]
    for r in range(1, desc.num_blocks):
        corners = []
        for i in range(desc.num_blocks - r):
            j = i + r
            asub = subsystem_cocycle(a, desc, i, j)
            bsub = subsystem_cocycle(b_current, desc, i, j)
            di, dj = desc.block_dims[i], desc.block_dims[j]
            seeds = tuple(embed_corner(desc.block(remaining_seed(s), i, j), di, dj)
                          for s in range(a.q.size))
            sub = TransferEvaluator(asub, bsub, basepoints, seeds,
                                    rule="two-block-corner")
            corners.append((i, CornerEvaluator(sub, di, dj, diag_tol=tol * cond_scale)))
        checked = checked + [(i, i + r) for i in range(desc.num_blocks - r)]
        install_stage(_OffsetStage(desc, r, tuple(corners)), f"offset-{r}", checked)

    result.final_residual = _block_difference(
        a, b_current, desc,
        [(i, j) for i in range(desc.num_blocks)
         for j in range(i, desc.num_blocks)])
    return result


# ---------------------------------------------------------------------------
# verification and regression


@dataclass(frozen=True)
class ConjugacyReport:
    max_residual: float
    holder_alpha: float
    holder_constant: float
    n_samples: int
    tol: float
    passed: bool
    convention: str = "A(x) = C(shift x) B(x) C(x)^{-1}"

    def to_jsonable(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "holder_alpha": None if math.isinf(self.holder_alpha) else self.holder_alpha,
            "holder_alpha_locally_constant": math.isinf(self.holder_alpha),
            "holder_constant": self.holder_constant,
            "n_samples": self.n_samples,
            "tol": self.tol,
            "passed": self.passed,
            "convention": self.convention,
        }


def conjugacy_residual(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
                       evaluator, x: SymbolicPoint, order: str = "us") -> float:
    c_here = propagate(evaluator, x, order)
    c_next = propagate(evaluator, x.shifted(1), order)
    lhs = a.table[a.window_of(x)]
    rhs = c_next @ b.table[b.window_of(x)] @ np.linalg.inv(c_here)
    return float(np.max(np.abs(lhs - rhs)))


def verify_conjugacy(a: LocallyConstantCocycle, b: LocallyConstantCocycle,
                     evaluator, samples: Sequence[SymbolicPoint],
                     tol: float = 1e-8,
                     metric: MetricParams = MetricParams()) -> ConjugacyReport:
    """Max residual of the conjugacy equation over the samples, plus a
    regularity regression of the evaluator over consecutive sample pairs."""
    if not samples:
        raise ValueError("samples must be nonempty")
    worst = max(conjugacy_residual(a, b, evaluator, x) for x in samples)
    pairs = list(zip(samples, samples[1:]))
    alpha, constant = holder_estimate(evaluator, pairs, metric=metric) \
        if pairs else (HOLDER_SENTINEL, 0.0)
    return ConjugacyReport(worst, alpha, constant, len(samples), tol,
                           worst <= tol)


def holder_estimate(evaluator, pairs: Sequence[tuple[SymbolicPoint, SymbolicPoint]],
                    metric: MetricParams = MetricParams(),
                    cutoff: float | None = None) -> tuple[float, float]:
    """Least-squares slope/constant of log ||C(x) - C(y)|| against
    log distance, over pairs closer than the cutoff.

    Returns (inf, 0.0) when every close pair has identical values (the
    evaluator is locally constant at the sampled scales).
    """
    if cutoff is None:
        cutoff = math.exp(-metric.tau) * (1 + 1e-12)
    logs_d = []
    logs_v = []
    for x, y in pairs:
        d = distance(x, y, metric)
        if d == 0.0 or d > cutoff:
            continue
        gap = float(np.max(np.abs(propagate(evaluator, x) - propagate(evaluator, y))))
        if gap <= 1e-15:
            continue
        logs_d.append(math.log(d))
        logs_v.append(math.log(gap))
    if not logs_d:
        return HOLDER_SENTINEL, 0.0
    if len(set(logs_d)) == 1:
        return HOLDER_SENTINEL, 0.0
    slope, intercept = np.polyfit(np.array(logs_d), np.array(logs_v), 1)
    return float(slope), float(math.exp(intercept))


@dataclass(frozen=True)
class PeriodicConsistency:
    """Solution space of the periodic intertwining A^q(p) X = X B^q(p)."""

    basis: tuple[np.ndarray, ...]
    invertible_example: np.ndarray | None

    @property
    def has_invertible(self) -> bool:
        return self.invertible_example is not None


def periodic_consistency_solve(a: LocallyConstantCocycle,
                               b: LocallyConstantCocycle, p: PeriodicPoint,
                               sv_tol: float = 1e-10,
                               rng: np.random.Generator | None = None) -> PeriodicConsistency:
    """Basis of {X : A^q(p) X = X B^q(p)} with an invertible representative
    when one exists (searched over random basis combinations)."""
    d = a.dimension
    ma = iterate(a, p.as_point(), p.period)
    mb = iterate(b, p.as_point(), p.period)
    # vec is column-stacking: vec(M X) = (I kron M) vec X, vec(X N) = (N^T kron I) vec X.
    k = np.kron(np.eye(d), ma) - np.kron(mb.T, np.eye(d))
    _, s, vt = np.linalg.svd(k)
    scale = max(1.0, s[0]) if s.size else 1.0
    null = [vt[i].reshape(d, d, order="F") for i in range(d * d)
            if s[i] <= sv_tol * scale]
    basis = tuple(m / np.linalg.norm(m) for m in null)
    if rng is None:
        rng = np.random.default_rng(11)
    invertible = None
    det_tol = 1e-10
    candidates = list(basis) + [
        sum(c * m for c, m in zip(rng.normal(size=len(basis)), basis))
        for _ in range(20) if basis
    ]
    for cand in candidates:
        cand = np.asarray(cand)
        norm = np.linalg.norm(cand)
        if norm == 0:
            continue
        if abs(np.linalg.det(cand / norm)) > det_tol:
            invertible = cand
            break
    return PeriodicConsistency(basis, invertible)
