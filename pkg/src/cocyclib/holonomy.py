"""Stable and unstable holonomies, exact for locally constant cocycles.

For a window-k generator the defining limit lim (A^n(z))^{-1} A^n(y)
stabilizes exactly at n = k because all factors beyond step k coincide
along a common local stable set.  A truncated numeric fallback is kept for
generators that are not locally constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import math

from .cocycle import LocallyConstantCocycle, iterate
from .sft import MetricParams, SymbolicPoint, bracket, same_future, same_past


@dataclass(frozen=True, eq=False)
class HolonomyMap:
    """Invertible fiber transport tagged with its endpoints and kind."""

    from_point: SymbolicPoint
    to_point: SymbolicPoint
    kind: str  # stable | unstable | composed-su | composed-us
    matrix: np.ndarray
    stabilization_step: int

    def inverse(self) -> "HolonomyMap":
        return HolonomyMap(self.to_point, self.from_point, self.kind,
                           np.linalg.inv(self.matrix), self.stabilization_step)


def stable_holonomy(a: LocallyConstantCocycle, y: SymbolicPoint,
                    z: SymbolicPoint) -> HolonomyMap:
    """Transport from the fiber of y to the fiber of z on a common local
    stable set: the exact value (A^k(z))^{-1} A^k(y)."""
    if not same_future(y, z):
        raise ValueError("points do not lie on a common local stable set")
    k = a.window_radius
    matrix = np.linalg.solve(iterate(a, z, k), iterate(a, y, k))
    return HolonomyMap(y, z, "stable", matrix, k)


def unstable_holonomy(a: LocallyConstantCocycle, y: SymbolicPoint,
                      z: SymbolicPoint) -> HolonomyMap:
    """Mirror of the stable transport along backward iterates; exact value
    (A^{-k}(z))^{-1} A^{-k}(y) for points on a common local unstable set."""
    if not same_past(y, z):
        raise ValueError("points do not lie on a common local unstable set")
    k = a.window_radius
    matrix = np.linalg.solve(iterate(a, z, -k), iterate(a, y, -k))
    return HolonomyMap(y, z, "unstable", matrix, k)


def truncated_stable_holonomy(a: LocallyConstantCocycle, y: SymbolicPoint,
                              z: SymbolicPoint, tol: float = 1e-13,
                              max_n: int = 64) -> HolonomyMap:
    """Numeric fallback: truncate the limit when successive terms differ by
    less than tol.  Agrees with the exact product for locally constant
    generators once n reaches the window radius."""
    if not same_future(y, z):
        raise ValueError("points do not lie on a common local stable set")
    prev = np.eye(a.dimension)
    fy = np.eye(a.dimension)
    fz = np.eye(a.dimension)
    for n in range(1, max_n + 1):
        fy = iterate(a, y.shifted(n - 1), 1) @ fy
        fz = iterate(a, z.shifted(n - 1), 1) @ fz
        current = np.linalg.inv(fz) @ fy
        if np.max(np.abs(current - prev)) < tol:
            return HolonomyMap(y, z, "stable", current, n)
        prev = current
    raise ValueError(f"truncated holonomy did not stabilize within {max_n} steps")


def truncated_unstable_holonomy(a: LocallyConstantCocycle, y: SymbolicPoint,
                                z: SymbolicPoint, tol: float = 1e-13,
                                max_n: int = 64) -> HolonomyMap:
    if not same_past(y, z):
        raise ValueError("points do not lie on a common local unstable set")
    prev = np.eye(a.dimension)
    for n in range(1, max_n + 1):
        current = np.linalg.inv(iterate(a, z, -n)) @ iterate(a, y, -n)
        if np.max(np.abs(current - prev)) < tol:
            return HolonomyMap(y, z, "unstable", current, n)
        prev = current
    raise ValueError(f"truncated holonomy did not stabilize within {max_n} steps")


def transverse_regime_tau_prime(a: LocallyConstantCocycle,
                                metric: MetricParams) -> float:
    """Scale constant 2 tau + 2 eta + ln 2 for transverse-continuity sampling.

    Quadruples used to measure transverse holonomy continuity should keep
    d(x, x') below exp(-n tau') when comparing against depth-n intertwined
    holonomies, so the sampled pairs stay inside the regime where the
    estimate applies.
    """
    return 2.0 * metric.tau + 2.0 * a.log_bound + math.log(2.0)


def composed_holonomy(a: LocallyConstantCocycle, x: SymbolicPoint,
                      y: SymbolicPoint, order: str = "us") -> HolonomyMap:
    """Transport from x to y through the bracket point.

    order "us": stable leg x -> [y, x] followed by unstable leg [y, x] -> y
    (the composition H^u H^s).  order "su": unstable leg x -> [x, y]
    followed by stable leg [x, y] -> y.  Requires x_0 = y_0.
    """
    if order == "us":
        mid = bracket(y, x)  # past of y, future of x
        first = stable_holonomy(a, x, mid)
        second = unstable_holonomy(a, mid, y)
        kind = "composed-us"
    elif order == "su":
        mid = bracket(x, y)  # past of x, future of y
        first = unstable_holonomy(a, x, mid)
        second = stable_holonomy(a, mid, y)
        kind = "composed-su"
    else:
        raise ValueError(f"unknown composition order {order!r}")
    matrix = second.matrix @ first.matrix
    step = max(first.stabilization_step, second.stabilization_step)
    return HolonomyMap(x, y, kind, matrix, step)
