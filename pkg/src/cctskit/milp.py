"""Exact mixed-binary LP solving for the network-design models.

Two interchangeable engines sit behind one interface: the HiGHS
branch-and-bound via scipy (default; handles hundreds of binaries in
seconds) and a self-contained best-bound branch and bound over scipy LP
relaxations (useful for verification and for stepping through small
instances). Both prove optimality; tests cross-check them against each
other and against exhaustive enumeration.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog
from scipy.optimize import milp as _scipy_milp

INT_TOL = 1e-6


@dataclass
class MilpResult:
    x: np.ndarray
    objective: float
    nodes_explored: int


class MilpNodeLimit(RuntimeError):
    """Search exceeded the node budget; the instance is too large for this solver."""


def solve_milp_highs(
    c: np.ndarray,
    A_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    A_eq: np.ndarray | None,
    b_eq: np.ndarray | None,
    bounds: list[tuple[float, float]],
    binary_idx: list[int],
    mip_rel_gap: float = 1e-9,
) -> MilpResult | None:
    """Minimize c @ x with the listed variables binary, via HiGHS."""
    from scipy import sparse

    c = np.asarray(c, dtype=float)
    n = c.size
    integrality = np.zeros(n)
    integrality[binary_idx] = 1
    constraints = []
    if A_ub is not None and len(A_ub):
        constraints.append(
            LinearConstraint(sparse.csr_matrix(A_ub), -np.inf, np.asarray(b_ub))
        )
    if A_eq is not None and len(A_eq):
        b_eq = np.asarray(b_eq)
        constraints.append(LinearConstraint(sparse.csr_matrix(A_eq), b_eq, b_eq))
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array(
        [np.inf if b[1] is None else b[1] for b in bounds], dtype=float
    )
    res = _scipy_milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options={"mip_rel_gap": mip_rel_gap},
    )
    if res.status != 0 or res.x is None:
        return None
    return MilpResult(np.asarray(res.x), float(res.fun), 0)


def _solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        return None
    return res


def solve_milp(
    c: np.ndarray,
    A_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    A_eq: np.ndarray | None,
    b_eq: np.ndarray | None,
    bounds: list[tuple[float, float]],
    binary_idx: list[int],
    incumbent: tuple[np.ndarray, float] | None = None,
    max_nodes: int = 500_000,
) -> MilpResult | None:
    """Minimize c @ x with the listed variables restricted to {0, 1}.

    Returns None when no feasible solution exists. `incumbent` optionally
    seeds the upper bound with a known-feasible (x, objective) pair.
    """
    c = np.asarray(c, dtype=float)
    best_x = None
    best_obj = np.inf
    if incumbent is not None:
        best_x, best_obj = incumbent[0].copy(), float(incumbent[1])

    def lp(lo: dict[int, float], hi: dict[int, float]):
        bnds = list(bounds)
        for i, v in lo.items():
            bnds[i] = (v, bnds[i][1])
        for i, v in hi.items():
            bnds[i] = (bnds[i][0], v)
        return _solve_lp(c, A_ub, b_ub, A_eq, b_eq, bnds)

    root = lp({}, {})
    if root is None:
        return (
            MilpResult(best_x, best_obj, 0) if best_x is not None else None
        )

    counter = 0
    heap = [(root.fun, counter, {}, {}, root)]
    nodes = 0
    while heap:
        bound, _, lo, hi, res = heapq.heappop(heap)
        if bound >= best_obj - max(1e-9 * abs(best_obj), 1e-9):
            continue
        nodes += 1
        if nodes > max_nodes:
            raise MilpNodeLimit(f"exceeded {max_nodes} branch-and-bound nodes")
        x = res.x
        frac_i, frac_amt = -1, INT_TOL
        for i in binary_idx:
            f = abs(x[i] - round(x[i]))
            if f > frac_amt:
                frac_i, frac_amt = i, f
        if frac_i < 0:
            # integral: candidate incumbent
            if res.fun < best_obj - max(1e-12 * abs(res.fun), 1e-12):
                best_obj = float(res.fun)
                best_x = x.copy()
            continue
        for branch_val in (0.0, 1.0):
            lo2, hi2 = dict(lo), dict(hi)
            if branch_val == 0.0:
                hi2[frac_i] = 0.0
            else:
                lo2[frac_i] = 1.0
            child = lp(lo2, hi2)
            if child is None:
                continue
            if child.fun >= best_obj - max(1e-9 * abs(best_obj), 1e-9):
                continue
            counter += 1
            heapq.heappush(heap, (child.fun, counter, lo2, hi2, child))

    if best_x is None:
        return None
    return MilpResult(best_x, best_obj, nodes)
