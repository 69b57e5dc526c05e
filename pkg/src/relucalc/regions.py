"""Exact linear-region enumeration and piece counting for R^n -> R networks.

Cells are enumerated by recursive polyhedral subdivision: within a cell every
neuron's pre-activation is affine, so each neuron splits the cell by its zero
hyperplane.  Only strictly feasible (full-dimensional) children are kept;
lower-dimensional boundary cells never form pieces.  Piece counting then
merges adjacent cells (shared (n-1)-dimensional facet, LP-checked) whose
affine functionals are exactly equal, matching the "maximal connected subsets"
reading of a piece.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import BudgetExceededError, ValidationError
from .lp import LE, LinearConstraint, feasible_point
from .network import AffineMap, ReluNetwork
from .rational import format_rational, frac

_ZERO = Fraction(0)
_ONE = Fraction(1)

DEFAULT_CELL_BUDGET = 20_000


@dataclass(frozen=True)
class RegionCell:
    """Full-dimensional activation cell carrying the functional on it.

    `constraints` describe the closed cell (all senses "<="); the cell itself
    is their strict interior.  `pattern` is the activation bit-string over all
    hidden neurons in layer order ('1' = active).  `witness` is a rational
    point strictly inside.
    """

    pattern: str
    constraints: tuple[LinearConstraint, ...]
    affine: AffineMap
    witness: tuple[Fraction, ...]

    def to_json_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "constraints": [
                {
                    "normal": [format_rational(a) for a in c.normal],
                    "offset": format_rational(c.offset),
                    "sense": c.sense,
                }
                for c in self.constraints
            ],
            "affine": self.affine.to_json_dict(),
        }


def _strictly_feasible(constraints, n):
    return feasible_point([c.strictened() for c in constraints], n)


def _box_constraints(bounding_box, n):
    if bounding_box is None:
        return []
    box = list(bounding_box)
    if len(box) != n:
        raise ValidationError("bounding box arity must match input dim")
    cons = []
    for j, (lo, hi) in enumerate(box):
        lo, hi = frac(lo), frac(hi)
        if not lo < hi:
            raise ValidationError("bounding box sides must be nonempty")
        unit = [_ZERO] * n
        unit[j] = _ONE
        cons.append(LinearConstraint(tuple(unit), hi, LE))
        cons.append(LinearConstraint(tuple(-u for u in unit), -lo, LE))
    return cons


@dataclass(frozen=True)
class _State:
    pattern: str
    constraints: tuple
    exprs: AffineMap  # input of the current layer as an affine map of x
    posts: tuple  # post-activation rows accumulated within the current layer
    witness: tuple


def _zero_functional(n: int) -> AffineMap:
    return AffineMap(((_ZERO,) * n,), (_ZERO,))


def _advance(state: _State, row, bias, n) -> list[_State]:
    """Split one cell on one neuron; children keep a valid interior witness."""
    g = AffineMap((row,), (bias,)).compose(state.exprs)
    g_row, g_bias = g.weights[0], g.bias[0]
    zero = _zero_functional(n)
    if all(a == 0 for a in g_row):
        bit, post = ("1", g) if g_bias > 0 else ("0", zero)
        return [
            replace(state, pattern=state.pattern + bit, posts=state.posts + (post,))
        ]
    active_con = LinearConstraint(tuple(-a for a in g_row), g_bias, LE)  # g >= 0
    inactive_con = LinearConstraint(g_row, -g_bias, LE)  # g <= 0
    w_act = _strictly_feasible(list(state.constraints) + [active_con], n)
    w_inact = _strictly_feasible(list(state.constraints) + [inactive_con], n)
    children = []
    if w_act is not None and w_inact is not None:
        children.append(
            _State(
                state.pattern + "1",
                state.constraints + (active_con,),
                state.exprs,
                state.posts + (g,),
                w_act,
            )
        )
        children.append(
            _State(
                state.pattern + "0",
                state.constraints + (inactive_con,),
                state.exprs,
                state.posts + (zero,),
                w_inact,
            )
        )
    elif w_act is not None:
        # Hyperplane misses the interior: no constraint added, gate is on.
        children.append(
            replace(state, pattern=state.pattern + "1", posts=state.posts + (g,))
        )
    elif w_inact is not None:
        children.append(
            replace(state, pattern=state.pattern + "0", posts=state.posts + (zero,))
        )
    else:
        # g vanishes identically on the cell: sigma(0) = 0, gate off.
        children.append(
            replace(state, pattern=state.pattern + "0", posts=state.posts + (zero,))
        )
    return children


def enumerate_cells(
    net: ReluNetwork,
    bounding_box=None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    threads: int = 1,
) -> list[RegionCell]:
    """All full-dimensional activation cells of a scalar-output network.

    `bounding_box` is an optional sequence of (lo, hi) pairs restricting
    enumeration; None enumerates over all of R^n (cells may be unbounded).
    The output is sorted lexicographically by activation pattern and is
    identical for any thread count.
    """
    if net.output_dim != 1:
        raise ValidationError("enumerate_cells needs a scalar-output network")
    n = net.input_dim
    base = tuple(_box_constraints(bounding_box, n))
    root_witness = _strictly_feasible(list(base), n)
    if root_witness is None:
        return []

    states = [_State("", base, AffineMap.identity(n), (), root_witness)]
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for layer in net.hidden:
            states = [replace(s, posts=()) for s in states]
            for row, bias in zip(layer.weights, layer.bias):
                if pool is not None:
                    chunks = list(
                        pool.map(lambda s: _advance(s, row, bias, n), states)
                    )
                else:
                    chunks = [_advance(s, row, bias, n) for s in states]
                states = [child for chunk in chunks for child in chunk]
                if len(states) > cell_budget:
                    raise BudgetExceededError(f"cell budget {cell_budget} exceeded")
            states = [
                replace(s, exprs=AffineMap.vstack(s.posts), posts=())
                for s in states
            ]
    finally:
        if pool is not None:
            pool.shutdown()

    cells = []
    for s in states:
        functional = net.output.compose(s.exprs)
        cells.append(RegionCell(s.pattern, s.constraints, functional, s.witness))
    cells.sort(key=lambda c: c.pattern)
    return cells


# ----------------------------------------------------------------------------
# Piece counting (Definition-2 merge of adjacent equal-functional cells)
# ----------------------------------------------------------------------------


def _rank(vectors, n) -> int:
    rows = [list(v) for v in vectors]
    rank = 0
    col = 0
    r = 0
    while r < len(rows) and col < n:
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        col += 1
    return rank


def polyhedron_dimension(constraints, n: int) -> int:
    """Dimension of {x : constraints} (all "<=", free variables); -1 if empty."""
    cons = list(constraints)
    if feasible_point(cons, n) is None:
        return -1
    implicit = []
    for i, c in enumerate(cons):
        probe = list(cons)
        probe[i] = c.strictened()
        if feasible_point(probe, n) is None:
            implicit.append(c.normal)
    return n - _rank(implicit, n)


def cells_adjacent(a: RegionCell, b: RegionCell, n: int) -> bool:
    """Closed cells share a full (n-1)-dimensional facet."""
    return polyhedron_dimension(list(a.constraints) + list(b.constraints), n) == n - 1


@dataclass(frozen=True)
class MergeReport:
    cells: tuple[RegionCell, ...]
    piece_count: int
    groups: tuple[tuple[int, ...], ...]  # cell indices per merged piece


def merge_cells(net: ReluNetwork, cells) -> MergeReport:
    """Union-find over facet-adjacent cells with identical affine functionals."""
    cells = list(cells)
    n = net.input_dim
    parent = list(range(len(cells)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    by_functional = {}
    for idx, cell in enumerate(cells):
        key = (cell.affine.weights, cell.affine.bias)
        by_functional.setdefault(key, []).append(idx)
    for group in by_functional.values():
        for i_pos, i in enumerate(group):
            for j in group[i_pos + 1 :]:
                if find(i) != find(j) and cells_adjacent(cells[i], cells[j], n):
                    union(i, j)

    roots = {}
    for idx in range(len(cells)):
        roots.setdefault(find(idx), []).append(idx)
    groups = tuple(tuple(v) for _, v in sorted(roots.items()))
    return MergeReport(tuple(cells), len(groups), groups)


def count_pieces(
    net: ReluNetwork,
    bounding_box=None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    threads: int = 1,
) -> int:
    """Number of pieces of the network function (within the box, if given)."""
    cells = enumerate_cells(net, bounding_box, cell_budget, threads)
    return merge_cells(net, cells).piece_count


def check_cell_consistency(net: ReluNetwork, cells) -> bool:
    """Network output equals the cell functional at every interior witness."""
    for cell in cells:
        expected = cell.affine.apply(cell.witness)[0]
        if net.forward(cell.witness)[0] != expected:
            return False
    return True
