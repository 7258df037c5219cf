"""
Exact Euclidean projections onto the constraint sets of the floorplanning
feasibility problem.

Every projection touches at most four coordinate entries; the public functions
return a new placement, the underscore helpers work on plain floats so the
sweeps can apply them in place.
"""
import itertools
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from floorplanner.errors import EmptyCellError, InfeasibleRegionError
from floorplanner.models import IO_BOUNDARY, Instance

DIRECTIONS = ("L", "R", "B", "A")


@dataclass(frozen=True)
class BoxConstraint:
    """Module i inside the die: x in [x_lo, x_hi], y in [y_lo, y_hi]."""

    target: int
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float


@dataclass(frozen=True)
class HalfSpacePair:
    """coord_i + separation <= coord_j along one axis."""

    i: int
    j: int
    axis: str
    separation: float


@dataclass(frozen=True)
class ConstraintCell:
    """
    One convex piece of the pairwise constraint of modules i and j.

    L: i left of j, R: i right of j, B: i below j, A: i above j; each
    intersected with both modules' die boxes.
    """

    i: int
    j: int
    direction: str
    separation: float
    box_i: BoxConstraint
    box_j: BoxConstraint

    @property
    def axis(self) -> str:
        return "x" if self.direction in ("L", "R") else "y"

    @property
    def first(self) -> int:
        """Module that must come first (left of / below) along the axis."""
        return self.i if self.direction in ("L", "B") else self.j

    @property
    def second(self) -> int:
        return self.j if self.direction in ("L", "B") else self.i

    def _interval(self, module: int, axis: str) -> Tuple[float, float]:
        box = self.box_i if module == self.i else self.box_j
        return (box.x_lo, box.x_hi) if axis == "x" else (box.y_lo, box.y_hi)

    @property
    def is_empty(self) -> bool:
        first_lo, _ = self._interval(self.first, self.axis)
        _, second_hi = self._interval(self.second, self.axis)
        return first_lo + self.separation > second_hi


@dataclass(frozen=True)
class BoundarySegment:
    """I/O pin p restricted to one die side."""

    pin: int
    side: str
    fixed_value: float
    free_lo: float
    free_hi: float


def box_constraint(instance: Instance, i: int) -> BoxConstraint:
    die = instance.die
    module = instance.modules[i]
    return BoxConstraint(i, 0.0, die.width - module.width, 0.0, die.height - module.height)


def constraint_cell(instance: Instance, i: int, j: int, direction: str) -> ConstraintCell:
    """Build C_{i,j,t} for one direction t."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    mi, mj = instance.modules[i], instance.modules[j]
    separation = {"L": mi.width, "R": mj.width, "B": mi.height, "A": mj.height}[direction]
    return ConstraintCell(i, j, direction, separation,
                          box_constraint(instance, i), box_constraint(instance, j))


def pair_cells(instance: Instance, i: int, j: int) -> Tuple[ConstraintCell, ...]:
    """The four cells of pair (i, j) in L, R, B, A order."""
    return tuple(constraint_cell(instance, i, j, t) for t in DIRECTIONS)


def boundary_segment(instance: Instance, pin: int) -> BoundarySegment:
    die = instance.die
    side = instance.io_pins[pin].side
    if side == "L":
        return BoundarySegment(pin, side, 0.0, 0.0, die.height)
    if side == "R":
        return BoundarySegment(pin, side, die.width, 0.0, die.height)
    if side == "B":
        return BoundarySegment(pin, side, 0.0, 0.0, die.width)
    return BoundarySegment(pin, side, die.height, 0.0, die.width)


def boundary_segments(instance: Instance) -> List[BoundarySegment]:
    """Segments of every boundary-assigned I/O pin."""
    return [boundary_segment(instance, io.index)
            for io in instance.io_pins if io.mode == IO_BOUNDARY]


def _clip(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def project_box(placement: np.ndarray, c: BoxConstraint) -> np.ndarray:
    """Clamp module c.target into its box."""
    n = placement.size // 2
    out = placement.copy()
    out[c.target] = _clip(out[c.target], c.x_lo, c.x_hi)
    out[n + c.target] = _clip(out[n + c.target], c.y_lo, c.y_hi)
    return out


def project_halfspace_pair(placement: np.ndarray, h: HalfSpacePair) -> np.ndarray:
    """Project onto {coord_i + s <= coord_j}; the violation is split evenly."""
    n = placement.size // 2
    base = 0 if h.axis == "x" else n
    out = placement.copy()
    violation = out[base + h.i] + h.separation - out[base + h.j]
    if violation > 0:
        out[base + h.i] -= violation / 2
        out[base + h.j] += violation / 2
    return out


def _project_ordered(u: float, v: float, u_lo: float, u_hi: float,
                     v_lo: float, v_hi: float, s: float) -> Tuple[float, float]:
    """
    Exact projection of (u, v) onto {u_lo<=u<=u_hi, v_lo<=v<=v_hi, u+s<=v}.

    Either the box projection already satisfies the half-space, or the
    half-space is active and the minimizer lies on the segment v = u + s
    inside the box, where the problem is a clamped 1-D quadratic.
    """
    cu, cv = _clip(u, u_lo, u_hi), _clip(v, v_lo, v_hi)
    if cu + s <= cv:
        return cu, cv
    t = _clip((u + v - s) / 2, max(u_lo, v_lo - s), min(u_hi, v_hi - s))
    return t, t + s


def project_cell_coords(cell: ConstraintCell, xi: float, xj: float,
                        yi: float, yj: float) -> Tuple[float, float, float, float]:
    """Project the four pair coordinates onto the cell; returns (xi, xj, yi, yj)."""
    bi, bj = cell.box_i, cell.box_j
    if cell.axis == "x":
        ui, uj = xi, xj
        ri = (bi.x_lo, bi.x_hi)
        rj = (bj.x_lo, bj.x_hi)
        yi, yj = _clip(yi, bi.y_lo, bi.y_hi), _clip(yj, bj.y_lo, bj.y_hi)
    else:
        ui, uj = yi, yj
        ri = (bi.y_lo, bi.y_hi)
        rj = (bj.y_lo, bj.y_hi)
        xi, xj = _clip(xi, bi.x_lo, bi.x_hi), _clip(xj, bj.x_lo, bj.x_hi)

    if cell.first == cell.i:
        pi, pj = _project_ordered(ui, uj, ri[0], ri[1], rj[0], rj[1], cell.separation)
    else:
        pj, pi = _project_ordered(uj, ui, rj[0], rj[1], ri[0], ri[1], cell.separation)

    if cell.axis == "x":
        return pi, pj, yi, yj
    return xi, xj, pi, pj


def project_cell(placement: np.ndarray, cell: ConstraintCell) -> np.ndarray:
    """
    Exact projection onto C_{i,j,t} = half-space of t intersected with B_{i,j}.

    Raises:
        EmptyCellError: The two modules cannot be placed in direction t.
    """
    if cell.is_empty:
        raise EmptyCellError(f"cell {cell.direction} of pair ({cell.i}, {cell.j}) is empty")
    n = placement.size // 2
    i, j = cell.i, cell.j
    out = placement.copy()
    out[i], out[j], out[n + i], out[n + j] = project_cell_coords(
        cell, placement[i], placement[j], placement[n + i], placement[n + j])
    return out


def project_segment_coords(seg: BoundarySegment, px: float, py: float) -> Tuple[float, float]:
    if seg.side in ("L", "R"):
        return seg.fixed_value, _clip(py, seg.free_lo, seg.free_hi)
    return _clip(px, seg.free_lo, seg.free_hi), seg.fixed_value


def project_boundary_segment(placement: np.ndarray, seg: BoundarySegment,
                             n_modules: int) -> np.ndarray:
    """Move I/O pin seg.pin onto its side segment."""
    n = placement.size // 2
    entity = n_modules + seg.pin
    out = placement.copy()
    out[entity], out[n + entity] = project_segment_coords(seg, out[entity], out[n + entity])
    return out


def cell_constraints(cell: ConstraintCell) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear system A z <= b of a cell over (xi, xj, yi, yj).

    Used to cross-check project_cell against qp_oracle.
    """
    rows: List[Sequence[float]] = []
    rhs: List[float] = []
    for k, (lo, hi) in enumerate(((cell.box_i.x_lo, cell.box_i.x_hi),
                                  (cell.box_j.x_lo, cell.box_j.x_hi),
                                  (cell.box_i.y_lo, cell.box_i.y_hi),
                                  (cell.box_j.y_lo, cell.box_j.y_hi))):
        row = [0.0] * 4
        row[k] = -1.0
        rows.append(list(row))
        rhs.append(-lo)
        row[k] = 1.0
        rows.append(row)
        rhs.append(hi)
    offset = 0 if cell.axis == "x" else 2
    first = offset + (0 if cell.first == cell.i else 1)
    second = offset + (1 if cell.first == cell.i else 0)
    row = [0.0] * 4
    row[first], row[second] = 1.0, -1.0
    rows.append(row)
    rhs.append(-cell.separation)
    return np.array(rows), np.array(rhs)


def qp_oracle(point: np.ndarray, a: np.ndarray, b: np.ndarray,
              max_dim: int = 4, max_constraints: int = 10) -> np.ndarray:
    """
    Brute-force projection of point onto {z : a z <= b} by active-set enumeration.

    Every subset of at most dim constraints is taken as active; the candidate
    satisfying primal feasibility and non-negative multipliers is the projection.

    Raises:
        InfeasibleRegionError: No KKT point exists, i.e. the region is empty.
    """
    point = np.asarray(point, dtype=float)
    a = np.atleast_2d(np.asarray(a, dtype=float)) if len(a) else np.zeros((0, point.size))
    b = np.asarray(b, dtype=float)
    dim = point.size
    if dim > max_dim or len(b) > max_constraints:
        raise ValueError("qp_oracle handles small systems only")
    if len(b) == 0 or np.all(a @ point <= b):
        return point.copy()

    tol = 1e-10 * (1.0 + float(np.max(np.abs(point))) + float(np.max(np.abs(b))))
    best = None
    for size in range(1, min(dim, len(b)) + 1):
        for active in itertools.combinations(range(len(b)), size):
            rows = a[list(active)]
            gram = rows @ rows.T
            if np.linalg.matrix_rank(gram) < size:
                continue
            multipliers = np.linalg.solve(gram, rows @ point - b[list(active)])
            if np.any(multipliers < -tol):
                continue
            candidate = point - rows.T @ multipliers
            if np.all(a @ candidate <= b + tol):
                distance = float(np.linalg.norm(candidate - point))
                if best is None or distance < best[0]:
                    best = (distance, candidate)
    if best is None:
        raise InfeasibleRegionError("linear inequality system has no solution")
    return best[1]

