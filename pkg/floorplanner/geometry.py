"""
Coordinate bookkeeping, wirelength and legality metrics.

A placement is a float vector of length 2N: x-coordinates of all entities
followed by their y-coordinates. Entities 0..N_m-1 are module lower-left
corners, N_m..N-1 are I/O pins.
"""
from typing import List, Tuple

import numpy as np

from floorplanner.errors import UnknownPinError
from floorplanner.models import (IO_BOUNDARY, OWNER_MODULE, FeasibilityReport,
                                 HpwlReport, Instance, Violation)


def module_coordinates(instance: Instance, placement: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Views of the module x and y corner coordinates."""
    n, n_m = instance.n, instance.n_modules
    return placement[:n_m], placement[n:n + n_m]


def movable_mask(instance: Instance, io_assignment: bool) -> np.ndarray:
    """
    Boolean mask over the 2N entries that a solve may move.

    Modules always move; boundary I/O pins move only under I/O assignment.
    """
    entity_mask = np.ones(instance.n, dtype=bool)
    for io in instance.io_pins:
        movable = io_assignment and io.mode == IO_BOUNDARY
        entity_mask[instance.n_modules + io.index] = movable
    return np.concatenate((entity_mask, entity_mask))


def pin_position(instance: Instance, placement: np.ndarray, pin: int) -> Tuple[float, float]:
    """
    Absolute position of one pin.

    Args:
        instance: Problem description.
        placement: Coordinate vector of length 2N.
        pin: Pin index.

    Returns:
        (x, y) of the pin.
    """
    if not 0 <= pin < len(instance.pins):
        raise UnknownPinError(f"unknown pin {pin}")
    spec = instance.pins[pin]
    n = instance.n
    if spec.owner_kind == OWNER_MODULE:
        return (float(placement[spec.owner] + spec.x_offset),
                float(placement[n + spec.owner] + spec.y_offset))
    io = instance.io_pins[spec.owner]
    if io.is_fixed:
        return float(io.x), float(io.y)
    entity = instance.n_modules + spec.owner
    return float(placement[entity]), float(placement[n + entity])


def pin_coordinates(instance: Instance, placement: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Absolute x and y of every pin, vectorized."""
    netlist = instance.netlist
    n = instance.n
    px = np.where(netlist.fixed, netlist.fixed_x, placement[netlist.entity] + netlist.dx)
    py = np.where(netlist.fixed, netlist.fixed_y, placement[n + netlist.entity] + netlist.dy)
    return px, py


def _net_spans(instance: Instance, placement: np.ndarray) -> np.ndarray:
    netlist = instance.netlist
    if len(instance.nets) == 0:
        return np.zeros(0)
    px, py = pin_coordinates(instance, placement)
    fx, fy = px[netlist.flat], py[netlist.flat]
    span_x = np.maximum.reduceat(fx, netlist.starts) - np.minimum.reduceat(fx, netlist.starts)
    span_y = np.maximum.reduceat(fy, netlist.starts) - np.minimum.reduceat(fy, netlist.starts)
    return span_x + span_y


def hpwl(instance: Instance, placement: np.ndarray) -> HpwlReport:
    """
    Weighted half-perimeter wirelength with per-net spans.

    Args:
        instance: Problem description.
        placement: Coordinate vector of length 2N.

    Returns:
        HpwlReport with the weighted total and (net index, span) pairs.
    """
    spans = _net_spans(instance, placement)
    total = float(np.dot(instance.netlist.weights, spans)) if spans.size else 0.0
    per_net = tuple((net.index, float(span)) for net, span in zip(instance.nets, spans))
    return HpwlReport(total=total, per_net=per_net)


def hpwl_total(instance: Instance, placement: np.ndarray) -> float:
    """Weighted HPWL total only; the hot path of the perturbation loop."""
    spans = _net_spans(instance, placement)
    return float(np.dot(instance.netlist.weights, spans)) if spans.size else 0.0


def hpwl_subgradient(instance: Instance, placement: np.ndarray) -> np.ndarray:
    """
    A subgradient of the weighted HPWL with respect to the 2N coordinates.

    Per net and axis, +weight goes to the entity owning the maximal pin and
    -weight to the entity owning the minimal pin. Ties go to the lowest pin
    index. Fixed I/O pins absorb nothing.
    """
    netlist = instance.netlist
    n = instance.n
    grad = np.zeros(2 * n)
    if len(instance.nets) == 0:
        return grad
    px, py = pin_coordinates(instance, placement)
    bounds = np.append(netlist.starts, len(netlist.flat))
    for e, weight in enumerate(netlist.weights):
        pins = netlist.flat[bounds[e]:bounds[e + 1]]
        for coords, offset in ((px, 0), (py, n)):
            values = coords[pins]
            hi = pins[int(np.argmax(values))]
            lo = pins[int(np.argmin(values))]
            if hi == lo:
                continue
            if not netlist.fixed[hi]:
                grad[offset + netlist.entity[hi]] += weight
            if not netlist.fixed[lo]:
                grad[offset + netlist.entity[lo]] -= weight
    return grad


def _pairwise_overlap(instance: Instance, placement: np.ndarray) -> np.ndarray:
    """Matrix of pairwise intersection areas (zero diagonal)."""
    x, y = module_coordinates(instance, placement)
    w, h = instance.widths, instance.heights
    ox = np.minimum.outer(x + w, x + w) - np.maximum.outer(x, x)
    oy = np.minimum.outer(y + h, y + h) - np.maximum.outer(y, y)
    area = np.clip(ox, 0.0, None) * np.clip(oy, 0.0, None)
    np.fill_diagonal(area, 0.0)
    return area


def overlap_area(instance: Instance, placement: np.ndarray) -> float:
    """Sum of pairwise rectangle-intersection areas over i < j."""
    if instance.n_modules < 2:
        return 0.0
    return float(np.sum(np.triu(_pairwise_overlap(instance, placement), k=1)))


def relative_overlap_area(instance: Instance, placement: np.ndarray) -> float:
    """
    Total pairwise overlap area divided by total module area.

    Raises:
        ValueError: The instance has no module area.
    """
    total = instance.total_module_area
    if total <= 0:
        raise ValueError("relative overlap area needs positive total module area")
    return overlap_area(instance, placement) / total


def overlapping_pairs(instance: Instance, placement: np.ndarray) -> List[Tuple[int, int]]:
    """Pairs (i, j), i < j, whose rectangles intersect with positive area."""
    if instance.n_modules < 2:
        return []
    area = np.triu(_pairwise_overlap(instance, placement), k=1)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(area > 0))]


def check_feasible(instance: Instance, placement: np.ndarray, tol: float = 0.0,
                   io_assignment: bool = False) -> FeasibilityReport:
    """
    Check the boundary and non-overlap conditions.

    Args:
        instance: Problem description.
        placement: Coordinate vector of length 2N.
        tol: Absolute slack allowed on every constraint.
        io_assignment: Also require boundary I/O pins to lie on their side.

    Returns:
        FeasibilityReport listing every violated set with its magnitude.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    die = instance.die
    x, y = module_coordinates(instance, placement)
    w, h = instance.widths, instance.heights
    violations = []

    for i in range(instance.n_modules):
        bx = max(-x[i], x[i] - (die.width - w[i]))
        by = max(-y[i], y[i] - (die.height - h[i]))
        if bx > tol:
            violations.append(Violation("box_x", (i,), float(bx)))
        if by > tol:
            violations.append(Violation("box_y", (i,), float(by)))

    for i in range(instance.n_modules):
        for j in range(i + 1, instance.n_modules):
            # Smallest shift needed along any of the four separating directions.
            depth = min(x[i] + w[i] - x[j], x[j] + w[j] - x[i],
                        y[i] + h[i] - y[j], y[j] + h[j] - y[i])
            if depth > tol:
                violations.append(Violation("overlap", (i, j), float(depth)))

    if io_assignment:
        n = instance.n
        for io in instance.io_pins:
            if io.mode != IO_BOUNDARY:
                continue
            entity = instance.n_modules + io.index
            violation = segment_distance(die.width, die.height, io.side,
                                         placement[entity], placement[n + entity])
            if violation > tol:
                violations.append(Violation("io_segment", (io.index,), violation))

    return FeasibilityReport(feasible=not violations, violations=tuple(violations))


def segment_distance(width: float, height: float, side: str, px: float, py: float) -> float:
    """Euclidean distance from (px, py) to the die side segment."""
    if side in ("L", "R"):
        fixed = 0.0 if side == "L" else width
        free = min(max(py, 0.0), height)
        return float(np.hypot(px - fixed, py - free))
    fixed = 0.0 if side == "B" else height
    free = min(max(px, 0.0), width)
    return float(np.hypot(py - fixed, px - free))
