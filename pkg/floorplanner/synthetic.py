"""
Synthetic benchmark instances.
Exact tilings, random slicing-based tight instances and a grid branch-and-bound
wirelength reference for small instances.
"""
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from floorplanner.models import (IO_BOUNDARY, IO_FIXED, OWNER_IO, OWNER_MODULE,
                                 SIDES, DieRegion, Instance, IoPinSpec,
                                 ModuleSpec, Net, PinSpec)
from floorplanner.services.initialization_service import terminal_positions

# Largest instance grid_optimal_hpwl will enumerate.
GRID_SEARCH_MAX_MODULES = 8


class _Builder:
    """Accumulates specs with sequential indices."""

    def __init__(self):
        self.modules: List[ModuleSpec] = []
        self.io_pins: List[IoPinSpec] = []
        self.pins: List[PinSpec] = []
        self.nets: List[Net] = []

    def module(self, width: float, height: float) -> int:
        index = len(self.modules)
        self.modules.append(ModuleSpec(index, width, height, f"m{index}"))
        return index

    def io(self, mode: str, side: Optional[str] = None, x: Optional[float] = None,
           y: Optional[float] = None) -> int:
        index = len(self.io_pins)
        self.io_pins.append(IoPinSpec(index, mode, side, x, y, f"io{index}"))
        return index

    def pin(self, owner_kind: str, owner: int, dx: float = 0.0, dy: float = 0.0) -> int:
        index = len(self.pins)
        self.pins.append(PinSpec(index, owner_kind, owner, dx, dy, f"p{index}"))
        return index

    def net(self, pins, weight: float = 1.0) -> None:
        index = len(self.nets)
        self.nets.append(Net(index, tuple(sorted(pins)), weight, f"n{index}"))

    def build(self, die: DieRegion, name: str) -> Instance:
        return Instance(die=die, modules=tuple(self.modules), io_pins=tuple(self.io_pins),
                        pins=tuple(self.pins), nets=tuple(self.nets), name=name)


def tiling_instance(side: int) -> Instance:
    """
    side x side unit modules on a side x side die.

    Grid neighbours are joined by 2-pin nets between module centers and the
    four die corners carry fixed I/O pins tied to the corner modules. Every
    net is at least 1 long in any legal placement, and the row-major tiling
    attains that.
    """
    if side < 1:
        raise ValueError("side must be at least 1")
    builder = _Builder()
    centers = []
    for _ in range(side * side):
        module = builder.module(1.0, 1.0)
        centers.append(builder.pin(OWNER_MODULE, module, 0.5, 0.5))

    def at(row: int, col: int) -> int:
        return centers[row * side + col]

    for row in range(side):
        for col in range(side):
            if col + 1 < side:
                builder.net((at(row, col), at(row, col + 1)))
            if row + 1 < side:
                builder.net((at(row, col), at(row + 1, col)))

    corners = (((0.0, 0.0), (0, 0)), ((float(side), 0.0), (0, side - 1)),
               ((0.0, float(side)), (side - 1, 0)), ((float(side), float(side)), (side - 1, side - 1)))
    for (x, y), (row, col) in corners:
        io = builder.io(IO_FIXED, x=x, y=y)
        builder.net((builder.pin(OWNER_IO, io), at(row, col)))

    return builder.build(DieRegion(float(side), float(side)), f"tiling{side * side}")


def tiling_optimal_hpwl(side: int) -> float:
    """HPWL of the row-major tiling of tiling_instance(side)."""
    return 2.0 * side * (side - 1) + 4.0


def _slice(rng: np.random.Generator, width: float, height: float,
           count: int) -> List[Tuple[float, float]]:
    """Cut a width x height rectangle into count rectangles by guillotine cuts."""
    pieces = [(width, height)]
    while len(pieces) < count:
        largest = max(range(len(pieces)), key=lambda k: pieces[k][0] * pieces[k][1])
        w, h = pieces.pop(largest)
        ratio = float(rng.uniform(0.3, 0.7))
        if w >= h:
            pieces += [(w * ratio, h), (w * (1 - ratio), h)]
        else:
            pieces += [(w, h * ratio), (w, h * (1 - ratio))]
    return pieces


def random_tight_instance(n_modules: int, utilization: float = 0.85, seed: int = 0,
                          io_mode: str = IO_FIXED, n_io: int = 4, die_side: float = 100.0,
                          extra_nets: Optional[int] = None) -> Instance:
    """
    Random instance whose modules are known to pack at the given utilization.

    The die is sliced into n_modules rectangles by random guillotine cuts and
    every piece is scaled by sqrt(utilization), so a legal packing exists.

    Args:
        n_modules: Module count (>= 2).
        utilization: Total module area over die area, in (0, 1].
        seed: Generator seed.
        io_mode: "fixed" pins at random boundary points, or "boundary" pins
            assigned to a random side without starting coordinates.
        n_io: Number of I/O pins, each joined to one random module.
        die_side: Die edge length (square die).
        extra_nets: Random 2..4-pin nets on top of the spanning chain;
            defaults to n_modules.

    Returns:
        Instance named "tight<n>_s<seed>".
    """
    if n_modules < 2:
        raise ValueError("n_modules must be at least 2")
    if not 0 < utilization <= 1:
        raise ValueError("utilization must lie in (0, 1]")
    if io_mode not in (IO_FIXED, IO_BOUNDARY):
        raise ValueError(f"io_mode must be {IO_FIXED!r} or {IO_BOUNDARY!r}")
    rng = np.random.default_rng(seed)
    shrink = math.sqrt(utilization)
    builder = _Builder()
    pins_of: Dict[int, int] = {}
    for w, h in _slice(rng, die_side, die_side, n_modules):
        module = builder.module(w * shrink, h * shrink)
        spec = builder.modules[module]
        pins_of[module] = builder.pin(OWNER_MODULE, module, spec.width / 2, spec.height / 2)

    order = [int(k) for k in rng.permutation(n_modules)]
    for a, b in zip(order, order[1:]):
        builder.net((pins_of[a], pins_of[b]))
    for _ in range(n_modules if extra_nets is None else extra_nets):
        size = int(rng.integers(2, min(4, n_modules) + 1))
        members = rng.choice(n_modules, size=size, replace=False)
        builder.net([pins_of[int(m)] for m in members])

    for _ in range(n_io):
        side = SIDES[int(rng.integers(len(SIDES)))]
        if io_mode == IO_FIXED:
            t = float(rng.uniform(0, die_side))
            x, y = {"L": (0.0, t), "R": (die_side, t), "B": (t, 0.0), "T": (t, die_side)}[side]
            io = builder.io(IO_FIXED, x=x, y=y)
        else:
            io = builder.io(IO_BOUNDARY, side=side)
        target = int(rng.integers(n_modules))
        builder.net((builder.pin(OWNER_IO, io), pins_of[target]))

    return builder.build(DieRegion(die_side, die_side), f"tight{n_modules}_s{seed}")


def grid_optimal_hpwl(instance: Instance, grid: float) -> float:
    """
    Minimum HPWL over non-overlapping placements with corners on a grid.

    Branch and bound: modules are placed largest first and a branch is cut
    when the bounding boxes of the already-placed pins reach the incumbent.
    Boundary I/O pins sit at their starting positions.

    Args:
        instance: Instance with at most GRID_SEARCH_MAX_MODULES modules.
        grid: Grid pitch.

    Returns:
        The optimum, or math.inf when no grid placement is legal.
    """
    if instance.n_modules > GRID_SEARCH_MAX_MODULES:
        raise ValueError(f"grid search handles at most {GRID_SEARCH_MAX_MODULES} modules")
    if grid <= 0:
        raise ValueError("grid pitch must be positive")
    die = instance.die
    terminals = terminal_positions(instance)
    eps = 1e-9 * die.diagonal

    candidates = []
    for module in instance.modules:
        xs = np.arange(0.0, die.width - module.width + eps, grid)
        ys = np.arange(0.0, die.height - module.height + eps, grid)
        candidates.append([(float(x), float(y)) for x in xs for y in ys])

    # Per net: module members as (module, dx, dy) and fixed points.
    nets = []
    for net in instance.nets:
        movable, fixed = [], []
        for p in net.pins:
            pin = instance.pins[p]
            if pin.owner_kind == OWNER_MODULE:
                movable.append((pin.owner, pin.x_offset, pin.y_offset))
            else:
                fixed.append(tuple(float(v) for v in terminals[pin.owner]))
        nets.append((net.weight, movable, fixed))

    order = sorted(range(instance.n_modules), key=lambda i: -instance.modules[i].area)
    placed: Dict[int, Tuple[float, float]] = {}
    best = [math.inf]

    def bound() -> float:
        total = 0.0
        for weight, movable, fixed in nets:
            xs = [p[0] for p in fixed]
            ys = [p[1] for p in fixed]
            for owner, dx, dy in movable:
                if owner in placed:
                    xs.append(placed[owner][0] + dx)
                    ys.append(placed[owner][1] + dy)
            if len(xs) > 1:
                total += weight * (max(xs) - min(xs) + max(ys) - min(ys))
        return total

    def fits(i: int, x: float, y: float) -> bool:
        w, h = instance.widths[i], instance.heights[i]
        for j, (xj, yj) in placed.items():
            if (x + w - eps > xj and xj + instance.widths[j] - eps > x and
                    y + h - eps > yj and yj + instance.heights[j] - eps > y):
                return False
        return True

    def search(depth: int) -> None:
        if depth == len(order):
            best[0] = min(best[0], bound())
            return
        i = order[depth]
        for x, y in candidates[i]:
            if not fits(i, x, y):
                continue
            placed[i] = (x, y)
            if bound() < best[0]:
                search(depth + 1)
            del placed[i]

    search(0)
    return best[0]
