"""Problem and result data structures."""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

# Die sides for boundary-assigned I/O pins: left, right, top, bottom.
SIDES = ("L", "R", "T", "B")

IO_FIXED = "fixed"
IO_BOUNDARY = "boundary"

OWNER_MODULE = "module"
OWNER_IO = "io"


@dataclass(frozen=True)
class DieRegion:
    """Fixed floorplanning outline with its lower-left corner at the origin."""

    width: float
    height: float

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class ModuleSpec:
    """Hard rectangular module."""

    index: int
    width: float
    height: float
    name: str = ""

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class IoPinSpec:
    """
    I/O pin of the floorplanning region.

    A fixed pin sits at (x, y). A boundary pin is assigned to one die side;
    x and y are then optional starting coordinates.
    """

    index: int
    mode: str
    side: Optional[str] = None
    x: Optional[float] = None
    y: Optional[float] = None
    name: str = ""

    @property
    def is_fixed(self) -> bool:
        return self.mode == IO_FIXED


@dataclass(frozen=True)
class PinSpec:
    """Connection point owned by a module (with offset) or by an I/O pin."""

    index: int
    owner_kind: str
    owner: int
    x_offset: float = 0.0
    y_offset: float = 0.0
    name: str = ""


@dataclass(frozen=True)
class Net:
    """Set of pins to be connected; pins are stored in ascending index order."""

    index: int
    pins: Tuple[int, ...]
    weight: float = 1.0
    name: str = ""


@dataclass(frozen=True, eq=False)
class Netlist:
    """Flat per-pin arrays used by the vectorized wirelength routines."""

    entity: np.ndarray      # coordinate entry owning each pin (0..N-1)
    dx: np.ndarray
    dy: np.ndarray
    fixed: np.ndarray       # pin belongs to a fixed I/O pin
    fixed_x: np.ndarray
    fixed_y: np.ndarray
    flat: np.ndarray        # pins of all nets, net after net
    starts: np.ndarray      # offset of each net in `flat`
    weights: np.ndarray


@dataclass(frozen=True)
class Instance:
    """Immutable floorplanning problem: die, modules, I/O pins, pins and nets."""

    die: DieRegion
    modules: Tuple[ModuleSpec, ...] = ()
    io_pins: Tuple[IoPinSpec, ...] = ()
    pins: Tuple[PinSpec, ...] = ()
    nets: Tuple[Net, ...] = ()
    name: str = ""

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    @property
    def n_io(self) -> int:
        return len(self.io_pins)

    @property
    def n(self) -> int:
        """Total coordinate entities N = N_m + N_io."""
        return self.n_modules + self.n_io

    @cached_property
    def widths(self) -> np.ndarray:
        return np.array([m.width for m in self.modules], dtype=float)

    @cached_property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.modules], dtype=float)

    @cached_property
    def total_module_area(self) -> float:
        return float(np.sum(self.widths * self.heights))

    @cached_property
    def netlist(self) -> Netlist:
        n_m = self.n_modules
        entity = np.zeros(len(self.pins), dtype=int)
        dx = np.zeros(len(self.pins))
        dy = np.zeros(len(self.pins))
        fixed = np.zeros(len(self.pins), dtype=bool)
        fixed_x = np.zeros(len(self.pins))
        fixed_y = np.zeros(len(self.pins))
        for pin in self.pins:
            if pin.owner_kind == OWNER_MODULE:
                entity[pin.index] = pin.owner
                dx[pin.index] = pin.x_offset
                dy[pin.index] = pin.y_offset
            else:
                io = self.io_pins[pin.owner]
                entity[pin.index] = n_m + pin.owner
                if io.is_fixed:
                    fixed[pin.index] = True
                    fixed_x[pin.index] = io.x
                    fixed_y[pin.index] = io.y
        flat = np.array([p for net in self.nets for p in net.pins], dtype=int)
        sizes = [len(net.pins) for net in self.nets]
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(int) if sizes \
            else np.zeros(0, dtype=int)
        weights = np.array([net.weight for net in self.nets], dtype=float)
        return Netlist(entity, dx, dy, fixed, fixed_x, fixed_y, flat, starts, weights)


@dataclass(frozen=True)
class HpwlReport:
    """Half-perimeter wirelength: weighted total and per-net spans."""

    total: float
    per_net: Tuple[Tuple[int, float], ...]


@dataclass(frozen=True)
class Violation:
    """
    One violated constraint set.

    kind is "box_x" / "box_y" (module outside the die along an axis),
    "overlap" (pair of modules overlapping) or "io_segment".
    """

    kind: str
    targets: Tuple[int, ...]
    magnitude: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: Tuple[Violation, ...]

    def __bool__(self) -> bool:
        return self.feasible


@dataclass
class IterationRecord:
    """One completed outer iteration of the global (or post) phase."""

    k: int
    hpwl: float
    overlap: float
    gamma: float
    decay_index: int
    sweep_seconds: float
    hpwl_before_perturb: float
    hpwl_after_perturb: float

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        record = {
            "k": self.k,
            "hpwl": self.hpwl,
            "overlap": self.overlap,
            "gamma": self.gamma,
            "decay_index": self.decay_index,
            "hpwl_before_perturb": self.hpwl_before_perturb,
            "hpwl_after_perturb": self.hpwl_after_perturb,
        }
        if include_timings:
            record["sweep_seconds"] = self.sweep_seconds
        return record

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IterationRecord":
        return cls(
            k=int(data["k"]),
            hpwl=float(data["hpwl"]),
            overlap=float(data["overlap"]),
            gamma=float(data["gamma"]),
            decay_index=int(data["decay_index"]),
            sweep_seconds=float(data.get("sweep_seconds", 0.0)),
            hpwl_before_perturb=float(data["hpwl_before_perturb"]),
            hpwl_after_perturb=float(data["hpwl_after_perturb"]),
        )


@dataclass
class SolveResult:
    """Outcome of a solve (or of one of its phases)."""

    placement: np.ndarray
    hpwl: float
    overlap: float
    iterations: int
    trace: List[IterationRecord]
    config: Dict[str, Any]
    seed: int
    feasible: bool
    converged: bool
    stalled: bool = False
    decay_index: int = 0
    post_iterations: int = 0
    timings: Dict[str, float] = field(default_factory=dict)
    instance_name: str = ""
    anchored_components: int = 0   # net components pinned to the die center by initialization
    pcg_converged: bool = True
