"""
MCNC YAL import adapter.

Supported subset:

    MODULE <name>;
      TYPE GENERAL | PARENT;
      DIMENSIONS x1 y1 x2 y2 ...;
      IOLIST;
        <signal> <terminal-type> <x> <y> [<width> [<layer>]];
      ENDIOLIST;
      NETWORK;                     (PARENT only)
        <instance> <module> <signal> ...;
      ENDNETWORK;
    ENDMODULE;

Module outlines are the bounding box of DIMENSIONS; terminal offsets are
taken relative to the lower-left corner of that box. Terminals of the PARENT
module become I/O pins; signals reaching only one terminal are dropped.
"""
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from floorplanner.errors import (DanglingReferenceError, InstanceSyntaxError,
                                 ModuleExceedsDieError)
from floorplanner.formats.instance_file import Token, parse_number
from floorplanner.models import (IO_BOUNDARY, IO_FIXED, OWNER_IO, OWNER_MODULE,
                                 DieRegion, Instance, IoPinSpec, ModuleSpec,
                                 Net, PinSpec)

logger = logging.getLogger(__name__)

_LEXEME = re.compile(r";|[^\s;]+")
_COMMENT = re.compile(r"/\*.*?\*/", re.S)


@dataclass
class YalTerminal:
    signal: str
    kind: str
    x: float
    y: float


@dataclass
class YalModule:
    name: Token
    kind: str = ""
    outline: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)   # x_lo, y_lo, x_hi, y_hi
    terminals: List[YalTerminal] = field(default_factory=list)
    network: List[List[Token]] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.outline[2] - self.outline[0]

    @property
    def height(self) -> float:
        return self.outline[3] - self.outline[1]


def _statements(text: str) -> List[List[Token]]:
    """Semicolon-terminated statements; comments blanked out line-preservingly."""
    text = _COMMENT.sub(lambda m: re.sub(r"[^\n]", " ", m.group()), text)
    statements, current = [], []
    for number, raw in enumerate(text.splitlines(), start=1):
        for match in _LEXEME.finditer(raw):
            if match.group() == ";":
                if current:
                    statements.append(current)
                current = []
            else:
                current.append(Token(match.group(), number, match.start() + 1))
    if current:
        raise InstanceSyntaxError("statement not terminated by ';'",
                                  current[0].line, current[0].column)
    return statements


def _read_modules(statements: List[List[Token]]) -> List[YalModule]:
    modules: List[YalModule] = []
    module: Optional[YalModule] = None
    section = None
    for stmt in statements:
        head = stmt[0]
        keyword = head.text.upper()
        if section == "IOLIST" and keyword != "ENDIOLIST":
            if len(stmt) < 4:
                raise InstanceSyntaxError("terminal needs `<signal> <type> <x> <y>`",
                                          head.line, head.column)
            module.terminals.append(YalTerminal(head.text, stmt[1].text.upper(),
                                                parse_number(stmt[2], "terminal x"),
                                                parse_number(stmt[3], "terminal y")))
            continue
        if section == "NETWORK" and keyword != "ENDNETWORK":
            if len(stmt) < 2:
                raise InstanceSyntaxError("network entry needs `<instance> <module> ...`",
                                          head.line, head.column)
            module.network.append(stmt)
            continue

        if keyword == "MODULE":
            if module is not None or len(stmt) != 2:
                raise InstanceSyntaxError("expected `MODULE <name>;` outside any module",
                                          head.line, head.column)
            module = YalModule(stmt[1])
        elif module is None:
            raise InstanceSyntaxError(f"{head.text!r} outside MODULE", head.line, head.column)
        elif keyword == "TYPE":
            module.kind = stmt[1].text.upper() if len(stmt) > 1 else ""
        elif keyword == "DIMENSIONS":
            values = [parse_number(t, "dimension") for t in stmt[1:]]
            if len(values) < 4 or len(values) % 2:
                raise InstanceSyntaxError("DIMENSIONS needs x y pairs", head.line, head.column)
            xs, ys = values[0::2], values[1::2]
            module.outline = (min(xs), min(ys), max(xs), max(ys))
        elif keyword in ("IOLIST", "NETWORK"):
            section = keyword
        elif keyword in ("ENDIOLIST", "ENDNETWORK"):
            section = None
        elif keyword == "ENDMODULE":
            modules.append(module)
            module = None
        else:
            raise InstanceSyntaxError(f"unsupported YAL statement {head.text!r}",
                                      head.line, head.column)
    if module is not None:
        raise InstanceSyntaxError("missing ENDMODULE", module.name.line, module.name.column)
    return modules


def _nearest_side(x: float, y: float, width: float, height: float) -> str:
    gaps = [(x, "L"), (width - x, "R"), (y, "B"), (height - y, "T")]
    return min(gaps, key=lambda g: g[0])[1]


def _clip(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def parse_yal(text: str, die: Optional[Tuple[float, float]] = None,
              io_assignment: bool = False, name: str = "") -> Instance:
    """
    Build an Instance from a YAL netlist.

    Args:
        text: YAL document with exactly one PARENT module.
        die: (W, H) override; defaults to the PARENT outline.
        io_assignment: Boundary-assign parent terminals to their nearest side
            instead of fixing them.
        name: Instance name; defaults to the PARENT module name.

    Returns:
        Validated Instance.
    """
    modules = _read_modules(_statements(text))
    parents = [m for m in modules if m.kind == "PARENT"]
    if len(parents) != 1:
        raise InstanceSyntaxError(f"expected exactly one PARENT module, found {len(parents)}")
    parent = parents[0]
    library = {m.name.text: m for m in modules if m.kind != "PARENT"}

    if die is not None:
        region = DieRegion(float(die[0]), float(die[1]))
    else:
        region = DieRegion(parent.width, parent.height)
    if region.width <= 0 or region.height <= 0:
        raise InstanceSyntaxError("PARENT outline is empty; pass a die override",
                                  parent.name.line, parent.name.column)

    module_specs: List[ModuleSpec] = []
    pins: List[PinSpec] = []
    signals: Dict[str, List[int]] = {}

    for entry in parent.network:
        instance_token, type_token = entry[0], entry[1]
        if type_token.text not in library:
            raise DanglingReferenceError(f"instance {instance_token.text!r} uses unknown module "
                                         f"{type_token.text!r}", type_token.line, type_token.column)
        cell = library[type_token.text]
        connections = entry[2:]
        if len(connections) != len(cell.terminals):
            raise InstanceSyntaxError(
                f"instance {instance_token.text!r} lists {len(connections)} signals but module "
                f"{type_token.text!r} has {len(cell.terminals)} terminals",
                instance_token.line, instance_token.column)
        if cell.width > region.width or cell.height > region.height:
            raise ModuleExceedsDieError(
                f"module {instance_token.text!r} ({cell.width:g} x {cell.height:g}) does not fit "
                f"the {region.width:g} x {region.height:g} die",
                instance_token.line, instance_token.column)
        index = len(module_specs)
        module_specs.append(ModuleSpec(index, cell.width, cell.height, instance_token.text))
        for terminal, signal in zip(cell.terminals, connections):
            dx = _clip(terminal.x - cell.outline[0], 0.0, cell.width)
            dy = _clip(terminal.y - cell.outline[1], 0.0, cell.height)
            pin = len(pins)
            pins.append(PinSpec(pin, OWNER_MODULE, index, dx, dy,
                                f"{instance_token.text}.{terminal.signal}"))
            signals.setdefault(signal.text, []).append(pin)

    io_specs: List[IoPinSpec] = []
    for terminal in parent.terminals:
        x = _clip(terminal.x - parent.outline[0], 0.0, region.width)
        y = _clip(terminal.y - parent.outline[1], 0.0, region.height)
        index = len(io_specs)
        if io_assignment:
            side = _nearest_side(x, y, region.width, region.height)
            io_specs.append(IoPinSpec(index, IO_BOUNDARY, side, x, y, terminal.signal))
        else:
            io_specs.append(IoPinSpec(index, IO_FIXED, None, x, y, terminal.signal))
        pin = len(pins)
        pins.append(PinSpec(pin, OWNER_IO, index, name=f"io.{terminal.signal}"))
        signals.setdefault(terminal.signal, []).append(pin)

    nets: List[Net] = []
    dropped = 0
    for signal, members in signals.items():
        if len(members) < 2:
            dropped += 1
            continue
        nets.append(Net(len(nets), tuple(sorted(members)), 1.0, signal))
    if dropped:
        logger.warning("dropped %d single-terminal signals", dropped)

    return Instance(die=region, modules=tuple(module_specs), io_pins=tuple(io_specs),
                    pins=tuple(pins), nets=tuple(nets), name=name or parent.name.text)
