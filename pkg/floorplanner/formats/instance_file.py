"""
Canonical instance format.

One declaration per line, `#` starts a comment:

    name <instance-name>
    die <W> <H>
    module <id> <w> <h>
    io <id> fixed <x> <y>
    io <id> boundary <L|R|T|B> [<x> <y>]
    pin <id> <owner-id> [<dx> <dy>]
    net <id> [weight=<w>] <pin-id> <pin-id> ...

Module and I/O pin ids share one namespace. Declarations may appear in any
order; references are resolved after the whole document has been read.
"""
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from floorplanner.errors import (DanglingReferenceError, DegenerateNetError,
                                 DuplicateIdError, InstanceSyntaxError,
                                 InvalidValueError, ModuleExceedsDieError)
from floorplanner.models import (IO_BOUNDARY, IO_FIXED, OWNER_IO, OWNER_MODULE,
                                 SIDES, DieRegion, Instance, IoPinSpec,
                                 ModuleSpec, Net, PinSpec)

_TOKEN = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[List[Token]]:
    """Split a document into non-empty lines of positioned tokens."""
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = [Token(m.group(), number, m.start() + 1) for m in _TOKEN.finditer(content)]
        if tokens:
            lines.append(tokens)
    return lines


def parse_number(token: Token, what: str) -> float:
    try:
        value = float(token.text)
    except ValueError:
        raise InstanceSyntaxError(f"expected a number for {what}, got {token.text!r}",
                                  token.line, token.column) from None
    if not math.isfinite(value):
        raise InvalidValueError(f"{what} must be finite", token.line, token.column)
    return value


def _expect(tokens: List[Token], counts: Tuple[int, ...], usage: str) -> None:
    if len(tokens) not in counts:
        head = tokens[0]
        raise InstanceSyntaxError(f"expected `{usage}`", head.line, head.column)


class _Document:
    """Declarations collected on the first pass, resolved on the second."""

    def __init__(self):
        self.name = ""
        self.die: Optional[Tuple[Token, float, float]] = None
        self.modules: List[Tuple[Token, float, float]] = []
        self.io_pins: List[Tuple[Token, str, Optional[str], Optional[float], Optional[float]]] = []
        self.pins: List[Tuple[Token, Token, float, float, Optional[Token]]] = []
        self.nets: List[Tuple[Token, float, List[Token]]] = []
        self.entities: Dict[str, Token] = {}
        self.pin_ids: Dict[str, Token] = {}
        self.net_ids: Dict[str, Token] = {}

    def _claim(self, table: Dict[str, Token], token: Token, what: str) -> None:
        if token.text in table:
            first = table[token.text]
            raise DuplicateIdError(f"duplicate {what} id {token.text!r} "
                                   f"(first declared on line {first.line})",
                                   token.line, token.column)
        table[token.text] = token

    def add(self, tokens: List[Token]) -> None:
        keyword = tokens[0]
        handler = getattr(self, f"_decl_{keyword.text}", None)
        if handler is None:
            raise InstanceSyntaxError(f"unknown declaration {keyword.text!r}",
                                      keyword.line, keyword.column)
        handler(tokens)

    def _decl_name(self, tokens: List[Token]) -> None:
        _expect(tokens, (2,), "name <instance-name>")
        self.name = tokens[1].text

    def _decl_die(self, tokens: List[Token]) -> None:
        _expect(tokens, (3,), "die <W> <H>")
        if self.die is not None:
            raise InstanceSyntaxError("die declared twice", tokens[0].line, tokens[0].column)
        width = parse_number(tokens[1], "die width")
        height = parse_number(tokens[2], "die height")
        for token, value in ((tokens[1], width), (tokens[2], height)):
            if value <= 0:
                raise InvalidValueError("die dimensions must be positive", token.line, token.column)
        self.die = (tokens[0], width, height)

    def _decl_module(self, tokens: List[Token]) -> None:
        _expect(tokens, (4,), "module <id> <w> <h>")
        width = parse_number(tokens[2], "module width")
        height = parse_number(tokens[3], "module height")
        for token, value in ((tokens[2], width), (tokens[3], height)):
            if value <= 0:
                raise InvalidValueError("module dimensions must be positive",
                                        token.line, token.column)
        self._claim(self.entities, tokens[1], "module/io")
        self.modules.append((tokens[1], width, height))

    def _decl_io(self, tokens: List[Token]) -> None:
        if len(tokens) < 3:
            _expect(tokens, (), "io <id> fixed <x> <y> | io <id> boundary <side> [<x> <y>]")
        mode = tokens[2].text
        if mode == IO_FIXED:
            _expect(tokens, (5,), "io <id> fixed <x> <y>")
            x = parse_number(tokens[3], "I/O x")
            y = parse_number(tokens[4], "I/O y")
            self._claim(self.entities, tokens[1], "module/io")
            self.io_pins.append((tokens[1], IO_FIXED, None, x, y))
        elif mode == IO_BOUNDARY:
            _expect(tokens, (4, 6), "io <id> boundary <side> [<x> <y>]")
            side = tokens[3].text
            if side not in SIDES:
                raise InvalidValueError(f"side must be one of {', '.join(SIDES)}",
                                        tokens[3].line, tokens[3].column)
            x = y = None
            if len(tokens) == 6:
                x = parse_number(tokens[4], "I/O x")
                y = parse_number(tokens[5], "I/O y")
            self._claim(self.entities, tokens[1], "module/io")
            self.io_pins.append((tokens[1], IO_BOUNDARY, side, x, y))
        else:
            raise InstanceSyntaxError(f"I/O mode must be {IO_FIXED!r} or {IO_BOUNDARY!r}",
                                      tokens[2].line, tokens[2].column)

    def _decl_pin(self, tokens: List[Token]) -> None:
        _expect(tokens, (3, 5), "pin <id> <owner-id> [<dx> <dy>]")
        dx = dy = 0.0
        offset = None
        if len(tokens) == 5:
            dx = parse_number(tokens[3], "pin x offset")
            dy = parse_number(tokens[4], "pin y offset")
            offset = tokens[3]
        self._claim(self.pin_ids, tokens[1], "pin")
        self.pins.append((tokens[1], tokens[2], dx, dy, offset))

    def _decl_net(self, tokens: List[Token]) -> None:
        if len(tokens) < 2:
            _expect(tokens, (), "net <id> [weight=<w>] <pin-id> ...")
        weight = 1.0
        members = tokens[2:]
        if members and members[0].text.startswith("weight="):
            token = members[0]
            raw = Token(token.text[len("weight="):], token.line, token.column + len("weight="))
            weight = parse_number(raw, "net weight")
            if weight < 0:
                raise InvalidValueError("net weight must be non-negative", raw.line, raw.column)
            members = members[1:]
        self._claim(self.net_ids, tokens[1], "net")
        self.nets.append((tokens[1], weight, members))

    def build(self) -> Instance:
        if self.die is None:
            raise InstanceSyntaxError("missing `die <W> <H>` declaration")
        die_token, width, height = self.die
        die = DieRegion(width, height)

        modules = []
        entity_index: Dict[str, Tuple[str, int]] = {}
        for index, (token, w, h) in enumerate(self.modules):
            if w > width or h > height:
                axis, size, bound = ("x", w, width) if w > width else ("y", h, height)
                raise ModuleExceedsDieError(
                    f"module {token.text!r} is {size:g} along {axis} but the die allows "
                    f"0 <= {axis} <= {bound:g} - {size:g}, which is empty",
                    token.line, token.column)
            modules.append(ModuleSpec(index, w, h, token.text))
            entity_index[token.text] = (OWNER_MODULE, index)

        io_pins = []
        for index, (token, mode, side, x, y) in enumerate(self.io_pins):
            if x is not None and not (0 <= x <= width and 0 <= y <= height):
                raise InvalidValueError(f"I/O pin {token.text!r} lies outside the die",
                                        token.line, token.column)
            io_pins.append(IoPinSpec(index, mode, side, x, y, token.text))
            entity_index[token.text] = (OWNER_IO, index)

        pins = []
        pin_index: Dict[str, int] = {}
        for index, (token, owner, dx, dy, offset) in enumerate(self.pins):
            if owner.text not in entity_index:
                raise DanglingReferenceError(f"pin {token.text!r} refers to unknown owner "
                                             f"{owner.text!r}", owner.line, owner.column)
            kind, owner_index = entity_index[owner.text]
            if kind == OWNER_MODULE:
                module = modules[owner_index]
                if not (0 <= dx <= module.width and 0 <= dy <= module.height):
                    raise InvalidValueError(
                        f"pin offset ({dx:g}, {dy:g}) lies outside module {owner.text!r}",
                        offset.line, offset.column)
            elif offset is not None and (dx != 0 or dy != 0):
                raise InvalidValueError("I/O pins take no offset", offset.line, offset.column)
            pins.append(PinSpec(index, kind, owner_index, dx, dy, token.text))
            pin_index[token.text] = index

        nets = []
        for index, (token, weight, members) in enumerate(self.nets):
            seen: Dict[str, Token] = {}
            for member in members:
                if member.text not in pin_index:
                    raise DanglingReferenceError(f"net {token.text!r} refers to unknown pin "
                                                 f"{member.text!r}", member.line, member.column)
                if member.text in seen:
                    raise DegenerateNetError(f"pin {member.text!r} appears twice in net "
                                             f"{token.text!r}", member.line, member.column)
                seen[member.text] = member
            if len(members) < 2:
                raise DegenerateNetError(f"net {token.text!r} needs at least 2 pins",
                                         token.line, token.column)
            ordered = tuple(sorted(pin_index[m.text] for m in members))
            nets.append(Net(index, ordered, weight, token.text))

        return Instance(die=die, modules=tuple(modules), io_pins=tuple(io_pins),
                        pins=tuple(pins), nets=tuple(nets), name=self.name)


def parse_instance(text: str) -> Instance:
    """
    Parse a canonical instance document.

    Args:
        text: Document contents.

    Returns:
        Validated Instance.

    Raises:
        InstanceParseError: A subclass naming the problem, with line and column.
    """
    document = _Document()
    for tokens in tokenize(text):
        document.add(tokens)
    return document.build()


def format_number(value: float) -> str:
    """Shortest text that reads back as the same float."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _entity_id(spec, prefix: str) -> str:
    return spec.name or f"{prefix}{spec.index}"


def write_instance(instance: Instance) -> str:
    """Serialize an instance to the canonical format."""
    lines = []
    if instance.name:
        lines.append(f"name {instance.name}")
    die = instance.die
    lines.append(f"die {format_number(die.width)} {format_number(die.height)}")
    for module in instance.modules:
        lines.append(f"module {_entity_id(module, 'm')} {format_number(module.width)} "
                     f"{format_number(module.height)}")
    for io in instance.io_pins:
        ident = _entity_id(io, "io")
        if io.is_fixed:
            lines.append(f"io {ident} fixed {format_number(io.x)} {format_number(io.y)}")
        elif io.x is not None:
            lines.append(f"io {ident} boundary {io.side} {format_number(io.x)} "
                         f"{format_number(io.y)}")
        else:
            lines.append(f"io {ident} boundary {io.side}")
    for pin in instance.pins:
        if pin.owner_kind == OWNER_MODULE:
            owner = _entity_id(instance.modules[pin.owner], "m")
            lines.append(f"pin {_entity_id(pin, 'p')} {owner} {format_number(pin.x_offset)} "
                         f"{format_number(pin.y_offset)}")
        else:
            lines.append(f"pin {_entity_id(pin, 'p')} {_entity_id(instance.io_pins[pin.owner], 'io')}")
    for net in instance.nets:
        weight = "" if net.weight == 1.0 else f" weight={format_number(net.weight)}"
        members = " ".join(_entity_id(instance.pins[p], "p") for p in net.pins)
        lines.append(f"net {_entity_id(net, 'n')}{weight} {members}")
    return "\n".join(lines) + "\n"


def load_instance(path: Union[str, Path], die: Optional[Tuple[float, float]] = None,
                  io_assignment: bool = False) -> Instance:
    """
    Read an instance file, dispatching on the extension.

    Args:
        path: `.yal` files go through the YAL adapter, anything else is canonical.
        die: Die override (W, H) for YAL files.
        io_assignment: Make YAL parent terminals boundary-assigned.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".yal":
        from floorplanner.formats.yal import parse_yal
        return parse_yal(text, die=die, io_assignment=io_assignment, name=path.stem)
    return parse_instance(text)
