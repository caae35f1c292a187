"""Two-pass assembler and disassembler for the machine's textual assembly.

Line grammar (case-insensitive mnemonics, LF or CRLF endings):

    [label:] MNEMONIC [operand[, operand]] [; comment]

Directives: ``.org N`` places the location counter, ``.word N`` emits a raw
16-bit word.  Literals are decimal or 0x-prefixed hex; ``#`` marks an ALU
immediate; registers are R0..R7.  Labels may be referenced before they are
defined (symbols are collected in a first pass, operands resolved in the
second).
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

from .errors import AssemblyError, DecodeError
from .isa import (
    Instruction,
    Opcode,
    decode,
    encode,
    format_instruction,
    is_canonical,
)

MEMORY_WORDS = 256

_LABEL_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_REG_RE = re.compile(r"^[Rr]([0-9]+)$")

# mnemonic -> (opcode or directive marker, operand shape)
_SHAPES: dict[str, tuple[Opcode | None, str]] = {
    "LOAD": (Opcode.LOAD, "reg_addr"),
    "STORE": (Opcode.STORE, "reg_addr"),
    "ADD": (Opcode.ADD, "reg_srcimm"),
    "SUB": (Opcode.SUB, "reg_srcimm"),
    "AND": (Opcode.AND, "reg_srcimm"),
    "OR": (Opcode.OR, "reg_srcimm"),
    "XOR": (Opcode.XOR, "reg_srcimm"),
    "NOT": (Opcode.NOT, "reg"),
    "SHL": (Opcode.SHL, "reg_srcimm"),
    "SHR": (Opcode.SHR, "reg_srcimm"),
    "JMP": (Opcode.JMP, "addr"),
    "JZ": (Opcode.JZ, "reg_addr"),
    "RDPIN": (Opcode.RDPIN, "reg_addr"),
    "WRPIN": (Opcode.WRPIN, "reg_addr"),
    "NOISE": (Opcode.NOISE, "reg_level"),
    "HALT": (Opcode.HALT, "none"),
    ".WORD": (None, "word"),
    ".ORG": (None, "org"),
}

_SHAPE_ARITY = {
    "none": 0,
    "addr": 1,
    "reg": 1,
    "reg_addr": 2,
    "reg_srcimm": 2,
    "reg_level": 2,
    "word": 1,
    "org": 1,
}


@dataclass
class Operand:
    text: str
    column: int


@dataclass
class Line:
    number: int
    raw: str
    label: str | None = None
    mnemonic: str | None = None
    mnemonic_column: int = 1
    operands: list[Operand] = field(default_factory=list)
    comment: str | None = None
    address: int | None = None
    # filled in by the second pass: ("instr", Instruction) or ("word", int)
    emits: tuple[str, object] | None = None


@dataclass
class SourceProgram:
    lines: list[Line]
    symbol_table: dict[str, int]


def _parse_literal(text: str, line: int, column: int, limit: int, what: str) -> int:
    try:
        if text.lower().startswith("0x"):
            value = int(text, 16)
        elif re.fullmatch(r"[0-9]+", text):
            value = int(text, 10)
        else:
            raise ValueError
    except ValueError:
        raise AssemblyError(
            "malformed-literal", f"malformed literal {text!r}", line, column
        ) from None
    if not 0 <= value <= limit:
        raise AssemblyError(
            "operand-out-of-range",
            f"{what} {value} out of range 0..{limit}",
            line,
            column,
        )
    return value


def _parse_register(op: Operand, line: int) -> int:
    m = _REG_RE.match(op.text)
    if not m:
        raise AssemblyError(
            "bad-register", f"expected a register, got {op.text!r}", line, op.column
        )
    index = int(m.group(1))
    if index > 7:
        raise AssemblyError(
            "register-out-of-range", f"register out of range: {op.text}", line, op.column
        )
    return index


def _split_lines(text: str) -> list[str]:
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


def _tokenize(raw: str, number: int) -> Line:
    line = Line(number=number, raw=raw)
    body = raw
    semi = body.find(";")
    if semi != -1:
        line.comment = body[semi + 1:].strip()
        body = body[:semi]
    # label
    stripped = body.lstrip()
    offset = len(body) - len(stripped)
    m = _LABEL_RE.match(stripped)
    if m:
        line.label = m.group(1)
        consumed = offset + m.end()
        body = " " * consumed + body[consumed:]
        stripped = body.lstrip()
        offset = len(body) - len(stripped)
    if not stripped.strip():
        return line
    # mnemonic
    mn_match = re.match(r"^(\.?[A-Za-z_][A-Za-z0-9_]*)", stripped)
    if not mn_match:
        raise AssemblyError(
            "malformed-line", f"cannot parse {stripped.strip()!r}", number, offset + 1
        )
    line.mnemonic = mn_match.group(1).upper()
    line.mnemonic_column = offset + 1
    rest_start = offset + mn_match.end()
    rest = body[rest_start:]
    if rest.strip():
        col = rest_start
        for piece in rest.split(","):
            text = piece.strip()
            piece_col = col + (len(piece) - len(piece.lstrip())) + 1
            if not text:
                raise AssemblyError(
                    "malformed-line", "empty operand", number, piece_col
                )
            line.operands.append(Operand(text, piece_col))
            col += len(piece) + 1
    return line


def parse(text: str) -> SourceProgram:
    """Parse and fully validate a source program.

    Collects labels in a first pass, then resolves operands (including
    forward references) and range-checks everything; all errors carry a
    kind, line and column.
    """
    lines = [_tokenize(raw, i + 1) for i, raw in enumerate(_split_lines(text))]

    # pass 1: location counting and symbol collection
    symbols: dict[str, int] = {}
    location = 0
    for line in lines:
        if line.label is not None:
            if line.label in symbols:
                raise AssemblyError(
                    "duplicate-label",
                    f"duplicate label {line.label!r}",
                    line.number,
                    line.raw.find(line.label) + 1,
                )
            symbols[line.label] = location
        if line.mnemonic is None:
            continue
        shape = _SHAPES.get(line.mnemonic)
        if shape is None:
            raise AssemblyError(
                "unknown-mnemonic",
                f"unknown mnemonic {line.mnemonic!r}",
                line.number,
                line.mnemonic_column,
            )
        _, kind = shape
        if len(line.operands) != _SHAPE_ARITY[kind]:
            raise AssemblyError(
                "wrong-operand-count",
                f"{line.mnemonic} takes {_SHAPE_ARITY[kind]} operand(s), "
                f"got {len(line.operands)}",
                line.number,
                line.mnemonic_column,
            )
        if kind == "org":
            op = line.operands[0]
            location = _parse_literal(op.text, line.number, op.column, MEMORY_WORDS - 1, "origin")
            if line.label is not None:
                symbols[line.label] = location
            continue
        line.address = location
        location += 1

    # pass 2: operand resolution and encoding decisions
    for line in lines:
        if line.mnemonic is None or line.mnemonic == ".ORG":
            continue
        opcode, kind = _SHAPES[line.mnemonic]
        n, ops = line.number, line.operands
        if kind == "word":
            value = _parse_literal(ops[0].text, n, ops[0].column, 0xFFFF, "word")
            line.emits = ("word", value)
            continue
        if kind == "none":
            line.emits = ("instr", Instruction(opcode))
            continue
        if kind == "addr":
            addr = _resolve_address(ops[0], n, symbols)
            line.emits = ("instr", Instruction(opcode, 0, addr))
            continue
        if kind == "reg":
            reg = _parse_register(ops[0], n)
            line.emits = ("instr", Instruction(opcode, reg))
            continue
        reg = _parse_register(ops[0], n)
        if kind == "reg_addr":
            addr = _resolve_address(ops[1], n, symbols)
            line.emits = ("instr", Instruction(opcode, reg, addr))
        elif kind == "reg_level":
            level = _parse_literal(ops[1].text, n, ops[1].column, 0xFF, "noise level")
            line.emits = ("instr", Instruction(opcode, reg, level))
        elif kind == "reg_srcimm":
            src = ops[1]
            if src.text.startswith("#"):
                value = _parse_literal(src.text[1:], n, src.column, 0xFF, "immediate")
                line.emits = ("instr", Instruction(opcode, reg, value, immediate=True))
            else:
                src_reg = _parse_register(src, n)
                line.emits = ("instr", Instruction(opcode, reg, src_reg))
        else:  # pragma: no cover
            raise AssemblyError("malformed-line", f"unhandled shape {kind}", n, 1)

    return SourceProgram(lines=lines, symbol_table=symbols)


def _resolve_address(op: Operand, line: int, symbols: dict[str, int]) -> int:
    if _IDENT_RE.match(op.text) and not _REG_RE.match(op.text):
        if op.text not in symbols:
            raise AssemblyError(
                "undefined-label", f"undefined label {op.text!r}", line, op.column
            )
        return symbols[op.text]
    return _parse_literal(op.text, line, op.column, MEMORY_WORDS - 1, "address")


def assemble(program: SourceProgram) -> list[int]:
    """Encode a parsed program into a flat memory image."""
    cells: dict[int, tuple[int, int]] = {}  # addr -> (word, source line)
    for line in program.lines:
        if line.emits is None:
            continue
        what, payload = line.emits
        word = payload if what == "word" else encode(payload)
        addr = line.address
        if addr in cells:
            raise AssemblyError(
                "address-collision",
                f"address {addr} already filled from line {cells[addr][1]}",
                line.number,
                line.mnemonic_column,
            )
        if addr >= MEMORY_WORDS:
            raise AssemblyError(
                "image-overflow",
                f"image exceeds {MEMORY_WORDS} words",
                line.number,
                line.mnemonic_column,
            )
        cells[addr] = (word, line.number)
    if not cells:
        return []
    image = [0] * (max(cells) + 1)
    for addr, (word, _) in cells.items():
        image[addr] = word
    return image


def assemble_source(text: str) -> list[int]:
    return assemble(parse(text))


def disassemble(image: list[int]) -> str:
    """Canonical text for an image; words that do not decode (or carry
    non-canonical bits) become raw ``.word`` directives so every image
    survives a disassemble/assemble round trip."""
    out = []
    for word in image:
        try:
            instr = decode(word)
        except DecodeError:
            out.append(f".word 0x{word:04X}")
            continue
        if is_canonical(instr):
            out.append(format_instruction(instr))
        else:
            out.append(f".word 0x{word:04X}")
    return "\n".join(out) + ("\n" if out else "")


def make_listing(program: SourceProgram) -> str:
    """Address/word/source listing for an assembled program."""
    rows = []
    for line in program.lines:
        if line.emits is None:
            rows.append(f"          {line.raw}")
            continue
        what, payload = line.emits
        word = payload if what == "word" else encode(payload)
        rows.append(f"{line.address:3d} {word:04X}  {line.raw}")
    return "\n".join(rows) + "\n"


def save_image(image: list[int], path: str) -> None:
    """Write a flat little-endian 16-bit memory image."""
    with open(path, "wb") as fh:
        fh.write(struct.pack(f"<{len(image)}H", *image))


def load_image(path: str) -> list[int]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % 2 != 0:
        raise AssemblyError(
            "malformed-image", f"image file {path!r} has odd byte length", 1, 1
        )
    return list(struct.unpack(f"<{len(blob) // 2}H", blob))
