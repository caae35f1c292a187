"""Instruction set: 16-bit words, 16 opcodes, 8 registers.

Word layout, most significant bit first:

    bits 15-12  opcode
    bits 11-9   register index
    bit  8      immediate flag (ALU opcodes only)
    bits 7-0    operand: address, immediate, source register, or noise level

ALU opcodes with the flag clear take the source register from the operand's
low 3 bits; with the flag set the operand is an 8-bit immediate.  Non-ALU
opcodes must have bit 8 clear; words violating that do not decode.  The
NOISE operand n encodes a per-bit flip probability of n/256.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .errors import DecodeError


class Opcode(IntEnum):
    LOAD = 0x0
    STORE = 0x1
    ADD = 0x2
    SUB = 0x3
    AND = 0x4
    OR = 0x5
    XOR = 0x6
    NOT = 0x7
    SHL = 0x8
    SHR = 0x9
    JMP = 0xA
    JZ = 0xB
    RDPIN = 0xC
    WRPIN = 0xD
    NOISE = 0xE
    HALT = 0xF


#: Opcodes whose operand may be an immediate (bit 8 set).
ALU_OPCODES = frozenset(
    {Opcode.ADD, Opcode.SUB, Opcode.AND, Opcode.OR, Opcode.XOR, Opcode.NOT, Opcode.SHL, Opcode.SHR}
)

#: Binary ALU opcodes: second operand is a register or an immediate.
BINARY_ALU_OPCODES = frozenset(
    {Opcode.ADD, Opcode.SUB, Opcode.AND, Opcode.OR, Opcode.XOR, Opcode.SHL, Opcode.SHR}
)


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    reg: int = 0
    operand: int = 0
    immediate: bool = False

    def __post_init__(self):
        if not 0 <= self.reg <= 7:
            raise DecodeError(f"register index out of range: {self.reg}")
        if not 0 <= self.operand <= 0xFF:
            raise DecodeError(f"operand out of range: {self.operand}")
        if self.immediate and self.opcode not in ALU_OPCODES:
            raise DecodeError(f"immediate flag invalid for {self.opcode.name}")


def encode(instr: Instruction) -> int:
    """Pack an instruction into its 16-bit word."""
    return (
        (int(instr.opcode) << 12)
        | (instr.reg << 9)
        | (0x100 if instr.immediate else 0)
        | instr.operand
    )


def decode(word: int) -> Instruction:
    """Unpack a 16-bit word; raises DecodeError for invalid encodings."""
    if not 0 <= word <= 0xFFFF:
        raise DecodeError(f"word out of range: {word}")
    opcode = Opcode((word >> 12) & 0xF)
    reg = (word >> 9) & 0x7
    immediate = bool(word & 0x100)
    operand = word & 0xFF
    return Instruction(opcode, reg, operand, immediate)


def is_canonical(instr: Instruction) -> bool:
    """True when the canonical text form re-encodes to the same word.

    Decodable words may carry bits the semantics ignore (e.g. junk in the
    high operand bits of a register-register ALU op); those are not
    canonical and disassemble to a raw .word directive instead.
    """
    op = instr.opcode
    if op == Opcode.HALT:
        return instr.reg == 0 and instr.operand == 0
    if op == Opcode.JMP:
        return instr.reg == 0
    if op == Opcode.NOT:
        return not instr.immediate and instr.operand == 0
    if op in BINARY_ALU_OPCODES and not instr.immediate:
        return instr.operand <= 7
    return True


def format_instruction(instr: Instruction) -> str:
    """Canonical text: uppercase mnemonic, decimal operands."""
    op = instr.opcode
    if op == Opcode.HALT:
        return "HALT"
    if op == Opcode.JMP:
        return f"JMP {instr.operand}"
    if op == Opcode.NOT:
        return f"NOT R{instr.reg}"
    if op in BINARY_ALU_OPCODES:
        if instr.immediate:
            return f"{op.name} R{instr.reg}, #{instr.operand}"
        return f"{op.name} R{instr.reg}, R{instr.operand & 0x7}"
    # LOAD, STORE, JZ, RDPIN, WRPIN, NOISE: register plus 8-bit operand
    return f"{op.name} R{instr.reg}, {instr.operand}"
