"""64-bit NPU instruction set: the lowest three bits select the operation,
the remaining bits configure the sub-blocks.

Field layouts are normative in ISA.md at the repository root; encode and
decode are bijective on the valid set, and reserved bits must be zero
(strict decoding).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from types import MappingProxyType
from typing import Iterable, Mapping

from ..errors import FieldOverflow, UnknownOpcode

WORD_BITS = 64
OPCODE_BITS = 3


class Opcode(IntEnum):
    LOAD_W = 0
    LOAD_A = 1
    CONV = 2
    POOL = 3
    FC = 4
    STORE = 5
    PRELOAD = 6
    END = 7


#: (field name, bit width) per opcode; fields pack LSB-first from bit 3.
FIELD_LAYOUT: dict[Opcode, tuple[tuple[str, int], ...]] = {
    Opcode.LOAD_W: (("layer", 8), ("addr", 24), ("length", 24)),
    Opcode.LOAD_A: (("source", 2), ("addr", 24), ("length", 24)),
    Opcode.CONV: (("layer", 8), ("in_h", 8), ("in_w", 8), ("in_c", 8),
                  ("out_c", 8), ("kernel", 4), ("stride", 2), ("pad", 4), ("relu", 1)),
    Opcode.POOL: (("layer", 8), ("in_h", 8), ("in_w", 8), ("channels", 8),
                  ("window", 3), ("stride", 2), ("mode", 1)),
    Opcode.FC: (("layer", 8), ("in_dim", 16), ("out_dim", 16), ("relu", 1)),
    Opcode.STORE: (("dest", 2), ("addr", 24), ("length", 24)),
    Opcode.PRELOAD: (("layer", 8), ("kind", 2)),
    Opcode.END: (),
}


def _field_offsets(opcode: Opcode) -> list[tuple[str, int, int]]:
    out = []
    offset = OPCODE_BITS
    for name, width in FIELD_LAYOUT[opcode]:
        out.append((name, offset, width))
        offset += width
    return out


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    fields: Mapping[str, int]

    @staticmethod
    def make(opcode: Opcode | int | str, **fields: int) -> "Instruction":
        """Build an instruction, defaulting unset fields to zero."""
        op = _coerce_opcode(opcode)
        layout = dict(FIELD_LAYOUT[op])
        unknown = set(fields) - set(layout)
        if unknown:
            raise ValueError(f"{op.name} has no field(s) {sorted(unknown)}")
        full = {name: int(fields.get(name, 0)) for name in layout}
        return Instruction(opcode=op, fields=MappingProxyType(full))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instruction):
            return NotImplemented
        return self.opcode == other.opcode and dict(self.fields) == dict(other.fields)

    def __hash__(self) -> int:
        return hash((self.opcode, tuple(sorted(self.fields.items()))))

    def __getitem__(self, name: str) -> int:
        return self.fields[name]


def _coerce_opcode(opcode: Opcode | int | str) -> Opcode:
    if isinstance(opcode, Opcode):
        return opcode
    if isinstance(opcode, str):
        try:
            return Opcode[opcode.upper()]
        except KeyError:
            raise UnknownOpcode(f"no opcode named {opcode!r}") from None
    try:
        return Opcode(opcode)
    except ValueError:
        raise UnknownOpcode(f"opcode value {opcode} outside 3-bit range") from None


def encode_instruction(instr: Instruction) -> int:
    """Pack an instruction into its 64-bit word. Raises FieldOverflow when a
    field value does not fit its width."""
    word = int(instr.opcode)
    for name, offset, width in _field_offsets(instr.opcode):
        value = int(instr.fields.get(name, 0))
        if value < 0 or value >= (1 << width):
            raise FieldOverflow(f"{instr.opcode.name}.{name}={value} exceeds {width} bits")
        word |= value << offset
    extra = set(instr.fields) - {name for name, _ in FIELD_LAYOUT[instr.opcode]}
    if extra:
        raise ValueError(f"{instr.opcode.name} has no field(s) {sorted(extra)}")
    return word


def decode_instruction(word: int) -> Instruction:
    """Unpack a 64-bit word. Reserved bits must be zero (FieldOverflow)."""
    if word < 0 or word >= (1 << WORD_BITS):
        raise FieldOverflow(f"word {word:#x} outside 64-bit range")
    opcode = Opcode(word & ((1 << OPCODE_BITS) - 1))
    fields: dict[str, int] = {}
    covered = OPCODE_BITS
    for name, offset, width in _field_offsets(opcode):
        fields[name] = (word >> offset) & ((1 << width) - 1)
        covered = offset + width
    if word >> covered:
        raise FieldOverflow(f"{opcode.name} word {word:#x} has nonzero reserved bits")
    return Instruction(opcode=opcode, fields=MappingProxyType(fields))


def assemble(text: str) -> list[int]:
    """Assemble ``OPCODE field=value ...`` lines (one instruction each) into words.

    Blank lines and ``#`` comments are ignored; values are decimal or 0x hex.
    """
    words: list[int] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            op = _coerce_opcode(parts[0])
        except UnknownOpcode as exc:
            raise UnknownOpcode(f"line {line_no}: {exc}") from None
        fields: dict[str, int] = {}
        for token in parts[1:]:
            if "=" not in token:
                raise ValueError(f"line {line_no}: expected field=value, got {token!r}")
            name, _, value = token.partition("=")
            try:
                fields[name] = int(value, 0)
            except ValueError:
                raise ValueError(f"line {line_no}: bad value {value!r} for {name}") from None
        try:
            words.append(encode_instruction(Instruction.make(op, **fields)))
        except (FieldOverflow, ValueError) as exc:
            raise type(exc)(f"line {line_no}: {exc}") from None
    return words


def disassemble(words: Iterable[int]) -> str:
    lines = []
    for word in words:
        instr = decode_instruction(word)
        parts = [instr.opcode.name]
        parts.extend(f"{name}={instr.fields[name]}" for name, _ in FIELD_LAYOUT[instr.opcode]
                     if instr.fields[name])
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")
