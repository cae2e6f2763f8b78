"""NPU simulator: 64-bit ISA, output-stationary PE array, program runner,
and the quantized toy classifier."""

from .array import ARRAY_DIM, MacReport, PeArray, conv2d_output_stationary, fc_output_stationary, pool2d
from .isa import FIELD_LAYOUT, Instruction, Opcode, assemble, decode_instruction, disassemble, encode_instruction
from .model import CnnModel, ConvLayer, FcLayer, PoolLayer, default_model, load_blob, save_blob
from .program import NpuProgram, RunResult, Timeline, build_program, classify, run_program

__all__ = [
    "ARRAY_DIM", "MacReport", "PeArray", "conv2d_output_stationary",
    "fc_output_stationary", "pool2d", "FIELD_LAYOUT", "Instruction", "Opcode",
    "assemble", "decode_instruction", "disassemble", "encode_instruction",
    "CnnModel", "ConvLayer", "FcLayer", "PoolLayer", "default_model",
    "load_blob", "save_blob", "NpuProgram", "RunResult", "Timeline",
    "build_program", "classify", "run_program",
]
