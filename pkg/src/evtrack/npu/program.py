"""NPU program construction, execution, and the overlapped cycle model.

A program is a straight-line instruction list ending in END. Execution is
single-writer per simulator instance and bit-deterministic; the schedule
(preloading on or off) never changes numerical results, only the timeline.

Cycle model: a fixed per-instruction setup plus one abstract cycle per MAC
wave across the 16x16 array (tiles x reduction length for conv, output
chunks x input length for fc) and one cycle per 16 bytes moved for loads
and stores. PRELOAD runs on a separate load engine overlapping the compute
instruction in flight; computes wait for their weights to be resident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import MalformedProgram, ModelShapeMismatch
from ..isp import ClassifierInput
from .array import (ARRAY_DIM, MacReport, PeArray, conv2d_output_stationary,
                    conv_output_shape, fc_output_stationary, pool2d,
                    relu_requantize)
from .isa import Instruction, Opcode
from .model import (INPUT_SIDE, CnnModel, ConvLayer, FcLayer, PoolLayer,
                    quantize_input)

SETUP_CYCLES = 4
LOAD_BYTES_PER_CYCLE = 16

PRELOAD_WEIGHTS = 0
PRELOAD_ACTIVATIONS = 1


@dataclass(frozen=True)
class NpuProgram:
    instructions: tuple[Instruction, ...]
    model: CnnModel

    @property
    def words(self) -> list[int]:
        from .isa import encode_instruction
        return [encode_instruction(i) for i in self.instructions]


@dataclass(frozen=True)
class TimelineEntry:
    index: int
    opcode: str
    start: int
    end: int
    engine: str  # "main" or "loader"


@dataclass(frozen=True)
class Timeline:
    entries: tuple[TimelineEntry, ...]
    preload_enabled: bool

    @property
    def total_cycles(self) -> int:
        return max((e.end for e in self.entries), default=0)


@dataclass
class RunResult:
    label: str | None
    confidence: float
    timeline: Timeline
    mac_report: MacReport
    logits: np.ndarray | None = None  # dequantized float logits

    def __iter__(self):
        # allow ``label, confidence, timeline = run_program(...)``
        return iter((self.label, self.confidence, self.timeline))


def build_program(model: CnnModel) -> NpuProgram:
    """Emit the instruction stream for one inference, with preloads placed
    right after each compute so the next layer's weights stream in during it."""
    shapes = model.input_shapes()
    weighted = model.weighted_layers()
    addr = 0
    addrs: dict[int, tuple[int, int]] = {}
    for i in weighted:
        length = model.layer_payload_bytes(i)
        addrs[i] = (addr, length)
        addr += length

    instrs: list[Instruction] = []
    first = weighted[0]
    instrs.append(Instruction.make(Opcode.LOAD_W, layer=first,
                                   addr=addrs[first][0], length=addrs[first][1]))
    instrs.append(Instruction.make(Opcode.LOAD_A, source=0, addr=0,
                                   length=int(np.prod(model.input_shape))))
    preloaded = {first}
    for i, layer in enumerate(model.layers):
        shape = shapes[i]
        if isinstance(layer, ConvLayer):
            o, c, k, _ = layer.weights.shape
            instrs.append(Instruction.make(
                Opcode.CONV, layer=i, in_h=shape[1], in_w=shape[2], in_c=c,
                out_c=o, kernel=k, stride=layer.stride, pad=layer.pad,
                relu=int(layer.relu)))
        elif isinstance(layer, PoolLayer):
            instrs.append(Instruction.make(
                Opcode.POOL, layer=i, in_h=shape[1], in_w=shape[2],
                channels=shape[0], window=layer.window, stride=layer.stride,
                mode=1 if layer.mode == "avg" else 0))
        else:
            instrs.append(Instruction.make(
                Opcode.FC, layer=i, in_dim=layer.weights.shape[1],
                out_dim=layer.weights.shape[0], relu=0))
        nxt = next((j for j in weighted if j > i and j not in preloaded), None)
        if nxt is not None:
            instrs.append(Instruction.make(Opcode.PRELOAD, layer=nxt,
                                           kind=PRELOAD_WEIGHTS))
            preloaded.add(nxt)
    n_logits = model.layers[-1].weights.shape[0]
    instrs.append(Instruction.make(Opcode.STORE, dest=0, addr=0, length=4 * n_logits))
    instrs.append(Instruction.make(Opcode.END))
    return NpuProgram(instructions=tuple(instrs), model=model)


def instruction_cycles(instr: Instruction, program: NpuProgram) -> int:
    op = instr.opcode
    if op in (Opcode.LOAD_W, Opcode.LOAD_A, Opcode.STORE):
        return SETUP_CYCLES + math.ceil(instr["length"] / LOAD_BYTES_PER_CYCLE)
    if op is Opcode.PRELOAD:
        nbytes = program.model.layer_payload_bytes(instr["layer"])
        return SETUP_CYCLES + math.ceil(nbytes / LOAD_BYTES_PER_CYCLE)
    if op is Opcode.CONV:
        out_h, out_w = conv_output_shape(instr["in_h"], instr["in_w"],
                                         instr["kernel"], instr["stride"], instr["pad"])
        tiles = instr["out_c"] * math.ceil(out_h / ARRAY_DIM) * math.ceil(out_w / ARRAY_DIM)
        reduction = instr["kernel"] ** 2 * instr["in_c"]
        return SETUP_CYCLES + tiles * reduction
    if op is Opcode.POOL:
        out_h = (instr["in_h"] - instr["window"]) // instr["stride"] + 1
        out_w = (instr["in_w"] - instr["window"]) // instr["stride"] + 1
        waves = math.ceil(instr["channels"] * out_h * out_w / (ARRAY_DIM * ARRAY_DIM))
        return SETUP_CYCLES + waves * instr["window"] ** 2
    if op is Opcode.FC:
        return SETUP_CYCLES + math.ceil(instr["out_dim"] / (ARRAY_DIM * ARRAY_DIM)) * instr["in_dim"]
    return SETUP_CYCLES  # END


def schedule(program: NpuProgram, preload_enabled: bool) -> Timeline:
    """Abstract-cycle timeline; with preloading off everything serializes."""
    main_free = 0
    loader_free = 0
    prev_start = 0
    weights_ready: dict[int, int] = {}
    entries: list[TimelineEntry] = []
    for idx, instr in enumerate(program.instructions):
        dur = instruction_cycles(instr, program)
        if preload_enabled and instr.opcode is Opcode.PRELOAD:
            start = max(prev_start, loader_free)
            loader_free = start + dur
            engine = "loader"
        else:
            dep = 0
            if instr.opcode in (Opcode.CONV, Opcode.FC):
                dep = weights_ready.get(instr["layer"], 0)
            start = max(main_free, dep)
            main_free = start + dur
            engine = "main"
        if instr.opcode in (Opcode.LOAD_W, Opcode.PRELOAD):
            weights_ready[instr["layer"]] = start + dur
        entries.append(TimelineEntry(index=idx, opcode=instr.opcode.name,
                                     start=start, end=start + dur, engine=engine))
        prev_start = start
    return Timeline(entries=tuple(entries), preload_enabled=preload_enabled)


def run_program(program: NpuProgram, classifier_input: ClassifierInput | np.ndarray | None,
                *, preload_enabled: bool = True) -> RunResult:
    """Execute the program on one input.

    Raises MalformedProgram when END is missing or not last, when a compute
    runs without its weights resident, or when the shape chain breaks.
    """
    instrs = program.instructions
    if not instrs or instrs[-1].opcode is not Opcode.END:
        raise MalformedProgram("program must end with END")
    if any(i.opcode is Opcode.END for i in instrs[:-1]):
        raise MalformedProgram("END before the last instruction")

    model = program.model
    pe = PeArray()
    act: np.ndarray | None = None
    weights_resident: set[int] = set()
    logits_acc: np.ndarray | None = None
    fc_scale = 1.0
    report = MacReport()

    for instr in instrs:
        op = instr.opcode
        if op is Opcode.LOAD_A:
            if classifier_input is None:
                raise MalformedProgram("LOAD_A with no input bound")
            pixels = (classifier_input.pixels
                      if isinstance(classifier_input, ClassifierInput) else classifier_input)
            if pixels.shape != (INPUT_SIDE, INPUT_SIDE):
                raise ModelShapeMismatch(f"input shape {pixels.shape} != "
                                         f"({INPUT_SIDE}, {INPUT_SIDE})")
            act = quantize_input(pixels)[None, :, :]
        elif op is Opcode.LOAD_W or (op is Opcode.PRELOAD and instr["kind"] == PRELOAD_WEIGHTS):
            layer_id = instr["layer"]
            if layer_id >= len(model.layers) or isinstance(model.layers[layer_id], PoolLayer):
                raise MalformedProgram(f"load targets layer {layer_id} with no weights")
            weights_resident.add(layer_id)
        elif op is Opcode.CONV:
            layer = _expect_layer(model, instr["layer"], ConvLayer)
            if instr["layer"] not in weights_resident:
                raise MalformedProgram(f"CONV layer {instr['layer']} weights not resident")
            if act is None:
                raise MalformedProgram("CONV before LOAD_A")
            _check_fields(act, instr, ("in_c", "in_h", "in_w"))
            acc, rep = conv2d_output_stationary(act, layer.weights, layer.bias,
                                                stride=layer.stride, pad=layer.pad,
                                                pe_array=pe)
            act = relu_requantize(acc, layer.scale, layer.relu)
            report = report.merge(rep)
        elif op is Opcode.POOL:
            layer = _expect_layer(model, instr["layer"], PoolLayer)
            if act is None:
                raise MalformedProgram("POOL before LOAD_A")
            _check_fields(act, instr, ("channels", "in_h", "in_w"))
            act = pool2d(act, layer.window, layer.stride, layer.mode)
        elif op is Opcode.FC:
            layer = _expect_layer(model, instr["layer"], FcLayer)
            if instr["layer"] not in weights_resident:
                raise MalformedProgram(f"FC layer {instr['layer']} weights not resident")
            if act is None:
                raise MalformedProgram("FC before LOAD_A")
            flat = act.reshape(-1)
            if flat.shape[0] != instr["in_dim"]:
                raise MalformedProgram(f"FC expects {instr['in_dim']} inputs, "
                                       f"feature map flattens to {flat.shape[0]}")
            logits_acc, rep = fc_output_stationary(flat, layer.weights, layer.bias,
                                                   pe_array=pe)
            fc_scale = layer.scale
            report = report.merge(rep)
        elif op is Opcode.STORE:
            if instr["dest"] == 0 and logits_acc is None:
                raise MalformedProgram("STORE of logits before FC")
        elif op is Opcode.END:
            break

    label = None
    confidence = 0.0
    logits = None
    if logits_acc is not None:
        logits = logits_acc.astype(np.float64) * fc_scale
        shifted = np.exp(logits - logits.max())
        probs = shifted / shifted.sum()
        best = int(np.argmax(probs))
        label = model.classes[best]
        confidence = float(probs[best])
    return RunResult(label=label, confidence=confidence,
                     timeline=schedule(program, preload_enabled),
                     mac_report=report, logits=logits)


def _expect_layer(model: CnnModel, layer_id: int, kind: type):
    if layer_id >= len(model.layers) or not isinstance(model.layers[layer_id], kind):
        raise MalformedProgram(f"instruction targets layer {layer_id}, expected "
                               f"{kind.__name__}")
    return model.layers[layer_id]


def _check_fields(act: np.ndarray, instr: Instruction, names: tuple[str, str, str]) -> None:
    c_name, h_name, w_name = names
    if act.shape != (instr[c_name], instr[h_name], instr[w_name]):
        raise MalformedProgram(f"{instr.opcode.name} fields expect "
                               f"{(instr[c_name], instr[h_name], instr[w_name])}, "
                               f"activations are {act.shape}")


def classify(classifier_input: ClassifierInput | np.ndarray, model: CnnModel,
             *, preload_enabled: bool = True) -> tuple[str, float]:
    """Run one inference; the same model serves patches and trajectory rasters."""
    result = run_program(build_program(model), classifier_input,
                         preload_enabled=preload_enabled)
    assert result.label is not None
    return result.label, result.confidence
