"""Exception types shared across the pipeline."""


class EvtrackError(Exception):
    """Base class for all package errors."""


class MalformedLine(EvtrackError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: malformed row" + (f" ({detail})" if detail else ""))


class OutOfBounds(EvtrackError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: coordinate outside sensor geometry" + (f" ({detail})" if detail else ""))


class NonMonotonicTime(EvtrackError):
    def __init__(self, line_no: int = 0, detail: str = ""):
        self.line_no = line_no
        msg = "timestamp decreased"
        if line_no:
            msg = f"line {line_no}: {msg}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class ObjectLeavesFrame(EvtrackError):
    """Synthetic trajectory exits the sensor geometry."""


class OverlappingSlices(EvtrackError):
    """Two slices in one row intersect."""


class PrematureCommit(EvtrackError):
    """Commit requested before the match counter reached TH."""


class EmptyBox(EvtrackError):
    """Bounding box degenerate after clamping to the frame."""


class TooFewPoints(EvtrackError):
    """Trajectory has fewer than two points."""


class UnknownOpcode(EvtrackError):
    """Opcode value or mnemonic not in the instruction set."""


class FieldOverflow(EvtrackError):
    """Instruction field does not fit its bit width, or reserved bits are set."""


class ShapeMismatch(EvtrackError):
    """Operand shapes inconsistent with the layer description."""


class MalformedProgram(EvtrackError):
    """Program missing END or with a broken layer shape chain."""


class ModelShapeMismatch(EvtrackError):
    """Classifier input incompatible with the loaded model."""


class NoGroundTruth(EvtrackError):
    """Scoring requested with an empty ground-truth set."""


class ConfigError(EvtrackError):
    """Invalid or missing configuration value."""
