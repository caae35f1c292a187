"""Exception hierarchy shared by every layer of the simulator."""


class ReductionMachineError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigurationError(ReductionMachineError):
    """A parameter set or run configuration violates its invariants."""


class NoRelaxationScaleError(ConfigurationError):
    """Quadratic damping with zero drive has no relaxation time scale."""


class StepTooCoarseError(ReductionMachineError):
    """Integration step is too large relative to the relaxation time."""


class PinCannotFireError(ReductionMachineError):
    """Undriven pointer (zero terminal velocity) can never separate."""


class ContractViolationError(ReductionMachineError):
    """A state object or operation input breaks a documented contract."""


class PointerNotSeparatedError(ReductionMachineError):
    """Event reading requested before the pointer branches separated."""


class DecodeError(ReductionMachineError):
    """Word cannot be decoded into an instruction."""


class MachineFault(ReductionMachineError):
    """Execution fault raised by the machine while stepping."""


class MemoryFaultError(MachineFault):
    """Address outside the installed memory."""


class StructuralHazardError(MachineFault):
    """Pin operation issued while the pin is still busy."""


class AssemblyError(ReductionMachineError):
    """Source-level error with kind and location attached.

    ``kind`` is a stable machine-readable slug (e.g. ``unknown-mnemonic``,
    ``duplicate-label``); ``line`` and ``column`` are 1-based.
    """

    def __init__(self, kind: str, message: str, line: int, column: int):
        super().__init__(f"line {line}, col {column}: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message


class EnsembleMemberError(ReductionMachineError):
    """A member run faulted; carries the member index."""

    def __init__(self, member_index: int, cause: Exception):
        super().__init__(f"member {member_index} faulted: {cause}")
        self.member_index = member_index
        self.cause = cause
