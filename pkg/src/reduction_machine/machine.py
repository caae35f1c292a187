"""The stored-program machine: memory, branch-ensemble register file, ALU,
control unit, and the pin bank that reduces register bits to memory bits.

Two register models are supported.  In fine mode the register file holds a
single definite microstate and every run is deterministic.  In coarse mode
it holds a weighted set of microstates (branches); NOISE instructions split
branches and pin event readings condition them, which is where randomness
enters.  Memory and control flow always stay classical: storing or
branching on a value that differs across branches is a fault, forcing
uncertain data through a pin (WRPIN) first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    MachineFault,
    MemoryFaultError,
    PinCannotFireError,
    StructuralHazardError,
)
from .isa import ALU_OPCODES, Instruction, Opcode, decode, format_instruction
from .physics import (
    PhysicsParams,
    latency_from_kinematics,
    relaxation_time,
    terminal_velocity,
)
from .quantum import (
    PURITY_TOL,
    DensityMatrix,
    PointerState,
    apply_superselection,
    binary_entropy,
    decohere,
    event_read,
    evolve_von_neumann,
    purify,
)

WEIGHT_TOL = 1e-9

_PURE0 = DensityMatrix.pure(0)


def alu_execute(op: Opcode, a: int, b: int, width: int = 8) -> int:
    """Wrapping arithmetic/logic on width-bit values.

    The zero-ness of the result is what JZ observes (through the register
    it lands in).
    """
    mask = (1 << width) - 1
    if op == Opcode.ADD:
        return (a + b) & mask
    if op == Opcode.SUB:
        return (a - b) & mask
    if op == Opcode.AND:
        return a & b & mask
    if op == Opcode.OR:
        return (a | b) & mask
    if op == Opcode.XOR:
        return (a ^ b) & mask
    if op == Opcode.NOT:
        return ~a & mask
    if op == Opcode.SHL:
        return (a << b) & mask if b < width else 0
    if op == Opcode.SHR:
        return (a >> b) & mask if b < width else 0
    raise MachineFault(f"{op.name} is not an ALU operation")


class RegisterFile:
    """Register file as a weighted set of microstates.

    A microstate is the tuple of all register values.  Fine mode keeps
    exactly one branch of weight 1; coarse mode keeps up to 2**capacity_bits
    branches, pruning the lightest ones beyond that and tracking the leaked
    mass.
    """

    def __init__(self, mode: str, n_registers: int = 8, width: int = 8,
                 capacity_bits: int = 16):
        if mode not in ("fine", "coarse"):
            raise ConfigurationError(f"mode must be 'fine' or 'coarse', got {mode!r}")
        if not 1 <= n_registers <= 8:
            raise ConfigurationError(f"n_registers must be 1..8, got {n_registers}")
        if not 1 <= width <= 8:
            raise ConfigurationError(f"register width must be 1..8 bits, got {width}")
        if not 0 <= capacity_bits <= 24:
            raise ConfigurationError(f"capacity_bits must be 0..24, got {capacity_bits}")
        self.mode = mode
        self.n_registers = n_registers
        self.width = width
        self.capacity_bits = capacity_bits
        self.branch_limit = 1 << capacity_bits
        self.branches: dict[tuple[int, ...], float] = {(0,) * n_registers: 1.0}
        self.pruned_mass = 0.0
        self.max_branch_count = 1

    @property
    def is_fine(self) -> bool:
        return self.mode == "fine"

    def apply(self, fn) -> None:
        """Push every branch through fn(microstate) and merge collisions."""
        new: dict[tuple[int, ...], float] = {}
        for regs, w in self.branches.items():
            nr = fn(regs)
            if nr in new:
                new[nr] += w
            else:
                new[nr] = w
        self.branches = new

    def set_register(self, reg: int, value: int) -> None:
        self.apply(lambda regs: regs[:reg] + (value,) + regs[reg + 1:])

    def split_noise(self, reg: int, eps: float) -> None:
        """Split each branch over independent per-bit flips of register reg."""
        if self.is_fine:
            raise MachineFault("noise splits are only defined for the coarse model")
        if not 0.0 <= eps < 1.0:
            raise ConfigurationError(f"flip probability must be in [0, 1), got {eps}")
        if eps == 0.0:
            return
        masks = []
        keep = 1.0 - eps
        for mask in range(1 << self.width):
            k = bin(mask).count("1")
            p = (eps ** k) * (keep ** (self.width - k))
            if p > 0.0:
                masks.append((mask, p))
        new: dict[tuple[int, ...], float] = {}
        for regs, w in self.branches.items():
            head, base, tail = regs[:reg], regs[reg], regs[reg + 1:]
            for mask, p in masks:
                nr = head + (base ^ mask,) + tail
                nw = w * p
                if nr in new:
                    new[nr] += nw
                else:
                    new[nr] = nw
        self.branches = new
        self._note_branch_count()
        self._enforce_capacity()

    def marginal_one(self, reg: int, bit: int) -> float:
        """Probability that the given bit of register reg is 1."""
        return sum(w for regs, w in self.branches.items() if (regs[reg] >> bit) & 1)

    def condition(self, reg: int, bit: int, value: int) -> None:
        """Keep only branches consistent with the read-out bit; renormalize."""
        kept = {
            regs: w
            for regs, w in self.branches.items()
            if ((regs[reg] >> bit) & 1) == value
        }
        total = sum(kept.values())
        if total <= 0.0:
            raise MachineFault("conditioning removed all branches (zero-probability outcome)")
        self.branches = {regs: w / total for regs, w in kept.items()}

    def definite_value(self, reg: int) -> int | None:
        """Register value when all branches agree, else None."""
        it = iter(self.branches)
        v = next(it)[reg]
        for regs in it:
            if regs[reg] != v:
                return None
        return v

    def expectations(self) -> list[float]:
        out = [0.0] * self.n_registers
        for regs, w in self.branches.items():
            for i, v in enumerate(regs):
                out[i] += w * v
        return out

    def total_weight(self) -> float:
        return sum(self.branches.values())

    def _note_branch_count(self) -> None:
        n = len(self.branches)
        if n > self.max_branch_count:
            self.max_branch_count = n

    def _enforce_capacity(self) -> None:
        if len(self.branches) <= self.branch_limit:
            return
        ranked = sorted(self.branches.items(), key=lambda kv: (-kv[1], kv[0]))
        kept = ranked[: self.branch_limit]
        self.pruned_mass += sum(w for _, w in ranked[self.branch_limit:])
        total = sum(w for _, w in kept)
        self.branches = {regs: w / total for regs, w in kept}


def compute_cycle(rf: RegisterFile, instr: Instruction, rng=None) -> RegisterFile:
    """One register/ALU cycle: branchwise pushforward for ALU opcodes,
    branch splitting for NOISE (coarse mode only; a no-op in fine mode).

    rng is reserved for future stochastic channels; branch splitting is a
    deterministic reweighting, so nothing here draws randomness.
    """
    op = instr.opcode
    if op == Opcode.NOISE:
        if not rf.is_fine:
            rf.split_noise(instr.reg, instr.operand / 256.0)
        return rf
    if op not in ALU_OPCODES:
        raise MachineFault(f"{op.name} is not a register-file operation")
    r = instr.reg
    if r >= rf.n_registers:
        raise MachineFault(f"register R{r} beyond register file of {rf.n_registers}")
    width = rf.width
    mask = (1 << width) - 1
    if op == Opcode.NOT:
        rf.apply(lambda regs: regs[:r] + (~regs[r] & mask,) + regs[r + 1:])
    elif instr.immediate:
        b = instr.operand & mask
        rf.apply(lambda regs: regs[:r] + (alu_execute(op, regs[r], b, width),) + regs[r + 1:])
    else:
        src = instr.operand & 0x7
        if src >= rf.n_registers:
            raise MachineFault(f"register R{src} beyond register file of {rf.n_registers}")
        rf.apply(
            lambda regs: regs[:r] + (alu_execute(op, regs[r], regs[src], width),) + regs[r + 1:]
        )
    return rf


@dataclass(frozen=True)
class PinFireRecord:
    """One completed event reading at a pin."""

    kind: str  # "read" or "write"
    cycle: int
    pin: int
    addr: int
    weights: tuple[float, float]
    outcome: int
    surprisal_bits: float
    latency_cycles: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cycle": self.cycle,
            "pin": self.pin,
            "addr": self.addr,
            "p0": self.weights[0],
            "p1": self.weights[1],
            "outcome": self.outcome,
            "surprisal_bits": self.surprisal_bits,
            "latency_cycles": self.latency_cycles,
        }


@dataclass(frozen=True)
class DataLogEntry:
    """Knowledge written back to data memory by a pin."""

    cycle: int
    pin: int
    addr: int
    outcome: int
    surprisal_bits: float
    p1: float

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "pin": self.pin,
            "addr": self.addr,
            "outcome": self.outcome,
            "surprisal_bits": self.surprisal_bits,
            "p1": self.p1,
        }


@dataclass
class PinDevice:
    """One pin: potential switch, meter state, pointer, firing log.

    latency_remaining stays 0 under the sequential control unit (pin
    operations complete atomically); it exists so a non-atomic scheduler,
    or a direct caller, hits the structural-hazard contract.
    """

    pin_id: int
    pointer: PointerState
    rho: DensityMatrix = _PURE0
    delta_u: float = 0.0
    latency_remaining: int = 0
    log: list[PinFireRecord] = field(default_factory=list)


@dataclass
class RunResult:
    trace: list[dict]
    timed_out: bool


class Machine:
    """A complete machine instance owning memory, registers, pins and clock."""

    def __init__(
        self,
        image: list[int],
        *,
        mode: str = "fine",
        capacity_bits: int = 16,
        physics: PhysicsParams | None = None,
        eta: float = 3.0,
        t_cycle: float = 1.0,
        sigma_q: float | None = None,
        n_registers: int = 8,
        register_width: int = 8,
        n_pins: int = 8,
        memory_words: int = 256,
        velocity_scale: float = 1.0,
    ):
        if physics is None:
            physics = PhysicsParams()
        if not 1 <= n_pins <= 8:
            raise ConfigurationError(f"n_pins must be 1..8, got {n_pins}")
        if not 1 <= memory_words <= 256:
            raise ConfigurationError(f"memory_words must be 1..256, got {memory_words}")
        if len(image) > memory_words:
            raise ConfigurationError(
                f"image of {len(image)} words exceeds memory of {memory_words}"
            )
        for w in image:
            if not 0 <= w <= 0xFFFF:
                raise ConfigurationError(f"image word out of range: {w}")
        if velocity_scale <= 0:
            raise ConfigurationError(f"velocity_scale must be positive, got {velocity_scale}")
        if sigma_q is None:
            sigma_q = physics.bec_radius
        if sigma_q <= 0:
            raise ConfigurationError(f"sigma_q must be positive, got {sigma_q}")
        if eta <= 0:
            raise ConfigurationError(f"eta must be positive, got {eta}")
        if t_cycle <= 0:
            raise ConfigurationError(f"t_cycle must be positive, got {t_cycle}")

        self.physics = physics
        self.eta = eta
        self.t_cycle = t_cycle
        self.sigma_q = sigma_q
        self.n_pins = n_pins
        self.memory_words = memory_words
        self.memory = list(image) + [0] * (memory_words - len(image))
        self.initial_memory = list(self.memory)
        self.registers = RegisterFile(mode, n_registers, register_width, capacity_bits)
        self.pins: dict[int, PinDevice] = {}
        self.pc = 0
        self.instruction_register = 0
        self.cycle = 0
        self.halted = False
        self.data_log: list[DataLogEntry] = []
        self.info_bits = 0.0
        self.predicted_bits = 0.0

        self.lam = terminal_velocity(physics) * velocity_scale
        if self.lam > 0.0:
            self.tau = relaxation_time(physics)
            self.latency_cycles = latency_from_kinematics(
                self.lam, self.tau, sigma_q, eta, t_cycle
            )
        else:
            self.tau = 0.0
            self.latency_cycles = None
        self._fresh_pointer = PointerState(sigma_q=sigma_q)

    @property
    def mode(self) -> str:
        return self.registers.mode

    # ---------------------------------------------------------------- pins

    def _get_pin(self, pin_id: int) -> PinDevice:
        if not 0 <= pin_id < self.n_pins:
            raise MachineFault(f"pin {pin_id} beyond pin bank of {self.n_pins}")
        pin = self.pins.get(pin_id)
        if pin is None:
            pin = PinDevice(pin_id=pin_id, pointer=self._fresh_pointer)
            self.pins[pin_id] = pin
        return pin

    def _check_addr(self, addr: int) -> None:
        if not 0 <= addr < self.memory_words:
            raise MemoryFaultError(f"address {addr} beyond memory of {self.memory_words} words")

    def _fire(self, pin: PinDevice, p1: float, rng) -> tuple[int, float, int]:
        """Run the reduction pipeline for meter weight p1; returns
        (outcome, surprisal, latency)."""
        rho = decohere(DensityMatrix.from_weights(1.0 - p1, p1))
        psi = purify(rho)
        pointer = self._fresh_pointer
        pure = p1 <= PURITY_TOL or p1 >= 1.0 - PURITY_TOL
        if self.lam > 0.0:
            t_needed = self.eta * self.sigma_q / self.lam
            psi, pointer = evolve_von_neumann(psi, pointer, self.lam, t_needed)
            latency = self.latency_cycles
        elif pure:
            # no pointer displacement needed for a deterministic reading;
            # charge the minimal transfer cost
            psi, pointer = evolve_von_neumann(psi, pointer, 0.0, 0.0)
            latency = 1
        else:
            raise PinCannotFireError(
                "pin cannot fire: mixed meter state with zero terminal velocity"
            )
        rho_ss = apply_superselection(psi, pointer)
        reading = event_read(rho_ss, pointer, self.eta, rng)
        pin.rho = reading.rho_after
        pin.delta_u = self.physics.u0 if reading.outcome == 1 else 0.0
        pin.pointer = self._fresh_pointer
        return reading.outcome, reading.surprisal_bits, latency

    def pin_write(self, pin_id: int, reg: int, bit: int, addr: int, rng) -> PinFireRecord:
        """Measure one register bit through a pin and store the outcome.

        The marginal weight of the bit across branches prepares the meter
        state; the event reading picks an eigenvalue, the outcome lands in
        memory and the data log, and the branch ensemble is conditioned on
        it.
        """
        pin = self._get_pin(pin_id)
        if pin.latency_remaining > 0:
            raise StructuralHazardError(f"pin {pin_id} busy for {pin.latency_remaining} cycles")
        self._check_addr(addr)
        if reg >= self.registers.n_registers:
            raise MachineFault(f"register R{reg} beyond register file")
        if not 0 <= bit < self.registers.width:
            raise MachineFault(f"bit {bit} beyond register width {self.registers.width}")
        p1 = self.registers.marginal_one(reg, bit)
        outcome, surprisal, latency = self._fire(pin, p1, rng)
        self.cycle += latency
        self.memory[addr] = outcome
        record = PinFireRecord(
            kind="write",
            cycle=self.cycle,
            pin=pin_id,
            addr=addr,
            weights=(1.0 - p1, p1),
            outcome=outcome,
            surprisal_bits=surprisal,
            latency_cycles=latency,
        )
        pin.log.append(record)
        self.data_log.append(
            DataLogEntry(self.cycle, pin_id, addr, outcome, surprisal, p1)
        )
        self.info_bits += surprisal
        self.predicted_bits += binary_entropy(p1)
        self.registers.condition(reg, bit, outcome)
        return record

    def pin_read(self, pin_id: int, addr: int, reg: int, rng) -> PinFireRecord:
        """Read a memory bit through a pin into a register.

        Memory is classical and definite, so the meter state is pure and
        the reading is deterministic with zero surprisal; the latency is
        still charged.
        """
        pin = self._get_pin(pin_id)
        if pin.latency_remaining > 0:
            raise StructuralHazardError(f"pin {pin_id} busy for {pin.latency_remaining} cycles")
        self._check_addr(addr)
        if reg >= self.registers.n_registers:
            raise MachineFault(f"register R{reg} beyond register file")
        bitval = self.memory[addr] & 1
        outcome, surprisal, latency = self._fire(pin, float(bitval), rng)
        self.cycle += latency
        record = PinFireRecord(
            kind="read",
            cycle=self.cycle,
            pin=pin_id,
            addr=addr,
            weights=(1.0 - bitval, float(bitval)),
            outcome=outcome,
            surprisal_bits=surprisal,
            latency_cycles=latency,
        )
        pin.log.append(record)
        self.registers.set_register(reg, outcome)
        return record

    # ------------------------------------------------------------- control

    def step(self, rng, record_trace: bool = False) -> dict | None:
        """One fetch-decode-execute cycle."""
        if self.halted:
            raise MachineFault("machine is halted")
        self._check_addr(self.pc)
        pc_before = self.pc
        word = self.memory[self.pc]
        self.instruction_register = word
        instr = decode(word)
        op = instr.opcode
        cost = 1
        pin_events: list[PinFireRecord] = []

        # JMP and HALT ignore the register field; everything else names one
        if op not in (Opcode.JMP, Opcode.HALT) and instr.reg >= self.registers.n_registers:
            raise MachineFault(
                f"register R{instr.reg} beyond register file of {self.registers.n_registers}"
            )

        if op in ALU_OPCODES or op == Opcode.NOISE:
            compute_cycle(self.registers, instr, rng)
            self.pc += 1
        elif op == Opcode.LOAD:
            self._check_addr(instr.operand)
            value = self.memory[instr.operand] & ((1 << self.registers.width) - 1)
            self.registers.set_register(instr.reg, value)
            self.pc += 1
        elif op == Opcode.STORE:
            self._check_addr(instr.operand)
            value = self.registers.definite_value(instr.reg)
            if value is None:
                raise MachineFault(
                    f"STORE of branch-indefinite register R{instr.reg}; "
                    "measure it through WRPIN first"
                )
            self.memory[instr.operand] = value
            self.pc += 1
        elif op == Opcode.JMP:
            self.pc = instr.operand
        elif op == Opcode.JZ:
            value = self.registers.definite_value(instr.reg)
            if value is None:
                raise MachineFault(
                    f"JZ on branch-indefinite register R{instr.reg}; "
                    "measure it through WRPIN first"
                )
            self.pc = instr.operand if value == 0 else self.pc + 1
        elif op == Opcode.RDPIN:
            record = self.pin_read(instr.reg, instr.operand, instr.reg, rng)
            pin_events.append(record)
            cost = record.latency_cycles
            self.pc += 1
        elif op == Opcode.WRPIN:
            record = self.pin_write(instr.reg, instr.reg, 0, instr.operand, rng)
            pin_events.append(record)
            cost = record.latency_cycles
            self.pc += 1
        elif op == Opcode.HALT:
            self.halted = True
        else:  # pragma: no cover - every opcode is handled above
            raise MachineFault(f"unhandled opcode {op.name}")

        if op != Opcode.RDPIN and op != Opcode.WRPIN:
            self.cycle += cost
        self.registers._note_branch_count()

        if not record_trace:
            return None
        return {
            "cycle": self.cycle,
            "pc": pc_before,
            "word": word,
            "instr": format_instruction(instr),
            "cost": cost,
            "branch_count": len(self.registers.branches),
            "registers": [
                self.registers.definite_value(i)
                for i in range(self.registers.n_registers)
            ],
            "register_expect": self.registers.expectations(),
            "pin_events": [r.to_dict() for r in pin_events],
            "info_bits": self.info_bits,
        }

    def run(self, rng, max_cycles: int = 10_000, collect_trace: bool = False) -> RunResult:
        """Step until HALT or until the cycle budget runs out (a timeout,
        not a fault)."""
        trace: list[dict] = []
        while not self.halted and self.cycle < max_cycles:
            rec = self.step(rng, record_trace=collect_trace)
            if collect_trace:
                trace.append(rec)
        return RunResult(trace=trace, timed_out=not self.halted)

    # ------------------------------------------------------------- reports

    def macrostate_key(self) -> str:
        """Gained knowledge: the ordered string of event-read bits."""
        return "".join(str(e.outcome) for e in self.data_log)

    def memory_diff(self) -> list[dict]:
        return [
            {"addr": i, "before": b, "after": a}
            for i, (b, a) in enumerate(zip(self.initial_memory, self.memory))
            if b != a
        ]

    def snapshot(self) -> dict:
        """Deterministic full-state dump used for reproducibility checks."""
        return {
            "pc": self.pc,
            "cycle": self.cycle,
            "halted": self.halted,
            "memory": list(self.memory),
            "branches": sorted(
                [list(regs) + [w] for regs, w in self.registers.branches.items()]
            ),
            "pruned_mass": self.registers.pruned_mass,
            "max_branch_count": self.registers.max_branch_count,
            "data_log": [e.to_dict() for e in self.data_log],
            "info_bits": self.info_bits,
        }


def member_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-keyed random source for ensemble member `index`.

    Philox is counter-based: the 128-bit key is (master_seed, index), so
    member streams are independent and derivable in any order.
    """
    key = ((master_seed & 0xFFFFFFFFFFFFFFFF) << 64) | (index & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))
