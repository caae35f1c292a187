"""Service operations behind the API endpoints and the CLI subcommands.

Handlers are pure request -> response functions; domain failures raise
ReductionMachineError subclasses which the API maps to HTTP 422 and the
CLI maps to exit code 1.
"""

from __future__ import annotations

from .. import assembler
from ..config import RunConfig, build_machine
from ..ensemble import compare_models, members_csv, run_ensemble
from ..errors import ConfigurationError, ReductionMachineError
from ..machine import member_rng
from ..physics import PhysicsParams, kinematics_json
from . import models

#: Config fields a physics sweep may vary.
SWEEPABLE_PARAMS = frozenset(
    {
        "u0_v",
        "l_r_m",
        "e_star_c",
        "m_star_kg",
        "k1_per_s",
        "k2_per_m",
        "eta",
        "t_cycle_s",
        "sigma_q_m",
        "tube_diameter_m",
    }
)


def handle_assemble(req: models.AssembleRequest) -> models.AssembleResponse:
    program = assembler.parse(req.source)
    words = assembler.assemble(program)
    return models.AssembleResponse(words=words, listing=assembler.make_listing(program))


def handle_disassemble(req: models.DisassembleRequest) -> models.DisassembleResponse:
    for w in req.words:
        if not 0 <= w <= 0xFFFF:
            raise ReductionMachineError(f"image word out of range: {w}")
    return models.DisassembleResponse(source=assembler.disassemble(req.words))


def _resolve_image(program: list[int] | None, source: str | None) -> list[int]:
    if program is not None and source is not None:
        raise ReductionMachineError("give either a program image or source text, not both")
    if program is not None:
        return program
    if source is not None:
        return assembler.assemble_source(source)
    raise ReductionMachineError("no program given (need program words or source text)")


def handle_run(req: models.RunRequest) -> models.RunResponse:
    image = _resolve_image(req.program, req.source)
    cfg = req.config
    seed = cfg.seed if req.seed is None else req.seed
    max_cycles = cfg.max_cycles if req.max_cycles is None else req.max_cycles
    machine = build_machine(cfg, image)
    result = machine.run(member_rng(seed, 0), max_cycles=max_cycles,
                         collect_trace=req.include_trace)
    rf = machine.registers
    return models.RunResponse(
        halted=machine.halted,
        timed_out=result.timed_out,
        cycles=machine.cycle,
        mode=machine.mode,
        seed=seed,
        branch_count=len(rf.branches),
        registers=[rf.definite_value(i) for i in range(rf.n_registers)],
        register_expectations=rf.expectations(),
        memory_diff=machine.memory_diff(),
        data_log=[e.to_dict() for e in machine.data_log],
        information_bits=machine.info_bits,
        predicted_entropy_bits=machine.predicted_bits,
        pruned_mass=rf.pruned_mass,
        trace=result.trace,
    )


def handle_ensemble(req: models.EnsembleRequest) -> models.EnsembleResponse:
    image = _resolve_image(req.program, req.source)
    report = run_ensemble(
        req.config,
        image,
        n=req.n,
        master_seed=req.seed,
        max_cycles=req.max_cycles,
        keep_members=req.include_members,
    )
    csv = members_csv(report) if req.include_members else None
    return models.EnsembleResponse(report=report.to_json_dict(), members_csv=csv)


def handle_compare(req: models.EnsembleRequest) -> models.CompareResponse:
    image = _resolve_image(req.program, req.source)
    comparison = compare_models(
        req.config, image, n=req.n, master_seed=req.seed, max_cycles=req.max_cycles
    )
    return models.CompareResponse(comparison=comparison)


def parse_sweep(text: str) -> tuple[str, float, float, int]:
    """Parse a sweep spec of the form ``param=lo:hi:steps``."""
    try:
        param, rest = text.split("=", 1)
        lo_s, hi_s, steps_s = rest.split(":")
        lo, hi, steps = float(lo_s), float(hi_s), int(steps_s)
    except ValueError as exc:
        raise ConfigurationError(
            f"sweep must look like param=lo:hi:steps, got {text!r}"
        ) from exc
    param = param.strip()
    if param not in SWEEPABLE_PARAMS:
        raise ConfigurationError(
            f"cannot sweep {param!r}; choose one of {sorted(SWEEPABLE_PARAMS)}"
        )
    if steps < 1:
        raise ConfigurationError(f"sweep needs at least 1 step, got {steps}")
    return param, lo, hi, steps


def _sweep_values(lo: float, hi: float, steps: int) -> list[float]:
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


def _physics_row(
    cfg: RunConfig, param: str, value: float | None, warnings: list[str]
) -> models.PhysicsRow:
    if cfg.tube_diameter_m >= cfg.resonant_wavelength_m:
        # geometry violates the resonance-domain assumption; the four
        # kinematics columns do not involve it, so warn and compute anyway
        warnings.append(
            f"tube_diameter {cfg.tube_diameter_m} m violates the constraint "
            f"tube_diameter < resonant wavelength {cfg.resonant_wavelength_m} m "
            "(kinematics computed regardless; fix the geometry before machine runs)"
        )
        cfg = cfg.model_copy(update={"tube_diameter_m": cfg.resonant_wavelength_m / 2.0})
    params: PhysicsParams = cfg.physics_params()
    record = kinematics_json(params, cfg.sigma_q_m, cfg.eta, cfg.t_cycle_s)
    return models.PhysicsRow(
        param=param,
        value=value,
        a_c_m_per_s2=record["a_C"],
        tau_d_s=record["tau_d"],
        lambda_m_per_s=record["lambda"],
        latency_cycles=record["latency_cycles"],
    )


def handle_physics(req: models.PhysicsRequest) -> models.PhysicsResponse:
    warnings: list[str] = []
    if req.sweep is None:
        rows = [_physics_row(req.config, "", None, warnings)]
        return models.PhysicsResponse(rows=rows, warnings=warnings)
    param, lo, hi, steps = parse_sweep(req.sweep)
    if param == "k1_per_s" and req.config.damping_exponent != 1:
        raise ConfigurationError("sweeping k1_per_s requires damping_exponent 1")
    if param == "k2_per_m" and req.config.damping_exponent != 2:
        raise ConfigurationError("sweeping k2_per_m requires damping_exponent 2")
    rows = []
    for value in _sweep_values(lo, hi, steps):
        cfg = req.config.model_copy(update={param: value})
        rows.append(_physics_row(cfg, param, value, warnings))
    return models.PhysicsResponse(rows=rows, warnings=warnings)


def physics_csv(resp: models.PhysicsResponse) -> str:
    rows = ["param,value,a_c_m_per_s2,tau_d_s,lambda_m_per_s,latency_cycles"]
    for r in resp.rows:
        value = "" if r.value is None else repr(r.value)
        latency = "" if r.latency_cycles is None else str(r.latency_cycles)
        rows.append(
            f"{r.param},{value},{r.a_c_m_per_s2!r},{r.tau_d_s!r},{r.lambda_m_per_s!r},{latency}"
        )
    return "\n".join(rows) + "\n"
