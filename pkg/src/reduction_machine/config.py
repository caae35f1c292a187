"""Run configuration: one flat JSON document drives every command.

Keys carry their units in the name (l_r_m, k1_per_s, t_cycle_s, ...) since
unit slips are the dominant failure mode in a physics-parameterized tool.
The damping constant key must match the exponent: k1_per_s for d=1,
k2_per_m for d=2.
"""

from __future__ import annotations

import json
import os
from typing import Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError
from .machine import Machine
from .physics import PhysicsParams

SEED_ENV_VAR = "REDUCTION_MACHINE_SEED"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["fine", "coarse"] = "fine"
    capacity_bits: int = Field(default=16, ge=0, le=24)
    seed: int = Field(default=0, ge=0)
    n_members: int = Field(default=1000, ge=1)
    max_cycles: int = Field(default=10_000, ge=1)

    n_registers: int = Field(default=8, ge=1, le=8)
    register_width_bits: int = Field(default=8, ge=1, le=8)
    n_pins: int = Field(default=8, ge=1, le=8)
    memory_words: int = Field(default=256, ge=1, le=256)

    eta: float = Field(default=3.0, gt=0)
    t_cycle_s: float = Field(default=1.0, gt=0)
    sigma_q_m: float = Field(default=25e-6, gt=0)
    velocity_jitter_rel: float = Field(default=0.0, ge=0)

    e_star_c: float = Field(default=1.0, gt=0)
    m_star_kg: float = Field(default=1.0, gt=0)
    u0_v: float = Field(default=1.0, ge=0)
    l_r_m: float = Field(default=1.0, gt=0)
    damping_exponent: int = 1
    k1_per_s: float | None = Field(default=1.0, gt=0)
    k2_per_m: float | None = Field(default=None, gt=0)
    tube_diameter_m: float = Field(default=100e-6, gt=0)
    resonant_wavelength_m: float = Field(default=400e-6, gt=0)
    bec_radius_m: float = Field(default=25e-6, gt=0)
    temperature_k: float = Field(default=300.0, gt=0)

    trace_path: str | None = None
    report_path: str | None = None

    @model_validator(mode="after")
    def _check_damping(self) -> "RunConfig":
        if self.damping_exponent not in (1, 2):
            raise ValueError(f"damping_exponent must be 1 or 2, got {self.damping_exponent}")
        if self.damping_exponent == 1 and self.k1_per_s is None:
            raise ValueError("damping_exponent 1 requires k1_per_s")
        if self.damping_exponent == 2 and self.k2_per_m is None:
            raise ValueError("damping_exponent 2 requires k2_per_m")
        return self

    @property
    def k_d(self) -> float:
        return self.k1_per_s if self.damping_exponent == 1 else self.k2_per_m

    def physics_params(self) -> PhysicsParams:
        """Strictly validated physics parameter set (geometry included)."""
        return PhysicsParams(
            e_star=self.e_star_c,
            m_star=self.m_star_kg,
            u0=self.u0_v,
            l_r=self.l_r_m,
            d=self.damping_exponent,
            k_d=self.k_d,
            tube_diameter=self.tube_diameter_m,
            resonant_wavelength=self.resonant_wavelength_m,
            bec_radius=self.bec_radius_m,
            temperature=self.temperature_k,
        )


def config_from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path: str) -> RunConfig:
    """Load a config file; malformed content is a configuration error."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path!r} must hold a JSON object")
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def build_machine(cfg: RunConfig, image: list[int], velocity_scale: float = 1.0) -> Machine:
    return Machine(
        image,
        mode=cfg.mode,
        capacity_bits=cfg.capacity_bits,
        physics=cfg.physics_params(),
        eta=cfg.eta,
        t_cycle=cfg.t_cycle_s,
        sigma_q=cfg.sigma_q_m,
        n_registers=cfg.n_registers,
        register_width=cfg.register_width_bits,
        n_pins=cfg.n_pins,
        memory_words=cfg.memory_words,
        velocity_scale=velocity_scale,
    )


def resolve_seed(
    cfg: RunConfig,
    flag_seed: int | None = None,
    env: Mapping[str, str] | None = None,
) -> int:
    """Seed precedence: command flag, then SEED_ENV_VAR, then the config."""
    if flag_seed is not None:
        return flag_seed
    env = os.environ if env is None else env
    raw = env.get(SEED_ENV_VAR)
    if raw is not None:
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigurationError(
                f"{SEED_ENV_VAR} must be an integer, got {raw!r}"
            ) from exc
    return cfg.seed
