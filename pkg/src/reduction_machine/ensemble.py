"""Ensembles of independent machine copies and their macrostate statistics.

Each member is a full machine run with a random source derived from
(master_seed, member_index) through a counter-keyed construction, so the
ensemble is reproducible bit-exactly and members can be evaluated in any
order.  The macrostate of a member is the tuple of event-read bits it
stored in data memory; the report aggregates their statistics together
with the information ledger.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .config import RunConfig, build_machine
from .errors import EnsembleMemberError, ReductionMachineError
from .machine import member_rng
from .quantum import shannon_entropy


@dataclass(frozen=True)
class MemberOutcome:
    index: int
    macrostate: str
    information_bits: float
    predicted_bits: float
    pruned_mass: float
    max_branch_count: int
    timed_out: bool
    pin_fires: tuple[tuple[int, int, float], ...]  # (pin, fires, surprisal total)


@dataclass
class EnsembleReport:
    n_members: int
    outcome_histogram: dict[str, int]
    empirical_entropy_bits: float
    predicted_entropy_bits: float
    information_acquired_bits: float
    pruned_mass_max: float
    max_branch_count: int
    always_pure: bool
    timed_out_members: int
    pin_stats: dict[int, dict]
    config: dict
    master_seed: int
    members: list[MemberOutcome] | None = None

    def to_json_dict(self) -> dict:
        return {
            "n_members": self.n_members,
            "outcome_histogram": dict(sorted(self.outcome_histogram.items())),
            "empirical_entropy_bits": self.empirical_entropy_bits,
            "predicted_entropy_bits": self.predicted_entropy_bits,
            "information_acquired_bits": self.information_acquired_bits,
            "pruned_mass_max": self.pruned_mass_max,
            "max_branch_count": self.max_branch_count,
            "always_pure": self.always_pure,
            "timed_out_members": self.timed_out_members,
            "pin_stats": {
                str(pin): stats for pin, stats in sorted(self.pin_stats.items())
            },
            "config": self.config,
            "master_seed": self.master_seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def run_member(
    cfg: RunConfig,
    image: list[int],
    index: int,
    master_seed: int,
    max_cycles: int,
) -> MemberOutcome:
    """Run one ensemble member to completion."""
    rng = member_rng(master_seed, index)
    velocity_scale = 1.0
    if cfg.velocity_jitter_rel > 0.0:
        # classically fluctuating center-of-mass velocity, one draw per member
        velocity_scale = max(1e-9, 1.0 + cfg.velocity_jitter_rel * rng.standard_normal())
    machine = build_machine(cfg, image, velocity_scale=velocity_scale)
    try:
        result = machine.run(rng, max_cycles=max_cycles)
    except ReductionMachineError as exc:
        raise EnsembleMemberError(index, exc) from exc
    fires = tuple(
        (pin_id, len(pin.log), sum(r.surprisal_bits for r in pin.log))
        for pin_id, pin in sorted(machine.pins.items())
    )
    return MemberOutcome(
        index=index,
        macrostate=machine.macrostate_key(),
        information_bits=machine.info_bits,
        predicted_bits=machine.predicted_bits,
        pruned_mass=machine.registers.pruned_mass,
        max_branch_count=machine.registers.max_branch_count,
        timed_out=result.timed_out,
        pin_fires=fires,
    )


def aggregate(
    outcomes: list[MemberOutcome],
    cfg: RunConfig,
    master_seed: int,
    keep_members: bool = False,
) -> EnsembleReport:
    """Order-independent aggregation of member outcomes into a report.

    Members are re-ordered by index before any floating-point reduction;
    float addition is not associative, so summing in arrival order would
    leak the processing schedule into the report bytes.
    """
    n = len(outcomes)
    if n == 0:
        raise ReductionMachineError("cannot aggregate an empty ensemble")
    outcomes = sorted(outcomes, key=lambda o: o.index)
    histogram: Counter[str] = Counter(o.macrostate for o in outcomes)
    weights = [c / n for c in histogram.values()]
    empirical = shannon_entropy(weights)
    info_mean = sum(o.information_bits for o in outcomes) / n
    predicted_mean = sum(o.predicted_bits for o in outcomes) / n
    pin_acc: dict[int, list] = {}
    for o in outcomes:
        for pin, fires, surprisal in o.pin_fires:
            slot = pin_acc.setdefault(pin, [0, 0.0])
            slot[0] += fires
            slot[1] += surprisal
    pin_stats = {
        pin: {
            "fires": fires,
            "surprisal_bits_total": total,
            "mean_surprisal_bits": total / fires if fires else 0.0,
        }
        for pin, (fires, total) in pin_acc.items()
    }
    return EnsembleReport(
        n_members=n,
        outcome_histogram=dict(sorted(histogram.items())),
        empirical_entropy_bits=empirical,
        predicted_entropy_bits=predicted_mean,
        information_acquired_bits=info_mean,
        pruned_mass_max=max((o.pruned_mass for o in outcomes), default=0.0),
        max_branch_count=max((o.max_branch_count for o in outcomes), default=1),
        always_pure=all(o.max_branch_count == 1 for o in outcomes),
        timed_out_members=sum(1 for o in outcomes if o.timed_out),
        pin_stats=pin_stats,
        config=cfg.model_dump(mode="json"),
        master_seed=master_seed,
        members=outcomes if keep_members else None,
    )


def run_ensemble(
    cfg: RunConfig,
    image: list[int],
    n: int | None = None,
    master_seed: int | None = None,
    max_cycles: int | None = None,
    keep_members: bool = False,
) -> EnsembleReport:
    """Run n independent members and aggregate their statistics."""
    n = cfg.n_members if n is None else n
    if n < 1:
        raise ReductionMachineError(f"ensemble needs at least one member, got {n}")
    master_seed = cfg.seed if master_seed is None else master_seed
    max_cycles = cfg.max_cycles if max_cycles is None else max_cycles
    outcomes = [run_member(cfg, image, i, master_seed, max_cycles) for i in range(n)]
    return aggregate(outcomes, cfg, master_seed, keep_members=keep_members)


def compare_models(
    cfg: RunConfig,
    image: list[int],
    n: int | None = None,
    master_seed: int | None = None,
    max_cycles: int | None = None,
) -> dict:
    """Run the same program under both register models and compare.

    Reports the three defining contrasts as measured quantities: whether
    the microstate stayed pure, unique outcome versus macrostate
    statistics, and the capacity in effect with any pruned mass.
    """
    reports = {}
    for mode in ("fine", "coarse"):
        mode_cfg = cfg.model_copy(update={"mode": mode})
        reports[mode] = run_ensemble(
            mode_cfg, image, n=n, master_seed=master_seed, max_cycles=max_cycles
        )
    fine, coarse = reports["fine"], reports["coarse"]
    return {
        "modes": {m: r.to_json_dict() for m, r in reports.items()},
        "comparisons": {
            "microstate_purity": {
                "fine_always_pure": fine.always_pure,
                "coarse_always_pure": coarse.always_pure,
            },
            "outcomes": {
                "fine_n_macrostates": len(fine.outcome_histogram),
                "coarse_n_macrostates": len(coarse.outcome_histogram),
                "fine_information_bits": fine.information_acquired_bits,
                "coarse_information_bits": coarse.information_acquired_bits,
            },
            "capacity": {
                "capacity_bits": cfg.capacity_bits,
                "branch_limit": 1 << cfg.capacity_bits,
                "fine_pruned_mass_max": fine.pruned_mass_max,
                "coarse_pruned_mass_max": coarse.pruned_mass_max,
            },
        },
    }


def members_csv(report: EnsembleReport) -> str:
    """Per-member outcome table (requires keep_members=True)."""
    if report.members is None:
        raise ReductionMachineError("report was aggregated without member rows")
    rows = ["member,macrostate,information_bits,pruned_mass,timed_out"]
    for m in report.members:
        rows.append(
            f"{m.index},{m.macrostate},{m.information_bits!r},{m.pruned_mass!r},{int(m.timed_out)}"
        )
    return "\n".join(rows) + "\n"
