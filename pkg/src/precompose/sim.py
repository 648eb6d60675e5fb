"""Workload simulator comparing the precomposed portal with an
individual-services portal.

The model: registered users issue composite requests at a monthly
per-user rate; adoption growth inflates the composite rate month over
month while the individual portal stays at the base rate.  Serving a
composite request calls every member service's functions, so composite
function calls are exactly ``requests x member services x functions per
service``.  On the individual portal a user must discover each member
service separately and only succeeds with the configured probability, so
individual-portal counts are a Bernoulli thinning of the base workload.

Randomness comes from a counter-based generator (documented in
``docs/sim.md``): every draw mixes (seed, month, task, member) through
splitmix64, so reports are byte-identical across runs and implementation
languages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InvalidRequestError

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix64(*values: int) -> int:
    acc = 0
    for value in values:
        acc = splitmix64((acc ^ (value & _MASK)) & _MASK)
    return acc


def unit_uniform(*values: int) -> float:
    """Uniform in [0, 1) from a counter tuple; 53-bit mantissa."""
    return (mix64(*values) >> 11) * 2.0**-53


@dataclass(frozen=True)
class CompositeShape:
    member_services: int = 5
    functions_per_service: int = 1

    def __post_init__(self) -> None:
        if self.member_services <= 0 or self.functions_per_service <= 0:
            raise InvalidRequestError("composite shape counts must be positive")


@dataclass(frozen=True)
class SimConfig:
    users: int = 250
    months: int = 12
    composite: CompositeShape = field(default_factory=CompositeShape)
    monthly_request_rate: float = 2.0
    discovery_success_probability: float = 0.7
    adoption_growth_per_month: float = 0.05
    seed: int = 42

    def __post_init__(self) -> None:
        if self.users <= 0 or self.months <= 0:
            raise InvalidRequestError("users and months must be positive")
        if self.monthly_request_rate < 0:
            raise InvalidRequestError("monthly request rate must be non-negative")
        if not 0.0 <= self.discovery_success_probability <= 1.0:
            raise InvalidRequestError("discovery success probability must be in [0, 1]")
        if self.adoption_growth_per_month < 0:
            raise InvalidRequestError("adoption growth must be non-negative")


@dataclass(frozen=True)
class MonthlyCounts:
    month: int  # 1-based
    composite_downloads: int
    individual_downloads: int
    composite_calls: int
    individual_calls: int


@dataclass(frozen=True)
class SimReport:
    config: SimConfig
    months: tuple[MonthlyCounts, ...]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def run_sim(cfg: SimConfig) -> SimReport:
    """Deterministic monthly download and function-call counts."""
    members = cfg.composite.member_services
    functions = cfg.composite.functions_per_service
    base_tasks = _round_half_up(cfg.users * cfg.monthly_request_rate)
    rows: list[MonthlyCounts] = []
    for month in range(cfg.months):
        adoption = (1.0 + cfg.adoption_growth_per_month) ** month
        composite_requests = _round_half_up(cfg.users * cfg.monthly_request_rate * adoption)
        composite_downloads = composite_requests * members
        composite_calls = composite_requests * members * functions

        reached = 0
        for task in range(base_tasks):
            for member in range(members):
                draw = unit_uniform(cfg.seed, month, task, member)
                if draw < cfg.discovery_success_probability:
                    reached += 1
        individual_downloads = reached
        individual_calls = reached * functions

        rows.append(
            MonthlyCounts(
                month=month + 1,
                composite_downloads=composite_downloads,
                individual_downloads=individual_downloads,
                composite_calls=composite_calls,
                individual_calls=individual_calls,
            )
        )
    return SimReport(config=cfg, months=tuple(rows))


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

CSV_HEADER = "month,composite_downloads,individual_downloads,composite_calls,individual_calls"


def report_to_csv(report: SimReport) -> str:
    lines = [CSV_HEADER]
    for row in report.months:
        lines.append(
            f"{row.month},{row.composite_downloads},{row.individual_downloads},"
            f"{row.composite_calls},{row.individual_calls}"
        )
    return "\n".join(lines) + "\n"


def config_to_dict(cfg: SimConfig) -> dict:
    return {
        "users": cfg.users,
        "months": cfg.months,
        "composite": {
            "member_services": cfg.composite.member_services,
            "functions_per_service": cfg.composite.functions_per_service,
        },
        "monthly_request_rate": cfg.monthly_request_rate,
        "discovery_success_probability": cfg.discovery_success_probability,
        "adoption_growth_per_month": cfg.adoption_growth_per_month,
        "seed": cfg.seed,
    }


def config_from_dict(doc: dict) -> SimConfig:
    try:
        composite = doc.get("composite", {})
        return SimConfig(
            users=int(doc.get("users", 250)),
            months=int(doc.get("months", 12)),
            composite=CompositeShape(
                member_services=int(composite.get("member_services", 5)),
                functions_per_service=int(composite.get("functions_per_service", 1)),
            ),
            monthly_request_rate=float(doc.get("monthly_request_rate", 2.0)),
            discovery_success_probability=float(
                doc.get("discovery_success_probability", 0.7)
            ),
            adoption_growth_per_month=float(doc.get("adoption_growth_per_month", 0.05)),
            seed=int(doc.get("seed", 42)),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidRequestError(f"malformed simulator config: {exc}") from exc


def report_to_dict(report: SimReport) -> dict:
    return {
        "config": config_to_dict(report.config),
        "months": [
            {
                "month": row.month,
                "composite_downloads": row.composite_downloads,
                "individual_downloads": row.individual_downloads,
                "composite_calls": row.composite_calls,
                "individual_calls": row.individual_calls,
            }
            for row in report.months
        ],
    }


def report_from_dict(doc: dict) -> SimReport:
    return SimReport(
        config=config_from_dict(doc["config"]),
        months=tuple(
            MonthlyCounts(
                month=int(row["month"]),
                composite_downloads=int(row["composite_downloads"]),
                individual_downloads=int(row["individual_downloads"]),
                composite_calls=int(row["composite_calls"]),
                individual_calls=int(row["individual_calls"]),
            )
            for row in doc["months"]
        ),
    )


def emit_report(report: SimReport, path: str, format: str = "csv") -> None:
    """Write the report as CSV or JSON; bytes are deterministic per report."""
    if format == "csv":
        data = report_to_csv(report)
    elif format == "json":
        data = json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    else:
        raise InvalidRequestError(f"unknown report format {format!r}")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(data)
