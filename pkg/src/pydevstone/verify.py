"""Sweep DEVStone configurations and compare them with the closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

from .devstone import (
    DevstoneConfig,
    DevstoneType,
    build_devstone,
    expected_counts,
    observed_counts,
)
from .kernel import CoupledModel, build_engine

FIELDS = ("n_atomic", "n_eic", "n_eoc", "n_ic", "n_events")


@dataclass
class ConfigCheck:
    config: DevstoneConfig
    expected: Dict[str, int]
    observed: Dict[str, int]
    mismatches: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def check_config(
    config: DevstoneConfig,
    builder: Callable[[DevstoneConfig], CoupledModel] = build_devstone,
    structure_only: bool = False,
) -> ConfigCheck:
    expected = vars(expected_counts(config)).copy()
    model = builder(config)
    observed = observed_counts(model)
    if not structure_only:
        engine = build_engine(model)
        engine.inject(model.in_ports, 0)
        observed["n_events"] = engine.run_to_completion().n_lambda
    check = ConfigCheck(config, expected, observed)
    for name in FIELDS:
        if name in observed and observed[name] != expected[name]:
            check.mismatches.append(name)
    return check


def grid(
    max_depth: int = 10,
    max_width: int = 10,
    hmod_max_depth: int = 6,
    hmod_max_width: int = 8,
) -> List[DevstoneConfig]:
    configs = [
        DevstoneConfig(kind, d, w)
        for kind in (DevstoneType.LI, DevstoneType.HI, DevstoneType.HO)
        for d in range(1, max_depth + 1)
        for w in range(1, max_width + 1)
    ]
    # w = 1 leaves HMOD levels without atomics; kept out of the sweep
    configs += [
        DevstoneConfig(DevstoneType.HMOD, d, w)
        for d in range(1, hmod_max_depth + 1)
        for w in range(2, hmod_max_width + 1)
    ]
    return configs


def verify_grid(
    configs: Sequence[DevstoneConfig],
    builder: Callable[[DevstoneConfig], CoupledModel] = build_devstone,
    structure_only: bool = False,
) -> List[ConfigCheck]:
    return [check_config(c, builder, structure_only) for c in configs]


def render_matrix(checks: Sequence[ConfigCheck], field_name: str = "n_events") -> str:
    """One depth x width table per type; ``*`` marks a configuration that failed."""
    lines = []
    for kind in DevstoneType:
        rows = [c for c in checks if c.config.type is kind]
        if not rows:
            continue
        depths = sorted({c.config.depth for c in rows})
        widths = sorted({c.config.width for c in rows})
        cells = {
            (c.config.depth, c.config.width): f"{c.observed.get(field_name, '-')}"
            + ("*" if c.mismatches else "")
            for c in rows
        }
        colw = max(len(s) for s in cells.values()) + 2
        lines.append(f"{kind.value}: observed {field_name} (depth x width, * = mismatch)")
        lines.append("d\\w".rjust(4) + "".join(str(w).rjust(colw) for w in widths))
        for d in depths:
            lines.append(
                str(d).rjust(4) + "".join(cells.get((d, w), "").rjust(colw) for w in widths)
            )
        lines.append("")
    return "\n".join(lines)


def describe_mismatches(checks: Sequence[ConfigCheck]) -> List[str]:
    out = []
    for c in checks:
        for name in c.mismatches:
            out.append(
                f"MISMATCH {c.config.label} {name}: expected {c.expected[name]}, "
                f"observed {c.observed[name]}"
            )
    return out
