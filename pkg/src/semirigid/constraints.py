"""Stress, drift and column-continuity constraints as demand/allowable ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .model import ConfigError, Frame, Role, SizedFrame
from .sections import Section
from .solver import AnalysisResult, member_moment_extremes


MOMENT_BASES = ("end", "span")


@dataclass(frozen=True)
class Limits:
    drift_denominator: float = 300.0
    fy: float = 2.4e8  # Pa
    moment_basis: str = "end"  # "end": larger end moment; "span": also the in-span peak

    def __post_init__(self):
        if self.drift_denominator <= 0 or self.fy <= 0:
            raise ConfigError("limits must be positive")
        if self.moment_basis not in MOMENT_BASES:
            raise ConfigError(f"moment_basis must be one of {', '.join(MOMENT_BASES)}")

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "Limits":
        cfg = cfg or {}
        try:
            return cls(float(cfg.get("drift_denominator", 300.0)), float(cfg.get("fy_pa", 2.4e8)),
                       str(cfg.get("moment_basis", "end")))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"limits: {exc}") from None


@dataclass
class ConstraintReport:
    stress_ratios: dict[int, float] = field(default_factory=dict)
    drift_ratio: float = 0.0
    aux_ratios: list[float] = field(default_factory=list)

    @property
    def worst(self) -> float:
        return max([self.drift_ratio, *self.stress_ratios.values(), *self.aux_ratios])

    @property
    def feasible(self) -> bool:
        return self.worst <= 1.0


def allowable_compression(fy: float, E: float, slenderness: float) -> float:
    """ASD column-curve allowable axial stress for KL/r = ``slenderness``."""
    cc = math.sqrt(2.0 * math.pi**2 * E / fy)
    if slenderness < cc:
        r = slenderness / cc
        fs = 5.0 / 3.0 + 3.0 * r / 8.0 - r**3 / 8.0
        return (1.0 - r * r / 2.0) * fy / fs
    return 12.0 * math.pi**2 * E / (23.0 * slenderness**2)


def stress_ratio(forces: np.ndarray, section: Section, E: float, L: float,
                 fy: float = 2.4e8, w: float = 0.0) -> float:
    """Interaction f_a/F_a + f_b/F_b for one member.

    ``forces`` is the local end-force vector. The bending term uses the larger
    end moment; pass the uniform span load ``w`` to include the in-span peak as
    well. F_b = 0.66 Fy, tension uses F_t = 0.6 Fy, compression the column
    curve with K = 1 about the minor axis.
    """
    axial = float(forces[3])  # > 0 in tension
    moment = member_moment_extremes(forces, w, L)
    fa = abs(axial) / section.area
    if axial >= 0:
        Fa = 0.6 * fy
    else:
        Fa = allowable_compression(fy, E, L / section.radius_of_gyration_minor)
    fb = moment / section.section_modulus_major
    return fa / Fa + fb / (0.66 * fy)


def drift_ratio(result: AnalysisResult, frame: Frame, limit_fraction: float = 300.0) -> float:
    """Roof lateral displacement over the allowable H / ``limit_fraction``."""
    roof = max(abs(result.displacements[n][0]) for n in frame.roof_nodes())
    return roof / (frame.height / limit_fraction)


def constructability_ratios(sized: SizedFrame) -> list[float]:
    """area(upper column group) / area(lower column group) for each stacked pair of distinct groups."""
    frame = sized.frame
    columns = [m for m in frame.members if m.role is Role.COLUMN]

    def ends(m):
        return sorted((m.node_a, m.node_b), key=lambda k: frame.nodes[k].y)

    ending_at = {ends(m)[1]: m for m in columns}
    pairs = []
    for upper in columns:
        lower = ending_at.get(ends(upper)[0])
        if lower is not None and lower.group != upper.group and (lower.group, upper.group) not in pairs:
            pairs.append((lower.group, upper.group))
    return [sized.assignment[u].area / sized.assignment[l].area for l, u in pairs]


def evaluate_constraints(sized: SizedFrame, results: Sequence[AnalysisResult], E: float,
                         limits: Limits = Limits()) -> ConstraintReport:
    """Worst ratios over all load combinations."""
    frame = sized.frame
    span = limits.moment_basis == "span"
    stress = {}
    for m in frame.members:
        sec = sized.assignment[m.group]
        L = frame.lengths[m.id]
        stress[m.id] = max(
            stress_ratio(r.member_end_forces[m.id], sec, E, L, limits.fy,
                         r.load_case.member_uniform_loads.get(m.id, 0.0) if span else 0.0)
            for r in results)
    drift = max(drift_ratio(r, frame, limits.drift_denominator) for r in results)
    return ConstraintReport(stress, drift, constructability_ratios(sized))
