"""Gravity line loads, UBC-97 static base shear, story force distribution and combinations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .model import ConfigError, Frame, Role, SizedFrame
from .solver import LoadCase


@dataclass(frozen=True)
class GravitySpec:
    dead: float = 5886.0  # N/m^2
    live: float = 1962.0
    roof_live: float = 1471.5
    tributary_width: float = 5.0  # m

    def __post_init__(self):
        if min(self.dead, self.live, self.roof_live, self.tributary_width) < 0:
            raise ConfigError("gravity loads and tributary width must be >= 0")


@dataclass(frozen=True)
class SeismicSpec:
    A: float = 0.3
    B: float = 2.5
    I: float = 1.0
    R: float = 8.0

    def __post_init__(self):
        if self.A < 0 or self.B <= 0 or self.I <= 0 or self.R <= 0:
            raise ConfigError("seismic factors must be positive")
        if self.coefficient > 1.0:
            raise ConfigError(f"seismic coefficient C = {self.coefficient} exceeds 1")

    @property
    def coefficient(self) -> float:
        return self.A * self.B * self.I / self.R


@dataclass(frozen=True)
class LoadSettings:
    gravity: GravitySpec = GravitySpec()
    seismic: SeismicSpec = SeismicSpec()
    include_live_in_seismic: bool = False
    gravity_factor: float = 1.0
    seismic_factor: float = 1.0

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None, tributary_width: float = 5.0) -> "LoadSettings":
        cfg = dict(cfg or {})
        try:
            gravity = GravitySpec(
                dead=float(cfg.get("dead_npm2", 5886.0)),
                live=float(cfg.get("live_npm2", 1962.0)),
                roof_live=float(cfg.get("roof_live_npm2", 1471.5)),
                tributary_width=float(cfg.get("tributary_width_m", tributary_width)),
            )
            seis = cfg.get("seismic", {}) or {}
            seismic = SeismicSpec(*(float(seis.get(k, d)) for k, d in (("A", 0.3), ("B", 2.5), ("I", 1.0), ("R", 8.0))))
            factors = cfg.get("combination_factors", [1.0, 1.0])
            return cls(gravity, seismic, bool(cfg.get("include_live_in_seismic", False)),
                       float(factors[0]), float(factors[1]))
        except (TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"loads: {exc}") from None


def _is_roof_beam(frame: Frame, member) -> bool:
    top = max(n.y for n in frame.nodes)
    return all(abs(frame.nodes[k].y - top) < 1e-9 for k in (member.node_a, member.node_b))


def gravity_line_loads(spec: GravitySpec, frame: Frame) -> LoadCase:
    """Uniform dead + live line loads on every beam; roof beams take the roof live load."""
    loads = {}
    for m in frame.members:
        if m.role is not Role.BEAM:
            continue
        live = spec.roof_live if _is_roof_beam(frame, m) else spec.live
        w = (spec.dead + live) * spec.tributary_width
        c, _ = frame.directions[m.id]
        loads[m.id] = -w * c  # gravity acts along global -y
    return LoadCase({}, loads, "gravity")


def ubc_base_shear(effective_weight: float, spec: SeismicSpec) -> float:
    """V = C * W with C = A*B*I/R."""
    return spec.coefficient * effective_weight


def distribute_story_forces(V: float, story_weights: Sequence[float], story_heights: Sequence[float]) -> list[float]:
    """Linear vertical distribution F_x = V w_x h_x / sum(w h), no concentrated top force."""
    if len(story_weights) != len(story_heights):
        raise ValueError("story_weights and story_heights differ in length")
    if not story_weights:
        return []
    wh = [w * h for w, h in zip(story_weights, story_heights)]
    total = sum(wh)
    if not total > 0:
        raise ValueError("sum of w*h must be positive")
    forces = [V * x / total for x in wh[:-1]]
    forces.append(V - sum(forces))
    return forces


def story_weights(sized: SizedFrame, spec: GravitySpec, include_live: bool = False) -> tuple[list[float], list[float]]:
    """Seismic weight and height above base of every level above the base.

    Floor dead load over the beams at a level, plus beam self weight and half of
    each column framing into that level.
    """
    frame = sized.frame
    levels = frame.levels()
    base = levels[0]
    index = {y: k for k, y in enumerate(levels)}
    weights = [0.0] * len(levels)

    def level_of(node_id):
        return index[round(frame.nodes[node_id].y, 9)]

    for m in frame.members:
        sec = sized.assignment[m.group]
        self_w = sec.unit_weight_per_length * frame.lengths[m.id]
        if m.role is Role.BEAM:
            lv = level_of(m.node_a)
            area_load = spec.dead
            if include_live:
                area_load += spec.roof_live if _is_roof_beam(frame, m) else spec.live
            weights[lv] += self_w + area_load * spec.tributary_width * frame.lengths[m.id]
        else:
            weights[level_of(m.node_a)] += self_w / 2
            weights[level_of(m.node_b)] += self_w / 2
    return weights[1:], [y - base for y in levels[1:]]


def seismic_load_case(sized: SizedFrame, gravity: GravitySpec, seismic: SeismicSpec,
                      include_live: bool = False, direction: float = 1.0) -> LoadCase:
    """Equivalent lateral forces applied at the leftmost node of each level."""
    frame = sized.frame
    weights, heights = story_weights(sized, gravity, include_live)
    V = ubc_base_shear(sum(weights), seismic)
    forces = distribute_story_forces(V, weights, heights) if V > 0 else [0.0] * len(weights)
    base = frame.levels()[0]
    nodal = {}
    for F, h in zip(forces, heights):
        ids = frame.nodes_at(base + h)
        left = min(ids, key=lambda k: (frame.nodes[k].x, k))
        nodal[left] = (direction * F, 0.0, 0.0)
    return LoadCase(nodal, {}, "seismic+x" if direction > 0 else "seismic-x")


def combinations(gravity: LoadCase, seismic: LoadCase, factors: tuple[float, float] = (1.0, 1.0)) -> list[LoadCase]:
    """[G, G + E(+x), G + E(-x)] with the given (gravity, seismic) factors."""
    fg, fe = factors
    g = gravity.scaled(fg, "G")
    return [g, g + seismic.scaled(fe, "E+x"), g + seismic.scaled(-fe, "E-x")]


def design_load_cases(sized: SizedFrame, settings: LoadSettings) -> list[LoadCase]:
    g = gravity_line_loads(settings.gravity, sized.frame)
    e = seismic_load_case(sized, settings.gravity, settings.seismic, settings.include_live_in_seismic)
    return combinations(g, e, (settings.gravity_factor, settings.seismic_factor))


def effective_weight(sized: SizedFrame, settings: LoadSettings) -> float:
    w, _ = story_weights(sized, settings.gravity, settings.include_live_in_seismic)
    return sum(w)

