"""Frame domain model: geometry, supports, design groups and connection assignment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

from .sections import (STEEL_UNIT_WEIGHT, CatalogError, Section, SectionCatalog, candidate_pool,
                       default_catalog, lookup, normalize_name)


class ConfigError(ValueError):
    """Invalid frame/problem configuration."""


class ConnectionKind(Enum):
    RIGID = "rigid"
    PINNED = "pinned"
    SEMIRIGID = "semirigid"


class Role(Enum):
    BEAM = "beam"
    COLUMN = "column"


class Fixity(Enum):
    FIXED = "fixed"
    PINNED = "pinned"


@dataclass(frozen=True)
class ConnectionModel:
    kind: ConnectionKind = ConnectionKind.RIGID
    k_rot: float | None = None  # N*m/rad, semi-rigid only

    def __post_init__(self):
        if self.kind is ConnectionKind.SEMIRIGID:
            if self.k_rot is None or not self.k_rot > 0 or math.isinf(self.k_rot):
                raise ConfigError(f"semi-rigid connection needs finite k_rot > 0, got {self.k_rot}")

    @classmethod
    def parse(cls, text: str | "ConnectionModel") -> "ConnectionModel":
        """``rigid``, ``pinned`` or ``semirigid:<K in N*m/rad>``."""
        if isinstance(text, ConnectionModel):
            return text
        t = str(text).strip().lower()
        if t == "rigid":
            return RIGID
        if t == "pinned":
            return PINNED
        if t.startswith("semirigid:"):
            try:
                k = float(t.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad connection stiffness in {text!r}") from None
            return cls(ConnectionKind.SEMIRIGID, k)
        raise ConfigError(f"unknown connection {text!r}")

    def __str__(self) -> str:
        if self.kind is ConnectionKind.SEMIRIGID:
            return f"semirigid:{self.k_rot!r}"
        return self.kind.value


RIGID = ConnectionModel(ConnectionKind.RIGID)
PINNED = ConnectionModel(ConnectionKind.PINNED)


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Member:
    id: int
    node_a: int
    node_b: int
    role: Role
    group: int
    end_connection_a: ConnectionModel = RIGID
    end_connection_b: ConnectionModel = RIGID


@dataclass(frozen=True)
class DesignGroup:
    id: int
    label: str
    pool: tuple[Section, ...]
    role: Role


@dataclass(frozen=True)
class Support:
    node: int
    fixity: Fixity = Fixity.FIXED


@dataclass(frozen=True)
class Frame:
    nodes: tuple[Node, ...]
    members: tuple[Member, ...]
    supports: tuple[Support, ...]
    groups: tuple[DesignGroup, ...]
    tributary_width: float = 5.0
    lengths: tuple[float, ...] = field(default=(), repr=False)
    directions: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def group_by_label(self, label: str) -> DesignGroup:
        for g in self.groups:
            if g.label == label:
                return g
        raise KeyError(label)

    def levels(self) -> list[float]:
        """Distinct node elevations, ascending."""
        return sorted({round(n.y, 9) for n in self.nodes})

    @property
    def height(self) -> float:
        lv = self.levels()
        return lv[-1] - lv[0]

    def roof_nodes(self) -> list[int]:
        top = max(n.y for n in self.nodes)
        return [n.id for n in self.nodes if abs(n.y - top) < 1e-9]

    def nodes_at(self, y: float) -> list[int]:
        return [n.id for n in self.nodes if abs(n.y - y) < 1e-9]

    def group_length_sums(self) -> list[float]:
        sums = [0.0] * len(self.groups)
        for m in self.members:
            sums[m.group] += self.lengths[m.id]
        return sums


@dataclass(frozen=True)
class SizedFrame:
    frame: Frame
    assignment: tuple[Section, ...]  # indexed by group id

    def section_of(self, member: Member) -> Section:
        return self.assignment[member.group]

    def by_label(self) -> dict[str, str]:
        return {g.label: self.assignment[g.id].name for g in self.frame.groups}


# --------------------------------------------------------------------------- config


def _grid_members(grid: Mapping[str, Any]):
    try:
        bays = int(grid["bays"])
        stories = int(grid["stories"])
        bay_m = float(grid["bay_m"])
        story_m = float(grid["story_m"])
    except KeyError as exc:
        raise ConfigError(f"grid: missing key {exc.args[0]!r}") from None
    if bays < 1 or stories < 1 or bay_m <= 0 or story_m <= 0:
        raise ConfigError("grid: bays/stories must be >= 1 and dimensions > 0")
    ncol = bays + 1
    nodes = [{"id": j * ncol + i, "x": i * bay_m, "y": j * story_m}
             for j in range(stories + 1) for i in range(ncol)]

    def band_lookup(rules, story, key_for):
        for rule in rules:
            lo, hi = rule["stories"]
            if lo <= story <= hi:
                return key_for(rule)
        raise ConfigError(f"grid: no group rule covers story {story}")

    col_rules = grid.get("column_groups", [{"stories": [1, stories], "group": "columns"}])
    beam_rules = grid.get("beam_groups", [{"stories": [1, stories], "group": "beams"}])
    beam_conn = grid.get("beam_conn", "rigid")
    members = []
    for s in range(1, stories + 1):
        for i in range(ncol):
            exterior = i in (0, ncol - 1)
            group = band_lookup(col_rules, s, lambda r: r.get("group") or r["exterior" if exterior else "interior"])
            members.append({"a": (s - 1) * ncol + i, "b": s * ncol + i, "role": "column", "group": group})
        for i in range(bays):
            group = band_lookup(beam_rules, s, lambda r: r["group"])
            members.append({"a": s * ncol + i, "b": s * ncol + i + 1, "role": "beam", "group": group,
                            "conn_a": beam_conn, "conn_b": beam_conn})
    base = grid.get("base", "fixed")
    supports = [{"node": i, "fixity": base} for i in range(ncol)]
    return nodes, members, supports


def build_frame(config: Mapping[str, Any], catalog: SectionCatalog | None = None) -> Frame:
    """Validate a frame config document and build the Frame.

    Either explicit ``nodes``/``members``/``supports`` or the ``grid`` shorthand
    (``bays``, ``bay_m``, ``stories``, ``story_m`` plus optional ``column_groups``,
    ``beam_groups``, ``beam_conn``, ``base``) must be present.
    """
    if not isinstance(config, Mapping):
        raise ConfigError("frame config must be a mapping")
    catalog = catalog or default_catalog()
    if "grid" in config:
        raw_nodes, raw_members, raw_supports = _grid_members(config["grid"])
    else:
        raw_nodes = config.get("nodes", [])
        raw_members = config.get("members", [])
        raw_supports = config.get("supports", [])

    nodes = []
    for k, n in enumerate(raw_nodes):
        if isinstance(n, Mapping):
            nid, x, y = int(n.get("id", k)), float(n["x"]), float(n["y"])
        else:
            nid, (x, y) = k, map(float, n)
        nodes.append(Node(nid, x, y))
    if sorted(n.id for n in nodes) != list(range(len(nodes))):
        raise ConfigError("node ids must be unique and dense 0..n-1")
    nodes.sort(key=lambda n: n.id)

    raw_groups = config.get("groups")
    if not raw_groups:
        raise ConfigError("no design groups defined")
    groups = []
    label_to_id: dict[str, int] = {}
    for gid, g in enumerate(raw_groups):
        label = str(g["label"])
        if label in label_to_id:
            raise ConfigError(f"duplicate group label {label!r}")
        try:
            pool = tuple(candidate_pool(catalog, g.get("pool", "all")))
        except (CatalogError, KeyError) as exc:
            raise ConfigError(f"group {label}: {exc}") from None
        role = Role(g.get("role", "beam"))
        label_to_id[label] = gid
        groups.append(DesignGroup(gid, label, pool, role))

    members, lengths, directions = [], [], []
    for k, m in enumerate(raw_members):
        a, b = int(m["a"]), int(m["b"])
        if not (0 <= a < len(nodes) and 0 <= b < len(nodes)):
            raise ConfigError(f"member {k}: dangling node reference ({a}, {b})")
        if a == b:
            raise ConfigError(f"member {k}: both ends at node {a}")
        dx, dy = nodes[b].x - nodes[a].x, nodes[b].y - nodes[a].y
        length = math.hypot(dx, dy)
        if length <= 1e-12:
            raise ConfigError(f"member {k}: zero length")
        label = str(m.get("group", ""))
        if label not in label_to_id:
            raise ConfigError(f"member {k}: missing group {label!r}")
        role = Role(m["role"]) if "role" in m else (Role.BEAM if abs(dy) < 1e-9 else Role.COLUMN)
        members.append(Member(k, a, b, role, label_to_id[label],
                              ConnectionModel.parse(m.get("conn_a", "rigid")),
                              ConnectionModel.parse(m.get("conn_b", "rigid"))))
        lengths.append(length)
        directions.append((dx / length, dy / length))

    supports = []
    for s in raw_supports:
        node = int(s["node"])
        if not 0 <= node < len(nodes):
            raise ConfigError(f"support at unknown node {node}")
        supports.append(Support(node, Fixity(s.get("fixity", "fixed"))))
    if not supports:
        raise ConfigError("frame has no supports")

    width = float(config.get("tributary_width_m", 5.0))
    if width < 0:
        raise ConfigError("tributary_width_m must be >= 0")
    return Frame(tuple(nodes), tuple(members), tuple(supports), tuple(groups), width,
                 tuple(lengths), tuple(directions))


def with_beam_connections(frame: Frame, conn: ConnectionModel) -> Frame:
    """Copy of ``frame`` with both ends of every beam set to ``conn``."""
    members = tuple(
        Member(m.id, m.node_a, m.node_b, m.role, m.group, conn, conn) if m.role is Role.BEAM else m
        for m in frame.members)
    return Frame(frame.nodes, members, frame.supports, frame.groups, frame.tributary_width,
                 frame.lengths, frame.directions)


def apply_design(frame: Frame, assignment: Mapping[Any, Section | str] | Sequence[Section]) -> SizedFrame:
    """Bind a section to every group. Keys may be group labels or ids; values Sections or names."""
    if not isinstance(assignment, Mapping):
        assignment = dict(enumerate(assignment))
    chosen: list[Section | None] = [None] * len(frame.groups)
    for key, value in assignment.items():
        if isinstance(key, int):
            if not 0 <= key < len(frame.groups):
                raise ConfigError(f"no group with id {key}")
            group = frame.groups[key]
        else:
            try:
                group = frame.group_by_label(str(key))
            except KeyError:
                raise ConfigError(f"no group labelled {key!r}") from None
        if isinstance(value, Section):
            section = value
        else:
            section = next((s for s in group.pool if normalize_name(s.name) == normalize_name(value)), None)
            if section is None:
                raise ConfigError(f"section {value!r} not in pool of {group.label}")
        if section not in group.pool:
            raise ConfigError(f"section {section.name} not in pool of {group.label}")
        chosen[group.id] = section
    missing = [g.label for g in frame.groups if chosen[g.id] is None]
    if missing:
        raise ConfigError(f"design misses group(s): {', '.join(missing)}")
    return SizedFrame(frame, tuple(chosen))


def frame_weight(sized: SizedFrame, unit_weight: float = STEEL_UNIT_WEIGHT) -> float:
    """Total steel weight in N."""
    frame = sized.frame
    return sum(sized.assignment[g.id].area * length * unit_weight
               for g, length in zip(frame.groups, frame.group_length_sums()))


def design_from_names(frame: Frame, names: Mapping[str, str], catalog: SectionCatalog | None = None) -> SizedFrame:
    """Like ``apply_design`` but resolves names through the catalog first (case-insensitive)."""
    catalog = catalog or default_catalog()
    return apply_design(frame, {k: lookup(catalog, v) for k, v in names.items()})
