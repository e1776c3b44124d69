"""Steel W-shape catalog: CSV ingestion, lookup and candidate pools."""
from __future__ import annotations

import csv
import io
import os
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

INCH = 0.0254  # m, exact
STEEL_UNIT_WEIGHT = 77008.0  # N/m^3

COLUMNS = ("name", "units", "area", "depth", "Ix", "Sx", "ry", "bf", "tf")
# (column, power of length) for unit conversion
_DIMENSIONS = (("area", 2), ("depth", 1), ("Ix", 4), ("Sx", 3), ("ry", 1), ("bf", 1), ("tf", 1))


class CatalogError(ValueError):
    pass


class SectionNotFound(KeyError):
    def __init__(self, name: str, suggestions: Sequence[str]):
        self.name = name
        self.suggestions = list(suggestions)
        super().__init__(f"unknown section {name!r}; nearest: {', '.join(self.suggestions)}")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Section:
    """One W-shape, all properties in SI (m, m^2, m^3, m^4)."""

    name: str
    area: float
    depth: float
    moment_of_inertia_major: float
    section_modulus_major: float
    radius_of_gyration_minor: float
    flange_width: float
    flange_thickness: float

    @property
    def unit_weight_per_length(self) -> float:
        """Self weight in N/m."""
        return self.area * STEEL_UNIT_WEIGHT

    @property
    def nominal_depth(self) -> int:
        return nominal_depth(self.name)

    def check(self) -> None:
        values = (self.area, self.depth, self.moment_of_inertia_major, self.section_modulus_major,
                  self.radius_of_gyration_minor, self.flange_width, self.flange_thickness)
        if not all(v > 0 for v in values):
            raise CatalogError(f"{self.name}: all properties must be positive")
        s_max = self.moment_of_inertia_major / (self.depth / 2.0)
        if self.section_modulus_major > s_max * (1 + 1e-9):
            raise CatalogError(f"{self.name}: Sx exceeds Ix/(d/2)")


def normalize_name(name: str) -> str:
    return name.strip().upper()


def nominal_depth(name: str) -> int:
    m = re.match(r"W(\d+)X", normalize_name(name))
    if m is None:
        raise CatalogError(f"not a W-shape designation: {name!r}")
    return int(m.group(1))


def _ordering_key(s: Section):
    return (s.nominal_depth, s.area, s.name)


@dataclass(frozen=True)
class SectionCatalog:
    entries: tuple[Section, ...] = ()
    index: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_sections(cls, sections: Iterable[Section]) -> "SectionCatalog":
        ordered = tuple(sorted(sections, key=_ordering_key))
        index = {}
        for i, s in enumerate(ordered):
            key = normalize_name(s.name)
            if key in index:
                raise CatalogError(f"duplicate section name {s.name!r}")
            index[key] = i
        return cls(ordered, index)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.index

    def names(self) -> list[str]:
        return [s.name for s in self.entries]

    def position(self, name: str) -> int:
        return self.index[normalize_name(name)]


def load_catalog(csv_content: str) -> SectionCatalog:
    """Parse catalog CSV text (`name,units,area,depth,Ix,Sx,ry,bf,tf`).

    Rows in ``in`` are converted to SI with 1 in = 0.0254 m. Errors name the
    1-based line number of the offending row.
    """
    reader = csv.reader(io.StringIO(csv_content))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CatalogError("empty catalog: header row missing") from None
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise CatalogError(f"missing required column(s): {', '.join(missing)}")
    col = {c: header.index(c) for c in COLUMNS}

    sections = []
    seen: dict[str, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise CatalogError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
        name = row[col["name"]].strip()
        key = normalize_name(name)
        if key in seen:
            raise CatalogError(f"row {lineno}: duplicate name {name!r} (first at row {seen[key]})")
        seen[key] = lineno
        units = row[col["units"]].strip().lower()
        if units not in ("in", "m"):
            raise CatalogError(f"row {lineno}: units must be 'in' or 'm', got {units!r}")
        values = {}
        for c, power in _DIMENSIONS:
            try:
                v = float(row[col[c]])
            except ValueError:
                raise CatalogError(f"row {lineno}: {c} is not a number: {row[col[c]]!r}") from None
            if not v > 0:
                raise CatalogError(f"row {lineno}: {c} must be positive, got {v}")
            values[c] = v * INCH**power if units == "in" else v
        section = Section(
            name=name,
            area=values["area"],
            depth=values["depth"],
            moment_of_inertia_major=values["Ix"],
            section_modulus_major=values["Sx"],
            radius_of_gyration_minor=values["ry"],
            flange_width=values["bf"],
            flange_thickness=values["tf"],
        )
        try:
            section.check()
        except CatalogError as exc:
            raise CatalogError(f"row {lineno}: {exc}") from None
        sections.append(section)
    return SectionCatalog.from_sections(sections)


def dump_catalog(catalog: SectionCatalog) -> str:
    """Serialize to CSV in SI units; ``load_catalog`` reproduces every float exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for s in catalog:
        w.writerow([s.name, "m", repr(s.area), repr(s.depth), repr(s.moment_of_inertia_major),
                    repr(s.section_modulus_major), repr(s.radius_of_gyration_minor),
                    repr(s.flange_width), repr(s.flange_thickness)])
    return buf.getvalue()


def default_catalog_text() -> str:
    path = os.environ.get("SEMIRIGID_CATALOG")
    if path:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    return resources.files("semirigid.data").joinpath("w_shapes.csv").read_text(encoding="utf-8")


_default: SectionCatalog | None = None


def default_catalog() -> SectionCatalog:
    """Shipped catalog, or the file named by ``SEMIRIGID_CATALOG``."""
    global _default
    if os.environ.get("SEMIRIGID_CATALOG"):
        return load_catalog(default_catalog_text())
    if _default is None:
        _default = load_catalog(default_catalog_text())
    return _default


def _edit_distance(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def lookup(catalog: SectionCatalog, name: str) -> Section:
    key = normalize_name(name)
    pos = catalog.index.get(key)
    if pos is None:
        near = sorted(catalog.index, key=lambda n: (_edit_distance(key, n), n))[:3]
        raise SectionNotFound(name, [catalog.entries[catalog.index[n]].name for n in near])
    return catalog.entries[pos]


def candidate_pool(catalog: SectionCatalog, pool_spec: Sequence[str] | str) -> list[Section]:
    """Sections for one design group, in catalog order."""
    if isinstance(pool_spec, str):
        if pool_spec.strip().lower() != "all":
            raise CatalogError(f"pool must be a list of names or 'all', got {pool_spec!r}")
        pool = list(catalog.entries)
    else:
        positions = []
        for name in pool_spec:
            pos = catalog.position(lookup(catalog, name).name)
            if pos in positions:
                warnings.warn(f"duplicate section {name!r} in pool ignored", stacklevel=2)
                continue
            positions.append(pos)
        pool = [catalog.entries[p] for p in sorted(positions)]
    if not pool:
        raise CatalogError("candidate pool is empty")
    return pool
