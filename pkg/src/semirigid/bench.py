"""Built-in benchmark frames and the spring-ended beam verification problem."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .config import ga_from_document, problem_from_document
from .model import RIGID, ConfigError, ConnectionKind, ConnectionModel, build_frame
from .optimizer import GAConfig, Problem
from .sections import INCH, SectionCatalog, default_catalog, lookup
from .solver import (LoadCase, SemiRigidFactors, analyze, condensation_oracle, fixed_end_forces,
                     local_stiffness, oracle_fixed_end_forces, semirigid_factors)

FRAMES = ("frame3", "frame5", "frame9")
BENCHMARKS = FRAMES + ("verify",)

# rotational stiffness of the catalogued connection types, N*cm/rad
CONNECTION_STIFFNESS_N_CM = {"1": 833e7, "4": 2766e7, "5": 3325e7, "7": 4434e7}
CONNECTION_VARIANTS = ("rigid", "1", "4", "5", "7")

KSI = 6894757.293168361  # Pa
KIP = 4448.2216152605  # N


def connection_model(variant: str | ConnectionModel) -> ConnectionModel:
    """``rigid``, ``pinned``, a connection type number (1, 4, 5, 7) or ``semirigid:<K>``."""
    if isinstance(variant, ConnectionModel):
        return variant
    v = str(variant).strip().lower().lstrip("#").removeprefix("type")
    if v in CONNECTION_STIFFNESS_N_CM:
        return ConnectionModel(ConnectionKind.SEMIRIGID, CONNECTION_STIFFNESS_N_CM[v] / 100.0)
    return ConnectionModel.parse(v)


def benchmark_document(name: str) -> dict:
    name = name.lower()
    if name not in FRAMES:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")
    text = resources.files("semirigid.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def benchmark(name: str, connection_variant: str = "rigid", catalog: SectionCatalog | None = None) -> Problem:
    """Problem for ``frame3``/``frame5``/``frame9`` with every beam end set to the given connection."""
    doc = benchmark_document(name)
    problem = problem_from_document(doc, catalog, connection=connection_variant)
    return problem


def benchmark_ga(name: str) -> GAConfig:
    return ga_from_document(benchmark_document(name))


# --------------------------------------------------------------------------- verification


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


@dataclass
class VerificationReport:
    inputs: dict[str, float]
    results: dict[str, float]
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        i, r = self.inputs, self.results
        lines = [
            "Spring-ended beam under uniform load",
            f"{'Section':<10}{'E (k/in2)':>12}{'I (in4)':>10}{'Ki (k.in/rad)':>15}{'M_end (k.in)':>14}{'M_mid (k.in)':>14}",
            f"{'W8X21':<10}{i['E_ksi']:>12.5g}{i['I_in4']:>10.4g}{i['K_kip_in']:>15.5g}"
            f"{r['end_moment_kip_in']:>14.6g}{r['mid_moment_kip_in']:>14.6g}",
            f"span {i['span_m']} m, load {i['load_npm']} N/m, alpha = {r['alpha']:.6g}, "
            f"reduction factor {r['reduction_factor']:.10f} (closed form 1/(1+2a) = {r['expected_reduction']:.10f})",
            "",
        ]
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<48} {c.value:.3e} <= {c.tolerance:.0e}")
        return "\n".join(lines)


def _rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)


def _sig4_mismatch(value: float, reference: float) -> float:
    return abs(float(f"{value:.4g}") - float(f"{reference:.4g}")) / abs(reference)


def _spring_beam_frame(span: float, conn: ConnectionModel, catalog: SectionCatalog, pieces: int = 2):
    # beam split into `pieces` elements, springs only at the two supports
    nodes = [{"id": k, "x": span * k / pieces, "y": 0.0} for k in range(pieces + 1)]
    members = []
    for k in range(pieces):
        members.append({"a": k, "b": k + 1, "role": "beam", "group": "B",
                        "conn_a": str(conn) if k == 0 else "rigid",
                        "conn_b": str(conn) if k == pieces - 1 else "rigid"})
    cfg = {"nodes": nodes, "members": members,
           "supports": [{"node": 0, "fixity": "fixed"}, {"node": pieces, "fixity": "fixed"}],
           "groups": [{"label": "B", "role": "beam", "pool": ["W8X21"]}]}
    return build_frame(cfg, catalog)


def _solver_end_moments(span, w, conn, E, catalog):
    from .model import apply_design
    frame = _spring_beam_frame(span, conn, catalog)
    sized = apply_design(frame, {"B": "W8X21"})
    case = LoadCase({}, {m.id: -w for m in frame.members})
    res = analyze(sized, [case], E)[0]
    first, last = frame.members[0].id, frame.members[-1].id
    return res.member_end_forces[first][2], res.member_end_forces[last][5]


def run_verification(span: float = 5.0, load: float = 39240.0, perturbation: float = 0.0,
                     catalog: SectionCatalog | None = None) -> VerificationReport:
    """Analyze the W8X21 spring-ended beam and check closed forms against the oracles.

    ``perturbation`` scales the closed-form end moments (test hook: any nonzero
    value beyond round-off must make the report fail).
    """
    catalog = catalog or default_catalog()
    sec = lookup(catalog, "W8X21")
    E = 29000 * KSI
    K = 27795 * KIP * INCH
    I = sec.moment_of_inertia_major
    inputs = {"E_ksi": E / KSI, "I_in4": I / INCH**4, "K_kip_in": K / (KIP * INCH),
              "span_m": span, "load_npm": load}

    conn = ConnectionModel(ConnectionKind.SEMIRIGID, K)
    factors = semirigid_factors(E, I, span, conn)
    w_local = -load  # gravity on a left-to-right beam
    closed = fixed_end_forces(w_local, span, factors) * (1.0 + perturbation)
    oracle = oracle_fixed_end_forces(w_local, sec, E, span, K, K)
    rigid = fixed_end_forces(w_local, span)
    reduction = closed[2] / rigid[2]
    expected = 1.0 / (1.0 + 2.0 * factors.alpha_a)
    solver_a, solver_b = _solver_end_moments(span, load, conn, E, catalog)

    # stiff and pinned limits
    huge = ConnectionModel(ConnectionKind.SEMIRIGID, 1e12 * E * I / span)
    stiff = fixed_end_forces(w_local, span, semirigid_factors(E, I, span, huge))[2] / rigid[2]
    pinned = fixed_end_forces(w_local, span, SemiRigidFactors(math.inf, math.inf))
    pinned_solver = _solver_end_moments(span, load, ConnectionModel(ConnectionKind.PINNED), E, catalog)

    k_closed = local_stiffness(sec.area, I, E, span, factors)
    k_oracle = condensation_oracle(sec, E, span, K, K)

    end_moment = abs(closed[2])
    mid_moment = abs(load * span**2 / 8 - end_moment)
    results = {"alpha": factors.alpha_a, "reduction_factor": reduction, "expected_reduction": expected,
               "end_moment_nm": end_moment, "end_moment_kip_in": end_moment / (KIP * INCH),
               "mid_moment_kip_in": mid_moment / (KIP * INCH)}
    scale = load * span**2
    checks = [
        Check("input echo E (4 s.f.)", _sig4_mismatch(inputs["E_ksi"], 29000), 0.0),
        Check("input echo I (4 s.f.)", _sig4_mismatch(inputs["I_in4"], 75.3), 0.0),
        Check("input echo Ki (4 s.f.)", _sig4_mismatch(inputs["K_kip_in"], 27795), 0.0),
        Check("fixed-end forces vs condensation oracle", _rel(closed, oracle), 1e-10),
        Check("end-moment reduction vs 1/(1+2a)", abs(reduction - expected) / expected, 1e-10),
        Check("solver end moments vs closed form", _rel([solver_a, solver_b], closed[[2, 5]]), 1e-10),
        Check("element stiffness vs condensation oracle", _rel(k_closed, k_oracle), 1e-10),
        Check("stiff-spring limit reduction -> 1", abs(stiff - 1.0), 1e-9),
        Check("pinned limit end moments -> 0", float(np.abs(pinned[[2, 5]]).max()) / scale, 1e-12),
        Check("pinned limit solver end moments -> 0", max(abs(m) for m in pinned_solver) / scale, 1e-9),
    ]
    return VerificationReport(inputs, results, checks)
