"""Linear-elastic direct stiffness analysis of plane frames with semi-rigid beam ends.

Local DOF order per element is (u1, v1, theta1, u2, v2, theta2); moments and
rotations are counterclockwise positive. Member end forces are the forces the
nodes exert on the member, in local axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import lapack

from .model import ConnectionKind, ConnectionModel, Fixity, SizedFrame

DOF_NAMES = ("ux", "uy", "rz")
# relative pivot below which the reduced stiffness is treated as singular
PIVOT_TOL = 1e-11


class UnstableStructure(RuntimeError):
    def __init__(self, node: int, dof: str, detail: str = ""):
        self.node = node
        self.dof = dof
        super().__init__(f"unstable structure: zero/negative pivot at node {node} {dof}{detail}")


@dataclass(frozen=True)
class SemiRigidFactors:
    """Connection flexibility ratios alpha = EI/(L*K); ``inf`` marks a pinned end."""

    alpha_a: float = 0.0
    alpha_b: float = 0.0

    @property
    def pinned_a(self) -> bool:
        return math.isinf(self.alpha_a)

    @property
    def pinned_b(self) -> bool:
        return math.isinf(self.alpha_b)

    @property
    def denominator(self) -> float:
        a, b = self.alpha_a, self.alpha_b
        return 1.0 + 4.0 * a + 4.0 * b + 12.0 * a * b


RIGID_FACTORS = SemiRigidFactors()


def _alpha(EI_over_L: float, conn: ConnectionModel) -> float:
    if conn.kind is ConnectionKind.RIGID:
        return 0.0
    if conn.kind is ConnectionKind.PINNED:
        return math.inf
    return EI_over_L / conn.k_rot


def semirigid_factors(E: float, I: float, L: float, conn_a: ConnectionModel,
                      conn_b: ConnectionModel | None = None) -> SemiRigidFactors:
    """Flexibility ratios for the two member ends (``conn_b`` defaults to ``conn_a``)."""
    if not L > 0:
        raise ValueError("member length must be positive")
    conn_b = conn_a if conn_b is None else conn_b
    k = E * I / L
    return SemiRigidFactors(_alpha(k, conn_a), _alpha(k, conn_b))


def rotational_block(EI_over_L: float, factors: SemiRigidFactors) -> tuple[float, float, float]:
    """(k11, k12, k22): joint-rotation stiffness of the spring-ended beam, chord held fixed.

    Pinned ends use the exact limits instead of a small spring.
    """
    a, b = factors.alpha_a, factors.alpha_b
    k = EI_over_L
    if factors.pinned_a and factors.pinned_b:
        return 0.0, 0.0, 0.0
    if factors.pinned_a:
        return 0.0, 0.0, 3.0 * k / (1.0 + 3.0 * b)
    if factors.pinned_b:
        return 3.0 * k / (1.0 + 3.0 * a), 0.0, 0.0
    d = factors.denominator
    return k * (4.0 + 12.0 * b) / d, 2.0 * k / d, k * (4.0 + 12.0 * a) / d


def local_stiffness(A: float, I: float, E: float, L: float, factors: SemiRigidFactors) -> np.ndarray:
    k11, k12, k22 = rotational_block(E * I / L, factors)
    s = k11 + 2.0 * k12 + k22
    ea = E * A / L
    p, q = (k11 + k12) / L, (k12 + k22) / L
    t = s / L**2
    return np.array([
        [ea, 0.0, 0.0, -ea, 0.0, 0.0],
        [0.0, t, p, 0.0, -t, q],
        [0.0, p, k11, 0.0, -p, k12],
        [-ea, 0.0, 0.0, ea, 0.0, 0.0],
        [0.0, -t, -p, 0.0, t, -q],
        [0.0, q, k12, 0.0, -q, k22],
    ])


def rotation_matrix(c: float, s: float) -> np.ndarray:
    """T with u_local = T @ u_global."""
    r = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    t = np.zeros((6, 6))
    t[:3, :3] = r
    t[3:, 3:] = r
    return t


def element_stiffness(section, E: float, L: float, factors: SemiRigidFactors,
                      orientation_angle: float = 0.0) -> np.ndarray:
    """Global 6x6 stiffness of a semi-rigid member at ``orientation_angle`` (rad from global x)."""
    kl = local_stiffness(section.area, section.moment_of_inertia_major, E, L, factors)
    t = rotation_matrix(math.cos(orientation_angle), math.sin(orientation_angle))
    return t.T @ kl @ t


def _rigid_beam(A: float, I: float, E: float, L: float) -> np.ndarray:
    ea, k = E * A / L, E * I / L
    return np.array([
        [ea, 0, 0, -ea, 0, 0],
        [0, 12 * k / L**2, 6 * k / L, 0, -12 * k / L**2, 6 * k / L],
        [0, 6 * k / L, 4 * k, 0, -6 * k / L, 2 * k],
        [-ea, 0, 0, ea, 0, 0],
        [0, -12 * k / L**2, -6 * k / L, 0, 12 * k / L**2, -6 * k / L],
        [0, 6 * k / L, 2 * k, 0, -6 * k / L, 4 * k],
    ], dtype=float)


def _spring_system(A, I, E, L, k_a, k_b):
    # DOFs 0..5 external joint (u1, v1, th1, u2, v2, th2); 6, 7 member-end rotations behind the springs
    beam_dofs = [0, 1, 6, 3, 4, 7]
    K = np.zeros((8, 8))
    K[np.ix_(beam_dofs, beam_dofs)] += _rigid_beam(A, I, E, L)
    for joint, inner, k in ((2, 6, k_a), (5, 7, k_b)):
        K[np.ix_([joint, inner], [joint, inner])] += k * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return K, beam_dofs


def condensation_oracle(section, E: float, L: float, k_a: float, k_b: float) -> np.ndarray:
    """Local 6x6 stiffness obtained numerically by condensing explicit end springs.

    Independent check of ``local_stiffness``; springs must be finite and positive.
    """
    if not (0 < k_a < math.inf and 0 < k_b < math.inf):
        raise ValueError("oracle needs finite positive spring stiffnesses")
    K, _ = _spring_system(section.area, section.moment_of_inertia_major, E, L, k_a, k_b)
    e, i = slice(0, 6), slice(6, 8)
    return K[e, e] - K[e, i] @ np.linalg.solve(K[i, i], K[i, e])


def oracle_fixed_end_forces(w: float, section, E: float, L: float, k_a: float, k_b: float) -> np.ndarray:
    """Clamped-joint end forces of the spring-ended member under uniform local-y load, by condensation."""
    K, beam_dofs = _spring_system(section.area, section.moment_of_inertia_major, E, L, k_a, k_b)
    r = np.zeros(8)
    r[beam_dofs] = _rigid_fixed_end(w, L)
    e, i = slice(0, 6), slice(6, 8)
    phi = np.linalg.solve(K[i, i], -r[i])
    return r[e] + K[e, i] @ phi


def _rigid_fixed_end(w: float, L: float) -> np.ndarray:
    return np.array([0.0, -w * L / 2, -w * L**2 / 12, 0.0, -w * L / 2, w * L**2 / 12])


def fixed_end_forces(w: float, L: float, factors: SemiRigidFactors = RIGID_FACTORS) -> np.ndarray:
    """Local fixed-end force vector for uniform load ``w`` (N/m along local +y).

    Rigid-end moments -wL^2/12, +wL^2/12 are redistributed for the end springs,
    then shears follow from member equilibrium.
    """
    mfa, mfb = -w * L**2 / 12, w * L**2 / 12
    a, b = factors.alpha_a, factors.alpha_b
    if factors.pinned_a and factors.pinned_b:
        ma = mb = 0.0
    elif factors.pinned_a:
        ma, mb = 0.0, (2.0 * mfb - mfa) / (2.0 + 6.0 * b)
    elif factors.pinned_b:
        ma, mb = (2.0 * mfa - mfb) / (2.0 + 6.0 * a), 0.0
    else:
        d = factors.denominator
        ma = ((1.0 + 4.0 * b) * mfa - 2.0 * b * mfb) / d
        mb = ((1.0 + 4.0 * a) * mfb - 2.0 * a * mfa) / d
    va = (ma + mb) / L - w * L / 2
    vb = -(ma + mb) / L - w * L / 2
    return np.array([0.0, va, ma, 0.0, vb, mb])


@dataclass
class LoadCase:
    """Nodal loads (Fx, Fy, M) and uniform member loads (N/m along member local +y)."""

    nodal_forces: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    member_uniform_loads: dict[int, float] = field(default_factory=dict)
    name: str = ""

    def scaled(self, factor: float, name: str | None = None) -> "LoadCase":
        return LoadCase({n: tuple(factor * v for v in f) for n, f in self.nodal_forces.items()},
                        {m: factor * w for m, w in self.member_uniform_loads.items()},
                        self.name if name is None else name)

    def __add__(self, other: "LoadCase") -> "LoadCase":
        nodal = dict(self.nodal_forces)
        for n, f in other.nodal_forces.items():
            nodal[n] = tuple(x + y for x, y in zip(nodal.get(n, (0.0, 0.0, 0.0)), f))
        uniform = dict(self.member_uniform_loads)
        for m, w in other.member_uniform_loads.items():
            uniform[m] = uniform.get(m, 0.0) + w
        return LoadCase(nodal, uniform, f"{self.name}+{other.name}")

    def total_applied(self, sized: SizedFrame) -> np.ndarray:
        """(Fx, Fy) resultant of all applied loads, in global axes."""
        total = np.zeros(2)
        for f in self.nodal_forces.values():
            total += f[:2]
        frame = sized.frame
        for m, w in self.member_uniform_loads.items():
            c, s = frame.directions[m]
            total += w * frame.lengths[m] * np.array([-s, c])
        return total


@dataclass
class AnalysisResult:
    displacements: dict[int, np.ndarray]
    member_end_forces: dict[int, np.ndarray]
    reactions: dict[int, np.ndarray]
    load_case: LoadCase

    def roof_drift(self, sized: SizedFrame) -> float:
        """Largest |ux| over the top-level nodes."""
        return max(abs(self.displacements[n][0]) for n in sized.frame.roof_nodes())


def member_moment_extremes(end_forces: np.ndarray, w: float, L: float) -> float:
    """Largest |bending moment| along a member carrying uniform load ``w``."""
    ma, va = end_forces[2], end_forces[1]
    best = max(abs(ma), abs(end_forces[5]))
    if w != 0.0:
        x = -va / w
        if 0.0 < x < L:
            best = max(best, abs(-ma + va * x + w * x * x / 2))
    return best


def _member_data(sized: SizedFrame, E: float):
    frame = sized.frame
    data = []
    for m in frame.members:
        sec = sized.assignment[m.group]
        L = frame.lengths[m.id]
        c, s = frame.directions[m.id]
        factors = semirigid_factors(E, sec.moment_of_inertia_major, L, m.end_connection_a, m.end_connection_b)
        kl = local_stiffness(sec.area, sec.moment_of_inertia_major, E, L, factors)
        t = rotation_matrix(c, s)
        dofs = [3 * m.node_a, 3 * m.node_a + 1, 3 * m.node_a + 2,
                3 * m.node_b, 3 * m.node_b + 1, 3 * m.node_b + 2]
        data.append((m, L, factors, kl, t, dofs))
    return data


def global_stiffness(sized: SizedFrame, E: float) -> np.ndarray:
    n = 3 * len(sized.frame.nodes)
    K = np.zeros((n, n))
    for _, _, _, kl, t, dofs in _member_data(sized, E):
        K[np.ix_(dofs, dofs)] += t.T @ kl @ t
    return K


def restrained_dofs(sized: SizedFrame) -> list[int]:
    fixed = set()
    for sup in sized.frame.supports:
        base = 3 * sup.node
        fixed.update((base, base + 1))
        if sup.fixity is Fixity.FIXED:
            fixed.add(base + 2)
    return sorted(fixed)


def _factor(Kff: np.ndarray, free: Sequence[int]):
    chol, info = lapack.dpotrf(Kff, lower=1, clean=1)
    if info < 0:
        raise ValueError("invalid argument to Cholesky factorization")
    if info > 0:
        dof = free[info - 1]
        raise UnstableStructure(dof // 3, DOF_NAMES[dof % 3], " (matrix not positive definite)")
    ratio = np.diag(chol) ** 2 / np.diag(Kff)
    bad = np.flatnonzero(ratio < PIVOT_TOL)
    if bad.size:
        dof = free[bad[0]]
        raise UnstableStructure(dof // 3, DOF_NAMES[dof % 3])
    return chol


def analyze(sized: SizedFrame, load_cases: Sequence[LoadCase], E: float) -> list[AnalysisResult]:
    """Solve several load cases with one factorization of the reduced stiffness."""
    frame = sized.frame
    n = 3 * len(frame.nodes)
    members = _member_data(sized, E)
    K = np.zeros((n, n))
    for _, _, _, kl, t, dofs in members:
        K[np.ix_(dofs, dofs)] += t.T @ kl @ t

    nc = len(load_cases)
    P = np.zeros((n, nc))
    fef = {}  # (case, member) -> local fixed-end vector
    for j, case in enumerate(load_cases):
        for node, f in case.nodal_forces.items():
            P[3 * node:3 * node + 3, j] += f
        for mid, w in case.member_uniform_loads.items():
            m, L, factors, _, t, dofs = members[mid]
            r = fixed_end_forces(w, L, factors)
            fef[j, mid] = r
            P[dofs, j] -= t.T @ r

    fixed = restrained_dofs(sized)
    fixed_set = set(fixed)
    free = [d for d in range(n) if d not in fixed_set]
    U = np.zeros((n, nc))
    if free:
        Kff = K[np.ix_(free, free)]
        chol = _factor(Kff, free)
        U[free, :], _ = lapack.dpotrs(chol, P[free, :], lower=1)

    results = []
    for j, case in enumerate(load_cases):
        u = U[:, j]
        internal = np.zeros(n)
        end_forces = {}
        for m, L, factors, kl, t, dofs in members:
            f = kl @ (t @ u[dofs])
            if (j, m.id) in fef:
                f = f + fef[j, m.id]
            end_forces[m.id] = f
            internal[dofs] += t.T @ f
        applied = np.zeros(n)
        for node, fv in case.nodal_forces.items():
            applied[3 * node:3 * node + 3] += fv
        # reaction = what the support applies to the structure
        residual = internal - applied
        reactions = {s.node: residual[3 * s.node:3 * s.node + 3].copy() for s in frame.supports}
        for s in frame.supports:
            if s.fixity is Fixity.PINNED:
                reactions[s.node][2] = 0.0
        displacements = {nd.id: u[3 * nd.id:3 * nd.id + 3].copy() for nd in frame.nodes}
        results.append(AnalysisResult(displacements, end_forces, reactions, case))
    return results


def assemble_and_solve(sized: SizedFrame, load_case: LoadCase, E: float) -> AnalysisResult:
    return analyze(sized, [load_case], E)[0]


def equilibrium_residual(result: AnalysisResult, sized: SizedFrame) -> float:
    """|sum of reactions + sum of applied loads| (force components only)."""
    total = result.load_case.total_applied(sized)
    for r in result.reactions.values():
        total = total + r[:2]
    return float(np.abs(total).max())
