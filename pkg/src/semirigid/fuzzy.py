"""Membership functions, min-aggregation and the penalized satisfaction function."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

from .model import ConfigError

EPS = 1e-6  # floor for memberships inside the penalty quotients


class Shape(Enum):
    CRISP = "crisp"
    LINEAR = "linear"
    BILINEAR = "bilinear"


class FitnessMode(Enum):
    LAMBDA = "lambda"
    PHI = "phi"


def _descending(x: float, x0: float, x1: float, x2: float, knee: float) -> float:
    # 1 up to x0, linear to `knee` at x1, linear to 0 at x2, 0 beyond
    if x <= x0:
        return 1.0
    if x <= x1:
        return 1.0 - (1.0 - knee) * (x - x0) / (x1 - x0)
    if x < x2:
        return knee * (x2 - x) / (x2 - x1)
    return 0.0


@dataclass(frozen=True)
class ObjectiveMembership:
    f_lower: float
    f_upper: float
    f_max: float
    mu_knee: float = 0.5
    shape: Shape = Shape.BILINEAR

    def __post_init__(self):
        if not self.f_lower < self.f_upper < self.f_max:
            raise ConfigError("objective bounds must satisfy f_lower < f_upper < f_max")
        if not 0.0 < self.mu_knee < 1.0:
            raise ConfigError("mu_knee must lie in (0, 1)")


@dataclass(frozen=True)
class ConstraintMembership:
    g_allow: float = 1.0
    delta_g: float = 0.05
    n_factor: float = 1.5
    mu_knee: float = 0.5
    shape: Shape = Shape.BILINEAR

    def __post_init__(self):
        if not self.n_factor > 1.0:
            raise ConfigError("n_factor must exceed 1")
        if not 0.0 < self.delta_g < (self.n_factor - 1.0) * self.g_allow:
            raise ConfigError("delta_g must lie in (0, (n_factor - 1) * g_allow)")
        if not 0.0 < self.mu_knee < 1.0:
            raise ConfigError("mu_knee must lie in (0, 1)")

    @property
    def g_upper(self) -> float:
        return self.n_factor * self.g_allow


def objective_membership(F: float, spec: ObjectiveMembership) -> float:
    """Satisfaction of weight F: 1 at or below F', falling to 0.

    Crisp cuts at F'', linear falls from F' to 0 at F'', bilinear passes through
    ``mu_knee`` at F'' and reaches 0 at F_u.
    """
    if spec.shape is Shape.CRISP:
        return 1.0 if F <= spec.f_upper else 0.0
    if spec.shape is Shape.LINEAR:
        return _descending(F, spec.f_lower, spec.f_upper, spec.f_upper, 0.0)
    return _descending(F, spec.f_lower, spec.f_upper, spec.f_max, spec.mu_knee)


def constraint_membership(g_ratio: float, spec: ConstraintMembership) -> float:
    """Satisfaction of a normalized constraint ratio g/g_a."""
    ga, gu = spec.g_allow, spec.g_upper
    if spec.shape is Shape.CRISP:
        return 1.0 if g_ratio <= ga else 0.0
    if spec.shape is Shape.LINEAR:
        return _descending(g_ratio, ga, gu, gu, 0.0)
    return _descending(g_ratio, ga, ga + spec.delta_g, gu, spec.mu_knee)


def aggregate_lambda(mu_f: float, mu_gs: Sequence[float]) -> float:
    """Overall satisfaction: min over objective and all constraint memberships."""
    return min(mu_f, min(mu_gs, default=mu_f))


@dataclass(frozen=True)
class PenaltyConfig:
    s_f: float = 10.0
    alpha_obj: float = 1.0
    beta_obj: float = 0.0
    gamma: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if not self.s_f > 0:
            raise ConfigError("s_f must be positive")
        if self.gamma < 0 or self.alpha_obj < 0:
            raise ConfigError("penalty multipliers must be >= 0")


def penalized_phi(lam: float, mu_f: float, mu_stress: Sequence[float], mu_disp: Sequence[float],
                  mu_aux: Sequence[float], cfg: PenaltyConfig = PenaltyConfig()) -> float:
    """Penalized function to minimize: -S_f*lam plus squared Lagrangian-style residuals.

    Memberships are floored at ``EPS`` inside the quotients.
    """
    def term(mu, mult, shift):
        return mult * (lam / max(mu, EPS) - 1.0 + shift) ** 2

    phi = -cfg.s_f * lam + 0.5 * term(mu_f, cfg.alpha_obj, cfg.beta_obj)
    for group in (mu_stress, mu_disp, mu_aux):
        phi += 0.5 * sum(term(mu, cfg.gamma, cfg.omega) for mu in group)
    return phi


@dataclass(frozen=True)
class FuzzyConfig:
    """Membership and fitness settings for one run.

    Objective bounds left as ``None`` are calibrated per problem before the run.
    """

    shape: Shape = Shape.BILINEAR
    mu_knee: float = 0.5
    f_lower: float | None = None
    f_upper: float | None = None
    f_max: float | None = None
    n_factor: float = 1.5
    delta_g: float = 0.05
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    mode: FitnessMode = FitnessMode.LAMBDA

    @property
    def constraint_spec(self) -> ConstraintMembership:
        return ConstraintMembership(1.0, self.delta_g, self.n_factor, self.mu_knee, self.shape)

    def objective_spec(self) -> ObjectiveMembership:
        if None in (self.f_lower, self.f_upper, self.f_max):
            raise ConfigError("objective bounds not calibrated")
        return ObjectiveMembership(self.f_lower, self.f_upper, self.f_max, self.mu_knee, self.shape)

    @property
    def calibrated(self) -> bool:
        return None not in (self.f_lower, self.f_upper, self.f_max)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "FuzzyConfig":
        cfg = dict(cfg or {})
        try:
            pen = cfg.get("penalty", {}) or {}
            penalty = PenaltyConfig(float(pen.get("s_f", 10.0)), float(pen.get("alpha", 1.0)),
                                    float(pen.get("beta", 0.0)), float(pen.get("gamma", 1.0)),
                                    float(pen.get("omega", 0.0)))

            def opt(key):
                return None if cfg.get(key) is None else float(cfg[key])

            out = cls(Shape(cfg.get("shape", "bilinear")), float(cfg.get("mu_knee", 0.5)),
                      opt("f_lower"), opt("f_upper"), opt("f_max"),
                      float(cfg.get("n_factor", 1.5)), float(cfg.get("delta_g", 0.05)),
                      penalty, FitnessMode(cfg.get("mode", "lambda")))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"fuzzy: {exc}") from None
        out.constraint_spec  # validates
        if out.calibrated:
            out.objective_spec()
        return out

    def as_dict(self) -> dict:
        return {"shape": self.shape.value, "mu_knee": self.mu_knee, "f_lower": self.f_lower,
                "f_upper": self.f_upper, "f_max": self.f_max, "n_factor": self.n_factor,
                "delta_g": self.delta_g, "mode": self.mode.value,
                "penalty": {"s_f": self.penalty.s_f, "alpha": self.penalty.alpha_obj,
                            "beta": self.penalty.beta_obj, "gamma": self.penalty.gamma,
                            "omega": self.penalty.omega}}


def fitness(lam: float, phi: float | None = None, mode: FitnessMode = FitnessMode.LAMBDA) -> float:
    """Chromosome fitness: lambda, or -phi in penalty mode (larger is better)."""
    if mode is FitnessMode.LAMBDA:
        return lam
    if phi is None:
        raise ValueError("phi mode needs the penalized value")
    return -phi
