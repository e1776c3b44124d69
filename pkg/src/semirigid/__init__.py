"""Weight optimization of plane steel frames with semi-rigid beam-column connections
by a genetic algorithm with bilinear fuzzy fitness."""

from .sections import Section, SectionCatalog, candidate_pool, default_catalog, load_catalog, lookup
from .model import ConnectionModel, Frame, SizedFrame, apply_design, build_frame, frame_weight
from .solver import (AnalysisResult, LoadCase, analyze, assemble_and_solve, condensation_oracle,
                     element_stiffness, fixed_end_forces, semirigid_factors)
from .optimizer import GAConfig, OptimizationRun, Problem, evaluate, run
from .bench import benchmark, run_verification

__version__ = "0.1.0"
