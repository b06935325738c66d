"""Two-band semiclassical hydrodynamics with maximum-entropy moment closure."""

from .closure import (BandMoments, ClosureTensors, Multipliers, SolverConfig,
                      closure_tensors, grad_f, hess_f, log_partition_f,
                      solve_multipliers, solve_multipliers_batch)
from .coupling import CouplingConfig, SourceTerms, exact_relax, sources
from .errors import (KaneHydroError, NoConvergence, ParseError, PositivityLost,
                     QuadratureOverflow, SingularSystem, StatePositivityLost)
from .field import FieldState, PotentialConfig, build_field, force, solve_poisson
from .grid import Grid1D
from .hydro import HydroConfig, SimState, StepReport, run, step
from .material import Band, MaterialParams, energy, inverse_mass, nu, velocity
from .moments import (MomentSet, QuadratureSpec, integrate_moments, partition_z,
                      raw_moments)

__all__ = [
    "Band", "BandMoments", "ClosureTensors", "CouplingConfig", "FieldState",
    "Grid1D", "HydroConfig", "KaneHydroError", "MaterialParams", "MomentSet",
    "Multipliers", "NoConvergence", "ParseError", "PositivityLost",
    "PotentialConfig", "QuadratureOverflow", "QuadratureSpec", "SimState",
    "SingularSystem", "SolverConfig", "SourceTerms", "StatePositivityLost",
    "StepReport", "build_field", "closure_tensors", "energy", "exact_relax",
    "force", "grad_f", "hess_f", "integrate_moments", "inverse_mass",
    "log_partition_f", "nu", "partition_z", "raw_moments", "run",
    "solve_multipliers", "solve_multipliers_batch", "solve_poisson", "sources",
    "step", "velocity",
]
