"""Total-Lagrangian mixed finite elements for active muscle-tendon units.

Nearly incompressible, transversely isotropic tissue with Hill-type
active fibre stress; dynamic and quasi-static marching; desk-scale
experiment studies with probes and field export.
"""

from .assembly import (DirichletBC, Discretization, DofMap, SystemState,
                       apply_constraints, assemble_residual,
                       assemble_tangent, residual_scales)
from .config import (PRESETS, RunConfig, load_config, parse_config_text,
                     preset_text, resolved_text)
from .constitutive import (TissueParams, active_force_length, apo_ten_fibre_stress,
                           default_materials, force_velocity,
                           load_material_file, mix_bulk_modulus,
                           muscle_fibre_stress, passive_fibre_stress,
                           with_overrides, yeoh_uniaxial_oracle)
from .dynamics import (TimeConfig, cfl_dt, initial_state, march, read_state,
                       step_dynamic, step_quasistatic, write_state)
from .elements import ElementBasis, QuadratureRule, basis, gauss_rule
from .errors import (ConfigError, GeometryInfeasible, GridMismatch,
                     MyofemError, NonConvergence, NonPositiveJacobian,
                     ParseError, ValidationError)
from .kinematics import DeformationPoint, RatePoint, deformation_batch
from .mesh import (BlockGeometry, FibreField, GastrocGeometry, GeometrySpec,
                   Mesh, export_mesh, generate_block, generate_gastroc,
                   import_mesh)
from .scenarios import (BoundaryProgram, HoldActivation, Probe, ProbeSet,
                        RampActivation, RegionActivation, RunResult,
                        SquareWave, ZajacActivation,
                        effective_force_decomposition, force_velocity_points,
                        run_study)
from .solver import NewtonConfig, SolveStats, linear_solve, newton_solve
from .vtk_export import export_vtk

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
