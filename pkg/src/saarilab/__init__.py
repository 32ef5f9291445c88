"""Planar three-body laboratory for orbits of constant configurational measure."""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    MassSystem,
    PhaseState,
    ScalarDiagnostics,
    configurational_measure,
    forces,
    mutual_distance_bounds,
    potential_energy,
    reduce_to_barycenter,
    scalar_diagnostics,
)
from .integrate import (  # noqa: E402
    Controls,
    OrbitCategory,
    PhiProfile,
    Termination,
    Trajectory,
    categorize_orbit,
    integrate,
    phi_of_I,
    turning_points,
)
from .fujiwara import FujiwaraFrame, to_fujiwara  # noqa: E402
from .central_config import ShapeChart, critical_measures, equilateral_config, euler_collinear  # noqa: E402
from .contour import Window, critical_path_contour  # noqa: E402
from .checks import audit  # noqa: E402

__all__ = [
    "MassSystem", "PhaseState", "ScalarDiagnostics", "configurational_measure", "forces",
    "mutual_distance_bounds", "potential_energy", "reduce_to_barycenter", "scalar_diagnostics",
    "Controls", "OrbitCategory", "PhiProfile", "Termination", "Trajectory", "categorize_orbit",
    "integrate", "phi_of_I", "turning_points", "FujiwaraFrame", "to_fujiwara", "ShapeChart",
    "critical_measures", "equilateral_config", "euler_collinear", "Window", "critical_path_contour", "audit",
]
