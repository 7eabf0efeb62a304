"""Globally optimal point-set registration by branch and bound over DC bounds."""

from .bnb import BnBConfig, BnBResult, solve
from .dcbound import bound_box, eval_objective, lower_bound
from .geometry import PointSet, SearchBox, Transform2DSimilarity, Transform3DRigid, read_points, write_points
from .klap import brute_force_klap, solve_klap
from .metrics import EvalReport, rmse
from .register import register_2d, register_3d, resolve_np
from .rif3d import Rif3DModel, recover_rotation
from .sim2d import Sim2DModel
from .synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "BnBConfig",
    "BnBResult",
    "EvalReport",
    "PointSet",
    "Rif3DModel",
    "SearchBox",
    "Sim2DModel",
    "SynthConfig",
    "Transform2DSimilarity",
    "Transform3DRigid",
    "bound_box",
    "brute_force_klap",
    "eval_objective",
    "generate",
    "lower_bound",
    "read_points",
    "recover_rotation",
    "register_2d",
    "register_3d",
    "resolve_np",
    "rmse",
    "solve",
    "solve_klap",
    "write_points",
]
