"""Surface measures of convex polytopes cut near a ridge, and the Newton
resistance tools built on them."""
from .errors import *  # noqa: F401,F403
from .geometry import ConvexPolytope, Halfspace, box, clip, hull3, prism, read_mesh, write_mesh
from .measure import GreatArc, SphereMeasure, bl_distance, project_to_arc
from .ridge import RidgeFrame, cut, sweep
from .constructions import SupportSpec, build_example, extrude, planar_chain, predicted_limit
from .newton import ConcaveGridFn, DomainSpec, resistance, resistance_surface, solve_2d

__version__ = "0.1.0"
