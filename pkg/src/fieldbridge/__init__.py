"""Field transfer between unstructured 2D triangle meshes.

Pointwise (radial-basis weighted polynomial fitting) and conservative
(supermesh L2 projection) transfer, uniform-grid point localization with
topological classification, typed coordinate transformations, and a
deterministic in-process rendezvous exchange simulator.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from .coords import CartesianPoint3, CylindricalPoint, cart_to_cyl, cyl_to_cart
from .conservative import (
    ConvexPolygon,
    SuperMesh,
    assemble_mass,
    assemble_rhs,
    build_supermesh,
    clip_triangles,
    solve_spd,
    transfer_conservative,
)
from .generate import annulus, disk, disk_graded, generate_mesh, refine4, square
from .locate import (
    LocalizationResult,
    PointGrid,
    UniformGrid,
    build_grid,
    build_point_grid,
    locate,
    locate_many,
)
from .mesh import (
    Field,
    Mesh,
    Point2,
    build_mesh,
    centroids,
    element_area,
    eval_field,
    integrate_field,
    sample_field,
)
from .meshio import load_field, load_mesh, save_field, save_mesh
from .metrics import (
    ConservativeSpec,
    ErrorSeries,
    accuracy_error,
    conservation_error,
    run_iteration_experiment,
)
from .pointwise import (
    AdaptiveRadius,
    ElementPatch,
    FitSpec,
    FixedRadius,
    RadialBasisSpec,
    RbfKind,
    eval_rbf,
    fit_local,
    fit_point_cloud,
    select_support,
    transfer_extrinsic,
    transfer_pointwise,
)
from .quadrature import QuadratureRule, composite_rule, quadrature_for
from .rendezvous import (
    AppPartition,
    Mailboxes,
    RdvPartition,
    RoutingPlan,
    build_rdv_partition,
    classification_partition,
    coupled_transfer,
    exchange,
    plan_forward,
    plan_reverse,
    rcb_partition,
)
