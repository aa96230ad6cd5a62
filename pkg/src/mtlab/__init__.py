"""mtlab: numerical companion for Moser-Trudinger inequalities on hyperbolic
surfaces.

Warped-surface geometry, isoperimetric comparison profiles, the comparison
ODE, radial spectral gaps, symmetric rearrangement and the test families
used to probe the sharpness of the MT exponent.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .geom import (
    GridFunction,
    Segment,
    Topology,
    Warp,
    WarpedSurface,
    collar_surface,
    curvature_at,
    cusp_surface,
    dirichlet_energy,
    disk_area,
    disk_perimeter,
    euclidean_disk,
    flat_cylinder,
    hyperbolic_disk,
    integrate,
    round_sphere,
    t_derivative,
)
from .profile import (
    DegeneratePlateauWarning,
    PiecewiseProfile,
    build_g,
    make_params,
    measure_profile,
    positive_curvature_clip,
    profile_dominates,
    small_volume_bound,
)
from .comparison import (
    ComparisonDisk,
    DistortionReport,
    as_warped_surface,
    closed_form_f,
    conformal_distortion,
    ode_residual,
    solve_f,
)
from .spectral import Boundary, SpectralEstimate, cheeger_buser_report, radial_gap
from .rearrange import (
    DistributionSummary,
    coarea_lower_bound,
    distribution,
    polya_szego_report,
    rearrange_decreasing,
    rearrange_two_sided,
)
from .functionals import (
    hardy_report,
    lp_norm,
    markov_report,
    median_average,
    mt_functional,
    quadratic_shift_bound,
)
from .families import (
    FamilySpec,
    collar_blowup_scan,
    collar_member,
    cusp_member,
    extrapolate_limit,
    moser_member,
    mt_scan,
)
