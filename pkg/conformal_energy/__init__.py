"""Conformal energy of circle homeomorphisms and its disk-extension counterparts."""
from conformal_energy.circle_maps import (
    AngleMap,
    MapDiagnostics,
    compose,
    eval_angle,
    identity,
    invert,
    make_moebius,
    make_pwl,
    make_square,
    rotation,
    validate,
)
from conformal_energy.disk_extension import (
    boundary_fourier,
    deformation_bound_curve,
    deformation_limit,
    douglas_energy,
    extension_energy,
    poisson_field,
)
from conformal_energy.energy import (
    EnergyEstimate,
    QuadratureSpec,
    bilip_bounds_report,
    conformal_energy,
    energy_oracle,
    invariance_gap,
)
from conformal_energy.errors import ConformalEnergyError
from conformal_energy.moebius_bounds import (
    cr_distortion_scan,
    cross_ratio,
    identity_gauge,
    linear_gauge,
    qm_energy_bound,
    tabulated_gauge,
)
from conformal_energy.variational import (
    Perturbation,
    critical_residual,
    descend,
    first_variation,
    residual_profile,
    u_form_residual,
)

__version__ = "0.1.0"
