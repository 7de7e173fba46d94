"""carnotgg package exports."""

from .models import (
    BoundarySample,
    BoundarySampleSet,
    BoxRegion,
    Criterion,
    DomainSpec,
    GaussGreenReport,
    GroupPoint,
    HorizontalField,
    NormKind,
    QuadratureKind,
    QuadratureSpec,
    ScalarField,
    ScenarioKind,
)
from .algebra import StratifiedAlgebra, load_preset, preset_names
from .metric import HomogeneousNorm, haar_volume_mc
from .quadrature import QuadratureRule, integrate
from .hcalc import (
    divergence_integral,
    horizontal_divergence,
    horizontal_gradient,
    sub_laplacian,
    x_derivative,
)
from .mollify import Mollifier
from .domains import (
    boundary_integral,
    build_domain,
    h_perimeter,
    horizontal_normal,
    sample_boundary,
    volume_integral,
)
from .gaussgreen import (
    verify_divergence_free_example,
    verify_gauss_green,
    verify_half_density,
    verify_trace_bound,
    verify_trace_locality,
)
from .scenario import RunConfig, ScenarioConfig, load_config
from .runner import ScenarioRunner
from .output import CsvReportWriter, JsonReportWriter, PrintReportWriter, ReportWriter

__all__ = [
    "BoundarySample",
    "BoundarySampleSet",
    "BoxRegion",
    "Criterion",
    "DomainSpec",
    "GaussGreenReport",
    "GroupPoint",
    "HorizontalField",
    "NormKind",
    "QuadratureKind",
    "QuadratureSpec",
    "ScalarField",
    "ScenarioKind",
    "StratifiedAlgebra",
    "load_preset",
    "preset_names",
    "HomogeneousNorm",
    "haar_volume_mc",
    "QuadratureRule",
    "integrate",
    "x_derivative",
    "horizontal_gradient",
    "horizontal_divergence",
    "sub_laplacian",
    "divergence_integral",
    "Mollifier",
    "build_domain",
    "sample_boundary",
    "horizontal_normal",
    "boundary_integral",
    "h_perimeter",
    "volume_integral",
    "verify_gauss_green",
    "verify_half_density",
    "verify_trace_bound",
    "verify_trace_locality",
    "verify_divergence_free_example",
    "RunConfig",
    "ScenarioConfig",
    "load_config",
    "ScenarioRunner",
    "ReportWriter",
    "PrintReportWriter",
    "CsvReportWriter",
    "JsonReportWriter",
]
