"""Variable-exponent Lebesgue norms and the planar Kakeya maximal operator on uniform grids."""

from .errors import DiscretizationError, GeometryError, InputError, KakeyaLabError, NumericalError
from .exponent import (
    ConstantExponent,
    ExponentField,
    PiecewiseExponent,
    SampledExponent,
    SmoothExponent,
    analyze,
    conjugate,
    from_recipe,
    local_log_holder_constant,
    log_holder_exponent,
    log_holder_infinity_constant,
    n_modified_constant,
    oscillation_constant,
    p_range,
    two_square_exponent,
)
from .field import (
    Ball,
    Box,
    DomainSpec,
    RectangleSpec,
    SamplingRule,
    ScalarField2D,
    indicator,
    integrate,
    read_grid,
    sample_average_rect,
    write_grid,
)
from .maximal import (
    BasisDiscretization,
    DyadicMesh,
    LinearizationPlan,
    basis_averages,
    default_basis,
    hl_maximal,
    kakeya_fast,
    kakeya_oracle,
    linearize,
)
from .vnorm import holder_check, luxemburg_norm, modular, norm_product_over_measure

__version__ = "0.1.0"
