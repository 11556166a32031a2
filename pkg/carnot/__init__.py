# carnot/__init__.py
from .nilpotent import (DegreeScaling, GradedLieAlgebra, GroupElement, bch, bracket, dilation_automorphism,
                        group_inv, group_mul, identity, law_k1, law_k2, scaled_algebra, scaling_from_parameters)
from .filtration import (AdaptedFrame, FiltrationSpec, Layer, ValidationReport, adapted_frame, check_filtration,
                         dilation, exp_chart, exp_chart_inverse, levi_constants)
from .dnc import (DncFiber, DncOff, TubularData, curve_class, dnc2_chart, dnc_chart, dnc_map, dnc_smooth_fn,
                  chart_transition_test, lambda_relation_test, quotient_fiber_check)
from .groupoid import (CarnotContext, OscArrow, PairArrow, compose, convergence_sweep, inverse,
                       multiparameter_law, rescaled_product, source, target, unit, zoom)

__all__ = [
    "DegreeScaling", "GradedLieAlgebra", "GroupElement", "bch", "bracket", "dilation_automorphism",
    "group_inv", "group_mul", "identity", "law_k1", "law_k2", "scaled_algebra", "scaling_from_parameters",
    "AdaptedFrame", "FiltrationSpec", "Layer", "ValidationReport", "adapted_frame", "check_filtration",
    "dilation", "exp_chart", "exp_chart_inverse", "levi_constants",
    "DncFiber", "DncOff", "TubularData", "curve_class", "dnc2_chart", "dnc_chart", "dnc_map", "dnc_smooth_fn",
    "chart_transition_test", "lambda_relation_test", "quotient_fiber_check",
    "CarnotContext", "OscArrow", "PairArrow", "compose", "convergence_sweep", "inverse",
    "multiparameter_law", "rescaled_product", "source", "target", "unit", "zoom",
]
