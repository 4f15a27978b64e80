"""Numerical laboratory for large-radius ball-volume inequalities.

Volumes and boundary volumes of unions/intersections of equal balls via
nearest/farthest Voronoi decomposition and a recursive radial-volume ODE,
mean widths of convex hulls, Laurent coefficients of volume functions at
infinity, and threshold scans for the expansion inequalities.
"""

__version__ = "0.1.0"

from .configurations import (DistanceMatrix, PointConfiguration, are_congruent,
                             distance_matrix, embed, is_expansion,
                             load_configuration, random_expansion,
                             save_configuration)
from .polyhedra import (FaceData, Halfspace, PolyhedralSet, complement_set,
                        contains, convex_hull_2d, face_data, support_value)
from .meanwidth import (CalibrationConstant, EdgeCurvatureData, MeanWidthResult,
                        calibrate, edge_curvatures_3d, mean_width_edge_sum_3d,
                        mean_width_exact_2d, mean_width_quadrature)
from .truncated_volume import (BallConstant, FitWindow, RadialVolumeProfile,
                               StepControl, check_ww_lemma, mc_truncated_volume,
                               unit_ball_volume, volume_profile, w_prime_at_zero)
from .ball_volumes import (BallSystem, BallSystemVolumes, VoronoiRegion,
                           boundary_volume, farthest_voronoi, intersection_volume,
                           mc_ball_volume, nearest_voronoi, union_volume)
from .asymptotics import (CheckReport, LaurentFit, RadiusGrid, ThresholdResult,
                          kp_threshold, laurent_fit, mean_width_difference,
                          reference_mean_width,
                          verify_capoyleas_pach, verify_csikos,
                          verify_lift_identity, verify_ww_proposition)

__all__ = [
    "__version__",
    "PointConfiguration", "DistanceMatrix", "distance_matrix", "is_expansion",
    "are_congruent", "embed", "random_expansion", "load_configuration",
    "save_configuration",
    "Halfspace", "PolyhedralSet", "FaceData", "contains", "complement_set",
    "face_data", "support_value", "convex_hull_2d",
    "MeanWidthResult", "EdgeCurvatureData", "CalibrationConstant",
    "mean_width_quadrature", "mean_width_exact_2d", "edge_curvatures_3d",
    "mean_width_edge_sum_3d", "calibrate",
    "RadialVolumeProfile", "BallConstant", "StepControl", "FitWindow",
    "unit_ball_volume", "volume_profile", "w_prime_at_zero", "check_ww_lemma",
    "mc_truncated_volume",
    "VoronoiRegion", "BallSystemVolumes", "BallSystem", "nearest_voronoi",
    "farthest_voronoi", "union_volume", "intersection_volume", "boundary_volume",
    "mc_ball_volume",
    "LaurentFit", "CheckReport", "RadiusGrid", "ThresholdResult", "laurent_fit",
    "mean_width_difference", "reference_mean_width",
    "verify_capoyleas_pach", "verify_csikos",
    "verify_ww_proposition", "verify_lift_identity", "kp_threshold",
]
