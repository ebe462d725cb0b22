"""Compressive estimation and tracking of sparse mm-wave spatial channels."""
from .channel import assemble_channel, beamformed_amplitudes, impulse_response, path_gain_db
from .estimator import EstimateSet, EstimatorConfig, PathEstimate, estimate, track
from .geometry import ArrayConfig, CanyonScene, MobileState, Path, SpatialFrequency, steering_vector, trace_paths
from .sounding import generate_weights, make_feedback, measure, select_rx_weights

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig", "CanyonScene", "EstimateSet", "EstimatorConfig", "MobileState", "Path", "PathEstimate",
    "SpatialFrequency", "assemble_channel", "beamformed_amplitudes", "estimate", "generate_weights",
    "impulse_response", "make_feedback", "measure", "path_gain_db", "select_rx_weights", "steering_vector",
    "trace_paths", "track",
]
