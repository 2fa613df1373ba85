"""Hybrid analog/digital precoding simulator for multiuser planar-array downlinks."""

__version__ = "0.1.0"

from .analog import AnalogStage, JapcConfig, condition_number, effective_channel, japc  # noqa: E402
from .channel import ArrayGeometry, ChannelSet, ClusterSpec, sample_channel, upa_response  # noqa: E402
from .codebook import Codebook, QuantizerSpec, build_osc, correlation, quantize_phases  # noqa: E402
from .config import MULTI_STREAM_CONFIG, SINGLE_STREAM_CONFIG, SystemConfig, validate_config  # noqa: E402
from .digital import DigitalStage, InitialCombiner, design_digital  # noqa: E402
from .evaluation import SnrGrid  # noqa: E402
from .experiment import Scheme, run_experiment  # noqa: E402

__all__ = [
    "AnalogStage", "JapcConfig", "condition_number", "effective_channel", "japc",
    "ArrayGeometry", "ChannelSet", "ClusterSpec", "sample_channel", "upa_response",
    "Codebook", "QuantizerSpec", "build_osc", "correlation", "quantize_phases",
    "SystemConfig", "validate_config", "SINGLE_STREAM_CONFIG", "MULTI_STREAM_CONFIG",
    "DigitalStage", "InitialCombiner", "design_digital", "SnrGrid", "Scheme", "run_experiment",
]
