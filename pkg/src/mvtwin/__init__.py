"""Reconstruct MV-side transformer waveforms from LV-side measurements."""

__version__ = "0.1.0"

from .errors import (AlignmentError, ConfigurationError, InsufficientDataError,  # noqa: E402
                     ParseError)
from .twin import DigitalTwin, TransformerParams  # noqa: E402
from .waveform import SampledWaveform  # noqa: E402

__all__ = [
    "AlignmentError", "ConfigurationError", "DigitalTwin", "InsufficientDataError",
    "ParseError", "SampledWaveform", "TransformerParams", "__version__",
]
