"""Radio environment maps from drone-collected Wi-Fi beacon scans."""

__version__ = "0.1.0"

from .core import BeaconSample, Dataset, Position, ValidationError, VolumeSpec  # noqa: E402

__all__ = ["BeaconSample", "Dataset", "Position", "ValidationError", "VolumeSpec",
           "__version__"]
