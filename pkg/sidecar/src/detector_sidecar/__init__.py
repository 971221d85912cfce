"""HTTP sidecar exposing an open-vocabulary object detector."""

from .app import create_app
from .detector import ColorKeyDetector, load_weights

__version__ = "0.1.0"

__all__ = ["ColorKeyDetector", "create_app", "load_weights", "__version__"]
