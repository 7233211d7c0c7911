"""Feature-pyramid exporter: backbone activations to D3FP files."""

from .backbones import ExportSpec, ShapeMismatch, UnknownBackbone
from .d3fp import write_d3fp
from .export import export

__version__ = "0.1.0"
