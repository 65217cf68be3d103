"""Figure regeneration from simulation artifacts (CSV + manifest files)."""

from .artifacts import SchemaError, read_manifest, read_table
from .render import PlotSpec, render

__version__ = "0.1.0"
