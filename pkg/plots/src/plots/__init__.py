"""Image rendering for the simulation CLI's figure datasets."""

from .render import SchemaError, load_rows, render as render_figure

__all__ = ["SchemaError", "load_rows", "render_figure"]
__version__ = "0.1.0"
