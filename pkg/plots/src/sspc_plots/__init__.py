"""Figure generation from sspc closed-loop trace/metrics CSV files."""

from .frames import SchemaError, TraceFrame, load_metrics, load_trace
from .render import plot_residuals, plot_traces

__all__ = ["SchemaError", "TraceFrame", "load_metrics", "load_trace",
           "plot_residuals", "plot_traces"]
