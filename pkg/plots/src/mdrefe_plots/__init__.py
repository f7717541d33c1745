"""Static chart generation for mdrefe result CSVs."""

from .render import plot_sizes, plot_tmr
from .schema import ReportRow, SchemaError, SizesRow, read_report, read_sizes

__version__ = "0.1.0"
