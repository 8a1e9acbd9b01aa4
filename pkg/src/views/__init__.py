"""
Views package - Streamlit UI components.
"""

from .telemetry_chart import (
    render_telemetry_chart,
    render_run_summary,
)
from .sweep_tables import (
    render_success_rates,
    render_outcome_breakdown,
    render_rate_table,
)

__all__ = [
    "render_telemetry_chart",
    "render_run_summary",
    "render_success_rates",
    "render_outcome_breakdown",
    "render_rate_table",
]
