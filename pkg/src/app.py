"""
Dynamic Grasping Run Viewer - Main Streamlit Application

Post-hoc inspection of saved outputs:
- Models: telemetry and run-summary records written by the simulator
- Controllers: data_service.py (cached loading of run directories)
- Views: telemetry traces and sweep rate tables
"""

import os
import sys
import traceback

import streamlit as st

# Add src to path for imports
sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from src.config.scenario_config import parse_config
from src.controllers.data_service import RunDataService
from src.controllers.simulation_controller import SCENARIO_FILE
from src.views import (
    render_outcome_breakdown,
    render_rate_table,
    render_run_summary,
    render_success_rates,
    render_telemetry_chart,
)

# Page configuration
st.set_page_config(
    page_title="Dynamic Grasping Runs",
    page_icon="🤖",
    layout="wide",
    initial_sidebar_state="expanded",
)


def render_run(service: RunDataService, run: str):
    c_e = 0.7
    scenario_path = os.path.join(service.output_root, run, SCENARIO_FILE)
    if os.path.exists(scenario_path):
        try:
            c_e = parse_config(scenario_path).params.c_e
        except Exception as e:
            st.warning(f"Could not read scenario for run '{run}': {e}")

    render_run_summary(service.get_run_summary(run))
    st.markdown("---")
    render_telemetry_chart(service.get_telemetry(run), c_e)


def render_sweep(service: RunDataService, sweep: str):
    render_success_rates(service.get_success_rates(sweep))
    render_outcome_breakdown(service.get_sweep_runs(sweep))
    render_rate_table(service.get_rate_table(sweep))


def main():
    st.title("🤖 Dynamic Grasping Runs")
    st.markdown("---")

    output_root = st.sidebar.text_input("Output directory", value="runs")
    service = RunDataService(output_root)

    runs = service.list_runs()
    sweeps = service.list_sweeps()
    if not runs and not sweeps:
        st.error(f"No run outputs found under '{output_root}'.")
        st.info("Create some with: python scripts/dyngrasp.py run --config config/scenarios/conveyor.yaml")
        return

    tab1, tab2 = st.tabs(["📈 Runs", "📊 Sweeps"])

    with tab1:
        if runs:
            selected_run = st.selectbox("Select Run", runs)
            try:
                render_run(service, selected_run)
            except Exception as e:
                st.error(f"Error loading run '{selected_run}': {e}")
                st.error(f"Traceback: {traceback.format_exc()}")
        else:
            st.info("No single runs found.")

    with tab2:
        if sweeps:
            selected_sweep = st.selectbox("Select Sweep", sweeps)
            try:
                render_sweep(service, selected_sweep)
            except Exception as e:
                st.error(f"Error loading sweep '{selected_sweep}': {e}")
        else:
            st.info("No sweeps found.")


if __name__ == "__main__":
    main()
