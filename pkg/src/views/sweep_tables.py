"""
Sweep Tables Component - Success rates of a conveyor speed sweep.
"""

import pandas as pd
import plotly.express as px
import streamlit as st


def render_success_rates(rates_df: pd.DataFrame):
    st.header("📊 Success Rate per Conveyor Speed")
    if rates_df is None or rates_df.empty:
        st.info("Sweep results not available.")
        return

    df = rates_df.copy()
    df["speed_mmps"] = (df["speed_mps"] * 1000).round().astype(int)
    df["success_pct"] = df["success_rate"] * 100.0

    fig = px.bar(
        df,
        x="speed_mmps",
        y="success_pct",
        text="successes",
        title="Adjudicated grasp success",
        labels={"speed_mmps": "Conveyor speed (mm/s)", "success_pct": "Success (%)"},
    )
    fig.update_layout(yaxis_range=[0, 100])
    st.plotly_chart(fig, use_container_width=True)
    st.dataframe(df[["speed_mmps", "runs", "successes", "success_pct"]], hide_index=True)


def render_outcome_breakdown(runs_df: pd.DataFrame):
    st.subheader("Outcomes")
    if runs_df is None or runs_df.empty:
        st.info("No runs recorded")
        return
    counts = runs_df.groupby(["object_name", "outcome"]).size().reset_index(name="runs")
    fig = px.bar(counts, x="object_name", y="runs", color="outcome", barmode="stack",
                 labels={"object_name": "Object", "runs": "Runs"})
    st.plotly_chart(fig, use_container_width=True)


def render_rate_table(text: str):
    if text:
        st.code(text, language="text")
