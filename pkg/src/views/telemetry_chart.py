"""
Telemetry Chart Component - Interactive Plotly traces of one grasp attempt.
"""

import pandas as pd
import plotly.express as px
import streamlit as st


def render_telemetry_chart(telemetry_df: pd.DataFrame, c_e: float = 0.7):
    """
    Render the per-tick control quantities of a run as stacked Plotly charts.
    Expects the telemetry CSV columns: t_s, lin_err_m, rot_err_rad,
    est_speed_mps, success_pred, feedback_ok, executed
    """
    st.header("📈 Control Loop Telemetry")
    if telemetry_df is None or telemetry_df.empty:
        st.info("Telemetry not available.")
        return

    df = telemetry_df.sort_values("t_s")
    lost = df[df["feedback_ok"] == 0]

    errors = px.line(
        df,
        x="t_s",
        y=["lin_err_m", "rot_err_rad"],
        title="Grasp pose error",
        labels={"t_s": "Time (s)", "value": "Error", "variable": "Quantity"},
    )
    speed = px.line(
        df,
        x="t_s",
        y="est_speed_mps",
        title="Estimated target speed",
        labels={"t_s": "Time (s)", "est_speed_mps": "Speed (m/s)"},
    )
    success = px.line(
        df,
        x="t_s",
        y="success_pred",
        title="Predicted grasp success",
        labels={"t_s": "Time (s)", "success_pred": "Success prediction"},
    )
    success.add_hline(y=c_e, line_dash="dash", line_color="gray", annotation_text="execution threshold")

    for fig in (errors, speed, success):
        if not lost.empty:
            fig.add_vrect(
                x0=float(lost["t_s"].min()),
                x1=float(lost["t_s"].max()),
                fillcolor="red",
                opacity=0.08,
                line_width=0,
            )
        fig.update_layout(hovermode="x unified", xaxis_title="Time (s)")
        st.plotly_chart(fig, use_container_width=True)

    executed = df[df["executed"] == 1]
    if not executed.empty:
        st.caption(f"Grasp executed at t = {float(executed['t_s'].iloc[0]):.3f} s")

    st.download_button(
        label="⬇️ Download CSV",
        data=df.to_csv(index=False).encode("utf-8"),
        file_name="telemetry.csv",
        mime="text/csv",
    )


def render_run_summary(summary_df: pd.DataFrame):
    st.subheader("Run Summary")
    if summary_df is None or summary_df.empty:
        st.info("Run summary not available")
        return
    row = summary_df.iloc[0]
    col1, col2, col3 = st.columns(3)
    with col1:
        st.metric("Outcome", str(row["outcome"]))
        if pd.notna(row.get("time_to_execute_s")):
            st.metric("Time to Execute", f"{row['time_to_execute_s']:.2f} s")
    with col2:
        st.metric("Peak Linear Error", f"{row['peak_lin_err_m'] * 1000:.1f} mm")
        st.metric("Final Linear Error", f"{row['final_lin_err_m'] * 1000:.1f} mm")
    with col3:
        st.metric("Feedback Lost", f"{row['loss_duration_s']:.2f} s")
        st.metric("Dropped Frames", int(row.get("dropped_frames", 0)))
