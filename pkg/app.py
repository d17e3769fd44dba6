"""
Multi-way Corpus Builder - Streamlit Dashboard
Browse a finished (or failed) run: corpora, per-pair yield, rejection
reasons, stage timings and the language x language corpus matrix
"""

import json
from pathlib import Path

import pandas as pd
import plotly.express as px
import streamlit as st

from config import APP_DESCRIPTION, APP_NAME, APP_VERSION, PAGES, REPORT_FILENAME, UI_THEME
from modules.errors import DataError
from modules.pipeline import RunLayout, read_jsonl, report_stamp
from modules.stats import stats_from_report

st.set_page_config(
    page_title=APP_NAME,
    page_icon="🌐",
    layout="wide",
    initial_sidebar_state="expanded"
)


@st.cache_data
def load_report(path, stamp):
    """`stamp` is the file mtime, so a rerun into the same directory is picked up"""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def pairs_frame(report):
    """One row per language pair with extraction and generation counts"""
    rows = []
    for pair, entry in report.get("pairs", {}).items():
        generation = entry.get("generation", {})
        candidates = entry.get("candidates", 0)
        accepted = generation.get("accepted", 0)
        rows.append({
            "Pair": pair,
            "Candidates": candidates,
            "Exact matches": entry.get("baseline_candidates"),
            "Mean distance": round(entry.get("mean_distance", 0.0), 3),
            "Accepted": accepted,
            "Rejected": generation.get("rejected", 0),
            "Acceptance %": round(100.0 * accepted / candidates, 1) if candidates else 0.0,
        })
    return pd.DataFrame(rows)


def rejection_frame(report):
    rows = []
    for pair, entry in report.get("pairs", {}).items():
        for reason, count in entry.get("generation", {}).get("reasons", {}).items():
            rows.append({"Pair": pair, "Reason": reason, "Count": count})
    return pd.DataFrame(rows)


def render_sidebar():
    """Render sidebar navigation and the run picker"""
    with st.sidebar:
        st.markdown(f"### 🌐 {APP_NAME}")
        st.caption(f"v{APP_VERSION} · {APP_DESCRIPTION}")
        st.markdown("---")
        run_dir = st.text_input("Run directory", value=st.session_state.get("run_dir", "eag_output"))
        st.session_state.run_dir = run_dir
        page = st.radio("Navigate", list(PAGES), format_func=PAGES.get)
    return run_dir, page


def render_overview(report):
    """Render run status, corpora and stage timings"""
    st.header(PAGES["overview"])
    status = report.get("status", "unknown")

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Status", status.upper())
    with col2:
        st.metric("Pivot", report.get("pivot_lang", "-"))
    with col3:
        st.metric("Corpora", len(report.get("corpora", {})))
    with col4:
        accepted = sum(e.get("generation", {}).get("accepted", 0) for e in report.get("pairs", {}).values())
        st.metric("Multi-way examples", f"{accepted:,}")

    failure = report.get("failure")
    if failure:
        where = f" on {failure['pair']}" if failure.get("pair") else ""
        st.error(f"Stage **{failure['stage']}** failed{where}: {failure['message']}")
        if failure.get("checkpoint") is not None:
            st.info(f"Rerunning resumes after candidate {failure['checkpoint']}.")

    st.markdown("---")
    col_left, col_right = st.columns([3, 2])
    with col_left:
        st.subheader("📚 Pivot corpora")
        corpora = pd.DataFrame([
            {"Language": lang, "Corpus": c["corpus_id"], "Pairs": c["pairs"], "Dropped": c["dropped"],
             "Noised positions": report.get("training", {}).get(lang, {}).get("noised_positions")}
            for lang, c in report.get("corpora", {}).items()
        ])
        st.dataframe(corpora, use_container_width=True, hide_index=True)

    with col_right:
        st.subheader("⏱️ Stage timings")
        timings = pd.DataFrame(
            [{"Stage": stage, "Seconds": seconds} for stage, seconds in report.get("timings", {}).items()]
        )
        if timings.empty:
            st.info("No stage finished yet.")
        else:
            fig = px.bar(timings, x="Stage", y="Seconds", color_discrete_sequence=[UI_THEME["primary_color"]])
            fig.update_layout(height=320, margin=dict(t=20, b=20))
            st.plotly_chart(fig, use_container_width=True)

    with st.expander("Configuration"):
        st.json(report.get("config", {}))


def render_pairs(report, run_dir):
    """Render per-pair yield, rejections and a sample of the constructed corpus"""
    st.header(PAGES["pairs"])
    frame = pairs_frame(report)
    if frame.empty:
        st.info("This run has no language pairs yet.")
        return
    st.dataframe(frame, use_container_width=True, hide_index=True)

    col_left, col_right = st.columns(2)
    with col_left:
        st.subheader("Candidates vs accepted")
        melted = frame.melt(id_vars="Pair", value_vars=["Candidates", "Accepted"], var_name="Count", value_name="n")
        fig = px.bar(melted, x="Pair", y="n", color="Count", barmode="group")
        fig.update_layout(height=350)
        st.plotly_chart(fig, use_container_width=True)
    with col_right:
        st.subheader("Rejection reasons")
        reasons = rejection_frame(report)
        if reasons.empty or reasons["Count"].sum() == 0:
            st.success("No hypothesis was rejected.")
        else:
            fig = px.bar(reasons, x="Pair", y="Count", color="Reason")
            fig.update_layout(height=350)
            st.plotly_chart(fig, use_container_width=True)

    st.markdown("---")
    pair = st.selectbox("Sample a constructed corpus", list(frame["Pair"]))
    path = RunLayout(run_dir).multiway(pair)
    if path.exists():
        sample = []
        for record in read_jsonl(path):
            sample.append({k: record[k] for k in ("pivot", "left", "right")})
            if len(sample) == 20:
                break
        st.dataframe(pd.DataFrame(sample), use_container_width=True, hide_index=True)
    else:
        st.info(f"No multi-way corpus at {path}")


def render_stats(report):
    """Render the corpus matrix as a heatmap and a table"""
    st.header(PAGES["stats"])
    available = [name for name in ("constructed", "baseline", "original") if name in report.get("stats", {})]
    if not available:
        st.info("The stats stage has not run.")
        return
    col1, col2 = st.columns([2, 1])
    with col1:
        which = st.radio("Matrix", available, horizontal=True)
    with col2:
        scale = st.selectbox("Units", [1.0, 1e3, 1e6], format_func=lambda s: {1.0: "examples", 1e3: "thousands",
                                                                             1e6: "millions"}[s])
    try:
        matrix = stats_from_report(report, which)
    except DataError as e:
        st.error(str(e))
        return
    st.plotly_chart(matrix.heatmap_figure(title=f"{which.title()} training examples", scale=scale),
                    use_container_width=True)
    st.code(matrix.render_text(scale=scale), language=None)


def main():
    """Main application entry point"""
    run_dir, page = render_sidebar()
    report_path = Path(run_dir) / REPORT_FILENAME
    if not report_path.exists():
        st.title(APP_NAME)
        st.warning(f"No {REPORT_FILENAME} in {run_dir}. Start a run with `python cli.py run --config run.json`.")
        return
    report = load_report(str(report_path), report_stamp(report_path))

    if page == "overview":
        render_overview(report)
    elif page == "pairs":
        render_pairs(report, run_dir)
    elif page == "stats":
        render_stats(report)


if __name__ == "__main__":
    main()
