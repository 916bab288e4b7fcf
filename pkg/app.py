import streamlit as st
import pandas as pd
import numpy as np
import plotly.express as px
import plotly.graph_objects as go
from datetime import datetime
from dataclasses import replace
from io import BytesIO

from data_models import (
    EstimatorParameters, GRAPH_FAMILIES, ReliabilityError, InputError, generate_edges, parse_edge_list
)
from multigraph import Digraph, min_cut_value
from estimators import ReliabilityEngine
from detapprox import DeterministicApproximator
from cut_enum import enumerate_alpha_min_cuts
from tutte import approx_tutte_leading, estimate_delta_t, exact_tutte
import oracle
from cli import cuts_table
from db_operations import (
    seed_sample_graphs, get_graphs_df, load_graph, save_graph, delete_graph,
    save_estimation_run, get_estimation_history, get_audit_logs
)
from database import init_db

init_db()
seed_sample_graphs()

st.set_page_config(
    page_title="Modul Analisis Reliabilitas Jaringan",
    page_icon="🕸️",
    layout="wide",
    initial_sidebar_state="expanded"
)

PROBLEM_LABELS = {
    'rel': "All-terminal (graf terputus)",
    'kconn': "Gagal k-terhubung",
    'multiterm': "Multiterminal",
    'rway': "Minimal r komponen",
    'orient': "Orientasi acak",
}

def init_session_state():
    if 'graphs_df' not in st.session_state:
        st.session_state.graphs_df = get_graphs_df()
    if 'params' not in st.session_state:
        st.session_state.params = EstimatorParameters()
    if 'last_report' not in st.session_state:
        st.session_state.last_report = None

def refresh_data():
    st.session_state.graphs_df = get_graphs_df()

def select_graph(key: str):
    names = st.session_state.graphs_df['name'].tolist()
    if not names:
        st.warning("Belum ada graf. Tambahkan graf di menu Data Graf.")
        return None, None
    name = st.selectbox("Pilih graf:", names, key=key)
    return name, load_graph(name)

def render_sidebar():
    with st.sidebar:
        st.title("Navigasi")

        page = st.radio(
            "Pilih Menu:",
            ["Dashboard", "Data Graf", "Estimasi Reliabilitas", "Daftar Cut",
             "Aproksimasi Deterministik", "Polinomial Tutte", "Kurva Reliabilitas",
             "Riwayat Estimasi", "Audit Trail", "Pengaturan"],
            label_visibility="collapsed"
        )

        st.divider()

        st.markdown("### Status Sistem")
        st.metric("Total Graf", len(st.session_state.graphs_df))
        params = st.session_state.params
        st.metric("Epsilon / Eta", f"{params.epsilon} / {params.eta}")
        st.caption(f"Seed: {params.seed}, metode: {params.method}")

        return page

def render_dashboard():
    st.title("Dashboard Reliabilitas")
    st.markdown("Ringkasan graf tersimpan dan estimasi terakhir")

    graphs_df = st.session_state.graphs_df
    history = get_estimation_history(limit=200)

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Total Graf", len(graphs_df))
    with col2:
        st.metric("Total Estimasi", len(history))
    with col3:
        if not history.empty:
            st.metric("Metode Terbanyak", history['method'].mode().iloc[0])
        else:
            st.metric("Metode Terbanyak", "Belum dihitung")
    with col4:
        report = st.session_state.last_report
        if report:
            st.metric("Estimasi Terakhir", f"{report['estimate']:.4g}")
        else:
            st.metric("Estimasi Terakhir", "Belum dihitung")

    st.divider()

    col_left, col_right = st.columns(2)
    with col_left:
        st.subheader("Ukuran Graf")
        if not graphs_df.empty:
            fig_size = px.scatter(graphs_df, x='n', y='m', color='family', hover_name='name',
                                  title="Jumlah simpul vs jumlah sisi")
            fig_size.update_layout(height=300)
            st.plotly_chart(fig_size, use_container_width=True)
    with col_right:
        st.subheader("Metode Estimasi")
        if not history.empty:
            counts = history['method'].value_counts()
            fig_methods = px.pie(values=counts.values, names=counts.index, title="Distribusi Metode",
                                 color_discrete_sequence=px.colors.qualitative.Set2)
            fig_methods.update_layout(height=300)
            st.plotly_chart(fig_methods, use_container_width=True)
        else:
            st.info("Belum ada estimasi. Jalankan estimasi untuk mengisi riwayat.")

def render_graphs_page():
    st.title("Data Graf")
    st.markdown("Kelola multigraf beserta probabilitas kegagalan tiap sisi")

    tab1, tab2, tab3 = st.tabs(["Daftar Graf", "Generator", "Edit Sisi"])

    with tab1:
        st.dataframe(st.session_state.graphs_df, use_container_width=True, hide_index=True)
        names = st.session_state.graphs_df['name'].tolist()
        if names:
            col1, col2 = st.columns([3, 1])
            with col1:
                to_delete = st.selectbox("Hapus graf:", names, key="delete_graph")
            with col2:
                st.write("")
                if st.button("Hapus", type="secondary"):
                    if delete_graph(to_delete):
                        st.success(f"Graf {to_delete} dihapus.")
                        refresh_data()
                        st.rerun()
                    else:
                        st.error("Gagal menghapus graf.")

    with tab2:
        st.subheader("Buat Graf dari Keluarga Standar")
        with st.form("generate_graph"):
            col1, col2 = st.columns(2)
            with col1:
                family = st.selectbox("Keluarga:", GRAPH_FAMILIES)
                n = st.number_input("Jumlah simpul (n):", min_value=2, max_value=200, value=6)
                p = st.number_input("Probabilitas gagal sisi:", min_value=0.0, max_value=1.0, value=0.01,
                                    format="%.6f")
            with col2:
                bundle = st.number_input("Paralel per sisi (bundled-cycle):", min_value=1, max_value=20, value=2)
                m = st.number_input("Jumlah sisi (random):", min_value=1, max_value=2000, value=12)
                seed = st.number_input("Seed:", min_value=0, value=0)
            name = st.text_input("Nama graf:", value=f"{family}-{n}")
            submitted = st.form_submit_button("Simpan Graf", type="primary")
            if submitted:
                try:
                    edges, directed = generate_edges(family, int(n), float(p), int(bundle), int(m), int(seed))
                except InputError as e:
                    st.error(str(e))
                else:
                    if save_graph(name, int(n), edges, family=family, directed=directed) is not None:
                        st.success(f"Graf {name} disimpan ({len(edges)} sisi).")
                        refresh_data()
                    else:
                        st.error("Gagal menyimpan graf.")

    with tab3:
        st.subheader("Edit Sisi Graf")
        name, g = select_graph("edit_graph")
        if g is not None:
            edges_df = pd.DataFrame(g.edges, columns=['u', 'v', 'p_fail'])
            edited = st.data_editor(edges_df, num_rows="dynamic", use_container_width=True)
            if st.button("Simpan Perubahan", type="primary"):
                try:
                    edges = parse_edge_list(edited[['u', 'v', 'p_fail']].values.tolist())
                    edges = [(int(u), int(v), float(p)) for u, v, p in edges]
                    row = st.session_state.graphs_df[st.session_state.graphs_df['name'] == name].iloc[0]
                    save_graph(name, g.n, edges, family=row['family'], directed=isinstance(g, Digraph))
                    st.success("Perubahan disimpan.")
                    refresh_data()
                except (InputError, ValueError) as e:
                    st.error(f"Data sisi tidak valid: {e}")

def render_estimation_page():
    st.title("Estimasi Reliabilitas")
    st.markdown("Estimasi probabilitas kegagalan dengan jaminan galat relatif")

    name, g = select_graph("estimate_graph")
    if g is None:
        return
    params = st.session_state.params
    engine = ReliabilityEngine(params)

    if isinstance(g, Digraph):
        problem = 'eulerian'
        st.info("Graf berarah: estimasi kegagalan keterhubungan kuat (Eulerian).")
    else:
        problem = st.selectbox("Masalah:", list(PROBLEM_LABELS), format_func=PROBLEM_LABELS.get)

    col1, col2 = st.columns(2)
    with col1:
        k = st.number_input("k:", min_value=1, max_value=20, value=2, disabled=problem != 'kconn')
        r = st.number_input("r:", min_value=2, max_value=g.n, value=min(3, g.n), disabled=problem != 'rway')
    with col2:
        terminals = st.multiselect("Terminal:", list(range(g.n)), default=[0, g.n - 1],
                                   disabled=problem != 'multiterm')
        compare = st.checkbox("Bandingkan dengan nilai eksak (graf kecil)", value=g.m <= 20)

    if st.button("Jalankan Estimasi", type="primary"):
        with st.spinner("Menghitung..."):
            try:
                if problem == 'rel':
                    estimate = engine.estimate_fail(g)
                elif problem == 'kconn':
                    estimate = engine.estimate_kconn_failure(g, int(k))
                elif problem == 'multiterm':
                    estimate = engine.estimate_multiterminal(g, terminals)
                elif problem == 'rway':
                    estimate = engine.estimate_rway_failure(g, int(r))
                elif problem == 'orient':
                    estimate = engine.estimate_orientation_failure(g)
                else:
                    estimate = engine.estimate_eulerian_strong_failure(g)
            except ReliabilityError as e:
                st.error(f"Estimasi ditolak: {e}")
                return

        report = estimate.to_report(timing=True)
        st.session_state.last_report = report
        save_estimation_run(name, report, params.to_dict(), graph_name=name)

        col1, col2, col3, col4 = st.columns(4)
        with col1:
            st.metric("Estimasi Gagal", f"{estimate.value:.6g}")
        with col2:
            st.metric("Metode", estimate.method)
        with col3:
            st.metric("p_c", f"{estimate.p_c:.4g}" if estimate.p_c is not None else "-")
        with col4:
            st.metric("Waktu", f"{estimate.wall_ms:.0f} ms")

        if compare:
            try:
                if problem == 'rel':
                    exact = oracle.exact_fail(g)
                elif problem == 'kconn':
                    exact = oracle.exact_kconn_fail(g, int(k))
                elif problem == 'multiterm':
                    exact = oracle.exact_multiterminal_fail(g, terminals)
                elif problem == 'rway':
                    exact = oracle.exact_rway_fail(g, int(r))
                elif problem == 'orient':
                    exact = oracle.exact_orientation_fail(g)
                else:
                    exact = oracle.exact_strong_fail(g)
                rel_error = abs(estimate.value - exact) / exact if exact > 0 else 0.0
                col1, col2 = st.columns(2)
                with col1:
                    st.metric("Nilai Eksak", f"{exact:.6g}")
                with col2:
                    st.metric("Galat Relatif", f"{rel_error:.4f}",
                              delta="dalam epsilon" if rel_error <= params.epsilon else "di luar epsilon")
            except ReliabilityError as e:
                st.warning(f"Oracle eksak tidak tersedia: {e}")

        st.json(report)

def render_cuts_page():
    st.title("Daftar Cut")
    st.markdown("Enumerasi semua cut bernilai paling banyak alpha kali cut minimum")

    name, g = select_graph("cuts_graph")
    if g is None or isinstance(g, Digraph):
        return
    col1, col2 = st.columns(2)
    with col1:
        alpha = st.number_input("Alpha:", min_value=1.0, max_value=4.0, value=1.0, step=0.25)
    with col2:
        use_oracle = st.checkbox("Gunakan enumerasi eksak", value=g.n <= 10)

    if st.button("Enumerasi Cut", type="primary"):
        params = st.session_state.params
        try:
            if use_oracle:
                cuts = oracle.exact_cut_list(g, alpha)
            else:
                cuts = enumerate_alpha_min_cuts(g, None, alpha, params.eta, seed=params.seed,
                                                schedule=params.trial_schedule)
        except ReliabilityError as e:
            st.error(str(e))
            return
        st.metric("Cut minimum", min_cut_value(g).value)
        st.metric("Jumlah cut", len(cuts))
        table = cuts_table(cuts, g.n)
        st.dataframe(table, use_container_width=True, hide_index=True)
        if not table.empty:
            fig = px.histogram(table, x='value', title="Distribusi nilai cut")
            st.plotly_chart(fig, use_container_width=True)

def render_detapprox_page():
    st.title("Aproksimasi Deterministik")
    st.markdown("Jumlah probabilitas cut (heuristik) dan inklusi-eksklusi terpotong bersertifikat")

    name, g = select_graph("det_graph")
    if g is None or isinstance(g, Digraph):
        return
    approximator = DeterministicApproximator(st.session_state.params)

    if st.button("Hitung", type="primary"):
        rows = []
        for label, run in (("Heuristik", approximator.heuristic_sum_fail), ("PAS", approximator.pas_fail)):
            try:
                estimate = run(g)
                rows.append({'Metode': label, 'Estimasi': estimate.value,
                             'Batas Galat': estimate.certified_error_bound,
                             'Jumlah Cut': estimate.cuts_enumerated, 'Delta': estimate.delta})
            except ReliabilityError as e:
                st.warning(f"{label}: {e}")
        if g.m <= 20:
            rows.append({'Metode': 'Eksak', 'Estimasi': oracle.exact_fail(g), 'Batas Galat': 0.0,
                         'Jumlah Cut': None, 'Delta': None})
        if rows:
            st.dataframe(pd.DataFrame(rows), use_container_width=True, hide_index=True)

def render_tutte_page():
    st.title("Polinomial Tutte")
    st.markdown("Aproksimasi T(G; x, y) untuk y > 1 melalui model kegagalan sisi dengan probabilitas 1/y")

    name, g = select_graph("tutte_graph")
    if g is None or isinstance(g, Digraph):
        return
    col1, col2 = st.columns(2)
    with col1:
        x = st.number_input("x:", value=2.0)
    with col2:
        y = st.number_input("y:", min_value=1.0001, value=2.0)

    if st.button("Hitung Tutte", type="primary"):
        params = st.session_state.params
        try:
            leading = approx_tutte_leading(g, x, y)
            refined = estimate_delta_t(g, x, y, params.epsilon, params.eta, params.seed,
                                       replace(params, method="cutenum"))
        except ReliabilityError as e:
            st.error(f"Di luar rezim: {e}")
            return
        col1, col2, col3 = st.columns(3)
        with col1:
            st.metric("T' orde pertama", f"{leading.t_prime:.6g}")
        with col2:
            st.metric("T' dengan koreksi", f"{refined.t_prime:.6g}")
        with col3:
            st.metric("log |T|", f"{refined.log_abs_t:.6g}")
        if g.m <= 16:
            st.metric("T eksak", f"{exact_tutte(g, x, y):.6g}")
        st.json(refined.to_details())

def render_curve_page():
    st.title("Kurva Reliabilitas")
    st.markdown("Reliabilitas all-terminal sebagai fungsi probabilitas gagal sisi")

    name, g = select_graph("curve_graph")
    if g is None or isinstance(g, Digraph):
        return
    col1, col2, col3 = st.columns(3)
    with col1:
        p_min = st.number_input("p minimum:", min_value=1e-6, max_value=0.99, value=0.001, format="%.6f")
    with col2:
        p_max = st.number_input("p maksimum:", min_value=1e-6, max_value=0.99, value=0.3, format="%.6f")
    with col3:
        points = st.number_input("Jumlah titik:", min_value=2, max_value=40, value=10)

    if st.button("Gambar Kurva", type="primary"):
        probabilities = np.geomspace(p_min, max(p_min, p_max), int(points))
        with st.spinner("Menghitung kurva..."):
            curve = ReliabilityEngine(st.session_state.params).reliability_curve(g, probabilities)
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=curve['p'], y=curve['fail'], mode='lines+markers', name='FAIL(p)',
                                 text=curve['method']))
        fig.update_layout(title="Probabilitas kegagalan", xaxis_type="log", yaxis_type="log",
                          xaxis_title="p", yaxis_title="FAIL(p)")
        st.plotly_chart(fig, use_container_width=True)
        st.dataframe(curve, use_container_width=True, hide_index=True)

def render_history_page():
    st.title("Riwayat Estimasi")
    st.markdown("Semua estimasi yang tersimpan")

    col1, col2 = st.columns([2, 1])
    with col1:
        problem = st.selectbox("Filter masalah:", ["Semua"] + list(PROBLEM_LABELS) + ['eulerian', 'tutte'])
    with col2:
        limit = st.number_input("Jumlah baris:", min_value=10, max_value=1000, value=100)
    history = get_estimation_history(None if problem == "Semua" else problem, int(limit))

    if history.empty:
        st.info("Belum ada riwayat estimasi.")
        return
    st.dataframe(
        history,
        use_container_width=True,
        hide_index=True,
        column_config={
            "run_date": st.column_config.DatetimeColumn("Waktu", format="DD/MM/YYYY HH:mm:ss"),
            "estimate": st.column_config.NumberColumn("Estimasi", format="%.6g"),
        }
    )

    output = BytesIO()
    history.to_excel(output, index=False, engine='openpyxl')
    output.seek(0)

    st.download_button(
        label="Download Riwayat (Excel)",
        data=output,
        file_name=f"estimation_history_{datetime.now().strftime('%Y%m%d_%H%M%S')}.xlsx",
        mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"
    )

def render_audit_page():
    st.title("Audit Trail")
    st.markdown("Riwayat perubahan data graf")

    col1, col2 = st.columns([2, 1])
    with col1:
        entity_filter = st.selectbox("Filter berdasarkan entitas:", ["Semua", "Graph", "Corpus"])
    with col2:
        limit = st.number_input("Jumlah log:", min_value=10, max_value=500, value=100)

    entity_type = None if entity_filter == "Semua" else entity_filter
    audit_logs = get_audit_logs(entity_type=entity_type, limit=limit)

    if len(audit_logs) == 0:
        st.info("Belum ada log aktivitas.")
    else:
        st.dataframe(
            audit_logs,
            use_container_width=True,
            hide_index=True,
            column_config={
                "timestamp": st.column_config.DatetimeColumn("Waktu", format="DD/MM/YYYY HH:mm:ss"),
                "action": "Aksi",
                "entity_type": "Entitas",
                "entity_id": "ID",
                "before": "Sebelum",
                "after": "Sesudah"
            }
        )

        output = BytesIO()
        audit_logs.to_excel(output, index=False, engine='openpyxl')
        output.seek(0)

        st.download_button(
            label="Download Audit Log (Excel)",
            data=output,
            file_name=f"audit_log_{datetime.now().strftime('%Y%m%d_%H%M%S')}.xlsx",
            mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet"
        )

def render_settings_page():
    st.title("Pengaturan")
    st.markdown("Parameter estimator")

    params = st.session_state.params
    with st.form("settings"):
        col1, col2 = st.columns(2)
        with col1:
            epsilon = st.number_input("Epsilon (galat relatif):", min_value=0.001, max_value=0.99,
                                      value=params.epsilon, format="%.4f")
            eta = st.number_input("Eta (probabilitas gagal):", min_value=1e-6, max_value=0.5,
                                  value=params.eta, format="%.6f")
            seed = st.number_input("Seed:", min_value=0, value=params.seed)
            method = st.selectbox("Metode:", ["auto", "mc", "cutenum"],
                                  index=["auto", "mc", "cutenum"].index(params.method))
        with col2:
            alpha_cap = st.number_input("Batas alpha:", min_value=1.0, max_value=10.0, value=params.alpha_cap)
            threads = st.number_input("Jumlah thread:", min_value=1, max_value=64, value=params.threads)
            schedule = st.selectbox("Jadwal kontraksi:", ["cut_count", "survival"],
                                    index=["cut_count", "survival"].index(params.trial_schedule))
            max_mc_trials = st.number_input("Maksimum percobaan Monte Carlo:", min_value=1000,
                                            value=params.max_mc_trials)
        if st.form_submit_button("Simpan Pengaturan", type="primary"):
            try:
                st.session_state.params = replace(
                    params, epsilon=epsilon, eta=eta, seed=int(seed), method=method, alpha_cap=alpha_cap,
                    threads=int(threads), trial_schedule=schedule, max_mc_trials=int(max_mc_trials)
                ).validate()
                st.success("Pengaturan disimpan.")
            except InputError as e:
                st.error(str(e))

def main():
    init_session_state()

    page = render_sidebar()

    if page == "Dashboard":
        render_dashboard()
    elif page == "Data Graf":
        render_graphs_page()
    elif page == "Estimasi Reliabilitas":
        render_estimation_page()
    elif page == "Daftar Cut":
        render_cuts_page()
    elif page == "Aproksimasi Deterministik":
        render_detapprox_page()
    elif page == "Polinomial Tutte":
        render_tutte_page()
    elif page == "Kurva Reliabilitas":
        render_curve_page()
    elif page == "Riwayat Estimasi":
        render_history_page()
    elif page == "Audit Trail":
        render_audit_page()
    elif page == "Pengaturan":
        render_settings_page()

if __name__ == "__main__":
    main()
