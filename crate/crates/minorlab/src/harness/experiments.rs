//! Experiment drivers behind `run_experiment`: each kind turns the resolved
//! config into per-cell work items, runs them on the pool, folds the results
//! in index order, and writes canonical CSV plus a manifest with headline
//! metrics.

use super::csvio::{CsvFile, Field, OutputDir};
use super::{
    descend_spec, effective_workers, lineage, merge_stats, AggregateStats, ExperimentConfig,
    ExperimentKind, FlowMode,
};
use crate::dbm_flow::{run_coupled_minor_flow, DbmFlow, MatrixFlow};
use crate::dense::{eigvalsh_desc, DenseEigh};
use crate::ensemble::seed::{SeedContext, Stream};
use crate::ensemble::{materialize_deformed, materialize_wigner, Beta, EnsembleSpec, EntryDist};
use crate::error::{EngineError, HarnessError};
use crate::minor_engine::edge::{lanczos_top, minor_top_values, top_eigenvalue_packed, MinorEdgeTracker};
use crate::minor_engine::{
    advance, arrowhead_eigen, build_arrowhead, run_trajectory, sample_border_scaled,
    solve_secular_top, AdvanceOptions, MinorState, TrajectoryRecord,
};
use crate::scalar::Scalar;
use crate::stats_lab::{
    decorrelation_ratio, estimate_tail_curve, extrema_trace, ks_two_sample, lfl_liminf_constant,
    lfl_limsup_constant, scale_top, tails::TailSide, tw, Histogram,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::time::Instant;

/// Outcome of a run: where it wrote, what it wrote, and headline numbers.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: &'static str,
    pub out_dir: std::path::PathBuf,
    pub manifest_path: std::path::PathBuf,
    pub metrics: BTreeMap<String, f64>,
}

/// One sample of the scaled top eigenvalue `lambda_1^(N)` under `spec`.
///
/// Gaussian ensembles route through the exact tridiagonal sampler; real
/// non-Gaussian ensembles use the packed Lanczos path; complex non-Gaussian
/// ensembles materialize the minor and run the generic Lanczos.
pub fn sample_top_scaled(spec: &EnsembleSpec, ctx: &SeedContext, n: usize) -> Result<f64, HarnessError> {
    if spec.profile.is_some() || spec.deformation.is_some() {
        return Err(HarnessError::Config(
            "top-eigenvalue tail sampling expects an undeformed ensemble".into(),
        ));
    }
    match (spec.entry_dist, spec.beta) {
        (EntryDist::Gaussian, beta) => {
            let mut rng = ctx.rng_at(Stream::Aux, 0, 0);
            Ok(tw::sample_gaussian_top_scaled(beta, n, &mut rng)?)
        }
        (_, Beta::One) => {
            let raw = top_eigenvalue_packed(n, spec, ctx, 1e-9, 600)?;
            Ok(scale_top(raw, n))
        }
        (_, Beta::Two) => {
            let h = materialize_wigner::<Complex64>(n, spec, ctx)?;
            let buf = h.as_slice().expect("standard layout");
            let out = lanczos_top::<Complex64>(
                n,
                |x, y| crate::minor_engine::edge::row_major_matvec(buf, n, n, 1.0, x, y),
                None,
                1e-9,
                600,
                ctx.master_seed(),
            )
            .map_err(HarnessError::Engine)?;
            Ok(scale_top(out.value, n))
        }
    }
}

fn manifest_value(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &OutputDir,
    metrics: &BTreeMap<String, f64>,
    elapsed: f64,
) -> serde_json::Value {
    serde_json::json!({
        "tool": "minorlab",
        "schema_version": super::SCHEMA_VERSION,
        "config": cfg,
        "resolved_workers": workers,
        "outputs": out.outputs(),
        "metrics": metrics,
        "elapsed_seconds": elapsed,
    })
}

/// Execute the experiment described by `config`; deterministic in
/// `(config, seed)` for any worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let workers = effective_workers(cfg.workers);
    let mut out = OutputDir::create(&cfg.out_dir)?;
    let result = dispatch(cfg, workers, &mut out);
    match result {
        Ok(metrics) => {
            let manifest = manifest_value(cfg, workers, &out, &metrics, started.elapsed().as_secs_f64());
            let manifest_path = out.finalize(&manifest)?;
            Ok(RunSummary {
                kind: cfg.kind.name(),
                out_dir: cfg.out_dir.clone(),
                manifest_path,
                metrics,
            })
        }
        Err(e) => {
            out.cleanup();
            Err(e)
        }
    }
}

fn dispatch(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    match &cfg.kind {
        ExperimentKind::Trajectories { n_start, n_end, trajectories, refresh_every } => {
            match cfg.ensemble.beta {
                Beta::One => run_trajectories::<f64>(cfg, workers, out, *n_start, *n_end, *trajectories, *refresh_every),
                Beta::Two => run_trajectories::<Complex64>(cfg, workers, out, *n_start, *n_end, *trajectories, *refresh_every),
            }
        }
        ExperimentKind::Tails { n, samples, levels_right, levels_left } => {
            run_tails(cfg, workers, out, *n, *samples, levels_right, levels_left)
        }
        ExperimentKind::Decorrelate { n1, gaps, x1, x2, pairs } => match cfg.ensemble.beta {
            Beta::One => run_decorrelate::<f64>(cfg, workers, out, *n1, gaps, *x1, *x2, *pairs),
            Beta::Two => run_decorrelate::<Complex64>(cfg, workers, out, *n1, gaps, *x1, *x2, *pairs),
        },
        ExperimentKind::Flow { mode, n1, n2, t_end, dt, checkpoints, i_max, runs } => match mode {
            FlowMode::Coupled => match cfg.ensemble.beta {
                Beta::One => run_flow_coupled::<f64>(cfg, workers, out, *n1, *n2, *t_end, *dt, checkpoints, *i_max, *runs),
                Beta::Two => run_flow_coupled::<Complex64>(cfg, workers, out, *n1, *n2, *t_end, *dt, checkpoints, *i_max, *runs),
            },
            FlowMode::DbmCompare => match cfg.ensemble.beta {
                Beta::One => run_flow_dbm_compare::<f64>(cfg, workers, out, *n1, *t_end, *dt, *runs),
                Beta::Two => run_flow_dbm_compare::<Complex64>(cfg, workers, out, *n1, *t_end, *dt, *runs),
            },
        },
        ExperimentKind::Lfl { n_start, n_end, trajectories } => match cfg.ensemble.beta {
            Beta::One => run_lfl::<f64>(cfg, workers, out, *n_start, *n_end, *trajectories),
            Beta::Two => run_lfl::<Complex64>(cfg, workers, out, *n_start, *n_end, *trajectories),
        },
        ExperimentKind::Dyson { e_min, e_max, grid_points, eta, mc_size, mc_samples } => {
            run_dyson(cfg, workers, out, *e_min, *e_max, *grid_points, *eta, *mc_size, *mc_samples)
        }
        ExperimentKind::OracleCheck { sizes, instances } => {
            run_oracle_check(cfg, workers, out, sizes, *instances)
        }
    }
}

const TRAJECTORY_CSV_HEADER: &str = "n,lambda_raw,lambda_scaled,xi1_sq,h_nn,corner_mass";

fn trajectory_csv(name: String, traj: &TrajectoryRecord) -> CsvFile {
    let mut f = CsvFile::new(name, TRAJECTORY_CSV_HEADER);
    for row in &traj.rows {
        f.row(&[
            Field::U(row.n as u64),
            Field::F(row.lambda_raw),
            Field::F(row.lambda_scaled),
            Field::F(row.xi1_sq),
            Field::F(row.h_nn),
            Field::F(row.corner_mass),
        ]);
    }
    f
}

fn run_trajectories<S: DenseEigh>(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n_start: usize,
    n_end: usize,
    trajectories: usize,
    refresh_every: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let opts = AdvanceOptions { refresh_every, ..AdvanceOptions::default() };
    let results: Vec<TrajectoryRecord> = super::run_indexed(workers, trajectories, |i| {
        let (spec_i, ctx_i) = descend_spec(&base, lineage::TRAJECTORY, i as u64);
        run_trajectory::<S>(n_start, n_end, &spec_i, &ctx_i, &opts).map_err(HarnessError::Engine)
    })?;

    for (i, traj) in results.iter().take(16).enumerate() {
        out.write_csv(trajectory_csv(format!("trajectory_{i:05}.csv"), traj))?;
    }

    let mut summary = CsvFile::new("summary.csv", "traj,n,lambda_raw,lambda_scaled,xi1_sq,h_nn,corner_mass");
    let mut parts: Vec<AggregateStats> = Vec::with_capacity(results.len());
    for (i, traj) in results.iter().enumerate() {
        let last = traj.rows.last().expect("nonempty trajectory");
        summary.row(&[
            Field::U(i as u64),
            Field::U(last.n as u64),
            Field::F(last.lambda_raw),
            Field::F(last.lambda_scaled),
            Field::F(last.xi1_sq),
            Field::F(last.h_nn),
            Field::F(last.corner_mass),
        ]);
        let mut agg = AggregateStats::default();
        let cell = agg.cell("lambda_scaled_end");
        cell.hist = Some(Histogram::new(-6.0, 0.05, 240));
        cell.record(last.lambda_scaled);
        agg.cell("xi1_sq_end").record(last.xi1_sq);
        parts.push(agg);
    }
    out.write_csv(summary)?;
    let agg = merge_stats(&parts)?;
    let lam = &agg.cells["lambda_scaled_end"];

    let mut moments = CsvFile::new("moments.csv", "n,samples,mean,variance,min,max,tw_mean,tw_var");
    moments.row(&[
        Field::U(n_end as u64),
        Field::U(lam.count),
        Field::F(lam.mean()),
        Field::F(lam.variance()),
        Field::F(lam.min),
        Field::F(lam.max),
        Field::F(tw::tw_mean(base.beta)),
        Field::F(tw::tw_var(base.beta)),
    ]);
    out.write_csv(moments)?;

    let mut hist = CsvFile::new("lambda_hist.csv", "bin_lo,count");
    if let Some(h) = &lam.hist {
        for (k, c) in h.counts.iter().enumerate() {
            if *c > 0 {
                hist.row(&[Field::F(h.lo + k as f64 * h.bin_width), Field::U(*c)]);
            }
        }
    }
    out.write_csv(hist)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("lambda_mean".into(), lam.mean());
    metrics.insert("lambda_var".into(), lam.variance());
    metrics.insert("samples".into(), lam.count as f64);
    metrics.insert("xi1_sq_mean".into(), agg.cells["xi1_sq_end"].mean());
    Ok(metrics)
}

fn run_tails(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n: usize,
    samples: usize,
    levels_right: &[f64],
    levels_left: &[f64],
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let values: Vec<f64> = super::run_indexed(workers, samples, |i| {
        let (spec_i, ctx_i) = descend_spec(&base, lineage::TAILS, i as u64);
        sample_top_scaled(&spec_i, &ctx_i, n)
    })?;

    let right = estimate_tail_curve(&values, TailSide::Right, levels_right, base.beta)?;
    let left = estimate_tail_curve(&values, TailSide::Left, levels_left, base.beta)?;

    let mut curve = CsvFile::new("tail_curve.csv", "side,beta,x,emp_logsurv,stderr");
    for fit in [&right, &left] {
        for level in &fit.levels {
            curve.row(&[
                Field::S(fit.side.label().into()),
                Field::U(u8::from(base.beta) as u64),
                Field::F(level.x),
                Field::F(level.neg_log_survival),
                Field::F(level.stderr),
            ]);
        }
    }
    out.write_csv(curve)?;

    let mut fitcsv = CsvFile::new(
        "tail_fit.csv",
        "side,beta,coefficient,coeff_stderr,target,intercept,samples,levels_used",
    );
    for fit in [&right, &left] {
        fitcsv.row(&[
            Field::S(fit.side.label().into()),
            Field::U(u8::from(base.beta) as u64),
            Field::F(fit.coefficient),
            Field::F(fit.coeff_stderr),
            Field::F(fit.target),
            Field::F(fit.intercept),
            Field::U(fit.samples as u64),
            Field::U(fit.levels.iter().filter(|l| !l.dropped).count() as u64),
        ]);
    }
    out.write_csv(fitcsv)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("right_coefficient".into(), right.coefficient);
    metrics.insert("right_stderr".into(), right.coeff_stderr);
    metrics.insert("right_target".into(), right.target);
    metrics.insert("left_coefficient".into(), left.coefficient);
    metrics.insert("left_stderr".into(), left.coeff_stderr);
    metrics.insert("left_target".into(), left.target);
    metrics.insert("samples".into(), samples as f64);
    Ok(metrics)
}

fn run_decorrelate<S: Scalar>(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n1: usize,
    gaps: &[usize],
    x1: f64,
    x2: f64,
    pairs: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let mut sizes: Vec<usize> = std::iter::once(n1).chain(gaps.iter().map(|g| n1 + g)).collect();
    sizes.sort_unstable();
    sizes.dedup();

    let rows: Vec<Vec<f64>> = super::run_indexed(workers, pairs, |i| {
        let (spec_i, ctx_i) = descend_spec(&base, lineage::DECORRELATE, i as u64);
        let raw = minor_top_values::<S>(&spec_i, &ctx_i, &sizes, 1e-9).map_err(HarnessError::Engine)?;
        Ok(raw
            .iter()
            .zip(sizes.iter())
            .map(|(&v, &m)| scale_top(v, m))
            .collect())
    })?;

    let idx_of = |m: usize| sizes.iter().position(|&s| s == m).expect("size present");
    let i1 = idx_of(n1);

    let mut spec_csv = CsvFile::new("decorrelation.csv", "N1,N2,M_over_N23,x1,x2,p1,p2,p12,ratio,ratio_err");
    let mut full_csv = CsvFile::new(
        "decorrelation_full.csv",
        "side,N1,N2,M_over_N23,x1,x2,p1,p2,p12,ratio,ratio_err,pearson,pairs",
    );
    let mut metrics = BTreeMap::new();
    for &g in gaps {
        let n2 = n1 + g;
        let i2 = idx_of(n2);
        let paired: Vec<(f64, f64)> = rows.iter().map(|r| (r[i1], r[i2])).collect();
        let rep = decorrelation_ratio(&paired, n1, n2, x1, x2)?;
        let opt = |v: Option<f64>| Field::F(v.unwrap_or(f64::NAN));
        spec_csv.row(&[
            Field::U(n1 as u64),
            Field::U(n2 as u64),
            Field::F(rep.m_over_n23),
            Field::F(x1),
            Field::F(x2),
            Field::F(rep.f.p1),
            Field::F(rep.f.p2),
            Field::F(rep.f.p_joint),
            opt(rep.f.ratio),
            opt(rep.f.ratio_err),
        ]);
        for (side, fac) in [("right", &rep.f), ("left", &rep.e)] {
            full_csv.row(&[
                Field::S(side.into()),
                Field::U(n1 as u64),
                Field::U(n2 as u64),
                Field::F(rep.m_over_n23),
                Field::F(x1),
                Field::F(x2),
                Field::F(fac.p1),
                Field::F(fac.p2),
                Field::F(fac.p_joint),
                opt(fac.ratio),
                opt(fac.ratio_err),
                Field::F(rep.pearson),
                Field::U(rep.pairs as u64),
            ]);
        }
        if let Some(r) = rep.f.ratio {
            metrics.insert(format!("f_ratio_gap{g}"), r);
        }
        if let Some(r) = rep.e.ratio {
            metrics.insert(format!("e_ratio_gap{g}"), r);
        }
        if let Some(e) = rep.e.ratio_err {
            metrics.insert(format!("e_ratio_err_gap{g}"), e);
        }
        metrics.insert(format!("pearson_gap{g}"), rep.pearson);
    }
    out.write_csv(spec_csv)?;
    out.write_csv(full_csv)?;
    metrics.insert("pairs".into(), pairs as f64);
    Ok(metrics)
}

#[allow(clippy::too_many_arguments)]
fn run_flow_coupled<S: DenseEigh>(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n1: usize,
    n2: usize,
    t_end: f64,
    dt: f64,
    checkpoints: &[f64],
    i_max: usize,
    runs: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let results = super::run_indexed(workers, runs, |r| {
        let (spec_r, ctx_r) = descend_spec(&base, lineage::FLOW, r as u64);
        run_coupled_minor_flow::<S>(n1, n2, &spec_r, &ctx_r, t_end, checkpoints, dt, i_max)
            .map_err(HarnessError::Flow)
    })?;

    // spec-schema files for the first run
    let mut overlaps = CsvFile::new("overlaps.csv", "t,N1,N2,i,j,overlap");
    let mut gapscsv = CsvFile::new("gaps.csv", "t,N1,N2,top_gap");
    for rep in &results[0] {
        for i in 0..i_max {
            for j in 0..i_max {
                overlaps.row(&[
                    Field::F(rep.t),
                    Field::U(n1 as u64),
                    Field::U(n2 as u64),
                    Field::U((i + 1) as u64),
                    Field::U((j + 1) as u64),
                    Field::F(rep.overlaps[[i, j]]),
                ]);
            }
        }
        gapscsv.row(&[Field::F(rep.t), Field::U(n1 as u64), Field::U(n2 as u64), Field::F(rep.top_gap)]);
    }
    out.write_csv(overlaps)?;
    out.write_csv(gapscsv)?;

    let mut summary = CsvFile::new("flow_summary.csv", "run,t,N1,N2,top_overlap,top_gap");
    let last_cp = checkpoints.len() - 1;
    let mut above_09 = 0usize;
    let mut below_05 = 0usize;
    for (r, reports) in results.iter().enumerate() {
        for rep in reports {
            summary.row(&[
                Field::U(r as u64),
                Field::F(rep.t),
                Field::U(n1 as u64),
                Field::U(n2 as u64),
                Field::F(rep.overlaps[[0, 0]]),
                Field::F(rep.top_gap),
            ]);
        }
        let top = reports[last_cp].overlaps[[0, 0]];
        if top > 0.9 {
            above_09 += 1;
        }
        if top < 0.5 {
            below_05 += 1;
        }
    }
    out.write_csv(summary)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("runs".into(), runs as f64);
    metrics.insert("top_overlap_frac_above_09".into(), above_09 as f64 / runs as f64);
    metrics.insert("top_overlap_frac_below_05".into(), below_05 as f64 / runs as f64);
    Ok(metrics)
}

fn run_flow_dbm_compare<S: DenseEigh>(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n: usize,
    t_end: f64,
    dt: f64,
    paths: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let results: Vec<(f64, f64)> = super::run_indexed(workers, paths, |p| {
        let (spec_p, ctx_p) = descend_spec(&base, lineage::FLOW, p as u64);
        // matrix mode
        let mut flow = MatrixFlow::<S>::from_spec(n, &spec_p, &ctx_p)?;
        while flow.t < t_end - 1e-12 {
            flow.ou_step(dt.min(t_end - flow.t), &spec_p, &ctx_p)?;
        }
        let matrix_top = eigvalsh_desc(&flow.wigner()).map_err(HarnessError::Engine)?[0];
        // eigenvalue mode from the same initial spectrum, independent noise
        let h0 = materialize_wigner::<S>(n, &spec_p, &ctx_p)?;
        let init = eigvalsh_desc(&h0).map_err(HarnessError::Engine)?;
        let mut dbm = DbmFlow::new(init.to_vec(), spec_p.beta, 1)?;
        while dbm.t < t_end - 1e-12 {
            dbm.step(dt.min(t_end - dbm.t), &ctx_p)?;
        }
        Ok((matrix_top, dbm.lambdas[0]))
    })?;

    let mut csv = CsvFile::new("dbm_compare.csv", "mode,path,lambda_raw");
    for (p, (m, _)) in results.iter().enumerate() {
        csv.row(&[Field::S("matrix".into()), Field::U(p as u64), Field::F(*m)]);
    }
    for (p, (_, d)) in results.iter().enumerate() {
        csv.row(&[Field::S("dbm".into()), Field::U(p as u64), Field::F(*d)]);
    }
    out.write_csv(csv)?;

    let mut a: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mut b: Vec<f64> = results.iter().map(|r| r.1).collect();
    let ks = ks_two_sample(&mut a, &mut b);
    let mut kscsv = CsvFile::new("dbm_compare_summary.csv", "n,t_end,paths,ks");
    kscsv.row(&[Field::U(n as u64), Field::F(t_end), Field::U(paths as u64), Field::F(ks)]);
    out.write_csv(kscsv)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("ks".into(), ks);
    metrics.insert("paths".into(), paths as f64);
    Ok(metrics)
}

fn run_lfl<S: Scalar>(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    n_start: usize,
    n_end: usize,
    trajectories: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let base = cfg.spec();
    let trajs: Vec<TrajectoryRecord> = super::run_indexed(workers, trajectories, |i| {
        let (spec_i, ctx_i) = descend_spec(&base, lineage::LFL, i as u64);
        run_edge_trajectory::<S>(n_start, n_end, &spec_i, &ctx_i, 3e-6).map_err(HarnessError::Engine)
    })?;

    let mut pooled23: Option<Histogram> = None;
    let mut pooled13: Option<Histogram> = None;
    let mut last_runmax = 0.0;
    let mut last_runmin = 0.0;
    for (i, traj) in trajs.iter().enumerate() {
        let trace = extrema_trace(traj, base.beta)?;
        if i < 4 {
            let mut f = CsvFile::new(format!("lfl_trace_{i:03}.csv"), "N,norm23,norm13,runmax,runmin");
            for k in 0..trace.n.len() {
                f.row(&[
                    Field::U(trace.n[k] as u64),
                    Field::F(trace.norm23[k]),
                    Field::F(trace.norm13[k]),
                    Field::F(trace.running_max23[k]),
                    Field::F(trace.running_min13[k]),
                ]);
            }
            out.write_csv(f)?;
        }
        match &mut pooled23 {
            Some(h) => h.merge(&trace.hist23),
            None => pooled23 = Some(trace.hist23.clone()),
        }
        match &mut pooled13 {
            Some(h) => h.merge(&trace.hist13),
            None => pooled13 = Some(trace.hist13.clone()),
        }
        last_runmax = *trace.running_max23.last().unwrap();
        last_runmin = *trace.running_min13.last().unwrap();
    }

    let mut hist = CsvFile::new("lfl_hist.csv", "series,bin_lo,count");
    for (name, h) in [("norm23", pooled23.unwrap()), ("norm13", pooled13.unwrap())] {
        for (k, c) in h.counts.iter().enumerate() {
            if *c > 0 {
                hist.row(&[Field::S(name.into()), Field::F(h.lo + k as f64 * h.bin_width), Field::U(*c)]);
            }
        }
    }
    out.write_csv(hist)?;

    let mut markers = CsvFile::new("lfl_markers.csv", "beta,limsup_marker,liminf_marker");
    markers.row(&[
        Field::U(u8::from(base.beta) as u64),
        Field::F(lfl_limsup_constant(base.beta)),
        Field::F(lfl_liminf_constant(base.beta)),
    ]);
    out.write_csv(markers)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("trajectories".into(), trajectories as f64);
    metrics.insert("last_running_max23".into(), last_runmax);
    metrics.insert("last_running_min13".into(), last_runmin);
    metrics.insert("limsup_marker".into(), lfl_limsup_constant(base.beta));
    metrics.insert("liminf_marker".into(), lfl_liminf_constant(base.beta));
    Ok(metrics)
}

/// Top-edge trajectory via the warm-started Lanczos tracker; same row schema
/// and the same shared array as the full engine. `tol` is the eigenpair
/// residual target per step; `3e-6` resolves the recorded scalars far below
/// their statistical resolution.
pub fn run_edge_trajectory<S: Scalar>(
    n_start: usize,
    n_end: usize,
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    tol: f64,
) -> Result<TrajectoryRecord, EngineError> {
    if n_start < 2 || n_end < n_start {
        return Err(EngineError::Dimension(format!(
            "need 2 <= n_start <= n_end, got {n_start}..{n_end}"
        )));
    }
    let mut tracker = MinorEdgeTracker::<S>::new(n_start - 1, n_end, spec, ctx, tol)?;
    let mut rows = Vec::with_capacity(n_end - n_start + 1);
    for n in n_start..=n_end {
        let row = tracker.advance().map_err(|e| e.at_step(n))?;
        rows.push(row);
    }
    Ok(TrajectoryRecord {
        rows,
        spec_digest: spec.digest(),
        master_seed: ctx.master_seed(),
        refresh_every: 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_dyson(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    e_min: f64,
    e_max: f64,
    grid_points: usize,
    eta: f64,
    mc_size: usize,
    mc_samples: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    use crate::stats_lab::dyson::solve_dyson;
    let base = cfg.spec();
    let s2 = base.profile.map_or(1.0, |p| {
        let v = p.value_at(0, 0);
        v * v
    });
    // representative site pattern; the configured deformations have period <= 2
    let pattern: Vec<f64> = (0..64)
        .map(|i| base.deformation.as_ref().map_or(0.0, |d| d.value_at(i)))
        .collect();

    let energies: Vec<f64> = (0..grid_points)
        .map(|k| e_min + (e_max - e_min) * k as f64 / (grid_points - 1) as f64)
        .collect();
    let densities: Vec<(f64, f64)> = super::run_indexed(workers, grid_points, |k| {
        let z = num_complex::Complex64::new(energies[k], eta);
        let sol = solve_dyson(z, &pattern, s2)?;
        Ok((energies[k], sol.density))
    })?;

    let mut dens_csv = CsvFile::new("dyson_density.csv", "E,rho");
    for (e, rho) in &densities {
        dens_csv.row(&[Field::F(*e), Field::F(*rho)]);
    }
    out.write_csv(dens_csv)?;

    let mut metrics = BTreeMap::new();
    metrics.insert("grid_points".into(), grid_points as f64);

    if mc_samples > 0 {
        let eigs: Vec<Vec<f64>> = super::run_indexed(workers, mc_samples, |i| {
            let (spec_i, ctx_i) = descend_spec(&base, lineage::DYSON, i as u64);
            let vals = match base.beta {
                Beta::One => {
                    let h = materialize_deformed::<f64>(mc_size, &spec_i, &ctx_i)?;
                    eigvalsh_desc(&h).map_err(HarnessError::Engine)?
                }
                Beta::Two => {
                    let h = materialize_deformed::<Complex64>(mc_size, &spec_i, &ctx_i)?;
                    eigvalsh_desc(&h).map_err(HarnessError::Engine)?
                }
            };
            Ok(vals.to_vec())
        })?;
        let mut pooled: Vec<f64> = eigs.into_iter().flatten().collect();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // model CDF by trapezoid integration of the density grid
        let mut cum = vec![0.0; densities.len()];
        for k in 1..densities.len() {
            let (e0, r0) = densities[k - 1];
            let (e1, r1) = densities[k];
            cum[k] = cum[k - 1] + 0.5 * (r0 + r1) * (e1 - e0);
        }
        let total = *cum.last().unwrap();
        let model_cdf = |x: f64| -> f64 {
            if x <= densities[0].0 {
                return 0.0;
            }
            if x >= densities[densities.len() - 1].0 {
                return 1.0;
            }
            let idx = densities.partition_point(|&(e, _)| e < x);
            let (e0, r0) = densities[idx - 1];
            let (e1, r1) = densities[idx];
            let frac = (x - e0) / (e1 - e0);
            let rho_x = r0 + (r1 - r0) * frac;
            (cum[idx - 1] + 0.5 * (r0 + rho_x) * (x - e0)) / total
        };
        let ks = crate::stats_lab::ks_statistic(&mut pooled, model_cdf);

        let mut hist = Histogram::new(e_min, (e_max - e_min) / 160.0, 160);
        for &v in &pooled {
            hist.record(v);
        }
        let mut emp = CsvFile::new("dyson_empirical.csv", "bin_lo,count,density");
        let total_n = pooled.len() as f64;
        for (k, c) in hist.counts.iter().enumerate() {
            if *c > 0 {
                emp.row(&[
                    Field::F(hist.lo + k as f64 * hist.bin_width),
                    Field::U(*c),
                    Field::F(*c as f64 / (total_n * hist.bin_width)),
                ]);
            }
        }
        out.write_csv(emp)?;

        let mut summary = CsvFile::new("dyson_summary.csv", "mc_size,mc_samples,eigenvalues,ks");
        summary.row(&[
            Field::U(mc_size as u64),
            Field::U(mc_samples as u64),
            Field::U(pooled.len() as u64),
            Field::F(ks),
        ]);
        out.write_csv(summary)?;
        metrics.insert("ks".into(), ks);
        metrics.insert("eigenvalues".into(), pooled.len() as f64);
    }
    Ok(metrics)
}

fn oracle_instance<S: DenseEigh>(
    spec: &EnsembleSpec,
    ctx: &SeedContext,
    n: usize,
) -> Result<(f64, f64, f64), HarnessError> {
    let state = MinorState::<S>::dense_init(n, spec, ctx).map_err(HarnessError::Engine)?;
    let (border, corner) = sample_border_scaled::<S>(n + 1, spec, ctx).map_err(HarnessError::Engine)?;
    let sys = build_arrowhead(&state, &border, corner).map_err(HarnessError::Engine)?;
    let (vals, vecs) = arrowhead_eigen(&sys, 1e-13).map_err(HarnessError::Engine)?;
    let top = solve_secular_top(&sys, 1e-13).map_err(HarnessError::Engine)?;
    let h = materialize_wigner::<S>(n + 1, spec, ctx)?;
    let dense = eigvalsh_desc(&h).map_err(HarnessError::Engine)?;
    let mut spectrum_err: f64 = 0.0;
    for k in 0..=n {
        spectrum_err = spectrum_err.max((vals[k] - dense[k]).abs() / (1.0 + dense[k].abs()));
    }
    let top_err = (top - dense[0]).abs() / (1.0 + dense[0].abs());
    // orthonormality of the assembled arrowhead eigenvectors
    let mut ortho_err: f64 = 0.0;
    for a in 0..=n {
        for b in a..=n {
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for i in 0..=n {
                let p = vecs[[i, a]].conj() * vecs[[i, b]];
                acc_re += p.re();
                acc_im += p.im();
            }
            let target = if a == b { 1.0 } else { 0.0 };
            ortho_err = ortho_err.max((acc_re - target).abs().max(acc_im.abs()));
        }
    }
    Ok((spectrum_err, top_err, ortho_err))
}

fn run_oracle_check(
    cfg: &ExperimentConfig,
    workers: usize,
    out: &mut OutputDir,
    sizes: &[usize],
    instances: usize,
) -> Result<BTreeMap<String, f64>, HarnessError> {
    let cells: Vec<(Beta, usize, usize)> = [Beta::One, Beta::Two]
        .iter()
        .flat_map(|&b| sizes.iter().flat_map(move |&n| (0..instances).map(move |i| (b, n, i))))
        .collect();
    let base_seed = cfg.seed;
    let dist = cfg.ensemble.entry_dist;
    let results: Vec<(Beta, usize, usize, f64, f64, f64)> =
        super::run_indexed(workers, cells.len(), |idx| {
            let (beta, n, inst) = cells[idx];
            let spec0 = EnsembleSpec {
                beta,
                entry_dist: dist,
                profile: None,
                deformation: None,
                master_seed: base_seed,
            };
            let (spec, ctx) = descend_spec(&spec0, lineage::ORACLE, idx as u64);
            let (se, te, oe) = match beta {
                Beta::One => oracle_instance::<f64>(&spec, &ctx, n)?,
                Beta::Two => oracle_instance::<Complex64>(&spec, &ctx, n)?,
            };
            let _ = inst;
            Ok((beta, n, inst, se, te, oe))
        })?;

    let mut csv = CsvFile::new("oracle_report.csv", "beta,n,instance,spectrum_err,top_err,ortho_err,ok");
    let mut violations = 0u64;
    let mut max_se: f64 = 0.0;
    let mut max_te: f64 = 0.0;
    for (beta, n, inst, se, te, oe) in &results {
        let ok = *se <= 1e-9 && *te <= 1e-10 && *oe <= 1e-8;
        if !ok {
            violations += 1;
        }
        max_se = max_se.max(*se);
        max_te = max_te.max(*te);
        csv.row(&[
            Field::U(u8::from(*beta) as u64),
            Field::U(*n as u64),
            Field::U(*inst as u64),
            Field::F(*se),
            Field::F(*te),
            Field::F(*oe),
            Field::U(ok as u64),
        ]);
    }
    out.write_csv(csv)?;

    // short incremental chains: advance() enforces interlacing and the trace
    // identity internally, so any breach surfaces as an error here
    fn chain<S: DenseEigh>(spec: &EnsembleSpec, ctx: &SeedContext) -> Result<(), HarnessError> {
        let opts = AdvanceOptions::default();
        let mut state = MinorState::<S>::dense_init(4, spec, ctx).map_err(HarnessError::Engine)?;
        for _ in 5..=48 {
            state = advance(state, spec, ctx, &opts).map_err(HarnessError::Engine)?.state;
        }
        Ok(())
    }
    for beta in [Beta::One, Beta::Two] {
        let spec0 = EnsembleSpec { beta, entry_dist: dist, profile: None, deformation: None, master_seed: base_seed };
        let (spec, ctx) = descend_spec(&spec0, lineage::ORACLE, 0xC0DE);
        match beta {
            Beta::One => chain::<f64>(&spec, &ctx)?,
            Beta::Two => chain::<Complex64>(&spec, &ctx)?,
        }
    }
    let _ = workers;

    let mut metrics = BTreeMap::new();
    metrics.insert("violations".into(), violations as f64);
    metrics.insert("max_spectrum_err".into(), max_se);
    metrics.insert("max_top_err".into(), max_te);
    if violations > 0 {
        return Err(HarnessError::Invariant(format!(
            "oracle-check found {violations} violations (max spectrum err {max_se:.3e}, max top err {max_te:.3e})"
        )));
    }
    Ok(metrics)
}
