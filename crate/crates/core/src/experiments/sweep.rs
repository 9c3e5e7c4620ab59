//! The sweep engine.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::achannel::AChannelParams;
use crate::awgn_frontend::{aloha_ebn0, frontend_rates, max_payload, min_ebn0_threshold, solve_threshold, FrontEndRates, PowerGrid, ThresholdConfig};
use crate::error::Result;
use crate::mf_detector::{scaling_law_antennas, theorem3_bound, theorem3_slot_rate};
use crate::mimo_fbl::{min_blocklength_gaussian, CsiMode, FblConfig};
use crate::mmv_amp::{single_user_code_bound, write_trace_csv, AmpConfig, TraceRow};

use super::config::{Kind, SweepSpec};
use super::csv::{write_csv, SweepRow};
use super::sim::{amp_rank_profiles, mf_pipeline, AmpSetup, CommaCsi};

/// One grid point. Parameters a kind does not use keep their first value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub k_a: usize,
    pub q: usize,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub b: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepSummary {
    pub rows: usize,
    pub feasible: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    /// AMP traces by grid-point index (only when requested).
    pub traces: Vec<(usize, Vec<TraceRow>)>,
}

impl SweepOutput {
    /// Every row is infeasible (and there is at least one row).
    pub fn all_infeasible(&self) -> bool {
        self.summary.rows > 0 && self.summary.feasible == 0
    }
}

/// `[k_a, q, n, m, power, b]` usage per kind.
fn relevant(kind: Kind) -> [bool; 6] {
    match kind {
        Kind::AchannelSeff => [true, true, true, false, true, false],
        Kind::AchannelEbn0 => [true, true, true, false, false, true],
        Kind::AmpMissrate => [true, true, true, true, true, false],
        Kind::CommaSeffPerfect | Kind::CommaSeffEstimated | Kind::MfScaling | Kind::MimoFbl => [true; 6],
    }
}

/// Grid points in output order: `q`, `n`, `m`, `power`, `b` outer, `k_a` innermost.
pub fn grid_points(spec: &SweepSpec) -> Vec<Point> {
    let use_dim = relevant(spec.kind);
    fn dim<T: Copy>(v: &[T], used: bool, fallback: T) -> Vec<T> {
        if used {
            v.to_vec()
        } else {
            vec![v.first().copied().unwrap_or(fallback)]
        }
    }
    let ks = dim(&spec.k_a, use_dim[0], 1);
    let qs = dim(&spec.q, use_dim[1], 2);
    let ns = dim(&spec.n, use_dim[2], 1);
    let ms = dim(&spec.m, use_dim[3], 1);
    let ps = dim(&spec.power, use_dim[4], 1.0);
    let bs = dim(&spec.b, use_dim[5], 1);
    let mut out = Vec::new();
    for &q in &qs {
        for &n in &ns {
            for &m in &ms {
                for &p in &ps {
                    for &b in &bs {
                        for &k_a in &ks {
                            out.push(Point { k_a, q, n, m, p, b });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Run every grid point and collect the rows in grid order.
///
/// A failing grid point yields rows with an `error` status instead of
/// aborting the sweep.
pub fn run_sweep(spec: &SweepSpec, trace: bool) -> Result<SweepOutput> {
    let points = grid_points(spec);
    let results: Vec<(Vec<SweepRow>, Vec<TraceRow>)> = points
        .par_iter()
        .map(|pt| match run_point(spec, pt, trace) {
            Ok(r) => r,
            Err(e) => {
                let mut row = base_row(spec, pt, "error");
                row = row.error(&e.to_string());
                (vec![row], Vec::new())
            }
        })
        .collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (i, (r, t)) in results.into_iter().enumerate() {
        rows.extend(r);
        if !t.is_empty() {
            traces.push((i, t));
        }
    }
    let summary = SweepSummary {
        rows: rows.len(),
        feasible: rows.iter().filter(|r| r.feasible).count(),
        errors: rows.iter().filter(|r| r.status.starts_with("error")).count(),
    };
    Ok(SweepOutput { rows, summary, traces })
}

/// Write the CSV to `spec.out` and traces next to it.
pub fn write_outputs(spec: &SweepSpec, output: &SweepOutput) -> Result<()> {
    let path = Path::new(&spec.out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(BufWriter::new(File::create(path)?), &output.rows)?;
    for (i, t) in &output.traces {
        write_trace_csv(BufWriter::new(File::create(trace_path(path, *i))?), t)?;
    }
    Ok(())
}

/// `<stem>.trace-<index>.csv` next to the main output.
pub fn trace_path(out: &Path, index: usize) -> PathBuf {
    let stem = out.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.trace-{index}.csv"))
}

fn base_row(spec: &SweepSpec, pt: &Point, series: &str) -> SweepRow {
    let u = relevant(spec.kind);
    let mut row = SweepRow::new(spec.kind, series, pt.k_a);
    row.q = Some(pt.q);
    row.n = u[2].then_some(pt.n);
    row.m = u[3].then_some(pt.m);
    row.power = u[4].then_some(pt.p);
    row.b = u[5].then_some(pt.b);
    row.eps = Some(spec.eps);
    row
}

fn power_grid(spec: &SweepSpec) -> PowerGrid {
    PowerGrid {
        min_db: spec.power_min_db,
        max_db: spec.power_max_db,
        step_db: spec.power_step_db,
    }
}

fn run_point(spec: &SweepSpec, pt: &Point, trace: bool) -> Result<(Vec<SweepRow>, Vec<TraceRow>)> {
    match spec.kind {
        Kind::AchannelSeff => Ok((achannel_seff(spec, pt)?, Vec::new())),
        Kind::AchannelEbn0 => Ok((achannel_ebn0(spec, pt)?, Vec::new())),
        Kind::AmpMissrate => amp_missrate(spec, pt, trace),
        Kind::CommaSeffPerfect | Kind::CommaSeffEstimated => comma_seff(spec, pt, trace),
        Kind::MfScaling => Ok((mf_scaling(spec, pt)?, Vec::new())),
        Kind::MimoFbl => Ok((vec![gaussian_baseline(spec, pt, pt.p, CsiMode::Perfect, 0, pt.n)], Vec::new())),
    }
}

fn achannel_seff(spec: &SweepSpec, pt: &Point) -> Result<Vec<SweepRow>> {
    let target = spec.pmd_budget / pt.n as f64;
    let mut rows = Vec::new();
    let with_threshold = if pt.k_a < pt.q {
        let theta = solve_threshold(target, pt.p, pt.k_a, pt.q)?;
        Some(frontend_rates(&ThresholdConfig { theta, p: pt.p, k_a: pt.k_a, q: pt.q })?)
    } else {
        None
    };
    let mut series: Vec<(&str, Option<FrontEndRates>)> = Vec::new();
    if spec.pfa_zero {
        series.push(("pfa_zero", with_threshold.map(|r| FrontEndRates { p_fa: 0.0, ..r })));
    }
    series.push(("pfa_threshold", with_threshold));
    for (name, rates) in series {
        let mut row = base_row(spec, pt, name);
        row.n_tot = Some(pt.n * pt.q);
        let Some(rates) = rates else {
            rows.push(row);
            continue;
        };
        row.p_md = Some(rates.p_md);
        row.p_fa = Some(rates.p_fa);
        let params = AChannelParams::new(pt.k_a, pt.q, pt.n, 1, rates.p_fa)?;
        match max_payload(&params, rates, spec.eps, 1..=spec.b_max, spec.mc_samples, spec.seed)? {
            Some((b, pupe)) => {
                row.b = Some(b);
                row.bound = Some(pupe);
                rows.push(row.feasible());
            }
            None => rows.push(row),
        }
    }
    Ok(rows)
}

fn achannel_ebn0(spec: &SweepSpec, pt: &Point) -> Result<Vec<SweepRow>> {
    let grid = power_grid(spec);
    let mut rows = Vec::new();
    let mut row = base_row(spec, pt, "threshold");
    row.n_tot = Some(pt.n * pt.q);
    if pt.k_a < pt.q {
        let params = AChannelParams::new(pt.k_a, pt.q, pt.n, pt.b, 0.0)?;
        if let Some(e) = min_ebn0_threshold(&params, spec.pmd_budget, spec.eps, &grid, spec.mc_samples, spec.seed)? {
            row.power = Some(e.p);
            row.bound = Some(e.bound.pupe);
            row.std_err = Some(e.bound.std_err);
            row.p_md = Some(e.bound.rates.p_md);
            row.p_fa = Some(e.bound.rates.p_fa);
            row = row.feasible();
        }
    }
    rows.push(row);
    if spec.aloha {
        let n_tot = pt.n * pt.q;
        let mut row = base_row(spec, pt, "aloha");
        row.n_tot = Some(n_tot);
        row.n = None;
        if let Some(a) = aloha_ebn0(pt.k_a, pt.b, n_tot, spec.eps, &grid)? {
            row.n = Some(a.subframe_len);
            row.power = Some(a.p);
            row.bound = Some(a.pupe);
            row = row.feasible();
        }
        rows.push(row);
    }
    Ok(rows)
}

fn amp_setup(spec: &SweepSpec, pt: &Point, csi: CommaCsi) -> AmpSetup {
    AmpSetup {
        k_a: pt.k_a,
        q: pt.q,
        m: pt.m,
        p: pt.p,
        n: pt.n,
        csi,
        amp: AmpConfig {
            max_iters: spec.max_iters,
            damping: spec.gamma,
            ..AmpConfig::default()
        },
    }
}

fn amp_missrate(spec: &SweepSpec, pt: &Point, trace: bool) -> Result<(Vec<SweepRow>, Vec<TraceRow>)> {
    let profiles = amp_rank_profiles(&amp_setup(spec, pt, CommaCsi::Perfect), spec.frames, spec.seed, trace)?;
    let rows = (0..=spec.n_fa_max.min(pt.q - 1))
        .map(|n_fa| {
            let miss = profiles.miss_probability(pt.n, n_fa);
            let mut row = base_row(spec, pt, &format!("nfa{n_fa}"));
            row.n_fa = Some(n_fa);
            row.p_md = Some(miss.value);
            row.std_err = Some(miss.std_err);
            if miss.value <= spec.miss_target {
                row.feasible()
            } else {
                row
            }
        })
        .collect();
    Ok((rows, profiles.trace))
}

fn comma_seff(spec: &SweepSpec, pt: &Point, trace: bool) -> Result<(Vec<SweepRow>, Vec<TraceRow>)> {
    let estimated = spec.kind == Kind::CommaSeffEstimated;
    let csi = if estimated {
        CommaCsi::Estimated { blocks: spec.pilot_blocks, pool: spec.pilot_pool }
    } else {
        CommaCsi::Perfect
    };
    let overhead = if estimated { spec.pilot_blocks * pt.q } else { 0 };
    let profiles = amp_rank_profiles(&amp_setup(spec, pt, csi), spec.frames, spec.seed, trace)?;
    let n_fa_max = spec.n_fa_max.min(pt.q - 1);

    let mut row = base_row(spec, pt, "comma");
    row.n = None;
    'search: for n in 1..=pt.n {
        for n_fa in 0..=n_fa_max {
            let miss = profiles.miss_probability(n, n_fa);
            if miss.value >= spec.eps {
                continue;
            }
            let code = single_user_code_bound(pt.q, n, pt.b, n_fa, spec.mc_samples, spec.seed)?;
            let total = miss.value + (1.0 - miss.value) * code.value;
            if total <= spec.eps {
                row.n = Some(n);
                row.n_fa = Some(n_fa);
                row.n_tot = Some(n * pt.q + overhead);
                row.bound = Some(total);
                row.std_err = Some(miss.std_err);
                row.p_md = Some(miss.value);
                row.p_fa = Some(n_fa as f64 / (pt.q - 1) as f64);
                row = row.feasible();
                break 'search;
            }
        }
    }
    let mut rows = vec![row];
    if spec.baseline {
        let (mode, n_p) = if estimated {
            (CsiMode::Estimated { pool_size: spec.pilot_pool }, spec.pilot_blocks * pt.q)
        } else {
            (CsiMode::Perfect, 0)
        };
        let n_max = if spec.baseline_n_max > 0 { spec.baseline_n_max } else { 4 * pt.n * pt.q };
        rows.push(gaussian_baseline(spec, pt, pt.p / pt.q as f64, mode, n_p, n_max));
    }
    Ok((rows, profiles.trace))
}

/// Gaussian-signaling row at per-symbol power `p_sym`; `n` and `n_tot` hold the total blocklength.
fn gaussian_baseline(spec: &SweepSpec, pt: &Point, p_sym: f64, csi: CsiMode, n_p: usize, n_max: usize) -> SweepRow {
    let mut row = base_row(spec, pt, "gaussian");
    row.power = Some(p_sym);
    row.n = None;
    let cfg = FblConfig {
        n: n_max,
        n_p,
        b: pt.b,
        k_a: pt.k_a,
        m: pt.m,
        p: p_sym,
        s_grid: crate::mimo_fbl::default_s_grid(),
        trials: spec.fbl_trials,
        seed: spec.seed,
        csi,
        fading: true,
    };
    match min_blocklength_gaussian(&cfg, spec.eps, (n_p + 1)..=n_max) {
        Ok(Some(found)) => {
            row.n = Some(found.n);
            row.n_tot = Some(found.n);
            row.bound = Some(found.bound.eps);
            row.std_err = Some(found.bound.std_err);
            row.feasible()
        }
        Ok(None) => row,
        Err(e) => row.error(&e.to_string()),
    }
}

fn mf_scaling(spec: &SweepSpec, pt: &Point) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();

    let mut row = base_row(spec, pt, "theorem3");
    let bound = theorem3_bound(pt.k_a, pt.q, pt.m, pt.p, pt.n, spec.eps)?;
    row.bound = Some(bound);
    row.p_fa = Some(theorem3_slot_rate(pt.k_a, pt.q, pt.m, pt.p));
    row.n_tot = Some(pt.n * pt.q);
    rows.push(if bound < 1.0 { row.feasible() } else { row });

    let mut row = base_row(spec, pt, "scaling_law");
    let law = scaling_law_antennas(pt.k_a, pt.q, pt.p, pt.b, spec.eps)?;
    row.m = Some(law.m.ceil() as usize);
    rows.push(row.feasible());

    let mut row = base_row(spec, pt, "mf_sim");
    let stats = mf_pipeline(pt.k_a, pt.q, pt.m, pt.p, pt.n, spec.alpha, spec.frames, spec.seed)?;
    let pupe = (stats.miss.value + spec.eps).min(1.0);
    row.bound = Some(pupe);
    row.std_err = Some(stats.miss.std_err);
    row.p_md = Some(stats.miss.value);
    row.p_fa = Some(stats.p_fa);
    row.n_tot = Some(pt.n * pt.q);
    rows.push(if pupe < 1.0 { row.feasible() } else { row });
    Ok(rows)
}
