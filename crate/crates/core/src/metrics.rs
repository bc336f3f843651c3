//! Experiment records, complexity measures, CSV output and figure rendering.
//!
//! Records are self-describing: the full parameter set rides along with the
//! measurements so a run can be reproduced from its serialized form alone.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coarsening::{coarsen, cr_rate, CoarsenParams, Partition};
use crate::error::{Error, Result};
use crate::interpolation::build_interpolation;
use crate::multigrid::{
    amli_fcg_solve, bootstrap_setup, galerkin, levels_complexity, two_grid_solve_rate, Hierarchy,
    LevelSummary, SetupParams, SolveReport,
};
use crate::problems::ProblemSpec;
use crate::rng;
use crate::sparse::SparseMatrix;
use crate::testvectors::{compute_weights, generate_relaxed};

/// Grid and operator complexity over all levels, counting the finest.
pub fn complexity(h: &Hierarchy) -> (f64, f64) {
    levels_complexity(h.levels())
}

pub const CSV_HEADER: &str = "scheme,N,alpha,epsilon,c,d,rho,rho_f,gamma_g,gamma_o,iters,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    TwoGrid,
    Amli,
}

/// Flat parameter bundle shared by the experiment runners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub spec: ProblemSpec,
    /// Symbolic angle as given on the command line ("pi/4", "-pi/4", ...).
    pub alpha_label: String,
    pub caliber: usize,
    pub depth: usize,
    pub d_ls: usize,
    pub theta: f64,
    pub delta: f64,
    pub nu: usize,
    pub gamma: f64,
    pub k: usize,
    pub tv_sweeps: usize,
    pub pre: usize,
    pub post: usize,
    pub eta: usize,
    /// Level budget for multilevel runs; 0 derives it from the grid size.
    pub levels: usize,
    pub passes: usize,
    pub coarse_size: usize,
    pub seed: u64,
}

impl RunParams {
    pub fn two_grid_defaults(spec: ProblemSpec, alpha_label: &str, seed: u64) -> Self {
        Self {
            spec,
            alpha_label: alpha_label.to_string(),
            caliber: 2,
            depth: 2,
            d_ls: 4,
            theta: 0.5,
            delta: 0.7,
            nu: 5,
            gamma: 1.5,
            k: 8,
            tv_sweeps: 40,
            pre: 2,
            post: 2,
            eta: 100,
            levels: 2,
            passes: 2,
            coarse_size: 100,
            seed,
        }
    }

    pub fn amli_defaults(spec: ProblemSpec, alpha_label: &str, seed: u64) -> Self {
        Self {
            tv_sweeps: 8,
            levels: 0,
            ..Self::two_grid_defaults(spec, alpha_label, seed)
        }
    }
}

/// Level count used by the multilevel tables when none is requested.
pub fn default_level_count(n: usize) -> usize {
    let levels = (n as f64).log2().round() as usize;
    levels.saturating_sub(2).max(2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrTraceRow {
    pub round: usize,
    pub c_size: usize,
    pub rho_f: f64,
    pub candidates: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    pub params: RunParams,
    /// F-relaxation rate re-measured with a fresh draw after coarsening.
    pub rho_f: Option<f64>,
    pub report: SolveReport,
    pub levels: Vec<LevelSummary>,
    pub cr_trace: Vec<CrTraceRow>,
}

impl ExperimentRecord {
    /// One line under `CSV_HEADER`. Two-grid rows print the coarse fraction
    /// in the gamma_g column, matching the convention of the result tables;
    /// multilevel rows print the all-level sum.
    pub fn to_csv_line(&self) -> String {
        let rho = match self.report.rho {
            Some(r) => format!("{r:.6}"),
            None => String::new(),
        };
        let rho_f = match self.rho_f {
            Some(r) => format!("{r:.6}"),
            None => String::new(),
        };
        let gamma_g = match self.kind {
            ExperimentKind::TwoGrid => self.report.coarse_fraction.unwrap_or(self.report.gamma_g),
            ExperimentKind::Amli => self.report.gamma_g,
        };
        let iters = match self.report.iterations {
            Some(i) => i.to_string(),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{},{}",
            self.params.spec.scheme,
            self.params.spec.n,
            self.params.alpha_label,
            self.params.spec.epsilon,
            self.params.caliber,
            self.params.depth,
            rho,
            rho_f,
            gamma_g,
            self.report.gamma_o,
            iters,
            self.params.seed,
        )
    }
}

fn cr_trace(rounds: &[crate::coarsening::CrRound]) -> Vec<CrTraceRow> {
    rounds
        .iter()
        .map(|r| CrTraceRow {
            round: r.round,
            c_size: r.c_size,
            rho_f: r.rho_f,
            candidates: r.candidate_set.len(),
            selected: r.selected.len(),
        })
        .collect()
}

/// Assemble, relax test vectors, coarsen, fit P, and measure the two-grid
/// rate. The returned record carries an independently re-measured rho_f.
pub fn two_grid_experiment(params: &RunParams) -> Result<ExperimentRecord> {
    let a = params.spec.assemble()?;
    let mut tvs = generate_relaxed(&a, params.k, params.tv_sweeps, params.seed)?;
    compute_weights(&a, &mut tvs)?;
    let cr_params = CoarsenParams {
        theta: params.theta,
        delta: params.delta,
        nu: params.nu,
        depth: params.depth,
        max_rounds: 20,
        seed: params.seed,
    };
    let result = coarsen(&a, &tvs, &cr_params)?;
    let fresh = rng::derive2(params.seed, rng::TAG_CR_RECHECK, 0xF5);
    let (rho_f, _) = cr_rate(&a, &result.partition, params.nu, fresh)?;
    let (p, _) = build_interpolation(&a, &tvs, &result.partition, params.d_ls, params.caliber, params.gamma)?;
    let report = two_grid_solve_rate(&a, &p, params.pre, params.post, params.eta, params.seed)?;
    let a_c = galerkin(&a, &p)?;
    let levels = vec![
        LevelSummary {
            level: 0,
            n: a.n_rows(),
            nnz: a.nnz(),
            gamma_g_term: 1.0,
            gamma_o_term: 1.0,
        },
        LevelSummary {
            level: 1,
            n: a_c.n_rows(),
            nnz: a_c.nnz(),
            gamma_g_term: a_c.n_rows() as f64 / a.n_rows() as f64,
            gamma_o_term: a_c.nnz() as f64 / a.nnz() as f64,
        },
    ];
    Ok(ExperimentRecord {
        kind: ExperimentKind::TwoGrid,
        params: params.clone(),
        rho_f: Some(rho_f),
        report,
        levels,
        cr_trace: cr_trace(&result.rounds),
    })
}

/// Bootstrap a multilevel hierarchy and solve a seeded random right-hand
/// side with AMLI-preconditioned flexible CG.
pub fn amli_experiment(params: &RunParams) -> Result<ExperimentRecord> {
    let a = params.spec.assemble()?;
    let max_levels = if params.levels == 0 {
        default_level_count(params.spec.n)
    } else {
        params.levels
    };
    let mu1 = params.tv_sweeps / 2;
    let setup = SetupParams {
        caliber: params.caliber,
        depth: params.depth,
        d_ls: params.d_ls,
        gamma: params.gamma,
        theta: params.theta,
        delta: params.delta,
        nu: params.nu,
        k_r: params.k,
        k_e: params.k,
        mu1,
        mu2: params.tv_sweeps - mu1,
        passes: params.passes,
        max_levels,
        coarse_size: params.coarse_size,
        seed: params.seed,
    };
    let h = bootstrap_setup(&a, &setup)?;
    let mut stream = rng::stream(rng::derive(params.seed, rng::TAG_RHS));
    let b = rng::uniform_vec(&mut stream, a.n_rows());
    let (_, report) = amli_fcg_solve(&h, &b, 1e-8, 200, params.pre, params.post)?;
    let rho_f = match h.levels()[0].partition.as_ref() {
        Some(partition) => {
            let fresh = rng::derive2(params.seed, rng::TAG_CR_RECHECK, 0xF5);
            Some(cr_rate(&a, partition, params.nu, fresh)?.0)
        }
        None => None,
    };
    Ok(ExperimentRecord {
        kind: ExperimentKind::Amli,
        params: params.clone(),
        rho_f,
        report,
        levels: h.level_summaries(),
        cr_trace: Vec::new(),
    })
}

/// Everything a grid-pattern figure needs, in reproducible form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureRecord {
    pub spec: ProblemSpec,
    pub caliber: usize,
    pub depth: usize,
    pub d_ls: usize,
    pub seed: u64,
    pub c_points: Vec<usize>,
    /// Interpolation segments (F-point, interpolatory C-point).
    pub segments: Vec<(usize, usize)>,
}

/// Runs the two-grid setup far enough to extract the coarse grid and the
/// interpolation pattern.
pub fn figure_experiment(params: &RunParams) -> Result<FigureRecord> {
    let a = params.spec.assemble()?;
    let mut tvs = generate_relaxed(&a, params.k, params.tv_sweeps, params.seed)?;
    compute_weights(&a, &mut tvs)?;
    let cr_params = CoarsenParams {
        theta: params.theta,
        delta: params.delta,
        nu: params.nu,
        depth: params.depth,
        max_rounds: 20,
        seed: params.seed,
    };
    let result = coarsen(&a, &tvs, &cr_params)?;
    let (_, fits) = build_interpolation(&a, &tvs, &result.partition, params.d_ls, params.caliber, params.gamma)?;
    let mut segments = Vec::new();
    for fit in &fits {
        for &j in &fit.columns {
            segments.push((fit.row, j));
        }
    }
    Ok(FigureRecord {
        spec: params.spec,
        caliber: params.caliber,
        depth: params.depth,
        d_ls: params.d_ls,
        seed: params.seed,
        c_points: result.partition.c().to_vec(),
        segments,
    })
}

const SVG_SCALE: usize = 16;
const SVG_MARGIN: usize = 16;

fn svg_coords(spec: &ProblemSpec, idx: usize) -> (usize, usize) {
    let m = spec.side();
    let (ix, iy) = spec.coords_of(idx);
    let x = SVG_MARGIN + (ix - 1) * SVG_SCALE;
    let y = SVG_MARGIN + (m - iy) * SVG_SCALE;
    (x, y)
}

/// Deterministic SVG for a figure record: C-points as large filled circles,
/// F-points as small circles, one line per interpolation segment.
pub fn grid_svg_string(record: &FigureRecord) -> String {
    let m = record.spec.side();
    let size = 2 * SVG_MARGIN + (m - 1) * SVG_SCALE;
    let mut coarse = vec![false; record.spec.unknowns()];
    for &c in &record.c_points {
        coarse[c] = true;
    }
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    let _ = writeln!(s, "<rect width=\"{size}\" height=\"{size}\" fill=\"#ffffff\"/>");
    for &(from, to) in &record.segments {
        let (x1, y1) = svg_coords(&record.spec, from);
        let (x2, y2) = svg_coords(&record.spec, to);
        let _ = writeln!(
            s,
            "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#333333\" stroke-width=\"1\"/>"
        );
    }
    for idx in 0..record.spec.unknowns() {
        if coarse[idx] {
            continue;
        }
        let (x, y) = svg_coords(&record.spec, idx);
        let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"2\" fill=\"#999999\"/>");
    }
    for &c in &record.c_points {
        let (x, y) = svg_coords(&record.spec, c);
        let _ = writeln!(s, "<circle cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"#000000\"/>");
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_grid_svg(record: &FigureRecord, path: &Path) -> Result<()> {
    std::fs::write(path, grid_svg_string(record))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StencilEntry {
    pub dx: i64,
    pub dy: i64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StencilReport {
    /// Fine-grid coordinates of the reported C-point.
    pub center: (usize, usize),
    pub entries: Vec<StencilEntry>,
    pub warnings: Vec<String>,
}

impl StencilReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "coarse stencil at ({}, {})", self.center.0, self.center.1);
        for e in &self.entries {
            let _ = writeln!(s, "  ({:+}, {:+})  {:.6e}", e.dx, e.dy, e.value);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        s
    }

    /// Largest magnitude among off-center entries, if any.
    pub fn max_off_center(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.dx != 0 || e.dy != 0)
            .map(|e| e.value.abs())
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

/// C-point closest to the middle of the grid (ties to the lowest index).
pub fn central_coarse_point(partition: &Partition, spec: &ProblemSpec) -> Option<usize> {
    let mid = (spec.side() as f64 + 1.0) / 2.0;
    partition
        .c()
        .iter()
        .copied()
        .map(|i| {
            let (ix, iy) = spec.coords_of(i);
            let d = (ix as f64 - mid).powi(2) + (iy as f64 - mid).powi(2);
            (d, i)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

/// Lists one row of the coarse operator as fine-grid offsets from a C-point.
pub fn coarse_stencil_report(
    a_c: &SparseMatrix,
    partition: &Partition,
    spec: &ProblemSpec,
    center: usize,
) -> Result<StencilReport> {
    if partition.n_coarse() != a_c.n_rows() || a_c.n_rows() != a_c.n_cols() {
        return Err(Error::DimensionMismatch("coarse_stencil_report".into()));
    }
    let rank = partition
        .coarse_rank(center)
        .ok_or_else(|| Error::InvalidParameter(format!("point {center} is not coarse")))?;
    let (cx, cy) = spec.coords_of(center);
    let m = spec.side();
    let mut warnings = Vec::new();
    if cx.min(cy).min(m + 1 - cx).min(m + 1 - cy) < 2 {
        warnings.push(format!("center ({cx}, {cy}) touches the boundary"));
    }
    let (cols, vals) = a_c.row(rank);
    let mut entries: Vec<StencilEntry> = cols
        .iter()
        .zip(vals)
        .map(|(&cr, &v)| {
            let (jx, jy) = spec.coords_of(partition.c()[cr]);
            StencilEntry {
                dx: jx as i64 - cx as i64,
                dy: jy as i64 - cy as i64,
                value: v,
            }
        })
        .collect();
    entries.sort_by_key(|e| (e.dy, e.dx));
    let mut asymmetric = false;
    for e in &entries {
        if e.dx == 0 && e.dy == 0 {
            continue;
        }
        let mirror = entries.iter().find(|o| o.dx == -e.dx && o.dy == -e.dy);
        match mirror {
            Some(o) => {
                let scale = e.value.abs().max(o.value.abs());
                if scale > 0.0 && (e.value - o.value).abs() > 0.05 * scale {
                    asymmetric = true;
                }
            }
            None => asymmetric = true,
        }
    }
    if asymmetric {
        warnings.push("stencil is not symmetric under point reflection".into());
    }
    Ok(StencilReport {
        center: (cx, cy),
        entries,
        warnings,
    })
}
