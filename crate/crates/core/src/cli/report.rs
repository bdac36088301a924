use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::curve::{orbit_csv, DiscreteCurve, EnergyBreakdown, TailLabel};
use crate::error::Result;
use crate::minimize::{GapReport, MMatrix};
use crate::mountainpass::{CurvePath, RelaxResult, SaddleReport, SplittingReport};
use crate::potential::{AssumptionReport, PotentialSpec};

use super::config::RunConfig;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Software {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerSummary {
    pub from: usize,
    pub to: usize,
    pub energy: f64,
    pub grad_sup: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub representative_seed: usize,
    pub representative_energy: f64,
    pub members: Vec<usize>,
    pub energy_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub clusters: Vec<ClusterSummary>,
    pub distances: Vec<Vec<f64>>,
    pub gap: Option<f64>,
    pub threshold: f64,
    pub best_energy: f64,
    pub converged_seeds: usize,
    pub pass: bool,
    /// With two clusters: H¹ distance between one representative and the
    /// transverse flip `(u1, -u2, ..., -uk)` of the other.
    pub transverse_flip_distance: Option<f64>,
}

impl GapSummary {
    pub fn new(g: &GapReport) -> Self {
        let transverse_flip_distance = match g.clusters.as_slice() {
            [a, b] if a.representative.dim() > 1 => {
                let f = transverse_flip(&a.representative);
                crate::curve::h1_distance(&f, &b.representative).ok()
            }
            _ => None,
        };
        GapSummary {
            clusters: g
                .clusters
                .iter()
                .map(|c| ClusterSummary {
                    representative_seed: c.representative_seed,
                    representative_energy: c.representative_energy,
                    members: c.members.clone(),
                    energy_spread: c.energy_spread,
                })
                .collect(),
            distances: g.distances.clone(),
            gap: g.gap,
            threshold: g.threshold,
            best_energy: g.best_energy,
            converged_seeds: g.converged_seeds,
            pass: g.pass,
            transverse_flip_distance,
        }
    }
}

/// `(u1, u2, ..., uk) -> (u1, -u2, ..., -uk)` at every node.
pub fn transverse_flip(q: &DiscreteCurve) -> DiscreteCurve {
    let k = q.dim();
    let flip = |u: &[f64]| -> Vec<f64> {
        u.iter().enumerate().map(|(a, x)| if a == 0 { *x } else { -x }).collect()
    };
    let values: Vec<f64> = q.values().chunks(k).flat_map(flip).collect();
    DiscreteCurve::new(q.grid(), values, flip(q.left_well()), flip(q.right_well()))
        .expect("flip of a valid curve is valid")
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxSummary {
    pub iterations: usize,
    pub converged: bool,
    pub grad_sup: f64,
    pub c_est: f64,
    pub climbing_index: usize,
    pub spring: f64,
    pub monotone_violations: usize,
    pub max_increase: f64,
    pub image_energies: Vec<f64>,
}

impl RelaxSummary {
    pub fn new(r: &RelaxResult) -> Self {
        RelaxSummary {
            iterations: r.iterations,
            converged: r.converged,
            grad_sup: r.grad_sup,
            c_est: r.c_est,
            climbing_index: r.climbing_index,
            spring: r.spring,
            monotone_violations: r.monotone_violations,
            max_increase: r.max_increase,
            image_energies: r.path.energies.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleSection {
    pub relax: RelaxSummary,
    pub refine_iterations: Option<usize>,
    pub pinned_dof: Option<usize>,
    pub outcome: Option<SaddleReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinedSummary {
    pub energy: f64,
    pub grad_sup: f64,
    pub converged: bool,
    pub ode_residual: f64,
    pub hamiltonian_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymSection {
    pub relax: RelaxSummary,
    pub c_sym: f64,
    pub m_est: f64,
    pub c_sym_minus_m: f64,
    pub equivariance_checks: usize,
    pub refined: Option<RefinedSummary>,
    pub refine_error: Option<String>,
    pub outcome: Option<String>,
    pub outcome_energy: Option<f64>,
    pub outcome_converged: Option<bool>,
    pub drift_displacement: Option<usize>,
    /// Distance of the orbit's center node to the minimizers' center nodes.
    pub center_distance: Option<f64>,
    pub reflection: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseSection {
    pub orbit: String,
    pub nodes: usize,
    pub half_width: f64,
    pub energy: EnergyTotals,
    pub ode_residual: f64,
    pub hamiltonian_residual: f64,
    pub tail_energy_fraction: f64,
    pub classification: TailLabel,
    pub splitting: SplittingReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyTotals {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

impl From<&EnergyBreakdown> for EnergyTotals {
    fn from(e: &EnergyBreakdown) -> Self {
        EnergyTotals {
            kinetic: e.kinetic,
            potential: e.potential,
            total: e.total,
        }
    }
}

/// Orbits and paths held for plot-data emission.
#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub orbits: Vec<(String, DiscreteCurve)>,
    pub paths: Vec<(String, CurvePath)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub software: Software,
    pub subcommand: String,
    pub workers: Option<usize>,
    pub normalized: bool,
    pub config: Option<RunConfig>,
    pub potential: Option<PotentialSpec>,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_seconds: Option<f64>,
    pub assumptions: Option<AssumptionReport>,
    pub minimizer: Option<MinimizerSummary>,
    pub m_matrix: Option<MMatrix>,
    pub gap: Option<GapSummary>,
    pub saddle: Option<SaddleSection>,
    pub symmetric: Option<SymSection>,
    pub diagnose: Option<DiagnoseSection>,
    pub files: Vec<String>,
    pub exit_code: i32,
    pub error: Option<StageError>,
    #[serde(skip)]
    pub plot: PlotData,
}

impl RunReport {
    pub fn new(subcommand: &str, workers: Option<usize>, normalized: bool) -> Self {
        RunReport {
            schema: SCHEMA,
            software: Software {
                name: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
            },
            subcommand: subcommand.to_string(),
            workers,
            normalized,
            config: None,
            potential: None,
            stages: Vec::new(),
            total_seconds: None,
            assumptions: None,
            minimizer: None,
            m_matrix: None,
            gap: None,
            saddle: None,
            symmetric: None,
            diagnose: None,
            files: Vec::new(),
            exit_code: 0,
            error: None,
            plot: PlotData::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Write one trace CSV per orbit, one energy profile per path and, when
/// there are orbits, a combined `traces_all.csv`. Returns the file names.
pub fn emit_plot_data(spec: &PotentialSpec, plot: &PlotData, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (name, c) in &plot.orbits {
        let f = format!("trace_{name}.csv");
        std::fs::write(dir.join(&f), orbit_csv(spec, c))?;
        files.push(f);
    }
    for (name, p) in &plot.paths {
        let f = format!("path_{name}.csv");
        std::fs::write(dir.join(&f), p.profile_csv(spec))?;
        files.push(f);
    }
    if let Some((_, first)) = plot.orbits.first() {
        let mut s = String::from("curve,t");
        for a in 1..=first.dim() {
            let _ = write!(s, ",u_{a}");
        }
        s.push('\n');
        for (name, c) in &plot.orbits {
            for i in 0..c.len() {
                let _ = write!(s, "{name},{:.16e}", c.grid().t(i));
                for x in c.node(i) {
                    let _ = write!(s, ",{x:.16e}");
                }
                s.push('\n');
            }
        }
        std::fs::write(dir.join("traces_all.csv"), s)?;
        files.push("traces_all.csv".to_string());
    }
    Ok(files)
}
