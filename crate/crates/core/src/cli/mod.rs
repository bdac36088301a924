//! Batch front door: parse a run configuration, execute one pipeline and
//! write the JSON report plus plot-ready CSVs.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::curve::{
    energy, hamiltonian_residual, ode_residual, read_orbit_csv, tail_energy_fraction, classify_tails, DiscreteCurve,
};
use crate::error::Error;
use crate::minimize::{compute_m, detect_gap, m_matrix, GapReport, MMatrix};
use crate::mountainpass::{
    classify_outcome, init_path, refine_saddle, relax_path, ClassifyInputs, detect_splitting,
};
use crate::potential::{audit, AssumptionReport, PotentialSpec};
use crate::symmetry::{center_distance, classify_sym_outcome, mp_sym, refine_symmetric, SymOutcome};

pub use config::RunConfig;
pub use report::{emit_plot_data, RunReport};
use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSUMPTION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Verify,
    Minimize,
    Pairs,
    Gap,
    Mp,
    MpSym,
    Diagnose,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Verify => "verify",
            Subcommand::Minimize => "minimize",
            Subcommand::Pairs => "pairs",
            Subcommand::Gap => "gap",
            Subcommand::Mp => "mp",
            Subcommand::MpSym => "mp-sym",
            Subcommand::Diagnose => "diagnose",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub rng_seed: Option<u64>,
    pub n_seeds: Option<usize>,
    pub orbit: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    /// Drop timings and filesystem locations so that reports are comparable
    /// byte for byte.
    pub normalized: bool,
    pub overrides: Overrides,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: RunReport,
    pub report_path: PathBuf,
}

/// Exit code for an error raised by a stage.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::GridTooSmall(_) | Error::GridMismatch | Error::WellMismatch | Error::Io(_) => {
            EXIT_CONFIG
        }
        Error::SpecViolation(_) | Error::NegativeValue { .. } => EXIT_ASSUMPTION,
        _ => EXIT_SOLVER,
    }
}

/// A failed stage: exit code plus message.
struct Stop(i32, String);

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop(exit_code(&e), e.to_string())
    }
}

struct Runner {
    report: RunReport,
    normalized: bool,
}

impl Runner {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> std::result::Result<T, Stop>) -> std::result::Result<T, Stop> {
        let t = Instant::now();
        let r = f(self);
        let seconds = (!self.normalized).then(|| t.elapsed().as_secs_f64());
        self.report.stages.push(StageRecord {
            name: name.to_string(),
            pass: r.is_ok(),
            seconds,
        });
        if let Err(Stop(code, msg)) = &r {
            self.report.error = Some(StageError {
                stage: name.to_string(),
                message: msg.clone(),
            });
            self.report.exit_code = *code;
        }
        r
    }
}

/// Load the config at `config_path`, run `cmd` and write the report. The
/// JSON report is written even when a stage fails.
pub fn run(cmd: Subcommand, config_path: &Path, opts: &RunOptions) -> RunOutcome {
    let started = Instant::now();
    let mut runner = Runner {
        report: RunReport::new(cmd.name(), opts.workers, opts.normalized),
        normalized: opts.normalized,
    };
    let loaded = RunConfig::load(config_path).and_then(|mut cfg| {
        apply_overrides(&mut cfg, &opts.overrides);
        cfg.validate()?;
        Ok(cfg)
    });
    let out_dir = match &loaded {
        Ok(cfg) => cfg.output.directory.clone(),
        Err(_) => opts.overrides.out.clone().unwrap_or_else(|| PathBuf::from("out")),
    };
    let result = match loaded {
        Err(e) => {
            let _ = runner.stage("config", |_| Err::<(), _>(Stop::from(e)));
            None
        }
        Ok(cfg) => {
            let mut echo = cfg.clone();
            if opts.normalized {
                echo.output.directory = PathBuf::from(".");
                echo.diagnose.orbit = echo.diagnose.orbit.as_deref().and_then(Path::file_name).map(PathBuf::from);
            }
            runner.report.config = Some(echo);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(opts.workers.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")));
            match pool {
                Err(e) => {
                    let _ = runner.stage("config", |_| Err::<(), _>(Stop::from(e)));
                    None
                }
                Ok(pool) => {
                    let spec = pool.install(|| execute(&mut runner, cmd, &cfg)).ok();
                    Some((cfg, spec))
                }
            }
        }
    };
    if let Some((cfg, Some(spec))) = &result {
        if cfg.csv() {
            match emit_plot_data(spec, &runner.report.plot, &out_dir) {
                Ok(files) => runner.report.files = files,
                Err(e) => {
                    let _ = runner.stage("emit", |_| Err::<(), _>(Stop::from(e)));
                }
            }
        }
    }
    if !opts.normalized {
        runner.report.total_seconds = Some(started.elapsed().as_secs_f64());
    }
    runner.report.files.push("report.json".to_string());
    let report_path = out_dir.join("report.json");
    let written = std::fs::create_dir_all(&out_dir).and_then(|_| std::fs::write(&report_path, runner.report.to_json()));
    if let Err(e) = written {
        eprintln!("orbitforge: cannot write {}: {e}", report_path.display());
        if runner.report.exit_code == EXIT_OK {
            runner.report.exit_code = EXIT_CONFIG;
        }
    }
    RunOutcome {
        exit_code: runner.report.exit_code,
        report: runner.report,
        report_path,
    }
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(d) = &o.out {
        cfg.output.directory = d.clone();
    }
    if let Some(s) = o.rng_seed {
        cfg.multistart.rng_seed = s;
    }
    if let Some(n) = o.n_seeds {
        cfg.multistart.n_seeds = n;
    }
    if let Some(p) = &o.orbit {
        cfg.diagnose.orbit = Some(p.clone());
    }
}

/// Run the stages of `cmd`; returns the resolved spec if it got that far.
fn execute(runner: &mut Runner, cmd: Subcommand, cfg: &RunConfig) -> std::result::Result<PotentialSpec, ()> {
    let spec = runner
        .stage("config", |_| {
            let spec = cfg.potential.resolve()?;
            let l = spec.well_count();
            if cfg.pair.from >= l || cfg.pair.to >= l {
                return Err(Error::Config(format!("pair ({}, {}) is out of range for {l} wells", cfg.pair.from, cfg.pair.to)).into());
            }
            if cmd == Subcommand::MpSym && !spec.symmetric {
                return Err(Error::Config("mp-sym requires a potential with symmetric = true".into()).into());
            }
            Ok(spec)
        })
        .map_err(|_| ())?;
    runner.report.potential = Some(spec.clone());
    let _ = run_stages(runner, cmd, cfg, &spec);
    Ok(spec)
}

fn run_stages(runner: &mut Runner, cmd: Subcommand, cfg: &RunConfig, spec: &PotentialSpec) -> std::result::Result<(), Stop> {
    runner.stage("verify", |r| {
        let a = audit(spec, &cfg.sampling)?;
        let failure = assumption_failure(&a);
        r.report.assumptions = Some(a);
        match failure {
            Some(msg) => Err(Stop(EXIT_ASSUMPTION, msg)),
            None => Ok(()),
        }
    })?;
    let grid = cfg.grid()?;
    let ms = cfg.multistart;
    let mo = cfg.minimize_options();
    let ends = [cfg.pair.from, cfg.pair.to];
    match cmd {
        Subcommand::Verify => Ok(()),
        Subcommand::Minimize => runner.stage("minimize", |r| {
            let (e, best) = compute_m(spec, ends[0], ends[1], grid, &ms, &mo)?;
            r.report.minimizer = Some(MinimizerSummary {
                from: ends[0],
                to: ends[1],
                energy: e,
                grad_sup: best.grad_sup,
                iterations: best.iterations,
                converged: best.converged,
            });
            r.report.plot.orbits.push(("minimizer".into(), best.curve));
            Ok(())
        }),
        Subcommand::Pairs => {
            let mm = pairs_stage(runner, spec, cfg, ends)?;
            runner.stage("triangle", |_| triangle_check(&mm))
        }
        Subcommand::Gap => gap_stage(runner, spec, cfg, ends).map(|_| ()),
        Subcommand::Mp => mp_stages(runner, spec, cfg, ends),
        Subcommand::MpSym => mp_sym_stages(runner, spec, cfg, ends),
        Subcommand::Diagnose => runner.stage("diagnose", |r| {
            let path = cfg
                .diagnose
                .orbit
                .clone()
                .ok_or_else(|| Error::Config("diagnose needs an orbit CSV (--orbit or diagnose.orbit)".into()))?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read orbit {}: {e}", path.display())))?;
            let curve = read_orbit_csv(spec, &text)?;
            let e = energy(spec, &curve);
            let d = &cfg.diagnostics;
            let orbit = if r.normalized {
                path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned())
            } else {
                path.display().to_string()
            };
            r.report.diagnose = Some(DiagnoseSection {
                orbit,
                nodes: curve.len(),
                half_width: curve.grid().half_width(),
                energy: (&e).into(),
                ode_residual: ode_residual(spec, &curve),
                hamiltonian_residual: hamiltonian_residual(spec, &curve),
                tail_energy_fraction: tail_energy_fraction(spec, &curve),
                classification: classify_tails(spec, &curve, d.delta),
                splitting: detect_splitting(spec, &curve, d.delta, d.l_min),
            });
            Ok(())
        }),
    }
}

/// First failing assumption check, phrased with its constant.
fn assumption_failure(a: &AssumptionReport) -> Option<String> {
    if !a.zero_set.pass {
        return Some(format!(
            "zero set: V = {:e} at {:?} away from the wells (max |V(sigma)| = {:e})",
            a.zero_set.min_value_off_wells, a.zero_set.argmin_off_wells, a.zero_set.max_well_value
        ));
    }
    if !a.nondegeneracy.pass {
        let w = a.nondegeneracy.wells.iter().find(|w| !w.pass).unwrap_or(&a.nondegeneracy.wells[0]);
        return Some(format!(
            "nondegeneracy: well {} has Hessian eigenvalues {:?} (delta = {:e}, beta = {:e})",
            w.well, w.eigenvalues, w.delta, w.beta
        ));
    }
    if !a.coercivity.pass {
        return Some(format!(
            "coercivity: alpha0 = {:e}, beta0 = {:e} on |u| >= R0 = {} (worst point {:?})",
            a.coercivity.alpha0, a.coercivity.beta0, a.coercivity.r0, a.coercivity.worst_point
        ));
    }
    if let Some(s) = a.symmetry.as_ref().filter(|s| !s.pass) {
        return Some(format!(
            "symmetry: V(s(u)) differs from V(u) by up to {:e}",
            s.max_abs_difference
        ));
    }
    None
}

fn triangle_check(mm: &MMatrix) -> std::result::Result<(), Stop> {
    match mm.margins.iter().find(|t| t.margin <= mm.margin_tol) {
        Some(t) => Err(Stop(
            EXIT_ASSUMPTION,
            format!(
                "triangle inequality: m via well {} is {} <= m + margin_tol ({} + {})",
                t.via, t.sum, mm.m, mm.margin_tol
            ),
        )),
        None => Ok(()),
    }
}

fn pairs_stage(runner: &mut Runner, spec: &PotentialSpec, cfg: &RunConfig, ends: [usize; 2]) -> std::result::Result<MMatrix, Stop> {
    runner.stage("pairs", |r| {
        let (mm, best) = m_matrix(
            spec,
            cfg.grid()?,
            ends,
            &cfg.multistart,
            &cfg.minimize_options(),
            cfg.diagnostics.margin_tol,
        )?;
        for (i, row) in best.into_iter().enumerate() {
            for (j, b) in row.into_iter().enumerate() {
                if let Some(b) = b {
                    r.report.plot.orbits.push((format!("minimizer_{i}_{j}"), b.curve));
                }
            }
        }
        r.report.m_matrix = Some(mm.clone());
        Ok(mm)
    })
}

fn gap_stage(runner: &mut Runner, spec: &PotentialSpec, cfg: &RunConfig, ends: [usize; 2]) -> std::result::Result<GapReport, Stop> {
    runner.stage("gap", |r| {
        let g = detect_gap(spec, cfg.grid()?, ends, &cfg.multistart, &cfg.minimize_options())?;
        if g.converged_seeds == 0 {
            return Err(Error::AllSeedsFailed { from: ends[0], to: ends[1] }.into());
        }
        r.report.gap = Some(GapSummary::new(&g));
        for (c, cl) in g.clusters.iter().enumerate() {
            r.report.plot.orbits.push((format!("minimizer_{c}"), cl.representative.clone()));
        }
        if g.pass {
            Ok(g)
        } else {
            Err(Stop(
                EXIT_ASSUMPTION,
                format!(
                    "gap: {} cluster(s), gap {:?} against threshold {}",
                    g.clusters.len(),
                    g.gap,
                    g.threshold
                ),
            ))
        }
    })
}

/// `m*` and the smallest nonzero `m_ij`, when a third well exists.
fn third_well_data(runner: &mut Runner, spec: &PotentialSpec, cfg: &RunConfig, ends: [usize; 2]) -> std::result::Result<(Option<f64>, Option<f64>), Stop> {
    if spec.well_count() < 3 {
        return Ok((None, None));
    }
    let mm = runner.stage("pairs", |r| {
        let (mm, _) = m_matrix(spec, cfg.grid()?, ends, &cfg.multistart, &cfg.minimize_options(), cfg.diagnostics.margin_tol)?;
        r.report.m_matrix = Some(mm.clone());
        Ok(mm)
    })?;
    let eta = mm
        .values
        .iter()
        .flatten()
        .copied()
        .filter(|v| *v > 0.0)
        .reduce(f64::min);
    Ok((mm.m_star, eta))
}

fn mp_stages(runner: &mut Runner, spec: &PotentialSpec, cfg: &RunConfig, ends: [usize; 2]) -> std::result::Result<(), Stop> {
    let g = gap_stage(runner, spec, cfg, ends)?;
    let (m_star, eta) = third_well_data(runner, spec, cfg, ends)?;
    let reps: Vec<DiscreteCurve> = g.clusters.iter().map(|c| c.representative.clone()).collect();
    let relax = runner.stage("relax", |r| {
        let path = init_path(spec, &reps[0], &reps[1], cfg.path.n)?;
        let res = relax_path(spec, path, &cfg.path_options())?;
        r.report.saddle = Some(SaddleSection {
            relax: RelaxSummary::new(&res),
            refine_iterations: None,
            pinned_dof: None,
            outcome: None,
        });
        r.report.plot.paths.push(("mp".into(), res.path.clone()));
        if res.converged {
            Ok(res)
        } else {
            Err(Error::NonConvergence {
                stage: "relax_path".into(),
                iterations: res.iterations,
                grad_sup: res.grad_sup,
            }
            .into())
        }
    })?;
    let climbing = relax.path.images[relax.climbing_index].clone();
    let refined = runner.stage("refine", |r| {
        let rf = refine_saddle(spec, &climbing, &reps, &cfg.refine_options())?;
        if let Some(s) = r.report.saddle.as_mut() {
            s.refine_iterations = Some(rf.result.iterations);
            s.pinned_dof = Some(rf.pinned_dof);
        }
        r.report.plot.orbits.push(("saddle".into(), rf.result.curve.clone()));
        if !rf.result.converged {
            return Err(Error::NonConvergence {
                stage: "refine_saddle".into(),
                iterations: rf.result.iterations,
                grad_sup: rf.result.grad_sup,
            }
            .into());
        }
        Ok(rf)
    })?;
    runner.stage("classify", |r| {
        let d = &cfg.diagnostics;
        let inputs = ClassifyInputs {
            c_est: relax.c_est,
            m_est: g.best_energy,
            m_star,
            endpoints: ends,
            representatives: &reps,
            gap: g.gap,
            delta: d.delta,
            l_min: d.l_min,
            three_m_tol: d.three_m_tol,
            eta_min_est: eta.unwrap_or(g.best_energy),
        };
        let rep = classify_outcome(spec, &refined, &inputs)?;
        if let Some(s) = r.report.saddle.as_mut() {
            s.outcome = Some(rep);
        }
        Ok(())
    })
}

fn mp_sym_stages(runner: &mut Runner, spec: &PotentialSpec, cfg: &RunConfig, ends: [usize; 2]) -> std::result::Result<(), Stop> {
    let g = gap_stage(runner, spec, cfg, ends)?;
    let reps: Vec<DiscreteCurve> = g.clusters.iter().map(|c| c.representative.clone()).collect();
    let d = cfg.diagnostics;
    let run = runner.stage("relax_sym", |r| {
        let run = mp_sym(spec, &reps[0], &reps[1], &cfg.path_options(), Some((d.delta, d.l_min)))?;
        r.report.symmetric = Some(SymSection {
            relax: RelaxSummary::new(&run.relax),
            c_sym: run.c_sym,
            m_est: g.best_energy,
            c_sym_minus_m: run.c_sym - g.best_energy,
            equivariance_checks: run.equivariance_checks,
            refined: None,
            outcome: None,
            outcome_energy: None,
            outcome_converged: None,
            drift_displacement: None,
            center_distance: None,
            reflection: None,
            refine_error: None,
        });
        r.report.plot.paths.push(("mp_sym".into(), run.relax.path.clone()));
        Ok(run)
    })?;
    let climbing = &run.relax.path.images[run.relax.climbing_index];
    // A failed refinement is not fatal here: the drift branch may still apply.
    let refined = if run.relax.converged {
        runner.stage("refine_sym", |r| {
            let rf = refine_symmetric(spec, climbing, &reps, &cfg.refine_options());
            if let Some(s) = r.report.symmetric.as_mut() {
                match &rf {
                    Ok(rf) => {
                        s.refined = Some(RefinedSummary {
                            energy: rf.result.energy,
                            grad_sup: rf.result.grad_sup,
                            converged: rf.result.converged,
                            ode_residual: rf.ode_residual,
                            hamiltonian_residual: rf.hamiltonian_residual,
                        })
                    }
                    Err(e) => s.refine_error = Some(e.to_string()),
                }
            }
            Ok(rf.ok())
        })?
    } else {
        None
    };
    runner.stage("classify_sym", |r| {
        let out = classify_sym_outcome(
            spec,
            &run.relax.history,
            climbing,
            refined.as_ref(),
            run.c_sym,
            &cfg.drift_options(),
            &cfg.refine_options(),
        )?;
        let s = r.report.symmetric.as_mut().expect("relax_sym filled the section");
        s.outcome = Some(out.label().to_string());
        match out {
            SymOutcome::SymmetricSaddle { curve, energy } => {
                s.outcome_energy = Some(energy);
                s.outcome_converged = Some(true);
                s.center_distance = Some(center_distance(&curve, &reps));
                r.report.plot.orbits.push(("saddle_sym".into(), curve));
            }
            SymOutcome::Dichotomy {
                plus,
                minus,
                energy,
                converged,
                displacement,
            } => {
                s.outcome_energy = Some(energy);
                s.outcome_converged = Some(converged);
                s.drift_displacement = Some(displacement);
                s.reflection = Some("homoclinic_minus = s(homoclinic_plus) nodewise".into());
                r.report.plot.orbits.push(("homoclinic_plus".into(), plus));
                r.report.plot.orbits.push(("homoclinic_minus".into(), minus));
            }
        }
        Ok(())
    })
}

/// Entry point shared by the binary: run and report to stderr.
pub fn main_with(cmd: Subcommand, config: &Path, opts: &RunOptions) -> i32 {
    let out = run(cmd, config, opts);
    if let Some(e) = &out.report.error {
        eprintln!("orbitforge {}: stage `{}` failed: {}", cmd.name(), e.stage, e.message);
    }
    eprintln!("report: {}", out.report_path.display());
    out.exit_code
}
