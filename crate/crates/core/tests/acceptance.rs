//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! straight to stderr so it shows up in captured runs as well.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use orbitforge::curve::{
    energy, grad_j, h1_distance, hamiltonian_residual, ode_residual, psi_curve, refine, subsample, DiscreteCurve,
    Grid, TailLabel,
};
use orbitforge::minimize::{detect_gap, minimize_energy, GapReport, MinimizeOptions, MultistartOptions};
use orbitforge::mountainpass::{
    check_3m, classify_outcome, detect_splitting, init_path, refine_saddle, relax_path, trace_distance,
    ClassifyInputs, PathOptions, RefineOptions, RefinedSaddle, RelaxRecord, RelaxResult, SaddleReport,
};
use orbitforge::symmetry::{
    classify_sym_outcome, equivariance_defect, fold, in_positive_cone, mp_sym, reflect, symmetrize, DriftOptions,
    SymOutcome,
};
use orbitforge::PotentialSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: f64 = 1.0;
const EPS: f64 = 0.1;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "ACCEPTANCE {id:>2} {name}: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn two_channel() -> PotentialSpec {
    PotentialSpec::two_channel(A, EPS)
}

// ---------------------------------------------------------------------------
// Oracles

/// Two-channel potential restricted to the axis `u2 = 0`, written out from
/// its formula.
fn v_axis(s: f64) -> f64 {
    (s * s - 1.0).powi(2) + (A * (1.0 - s * s)).powi(2)
}

/// Composite Simpson rule for `∫_{-1}^{1} sqrt(2 V(s, 0)) ds`, the energy of
/// the planar heteroclinic by equipartition.
fn planar_energy() -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let f = |s: f64| (2.0 * v_axis(s)).sqrt();
    let mut acc = f(-1.0) + f(1.0);
    for i in 1..n {
        let s = -1.0 + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
    }
    acc * h / 3.0
}

/// Planar profile `u1(tau)` with `u1(0) = 0`, from RK4 on the first-order
/// equipartition equation `u' = sqrt(2 V(u, 0))`, at the given offsets.
fn planar_profile(taus: &[f64], max_step: f64) -> Vec<f64> {
    let f = |u: f64| if u < 1.0 { (2.0 * v_axis(u)).sqrt() } else { 0.0 };
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].abs().total_cmp(&taus[b].abs()));
    let mut out = vec![0.0; taus.len()];
    let (mut t, mut u) = (0.0f64, 0.0f64);
    for i in order {
        let target = taus[i].abs();
        while t < target {
            let dt = (target - t).min(max_step);
            let k1 = f(u);
            let k2 = f(u + 0.5 * dt * k1);
            let k3 = f(u + 0.5 * dt * k2);
            let k4 = f(u + dt * k3);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        out[i] = u.copysign(taus[i]);
    }
    out
}

/// Planar oracle sampled on the curve's grid, aligned with the curve's zero
/// crossing of `u1`.
fn planar_oracle_on(q: &DiscreteCurve) -> DiscreteCurve {
    let g = q.grid();
    let u1 = q.component(0);
    let i = (0..u1.len() - 1).find(|&i| u1[i] <= 0.0 && u1[i + 1] > 0.0).expect("u1 crosses zero");
    let t0 = g.t(i) + g.h() * (-u1[i]) / (u1[i + 1] - u1[i]);
    let taus: Vec<f64> = (0..g.nodes()).map(|j| g.t(j) - t0).collect();
    let prof = planar_profile(&taus, g.h() / 8.0);
    let mut values: Vec<f64> = prof.iter().flat_map(|&x| [x, 0.0]).collect();
    let n = values.len();
    values[..2].copy_from_slice(&[-1.0, 0.0]);
    values[n - 2..].copy_from_slice(&[1.0, 0.0]);
    DiscreteCurve::new(g, values, vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap()
}

/// `psi` plus a smooth random perturbation supported in `|t| < T/2`.
fn random_heteroclinic(rng: &mut ChaCha8Rng, grid: Grid, from: &[f64], to: &[f64]) -> DiscreteCurve {
    let half = grid.half_width() / 2.0;
    let k = from.len();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let amp: Vec<f64> = (0..k).map(|_| rng.random_range(-0.6..0.6)).collect();
            (amp, rng.random_range(0.5..3.0), rng.random_range(-half / 2.0..half / 2.0))
        })
        .collect();
    let (from_v, to_v) = (from.to_vec(), to.to_vec());
    DiscreteCurve::from_fn(grid, from, to, |t| {
        let s = 0.5 * (t.clamp(-1.0, 1.0) + 1.0);
        let bump = if t.abs() < half { (1.0 - (t / half).powi(2)).powi(3) } else { 0.0 };
        (0..k)
            .map(|a| {
                let base = (1.0 - s) * from_v[a] + s * to_v[a];
                base + modes.iter().map(|(amp, w, c)| amp[a] * (w * (t - c)).sin() * bump).sum::<f64>()
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Shared two-channel mountain-pass run (T = 10, M = 4001)

struct McRun {
    spec: PotentialSpec,
    gap: GapReport,
    gap_time: Duration,
    reps: Vec<DiscreteCurve>,
    relax: RelaxResult,
    refined: RefinedSaddle,
    report: SaddleReport,
}

fn mp_run() -> &'static McRun {
    static RUN: OnceLock<McRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let spec = two_channel();
        let grid = Grid::new(10.0, 4001).unwrap();
        let t = Instant::now();
        let gap = detect_gap(&spec, grid, [0, 1], &MultistartOptions::default(), &MinimizeOptions::default()).unwrap();
        let gap_time = t.elapsed();
        let reps: Vec<DiscreteCurve> = gap.clusters.iter().map(|c| c.representative.clone()).collect();
        assert!(reps.len() >= 2, "two-channel gap found {} clusters", reps.len());
        let path = init_path(&spec, &reps[0], &reps[1], 17).unwrap();
        let relax = relax_path(&spec, path, &PathOptions::default()).unwrap();
        let climbing = &relax.path.images[relax.climbing_index];
        let refined = refine_saddle(&spec, climbing, &reps, &RefineOptions::default()).unwrap();
        let report = classify_outcome(
            &spec,
            &refined,
            &ClassifyInputs {
                c_est: relax.c_est,
                m_est: gap.best_energy,
                m_star: None,
                endpoints: [0, 1],
                representatives: &reps,
                gap: gap.gap,
                delta: 1.0 / 64.0,
                l_min: 20,
                three_m_tol: 1e-2,
                eta_min_est: gap.best_energy,
            },
        )
        .unwrap();
        McRun {
            spec,
            gap,
            gap_time,
            reps,
            relax,
            refined,
            report,
        }
    })
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

// ---------------------------------------------------------------------------
// Criteria

#[test]
fn criterion_01_closed_form_minimizer_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pdw.toml",
        "[potential]\nbuiltin = \"product_double_well\"\n[grid]\nT = 10.0\nM = 4001\n",
    );
    let out = dir.path().join("out");
    let t = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_orbitforge"))
        .args(["pairs", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let m = report["m_matrix"]["m"].as_f64().unwrap();
    let exact = 4.0 * 2f64.sqrt() / 3.0;
    let pass = status.code() == Some(0) && (m - exact).abs() < 1e-3 && secs < 30.0;
    verdict(1, "closed-form minimizer energy", pass, &format!("m = {m:.7}, 4√2/3 = {exact:.7}, {secs:.1} s"));
    assert!(pass);
}

#[test]
fn criterion_02_gradient_correctness() {
    let t = Instant::now();
    let specs = [PotentialSpec::product_double_well(), two_channel(), PotentialSpec::triple_well()];
    let grid = Grid::new(5.0, 101).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in 0..100 {
        let spec = &specs[n % specs.len()];
        let (i, j) = [(0, 1), (1, 0), (0, spec.wells.len() - 1)][n % 3];
        let q = random_heteroclinic(&mut rng, grid, &spec.wells[i], &spec.wells[j]);
        let g = grad_j(spec, &q);
        let k = q.dim();
        let step = 1e-6;
        let mut err = 0.0f64;
        for d in k..q.values().len() - k {
            let mut plus = q.values().to_vec();
            let mut minus = q.values().to_vec();
            plus[d] += step;
            minus[d] -= step;
            let ep = energy(spec, &q.with_interior(&plus[k..plus.len() - k])).total;
            let em = energy(spec, &q.with_interior(&minus[k..minus.len() - k])).total;
            err = err.max((g[d] - (ep - em) / (2.0 * step)).abs());
        }
        let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        worst = worst.max(err / scale);
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst < 1e-6 && secs < 10.0;
    verdict(2, "gradient correctness", pass, &format!("max relative error {worst:.2e} over 100 curves, {secs:.2} s"));
    assert!(pass);
}

#[test]
fn criterion_03_symmetrization_ordering() {
    let spec = two_channel();
    let grid = Grid::new(10.0, 2001).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sym = f64::NEG_INFINITY;
    let mut worst_fold = f64::NEG_INFINITY;
    for _ in 0..100 {
        let q = random_heteroclinic(&mut rng, grid, &[-1.0, 0.0], &[1.0, 0.0]);
        let e = energy(&spec, &q).total;
        let s = symmetrize(&spec, &q).unwrap();
        let es = energy(&spec, s.curve()).total;
        let f = fold(s.curve()).unwrap();
        let ef = energy(&spec, f.curve()).total;
        assert!(equivariance_defect(f.curve()).is_none() && in_positive_cone(f.curve()));
        worst_sym = worst_sym.max(es - e);
        worst_fold = worst_fold.max(ef - es);
    }
    let pass = worst_sym <= 1e-12 && worst_fold <= 1e-12;
    verdict(
        3,
        "symmetrization ordering",
        pass,
        &format!("max E(sym) - E(q) = {worst_sym:.2e}, max E(fold) - E(sym) = {worst_fold:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_gap_detection() {
    let run = mp_run();
    let g = &run.gap;
    let flipped = |q: &DiscreteCurve| {
        let v: Vec<f64> = q.values().chunks(2).flat_map(|u| [u[0], -u[1]]).collect();
        DiscreteCurve::new(q.grid(), v, vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap()
    };
    let two = g.clusters.len() == 2;
    let exchange = two && {
        let (a, b) = (&g.clusters[0].representative, &g.clusters[1].representative);
        h1_distance(&flipped(a), b).unwrap() < g.threshold && h1_distance(&flipped(b), a).unwrap() < g.threshold
    };
    let gap = g.gap.unwrap_or(0.0);

    let pdw = PotentialSpec::product_double_well();
    let t = Instant::now();
    let single = detect_gap(
        &pdw,
        Grid::new(10.0, 2001).unwrap(),
        [0, 1],
        &MultistartOptions::default(),
        &MinimizeOptions::default(),
    )
    .unwrap();
    let total = run.gap_time + t.elapsed();
    let pass = two && exchange && gap > 0.05 && single.clusters.len() == 1 && total.as_secs_f64() < 300.0;
    verdict(
        4,
        "gap detection",
        pass,
        &format!(
            "two-channel: {} clusters, flip-exchanged {exchange}, gap {gap:.3}; product double-well: {} cluster; {:.1} s",
            g.clusters.len(),
            single.clusters.len(),
            total.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_mountain_pass_geometry() {
    let run = mp_run();
    let oracle = planar_energy();
    let c = run.relax.c_est;
    let m = run.gap.best_energy;
    let r = &run.refined;
    let sol = &r.result.curve;
    let profile = planar_oracle_on(sol);
    let profile_h1 = h1_distance(sol, &profile).unwrap();

    // second order: residual of the h-solution on the 2h stencil, h halved
    let fine_reps: Vec<DiscreteCurve> = run.reps.iter().map(refine).collect();
    let fine = refine_saddle(&run.spec, &refine(sol), &fine_reps, &RefineOptions::default()).unwrap();
    let coarse_res = ode_residual(&run.spec, &subsample(sol, 2).unwrap());
    let fine_res = ode_residual(&run.spec, &subsample(&fine.result.curve, 2).unwrap());
    let ratio = coarse_res / fine_res;

    let ham = hamiltonian_residual(&run.spec, sol);
    let pass = c >= m + 0.01
        && (c - oracle).abs() < 1e-3
        && r.result.grad_sup < 1e-5
        && ham < 1e-4
        && (3.5..=4.5).contains(&ratio)
        && fine.result.converged
        && profile_h1 < 1e-3;
    verdict(
        5,
        "mountain-pass geometry",
        pass,
        &format!(
            "c = {c:.7}, m = {m:.7}, oracle = {oracle:.7}; refined grad {:.1e}, hamiltonian {ham:.2e}, \
             residual ratio {ratio:.3}, H1 to planar profile {profile_h1:.1e}",
            r.result.grad_sup
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_outcome_classification() {
    let run = mp_run();
    let rep = &run.report;
    let hetero = rep.classification == TailLabel::Heteroclinic { from: 0, to: 1 };
    let nu = trace_distance(&run.refined.result.curve, &run.reps, 1);
    let pass = hetero && rep.refined_energy > rep.m_est && nu > 0.1 && rep.trace_distance > 0.1;
    verdict(
        6,
        "outcome classification",
        pass,
        &format!(
            "{:?}, E = {:.7} > m = {:.7}, trace distance {nu:.4}",
            rep.classification, rep.refined_energy, rep.m_est
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_splitting_arithmetic() {
    let spec = PotentialSpec::product_double_well();
    let (a, b) = (vec![-1.0, 0.0], vec![1.0, 0.0]);
    let piece_grid = Grid::new(5.0, 1001).unwrap();
    let piece = minimize_energy(&spec, &psi_curve(piece_grid, &a, &b).unwrap(), &MinimizeOptions::default())
        .unwrap()
        .require_converged("piece")
        .unwrap()
        .curve;
    let back = piece.reversed();
    let plateau = 200;
    let mut values = Vec::new();
    values.extend_from_slice(piece.values());
    values.extend(std::iter::repeat_n(b.clone(), plateau).flatten());
    values.extend_from_slice(back.values());
    values.extend(std::iter::repeat_n(a.clone(), plateau).flatten());
    values.extend_from_slice(piece.values());
    let m_nodes = values.len() / 2;
    let h = piece_grid.h();
    let grid = Grid::new(h * (m_nodes - 1) as f64 / 2.0, m_nodes).unwrap();
    let chain = DiscreteCurve::new(grid, values, a.clone(), b.clone()).unwrap();
    let split = detect_splitting(&spec, &chain, 1.0 / 64.0, 50);
    let three_m = 3.0 * 4.0 * 2f64.sqrt() / 3.0;
    let pass = split.count == 3 && (split.sum - split.total).abs() < 1e-2 && (split.total - three_m).abs() < 1e-2;
    verdict(
        7,
        "splitting arithmetic",
        pass,
        &format!(
            "M = {m_nodes}, j = {}, bump sum {:.6}, total {:.6}, 3m = {three_m:.6}",
            split.count, split.sum, split.total
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_check_3m_arithmetic() {
    let tol = 1e-2;
    // (c, m, expected pass, expected nearest j)
    let table = [
        (2.5, 1.0, true, 1),
        (2.995, 1.0, false, 1),
        (3.0, 1.0, false, 1),
        (3.005, 1.0, false, 1),
        (3.02, 1.0, true, 1),
        (4.2, 1.0, true, 2),
        (4.995, 1.0, false, 2),
        (5.011, 1.0, true, 2),
        (7.0, 1.0, false, 3),
        (6.98, 1.0, true, 3),
        (3.0 * 1.885_618, 1.885_618, false, 1),
        (2.666_667, 2.286_542, true, 1),
    ];
    let mut bad = Vec::new();
    for (c, m, pass, j) in table {
        let r = check_3m(c, m, tol);
        if r.pass != pass || r.nearest_j != j || (r.nearest_multiple - (2 * j + 1) as f64 * m).abs() > 1e-12 {
            bad.push(format!("c = {c}, m = {m}: got pass {} j {}", r.pass, r.nearest_j));
        }
    }
    let pass = bad.is_empty();
    verdict(8, "check_3m arithmetic", pass, &format!("{} rows, mismatches: {bad:?}", table.len()));
    assert!(pass);
}

#[test]
fn criterion_09_symmetric_pipeline() {
    let run = mp_run();
    let spec = &run.spec;
    let sym = mp_sym(spec, &run.reps[0], &run.reps[1], &PathOptions::default(), Some((1.0 / 64.0, 20))).unwrap();
    let all_equivariant = sym.equivariance_checks > 0
        && sym
            .relax
            .path
            .images
            .iter()
            .all(|c| equivariance_defect(c).is_none() && in_positive_cone(c));
    let m = run.gap.best_energy;
    let c_sym = sym.c_sym;
    let c = run.relax.c_est;

    // synthetic drift: an equivariant heteroclinic carrying a pair of mirrored
    // bumps pushed outwards over the recorded iterations
    let opts = DriftOptions::default();
    let grid = Grid::new(20.0, 2001).unwrap();
    let seeded = |x0: f64| {
        let b = move |t: f64| 0.6 * (-(t * t)).exp();
        DiscreteCurve::from_fn(grid, &[-1.0, 0.0], &[1.0, 0.0], move |t| {
            vec![(2.0 * t).tanh() - b(t - x0) + b(t + x0), b(t - x0) + b(t + x0)]
        })
    };
    let history: Vec<RelaxRecord> = (0..120)
        .map(|it| {
            let q = seeded(4.0 + 0.08 * it as f64);
            assert!(equivariance_defect(&q).is_none());
            RelaxRecord {
                iteration: it,
                max_energy: energy(spec, &q).total,
                climbing_index: 1,
                bump_centers: detect_splitting(spec, &q, opts.delta, opts.l_min).bumps.iter().map(|b| b.center).collect(),
            }
        })
        .collect();
    let last = seeded(4.0 + 0.08 * 119.0);
    let refine = RefineOptions { max_iter: 5, ..Default::default() };
    let outcome = classify_sym_outcome(spec, &history, &last, None, 0.0, &opts, &refine).unwrap();
    let pair_ok = match &outcome {
        SymOutcome::Dichotomy { plus, minus, .. } => {
            plus.left_well() == [1.0, 0.0]
                && plus.right_well() == [1.0, 0.0]
                && minus.left_well() == [-1.0, 0.0]
                && minus.right_well() == [-1.0, 0.0]
                && (0..plus.len()).all(|i| minus.node(i) == reflect(plus.node(i)).as_slice())
        }
        SymOutcome::SymmetricSaddle { .. } => false,
    };
    let pass = all_equivariant && c_sym >= m + 0.01 && (c_sym - c).abs() <= 1e-3 && pair_ok;
    verdict(
        9,
        "symmetric pipeline",
        pass,
        &format!(
            "{} equivariance checks, c_sym = {c_sym:.7}, c = {c:.7}, m = {m:.7}; drift seed -> {}",
            sym.equivariance_checks,
            outcome.label()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tc.toml",
        "[potential]\nbuiltin = \"two_channel\"\n[grid]\nM = 801\n[multistart]\nn_seeds = 12\nrng_seed = 7\n",
    );
    let run = |out: &str| {
        let out = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_orbitforge"))
            .args(["mp", "--workers", "2", "--normalized-report", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), std::fs::read(out.join("report.json")).unwrap())
    };
    let (c1, r1) = run("first");
    let (c2, r2) = run("second");
    let pass = c1 == Some(0) && c2 == Some(0) && r1 == r2;
    verdict(
        10,
        "reproducibility",
        pass,
        &format!("exit codes {c1:?}/{c2:?}, reports {} bytes, identical {}", r1.len(), r1 == r2),
    );
    assert!(pass);
}
