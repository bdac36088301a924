//! Mountain-pass saddles between two minimizing clusters: climbing-image
//! elastic-band relaxation of a discrete path family, Newton refinement of the
//! climbing image, and the diagnostic battery run on the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{
    action, action_gradient, classify_tails, energy, grad_j, h1_distance, h1_norm_sq, hamiltonian_residual,
    normalize_translation, ode_residual, DiscreteCurve, TailLabel,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, sup_norm, BandedMatrix, H1Gram};
use crate::minimize::MinimizeResult;
use crate::potential::{dist2, PotentialSpec};

/// Ordered family of curves on one grid joining two minimizers.
#[derive(Debug, Clone)]
pub struct CurvePath {
    pub images: Vec<DiscreteCurve>,
    pub energies: Vec<f64>,
}

impl CurvePath {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Index and energy of the highest interior image (an endpoint if there
    /// are none).
    pub fn max_image(&self) -> (usize, f64) {
        let n = self.len();
        let range = if n > 2 { 1..n - 1 } else { 0..n };
        range
            .map(|j| (j, self.energies[j]))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
    }

    /// Path energy profile CSV with columns `s,image_energy,grad_norm`.
    pub fn profile_csv(&self, spec: &PotentialSpec) -> String {
        let n = self.len();
        let mut out = String::from("s,image_energy,grad_norm\n");
        for (j, (c, e)) in self.images.iter().zip(&self.energies).enumerate() {
            let s = if n > 1 { j as f64 / (n - 1) as f64 } else { 0.0 };
            let g = sup_norm(&grad_j(spec, c));
            out.push_str(&format!("{s:.16e},{e:.16e},{g:.16e}\n"));
        }
        out
    }
}

/// Straight-line family `(1 - s) q0 + s q1` at `s = j / (N - 1)`.
pub fn init_path(spec: &PotentialSpec, q0: &DiscreteCurve, q1: &DiscreteCurve, n: usize) -> Result<CurvePath> {
    if n < 2 {
        return Err(Error::Config(format!("a path needs at least 2 images, got {n}")));
    }
    let images = (0..n)
        .map(|j| {
            if j == 0 {
                Ok(q0.clone())
            } else if j == n - 1 {
                q0.lerp(q1, 1.0).map(|_| q1.clone())
            } else {
                q0.lerp(q1, j as f64 / (n - 1) as f64)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let energies = images.iter().map(|c| energy(spec, c).total).collect();
    Ok(CurvePath { images, energies })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub images: usize,
    /// Spring constant; scaled from the initial forces when absent.
    pub spring: Option<f64>,
    pub climbing: bool,
    pub tol_grad: f64,
    pub max_iter: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            images: 17,
            spring: None,
            climbing: true,
            tol_grad: 1e-5,
            max_iter: 20_000,
        }
    }
}

/// Per-iteration trace of a relaxation.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxRecord {
    pub iteration: usize,
    pub max_energy: f64,
    pub climbing_index: usize,
    /// Bump centers (node indices) of the highest image, when tracked.
    pub bump_centers: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RelaxResult {
    pub path: CurvePath,
    pub c_est: f64,
    pub climbing_index: usize,
    pub grad_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub spring: f64,
    /// Accepted steps that raised the max image energy after the
    /// backtracking budget was exhausted.
    pub monotone_violations: usize,
    pub max_increase: f64,
    pub history: Vec<RelaxRecord>,
}

/// Hook applied to every image after each update (e.g. a symmetry
/// projection). An error aborts the relaxation.
pub type ImageHook<'a> = &'a (dyn Fn(&mut DiscreteCurve) -> Result<()> + Sync);

/// Extra controls for `relax_path_with`.
#[derive(Default, Clone, Copy)]
pub struct RelaxControls<'a> {
    pub hook: Option<ImageHook<'a>>,
    /// `(delta, l_min)` for recording bump centers of the highest image.
    pub track_bumps: Option<(f64, usize)>,
}

const STEP_MAX: f64 = 1.0;
const STEP_MIN: f64 = 1e-4;
const BACKTRACK: usize = 8;

struct ImageForces {
    force: Vec<f64>,
    grad_sup: f64,
    perp_h1: f64,
}

fn h1_norm_interior(gram: &H1Gram, v: &[f64]) -> f64 {
    gram.inner(v, v).max(0.0).sqrt()
}

/// Climbing-image elastic-band relaxation with H¹-preconditioned forces.
pub fn relax_path(spec: &PotentialSpec, path: CurvePath, opts: &PathOptions) -> Result<RelaxResult> {
    relax_path_with(spec, path, opts, RelaxControls::default())
}

pub fn relax_path_with(
    spec: &PotentialSpec,
    mut path: CurvePath,
    opts: &PathOptions,
    controls: RelaxControls<'_>,
) -> Result<RelaxResult> {
    let n = path.len();
    let first = &path.images[0];
    let (k, grid) = (first.dim(), first.grid());
    let h = grid.h();
    let gram = H1Gram::new(grid.nodes() - 2, k, h);
    for c in &path.images {
        h1_distance(first, c).map(|_| ())?;
    }
    let record = |path: &CurvePath, iteration: usize| -> RelaxRecord {
        let (ci, e) = path.max_image();
        let bump_centers = controls
            .track_bumps
            .map(|(d, l)| {
                detect_splitting(spec, &path.images[ci], d, l)
                    .bumps
                    .iter()
                    .map(|b| b.center)
                    .collect()
            })
            .unwrap_or_default();
        RelaxRecord {
            iteration,
            max_energy: e,
            climbing_index: ci,
            bump_centers,
        }
    };
    let mut history = vec![record(&path, 0)];
    if n < 3 {
        let (ci, c_est) = path.max_image();
        let grad_sup = sup_norm(&grad_j(spec, &path.images[ci]));
        return Ok(RelaxResult {
            path,
            c_est,
            climbing_index: ci,
            grad_sup,
            iterations: 0,
            converged: grad_sup < opts.tol_grad,
            spring: 0.0,
            monotone_violations: 0,
            max_increase: 0.0,
            history,
        });
    }

    let forces = |path: &CurvePath, climb: Option<usize>, kappa: f64| -> Vec<ImageForces> {
        (1..n - 1)
            .into_par_iter()
            .map(|j| {
                let u = &path.images[j];
                let mut g = vec![0.0; u.interior().len()];
                action_gradient(spec, u.values(), k, h, &mut g);
                let gsolve = gram.solve(&g);
                let prev = path.images[j - 1].interior();
                let next = path.images[j + 1].interior();
                let mut tau: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
                let tn = h1_norm_interior(&gram, &tau);
                if tn > 0.0 {
                    tau.iter_mut().for_each(|t| *t /= tn);
                }
                let gt = dot(&g, &tau);
                let force: Vec<f64> = if climb == Some(j) {
                    gsolve.iter().zip(&tau).map(|(gs, t)| -gs + 2.0 * gt * t).collect()
                } else {
                    let dn: Vec<f64> = next.iter().zip(u.interior()).map(|(a, b)| a - b).collect();
                    let dp: Vec<f64> = u.interior().iter().zip(prev).map(|(a, b)| a - b).collect();
                    let spring = kappa * (h1_norm_interior(&gram, &dn) - h1_norm_interior(&gram, &dp));
                    gsolve
                        .iter()
                        .zip(&tau)
                        .map(|(gs, t)| -(gs - gt * t) + spring * t)
                        .collect()
                };
                let perp: Vec<f64> = gsolve.iter().zip(&tau).map(|(gs, t)| gs - gt * t).collect();
                ImageForces {
                    force,
                    grad_sup: sup_norm(&g),
                    perp_h1: h1_norm_interior(&gram, &perp),
                }
            })
            .collect()
    };

    let kappa = match opts.spring {
        Some(s) => s,
        None => {
            let f = forces(&path, None, 0.0);
            let mean_perp = f.iter().map(|x| x.perp_h1).sum::<f64>() / f.len() as f64;
            let mean_gap = (1..n)
                .map(|j| h1_distance(&path.images[j], &path.images[j - 1]).unwrap_or(0.0))
                .sum::<f64>()
                / (n - 1) as f64;
            if mean_perp > 0.0 && mean_gap > 0.0 {
                mean_perp / mean_gap
            } else {
                1.0
            }
        }
    };

    let mut step = 0.05;
    let mut iterations = 0;
    let mut violations = 0;
    let mut max_increase = 0.0f64;
    let mut converged = false;
    let mut grad_sup;
    loop {
        let (ci, e_max) = path.max_image();
        let climb = opts.climbing.then_some(ci);
        let f = forces(&path, climb, kappa);
        grad_sup = if opts.climbing {
            f[ci - 1].grad_sup
        } else {
            f.iter().map(|x| x.grad_sup).fold(0.0, f64::max)
        };
        if grad_sup < opts.tol_grad {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        let mut trial_step = step;
        let mut accepted = None;
        for attempt in 0..=BACKTRACK {
            let trial: Vec<(DiscreteCurve, f64)> = (1..n - 1)
                .into_par_iter()
                .map(|j| -> Result<(DiscreteCurve, f64)> {
                    let mut c = path.images[j].clone();
                    for (v, d) in c.interior_mut().iter_mut().zip(&f[j - 1].force) {
                        *v += trial_step * d;
                    }
                    if let Some(hook) = controls.hook {
                        hook(&mut c)?;
                    }
                    let e = action(spec, c.values(), k, h);
                    Ok((c, e))
                })
                .collect::<Result<_>>()?;
            let new_max = trial.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
            let ok = new_max <= e_max && trial.iter().all(|t| t.1.is_finite());
            if ok || (attempt == BACKTRACK && new_max.is_finite()) {
                if !ok {
                    violations += 1;
                    max_increase = max_increase.max(new_max - e_max);
                }
                accepted = Some((trial, ok));
                break;
            }
            trial_step = (trial_step * 0.5).max(STEP_MIN);
        }
        let Some((trial, clean)) = accepted else {
            break;
        };
        for (j, (c, e)) in trial.into_iter().enumerate() {
            path.images[j + 1] = c;
            path.energies[j + 1] = e;
        }
        step = if clean && trial_step == step {
            (step * 1.2).min(STEP_MAX)
        } else {
            trial_step.max(STEP_MIN)
        };
        iterations += 1;
        history.push(record(&path, iterations));
    }
    let (ci, c_est) = path.max_image();
    Ok(RelaxResult {
        path,
        c_est,
        climbing_index: ci,
        grad_sup,
        iterations,
        converged,
        spring: kappa,
        monotone_violations: violations,
        max_increase,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// H¹ radius around minimizing representatives treated as a collapse.
    pub cluster_threshold: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            tol: 1e-10,
            max_iter: 50,
            cluster_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefinedSaddle {
    pub result: MinimizeResult,
    pub ode_residual: f64,
    pub hamiltonian_residual: f64,
    /// Interior dof held fixed to remove the translation mode.
    pub pinned_dof: usize,
}

/// Jacobian of `grad_J` on interior dofs as a banded matrix.
fn assemble_hessian(spec: &PotentialSpec, curve: &DiscreteCurve) -> BandedMatrix {
    let (k, h) = (curve.dim(), curve.grid().h());
    let m = curve.len() - 2;
    let n = m * k;
    let mut a = BandedMatrix::zeros(n, k, k);
    let mut hess = vec![0.0; k * k];
    for i in 0..m {
        spec.hessian_into(curve.node(i + 1), &mut hess);
        for p in 0..k {
            for q in 0..k {
                a.set(i * k + p, i * k + q, h * hess[p * k + q]);
            }
            a.add(i * k + p, i * k + p, 2.0 / h);
            if i + 1 < m {
                a.set(i * k + p, (i + 1) * k + p, -1.0 / h);
                a.set((i + 1) * k + p, i * k + p, -1.0 / h);
            }
        }
    }
    a
}

/// Interior dof with the largest component of the discrete translation
/// generator `u'`.
fn translation_pin(curve: &DiscreteCurve) -> usize {
    let k = curve.dim();
    let mut best = (0, -1.0);
    for i in 1..curve.len() - 1 {
        let (a, b) = (curve.node(i - 1), curve.node(i + 1));
        for p in 0..k {
            let d = (b[p] - a[p]).abs();
            if d > best.1 {
                best = ((i - 1) * k + p, d);
            }
        }
    }
    best.0
}

/// Damped Newton on `grad_J = 0` with the translation mode pinned, followed
/// by a collapse check against minimizing cluster representatives.
pub fn refine_saddle(
    spec: &PotentialSpec,
    curve: &DiscreteCurve,
    representatives: &[DiscreteCurve],
    opts: &RefineOptions,
) -> Result<RefinedSaddle> {
    let (k, h) = (curve.dim(), curve.grid().h());
    let mut cur = curve.clone();
    let pin = translation_pin(&cur);
    let merit = |c: &DiscreteCurve| -> (Vec<f64>, f64) {
        let mut g = vec![0.0; c.interior().len()];
        action_gradient(spec, c.values(), k, h, &mut g);
        let m = 0.5 * dot(&g, &g);
        (g, m)
    };
    let (mut g, mut phi) = merit(&cur);
    let mut iterations = 0;
    while sup_norm(&g) >= opts.tol && iterations < opts.max_iter {
        let mut a = assemble_hessian(spec, &cur);
        a.set_identity_row(pin);
        let mut rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        rhs[pin] = 0.0;
        if !a.factor() {
            break;
        }
        let d = a.solve(&rhs);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let mut trial = cur.clone();
            for (v, di) in trial.interior_mut().iter_mut().zip(&d) {
                *v += t * di;
            }
            let (gt, pt) = merit(&trial);
            if pt.is_finite() && pt < phi {
                cur = trial;
                g = gt;
                phi = pt;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
        iterations += 1;
    }
    let grad_sup = sup_norm(&g);
    let e = energy(spec, &cur).total;
    let normalized = normalize_translation(spec, &cur);
    for rep in representatives {
        if let Ok(d) = h1_distance(&normalized, rep) {
            if d < opts.cluster_threshold {
                return Err(Error::DriftedToMinimizer { distance: d });
            }
        }
    }
    Ok(RefinedSaddle {
        ode_residual: ode_residual(spec, &cur),
        hamiltonian_residual: hamiltonian_residual(spec, &cur),
        pinned_dof: pin,
        result: MinimizeResult {
            curve: cur,
            energy: e,
            grad_sup,
            iterations,
            converged: grad_sup < opts.tol,
            normalized: false,
            history: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------------------
// Diagnostics

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeMCheck {
    pub pass: bool,
    pub nearest_j: usize,
    pub nearest_multiple: f64,
    pub distance: f64,
}

/// Proximity of `c` to the odd multiples `(2j + 1) m`, `j >= 1`.
pub fn check_3m(c: f64, m: f64, tol: f64) -> ThreeMCheck {
    let guess = ((c / m - 1.0) / 2.0).round().max(1.0) as usize;
    let (j, distance) = [guess.saturating_sub(1).max(1), guess, guess + 1]
        .into_iter()
        .map(|j| (j, (c - (2 * j + 1) as f64 * m).abs()))
        .fold((1, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
    ThreeMCheck {
        pass: c < 3.0 * m - tol || distance > tol,
        nearest_j: j,
        nearest_multiple: (2 * j + 1) as f64 * m,
        distance,
    }
}

/// Largest distance from a node of `curve` to the union of the traces of
/// `representatives` (every `stride`-th representative node).
pub fn trace_distance(curve: &DiscreteCurve, representatives: &[DiscreteCurve], stride: usize) -> f64 {
    let stride = stride.max(1);
    let trace: Vec<&[f64]> = representatives
        .iter()
        .flat_map(|r| (0..r.len()).step_by(stride).chain(std::iter::once(r.len() - 1)).map(move |i| r.node(i)))
        .collect();
    (0..curve.len())
        .into_par_iter()
        .map(|i| {
            let u = curve.node(i);
            trace.iter().map(|p| dist2(u, p)).fold(f64::INFINITY, f64::min).sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct Bump {
    pub start: usize,
    pub end: usize,
    /// Node splitting the bump's energy in half.
    pub center: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplittingReport {
    pub count: usize,
    pub bumps: Vec<Bump>,
    pub sum: f64,
    pub total: f64,
}

/// Split the nodes into well plateaus (runs of at least `l_min` nodes within
/// `delta` of one well, or runs reaching an end) and the transition bumps
/// between them.
pub fn detect_splitting(spec: &PotentialSpec, curve: &DiscreteCurve, delta: f64, l_min: usize) -> SplittingReport {
    let m = curve.len();
    let e = energy(spec, curve);
    let h = curve.grid().h();
    let near: Vec<Option<usize>> = (0..m)
        .map(|i| {
            let (w, d) = spec.nearest_well(curve.node(i));
            (d < delta).then_some(w)
        })
        .collect();
    let mut plateau = vec![false; m];
    let mut i = 0;
    while i < m {
        let Some(w) = near[i] else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j < m && near[j] == Some(w) {
            j += 1;
        }
        if j - i >= l_min || i == 0 || j == m {
            plateau[i..j].iter_mut().for_each(|p| *p = true);
        }
        i = j;
    }
    let mut bumps = Vec::new();
    let mut i = 0;
    while i < m {
        if plateau[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < m && !plateau[j] {
            j += 1;
        }
        let dens = &e.density[i..j];
        let energy: f64 = dens.iter().sum::<f64>() * h;
        let half = 0.5 * dens.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut center = i;
        for (o, d) in dens.iter().enumerate() {
            acc += d;
            if acc >= half {
                center = i + o;
                break;
            }
        }
        bumps.push(Bump {
            start: i,
            end: j - 1,
            center,
            energy,
        });
        i = j;
    }
    SplittingReport {
        count: bumps.len(),
        sum: bumps.iter().map(|b| b.energy).sum(),
        bumps,
        total: e.total,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub c_est: f64,
    pub m_est: f64,
    pub refined_energy: f64,
    pub grad_sup: f64,
    pub ode_residual: f64,
    pub hamiltonian_residual: f64,
    pub classification: TailLabel,
    pub c_minus_m: f64,
    pub m_star_minus_c: Option<f64>,
    pub three_m: ThreeMCheck,
    pub trace_distance: f64,
    pub k_eps_radius: Option<f64>,
    pub splitting: SplittingReport,
    pub eta_min_est: f64,
    pub strong_convergence_regime: bool,
    /// Closest approach of the orbit to a third well, when `c < m*`.
    pub rho2: Option<f64>,
    pub warnings: Vec<String>,
}

/// Everything `classify_outcome` needs besides the refined curve.
#[derive(Debug, Clone)]
pub struct ClassifyInputs<'a> {
    pub c_est: f64,
    pub m_est: f64,
    pub m_star: Option<f64>,
    pub endpoints: [usize; 2],
    pub representatives: &'a [DiscreteCurve],
    pub gap: Option<f64>,
    pub delta: f64,
    pub l_min: usize,
    pub three_m_tol: f64,
    /// Smallest non-constant critical energy observed so far.
    pub eta_min_est: f64,
}

pub fn classify_outcome(spec: &PotentialSpec, refined: &RefinedSaddle, inp: &ClassifyInputs<'_>) -> Result<SaddleReport> {
    let curve = &refined.result.curve;
    let e = refined.result.energy;
    let classification = classify_tails(spec, curve, inp.delta);
    if matches!(classification, TailLabel::Heteroclinic { .. }) && e <= inp.m_est - 1e-6 {
        return Err(Error::Inconsistent(format!(
            "heteroclinic outcome with energy {e} below the minimal value {}",
            inp.m_est
        )));
    }
    let mut warnings = Vec::new();
    let rho2 = match inp.m_star {
        Some(ms) if inp.c_est < ms => {
            let third: Vec<&Vec<f64>> = spec
                .wells
                .iter()
                .enumerate()
                .filter(|(w, _)| !inp.endpoints.contains(w))
                .map(|(_, s)| s)
                .collect();
            Some(
                (0..curve.len())
                    .flat_map(|i| third.iter().map(move |s| dist2(curve.node(i), s).sqrt()))
                    .fold(f64::INFINITY, f64::min),
            )
        }
        Some(ms) => {
            warnings.push(format!(
                "c = {} is not below m* = {ms}; third-well exclusion is not asserted",
                inp.c_est
            ));
            None
        }
        None => None,
    };
    let eta = inp.eta_min_est.min(e);
    Ok(SaddleReport {
        c_est: inp.c_est,
        m_est: inp.m_est,
        refined_energy: e,
        grad_sup: refined.result.grad_sup,
        ode_residual: refined.ode_residual,
        hamiltonian_residual: refined.hamiltonian_residual,
        classification,
        c_minus_m: inp.c_est - inp.m_est,
        m_star_minus_c: inp.m_star.map(|m| m - inp.c_est),
        three_m: check_3m(inp.c_est, inp.m_est, inp.three_m_tol),
        trace_distance: trace_distance(curve, inp.representatives, 1),
        k_eps_radius: inp.gap.map(|g| g / 4.0),
        splitting: detect_splitting(spec, curve, inp.delta, inp.l_min),
        eta_min_est: eta,
        strong_convergence_regime: inp.c_est < inp.m_est + eta,
        rho2,
        warnings,
    })
}

/// H¹ norm of a nodal difference field.
pub fn h1_norm(curve_diff: &[f64], k: usize, h: f64) -> f64 {
    h1_norm_sq(curve_diff, k, h).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{psi_curve, Grid};
    use crate::minimize::{minimize_energy, MinimizeOptions};

    #[test]
    fn three_m_table() {
        let cases = [
            (2.5, 1.0, true, 1, None),
            (3.0005, 1.0, false, 1, None),
            (5.4, 1.0, true, 2, Some(0.4)),
            (6.995, 1.0, false, 3, None),
            (4.0, 1.0, true, 1, Some(1.0)),
        ];
        for (c, m, pass, j, dist) in cases {
            let r = check_3m(c, m, 1e-2);
            assert_eq!(r.pass, pass, "{c}");
            assert_eq!(r.nearest_j, j, "{c}");
            if let Some(d) = dist {
                assert!((r.distance - d).abs() < 1e-12);
            }
        }
    }

    fn pdw_minimizer(g: Grid) -> DiscreteCurve {
        let s = PotentialSpec::product_double_well();
        let r = minimize_energy(&s, &psi_curve(g, &[-1.0, 0.0], &[1.0, 0.0]).unwrap(), &MinimizeOptions::default()).unwrap();
        normalize_translation(&s, &r.curve)
    }

    #[test]
    fn init_path_interpolates() {
        let s = PotentialSpec::two_channel(1.0, 0.1);
        let g = Grid::new(5.0, 101).unwrap();
        let a = psi_curve(g, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let b = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |t| vec![t / 5.0, 0.3]);
        let p = init_path(&s, &a, &b, 2).unwrap();
        assert_eq!(p.len(), 2);
        let p = init_path(&s, &a, &b, 3).unwrap();
        for i in 0..101 {
            for q in 0..2 {
                assert_eq!(p.images[1].node(i)[q], 0.5 * a.node(i)[q] + 0.5 * b.node(i)[q]);
            }
        }
        let other = DiscreteCurve::constant(g, &[1.0, 0.0]);
        assert!(init_path(&s, &a, &other, 3).is_err());
    }

    #[test]
    fn minimizer_is_trace_close_to_itself() {
        let g = Grid::new(10.0, 801).unwrap();
        let q = pdw_minimizer(g);
        assert!(trace_distance(&q, std::slice::from_ref(&q), 1) < 1e-2);
        let c = DiscreteCurve::constant(g, &[-1.0, 0.0]);
        assert_eq!(trace_distance(&c, &[q], 1), 0.0);
    }

    #[test]
    fn splitting_of_simple_curves() {
        let s = PotentialSpec::product_double_well();
        let g = Grid::new(10.0, 801).unwrap();
        let q = pdw_minimizer(g);
        let r = detect_splitting(&s, &q, 1.0 / 64.0, 50);
        assert_eq!(r.count, 1);
        assert!((r.bumps[0].energy - r.total).abs() < 1e-2);
        let c = DiscreteCurve::constant(g, &[1.0, 0.0]);
        let r = detect_splitting(&s, &c, 1.0 / 64.0, 50);
        assert_eq!(r.count, 0);
        assert_eq!(r.sum, 0.0);
    }

    #[test]
    fn refining_a_minimizer_reports_collapse() {
        let s = PotentialSpec::product_double_well();
        let g = Grid::new(10.0, 801).unwrap();
        let q = pdw_minimizer(g);
        let err = refine_saddle(&s, &q, std::slice::from_ref(&q), &RefineOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DriftedToMinimizer { .. }));
    }

    #[test]
    fn newton_converges_from_a_perturbed_minimizer() {
        let s = PotentialSpec::product_double_well();
        let g = Grid::new(10.0, 801).unwrap();
        let q = pdw_minimizer(g);
        let mut p = q.clone();
        for (i, v) in p.interior_mut().iter_mut().enumerate() {
            *v += 1e-3 * ((i as f64) * 0.01).sin();
        }
        let r = refine_saddle(&s, &p, &[], &RefineOptions::default()).unwrap();
        assert!(r.result.converged, "{}", r.result.grad_sup);
        // the pinned dof selects a sub-grid translate of the minimizer
        assert!((r.result.energy - energy(&s, &q).total).abs() < 1e-8);
    }

    #[test]
    fn hessian_assembly_matches_gradient_differences() {
        let s = PotentialSpec::two_channel(1.0, 0.1);
        let g = Grid::new(3.0, 21).unwrap();
        let c = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |t| vec![(t).tanh(), 0.3 * (-t * t).exp()]);
        let a = assemble_hessian(&s, &c);
        let n = c.interior().len();
        let eps = 1e-6;
        for col in 0..n {
            let mut p = c.clone();
            let mut m = c.clone();
            p.interior_mut()[col] += eps;
            m.interior_mut()[col] -= eps;
            let (gp, gm) = (grad_j(&s, &p), grad_j(&s, &m));
            for row in 0..n {
                let fd = (gp[row + 2] - gm[row + 2]) / (2.0 * eps);
                assert!((fd - a.get(row, col)).abs() < 1e-5 * fd.abs().max(1.0), "{row},{col}");
            }
        }
    }
}
