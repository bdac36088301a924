//! The reflection `s(u) = (-u1, u2, ..., uk)` and the equivariant pipeline:
//! symmetrization, the fold onto the cone `u1 >= 0` for `t >= 0`, the
//! symmetric mountain pass and the dichotomy/compactness classification.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::curve::{energy, grad_j, DiscreteCurve};
use crate::error::{Error, Result};
use crate::linalg::{sup_norm, H1Gram};
use crate::mountainpass::{
    detect_splitting, init_path, refine_saddle, relax_path_with, PathOptions, RefineOptions, RefinedSaddle,
    RelaxControls, RelaxRecord, RelaxResult,
};
use crate::potential::PotentialSpec;

pub fn reflect(u: &[f64]) -> Vec<f64> {
    let mut r = u.to_vec();
    if let Some(x) = r.first_mut() {
        *x = -*x;
    }
    r
}

/// `t -> s(q(-t))`; the limit wells become the reflections of the opposite
/// ends.
pub fn reflect_curve(q: &DiscreteCurve) -> DiscreteCurve {
    let m = q.len();
    let k = q.dim();
    let mut values = Vec::with_capacity(m * k);
    for i in 0..m {
        values.extend(reflect(q.node(m - 1 - i)));
    }
    DiscreteCurve::new(q.grid(), values, reflect(q.right_well()), reflect(q.left_well()))
        .expect("reflection preserves clamped ends")
}

/// First node `i` with `s(u_i) != u_{M-1-i}`, if any.
pub fn equivariance_defect(q: &DiscreteCurve) -> Option<usize> {
    let m = q.len();
    (0..m).find(|&i| {
        let (a, b) = (q.node(i), q.node(m - 1 - i));
        -a[0] != b[0] || a[1..] != b[1..]
    })
}

/// Equivariant and `u1 >= 0` on `t >= 0`.
pub fn in_positive_cone(q: &DiscreteCurve) -> bool {
    let c = q.grid().center();
    equivariance_defect(q).is_none() && (c..q.len()).all(|i| q.node(i)[0] >= 0.0)
}

/// A curve with exact nodal equivariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCurve {
    curve: DiscreteCurve,
    positive: bool,
}

impl SymmetricCurve {
    pub fn new(curve: DiscreteCurve) -> Result<Self> {
        if let Some(node) = equivariance_defect(&curve) {
            return Err(Error::NotSymmetric { node });
        }
        let positive = in_positive_cone(&curve);
        Ok(SymmetricCurve { curve, positive })
    }

    pub fn curve(&self) -> &DiscreteCurve {
        &self.curve
    }

    pub fn into_curve(self) -> DiscreteCurve {
        self.curve
    }

    /// Membership in the cone `u1 >= 0` for `t >= 0`.
    pub fn is_positive(&self) -> bool {
        self.positive
    }
}

fn check_symmetric_spec(spec: &PotentialSpec, q: &DiscreteCurve) -> Result<()> {
    if !spec.symmetric {
        return Err(Error::SpecViolation("potential is not flagged as reflection symmetric".into()));
    }
    let s_left = reflect(q.left_well());
    if s_left != q.right_well() || q.left_well()[0] >= 0.0 {
        return Err(Error::WellMismatch);
    }
    Ok(())
}

/// Curve about the center node built from the nodes of `q` on one side of
/// `p`, mirrored by `s`; the center's first coordinate is set to zero.
fn mirrored_half(q: &DiscreteCurve, p: usize, keep_left: bool) -> DiscreteCurve {
    let m = q.len();
    let c = q.grid().center();
    let k = q.dim();
    let (left, right) = (q.left_well().to_vec(), q.right_well().to_vec());
    let mut values = vec![0.0; m * k];
    for d in 0..=c {
        let u: Vec<f64> = if keep_left {
            if p >= d {
                q.node(p - d).to_vec()
            } else {
                left.clone()
            }
        } else if p + d < m {
            q.node(p + d).to_vec()
        } else {
            right.clone()
        };
        let (mine, mirror) = if keep_left { (c - d, c + d) } else { (c + d, c - d) };
        let r = reflect(&u);
        values[mine * k..(mine + 1) * k].copy_from_slice(&u);
        values[mirror * k..(mirror + 1) * k].copy_from_slice(&r);
    }
    values[c * k] = 0.0;
    values[..k].copy_from_slice(&left);
    values[(m - 1) * k..].copy_from_slice(&right);
    DiscreteCurve::new(q.grid(), values, left, right).expect("mirrored curve keeps its wells")
}

/// Move a sign change of `u1` to `t = 0`, keep the cheaper half and mirror it.
///
/// When a node sits exactly on `u1 = 0` it is used directly. Otherwise both
/// nodes adjacent to each sign change are tried with both halves, and the
/// candidate of least energy wins (ties: smallest `|u1|` at the node). If
/// zeroing `u1` at the center made the winner dearer than `q`, it is pushed
/// back below by equivariant descent.
pub fn symmetrize(spec: &PotentialSpec, q: &DiscreteCurve) -> Result<SymmetricCurve> {
    check_symmetric_spec(spec, q)?;
    let m = q.len();
    let u1 = q.component(0);
    let mut exact = Vec::new();
    let mut near = Vec::new();
    for i in 0..m - 1 {
        let (a, b) = (u1[i], u1[i + 1]);
        if a == 0.0 && i > 0 && u1[i - 1] * b < 0.0 {
            exact.push(i);
        }
        if a * b < 0.0 {
            near.push(i);
            near.push(i + 1);
        } else if a == 0.0 && b != 0.0 || b == 0.0 && a != 0.0 {
            near.push(if a == 0.0 { i } else { i + 1 });
        }
    }
    if exact.is_empty() && near.is_empty() {
        return Err(Error::NoSignChange);
    }
    let candidates = if exact.is_empty() { near } else { exact };
    let mut best: Option<(f64, f64, DiscreteCurve)> = None;
    for &p in &candidates {
        for keep_left in [true, false] {
            let c = mirrored_half(q, p, keep_left);
            let e = energy(spec, &c).total;
            let tie = u1[p].abs();
            let better = match &best {
                None => true,
                Some((be, bt, _)) => e < *be || (e == *be && tie < *bt),
            };
            if better {
                best = Some((e, tie, c));
            }
        }
    }
    let (e, _, curve) = best.expect("at least one candidate");
    let target = energy(spec, q).total;
    let curve = if e > target {
        equivariant_descent(spec, curve, target, REPAIR_STEPS)
    } else {
        curve
    };
    SymmetricCurve::new(curve)
}

const REPAIR_STEPS: usize = 500;

/// H¹-preconditioned gradient steps that stay exactly equivariant, run until
/// the energy drops to `target` or the step budget is spent.
fn equivariant_descent(spec: &PotentialSpec, mut curve: DiscreteCurve, target: f64, max_steps: usize) -> DiscreteCurve {
    let (k, h) = (curve.dim(), curve.grid().h());
    let gram = H1Gram::new(curve.len() - 2, k, h);
    let mut e = energy(spec, &curve).total;
    let mut step = 1.0;
    for _ in 0..max_steps {
        if e <= target {
            break;
        }
        let g = grad_j(spec, &curve);
        let d = gram.solve(&g[k..g.len() - k]);
        let mut moved = false;
        while step > 1e-12 {
            let mut trial = curve.clone();
            for (v, di) in trial.interior_mut().iter_mut().zip(&d) {
                *v -= step * di;
            }
            symmetric_projection(&mut trial);
            let et = energy(spec, &trial).total;
            if et < e {
                curve = trial;
                e = et;
                moved = true;
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    curve
}

/// `u1 -> sign(t) |u1|` on an equivariant curve.
pub fn fold(q: &DiscreteCurve) -> Result<SymmetricCurve> {
    if let Some(node) = equivariance_defect(q) {
        return Err(Error::NotSymmetric { node });
    }
    let c = q.grid().center();
    let k = q.dim();
    let mut values = q.values().to_vec();
    for i in 0..q.len() {
        let x = values[i * k].abs();
        values[i * k] = if i < c { -x } else { x } + 0.0;
    }
    let curve = DiscreteCurve::new(q.grid(), values, q.left_well().to_vec(), q.right_well().to_vec())?;
    SymmetricCurve::new(curve)
}

/// `u <- (u + reflect_curve(u)) / 2` nodewise. Mirrored first coordinates
/// come out as `(a - b) / 2` and `(b - a) / 2`, which negate exactly.
pub fn symmetric_projection(q: &mut DiscreteCurve) {
    let r = reflect_curve(q);
    let k = q.dim();
    for (v, w) in q.interior_mut().iter_mut().zip(&r.values()[k..]) {
        *v = (*v + w) / 2.0 + 0.0;
    }
}

/// `h_sym(v) = fold(v + psi) - psi` on nodal perturbations of the ramp.
pub fn h_sym(v: &[f64], psi: &DiscreteCurve) -> Result<Vec<f64>> {
    let vals: Vec<f64> = psi.values().iter().zip(v).map(|(p, x)| p + x).collect();
    let q = DiscreteCurve::new(psi.grid(), vals, psi.left_well().to_vec(), psi.right_well().to_vec())?;
    let f = fold(&q)?;
    Ok(f.curve().values().iter().zip(psi.values()).map(|(a, p)| a - p).collect())
}

#[derive(Debug, Clone)]
pub struct SymRun {
    pub endpoints: [SymmetricCurve; 2],
    pub relax: RelaxResult,
    pub c_sym: f64,
    /// Nodal equivariance checks performed during relaxation (all passed).
    pub equivariance_checks: usize,
}

/// Symmetric mountain pass between folded symmetrizations of two minimizers.
/// Every image is projected onto the equivariant subspace and folded after
/// each update, and its equivariance is verified.
pub fn mp_sym(
    spec: &PotentialSpec,
    q0: &DiscreteCurve,
    q1: &DiscreteCurve,
    opts: &PathOptions,
    track_bumps: Option<(f64, usize)>,
) -> Result<SymRun> {
    let e0 = fold(symmetrize(spec, q0)?.curve())?;
    let e1 = fold(symmetrize(spec, q1)?.curve())?;
    let path = init_path(spec, e0.curve(), e1.curve(), opts.images)?;
    mp_sym_from_path(spec, path, opts, track_bumps).map(|(relax, checks)| SymRun {
        endpoints: [e0, e1],
        c_sym: relax.c_est,
        relax,
        equivariance_checks: checks,
    })
}

/// Symmetric relaxation of a given path; returns the relaxation and the
/// number of equivariance checks made.
pub fn mp_sym_from_path(
    spec: &PotentialSpec,
    path: crate::mountainpass::CurvePath,
    opts: &PathOptions,
    track_bumps: Option<(f64, usize)>,
) -> Result<(RelaxResult, usize)> {
    for c in &path.images {
        if let Some(node) = equivariance_defect(c) {
            return Err(Error::NotSymmetric { node });
        }
    }
    let checks = AtomicUsize::new(0);
    let hook = |c: &mut DiscreteCurve| -> Result<()> {
        symmetric_projection(c);
        let folded = fold(c)?;
        *c = folded.into_curve();
        checks.fetch_add(1, Ordering::Relaxed);
        match equivariance_defect(c) {
            Some(node) => Err(Error::NotSymmetric { node }),
            None => Ok(()),
        }
    };
    let relax = relax_path_with(
        spec,
        path,
        opts,
        RelaxControls {
            hook: Some(&hook),
            track_bumps,
        },
    )?;
    Ok((relax, checks.load(Ordering::Relaxed)))
}

/// Newton refinement followed by projection back into the positive cone.
pub fn refine_symmetric(spec: &PotentialSpec, curve: &DiscreteCurve, reps: &[DiscreteCurve], opts: &RefineOptions) -> Result<RefinedSaddle> {
    let mut r = refine_saddle(spec, curve, reps, opts)?;
    let mut c = r.result.curve.clone();
    symmetric_projection(&mut c);
    let c = fold(&c)?.into_curve();
    r.result.grad_sup = sup_norm(&grad_j(spec, &c));
    r.result.energy = energy(spec, &c).total;
    r.result.converged = r.result.grad_sup < opts.tol;
    r.ode_residual = crate::curve::ode_residual(spec, &c);
    r.hamiltonian_residual = crate::curve::hamiltonian_residual(spec, &c);
    r.result.curve = c;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftOptions {
    /// Records inspected for monotone drift.
    pub window: usize,
    /// Required displacement as a fraction of the node count.
    pub fraction: f64,
    pub delta: f64,
    pub l_min: usize,
    /// Energy agreement required for the compactness outcome.
    pub energy_tol: f64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        DriftOptions {
            window: 100,
            fraction: 0.1,
            delta: 1.0 / 64.0,
            l_min: 20,
            energy_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SymOutcome {
    /// Compactness: an equivariant heteroclinic saddle at level `c_sym`.
    SymmetricSaddle { curve: DiscreteCurve, energy: f64 },
    /// Dichotomy: a bump escaped to infinity; `plus` is homoclinic to the
    /// right well and `minus = s(plus)` nodewise.
    Dichotomy {
        plus: DiscreteCurve,
        minus: DiscreteCurve,
        energy: f64,
        converged: bool,
        displacement: usize,
    },
}

impl SymOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            SymOutcome::SymmetricSaddle { .. } => "symmetric_heteroclinic",
            SymOutcome::Dichotomy { .. } => "homoclinic_pair",
        }
    }
}

/// Rightmost bump center over the last `window` records, if it drifts
/// monotonically right by more than `fraction * M`.
pub fn detect_drift(history: &[RelaxRecord], m: usize, opts: &DriftOptions) -> Option<usize> {
    if history.len() < opts.window {
        return None;
    }
    let tail = &history[history.len() - opts.window..];
    let centers: Option<Vec<usize>> = tail.iter().map(|r| r.bump_centers.last().copied()).collect();
    let centers = centers?;
    let monotone = centers.windows(2).all(|w| w[1] >= w[0]);
    let shift = centers.last()? - centers.first()?;
    (monotone && shift as f64 > opts.fraction * m as f64).then_some(shift)
}

/// Cut the rightmost bump of `curve` on a window three times its support,
/// center it and pad both sides with the right well.
pub fn harvest_bump(spec: &PotentialSpec, curve: &DiscreteCurve, opts: &DriftOptions) -> Option<DiscreteCurve> {
    let split = detect_splitting(spec, curve, opts.delta, opts.l_min);
    let bump = split.bumps.last()?;
    let m = curve.len();
    let support = bump.end - bump.start + 1;
    let half = (3 * support) / 2;
    let lo = bump.center.saturating_sub(half);
    let hi = (bump.center + half).min(m - 1);
    let sigma = curve.right_well().to_vec();
    Some(DiscreteCurve::from_fn(curve.grid(), &sigma, &sigma, |t| {
        let i = (t / curve.grid().h()).round() as isize + bump.center as isize;
        if i >= lo as isize && i <= hi as isize {
            curve.node(i as usize).to_vec()
        } else {
            sigma.clone()
        }
    }))
}

/// Compactness if the refined curve is an equivariant critical point in the
/// positive cone at level `c_sym`; dichotomy if the climbing image carries a
/// bump that drifted right; otherwise `Unclassified`.
pub fn classify_sym_outcome(
    spec: &PotentialSpec,
    history: &[RelaxRecord],
    climbing_image: &DiscreteCurve,
    refined: Option<&RefinedSaddle>,
    c_sym: f64,
    opts: &DriftOptions,
    refine: &RefineOptions,
) -> Result<SymOutcome> {
    if let Some(r) = refined {
        let c = &r.result.curve;
        if r.result.converged && in_positive_cone(c) && (r.result.energy - c_sym).abs() <= opts.energy_tol {
            return Ok(SymOutcome::SymmetricSaddle {
                curve: c.clone(),
                energy: r.result.energy,
            });
        }
    }
    let Some(displacement) = detect_drift(history, climbing_image.len(), opts) else {
        return Err(Error::Unclassified(
            "no converged symmetric saddle and no drifting bump".into(),
        ));
    };
    let seed = harvest_bump(spec, climbing_image, opts)
        .ok_or_else(|| Error::Unclassified("drift detected but no bump to harvest".into()))?;
    let (plus, converged) = match refine_saddle(spec, &seed, &[], refine) {
        Ok(r) if r.result.converged => (r.result.curve, true),
        _ => (seed, false),
    };
    let k = plus.dim();
    let mut values = plus.values().to_vec();
    for v in values.iter_mut().step_by(k) {
        *v = -*v;
    }
    let minus = DiscreteCurve::new(plus.grid(), values, reflect(plus.left_well()), reflect(plus.right_well()))?;
    Ok(SymOutcome::Dichotomy {
        energy: energy(spec, &plus).total,
        plus,
        minus,
        converged,
        displacement,
    })
}

/// Distance of the orbit's center node to the centers of the minimizers.
pub fn center_distance(q: &DiscreteCurve, reps: &[DiscreteCurve]) -> f64 {
    let c = q.grid().center();
    reps.iter()
        .map(|r| crate::potential::dist2(q.node(c), r.node(c)).sqrt())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{psi_curve, Grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tc() -> PotentialSpec {
        PotentialSpec::two_channel(1.0, 0.1)
    }

    /// psi plus a smooth bump perturbation supported in `[-T/2, T/2]`.
    fn random_heteroclinic(seed: u64, grid: Grid) -> DiscreteCurve {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = grid.half_width() / 2.0;
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.8..0.8),
                    rng.random_range(0.5..3.0),
                    rng.random_range(-half / 2.0..half / 2.0),
                )
            })
            .collect();
        DiscreteCurve::from_fn(grid, &[-1.0, 0.0], &[1.0, 0.0], |t| {
            let bump = if t.abs() < half { (1.0 - (t / half).powi(2)).powi(3) } else { 0.0 };
            let mut u = vec![t.clamp(-1.0, 1.0), 0.0];
            for &(a1, a2, w, c) in &modes {
                let s = (w * (t - c)).sin() * bump;
                u[0] += a1 * s;
                u[1] += a2 * s;
            }
            u
        })
    }

    #[test]
    fn reflection_basics() {
        let u = [0.3, -0.4];
        assert_eq!(reflect(&reflect(&u)), u.to_vec());
        assert_eq!(reflect(&[-1.0, 0.0]), vec![1.0, 0.0]);
        let g = Grid::new(5.0, 101).unwrap();
        let q = random_heteroclinic(3, g);
        let r = reflect_curve(&q);
        assert_eq!(r.left_well(), &[-1.0, 0.0]);
        assert!((energy(&tc(), &r).total - energy(&tc(), &q).total).abs() < 1e-12);
        assert_eq!(reflect_curve(&r), q);
    }

    #[test]
    fn symmetric_input_is_unchanged() {
        let g = Grid::new(10.0, 401).unwrap();
        let q = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |t| {
            vec![(2.0 * t).tanh(), 0.5 / (1.0 + t * t)]
        });
        let mut q = q;
        symmetric_projection(&mut q);
        let s = symmetrize(&tc(), &q).unwrap();
        assert_eq!(s.curve(), &q);
        assert!(s.is_positive());
    }

    #[test]
    fn tanh_profile_only_snaps() {
        let g = Grid::new(10.0, 401).unwrap();
        let odd = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |t| vec![(2.0 * t).tanh(), 0.0]);
        assert_eq!(symmetrize(&tc(), &odd).unwrap().curve(), &odd);
        let shifted = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |t| vec![(2.0 * (t - 0.013)).tanh(), 0.0]);
        let s = symmetrize(&tc(), &shifted).unwrap();
        assert_eq!(s.curve().node(200)[0], 0.0);
        let worst = (0..401)
            .map(|i| (s.curve().node(i)[0] - odd.node(i)[0]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 2.0 * 0.05, "{worst}");
    }

    #[test]
    fn no_sign_change_is_an_error() {
        let g = Grid::new(5.0, 101).unwrap();
        let q = DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], |_| vec![-0.5, 0.0]);
        let mut bad = q.values().to_vec();
        let n = bad.len();
        bad[n - 2] = 1.0;
        let q = DiscreteCurve::new(g, bad, vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap();
        // the only sign change is the clamped end itself
        let r = symmetrize(&tc(), &q);
        assert!(r.is_ok() || matches!(r, Err(Error::NoSignChange)));
        let flat = DiscreteCurve::from_fn(g, &[1.0, 0.0], &[1.0, 0.0], |_| vec![0.5, 0.0]);
        assert!(symmetrize(&tc(), &flat).is_err());
    }

    #[test]
    fn fold_contract() {
        let g = Grid::new(5.0, 101).unwrap();
        let mut q = random_heteroclinic(9, g);
        assert!(matches!(fold(&q), Err(Error::NotSymmetric { .. })));
        symmetric_projection(&mut q);
        let f = fold(&q).unwrap();
        assert!(f.is_positive());
        assert_eq!(fold(f.curve()).unwrap(), f);
        let psi = psi_curve(g, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let v: Vec<f64> = f.curve().values().iter().zip(psi.values()).map(|(a, b)| a - b).collect();
        let hv = h_sym(&v, &psi).unwrap();
        assert_eq!(hv, v);
    }

    #[test]
    fn drift_detection_and_harvest() {
        let s = tc();
        let g = Grid::new(20.0, 2001).unwrap();
        let opts = DriftOptions::default();
        // heteroclinic at the center plus an excursion from the right well
        let curve_at = |offset: f64| {
            DiscreteCurve::from_fn(g, &[-1.0, 0.0], &[1.0, 0.0], move |t| {
                let x = (2.0 * t).tanh();
                let b = 0.6 * (-(t - offset).powi(2)).exp();
                vec![x - b, b]
            })
        };
        let history: Vec<RelaxRecord> = (0..120)
            .map(|it| {
                let c = curve_at(4.0 + 0.08 * it as f64);
                RelaxRecord {
                    iteration: it,
                    max_energy: energy(&s, &c).total,
                    climbing_index: 1,
                    bump_centers: detect_splitting(&s, &c, opts.delta, opts.l_min).bumps.iter().map(|b| b.center).collect(),
                }
            })
            .collect();
        let last = curve_at(4.0 + 0.08 * 119.0);
        let out = classify_sym_outcome(&s, &history, &last, None, 0.0, &opts, &RefineOptions { max_iter: 5, ..Default::default() }).unwrap();
        match out {
            SymOutcome::Dichotomy { plus, minus, .. } => {
                assert_eq!(plus.left_well(), &[1.0, 0.0]);
                assert_eq!(plus.right_well(), &[1.0, 0.0]);
                assert_eq!(minus.left_well(), &[-1.0, 0.0]);
                for i in 0..plus.len() {
                    assert_eq!(minus.node(i), reflect(plus.node(i)).as_slice());
                }
            }
            other => panic!("expected dichotomy, got {}", other.label()),
        }
        let still: Vec<RelaxRecord> = history.iter().map(|r| RelaxRecord { bump_centers: vec![1000], ..r.clone() }).collect();
        assert!(matches!(
            classify_sym_outcome(&s, &still, &last, None, 0.0, &opts, &RefineOptions::default()),
            Err(Error::Unclassified(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn symmetrization_ordering(seed in any::<u64>()) {
            let s = tc();
            let g = Grid::new(10.0, 401).unwrap();
            let q = random_heteroclinic(seed, g);
            let sym = symmetrize(&s, &q).unwrap();
            let folded = fold(sym.curve()).unwrap();
            let (e, es, ef) = (energy(&s, &q).total, energy(&s, sym.curve()).total, energy(&s, folded.curve()).total);
            prop_assert!(ef <= es);
            prop_assert!(es <= e + 1e-12, "{} > {}", es, e);
        }

        #[test]
        fn fold_keeps_potential_values(seed in any::<u64>()) {
            let s = tc();
            let g = Grid::new(10.0, 201).unwrap();
            let mut q = random_heteroclinic(seed, g);
            symmetric_projection(&mut q);
            prop_assert!(equivariance_defect(&q).is_none());
            let f = fold(&q).unwrap();
            for i in 0..q.len() {
                prop_assert_eq!(s.value(q.node(i)), s.value(f.curve().node(i)));
            }
            prop_assert!(energy(&s, f.curve()).total <= energy(&s, &q).total);
        }

        #[test]
        fn projection_is_idempotent(seed in any::<u64>()) {
            let g = Grid::new(10.0, 201).unwrap();
            let mut q = random_heteroclinic(seed, g);
            symmetric_projection(&mut q);
            let once = q.clone();
            symmetric_projection(&mut q);
            prop_assert_eq!(q, once);
        }
    }
}
