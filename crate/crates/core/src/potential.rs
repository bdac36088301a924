//! Multi-well potentials `V: R^k -> [0, inf)` with a declared well set, their
//! analytic derivatives, a builtin catalog, and a sampling audit of the
//! standing assumptions (zero set, coercivity, nondegenerate wells, reflection
//! symmetry).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance below which a computed value counts as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;
/// Tolerance for `V(sigma) = 0` at declared wells.
pub const WELL_VALUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `(1 - u1^2)^2 + c * sum_{j>=2} u_j^2`, parameter `transverse = c`.
    ProductDoubleWell,
    /// `(u1^2 - 1)^2 + (u2^2 - a (1 - u1^2))^2 + eps u2^2` in the plane.
    TwoChannel,
    /// `prod_j |u - sigma_j|^2` over the declared wells.
    ProductWells,
    /// General polynomial given by a coefficient table.
    Polynomial,
}

/// One monomial `coef * prod_a u_a^{exponents[a]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub k: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub wells: Vec<Vec<f64>>,
    #[serde(default)]
    pub symmetric: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<PolyTerm>,
}

impl PotentialSpec {
    pub fn product_double_well() -> Self {
        PotentialSpec {
            kind: PotentialKind::ProductDoubleWell,
            k: 2,
            params: BTreeMap::from([("transverse".to_string(), 5.0)]),
            wells: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            symmetric: true,
            terms: Vec::new(),
        }
    }

    pub fn two_channel(a: f64, eps: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::TwoChannel,
            k: 2,
            params: BTreeMap::from([("a".to_string(), a), ("eps".to_string(), eps)]),
            wells: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            symmetric: true,
            terms: Vec::new(),
        }
    }

    /// Product potential vanishing exactly on `wells`.
    pub fn product_wells(wells: Vec<Vec<f64>>) -> Self {
        let k = wells.first().map_or(1, Vec::len);
        let symmetric = wells.iter().any(|w| is_unit_axis(w, -1.0))
            && wells.iter().any(|w| is_unit_axis(w, 1.0))
            && wells.iter().all(|w| {
                let mut r = w.clone();
                r[0] = -r[0];
                wells.contains(&r)
            });
        PotentialSpec {
            kind: PotentialKind::ProductWells,
            k,
            params: BTreeMap::new(),
            wells,
            symmetric,
            terms: Vec::new(),
        }
    }

    pub fn triple_well() -> Self {
        Self::product_wells(vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
    }

    pub fn polynomial(k: usize, terms: Vec<PolyTerm>, wells: Vec<Vec<f64>>, symmetric: bool) -> Self {
        PotentialSpec {
            kind: PotentialKind::Polynomial,
            k,
            params: BTreeMap::new(),
            wells,
            symmetric,
            terms,
        }
    }

    /// Look up a builtin template by name.
    pub fn builtin(name: &str) -> Option<Self> {
        builtin_catalog()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    pub fn well_count(&self) -> usize {
        self.wells.len()
    }

    /// Structural checks: dimensions, at least two distinct wells, parameters
    /// in range. Does not evaluate `V`.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::SpecViolation("dimension k must be at least 1".into()));
        }
        if self.wells.len() < 2 {
            return Err(Error::SpecViolation(format!(
                "at least two wells are required, got {}",
                self.wells.len()
            )));
        }
        for (i, w) in self.wells.iter().enumerate() {
            if w.len() != self.k {
                return Err(Error::SpecViolation(format!(
                    "well {i} has dimension {} but k = {}",
                    w.len(),
                    self.k
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::SpecViolation(format!("well {i} is not finite")));
            }
        }
        for i in 0..self.wells.len() {
            for j in i + 1..self.wells.len() {
                if self.wells[i] == self.wells[j] {
                    return Err(Error::SpecViolation(format!("wells {i} and {j} coincide")));
                }
            }
        }
        match self.kind {
            PotentialKind::TwoChannel => {
                if self.k != 2 {
                    return Err(Error::SpecViolation("two_channel requires k = 2".into()));
                }
                if self.param("a", 1.0) <= 0.0 || self.param("eps", 0.1) <= 0.0 {
                    return Err(Error::SpecViolation("two_channel requires a > 0 and eps > 0".into()));
                }
            }
            PotentialKind::ProductDoubleWell => {
                if self.param("transverse", 5.0) <= 0.0 {
                    return Err(Error::SpecViolation(
                        "product_double_well requires transverse > 0".into(),
                    ));
                }
            }
            PotentialKind::Polynomial => {
                if self.terms.is_empty() {
                    return Err(Error::SpecViolation("polynomial has no terms".into()));
                }
                if let Some(t) = self.terms.iter().find(|t| t.exponents.len() != self.k) {
                    return Err(Error::SpecViolation(format!(
                        "polynomial term has {} exponents but k = {}",
                        t.exponents.len(),
                        self.k
                    )));
                }
            }
            PotentialKind::ProductWells => {}
        }
        if self.symmetric {
            let has_minus = self.wells.iter().any(|w| is_unit_axis(w, -1.0));
            let has_plus = self.wells.iter().any(|w| is_unit_axis(w, 1.0));
            if !(has_minus && has_plus) {
                return Err(Error::SpecViolation(
                    "symmetric flag requires wells (-1,0,...,0) and (+1,0,...,0)".into(),
                ));
            }
        }
        Ok(())
    }

    /// `V(u)` without the sign check.
    pub fn value(&self, u: &[f64]) -> f64 {
        match self.kind {
            PotentialKind::ProductDoubleWell => {
                let c = self.param("transverse", 5.0);
                let w = 1.0 - u[0] * u[0];
                w * w + c * u[1..].iter().map(|x| x * x).sum::<f64>()
            }
            PotentialKind::TwoChannel => {
                let (a, eps) = (self.param("a", 1.0), self.param("eps", 0.1));
                let (x, y) = (u[0], u[1]);
                let w = x * x - 1.0;
                let f = y * y - a * (1.0 - x * x);
                w * w + f * f + eps * y * y
            }
            PotentialKind::ProductWells => self
                .wells
                .iter()
                .map(|s| dist2(u, s))
                .product(),
            PotentialKind::Polynomial => self
                .terms
                .iter()
                .map(|t| t.coef * monomial(u, &t.exponents, None))
                .sum(),
        }
    }

    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        match self.kind {
            PotentialKind::ProductDoubleWell => {
                let c = self.param("transverse", 5.0);
                out[0] = -4.0 * u[0] * (1.0 - u[0] * u[0]);
                for a in 1..u.len() {
                    out[a] = 2.0 * c * u[a];
                }
            }
            PotentialKind::TwoChannel => {
                let (a, eps) = (self.param("a", 1.0), self.param("eps", 0.1));
                let (x, y) = (u[0], u[1]);
                let f = y * y - a * (1.0 - x * x);
                out[0] = 4.0 * x * (x * x - 1.0) + 4.0 * a * x * f;
                out[1] = 4.0 * y * f + 2.0 * eps * y;
            }
            PotentialKind::ProductWells => {
                let d: Vec<f64> = self.wells.iter().map(|s| dist2(u, s)).collect();
                out.iter_mut().for_each(|g| *g = 0.0);
                for (j, s) in self.wells.iter().enumerate() {
                    let rest = product_except(&d, &[j]);
                    for a in 0..u.len() {
                        out[a] += 2.0 * (u[a] - s[a]) * rest;
                    }
                }
            }
            PotentialKind::Polynomial => {
                out.iter_mut().for_each(|g| *g = 0.0);
                for t in &self.terms {
                    for a in 0..u.len() {
                        let e = t.exponents[a];
                        if e == 0 {
                            continue;
                        }
                        out[a] += t.coef * e as f64 * monomial(u, &t.exponents, Some((a, 1)));
                    }
                }
            }
        }
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; u.len()];
        self.gradient_into(u, &mut g);
        g
    }

    /// Row-major `k x k` Hessian written into `out`.
    pub fn hessian_into(&self, u: &[f64], out: &mut [f64]) {
        let k = u.len();
        out.iter_mut().for_each(|h| *h = 0.0);
        match self.kind {
            PotentialKind::ProductDoubleWell => {
                let c = self.param("transverse", 5.0);
                out[0] = 12.0 * u[0] * u[0] - 4.0;
                for a in 1..k {
                    out[a * k + a] = 2.0 * c;
                }
            }
            PotentialKind::TwoChannel => {
                let (a, eps) = (self.param("a", 1.0), self.param("eps", 0.1));
                let (x, y) = (u[0], u[1]);
                let f = y * y - a * (1.0 - x * x);
                out[0] = 12.0 * x * x - 4.0 + 4.0 * a * f + 8.0 * a * a * x * x;
                out[1] = 8.0 * a * x * y;
                out[2] = out[1];
                out[3] = 4.0 * f + 8.0 * y * y + 2.0 * eps;
            }
            PotentialKind::ProductWells => {
                let d: Vec<f64> = self.wells.iter().map(|s| dist2(u, s)).collect();
                let l = self.wells.len();
                for j in 0..l {
                    let rest = product_except(&d, &[j]);
                    for a in 0..k {
                        out[a * k + a] += 2.0 * rest;
                    }
                    for m in 0..l {
                        if m == j {
                            continue;
                        }
                        let rest2 = product_except(&d, &[j, m]);
                        let (sj, sm) = (&self.wells[j], &self.wells[m]);
                        for a in 0..k {
                            for b in 0..k {
                                out[a * k + b] += 4.0 * (u[a] - sj[a]) * (u[b] - sm[b]) * rest2;
                            }
                        }
                    }
                }
            }
            PotentialKind::Polynomial => {
                for t in &self.terms {
                    for a in 0..k {
                        let ea = t.exponents[a];
                        if ea == 0 {
                            continue;
                        }
                        for b in 0..k {
                            let eb = t.exponents[b];
                            let v = if a == b {
                                if ea < 2 {
                                    continue;
                                }
                                (ea * (ea - 1)) as f64 * monomial(u, &t.exponents, Some((a, 2)))
                            } else {
                                if eb == 0 {
                                    continue;
                                }
                                (ea * eb) as f64 * monomial2(u, &t.exponents, a, b)
                            };
                            out[a * k + b] += t.coef * v;
                        }
                    }
                }
            }
        }
    }

    pub fn hessian(&self, u: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; u.len() * u.len()];
        self.hessian_into(u, &mut h);
        h
    }

    /// Index of the declared well nearest to `u`, with its distance.
    pub fn nearest_well(&self, u: &[f64]) -> (usize, f64) {
        self.wells
            .iter()
            .enumerate()
            .map(|(i, s)| (i, dist2(u, s).sqrt()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    }
}

fn is_unit_axis(w: &[f64], sign: f64) -> bool {
    w[0] == sign && w[1..].iter().all(|&x| x == 0.0)
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn product_except(d: &[f64], skip: &[usize]) -> f64 {
    d.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .map(|(_, v)| v)
        .product()
}

/// `prod_b u_b^{e_b}`, optionally with the exponent of one coordinate lowered.
fn monomial(u: &[f64], exps: &[u32], lower: Option<(usize, u32)>) -> f64 {
    let mut p = 1.0;
    for (b, (&x, &e)) in u.iter().zip(exps).enumerate() {
        let e = match lower {
            Some((a, by)) if a == b => e - by,
            _ => e,
        };
        if e > 0 {
            p *= x.powi(e as i32);
        }
    }
    p
}

fn monomial2(u: &[f64], exps: &[u32], a: usize, b: usize) -> f64 {
    let mut p = 1.0;
    for (c, (&x, &e)) in u.iter().zip(exps).enumerate() {
        let e = if c == a || c == b { e - 1 } else { e };
        if e > 0 {
            p *= x.powi(e as i32);
        }
    }
    p
}

/// `V(u)`, rejecting values below `-1e-12` as a sign of an invalid spec.
pub fn eval_v(spec: &PotentialSpec, u: &[f64]) -> Result<f64> {
    let v = spec.value(u);
    if v < -NEGATIVE_TOL {
        return Err(Error::NegativeValue {
            value: v,
            point: u.to_vec(),
        });
    }
    Ok(v)
}

pub fn grad_v(spec: &PotentialSpec, u: &[f64]) -> Vec<f64> {
    spec.gradient(u)
}

pub fn hess_v(spec: &PotentialSpec, u: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(u.len(), u.len(), &spec.hessian(u))
}

/// Builtin potential templates.
pub fn builtin_catalog() -> Vec<(String, PotentialSpec)> {
    vec![
        ("product_double_well".to_string(), PotentialSpec::product_double_well()),
        ("two_channel".to_string(), PotentialSpec::two_channel(1.0, 0.1)),
        ("triple_well".to_string(), PotentialSpec::triple_well()),
    ]
}

// ---------------------------------------------------------------------------
// Assumption audit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Directions per coercivity shell.
    pub shell_directions: usize,
    /// Directions per dyadic ball around each well.
    pub ball_directions: usize,
    /// Points sampled in the box `[-R0, R0]^k` for the zero-set report.
    pub box_samples: usize,
    /// Overrides the default `R0 = 2 max|sigma| + 1`.
    pub r0: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 0,
            shell_directions: 256,
            ball_directions: 64,
            box_samples: 4096,
            r0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub r0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub pass: bool,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellNondegeneracy {
    pub well: usize,
    pub eigenvalues: Vec<f64>,
    pub delta: f64,
    pub beta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub wells: Vec<WellNondegeneracy>,
    /// Common radius: minimum over wells.
    pub delta: f64,
    /// Common constant: maximum over wells.
    pub beta: f64,
    pub pass: bool,
}

impl NondegeneracyReport {
    pub fn min_eigenvalue(&self) -> f64 {
        self.wells
            .iter()
            .flat_map(|w| w.eigenvalues.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sampled evidence that `V > 0` off the declared wells. Sampling cannot
/// certify this; `coverage` states what was looked at.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroSetReport {
    pub max_well_value: f64,
    pub samples: usize,
    pub box_half_width: f64,
    pub exclusion_radius: f64,
    pub min_value_off_wells: f64,
    pub argmin_off_wells: Vec<f64>,
    pub negative_samples: usize,
    pub pass: bool,
    pub coverage: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub samples: usize,
    pub max_abs_difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub zero_set: ZeroSetReport,
    pub coercivity: CoercivityReport,
    pub nondegeneracy: NondegeneracyReport,
    pub symmetry: Option<SymmetryCheck>,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.zero_set.pass
            && self.coercivity.pass
            && self.nondegeneracy.pass
            && self.symmetry.as_ref().is_none_or(|s| s.pass)
    }
}

/// Radical-inverse (Halton) point `index` in `[0,1)^dim`, shifted by `shift`
/// modulo 1 (Cranley-Patterson rotation).
fn halton(index: usize, dim: usize, shift: &[f64]) -> Vec<f64> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index as u64 + 1;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            (r + shift[d]).fract()
        })
        .collect()
}

/// Low-discrepancy unit directions in `R^k`, coordinate axes first.
fn directions(k: usize, count: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(count + 2 * k);
    for a in 0..k {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; k];
            e[a] = s;
            dirs.push(e);
        }
    }
    if k == 1 {
        return dirs;
    }
    let mut i = 0;
    while dirs.len() < count + 2 * k {
        let p = halton(i, k, shift);
        i += 1;
        let v: Vec<f64> = p.iter().map(|x| 2.0 * x - 1.0).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(1e-3..=1.0).contains(&n) {
            continue;
        }
        dirs.push(v.iter().map(|x| x / n).collect());
    }
    dirs
}

fn rotation_shift(seed: u64, salt: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (0..k).map(|_| rng.random::<f64>()).collect()
}

pub fn check_coercivity(spec: &PotentialSpec, cfg: &SamplingConfig) -> CoercivityReport {
    let k = spec.k;
    let max_norm = spec
        .wells
        .iter()
        .map(|w| w.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let r0 = cfg.r0.unwrap_or(2.0 * max_norm + 1.0);
    let dirs = directions(k, cfg.shell_directions, &rotation_shift(cfg.seed, 1, k));
    let mut alpha0 = f64::INFINITY;
    let mut beta0 = f64::INFINITY;
    let mut worst = vec![0.0; k];
    let mut g = vec![0.0; k];
    let mut samples = 0;
    for factor in [1.0, 1.5, 2.0, 4.0] {
        let r = r0 * factor;
        for d in &dirs {
            let u: Vec<f64> = d.iter().map(|x| r * x).collect();
            spec.gradient_into(&u, &mut g);
            let ratio = g.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / (r * r);
            if ratio < alpha0 {
                alpha0 = ratio;
                worst = u.clone();
            }
            beta0 = beta0.min(spec.value(&u));
            samples += 1;
        }
    }
    CoercivityReport {
        r0,
        alpha0,
        beta0,
        pass: alpha0 > 0.0 && beta0 > 0.0,
        worst_point: worst,
        samples,
    }
}

const DYADIC_STEPS: i32 = 8;
const BETA_SAFETY: f64 = 1.25;

pub fn check_nondegeneracy(spec: &PotentialSpec, cfg: &SamplingConfig) -> NondegeneracyReport {
    let k = spec.k;
    let dirs = directions(k, cfg.ball_directions, &rotation_shift(cfg.seed, 2, k));
    let mut g = vec![0.0; k];
    let mut wells = Vec::with_capacity(spec.wells.len());
    for (wi, sigma) in spec.wells.iter().enumerate() {
        let eig = SymmetricEigen::new(hess_v(spec, sigma));
        let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        let scale = eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let pd = eigenvalues[0] > 1e-10 * scale;

        // largest dyadic radius on which both two-sided bounds admit a finite beta
        let mut delta = 0.0;
        let mut beta = f64::INFINITY;
        if pd {
            for p in 1..=DYADIC_STEPS {
                let r = 0.5f64.powi(p);
                let mut worst = 1.0f64;
                let mut ok = true;
                'samples: for d in &dirs {
                    for frac in [0.25, 0.5, 0.75, 1.0] {
                        let u: Vec<f64> = sigma.iter().zip(d).map(|(s, x)| s + r * frac * x).collect();
                        let d2 = (r * frac) * (r * frac);
                        let v = spec.value(&u);
                        spec.gradient_into(&u, &mut g);
                        let gd: f64 = g.iter().zip(&u).zip(sigma).map(|((gi, ui), si)| gi * (ui - si)).sum();
                        if v <= 0.0 || gd <= 0.0 {
                            ok = false;
                            break 'samples;
                        }
                        for ratio in [d2 / v, d2 / gd] {
                            worst = worst.max(ratio).max(1.0 / ratio);
                        }
                    }
                }
                if ok {
                    delta = r;
                    beta = BETA_SAFETY * worst;
                    break;
                }
            }
        }
        wells.push(WellNondegeneracy {
            well: wi,
            eigenvalues,
            delta,
            beta,
            pass: pd && delta > 0.0,
        });
    }
    let delta = wells.iter().map(|w| w.delta).fold(f64::INFINITY, f64::min);
    let beta = wells.iter().map(|w| w.beta).fold(0.0, f64::max);
    let pass = wells.iter().all(|w| w.pass);
    NondegeneracyReport {
        wells,
        delta,
        beta,
        pass,
    }
}

pub fn check_zero_set(spec: &PotentialSpec, cfg: &SamplingConfig, exclusion: f64, half_width: f64) -> ZeroSetReport {
    let k = spec.k;
    let max_well_value = spec
        .wells
        .iter()
        .map(|w| spec.value(w).abs())
        .fold(0.0, f64::max);
    let shift = rotation_shift(cfg.seed, 3, k);
    let mut min_val = f64::INFINITY;
    let mut argmin = vec![0.0; k];
    let mut negatives = 0;
    let mut counted = 0;
    for i in 0..cfg.box_samples {
        let u: Vec<f64> = halton(i, k, &shift)
            .iter()
            .map(|x| half_width * (2.0 * x - 1.0))
            .collect();
        let v = spec.value(&u);
        if v < -NEGATIVE_TOL {
            negatives += 1;
        }
        if spec.nearest_well(&u).1 < exclusion {
            continue;
        }
        counted += 1;
        if v < min_val {
            min_val = v;
            argmin = u;
        }
    }
    let pass = max_well_value <= WELL_VALUE_TOL && negatives == 0 && min_val > 0.0;
    ZeroSetReport {
        max_well_value,
        samples: counted,
        box_half_width: half_width,
        exclusion_radius: exclusion,
        min_value_off_wells: min_val,
        argmin_off_wells: argmin,
        negative_samples: negatives,
        pass,
        coverage: format!(
            "sampled evidence only: {counted} low-discrepancy points in [-{half_width}, {half_width}]^{k} \
             at distance >= {exclusion} from every well"
        ),
    }
}

pub fn check_symmetry(spec: &PotentialSpec, cfg: &SamplingConfig, half_width: f64) -> SymmetryCheck {
    let k = spec.k;
    let shift = rotation_shift(cfg.seed, 4, k);
    let mut worst = 0.0f64;
    let n = cfg.box_samples.min(1024);
    for i in 0..n {
        let u: Vec<f64> = halton(i, k, &shift)
            .iter()
            .map(|x| half_width * (2.0 * x - 1.0))
            .collect();
        let mut r = u.clone();
        r[0] = -r[0];
        worst = worst.max((spec.value(&u) - spec.value(&r)).abs());
    }
    SymmetryCheck {
        samples: n,
        max_abs_difference: worst,
        pass: worst == 0.0,
    }
}

/// Run every check and return the full report regardless of outcome.
pub fn audit(spec: &PotentialSpec, cfg: &SamplingConfig) -> Result<AssumptionReport> {
    spec.validate()?;
    let coercivity = check_coercivity(spec, cfg);
    let nondegeneracy = check_nondegeneracy(spec, cfg);
    let exclusion = if nondegeneracy.delta.is_finite() && nondegeneracy.delta > 0.0 {
        nondegeneracy.delta
    } else {
        0.5f64.powi(DYADIC_STEPS)
    };
    let zero_set = check_zero_set(spec, cfg, exclusion, coercivity.r0);
    let symmetry = spec
        .symmetric
        .then(|| check_symmetry(spec, cfg, coercivity.r0));
    Ok(AssumptionReport {
        zero_set,
        coercivity,
        nondegeneracy,
        symmetry,
    })
}

/// Audit the spec and raise `SpecViolation` if a declared well is not a
/// nondegenerate zero of `V`.
pub fn verify_assumptions(spec: &PotentialSpec, cfg: &SamplingConfig) -> Result<AssumptionReport> {
    let report = audit(spec, cfg)?;
    if report.zero_set.max_well_value > WELL_VALUE_TOL {
        return Err(Error::SpecViolation(format!(
            "V does not vanish at a declared well (|V| = {:e})",
            report.zero_set.max_well_value
        )));
    }
    if let Some(w) = report.nondegeneracy.wells.iter().find(|w| w.eigenvalues[0] <= 0.0 || !w.pass) {
        return Err(Error::SpecViolation(format!(
            "Hessian at well {} is not positive definite (min eigenvalue {:e})",
            w.well, w.eigenvalues[0]
        )));
    }
    Ok(report)
}
