//! Globally minimizing heteroclinics: preconditioned L-BFGS descent of the
//! discrete action, multistart estimates of `m_ij`, the triangle-inequality
//! margins and minimizer-gap detection by clustering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{
    action, action_difference, action_gradient, h1_distance, normalize_translation, psi_curve, translate, translation_offset,
    DiscreteCurve, Grid,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, sup_norm, H1Gram};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub tol_grad: f64,
    pub max_iter: usize,
    pub renorm_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol_grad: 1e-8,
            max_iter: 20_000,
            renorm_every: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub curve: DiscreteCurve,
    pub energy: f64,
    pub grad_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub normalized: bool,
    /// Energy after every accepted step, starting with the initial energy.
    pub history: Vec<f64>,
}

impl MinimizeResult {
    /// Turn a non-converged result into `Error::NonConvergence`.
    pub fn require_converged(self, stage: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                stage: stage.to_string(),
                iterations: self.iterations,
                grad_sup: self.grad_sup,
            })
        }
    }
}

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Full node-major buffers for the current iterate and a trial point.
struct Objective<'a> {
    spec: &'a PotentialSpec,
    current: Vec<f64>,
    trial: Vec<f64>,
    k: usize,
    h: f64,
}

impl Objective<'_> {
    fn interior(&self) -> &[f64] {
        &self.current[self.k..self.current.len() - self.k]
    }

    fn gradient(&self, g: &mut [f64]) {
        action_gradient(self.spec, &self.current, self.k, self.h, g);
    }

    /// Load `current + step * d` into the trial buffer and return the change
    /// in action.
    fn try_step(&mut self, step: f64, d: &[f64]) -> f64 {
        let (k, n) = (self.k, self.current.len());
        for ((t, c), di) in self.trial[k..n - k].iter_mut().zip(&self.current[k..n - k]).zip(d) {
            *t = c + step * di;
        }
        action_difference(self.spec, &self.current, &self.trial, k, self.h)
    }

    fn accept(&mut self) {
        std::mem::swap(&mut self.current, &mut self.trial);
    }
}

/// Limited-memory BFGS with the H¹ Gram matrix as initial inverse-Hessian
/// scaling.
struct Lbfgs {
    s: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    rho: Vec<f64>,
}

impl Lbfgs {
    fn new() -> Self {
        Lbfgs {
            s: Vec::new(),
            y: Vec::new(),
            rho: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-300 {
            return;
        }
        if self.s.len() == MEMORY {
            self.s.remove(0);
            self.y.remove(0);
            self.rho.remove(0);
        }
        self.s.push(s);
        self.y.push(y);
        self.rho.push(1.0 / sy);
    }

    fn direction(&self, g: &[f64], gram: &H1Gram) -> Vec<f64> {
        let m = self.s.len();
        let mut q = g.to_vec();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = self.rho[i] * dot(&self.s[i], &q);
            for (qj, yj) in q.iter_mut().zip(&self.y[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        let mut r = gram.solve(&q);
        if let (Some(s), Some(y)) = (self.s.last(), self.y.last()) {
            let py = gram.solve(y);
            let gamma = dot(s, y) / dot(y, &py);
            r.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..m {
            let beta = self.rho[i] * dot(&self.y[i], &r);
            for (rj, sj) in r.iter_mut().zip(&self.s[i]) {
                *rj += (alpha[i] - beta) * sj;
            }
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}

/// Minimize the discrete action from `curve0`, ends clamped. Returns the best
/// iterate; `converged` is false if `max_iter` ran out or the line search
/// stalled first.
pub fn minimize_energy(spec: &PotentialSpec, curve0: &DiscreteCurve, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let k = curve0.dim();
    let grid = curve0.grid();
    let h = grid.h();
    let interior = grid.nodes() - 2;
    let gram = H1Gram::new(interior, k, h);
    let mut obj = Objective {
        spec,
        current: curve0.values().to_vec(),
        trial: curve0.values().to_vec(),
        k,
        h,
    };
    let n = interior * k;
    let mut g = vec![0.0; n];
    obj.gradient(&mut g);
    let mut f = action(spec, &obj.current, k, h);
    let mut history = vec![f];
    let mut memory = Lbfgs::new();
    let mut iterations = 0;
    let mut normalized = false;
    let mut g_new = vec![0.0; n];

    while sup_norm(&g) > opts.tol_grad && iterations < opts.max_iter {
        let mut d = memory.direction(&g, &gram);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            memory.reset();
            d = memory.direction(&g, &gram);
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let df = obj.try_step(step, &d);
            if df.is_finite() && df <= ARMIJO * step * slope && df <= 0.0 {
                let s: Vec<f64> = d.iter().map(|di| step * di).collect();
                obj.accept();
                obj.gradient(&mut g_new);
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                memory.push(s, y);
                std::mem::swap(&mut g, &mut g_new);
                f += df;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if memory.s.is_empty() {
                break;
            }
            memory.reset();
            continue;
        }
        iterations += 1;
        history.push(f);

        if opts.renorm_every > 0 && iterations % opts.renorm_every == 0 {
            let current = curve0.with_interior(obj.interior());
            let shift = translation_offset(spec, &current);
            if shift != 0 {
                let moved = translate(&current, shift);
                let df = action_difference(spec, &obj.current, moved.values(), k, h);
                if df <= 0.0 {
                    obj.current.copy_from_slice(moved.values());
                    obj.gradient(&mut g);
                    f += df;
                    memory.reset();
                    normalized = true;
                    history.push(f);
                }
            }
        }
    }
    let x = obj.interior().to_vec();
    let f = action(spec, &obj.current, k, h);
    let grad_sup = sup_norm(&g);
    Ok(MinimizeResult {
        curve: curve0.with_interior(&x),
        energy: f,
        grad_sup,
        iterations,
        converged: grad_sup <= opts.tol_grad,
        normalized,
        history,
    })
}

/// Noise amplitudes cycled over the seed index.
pub const SEED_AMPLITUDES: [f64; 3] = [0.1, 0.3, 1.0];

/// Seed `index` of the multistart schedule: the ramp between the wells plus
/// Gaussian nodal noise of amplitude `SEED_AMPLITUDES[index % 3]` on interior
/// nodes, drawn from ChaCha8 stream `index` of `rng_seed`.
pub fn seed_curve(grid: Grid, from: &[f64], to: &[f64], rng_seed: u64, index: usize) -> Result<DiscreteCurve> {
    let mut c = psi_curve(grid, from, to)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(index as u64);
    let amp = SEED_AMPLITUDES[index % SEED_AMPLITUDES.len()];
    for v in c.interior_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += amp * z;
    }
    Ok(c)
}

/// Minimize every seed in parallel; results come back in seed order.
pub fn multistart(spec: &PotentialSpec, seeds: &[DiscreteCurve], opts: &MinimizeOptions) -> Result<Vec<MinimizeResult>> {
    seeds
        .par_iter()
        .map(|s| minimize_energy(spec, s, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultistartOptions {
    pub n_seeds: usize,
    pub rng_seed: u64,
    pub cluster_threshold: f64,
    pub energy_window: f64,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        MultistartOptions {
            n_seeds: 32,
            rng_seed: 0,
            cluster_threshold: 0.05,
            energy_window: 1e-3,
        }
    }
}

fn seeds_for(spec: &PotentialSpec, grid: Grid, i: usize, j: usize, ms: &MultistartOptions) -> Result<Vec<DiscreteCurve>> {
    (0..ms.n_seeds)
        .map(|s| seed_curve(grid, &spec.wells[i], &spec.wells[j], ms.rng_seed, s))
        .collect()
}

/// Multistart estimate of `m_ij` with the best converged result.
pub fn compute_m(
    spec: &PotentialSpec,
    i: usize,
    j: usize,
    grid: Grid,
    ms: &MultistartOptions,
    opts: &MinimizeOptions,
) -> Result<(f64, MinimizeResult)> {
    if i == j {
        let c = DiscreteCurve::constant(grid, &spec.wells[i]);
        return Ok((
            0.0,
            MinimizeResult {
                curve: c,
                energy: 0.0,
                grad_sup: 0.0,
                iterations: 0,
                converged: true,
                normalized: false,
                history: vec![0.0],
            },
        ));
    }
    let seeds = seeds_for(spec, grid, i, j, ms)?;
    let results = multistart(spec, &seeds, opts)?;
    let best = results
        .into_iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .ok_or(Error::AllSeedsFailed { from: i, to: j })?;
    let mut best = best;
    best.curve = normalize_translation(spec, &best.curve);
    best.normalized = true;
    Ok((best.energy, best))
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleMargin {
    pub via: usize,
    pub sum: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MMatrix {
    pub values: Vec<Vec<f64>>,
    pub endpoints: [usize; 2],
    pub m: f64,
    /// Minimum over third wells of `m(-, w) + m(w, +)`; absent with two wells.
    pub m_star: Option<f64>,
    pub margins: Vec<TriangleMargin>,
    pub margin_tol: f64,
    pub triangle_ok: bool,
}

/// Fill `m_ij` over all well pairs and check the strict triangle inequality
/// through every third well.
pub fn m_matrix(
    spec: &PotentialSpec,
    grid: Grid,
    endpoints: [usize; 2],
    ms: &MultistartOptions,
    opts: &MinimizeOptions,
    margin_tol: f64,
) -> Result<(MMatrix, Vec<Vec<Option<MinimizeResult>>>)> {
    let l = spec.well_count();
    let mut values = vec![vec![0.0; l]; l];
    let mut best: Vec<Vec<Option<MinimizeResult>>> = vec![vec![None; l]; l];
    for i in 0..l {
        for j in i + 1..l {
            let (e, r) = compute_m(spec, i, j, grid, ms, opts)?;
            values[i][j] = e;
            values[j][i] = e;
            best[i][j] = Some(r);
        }
    }
    let [a, b] = endpoints;
    let m = values[a][b];
    let margins: Vec<TriangleMargin> = (0..l)
        .filter(|&w| w != a && w != b)
        .map(|w| {
            let sum = values[a][w] + values[w][b];
            TriangleMargin {
                via: w,
                sum,
                margin: sum - m,
            }
        })
        .collect();
    let m_star = margins.iter().map(|t| t.sum).reduce(f64::min);
    let triangle_ok = margins.iter().all(|t| t.margin > margin_tol);
    Ok((
        MMatrix {
            values,
            endpoints,
            m,
            m_star,
            margins,
            margin_tol,
            triangle_ok,
        },
        best,
    ))
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub representative: DiscreteCurve,
    pub representative_seed: usize,
    pub representative_energy: f64,
    pub members: Vec<usize>,
    pub energy_spread: f64,
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub clusters: Vec<Cluster>,
    /// H¹ distances between cluster representatives.
    pub distances: Vec<Vec<f64>>,
    /// Single-linkage distance between the closest two clusters.
    pub gap: Option<f64>,
    pub threshold: f64,
    pub best_energy: f64,
    pub converged_seeds: usize,
    pub pass: bool,
}

/// Cluster converged minimizers within `energy_window` of the best by
/// single linkage under the H¹ distance, after translation normalization.
pub fn cluster_minimizers(spec: &PotentialSpec, results: &[MinimizeResult], ms: &MultistartOptions) -> Result<GapReport> {
    let converged: Vec<(usize, &MinimizeResult)> = results.iter().enumerate().filter(|(_, r)| r.converged).collect();
    let best_energy = converged
        .iter()
        .map(|(_, r)| r.energy)
        .fold(f64::INFINITY, f64::min);
    let members: Vec<(usize, f64, DiscreteCurve)> = converged
        .iter()
        .filter(|(_, r)| r.energy <= best_energy + ms.energy_window)
        .map(|(i, r)| (*i, r.energy, normalize_translation(spec, &r.curve)))
        .collect();
    let n = members.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let d = h1_distance(&members[a].2, &members[b].2)?;
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    // single linkage via union-find
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            if dist[a][b] <= ms.cluster_threshold {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        let r = find(&mut parent, a);
        match roots.iter().position(|&x| x == r) {
            Some(p) => groups[p].push(a),
            None => {
                roots.push(r);
                groups.push(vec![a]);
            }
        }
    }
    let clusters: Vec<Cluster> = groups
        .iter()
        .map(|g| {
            let rep = *g
                .iter()
                .min_by(|&&x, &&y| members[x].1.total_cmp(&members[y].1).then(x.cmp(&y)))
                .expect("clusters are non-empty");
            let (lo, hi) = g
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(members[x].1), hi.max(members[x].1)));
            Cluster {
                representative: members[rep].2.clone(),
                representative_seed: members[rep].0,
                representative_energy: members[rep].1,
                members: g.iter().map(|&x| members[x].0).collect(),
                energy_spread: hi - lo,
            }
        })
        .collect();
    let c = clusters.len();
    let mut distances = vec![vec![0.0; c]; c];
    for a in 0..c {
        for b in a + 1..c {
            let d = h1_distance(&clusters[a].representative, &clusters[b].representative)?;
            distances[a][b] = d;
            distances[b][a] = d;
        }
    }
    let mut gap: Option<f64> = None;
    for (ga, a) in groups.iter().enumerate() {
        for b in groups.iter().skip(ga + 1) {
            for &x in a {
                for &y in b {
                    gap = Some(gap.map_or(dist[x][y], |g: f64| g.min(dist[x][y])));
                }
            }
        }
    }
    let pass = c >= 2 && gap.is_some_and(|g| g > ms.cluster_threshold);
    Ok(GapReport {
        clusters,
        distances,
        gap,
        threshold: ms.cluster_threshold,
        best_energy,
        converged_seeds: converged.len(),
        pass,
    })
}

pub fn detect_gap_from_seeds(
    spec: &PotentialSpec,
    seeds: &[DiscreteCurve],
    ms: &MultistartOptions,
    opts: &MinimizeOptions,
) -> Result<GapReport> {
    let results = multistart(spec, seeds, opts)?;
    cluster_minimizers(spec, &results, ms)
}

/// Multistart between `endpoints` and cluster the minimizing set.
pub fn detect_gap(
    spec: &PotentialSpec,
    grid: Grid,
    endpoints: [usize; 2],
    ms: &MultistartOptions,
    opts: &MinimizeOptions,
) -> Result<GapReport> {
    let seeds = seeds_for(spec, grid, endpoints[0], endpoints[1], ms)?;
    detect_gap_from_seeds(spec, &seeds, ms, opts)
}
