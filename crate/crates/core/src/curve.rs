//! Discrete curves on a truncated uniform grid: the action, its exact
//! gradient, the H¹ metric, residual certificates and orbit CSV I/O.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{dist2, PotentialSpec};

/// Uniform grid on `[-T, T]` with an odd number of nodes, so that `t = 0`
/// is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    t_half: f64,
    m: usize,
}

impl Grid {
    pub fn new(t_half: f64, m: usize) -> Result<Self> {
        if m < 3 || m.is_multiple_of(2) {
            return Err(Error::Config(format!("node count M = {m} must be odd and at least 3")));
        }
        if !(t_half.is_finite() && t_half > 0.0) {
            return Err(Error::Config(format!("half-width T = {t_half} must be positive")));
        }
        Ok(Grid { t_half, m })
    }

    pub fn half_width(&self) -> f64 {
        self.t_half
    }

    pub fn nodes(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        2.0 * self.t_half / (self.m - 1) as f64
    }

    /// Index of the node at `t = 0`.
    pub fn center(&self) -> usize {
        (self.m - 1) / 2
    }

    pub fn t(&self, i: usize) -> f64 {
        let c = self.center();
        if i >= c {
            (i - c) as f64 * self.h()
        } else {
            -((c - i) as f64 * self.h())
        }
    }

    /// Same half-width with `2M - 1` nodes.
    pub fn refined(&self) -> Grid {
        Grid {
            t_half: self.t_half,
            m: 2 * self.m - 1,
        }
    }
}

/// Nodal values `u_0..u_{M-1}` in `R^k` stored node-major, with clamped ends
/// equal to the limit wells.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    grid: Grid,
    k: usize,
    values: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl DiscreteCurve {
    /// Build from node-major values; the end nodes must equal the wells exactly.
    pub fn new(grid: Grid, values: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let k = left.len();
        if k == 0 || right.len() != k {
            return Err(Error::WellMismatch);
        }
        if values.len() != grid.nodes() * k {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inconsistent("curve has non-finite nodal values".into()));
        }
        let c = DiscreteCurve {
            grid,
            k,
            values,
            left,
            right,
        };
        if c.node(0) != c.left.as_slice() || c.node(grid.nodes() - 1) != c.right.as_slice() {
            return Err(Error::Inconsistent("end nodes must equal the limit wells".into()));
        }
        Ok(c)
    }

    /// Build from a node function; ends are overwritten by the wells.
    pub fn from_fn(grid: Grid, left: &[f64], right: &[f64], mut f: impl FnMut(f64) -> Vec<f64>) -> Self {
        let k = left.len();
        let m = grid.nodes();
        let mut values = Vec::with_capacity(m * k);
        for i in 0..m {
            if i == 0 {
                values.extend_from_slice(left);
            } else if i == m - 1 {
                values.extend_from_slice(right);
            } else {
                let u = f(grid.t(i));
                assert_eq!(u.len(), k, "node function returned wrong dimension");
                values.extend_from_slice(&u);
            }
        }
        DiscreteCurve {
            grid,
            k,
            values,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub fn constant(grid: Grid, well: &[f64]) -> Self {
        Self::from_fn(grid, well, well, |_| well.to_vec())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.grid.nodes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_well(&self) -> &[f64] {
        &self.left
    }

    pub fn right_well(&self) -> &[f64] {
        &self.right
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interior nodal values; the clamped ends are not reachable.
    pub fn interior(&self) -> &[f64] {
        &self.values[self.k..self.values.len() - self.k]
    }

    pub fn interior_mut(&mut self) -> &mut [f64] {
        let n = self.values.len();
        &mut self.values[self.k..n - self.k]
    }

    /// Coordinate `a` across all nodes.
    pub fn component(&self, a: usize) -> Vec<f64> {
        self.values.iter().skip(a).step_by(self.k).copied().collect()
    }

    /// Copy with the given interior values.
    pub fn with_interior(&self, interior: &[f64]) -> Self {
        let mut c = self.clone();
        c.interior_mut().copy_from_slice(interior);
        c
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.k != other.k {
            return Err(Error::GridMismatch);
        }
        if self.left != other.left || self.right != other.right {
            return Err(Error::WellMismatch);
        }
        Ok(())
    }

    /// Time reversal `t -> -t`, swapping the limit wells.
    pub fn reversed(&self) -> Self {
        let m = self.len();
        let mut values = Vec::with_capacity(self.values.len());
        for i in (0..m).rev() {
            values.extend_from_slice(self.node(i));
        }
        DiscreteCurve {
            grid: self.grid,
            k: self.k,
            values,
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    /// `(1 - s) self + s other` nodewise.
    pub fn lerp(&self, other: &Self, s: f64) -> Result<Self> {
        self.same_space(other)?;
        let mut c = self.clone();
        for (v, w) in c.interior_mut().iter_mut().zip(other.interior()) {
            *v = (1.0 - s) * *v + s * w;
        }
        Ok(c)
    }
}

/// Piecewise-linear ramp from `sigma_minus` (for `t <= -1`) to `sigma_plus`
/// (for `t >= 1`).
pub fn psi_curve(grid: Grid, sigma_minus: &[f64], sigma_plus: &[f64]) -> Result<DiscreteCurve> {
    if grid.half_width() < 1.0 {
        return Err(Error::GridTooSmall(grid.half_width()));
    }
    Ok(DiscreteCurve::from_fn(grid, sigma_minus, sigma_plus, |t| {
        let s = ((t + 1.0) / 2.0).clamp(0.0, 1.0);
        sigma_minus
            .iter()
            .zip(sigma_plus)
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect()
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    /// Nodal density with `sum_i h * density[i] == total`.
    #[serde(skip)]
    pub density: Vec<f64>,
}

/// Total discrete action of node-major `values`.
pub(crate) fn action(spec: &PotentialSpec, values: &[f64], k: usize, h: f64) -> f64 {
    let m = values.len() / k;
    let mut kin = 0.0;
    for i in 0..m - 1 {
        kin += dist2(&values[(i + 1) * k..(i + 2) * k], &values[i * k..(i + 1) * k]);
    }
    let mut pot = 0.0;
    for i in 0..m {
        let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
        pot += w * spec.value(&values[i * k..(i + 1) * k]);
    }
    0.5 * kin / h + h * pot
}

/// `action(new) - action(old)` summed term by term, which keeps the
/// difference accurate when both totals agree to many digits.
pub(crate) fn action_difference(spec: &PotentialSpec, old: &[f64], new: &[f64], k: usize, h: f64) -> f64 {
    let m = old.len() / k;
    let mut kin = 0.0;
    for i in 0..m - 1 {
        for a in 0..k {
            let d_old = old[(i + 1) * k + a] - old[i * k + a];
            let d_new = new[(i + 1) * k + a] - new[i * k + a];
            kin += (d_new - d_old) * (d_new + d_old);
        }
    }
    let mut pot = 0.0;
    for i in 0..m {
        let (u, v) = (&old[i * k..(i + 1) * k], &new[i * k..(i + 1) * k]);
        if u == v {
            continue;
        }
        let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
        pot += w * (spec.value(v) - spec.value(u));
    }
    0.5 * kin / h + h * pot
}

/// Gradient of `action` with respect to the interior nodes, written
/// node-major into `out` (length `(M - 2) k`).
pub(crate) fn action_gradient(spec: &PotentialSpec, values: &[f64], k: usize, h: f64, out: &mut [f64]) {
    let m = values.len() / k;
    for i in 1..m - 1 {
        let o = &mut out[(i - 1) * k..i * k];
        spec.gradient_into(&values[i * k..(i + 1) * k], o);
        for a in 0..k {
            let lap = values[(i + 1) * k + a] - 2.0 * values[i * k + a] + values[(i - 1) * k + a];
            o[a] = h * o[a] - lap / h;
        }
    }
}

pub fn energy(spec: &PotentialSpec, curve: &DiscreteCurve) -> EnergyBreakdown {
    let (m, h) = (curve.len(), curve.grid.h());
    let mut seg = vec![0.0; m - 1];
    for (i, s) in seg.iter_mut().enumerate() {
        *s = dist2(curve.node(i + 1), curve.node(i)) / (h * h);
    }
    let mut density = vec![0.0; m];
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for i in 0..m {
        let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
        let v = w * spec.value(curve.node(i));
        let left = if i > 0 { seg[i - 1] } else { 0.0 };
        let right = if i + 1 < m { seg[i] } else { 0.0 };
        density[i] = 0.25 * (left + right) + v;
        potential += h * v;
    }
    for s in &seg {
        kinetic += 0.5 * h * s;
    }
    EnergyBreakdown {
        kinetic,
        potential,
        total: kinetic + potential,
        density,
    }
}

/// Exact gradient of the discrete action with respect to nodal values; zero
/// at the clamped ends.
pub fn grad_j(spec: &PotentialSpec, curve: &DiscreteCurve) -> Vec<f64> {
    let k = curve.k;
    let mut g = vec![0.0; curve.values.len()];
    let n = g.len();
    action_gradient(spec, &curve.values, k, curve.grid.h(), &mut g[k..n - k]);
    g
}

pub(crate) fn h1_norm_sq(d: &[f64], k: usize, h: f64) -> f64 {
    let m = d.len() / k;
    let mut kin = 0.0;
    for i in 0..m.saturating_sub(1) {
        kin += dist2(&d[(i + 1) * k..(i + 2) * k], &d[i * k..(i + 1) * k]);
    }
    let l2: f64 = d.iter().map(|x| x * x).sum();
    kin / h + h * l2
}

pub fn h1_distance(q: &DiscreteCurve, p: &DiscreteCurve) -> Result<f64> {
    q.same_space(p)?;
    let d: Vec<f64> = q.values.iter().zip(&p.values).map(|(a, b)| a - b).collect();
    Ok(h1_norm_sq(&d, q.k, q.grid.h()).sqrt())
}

/// `max_i |D²u_i - ∇V(u_i)|` over interior nodes.
pub fn ode_residual(spec: &PotentialSpec, curve: &DiscreteCurve) -> f64 {
    let (k, h) = (curve.k, curve.grid.h());
    let mut g = vec![0.0; k];
    let mut worst = 0.0f64;
    for i in 1..curve.len() - 1 {
        spec.gradient_into(curve.node(i), &mut g);
        let (p, c, n) = (curve.node(i - 1), curve.node(i), curve.node(i + 1));
        let r: f64 = (0..k)
            .map(|a| {
                let lap = (n[a] - 2.0 * c[a] + p[a]) / (h * h);
                (lap - g[a]).powi(2)
            })
            .sum();
        worst = worst.max(r.sqrt());
    }
    worst
}

/// `max_i |½|u'_i|² - V(u_i)|` with centered differences at interior nodes.
pub fn hamiltonian_residual(spec: &PotentialSpec, curve: &DiscreteCurve) -> f64 {
    let h = curve.grid.h();
    (1..curve.len() - 1)
        .map(|i| {
            let d = dist2(curve.node(i + 1), curve.node(i - 1)) / (4.0 * h * h);
            (0.5 * d - spec.value(curve.node(i))).abs()
        })
        .fold(0.0, f64::max)
}

/// Fraction of the action carried by the outer 10% of nodes (5% per side).
pub fn tail_energy_fraction(spec: &PotentialSpec, curve: &DiscreteCurve) -> f64 {
    let e = energy(spec, curve);
    if e.total <= 0.0 {
        return 0.0;
    }
    let m = curve.len();
    let n = tail_nodes(m);
    let h = curve.grid.h();
    let tail: f64 = e.density[..n].iter().chain(&e.density[m - n..]).sum::<f64>() * h;
    tail / e.total
}

fn tail_nodes(m: usize) -> usize {
    ((m as f64 * 0.05).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailLabel {
    Heteroclinic { from: usize, to: usize },
    Homoclinic { well: usize },
    Unresolved,
}

/// Label each end by the unique well within `delta` of every node in its
/// trailing 5%.
pub fn classify_tails(spec: &PotentialSpec, curve: &DiscreteCurve, delta: f64) -> TailLabel {
    let m = curve.len();
    let n = tail_nodes(m);
    let label = |range: std::ops::Range<usize>| -> Option<usize> {
        let mut found = None;
        for (w, sigma) in spec.wells.iter().enumerate() {
            if range.clone().all(|i| dist2(curve.node(i), sigma).sqrt() < delta) {
                if found.is_some() {
                    return None;
                }
                found = Some(w);
            }
        }
        found
    };
    match (label(0..n), label(m - n..m)) {
        (Some(a), Some(b)) if a == b => TailLabel::Homoclinic { well: a },
        (Some(a), Some(b)) => TailLabel::Heteroclinic { from: a, to: b },
        _ => TailLabel::Unresolved,
    }
}

/// Shift by `n` whole grid steps (`u_i <- u_{i-n}`), padding with the wells.
pub fn translate(curve: &DiscreteCurve, n: isize) -> DiscreteCurve {
    let m = curve.len() as isize;
    let k = curve.k;
    let mut values = Vec::with_capacity(curve.values.len());
    for i in 0..m {
        let src = i - n;
        let u = if i == 0 || src < 0 {
            &curve.left[..]
        } else if i == m - 1 || src >= m {
            &curve.right[..]
        } else {
            curve.node(src as usize)
        };
        values.extend_from_slice(u);
    }
    debug_assert_eq!(values.len(), m as usize * k);
    DiscreteCurve {
        values,
        ..curve.clone()
    }
}

/// Shift that moves the median of the cumulative energy density to `t = 0`.
pub fn translation_offset(spec: &PotentialSpec, curve: &DiscreteCurve) -> isize {
    let e = energy(spec, curve);
    let total: f64 = e.density.iter().sum();
    if total <= 1e-300 {
        return 0;
    }
    let mut acc = 0.0;
    let mut median = 0;
    for (i, d) in e.density.iter().enumerate() {
        acc += d;
        if acc >= 0.5 * total {
            median = i;
            break;
        }
    }
    curve.grid.center() as isize - median as isize
}

pub fn normalize_translation(spec: &PotentialSpec, curve: &DiscreteCurve) -> DiscreteCurve {
    match translation_offset(spec, curve) {
        0 => curve.clone(),
        n => translate(curve, n),
    }
}

/// Same curve on the doubled grid, linear at the new midpoints.
pub fn refine(curve: &DiscreteCurve) -> DiscreteCurve {
    let k = curve.k;
    let m = curve.len();
    let mut values = Vec::with_capacity((2 * m - 1) * k);
    for i in 0..m {
        values.extend_from_slice(curve.node(i));
        if i + 1 < m {
            let (a, b) = (curve.node(i), curve.node(i + 1));
            values.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
        }
    }
    DiscreteCurve {
        grid: curve.grid.refined(),
        values,
        ..curve.clone()
    }
}

/// Every `stride`-th node of a curve whose grid is compatible.
pub fn subsample(curve: &DiscreteCurve, stride: usize) -> Result<DiscreteCurve> {
    let m = curve.len();
    if stride == 0 || !(m - 1).is_multiple_of(stride) || !((m - 1) / stride).is_multiple_of(2) {
        return Err(Error::GridMismatch);
    }
    let grid = Grid::new(curve.grid.half_width(), (m - 1) / stride + 1)?;
    let mut values = Vec::with_capacity(grid.nodes() * curve.k);
    for i in (0..m).step_by(stride) {
        values.extend_from_slice(curve.node(i));
    }
    DiscreteCurve::new(grid, values, curve.left.clone(), curve.right.clone())
}

// ---------------------------------------------------------------------------
// Orbit CSV

pub fn orbit_csv(spec: &PotentialSpec, curve: &DiscreteCurve) -> String {
    let e = energy(spec, curve);
    let mut s = String::from("t");
    for a in 1..=curve.k {
        let _ = write!(s, ",u_{a}");
    }
    s.push_str(",e_density\n");
    for i in 0..curve.len() {
        let _ = write!(s, "{:.16e}", curve.grid.t(i));
        for x in curve.node(i) {
            let _ = write!(s, ",{x:.16e}");
        }
        let _ = writeln!(s, ",{:.16e}", e.density[i]);
    }
    s
}

pub fn write_orbit_csv(spec: &PotentialSpec, curve: &DiscreteCurve, path: &Path) -> Result<()> {
    std::fs::write(path, orbit_csv(spec, curve))?;
    Ok(())
}

/// Parse an orbit CSV, inferring the grid from the `t` column. The end nodes
/// must lie within `1e-9` of declared wells of `spec`; they are then snapped
/// onto them.
pub fn read_orbit_csv(spec: &PotentialSpec, text: &str) -> Result<DiscreteCurve> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Config("orbit CSV is empty".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") {
        return Err(Error::Config("orbit CSV header must start with `t`".into()));
    }
    let k = cols.iter().filter(|c| c.starts_with("u_")).count();
    if k != spec.k {
        return Err(Error::Config(format!("orbit CSV has {k} coordinates but the potential has k = {}", spec.k)));
    }
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("orbit CSV row {}: {e}", ln + 2)))?;
        if fields.len() < k + 1 {
            return Err(Error::Config(format!("orbit CSV row {} is too short", ln + 2)));
        }
        ts.push(fields[0]);
        values.extend_from_slice(&fields[1..=k]);
    }
    let m = ts.len();
    let t_half = ts.last().copied().unwrap_or(0.0);
    let grid = Grid::new(t_half, m)?;
    if (ts[0] + t_half).abs() > 1e-9 * t_half.max(1.0) {
        return Err(Error::Config("orbit CSV grid is not symmetric about t = 0".into()));
    }
    let h = grid.h();
    if ts.iter().enumerate().any(|(i, t)| (t - grid.t(i)).abs() > 1e-6 * h) {
        return Err(Error::Config("orbit CSV grid is not uniform".into()));
    }
    let snap = |u: &[f64]| -> Result<Vec<f64>> {
        let (w, d) = spec.nearest_well(u);
        if d > 1e-9 {
            return Err(Error::Config(format!("orbit end {u:?} is not at a declared well (distance {d:e})")));
        }
        Ok(spec.wells[w].clone())
    };
    let left = snap(&values[..k])?;
    let right = snap(&values[(m - 1) * k..])?;
    values[..k].copy_from_slice(&left);
    values[(m - 1) * k..].copy_from_slice(&right);
    DiscreteCurve::new(grid, values, left, right)
}
