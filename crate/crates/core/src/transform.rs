//! The three analytic transforms G, F = 1/G, E = z - F on the closed upper
//! half-plane, raw moments, and generic Stieltjes inversion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{trapezoid, Measure, MomentVector};

/// Probe height used when a boundary value on the real line is needed.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Cauchy transform, valid for Im z > 0 without restrictions.
/// Callers own the responsibility of Im z >= 0.
pub fn g_upper(mu: &Measure, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in mu.atoms() {
        acc += a.mass / (z - a.position);
    }
    for c in mu.components() {
        acc += c.weight * c.family.g(z);
    }
    acc
}

pub fn g_prime_upper(mu: &Measure, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in mu.atoms() {
        let d = z - a.position;
        acc -= a.mass / (d * d);
    }
    for c in mu.components() {
        acc += c.weight * c.family.g_prime(z);
    }
    acc
}

fn check_real_point(mu: &Measure, x: f64) -> Result<()> {
    for a in mu.atoms() {
        if x == a.position {
            return Err(Error::EvaluationOnSingularity { x });
        }
    }
    for c in mu.components() {
        if let crate::measure::AcFamily::Tabulated { grid, .. } = &c.family {
            if x >= grid[0] && x <= *grid.last().unwrap() {
                return Err(Error::EvaluationOnSingularity { x });
            }
        }
    }
    Ok(())
}

/// G_mu(z) for Im z >= 0. On the real axis the point must avoid atoms and
/// tabulated supports; any non-finite value is reported as a singularity.
pub fn eval_g(mu: &Measure, z: Complex64) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::invalid_param("eval_g requires Im z >= 0"));
    }
    if z.im == 0.0 {
        check_real_point(mu, z.re)?;
    }
    let g = g_upper(mu, z);
    if !g.re.is_finite() || !g.im.is_finite() {
        return Err(Error::EvaluationOnSingularity { x: z.re });
    }
    Ok(g)
}

pub fn eval_f(mu: &Measure, z: Complex64) -> Result<Complex64> {
    let g = eval_g(mu, z)?;
    if g.norm() == 0.0 {
        return Err(Error::ZeroCauchyTransform { re: z.re, im: z.im });
    }
    Ok(1.0 / g)
}

pub fn eval_e(mu: &Measure, z: Complex64) -> Result<Complex64> {
    Ok(z - eval_f(mu, z)?)
}

/// F'(z) = -G'(z)/G(z)^2, the Julia-Caratheodory derivative along vertical
/// approach when z is real.
pub fn f_prime_upper(mu: &Measure, z: Complex64) -> Complex64 {
    let g = g_upper(mu, z);
    -g_prime_upper(mu, z) / (g * g)
}

/// Boundary value of F at x, probed just above the axis.
pub fn f_boundary(mu: &Measure, x: f64) -> Complex64 {
    1.0 / g_upper(mu, Complex64::new(x, BOUNDARY_EPS))
}

/// Raw moments through order n (n <= 12). Atoms sum exactly; absolutely
/// continuous parts integrate to abs error <= 1e-9 per moment.
pub fn moments(mu: &Measure, n: usize) -> Result<MomentVector> {
    if n > 12 {
        return Err(Error::invalid_param("moment order capped at 12"));
    }
    for c in mu.components() {
        if !c.family.has_finite_moments() {
            return Err(Error::HeavyTail { order: 1.min(n) });
        }
    }
    let mut m = vec![0.0; n + 1];
    for (k, mk) in m.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in mu.atoms() {
            acc += a.mass * a.position.powi(k as i32);
        }
        for c in mu.components() {
            acc += c.weight * c.family.moment(k)?;
        }
        *mk = acc;
    }
    m[0] = 1.0;
    Ok(MomentVector { m })
}

pub fn mean_variance(mu: &Measure) -> Result<(f64, f64)> {
    let mv = moments(mu, 2)?;
    Ok((mv.m[1], mv.m[2] - mv.m[1] * mv.m[1]))
}

/// Sampled density with its support intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    /// (x, density) with strictly increasing x.
    pub samples: Vec<(f64, f64)>,
    /// Disjoint sorted intervals outside of which the density vanishes.
    pub support_intervals: Vec<(f64, f64)>,
}

impl DensityTable {
    pub fn trapezoid_mass(&self) -> f64 {
        let xs: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        let ds: Vec<f64> = self.samples.iter().map(|s| s.1).collect();
        trapezoid(&xs, &ds)
    }

    /// Raw moment of order k of the sampled density (trapezoid rule).
    pub fn moment(&self, k: usize) -> f64 {
        let xs: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        let ws: Vec<f64> = self.samples.iter().map(|s| s.1 * s.0.powi(k as i32)).collect();
        trapezoid(&xs, &ws)
    }

    /// Linear interpolation of the sampled density; zero outside the sampled
    /// range.
    pub fn density_at(&self, x: f64) -> f64 {
        let n = self.samples.len();
        if n == 0 || x < self.samples[0].0 || x > self.samples[n - 1].0 {
            return 0.0;
        }
        let i = self
            .samples
            .partition_point(|s| s.0 <= x)
            .min(n - 1)
            .max(1);
        let (x0, d0) = self.samples[i - 1];
        let (x1, d1) = self.samples[i];
        if x1 == x0 {
            return d0;
        }
        let t = (x - x0) / (x1 - x0);
        d0 * (1.0 - t) + d1 * t
    }

    /// Derive support intervals as maximal runs of samples above `floor`.
    pub fn intervals_above(&self, floor: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        for &(x, d) in &self.samples {
            if d > floor {
                if start.is_none() {
                    start = Some(x);
                }
            } else if let Some(s) = start.take() {
                out.push((s, x));
            }
        }
        if let Some(s) = start {
            out.push((s, self.samples.last().unwrap().0));
        }
        out
    }
}

/// Schedule of probe heights for Stieltjes inversion with the convergence
/// tolerance of the extrapolation table.
#[derive(Debug, Clone)]
pub struct EpsSchedule {
    pub eps: Vec<f64>,
    pub tol: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            eps: (3..=20).map(|k| 0.5f64.powi(k)).collect(),
            tol: 1e-9,
        }
    }
}

/// Floor of the negative-roundoff clamp. The effective clamp is the larger of
/// this and the extrapolation tolerance, since converged extrapolants are only
/// determined to that accuracy; anything more negative means the evaluator is
/// not a Cauchy transform of a positive measure.
const NEG_CLAMP: f64 = 1e-12;

/// Density floor below which a point counts as outside the support.
const SUPPORT_FLOOR: f64 = 1e-9;

/// Extrapolate -Im G(x + i eps)/pi to eps -> 0 with a Richardson table in
/// powers of eps (steps halve along the schedule).
fn invert_at<G>(g: &G, x: f64, schedule: &EpsSchedule) -> Result<f64>
where
    G: Fn(Complex64) -> Result<Complex64>,
{
    let mut diag: Vec<f64> = Vec::with_capacity(schedule.eps.len());
    let mut prev_row: Vec<f64> = Vec::new();
    let mut last_best = f64::NAN;
    for (i, &eps) in schedule.eps.iter().enumerate() {
        let gv = g(Complex64::new(x, eps))?;
        let raw = -gv.im / std::f64::consts::PI;
        let mut row = vec![raw];
        for j in 1..=i {
            let factor = 2f64.powi(j as i32);
            let v = (factor * row[j - 1] - prev_row[j - 1]) / (factor - 1.0);
            row.push(v);
        }
        let best = *row.last().unwrap();
        diag.push(best);
        if i > 0 && (best - last_best).abs() < schedule.tol {
            return finish_density(best, x, schedule.tol);
        }
        last_best = best;
        prev_row = row;
    }
    // Did not settle to tol. Distinguish slow-but-decaying tails (half-power
    // expansions at support edges, where the polynomial table converges like
    // sqrt(eps)) from genuine divergence or oscillation (atom in the window).
    let n = diag.len();
    let spread = (diag[n - 1] - diag[n - 2]).abs();
    if spread < schedule.tol.max(1e-11 * diag[n - 1].abs()) {
        return finish_density(diag[n - 1], x, schedule.tol);
    }
    // Half-power tails at support edges stall around 1e-5..1e-3; a singular
    // part in the window blows the spread up by orders of magnitude instead.
    if spread < 3e-3 * (1.0 + diag[n - 1].abs()) {
        return finish_density(diag[n - 1], x, spread);
    }
    Err(Error::NonConvergent { x, spread })
}

fn finish_density(v: f64, x: f64, tol: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -NEG_CLAMP.max(tol) {
        Ok(0.0)
    } else {
        // clearly negative limit: the evaluator is not a Cauchy transform
        Err(Error::NonConvergent { x, spread: -v })
    }
}

/// Stieltjes inversion of `g` on an explicit grid.
pub fn invert_on_grid<G>(g: &G, grid: &[f64], schedule: &EpsSchedule) -> Result<Vec<f64>>
where
    G: Fn(Complex64) -> Result<Complex64> + Sync,
{
    use rayon::prelude::*;
    grid.par_iter().map(|&x| invert_at(g, x, schedule)).collect()
}

/// Cosine-spaced grid over [lo, hi]: clusters nodes at both ends, which keeps
/// trapezoid sums accurate against square-root edge behavior.
pub fn cos_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            lo + (hi - lo) * 0.5 * (1.0 - t.cos())
        })
        .collect()
}

/// Stieltjes inversion over a uniform grid of `n` points spanning `window`.
pub fn stieltjes_invert<G>(
    g: &G,
    window: (f64, f64),
    n: usize,
    schedule: &EpsSchedule,
) -> Result<DensityTable>
where
    G: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid_param("inversion window must be finite and ordered"));
    }
    let n = n.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let density = invert_on_grid(g, &grid, schedule)?;
    let samples: Vec<(f64, f64)> = grid.into_iter().zip(density).collect();
    let table = DensityTable { samples, support_intervals: Vec::new() };
    let support_intervals = table.intervals_above(SUPPORT_FLOOR);
    Ok(DensityTable { support_intervals, ..table })
}
