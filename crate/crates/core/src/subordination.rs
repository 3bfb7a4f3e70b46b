//! Subordination machinery: the boundary function f_p, the homeomorphism
//! psi_p, the right inverse omega_p of H_p(z) = p z + (1-p) F_mu(z), and the
//! open set V_p^+ where the boundary function is positive.
//!
//! The solver is generic over the H-function, so the same code drives free
//! convolution powers (H_p above) and free Brownian motion
//! (H(z) = z + t G_nu(z)); both share the structure
//! Im H(x + iy) = y (1 - ratio(x, y)) with ratio strictly decreasing in y.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::transform::{f_prime_upper, g_prime_upper, g_upper, BOUNDARY_EPS};

/// Probe height that stands in for the y -> 0 limit: the ratio is monotone
/// in y, so a probe already below threshold certifies a zero of the boundary
/// function up to 1e-9 in y.
pub const Y_PROBE: f64 = BOUNDARY_EPS;

/// Absolute tolerance of the boundary-function root solve.
const F_TOL: f64 = 1e-12;

/// Certificate bound for |Im H| on the computed boundary curve.
const PSI_RESIDUAL: f64 = 1e-8;

/// Subordination-solve residual bound |H(omega(z)) - z|.
const OMEGA_RESIDUAL: f64 = 1e-10;

/// Nevanlinna mass ratio of F_mu at x + iy:
///   Im F_mu(x+iy)/y - 1 = integral (s^2+1)/((s-x)^2 + y^2) drho(s),
/// where rho represents F_mu. Strictly decreasing in y, vanishing at infinity.
pub fn mass_ratio(mu: &Measure, x: f64, y: f64) -> f64 {
    let g = g_upper(mu, Complex64::new(x, y));
    let f_im = -g.im / g.norm_sqr();
    f_im / y - 1.0
}

/// An H-function whose right inverse and boundary curve the solver computes.
pub trait SubordinationProblem: Sync {
    fn h(&self, z: Complex64) -> Complex64;
    fn h_prime(&self, z: Complex64) -> Complex64;
    /// ratio(x, y) - 1 with ratio normalized so that Im H(x+iy) > 0 iff the
    /// excess is negative. Strictly decreasing in y.
    fn excess(&self, x: f64, y: f64) -> f64;
    /// One step of the Denjoy-Wolff iteration for H(w) = z; must map the
    /// upper half-plane into itself for Im z >= 0.
    fn contraction(&self, z: Complex64, w: Complex64) -> Complex64;
}

/// H_p(z) = p z + (1 - p) F_mu(z) for p > 1.
#[derive(Debug, Clone, Copy)]
pub struct HFunction<'a> {
    pub mu: &'a Measure,
    pub p: f64,
}

impl<'a> HFunction<'a> {
    pub fn new(mu: &'a Measure, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid_param(format!("H_p requires p > 1, got {p}")));
        }
        Ok(HFunction { mu, p })
    }
}

impl SubordinationProblem for HFunction<'_> {
    fn h(&self, z: Complex64) -> Complex64 {
        let f = 1.0 / g_upper(self.mu, z);
        self.p * z + (1.0 - self.p) * f
    }

    fn h_prime(&self, z: Complex64) -> Complex64 {
        self.p + (1.0 - self.p) * f_prime_upper(self.mu, z)
    }

    fn excess(&self, x: f64, y: f64) -> f64 {
        (self.p - 1.0) * mass_ratio(self.mu, x, y) - 1.0
    }

    fn contraction(&self, z: Complex64, w: Complex64) -> Complex64 {
        let f = 1.0 / g_upper(self.mu, w);
        z / self.p + (1.0 - 1.0 / self.p) * f
    }
}

/// H(z) = z + t G_nu(z), the generator of free Brownian motion started at nu.
#[derive(Debug, Clone, Copy)]
pub struct BrownianH<'a> {
    pub nu: &'a Measure,
    pub t: f64,
}

impl<'a> BrownianH<'a> {
    pub fn new(nu: &'a Measure, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid_param(format!("Brownian H requires t > 0, got {t}")));
        }
        Ok(BrownianH { nu, t })
    }
}

impl SubordinationProblem for BrownianH<'_> {
    fn h(&self, z: Complex64) -> Complex64 {
        z + self.t * g_upper(self.nu, z)
    }

    fn h_prime(&self, z: Complex64) -> Complex64 {
        1.0 + self.t * g_prime_upper(self.nu, z)
    }

    fn excess(&self, x: f64, y: f64) -> f64 {
        // t * integral dnu(s)/((s-x)^2 + y^2) - 1
        let g = g_upper(self.nu, Complex64::new(x, y));
        -self.t * g.im / y - 1.0
    }

    fn contraction(&self, z: Complex64, w: Complex64) -> Complex64 {
        z - self.t * g_upper(self.nu, w)
    }
}

/// Boundary function: 0 when the y -> 0 excess is already nonpositive, else
/// the unique root in y of excess(x, y) = 0 (bracket doubling from y = 1,
/// then bisection with secant acceleration to absolute tolerance 1e-12).
pub fn boundary_f(prob: &impl SubordinationProblem, x: f64) -> f64 {
    if prob.excess(x, Y_PROBE) <= 0.0 {
        return 0.0;
    }
    let mut lo = Y_PROBE;
    let mut hi = 1.0;
    if prob.excess(x, hi) > 0.0 {
        // root above 1: double until the excess turns negative
        loop {
            lo = hi;
            hi *= 2.0;
            if prob.excess(x, hi) <= 0.0 {
                break;
            }
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
    }
    let mut flo = prob.excess(x, lo);
    let mut fhi = prob.excess(x, hi);
    for _ in 0..200 {
        if hi - lo < F_TOL {
            break;
        }
        // secant proposal, clipped safely inside the bracket, else bisect
        let mut mid = 0.5 * (lo + hi);
        if fhi != flo {
            let sec = lo - flo * (hi - lo) / (fhi - flo);
            if sec > lo + 0.1 * (hi - lo) && sec < hi - 0.1 * (hi - lo) {
                mid = sec;
            }
        }
        let fm = prob.excess(x, mid);
        if fm > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    0.5 * (lo + hi)
}

/// f_p(x) for the free convolution power problem.
pub fn f_p(mu: &Measure, p: f64, x: f64) -> Result<f64> {
    Ok(boundary_f(&HFunction::new(mu, p)?, x))
}

/// psi(x) = H(x + i f(x)); the imaginary part is a solver residual and must
/// stay below 1e-8.
pub fn boundary_psi(prob: &impl SubordinationProblem, x: f64) -> Result<f64> {
    let f = boundary_f(prob, x);
    psi_at(prob, x, f)
}

fn psi_at(prob: &impl SubordinationProblem, x: f64, f: f64) -> Result<f64> {
    let h = prob.h(Complex64::new(x, f.max(Y_PROBE)));
    if h.im.abs() >= PSI_RESIDUAL {
        return Err(Error::ResidualTooLarge { x, residual: h.im.abs() });
    }
    Ok(h.re)
}

pub fn psi_p(mu: &Measure, p: f64, x: f64) -> Result<f64> {
    boundary_psi(&HFunction::new(mu, p)?, x)
}

/// Right inverse of H: the unique w in the closure of the membership region
/// with H(w) = z. Denjoy-Wolff fixed-point iteration started at z + i,
/// followed by a damped Newton polish; the final residual must be below 1e-10.
pub fn invert_h(prob: &impl SubordinationProblem, z: Complex64) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::invalid_param("invert_h requires Im z >= 0"));
    }
    let mut w = z + Complex64::new(0.0, 1.0);
    let mut converged = false;
    for _ in 0..10_000 {
        let next = prob.contraction(z, w);
        let step = (next - w).norm();
        w = next;
        if w.im < 0.0 {
            w.im = 0.0_f64.max(w.im); // clip roundoff below the axis
        }
        if step < 1e-13 {
            converged = true;
            break;
        }
    }
    // damped Newton polish on H(w) - z
    let mut resid = (prob.h(w) - z).norm();
    for _ in 0..8 {
        if resid < 1e-14 {
            break;
        }
        let hp = prob.h_prime(w);
        if hp.norm() < 1e-14 {
            break;
        }
        let full = (prob.h(w) - z) / hp;
        let mut damp = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let cand = w - damp * full;
            if cand.im >= -1e-15 {
                let r = (prob.h(cand) - z).norm();
                if r < resid {
                    w = Complex64::new(cand.re, cand.im.max(0.0));
                    resid = r;
                    improved = true;
                    break;
                }
            }
            damp *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let _ = converged;
    if resid < OMEGA_RESIDUAL {
        Ok(w)
    } else {
        Err(Error::NoConvergence { re: z.re, im: z.im, residual: resid })
    }
}

/// omega_p(z): subordination function of mu^boxplus-p with respect to mu.
pub fn omega_p(mu: &Measure, p: f64, z: Complex64) -> Result<Complex64> {
    invert_h(&HFunction::new(mu, p)?, z)
}

/// A maximal interval of {x : f(x) > 0}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VInterval {
    pub left: f64,
    pub right: f64,
    /// Endpoints refined by bisection (false when clipped at the window).
    pub refined_left: bool,
    pub refined_right: bool,
    /// Narrower than the 1e-6 reporting resolution.
    pub below_resolution: bool,
}

impl VInterval {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }
}

/// Maximal intervals where the boundary function is positive, on a coarse
/// grid of `coarse_n` points with bisection-refined endpoints. Cells with
/// zero boundary function at both ends get one midpoint probe to catch
/// narrow components; anything narrower is accepted as missable.
pub fn scan_v_plus(
    prob: &impl SubordinationProblem,
    window: (f64, f64),
    coarse_n: usize,
) -> Result<Vec<VInterval>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid_param(
            "v_plus window must be finite; unbounded support needs an explicit window",
        ));
    }
    let n = coarse_n.max(3);
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let inside: Vec<bool> = xs.par_iter().map(|&x| prob.excess(x, Y_PROBE) > 0.0).collect();

    if inside[0] {
        return Err(Error::WindowTooSmall { boundary: lo });
    }
    if inside[n - 1] {
        return Err(Error::WindowTooSmall { boundary: hi });
    }

    // midpoint probes on outside-outside cells
    let probes: Vec<Option<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            if !inside[i] && !inside[i + 1] {
                let mid = 0.5 * (xs[i] + xs[i + 1]);
                (prob.excess(mid, Y_PROBE) > 0.0).then_some(mid)
            } else {
                None
            }
        })
        .collect();

    let refine = |mut a: f64, mut b: f64| {
        // invariant: inside at exactly one of a, b
        for _ in 0..60 {
            if (b - a).abs() < 1e-10 {
                break;
            }
            let m = 0.5 * (a + b);
            if prob.excess(m, Y_PROBE) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if !inside[i] {
            // narrow component entirely inside cell (i, i+1)?
            if i + 1 < n {
                if let Some(mid) = probes[i] {
                    let left = refine(mid, xs[i]);
                    let right = refine(mid, xs[i + 1]);
                    intervals.push(VInterval {
                        left,
                        right,
                        refined_left: true,
                        refined_right: true,
                        below_resolution: right - left < 1e-6,
                    });
                }
            }
            i += 1;
            continue;
        }
        // run of inside points starting at i
        let start = i;
        while i + 1 < n && inside[i + 1] {
            i += 1;
        }
        let left = refine(xs[start], xs[start - 1]);
        let right = refine(xs[i], xs[i + 1]);
        intervals.push(VInterval {
            left,
            right,
            refined_left: true,
            refined_right: true,
            below_resolution: right - left < 1e-6,
        });
        i += 1;
    }
    Ok(intervals)
}

pub fn v_plus(mu: &Measure, p: f64, window: (f64, f64), coarse_n: usize) -> Result<Vec<VInterval>> {
    scan_v_plus(&HFunction::new(mu, p)?, window, coarse_n)
}

/// Boundary curve of one subordination problem sampled over its V^+
/// components, with psi values and the residual certificate.
#[derive(Debug, Clone)]
pub struct SubordinationSolution {
    pub p: f64,
    pub grid: Vec<f64>,
    pub fp_values: Vec<f64>,
    pub psi_values: Vec<f64>,
    pub vplus_intervals: Vec<VInterval>,
    /// max |Im H| observed on the curve.
    pub max_residual: f64,
}

/// Sample the boundary curve of `prob` with `grid_n` total points allocated
/// over the V^+ components (cosine-clustered within each component).
pub fn solve_boundary(
    prob: &impl SubordinationProblem,
    p: f64,
    window: (f64, f64),
    coarse_n: usize,
    grid_n: usize,
) -> Result<SubordinationSolution> {
    let vplus = scan_v_plus(prob, window, coarse_n)?;
    let total_width: f64 = vplus.iter().map(|v| v.width()).sum();
    let mut grid: Vec<f64> = Vec::new();
    for v in &vplus {
        if total_width <= 0.0 {
            break;
        }
        let share = ((grid_n as f64) * v.width() / total_width).ceil() as usize;
        let n = share.clamp(17, grid_n);
        grid.extend(crate::transform::cos_grid(v.left, v.right, n));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let curve: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&x| {
            let f = boundary_f(prob, x);
            let h = prob.h(Complex64::new(x, f.max(Y_PROBE)));
            (f, h.re, h.im.abs())
        })
        .collect();

    let mut max_residual = 0.0f64;
    let mut fp_values = Vec::with_capacity(grid.len());
    let mut psi_values = Vec::with_capacity(grid.len());
    for (i, &(f, psi, resid)) in curve.iter().enumerate() {
        if resid >= PSI_RESIDUAL {
            return Err(Error::ResidualTooLarge { x: grid[i], residual: resid });
        }
        max_residual = max_residual.max(resid);
        fp_values.push(f);
        psi_values.push(psi);
    }
    Ok(SubordinationSolution { p, grid, fp_values, psi_values, vplus_intervals: vplus, max_residual })
}

/// Full solution for the free power problem (mu, p).
pub fn solve(
    mu: &Measure,
    p: f64,
    window: (f64, f64),
    coarse_n: usize,
    grid_n: usize,
) -> Result<SubordinationSolution> {
    solve_boundary(&HFunction::new(mu, p)?, p, window, coarse_n, grid_n)
}

/// Default scan window: support hull inflated by (1 + sqrt(p-1)) (1 + diam),
/// covering the at-most-linear support growth of free powers.
pub fn default_window(mu: &Measure, p: f64) -> Result<(f64, f64)> {
    let (lo, hi) = mu.support_hull();
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid_param(
            "measure has unbounded support; supply an explicit window",
        ));
    }
    let diam = hi - lo;
    let pad = (1.0 + (p - 1.0).max(0.0).sqrt()) * (1.0 + diam);
    Ok((lo - pad, hi + pad))
}
