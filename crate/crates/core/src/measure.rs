//! Probability measures on the real line: atoms plus weighted absolutely
//! continuous components, the single input object of every operation.
//!
//! Each closed-form family carries its Cauchy transform with the branch of
//! every square root chosen so that G maps the upper half-plane into the
//! lower one. The factored form `sqrt(z - a) * sqrt(z - b)` with principal
//! square roots realizes that branch and, crucially, keeps small imaginary
//! parts relatively accurate near the real axis, which the boundary solvers
//! rely on.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// Unit-mass renormalization tolerance: accepts float-literal specs without
/// silently fixing modeling errors.
pub const MASS_TOL: f64 = 1e-9;

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

/// Shape of an absolutely continuous component, normalized to total mass 1.
///
/// For `MarchenkoPastur` with rate < 1 the shape is the absolutely continuous
/// part of the Marchenko-Pastur law normalized to mass 1; the law's atom at 0
/// (mass 1 - rate) must be supplied separately as an `Atom`. For rate >= 1
/// the shape is the full law, which is purely absolutely continuous.
#[derive(Debug, Clone, PartialEq)]
pub enum AcFamily {
    Semicircle { center: f64, variance: f64 },
    MarchenkoPastur { rate: f64, scale: f64 },
    Cauchy { location: f64, scale: f64 },
    Arcsine { left: f64, right: f64 },
    Tabulated { grid: Vec<f64>, density: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcComponent {
    pub weight: f64,
    pub family: AcFamily,
}

/// A validated probability measure. Immutable after construction; all
/// operations on it are pure, so sharing across threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<Atom>,
    components: Vec<AcComponent>,
}

/// Finite raw-moment sequence, `m[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub m: Vec<f64>,
}

impl MomentVector {
    pub fn order(&self) -> usize {
        self.m.len().saturating_sub(1)
    }

    /// Smallest LDL^T pivot over Hankel matrices [m_{i+j}] built from the
    /// available orders; nonnegative within tolerance for a true moment
    /// sequence.
    pub fn hankel_min_pivot(&self) -> f64 {
        let n = (self.m.len() + 1) / 2;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = self.m[i + j];
            }
        }
        let mut min_pivot = f64::INFINITY;
        let mut l = vec![vec![0.0; n]; n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut dj = a[j][j];
            for k in 0..j {
                dj -= l[j][k] * l[j][k] * d[k];
            }
            d[j] = dj;
            min_pivot = min_pivot.min(dj);
            if dj.abs() < 1e-300 {
                break; // rank deficiency; remaining pivots are moot
            }
            for i in (j + 1)..n {
                let mut v = a[i][j];
                for k in 0..j {
                    v -= l[i][k] * l[j][k] * d[k];
                }
                l[i][j] = v / dj;
            }
        }
        min_pivot
    }
}

fn finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_measure(format!("{what} is not finite")))
    }
}

impl AcFamily {
    fn validate(&self) -> Result<()> {
        match self {
            AcFamily::Semicircle { center, variance } => {
                finite(*center, "semicircle center")?;
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::invalid_measure("semicircle variance must be positive"));
                }
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid_measure("marchenko_pastur rate must be positive"));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid_measure("marchenko_pastur scale must be positive"));
                }
            }
            AcFamily::Cauchy { location, scale } => {
                finite(*location, "cauchy location")?;
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid_measure("cauchy scale must be positive"));
                }
            }
            AcFamily::Arcsine { left, right } => {
                finite(*left, "arcsine left")?;
                finite(*right, "arcsine right")?;
                if left >= right {
                    return Err(Error::invalid_measure("arcsine requires left < right"));
                }
            }
            AcFamily::Tabulated { grid, density } => {
                if grid.len() != density.len() {
                    return Err(Error::invalid_measure("tabulated grid/density length mismatch"));
                }
                if grid.len() < 2 {
                    return Err(Error::invalid_measure("tabulated needs at least two nodes"));
                }
                for (i, w) in grid.windows(2).enumerate() {
                    if !(w[1] > w[0]) {
                        return Err(Error::NonMonotoneGrid { index: i + 1 });
                    }
                }
                for (i, &d) in density.iter().enumerate() {
                    if !(d >= 0.0 && d.is_finite()) {
                        return Err(Error::invalid_measure(format!(
                            "tabulated density at node {i} is negative or non-finite"
                        )));
                    }
                }
                let total = trapezoid(grid, density);
                if (total - 1.0).abs() > 1e-6 {
                    return Err(Error::NonUnitMass { total });
                }
            }
        }
        Ok(())
    }

    /// Support interval; Cauchy reports the whole line.
    pub fn support(&self) -> (f64, f64) {
        match self {
            AcFamily::Semicircle { center, variance } => {
                let r = 2.0 * variance.sqrt();
                (center - r, center + r)
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                let s = rate.sqrt();
                (scale * (1.0 - s) * (1.0 - s), scale * (1.0 + s) * (1.0 + s))
            }
            AcFamily::Cauchy { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            AcFamily::Arcsine { left, right } => (*left, *right),
            AcFamily::Tabulated { grid, .. } => (grid[0], *grid.last().unwrap()),
        }
    }

    /// Density of the normalized shape at x.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            AcFamily::Semicircle { center, variance } => {
                let u = x - center;
                let disc = 4.0 * variance - u * u;
                if disc > 0.0 {
                    disc.sqrt() / (2.0 * std::f64::consts::PI * variance)
                } else {
                    0.0
                }
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                let t = x / scale;
                let s = rate.sqrt();
                let (lo, hi) = ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s));
                if t <= lo || t >= hi || t <= 0.0 {
                    return 0.0;
                }
                let full = ((t - lo) * (hi - t)).sqrt() / (2.0 * std::f64::consts::PI * t);
                full / (scale * rate.min(1.0))
            }
            AcFamily::Cauchy { location, scale } => {
                scale / (std::f64::consts::PI * ((x - location).powi(2) + scale * scale))
            }
            AcFamily::Arcsine { left, right } => {
                let disc = (x - left) * (right - x);
                if disc > 0.0 {
                    1.0 / (std::f64::consts::PI * disc.sqrt())
                } else {
                    0.0
                }
            }
            AcFamily::Tabulated { grid, density } => {
                if x < grid[0] || x > *grid.last().unwrap() {
                    return 0.0;
                }
                let i = grid.partition_point(|&g| g <= x).min(grid.len() - 1).max(1);
                let (a, b) = (grid[i - 1], grid[i]);
                let t = (x - a) / (b - a);
                density[i - 1] * (1.0 - t) + density[i] * t
            }
        }
    }

    /// Cauchy transform of the normalized shape, upper-half-plane branch.
    pub fn g(&self, z: Complex64) -> Complex64 {
        match self {
            AcFamily::Semicircle { center, variance } => {
                let w = z - center;
                let sigma2 = 2.0 * variance.sqrt();
                let s = ((w - sigma2).sqrt()) * ((w + sigma2).sqrt());
                (w - s) / (2.0 * variance)
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                let t = z / *scale;
                mp_g_normalized(*rate, t) / *scale
            }
            AcFamily::Cauchy { location, scale } => {
                1.0 / (z - location + Complex64::new(0.0, *scale))
            }
            AcFamily::Arcsine { left, right } => {
                1.0 / (((z - *left).sqrt()) * ((z - *right).sqrt()))
            }
            AcFamily::Tabulated { grid, density } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 1..grid.len() {
                    acc += segment_g(grid[i - 1], grid[i], density[i - 1], density[i], z);
                }
                acc
            }
        }
    }

    /// Derivative of the Cauchy transform of the normalized shape.
    pub fn g_prime(&self, z: Complex64) -> Complex64 {
        match self {
            AcFamily::Semicircle { center, variance } => {
                let w = z - center;
                let sigma2 = 2.0 * variance.sqrt();
                let s = ((w - sigma2).sqrt()) * ((w + sigma2).sqrt());
                (1.0 - w / s) / (2.0 * variance)
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                let t = z / *scale;
                mp_g_prime_normalized(*rate, t) / (scale * scale)
            }
            AcFamily::Cauchy { location, scale } => {
                let d = z - location + Complex64::new(0.0, *scale);
                -1.0 / (d * d)
            }
            AcFamily::Arcsine { left, right } => {
                let s = ((z - *left).sqrt()) * ((z - *right).sqrt());
                let mid = 0.5 * (left + right);
                -(z - mid) / (s * s * s)
            }
            AcFamily::Tabulated { grid, density } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 1..grid.len() {
                    acc += segment_g_prime(grid[i - 1], grid[i], density[i - 1], density[i], z);
                }
                acc
            }
        }
    }

    pub fn has_finite_moments(&self) -> bool {
        !matches!(self, AcFamily::Cauchy { .. })
    }

    /// Raw moment of order k of the normalized shape. Square-root edge
    /// integrands are mapped to smooth ones by the substitution
    /// x = m + h sin(theta) before adaptive quadrature; tabulated segments
    /// integrate exactly.
    pub fn moment(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let kk = k as i32;
        match self {
            AcFamily::Semicircle { center, variance } => {
                let (c, h) = (*center, 2.0 * variance.sqrt());
                // density dx -> (2/pi) cos^2(theta) dtheta
                quad::integrate(
                    |th| {
                        let x = c + h * th.sin();
                        x.powi(kk) * th.cos().powi(2) * 2.0 / std::f64::consts::PI
                    },
                    -std::f64::consts::FRAC_PI_2,
                    std::f64::consts::FRAC_PI_2,
                    1e-10,
                )
            }
            AcFamily::MarchenkoPastur { rate, scale } => {
                let s = rate.sqrt();
                let (lo, hi) = ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s));
                let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                let norm = rate.min(1.0);
                let v = quad::integrate(
                    |th| {
                        let t = m + h * th.sin();
                        // h^2 cos^2 / (2 pi t), with the x^k weight
                        t.powi(kk) * h * h * th.cos().powi(2) / (2.0 * std::f64::consts::PI * t)
                    },
                    -std::f64::consts::FRAC_PI_2,
                    std::f64::consts::FRAC_PI_2,
                    1e-10,
                )?;
                Ok(v * scale.powi(kk) / norm)
            }
            AcFamily::Cauchy { .. } => Err(Error::HeavyTail { order: k }),
            AcFamily::Arcsine { left, right } => {
                let (c, h) = (0.5 * (left + right), 0.5 * (right - left));
                // density dx -> uniform dtheta / pi
                quad::integrate(
                    |th| (c + h * th.sin()).powi(kk) / std::f64::consts::PI,
                    -std::f64::consts::FRAC_PI_2,
                    std::f64::consts::FRAC_PI_2,
                    1e-10,
                )
            }
            AcFamily::Tabulated { grid, density } => {
                let mut acc = 0.0;
                for i in 1..grid.len() {
                    acc += segment_moment(grid[i - 1], grid[i], density[i - 1], density[i], k);
                }
                Ok(acc)
            }
        }
    }
}

/// Cauchy transform of the Marchenko-Pastur shape with scale 1 (normalized
/// to mass 1; for rate < 1 the atom at 0 is removed and the rest rescaled).
fn mp_g_normalized(rate: f64, z: Complex64) -> Complex64 {
    let s = rate.sqrt();
    let (lo, hi) = ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s));
    let root = ((z - lo).sqrt()) * ((z - hi).sqrt());
    let g_full = (z + 1.0 - rate - root) / (2.0 * z);
    if rate >= 1.0 {
        g_full
    } else {
        (g_full - (1.0 - rate) / z) / rate
    }
}

fn mp_g_prime_normalized(rate: f64, z: Complex64) -> Complex64 {
    let s = rate.sqrt();
    let (lo, hi) = ((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s));
    let root = ((z - lo).sqrt()) * ((z - hi).sqrt());
    let root_prime = (z - 0.5 * (lo + hi)) / root;
    let g_full = (z + 1.0 - rate - root) / (2.0 * z);
    let g_full_prime = ((1.0 - root_prime) - 2.0 * g_full) / (2.0 * z);
    if rate >= 1.0 {
        g_full_prime
    } else {
        (g_full_prime + (1.0 - rate) / (z * z)) / rate
    }
}

/// Exact Cauchy transform of one linear-density segment: with d(x) = alpha +
/// beta x on [a, b],
///   integral d(x)/(z - x) dx = (alpha + beta z) [ln(z-a) - ln(z-b)] - beta (b - a).
fn segment_g(a: f64, b: f64, da: f64, db: f64, z: Complex64) -> Complex64 {
    let beta = (db - da) / (b - a);
    let alpha = da - beta * a;
    let l = (z - a).ln() - (z - b).ln();
    (alpha + beta * z) * l - beta * (b - a)
}

fn segment_g_prime(a: f64, b: f64, da: f64, db: f64, z: Complex64) -> Complex64 {
    let beta = (db - da) / (b - a);
    let alpha = da - beta * a;
    let l = (z - a).ln() - (z - b).ln();
    beta * l + (alpha + beta * z) * (1.0 / (z - a) - 1.0 / (z - b))
}

/// Exact k-th moment of one linear-density segment.
fn segment_moment(a: f64, b: f64, da: f64, db: f64, k: usize) -> f64 {
    let beta = (db - da) / (b - a);
    let alpha = da - beta * a;
    let k1 = (k + 1) as f64;
    let k2 = (k + 2) as f64;
    let p1 = (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / k1;
    let p2 = (b.powi(k as i32 + 2) - a.powi(k as i32 + 2)) / k2;
    alpha * p1 + beta * p2
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    acc
}

impl Measure {
    /// Validate and build a measure. Masses and weights are renormalized only
    /// when their total is within 1e-9 of 1; larger deviations are rejected.
    pub fn new(atoms: Vec<Atom>, components: Vec<AcComponent>) -> Result<Self> {
        if atoms.is_empty() && components.is_empty() {
            return Err(Error::invalid_measure("measure has no atoms and no components"));
        }
        for a in &atoms {
            finite(a.position, "atom position")?;
            if !(a.mass > 0.0 && a.mass <= 1.0 + MASS_TOL && a.mass.is_finite()) {
                return Err(Error::invalid_measure(format!(
                    "atom mass {} outside (0, 1]",
                    a.mass
                )));
            }
        }
        let mut sorted: Vec<f64> = atoms.iter().map(|a| a.position).collect();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateAtom { position: w[0] });
            }
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight <= 1.0 + MASS_TOL && c.weight.is_finite()) {
                return Err(Error::invalid_measure(format!(
                    "component weight {} outside (0, 1]",
                    c.weight
                )));
            }
            c.family.validate()?;
        }
        let total: f64 =
            atoms.iter().map(|a| a.mass).sum::<f64>() + components.iter().map(|c| c.weight).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NonUnitMass { total });
        }
        let mut atoms = atoms;
        let mut components = components;
        for a in &mut atoms {
            a.mass /= total;
        }
        for c in &mut components {
            c.weight /= total;
        }
        atoms.sort_by(|a, b| a.position.partial_cmp(&b.position).unwrap());
        Ok(Measure { atoms, components })
    }

    pub fn from_atoms(spec: &[(f64, f64)]) -> Result<Self> {
        Measure::new(
            spec.iter().map(|&(position, mass)| Atom { position, mass }).collect(),
            Vec::new(),
        )
    }

    pub fn point_mass(position: f64) -> Self {
        Measure::from_atoms(&[(position, 1.0)]).expect("point mass is valid")
    }

    pub fn single(family: AcFamily) -> Result<Self> {
        Measure::new(Vec::new(), vec![AcComponent { weight: 1.0, family }])
    }

    pub fn semicircle(center: f64, variance: f64) -> Result<Self> {
        Measure::single(AcFamily::Semicircle { center, variance })
    }

    pub fn arcsine(left: f64, right: f64) -> Result<Self> {
        Measure::single(AcFamily::Arcsine { left, right })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn components(&self) -> &[AcComponent] {
        &self.components
    }

    pub fn is_point_mass(&self) -> bool {
        self.components.is_empty() && self.atoms.len() == 1
    }

    pub fn has_finite_moments(&self) -> bool {
        self.components.iter().all(|c| c.family.has_finite_moments())
    }

    /// Convex hull of the support. Infinite for Cauchy components.
    pub fn support_hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.position);
            hi = hi.max(a.position);
        }
        for c in &self.components {
            let (l, r) = c.family.support();
            lo = lo.min(l);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Total density (atoms excluded) at x.
    pub fn density_at(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.family.density_at(x)).sum()
    }

    /// Closed intervals carrying absolutely continuous mass, merged.
    pub fn ac_support_intervals(&self) -> Vec<(f64, f64)> {
        let mut iv: Vec<(f64, f64)> = self.components.iter().map(|c| c.family.support()).collect();
        iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (l, r) in iv {
            match merged.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(r),
                _ => merged.push((l, r)),
            }
        }
        merged
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_point_mass_and_bernoulli() {
        let m = Measure::from_atoms(&[(0.0, 1.0)]).unwrap();
        assert_eq!(m.atoms().len(), 1);
        let b = Measure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(b.atoms().len(), 2);
        assert!(b.atoms()[0].position < b.atoms()[1].position);
    }

    #[test]
    fn rejects_mass_deficit() {
        let r = Measure::new(
            vec![Atom { position: 0.0, mass: 0.6 }],
            vec![AcComponent {
                weight: 0.3,
                family: AcFamily::Semicircle { center: 0.0, variance: 1.0 },
            }],
        );
        assert!(matches!(r, Err(Error::NonUnitMass { .. })));
    }

    #[test]
    fn rejects_duplicate_atom_and_bad_grid() {
        let r = Measure::from_atoms(&[(1.0, 0.5), (1.0, 0.5)]);
        assert!(matches!(r, Err(Error::DuplicateAtom { .. })));
        let r = Measure::single(AcFamily::Tabulated {
            grid: vec![0.0, 1.0, 1.0],
            density: vec![1.0, 1.0, 0.0],
        });
        assert!(matches!(r, Err(Error::NonMonotoneGrid { .. })));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let m = Measure::from_atoms(&[(0.0, 0.5 + 4e-10), (1.0, 0.5)]).unwrap();
        let total: f64 = m.atoms().iter().map(|a| a.mass).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_must_integrate_to_one() {
        let r = Measure::single(AcFamily::Tabulated {
            grid: vec![0.0, 1.0],
            density: vec![1.0, 0.5],
        });
        assert!(matches!(r, Err(Error::NonUnitMass { .. })));
        // triangle with area 1
        let ok = Measure::single(AcFamily::Tabulated {
            grid: vec![-1.0, 0.0, 1.0],
            density: vec![0.0, 1.0, 0.0],
        });
        assert!(ok.is_ok());
    }

    #[test]
    fn family_supports_and_density() {
        let sc = AcFamily::Semicircle { center: 0.0, variance: 1.0 };
        assert_eq!(sc.support(), (-2.0, 2.0));
        assert!((sc.density_at(0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let arc = AcFamily::Arcsine { left: -2.0, right: 2.0 };
        assert!((arc.density_at(0.0) - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn hankel_pivots_of_valid_moments() {
        // semicircle moments 1, 0, 1, 0, 2, 0, 5 are a true moment sequence
        let mv = MomentVector { m: vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0] };
        assert!(mv.hankel_min_pivot() > -1e-8);
        // not a moment sequence: m2 < m1^2
        let bad = MomentVector { m: vec![1.0, 1.0, 0.5] };
        assert!(bad.hankel_min_pivot() < -1e-8);
    }
}
