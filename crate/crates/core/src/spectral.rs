//! Shared output types: certified atoms, operation parameters, and the
//! spectral result every convolution operation returns.

use crate::error::Result;
use crate::measure::{AcComponent, AcFamily, Atom, Measure, MomentVector};
use crate::transform::DensityTable;

/// Which atom criterion certified a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomRegime {
    /// q = 1: roots of F_mu on the boundary with finite derivative limit.
    FreePower,
    /// p = 1: F_mu(alpha) = alpha/q*.
    Boolean,
    /// p > 1, q != 1/p*: F_mu(alpha/p') = alpha/q*.
    BpqGeneral,
    /// p > 1, q = 1/p*: single candidate alpha = (1-p) F_mu(0).
    BpqSpecial,
}

/// The boundary values that certified an atom.
#[derive(Debug, Clone, Copy)]
pub struct AtomCertificate {
    /// Boundary value of F_mu at the criterion point.
    pub boundary_f: f64,
    /// Derivative limit f_mu at the criterion point.
    pub f_mu: f64,
    /// Julia-Caratheodory derivative of the output transform at the atom;
    /// the reciprocal of the mass.
    pub jc_derivative: f64,
    pub regime: AtomRegime,
}

#[derive(Debug, Clone, Copy)]
pub struct AtomRecord {
    pub position: f64,
    pub mass: f64,
    pub certificate: AtomCertificate,
}

/// Which operation produced a result, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpParams {
    Resample,
    FreePower { p: f64 },
    BooleanPower { q: f64 },
    Bpq { p: f64, q: f64 },
    Bt { t: f64 },
    Brownian { t: f64 },
    Poisson { lambda: f64 },
    FreePowerSubOne { p: f64 },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// max |Im H| on the boundary curve / max |H(omega(z)) - z| over solves.
    pub max_subordination_residual: f64,
    /// Worst relative moment deviation against the cumulant oracle, when a
    /// comparison has been attached.
    pub oracle_moment_deviation: Option<f64>,
}

/// Output of a convolution operation: sampled density, certified atoms,
/// parameters, and solve diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub density: DensityTable,
    pub atoms: Vec<AtomRecord>,
    pub params: OpParams,
    pub diagnostics: Diagnostics,
}

impl SpectralResult {
    /// Atom masses plus the trapezoid integral of the density.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.density.trapezoid_mass()
    }

    /// Raw moments of the result: atoms exact, density by trapezoid.
    pub fn moments(&self, n: usize) -> MomentVector {
        let mut m = vec![0.0; n + 1];
        for (k, mk) in m.iter_mut().enumerate() {
            let mut acc = self.density.moment(k);
            for a in &self.atoms {
                acc += a.mass * a.position.powi(k as i32);
            }
            *mk = acc;
        }
        MomentVector { m }
    }

    /// Rebuild a Measure from this result: atoms plus one tabulated component.
    /// The tabulated density is rescaled so the total is exactly 1, provided
    /// the bookkeeping deficit is below 1e-3 (quadrature-level error only).
    pub fn to_measure(&self) -> Result<Measure> {
        let atom_mass: f64 = self.atoms.iter().map(|a| a.mass).sum();
        let ac_mass = self.density.trapezoid_mass();
        let target = 1.0 - atom_mass;
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { position: a.position, mass: a.mass })
            .collect();
        if target < 1e-9 || ac_mass < 1e-9 {
            // purely atomic (up to resolution)
            return Measure::new(
                atoms
                    .into_iter()
                    .map(|a| Atom { position: a.position, mass: a.mass / atom_mass })
                    .collect(),
                Vec::new(),
            );
        }
        if (ac_mass - target).abs() > 1e-3 {
            return Err(crate::error::Error::invalid_measure(format!(
                "result mass {:.6} too far from 1 to rebuild a measure",
                atom_mass + ac_mass
            )));
        }
        // trim zero tails, keeping one zero node on each side for shape;
        // dividing by the trapezoid mass makes the shape integrate to 1
        // exactly, and the weight carries the intended mass
        let s = &self.density.samples;
        let first = s.iter().position(|&(_, d)| d > 0.0).unwrap_or(0);
        let last = s.iter().rposition(|&(_, d)| d > 0.0).unwrap_or(s.len() - 1);
        let lo = first.saturating_sub(1);
        let hi = (last + 1).min(s.len() - 1);
        let grid: Vec<f64> = s[lo..=hi].iter().map(|p| p.0).collect();
        let density: Vec<f64> = s[lo..=hi].iter().map(|p| p.1 / ac_mass).collect();
        Measure::new(
            atoms,
            vec![AcComponent {
                weight: target,
                family: AcFamily::Tabulated { grid, density },
            }],
        )
    }
}
