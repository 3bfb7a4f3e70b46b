//! Combinatorial moment oracle, independent of the analytic engine.
//!
//! Raw moments convert to free cumulants through the non-crossing partition
//! recursion and to Boolean cumulants through the interval partition
//! recursion. Free cumulants scale linearly under free convolution powers and
//! Boolean cumulants under Boolean powers, which predicts the moments of any
//! (p, q) output from the input moments alone — no transform evaluation, no
//! shared code path with the engine it cross-checks.

use crate::error::Result;
use crate::measure::{Measure, MomentVector};
use crate::spectral::SpectralResult;
use crate::transform::moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CumulantKind {
    Free,
    Boolean,
}

/// kappa_1..kappa_n (free) or b_1..b_n (Boolean); `values[k]` is order k+1.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    pub kind: CumulantKind,
    pub values: Vec<f64>,
}

impl CumulantVector {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, factor: f64) -> CumulantVector {
        CumulantVector {
            kind: self.kind,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// P[k][r] = sum over compositions of r into k nonnegative parts of the
/// product of moments: the k-fold convolution power of the moment sequence.
fn composition_sums(m: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n + 1]; n + 1];
    p[0][0] = 1.0;
    for k in 1..=n {
        for r in 0..=n {
            let mut acc = 0.0;
            for j in 0..=r {
                acc += p[k - 1][j] * m[r - j];
            }
            p[k][r] = acc;
        }
    }
    p
}

/// Free cumulants via m_n = sum_{k=1..n} kappa_k * P[k][n-k].
pub fn moments_to_free_cumulants(mv: &MomentVector) -> CumulantVector {
    let n = mv.order();
    let p = composition_sums(&mv.m, n);
    let mut kappa = vec![0.0; n + 1];
    for order in 1..=n {
        let mut acc = mv.m[order];
        for k in 1..order {
            acc -= kappa[k] * p[k][order - k];
        }
        kappa[order] = acc; // P[order][0] = 1
    }
    CumulantVector { kind: CumulantKind::Free, values: kappa[1..].to_vec() }
}

/// Inverse of the free recursion: rebuild moments from kappa.
pub fn free_cumulants_to_moments(cv: &CumulantVector) -> MomentVector {
    assert_eq!(cv.kind, CumulantKind::Free);
    let n = cv.values.len();
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    for order in 1..=n {
        // composition sums only need m up to order-1 here
        let p = composition_sums(&m, order);
        let mut acc = 0.0;
        for k in 1..=order {
            acc += cv.values[k - 1] * p[k][order - k];
        }
        m[order] = acc;
    }
    MomentVector { m }
}

/// Boolean cumulants via m_n = sum_{k=1..n} b_k m_{n-k}.
pub fn moments_to_boolean_cumulants(mv: &MomentVector) -> CumulantVector {
    let n = mv.order();
    let mut b = vec![0.0; n + 1];
    for order in 1..=n {
        let mut acc = mv.m[order];
        for k in 1..order {
            acc -= b[k] * mv.m[order - k];
        }
        b[order] = acc;
    }
    CumulantVector { kind: CumulantKind::Boolean, values: b[1..].to_vec() }
}

pub fn boolean_cumulants_to_moments(cv: &CumulantVector) -> MomentVector {
    assert_eq!(cv.kind, CumulantKind::Boolean);
    let n = cv.values.len();
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    for order in 1..=n {
        let mut acc = 0.0;
        for k in 1..=order {
            acc += cv.values[k - 1] * m[order - k];
        }
        m[order] = acc;
    }
    MomentVector { m }
}

/// Predicted moments of (mu^boxplus-p)^uplus-q through order n:
/// m -> kappa -> p kappa -> m' -> b -> q b -> m''.
pub fn predict_moments_bpq(mu: &Measure, p: f64, q: f64, n: usize) -> Result<MomentVector> {
    let m0 = moments(mu, n)?;
    let free_scaled = moments_to_free_cumulants(&m0).scaled(p);
    let m1 = free_cumulants_to_moments(&free_scaled);
    let bool_scaled = moments_to_boolean_cumulants(&m1).scaled(q);
    Ok(boolean_cumulants_to_moments(&bool_scaled))
}

#[derive(Debug, Clone, Copy)]
pub struct OrderDeviation {
    pub order: usize,
    pub observed: f64,
    pub predicted: f64,
    /// |observed - predicted| / max(1, |predicted|)
    pub rel_dev: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub per_order: Vec<OrderDeviation>,
    pub max_rel_dev: f64,
    pub rel_tol: f64,
    pub pass: bool,
}

/// Compare the moments of a spectral result (atoms exact, density by
/// trapezoid) against an oracle prediction through order n.
pub fn compare(result: &SpectralResult, predicted: &MomentVector, n: usize, rel_tol: f64) -> CompareReport {
    let n = n.min(predicted.order());
    let observed = result.moments(n);
    let mut per_order = Vec::with_capacity(n + 1);
    let mut max_rel_dev = 0.0f64;
    for k in 0..=n {
        let (o, p) = (observed.m[k], predicted.m[k]);
        let rel_dev = (o - p).abs() / p.abs().max(1.0);
        max_rel_dev = max_rel_dev.max(rel_dev);
        per_order.push(OrderDeviation { order: k, observed: o, predicted: p, rel_dev });
    }
    CompareReport { per_order, max_rel_dev, rel_tol, pass: max_rel_dev <= rel_tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;

    fn bernoulli_moments() -> MomentVector {
        MomentVector { m: vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0] }
    }

    /// Brute-force m_n = sum over non-crossing partitions of products of
    /// kappa_{block size}; independent route for validating the recursion.
    fn moments_from_free_cumulants_by_partitions(kappa: &[f64], n: usize) -> f64 {
        let mut total = 0.0;
        // enumerate set partitions of {0..n-1} by restricted growth strings
        let mut rgs = vec![0usize; n];
        loop {
            if is_non_crossing(&rgs) {
                total += partition_weight(&rgs, kappa);
            }
            if !next_rgs(&mut rgs) {
                break;
            }
        }
        total
    }

    fn moments_from_boolean_cumulants_by_partitions(b: &[f64], n: usize) -> f64 {
        let mut total = 0.0;
        let mut rgs = vec![0usize; n];
        loop {
            if is_interval(&rgs) {
                total += partition_weight(&rgs, b);
            }
            if !next_rgs(&mut rgs) {
                break;
            }
        }
        total
    }

    fn next_rgs(rgs: &mut [usize]) -> bool {
        // lexicographic successor of a restricted growth string
        let n = rgs.len();
        for i in (1..n).rev() {
            let max_prev = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= max_prev {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                return true;
            }
        }
        false
    }

    fn partition_weight(rgs: &[usize], coeff: &[f64]) -> f64 {
        let blocks = rgs.iter().copied().max().unwrap() + 1;
        let mut w = 1.0;
        for b in 0..blocks {
            let size = rgs.iter().filter(|&&v| v == b).count();
            w *= coeff[size - 1];
        }
        w
    }

    fn is_non_crossing(rgs: &[usize]) -> bool {
        // a crossing is i < j < k < l with rgs[i] = rgs[k] != rgs[j] = rgs[l]
        let n = rgs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    for l in (k + 1)..n {
                        if rgs[i] == rgs[k] && rgs[j] == rgs[l] && rgs[i] != rgs[j] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn is_interval(rgs: &[usize]) -> bool {
        // every block must be a contiguous run
        let n = rgs.len();
        for i in 0..n {
            for k in (i + 1)..n {
                if rgs[i] == rgs[k] {
                    for j in (i + 1)..k {
                        if rgs[j] != rgs[i] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    #[test]
    fn free_cumulants_of_standard_fixtures() {
        // semicircle: Catalan moments invert to a single kappa_2 = 1
        let sc = MomentVector { m: vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0] };
        let kappa = moments_to_free_cumulants(&sc);
        let expect = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((kappa.values[k] - e).abs() < 1e-12, "kappa_{} = {}", k + 1, kappa.values[k]);
        }

        // delta_a: kappa_1 = a, higher cumulants vanish
        let d = MomentVector { m: (0..=6).map(|k| 1.5f64.powi(k)).collect() };
        let kappa = moments_to_free_cumulants(&d);
        assert!((kappa.values[0] - 1.5).abs() < 1e-12);
        for k in 1..6 {
            assert!(kappa.values[k].abs() < 1e-10, "kappa_{} = {}", k + 1, kappa.values[k]);
        }

        // Bernoulli: kappa_2 = 1, kappa_4 = -1
        let kappa = moments_to_free_cumulants(&bernoulli_moments());
        assert!((kappa.values[1] - 1.0).abs() < 1e-12);
        assert!((kappa.values[3] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn recursion_agrees_with_partition_enumeration() {
        let kappa = [0.3, 1.2, -0.4, 0.7, 0.05, -0.2];
        let cv = CumulantVector { kind: CumulantKind::Free, values: kappa.to_vec() };
        let m = free_cumulants_to_moments(&cv);
        for n in 1..=6 {
            let brute = moments_from_free_cumulants_by_partitions(&kappa, n);
            assert!((m.m[n] - brute).abs() < 1e-10, "order {n}: {} vs {brute}", m.m[n]);
        }
        let cv = CumulantVector { kind: CumulantKind::Boolean, values: kappa.to_vec() };
        let m = boolean_cumulants_to_moments(&cv);
        for n in 1..=6 {
            let brute = moments_from_boolean_cumulants_by_partitions(&kappa, n);
            assert!((m.m[n] - brute).abs() < 1e-10, "order {n}: {} vs {brute}", m.m[n]);
        }
    }

    #[test]
    fn boolean_cumulants_of_bernoulli() {
        // E(z) = 1/z expands to b_2 = 1 and nothing else
        let b = moments_to_boolean_cumulants(&bernoulli_moments());
        assert!((b.values[1] - 1.0).abs() < 1e-12);
        for k in [0usize, 2, 3, 4, 5, 6, 7] {
            assert!(b.values[k].abs() < 1e-12, "b_{} = {}", k + 1, b.values[k]);
        }

        // delta_a: b_1 = a only
        let d = MomentVector { m: (0..=5).map(|k| (-0.7f64).powi(k)).collect() };
        let b = moments_to_boolean_cumulants(&d);
        assert!((b.values[0] + 0.7).abs() < 1e-12);
        for k in 1..5 {
            assert!(b.values[k].abs() < 1e-12);
        }
    }

    #[test]
    fn round_trips_are_identity() {
        // random Hankel-consistent moments from a random atomic measure
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(-2.0..2.0);
            let b: f64 = rng.gen_range(-2.0..2.0);
            let c: f64 = rng.gen_range(-2.0..2.0);
            let w1: f64 = rng.gen_range(0.1..0.8);
            let w2: f64 = rng.gen_range(0.1..(1.0 - w1));
            let m: Vec<f64> = (0..=8)
                .map(|k| {
                    w1 * a.powi(k) + w2 * b.powi(k) + (1.0 - w1 - w2) * c.powi(k)
                })
                .collect();
            let mv = MomentVector { m };
            let back = free_cumulants_to_moments(&moments_to_free_cumulants(&mv));
            for k in 0..=8 {
                assert!((back.m[k] - mv.m[k]).abs() < 1e-12 * (1.0 + mv.m[k].abs()));
            }
            let back = boolean_cumulants_to_moments(&moments_to_boolean_cumulants(&mv));
            for k in 0..=8 {
                assert!((back.m[k] - mv.m[k]).abs() < 1e-12 * (1.0 + mv.m[k].abs()));
            }
        }
    }

    #[test]
    fn predictions_for_known_powers() {
        let bern = Measure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        // free square of Bernoulli is arcsine(-2, 2): m2 = 2, m4 = 6, m6 = 20
        let m = predict_moments_bpq(&bern, 2.0, 1.0, 6).unwrap();
        assert!((m.m[2] - 2.0).abs() < 1e-12);
        assert!((m.m[4] - 6.0).abs() < 1e-12);
        assert!((m.m[6] - 20.0).abs() < 1e-12);

        // B_{1/2}: arcsine(-sqrt2, sqrt2): m2 = 1, m4 = 3/2
        let m = predict_moments_bpq(&bern, 1.5, 2.0 / 3.0, 4).unwrap();
        assert!((m.m[2] - 1.0).abs() < 1e-12);
        assert!((m.m[4] - 1.5).abs() < 1e-12);

        // semicircle scaling: kappa_2 = 3 gives Catalan scaling
        let sc = Measure::semicircle(0.0, 1.0).unwrap();
        let m = predict_moments_bpq(&sc, 3.0, 1.0, 4).unwrap();
        assert!((m.m[2] - 3.0).abs() < 1e-8);
        assert!((m.m[4] - 18.0).abs() < 1e-7);

        // identity
        let m = predict_moments_bpq(&bern, 1.0, 1.0, 6).unwrap();
        assert_eq!(m.m, bernoulli_moments().m[..7].to_vec());
    }

    #[test]
    fn additivity_against_direct_moments() {
        // kappa(mu^boxplus p) = p kappa(mu) and b(mu^uplus q) = q b(mu),
        // checked against directly computed atomic convolution powers where
        // they are available in closed form: Boolean power of Bernoulli has
        // atoms +-sqrt(q) with mass 1/2.
        let bern = Measure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let q = 1.7;
        let direct = Measure::from_atoms(&[(-q.sqrt(), 0.5), (q.sqrt(), 0.5)]).unwrap();
        let predicted = predict_moments_bpq(&bern, 1.0, q, 8).unwrap();
        let exact = moments(&direct, 8).unwrap();
        for k in 0..=8 {
            assert!(
                (predicted.m[k] - exact.m[k]).abs() < 1e-10 * (1.0 + exact.m[k].abs()),
                "order {k}"
            );
        }
    }

    #[test]
    fn compare_detects_scaling_corruption() {
        use crate::spectral::{Diagnostics, OpParams, SpectralResult};
        use crate::transform::DensityTable;
        // fake result: semicircle density sampled exactly, then corrupted
        let sc = Measure::semicircle(0.0, 1.0).unwrap();
        let grid = crate::transform::cos_grid(-2.0, 2.0, 4001);
        let samples: Vec<(f64, f64)> = grid.iter().map(|&x| (x, sc.density_at(x))).collect();
        let result = SpectralResult {
            density: DensityTable { samples, support_intervals: vec![(-2.0, 2.0)] },
            atoms: vec![],
            params: OpParams::Resample,
            diagnostics: Diagnostics::default(),
        };
        let predicted = moments(&sc, 6).unwrap();
        let report = compare(&result, &predicted, 6, 1e-4);
        assert!(report.pass, "clean result fails: {:#?}", report.max_rel_dev);

        let corrupted = SpectralResult {
            density: DensityTable {
                samples: result.density.samples.iter().map(|&(x, d)| (x, d * 1.01)).collect(),
                support_intervals: result.density.support_intervals.clone(),
            },
            ..result
        };
        let report = compare(&corrupted, &predicted, 6, 1e-4);
        assert!(!report.pass);
        assert!((report.per_order[0].rel_dev - 0.01).abs() < 1e-3);
    }
}
