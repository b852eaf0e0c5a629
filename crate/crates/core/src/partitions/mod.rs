//! Partition series `R(t; q)`, transfer-matrix norms and the `tan^r x` table.

mod power_norms;

pub use power_norms::{power_norms, PowerNorms};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::{MultiSeries, NormInterval};

/// Default truncation for the power-norm transfer.
pub const DEFAULT_POWER_CAP: usize = 60;

/// Largest `r` for which `f_r` tables are computed.
pub const MAX_POWER: u32 = 4;

/// Ordered positive parts `t_1, …, t_n` of a total `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    parts: Vec<f64>,
    total: f64,
}

impl Partition {
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Precondition("a partition needs at least one part".into()));
        }
        if let Some((index, &value)) = parts
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::InvalidPart { index, value });
        }
        let total = parts.iter().sum();
        Ok(Self { parts, total })
    }

    /// `n` equal parts of `x`.
    pub fn uniform(x: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("a partition needs at least one part".into()));
        }
        let mut p = Self::new(vec![x / n as f64; n])?;
        p.total = x;
        Ok(p)
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Interior partial sums `t_1, t_1 + t_2, …` (the total excluded).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.parts[..self.parts.len() - 1]
            .iter()
            .map(|t| {
                acc += t;
                acc
            })
            .collect()
    }

    /// True when `finer` refines `self`: same total, and every breakpoint of
    /// `self` is a breakpoint of `finer`.
    pub fn is_refined_by(&self, finer: &Partition) -> bool {
        let tol = 1e-12 * self.total.abs().max(1.0);
        if (self.total - finer.total).abs() > tol {
            return false;
        }
        let fine = finer.breakpoints();
        self.breakpoints()
            .iter()
            .all(|b| fine.iter().any(|f| (f - b).abs() <= tol))
    }

    /// Splits every part into `factor` equal pieces.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Precondition("refinement factor must be positive".into()));
        }
        let parts = self
            .parts
            .iter()
            .flat_map(|&t| std::iter::repeat(t / factor as f64).take(factor))
            .collect();
        let mut p = Self::new(parts)?;
        p.total = self.total;
        Ok(p)
    }

    /// Halves every part.
    pub fn dyadic_refinement(&self) -> Self {
        self.refine(2).expect("factor 2 is valid")
    }

    /// `tanh t_j`, the reflection coefficients of `R(t)`.
    pub fn reflection_coefficients(&self) -> Vec<f64> {
        self.parts.iter().map(|t| t.tanh()).collect()
    }
}

/// `E(d; q) = β(d_n) α(q_{n-1}) ⋯ α(q_1) β(d_1)(0)` over `n - 1` generators.
pub fn e_series(coefficients: &[f64], degree_cap: u32) -> Result<MultiSeries> {
    let generators = coefficients.len().saturating_sub(1);
    let mut z = MultiSeries::zero(generators, degree_cap)?;
    for (k, &d) in coefficients.iter().enumerate() {
        if k > 0 {
            z = z.modulate(k - 1, 1)?;
        }
        z = z.mobius_beta(d).map_err(|e| match e {
            Error::Contraction { rho, .. } => Error::Contraction { rho, step: Some(k + 1) },
            other => other,
        })?;
    }
    Ok(z)
}

/// `R(t; q) = γ(t_n) α(q_{n-1}) ⋯ α(q_1) γ(t_1)(0)` with `γ(t) = β(tanh t)`.
pub fn r_series(t: &Partition, degree_cap: u32) -> Result<MultiSeries> {
    e_series(&t.reflection_coefficients(), degree_cap)
}

/// Numeric value of `R(t; q)` at given generator values.
pub fn r_value(t: &Partition, q: &[Complex64]) -> Result<Complex64> {
    if q.len() + 1 != t.len() {
        return Err(Error::GeneratorMismatch {
            left: t.len() - 1,
            right: q.len(),
        });
    }
    let mut z = Complex64::new(0.0, 0.0);
    for (k, d) in t.reflection_coefficients().into_iter().enumerate() {
        if k > 0 {
            z *= q[k - 1];
        }
        z = (z + d) / (1.0 + d * z);
    }
    Ok(z)
}

/// Entrywise norms of the transfer polynomial matrix and the products
/// `P = Π(1 + d_j)`, `p = Π(1 - d_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrixNorms {
    pub norm_a: f64,
    pub norm_b: f64,
    pub norm_c: f64,
    pub norm_d: f64,
    pub product_plus: f64,
    pub product_minus: f64,
    /// Coefficient of `q_0 ⋯ q_{n-1}` in `a`.
    pub top_coefficient_a: f64,
    /// Constant term of `d`.
    pub constant_term_d: f64,
    /// True when every coefficient is nonnegative.
    pub nonnegative: bool,
}

impl TransferMatrixNorms {
    pub fn even_part(&self) -> f64 {
        0.5 * (self.product_plus + self.product_minus)
    }

    pub fn odd_part(&self) -> f64 {
        0.5 * (self.product_plus - self.product_minus)
    }

    /// Largest deviation from `‖a‖ = ‖d‖ = (P+p)/2`, `‖b‖ = ‖c‖ = (P-p)/2`.
    pub fn identity_residual(&self) -> f64 {
        let (even, odd) = (self.even_part(), self.odd_part());
        [
            (self.norm_a - even).abs(),
            (self.norm_d - even).abs(),
            (self.norm_b - odd).abs(),
            (self.norm_c - odd).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

const MAX_TRANSFER_FACTORS: usize = 24;

/// Expands `M = Π_j [[1, d_j], [d_j, 1]] · diag(q_{j-1}, 1)` (rightmost factor
/// first) as multilinear polynomials and reports the entrywise norms.
pub fn transfer_matrix_norms(coefficients: &[f64]) -> Result<TransferMatrixNorms> {
    let n = coefficients.len();
    if n > MAX_TRANSFER_FACTORS {
        return Err(Error::OutOfRange {
            name: "factor count",
            value: n as f64,
            reason: "at most 24 factors are expanded",
        });
    }
    if let Some(&d) = coefficients.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(Error::OutOfRange {
            name: "d",
            value: d,
            reason: "must lie in [0, 1)",
        });
    }
    let size = 1usize << n;
    // Coefficients indexed by the bitmask of generators present.
    let mut m = [
        [vec![0.0; size], vec![0.0; size]],
        [vec![0.0; size], vec![0.0; size]],
    ];
    m[0][0][0] = 1.0;
    m[1][1][0] = 1.0;
    for (j, &d) in coefficients.iter().enumerate() {
        let bit = 1usize << j;
        // Row 0 gains the fresh generator q_j.
        for col in 0..2 {
            let row = &mut m[0][col];
            for mask in (0..size).rev() {
                if mask & bit != 0 {
                    row[mask] = row[mask ^ bit];
                    row[mask ^ bit] = 0.0;
                }
            }
        }
        for col in 0..2 {
            let (top, bottom) = (m[0][col].clone(), m[1][col].clone());
            for mask in 0..size {
                m[0][col][mask] = top[mask] + d * bottom[mask];
                m[1][col][mask] = d * top[mask] + bottom[mask];
            }
        }
    }
    let norm = |v: &[f64]| v.iter().map(|c| c.abs()).sum::<f64>();
    let nonnegative = m.iter().flatten().flatten().all(|&c| c >= 0.0);
    Ok(TransferMatrixNorms {
        norm_a: norm(&m[0][0]),
        norm_b: norm(&m[0][1]),
        norm_c: norm(&m[1][0]),
        norm_d: norm(&m[1][1]),
        product_plus: coefficients.iter().map(|d| 1.0 + d).product(),
        product_minus: coefficients.iter().map(|d| 1.0 - d).product(),
        top_coefficient_a: m[0][0][size - 1],
        constant_term_d: m[1][1][0],
        nonnegative,
    })
}

/// Result of comparing `‖R(t)^r‖` with `‖R(s)^r‖` for `t ≺ s`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub coarse: NormInterval,
    pub fine: NormInterval,
    pub r: u32,
    /// Largest `|R(t; q) - R(s; q')|` over the sampled unit points, where `q'`
    /// carries `1` at the breakpoints of `s` missing from `t`.
    pub substitution_error: f64,
    pub holds: bool,
}

/// Brackets `‖R(t)^r‖` through the power-norm transfer.
pub fn r_power_norm(t: &Partition, r: u32, power_cap: usize) -> Result<NormInterval> {
    let cap = power_cap.max(r as usize).max(1);
    let norms = power_norms(&t.reflection_coefficients(), cap)?;
    Ok(norms.bracket(r as usize).expect("r within cap"))
}

pub fn check_refinement(
    coarse: &Partition,
    fine: &Partition,
    r: u32,
    power_cap: usize,
) -> Result<RefinementReport> {
    if !coarse.is_refined_by(fine) {
        return Err(Error::Precondition(
            "the second partition does not refine the first".into(),
        ));
    }
    let coarse_norm = r_power_norm(coarse, r, power_cap)?;
    let fine_norm = r_power_norm(fine, r, power_cap)?;

    // Map each fine breakpoint to the coarse generator it stands for, if any.
    let tol = 1e-12 * coarse.total().abs().max(1.0);
    let coarse_points = coarse.breakpoints();
    let slot: Vec<Option<usize>> = fine
        .breakpoints()
        .iter()
        .map(|f| coarse_points.iter().position(|c| (c - f).abs() <= tol))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_7e57);
    let mut substitution_error: f64 = 0.0;
    for _ in 0..5 {
        let q: Vec<Complex64> = (0..coarse_points.len())
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect();
        let q_fine: Vec<Complex64> = slot
            .iter()
            .map(|s| s.map_or(Complex64::new(1.0, 0.0), |i| q[i]))
            .collect();
        let a = r_value(coarse, &q)?;
        let b = r_value(fine, &q_fine)?;
        substitution_error = substitution_error.max((a - b).norm());
    }
    Ok(RefinementReport {
        coarse: coarse_norm,
        fine: fine_norm,
        r,
        substitution_error,
        holds: coarse_norm.lower <= fine_norm.upper,
    })
}

/// One row of the `f_r` table.
#[derive(Debug, Clone, PartialEq)]
pub struct FTableRow {
    pub x: f64,
    pub r: u32,
    pub parts: usize,
    pub norm: NormInterval,
    pub target: f64,
}

fn check_table_args(x: f64, r: u32) -> Result<()> {
    if !(x > 0.0 && x < std::f64::consts::FRAC_PI_2) {
        return Err(Error::OutOfRange {
            name: "x",
            value: x,
            reason: "must lie in (0, pi/2)",
        });
    }
    if r == 0 || r > MAX_POWER {
        return Err(Error::OutOfRange {
            name: "r",
            value: f64::from(r),
            reason: "must lie in 1..=4",
        });
    }
    Ok(())
}

/// Brackets of `‖R(t)^r‖` over uniform partitions of `x` into `1..=n_max` parts.
pub fn f_lower_table(x: f64, r: u32, n_max: usize, power_cap: usize) -> Result<Vec<FTableRow>> {
    check_table_args(x, r)?;
    let target = x.tan().powi(r as i32);
    (1..=n_max)
        .map(|n| {
            Ok(FTableRow {
                x,
                r,
                parts: n,
                norm: r_power_norm(&Partition::uniform(x, n)?, r, power_cap)?,
                target,
            })
        })
        .collect()
}

/// Central-difference check of `f_1' = 1 + f_2` on saturated uniform partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub x: f64,
    pub derivative: f64,
    pub predicted: f64,
}

pub fn derivative_check(xs: &[f64], step: f64, parts: usize, power_cap: usize) -> Result<Vec<DerivativeCheck>> {
    let f = |x: f64, r: u32| -> Result<f64> {
        check_table_args(x, r)?;
        Ok(r_power_norm(&Partition::uniform(x, parts)?, r, power_cap)?.lower)
    };
    xs.iter()
        .map(|&x| {
            Ok(DerivativeCheck {
                x,
                derivative: (f(x + step, 1)? - f(x - step, 1)?) / (2.0 * step),
                predicted: 1.0 + f(x, 2)?,
            })
        })
        .collect()
}

/// Outcome of the heavy-partition search.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyPartition {
    pub partition: Partition,
    pub norm: NormInterval,
    /// Certified lower bounds of every uniform partition tried, in order.
    pub trail: Vec<(usize, f64)>,
}

/// Searches uniform partitions of `alpha` into `n_start, n_start + 1, …` parts
/// until the certified lower bound of `‖R(t)‖` reaches `target`.
pub fn find_heavy_partition(
    alpha: f64,
    target: f64,
    power_cap: usize,
    n_start: usize,
    max_parts: usize,
) -> Result<HeavyPartition> {
    if !(alpha >= std::f64::consts::FRAC_PI_2) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            reason: "norms stay below tan(alpha) for alpha < pi/2",
        });
    }
    let mut trail = Vec::new();
    let mut best = 0.0f64;
    for n in n_start.max(1)..=max_parts {
        let partition = Partition::uniform(alpha, n)?;
        let norm = r_power_norm(&partition, 1, power_cap)?;
        trail.push((n, norm.lower));
        best = best.max(norm.lower);
        if norm.lower >= target {
            return Ok(HeavyPartition {
                partition,
                norm,
                trail,
            });
        }
    }
    Err(Error::BudgetExhausted {
        parts: max_parts,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_basics() {
        let t = Partition::new(vec![0.6, 0.6]).unwrap();
        let s = Partition::new(vec![0.3, 0.3, 0.3, 0.3]).unwrap();
        assert!(t.is_refined_by(&s));
        assert!(!s.is_refined_by(&t));
        assert!(t.is_refined_by(&t));
        assert_eq!(Partition::uniform(1.0, 4).unwrap().dyadic_refinement().len(), 8);
        assert!(Partition::new(vec![0.1, -0.2]).is_err());
    }

    #[test]
    fn single_part_series_is_tanh() {
        let s = r_series(&Partition::new(vec![1.0]).unwrap(), 10).unwrap();
        assert_eq!(s.generator_count(), 0);
        assert!((s.ap_norm().lower - 1.0f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn two_equal_parts_have_norm_one() {
        let h = 0.5f64.atanh();
        let s = r_series(&Partition::new(vec![h, h]).unwrap(), 40).unwrap();
        assert!(s.ap_norm().contains(1.0, 1e-12));
        assert!(s.ap_norm().width() < 1e-10);
    }

    #[test]
    fn series_and_transfer_agree() {
        let t = Partition::new(vec![0.2, 0.35, 0.15, 0.3]).unwrap();
        let series = r_series(&t, 24).unwrap().ap_norm();
        let engine = r_power_norm(&t, 1, 60).unwrap();
        assert!(series.lower <= engine.upper + 1e-12 && engine.lower <= series.upper + 1e-12);
        let sq = r_series(&t, 24).unwrap().pow(2).unwrap().ap_norm();
        let engine2 = r_power_norm(&t, 2, 60).unwrap();
        assert!(sq.lower <= engine2.upper + 1e-12 && engine2.lower <= sq.upper + 1e-12);
    }

    #[test]
    fn transfer_matrix_examples() {
        let m = transfer_matrix_norms(&[0.5, 0.5]).unwrap();
        assert_eq!((m.product_plus, m.product_minus), (2.25, 0.25));
        assert!((m.norm_a - 1.25).abs() < 1e-15 && (m.norm_d - 1.25).abs() < 1e-15);
        assert!((m.norm_b - 1.0).abs() < 1e-15 && (m.norm_c - 1.0).abs() < 1e-15);

        let m = transfer_matrix_norms(&[0.0]).unwrap();
        assert_eq!((m.product_plus, m.product_minus, m.norm_a, m.norm_b), (1.0, 1.0, 1.0, 0.0));

        let m = transfer_matrix_norms(&[0.3]).unwrap();
        assert!((m.product_plus - 1.3).abs() < 1e-15 && (m.product_minus - 0.7).abs() < 1e-15);
        assert!((m.norm_a - 1.0).abs() < 1e-15 && (m.norm_b - 0.3).abs() < 1e-15);
        assert_eq!((m.top_coefficient_a, m.constant_term_d), (1.0, 1.0));
    }

    #[test]
    fn refinement_examples() {
        let t = Partition::new(vec![1.0]).unwrap();
        let s = Partition::new(vec![0.5, 0.5]).unwrap();
        let rep = check_refinement(&t, &s, 1, 60).unwrap();
        assert!(rep.holds);
        assert!((rep.coarse.lower - 1.0f64.tanh()).abs() < 1e-14);
        assert!(rep.fine.contains(2.0 * 0.5f64.tanh(), 1e-12));
        assert!(rep.substitution_error < 1e-14);

        let rep = check_refinement(&s, &s, 1, 60).unwrap();
        assert_eq!(rep.coarse, rep.fine);

        let t = Partition::new(vec![0.6, 0.6]).unwrap();
        let s = Partition::new(vec![0.3, 0.3, 0.3, 0.3]).unwrap();
        let rep = check_refinement(&t, &s, 2, 60).unwrap();
        assert!(rep.holds && rep.substitution_error < 1e-13);
        assert!(check_refinement(&s, &t, 1, 60).is_err());
    }

    #[test]
    fn table_endpoints() {
        let rows = f_lower_table(1.0, 1, 3, 60).unwrap();
        assert!((rows[0].norm.lower - 1.0f64.tanh()).abs() < 1e-14);
        assert!((rows[1].norm.lower - 2.0 * 0.5f64.tanh()).abs() < 1e-12);
        let rows = f_lower_table(1.0, 2, 1, 60).unwrap();
        assert!((rows[0].norm.lower - 1.0f64.tanh().powi(2)).abs() < 1e-14);
        assert!((rows[0].target - 1.0f64.tan().powi(2)).abs() < 1e-14);
        assert!(f_lower_table(1.6, 1, 3, 60).is_err());
    }

    #[test]
    fn heavy_partition_small_target() {
        let h = find_heavy_partition(std::f64::consts::FRAC_PI_2, 1.0, 60, 1, 10).unwrap();
        assert_eq!(h.partition.len(), 2);
        assert!((h.norm.lower - 2.0 * std::f64::consts::FRAC_PI_4.tanh()).abs() < 1e-12);
        assert!(find_heavy_partition(1.0, 100.0, 60, 1, 10).is_err());
    }
}
