//! The layered resolvent at a fixed complex frequency `s`.
//!
//! On layer `j` (numbered `1..=n` in this module's formulas) the resolvent of a
//! source in layer `k` is `c_{2j-1} e^{s b_j x} + c_{2j} e^{-s b_j x}`, plus the
//! free part `(b_k / 2s) e^{-s b_k |x - y|}` inside layer `k`. Continuity of the
//! value and of `a ∂_x` at each interface gives the block-bidiagonal system
//! `D_n C = T` over the unknowns `[c_1, c_3, c_4, …, c_{2n-2}, c_{2n}]`.
//!
//! The reflection recursion runs through `Q_1 = 0` and
//! `Q_k = e^{-s λ_{k-1}} β(-d_{k-1})(Q_{k-1})` for interior layers, where
//! `λ_{k-1} = 2 b_k (x_k - x_{k-1})`; the last layer uses the phase
//! `e^{2 s b_n x_{n-1}}` instead. Stored series drop these phases and carry
//! one generator `q_j ↔ e^{-s λ_j}` per interior layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::{LaminarMedium, ReflectionProfile};
use crate::partitions::power_norms;
use crate::series::{MultiSeries, NormInterval};

/// Slack allowed on top of `tan(Σ arctanh|d_k|)`.
pub const TAN_BOUND_SLACK: f64 = 1e-6;

/// Condition numbers above this value flag an oracle solve.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Initial data supported inside one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// Unit point mass at `position`.
    Dirac { position: f64 },
    /// Indicator of `[left, right]`.
    Box { left: f64, right: f64 },
    /// Samples of a profile, integrated by the trapezoid rule.
    Sampled { positions: Vec<f64>, values: Vec<f64> },
}

impl SourceSpec {
    pub fn dirac(position: f64) -> Self {
        SourceSpec::Dirac { position }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            SourceSpec::Dirac { position } => (*position, *position),
            SourceSpec::Box { left, right } => (*left, *right),
            SourceSpec::Sampled { positions, .. } => (
                positions.first().copied().unwrap_or(f64::NAN),
                positions.last().copied().unwrap_or(f64::NAN),
            ),
        }
    }

    /// Layer (0-based) containing the support.
    pub fn layer(&self, medium: &LaminarMedium) -> Result<usize> {
        let (left, right) = self.support();
        if let SourceSpec::Sampled { positions, values } = self {
            if positions.len() != values.len()
                || positions.len() < 2
                || positions.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(Error::Precondition(
                    "sampled source needs at least two increasing positions, one value each".into(),
                ));
            }
        }
        medium
            .strictly_inside_layer(left, right)
            .ok_or(Error::SourceStraddlesInterface { left, right })
    }

    /// `∫ v_0(y) e^{σ y} dy`.
    pub fn exp_moment(&self, sigma: Complex64) -> Complex64 {
        match self {
            SourceSpec::Dirac { position } => (sigma * position).exp(),
            SourceSpec::Box { left, right } => {
                if sigma.norm() * (right - left) < 1e-8 {
                    let mid = 0.5 * (left + right);
                    (sigma * mid).exp() * (right - left)
                } else {
                    ((sigma * right).exp() - (sigma * left).exp()) / sigma
                }
            }
            SourceSpec::Sampled { positions, values } => positions
                .windows(2)
                .zip(values.windows(2))
                .map(|(p, v)| {
                    let h = p[1] - p[0];
                    0.5 * h * (v[0] * (sigma * p[0]).exp() + v[1] * (sigma * p[1]).exp())
                })
                .sum(),
        }
    }

    /// `∫ |v_0|`.
    pub fn mass(&self) -> f64 {
        match self {
            SourceSpec::Dirac { .. } => 1.0,
            SourceSpec::Box { left, right } => right - left,
            SourceSpec::Sampled { positions, values } => positions
                .windows(2)
                .zip(values.windows(2))
                .map(|(p, v)| 0.5 * (p[1] - p[0]) * (v[0].abs() + v[1].abs()))
                .sum(),
        }
    }
}

/// `D_n` and `T` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSystem {
    pub frequency: Complex64,
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
    pub layers: usize,
    /// 0-based layer of the source.
    pub source_layer: usize,
}

fn cexp(z: Complex64) -> Complex64 {
    z.exp()
}

/// Column of `c_{2j-1}` (`upper = true`) or `c_{2j}` for 1-based layer `j`.
fn column(n: usize, j: usize, upper: bool) -> Option<usize> {
    match (j, upper) {
        (1, true) => Some(0),
        (1, false) => None,
        (j, false) if j == n => Some(2 * (n - 1) - 1),
        (j, true) if j == n => None,
        (j, true) => Some(2 * j - 3),
        (j, false) => Some(2 * j - 2),
    }
}

/// Right-hand side pairs `(t_{i,1}, t_{i,2})` for interfaces `i = 1..n-1`.
fn source_terms(medium: &LaminarMedium, s: Complex64, source: &SourceSpec, k: usize) -> Vec<[Complex64; 2]> {
    let n = medium.layer_count();
    let b = medium.slowness();
    let x = medium.interfaces();
    let mut t = vec![[Complex64::new(0.0, 0.0); 2]; n - 1];
    // k is 1-based here. Interface k lies to the right of the source layer.
    if k < n {
        let (bk, bk1, xk) = (b[k - 1], b[k], x[k - 1]);
        let g = cexp(-s * bk * xk) * source.exp_moment(s * bk) / (2.0 * s);
        t[k - 1] = [-bk * g, bk * bk1 * g];
    }
    // Interface k-1 lies to the left.
    if k > 1 {
        let (bl, bk, xl) = (b[k - 2], b[k - 1], x[k - 2]);
        let g = cexp(s * bk * xl) * source.exp_moment(-s * bk) / (2.0 * s);
        t[k - 2] = [bk * g, bl * bk * g];
    }
    t
}

/// Assembles `D_n C = T`.
pub fn assemble_system(medium: &LaminarMedium, s: Complex64, source: &SourceSpec) -> Result<ResolventSystem> {
    let n = medium.layer_count();
    if n < 2 {
        return Err(Error::Precondition("the resolvent system needs at least two layers".into()));
    }
    if s == Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition("frequency must be nonzero".into()));
    }
    let source_layer = source.layer(medium)?;
    let size = 2 * (n - 1);
    let mut matrix = DMatrix::<Complex64>::zeros(size, size);
    let mut rhs = DVector::<Complex64>::zeros(size);
    let b = medium.slowness();
    let x = medium.interfaces();
    for i in 1..n {
        let (xi, left, right) = (x[i - 1], b[i - 1], b[i]);
        let (r1, r2) = (2 * (i - 1), 2 * (i - 1) + 1);
        for (upper, sign) in [(true, 1.0), (false, -1.0)] {
            if let Some(c) = column(n, i, upper) {
                let e = cexp(sign * s * left * xi);
                matrix[(r1, c)] += e;
                matrix[(r2, c)] += sign * right * e;
            }
            if let Some(c) = column(n, i + 1, upper) {
                let e = cexp(sign * s * right * xi);
                matrix[(r1, c)] -= e;
                matrix[(r2, c)] -= sign * left * e;
            }
        }
    }
    for (i, pair) in source_terms(medium, s, source, source_layer + 1).iter().enumerate() {
        rhs[2 * i] = pair[0];
        rhs[2 * i + 1] = pair[1];
    }
    Ok(ResolventSystem {
        frequency: s,
        matrix,
        rhs,
        layers: n,
        source_layer,
    })
}

/// Dense solution of `D_n C = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// `c_1 … c_{2n}`; `c_2` and `c_{2n-1}` are zero by construction.
    pub coefficients: Vec<Complex64>,
    pub determinant: Complex64,
    /// One-norm condition number estimate.
    pub condition: f64,
    pub flagged: bool,
}

impl OracleSolution {
    /// `c_j` with the 1-based index `j`.
    pub fn c(&self, j: usize) -> Complex64 {
        self.coefficients[j - 1]
    }

    /// `c_{2n}`.
    pub fn last(&self) -> Complex64 {
        *self.coefficients.last().expect("at least two layers")
    }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense LU solve of the assembled system.
///
/// Columns and then rows are scaled to unit max-norm first; the exponential
/// column factors otherwise dominate the condition number. The reported
/// condition is that of the scaled matrix.
pub fn oracle_coefficients(system: &ResolventSystem) -> Result<OracleSolution> {
    let n = system.layers;
    let mut scaled = system.matrix.clone();
    let max_abs = |v: &mut dyn Iterator<Item = &Complex64>| v.map(|z| z.norm()).fold(0.0, f64::max);
    let column_scale: Vec<f64> = (0..scaled.ncols())
        .map(|j| max_abs(&mut scaled.column(j).iter()))
        .collect();
    if column_scale.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::SingularSystem);
    }
    for (j, &c) in column_scale.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(c);
    }
    let row_scale: Vec<f64> = (0..scaled.nrows())
        .map(|i| max_abs(&mut scaled.row(i).iter()))
        .collect();
    if row_scale.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::SingularSystem);
    }
    let mut rhs = system.rhs.clone();
    for (i, &r) in row_scale.iter().enumerate() {
        scaled.row_mut(i).unscale_mut(r);
        rhs[i] /= r;
    }
    let lu = scaled.clone().lu();
    let scale_product: f64 = column_scale.iter().chain(&row_scale).product();
    let determinant = lu.determinant() * scale_product;
    let mut solution = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    for (j, &c) in column_scale.iter().enumerate() {
        solution[j] /= c;
    }
    let inverse = lu.try_inverse().ok_or(Error::SingularSystem)?;
    let condition = one_norm(&scaled) * one_norm(&inverse);
    let mut coefficients = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in 1..=n {
        for (upper, index) in [(true, 2 * j - 2), (false, 2 * j - 1)] {
            if let Some(c) = column(n, j, upper) {
                coefficients[index] = solution[c];
            }
        }
    }
    Ok(OracleSolution {
        coefficients,
        determinant,
        condition,
        flagged: !(condition.is_finite() && condition <= CONDITION_LIMIT),
    })
}

/// Phased reflection values `Q_1 … Q_n` (index 0 holds `Q_1 = 0`).
pub fn reflection_values(medium: &LaminarMedium, s: Complex64) -> Vec<Complex64> {
    let n = medium.layer_count();
    let b = medium.slowness();
    let x = medium.interfaces();
    let d = medium.reflection_profile();
    let d = d.coefficients();
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    for k in 2..=n {
        let prev = q[k - 2];
        let dk = d[k - 2];
        let m = (prev - dk) / (1.0 - dk * prev);
        q[k - 1] = if k < n {
            cexp(-2.0 * s * b[k - 1] * (x[k - 1] - x[k - 2])) * m
        } else {
            cexp(2.0 * s * b[k - 1] * x[k - 2]) * m
        };
    }
    q
}

/// `det D_k` for the first `layers` layers from the product
/// `(-1)^k Π_{j<k} (b_j + b_{j+1}) e^{s (b_j - b_{j+1}) x_j} (1 - d_j Q_j)`.
pub fn determinant_product(medium: &LaminarMedium, s: Complex64, layers: usize) -> Complex64 {
    let b = medium.slowness();
    let x = medium.interfaces();
    let profile = medium.reflection_profile();
    let d = profile.coefficients();
    let q = reflection_values(medium, s);
    let sign = if layers % 2 == 0 { 1.0 } else { -1.0 };
    (1..layers).fold(Complex64::new(sign, 0.0), |acc, j| {
        // Q_j is an interior value whenever j < layers <= n.
        acc * (b[j - 1] + b[j]) * cexp(s * (b[j - 1] - b[j]) * x[j - 1]) * (1.0 - d[j - 1] * q[j - 1])
    })
}

/// `det A_j = -2 b_{j+1}` for the 1-based interface `j`.
fn det_a(medium: &LaminarMedium, j: usize) -> f64 {
    -2.0 * medium.slowness()[j]
}

/// `s · c_{2n}` from the closed-form case formulas, using the numeric
/// recursion for `Q` and the product formula for the determinants.
pub fn c2n_case_formula(medium: &LaminarMedium, s: Complex64, source: &SourceSpec) -> Result<Complex64> {
    let n = medium.layer_count();
    if n < 2 {
        return Err(Error::Precondition("needs at least two layers".into()));
    }
    let k = source.layer(medium)? + 1;
    let b = medium.slowness();
    let x = medium.interfaces();
    let q = reflection_values(medium, s);
    if k == n {
        let bn = b[n - 1];
        return Ok(-(bn / 2.0) * q[n - 1] * source.exp_moment(-s * bn));
    }
    let t = source_terms(medium, s, source, k);
    let dn = determinant_product(medium, s, n);
    let prod_a: f64 = (k..n).map(|j| det_a(medium, j)).product();
    let c2n = if k == 1 {
        prod_a / dn * cexp(s * b[0] * x[0]) * t[0][0]
    } else {
        let dk = determinant_product(medium, s, k);
        let inner = t[k - 2][0] * cexp(s * b[k - 1] * (x[k - 1] - x[k - 2])) * q[k - 1] + t[k - 1][0];
        -(prod_a * dk / dn) * inner * cexp(s * b[k - 1] * x[k - 1])
    };
    Ok(s * c2n)
}

/// `(c_{2n-3}, c_{2n-2})` from `A_{n-1} (c_{2n-3}, c_{2n-2})ᵀ + b_{n-1} c_{2n} = 0`.
/// Valid when the source lies left of layer `n - 1`.
pub fn top_pair(medium: &LaminarMedium, s: Complex64, c2n: Complex64) -> [Complex64; 2] {
    let n = medium.layer_count();
    let b = medium.slowness();
    let xi = medium.interfaces()[n - 2];
    let (left, right) = (b[n - 2], b[n - 1]);
    let (ep, em) = (cexp(s * left * xi), cexp(-s * left * xi));
    // A = [[ep, em], [right ep, -right em]]
    let a = [[ep, em], [right * ep, -right * em]];
    let e = cexp(-s * right * xi);
    let v = [e * c2n, -left * e * c2n];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        (a[1][1] * v[0] - a[0][1] * v[1]) / det,
        (-a[1][0] * v[0] + a[0][0] * v[1]) / det,
    ]
}

/// `(c_{2j-1}, c_{2j})` from `(c_{2j+1}, c_{2j+2})` across the source-free
/// interface `j` (1-based).
pub fn transfer_down(medium: &LaminarMedium, s: Complex64, j: usize, upper: [Complex64; 2]) -> [Complex64; 2] {
    let b = medium.slowness();
    let (bj, bj1, xj) = (b[j - 1], b[j], medium.interfaces()[j - 1]);
    let m = [
        [
            (bj1 + bj) * cexp(s * (bj1 - bj) * xj),
            (bj1 - bj) * cexp(-s * (bj1 + bj) * xj),
        ],
        [
            (bj1 - bj) * cexp(s * (bj1 + bj) * xj),
            (bj1 + bj) * cexp(-s * (bj1 - bj) * xj),
        ],
    ];
    let scale = 1.0 / (2.0 * bj1);
    [
        (m[0][0] * upper[0] + m[0][1] * upper[1]) * scale,
        (m[1][0] * upper[0] + m[1][1] * upper[1]) * scale,
    ]
}

/// Stored reflection series `Q_2 … Q_n`.
///
/// `Q_2 = -d_1` and `Q_k = β(-d_{k-1})(q_{k-2} Q_{k-1})`, where `Q_k` lives on
/// the generators `q_1 … q_{k-2}` (0-based indices `0 … k-3`).
pub fn q_sequence(profile: &ReflectionProfile, degree_cap: u32) -> Result<Vec<MultiSeries>> {
    let d = profile.coefficients();
    let mut out: Vec<MultiSeries> = Vec::with_capacity(d.len());
    let mut current = MultiSeries::zero(0, degree_cap)?;
    for (i, &dk) in d.iter().enumerate() {
        // i = k - 2
        let k = i + 2;
        let argument = if i == 0 {
            current.clone()
        } else {
            current.extend_generators(i)?.modulate(i - 1, 1)?
        };
        current = argument.mobius_beta(-dk).map_err(|e| match e {
            Error::Contraction { rho, .. } => Error::Contraction { rho, step: Some(k) },
            other => other,
        })?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Comparison of `‖Q_n‖` with `tan(Σ arctanh|d_k|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanBoundReport {
    pub norm: NormInterval,
    pub bound: f64,
    pub degree_cap: u32,
    pub pass: bool,
}

/// Bounds `‖Q_n‖` through the power-norm transfer on `-d_1, …, -d_{n-1}`.
///
/// Each step of the `Q` recursion multiplies by a fresh generator, so `Q_n`
/// is the chain `z_{k+1} = β(-d_{k+1})(q_k z_k)` started at `z_1 = -d_1`.
/// `degree_cap` bounds the power of each generator.
pub fn verify_tan_bound(profile: &ReflectionProfile, degree_cap: u32) -> Result<TanBoundReport> {
    let sum = tan_bound_sum(profile)?;
    let negated: Vec<f64> = profile.coefficients().iter().map(|d| -d).collect();
    let norm = if negated.is_empty() {
        NormInterval::exact(0.0)
    } else {
        power_norms(&negated, degree_cap.max(1) as usize)?
            .bracket(1)
            .expect("power one is stored")
    };
    Ok(tan_report(norm, sum, degree_cap))
}

/// The same bound from the expanded series `Q_n`; cost grows with the
/// number of layers.
pub fn verify_tan_bound_series(profile: &ReflectionProfile, degree_cap: u32) -> Result<TanBoundReport> {
    let sum = tan_bound_sum(profile)?;
    let norm = q_sequence(profile, degree_cap)?
        .last()
        .map_or(NormInterval::exact(0.0), MultiSeries::ap_norm);
    Ok(tan_report(norm, sum, degree_cap))
}

fn tan_bound_sum(profile: &ReflectionProfile) -> Result<f64> {
    let sum = profile.arctanh_sum();
    if !(sum < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Precondition(format!(
            "sum of arctanh|d_k| = {sum} is not below pi/2, the bound is infinite"
        )));
    }
    Ok(sum)
}

fn tan_report(norm: NormInterval, sum: f64, degree_cap: u32) -> TanBoundReport {
    let bound = sum.tan();
    TanBoundReport {
        norm,
        bound,
        degree_cap,
        pass: norm.upper <= bound + TAN_BOUND_SLACK,
    }
}

/// `s · c_{2n}` with an error radius, for sources in the last layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub value: Complex64,
    pub radius: f64,
}

/// Evaluates `s · c_{2n} = -(b_n/2) e^{2 s b_n x_{n-1}} Q_n(q) ∫ v_0 e^{-s b_n y} dy`
/// from the stored series `Q_n`, reused across frequencies.
#[derive(Debug, Clone)]
pub struct ClosedFormEvaluator {
    medium: LaminarMedium,
    series: MultiSeries,
}

impl ClosedFormEvaluator {
    pub fn new(medium: &LaminarMedium, degree_cap: u32) -> Result<Self> {
        if medium.layer_count() < 2 {
            return Err(Error::Precondition("needs at least two layers".into()));
        }
        let series = q_sequence(&medium.reflection_profile(), degree_cap)?
            .pop()
            .expect("two layers give one member");
        Ok(Self {
            medium: medium.clone(),
            series,
        })
    }

    pub fn series(&self) -> &MultiSeries {
        &self.series
    }

    pub fn evaluate(&self, s: Complex64, source: &SourceSpec) -> Result<ClosedForm> {
        let n = self.medium.layer_count();
        if source.layer(&self.medium)? + 1 != n {
            return Err(Error::Precondition("the closed form needs a source in the last layer".into()));
        }
        let profile = self.medium.reflection_profile();
        let q: Vec<Complex64> = profile.generators().iter().map(|&l| cexp(-s * l)).collect();
        let (value, radius) = self.series.evaluate(&q)?;
        let bn = self.medium.slowness()[n - 1];
        let xn = self.medium.interfaces()[n - 2];
        let factor = -(bn / 2.0) * cexp(2.0 * s * bn * xn) * source.exp_moment(-s * bn);
        Ok(ClosedForm {
            value: factor * value,
            radius: factor.norm() * radius,
        })
    }
}

pub fn c2n_closed_form(
    medium: &LaminarMedium,
    s: Complex64,
    source: &SourceSpec,
    degree_cap: u32,
) -> Result<ClosedForm> {
    ClosedFormEvaluator::new(medium, degree_cap)?.evaluate(s, source)
}

/// One row of the oracle comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub layers: usize,
    pub frequency: Complex64,
    pub closed_form: Complex64,
    pub oracle: Complex64,
}

impl OracleRow {
    pub fn relative_error(&self) -> f64 {
        (self.closed_form - self.oracle).norm() / self.oracle.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(b: &[f64], x: &[f64]) -> LaminarMedium {
        LaminarMedium::from_slowness(b, x.to_vec()).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn q_sequence_small_cases() {
        let p = ReflectionProfile::from_coefficients(vec![-0.5]).unwrap();
        let q = q_sequence(&p, 30).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].ap_norm(), NormInterval::exact(0.5));

        for d2 in [0.5, -0.5] {
            let p = ReflectionProfile::from_coefficients(vec![0.5, d2]).unwrap();
            let q = q_sequence(&p, 30).unwrap();
            let n = q[1].ap_norm();
            assert!(n.contains(1.0, 1e-6), "{n:?}");
        }
    }

    #[test]
    fn tan_bound_examples() {
        let r = verify_tan_bound(&ReflectionProfile::from_coefficients(vec![-0.5]).unwrap(), 30).unwrap();
        assert!(r.pass && (r.norm.upper - 0.5).abs() < 1e-15);
        assert!((r.bound - 0.5f64.atanh().tan()).abs() < 1e-15);
        let r = verify_tan_bound(&ReflectionProfile::from_coefficients(vec![0.5, 0.5]).unwrap(), 30).unwrap();
        assert!(r.pass && r.norm.contains(1.0, 1e-6));
        let big = ReflectionProfile::from_coefficients(vec![0.8f64.tanh(), 0.8f64.tanh()]).unwrap();
        assert!(matches!(verify_tan_bound(&big, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn tan_bound_routes_agree() {
        let p = ReflectionProfile::from_coefficients(vec![0.3, -0.45, 0.2, 0.35]).unwrap();
        let power = verify_tan_bound(&p, 30).unwrap().norm;
        let series = verify_tan_bound_series(&p, 30).unwrap().norm;
        assert!(power.width() < 1e-10, "{power:?} {series:?}");
        assert!(series.contains(power.midpoint(), 1e-12), "{power:?} {series:?}");
    }

    #[test]
    fn rhs_structure() {
        let m = medium(&[1.0, 1.3, 0.8], &[0.0, 1.0]);
        let s = Complex64::new(0.0, 1.7);
        let sys = assemble_system(&m, s, &SourceSpec::dirac(1.5)).unwrap();
        assert_eq!(sys.rhs[0], Complex64::new(0.0, 0.0));
        assert!(rel(sys.rhs[3], 1.3 * sys.rhs[2]) < 1e-15);
        let sys = assemble_system(&m, s, &SourceSpec::dirac(-0.5)).unwrap();
        assert!(rel(sys.rhs[1], -1.3 * sys.rhs[0]) < 1e-15);
        assert_eq!(sys.rhs[2], Complex64::new(0.0, 0.0));
        assert!(assemble_system(&m, s, &SourceSpec::Box { left: -0.5, right: 0.5 }).is_err());
    }

    #[test]
    fn two_layers_closed_form() {
        let m = medium(&[1.0, 3.0], &[0.2]);
        for w in [0.3, 2.0, 11.0] {
            let s = Complex64::new(0.0, w);
            let src = SourceSpec::dirac(1.1);
            let sol = oracle_coefficients(&assemble_system(&m, s, &src).unwrap()).unwrap();
            let cf = c2n_closed_form(&m, s, &src, 10).unwrap();
            assert!((cf.value.norm() - 3.0 / 4.0).abs() < 1e-14);
            assert!(rel(s * sol.last(), cf.value) < 1e-12);
        }
    }

    #[test]
    fn homogeneous_medium_has_no_reflection() {
        let m = medium(&[1.2, 1.2, 1.2], &[0.0, 0.7]);
        let s = Complex64::new(0.0, 3.0);
        let sol = oracle_coefficients(&assemble_system(&m, s, &SourceSpec::dirac(1.0)).unwrap()).unwrap();
        assert!(sol.last().norm() < 1e-14);
        let sol = oracle_coefficients(&assemble_system(&m, s, &SourceSpec::dirac(-1.0)).unwrap()).unwrap();
        // Free term transported unchanged: c_{2n} = (b/2s) e^{s b y}.
        let free = 1.2 / (2.0 * s) * (s * 1.2 * -1.0).exp();
        assert!(rel(sol.last(), free) < 1e-12);
    }

    #[test]
    fn case_formulas_match_oracle() {
        let m = medium(&[1.0, 0.8, 1.3, 1.1, 0.9], &[-1.0, -0.2, 0.5, 1.4]);
        let s = Complex64::new(0.0, 2.3);
        for y in [-1.7, -0.6, 0.1, 1.0, 2.0] {
            let src = SourceSpec::dirac(y);
            let sol = oracle_coefficients(&assemble_system(&m, s, &src).unwrap()).unwrap();
            assert!(!sol.flagged);
            let cf = c2n_case_formula(&m, s, &src).unwrap();
            assert!(rel(cf, s * sol.last()) < 1e-10, "y = {y}");
        }
        let sys = assemble_system(&m, s, &SourceSpec::dirac(2.0)).unwrap();
        let sol = oracle_coefficients(&sys).unwrap();
        assert!(rel(sol.determinant, determinant_product(&m, s, 5)) < 1e-10);
    }

    #[test]
    fn recurrences_walk_down() {
        let m = medium(&[1.0, 0.8, 1.3, 1.1, 0.9], &[-1.0, -0.2, 0.5, 1.4]);
        let s = Complex64::new(0.0, 4.1);
        let sol = oracle_coefficients(&assemble_system(&m, s, &SourceSpec::dirac(-1.5)).unwrap()).unwrap();
        let n = 5;
        let mut pair = top_pair(&m, s, sol.last());
        assert!(rel(pair[0], sol.c(2 * n - 3)) < 1e-10 && rel(pair[1], sol.c(2 * n - 2)) < 1e-10);
        for j in (2..n - 1).rev() {
            pair = transfer_down(&m, s, j, pair);
            assert!(rel(pair[0], sol.c(2 * j - 1)) < 1e-10 && rel(pair[1], sol.c(2 * j)) < 1e-10);
        }
    }

    #[test]
    fn box_source_transform() {
        let src = SourceSpec::Box { left: 0.2, right: 0.7 };
        let sigma = Complex64::new(0.0, 3.0);
        let want = ((sigma * 0.7).exp() - (sigma * 0.2).exp()) / sigma;
        assert!((src.exp_moment(sigma) - want).norm() < 1e-15);
        assert!((src.mass() - 0.5).abs() < 1e-15);
    }
}
