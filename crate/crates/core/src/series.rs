//! Sparse multi-index series `Σ c_j q^j` with a certified truncation tail.
//!
//! Frequencies are kept symbolic: a term is a monomial in named generators
//! `q_0, …, q_{m-1}`, so distinct multi-indices never collide. Every series is
//! truncated at a total degree `degree_cap`; `tail_bound` bounds the norm of
//! everything that was discarded or perturbed by truncation.

use std::fmt::Write as _;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Maximum number of generators a [`MultiSeries`] can carry.
pub const MAX_GENERATORS: usize = 16;
/// Maximum total-degree cap.
pub const MAX_DEGREE_CAP: u32 = 255;

const LANE_BITS: u32 = 8;
const LANE_MASK: u128 = 0xff;

/// A monomial `q_0^{j_0} ⋯ q_{m-1}^{j_{m-1}}` packed one byte per generator.
///
/// Exponents never exceed the degree cap, so adding packed values multiplies
/// monomials without carries between lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(u128);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn from_exponents(exponents: &[u32]) -> Result<Self> {
        if exponents.len() > MAX_GENERATORS {
            return Err(Error::TooManyGenerators {
                got: exponents.len(),
                max: MAX_GENERATORS,
            });
        }
        let mut packed = 0u128;
        for (g, &e) in exponents.iter().enumerate() {
            if e > MAX_DEGREE_CAP {
                return Err(Error::DegreeCapTooLarge {
                    got: e,
                    max: MAX_DEGREE_CAP,
                });
            }
            packed |= u128::from(e) << (LANE_BITS * g as u32);
        }
        Ok(Monomial(packed))
    }

    pub fn exponent(self, generator: usize) -> u32 {
        ((self.0 >> (LANE_BITS * generator as u32)) & LANE_MASK) as u32
    }

    pub fn degree(self) -> u32 {
        self.0.to_le_bytes().iter().map(|&b| u32::from(b)).sum()
    }

    pub fn exponents(self, generators: usize) -> Vec<u32> {
        (0..generators).map(|g| self.exponent(g)).collect()
    }

    fn times(self, other: Monomial) -> Monomial {
        Monomial(self.0 + other.0)
    }

    fn shifted(self, generator: usize, power: u32) -> Monomial {
        Monomial(self.0 + (u128::from(power) << (LANE_BITS * generator as u32)))
    }
}

/// Certified bracket `[lower, upper]` around a norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormInterval {
    pub lower: f64,
    pub upper: f64,
}

impl NormInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(0.0 <= lower && lower <= upper, "bad bracket [{lower}, {upper}]");
        Self { lower, upper }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, value)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    monomial: Monomial,
    degree: u32,
    coeff: Complex64,
}

/// Truncated series over `generator_count` symbolic generators.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    generators: usize,
    cap: u32,
    /// Sorted by `(degree, monomial)`.
    terms: Vec<Term>,
    /// `offsets[e]` is the index of the first term of degree `>= e`, for `e = 0..=cap+1`.
    offsets: Vec<usize>,
    tail: f64,
    /// Stored coefficients equal the true ones for every degree up to the cap.
    exact_below_cap: bool,
}

fn check_shape(generators: usize, cap: u32) -> Result<()> {
    if generators > MAX_GENERATORS {
        return Err(Error::TooManyGenerators {
            got: generators,
            max: MAX_GENERATORS,
        });
    }
    if cap > MAX_DEGREE_CAP {
        return Err(Error::DegreeCapTooLarge {
            got: cap,
            max: MAX_DEGREE_CAP,
        });
    }
    Ok(())
}

impl MultiSeries {
    pub fn zero(generators: usize, degree_cap: u32) -> Result<Self> {
        check_shape(generators, degree_cap)?;
        Ok(Self::assemble(generators, degree_cap, Vec::new(), 0.0, true))
    }

    pub fn constant(generators: usize, degree_cap: u32, value: Complex64) -> Result<Self> {
        Self::from_terms(generators, degree_cap, [(vec![0; generators], value)], 0.0)
    }

    /// Single term `coeff · q^exponents`.
    pub fn monomial(
        generators: usize,
        degree_cap: u32,
        exponents: &[u32],
        coeff: Complex64,
    ) -> Result<Self> {
        Self::from_terms(generators, degree_cap, [(exponents.to_vec(), coeff)], 0.0)
    }

    /// Builds a series from explicit terms. Duplicate indices are summed and
    /// terms above the cap are moved into the tail.
    pub fn from_terms<I>(generators: usize, degree_cap: u32, terms: I, tail: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        check_shape(generators, degree_cap)?;
        if !(tail >= 0.0) {
            return Err(Error::OutOfRange {
                name: "tail",
                value: tail,
                reason: "must be nonnegative",
            });
        }
        let mut acc: FxHashMap<Monomial, Complex64> = FxHashMap::default();
        let mut extra = 0.0;
        for (exponents, coeff) in terms {
            if exponents.len() != generators {
                return Err(Error::GeneratorMismatch {
                    left: generators,
                    right: exponents.len(),
                });
            }
            let degree: u32 = exponents.iter().sum();
            if degree > degree_cap {
                extra += coeff.norm();
                continue;
            }
            *acc.entry(Monomial::from_exponents(&exponents)?).or_default() += coeff;
        }
        Ok(Self::from_map(generators, degree_cap, acc, tail + extra, true))
    }

    fn from_map(
        generators: usize,
        cap: u32,
        map: FxHashMap<Monomial, Complex64>,
        tail: f64,
        exact: bool,
    ) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|(monomial, coeff)| Term {
                monomial,
                degree: monomial.degree(),
                coeff,
            })
            .collect();
        Self::assemble(generators, cap, terms, tail, exact)
    }

    fn assemble(generators: usize, cap: u32, mut terms: Vec<Term>, tail: f64, exact: bool) -> Self {
        terms.sort_unstable_by(|a, b| (a.degree, a.monomial).cmp(&(b.degree, b.monomial)));
        let mut offsets = vec![0usize; cap as usize + 2];
        let mut i = 0;
        for (e, slot) in offsets.iter_mut().enumerate() {
            while i < terms.len() && (terms[i].degree as usize) < e {
                i += 1;
            }
            *slot = i;
        }
        Self {
            generators,
            cap,
            terms,
            offsets,
            tail,
            exact_below_cap: exact,
        }
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    pub fn degree_cap(&self) -> u32 {
        self.cap
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    /// True when every stored coefficient is exact and only degrees above the
    /// cap are missing. Then the stored norm is a rigorous lower bound.
    pub fn is_exact_below_cap(&self) -> bool {
        self.exact_below_cap
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms as `(exponents, coefficient)` in `(degree, index)` order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<u32>, Complex64)> + '_ {
        self.terms
            .iter()
            .map(|t| (t.monomial.exponents(self.generators), t.coeff))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Complex64 {
        let Ok(m) = Monomial::from_exponents(exponents) else {
            return Complex64::new(0.0, 0.0);
        };
        let degree = m.degree();
        if exponents.len() != self.generators || degree > self.cap {
            return Complex64::new(0.0, 0.0);
        }
        let slice = &self.terms[self.offsets[degree as usize]..self.offsets[degree as usize + 1]];
        slice
            .binary_search_by(|t| t.monomial.cmp(&m))
            .map(|i| slice[i].coeff)
            .unwrap_or_default()
    }

    /// `Σ |stored coefficients|`.
    pub fn stored_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    pub fn ap_norm(&self) -> NormInterval {
        let stored = self.stored_norm();
        let lower = if self.exact_below_cap {
            stored
        } else {
            (stored - self.tail).max(0.0)
        };
        NormInterval::new(lower, stored + self.tail)
    }

    fn without_tail(&self) -> Self {
        let mut s = self.clone();
        s.tail = 0.0;
        s.exact_below_cap = true;
        s
    }

    fn check_generators(&self, other: &Self) -> Result<()> {
        if self.generators != other.generators {
            return Err(Error::GeneratorMismatch {
                left: self.generators,
                right: other.generators,
            });
        }
        Ok(())
    }

    /// Re-truncates at a lower cap, moving the excess into the tail.
    pub fn truncate(&self, degree_cap: u32) -> Self {
        if degree_cap >= self.cap {
            return self.clone();
        }
        let keep = self.offsets[degree_cap as usize + 1];
        let moved: f64 = self.terms[keep..].iter().map(|t| t.coeff.norm()).sum();
        Self::assemble(
            self.generators,
            degree_cap,
            self.terms[..keep].to_vec(),
            self.tail + moved,
            self.exact_below_cap,
        )
    }

    /// Same series viewed over `generators >= generator_count` generators.
    pub fn extend_generators(&self, generators: usize) -> Result<Self> {
        check_shape(generators, self.cap)?;
        if generators < self.generators {
            return Err(Error::GeneratorMismatch {
                left: self.generators,
                right: generators,
            });
        }
        let mut s = self.clone();
        s.generators = generators;
        Ok(s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Self, sign: Complex64) -> Result<Self> {
        self.check_generators(other)?;
        let cap = self.cap.min(other.cap);
        let (a, b) = (self.truncate(cap), other.truncate(cap));
        let mut acc: FxHashMap<Monomial, Complex64> = FxHashMap::default();
        for t in &a.terms {
            *acc.entry(t.monomial).or_default() += t.coeff;
        }
        for t in &b.terms {
            *acc.entry(t.monomial).or_default() += sign * t.coeff;
        }
        Ok(Self::from_map(
            self.generators,
            cap,
            acc,
            a.tail + b.tail,
            a.exact_below_cap && b.exact_below_cap,
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        if factor == Complex64::new(0.0, 0.0) {
            return Self::assemble(self.generators, self.cap, Vec::new(), 0.0, true);
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * factor,
                ..*t
            })
            .collect();
        Self::assemble(
            self.generators,
            self.cap,
            terms,
            self.tail * factor.norm(),
            self.exact_below_cap,
        )
    }

    pub fn add_constant(&self, value: Complex64) -> Self {
        let constant = Self::constant(self.generators, self.cap, value).expect("shape already checked");
        self.add(&constant).expect("same generators")
    }

    /// Product truncated at the smaller cap. Returns the product and the mass
    /// of exactly computed pairs that landed above the cap.
    fn mul_stored(&self, other: &Self, cap: u32) -> (FxHashMap<Monomial, Complex64>, f64) {
        let mut acc: FxHashMap<Monomial, Complex64> =
            FxHashMap::with_capacity_and_hasher(self.len().max(other.len()) * 2, Default::default());
        // suffix[e] = Σ_{deg(b) >= e} |b|
        let mut suffix = vec![0.0; cap as usize + 2];
        for e in (0..=cap as usize).rev() {
            let lo = other.offsets.get(e).copied().unwrap_or(other.terms.len());
            let hi = other.offsets.get(e + 1).copied().unwrap_or(other.terms.len());
            suffix[e] = suffix[e + 1] + other.terms[lo..hi].iter().map(|t| t.coeff.norm()).sum::<f64>();
        }
        let beyond_other: f64 = other.terms[other.offsets[(cap as usize + 1).min(other.cap as usize + 1)]..]
            .iter()
            .map(|t| t.coeff.norm())
            .sum();
        let mut dropped = 0.0;
        for ta in &self.terms {
            if ta.degree > cap {
                continue;
            }
            let room = (cap - ta.degree) as usize;
            let end = other.offsets[(room + 1).min(other.cap as usize + 1)];
            for tb in &other.terms[..end] {
                *acc.entry(ta.monomial.times(tb.monomial)).or_default() += ta.coeff * tb.coeff;
            }
            dropped += ta.coeff.norm() * (suffix[room + 1] + beyond_other);
        }
        (acc, dropped)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_generators(other)?;
        let cap = self.cap.min(other.cap);
        let (a, b) = (self.truncate(cap), other.truncate(cap));
        let (acc, dropped) = a.mul_stored(&b, cap);
        let (n1, n2) = (a.stored_norm(), b.stored_norm());
        let (u1, u2) = (a.tail, b.tail);
        let tail = dropped + n1 * u2 + n2 * u1 + u1 * u2;
        Ok(Self::from_map(
            self.generators,
            cap,
            acc,
            tail,
            a.exact_below_cap && b.exact_below_cap,
        ))
    }

    pub fn pow(&self, exponent: u32) -> Result<Self> {
        let mut result = Self::constant(self.generators, self.cap, Complex64::new(1.0, 0.0))?;
        for _ in 0..exponent {
            result = result.mul(self)?;
        }
        Ok(result)
    }

    /// Multiplies by `q_generator^power`.
    pub fn modulate(&self, generator: usize, power: u32) -> Result<Self> {
        if generator >= self.generators {
            return Err(Error::GeneratorOutOfRange {
                index: generator,
                count: self.generators,
            });
        }
        let mut moved = 0.0;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let degree = t.degree + power;
            if degree > self.cap || t.monomial.exponent(generator) + power > MAX_DEGREE_CAP {
                moved += t.coeff.norm();
            } else {
                terms.push(Term {
                    monomial: t.monomial.shifted(generator, power),
                    degree,
                    coeff: t.coeff,
                });
            }
        }
        Ok(Self::assemble(
            self.generators,
            self.cap,
            terms,
            self.tail + moved,
            self.exact_below_cap,
        ))
    }

    /// `β(d)(s) = (s + d) / (1 + d s)`, expanded as `d + (1 - d²) Σ_{j≥1} (-d)^{j-1} s^j`.
    pub fn mobius_beta(&self, d: f64) -> Result<Self> {
        mobius_beta(d, self)
    }

    /// Sums the stored terms at numeric generator values. The returned radius
    /// bounds the discarded part whenever every `|q_k| <= 1`.
    pub fn evaluate(&self, q: &[Complex64]) -> Result<(Complex64, f64)> {
        if q.len() != self.generators {
            return Err(Error::GeneratorMismatch {
                left: self.generators,
                right: q.len(),
            });
        }
        let cap = self.cap as usize;
        let powers: Vec<Vec<Complex64>> = q
            .iter()
            .map(|&z| {
                let mut row = Vec::with_capacity(cap + 1);
                let mut p = Complex64::new(1.0, 0.0);
                for _ in 0..=cap {
                    row.push(p);
                    p *= z;
                }
                row
            })
            .collect();
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut v = t.coeff;
            for (g, row) in powers.iter().enumerate() {
                let e = t.monomial.exponent(g) as usize;
                if e > 0 {
                    v *= row[e];
                }
            }
            sum += v;
        }
        let contained = q.iter().all(|z| z.norm() <= 1.0 + 1e-12);
        let radius = if contained { self.tail } else { f64::INFINITY };
        Ok((sum, radius))
    }

    /// Text dump: a header `generators m cap K tail τ` followed by one line
    /// `j_1 … j_m  re  im` per stored term.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "generators {} cap {} tail {:.16e}",
            self.generators, self.cap, self.tail
        );
        if !self.exact_below_cap {
            out.push_str(" inexact");
        }
        out.push('\n');
        for t in &self.terms {
            let exps: Vec<String> = t
                .monomial
                .exponents(self.generators)
                .iter()
                .map(u32::to_string)
                .collect();
            let _ = writeln!(out, "{}  {:.16e}  {:.16e}", exps.join(" "), t.coeff.re, t.coeff.im);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, reason: &str| Error::SeriesParse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() < 6 || h[0] != "generators" || h[2] != "cap" || h[4] != "tail" {
            return Err(err(1, "expected `generators m cap K tail τ`"));
        }
        let generators: usize = h[1].parse().map_err(|_| err(1, "bad generator count"))?;
        let cap: u32 = h[3].parse().map_err(|_| err(1, "bad cap"))?;
        let tail: f64 = h[5].parse().map_err(|_| err(1, "bad tail"))?;
        let exact = !h[6..].contains(&"inexact");
        let mut terms = Vec::new();
        for (i, line) in lines {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != generators + 2 {
                return Err(err(i + 1, "wrong number of fields"));
            }
            let exps = tokens[..generators]
                .iter()
                .map(|t| t.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| err(i + 1, "bad exponent"))?;
            let re: f64 = tokens[generators].parse().map_err(|_| err(i + 1, "bad real part"))?;
            let im: f64 = tokens[generators + 1]
                .parse()
                .map_err(|_| err(i + 1, "bad imaginary part"))?;
            terms.push((exps, Complex64::new(re, im)));
        }
        let mut s = Self::from_terms(generators, cap, terms, tail)?;
        s.exact_below_cap = exact;
        Ok(s)
    }
}

/// `β(d)(s)` with a certified tail.
///
/// The tail collects three contributions: the mass of powers lost to the
/// degree cap, the geometric remainder after the last retained power, and the
/// propagated input tail `(1-d²) τ / ((1-|d|σ)(1-|d|(σ+τ)))`.
pub fn mobius_beta(d: f64, s: &MultiSeries) -> Result<MultiSeries> {
    if !(d.abs() < 1.0) {
        return Err(Error::OutOfRange {
            name: "d",
            value: d,
            reason: "must satisfy |d| < 1",
        });
    }
    let sigma = s.stored_norm();
    let tau = s.tail;
    let rho_up = d.abs() * (sigma + tau);
    if rho_up >= 1.0 {
        return Err(Error::Contraction {
            rho: rho_up,
            step: None,
        });
    }
    if d == 0.0 {
        return Ok(s.clone());
    }
    let one_minus = 1.0 - d * d;
    let rho = d.abs() * sigma;
    let base = s.without_tail();
    let has_constant = base.terms.first().is_some_and(|t| t.degree == 0);

    let mut acc: FxHashMap<Monomial, Complex64> = FxHashMap::default();
    acc.insert(Monomial::ONE, Complex64::new(d, 0.0));
    // Invariant: `power` is the stored part of s^j, `power_error` bounds the
    // norm of what the cap removed from it, `weight` is (1-d²)(-d)^{j-1}.
    let mut power = base.clone();
    let mut power_error = 0.0;
    let mut weight = one_minus;
    let mut lost = 0.0;
    let stop = f64::EPSILON * 1e-2 * (d.abs() + sigma);
    let max_steps = 64 * (s.cap as usize + 1) + 256;
    let mut j = 1usize;
    let remainder = loop {
        for t in &power.terms {
            *acc.entry(t.monomial).or_default() += weight * t.coeff;
        }
        lost += weight.abs() * power_error;
        // Σ_{i>j} (1-d²)|d|^{i-1} σ^i
        let remainder = one_minus * sigma * rho.powi(j as i32) / (1.0 - rho);
        if has_constant && (remainder <= stop || j >= max_steps) {
            break remainder;
        }
        let (next, dropped) = power.mul_stored(&base, s.cap);
        if next.is_empty() && !has_constant {
            // Every higher power sits above the cap.
            break remainder;
        }
        power = MultiSeries::from_map(s.generators, s.cap, next, 0.0, true);
        power_error = power_error * sigma + dropped;
        weight *= -d;
        j += 1;
    };
    let propagated = if tau > 0.0 {
        one_minus * tau / ((1.0 - rho) * (1.0 - rho_up))
    } else {
        0.0
    };
    let exact = s.exact_below_cap && !has_constant;
    Ok(MultiSeries::from_map(
        s.generators,
        s.cap,
        acc,
        lost + remainder + propagated,
        exact,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn norm_of_two_terms() {
        let s = MultiSeries::from_terms(2, 4, [(vec![1, 0], c(0.3)), (vec![0, 1], c(-0.4))], 0.0).unwrap();
        let n = s.ap_norm();
        assert!((n.lower - 0.7).abs() < 1e-15 && (n.upper - 0.7).abs() < 1e-15);
        assert_eq!(MultiSeries::zero(3, 5).unwrap().ap_norm(), NormInterval::exact(0.0));
    }

    #[test]
    fn geometric_bracket() {
        let terms = (0..=10).map(|j| (vec![j], c(0.5f64.powi(j as i32))));
        let s = MultiSeries::from_terms(1, 10, terms, 0.5f64.powi(11) / 0.5).unwrap();
        let n = s.ap_norm();
        assert!(n.lower < 2.0 && 2.0 <= n.upper + 1e-15);
        assert!((n.lower - 1.9990234375).abs() < 1e-15);
        assert!((n.upper - 2.0).abs() < 1e-15);
    }

    #[test]
    fn products() {
        let q1 = MultiSeries::monomial(2, 4, &[1, 0], c(1.0)).unwrap();
        let q2 = MultiSeries::monomial(2, 4, &[0, 1], c(1.0)).unwrap();
        let p = q1.mul(&q2).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coefficient(&[1, 1]), c(1.0));

        let one = MultiSeries::constant(1, 4, c(1.0)).unwrap();
        let q = MultiSeries::monomial(1, 4, &[1], c(1.0)).unwrap();
        let p = one.add(&q).unwrap().mul(&one.sub(&q).unwrap()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&[0]), c(1.0));
        assert_eq!(p.coefficient(&[2]), c(-1.0));
        assert_eq!(p.tail_bound(), 0.0);

        let h = MultiSeries::monomial(1, 1, &[1], c(0.5)).unwrap();
        let p = h.mul(&h).unwrap();
        assert!(p.is_empty());
        assert!(p.tail_bound() >= 0.25);
        assert!(p.is_exact_below_cap());
    }

    #[test]
    fn mobius_examples() {
        let zero = MultiSeries::zero(1, 30).unwrap();
        let b = zero.mobius_beta(0.5).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.coefficient(&[0]), c(0.5));

        let s = MultiSeries::monomial(1, 40, &[1], c(0.5)).unwrap();
        let b = s.mobius_beta(0.5).unwrap();
        assert_eq!(b.coefficient(&[0]), c(0.5));
        assert_eq!(b.coefficient(&[1]), c(0.375));
        assert_eq!(b.coefficient(&[2]), c(-0.09375));
        let n = b.ap_norm();
        assert!(n.lower <= 1.0 && 1.0 <= n.upper);
        assert!(n.width() < 1e-20);

        let big = MultiSeries::constant(0, 5, c(2.0)).unwrap();
        assert!(matches!(big.mobius_beta(0.9), Err(Error::Contraction { .. })));
    }

    #[test]
    fn mobius_group_law_on_constants() {
        let (d1, d2) = (0.3, -0.55);
        let inner = MultiSeries::zero(0, 8).unwrap().mobius_beta(d1).unwrap();
        let outer = inner.mobius_beta(d2).unwrap();
        let want = (d1 + d2) / (1.0 + d1 * d2);
        let got = outer.coefficient(&[]).re;
        assert!((got - want).abs() <= outer.tail_bound() + 1e-15);
        assert!(outer.ap_norm().contains(want.abs(), 1e-15));
    }

    #[test]
    fn modulate_shifts_indices() {
        let one = MultiSeries::constant(1, 3, c(1.0)).unwrap();
        assert_eq!(one.modulate(0, 1).unwrap().coefficient(&[1]), c(1.0));
        let q1 = MultiSeries::monomial(2, 3, &[1, 0], c(1.0)).unwrap();
        assert_eq!(q1.modulate(1, 2).unwrap().coefficient(&[1, 2]), c(1.0));
        let over = q1.modulate(1, 3).unwrap();
        assert!(over.is_empty());
        assert_eq!(over.tail_bound(), 1.0);
        assert!(matches!(q1.modulate(2, 1), Err(Error::GeneratorOutOfRange { .. })));
    }

    #[test]
    fn evaluation_at_unit_points() {
        let s = MultiSeries::from_terms(2, 4, [(vec![1, 0], c(0.3)), (vec![0, 2], c(-0.4))], 0.01).unwrap();
        let q = [Complex64::from_polar(1.0, 0.7), Complex64::from_polar(1.0, -1.1)];
        let (v, r) = s.evaluate(&q).unwrap();
        let want = 0.3 * q[0] - 0.4 * q[1] * q[1];
        assert!((v - want).norm() < 1e-15);
        assert_eq!(r, 0.01);
    }

    #[test]
    fn dump_round_trip() {
        let s = MultiSeries::from_terms(
            2,
            6,
            [(vec![1, 0], Complex64::new(0.3, 1.0 / 3.0)), (vec![2, 3], c(-0.4))],
            1.25e-7,
        )
        .unwrap();
        let text = s.dump();
        assert!(text.starts_with("generators 2 cap 6 tail "));
        assert_eq!(MultiSeries::parse(&text).unwrap(), s);
        assert!(MultiSeries::parse("generators 1 cap 2 tail 0\n1 2 3 4\n").is_err());
    }

    #[test]
    fn caps_are_enforced() {
        assert!(MultiSeries::zero(17, 4).is_err());
        assert!(MultiSeries::zero(2, 256).is_err());
        let s = MultiSeries::from_terms(1, 2, [(vec![3], c(0.5))], 0.0).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.tail_bound(), 0.5);
    }
}
