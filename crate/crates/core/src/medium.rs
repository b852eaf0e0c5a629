//! Piecewise-constant media, their reflection data and variation functionals.
//!
//! Layers are indexed from 0. Layer `k` occupies `(x[k-1], x[k])`, with the
//! first and last layers extending to infinity. On layer `k` the coefficient
//! equals `a[k] = b[k]^-2`, where `b[k]` is the slowness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::Partition;

/// Largest part accepted by [`synthesize_counterexample`]: `ln(2)/2`.
pub fn part_threshold() -> f64 {
    std::f64::consts::LN_2 / 2.0
}

/// An immutable laminar medium.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarMedium {
    interfaces: Vec<f64>,
    coefficients: Vec<f64>,
    slowness: Vec<f64>,
    lower: f64,
    upper: f64,
    synthesis: Option<SynthesisRecord>,
}

/// Provenance of a synthesized counterexample medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub alpha: f64,
    pub parts: Vec<f64>,
    pub signs: Vec<i8>,
    /// Round-trip times of the interior layers.
    pub generators: Vec<f64>,
    /// Widths of the interior layers.
    pub widths: Vec<f64>,
    pub width_scale: f64,
}

impl LaminarMedium {
    /// Builds a medium from per-layer coefficients `a` and interface positions.
    pub fn new(coefficients: Vec<f64>, interfaces: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::EmptyMedium);
        }
        if interfaces.len() + 1 != coefficients.len() {
            return Err(Error::LayerCountMismatch {
                layers: coefficients.len(),
                expected: coefficients.len() - 1,
                got: interfaces.len(),
            });
        }
        for (index, &value) in coefficients.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveCoefficient { index, value });
            }
        }
        for (index, &value) in interfaces.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteInterface { index, value });
            }
            if index > 0 && value <= interfaces[index - 1] {
                return Err(Error::NonIncreasingInterfaces { index, value });
            }
        }
        let slowness = coefficients.iter().map(|a| a.sqrt().recip()).collect();
        let lower = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = coefficients.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            interfaces,
            coefficients,
            slowness,
            lower,
            upper,
            synthesis: None,
        })
    }

    /// Builds a medium from per-layer slowness values `b = a^-1/2`.
    pub fn from_slowness(slowness: &[f64], interfaces: Vec<f64>) -> Result<Self> {
        for (index, &value) in slowness.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveCoefficient {
                    index,
                    value: value.powi(-2),
                });
            }
        }
        let mut medium = Self::new(slowness.iter().map(|b| b.powi(-2)).collect(), interfaces)?;
        medium.slowness = slowness.to_vec();
        Ok(medium)
    }

    pub fn layer_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn slowness(&self) -> &[f64] {
        &self.slowness
    }

    /// `min a`.
    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    /// `max a`.
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn synthesis(&self) -> Option<&SynthesisRecord> {
        self.synthesis.as_ref()
    }

    /// Layer containing `x`. A point on an interface belongs to the layer on its right.
    pub fn layer_of(&self, x: f64) -> usize {
        self.interfaces.partition_point(|&p| p <= x)
    }

    /// True when `[left, right]` lies strictly inside one layer.
    pub fn strictly_inside_layer(&self, left: f64, right: f64) -> Option<usize> {
        let k = self.layer_of(left);
        let inside = |x: f64| {
            (k == 0 || x > self.interfaces[k - 1])
                && (k == self.interfaces.len() || x < self.interfaces[k])
        };
        (left <= right && inside(left) && inside(right)).then_some(k)
    }

    pub fn coefficient_at(&self, x: f64) -> f64 {
        self.coefficients[self.layer_of(x)]
    }

    /// Impedance `Z = 1/b` of layer `k`.
    pub fn impedance(&self, k: usize) -> f64 {
        self.slowness[k].recip()
    }

    /// Width of the interior layer `k`, or infinity for the outer layers.
    pub fn layer_width(&self, k: usize) -> f64 {
        if k == 0 || k + 1 >= self.layer_count() {
            f64::INFINITY
        } else {
            self.interfaces[k] - self.interfaces[k - 1]
        }
    }

    pub fn reflection_profile(&self) -> ReflectionProfile {
        let b = &self.slowness;
        let coefficients = b.windows(2).map(|w| (w[0] - w[1]) / (w[0] + w[1])).collect();
        let generators = (1..b.len().saturating_sub(1))
            .map(|k| 2.0 * b[k] * (self.interfaces[k] - self.interfaces[k - 1]))
            .collect();
        ReflectionProfile::from_parts(coefficients, generators)
            .expect("positive slowness always yields |d| < 1")
    }

    /// `Var(log a)`: the sum of the jumps of `log a`.
    pub fn log_variation(&self) -> f64 {
        self.coefficients
            .windows(2)
            .map(|w| (w[0].ln() - w[1].ln()).abs())
            .sum()
    }

    /// `Var(a)`: the sum of the jumps of `a`.
    pub fn coefficient_variation(&self) -> f64 {
        self.coefficients.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
    }

    pub fn to_record(&self) -> MediumRecord {
        MediumRecord {
            a_values: self.coefficients.iter().map(|v| v.to_string()).collect(),
            interfaces: self.interfaces.iter().map(|v| v.to_string()).collect(),
            metadata: self.synthesis.clone(),
        }
    }

    pub fn from_record(record: &MediumRecord) -> Result<Self> {
        let parse = |field: &str, values: &[String]| -> Result<Vec<f64>> {
            values
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::MediumParse(format!("{field}[{i}] = {s:?}: {e}")))
                })
                .collect()
        };
        let mut medium = Self::new(
            parse("a_values", &record.a_values)?,
            parse("interfaces", &record.interfaces)?,
        )?;
        medium.synthesis = record.metadata.clone();
        Ok(medium)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("medium record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: MediumRecord =
            serde_json::from_str(text).map_err(|e| Error::MediumParse(e.to_string()))?;
        Self::from_record(&record)
    }
}

/// Serialized form of a medium. Numbers are decimal strings that round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumRecord {
    pub a_values: Vec<String>,
    pub interfaces: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<SynthesisRecord>,
}

/// Reflection coefficients `d_k` and the round-trip times of the interior layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionProfile {
    coefficients: Vec<f64>,
    generators: Vec<f64>,
    arctanh_sum: f64,
}

impl ReflectionProfile {
    /// Builds a profile directly from reflection coefficients and generators.
    pub fn from_parts(coefficients: Vec<f64>, generators: Vec<f64>) -> Result<Self> {
        if let Some(&d) = coefficients.iter().find(|d| !(d.abs() < 1.0)) {
            return Err(Error::OutOfRange {
                name: "reflection coefficient",
                value: d,
                reason: "|d| must be < 1",
            });
        }
        let arctanh_sum = coefficients.iter().map(|d| d.abs().atanh()).sum();
        Ok(Self {
            coefficients,
            generators,
            arctanh_sum,
        })
    }

    /// Profile with the given coefficients and unit generators.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        let generators = vec![1.0; coefficients.len().saturating_sub(1)];
        Self::from_parts(coefficients, generators)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    /// `Σ arctanh|d_k|`.
    pub fn arctanh_sum(&self) -> f64 {
        self.arctanh_sum
    }

    /// `4 Σ arctanh|d_k|`, which equals `Var(log a)`.
    pub fn log_variation(&self) -> f64 {
        4.0 * self.arctanh_sum
    }
}

/// First `count` primes.
pub fn primes(count: usize) -> Vec<u64> {
    let mut found: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while found.len() < count {
        if found
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            found.push(candidate);
        }
        candidate += 1;
    }
    found
}

/// Greedy signs: the first is `+1`, afterwards `-1` exactly when the running sum is positive.
pub fn greedy_signs(parts: &[f64]) -> Vec<i8> {
    let mut running = 0.0;
    parts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let sign = if k == 0 || running <= 0.0 { 1 } else { -1 };
            running += f64::from(sign) * t;
            sign
        })
        .collect()
}

/// Builds a medium with `|d_k| = tanh t_k` for the given parts, greedy signs,
/// `a` inside `(1/2, 2)` and interior round-trip times `width_scale * sqrt(p_k)`.
pub fn synthesize_counterexample(
    alpha: f64,
    parts: &Partition,
    width_scale: f64,
) -> Result<LaminarMedium> {
    if !(alpha >= std::f64::consts::FRAC_PI_2) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            reason: "must be at least pi/2",
        });
    }
    if !(width_scale.is_finite() && width_scale > 0.0) {
        return Err(Error::OutOfRange {
            name: "width_scale",
            value: width_scale,
            reason: "must be positive",
        });
    }
    let t = parts.parts();
    if (parts.total() - alpha).abs() > 1e-12 * alpha.max(1.0) {
        return Err(Error::PartitionTotalMismatch {
            total: parts.total(),
            expected: alpha,
        });
    }
    let threshold = part_threshold();
    if let Some((index, &part)) = t.iter().enumerate().find(|(_, &p)| p > threshold) {
        return Err(Error::PartTooLarge {
            index,
            part,
            threshold,
        });
    }

    let signs = greedy_signs(t);
    // log a on layer k is log a_0 + 4 * (partial sum of signed parts before k).
    let mut offsets = Vec::with_capacity(t.len() + 1);
    let mut running = 0.0;
    offsets.push(0.0);
    for (&part, &sign) in t.iter().zip(&signs) {
        running += f64::from(sign) * part;
        offsets.push(4.0 * running);
    }
    let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    if spread >= 4.0_f64.ln() {
        return Err(Error::CoefficientRangeTooWide { spread });
    }
    let centre = 0.5 * (lo + hi);
    let coefficients: Vec<f64> = offsets.iter().map(|o| (o - centre).exp()).collect();
    let slowness: Vec<f64> = coefficients.iter().map(|a| a.sqrt().recip()).collect();

    let interior = t.len().saturating_sub(1);
    let generators: Vec<f64> = primes(interior)
        .into_iter()
        .map(|p| width_scale * (p as f64).sqrt())
        .collect();
    let widths: Vec<f64> = generators
        .iter()
        .enumerate()
        .map(|(k, lambda)| lambda / (2.0 * slowness[k + 1]))
        .collect();
    let mut interfaces = Vec::with_capacity(t.len());
    interfaces.push(0.0);
    for w in &widths {
        let last = *interfaces.last().expect("nonempty");
        interfaces.push(last + w);
    }

    let mut medium = LaminarMedium::new(coefficients, interfaces)?;
    medium.synthesis = Some(SynthesisRecord {
        alpha,
        parts: t.to_vec(),
        signs,
        generators,
        widths,
        width_scale,
    });
    Ok(medium)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn single_layer_has_empty_profile() {
        let m = LaminarMedium::new(vec![1.0], vec![]).unwrap();
        assert_eq!(m.slowness(), &[1.0]);
        let p = m.reflection_profile();
        assert!(p.coefficients().is_empty());
        assert!(p.generators().is_empty());
        assert_eq!(m.log_variation(), 0.0);
    }

    #[test]
    fn two_layer_reflection() {
        let m = LaminarMedium::new(vec![1.0, 1.0 / 9.0], vec![0.0]).unwrap();
        assert!(close(m.slowness()[1], 3.0, 1e-15));
        let d = m.reflection_profile().coefficients()[0];
        assert!(close(d, -0.5, 1e-15));
        assert!(close(m.log_variation(), 9.0f64.ln(), 1e-12));
        assert!(close(4.0 * 0.5f64.atanh(), 9.0f64.ln(), 1e-12));
    }

    #[test]
    fn three_layer_reflection() {
        let m = LaminarMedium::new(vec![1.0, 4.0, 1.0], vec![0.0, 1.0]).unwrap();
        let p = m.reflection_profile();
        assert!(close(p.coefficients()[0], 1.0 / 3.0, 1e-15));
        assert!(close(p.coefficients()[1], -1.0 / 3.0, 1e-15));
        assert!(close(m.log_variation(), 2.0 * 4.0f64.ln(), 1e-12));
        assert!(close(p.log_variation(), 4.0 * 2.0f64.ln(), 1e-12));
    }

    #[test]
    fn generators_are_round_trip_times() {
        let m = LaminarMedium::from_slowness(&[1.0, 2.0, 4.0], vec![0.0, 1.0]).unwrap();
        let p = m.reflection_profile();
        assert!(close(p.coefficients()[0], -1.0 / 3.0, 1e-15));
        assert!(close(p.coefficients()[1], -1.0 / 3.0, 1e-15));
        assert_eq!(p.generators(), &[4.0]);

        let m = LaminarMedium::from_slowness(&[2.0, 1.0, 2.0, 1.0], vec![0.0, 1.0, 3.0]).unwrap();
        let p = m.reflection_profile();
        for (got, want) in p.coefficients().iter().zip([1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0]) {
            assert!(close(*got, want, 1e-15));
        }
        assert_eq!(p.generators(), &[2.0, 8.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            LaminarMedium::new(vec![1.0, -2.0], vec![0.0]),
            Err(Error::NonPositiveCoefficient { index: 1, value: -2.0 })
        );
        assert_eq!(
            LaminarMedium::new(vec![1.0, 2.0, 3.0], vec![1.0, 1.0]),
            Err(Error::NonIncreasingInterfaces { index: 1, value: 1.0 })
        );
        assert!(matches!(
            LaminarMedium::new(vec![1.0, 2.0], vec![]),
            Err(Error::LayerCountMismatch { .. })
        ));
        assert_eq!(LaminarMedium::new(vec![], vec![]), Err(Error::EmptyMedium));
    }

    #[test]
    fn layer_lookup() {
        let m = LaminarMedium::new(vec![1.0, 2.0, 3.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(m.layer_of(-5.0), 0);
        assert_eq!(m.layer_of(0.5), 1);
        assert_eq!(m.layer_of(1.0), 2);
        assert_eq!(m.strictly_inside_layer(0.2, 0.8), Some(1));
        assert_eq!(m.strictly_inside_layer(-0.2, 0.2), None);
        assert_eq!(m.strictly_inside_layer(0.0, 0.5), None);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = LaminarMedium::new(vec![1.0 / 3.0, 0.1, 7.25e-3], vec![-0.1, 2.0 / 3.0]).unwrap();
        let back = LaminarMedium::from_json(&m.to_json()).unwrap();
        assert_eq!(back.coefficients(), m.coefficients());
        assert_eq!(back.interfaces(), m.interfaces());
    }

    #[test]
    fn primes_and_signs() {
        assert_eq!(primes(6), vec![2, 3, 5, 7, 11, 13]);
        assert_eq!(greedy_signs(&[0.1, 0.1, 0.1]), vec![1, -1, 1]);
        assert_eq!(greedy_signs(&[0.1, 0.3, 0.1, 0.1]), vec![1, -1, 1, 1]);
    }

    #[test]
    fn counterexample_pi_halves() {
        let alpha = std::f64::consts::FRAC_PI_2;
        let parts = Partition::uniform(alpha, 8).unwrap();
        let m = synthesize_counterexample(alpha, &parts, 1.0).unwrap();
        assert!(m.coefficients().iter().all(|&a| a > 0.5 && a < 2.0));
        assert!((m.log_variation() - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let d = m.reflection_profile();
        for (dk, tk) in d.coefficients().iter().zip(parts.parts()) {
            assert!((dk.abs() - tk.tanh()).abs() < 1e-14);
        }
        let meta = m.synthesis().unwrap();
        assert_eq!(meta.signs.len(), 8);
        for (lambda, p) in d.generators().iter().zip(primes(7)) {
            assert!((lambda - (p as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn counterexample_pi() {
        let alpha = std::f64::consts::PI;
        let parts = Partition::uniform(alpha, 16).unwrap();
        let m = synthesize_counterexample(alpha, &parts, 0.5).unwrap();
        assert!(m.coefficients().iter().all(|&a| a > 0.5 && a < 2.0));
        assert!((m.log_variation() - 4.0 * alpha).abs() < 1e-10);
    }

    #[test]
    fn counterexample_rejects_coarse_partition() {
        let alpha = std::f64::consts::FRAC_PI_2;
        let parts = Partition::uniform(alpha, 1).unwrap();
        assert!(matches!(
            synthesize_counterexample(alpha, &parts, 1.0),
            Err(Error::PartTooLarge { index: 0, .. })
        ));
    }
}
