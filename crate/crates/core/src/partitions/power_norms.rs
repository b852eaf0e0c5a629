//! Norms of powers of `E(d; q)` for long coefficient chains.
//!
//! Writing `z_1 = d_1` and `z_{k+1} = β(d_{k+1})(q_k z_k)` with a fresh
//! generator `q_k` at every step, the terms `q_k^l z_k^l` of distinct `l` have
//! disjoint supports. Hence
//!
//! ```text
//! ‖z_{k+1}^m‖ = Σ_l |[w^l] β(d_{k+1})(w)^m| · ‖z_k^l‖,
//! ```
//!
//! a transfer on the vector of power norms that never expands multi-indices.
//! Truncating at `l <= K` drops nonnegative terms only, so the truncated
//! values are lower bounds. Upper bounds add the majorant tail
//! `Σ_{l>K} [w^l] β̂(w)^m · u^l` with `β̂(w) = |d| + (1-d²) w / (1 - |d| w)`
//! and `u` an upper bound for `‖z_k‖`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::series::NormInterval;

/// Brackets for `‖E^l‖`, `l = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNorms {
    brackets: Vec<NormInterval>,
}

impl PowerNorms {
    pub fn max_power(&self) -> usize {
        self.brackets.len() - 1
    }

    /// Bracket for `‖E^r‖`.
    pub fn bracket(&self, r: usize) -> Option<NormInterval> {
        self.brackets.get(r).copied()
    }

    pub fn brackets(&self) -> &[NormInterval] {
        &self.brackets
    }
}

struct Transfer {
    exact: Vec<Vec<f64>>,
    majorant: Vec<Vec<f64>>,
}

fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().take(len - i).enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Transfer {
    fn new(d: f64, k: usize) -> Self {
        let len = k + 1;
        let one_minus = 1.0 - d * d;
        // β(d)(w) and its majorant as power series in w.
        let mut f = vec![0.0; len];
        let mut g = vec![0.0; len];
        f[0] = d;
        g[0] = d.abs();
        let mut signed = one_minus;
        let mut plain = one_minus;
        for j in 1..len {
            f[j] = signed;
            g[j] = plain;
            signed *= -d;
            plain *= d.abs();
        }
        let mut exact = Vec::with_capacity(len);
        let mut majorant = Vec::with_capacity(len);
        let mut p = vec![0.0f64; len];
        let mut ph = vec![0.0; len];
        p[0] = 1.0;
        ph[0] = 1.0;
        for _ in 0..len {
            exact.push(p.iter().map(|c| c.abs()).collect());
            majorant.push(ph.clone());
            p = convolve(&p, &f, len);
            ph = convolve(&ph, &g, len);
        }
        Self { exact, majorant }
    }
}

/// Computes brackets for `‖E(d; q)^l‖`, `l = 0..=max_power`, where
/// `E(d; q) = β(d_n) α(q_{n-1}) ⋯ β(d_2) α(q_1) (d_1)`.
///
/// Lower bounds are rigorous up to a propagated rounding allowance. Upper
/// bounds become infinite once the contraction `|d_{k+1}| ‖z_k‖ < 1` fails.
pub fn power_norms(coefficients: &[f64], max_power: usize) -> Result<PowerNorms> {
    if max_power == 0 {
        return Err(Error::OutOfRange {
            name: "max_power",
            value: 0.0,
            reason: "must be positive",
        });
    }
    if let Some(&d) = coefficients.iter().find(|d| !(d.abs() < 1.0)) {
        return Err(Error::OutOfRange {
            name: "reflection coefficient",
            value: d,
            reason: "|d| must be < 1",
        });
    }
    let len = max_power + 1;
    let gamma = 4.0 * (len as f64 + 1.0) * f64::EPSILON;
    let Some((&first, rest)) = coefficients.split_first() else {
        let mut brackets = vec![NormInterval::exact(0.0); len];
        brackets[0] = NormInterval::exact(1.0);
        return Ok(PowerNorms { brackets });
    };

    let mut lower: Vec<f64> = (0..len).map(|l| first.abs().powi(l as i32)).collect();
    let mut upper = lower.clone();
    let mut rounding: Vec<f64> = lower
        .iter()
        .enumerate()
        .map(|(l, v)| l as f64 * f64::EPSILON * v)
        .collect();
    let mut cache: HashMap<u64, Transfer> = HashMap::new();

    for &d in rest {
        let transfer = cache
            .entry(d.to_bits())
            .or_insert_with(|| Transfer::new(d, max_power));
        let u = upper[1];
        let contracting = u.is_finite() && d.abs() * u < 1.0;
        let hat_u = if contracting {
            d.abs() + (1.0 - d * d) * u / (1.0 - d.abs() * u)
        } else {
            f64::INFINITY
        };
        let mut next_lower = vec![0.0; len];
        let mut next_upper = vec![0.0; len];
        let mut next_rounding = vec![0.0; len];
        for m in 0..len {
            let row = &transfer.exact[m];
            let hat = &transfer.majorant[m];
            let mut lo = 0.0;
            let mut hi = 0.0;
            let mut rd = 0.0;
            for l in 0..len {
                lo += row[l] * lower[l];
                hi += row[l] * upper[l];
                rd += row[l] * rounding[l] + gamma * hat[l] * lower[l];
            }
            next_lower[m] = lo;
            next_rounding[m] = rd;
            next_upper[m] = if contracting {
                // Σ_{l>K} [w^l] β̂^m u^l = β̂(u)^m - Σ_{l<=K} [w^l] β̂^m u^l
                let full = hat_u.powi(m as i32);
                let mut head = 0.0;
                let mut up = 1.0;
                for &h in hat.iter() {
                    head += h * up;
                    up *= u;
                }
                hi + (full - head).max(0.0) + gamma * full
            } else {
                f64::INFINITY
            };
        }
        // ‖z^m‖ <= ‖z‖^m
        let base = next_upper[1];
        for (m, v) in next_upper.iter_mut().enumerate().skip(2) {
            *v = v.min(base.powi(m as i32) * (1.0 + gamma * m as f64));
        }
        lower = next_lower;
        upper = next_upper;
        rounding = next_rounding;
    }

    let brackets = lower
        .iter()
        .zip(&upper)
        .zip(&rounding)
        .map(|((&lo, &hi), &rd)| {
            let lo_safe = (lo - rd).max(0.0);
            NormInterval::new(lo_safe, hi.max(lo_safe) + rd)
        })
        .collect();
    Ok(PowerNorms { brackets })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coefficient_is_exact() {
        let p = power_norms(&[0.5], 8).unwrap();
        assert!((p.bracket(0).unwrap().lower - 1.0).abs() < 1e-13);
        let b = p.bracket(3).unwrap();
        assert!(b.contains(0.125, 0.0));
        assert!(b.width() < 1e-14);
    }

    #[test]
    fn two_equal_coefficients_give_one() {
        // (d + d q) / (1 + d² q) with d = 1/2 has norm d + d(1-d²)/(1-d²) = 1.
        let p = power_norms(&[0.5, 0.5], 60).unwrap();
        let b = p.bracket(1).unwrap();
        assert!(b.lower <= 1.0 + 1e-15 && 1.0 <= b.upper + 1e-15);
        assert!(b.width() < 1e-12);
    }

    #[test]
    fn empty_chain() {
        let p = power_norms(&[], 3).unwrap();
        assert!(p.bracket(0).unwrap().contains(1.0, 0.0));
        assert_eq!(p.bracket(2).unwrap().upper, 0.0);
    }
}
