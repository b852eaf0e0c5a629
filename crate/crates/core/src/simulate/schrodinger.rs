//! Crank–Nicolson solver for `i u_t + ∂_x(a ∂_x u) = 0`.
//!
//! Cell-centred grid, harmonic-mean face coefficients and homogeneous
//! Dirichlet ends. Each step applies the unitary Cayley map
//! `(I - iθL)^{-1}(I + iθL)` and then a multiplicative sponge
//! `exp(-σ(x) dt)` outside `[-half_width, half_width]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::LaminarMedium;

/// Minimum cells across every finite layer.
pub const MIN_CELLS_PER_LAYER: f64 = 16.0;
/// Largest `a_max dt / dx²` before a quality warning is raised.
pub const QUALITY_LIMIT: f64 = 25.0;
/// Largest accepted ratio of the edge amplitude to the interior peak.
pub const SPONGE_TOLERANCE: f64 = 1e-8;
/// Per-step tolerance on the relative change of the discrete L² norm.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    /// `exp(-(x - centre)² / (4 beta))`.
    Gaussian { centre: f64, beta: f64 },
    /// Piecewise-linear interpolation, zero outside the samples.
    Samples {
        positions: Vec<f64>,
        values: Vec<Complex64>,
    },
}

impl InitialProfile {
    pub fn gaussian(centre: f64, beta: f64) -> Self {
        Self::Gaussian { centre, beta }
    }

    pub fn value(&self, x: f64) -> Complex64 {
        match self {
            Self::Gaussian { centre, beta } => {
                Complex64::new((-(x - centre).powi(2) / (4.0 * beta)).exp(), 0.0)
            }
            Self::Samples { positions, values } => {
                let i = positions.partition_point(|&p| p <= x);
                if i == 0 || i == positions.len() {
                    return if positions.last() == Some(&x) {
                        values[values.len() - 1]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
                let (x0, x1) = (positions[i - 1], positions[i]);
                let w = (x - x0) / (x1 - x0);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { centre, beta } => {
                if !(centre.is_finite() && *beta > 0.0 && beta.is_finite()) {
                    return Err(Error::Precondition("gaussian needs a finite centre and beta > 0".into()));
                }
            }
            Self::Samples { positions, values } => {
                if positions.len() != values.len() || positions.len() < 2 {
                    return Err(Error::Precondition("samples need matching positions and values".into()));
                }
                if positions.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::Precondition("sample positions must increase".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerConfig {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    /// The measured region is `[-half_width, half_width]`.
    pub half_width: f64,
    pub sponge_width: f64,
    /// Peak damping rate; the profile rises quadratically into the sponge.
    pub sponge_strength: f64,
    /// Steps between snapshots.
    pub snapshot_every: usize,
    pub keep_fields: bool,
}

impl Default for SchrodingerConfig {
    fn default() -> Self {
        Self {
            dx: 0.02,
            dt: 0.002,
            t_final: 10.0,
            half_width: 40.0,
            sponge_width: 80.0,
            sponge_strength: 60.0,
            snapshot_every: 50,
            keep_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerRun {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Cell centres of the measured region.
    pub positions: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    /// `‖u(t)‖_∞` over the measured region.
    pub sup_norms: Vec<f64>,
    /// Discrete L² norm at each snapshot.
    pub norm_log: Vec<f64>,
    /// Largest relative L² change over one unitary step.
    pub max_step_drift: f64,
    /// Cumulative L² mass removed by the sponge.
    pub absorbed_mass: f64,
    pub initial_l1: f64,
    /// Largest edge amplitude relative to the interior peak.
    pub boundary_ratio: f64,
    pub sponge_violation: bool,
    pub warnings: Vec<String>,
    /// Measured-region fields at snapshot times when requested.
    pub fields: Vec<Vec<Complex64>>,
}

struct Tridiagonal {
    lower: Vec<Complex64>,
    upper_scaled: Vec<Complex64>,
    pivot_inverse: Vec<Complex64>,
}

impl Tridiagonal {
    /// Factors a matrix with diagonal `diag` and symmetric off-diagonal `off`.
    fn factor(diag: &[Complex64], off: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut upper_scaled = vec![Complex64::new(0.0, 0.0); n];
        let mut pivot_inverse = vec![Complex64::new(0.0, 0.0); n];
        let mut pivot = diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = diag[i] - off[i - 1] * upper_scaled[i - 1];
            }
            if pivot.norm() < 1e-300 {
                return Err(Error::SingularSystem);
            }
            pivot_inverse[i] = pivot.inv();
            if i + 1 < n {
                upper_scaled[i] = off[i] * pivot_inverse[i];
            }
        }
        Ok(Self {
            lower: off.to_vec(),
            upper_scaled,
            pivot_inverse,
        })
    }

    fn solve_in_place(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        rhs[0] *= self.pivot_inverse[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.pivot_inverse[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

fn l2(u: &[Complex64], dx: f64) -> f64 {
    (u.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
}

pub fn schrodinger_evolve(
    medium: &LaminarMedium,
    u0: &InitialProfile,
    config: &SchrodingerConfig,
) -> Result<SchrodingerRun> {
    let SchrodingerConfig {
        dx,
        dt,
        t_final,
        half_width,
        sponge_width,
        sponge_strength,
        snapshot_every,
        keep_fields,
    } = *config;
    u0.validate()?;
    if !(dx > 0.0 && dt > 0.0 && t_final > 0.0 && half_width > 0.0 && sponge_width >= 0.0) {
        return Err(Error::Precondition("grid parameters must be positive".into()));
    }
    if snapshot_every == 0 {
        return Err(Error::Precondition("snapshot_every must be positive".into()));
    }
    let x = medium.interfaces();
    if let (Some(&first), Some(&last)) = (x.first(), x.last()) {
        if first <= -half_width || last >= half_width {
            return Err(Error::Precondition("interfaces must lie inside the measured region".into()));
        }
    }
    if let Some(w) = x.windows(2).map(|w| w[1] - w[0]).find(|w| w / dx < MIN_CELLS_PER_LAYER) {
        return Err(Error::Precondition(format!(
            "layer of width {w} has fewer than {MIN_CELLS_PER_LAYER} cells"
        )));
    }

    let extent = half_width + sponge_width;
    let cells = (2.0 * extent / dx).round() as usize;
    let centre = |i: usize| -extent + (i as f64 + 0.5) * dx;
    let a: Vec<f64> = (0..cells).map(|i| medium.coefficient_at(centre(i))).collect();
    // Face i sits between cells i and i + 1; the end faces see the edge cell.
    let face = |i: usize| 2.0 * a[i] * a[i + 1] / (a[i] + a[i + 1]);
    let faces: Vec<f64> = (0..cells - 1).map(face).collect();
    let theta = dt / (2.0 * dx * dx);
    let iota = Complex64::new(0.0, 1.0);
    let outer = |i: usize| -> f64 {
        let left = if i == 0 { a[0] } else { faces[i - 1] };
        let right = if i + 1 == cells { a[cells - 1] } else { faces[i] };
        left + right
    };
    let diag: Vec<Complex64> = (0..cells).map(|i| 1.0 + iota * theta * outer(i)).collect();
    let off: Vec<Complex64> = faces.iter().map(|&f| -iota * theta * f).collect();
    let system = Tridiagonal::factor(&diag, &off)?;
    let damping: Vec<f64> = (0..cells)
        .map(|i| {
            let depth = centre(i).abs() - half_width;
            if depth > 0.0 && sponge_width > 0.0 {
                (-sponge_strength * (depth / sponge_width).powi(2) * dt).exp()
            } else {
                1.0
            }
        })
        .collect();
    let interior: Vec<usize> = (0..cells).filter(|&i| centre(i).abs() <= half_width).collect();
    let (lo, hi) = (interior[0], interior[interior.len() - 1] + 1);

    let mut warnings = Vec::new();
    let a_max = medium.upper_bound();
    if a_max * dt / (dx * dx) > QUALITY_LIMIT {
        warnings.push(format!(
            "a_max dt / dx^2 = {:.3} exceeds {QUALITY_LIMIT}; phase accuracy may suffer",
            a_max * dt / (dx * dx)
        ));
    }

    let mut u: Vec<Complex64> = (0..cells).map(|i| u0.value(centre(i))).collect();
    let initial_l1 = u.iter().map(|z| z.norm()).sum::<f64>() * dx;
    if !(initial_l1 > 0.0 && initial_l1.is_finite()) {
        return Err(Error::Precondition("initial profile must have positive finite L1 norm".into()));
    }
    let steps = (t_final / dt).round() as usize;
    let mut rhs = vec![Complex64::new(0.0, 0.0); cells];
    let mut run = SchrodingerRun {
        dx,
        dt,
        t_final,
        positions: (lo..hi).map(centre).collect(),
        snapshot_times: Vec::new(),
        sup_norms: Vec::new(),
        norm_log: Vec::new(),
        max_step_drift: 0.0,
        absorbed_mass: 0.0,
        initial_l1,
        boundary_ratio: 0.0,
        sponge_violation: false,
        warnings,
        fields: Vec::new(),
    };
    let mut peak = u[lo..hi].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let record = |run: &mut SchrodingerRun, u: &[Complex64], t: f64| -> f64 {
        let sup = u[lo..hi].iter().map(|z| z.norm()).fold(0.0, f64::max);
        run.snapshot_times.push(t);
        run.sup_norms.push(sup);
        run.norm_log.push(l2(u, dx));
        if keep_fields {
            run.fields.push(u[lo..hi].to_vec());
        }
        sup
    };
    record(&mut run, &u, 0.0);

    let mut norm = l2(&u, dx);
    for step in 1..=steps {
        for i in 0..cells {
            let left = if i == 0 { Complex64::new(0.0, 0.0) } else { u[i - 1] * faces[i - 1] };
            let right = if i + 1 == cells { Complex64::new(0.0, 0.0) } else { u[i + 1] * faces[i] };
            rhs[i] = u[i] + iota * theta * (left + right - u[i] * outer(i));
        }
        system.solve_in_place(&mut rhs);
        std::mem::swap(&mut u, &mut rhs);
        let after = l2(&u, dx);
        if norm > 0.0 {
            run.max_step_drift = run.max_step_drift.max((after - norm).abs() / norm);
        }
        let mut removed = 0.0;
        for (z, &g) in u.iter_mut().zip(&damping) {
            if g < 1.0 {
                let before = z.norm_sqr();
                *z *= g;
                removed += before - z.norm_sqr();
            }
        }
        run.absorbed_mass += removed * dx;
        norm = l2(&u, dx);
        if step % snapshot_every == 0 || step == steps {
            peak = record(&mut run, &u, step as f64 * dt);
        }
        if peak > 0.0 {
            let edge = u[0].norm().max(u[cells - 1].norm());
            run.boundary_ratio = run.boundary_ratio.max(edge / peak);
        }
    }
    if run.max_step_drift > UNITARITY_TOLERANCE {
        run.warnings.push(format!(
            "per-step L2 drift {:.3e} exceeds {UNITARITY_TOLERANCE:e}",
            run.max_step_drift
        ));
    }
    run.sponge_violation = run.boundary_ratio > SPONGE_TOLERANCE;
    Ok(run)
}

/// `(t, √t ‖u(t)‖_∞ / ‖u_0‖_1)` at the positive snapshot times.
pub fn schrodinger_decay_ratio(run: &SchrodingerRun) -> Result<Vec<(f64, f64)>> {
    if run.sponge_violation {
        return Err(Error::Simulation(format!(
            "sponge violation: edge amplitude ratio {:.3e}",
            run.boundary_ratio
        )));
    }
    Ok(run
        .snapshot_times
        .iter()
        .zip(&run.sup_norms)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, &sup)| (t, t.sqrt() * sup / run.initial_l1))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let diag = vec![Complex64::new(4.0, 1.0); 5];
        let off = vec![Complex64::new(1.0, -0.5); 4];
        let m = Tridiagonal::factor(&diag, &off).unwrap();
        let x: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut b: Vec<Complex64> = (0..5)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += off[i - 1] * x[i - 1];
                }
                if i < 4 {
                    v += off[i] * x[i + 1];
                }
                v
            })
            .collect();
        m.solve_in_place(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn samples_interpolate() {
        let p = InitialProfile::Samples {
            positions: vec![0.0, 1.0, 2.0],
            values: vec![Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
        };
        assert_eq!(p.value(0.5).re, 1.0);
        assert_eq!(p.value(-1.0).re, 0.0);
        assert_eq!(p.value(3.0).re, 0.0);
    }

    #[test]
    fn thin_layers_rejected() {
        let m = LaminarMedium::new(vec![1.0, 2.0, 1.0], vec![0.0, 0.1]).unwrap();
        let err = schrodinger_evolve(&m, &InitialProfile::gaussian(0.0, 0.1), &SchrodingerConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn short_free_run_is_unitary() {
        let m = LaminarMedium::new(vec![1.0], vec![]).unwrap();
        let cfg = SchrodingerConfig {
            t_final: 0.2,
            half_width: 10.0,
            sponge_width: 10.0,
            ..SchrodingerConfig::default()
        };
        let run = schrodinger_evolve(&m, &InitialProfile::gaussian(0.0, 0.1), &cfg).unwrap();
        assert!(run.max_step_drift < UNITARITY_TOLERANCE);
        // |u(t)|_∞ = (β² / (β² + t²))^{1/4}
        let t: f64 = 0.2;
        let exact = (0.01 / (0.01 + t * t)).powf(0.25);
        let sup = *run.sup_norms.last().unwrap();
        assert!((sup - exact).abs() < 2e-3 * exact, "{sup} vs {exact}");
    }
}
