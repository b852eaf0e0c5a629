//! The acceptance suite behind `verify-all`.
//!
//! Each criterion returns one PASS/FAIL line. Frozen constants at the top
//! were measured once and are checked for regressions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::time::Instant;

use laminar::medium::synthesize_counterexample;
use laminar::partitions::{f_lower_table, find_heavy_partition, transfer_matrix_norms, DEFAULT_POWER_CAP};
use laminar::resolvent::{q_sequence, verify_tan_bound};
use laminar::simulate::{
    schrodinger_decay_ratio, schrodinger_evolve, wave_dispersion_ratio, wave_ray_trace_probes, InitialProfile,
    SchrodingerConfig, TraceConfig,
};
use laminar::LaminarMedium;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::commands::oracle_rows;

/// Smallest uniform part count whose `f_1(1.0)` lower bound reaches `0.9 tan 1`.
pub const FR_TABLE_PARTS: usize = 20;
/// Part count of the heavy partition for `alpha = π/2`, `N = 10`.
pub const COUNTEREXAMPLE_PARTS: usize = 84;
/// Maxima of the layered decay curves, as printed by `{:.16e}`.
pub const LAYERED_DECAY_MAXIMA: [&str; 5] = [
    "2.9580373316475217e-1",
    "4.7304924755323530e-1",
    "3.6199840853519705e-1",
    "3.3415433381297788e-1",
    "3.8367208755225263e-1",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:>3} {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

pub fn render(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    for r in results {
        let _ = writeln!(out, "{}", r.line());
    }
    out
}

fn timed(id: &'static str, name: &'static str, f: impl FnOnce() -> (bool, String)) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = f();
    CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Attaches a wall-clock limit to a criterion.
fn within(mut r: CriterionResult, limit: f64) -> CriterionResult {
    if r.seconds >= limit {
        r.passed = false;
        let _ = write!(r.detail, "; runtime {:.2}s exceeds {limit}s", r.seconds);
    }
    r
}

/// All criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    let search = Instant::now();
    let counterexample = counterexample_medium();
    let search_seconds = search.elapsed().as_secs_f64();
    let mut out = vec![
        variation_identity(),
        tan_bound(),
        oracle_equivalence(),
        transfer_matrices(),
        fr_table(),
        counterexample_certificate(&counterexample, search_seconds),
        ray_series(),
    ];
    out.extend(wave_dichotomy(counterexample.as_ref().ok()));
    out.push(free_decay());
    out.push(layered_decay());
    out
}

fn random_widths(rng: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(count);
    let mut pos = 0.0;
    for _ in 0..count {
        x.push(pos);
        pos += rng.gen_range(lo..hi);
    }
    x
}

/// Medium with `b_1 = 1` and the given reflection coefficients.
fn medium_from_reflections(d: &[f64], interfaces: Vec<f64>) -> LaminarMedium {
    let mut b = vec![1.0];
    for &dk in d {
        let last = *b.last().expect("nonempty");
        b.push(last * (1.0 - dk) / (1.0 + dk));
    }
    LaminarMedium::from_slowness(&b, interfaces).expect("valid medium")
}

pub fn variation_identity() -> CriterionResult {
    within(
        timed("1", "variation identity", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut worst: f64 = 0.0;
            let mut sandwich = true;
            for _ in 0..200 {
                let n = rng.gen_range(2..=50);
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
                let x = random_widths(&mut rng, n - 1, 0.2, 2.0);
                let m = LaminarMedium::new(a, x).expect("valid medium");
                let var_log = m.log_variation();
                let identity = 4.0 * m.reflection_profile().arctanh_sum();
                worst = worst.max((identity - var_log).abs() / var_log);
                let var = m.coefficient_variation();
                let slack = 1e-12 * var_log;
                sandwich &= var / m.upper_bound() <= var_log + slack && var_log <= var / m.lower_bound() + slack;
            }
            (
                worst <= 1e-12 && sandwich,
                format!("max relative deviation {worst:.3e}, sandwich {sandwich}"),
            )
        }),
        1.0,
    )
}

pub fn tan_bound() -> CriterionResult {
    within(
        timed("2", "tan bound", || {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let media: Vec<LaminarMedium> = (0..100)
                .map(|_| {
                    let n = rng.gen_range(2..=8);
                    let total = rng.gen_range(0.05..FRAC_PI_2 - 0.1);
                    let weights: Vec<f64> = (1..n).map(|_| rng.gen_range(0.1..1.0)).collect();
                    let sum: f64 = weights.iter().sum();
                    let d: Vec<f64> = weights
                        .iter()
                        .map(|w| {
                            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                            sign * (total * w / sum).tanh()
                        })
                        .collect();
                    let x = random_widths(&mut rng, n - 1, 0.3, 1.5);
                    medium_from_reflections(&d, x)
                })
                .collect();
            let reports: Vec<_> = media
                .par_iter()
                .map(|m| verify_tan_bound(&m.reflection_profile(), 30))
                .collect();
            let mut failures = 0;
            let mut tightest = f64::INFINITY;
            for r in &reports {
                match r {
                    Ok(r) if r.norm.upper <= r.bound + 1e-6 => tightest = tightest.min(r.bound - r.norm.upper),
                    _ => failures += 1,
                }
            }
            (
                failures == 0,
                format!("{failures} of 100 above the bound; smallest margin {tightest:.3e}"),
            )
        }),
        30.0,
    )
}

pub fn oracle_equivalence() -> CriterionResult {
    within(
        timed("3", "closed form vs dense solve", || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut media = Vec::new();
            for n in 2..=6 {
                for _ in 0..3 {
                    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..1.25)).collect();
                    let x = random_widths(&mut rng, n - 1, 0.3, 0.9);
                    let shift = x.last().copied().unwrap_or(0.0) / 2.0;
                    let x = x.into_iter().map(|v| v - shift).collect();
                    media.push(LaminarMedium::from_slowness(&b, x).expect("valid medium"));
                }
            }
            let mut rows = 0;
            let mut flagged = 0;
            let mut worst: f64 = 0.0;
            let mut worst_det: f64 = 0.0;
            for m in &media {
                let w: Vec<f64> = (0..20).map(|_| rng.gen_range(0.1..=20.0)).collect();
                match oracle_rows(m, &w) {
                    Ok(checks) => {
                        for c in checks {
                            rows += 1;
                            if c.flagged {
                                flagged += 1;
                                continue;
                            }
                            worst = worst.max(c.rel_error);
                            worst_det = worst_det.max(c.det_rel_error);
                        }
                    }
                    Err(e) => return (false, format!("error: {e}")),
                }
            }
            (
                flagged == 0 && worst <= 1e-9 && worst_det <= 1e-10,
                format!("{rows} rows, {flagged} ill-conditioned, max c_2n error {worst:.3e}, max det error {worst_det:.3e}"),
            )
        }),
        10.0,
    )
}

pub fn transfer_matrices() -> CriterionResult {
    timed("4", "transfer matrix norms", || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst: f64 = 0.0;
        let mut strict = true;
        let mut units = true;
        for _ in 0..50 {
            let len = rng.gen_range(1..=10);
            let d: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..0.95)).collect();
            let t = match transfer_matrix_norms(&d) {
                Ok(t) => t,
                Err(e) => return (false, format!("error: {e}")),
            };
            worst = worst.max(t.identity_residual() / t.product_plus);
            let sum: f64 = d.iter().map(|v| v.atanh()).sum();
            strict &= t.even_part() < sum.cosh() && t.odd_part() < sum.sinh();
            units &= t.top_coefficient_a == 1.0 && t.constant_term_d == 1.0 && t.nonnegative;
        }
        (
            worst <= 1e-12 && strict && units,
            format!("max relative residual {worst:.3e}, strict bounds {strict}, unit coefficients {units}"),
        )
    })
}

pub fn fr_table() -> CriterionResult {
    timed("5", "f_1 table at x = 1", || {
        let n_max = FR_TABLE_PARTS.max(40);
        let rows = match f_lower_table(1.0, 1, n_max, DEFAULT_POWER_CAP) {
            Ok(r) => r,
            Err(e) => return (false, format!("error: {e}")),
        };
        let goal = 0.9 * 1f64.tan();
        let first = rows.iter().find(|r| r.norm.lower >= goal).map(|r| r.parts);
        let monotone = rows.windows(2).all(|w| w[1].norm.lower > w[0].norm.lower);
        let capped = rows.iter().all(|r| r.norm.upper <= 1f64.tan() + 1e-4);
        let frozen = first == Some(FR_TABLE_PARTS);
        (
            monotone && capped && frozen,
            format!(
                "first n reaching {goal:.4}: {first:?} (frozen {FR_TABLE_PARTS}), strictly increasing {monotone}, uppers below tan(1) + 1e-4 {capped}"
            ),
        )
    })
}

fn counterexample_medium() -> Result<(LaminarMedium, f64, usize), String> {
    let heavy = find_heavy_partition(FRAC_PI_2, 10.0, DEFAULT_POWER_CAP, 5, 400).map_err(|e| e.to_string())?;
    let m = synthesize_counterexample(FRAC_PI_2, &heavy.partition, 1.0).map_err(|e| e.to_string())?;
    Ok((m, heavy.norm.lower, heavy.partition.len()))
}

type Counterexample = Result<(LaminarMedium, f64, usize), String>;

/// `search_seconds` is the time spent building `found`.
pub fn counterexample_certificate(found: &Counterexample, search_seconds: f64) -> CriterionResult {
    let found = found.clone();
    let mut r = timed("6", "counterexample certificate", || match found {
            Err(e) => (false, format!("error: {e}")),
            Ok((m, lower, parts)) => {
                let in_range = m.lower_bound() > 0.5 && m.upper_bound() < 2.0;
                let variation = m.log_variation();
                let variation_ok = (variation - 2.0 * PI).abs() <= 1e-10;
                let ok = lower >= 10.0 && in_range && variation_ok && parts == COUNTEREXAMPLE_PARTS;
                (
                    ok,
                    format!(
                        "{parts} parts (frozen {COUNTEREXAMPLE_PARTS}), lower bound {lower:.6}, a in [{:.4}, {:.4}], Var(log a) - 2pi = {:.3e}",
                        m.lower_bound(),
                        m.upper_bound(),
                        variation - 2.0 * PI
                    ),
                )
            }
        });
    r.seconds += search_seconds;
    within(r, 300.0)
}

pub fn ray_series() -> CriterionResult {
    timed("7", "ray/series cross-validation", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..3.0)).collect();
        let x = vec![0.0, rng.gen_range(0.5..1.5)];
        let m = LaminarMedium::new(a, x.clone()).expect("valid medium");
        let (y, p) = (x[1] + 0.4, x[1] + 0.9);
        let profile = m.reflection_profile();
        let b = m.slowness()[2];
        let q = match q_sequence(&profile, 40) {
            Ok(mut q) => q.pop().expect("three layers"),
            Err(e) => return (false, format!("error: {e}")),
        };
        let base = b * (p + y - 2.0 * x[1]);
        let lambda = profile.generators()[0];
        let mut series: Vec<(f64, f64)> = q
            .terms()
            .map(|(j, c)| (base + j[0] as f64 * lambda, -0.5 * b * c.re))
            .collect();
        series.sort_by(|u, v| u.0.total_cmp(&v.0));
        let cfg = TraceConfig {
            t_max: series[4].0 + 1e-6,
            floor: 1e-15,
            ..TraceConfig::default()
        };
        let report = match wave_ray_trace_probes(&m, y, &[p], &cfg) {
            Ok(r) => r,
            Err(e) => return (false, format!("error: {e}")),
        };
        let direct = b * (p - y);
        let echoes: Vec<(f64, f64)> = report.trains[0]
            .forward()
            .filter(|(t, _)| (t - direct).abs() > 1e-9)
            .copied()
            .collect();
        let mut worst_t: f64 = 0.0;
        let mut worst_w: f64 = 0.0;
        for (s, e) in series.iter().zip(&echoes).take(5) {
            worst_t = worst_t.max((s.0 - e.0).abs());
            worst_w = worst_w.max((s.1 - e.1).abs());
        }
        let ok = echoes.len() >= 5 && worst_t <= 1e-10 && worst_w <= 1e-10 && report.energy_residual <= 1e-12;
        (
            ok,
            format!(
                "{} echoes, max delay error {worst_t:.3e}, max weight error {worst_w:.3e}, energy residual {:.3e}",
                echoes.len(),
                report.energy_residual
            ),
        )
    })
}

/// Sources and probes for the dispersion runs.
fn wave_probes(m: &LaminarMedium) -> (f64, Vec<f64>) {
    let x = m.interfaces();
    let mut probes = vec![x[0] - 0.5];
    probes.extend(x.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(x[x.len() - 1] + 0.5);
    (x[0] - 0.25, probes)
}

pub fn wave_dichotomy(counterexample: Option<&(LaminarMedium, f64, usize)>) -> Vec<CriterionResult> {
    let small = timed("8a", "wave plateau, small variation", || {
        let t = 0.1f64.tanh();
        let m = medium_from_reflections(&[t, -t, t], vec![0.0, 1.0, 1.0 + 2f64.sqrt()]);
        let (y, probes) = wave_probes(&m);
        let run = |t_max: f64| {
            let cfg = TraceConfig {
                t_max,
                floor: 1e-14,
                ..TraceConfig::default()
            };
            wave_dispersion_ratio(&m, y, &probes, &cfg)
        };
        match (run(40.0), run(80.0)) {
            (Ok(half), Ok(full)) => {
                let growth = full.ratio / half.ratio - 1.0;
                (
                    growth < 0.01 && !full.budget_exhausted,
                    format!(
                        "Var(log a)/4 = {:.3}, ratio {:.6} at t_max 40, {:.6} at 80, growth {:.3e}",
                        m.log_variation() / 4.0,
                        half.ratio,
                        full.ratio,
                        growth
                    ),
                )
            }
            (Err(e), _) | (_, Err(e)) => (false, format!("error: {e}")),
        }
    });
    let large = timed("8b", "wave growth, counterexample", || {
        let Some((m, _, _)) = counterexample else {
            return (false, "counterexample unavailable".into());
        };
        let (y, probes) = wave_probes(m);
        let goal = m.lower_bound().powi(-2) + 5.0;
        let mut detail = String::new();
        let mut best: f64 = 0.0;
        let mut exceeded = false;
        for t_max in [250.0, 500.0, 1000.0, 2000.0] {
            let cfg = TraceConfig {
                t_max,
                floor: 1e-6,
                time_resolution: 1e-10,
                event_budget: 20_000_000,
                keep_events: false,
            };
            match wave_dispersion_ratio(m, y, &probes, &cfg) {
                Ok(r) => {
                    let _ = write!(detail, "t {t_max}: {:.4}{}; ", r.ratio, if r.budget_exhausted { " (budget)" } else { "" });
                    best = best.max(r.ratio);
                    if r.ratio > goal && !r.budget_exhausted {
                        exceeded = true;
                    }
                    if r.budget_exhausted {
                        break;
                    }
                }
                Err(e) => return (false, format!("error: {e}")),
            }
        }
        let _ = write!(detail, "target m^-2 + 5 = {goal:.4}, best {best:.4}");
        (exceeded, detail)
    });
    vec![small, large]
}

fn homogeneous(a: f64) -> LaminarMedium {
    LaminarMedium::new(vec![a], vec![]).expect("valid medium")
}

pub fn free_decay() -> CriterionResult {
    timed("9", "free Schrodinger decay", || {
        let cases = [(1.0, (4.0 * PI).powf(-0.5)), (4.0, (16.0 * PI).powf(-0.5))];
        let runs: Vec<_> = cases
            .par_iter()
            .map(|&(a, limit)| {
                let cfg = SchrodingerConfig::default();
                let run = schrodinger_evolve(&homogeneous(a), &InitialProfile::gaussian(0.0, 0.1), &cfg)?;
                let table = schrodinger_decay_ratio(&run)?;
                let worst = table
                    .iter()
                    .filter(|(t, _)| (1.0..=10.0).contains(t))
                    .map(|(_, r)| (r / limit - 1.0).abs())
                    .fold(0.0, f64::max);
                Ok::<_, laminar::Error>((a, worst, run.max_step_drift))
            })
            .collect();
        let mut ok = true;
        let mut detail = String::new();
        for r in runs {
            match r {
                Ok((a, worst, drift)) => {
                    ok &= worst <= 0.02 && drift <= 1e-10;
                    let _ = write!(detail, "a = {a}: max deviation {worst:.3e}, step drift {drift:.1e}; ");
                }
                Err(e) => {
                    ok = false;
                    let _ = write!(detail, "error: {e}; ");
                }
            }
        }
        (ok, detail.trim_end_matches("; ").to_string())
    })
}

fn layered_media() -> Vec<LaminarMedium> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    (0..5)
        .map(|_| loop {
            let n = rng.gen_range(3..=5);
            let log_a: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let a: Vec<f64> = log_a.iter().map(|v: &f64| v.exp()).collect();
            let x: Vec<f64> = random_widths(&mut rng, n - 1, 0.5, 2.5)
                .into_iter()
                .map(|v| v - 2.0)
                .collect();
            let m = LaminarMedium::new(a, x).expect("valid medium");
            if m.log_variation() / 4.0 <= 1.2 {
                break m;
            }
        })
        .collect()
}

fn layered_maximum(m: &LaminarMedium) -> laminar::Result<f64> {
    let cfg = SchrodingerConfig {
        t_final: 20.0,
        ..SchrodingerConfig::default()
    };
    let run = schrodinger_evolve(m, &InitialProfile::gaussian(0.0, 0.1), &cfg)?;
    let table = schrodinger_decay_ratio(&run)?;
    Ok(table
        .iter()
        .filter(|(t, _)| (1.0..=20.0).contains(t))
        .map(|p| p.1)
        .fold(0.0, f64::max))
}

pub fn layered_decay() -> CriterionResult {
    timed("10", "layered Schrodinger boundedness", || {
        let media = layered_media();
        let first: Vec<_> = media.par_iter().map(layered_maximum).collect();
        let second: Vec<_> = media.par_iter().map(layered_maximum).collect();
        let mut ok = true;
        let mut detail = String::new();
        for (i, (a, b)) in first.iter().zip(&second).enumerate() {
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let printed = format!("{a:.16e}");
                    let reproducible = a.to_bits() == b.to_bits();
                    let frozen = printed == LAYERED_DECAY_MAXIMA[i];
                    ok &= a.is_finite() && reproducible && frozen;
                    let _ = write!(
                        detail,
                        "[{i}] Var/4 {:.3} max {printed}{}{}; ",
                        media[i].log_variation() / 4.0,
                        if reproducible { "" } else { " NOT REPRODUCED" },
                        if frozen { "" } else { " (differs from frozen)" }
                    );
                }
                (Err(e), _) | (_, Err(e)) => {
                    ok = false;
                    let _ = write!(detail, "[{i}] error: {e}; ");
                }
            }
        }
        (ok, detail.trim_end_matches("; ").to_string())
    })
}
