//! Arrivals of the characteristics solver against the reflection series.
//!
//! With Dirac data at `y` and a probe `p > y`, both in the last layer, the
//! echoes from the stack arrive at `b_n (p + y - 2 x_{n-1}) + Σ j_i λ_i` with
//! time weight `-(b_n / 2) [q^j] Q_n`.

use laminar::resolvent::q_sequence;
use laminar::simulate::{wave_ray_trace, TraceConfig};
use laminar::LaminarMedium;

fn predicted(medium: &LaminarMedium, y: f64, p: f64, cap: u32) -> Vec<(f64, f64)> {
    let profile = medium.reflection_profile();
    let q = q_sequence(&profile, cap).unwrap().pop().unwrap();
    let n = medium.layer_count();
    let b = medium.slowness()[n - 1];
    let base = b * (p + y - 2.0 * medium.interfaces()[n - 2]);
    let lambda = profile.generators();
    let mut out: Vec<(f64, f64)> = q
        .terms()
        .map(|(j, c)| {
            let delay: f64 = j.iter().zip(lambda).map(|(&e, l)| e as f64 * l).sum();
            (base + delay, -0.5 * b * c.re)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn echoes(medium: &LaminarMedium, y: f64, p: f64, t_max: f64) -> Vec<(f64, f64)> {
    let cfg = TraceConfig {
        t_max,
        floor: 1e-15,
        ..TraceConfig::default()
    };
    let train = wave_ray_trace(medium, y, p, &cfg).unwrap();
    let b = *medium.slowness().last().unwrap();
    let direct = b * (p - y);
    train
        .forward()
        .filter(|(t, _)| (t - direct).abs() > 1e-9)
        .copied()
        .collect()
}

fn assert_matches(medium: &LaminarMedium, y: f64, p: f64, count: usize) {
    let series = predicted(medium, y, p, 40);
    let horizon = series[count - 1].0 + 1e-6;
    let rays = echoes(medium, y, p, horizon);
    assert!(rays.len() >= count, "only {} echoes", rays.len());
    for (k, ((ts, ws), (tr, wr))) in series.iter().zip(&rays).take(count).enumerate() {
        assert!((ts - tr).abs() < 1e-10, "arrival {k}: {ts} vs {tr}");
        assert!((ws - wr).abs() < 1e-10, "weight {k}: {ws} vs {wr}");
    }
}

#[test]
fn three_layers_first_five_echoes() {
    let m = LaminarMedium::new(vec![1.0, 0.36, 2.25], vec![0.0, 0.7]).unwrap();
    assert_matches(&m, 1.3, 2.1, 5);
}

#[test]
fn four_layers_incommensurate_widths() {
    let m = LaminarMedium::new(vec![0.5, 2.0, 0.8, 1.7], vec![0.0, 0.61, 1.0 + 2f64.sqrt() / 3.0]).unwrap();
    let y = 2.0;
    let p = 2.4;
    let series = predicted(&m, y, p, 40);
    let horizon = series[11].0 + 1e-6;
    let rays = echoes(&m, y, p, horizon);
    for (k, ((ts, ws), (tr, wr))) in series.iter().zip(&rays).take(12).enumerate() {
        assert!((ts - tr).abs() < 1e-10, "arrival {k}: {ts} vs {tr}");
        assert!((ws - wr).abs() < 1e-10, "weight {k}: {ws} vs {wr}");
    }
}

#[test]
fn arrivals_lie_on_round_trip_lattice() {
    let m = LaminarMedium::new(vec![1.0, 4.0, 0.25, 1.0], vec![0.0, 0.5, 1.25]).unwrap();
    let profile = m.reflection_profile();
    let lambda = profile.generators().to_vec();
    let y = 1.5;
    let p = 1.75;
    let b = m.slowness()[3];
    let base = b * (p + y - 2.0 * 1.25);
    for (t, _) in echoes(&m, y, p, 12.0) {
        let rest = t - base;
        let mut found = false;
        for j in 0..40 {
            let r = rest - j as f64 * lambda[0];
            if r < -1e-9 {
                break;
            }
            let k = (r / lambda[1]).round();
            if (r - k * lambda[1]).abs() < 1e-9 {
                found = true;
                break;
            }
        }
        assert!(found, "arrival {t} is off the lattice");
    }
}
