//! Exact characteristics solver for `v_tt = ∂_x(a ∂_x v)` with Dirac data.
//!
//! The datum `v(0) = δ_y`, `v_t(0) = 0` splits into two pulses. At a fixed
//! probe a pulse crossing layer `k` contributes `w δ(t - t_0)` with time
//! weight `w`; the initial pulses carry `b_k / 2` each. A pulse meeting an
//! interface from layer `k` splits into a reflected part `r w` and a
//! transmitted part `τ w`, with `r = (Z_k - Z_{k+1}) / (Z_k + Z_{k+1})`,
//! `τ = 2 Z_k / (Z_k + Z_{k+1})` and impedance `Z = 1/b`.
//!
//! Times are integer multiples of `time_resolution`, so arrivals along
//! different paths with the same multiset of layer crossings merge exactly.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::medium::LaminarMedium;

/// Budgets and resolution of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub t_max: f64,
    /// Pulses with weight below `floor * b_k / 2` of the source are dropped.
    pub floor: f64,
    pub time_resolution: f64,
    /// Maximum number of interface events processed.
    pub event_budget: usize,
    /// Store individual arrivals; otherwise only their total weight.
    pub keep_events: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            floor: 1e-12,
            time_resolution: 1e-12,
            event_budget: 10_000_000,
            keep_events: true,
        }
    }
}

/// A travelling delta pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub layer: usize,
    pub position: f64,
    /// `+1` rightward, `-1` leftward.
    pub direction: i8,
    /// Time weight at a fixed probe.
    pub amplitude: f64,
    pub birth_time: f64,
}

/// Arrivals at one probe for `t` in `[-t_max, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseTrain {
    pub probe: f64,
    /// `(time, weight)`, sorted by time, symmetric under `t -> -t`. Empty
    /// unless the trace kept events.
    pub events: Vec<(f64, f64)>,
    /// `Σ |weight|` over the mirrored events.
    pub weight: f64,
    /// Total weight of pruned pulses.
    pub truncation_mass: f64,
    /// Weight still queued when the event budget ran out.
    pub pending_mass: f64,
    pub budget_exhausted: bool,
}

impl ImpulseTrain {
    /// `∫ |v(t, probe)| dt` over the recorded window.
    pub fn total_weight(&self) -> f64 {
        self.weight
    }

    /// Recorded weight plus the mirrored unresolved weight. Descendants of
    /// a pruned pulse can interfere at the probe, so this is an estimate.
    pub fn upper_estimate(&self) -> f64 {
        self.total_weight() + 2.0 * (self.truncation_mass + self.pending_mass)
    }

    /// Events with `t >= 0`.
    pub fn forward(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.events.iter().filter(|(t, _)| *t >= 0.0)
    }
}

/// Statistics shared by all probes of one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub trains: Vec<ImpulseTrain>,
    pub processed_events: usize,
    /// Largest `|Z_k r² + Z_{k+1} τ² - Z_k| / Z_k` over all splits.
    pub energy_residual: f64,
    pub budget_exhausted: bool,
}

/// Interface events between flushes of settled arrivals.
const SETTLE_INTERVAL: usize = 1 << 16;

struct Tracer<'a> {
    medium: &'a LaminarMedium,
    sorted: Vec<f64>,
    order: Vec<usize>,
    tick: f64,
    horizon: i64,
    floor: f64,
    transit: Vec<i64>,
    arrivals: Vec<BTreeMap<i64, f64>>,
    settled: Vec<Settled>,
    keep_events: bool,
    queue: BinaryHeap<Reverse<(i64, usize)>>,
    pending: FxHashMap<(i64, usize), [f64; 2]>,
    truncated: f64,
}

#[derive(Clone, Default)]
struct Settled {
    weight: f64,
    forward: Vec<(i64, f64)>,
}

impl<'a> Tracer<'a> {
    /// Moves arrivals before `tick` out of the merge maps. Later pulses
    /// cannot reach a probe before the tick of the event that spawns them.
    fn settle(&mut self, tick: i64) {
        for (map, settled) in self.arrivals.iter_mut().zip(&mut self.settled) {
            let rest = map.split_off(&tick);
            for (t, w) in std::mem::replace(map, rest) {
                if w == 0.0 {
                    continue;
                }
                settled.weight += if t > 0 { 2.0 * w.abs() } else { w.abs() };
                if self.keep_events {
                    settled.forward.push((t, w));
                }
            }
        }
    }

    fn ticks(&self, duration: f64) -> i64 {
        (duration / self.tick).round() as i64
    }

    /// Records probe crossings for a pulse leaving `start` in `layer` at
    /// `start_tick` and moving in `direction` up to `end`.
    fn sweep(&mut self, layer: usize, start: f64, end: f64, start_tick: i64, weight: f64) {
        let (lo, hi) = if start <= end { (start, end) } else { (end, start) };
        let first = self.sorted.partition_point(|&p| p <= lo);
        let last = self.sorted.partition_point(|&p| p < hi);
        let b = self.medium.slowness()[layer];
        for idx in first..last {
            let p = self.sorted[idx];
            let t = start_tick + self.ticks(b * (p - start).abs());
            if t <= self.horizon {
                *self.arrivals[self.order[idx]].entry(t).or_default() += weight;
            }
        }
    }

    /// Propagates `pulse`, born at `start_tick`, to its next interface.
    fn launch(&mut self, pulse: Pulse, start_tick: i64) {
        let Pulse {
            layer,
            position: start,
            direction,
            amplitude: weight,
            ..
        } = pulse;
        let rightward = direction > 0;
        if weight.abs() < self.floor {
            self.truncated += weight.abs();
            return;
        }
        let x = self.medium.interfaces();
        let n = self.medium.layer_count();
        let target = if rightward {
            (layer + 1 < n).then_some(layer)
        } else {
            (layer > 0).then(|| layer - 1)
        };
        match target {
            None => {
                let end = if rightward { f64::INFINITY } else { f64::NEG_INFINITY };
                self.sweep(layer, start, end, start_tick, weight);
            }
            Some(i) => {
                let end = x[i];
                self.sweep(layer, start, end, start_tick, weight);
                let width_ticks = if start == end {
                    0
                } else if (layer > 0 && start == x[layer - 1]) || (layer < x.len() && start == x[layer]) {
                    self.transit[layer]
                } else {
                    self.ticks(self.medium.slowness()[layer] * (end - start).abs())
                };
                let t = start_tick + width_ticks;
                if t > self.horizon {
                    return;
                }
                let side = usize::from(!rightward);
                let slot = self.pending.entry((t, i)).or_insert_with(|| {
                    self.queue.push(Reverse((t, i)));
                    [0.0; 2]
                });
                slot[side] += weight;
            }
        }
    }
}

/// Traces Dirac data at `source` and records arrivals at every probe.
pub fn wave_ray_trace_probes(
    medium: &LaminarMedium,
    source: f64,
    probes: &[f64],
    config: &TraceConfig,
) -> Result<TraceReport> {
    if !(config.floor > 0.0 && config.time_resolution > 0.0 && config.t_max > 0.0) {
        return Err(Error::Precondition(
            "floor, time_resolution and t_max must be positive".into(),
        ));
    }
    let k = medium
        .strictly_inside_layer(source, source)
        .ok_or(Error::SourceStraddlesInterface {
            left: source,
            right: source,
        })?;
    if let Some(&p) = probes.iter().find(|&&p| medium.interfaces().contains(&p) || !p.is_finite()) {
        return Err(Error::Precondition(format!("probe {p} lies on an interface")));
    }
    let horizon_f = config.t_max / config.time_resolution;
    if horizon_f > 4e18 {
        return Err(Error::Precondition("t_max / time_resolution overflows the tick counter".into()));
    }
    let b = medium.slowness();
    let x = medium.interfaces();
    let n = medium.layer_count();
    let tick = config.time_resolution;
    let transit = (0..n)
        .map(|j| {
            if j == 0 || j + 1 == n {
                i64::MAX
            } else {
                (b[j] * (x[j] - x[j - 1]) / tick).round() as i64
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&i, &j| probes[i].total_cmp(&probes[j]));
    let half = b[k] / 2.0;
    let mut tracer = Tracer {
        medium,
        sorted: order.iter().map(|&i| probes[i]).collect(),
        order,
        tick,
        horizon: horizon_f.floor() as i64,
        floor: config.floor * half,
        transit,
        arrivals: vec![BTreeMap::new(); probes.len()],
        settled: vec![Settled::default(); probes.len()],
        keep_events: config.keep_events,
        queue: BinaryHeap::new(),
        pending: FxHashMap::default(),
        truncated: 0.0,
    };
    for (i, &p) in probes.iter().enumerate() {
        if p == source {
            tracer.arrivals[i].insert(0, 2.0 * half);
        }
    }
    for direction in [1, -1] {
        let pulse = Pulse {
            layer: k,
            position: source,
            direction,
            amplitude: half,
            birth_time: 0.0,
        };
        tracer.launch(pulse, 0);
    }

    let mut processed = 0usize;
    let mut energy_residual: f64 = 0.0;
    let mut exhausted = false;
    while let Some(Reverse((t, i))) = tracer.queue.pop() {
        if processed >= config.event_budget {
            tracer.queue.push(Reverse((t, i)));
            exhausted = true;
            break;
        }
        processed += 1;
        if processed % SETTLE_INTERVAL == 0 {
            tracer.settle(t);
        }
        let [from_left, from_right] = tracer.pending.remove(&(t, i)).expect("queued event has amplitudes");
        let (zl, zr) = (1.0 / b[i], 1.0 / b[i + 1]);
        let sum = zl + zr;
        let r_left = (zl - zr) / sum;
        let t_left = 2.0 * zl / sum;
        let r_right = -r_left;
        let t_right = 2.0 * zr / sum;
        if from_left != 0.0 {
            energy_residual = energy_residual.max((zl * r_left * r_left + zr * t_left * t_left - zl).abs() / zl);
        }
        if from_right != 0.0 {
            energy_residual =
                energy_residual.max((zr * r_right * r_right + zl * t_right * t_right - zr).abs() / zr);
        }
        let rightward = t_left * from_left + r_right * from_right;
        let leftward = r_left * from_left + t_right * from_right;
        let birth_time = t as f64 * tick;
        for (layer, direction, amplitude) in [(i + 1, 1, rightward), (i, -1, leftward)] {
            let pulse = Pulse {
                layer,
                position: x[i],
                direction,
                amplitude,
                birth_time,
            };
            tracer.launch(pulse, t);
        }
    }
    let pending_mass: f64 = tracer.pending.values().map(|[l, r]| l.abs() + r.abs()).sum();
    tracer.settle(i64::MAX);

    let trains = probes
        .iter()
        .zip(&tracer.settled)
        .map(|(&probe, settled)| {
            let forward = &settled.forward;
            let mut events = Vec::with_capacity(2 * forward.len());
            for &(t, w) in forward.iter().rev() {
                if t > 0 {
                    events.push((-(t as f64) * tick, w));
                }
            }
            events.extend(forward.iter().map(|&(t, w)| (t as f64 * tick, w)));
            ImpulseTrain {
                probe,
                events,
                weight: settled.weight,
                truncation_mass: tracer.truncated,
                pending_mass,
                budget_exhausted: exhausted,
            }
        })
        .collect();
    Ok(TraceReport {
        trains,
        processed_events: processed,
        energy_residual,
        budget_exhausted: exhausted,
    })
}

/// Single-probe trace.
pub fn wave_ray_trace(
    medium: &LaminarMedium,
    source: f64,
    probe: f64,
    config: &TraceConfig,
) -> Result<ImpulseTrain> {
    Ok(wave_ray_trace_probes(medium, source, &[probe], config)?
        .trains
        .pop()
        .expect("one probe"))
}

/// `sup_probe ∫|v(t, probe)| dt / ∫|v_0|` with the unresolved weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRatio {
    pub ratio: f64,
    pub best_probe: f64,
    /// Pruned plus pending weight; propagating it further could change the ratio.
    pub unresolved: f64,
    pub processed_events: usize,
    pub budget_exhausted: bool,
    pub energy_residual: f64,
}

pub fn wave_dispersion_ratio(
    medium: &LaminarMedium,
    source: f64,
    probes: &[f64],
    config: &TraceConfig,
) -> Result<DispersionRatio> {
    if probes.is_empty() {
        return Err(Error::Precondition("at least one probe is required".into()));
    }
    let config = TraceConfig {
        keep_events: false,
        ..config.clone()
    };
    let report = wave_ray_trace_probes(medium, source, probes, &config)?;
    let (best, train) = report
        .trains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_weight().total_cmp(&b.1.total_weight()))
        .expect("nonempty");
    Ok(DispersionRatio {
        ratio: train.total_weight(),
        best_probe: probes[best],
        unresolved: 2.0 * (train.truncation_mass + train.pending_mass),
        processed_events: report.processed_events,
        budget_exhausted: report.budget_exhausted,
        energy_residual: report.energy_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_medium_two_events() {
        let m = LaminarMedium::new(vec![1.0], vec![]).unwrap();
        let tr = wave_ray_trace(&m, 0.3, 1.5, &TraceConfig::default()).unwrap();
        assert_eq!(tr.events.len(), 2);
        for (t, w) in &tr.events {
            assert!((t.abs() - 1.2).abs() < 1e-11);
            assert_eq!(*w, 0.5);
        }
        assert_eq!(tr.total_weight(), 1.0);
    }

    #[test]
    fn first_transmission() {
        let m = LaminarMedium::from_slowness(&[1.0, 2.0], vec![0.0]).unwrap();
        let tr = wave_ray_trace(&m, -0.5, 0.25, &TraceConfig::default()).unwrap();
        let (t, w) = tr.forward().next().copied().unwrap();
        assert!((t - (0.5 + 2.0 * 0.25)).abs() < 1e-11);
        assert!((w - 0.5 * 4.0 / 3.0).abs() < 1e-15);
        // Z_1 = Z_1 r² + Z_2 τ²
        let (z1, z2, r, tau): (f64, f64, f64, f64) = (1.0, 0.5, 1.0 / 3.0, 4.0 / 3.0);
        assert!((z1 * r * r + z2 * tau * tau - z1).abs() < 1e-15);
    }

    #[test]
    fn time_reversal_symmetry() {
        let m = LaminarMedium::new(vec![1.0, 0.5, 2.0], vec![0.0, 1.0]).unwrap();
        let cfg = TraceConfig {
            t_max: 20.0,
            ..TraceConfig::default()
        };
        let tr = wave_ray_trace(&m, 0.4, 1.7, &cfg).unwrap();
        let k = tr.events.len();
        assert!(k > 4 && k % 2 == 0);
        for i in 0..k / 2 {
            let (a, b) = (tr.events[i], tr.events[k - 1 - i]);
            assert_eq!(a.0, -b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn rejects_sources_on_interfaces() {
        let m = LaminarMedium::new(vec![1.0, 2.0], vec![0.0]).unwrap();
        assert!(wave_ray_trace(&m, 0.0, 1.0, &TraceConfig::default()).is_err());
        assert!(wave_ray_trace(&m, 0.5, 0.0, &TraceConfig::default()).is_err());
    }
}
