//! Drag-control task served by replaying recorded power-coefficient traces.
//!
//! A trace is a table of `(step, xi) -> cp` cells covering the 30 control
//! steps after warm-up. Each action is mapped affinely to a spin command `xi`;
//! the environment answers with the recorded response of the nearest `xi` cell
//! at the current step. Observation is `(previous cp, current xi)`, raw reward
//! is `-|cp|`.
//!
//! Trace files are CSV with header `step,t_over_TU,xi,cp`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_action, ActionSpace, Environment, StepResult, Task, TaskMetrics};
use crate::error::{Error, Result};

pub const CONTROL_STEPS: usize = 30;
/// Warm-up ends here (`tU/D`); controlled steps span `(WARMUP_END, CONTROL_END]`.
pub const WARMUP_END: f64 = 2.0;
pub const CONTROL_END: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidTraceRecord {
    pub step: usize,
    #[serde(rename = "t_over_TU")]
    pub time: f64,
    pub xi: f64,
    pub cp: f64,
}

/// Nondimensional time of control step `k` (0-based).
pub fn control_time(step: usize) -> f64 {
    WARMUP_END + (step + 1) as f64 * (CONTROL_END - WARMUP_END) / CONTROL_STEPS as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidTrace {
    records: Vec<FluidTraceRecord>,
    /// step -> cells sorted by xi.
    cells: BTreeMap<usize, Vec<FluidTraceRecord>>,
}

impl FluidTrace {
    pub fn new(records: Vec<FluidTraceRecord>) -> Result<Self> {
        let mut cells: BTreeMap<usize, Vec<FluidTraceRecord>> = BTreeMap::new();
        for r in &records {
            if !(r.time.is_finite() && r.xi.is_finite() && r.cp.is_finite()) {
                return Err(Error::config(format!("non-finite value in trace record {r:?}")));
            }
            cells.entry(r.step).or_default().push(*r);
        }
        let mut last_time = f64::NEG_INFINITY;
        for (step, row) in cells.iter_mut() {
            row.sort_by(|a, b| a.xi.total_cmp(&b.xi));
            if row.windows(2).any(|w| w[0].xi == w[1].xi) {
                return Err(Error::config(format!("duplicate xi cell at step {step}")));
            }
            let t = row[0].time;
            if row.iter().any(|r| r.time != t) {
                return Err(Error::config(format!("inconsistent time within step {step}")));
            }
            if t <= last_time {
                return Err(Error::config(format!("trace time not increasing at step {step}")));
            }
            last_time = t;
        }
        Ok(Self { records, cells })
    }

    pub fn records(&self) -> &[FluidTraceRecord] {
        &self.records
    }

    pub fn n_steps(&self) -> usize {
        self.cells.len()
    }

    /// Check that steps `0..CONTROL_STEPS` are present and inside the control window.
    pub fn validate_window(&self) -> Result<()> {
        for step in 0..CONTROL_STEPS {
            let row = self
                .cells
                .get(&step)
                .ok_or_else(|| Error::config(format!("trace has no records for control step {step}")))?;
            let t = row[0].time;
            if !(t > WARMUP_END && t <= CONTROL_END + 1e-9) {
                return Err(Error::config(format!(
                    "step {step} at tU/D = {t} lies outside the control window ({WARMUP_END}, {CONTROL_END}]"
                )));
            }
        }
        Ok(())
    }

    /// Recorded response of the nearest `xi` cell at `step`. A command farther
    /// than half the local cell spacing from every recorded cell is a gap.
    pub fn lookup(&self, step: usize, xi: f64) -> Result<FluidTraceRecord> {
        let gap = || Error::TraceLookup { step, xi };
        let row = self.cells.get(&step).ok_or_else(gap)?;
        let idx = row.partition_point(|r| r.xi < xi);
        let candidates = [idx.checked_sub(1), (idx < row.len()).then_some(idx)];
        let (best, dist) = candidates
            .into_iter()
            .flatten()
            .map(|i| (i, (row[i].xi - xi).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(gap)?;
        let spacing = [best.checked_sub(1), (best + 1 < row.len()).then_some(best + 1)]
            .into_iter()
            .flatten()
            .map(|j| (row[j].xi - row[best].xi).abs())
            .fold(0.0f64, f64::max);
        if dist > 0.5 * spacing + 1e-9 {
            return Err(gap());
        }
        Ok(row[best])
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["step", "t_over_TU", "xi", "cp"] {
            return Err(Error::Parse {
                context: "fluid trace".into(),
                message: format!("expected header step,t_over_TU,xi,cp, found {:?}", headers),
            });
        }
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<FluidTraceRecord>, _>>()
            .map_err(csv_err)?;
        Self::new(records)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Synthetic trace shipped as the repository fixture.
    ///
    /// Uncontrolled drag oscillates around 0.4 as the wake sheds; spinning the
    /// control cylinder lowers it roughly linearly, crossing zero near
    /// `xi = 4` and turning into slight thrust beyond. Cells cover
    /// `xi in [0, 8]` at spacing 0.25.
    pub fn synthetic() -> Self {
        let mut records = Vec::new();
        for step in 0..CONTROL_STEPS {
            let t = control_time(step);
            let shedding = (std::f64::consts::TAU * t / 0.8).sin();
            let baseline = 0.4 + 0.03 * shedding;
            for k in 0..=32 {
                let xi = k as f64 * 0.25;
                let effectiveness = 0.1 * (1.0 + 0.05 * shedding);
                let cp = baseline - effectiveness * xi;
                records.push(FluidTraceRecord {
                    step,
                    time: round_to(t, 6),
                    xi,
                    cp: round_to(cp, 6),
                });
            }
        }
        Self::new(records).expect("synthetic trace is well formed")
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (x * s).round() / s
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        context: "fluid trace".into(),
        message: e.to_string(),
    }
}

/// Affine map from a policy action in `[-1, 1]` to a spin command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionToXi {
    pub scale: f64,
    pub offset: f64,
}

impl Default for ActionToXi {
    /// `[-1, 1] -> [0, 8]`, the span of the synthetic fixture.
    fn default() -> Self {
        Self {
            scale: 4.0,
            offset: 4.0,
        }
    }
}

impl ActionToXi {
    pub fn apply(&self, action: f64) -> f64 {
        self.offset + self.scale * action
    }
}

#[derive(Debug, Clone)]
pub struct FluidTraceEnv {
    trace: FluidTrace,
    map: ActionToXi,
    step: usize,
    prev_cp: f64,
    xi: f64,
}

/// Build a replay environment over a trace that covers the control window.
pub fn fluid_trace_env(trace: FluidTrace, action_to_xi: ActionToXi) -> Result<FluidTraceEnv> {
    FluidTraceEnv::new(trace, action_to_xi)
}

impl FluidTraceEnv {
    pub fn new(trace: FluidTrace, map: ActionToXi) -> Result<Self> {
        trace.validate_window()?;
        let mut env = Self {
            trace,
            map,
            step: 0,
            prev_cp: 0.0,
            xi: 0.0,
        };
        env.reset_internal()?;
        Ok(env)
    }

    pub fn trace(&self) -> &FluidTrace {
        &self.trace
    }

    fn reset_internal(&mut self) -> Result<Vec<f64>> {
        // The warm-up holds xi = 0; its response at the first step seeds the observation.
        self.step = 0;
        self.xi = 0.0;
        self.prev_cp = self.trace.lookup(0, 0.0)?.cp;
        Ok(vec![self.prev_cp, self.xi])
    }
}

impl Environment for FluidTraceEnv {
    fn task(&self) -> Task {
        Task::Fluid
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::uniform(1, -1.0, 1.0)
    }

    fn horizon(&self) -> usize {
        CONTROL_STEPS
    }

    /// Replay is deterministic; the seed is accepted for interface uniformity.
    fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
        self.reset_internal()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        check_action(action, 1)?;
        if self.step >= CONTROL_STEPS {
            return Err(Error::contract("fluid episode already finished; reset first"));
        }
        let xi = self.map.apply(action[0].clamp(-1.0, 1.0));
        let rec = self.trace.lookup(self.step, xi)?;
        self.step += 1;
        self.prev_cp = rec.cp;
        self.xi = xi;
        Ok(StepResult {
            observation: vec![rec.cp, xi],
            raw_reward: -rec.cp.abs(),
            semantic_reward: None,
            sentence: None,
            done: self.step >= CONTROL_STEPS,
            metrics: TaskMetrics::Fluid { cp: rec.cp, xi },
            diagnostic: None,
        })
    }

    fn metrics(&self) -> TaskMetrics {
        TaskMetrics::Fluid {
            cp: self.prev_cp,
            xi: self.xi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_trace(cp: f64) -> FluidTrace {
        let records = (0..CONTROL_STEPS)
            .flat_map(|step| {
                (0..=8).map(move |k| FluidTraceRecord {
                    step,
                    time: control_time(step),
                    xi: k as f64,
                    cp,
                })
            })
            .collect();
        FluidTrace::new(records).unwrap()
    }

    #[test]
    fn control_window() {
        assert!(control_time(0) > WARMUP_END);
        assert!((control_time(CONTROL_STEPS - 1) - CONTROL_END).abs() < 1e-12);
        FluidTrace::synthetic().validate_window().unwrap();
    }

    #[test]
    fn zero_trace_gives_zero_reward() {
        let mut env = FluidTraceEnv::new(constant_trace(0.0), ActionToXi::default()).unwrap();
        env.reset(0).unwrap();
        for _ in 0..CONTROL_STEPS {
            assert_eq!(env.step(&[0.3]).unwrap().raw_reward, 0.0);
        }
    }

    #[test]
    fn uncontrolled_drag_reward() {
        let mut env = FluidTraceEnv::new(FluidTrace::synthetic(), ActionToXi::default()).unwrap();
        env.reset(0).unwrap();
        // Action -1 maps to xi = 0, the uncontrolled configuration.
        let rewards: Vec<f64> = (0..CONTROL_STEPS).map(|_| env.step(&[-1.0]).unwrap().raw_reward).collect();
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        assert!((mean + 0.4).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn done_after_thirty_steps() {
        let mut env = FluidTraceEnv::new(FluidTrace::synthetic(), ActionToXi::default()).unwrap();
        env.reset(0).unwrap();
        for t in 1..=CONTROL_STEPS {
            let r = env.step(&[0.0]).unwrap();
            assert_eq!(r.done, t == CONTROL_STEPS);
            assert_eq!(r.observation.len(), 2);
        }
        assert!(env.step(&[0.0]).is_err());
    }

    #[test]
    fn nearest_cell_and_gap_reporting() {
        let trace = FluidTrace::synthetic();
        assert_eq!(trace.lookup(3, 1.1).unwrap().xi, 1.0);
        assert_eq!(trace.lookup(3, 1.13).unwrap().xi, 1.25);
        assert!(matches!(trace.lookup(3, 9.0), Err(Error::TraceLookup { step: 3, .. })));
        assert!(matches!(trace.lookup(40, 1.0), Err(Error::TraceLookup { step: 40, .. })));
    }

    #[test]
    fn missing_step_rejected_at_construction() {
        let records = FluidTrace::synthetic()
            .records()
            .iter()
            .copied()
            .filter(|r| r.step != 7)
            .collect();
        let trace = FluidTrace::new(records).unwrap();
        assert!(FluidTraceEnv::new(trace, ActionToXi::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let trace = FluidTrace::synthetic();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,t_over_TU,xi,cp\n"));
        assert_eq!(FluidTrace::read_csv(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn shipped_fixture_matches_generator() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fluid_synthetic.csv");
        assert_eq!(FluidTrace::load(&path).unwrap(), FluidTrace::synthetic());
    }

    #[test]
    fn bad_header_rejected() {
        let csv = "step,time,xi,cp\n0,2.05,0,0.4\n";
        assert!(FluidTrace::read_csv(csv.as_bytes()).is_err());
    }
}
