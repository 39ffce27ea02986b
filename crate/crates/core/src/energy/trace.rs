//! Harvested-energy traces: CSV loading, synthetic generation, replay.
//!
//! A trace is an ordered series of `(timestamp, harvested power)` samples.
//! Power is zero-order held between samples during simulation. The on-disk
//! format is CSV with header `t_s,power_uw`; voltage-style recordings can be
//! imported with a configured load resistance (`P = V^2 / R`).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EnergyError;

/// One harvested-power sample: seconds since trace start, microwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t_s: f64,
    pub power_uw: f64,
}

/// A validated harvested-energy trace.
///
/// Invariants (checked on construction): timestamps strictly increasing,
/// power non-negative, at least two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    name: String,
    samples: Vec<TraceSample>,
}

/// On-disk encodings accepted by [`load_trace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceFormat {
    /// CSV header `t_s,power_uw`: power in microwatts.
    PowerCsv,
    /// CSV header `t_s,v`: instantaneous voltage across a load resistor;
    /// converted as `P_uw = 1e6 * V^2 / r_load_ohm`.
    VoltageCsv { r_load_ohm: f64 },
}

/// Synthetic trace shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    /// Flat power.
    Constant { power_uw: f64 },
    /// Alternates `high` for half a period, then `low`, starting high.
    SquareWave {
        high_uw: f64,
        low_uw: f64,
        period_s: f64,
    },
    /// Seeded random walk, clamped to `[0, max_uw]`.
    RandomWalk {
        start_uw: f64,
        step_uw: f64,
        max_uw: f64,
    },
}

impl EnergyTrace {
    /// Builds a trace from raw samples, validating the type invariants.
    pub fn new(name: impl Into<String>, samples: Vec<TraceSample>) -> Result<Self, EnergyError> {
        if samples.len() < 2 {
            return Err(EnergyError::TraceTooShort { len: samples.len() });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t_s.is_finite() || !s.power_uw.is_finite() {
                return Err(EnergyError::MalformedSample {
                    line: i + 2,
                    reason: "non-finite value".into(),
                });
            }
            if s.power_uw < 0.0 {
                return Err(EnergyError::MalformedSample {
                    line: i + 2,
                    reason: format!("negative power {}", s.power_uw),
                });
            }
            if i > 0 && s.t_s <= samples[i - 1].t_s {
                return Err(EnergyError::NonMonotonicTimestamps { line: i + 2 });
            }
        }
        Ok(Self {
            name: name.into(),
            samples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t_s
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t_s
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Writes the trace as `t_s,power_uw` CSV.
    pub fn save_csv(&self, path: &Path) -> Result<(), EnergyError> {
        let mut out = String::with_capacity(self.samples.len() * 16 + 16);
        out.push_str("t_s,power_uw\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.t_s, s.power_uw));
        }
        let mut f = fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Cursor for zero-order-held replay; `O(1)` amortized per step for
    /// monotonically increasing query times.
    pub fn sampler(&self) -> TraceSampler<'_> {
        TraceSampler {
            trace: self,
            cursor: 0,
        }
    }
}

impl fmt::Display for EnergyTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} samples, {:.1}s)",
            self.name,
            self.samples.len(),
            self.duration()
        )
    }
}

/// Zero-order-hold replay cursor over a trace.
pub struct TraceSampler<'a> {
    trace: &'a EnergyTrace,
    cursor: usize,
}

impl<'a> TraceSampler<'a> {
    /// Power at time `t`, holding the last sample at or before `t`.
    /// Times before the first sample return the first sample's power.
    pub fn power_at(&mut self, t: f64) -> f64 {
        let samples = self.trace.samples();
        while self.cursor + 1 < samples.len() && samples[self.cursor + 1].t_s <= t {
            self.cursor += 1;
        }
        // rewind for non-monotone queries (rare; keeps the cursor correct)
        while self.cursor > 0 && samples[self.cursor].t_s > t {
            self.cursor -= 1;
        }
        samples[self.cursor].power_uw
    }
}

/// Loads and validates a trace file. Malformed rows are reported with their
/// 1-based line number.
pub fn load_trace(path: &Path, format: TraceFormat) -> Result<EnergyTrace, EnergyError> {
    let text = fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string());
    parse_trace(&text, &name, format)
}

/// Parses trace CSV text. Separated from I/O for testability.
pub fn parse_trace(
    text: &str,
    name: &str,
    format: TraceFormat,
) -> Result<EnergyTrace, EnergyError> {
    if let TraceFormat::VoltageCsv { r_load_ohm } = format {
        if r_load_ohm <= 0.0 {
            return Err(EnergyError::InvalidParams(format!(
                "r_load_ohm must be positive, got {r_load_ohm}"
            )));
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        // header row: first line with non-numeric first field
        if idx == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            continue;
        }
        let mut parts = line.split(',');
        let (a, b) = match (parts.next(), parts.next()) {
            (Some(a), Some(b)) => (a.trim(), b.trim()),
            _ => {
                return Err(EnergyError::MalformedSample {
                    line: lineno,
                    reason: "expected two comma-separated fields".into(),
                })
            }
        };
        let t_s: f64 = a.parse().map_err(|_| EnergyError::MalformedSample {
            line: lineno,
            reason: format!("bad timestamp '{a}'"),
        })?;
        let raw: f64 = b.parse().map_err(|_| EnergyError::MalformedSample {
            line: lineno,
            reason: format!("bad value '{b}'"),
        })?;
        let power_uw = match format {
            TraceFormat::PowerCsv => raw,
            TraceFormat::VoltageCsv { r_load_ohm } => 1e6 * raw * raw / r_load_ohm,
        };
        if power_uw < 0.0 {
            return Err(EnergyError::MalformedSample {
                line: lineno,
                reason: format!("negative power {power_uw}"),
            });
        }
        if let Some(last) = samples.last() {
            let last: &TraceSample = last;
            if t_s <= last.t_s {
                return Err(EnergyError::NonMonotonicTimestamps { line: lineno });
            }
        }
        samples.push(TraceSample { t_s, power_uw });
    }
    EnergyTrace::new(name, samples)
}

/// Generates a synthetic trace sampled every `sample_interval_s` over
/// `[0, duration_s]`. Deterministic for a fixed seed.
pub fn synth_trace(
    kind: SynthKind,
    seed: u64,
    duration_s: f64,
    sample_interval_s: f64,
) -> Result<EnergyTrace, EnergyError> {
    if !(duration_s > 0.0) {
        return Err(EnergyError::InvalidParams(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(sample_interval_s > 0.0) {
        return Err(EnergyError::InvalidParams(format!(
            "sample interval must be positive, got {sample_interval_s}"
        )));
    }
    match kind {
        SynthKind::Constant { power_uw } if power_uw < 0.0 => {
            return Err(EnergyError::InvalidParams(format!(
                "negative power {power_uw}"
            )));
        }
        SynthKind::SquareWave {
            high_uw,
            low_uw,
            period_s,
        } => {
            if high_uw < 0.0 || low_uw < 0.0 {
                return Err(EnergyError::InvalidParams("negative power level".into()));
            }
            if !(period_s > 0.0) {
                return Err(EnergyError::InvalidParams(format!(
                    "period must be positive, got {period_s}"
                )));
            }
        }
        SynthKind::RandomWalk {
            start_uw,
            step_uw,
            max_uw,
        } => {
            if start_uw < 0.0 || step_uw < 0.0 || max_uw <= 0.0 {
                return Err(EnergyError::InvalidParams(
                    "random walk requires start_uw >= 0, step_uw >= 0, max_uw > 0".into(),
                ));
            }
        }
        _ => {}
    }

    let n = (duration_s / sample_interval_s).floor() as usize + 1;
    let n = n.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = match kind {
        SynthKind::RandomWalk { start_uw, .. } => start_uw,
        _ => 0.0,
    };
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * sample_interval_s;
        let p = match kind {
            SynthKind::Constant { power_uw } => power_uw,
            SynthKind::SquareWave {
                high_uw,
                low_uw,
                period_s,
            } => {
                let phase = (t / period_s).fract();
                if phase < 0.5 {
                    high_uw
                } else {
                    low_uw
                }
            }
            SynthKind::RandomWalk {
                step_uw, max_uw, ..
            } => {
                let delta = rng.gen_range(-1.0..=1.0) * step_uw;
                level = (level + delta).clamp(0.0, max_uw);
                level
            }
        };
        samples.push(TraceSample { t_s: t, power_uw: p });
    }
    let name = match kind {
        SynthKind::Constant { .. } => "constant",
        SynthKind::SquareWave { .. } => "square",
        SynthKind::RandomWalk { .. } => "walk",
    };
    EnergyTrace::new(name, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_sample_csv() {
        let t = parse_trace("t_s,power_uw\n0.0,100\n1.0,100\n", "t", TraceFormat::PowerCsv)
            .unwrap();
        assert_eq!(t.samples().len(), 2);
        assert_eq!(t.samples()[0].power_uw, 100.0);
        assert_eq!(t.samples()[1].t_s, 1.0);
    }

    #[test]
    fn rejects_non_monotone_timestamps() {
        let err = parse_trace("t_s,power_uw\n1.0,5\n0.5,5\n", "t", TraceFormat::PowerCsv)
            .unwrap_err();
        match err {
            EnergyError::NonMonotonicTimestamps { line } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_reports_malformed_line() {
        assert!(matches!(
            parse_trace("t_s,power_uw\n", "t", TraceFormat::PowerCsv),
            Err(EnergyError::TraceTooShort { .. })
        ));
        let err =
            parse_trace("t_s,power_uw\n0.0,100\nx,y\n", "t", TraceFormat::PowerCsv).unwrap_err();
        match err {
            EnergyError::MalformedSample { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn voltage_format_converts_to_power() {
        // 2 V across 100 ohm -> 40 mW -> 40000 uW
        let t = parse_trace(
            "t_s,v\n0.0,2.0\n1.0,2.0\n",
            "t",
            TraceFormat::VoltageCsv { r_load_ohm: 100.0 },
        )
        .unwrap();
        assert!((t.samples()[0].power_uw - 40_000.0).abs() < 1e-9);
    }

    #[test]
    fn constant_synth_is_flat() {
        let t = synth_trace(
            SynthKind::Constant { power_uw: 100.0 },
            0,
            10.0,
            1.0,
        )
        .unwrap();
        assert!(t.samples().iter().all(|s| s.power_uw == 100.0));
        assert_eq!(t.samples().len(), 11);
    }

    #[test]
    fn square_wave_alternates() {
        let t = synth_trace(
            SynthKind::SquareWave {
                high_uw: 200.0,
                low_uw: 0.0,
                period_s: 2.0,
            },
            0,
            8.0,
            0.5,
        )
        .unwrap();
        let p: Vec<f64> = t.samples().iter().map(|s| s.power_uw).collect();
        // t = 0.0, 0.5 in high half; 1.0, 1.5 in low half; repeats
        assert_eq!(&p[0..4], &[200.0, 200.0, 0.0, 0.0]);
        assert_eq!(&p[4..8], &[200.0, 200.0, 0.0, 0.0]);
    }

    #[test]
    fn random_walk_is_deterministic_per_seed() {
        let k = SynthKind::RandomWalk {
            start_uw: 50.0,
            step_uw: 5.0,
            max_uw: 200.0,
        };
        let a = synth_trace(k, 7, 20.0, 0.1).unwrap();
        let b = synth_trace(k, 7, 20.0, 0.1).unwrap();
        assert_eq!(a, b);
        let c = synth_trace(k, 8, 20.0, 0.1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_invalid_synth_params() {
        assert!(synth_trace(SynthKind::Constant { power_uw: -1.0 }, 0, 1.0, 0.1).is_err());
        assert!(synth_trace(
            SynthKind::SquareWave {
                high_uw: 1.0,
                low_uw: 0.0,
                period_s: 0.0
            },
            0,
            1.0,
            0.1
        )
        .is_err());
        assert!(synth_trace(SynthKind::Constant { power_uw: 1.0 }, 0, -1.0, 0.1).is_err());
    }

    #[test]
    fn sampler_zero_order_holds() {
        let t = EnergyTrace::new(
            "t",
            vec![
                TraceSample { t_s: 0.0, power_uw: 10.0 },
                TraceSample { t_s: 1.0, power_uw: 20.0 },
                TraceSample { t_s: 3.0, power_uw: 5.0 },
            ],
        )
        .unwrap();
        let mut s = t.sampler();
        assert_eq!(s.power_at(0.0), 10.0);
        assert_eq!(s.power_at(0.99), 10.0);
        assert_eq!(s.power_at(1.0), 20.0);
        assert_eq!(s.power_at(2.5), 20.0);
        assert_eq!(s.power_at(3.0), 5.0);
        assert_eq!(s.power_at(10.0), 5.0);
    }
}
