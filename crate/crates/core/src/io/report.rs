use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::metrics::{DepthMetrics, PointMetrics};
use crate::poisson::SolveStats;
use crate::sampling::SampleSpec;

pub const REPORT_FORMAT: u32 = 1;

/// Evaluation or completion record. Field order is the key order on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub inputs: ReportInputs,
    pub spec: Option<SampleSpec>,
    pub solver: Option<ReportSolver>,
    pub depth_metrics: Option<DepthMetrics>,
    pub point_metrics: Option<PointMetrics>,
    pub versions: Versions,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub paths: BTreeMap<String, String>,
    pub height: usize,
    pub width: usize,
    /// Fully resolved settings of the run.
    pub config: BTreeMap<String, serde_json::Value>,
}

/// Solver outcome without wall time, so identical runs write identical bytes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSolver {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

impl From<SolveStats> for ReportSolver {
    fn from(s: SolveStats) -> Self {
        Self {
            iterations: s.iterations,
            final_relative_residual: s.final_relative_residual,
            converged: s.converged,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            format: REPORT_FORMAT,
        }
    }
}

/// Pretty JSON with every float in `{:.16e}` form (17 significant digits).
struct SeventeenDigits(PrettyFormatter<'static>);

impl Formatter for SeventeenDigits {
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{:.16e}", v as f64)
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value with the report number format, newline-terminated.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_report<T: Serialize + ?Sized>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    fs::write(path, to_json(report)?)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let mut paths = BTreeMap::new();
        paths.insert("gt".to_string(), "gt.pfm".to_string());
        Report {
            inputs: ReportInputs {
                paths,
                height: 4,
                width: 5,
                config: BTreeMap::new(),
            },
            spec: None,
            solver: Some(ReportSolver {
                iterations: 12,
                final_relative_residual: 3.3e-9,
                converged: true,
            }),
            depth_metrics: Some(DepthMetrics {
                rmse: 0.1,
                mae: 1.0 / 3.0,
                rel: 0.0,
                delta1: 1.0,
                count: 20,
            }),
            point_metrics: None,
            versions: Versions::default(),
        }
    }

    #[test]
    fn key_order_and_null() {
        let text = to_json(&sample_report()).unwrap();
        let keys = ["\"inputs\"", "\"spec\"", "\"solver\"", "\"depth_metrics\"", "\"point_metrics\"", "\"versions\""];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("\"point_metrics\": null"));
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn parses_back_equal() {
        let r = sample_report();
        let back: Report = from_json(&to_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
