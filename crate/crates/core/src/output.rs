//! Result records and their JSON, CSV and table renderings.
//!
//! JSON and CSV use the shortest decimal form that parses back to the same
//! `f64`, so both round-trip bit-exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mc_oracle::ActProcess;
use crate::reproduction::{BrnResult, Sex, SweepMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the scenario file bytes (of the empty string without one).
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Metadata {
    pub fn new(command: &str, config: &[u8], seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config_hash(config),
            seed,
        }
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub ia: f64,
    #[serde(rename = "LVl")]
    pub lvl: f64,
    pub ptr: f64,
    pub ptr_x1000: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "NCA")]
    pub nca: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    /// A point of the `R0 = 1` hyperbola.
    Hyperbola,
    /// The baseline contact rates.
    FixedPoint,
    /// A corner of the feasible contact-rate rectangle.
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub kind: PhaseKind,
    /// Multiplier on the transmission probability.
    pub factor: f64,
    pub delta_m: f64,
    pub delta_f: f64,
    pub i0: f64,
    pub r_fm: f64,
    pub r_mf: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: f64,
    pub mode: SweepMode,
    pub integral_f: f64,
    pub integral_m: f64,
    pub i0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub sex: Sex,
    pub act_process: ActProcess,
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub std_error_defined: bool,
    pub quadrature: f64,
    pub abs_diff: f64,
    /// `|mean - quadrature| / std_error`; absent when the error is undefined.
    pub z: Option<f64>,
}

/// Everything one command produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBundle {
    pub metadata: Metadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<BrnResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Vec<PhaseRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Vec<SimulationRow>>,
}

impl OutputBundle {
    pub fn new(metadata: Metadata) -> Self {
        Self {
            metadata,
            verdict: None,
            trajectory: None,
            phase: None,
            sweep: None,
            simulation: None,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// The bundle's series as CSV; a verdict alone becomes a one-row table.
    pub fn to_csv(&self) -> csv::Result<String> {
        if let Some(rows) = &self.trajectory {
            write_csv(rows, TRAJECTORY_HEADER)
        } else if let Some(rows) = &self.phase {
            write_csv(rows, PHASE_HEADER)
        } else if let Some(rows) = &self.sweep {
            write_csv(rows, SWEEP_HEADER)
        } else if let Some(rows) = &self.simulation {
            write_csv(rows, SIMULATION_HEADER)
        } else if let Some(v) = &self.verdict {
            write_csv(std::slice::from_ref(v), VERDICT_HEADER)
        } else {
            Ok(String::new())
        }
    }

    /// Human-readable rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(v) = &self.verdict {
            let rows = [
                ("J_f", format!("{:.6e}", v.integral_f)),
                ("J_m", format!("{:.6e}", v.integral_m)),
                ("delta_f", format!("{}", v.delta_f)),
                ("delta_m", format!("{}", v.delta_m)),
                ("R_fm", format!("{:.4}", v.r_fm)),
                ("R_mf", format!("{:.4}", v.r_mf)),
                ("R0", format!("{:.4}", v.r0)),
                ("I0", format!("{:.2}", v.i0)),
                ("ISA", format!("{:.2}", v.isa)),
                ("verdict", v.verdict.to_string()),
            ];
            for (k, val) in rows {
                let _ = writeln!(out, "{k:<8} {val}");
            }
        }
        if let Some(rows) = &self.trajectory {
            table(
                &mut out,
                TRAJECTORY_HEADER,
                rows.iter().map(|r| {
                    vec![
                        format!("{:.4}", r.ia),
                        format!("{:.4}", r.lvl),
                        format!("{:.6e}", r.ptr),
                        format!("{:.4}", r.ptr_x1000),
                        format!("{:.4}", r.g),
                        format!("{:.3}", r.nca),
                    ]
                }),
            );
        }
        if let Some(rows) = &self.phase {
            table(
                &mut out,
                PHASE_HEADER,
                rows.iter().map(|r| {
                    let kind = serde_json::to_value(r.kind).expect("unit enum");
                    vec![
                        kind.as_str().unwrap_or_default().to_string(),
                        format!("{}", r.factor),
                        format!("{:.3}", r.delta_m),
                        format!("{:.3}", r.delta_f),
                        format!("{:.2}", r.i0),
                        format!("{:.4}", r.r_fm),
                        format!("{:.4}", r.r_mf),
                        format!("{:.4}", r.r0),
                    ]
                }),
            );
        }
        if let Some(rows) = &self.sweep {
            table(
                &mut out,
                SWEEP_HEADER,
                rows.iter().map(|r| {
                    vec![
                        format!("{}", r.factor),
                        r.mode.as_str().to_string(),
                        format!("{:.6e}", r.integral_f),
                        format!("{:.6e}", r.integral_m),
                        format!("{:.2}", r.i0),
                    ]
                }),
            );
        }
        if let Some(rows) = &self.simulation {
            table(
                &mut out,
                SIMULATION_HEADER,
                rows.iter().map(|r| {
                    vec![
                        r.sex.to_string(),
                        r.act_process.as_str().to_string(),
                        r.samples.to_string(),
                        r.seed.to_string(),
                        format!("{:.6e}", r.mean),
                        format!("{:.3e}", r.std_error),
                        r.std_error_defined.to_string(),
                        format!("{:.6e}", r.quadrature),
                        format!("{:.3e}", r.abs_diff),
                        r.z.map_or("-".to_string(), |z| format!("{z:.3}")),
                    ]
                }),
            );
        }
        out
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => self.to_json().map_err(|e| e.to_string()),
            Format::Csv => self.to_csv().map_err(|e| e.to_string()),
            Format::Table => Ok(self.to_table()),
        }
    }
}

pub const TRAJECTORY_HEADER: &[&str] = &["ia", "LVl", "ptr", "ptr_x1000", "G", "NCA"];
pub const PHASE_HEADER: &[&str] = &[
    "kind", "factor", "delta_m", "delta_f", "i0", "r_fm", "r_mf", "r0",
];
pub const SWEEP_HEADER: &[&str] = &["factor", "mode", "integral_f", "integral_m", "i0"];
pub const SIMULATION_HEADER: &[&str] = &[
    "sex",
    "act_process",
    "samples",
    "seed",
    "mean",
    "std_error",
    "std_error_defined",
    "quadrature",
    "abs_diff",
    "z",
];
pub const VERDICT_HEADER: &[&str] = &[
    "integral_f",
    "integral_m",
    "delta_f",
    "delta_m",
    "r_fm",
    "r_mf",
    "r0",
    "i0",
    "isa",
    "verdict",
    "epidemic",
];

fn write_csv<T: Serialize>(rows: &[T], header: &[&str]) -> csv::Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    // Written explicitly so an empty series still carries its header.
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn table(out: &mut String, header: &[&str], rows: impl Iterator<Item = Vec<String>>) {
    let rows: Vec<Vec<String>> = rows.collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reproduction::brn_from_integrals;

    fn bundle() -> OutputBundle {
        let mut b = OutputBundle::new(Metadata::new("eval", b"", None));
        b.verdict =
            Some(brn_from_integrals(0.011866472266320, 0.012666651010126, 82.0, 82.0).unwrap());
        b
    }

    #[test]
    fn empty_config_hash() {
        assert_eq!(
            config_hash(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut b = bundle();
        b.sweep = Some(vec![SweepRow {
            factor: 0.1,
            mode: SweepMode::ScaleFunction,
            integral_f: 1.0 / 3.0,
            integral_m: 2.0f64.sqrt() * 1e-7,
            i0: std::f64::consts::PI * 1e300,
        }]);
        let back = OutputBundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
        let v = back.verdict.unwrap();
        assert_eq!(v.i0.to_bits(), b.verdict.unwrap().i0.to_bits());
    }

    #[test]
    fn csv_has_stable_header_and_exact_values() {
        let mut b = bundle();
        b.trajectory = Some(vec![TrajectoryRow {
            ia: 0.1,
            lvl: 1.0 / 3.0,
            ptr: 1.234567890123e-5,
            ptr_x1000: 1.234567890123e-2,
            g: 0.61,
            nca: 50.02,
        }]);
        let csv = b.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "ia,LVl,ptr,ptr_x1000,G,NCA");
        let fields: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(fields[1].to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(fields[2], 1.234567890123e-5);
    }

    #[test]
    fn empty_series_keeps_header() {
        let mut b = OutputBundle::new(Metadata::new("sweep", b"", None));
        b.sweep = Some(Vec::new());
        assert_eq!(
            b.to_csv().unwrap(),
            "factor,mode,integral_f,integral_m,i0\n"
        );
        assert!(b.to_table().starts_with("factor"));
    }

    #[test]
    fn verdict_csv_header() {
        let csv = bundle().to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), VERDICT_HEADER.join(","));
        assert!(csv.contains("epidemic"));
    }

    #[test]
    fn table_shows_indices() {
        let t = bundle().to_table();
        assert!(t.contains("I0       81.57"), "{t}");
        assert!(t.contains("verdict  epidemic"));
    }
}
