use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::mining::ScenarioResult;

/// CSV column order; JSONL uses the same names.
pub const COLUMNS: [&str; 12] = [
    "scenario",
    "seed",
    "outcome",
    "payoff_hon",
    "payoff_rat",
    "payoff_adv",
    "blocks_hon",
    "blocks_rat",
    "blocks_adv",
    "theta_final",
    "rounds",
    "wall_ms",
];

/// One repetition. `outcome` is `not-attempted`, `succeeded`, `failed` or
/// `error` (the run aborted; numbers are zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: u64,
    pub outcome: String,
    pub payoff_hon: f64,
    pub payoff_rat: f64,
    pub payoff_adv: f64,
    pub blocks_hon: u64,
    pub blocks_rat: u64,
    pub blocks_adv: u64,
    pub theta_final: f64,
    pub rounds: u64,
    /// Wall-clock time; the only field allowed to differ between reruns.
    pub wall_ms: u64,
}

impl RunRecord {
    pub fn from_result(scenario: &str, r: &ScenarioResult, wall_ms: u64) -> Self {
        let outcome = serde_json::to_value(r.attack_outcome)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        Self {
            scenario: scenario.to_string(),
            seed: r.seed,
            outcome,
            payoff_hon: r.per_party_payoff.honest,
            payoff_rat: r.per_party_payoff.rational,
            payoff_adv: r.per_party_payoff.adversary,
            blocks_hon: r.blocks_by_party.honest,
            blocks_rat: r.blocks_by_party.rational,
            blocks_adv: r.blocks_by_party.adversary,
            theta_final: r.theta_final,
            rounds: r.rounds,
            wall_ms,
        }
    }

    pub fn error(scenario: &str, seed: u64, wall_ms: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            outcome: "error".into(),
            payoff_hon: 0.0,
            payoff_rat: 0.0,
            payoff_adv: 0.0,
            blocks_hon: 0,
            blocks_rat: 0,
            blocks_adv: 0,
            theta_final: 0.0,
            rounds: 0,
            wall_ms,
        }
    }

    /// Equality ignoring `wall_ms`.
    pub fn same_run(&self, other: &Self) -> bool {
        Self {
            wall_ms: 0,
            ..self.clone()
        } == Self {
            wall_ms: 0,
            ..other.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            _ => Err(format!("unknown format `{s}`, expected csv or jsonl")),
        }
    }
}

/// Writes records to any sink.
pub fn write_records<W: Write>(
    out: W,
    records: &[RunRecord],
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io {
        path: "<output>".into(),
        message: e.to_string(),
    };
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(out);
            w.write_record(COLUMNS)
                .map_err(|e| HarnessError::Output(e.to_string()))?;
            for r in records {
                w.serialize(r)
                    .map_err(|e| HarnessError::Output(e.to_string()))?;
            }
            w.flush().map_err(io)?;
        }
        OutputFormat::Jsonl => {
            let mut w = BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut w, r)
                    .map_err(|e| HarnessError::Output(e.to_string()))?;
                w.write_all(b"\n").map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(())
}

/// Writes records to `path`, replacing any existing file.
pub fn emit_results(
    records: &[RunRecord],
    path: &Path,
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_records(f, records, format)
}

/// Reads a JSONL file written by [`emit_results`].
pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
                origin: path.display().to_string(),
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

/// Reads a CSV file written by [`emit_results`].
pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .map_err(|e| HarnessError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(name: &str) -> RunRecord {
        RunRecord {
            scenario: name.into(),
            seed: 7,
            outcome: "succeeded".into(),
            payoff_hon: 0.1 + 0.2,
            payoff_rat: -3.5,
            payoff_adv: 1e-17,
            blocks_hon: 1,
            blocks_rat: 2,
            blocks_adv: 3,
            theta_final: 0.01,
            rounds: 99,
            wall_ms: 4,
        }
    }

    #[test]
    fn empty_outputs() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[], OutputFormat::Csv).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            COLUMNS.join(",")
        );
        let mut buf = Vec::new();
        write_records(&mut buf, &[], OutputFormat::Jsonl).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn comma_in_name_is_quoted() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[rec("a,b")], OutputFormat::Csv).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.lines().nth(1).unwrap().starts_with("\"a,b\",7,"), "{s}");
    }

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![rec("x"), rec("y \"quoted\"")];
        let j = dir.path().join("r.jsonl");
        emit_results(&recs, &j, OutputFormat::Jsonl).unwrap();
        assert_eq!(read_jsonl(&j).unwrap(), recs);
        let c = dir.path().join("r.csv");
        emit_results(&recs, &c, OutputFormat::Csv).unwrap();
        assert_eq!(read_csv(&c).unwrap(), recs);
    }
}
