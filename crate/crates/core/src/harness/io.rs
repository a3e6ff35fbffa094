//! File formats. Line-delimited JSON files open with a header line
//! `{"schema": "..."}`; the metrics CSV opens with a `# schema: ...` comment.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pipeline::{MetricsReport, Timing};
use crate::tunnel::SegmentedTunnelModel;

pub const FRAMES_SCHEMA: &str = "tunnelradar.frames/1";
pub const TRUTH_SCHEMA: &str = "tunnelradar.truth/1";
pub const TRACKS_SCHEMA: &str = "tunnelradar.tracks/1";
pub const CANDIDATES_SCHEMA: &str = "tunnelradar.candidates/1";
pub const CORRECTED_SCHEMA: &str = "tunnelradar.corrected/1";
pub const METRICS_SCHEMA: &str = "tunnelradar.metrics/1";
pub const TIMING_SCHEMA: &str = "tunnelradar.timing/1";
pub const MODEL_SCHEMA: &str = "tunnelradar.model/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("expected schema `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("empty input, expected a `{0}` header")]
    MissingHeader(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, schema: &str, items: &[T]) -> Result<(), IoError> {
    let header = Header {
        schema: schema.into(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).map_err(std::io::Error::from)?)?;
    for item in items {
        writeln!(w, "{}", serde_json::to_string(item).map_err(std::io::Error::from)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records after checking the header. Blank lines are skipped; errors
/// carry 1-based line numbers.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R, schema: &str) -> Result<Vec<T>, IoError> {
    let mut lines = r.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(IoError::MissingHeader(schema.into())),
            Some((_, l)) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
        }
    };
    let h: Header = serde_json::from_str(&header).map_err(|e| IoError::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    if h.schema != schema {
        return Err(IoError::Schema {
            expected: schema.into(),
            found: h.schema,
        });
    }
    let mut out = Vec::new();
    for (k, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&l).map_err(|e| IoError::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One CSV row per (scenario, variant). Column order is part of the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub variant: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_lag_m: Option<f64>,
    pub unconfirmed: usize,
    pub relocated_fraction: f64,
    pub fps: f64,
}

impl MetricsRow {
    pub fn new(m: &MetricsReport, timing: &Timing) -> Self {
        Self {
            scenario: m.scenario.clone(),
            variant: m.variant.name().into(),
            tp: m.counts.tp,
            fp: m.counts.fp,
            fn_: m.counts.fn_,
            precision: m.rates.precision,
            recall: m.rates.recall,
            f1: m.rates.f1,
            mean_lag_m: m.lag.mean,
            unconfirmed: m.lag.unconfirmed,
            relocated_fraction: m.relocation.fraction(),
            fps: timing.fps(),
        }
    }
}

pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricsRow]) -> Result<(), IoError> {
    writeln!(w, "# schema: {METRICS_SCHEMA}")?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    if rows.is_empty() {
        csv.write_record([
            "scenario",
            "variant",
            "tp",
            "fp",
            "fn",
            "precision",
            "recall",
            "f1",
            "mean_lag_m",
            "unconfirmed",
            "relocated_fraction",
            "fps",
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: BufRead>(mut r: R) -> Result<Vec<MetricsRow>, IoError> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let found = first.trim().trim_start_matches("# schema:").trim();
    if found != METRICS_SCHEMA {
        return Err(IoError::Schema {
            expected: METRICS_SCHEMA.into(),
            found: found.into(),
        });
    }
    let mut csv = csv::Reader::from_reader(r);
    Ok(csv.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    schema: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object with a leading `schema` field.
pub fn to_tagged_json<T: Serialize>(schema: &str, body: &T) -> String {
    serde_json::to_string_pretty(&Tagged { schema, body }).expect("value serializes")
}

pub fn model_json(model: &SegmentedTunnelModel) -> String {
    #[derive(Serialize)]
    struct M<'a> {
        model: &'a SegmentedTunnelModel,
    }
    to_tagged_json(MODEL_SCHEMA, &M { model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate_scenario, SimFrame};

    #[test]
    fn frames_round_trip() {
        let s = super::super::scenarios::congestion(1);
        let mut s = s;
        s.duration = 1.0;
        let out = simulate_scenario(&s).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, FRAMES_SCHEMA, &out.frames).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"schema\":\"tunnelradar.frames/1\"}\n"));
        let back: Vec<SimFrame> = read_jsonl(buf.as_slice(), FRAMES_SCHEMA).unwrap();
        assert_eq!(back, out.frames);
    }

    #[test]
    fn schema_and_line_errors() {
        let e = read_jsonl::<_, SimFrame>("{\"schema\":\"x/1\"}\n".as_bytes(), FRAMES_SCHEMA).unwrap_err();
        assert!(matches!(e, IoError::Schema { .. }));
        let bad = "{\"schema\":\"tunnelradar.frames/1\"}\n\n{\"index\": 0}\n";
        match read_jsonl::<_, SimFrame>(bad.as_bytes(), FRAMES_SCHEMA).unwrap_err() {
            IoError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        assert!(matches!(
            read_jsonl::<_, SimFrame>("".as_bytes(), FRAMES_SCHEMA).unwrap_err(),
            IoError::MissingHeader(_)
        ));
    }

    #[test]
    fn metrics_csv_round_trip() {
        let row = MetricsRow {
            scenario: "straight".into(),
            variant: "full".into(),
            tp: 9,
            fp: 1,
            fn_: 2,
            precision: 0.9,
            recall: 9.0 / 11.0,
            f1: 0.857,
            mean_lag_m: None,
            unconfirmed: 0,
            relocated_fraction: 0.8,
            fps: 120.0,
        };
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[row.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema: tunnelradar.metrics/1"));
        assert_eq!(
            lines.next(),
            Some("scenario,variant,tp,fp,fn,precision,recall,f1,mean_lag_m,unconfirmed,relocated_fraction,fps")
        );
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), vec![row]);
    }

    #[test]
    fn model_dump_is_tagged() {
        let m = SegmentedTunnelModel::straight_default();
        let v: serde_json::Value = serde_json::from_str(&model_json(&m)).unwrap();
        assert_eq!(v["schema"], MODEL_SCHEMA);
        assert_eq!(v["model"]["roof_segments"].as_array().unwrap().len(), 12);
    }
}
