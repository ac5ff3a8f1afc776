//! On-disk formats: the OVLP overlap binary, CSV tables and number formatting.

use std::io::Write;
use std::path::Path;

use morpho_core::landscape::{OverlapMatrix, SweepRow};
use morpho_core::optimizers::{Method, TrainRow, TrainSummary};
use thiserror::Error;

pub const OVLP_MAGIC: &[u8; 4] = b"OVLP";
pub const OVLP_VERSION: u8 = 0x01;
/// Width of the zero-padded design index in overlap file names.
pub const INDEX_WIDTH: usize = 6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not an overlap file (bad magic)")]
    BadMagic,
    #[error("unsupported overlap version {0}")]
    BadVersion(u8),
    #[error("overlap file truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("overlap payload invalid: {0}")]
    Payload(String),
    #[error("{path}: line {line}: {message}")]
    Table { path: String, line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Formats `x` with 9 significant digits, trailing zeros trimmed, switching to
/// exponent notation outside `[1e-5, 1e9)`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn encode_overlap(o: &OverlapMatrix) -> Vec<u8> {
    let n = u16::try_from(o.n()).expect("grid size fits in 16 bits");
    let k = u8::try_from(o.k()).expect("environment count fits in 8 bits");
    let mut out = Vec::with_capacity(8 + o.cells().len());
    out.extend_from_slice(OVLP_MAGIC);
    out.push(OVLP_VERSION);
    out.push(k);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(o.cells());
    out
}

pub fn decode_overlap(bytes: &[u8]) -> Result<OverlapMatrix, FormatError> {
    if bytes.len() < 8 {
        return Err(FormatError::Truncated {
            expected: 8,
            got: bytes.len(),
        });
    }
    if &bytes[..4] != OVLP_MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes[4] != OVLP_VERSION {
        return Err(FormatError::BadVersion(bytes[4]));
    }
    let k = bytes[5] as usize;
    let n = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let expected = 8 + n * n;
    if bytes.len() != expected {
        return Err(FormatError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    OverlapMatrix::from_cells(n, k, bytes[8..].to_vec()).map_err(|e| FormatError::Payload(e.to_string()))
}

pub fn overlap_file_name(index: usize) -> String {
    format!("{index:0width$}.ovlp", width = INDEX_WIDTH)
}

pub fn metrics_csv(rows: &[SweepRow], k: usize) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["design_index".to_string()];
    header.extend(["l1x", "l1y", "l2x", "l2y"].map(String::from));
    header.extend((1..=k).map(|i| format!("g{i}")));
    header.extend(["m_l", "m_ci"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.index.to_string()];
        rec.extend(r.design.to_array().iter().map(|&v| fmt_sig(v)));
        rec.extend(r.metrics.counts.iter().map(|c| c.to_string()));
        rec.push(fmt_sig(r.metrics.m_l));
        rec.push(fmt_sig(r.metrics.m_ci));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| FormatError::Io(e.into_error()))
}

/// One parsed row of a metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub design_index: usize,
    pub design: [f64; 4],
    pub counts: Vec<usize>,
    pub m_l: f64,
    pub m_ci: f64,
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>, FormatError> {
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let k = headers.iter().filter(|h| h.starts_with('g')).count();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| FormatError::Table {
            path: name.clone(),
            line,
            message,
        };
        if rec.len() != 7 + k {
            return Err(bad(format!("expected {} fields, got {}", 7 + k, rec.len())));
        }
        let f = |j: usize| -> Result<f64, FormatError> {
            rec[j].parse().map_err(|_| bad(format!("column {} is not a number: {:?}", &headers[j], &rec[j])))
        };
        let u = |j: usize| -> Result<usize, FormatError> {
            rec[j].parse().map_err(|_| bad(format!("column {} is not a count: {:?}", &headers[j], &rec[j])))
        };
        out.push(MetricsRecord {
            design_index: u(0)?,
            design: [f(1)?, f(2)?, f(3)?, f(4)?],
            counts: (5..5 + k).map(u).collect::<Result<_, _>>()?,
            m_l: f(5 + k)?,
            m_ci: f(6 + k)?,
        });
    }
    Ok(out)
}

pub fn training_csv(rows: &[TrainRow]) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["design_index", "method", "seed", "evals_to_full_success", "final_loss", "envs_solved"])?;
    for r in rows {
        let evals = r.evals_to_full_success.map_or("-1".to_string(), |e| e.to_string());
        w.write_record([
            r.design_index.to_string(),
            r.method.to_string(),
            r.seed.to_string(),
            evals,
            fmt_sig(r.final_loss),
            r.envs_solved.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| FormatError::Io(e.into_error()))
}

pub fn read_training_csv(path: &Path) -> Result<Vec<TrainRow>, FormatError> {
    let name = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| FormatError::Table {
            path: name.clone(),
            line: i + 2,
            message,
        };
        if rec.len() != 6 {
            return Err(bad(format!("expected 6 fields, got {}", rec.len())));
        }
        let method: Method = rec[1].parse().map_err(|e: morpho_core::optimizers::OptError| bad(e.to_string()))?;
        let evals: i64 = rec[3].parse().map_err(|_| bad("bad evals_to_full_success".to_string()))?;
        out.push(TrainRow {
            design_index: rec[0].parse().map_err(|_| bad("bad design_index".to_string()))?,
            method,
            seed: rec[2].parse().map_err(|_| bad("bad seed".to_string()))?,
            evals_to_full_success: usize::try_from(evals).ok(),
            evals_used: 0,
            final_loss: rec[4].parse().map_err(|_| bad("bad final_loss".to_string()))?,
            envs_solved: rec[5].parse().map_err(|_| bad("bad envs_solved".to_string()))?,
        });
    }
    Ok(out)
}

pub fn training_summary_csv(rows: &[TrainSummary]) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["design_index", "method", "runs", "mean_evals", "censor_rate"])?;
    for r in rows {
        w.write_record([
            r.design_index.to_string(),
            r.method.to_string(),
            r.runs.to_string(),
            fmt_sig(r.mean_evals),
            fmt_sig(r.censor_rate),
        ])?;
    }
    w.into_inner().map_err(|e| FormatError::Io(e.into_error()))
}

/// Serializes each item as one JSON line.
pub fn json_lines<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("serializable record");
        out.write_all(b"\n").expect("in-memory write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(2.0 / 3.0), "0.666666667");
        assert_eq!(fmt_sig(123456789.4), "123456789");
        assert_eq!(fmt_sig(9.9999999996), "10");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(3001.0), "3001");
    }

    #[test]
    fn overlap_round_trip_is_bit_exact() {
        let o = OverlapMatrix::from_cells(3, 4, vec![0, 1, 2, 3, 4, 0, 1, 2, 3]).unwrap();
        let bytes = encode_overlap(&o);
        assert_eq!(&bytes[..8], &[b'O', b'V', b'L', b'P', 1, 4, 3, 0]);
        assert_eq!(bytes.len(), 8 + 9);
        assert_eq!(decode_overlap(&bytes).unwrap(), o);
    }

    #[test]
    fn overlap_decode_rejects_damage() {
        let o = OverlapMatrix::from_cells(2, 2, vec![0, 1, 2, 0]).unwrap();
        let bytes = encode_overlap(&o);
        assert!(matches!(decode_overlap(&bytes[..10]), Err(FormatError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_overlap(&bad), Err(FormatError::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_overlap(&bad), Err(FormatError::BadVersion(2))));
        let mut bad = bytes;
        bad[8] = 9;
        assert!(matches!(decode_overlap(&bad), Err(FormatError::Payload(_))));
    }

    #[test]
    fn file_names_are_padded() {
        assert_eq!(overlap_file_name(42), "000042.ovlp");
    }
}
