use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub kernel: String,
    /// A strategy name, or `gap:<strategy>` for iteration-gap rows.
    pub strategy: String,
    pub fmt: String,
    pub procs: usize,
    pub param: String,
    pub seed: u64,
    pub abs_error: Option<f64>,
    pub iterations: Option<i64>,
    pub repro_pct: Option<f64>,
    pub wall_ns: u64,
    /// Empty when the run succeeded.
    pub error_flag: String,
}

pub const CSV_HEADER: [&str; 12] = [
    "kernel",
    "strategy",
    "fmt",
    "P",
    "param",
    "seed",
    "abs_error",
    "iterations",
    "repro_pct",
    "wall_ns",
    "error_flag",
    "abs_error_hex",
];

#[derive(Serialize, Deserialize)]
struct Row {
    kernel: String,
    strategy: String,
    fmt: String,
    #[serde(rename = "P")]
    procs: usize,
    param: String,
    seed: u64,
    abs_error: Option<f64>,
    iterations: Option<i64>,
    repro_pct: Option<f64>,
    wall_ns: u64,
    error_flag: String,
    abs_error_hex: Option<String>,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

pub fn write_records<W: Write>(w: W, records: &[ExperimentRecord]) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(Row {
            kernel: r.kernel.clone(),
            strategy: r.strategy.clone(),
            fmt: r.fmt.clone(),
            procs: r.procs,
            param: r.param.clone(),
            seed: r.seed,
            abs_error: r.abs_error,
            iterations: r.iterations,
            repro_pct: r.repro_pct,
            wall_ns: r.wall_ns,
            error_flag: r.error_flag.clone(),
            abs_error_hex: r.abs_error.map(to_hex),
        })?;
    }
    if records.is_empty() {
        out.write_record(CSV_HEADER)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a file produced by [`write_records`]. `abs_error` is taken from the
/// hex column when present, and the decimal column must agree with it.
pub fn read_records<R: Read>(r: R) -> Result<Vec<ExperimentRecord>, CsvError> {
    let mut input = csv::Reader::from_reader(r);
    let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(CsvError::Header(header));
    }
    let mut records = Vec::new();
    for (i, row) in input.deserialize::<Row>().enumerate() {
        let row = row?;
        let bad = |msg: String| CsvError::Row { row: i + 1, msg };
        let abs_error = match (&row.abs_error, &row.abs_error_hex) {
            (None, None) => None,
            (Some(dec), Some(hex)) => {
                let v = parse_hex(hex).ok_or_else(|| bad(format!("bad hex float `{hex}`")))?;
                if v.to_bits() != dec.to_bits() {
                    return Err(bad(format!("abs_error {dec} disagrees with {hex}")));
                }
                Some(v)
            }
            _ => return Err(bad("abs_error and abs_error_hex must be both present or both empty".into())),
        };
        records.push(ExperimentRecord {
            kernel: row.kernel,
            strategy: row.strategy,
            fmt: row.fmt,
            procs: row.procs,
            param: row.param,
            seed: row.seed,
            abs_error,
            iterations: row.iterations,
            repro_pct: row.repro_pct,
            wall_ns: row.wall_ns,
            error_flag: row.error_flag,
        });
    }
    Ok(records)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_csv_atomic(path: &Path, records: &[ExperimentRecord]) -> Result<(), CsvError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write_records(&mut tmp, records)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// C99-style hex float, e.g. `0x1.8p-1`.
pub fn to_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, e) = match (exp, frac) {
        (0, 0) => return format!("{sign}0x0p+0"),
        (0, _) => (0, -1022),
        _ => (1, exp - 1023),
    };
    let digits = format!("{frac:013x}");
    let digits = digits.trim_end_matches('0');
    let dot = if digits.is_empty() { "" } else { "." };
    format!("{sign}0x{lead}{dot}{digits}p{e:+}")
}

/// Inverse of [`to_hex`]; accepts only its canonical output.
pub fn parse_hex(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let value = match body {
        "nan" if !neg => return Some(f64::NAN),
        "inf" => f64::INFINITY,
        _ => {
            let body = body.strip_prefix("0x")?;
            let (mant, exp) = body.split_once('p')?;
            let e: i32 = exp.parse().ok()?;
            let (lead, digits) = match mant.split_once('.') {
                Some((l, d)) if !d.is_empty() => (l, d),
                Some(_) => return None,
                None => (mant, ""),
            };
            if digits.len() > 13 {
                return None;
            }
            let frac = if digits.is_empty() {
                0
            } else {
                u64::from_str_radix(digits, 16).ok()? << (4 * (13 - digits.len()))
            };
            match lead {
                "1" if (-1022..=1023).contains(&e) => f64::from_bits((((e + 1023) as u64) << 52) | frac),
                "0" if frac == 0 && e == 0 => 0.0,
                "0" if frac != 0 && e == -1022 => f64::from_bits(frac),
                _ => return None,
            }
        }
    };
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(abs_error: Option<f64>) -> ExperimentRecord {
        ExperimentRecord {
            kernel: "simpson".into(),
            strategy: "bucketed".into(),
            fmt: "b32".into(),
            procs: 4,
            param: "f=cos b=2".into(),
            seed: 7,
            abs_error,
            iterations: None,
            repro_pct: Some(12.5),
            wall_ns: 1234,
            error_flag: String::new(),
        }
    }

    #[test]
    fn hex_examples() {
        assert_eq!(to_hex(1.0), "0x1p+0");
        assert_eq!(to_hex(0.75), "0x1.8p-1");
        assert_eq!(to_hex(-0.0), "-0x0p+0");
        assert_eq!(to_hex(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(to_hex(f64::MAX), "0x1.fffffffffffffp+1023");
        for x in [0.1, -3.5e-300, 5e-324, 1e300, 0.0, f64::INFINITY, -f64::INFINITY] {
            assert_eq!(parse_hex(&to_hex(x)).unwrap().to_bits(), x.to_bits(), "{x}");
        }
        assert!(parse_hex(&to_hex(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse_hex("0x2p+0"), None);
        assert_eq!(parse_hex("0x1.p+0"), None);
    }

    #[test]
    fn csv_round_trip() {
        let mut rows = vec![record(Some(0.1 + 0.2)), record(None), record(Some(5e-324))];
        rows[1].strategy = "gap:bucketed".into();
        rows[1].iterations = Some(-3);
        rows[1].repro_pct = None;
        rows[2].error_flag = "zero-pivot".into();
        rows[2].param = "n=3, with comma".into();
        let mut buf = Vec::new();
        write_records(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("kernel,strategy,fmt,P,param,seed,abs_error,iterations,repro_pct,wall_ns,error_flag,abs_error_hex\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn empty_file_has_header() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim_end(), CSV_HEADER.join(","));
        assert!(read_records(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn inconsistent_hex_is_rejected() {
        let text = format!("{}\nsum,naive,b32,1,n=1,1,0.5,,,0,,0x1p+0\n", CSV_HEADER.join(","));
        assert!(matches!(read_records(text.as_bytes()), Err(CsvError::Row { row: 1, .. })));
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv_atomic(&path, &[record(Some(2.0))]).unwrap();
        let back = read_records(std::fs::File::open(&path).unwrap()).unwrap();
        assert_eq!(back, vec![record(Some(2.0))]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
