//! Command-line orchestration: CSV ingestion, fit/detection/verification
//! runs, and JSON output assembly.
//!
//! Exit codes: 0 on success, 2 on data or usage errors, 3 when a fit fails
//! to converge or any verification check fails. JSON is always assembled in
//! full before a single write, so failure paths never emit partial output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RawRow};
use crate::error::{Error, Result};
use crate::fit::{fit_mle, fit_penalized, FitConfig, FitResult, FitStatus};
use crate::harness::verify::{run_verification, VerifyReport};
use crate::link::LinkKind;
use crate::separation::{detect_separation, SeparationReport};

/// Version tag carried by every JSON document.
pub const SCHEMA_TAG: &str = "firth-fit/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Fit,
    CheckSeparation,
    Verify,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub subcommand: Subcommand,
    pub input: Option<String>,
    pub link: LinkKind,
    pub penalized: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: Option<String>,
}

impl RunSpec {
    pub fn fit(input: impl Into<String>) -> Self {
        Self {
            subcommand: Subcommand::Fit,
            input: Some(input.into()),
            link: LinkKind::Logit,
            penalized: true,
            tol: 1e-8,
            max_iter: 200,
            seed: 7,
            out: None,
        }
    }

    pub fn check_separation(input: impl Into<String>) -> Self {
        Self {
            subcommand: Subcommand::CheckSeparation,
            ..Self::fit(input)
        }
    }

    pub fn verify(seed: u64) -> Self {
        Self {
            subcommand: Subcommand::Verify,
            input: None,
            seed,
            ..Self::fit(String::new())
        }
    }
}

/// The single JSON document emitted by every subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema: String,
    pub spec: RunSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<SeparationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
}

pub struct RunOutput {
    pub exit_code: i32,
    pub record: OutputRecord,
    pub summary: String,
}

/// Read a dataset from CSV with the fixed header `y,m,x1,...,xp`.
pub fn read_csv_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ParseError(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ParseError(e.to_string()))?
        .clone();
    if headers.len() < 3 || &headers[0] != "y" || &headers[1] != "m" {
        return Err(Error::ParseError(
            "header must be y,m,x1,...,xp".to_string(),
        ));
    }
    for j in 2..headers.len() {
        let expected = format!("x{}", j - 1);
        if &headers[j] != expected.as_str() {
            return Err(Error::ParseError(format!(
                "column {} is named '{}', expected '{expected}'",
                j, &headers[j]
            )));
        }
    }
    let parse = |field: &str, line: usize| -> Result<f64> {
        if field.is_empty() {
            return Err(Error::ParseError(format!("missing value on line {line}")));
        }
        field
            .parse::<f64>()
            .map_err(|_| Error::ParseError(format!("bad number '{field}' on line {line}")))
    };
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ParseError(e.to_string()))?;
        let line = idx + 2;
        if record.len() != headers.len() {
            return Err(Error::ParseError(format!(
                "line {line} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        let y = parse(&record[0], line)?;
        let m = parse(&record[1], line)?;
        let mut x = Vec::with_capacity(headers.len() - 2);
        for j in 2..headers.len() {
            x.push(parse(&record[j], line)?);
        }
        rows.push(RawRow { y, m, x });
    }
    Dataset::validate(&rows)
}

/// JSON with every float printed to 17 significant digits, enough to
/// round-trip f64 exactly and to make repeated runs byte-identical.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    struct SciFormatter;
    impl serde_json::ser::Formatter for SciFormatter {
        fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
        where
            W: ?Sized + Write,
        {
            write!(writer, "{value:.16e}")
        }

        fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
        where
            W: ?Sized + Write,
        {
            write!(writer, "{value:.16e}")
        }
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::ParseError(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::ParseError(e.to_string()))
}

/// Execute a resolved invocation. Data errors surface as `Err`; the caller
/// maps those to exit code 2 with no JSON at all.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    match spec.subcommand {
        Subcommand::Fit => run_fit(spec),
        Subcommand::CheckSeparation => run_check(spec),
        Subcommand::Verify => run_verify(spec),
    }
}

fn fit_config(spec: &RunSpec) -> FitConfig {
    FitConfig {
        grad_tol: spec.tol,
        max_iter: spec.max_iter,
        ..FitConfig::default()
    }
}

fn load_input(spec: &RunSpec) -> Result<Dataset> {
    let path = spec
        .input
        .as_ref()
        .ok_or_else(|| Error::ParseError("no input file given".to_string()))?;
    read_csv_dataset(Path::new(path))
}

fn run_fit(spec: &RunSpec) -> Result<RunOutput> {
    let ds = load_input(spec)?;
    let cfg = fit_config(spec);
    let fit = if spec.penalized {
        fit_penalized(&ds, spec.link, &cfg)?
    } else {
        fit_mle(&ds, spec.link, &cfg)?
    };
    let separation = detect_separation(&ds)?;
    let exit_code = if fit.status == FitStatus::Converged { 0 } else { 3 };
    let summary = format!(
        "{} fit ({}): {:?} after {} iterations; beta = {:?}; grad inf-norm = {:.3e}; separation: {:?}",
        if spec.penalized { "penalized" } else { "unpenalized" },
        spec.link,
        fit.status,
        fit.iterations,
        fit.beta_hat,
        fit.grad_norm,
        separation.kind,
    );
    Ok(RunOutput {
        exit_code,
        record: OutputRecord {
            schema: SCHEMA_TAG.to_string(),
            spec: spec.clone(),
            fit: Some(fit),
            separation: Some(separation),
            verify: None,
        },
        summary,
    })
}

fn run_check(spec: &RunSpec) -> Result<RunOutput> {
    let ds = load_input(spec)?;
    let separation = detect_separation(&ds)?;
    let summary = format!(
        "separation: {:?} (separated = {}, optimum = {:.3e})",
        separation.kind, separation.separated, separation.optimum
    );
    Ok(RunOutput {
        exit_code: 0,
        record: OutputRecord {
            schema: SCHEMA_TAG.to_string(),
            spec: spec.clone(),
            fit: None,
            separation: Some(separation),
            verify: None,
        },
        summary,
    })
}

fn run_verify(spec: &RunSpec) -> Result<RunOutput> {
    let verify = run_verification(spec.seed)?;
    let exit_code = if verify.all_ok { 0 } else { 3 };
    let summary = format!(
        "verification (seed {}): envelopes {}/{}, decay {}/{}, inequalities {}/{}, existence {}/{} -> {}",
        spec.seed,
        verify.envelopes.iter().filter(|s| s.ok).count(),
        verify.envelopes.len(),
        verify.decay.iter().filter(|s| s.ok).count(),
        verify.decay.len(),
        verify.inequalities.iter().filter(|s| s.all_ok).count(),
        verify.inequalities.len(),
        verify.existence.iter().filter(|s| s.ok).count(),
        verify.existence.len(),
        if verify.all_ok { "ok" } else { "FAILED" },
    );
    Ok(RunOutput {
        exit_code,
        record: OutputRecord {
            schema: SCHEMA_TAG.to_string(),
            spec: spec.clone(),
            fit: None,
            separation: None,
            verify: Some(verify),
        },
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn csv_roundtrip_and_fit() {
        let f = write_csv("y,m,x1\n0,1,-1\n1,1,1\n");
        let mut spec = RunSpec::fit(f.path().to_string_lossy());
        spec.out = None;
        let out = run(&spec).unwrap();
        assert_eq!(out.exit_code, 0);
        let fit = out.record.fit.as_ref().unwrap();
        assert!((fit.beta_hat[0] - 5f64.ln()).abs() < 1e-6);
        assert!(out.record.separation.as_ref().unwrap().separated);
    }

    #[test]
    fn unpenalized_fit_on_separated_data_exits_three() {
        let f = write_csv("y,m,x1\n0,1,-1\n1,1,1\n");
        let mut spec = RunSpec::fit(f.path().to_string_lossy());
        spec.penalized = false;
        let out = run(&spec).unwrap();
        assert_eq!(out.exit_code, 3);
        assert_eq!(
            out.record.fit.unwrap().status,
            FitStatus::DivergenceSuspected
        );
    }

    #[test]
    fn csv_rejects_bad_headers_and_values() {
        let f = write_csv("a,b,c\n1,1,1\n");
        assert!(matches!(
            read_csv_dataset(f.path()),
            Err(Error::ParseError(_))
        ));
        let f = write_csv("y,m,x1\n1,1,\n");
        assert!(matches!(
            read_csv_dataset(f.path()),
            Err(Error::ParseError(_))
        ));
        let f = write_csv("y,m,x1\n2,1,0.5\n");
        assert!(matches!(
            read_csv_dataset(f.path()),
            Err(Error::CountOutOfRange { .. })
        ));
    }

    #[test]
    fn crlf_is_accepted() {
        let f = write_csv("y,m,x1\r\n0,1,-1\r\n1,1,1\r\n");
        let ds = read_csv_dataset(f.path()).unwrap();
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn json_round_trips_losslessly() {
        let f = write_csv("y,m,x1\n0,1,-1\n1,1,1\n");
        let out = run(&RunSpec::fit(f.path().to_string_lossy())).unwrap();
        let json = to_json_string(&out.record).unwrap();
        let parsed: OutputRecord = serde_json::from_str(&json).unwrap();
        let json2 = to_json_string(&parsed).unwrap();
        assert_eq!(json, json2);
        assert_eq!(parsed.schema, SCHEMA_TAG);
        assert_eq!(
            parsed.fit.as_ref().unwrap().beta_hat[0].to_bits(),
            out.record.fit.as_ref().unwrap().beta_hat[0].to_bits()
        );
    }

    #[test]
    fn sci_formatter_prints_17_significant_digits() {
        let json = to_json_string(&vec![5f64.ln()]).unwrap();
        assert_eq!(json, "[1.6094379124341003e0]");
    }
}
