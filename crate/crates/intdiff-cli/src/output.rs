//! CSV artifacts: fixed headers, 17-significant-digit floats (round-trip
//! exact), `NaN` spelled literally, LF line endings. Readers tolerate
//! exactly what the writers produce.

use intdiff::analysis::EstimatorTag;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path, source: std::io::Error) -> OutputError {
    OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, source: csv::Error) -> OutputError {
    OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> OutputError {
    OutputError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// 17 significant digits: enough to reproduce the exact f64 on parse.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(path: &Path, field: &str) -> Result<f64, OutputError> {
    field
        .parse::<f64>()
        .map_err(|e| format_err(path, format!("bad float `{field}`: {e}")))
}

pub const MAAE_HEADER: [&str; 9] = [
    "model",
    "estimator",
    "delta",
    "h",
    "n",
    "L",
    "maae",
    "rate_thm",
    "rate_remark2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MaaeRow {
    pub model: String,
    pub estimator: EstimatorTag,
    pub delta: f64,
    pub h: f64,
    pub n: u64,
    pub replications: usize,
    pub maae: f64,
    pub rate_thm: f64,
    pub rate_reference: f64,
}

pub fn write_maae_csv(path: &Path, rows: &[MaaeRow]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(MAAE_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.model.as_str(),
            r.estimator.name(),
            &fmt_float(r.delta),
            &fmt_float(r.h),
            &r.n.to_string(),
            &r.replications.to_string(),
            &fmt_float(r.maae),
            &fmt_float(r.rate_thm),
            &fmt_float(r.rate_reference),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub const CURVES_HEADER: [&str; 4] = ["x", "truth", "mean_direct", "mean_integrated"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurvesData {
    pub x: Vec<f64>,
    pub truth: Vec<f64>,
    pub mean_direct: Vec<f64>,
    pub mean_integrated: Vec<f64>,
}

/// Missing estimator columns are written as NaN so the schema stays fixed.
pub fn write_curves_csv(
    path: &Path,
    grid: &[f64],
    truth: &[f64],
    mean_direct: Option<&[f64]>,
    mean_integrated: Option<&[f64]>,
) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CURVES_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for (i, (&x, &t)) in grid.iter().zip(truth).enumerate() {
        let d = mean_direct.map_or(f64::NAN, |m| m[i]);
        let g = mean_integrated.map_or(f64::NAN, |m| m[i]);
        w.write_record([fmt_float(x), fmt_float(t), fmt_float(d), fmt_float(g)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_curves_csv(path: &Path) -> Result<CurvesData, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut data = CurvesData::default();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 4 {
            return Err(format_err(
                path,
                format!("expected 4 columns, got {}", record.len()),
            ));
        }
        data.x.push(parse_float(path, &record[0])?);
        data.truth.push(parse_float(path, &record[1])?);
        data.mean_direct.push(parse_float(path, &record[2])?);
        data.mean_integrated.push(parse_float(path, &record[3])?);
    }
    Ok(data)
}

pub const RATES_HEADER: [&str; 9] = [
    "delta",
    "h",
    "n",
    "rate_remark2",
    "maae_direct",
    "maae_integrated",
    "slope",
    "intercept",
    "correlation",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RatesRow {
    pub delta: f64,
    pub h: f64,
    pub n: u64,
    pub rate_reference: f64,
    pub maae_direct: f64,
    pub maae_integrated: f64,
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
}

pub fn write_rates_csv(path: &Path, rows: &[RatesRow]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(RATES_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            fmt_float(r.delta),
            fmt_float(r.h),
            r.n.to_string(),
            fmt_float(r.rate_reference),
            fmt_float(r.maae_direct),
            fmt_float(r.maae_integrated),
            fmt_float(r.slope),
            fmt_float(r.intercept),
            fmt_float(r.correlation),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_rates_csv(path: &Path) -> Result<Vec<RatesRow>, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 9 {
            return Err(format_err(
                path,
                format!("expected 9 columns, got {}", record.len()),
            ));
        }
        rows.push(RatesRow {
            delta: parse_float(path, &record[0])?,
            h: parse_float(path, &record[1])?,
            n: record[2]
                .parse::<u64>()
                .map_err(|e| format_err(path, format!("bad integer `{}`: {e}", &record[2])))?,
            rate_reference: parse_float(path, &record[3])?,
            maae_direct: parse_float(path, &record[4])?,
            maae_integrated: parse_float(path, &record[5])?,
            slope: parse_float(path, &record[6])?,
            intercept: parse_float(path, &record[7])?,
            correlation: parse_float(path, &record[8])?,
        });
    }
    Ok(rows)
}

/// Observation records: integral observations with optional state column.
pub fn write_observation_csv(
    path: &Path,
    delta: f64,
    y_obs: &[f64],
    x_obs: Option<&[f64]>,
) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: &[&str] = if x_obs.is_some() {
        &["t", "y", "x"]
    } else {
        &["t", "y"]
    };
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for (i, &y) in y_obs.iter().enumerate() {
        let t = i as f64 * delta;
        match x_obs {
            Some(xs) => w.write_record([fmt_float(t), fmt_float(y), fmt_float(xs[i])]),
            None => w.write_record([fmt_float(t), fmt_float(y)]),
        }
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationData {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Option<Vec<f64>>,
}

pub fn read_observation_csv(path: &Path) -> Result<ObservationData, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let has_x = match headers.len() {
        2 => false,
        3 => true,
        other => {
            return Err(format_err(
                path,
                format!("expected columns t,y[,x], got {other} columns"),
            ))
        }
    };
    let mut t = Vec::new();
    let mut y = Vec::new();
    let mut x = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        t.push(parse_float(path, &record[0])?);
        y.push(parse_float(path, &record[1])?);
        if has_x {
            x.push(parse_float(path, &record[2])?);
        }
    }
    Ok(ObservationData {
        t,
        y,
        x: if has_x { Some(x) } else { None },
    })
}

/// Fine-grid path records (`t,x,y`), the `simulate` output without
/// subsampling.
pub fn write_fine_csv(path: &Path, dt: f64, x: &[f64], y: &[f64]) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["t", "x", "y"])
        .map_err(|e| csv_err(path, e))?;
    for (k, (&xv, &yv)) in x.iter().zip(y).enumerate() {
        w.write_record([fmt_float(k as f64 * dt), fmt_float(xv), fmt_float(yv)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Fitted-curve records from the `estimate` subcommand.
pub fn write_curve_csv(
    path: &Path,
    grid: &[f64],
    values: &[f64],
    denominators: &[f64],
) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["x", "estimate", "denominator"])
        .map_err(|e| csv_err(path, e))?;
    for i in 0..grid.len() {
        w.write_record([
            fmt_float(grid[i]),
            fmt_float(values[i]),
            fmt_float(denominators[i]),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_seventeen_digit_round_trip() {
        for &v in &[
            0.0001665,
            -2.789999999999,
            1.0 / 3.0,
            6.02e23,
            -0.0,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "via {s}");
        }
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert!("NaN".parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn rates_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rates.csv");
        let rows = vec![RatesRow {
            delta: 0.008,
            h: 0.12,
            n: 9000,
            rate_reference: 0.3710545687668676,
            maae_direct: 2.016e-4,
            maae_integrated: 2.07e-4,
            slope: f64::NAN,
            intercept: f64::NAN,
            correlation: f64::NAN,
        }];
        write_rates_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "delta,h,n,rate_remark2,maae_direct,maae_integrated,slope,intercept,correlation\n"
        ));
        assert!(!text.contains('\r'));
        let back = read_rates_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].delta, 0.008);
        assert_eq!(back[0].n, 9000);
        assert!(back[0].slope.is_nan());
        assert_eq!(back[0].maae_direct, 2.016e-4);
    }

    #[test]
    fn curves_csv_round_trips_with_missing_member() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves_test.csv");
        let grid = [0.078, 0.084, 0.09];
        let truth = [1.0, 2.0, 3.0];
        let mean_int = [1.1, 2.1, 3.1];
        write_curves_csv(&path, &grid, &truth, None, Some(&mean_int)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,truth,mean_direct,mean_integrated\n"));
        let data = read_curves_csv(&path).unwrap();
        assert_eq!(data.x, grid.to_vec());
        assert!(data.mean_direct.iter().all(|v| v.is_nan()));
        assert_eq!(data.mean_integrated, mean_int.to_vec());
    }

    #[test]
    fn maae_csv_has_exact_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("maae.csv");
        write_maae_csv(
            &path,
            &[MaaeRow {
                model: "cir".into(),
                estimator: EstimatorTag::Sigma2Direct,
                delta: 0.01,
                h: 0.03,
                n: 1000,
                replications: 200,
                maae: 1.665e-4,
                rate_thm: 0.9,
                rate_reference: 0.64,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("model,estimator,delta,h,n,L,maae,rate_thm,rate_remark2\n"));
        assert!(text.contains("cir,sigma2_direct,"));
        assert!(text.contains(",1000,200,"));
    }

    #[test]
    fn observation_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let y = [0.0, 0.1, 0.25];
        let x = [1.0, 1.5, 0.5];
        write_observation_csv(&path, 0.5, &y, Some(&x)).unwrap();
        let data = read_observation_csv(&path).unwrap();
        assert_eq!(data.t, vec![0.0, 0.5, 1.0]);
        assert_eq!(data.y, y.to_vec());
        assert_eq!(data.x, Some(x.to_vec()));

        let path2 = dir.path().join("obs2.csv");
        write_observation_csv(&path2, 0.5, &y, None).unwrap();
        let data2 = read_observation_csv(&path2).unwrap();
        assert_eq!(data2.x, None);
    }

    #[test]
    fn missing_file_error_names_the_path() {
        let err = read_rates_csv(Path::new("/nonexistent/rates.csv")).unwrap_err();
        assert!(err.to_string().contains("rates.csv"), "{err}");
    }
}
