//! Real-data ingestion and preprocessing.

use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_pd, DataMatrix, SymMatrix};

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Cells treated as missing; their rows are dropped.
const MISSING: [&str; 3] = ["", "NA", "NaN"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadOptions {
    /// Column holding ISO dates; excluded from the numeric matrix.
    pub date_column: Option<String>,
    /// Numeric columns to keep, in this order; `None` keeps every non-date column.
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub values: DataMatrix,
    pub dates: Option<Vec<NaiveDate>>,
    /// Rows dropped at ingestion for missing cells.
    pub dropped: usize,
}

impl Dataset {
    pub fn new(names: Vec<String>, values: DataMatrix, dates: Option<Vec<NaiveDate>>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                got: names.len(),
            });
        }
        if names.len() < 2 {
            return Err(Error::InvalidParameter("a dataset needs at least two columns".into()));
        }
        if let Some(d) = &dates {
            if d.len() != values.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: values.nrows(),
                    got: d.len(),
                });
            }
        }
        Ok(Dataset {
            names,
            values,
            dates,
            dropped: 0,
        })
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Rows `start..end`, dates included.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            names: self.names.clone(),
            values: self.values.slice_rows(start, end),
            dates: self.dates.as_ref().map(|d| d[start..end].to_vec()),
            dropped: 0,
        }
    }
}

pub fn read_csv(path: impl AsRef<Path>, opts: &ReadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, opts).map_err(|e| e.context(path.display().to_string()))
}

pub fn read_csv_from(reader: impl std::io::Read, opts: &ReadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no column named `{name}`")))
    };
    let date_idx = opts.date_column.as_deref().map(find).transpose()?;
    let numeric: Vec<usize> = match &opts.columns {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&k| Some(k) != date_idx).collect(),
    };
    if numeric.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two numeric columns, found {}",
            numeric.len()
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dates = Vec::new();
    let mut dropped = 0;
    let mut seen = 0;
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        // Line 1 is the header.
        let line = record.position().map_or(k + 2, |p| p.line() as usize);
        seen += 1;
        let cell = |c: usize| record.get(c).unwrap_or("").trim();
        if numeric.iter().chain(date_idx.iter()).any(|&c| MISSING.contains(&cell(c))) {
            dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(numeric.len());
        for &c in &numeric {
            let raw = cell(c);
            let v: f64 = raw.parse().map_err(|_| Error::NonNumeric {
                column: headers[c].clone(),
                line,
                value: raw.to_string(),
            })?;
            row.push(v);
        }
        if let Some(d) = date_idx {
            let raw = cell(d);
            dates.push(NaiveDate::parse_from_str(raw, DATE_FORMAT).map_err(|_| Error::BadDate {
                value: raw.to_string(),
                line,
            })?);
        }
        rows.push(row);
    }
    if seen == 0 {
        return Err(Error::EmptyData);
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "every one of the {seen} data rows has a missing cell"
        )));
    }
    let names = numeric.iter().map(|&c| headers[c].clone()).collect();
    let mut ds = Dataset::new(
        names,
        DataMatrix::from_rows(&rows)?,
        date_idx.map(|_| dates),
    )?;
    ds.dropped = dropped;
    Ok(ds)
}

/// Writes the dataset with a header row; the date column, when present,
/// comes first under `date_header`. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset, date_header: &str) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(file, ds, date_header)
}

pub fn write_csv_to(writer: impl std::io::Write, ds: &Dataset, date_header: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::new();
    if ds.dates.is_some() {
        header.push(date_header);
    }
    header.extend(ds.names.iter().map(String::as_str));
    w.write_record(&header)?;
    for (i, row) in ds.values.rows().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(d) = &ds.dates {
            rec.push(d[i].format(DATE_FORMAT).to_string());
        }
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Trailing mean: output `k` averages inputs `k..k + window`.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    if series.len() < window {
        return Err(Error::InvalidParameter(format!(
            "series of length {} is shorter than the window {window}",
            series.len()
        )));
    }
    Ok(series
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect())
}

/// Applies [`moving_average`] to every column; dates keep the last day of
/// each window.
pub fn smooth_dataset(ds: &Dataset, window: usize) -> Result<Dataset> {
    let cols = ds
        .values
        .columns()
        .iter()
        .map(|c| moving_average(c, window))
        .collect::<Result<Vec<_>>>()?;
    let dates = ds.dates.as_ref().map(|d| d[window - 1..].to_vec());
    let mut out = Dataset::new(ds.names.clone(), DataMatrix::from_columns(&cols)?, dates)?;
    out.dropped = ds.dropped;
    Ok(out)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Per column: average ranks, `rank / (n + 1)`, then the standard normal
/// quantile.
pub fn nonparanormal_transform(x: &DataMatrix, names: &[String]) -> Result<DataMatrix> {
    let n = x.nrows();
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 rows, got {n}")));
    }
    let normal = Normal::standard();
    let mut out = Vec::with_capacity(x.ncols());
    for (j, col) in x.columns().into_iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
            return Err(Error::ConstantColumn(name));
        }
        out.push(
            average_ranks(&col)
                .into_iter()
                .map(|r| normal.inverse_cdf(r / (n as f64 + 1.0)))
                .collect::<Vec<f64>>(),
        );
    }
    DataMatrix::from_columns(&out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxMResult {
    /// Chi-square statistic `M·(1 − c)`.
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Box's M test for equal covariance matrices of two groups, chi-square
/// approximation. `s1`, `s2` are unbiased sample covariances.
pub fn boxs_m_test(s1: &SymMatrix, n1: usize, s2: &SymMatrix, n2: usize) -> Result<BoxMResult> {
    s1.check_dim(s2.dim())?;
    let p = s1.dim();
    if n1 <= p || n2 <= p {
        return Err(Error::InvalidParameter(format!(
            "each group needs more than {p} observations, got {n1} and {n2}"
        )));
    }
    let (f1, f2) = ((n1 - 1) as f64, (n2 - 1) as f64);
    let pooled = s1.scale(f1).add(&s2.scale(f2))?.scale(1.0 / (f1 + f2));
    let ld1 = cholesky_pd(s1)?.log_det();
    let ld2 = cholesky_pd(s2)?.log_det();
    let ldp = cholesky_pd(&pooled)?.log_det();
    let m = ((f1 + f2) * ldp - f1 * ld1 - f2 * ld2).max(0.0);
    let pf = p as f64;
    let c = (1.0 / f1 + 1.0 / f2 - 1.0 / (f1 + f2)) * (2.0 * pf * pf + 3.0 * pf - 1.0)
        / (6.0 * (pf + 1.0));
    let statistic = m * (1.0 - c);
    let df = pf * (pf + 1.0) / 2.0;
    let chi = ChiSquared::new(df).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p_value = if statistic > 0.0 {
        chi.sf(statistic).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(BoxMResult {
        statistic,
        df,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    /// Row range `start..end`.
    pub start: usize,
    pub end: usize,
}

impl Phase {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSplit {
    pub phases: Vec<Phase>,
    /// Phases too short for a PD sample covariance.
    pub warnings: Vec<String>,
}

impl PhaseSplit {
    pub fn get(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }
}

/// Splits the rows at each boundary date; a boundary opens a new phase at
/// the first row on or after it. Phases are named `phase1`, `phase2`, … unless
/// `names` gives one name per phase.
pub fn split_phases(ds: &Dataset, boundaries: &[NaiveDate], names: Option<&[String]>) -> Result<PhaseSplit> {
    let dates = ds
        .dates
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("dataset has no date column".into()))?;
    if dates.is_empty() {
        return Err(Error::EmptyData);
    }
    if !dates.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("dates are not in increasing order".into()));
    }
    if !boundaries.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter("boundaries must be strictly increasing".into()));
    }
    if let Some(names) = names {
        if names.len() != boundaries.len() + 1 {
            return Err(Error::DimensionMismatch {
                expected: boundaries.len() + 1,
                got: names.len(),
            });
        }
    }
    let (first, last) = (dates[0], dates[dates.len() - 1]);
    let mut cuts = vec![0];
    for b in boundaries {
        if *b <= first || *b > last {
            return Err(Error::BoundaryOutOfRange(format!("{b} (data spans {first} to {last})")));
        }
        cuts.push(dates.partition_point(|d| d < b));
    }
    cuts.push(dates.len());
    let p = ds.ncols();
    let mut phases = Vec::new();
    let mut warnings = Vec::new();
    for (k, w) in cuts.windows(2).enumerate() {
        let name = names.map_or_else(|| format!("phase{}", k + 1), |n| n[k].clone());
        let phase = Phase {
            name,
            start: w[0],
            end: w[1],
        };
        if phase.len() < p + 1 {
            warnings.push(format!(
                "phase `{}` has {} rows, fewer than p + 1 = {}",
                phase.name,
                phase.len(),
                p + 1
            ));
        }
        phases.push(phase);
    }
    Ok(PhaseSplit { phases, warnings })
}
