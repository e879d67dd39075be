use std::io;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metrics::{mape, rmse};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub actual: Option<f64>,
    pub predicted: f64,
}

/// Dated point forecasts with accuracy metrics where actuals are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub rows: Vec<ForecastRow>,
    pub rmse: Option<f64>,
    /// Fraction, not percent. `None` when any actual is zero.
    pub mape: Option<f64>,
}

impl ForecastReport {
    pub fn new(dates: &[NaiveDate], actual: Option<&[f64]>, predicted: &[f64]) -> Result<Self> {
        check_len("dates vs predictions", dates.len(), predicted.len())?;
        if let Some(a) = actual {
            check_len("actuals vs predictions", a.len(), predicted.len())?;
        }
        let rows = dates
            .iter()
            .enumerate()
            .map(|(i, &date)| ForecastRow { date, actual: actual.map(|a| a[i]), predicted: predicted[i] })
            .collect();
        Ok(Self::from_rows(rows))
    }

    /// Metrics are computed only when every row has an actual.
    pub fn from_rows(rows: Vec<ForecastRow>) -> Self {
        let actual: Option<Vec<f64>> = rows.iter().map(|r| r.actual).collect();
        let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
        let (rmse, mape) = match actual {
            Some(a) if !a.is_empty() => (rmse(&predicted, &a).ok(), mape(&predicted, &a).ok()),
            _ => (None, None),
        };
        Self { rows, rmse, mape }
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.predicted).collect()
    }
}

pub fn write_forecast_csv<W: io::Write>(report: &ForecastReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "actual", "predicted"])?;
    for r in &report.rows {
        w.write_record([
            r.date.to_string(),
            r.actual.map(|a| a.to_string()).unwrap_or_default(),
            r.predicted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_forecast_csv<R: io::Read>(reader: R) -> Result<ForecastReport> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "actual", "predicted"] {
        return Err(Error::Schema {
            row: 0,
            column: headers.iter().collect::<Vec<_>>().join(","),
            message: "expected header date,actual,predicted".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let schema = |column: &str, message: String| Error::Schema { row, column: column.into(), message };
        let date = rec[0].parse::<NaiveDate>().map_err(|e| schema("date", e.to_string()))?;
        let actual = match rec[1].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| schema("actual", format!("'{s}': {e}")))?),
        };
        let predicted = rec[2].parse::<f64>().map_err(|e| schema("predicted", format!("'{}': {e}", &rec[2])))?;
        rows.push(ForecastRow { date, actual, predicted });
    }
    Ok(ForecastReport::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_has_no_metrics() {
        let rep = ForecastReport::new(&[], Some(&[]), &[]).unwrap();
        assert_eq!(rep.rmse, None);
        assert_eq!(rep.mape, None);
        let mut buf = Vec::new();
        write_forecast_csv(&rep, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim(), "date,actual,predicted");
        assert_eq!(read_forecast_csv(buf.as_slice()).unwrap(), rep);
    }

    #[test]
    fn round_trip_and_metrics() {
        let d = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        let dates = [d, d.succ_opt().unwrap()];
        let rep = ForecastReport::new(&dates, Some(&[100.0, 50.0]), &[110.0, 50.0]).unwrap();
        assert!((rep.rmse.unwrap() - 50f64.sqrt()).abs() < 1e-12);
        assert!((rep.mape.unwrap() - 0.05).abs() < 1e-12);
        let mut buf = Vec::new();
        write_forecast_csv(&rep, &mut buf).unwrap();
        assert_eq!(read_forecast_csv(buf.as_slice()).unwrap(), rep);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let d = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
        assert!(ForecastReport::new(&[d], None, &[1.0, 2.0]).is_err());
    }
}
