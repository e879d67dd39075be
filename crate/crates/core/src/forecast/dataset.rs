use std::collections::BTreeSet;
use std::io;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::gbrt::FeatureMatrix;
use crate::timeseries::Series;

/// One day's demand and the feature values available before that day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub demand: u32,
    /// Aligned with [`Dataset::feature_names`]; `None` is a missing cell.
    pub features: Vec<Option<f64>>,
}

/// Daily records sharing one feature schema.
///
/// Every feature for day `i` must be computable from information strictly
/// before day `i` (lagged counts, calendar flags, trailing totals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub records: Vec<DailyRecord>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, records: Vec<DailyRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for n in &feature_names {
            if n == "date" || n == "demand" || !seen.insert(n.as_str()) {
                return param(format!("feature name '{n}' is duplicated or reserved"));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != feature_names.len() {
                return param(format!("record {i} has {} features, expected {}", r.features.len(), feature_names.len()));
            }
            if let Some(c) = r.features.iter().position(|v| v.is_some_and(|v| !v.is_finite())) {
                return param(format!("record {i} feature '{}' is not finite", feature_names[c]));
            }
        }
        Ok(Self { feature_names, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.records.first().map(|r| r.date)
    }

    pub fn end_date(&self) -> Option<NaiveDate> {
        self.records.last().map(|r| r.date)
    }

    pub fn demands(&self) -> Vec<f64> {
        self.records.iter().map(|r| f64::from(r.demand)).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.records.iter().map(|r| r.date).collect()
    }

    /// Error unless dates advance by exactly one day per record.
    pub fn check_contiguous(&self) -> Result<()> {
        for (i, w) in self.records.windows(2).enumerate() {
            if w[1].date != w[0].date + Days::new(1) {
                return param(format!("dates not contiguous between record {i} ({}) and {} ({})", w[0].date, i + 1, w[1].date));
            }
        }
        Ok(())
    }

    pub fn demand_series(&self, period: usize) -> Result<Series> {
        self.check_contiguous()?;
        let Some(start) = self.start_date() else {
            return param("dataset is empty");
        };
        Series::new(start, self.demands(), period)
    }

    pub fn feature_matrix(&self) -> Result<FeatureMatrix> {
        let columns = (0..self.feature_names.len())
            .map(|c| self.records.iter().map(|r| r.features[c]).collect())
            .collect();
        FeatureMatrix::from_columns(self.feature_names.clone(), columns)
    }

    /// Records `range` with the same schema.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset { feature_names: self.feature_names.clone(), records: self.records[range].to_vec() }
    }

    /// Project onto `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::Parameter(format!("feature '{n}' not in dataset")))
            })
            .collect::<Result<_>>()?;
        let records = self
            .records
            .iter()
            .map(|r| DailyRecord { date: r.date, demand: r.demand, features: idx.iter().map(|&i| r.features[i]).collect() })
            .collect();
        Dataset::new(names.to_vec(), records)
    }

    /// Index of the first record dated after `date`.
    pub fn position_after(&self, date: NaiveDate) -> usize {
        self.records.partition_point(|r| r.date <= date)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string(), "demand".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.date.to_string(), r.demand.to_string()];
            row.extend(r.features.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("date") || headers.get(1) != Some("demand") {
            return Err(Error::Schema {
                row: 0,
                column: headers.iter().take(2).collect::<Vec<_>>().join(","),
                message: "header must start with date,demand".into(),
            });
        }
        let feature_names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut records = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let schema = |column: &str, message: String| Error::Schema { row, column: column.to_string(), message };
            let date = rec[0].parse::<NaiveDate>().map_err(|e| schema("date", e.to_string()))?;
            let demand = rec[1].parse::<u32>().map_err(|e| schema("demand", format!("'{}': {e}", &rec[1])))?;
            let features = feature_names
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let cell = rec[c + 2].trim();
                    if cell.is_empty() {
                        return Ok(None);
                    }
                    match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Some(v)),
                        _ => Err(schema(name, format!("'{cell}' is not a finite number"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            records.push(DailyRecord { date, demand, features });
        }
        Dataset::new(feature_names, records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let records = (0..5)
            .map(|i| DailyRecord {
                date: d0 + Days::new(i),
                demand: 90 + i as u32,
                features: vec![if i == 0 { None } else { Some(i as f64 * 0.1) }, Some(1.0 / 3.0)],
            })
            .collect();
        Dataset::new(vec!["a".into(), "b".into()], records).unwrap()
    }

    #[test]
    fn csv_round_trip_keeps_missing_cells() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,demand,a,b\n2020-03-01,90,,"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn schema_errors_name_row_and_column() {
        let bad = "date,demand,a\n2020-01-01,5,1.0\n2020-01-02,-3,2.0\n";
        match Dataset::read_csv(bad.as_bytes()) {
            Err(Error::Schema { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "demand")),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "date,demand,a\n2020-01-01,5,abc\n";
        assert!(matches!(Dataset::read_csv(bad.as_bytes()), Err(Error::Schema { row: 1, .. })));
        assert!(Dataset::read_csv("day,demand\n".as_bytes()).is_err());
    }

    #[test]
    fn select_and_contiguity() {
        let ds = sample();
        let b = ds.select(&["b".to_string()]).unwrap();
        assert_eq!(b.feature_names, vec!["b"]);
        assert_eq!(b.records[2].features, vec![Some(1.0 / 3.0)]);
        assert!(ds.select(&["zzz".to_string()]).is_err());
        assert!(ds.check_contiguous().is_ok());
        let mut gap = ds.clone();
        gap.records.remove(2);
        assert!(gap.check_contiguous().is_err());
    }
}
