use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::error::{param, Result};

/// Sum daily values into alternating Tue–Thu and Fri–Mon blocks, each
/// labelled by its first date. Leading and trailing partial blocks are dropped.
pub fn aggregate_semiweekly(daily: &[(NaiveDate, f64)]) -> Result<Vec<(NaiveDate, f64)>> {
    for w in daily.windows(2) {
        if w[1].0 != w[0].0 + Days::new(1) {
            return param(format!("dates not contiguous: {} then {}", w[0].0, w[1].0));
        }
    }
    let Some(start) = daily.iter().position(|(d, _)| matches!(d.weekday(), Weekday::Tue | Weekday::Fri)) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut i = start;
    while i < daily.len() {
        let len = block_len(daily[i].0);
        if i + len > daily.len() {
            break;
        }
        out.push((daily[i].0, daily[i..i + len].iter().map(|(_, v)| v).sum()));
        i += len;
    }
    Ok(out)
}

/// Days covered by the block starting on `start` (a Tuesday or a Friday).
pub(crate) fn block_len(start: NaiveDate) -> usize {
    if start.weekday() == Weekday::Tue { 3 } else { 4 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn days(start: NaiveDate, values: &[f64]) -> Vec<(NaiveDate, f64)> {
        values.iter().enumerate().map(|(i, v)| (start + Days::new(i as u64), *v)).collect()
    }

    #[test]
    fn block_sums() {
        let tue = NaiveDate::from_ymd_opt(2018, 1, 2).unwrap();
        assert_eq!(tue.weekday(), Weekday::Tue);
        let out = aggregate_semiweekly(&days(tue, &[90.0, 95.0, 100.0, 80.0, 70.0, 60.0, 90.0])).unwrap();
        assert_eq!(out, vec![(tue, 285.0), (tue + Days::new(3), 300.0)]);
    }

    #[test]
    fn partial_blocks_dropped() {
        let wed = NaiveDate::from_ymd_opt(2018, 1, 3).unwrap();
        let out = aggregate_semiweekly(&days(wed, &[1.0; 10])).unwrap();
        // Wed, Thu dropped; Fri-Mon kept; Tue-Thu kept; trailing Fri dropped
        assert_eq!(out, vec![(wed + Days::new(2), 4.0), (wed + Days::new(6), 3.0)]);
        assert!(aggregate_semiweekly(&[]).unwrap().is_empty());
        let gap = vec![(wed, 1.0), (wed + Days::new(2), 1.0)];
        assert!(aggregate_semiweekly(&gap).is_err());
    }
}
