use serde::{Deserialize, Serialize};

use super::{EvaluateError, PredictionRecord};

pub const NUM_BINS: usize = 10;

/// Records with confidence in `(lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub correct: usize,
    /// `None` for an empty bin.
    pub accuracy: Option<f64>,
}

impl CalibrationBin {
    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }
}

fn upper(i: usize) -> f64 {
    (i + 1) as f64 / NUM_BINS as f64
}

/// Bin `i` covers `(0.1 i, 0.1 (i + 1)]`; the bounds are the decimal tenths.
pub fn bin_index(confidence: f64) -> Result<usize, EvaluateError> {
    if !(confidence > 0.0 && confidence <= 1.0) {
        return Err(EvaluateError::Confidence(confidence));
    }
    Ok((0..NUM_BINS).find(|&i| confidence <= upper(i)).unwrap_or(NUM_BINS - 1))
}

pub fn calibration_table(records: &[PredictionRecord]) -> Result<Vec<CalibrationBin>, EvaluateError> {
    let mut bins: Vec<CalibrationBin> = (0..NUM_BINS)
        .map(|i| CalibrationBin {
            index: i,
            lower: i as f64 / NUM_BINS as f64,
            upper: upper(i),
            n: 0,
            correct: 0,
            accuracy: None,
        })
        .collect();
    for r in records {
        let bin = &mut bins[bin_index(r.confidence)?];
        bin.n += 1;
        bin.correct += usize::from(r.correct);
    }
    for bin in &mut bins {
        if bin.n > 0 {
            bin.accuracy = Some(bin.correct as f64 / bin.n as f64);
        }
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::Strategy;
    use crate::dataset::FactKey;
    use proptest::prelude::*;

    fn record(confidence: f64, correct: bool) -> PredictionRecord {
        PredictionRecord {
            fact: FactKey::new("s", "P1"),
            final_text: "x".into(),
            confidence,
            correct,
            k: 1,
            strategy: Strategy::Sum,
        }
    }

    #[test]
    fn boundaries() {
        assert_eq!(bin_index(0.05).unwrap(), 0);
        assert_eq!(bin_index(0.1).unwrap(), 0);
        assert_eq!(bin_index(0.3).unwrap(), 2);
        assert_eq!(bin_index(0.30000000000000004).unwrap(), 3);
        assert_eq!(bin_index(1.0).unwrap(), 9);
        assert_eq!(bin_index(f64::MIN_POSITIVE).unwrap(), 0);
        assert!(bin_index(0.0).is_err());
        assert!(bin_index(1.0000001).is_err());
        assert!(bin_index(f64::NAN).is_err());
    }

    #[test]
    fn seven_of_seven_in_top_bin() {
        let mut records: Vec<_> = (0..7).map(|i| record(0.91 + i as f64 * 0.01, true)).collect();
        records.extend([record(0.15, false), record(0.55, true), record(0.55, false)]);
        let bins = calibration_table(&records).unwrap();
        // recount independently
        let in_top: Vec<_> = records.iter().filter(|r| r.confidence > 0.9).collect();
        assert_eq!(bins[9].n, in_top.len());
        assert_eq!(bins[9].accuracy, Some(in_top.iter().filter(|r| r.correct).count() as f64 / in_top.len() as f64));
        assert_eq!(bins[9].accuracy, Some(1.0));
        assert_eq!(bins[5].accuracy, Some(0.5));
        assert_eq!(bins[3].accuracy, None);
    }

    #[test]
    fn invalid_confidence_is_rejected() {
        assert_eq!(calibration_table(&[record(1.5, true)]), Err(EvaluateError::Confidence(1.5)));
    }

    proptest! {
        #[test]
        fn every_record_lands_in_exactly_one_bin(confs in proptest::collection::vec((1u32..=1000, any::<bool>()), 0..200)) {
            let records: Vec<_> = confs.iter().map(|(c, ok)| record(*c as f64 / 1000.0, *ok)).collect();
            let bins = calibration_table(&records).unwrap();
            prop_assert_eq!(bins.iter().map(|b| b.n).sum::<usize>(), records.len());
            for r in &records {
                let hits = bins.iter().filter(|b| r.confidence > b.lower && r.confidence <= b.upper).count();
                prop_assert_eq!(hits, 1);
            }
        }
    }
}
