use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evaluation::peaks::{field_slices, find_peaks, Cutoff, SliceId, SlicePeaks};
use crate::store::FimField;

/// Up to `n_s` guessed peak positions on one slice. The slice ends `0` and
/// `1` are always implicit guesses.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicePrediction {
    pub id: SliceId,
    pub guesses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceScore {
    pub id: SliceId,
    /// Squared distance of each inner peak to its closest guess.
    pub squared: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakRmseReport {
    pub slices: Vec<SliceScore>,
    /// Total number of inner peaks.
    pub n_inner: usize,
    /// `None` when there are no inner peaks to score.
    pub rmse: Option<f64>,
}

impl PeakRmseReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("slice\tn_inner\tsum_sq\n");
        for s in &self.slices {
            writeln!(out, "{}\t{}\t{}", s.id, s.squared.len(), s.squared.iter().sum::<f64>()).unwrap();
        }
        out
    }

    pub fn summary(&self) -> String {
        match self.rmse {
            Some(r) => format!("peak_rmse={r} n_inner={}", self.n_inner),
            None => format!("peak_rmse=nan n_inner={}", self.n_inner),
        }
    }
}

/// Scores predictions against ground-truth peaks.
///
/// Every slice with inner peaks needs a prediction; predictions for slices
/// absent from the truth are rejected, as are guesses outside `[0, 1]` or
/// more guesses than the slice's budget.
pub fn peak_rmse(truth: &[SlicePeaks], predictions: &[SlicePrediction]) -> Result<PeakRmseReport> {
    let truth_by_id: BTreeMap<SliceId, &SlicePeaks> = truth.iter().map(|s| (s.id, s)).collect();
    let mut pred_by_id = BTreeMap::new();
    for p in predictions {
        let t = truth_by_id
            .get(&p.id)
            .ok_or_else(|| Error::InvalidArgument(format!("prediction for unknown slice {}", p.id)))?;
        if p.guesses.len() > t.budget() {
            return Err(Error::InvalidArgument(format!(
                "slice {}: {} guesses exceed the budget of {}",
                p.id,
                p.guesses.len(),
                t.budget()
            )));
        }
        if let Some(g) = p.guesses.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidArgument(format!("slice {}: guess {g} outside [0, 1]", p.id)));
        }
        if pred_by_id.insert(p.id, p).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate prediction for slice {}", p.id)));
        }
    }
    let mut slices = Vec::new();
    let mut total = 0.0;
    let mut n_inner = 0;
    for t in truth {
        let inner: Vec<f64> = t.inner().map(|p| p.position).collect();
        if inner.is_empty() {
            continue;
        }
        let pred = pred_by_id
            .get(&t.id)
            .ok_or_else(|| Error::InvalidArgument(format!("no prediction for slice {}", t.id)))?;
        let squared: Vec<f64> = inner
            .iter()
            .map(|&y| {
                let d = pred.guesses.iter().chain(&[0.0, 1.0]).map(|x| (x - y).abs()).fold(f64::INFINITY, f64::min);
                d * d
            })
            .collect();
        total += squared.iter().sum::<f64>();
        n_inner += squared.len();
        slices.push(SliceScore { id: t.id, squared });
    }
    let rmse = (n_inner > 0).then(|| (total / n_inner as f64).sqrt());
    Ok(PeakRmseReport { slices, n_inner, rmse })
}

/// Guesses read off an estimated field: on each truth slice, the positions
/// of the `n_s` most prominent local maxima of the estimate.
pub fn predictions_from_field(estimate: &FimField, truth: &[SlicePeaks], cutoff: Cutoff) -> Result<Vec<SlicePrediction>> {
    let slices: BTreeMap<SliceId, (Vec<f64>, Vec<f64>)> =
        field_slices(estimate).into_iter().map(|(id, pos, v)| (id, (pos, v))).collect();
    truth
        .iter()
        .map(|t| {
            let (pos, v) = slices
                .get(&t.id)
                .ok_or_else(|| Error::InvalidArgument(format!("estimate has no slice {}", t.id)))?;
            let mut peaks = find_peaks(v, cutoff.resolve(v));
            peaks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence).then(a.index.cmp(&b.index)));
            let mut guesses: Vec<f64> = peaks.iter().take(t.budget()).map(|p| pos[p.index]).collect();
            guesses.sort_by(f64::total_cmp);
            Ok(SlicePrediction { id: t.id, guesses })
        })
        .collect()
}

/// One line per slice: `axis:fixed` then tab-separated guesses.
pub fn predictions_to_tsv(preds: &[SlicePrediction]) -> String {
    let mut out = String::new();
    for p in preds {
        write!(out, "{}", p.id).unwrap();
        for g in &p.guesses {
            write!(out, "\t{g}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn predictions_from_tsv(text: &str) -> Result<Vec<SlicePrediction>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let mut cols = line.split('\t');
            let id = cols.next().unwrap_or("").trim().parse()?;
            let guesses = cols
                .filter(|c| !c.trim().is_empty())
                .map(|c| c.trim().parse().map_err(|_| Error::malformed("predictions", line)))
                .collect::<Result<_>>()?;
            Ok(SlicePrediction { id, guesses })
        })
        .collect()
}
