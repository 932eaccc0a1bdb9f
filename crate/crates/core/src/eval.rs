//! Confusion-matrix metrics, the coin-flip baseline and the per-set,
//! per-stock evaluation grid.
//!
//! Undefined ratios (a zero denominator) are reported as 0 and flagged.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("chance agreement is 1, kappa undefined")]
    DegenerateMarginals,
    #[error("grid cell (set {set}, stock {stock}) is missing: {reason}")]
    MissingCell { set: usize, stock: String, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Swaps the roles of the positive and negative class.
    pub fn swapped(&self) -> Self {
        Self { tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_, tn: self.tn + o.tn }
    }
}

/// Tallies predictions against labels with `positive` as the positive class.
pub fn confusion_for(predictions: &[u8], labels: &[u8], positive: u8) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p == positive, l == positive) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Binary confusion matrix, class 1 positive.
pub fn confusion(predictions: &[u8], labels: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    confusion_for(predictions, labels, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    PrecisionUndefined,
    RecallUndefined,
    F1Undefined,
    DegenerateMarginals,
}

impl MetricFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricFlag::PrecisionUndefined => "precision_undefined",
            MetricFlag::RecallUndefined => "recall_undefined",
            MetricFlag::F1Undefined => "f1_undefined",
            MetricFlag::DegenerateMarginals => "degenerate_marginals",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> (Scores, Vec<MetricFlag>) {
    let mut flags = Vec::new();
    let ratio = |num: u64, den: u64, flag: MetricFlag, flags: &mut Vec<MetricFlag>| {
        if den == 0 {
            flags.push(flag);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp, MetricFlag::PrecisionUndefined, &mut flags);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, MetricFlag::RecallUndefined, &mut flags);
    if precision + recall == 0.0 {
        flags.push(MetricFlag::F1Undefined);
    }
    (Scores { precision, recall, f1: f1_from(precision, recall) }, flags)
}

/// Cohen's kappa from observed and chance agreement.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let n = cm.total() as f64;
    if n == 0.0 {
        return Err(EvalError::Empty);
    }
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let po = (tp + tn) / n;
    let pc = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    if pc >= 1.0 {
        return Err(EvalError::DegenerateMarginals);
    }
    Ok((po - pc) / (1.0 - pc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub flags: Vec<MetricFlag>,
}

impl EvalReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self, EvalError> {
        let (s, mut flags) = precision_recall_f1(&cm);
        let kappa = match cohen_kappa(&cm) {
            Ok(k) => k,
            Err(EvalError::DegenerateMarginals) => {
                flags.push(MetricFlag::DegenerateMarginals);
                0.0
            }
            Err(e) => return Err(e),
        };
        Ok(Self { confusion: cm, precision: s.precision, recall: s.recall, f1: s.f1, kappa, flags })
    }

    pub fn from_predictions(predictions: &[u8], labels: &[u8]) -> Result<Self, EvalError> {
        Self::from_confusion(confusion(predictions, labels)?)
    }

    pub fn flags_text(&self) -> String {
        self.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join("|")
    }
}

/// Mean metrics of `trials` fair-coin classifiers on `labels`. The
/// confusion field sums the counts of all trials.
pub fn random_baseline(labels: &[u8], seed: u64, trials: usize) -> Result<EvalReport, EvalError> {
    if labels.is_empty() || trials == 0 {
        return Err(EvalError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = ConfusionMatrix::default();
    let (mut p, mut r, mut f, mut k) = (0.0, 0.0, 0.0, 0.0);
    let mut flags = Vec::new();
    let mut preds = vec![0u8; labels.len()];
    for _ in 0..trials {
        preds.iter_mut().for_each(|x| *x = rng.gen_bool(0.5) as u8);
        let rep = EvalReport::from_predictions(&preds, labels)?;
        p += rep.precision;
        r += rep.recall;
        f += rep.f1;
        k += rep.kappa;
        total = total + rep.confusion;
        for fl in rep.flags {
            if !flags.contains(&fl) {
                flags.push(fl);
            }
        }
    }
    let n = trials as f64;
    Ok(EvalReport { confusion: total, precision: p / n, recall: r / n, f1: f / n, kappa: k / n, flags })
}

/// Direction scores of a three-class model (0 none, 1 up, 2 down), taken
/// over the samples that are true jumps and were predicted as jumps, with
/// up jumps as the positive class and down jumps as the negative class.
pub fn direction_report(predictions: &[u8], labels: &[u8]) -> Result<EvalReport, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    let (p, l): (Vec<u8>, Vec<u8>) =
        predictions.iter().zip(labels).filter(|(p, l)| **p != 0 && **l != 0).map(|(p, l)| (*p, *l)).unzip();
    if p.is_empty() {
        return Err(EvalError::Empty);
    }
    EvalReport::from_confusion(confusion_for(&p, &l, 1)?)
}

/// Binary up/down labels (1 up, 0 down) of the samples [`direction_report`]
/// scores, for comparing against [`random_baseline`].
pub fn direction_labels(predictions: &[u8], labels: &[u8]) -> Vec<u8> {
    predictions.iter().zip(labels).filter(|(p, l)| **p != 0 && **l != 0).map(|(_, l)| (*l == 1) as u8).collect()
}

/// One evaluated (set, stock) pair with its stored predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub set: usize,
    pub stock: String,
    pub predictions: Vec<u8>,
    pub labels: Vec<u8>,
    pub report: EvalReport,
}

impl GridCell {
    pub fn recompute(&self) -> Result<EvalReport, EvalError> {
        EvalReport::from_predictions(&self.predictions, &self.labels)
    }
}

/// Sets by stocks. Averages are means of per-cell scores.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalGrid {
    pub sets: Vec<usize>,
    pub stocks: Vec<String>,
    pub cells: Vec<GridCell>,
    pub errors: Vec<EvalError>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub cells: usize,
}

impl MeanScores {
    fn of<'a>(cells: impl Iterator<Item = &'a GridCell>) -> Option<Self> {
        let mut m = MeanScores { precision: 0.0, recall: 0.0, f1: 0.0, kappa: 0.0, cells: 0 };
        for c in cells {
            m.precision += c.report.precision;
            m.recall += c.report.recall;
            m.f1 += c.report.f1;
            m.kappa += c.report.kappa;
            m.cells += 1;
        }
        if m.cells == 0 {
            return None;
        }
        let n = m.cells as f64;
        m.precision /= n;
        m.recall /= n;
        m.f1 /= n;
        m.kappa /= n;
        Some(m)
    }
}

/// Runs `cell` for every (set, stock) pair. A failing cell is recorded in
/// `errors` and left out of the averages.
pub fn rolling_grid<F>(sets: &[usize], stocks: &[String], mut cell: F) -> EvalGrid
where
    F: FnMut(usize, &str) -> Result<(Vec<u8>, Vec<u8>), String>,
{
    let mut grid = EvalGrid { sets: sets.to_vec(), stocks: stocks.to_vec(), ..Default::default() };
    for &set in sets {
        for stock in stocks {
            let outcome = cell(set, stock).and_then(|(predictions, labels)| {
                let report = EvalReport::from_predictions(&predictions, &labels).map_err(|e| e.to_string())?;
                Ok(GridCell { set, stock: stock.clone(), predictions, labels, report })
            });
            match outcome {
                Ok(c) => grid.cells.push(c),
                Err(reason) => grid.errors.push(EvalError::MissingCell { set, stock: stock.clone(), reason }),
            }
        }
    }
    grid
}

impl EvalGrid {
    pub fn cell(&self, set: usize, stock: &str) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.set == set && c.stock == stock)
    }

    pub fn is_complete(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn set_mean(&self, set: usize) -> Option<MeanScores> {
        MeanScores::of(self.cells.iter().filter(|c| c.set == set))
    }

    pub fn stock_mean(&self, stock: &str) -> Option<MeanScores> {
        MeanScores::of(self.cells.iter().filter(|c| c.stock == stock))
    }

    pub fn overall_mean(&self) -> Option<MeanScores> {
        MeanScores::of(self.cells.iter())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("set,stock,precision,recall,f1,kappa,tp,fp,fn,tn,flags\n");
        for c in &self.cells {
            let r = &c.report;
            let cm = r.confusion;
            writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
                c.set,
                c.stock,
                r.precision,
                r.recall,
                r.f1,
                r.kappa,
                cm.tp,
                cm.fp,
                cm.fn_,
                cm.tn,
                r.flags_text()
            )
            .unwrap();
        }
        for e in &self.errors {
            if let EvalError::MissingCell { set, stock, .. } = e {
                writeln!(s, "{set},{stock},,,,,,,,,missing").unwrap();
            }
        }
        s
    }

    /// F1 by set (rows) and stock (columns) with averages on both margins.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let width = self.stocks.iter().map(|s| s.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<5}", "Set");
        for st in &self.stocks {
            write!(out, " {st:>width$}").unwrap();
        }
        writeln!(out, " {:>width$}", "Avg").unwrap();
        for &set in &self.sets {
            write!(out, "{set:<5}").unwrap();
            for st in &self.stocks {
                write!(out, " {:>width$}", fmt(self.cell(set, st).map(|c| c.report.f1))).unwrap();
            }
            writeln!(out, " {:>width$}", fmt(self.set_mean(set).map(|m| m.f1))).unwrap();
        }
        write!(out, "{:<5}", "Avg").unwrap();
        for st in &self.stocks {
            write!(out, " {:>width$}", fmt(self.stock_mean(st).map(|m| m.f1))).unwrap();
        }
        writeln!(out, " {:>width$}", fmt(self.overall_mean().map(|m| m.f1))).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_counts() {
        let c = confusion(&[1, 1, 0, 0, 1], &[1, 0, 1, 0, 1]).unwrap();
        assert_eq!(c, cm(2, 1, 1, 1));
        assert_eq!(c.total(), 5);
        assert_eq!(confusion(&[1, 1], &[1, 0]).unwrap(), cm(1, 1, 0, 0));
        assert!(matches!(confusion(&[1], &[1, 0]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn degenerate_conventions() {
        let (s, flags) = precision_recall_f1(&cm(0, 0, 3, 7));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        assert!(flags.contains(&MetricFlag::PrecisionUndefined));
        assert!(flags.contains(&MetricFlag::F1Undefined));
        let (s, flags) = precision_recall_f1(&cm(5, 0, 0, 5));
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert!(flags.is_empty());
        assert_eq!(cohen_kappa(&cm(10, 0, 0, 0)), Err(EvalError::DegenerateMarginals));
        let r = EvalReport::from_confusion(cm(10, 0, 0, 0)).unwrap();
        assert_eq!(r.kappa, 0.0);
        assert!(r.flags.contains(&MetricFlag::DegenerateMarginals));
    }

    #[test]
    fn kappa_perfect_and_symmetric() {
        assert_eq!(cohen_kappa(&cm(30, 0, 0, 70)).unwrap(), 1.0);
        let c = cm(40, 20, 10, 130);
        assert!((cohen_kappa(&c).unwrap() - cohen_kappa(&c.swapped()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn direction_up_versus_down() {
        // Two correct up calls, one down mistaken for up; the no-jump rows drop out.
        let p = [1, 1, 1, 0, 2];
        let l = [1, 1, 2, 2, 0];
        let r = direction_report(&p, &l).unwrap();
        assert_eq!(r.confusion, cm(2, 1, 0, 0));
        assert!((r.f1 - 0.8).abs() < 1e-12);
        assert_eq!(direction_labels(&p, &l), vec![1, 1, 0]);
        assert!(direction_report(&[0], &[1]).is_err());
    }

    #[test]
    fn grid_layout() {
        let stocks: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let g = rolling_grid(&[1, 2], &stocks, |set, st| {
            if set == 2 && st == "B" {
                Err("no data".into())
            } else {
                Ok((vec![1, 0, 1, 1], vec![1, 0, 0, 1]))
            }
        });
        assert_eq!(g.cells.len(), 3);
        assert!(!g.is_complete());
        assert_eq!(g.set_mean(1).unwrap().cells, 2);
        assert_eq!(g.stock_mean("B").unwrap().cells, 1);
        let t = g.to_table();
        assert_eq!(t.lines().count(), 4);
        assert!(t.contains("0.80"));
        assert!(g.to_csv().contains("2,B,,,,,,,,,missing"));
    }
}
