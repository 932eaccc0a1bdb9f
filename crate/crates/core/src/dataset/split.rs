use std::collections::BTreeSet;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SampleMeta};

/// Walk-forward plan: set `k` trains on plan days `1..=k*block` and tests on
/// the following `test_days`. Plan day 1 is calendar day `skip_days`
/// (zero-based), leaving room for the detector warm-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPlan {
    pub train_block_days: u32,
    pub test_days: u32,
    pub n_sets: u32,
    pub skip_days: u32,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self { train_block_days: 50, test_days: 10, n_sets: 7, skip_days: 2, validation_fraction: 0.15, seed: 0 }
    }
}

impl SplitPlan {
    /// `(training plan days, test plan days)` per set, one-based inclusive.
    pub fn plan_days(&self) -> Vec<((u32, u32), (u32, u32))> {
        (1..=self.n_sets)
            .map(|k| {
                let train_end = k * self.train_block_days;
                ((1, train_end), (train_end + 1, train_end + self.test_days))
            })
            .collect()
    }

    pub fn calendar_day(&self, plan_day: u32) -> u32 {
        plan_day - 1 + self.skip_days
    }

    /// Sets whose test days fit inside `n_calendar_days`.
    pub fn feasible_sets(&self, n_calendar_days: u32) -> usize {
        self.plan_days().iter().filter(|(_, (_, te))| self.calendar_day(*te) < n_calendar_days).count()
    }
}

/// Sample indices of one walk-forward set.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub index: usize,
    /// Calendar days, half-open.
    pub train_days: Range<u32>,
    pub test_days: Range<u32>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Minute groups held out for validation, keyed by (stock, day, minute).
fn validation_groups(metas: &[SampleMeta], days: Range<u32>, plan: &SplitPlan) -> BTreeSet<(u32, u32, u32)> {
    let mut by_day: Vec<BTreeSet<(u32, u32)>> = vec![BTreeSet::new(); days.len()];
    for m in metas {
        if days.contains(&m.day) {
            by_day[(m.day - days.start) as usize].insert((m.stock, m.end_minute));
        }
    }
    let mut out = BTreeSet::new();
    for (k, groups) in by_day.into_iter().enumerate() {
        let day = days.start + k as u32;
        let groups: Vec<_> = groups.into_iter().collect();
        let n_val = (groups.len() as f64 * plan.validation_fraction).round() as usize;
        if n_val == 0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ ((day as u64 + 1) << 32));
        let start = rng.gen_range(0..=groups.len() - n_val);
        for &(stock, minute) in &groups[start..start + n_val] {
            out.insert((stock, day, minute));
        }
    }
    out
}

/// Splits samples into the feasible walk-forward sets.
///
/// Validation takes a contiguous, seeded block of base minutes on each
/// training day; all variants of a minute go to the same side.
pub fn split(metas: &[SampleMeta], plan: &SplitPlan, n_calendar_days: u32) -> Result<Vec<SplitSet>, DatasetError> {
    if !(0.0..1.0).contains(&plan.validation_fraction) || plan.train_block_days == 0 || plan.test_days == 0 {
        return Err(DatasetError::InvalidConfig(format!("bad split plan {plan:?}")));
    }
    let mut sets = Vec::new();
    for (k, ((_, tr_end), (te_start, te_end))) in plan.plan_days().into_iter().enumerate().take(plan.feasible_sets(n_calendar_days)) {
        let train_days = plan.calendar_day(1)..plan.calendar_day(tr_end) + 1;
        let test_days = plan.calendar_day(te_start)..plan.calendar_day(te_end) + 1;
        let val = validation_groups(metas, train_days.clone(), plan);
        let mut set = SplitSet {
            index: k,
            train_days: train_days.clone(),
            test_days: test_days.clone(),
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
        };
        for (i, m) in metas.iter().enumerate() {
            if train_days.contains(&m.day) {
                if val.contains(&(m.stock, m.day, m.end_minute)) {
                    set.validation.push(i);
                } else {
                    set.train.push(i);
                }
            } else if test_days.contains(&m.day) {
                set.test.push(i);
            }
        }
        check_disjoint(metas, &set)?;
        sets.push(set);
    }
    Ok(sets)
}

fn check_disjoint(metas: &[SampleMeta], set: &SplitSet) -> Result<(), DatasetError> {
    let key = |i: &usize| (metas[*i].stock, metas[*i].day, metas[*i].end_minute);
    let train: BTreeSet<_> = set.train.iter().map(key).collect();
    if let Some(g) = set.validation.iter().map(key).find(|g| train.contains(g)) {
        return Err(DatasetError::OverlapViolation(format!("minute group {g:?} in train and validation")));
    }
    if let Some(&i) = set.test.iter().find(|i| set.train_days.contains(&metas[**i].day)) {
        return Err(DatasetError::OverlapViolation(format!("test sample {i} falls on a training day")));
    }
    Ok(())
}
