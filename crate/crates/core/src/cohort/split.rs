use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result, Warning};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "TRAIN",
            Self::Val => "VAL",
            Self::Test => "TEST",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(t))
            .or_else(|| t.eq_ignore_ascii_case("validation").then_some(Split::Val))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split {t:?}")))
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.as_array();
        if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument(format!("split ratios must be positive, got {r:?}")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub assignment: BTreeMap<u64, Split>,
}

impl SplitAssignment {
    pub fn get(&self, hadm_id: u64) -> Option<Split> {
        self.assignment.get(&hadm_id).copied()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|s| **s == split).count()
    }
}

/// Hamilton apportionment of `n` items; equal remainders go to the earlier split.
pub(crate) fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut counts = quotas.map(|q| libm::floor(q + 1e-9) as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    let rem = |i: usize| quotas[i] - counts[i] as f64;
    // Stable sort keeps TRAIN, VAL, TEST order for remainders within 1e-9.
    order.sort_by(|&a, &b| {
        let (ra, rb) = (rem(a), rem(b));
        if (ra - rb).abs() <= 1e-9 {
            core::cmp::Ordering::Equal
        } else {
            rb.total_cmp(&ra)
        }
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Seeded stratified split over `(hadm_id, label)` pairs.
///
/// Each label stratum is sorted by HADM_ID and shuffled with its own seeded
/// stream, so the result does not depend on input order. The overall split
/// sizes follow largest-remainder rounding of `ratios * N`; every stratum
/// except the largest is apportioned on its own and the largest takes the
/// remaining quota. Strata with fewer than three rows go entirely to TRAIN.
pub fn stratified_split(
    items: &[(u64, u8)],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(SplitAssignment, Vec<Warning>)> {
    ratios.validate()?;
    if items.is_empty() {
        return Err(Error::Empty("no rows to split"));
    }
    let mut strata: BTreeMap<u8, Vec<u64>> = BTreeMap::new();
    for &(hadm, label) in items {
        strata.entry(label).or_default().push(hadm);
    }
    let mut warnings = Vec::new();
    let mut all: Vec<u64> = items.iter().map(|(h, _)| *h).collect();
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate HADM_ID in split input".into()));
    }
    for ids in strata.values_mut() {
        ids.sort_unstable();
    }

    let r = ratios.as_array();
    let targets = largest_remainder(items.len(), r);
    let mut sizes: BTreeMap<u8, [usize; 3]> = BTreeMap::new();
    let absorber = strata
        .iter()
        .filter(|(_, ids)| ids.len() >= 3)
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(label, _)| *label);
    for (&label, ids) in &strata {
        if ids.len() < 3 {
            warnings.push(Warning::new(
                "stratified_split",
                format!("label {label} has only {} rows; all assigned to TRAIN", ids.len()),
            ));
            sizes.insert(label, [ids.len(), 0, 0]);
        } else if Some(label) != absorber {
            sizes.insert(label, largest_remainder(ids.len(), r));
        }
    }
    if let Some(label) = absorber {
        let n = strata[&label].len();
        let mut rest = [0i64; 3];
        for (i, slot) in rest.iter_mut().enumerate() {
            let used: usize = sizes.values().map(|s| s[i]).sum();
            *slot = targets[i] as i64 - used as i64;
        }
        let fits = rest.iter().all(|&x| x >= 0) && rest.iter().sum::<i64>() == n as i64;
        let own = if fits {
            rest.map(|x| x as usize)
        } else {
            largest_remainder(n, r)
        };
        sizes.insert(label, own);
    }

    let mut assignment = BTreeMap::new();
    for (label, mut ids) in strata {
        let mut gen = rng::seeded(seed, u64::from(label));
        ids.shuffle(&mut gen);
        let [n_train, n_val, _] = sizes[&label];
        for (pos, hadm) in ids.into_iter().enumerate() {
            let split = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            assignment.insert(hadm, split);
        }
    }
    Ok((
        SplitAssignment {
            seed,
            ratios,
            assignment,
        },
        warnings,
    ))
}
