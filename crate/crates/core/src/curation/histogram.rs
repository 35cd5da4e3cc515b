use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scoring::is_neg_inf;

pub const DEFAULT_BIN_WIDTH_DB: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo_db: f64,
    pub hi_db: f64,
    pub count: u64,
}

/// Fixed-width histogram of frame scores. Bin `i` covers
/// `[i·width, (i+1)·width)`; −∞ sentinels are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoHistogram {
    pub bin_width_db: f64,
    pub bins: Vec<HistogramBin>,
    pub neg_inf: u64,
    pub total: u64,
}

impl RhoHistogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>, bin_width_db: f64) -> Self {
        assert!(bin_width_db > 0.0, "bin width must be positive");
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        let mut neg_inf = 0;
        let mut total = 0;
        for v in values {
            total += 1;
            if is_neg_inf(v) {
                neg_inf += 1;
            } else {
                *counts.entry((v / bin_width_db).floor() as i64).or_default() += 1;
            }
        }
        let bins = counts
            .into_iter()
            .map(|(i, count)| HistogramBin {
                lo_db: i as f64 * bin_width_db,
                hi_db: (i + 1) as f64 * bin_width_db,
                count,
            })
            .collect();
        Self {
            bin_width_db,
            bins,
            neg_inf,
            total,
        }
    }

    /// Count in bins lying entirely at or above `db`.
    pub fn count_at_least(&self, db: f64) -> u64 {
        self.bins.iter().filter(|b| b.lo_db >= db).map(|b| b.count).sum()
    }

    /// Count in bins lying entirely at or below `db`, plus −∞ entries.
    pub fn count_at_most(&self, db: f64) -> u64 {
        self.neg_inf + self.bins.iter().filter(|b| b.hi_db <= db).map(|b| b.count).sum::<u64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::scoring::NEG_INF_SENTINEL;

    #[test]
    fn single_bin() {
        let h = RhoHistogram::from_values(vec![22.0; 12], 5.0);
        assert_eq!(
            h.bins,
            vec![HistogramBin {
                lo_db: 20.0,
                hi_db: 25.0,
                count: 12
            }]
        );
        assert_eq!(h.total, 12);
    }

    #[test]
    fn sentinels_and_edges() {
        let h = RhoHistogram::from_values(vec![NEG_INF_SENTINEL, 45.0, 44.999, -3.0], 5.0);
        assert_eq!(h.neg_inf, 1);
        assert_eq!(h.count_at_least(45.0), 1);
        assert_eq!(h.count_at_most(0.0), 2);
        assert_eq!(h.bins[0].lo_db, -5.0);
    }
}
