//! Published per-user, per-activity sample counts for the PAMAP2 protocol
//! activities, used to validate an ingested copy of the dataset.

use std::collections::BTreeMap;

use super::{ActivityId, PROTOCOL_ACTIVITIES};

/// Rows are users 1..=9, columns follow [`PROTOCOL_ACTIVITIES`].
pub const REFERENCE_COUNTS: [[usize; 12]; 9] = [
    [27187, 23480, 21717, 22253, 21265, 23575, 20265, 15890, 14899, 22941, 23573, 12912],
    [23430, 22345, 25576, 32533, 9238, 25108, 29739, 17342, 15213, 20683, 28880, 13262],
    [22044, 28761, 20533, 29036, 0, 0, 0, 10389, 15275, 20325, 27975, 0],
    [23047, 25492, 24706, 31932, 1, 22699, 27533, 16694, 14285, 20037, 24995, 0],
    [23699, 26864, 22132, 32033, 24646, 24577, 26271, 14281, 12727, 24445, 33034, 7733],
    [23340, 23041, 24356, 25721, 22825, 20486, 26686, 13291, 11272, 21078, 37744, 256],
    [25611, 12282, 25751, 33720, 3692, 22680, 28725, 17646, 11618, 21552, 29499, 0],
    [24165, 22923, 25160, 31533, 16532, 25475, 28888, 11683, 9655, 24292, 32990, 8806],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 6391],
];

/// Published total number of raw samples over all nine subjects.
pub const REFERENCE_RAW_TOTAL: usize = 1_926_896;

pub fn reference_counts(user_id: u8) -> Option<BTreeMap<ActivityId, usize>> {
    let row = REFERENCE_COUNTS.get((user_id as usize).checked_sub(1)?)?;
    Some(PROTOCOL_ACTIVITIES.iter().copied().zip(row.iter().copied()).collect())
}

pub fn reference_row_sum(user_id: u8) -> Option<usize> {
    reference_counts(user_id).map(|row| row.values().sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMismatch {
    pub user_id: u8,
    pub activity_id: ActivityId,
    pub expected: usize,
    pub actual: usize,
}

/// Cell-by-cell diff of observed protocol-activity counts against the
/// reference row. Users outside 1..=9 have no reference and yield no diff.
pub fn compare_with_reference(
    user_id: u8,
    counts: &BTreeMap<ActivityId, usize>,
) -> Vec<CountMismatch> {
    let Some(reference) = reference_counts(user_id) else {
        return Vec::new();
    };
    reference
        .into_iter()
        .filter_map(|(activity_id, expected)| {
            let actual = counts.get(&activity_id).copied().unwrap_or(0);
            (actual != expected).then_some(CountMismatch {
                user_id,
                activity_id,
                expected,
                actual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let u1 = reference_counts(1).unwrap();
        assert_eq!(u1[&1], 27187);
        assert_eq!(u1[&24], 12912);
        let u9 = reference_counts(9).unwrap();
        assert_eq!(u9[&24], 6391);
        assert_eq!(u9.values().filter(|&&c| c > 0).count(), 1);
        assert!(reference_counts(0).is_none());
        assert!(reference_counts(10).is_none());
    }

    #[test]
    fn user6_row_sum() {
        assert_eq!(reference_row_sum(6), Some(250_096));
    }

    #[test]
    fn diff_reports_each_cell() {
        let mut counts = reference_counts(2).unwrap();
        *counts.get_mut(&5).unwrap() -= 10;
        counts.remove(&24);
        let diff = compare_with_reference(2, &counts);
        assert_eq!(diff.len(), 2);
        assert_eq!(diff[0].activity_id, 5);
        assert_eq!(diff[0].expected - diff[0].actual, 10);
        assert_eq!(diff[1].actual, 0);
        assert!(compare_with_reference(2, &reference_counts(2).unwrap()).is_empty());
    }
}
