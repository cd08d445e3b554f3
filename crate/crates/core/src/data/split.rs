use rand::seq::SliceRandom;

use super::{GroupId, GroupedDataset};
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Stratified train/test split: each group is shuffled with its own stream and
/// `round(n_s * test_fraction)` of its rows (at least one, at most `n_s - 1`)
/// go to the test part. Both parts keep the input row order.
pub fn train_test_split(
    data: &GroupedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(GroupedDataset, GroupedDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Domain {
            what: "test_fraction",
            value: test_fraction,
        });
    }
    let mut is_test = vec![false; data.len()];
    for (g, mut idx) in data.indices_by_group().into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let group = GroupId(g as u32);
        if idx.len() < 2 {
            return Err(Error::GroupTooSmall {
                group,
                size: idx.len(),
                needed: 2,
            });
        }
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        idx.shuffle(&mut stream(seed, Domain::TrainTest, g as u64));
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (row, t) in data.rows().iter().zip(is_test) {
        if t { &mut test } else { &mut train }.push(row.clone());
    }
    Ok((data.with_rows(train), data.with_rows(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Row;
    use proptest::prelude::*;

    fn dataset(groups: &[u32]) -> GroupedDataset {
        let rows = groups
            .iter()
            .enumerate()
            .map(|(i, &s)| Row {
                id: i as u64,
                x: vec![i as f64],
                s: GroupId(s),
                y: Some(0.0),
            })
            .collect();
        GroupedDataset::new(1, vec!["a".into(), "b".into(), "c".into()], rows).unwrap()
    }

    #[test]
    fn balanced_seventy_thirty() {
        let groups: Vec<u32> = (0..100).map(|i| i % 2).collect();
        let (train, test) = train_test_split(&dataset(&groups), 0.3, 5).unwrap();
        assert_eq!((train.len(), test.len()), (70, 30));
        assert_eq!(test.group_counts()["a"], 15);
        assert_eq!(test.group_counts()["b"], 15);
        let again = train_test_split(&dataset(&groups), 0.3, 5).unwrap();
        assert_eq!(again.1, test);
    }

    #[test]
    fn tiny_group_is_rejected() {
        assert!(matches!(
            train_test_split(&dataset(&[0, 0, 1]), 0.3, 0),
            Err(Error::GroupTooSmall { size: 1, .. })
        ));
        assert!(train_test_split(&dataset(&[0, 0]), 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn parts_partition_the_input(
            groups in prop::collection::vec(0u32..3, 2..200),
            frac in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let data = dataset(&groups);
            prop_assume!(data.indices_by_group().iter().all(|g| g.is_empty() || g.len() >= 2));
            let (train, test) = train_test_split(&data, frac, seed).unwrap();
            let mut ids: Vec<u64> = train.rows().iter().chain(test.rows()).map(|r| r.id).collect();
            ids.sort_unstable();
            prop_assert_eq!(ids, (0..groups.len() as u64).collect::<Vec<_>>());
        }
    }
}
