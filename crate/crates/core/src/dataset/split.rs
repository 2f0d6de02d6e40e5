use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Label};
use crate::error::{Error, Result};

/// Splits `data` into `(train, test)` with `|test| = round(test_fraction * |data|)`.
///
/// Both halves keep the original instance order and the parent dimension.
/// With `stratified`, each class contributes to the test side in proportion,
/// off by at most one instance per class.
pub fn random_split(
    data: &Dataset,
    test_fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::arg(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if data.is_empty() {
        return Err(Error::arg("cannot split an empty dataset"));
    }
    let n = data.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut test_idx = if stratified {
        let (pos, neg) = class_indices(data)?;
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::arg("stratified split needs both classes"));
        }
        let (qp, qn) = class_quotas(pos.len(), neg.len(), test_fraction, n_test);
        let mut chosen = Vec::with_capacity(n_test);
        for (mut idx, quota) in [(pos, qp), (neg, qn)] {
            idx.shuffle(&mut rng);
            chosen.extend_from_slice(&idx[..quota]);
        }
        chosen
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n_test);
        idx
    };
    test_idx.sort_unstable();

    let mut in_test = vec![false; n];
    for &i in &test_idx {
        in_test[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((data.select(&train_idx), data.select(&test_idx)))
}

/// Partitions instance indices into `n_folds` stratified folds, each sorted.
pub fn stratified_folds(data: &Dataset, n_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::arg("need at least two folds"));
    }
    let (mut pos, mut neg) = class_indices(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); n_folds];
    for (slot, i) in pos.into_iter().chain(neg).enumerate() {
        folds[slot % n_folds].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn class_indices(data: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, x) in data.instances().iter().enumerate() {
        match x.label() {
            Some(Label::Pos) => pos.push(i),
            Some(Label::Neg) => neg.push(i),
            None => return Err(Error::arg(format!("instance {i} has no label"))),
        }
    }
    Ok((pos, neg))
}

/// Largest-remainder allocation of `total` test slots across the two classes.
fn class_quotas(n_pos: usize, n_neg: usize, fraction: f64, total: usize) -> (usize, usize) {
    let ep = fraction * n_pos as f64;
    let en = fraction * n_neg as f64;
    let (mut qp, mut qn) = (ep.floor() as usize, en.floor() as usize);
    let mut left = total.saturating_sub(qp + qn);
    let pos_first = ep - ep.floor() >= en - en.floor();
    for give_pos in [pos_first, !pos_first] {
        if left == 0 {
            break;
        }
        if give_pos && qp < n_pos {
            qp += 1;
            left -= 1;
        } else if !give_pos && qn < n_neg {
            qn += 1;
            left -= 1;
        }
    }
    (qp, qn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Instance;
    use proptest::prelude::*;

    fn toy(n_pos: usize, n_neg: usize) -> Dataset {
        let xs = (0..n_pos + n_neg)
            .map(|i| {
                let l = if i < n_pos { Label::Pos } else { Label::Neg };
                Instance::from_dense(&[i as f64 + 1.0], Some(l)).unwrap()
            })
            .collect();
        Dataset::new(xs)
    }

    fn ids(d: &Dataset) -> Vec<i64> {
        d.instances().iter().map(|x| x.features()[0].1 as i64).collect()
    }

    #[test]
    fn half_split_is_a_partition() {
        let d = toy(5, 5);
        let (tr, te) = random_split(&d, 0.5, false, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (5, 5));
        let mut all = ids(&tr);
        all.extend(ids(&te));
        all.sort();
        assert_eq!(all, (1..=10).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_partition() {
        let d = toy(5, 5);
        let a = random_split(&d, 0.5, false, 7).unwrap();
        let b = random_split(&d, 0.5, false, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stratified_counts() {
        let d = toy(6, 4);
        let (_, te) = random_split(&d, 0.5, true, 1).unwrap();
        assert_eq!(te.class_counts(), (3, 2));
    }

    #[test]
    fn rejects_bad_fraction() {
        let d = toy(2, 2);
        assert!(random_split(&d, 0.0, false, 0).is_err());
        assert!(random_split(&d, 1.0, false, 0).is_err());
        assert!(random_split(&Dataset::default(), 0.5, false, 0).is_err());
        assert!(random_split(&toy(3, 0), 0.5, true, 0).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let d = toy(7, 5);
        let folds = stratified_folds(&d, 2, 3).unwrap();
        let counts: Vec<_> = folds.iter().map(|f| d.select(f).class_counts()).collect();
        for (p, n) in counts {
            assert!((3..=4).contains(&p) && (2..=3).contains(&n));
        }
    }

    proptest! {
        #[test]
        fn split_never_loses_instances(
            n_pos in 1usize..30, n_neg in 1usize..30,
            frac in 0.01f64..0.99, strat: bool, seed: u64,
        ) {
            let d = toy(n_pos, n_neg);
            let (tr, te) = random_split(&d, frac, strat, seed).unwrap();
            let n = n_pos + n_neg;
            prop_assert_eq!(te.len(), (frac * n as f64).round() as usize);
            let mut all = ids(&tr);
            all.extend(ids(&te));
            all.sort();
            prop_assert_eq!(all, (1..=n as i64).collect::<Vec<_>>());
            if strat {
                let (tp, tn) = te.class_counts();
                prop_assert!((tp as f64 - frac * n_pos as f64).abs() <= 1.0);
                prop_assert!((tn as f64 - frac * n_neg as f64).abs() <= 1.0);
            }
        }
    }
}
