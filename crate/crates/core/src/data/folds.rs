use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Dataset;

/// Class-balanced train and validation indices of one fold, sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Validation fold of every sample before class balancing.
    pub assignments: Vec<usize>,
    pub folds: Vec<Fold>,
}

/// k-fold split. With subject ids, whole subjects are assigned greedily
/// (largest first) to the fold whose class loads stay most even; without
/// them, each class is shuffled and dealt round-robin. Train and val of
/// every fold are then balanced by down-sampling the majority class.
pub fn make_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Folds(format!("k must be at least 2, got {k}")));
    }
    let counts = dataset.class_counts();
    if counts.iter().any(|&c| c < k) {
        return Err(Error::Folds(format!(
            "each class needs at least {k} samples, have {counts:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = dataset.labels();
    let assignments = match dataset.subject_ids() {
        Some(ids) => assign_subjects(ids, labels, k, counts, &mut rng),
        None => assign_samples(labels, k, &mut rng),
    };

    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let (val, train): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| assignments[i] == f);
        let val = balance(val, labels, &mut rng)
            .map_err(|c| Error::Folds(format!("class {c} absent from validation fold {f}")))?;
        let train = balance(train, labels, &mut rng).map_err(|c| {
            Error::Folds(format!("class {c} absent from training split of fold {f}"))
        })?;
        folds.push(Fold { train, val });
    }
    Ok(FoldPlan {
        k,
        assignments,
        folds,
    })
}

fn assign_samples(labels: &[u8], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = vec![0; labels.len()];
    let mut dealt = 0;
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            out[i] = dealt % k;
            dealt += 1;
        }
    }
    out
}

fn assign_subjects(
    ids: &[i64],
    labels: &[u8],
    k: usize,
    totals: [usize; 2],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut per_subject: BTreeMap<i64, [usize; 2]> = BTreeMap::new();
    for (&id, &l) in ids.iter().zip(labels) {
        per_subject.entry(id).or_default()[l as usize] += 1;
    }
    let mut subjects: Vec<(i64, [usize; 2])> = per_subject.into_iter().collect();
    subjects.shuffle(rng);
    // stable: equal sizes keep their shuffled order
    subjects.sort_by_key(|(_, c)| std::cmp::Reverse(c[0] + c[1]));

    let mut load = vec![[0usize; 2]; k];
    let mut fold_of = BTreeMap::new();
    for (id, c) in subjects {
        let cost = |f: usize| {
            let worst = (0..2)
                .map(|j| (load[f][j] + c[j]) as f64 / totals[j] as f64)
                .fold(0.0, f64::max);
            (worst, load[f][0] + load[f][1], f)
        };
        let best = (0..k)
            .min_by(|&a, &b| cost(a).partial_cmp(&cost(b)).expect("finite loads"))
            .expect("k ≥ 2");
        load[best][0] += c[0];
        load[best][1] += c[1];
        fold_of.insert(id, best);
    }
    ids.iter().map(|id| fold_of[id]).collect()
}

/// Down-samples the majority class to the minority count; `Err(class)` when
/// a class is missing.
fn balance(
    indices: Vec<usize>,
    labels: &[u8],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<usize>, u8> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        indices.into_iter().partition(|&i| labels[i] == 1);
    if neg.is_empty() {
        return Err(0);
    }
    if pos.is_empty() {
        return Err(1);
    }
    let keep = pos.len().min(neg.len());
    let majority = if pos.len() > keep { &mut pos } else { &mut neg };
    if majority.len() > keep {
        majority.shuffle(rng);
        majority.truncate(keep);
    }
    let mut out: Vec<usize> = pos.into_iter().chain(neg).collect();
    out.sort_unstable();
    Ok(out)
}
