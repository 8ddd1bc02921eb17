//! Level-wise Apriori baseline: two phases, the first producing frequent
//! items, the second growing frequent (k+1)-itemsets from frequent
//! k-itemsets until none remain. Candidates come from the self-join of the
//! previous level, pruned by the subset property; counting enumerates each
//! transaction's combinations against the candidate set, parallelized per
//! transaction partition.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use crate::dataset::TransactionDB;
use crate::exec::{PartitionedCollection, WorkerPool};
use crate::{ItemId, Support};

use super::{Itemset, MinerError, PipelineOutput};

pub(super) fn run(
    db: &TransactionDB,
    min_count: Support,
    pool: &WorkerPool,
) -> Result<PipelineOutput, MinerError> {
    let mut phase_ms = [0.0; 4];

    // Phase 1: frequent items.
    let t = Instant::now();
    let transactions =
        PartitionedCollection::from_vec(db.transactions().iter().collect::<Vec<_>>())
            .repartition(pool.workers())
            .expect("worker count >= 1");
    let partials: Vec<HashMap<ItemId, Support>> = transactions.accumulate_partials(
        pool,
        HashMap::new,
        |acc, tr| {
            for &item in tr.items() {
                *acc.entry(item).or_insert(0) += 1;
            }
        },
    );
    let mut counts: HashMap<ItemId, Support> = HashMap::new();
    for partial in partials {
        for (item, c) in partial {
            *counts.entry(item).or_insert(0) += c;
        }
    }
    let mut frequent_items: Vec<(ItemId, Support)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    frequent_items.sort_unstable();
    let mut itemsets: Vec<Itemset> = frequent_items
        .iter()
        .map(|&(item, support)| Itemset::new(vec![item], support))
        .collect();
    phase_ms[0] = ms_since(t);

    // Phase 2: generate-prune-count loop, all levels.
    let t = Instant::now();
    let mut level: Vec<Vec<ItemId>> = frequent_items
        .iter()
        .map(|&(item, _)| vec![item])
        .collect();
    while !level.is_empty() {
        let candidates = generate_candidates(&level);
        if candidates.is_empty() {
            break;
        }
        let k = candidates[0].len();
        let index: HashMap<&[ItemId], usize> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_slice(), i))
            .collect();
        let partials: Vec<Vec<Support>> = transactions.accumulate_partials(
            pool,
            || vec![0; candidates.len()],
            |acc, tr| {
                if tr.len() < k {
                    return;
                }
                let mut buf = Vec::with_capacity(k);
                for_each_combination(tr.items(), k, &mut buf, &mut |combo| {
                    if let Some(&i) = index.get(combo) {
                        acc[i] += 1;
                    }
                });
            },
        );
        let mut totals = vec![0; candidates.len()];
        for partial in partials {
            for (a, b) in totals.iter_mut().zip(partial) {
                *a += b;
            }
        }
        level = candidates
            .into_iter()
            .zip(&totals)
            .filter(|(_, &c)| c >= min_count)
            .map(|(items, &support)| {
                itemsets.push(Itemset::new(items.clone(), support));
                items
            })
            .collect();
    }
    phase_ms[3] = ms_since(t);

    Ok(PipelineOutput {
        itemsets,
        phase_ms,
        balance: None,
    })
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Self-join of the (lexicographically sorted) previous level: two itemsets
/// sharing their first k−1 items produce one candidate, kept only when all
/// of its k-subsets are frequent.
fn generate_candidates(prev: &[Vec<ItemId>]) -> Vec<Vec<ItemId>> {
    let k = prev.first().map_or(0, Vec::len);
    let prev_set: HashSet<&[ItemId]> = prev.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for i in 0..prev.len() {
        for j in i + 1..prev.len() {
            if prev[i][..k - 1] != prev[j][..k - 1] {
                break;
            }
            let mut candidate = prev[i].clone();
            candidate.push(prev[j][k - 1]);
            if all_subsets_frequent(&candidate, &prev_set) {
                out.push(candidate);
            }
        }
    }
    out
}

fn all_subsets_frequent(candidate: &[ItemId], prev_set: &HashSet<&[ItemId]>) -> bool {
    let mut subset = Vec::with_capacity(candidate.len() - 1);
    for skip in 0..candidate.len() {
        subset.clear();
        subset.extend(
            candidate
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &item)| item),
        );
        if !prev_set.contains(subset.as_slice()) {
            return false;
        }
    }
    true
}

fn for_each_combination(
    items: &[ItemId],
    k: usize,
    buf: &mut Vec<ItemId>,
    f: &mut impl FnMut(&[ItemId]),
) {
    if buf.len() == k {
        f(buf);
        return;
    }
    let needed = k - buf.len();
    let start = match buf.last() {
        Some(&last) => items.partition_point(|&x| x <= last),
        None => 0,
    };
    if items.len() - start < needed {
        return;
    }
    for idx in start..=items.len() - needed {
        buf.push(items[idx]);
        for_each_combination(items, k, buf, f);
        buf.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_join_on_shared_prefix() {
        let prev = vec![vec![1, 2], vec![1, 3], vec![2, 3], vec![2, 4]];
        let got = generate_candidates(&prev);
        // {1,2,3} joins from {1,2}+{1,3} and survives pruning; {2,3,4} is
        // pruned because {3,4} is not frequent.
        assert_eq!(got, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut seen = Vec::new();
        let mut buf = Vec::new();
        for_each_combination(&[1, 2, 3, 4], 2, &mut buf, &mut |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4],
            ]
        );
    }
}
