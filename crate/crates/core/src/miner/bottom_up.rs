//! Depth-first bottom-up search over an equivalence class.

use crate::equivclass::EquivalenceClass;
use crate::vertical::Tidset;
use crate::Support;

use super::{Itemset, MinerError};

struct Atom {
    /// Items in join order (the item-order sequence), not yet sorted by id.
    items: Vec<crate::ItemId>,
    tidset: Tidset,
}

/// Mines one equivalence class: returns exactly the frequent itemsets of
/// length ≥ 3 whose two smallest items (in item order) lie in this class.
/// Each itemset is generated by intersecting the tidsets of its two
/// generating subsets that share all but their last item; supports are the
/// intersection cardinalities, hence exact.
///
/// The recursion is depth-first: for each atom, all joins with its right
/// neighbours are collected into the next class, which is then decomposed
/// before moving to the following atom. Depth is bounded by the longest
/// transaction; exceeding `depth_limit` aborts with an error.
pub fn bottom_up(
    ec: &EquivalenceClass,
    min_count: Support,
    depth_limit: usize,
) -> Result<Vec<Itemset>, MinerError> {
    let atoms: Vec<Atom> = ec
        .atoms()
        .iter()
        .map(|(suffix, tidset)| Atom {
            items: vec![ec.prefix(), *suffix],
            tidset: tidset.clone(),
        })
        .collect();
    let mut out = Vec::new();
    recurse(&atoms, min_count, 1, depth_limit, &mut out)?;
    Ok(out)
}

fn recurse(
    atoms: &[Atom],
    min_count: Support,
    depth: usize,
    depth_limit: usize,
    out: &mut Vec<Itemset>,
) -> Result<(), MinerError> {
    if depth > depth_limit {
        return Err(MinerError::RecursionDepthExceeded { limit: depth_limit });
    }
    for i in 0..atoms.len() {
        let mut next = Vec::new();
        for j in i + 1..atoms.len() {
            let tidset = atoms[i].tidset.intersect(&atoms[j].tidset);
            // Tidsets shrink (or stay) as itemsets grow.
            debug_assert!(tidset.len() <= atoms[i].tidset.len().min(atoms[j].tidset.len()));
            if tidset.support() >= min_count {
                let mut items = atoms[i].items.clone();
                items.push(*atoms[j].items.last().expect("non-empty atom"));
                out.push(Itemset::new(items.clone(), tidset.support()));
                next.push(Atom { items, tidset });
            }
        }
        if !next.is_empty() {
            recurse(&next, min_count, depth + 1, depth_limit, out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::count_items;
    use crate::equivclass::build_classes;
    use crate::exec::WorkerPool;
    use crate::testutil::d1;
    use crate::vertical::build_vertical;

    fn d1_first_class(min_count: Support) -> EquivalenceClass {
        let db = d1();
        let freq = count_items(&db, min_count);
        let v = build_vertical(&db, &freq);
        let pool = WorkerPool::new(1).unwrap();
        let set = build_classes(&v, min_count, None, &pool);
        set.classes()
            .iter()
            .find(|c| c.prefix() == 1)
            .expect("class for prefix 1")
            .clone()
    }

    #[test]
    fn d1_prefix1_min3_yields_nothing() {
        let ec = d1_first_class(3);
        assert_eq!(ec.num_atoms(), 3);
        let out = bottom_up(&ec, 3, 64).unwrap();
        assert!(out.is_empty(), "all triples have support 2");
    }

    #[test]
    fn d1_prefix1_min2_yields_three_triples() {
        let ec = d1_first_class(2);
        let out = bottom_up(&ec, 2, 64).unwrap();
        let got: Vec<(Vec<u32>, u32)> =
            out.iter().map(|i| (i.items.clone(), i.support)).collect();
        assert_eq!(
            got,
            vec![
                (vec![1, 2, 3], 2),
                (vec![1, 2, 4], 2),
                (vec![1, 3, 4], 2),
            ]
        );
    }

    #[test]
    fn single_atom_class_yields_nothing() {
        let db = d1();
        let freq = count_items(&db, 3);
        let v = build_vertical(&db, &freq);
        let pool = WorkerPool::new(1).unwrap();
        let set = build_classes(&v, 3, None, &pool);
        let last = set
            .classes()
            .iter()
            .find(|c| c.num_atoms() == 1)
            .expect("a one-atom class");
        assert!(bottom_up(last, 3, 64).unwrap().is_empty());
    }

    #[test]
    fn depth_limit_aborts() {
        let ec = d1_first_class(2);
        match bottom_up(&ec, 1, 1) {
            Err(MinerError::RecursionDepthExceeded { limit: 1 }) => {}
            other => panic!("expected depth error, got {other:?}"),
        }
    }
}
