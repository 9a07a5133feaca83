//! Exhaustive enumeration of small structures, for checks that quantify
//! over every model up to a carrier size.

use super::*;
use crate::sl::Symbol;
use itertools::Itertools;

fn sort_values(sort: Sort, num_locs: u32, ints: &[i64]) -> Vec<Value> {
    match sort {
        Sort::Loc => (0..num_locs).map(Value::Loc).collect(),
        Sort::Int => ints.iter().map(|n| Value::Int(*n)).collect(),
    }
}

fn product(factors: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    if factors.is_empty() {
        return vec![vec![]];
    }
    factors.into_iter().multi_cartesian_product().collect()
}

/// Every total heap on `num_locs - 1` non-null locations, integer fields
/// ranging over `ints`.
pub fn all_heaps(num_locs: u32, field_sorts: &[Sort], ints: &[i64]) -> Vec<Vec<Vec<Value>>> {
    let records = product(field_sorts.iter().map(|s| sort_values(*s, num_locs, ints)).collect());
    let n = num_locs.saturating_sub(1) as usize;
    if n == 0 {
        return vec![vec![]];
    }
    std::iter::repeat(records).take(n).multi_cartesian_product().collect()
}

/// Every valuation of `syms`.
pub fn all_valuations(num_locs: u32, syms: &[Symbol], ints: &[i64]) -> Vec<BTreeMap<String, Value>> {
    product(syms.iter().map(|s| sort_values(s.sort, num_locs, ints)).collect())
        .into_iter()
        .map(|vals| syms.iter().map(|s| s.name.clone()).zip(vals).collect())
        .collect()
}

/// Every argument tuple of the given sorts.
pub fn all_tuples(num_locs: u32, sorts: &[Sort], ints: &[i64]) -> Vec<Vec<Value>> {
    product(sorts.iter().map(|s| sort_values(*s, num_locs, ints)).collect())
}

/// Every determined-heap interpretation over `tuples`: each tuple is
/// either absent or paired with exactly one heaplet.
pub fn determined_interpretations(tuples: &[Vec<Value>], num_locs: u32) -> Box<dyn Iterator<Item = PredInterp> + '_> {
    if tuples.is_empty() {
        return Box::new(std::iter::once(PredInterp::new()));
    }
    let heaplets: Vec<Option<Heaplet>> = std::iter::once(None).chain(Heaplet::all(num_locs).map(Some)).collect();
    Box::new(std::iter::repeat(heaplets).take(tuples.len()).multi_cartesian_product().map(move |choice| {
        tuples.iter().zip(choice).filter_map(|(t, h)| h.map(|h| (t.clone(), h))).collect()
    }))
}
