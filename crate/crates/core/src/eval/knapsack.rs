//! Exact 0/1 knapsack over video segments.
//!
//! Values are real (score sums), weights are integer frame counts, and the
//! capacity is the summary budget in frames. The DP runs over item suffixes
//! so that reconstruction can walk items in index order and prefer inclusion,
//! which yields the lexicographically earliest of all maximum-value
//! selections (a selection that stops earlier is earlier: once the remaining
//! target value hits zero, nothing more is taken).

/// Select a subset of items maximizing total value with total weight at most
/// `capacity`. Returns sorted item indices. Weights must be at least one.
pub fn knapsack_select(values: &[f64], weights: &[usize], capacity: usize) -> Vec<usize> {
    assert_eq!(values.len(), weights.len(), "one weight per value");
    assert!(weights.iter().all(|&w| w >= 1), "zero-weight items are not meaningful here");
    assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0), "values must be finite and non-negative");
    let n = values.len();

    // best[i][c]: maximum value attainable from items i.. with capacity c.
    let mut best = vec![vec![0.0f64; capacity + 1]; n + 1];
    for i in (0..n).rev() {
        for c in 0..=capacity {
            let skip = best[i + 1][c];
            let take = if weights[i] <= c {
                values[i] + best[i + 1][c - weights[i]]
            } else {
                f64::NEG_INFINITY
            };
            best[i][c] = if take > skip { take } else { skip };
        }
    }

    // Walk forward preferring inclusion. Comparisons recompute the exact
    // expressions the table was filled from, so float equality is reliable.
    let mut selected = Vec::new();
    let mut c = capacity;
    let mut target = best[0][capacity];
    for i in 0..n {
        if target == 0.0 {
            break;
        }
        if weights[i] <= c && values[i] + best[i + 1][c - weights[i]] == target {
            selected.push(i);
            c -= weights[i];
            target = best[i + 1][c];
        }
    }
    selected
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive reference: every subset, value accumulated back-to-front so
    /// the sums are bitwise comparable with the suffix DP, lexicographically
    /// earliest winner on ties.
    fn brute_force(values: &[f64], weights: &[usize], capacity: usize) -> Vec<usize> {
        let n = values.len();
        let mut best_value = 0.0f64;
        let mut best_set: Vec<usize> = Vec::new();
        for mask in 0u32..(1 << n) {
            let mut weight = 0usize;
            let mut set = Vec::new();
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    weight += weights[i];
                    set.push(i);
                }
            }
            if weight > capacity {
                continue;
            }
            let value = set.iter().rev().fold(0.0, |acc, &i| values[i] + acc);
            if value > best_value || (value == best_value && set < best_set) {
                best_value = value;
                best_set = set;
            }
        }
        best_set
    }

    #[test]
    fn classical_instance_picks_the_two_heavy_items() {
        let selected = knapsack_select(&[60.0, 100.0, 120.0], &[10, 20, 30], 50);
        assert_eq!(selected, vec![1, 2]);
    }

    #[test]
    fn ample_capacity_takes_everything() {
        assert_eq!(knapsack_select(&[1.0, 2.0, 3.0], &[5, 5, 5], 15), vec![0, 1, 2]);
        assert_eq!(knapsack_select(&[1.0, 2.0, 3.0], &[5, 5, 5], 100), vec![0, 1, 2]);
    }

    #[test]
    fn oversized_single_item_stays_out() {
        assert!(knapsack_select(&[10.0], &[7], 6).is_empty());
        assert!(knapsack_select(&[10.0], &[7], 0).is_empty());
    }

    #[test]
    fn zero_value_items_are_not_hoarded() {
        // All-zero values: the earliest optimal selection is the empty one.
        assert!(knapsack_select(&[0.0, 0.0], &[1, 1], 2).is_empty());
        // But a zero-value item ahead of needed value is part of the
        // lexicographically earliest optimum.
        assert_eq!(knapsack_select(&[0.0, 5.0], &[1, 1], 2), vec![0, 1]);
    }

    #[test]
    fn greedy_by_value_is_beaten() {
        // Greedy grabs the single 10-value item (weight 5) and stops at
        // total 10; the optimum packs the three lighter items for 12.
        let values = [10.0, 6.0, 6.0, 0.5];
        let weights = [5, 3, 3, 5];
        let selected = knapsack_select(&values, &weights, 6);
        assert_eq!(selected, vec![1, 2]);
        assert_eq!(brute_force(&values, &weights, 6), vec![1, 2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(600))]
        #[test]
        fn matches_exhaustive_search(
            items in prop::collection::vec((0.0f64..10.0, 1usize..8), 0..12),
            capacity in 0usize..40
        ) {
            let values: Vec<f64> = items.iter().map(|it| it.0).collect();
            let weights: Vec<usize> = items.iter().map(|it| it.1).collect();
            let dp = knapsack_select(&values, &weights, capacity);
            let reference = brute_force(&values, &weights, capacity);
            prop_assert_eq!(&dp, &reference);
            let weight: usize = dp.iter().map(|&i| weights[i]).sum();
            prop_assert!(weight <= capacity);
        }
    }
}
