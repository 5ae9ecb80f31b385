//! Random draws made at the start of each iteration.

use rand::Rng;

use crate::error::{Error, Result};

/// Includes each of `count` structures independently with probability `p`,
/// redrawing until the subset is nonempty. Returned ascending.
pub fn sample_structure_subset(count: usize, p: f64, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::EmptyUniverse);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("inclusion_probability", format!("{p} not in (0, 1]")));
    }
    loop {
        let subset: Vec<usize> = (0..count).filter(|_| rng.gen_bool(p)).collect();
        if !subset.is_empty() {
            return Ok(subset);
        }
    }
}

/// Draws a raw time in `[0, T_i]` per structure and rescales the draw so the
/// times add up to `min(budget, Σ T_i)` without exceeding any `T_i`.
pub fn assign_inspection_times(full: &[f64], budget: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::NegativeBudget(budget));
    }
    let raw: Vec<f64> = full.iter().map(|&t| rng.gen::<f64>() * t).collect();
    Ok(water_fill(&raw, full, budget))
}

/// Scales `raw` proportionally to reach `target`, capping entries at `caps`
/// and handing the surplus to the uncapped entries until nothing overflows.
pub fn water_fill(raw: &[f64], caps: &[f64], target: f64) -> Vec<f64> {
    assert_eq!(raw.len(), caps.len());
    let n = raw.len();
    let cap_sum: f64 = caps.iter().sum();
    if target >= cap_sum {
        return caps.to_vec();
    }
    let mut out = vec![0.0; n];
    let mut capped = vec![false; n];
    loop {
        let fixed: f64 = (0..n).filter(|&i| capped[i]).map(|i| caps[i]).sum();
        let free = (target - fixed).max(0.0);
        let open: Vec<usize> = (0..n).filter(|&i| !capped[i]).collect();
        // With no raw mass left to scale, spread by capacity instead.
        let mut weights: &[f64] = raw;
        let mut weight: f64 = open.iter().map(|&i| raw[i]).sum();
        if weight <= 0.0 {
            weights = caps;
            weight = open.iter().map(|&i| caps[i]).sum();
        }
        let mut overflow = false;
        for &i in &open {
            out[i] = if weight > 0.0 { free * weights[i] / weight } else { 0.0 };
            if out[i] > caps[i] {
                out[i] = caps[i];
                capped[i] = true;
                overflow = true;
            }
        }
        if !overflow {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent reference: bisection on the common scale `λ` of `min(cap, λ·raw)`.
    fn bisect_fill(raw: &[f64], caps: &[f64], target: f64) -> Vec<f64> {
        let fill = |lambda: f64| -> Vec<f64> {
            raw.iter().zip(caps).map(|(r, c)| (lambda * r).min(*c)).collect()
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while fill(hi).iter().sum::<f64>() < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fill(mid).iter().sum::<f64>() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        fill(hi)
    }

    #[test]
    fn water_fill_examples() {
        let out = water_fill(&[100.0, 200.0, 300.0], &[400.0, 400.0, 400.0], 300.0);
        for (a, b) in out.iter().zip([50.0, 100.0, 150.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        let same = water_fill(&[10.0, 20.0], &[50.0, 50.0], 30.0);
        assert_eq!(same, vec![10.0, 20.0]);
        let capped = water_fill(&[50.0, 50.0], &[100.0, 1000.0], 400.0);
        assert!((capped[0] - 100.0).abs() < 1e-9 && (capped[1] - 300.0).abs() < 1e-9);
        assert_eq!(water_fill(&[1.0, 2.0], &[3.0, 4.0], 100.0), vec![3.0, 4.0]);
        assert_eq!(water_fill(&[0.0, 0.0], &[3.0, 1.0], 2.0), vec![1.5, 0.5]);
        assert_eq!(water_fill(&[5.0, 0.0], &[1.0, 10.0], 5.0), vec![1.0, 4.0]);
    }

    #[test]
    fn subset_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_structure_subset(1, 0.5, &mut rng).unwrap(), vec![0]);
        }
        assert!(matches!(sample_structure_subset(0, 0.5, &mut rng), Err(Error::EmptyUniverse)));
        let a = sample_structure_subset(8, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_structure_subset(8, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inclusion_frequency_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = [0usize; 8];
        let draws = 10_000;
        for _ in 0..draws {
            for i in sample_structure_subset(8, 0.5, &mut rng).unwrap() {
                hits[i] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / draws as f64;
            assert!((0.45..=0.55).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn negative_budget_is_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            assign_inspection_times(&[10.0], -1.0, &mut rng),
            Err(Error::NegativeBudget(_))
        ));
    }

    proptest! {
        #[test]
        fn fill_matches_bisection(
            pairs in proptest::collection::vec((0.0f64..100.0, 0.0f64..1.0), 1..8),
            frac in 0.0f64..1.2,
        ) {
            let caps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let raw: Vec<f64> = pairs.iter().map(|p| p.0 * p.1).collect();
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let target = frac * caps.iter().sum::<f64>();
            let out = water_fill(&raw, &caps, target);
            let total: f64 = out.iter().sum();
            prop_assert!((total - target.min(caps.iter().sum())).abs() < 1e-6);
            for (o, c) in out.iter().zip(&caps) {
                prop_assert!(*o >= 0.0 && *o <= *c);
            }
            if target < caps.iter().sum::<f64>() {
                let oracle = bisect_fill(&raw, &caps, target);
                for (o, r) in out.iter().zip(&oracle) {
                    prop_assert!((o - r).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn assigned_times_respect_budget(
            full in proptest::collection::vec(0.0f64..500.0, 1..10),
            budget in 0.0f64..3000.0,
            seed in any::<u64>(),
        ) {
            let times = assign_inspection_times(&full, budget, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let total: f64 = times.iter().sum();
            prop_assert!((total - budget.min(full.iter().sum())).abs() < 1e-6);
            for (t, cap) in times.iter().zip(&full) {
                prop_assert!(*t >= 0.0 && *t <= *cap);
            }
        }
    }
}
