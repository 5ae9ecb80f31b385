//! Asymmetric tour construction between structures.
//!
//! Each node carries an entry pose and an exit pose, so `cost(i, j)` runs
//! from the exit of `i` to the entry of `j` and the matrix is generally
//! asymmetric. Tours are improved by a sequential local search built from
//! 2-opt segment reversals, Or-opt segment moves and (for small instances)
//! pure 3-opt segment exchanges, restarted from double-bridge kicks of the
//! best tour. Open routes are reduced to cycles with a zero-cost virtual
//! depot.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Pose, VehicleConfig};
use crate::motion::segment_time;

/// Moves must gain at least this much to be applied.
const IMPROVEMENT_EPS: f64 = 1e-10;
/// Above this size the O(n³) segment exchange neighbourhood is skipped.
const SEGMENT_EXCHANGE_MAX_NODES: usize = 60;
/// Number of nearest-neighbour starts tried per solve.
const STARTS: usize = 8;
/// Perturbation rounds after the multi-start phase: `KICKS_PER_NODE * n`,
/// capped at `KICK_BUDGET / n` to bound the work on large tours.
const KICKS_PER_NODE: usize = 4;
const KICK_BUDGET: usize = 2000;
const OR_OPT_MAX_LEN: usize = 3;
pub const BRUTE_FORCE_MAX_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    /// Row-major, seconds. The diagonal holds the exit→entry return arc of
    /// each node and is only used by single-node closed tours.
    costs: Vec<f64>,
    entry_poses: Vec<Pose>,
    exit_poses: Vec<Pose>,
}

impl CostMatrix {
    /// Matrix from raw costs (row-major, `n * n` entries).
    pub fn from_costs(n: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != n * n {
            return Err(Error::invalid(
                "costs",
                format!("expected {} entries, got {}", n * n, costs.len()),
            ));
        }
        if let Some(bad) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid("costs", format!("{bad} is not a finite cost >= 0")));
        }
        Ok(CostMatrix {
            n,
            costs,
            entry_poses: Vec::new(),
            exit_poses: Vec::new(),
        })
    }

    /// Travel-time matrix for nodes given as `(entry, exit)` pose pairs.
    pub fn from_poses(nodes: &[(Pose, Pose)], speed: f64, yaw_rate_max: f64) -> Self {
        let n = nodes.len();
        let mut costs = Vec::with_capacity(n * n);
        for (_, exit) in nodes {
            for (entry, _) in nodes {
                costs.push(segment_time(exit, entry, speed, yaw_rate_max));
            }
        }
        CostMatrix {
            n,
            costs,
            entry_poses: nodes.iter().map(|(entry, _)| *entry).collect(),
            exit_poses: nodes.iter().map(|(_, exit)| *exit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.costs[from * self.n + to]
    }

    pub fn entry_poses(&self) -> &[Pose] {
        &self.entry_poses
    }

    pub fn exit_poses(&self) -> &[Pose] {
        &self.exit_poses
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.cost(i, j) - self.cost(j, i)).abs() <= tol))
    }
}

/// Transit matrix between structures at the vehicle's travel speed.
pub fn build_cost_matrix(nodes: &[(Pose, Pose)], vehicle: &VehicleConfig) -> CostMatrix {
    CostMatrix::from_poses(nodes, vehicle.v_travel, vehicle.yaw_rate_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    /// Seconds.
    pub cost: f64,
    pub closed: bool,
}

impl Tour {
    pub fn new(order: Vec<usize>, matrix: &CostMatrix, closed: bool) -> Self {
        let cost = tour_cost(matrix, &order, closed);
        Tour {
            order,
            cost,
            closed,
        }
    }
}

/// Sum of consecutive arcs, plus the arc back to the first node when closed.
pub fn tour_cost(matrix: &CostMatrix, order: &[usize], closed: bool) -> f64 {
    let Some((&first, &last)) = order.first().zip(order.last()) else {
        return 0.0;
    };
    let path: f64 = order.windows(2).map(|w| matrix.cost(w[0], w[1])).sum();
    if closed {
        path + matrix.cost(last, first)
    } else {
        path
    }
}

/// Exhaustive optimum, for instances of at most ten nodes.
pub fn brute_force_tsp(matrix: &CostMatrix, closed: bool) -> Result<Tour> {
    let n = matrix.len();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    if n <= 1 {
        return Ok(Tour::new((0..n).collect(), matrix, closed));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |order: Vec<usize>| {
        let cost = tour_cost(matrix, &order, closed);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, order));
        }
    };
    if closed {
        // Rotations are equivalent; pin node 0 first.
        for rest in (1..n).permutations(n - 1) {
            let mut order = Vec::with_capacity(n);
            order.push(0);
            order.extend(rest);
            consider(order);
        }
    } else {
        for order in (0..n).permutations(n) {
            consider(order);
        }
    }
    let (cost, order) = best.expect("at least one permutation");
    Ok(Tour {
        order,
        cost,
        closed,
    })
}

/// Local-search tour. Deterministic for a given `seed`.
pub fn solve_tsp(matrix: &CostMatrix, closed: bool, seed: u64) -> Tour {
    let n = matrix.len();
    if n <= 1 {
        return Tour::new((0..n).collect(), matrix, closed);
    }
    if n == 2 {
        let forward = Tour::new(vec![0, 1], matrix, closed);
        let backward = Tour::new(vec![1, 0], matrix, closed);
        return if backward.cost < forward.cost {
            backward
        } else {
            forward
        };
    }

    let work = WorkMatrix::new(matrix, closed);
    let m = work.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<usize> = (0..m).collect();
    starts.shuffle(&mut rng);
    starts.truncate(STARTS);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in starts {
        let mut cycle = nearest_neighbor(&work, start);
        improve(&work, &mut cycle);
        let cost = work.cycle_cost(&cycle);
        if best.as_ref().is_none_or(|(b, _)| cost < *b - IMPROVEMENT_EPS) {
            best = Some((cost, cycle));
        }
    }
    let (mut best_cost, mut cycle) = best.expect("at least one start");

    // Iterated local search from the best local optimum.
    for _ in 0..(KICKS_PER_NODE * m).min(KICK_BUDGET / m) {
        let mut candidate = kick(&cycle, &mut rng);
        improve(&work, &mut candidate);
        let cost = work.cycle_cost(&candidate);
        if cost < best_cost - IMPROVEMENT_EPS {
            best_cost = cost;
            cycle = candidate;
        }
    }

    // Canonical rotation: node 0 first for cycles, depot removed for paths.
    let anchor = if closed { 0 } else { n };
    let pos = cycle.iter().position(|&v| v == anchor).unwrap();
    cycle.rotate_left(pos);
    if !closed {
        cycle.remove(0);
    }
    Tour::new(cycle, matrix, closed)
}

/// Dense cycle matrix; open instances get a virtual depot as the last node.
struct WorkMatrix {
    n: usize,
    costs: Vec<f64>,
}

impl WorkMatrix {
    fn new(matrix: &CostMatrix, closed: bool) -> Self {
        let n0 = matrix.len();
        let n = if closed { n0 } else { n0 + 1 };
        let mut costs = vec![0.0; n * n];
        for i in 0..n0 {
            for j in 0..n0 {
                costs[i * n + j] = matrix.cost(i, j);
            }
        }
        WorkMatrix { n, costs }
    }

    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    fn cycle_cost(&self, cycle: &[usize]) -> f64 {
        let m = cycle.len();
        (0..m).map(|k| self.c(cycle[k], cycle[(k + 1) % m])).sum()
    }
}

fn nearest_neighbor(work: &WorkMatrix, start: usize) -> Vec<usize> {
    let mut visited = vec![false; work.n];
    let mut cycle = Vec::with_capacity(work.n);
    let mut current = start;
    visited[start] = true;
    cycle.push(start);
    while cycle.len() < work.n {
        let next = (0..work.n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| work.c(current, a).total_cmp(&work.c(current, b)))
            .unwrap();
        visited[next] = true;
        cycle.push(next);
        current = next;
    }
    cycle
}

/// Double-bridge perturbation; a fresh random order for tiny cycles.
fn kick(cycle: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = cycle.len();
    if m < 8 {
        let mut order = cycle.to_vec();
        order.shuffle(rng);
        return order;
    }
    let mut cuts = rand::seq::index::sample(rng, m - 1, 3).into_vec();
    cuts.iter_mut().for_each(|c| *c += 1);
    cuts.sort_unstable();
    let (a, b, c) = (cuts[0], cuts[1], cuts[2]);
    let mut out = Vec::with_capacity(m);
    out.extend_from_slice(&cycle[..a]);
    out.extend_from_slice(&cycle[b..c]);
    out.extend_from_slice(&cycle[a..b]);
    out.extend_from_slice(&cycle[c..]);
    out
}

/// Applies first-improvement moves until none of the neighbourhoods improves.
fn improve(work: &WorkMatrix, cycle: &mut Vec<usize>) {
    loop {
        if two_opt_move(work, cycle) || or_opt_move(work, cycle) {
            continue;
        }
        if cycle.len() <= SEGMENT_EXCHANGE_MAX_NODES && segment_exchange_move(work, cycle) {
            continue;
        }
        break;
    }
}

/// Reverses `cycle[i+1..=j]`, pricing every reversed arc from the matrix.
fn two_opt_move(work: &WorkMatrix, cycle: &mut [usize]) -> bool {
    let m = cycle.len();
    // fwd[k] / bwd[k]: prefix sums of arcs k→k+1 in tour and reversed direction.
    let mut fwd = vec![0.0; m];
    let mut bwd = vec![0.0; m];
    for k in 1..m {
        fwd[k] = fwd[k - 1] + work.c(cycle[k - 1], cycle[k]);
        bwd[k] = bwd[k - 1] + work.c(cycle[k], cycle[k - 1]);
    }
    for i in 0..m - 2 {
        let a = cycle[i];
        let first = cycle[i + 1];
        for j in i + 2..m {
            let last = cycle[j];
            let b = cycle[(j + 1) % m];
            let inner = (bwd[j] - bwd[i + 1]) - (fwd[j] - fwd[i + 1]);
            let delta = work.c(a, last) + work.c(first, b) - work.c(a, first) - work.c(last, b)
                + inner;
            if delta < -IMPROVEMENT_EPS {
                cycle[i + 1..=j].reverse();
                return true;
            }
        }
    }
    false
}

/// Moves a run of up to three nodes elsewhere, optionally reversed.
fn or_opt_move(work: &WorkMatrix, cycle: &mut Vec<usize>) -> bool {
    let m = cycle.len();
    for len in 1..=OR_OPT_MAX_LEN.min(m.saturating_sub(2)) {
        for i in 0..m {
            let seg: Vec<usize> = (0..len).map(|k| cycle[(i + k) % m]).collect();
            let (s0, sl) = (seg[0], seg[len - 1]);
            let prev = cycle[(i + m - 1) % m];
            let next = cycle[(i + len) % m];
            let inner_fwd: f64 = seg.windows(2).map(|w| work.c(w[0], w[1])).sum();
            let inner_bwd: f64 = seg.windows(2).map(|w| work.c(w[1], w[0])).sum();
            let removal_gain = work.c(prev, s0) + work.c(sl, next) - work.c(prev, next);
            // Remaining cycle, starting right after the segment.
            let rest: Vec<usize> = (0..m - len).map(|k| cycle[(i + len + k) % m]).collect();
            for k in 0..rest.len() - 1 {
                let (u, v) = (rest[k], rest[k + 1]);
                let base = work.c(u, v);
                let forward = work.c(u, s0) + work.c(sl, v) - base;
                let reversed = work.c(u, sl) + work.c(s0, v) - base + inner_bwd - inner_fwd;
                let (insert, flip) = if reversed < forward - IMPROVEMENT_EPS {
                    (reversed, true)
                } else {
                    (forward, false)
                };
                if insert - removal_gain < -IMPROVEMENT_EPS {
                    let mut placed = seg.clone();
                    if flip {
                        placed.reverse();
                    }
                    let mut new_cycle = Vec::with_capacity(m);
                    new_cycle.extend_from_slice(&rest[..=k]);
                    new_cycle.extend_from_slice(&placed);
                    new_cycle.extend_from_slice(&rest[k + 1..]);
                    *cycle = new_cycle;
                    return true;
                }
            }
        }
    }
    false
}

/// Pure 3-opt move: swaps the adjacent runs `(i, j]` and `(j, k]` without reversal.
fn segment_exchange_move(work: &WorkMatrix, cycle: &mut Vec<usize>) -> bool {
    let m = cycle.len();
    for i in 0..m {
        let a = cycle[i];
        let b = cycle[(i + 1) % m];
        let base_ab = work.c(a, b);
        for j in i + 1..m {
            let c = cycle[j];
            let d = cycle[(j + 1) % m];
            let base_cd = work.c(c, d);
            for k in j + 1..m {
                let e = cycle[k];
                let f = cycle[(k + 1) % m];
                let delta = work.c(a, d) + work.c(e, b) + work.c(c, f)
                    - base_ab
                    - base_cd
                    - work.c(e, f);
                if delta < -IMPROVEMENT_EPS {
                    let mut new_cycle = Vec::with_capacity(m);
                    new_cycle.extend_from_slice(&cycle[..=i]);
                    new_cycle.extend_from_slice(&cycle[j + 1..=k]);
                    new_cycle.extend_from_slice(&cycle[i + 1..=j]);
                    new_cycle.extend_from_slice(&cycle[k + 1..]);
                    *cycle = new_cycle;
                    return true;
                }
            }
        }
    }
    false
}
