//! Greedy construction plus local search, restarted with perturbed scores.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{SelectionProblem, SelectionSolution, SolveStats, State, Status, TOL};
use crate::{seed, Error, Exec, Result};

struct Run {
    sel: Vec<bool>,
    cost: f64,
    feasible: bool,
    shortfall: f64,
    iterations: u64,
}

/// Adds the rule with the largest shortfall reduction per unit cost until
/// all bounds hold or no rule helps. Scores of restarts after the first
/// are jittered by up to ±20%.
fn construct(st: &mut State, jitter: &[f64], iterations: &mut u64) {
    let m = st.sel.len();
    loop {
        let before = st.shortfall();
        if before == 0.0 {
            return;
        }
        let mut best: Option<(f64, usize)> = None;
        let free: Vec<usize> = (0..m).filter(|&j| !st.sel[j]).collect();
        for j in free {
            *iterations += 1;
            st.add(j);
            let gain = before - st.shortfall();
            let capped = st.over_cap > 0;
            st.remove(j);
            if capped || gain <= TOL {
                continue;
            }
            let score = gain / st.p.cost(j) * jitter[j];
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, j));
            }
        }
        match best {
            Some((_, j)) => st.add(j),
            None => return,
        }
    }
}

/// Best-improvement descent on the shortfall over add, drop and swap
/// moves, for constructions that stall before reaching feasibility.
fn repair(st: &mut State, iterations: &mut u64) {
    let m = st.sel.len();
    loop {
        let before = st.shortfall();
        if before == 0.0 {
            return;
        }
        let chosen: Vec<usize> = (0..m).filter(|&j| st.sel[j]).collect();
        let free: Vec<usize> = (0..m).filter(|&j| !st.sel[j]).collect();
        // (gain, cost delta, drop, add)
        let mut best: Option<(f64, f64, Option<usize>, Option<usize>)> = None;
        let mut consider = |st: &State, drop: Option<usize>, add: Option<usize>| {
            *iterations += 1;
            if st.over_cap > 0 {
                return;
            }
            let gain = before - st.shortfall();
            let delta = add.map_or(0.0, |k| st.p.cost(k)) - drop.map_or(0.0, |j| st.p.cost(j));
            let better = match best {
                None => gain > TOL,
                Some((g, d, ..)) => gain > g + TOL || (gain > g - TOL && delta < d - TOL),
            };
            if better {
                best = Some((gain, delta, drop, add));
            }
        };
        for &k in &free {
            st.add(k);
            consider(st, None, Some(k));
            st.remove(k);
        }
        for &j in &chosen {
            st.remove(j);
            consider(st, Some(j), None);
            for &k in &free {
                st.add(k);
                consider(st, Some(j), Some(k));
                st.remove(k);
            }
            st.add(j);
        }
        match best {
            Some((_, _, drop, add)) => {
                if let Some(j) = drop {
                    st.remove(j);
                }
                if let Some(k) = add {
                    st.add(k);
                }
            }
            None => return,
        }
    }
}

/// First-improvement descent over drop-1, swap-1-1 and swap-2-1 moves.
/// Costs are positive, so adding a rule alone never improves a feasible
/// selection.
fn improve(st: &mut State, iterations: &mut u64) {
    let m = st.sel.len();
    let p = st.p;
    'outer: loop {
        let chosen: Vec<usize> = (0..m).filter(|&j| st.sel[j]).collect();
        for &j in &chosen {
            *iterations += 1;
            st.remove(j);
            if st.feasible() {
                continue 'outer;
            }
            st.add(j);
        }
        for &j in &chosen {
            st.remove(j);
            let need = st.coverage_deficit();
            let cands: Vec<usize> = (0..m)
                .filter(|&k| !st.sel[k] && k != j && p.cost(k) < p.cost(j) - TOL && p.cover_len(k) >= need)
                .collect();
            for k in cands {
                *iterations += 1;
                if st.feasible_with(k) {
                    st.add(k);
                    continue 'outer;
                }
            }
            st.add(j);
        }
        for (a, &j1) in chosen.iter().enumerate() {
            for &j2 in &chosen[a + 1..] {
                let freed = p.cost(j1) + p.cost(j2);
                st.remove(j1);
                st.remove(j2);
                // a candidate covering fewer rows than the deficit cannot restore coverage
                let need = st.coverage_deficit();
                let cands: Vec<usize> = (0..m)
                    .filter(|&k| !st.sel[k] && k != j1 && k != j2 && p.cost(k) < freed - TOL && p.cover_len(k) >= need)
                    .collect();
                for k in cands {
                    *iterations += 1;
                    if st.feasible_with(k) {
                        st.add(k);
                        continue 'outer;
                    }
                }
                st.add(j1);
                st.add(j2);
            }
        }
        return;
    }
}

fn run(p: &SelectionProblem, root: u64, restart: usize) -> Run {
    let jitter: Vec<f64> = if restart == 0 {
        vec![1.0; p.m]
    } else {
        let mut rng = seed::derived_rng(root, "restart", restart as u64);
        (0..p.m).map(|_| rng.gen_range(0.8..1.2)).collect()
    };
    let mut iterations = 0;
    let mut st = State::new(p);
    descend(&mut st, &jitter, &mut iterations);
    // kicks: drop one or two chosen rules, rebuild, keep if cheaper
    let mut rng = seed::derived_rng(root, "kick", restart as u64);
    for _ in 0..KICKS {
        let chosen: Vec<usize> = (0..p.m).filter(|&j| st.sel[j]).collect();
        if chosen.is_empty() {
            break;
        }
        let mut trial = st.clone();
        let drops = rng.gen_range(1..=chosen.len().min(2));
        for &j in chosen.choose_multiple(&mut rng, drops) {
            trial.remove(j);
        }
        let jitter: Vec<f64> = (0..p.m).map(|_| rng.gen_range(0.8..1.2)).collect();
        descend(&mut trial, &jitter, &mut iterations);
        let better = match (trial.feasible(), st.feasible()) {
            (true, true) => trial.cost < st.cost - TOL,
            (true, false) => true,
            (false, true) => false,
            (false, false) => trial.shortfall() < st.shortfall() - TOL,
        };
        if better {
            st = trial;
        }
    }
    Run {
        cost: st.cost,
        feasible: st.feasible(),
        shortfall: st.shortfall(),
        sel: st.sel,
        iterations,
    }
}

const KICKS: usize = 20;

fn descend(st: &mut State, jitter: &[f64], iterations: &mut u64) {
    construct(st, jitter, iterations);
    repair(st, iterations);
    if st.feasible() {
        improve(st, iterations);
    }
}

pub fn solve_heuristic(p: &SelectionProblem, seed: u64, restarts: usize) -> Result<SelectionSolution> {
    solve_heuristic_with(p, seed, restarts, Exec::default())
}

/// Best of `restarts` independent runs: feasible before infeasible, then
/// lowest objective, then lowest restart index.
pub fn solve_heuristic_with(p: &SelectionProblem, seed: u64, restarts: usize, exec: Exec) -> Result<SelectionSolution> {
    if p.m == 0 {
        return Err(Error::InvalidParam("selection problem has no rules".into()));
    }
    let start = Instant::now();
    let runs = exec.map_range(restarts.max(1), |r| run(p, seed, r));
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| {
            let better = match (a.feasible, b.feasible) {
                (true, false) => false,
                (false, true) => true,
                (true, true) => b.cost < a.cost - TOL,
                (false, false) => b.shortfall < a.shortfall - TOL,
            };
            if better {
                b
            } else {
                a
            }
        })
        .expect("at least one restart");
    let status = if best.feasible {
        Status::Feasible
    } else {
        log::warn!("heuristic found no feasible selection (shortfall {})", best.shortfall);
        Status::Infeasible
    };
    let stats = SolveStats {
        nodes: 0,
        iterations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        solver: "heuristic".into(),
    };
    Ok(SelectionSolution::from_selection(best.sel, status, p, stats))
}
