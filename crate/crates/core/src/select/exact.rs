//! Depth-first branch and bound over the selection bits.

use std::time::{Duration, Instant};

use super::{SelectionProblem, SelectionSolution, SolveStats, State, Status, TOL};
use crate::{Error, Result};

struct Search<'a> {
    p: &'a SelectionProblem,
    order: Vec<usize>,
    /// Largest single-rule cover among `order[k..]`.
    suffix_cover: Vec<usize>,
    need: usize,
    best: Option<(f64, Vec<bool>)>,
    nodes: u64,
    node_limit: u64,
    deadline: Option<Instant>,
    stopped: bool,
}

impl Search<'_> {
    fn incumbent(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    fn dfs(&mut self, k: usize, st: &mut State) {
        if self.stopped {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit
            || self
                .deadline
                .is_some_and(|d| self.nodes.is_multiple_of(1024) && Instant::now() > d)
        {
            self.stopped = true;
            return;
        }
        if st.feasible() {
            // costs are positive: no superset beats this node
            if st.cost < self.incumbent() - TOL {
                self.best = Some((st.cost, st.sel.clone()));
            }
            return;
        }
        if k == self.order.len() {
            return;
        }
        let next_cost = self.p.cost(self.order[k]);
        let deficit = self.need.saturating_sub(st.covered);
        let extra = if deficit == 0 {
            next_cost
        } else if self.suffix_cover[k] == 0 {
            return;
        } else {
            deficit.div_ceil(self.suffix_cover[k]) as f64 * next_cost
        };
        if st.cost + extra >= self.incumbent() - TOL {
            return;
        }
        let j = self.order[k];
        st.add(j);
        // cover counts only grow along a branch
        if st.over_cap == 0 {
            self.dfs(k + 1, st);
        }
        st.remove(j);
        self.dfs(k + 1, st);
    }
}

/// Exact minimum-cost feasible selection. Rules are branched in ascending
/// cost order, include first; a node's bound adds
/// `ceil(coverage deficit / largest remaining cover)` copies of the
/// cheapest remaining cost.
pub fn solve_exact(p: &SelectionProblem, node_limit: u64, time_limit: Option<Duration>) -> Result<SelectionSolution> {
    if p.m == 0 {
        return Err(Error::InvalidParam("selection problem has no rules".into()));
    }
    let start = Instant::now();
    let mut order: Vec<usize> = (0..p.m).collect();
    order.sort_by(|&a, &b| p.cost(a).total_cmp(&p.cost(b)).then(a.cmp(&b)));
    let mut suffix_cover = vec![0; p.m + 1];
    for k in (0..p.m).rev() {
        let j = order[k];
        suffix_cover[k] = suffix_cover[k + 1].max(p.ok_rows[j].len() + p.nok_rows[j].len());
    }
    let mut search = Search {
        p,
        order,
        suffix_cover,
        need: p.min_covered(),
        best: None,
        nodes: 0,
        node_limit,
        deadline: time_limit.map(|t| start + t),
        stopped: false,
    };
    let mut st = State::new(p);
    search.dfs(0, &mut st);
    let status = match (&search.best, search.stopped) {
        (Some(_), false) => Status::Optimal,
        (Some(_), true) => Status::Feasible,
        (None, false) => Status::Infeasible,
        (None, true) => Status::Limit,
    };
    let sel = search.best.take().map_or_else(|| vec![false; p.m], |b| b.1);
    let stats = SolveStats {
        nodes: search.nodes,
        iterations: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        solver: "exact".into(),
    };
    Ok(SelectionSolution::from_selection(sel, status, p, stats))
}
