//! The rule-selection 0-1 program: picks few, accurate, general, short rules
//! subject to per-instance cover caps and global error, coverage and
//! overlap bounds.
//!
//! Given a selection every auxiliary indicator is forced, so both solvers
//! search over the `m` selection bits only.

mod exact;
mod heuristic;
mod lp;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::rules::{CoverageMatrices, RuleMetrics};
use crate::{Error, Exec, Result};

pub use exact::solve_exact;
pub use heuristic::{solve_heuristic, solve_heuristic_with};
pub use lp::{export_lp, write_lp};

/// Absolute tolerance for objective comparisons and for integer counts
/// compared with real-valued bounds.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectParams {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub maxcover: u32,
    pub maxoverlap: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SelectParams {
    fn default() -> Self {
        SelectParams {
            w0: 1.0,
            w1: 1.0,
            w2: 0.1,
            w3: 0.05,
            maxcover: 3,
            maxoverlap: 0.5,
            alpha: 0.01,
            beta: 0.025,
        }
    }
}

impl SelectParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if [self.w0, self.w1, self.w2, self.w3]
            .iter()
            .any(|w| !(*w >= 0.0 && w.is_finite()))
        {
            return bad("weights must be finite and non-negative");
        }
        if self.maxcover < 1 {
            return bad("maxcover must be at least 1");
        }
        for (name, v) in [
            ("maxoverlap", self.maxoverlap),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParam(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// An immutable selection instance.
#[derive(Clone, Debug)]
pub struct SelectionProblem {
    pub n: usize,
    pub m: usize,
    pub confidence: Vec<f64>,
    pub coverage: Vec<f64>,
    pub att_ratio: Vec<f64>,
    pub levels_ratio: Vec<f64>,
    pub init_error: f64,
    pub params: SelectParams,
    /// Identifier reported for each column; defaults to `1..=m`.
    pub rule_ids: Vec<usize>,
    cov: CoverageMatrices,
    cost: Vec<f64>,
    ok_rows: Vec<Vec<u32>>,
    nok_rows: Vec<Vec<u32>>,
}

pub fn build_problem(
    metrics: &[RuleMetrics],
    cov: &CoverageMatrices,
    init_error: f64,
    params: &SelectParams,
) -> Result<SelectionProblem> {
    params.validate()?;
    if metrics.len() != cov.m() {
        return Err(Error::Dimension(format!(
            "{} rule metrics for {} coverage columns",
            metrics.len(),
            cov.m()
        )));
    }
    if !(0.0..=1.0).contains(&init_error) {
        return Err(Error::InvalidParam("init_error must be in [0, 1]".into()));
    }
    let m = metrics.len();
    let field = |f: fn(&RuleMetrics) -> f64| metrics.iter().map(f).collect::<Vec<_>>();
    let confidence = field(|r| r.confidence);
    let coverage = field(|r| r.coverage);
    let att_ratio = field(|r| r.att_nbr_s);
    let levels_ratio = field(|r| r.lev_nbr_s);
    let cost = (0..m)
        .map(|j| {
            1.0 + params.w0 * (1.0 - confidence[j])
                + params.w1 * (1.0 - coverage[j])
                + params.w2 * att_ratio[j]
                + params.w3 * levels_ratio[j]
        })
        .collect();
    let rows = |col: &fixedbitset::FixedBitSet| col.ones().map(|i| i as u32).collect::<Vec<_>>();
    Ok(SelectionProblem {
        n: cov.n(),
        m,
        ok_rows: (0..m).map(|j| rows(cov.ok_column(j))).collect(),
        nok_rows: (0..m).map(|j| rows(cov.nok_column(j))).collect(),
        confidence,
        coverage,
        att_ratio,
        levels_ratio,
        init_error,
        params: params.clone(),
        rule_ids: (1..=m).collect(),
        cov: cov.clone(),
        cost,
    })
}

impl SelectionProblem {
    pub fn with_rule_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.m {
            return Err(Error::Dimension(format!("{} ids for {} rules", ids.len(), self.m)));
        }
        self.rule_ids = ids;
        Ok(self)
    }

    /// Objective contribution of rule `j`; always at least 1.
    pub fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    /// Rows covered by rule `j`.
    pub fn cover_len(&self, j: usize) -> usize {
        self.ok_rows[j].len() + self.nok_rows[j].len()
    }

    pub fn coverage_matrices(&self) -> &CoverageMatrices {
        &self.cov
    }

    /// Smallest number of covered instances the coverage bound admits.
    pub fn min_covered(&self) -> usize {
        let bound = self.n as f64 * (1.0 - self.params.beta) - TOL;
        bound.ceil().max(0.0) as usize
    }

    fn error_allowance(&self) -> f64 {
        self.init_error + self.params.alpha
    }
}

/// Sum of per-rule costs over the selection.
pub fn objective(sel: &[bool], p: &SelectionProblem) -> f64 {
    sel.iter().enumerate().filter(|(_, &s)| s).map(|(j, _)| p.cost(j)).sum()
}

/// Indicators forced by a selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Indicators {
    pub is_covered: Vec<bool>,
    pub is_error: Vec<bool>,
    pub is_overlap: Vec<bool>,
    /// Correct minus incorrect covering votes.
    pub p: Vec<i64>,
    /// Number of covering selected rules.
    pub c: Vec<i64>,
}

pub fn derive_indicators(sel: &[bool], p: &SelectionProblem) -> Indicators {
    let mut pv = vec![0i64; p.n];
    let mut cv = vec![0i64; p.n];
    for j in (0..p.m).filter(|&j| sel[j]) {
        for &i in &p.ok_rows[j] {
            pv[i as usize] += 1;
            cv[i as usize] += 1;
        }
        for &i in &p.nok_rows[j] {
            pv[i as usize] -= 1;
            cv[i as usize] += 1;
        }
    }
    Indicators {
        is_covered: cv.iter().map(|&c| c >= 1).collect(),
        is_error: pv.iter().map(|&v| v <= 0).collect(),
        is_overlap: cv.iter().map(|&c| c >= 2).collect(),
        p: pv,
        c: cv,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    MaxCover,
    Error,
    Coverage,
    Overlap,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::MaxCover => "maxcover",
            Constraint::Error => "error",
            Constraint::Coverage => "coverage",
            Constraint::Overlap => "overlap",
        })
    }
}

/// A violated bound; `slack` is negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated: {} vs bound {} (slack {})",
            self.constraint, self.lhs, self.rhs, self.slack
        )
    }
}

/// Global counts a selection induces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Totals {
    pub max_c: i64,
    pub covered: usize,
    /// Covered instances with `P ≤ 0`.
    pub covered_errors: usize,
    pub overlap: usize,
}

impl Totals {
    pub fn of(ind: &Indicators) -> Self {
        let covered = ind.is_covered.iter().filter(|&&b| b).count();
        let errors = ind.is_error.iter().filter(|&&b| b).count();
        Totals {
            max_c: ind.c.iter().copied().max().unwrap_or(0),
            covered,
            covered_errors: errors - (ind.is_covered.len() - covered),
            overlap: ind.is_overlap.iter().filter(|&&b| b).count(),
        }
    }
}

fn violations(t: &Totals, p: &SelectionProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut check = |constraint, lhs: f64, rhs: f64, upper: bool| {
        let slack = if upper { rhs - lhs } else { lhs - rhs };
        if slack < -TOL {
            out.push(Violation {
                constraint,
                lhs,
                rhs,
                slack,
            });
        }
    };
    let covered = t.covered as f64;
    check(Constraint::MaxCover, t.max_c as f64, p.params.maxcover as f64, true);
    check(
        Constraint::Error,
        t.covered_errors as f64,
        p.error_allowance() * covered,
        true,
    );
    check(Constraint::Coverage, covered, p.n as f64 * (1.0 - p.params.beta), false);
    check(
        Constraint::Overlap,
        t.overlap as f64,
        p.params.maxoverlap * covered,
        true,
    );
    out
}

/// Every bound the selection breaks; empty when feasible.
pub fn check_feasible(sel: &[bool], p: &SelectionProblem) -> Vec<Violation> {
    violations(&Totals::of(&derive_indicators(sel, p)), p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Limit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub iterations: u64,
    pub wall_ms: f64,
    pub solver: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSolution {
    pub status: Status,
    pub objective: f64,
    pub is_selected: Vec<bool>,
    pub selected_ids: Vec<usize>,
    pub is_covered: Vec<bool>,
    pub is_error: Vec<bool>,
    pub is_overlap: Vec<bool>,
    /// Bounds broken by the returned selection, if any.
    pub violations: Vec<Violation>,
    pub stats: SolveStats,
}

impl SelectionSolution {
    pub(crate) fn from_selection(sel: Vec<bool>, status: Status, p: &SelectionProblem, stats: SolveStats) -> Self {
        let ind = derive_indicators(&sel, p);
        let violations = violations(&Totals::of(&ind), p);
        SelectionSolution {
            status,
            objective: objective(&sel, p),
            selected_ids: (0..p.m).filter(|&j| sel[j]).map(|j| p.rule_ids[j]).collect(),
            is_selected: sel,
            is_covered: ind.is_covered,
            is_error: ind.is_error,
            is_overlap: ind.is_overlap,
            violations,
            stats,
        }
    }

    /// Column indices of the selected rules.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.is_selected.len()).filter(|&j| self.is_selected[j]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Exact when `m ≤ EXACT_AUTO_MAX`, heuristic otherwise.
    #[default]
    Auto,
    Exact,
    Heuristic,
}

impl std::str::FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Solver::Auto),
            "exact" => Ok(Solver::Exact),
            "heuristic" => Ok(Solver::Heuristic),
            _ => Err(Error::InvalidParam(format!("unknown solver {s:?}"))),
        }
    }
}

pub const EXACT_AUTO_MAX: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub solver: Solver,
    pub seed: u64,
    pub restarts: usize,
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: Solver::Auto,
            seed: 0,
            restarts: 5,
            node_limit: 10_000_000,
            time_limit: None,
        }
    }
}

pub fn solve(p: &SelectionProblem, opts: &SolveOptions, exec: Exec) -> Result<SelectionSolution> {
    let exact = match opts.solver {
        Solver::Exact => true,
        Solver::Heuristic => false,
        Solver::Auto => p.m <= EXACT_AUTO_MAX,
    };
    if exact {
        solve_exact(p, opts.node_limit, opts.time_limit)
    } else {
        solve_heuristic_with(p, opts.seed, opts.restarts, exec)
    }
}

/// Incremental indicator bookkeeping shared by both solvers.
#[derive(Clone)]
pub(crate) struct State<'a> {
    p: &'a SelectionProblem,
    pub sel: Vec<bool>,
    pv: Vec<i32>,
    cv: Vec<u32>,
    pub covered: usize,
    pub covered_errors: usize,
    pub overlap: usize,
    pub over_cap: usize,
    pub cost: f64,
    pub size: usize,
}

impl<'a> State<'a> {
    pub fn new(p: &'a SelectionProblem) -> Self {
        State {
            p,
            sel: vec![false; p.m],
            pv: vec![0; p.n],
            cv: vec![0; p.n],
            covered: 0,
            covered_errors: 0,
            overlap: 0,
            over_cap: 0,
            cost: 0.0,
            size: 0,
        }
    }

    fn tally(&mut self, i: usize, sign: isize) {
        let (pv, cv) = (self.pv[i], self.cv[i]);
        let apply = |field: &mut usize, on: bool| {
            if on {
                *field = field.wrapping_add_signed(sign);
            }
        };
        apply(&mut self.covered, cv >= 1);
        apply(&mut self.covered_errors, cv >= 1 && pv <= 0);
        apply(&mut self.overlap, cv >= 2);
        apply(&mut self.over_cap, cv > self.p.params.maxcover);
    }

    fn touch(&mut self, i: usize, dp: i32, dc: i32) {
        self.tally(i, -1);
        self.pv[i] += dp;
        self.cv[i] = self.cv[i].wrapping_add_signed(dc);
        self.tally(i, 1);
    }

    pub fn add(&mut self, j: usize) {
        debug_assert!(!self.sel[j]);
        let p = self.p;
        for &i in &p.ok_rows[j] {
            self.touch(i as usize, 1, 1);
        }
        for &i in &p.nok_rows[j] {
            self.touch(i as usize, -1, 1);
        }
        self.sel[j] = true;
        self.cost += p.cost[j];
        self.size += 1;
    }

    pub fn remove(&mut self, j: usize) {
        debug_assert!(self.sel[j]);
        let p = self.p;
        for &i in &p.ok_rows[j] {
            self.touch(i as usize, -1, -1);
        }
        for &i in &p.nok_rows[j] {
            self.touch(i as usize, 1, -1);
        }
        self.sel[j] = false;
        self.cost -= p.cost[j];
        self.size -= 1;
    }

    /// Amount by which each bound is missed, summed; zero iff feasible.
    pub fn shortfall(&self) -> f64 {
        let covered = self.covered as f64;
        let p = self.p;
        let over = |x: f64| if x > TOL { x } else { 0.0 };
        self.over_cap as f64 * p.n as f64
            + over(p.min_covered() as f64 - covered)
            + over(self.covered_errors as f64 - p.error_allowance() * covered)
            + over(self.overlap as f64 - p.params.maxoverlap * covered)
    }

    pub fn feasible(&self) -> bool {
        self.shortfall() == 0.0
    }

    /// Whether adding rule `k` would satisfy every bound, without
    /// changing the state.
    pub fn feasible_with(&self, k: usize) -> bool {
        debug_assert!(!self.sel[k]);
        if self.over_cap > 0 {
            return false;
        }
        let p = self.p;
        let (mut covered, mut errors, mut overlap) = (self.covered, self.covered_errors, self.overlap);
        for (rows, dp) in [(&p.ok_rows[k], 1), (&p.nok_rows[k], -1)] {
            for &i in rows {
                let (pv, cv) = (self.pv[i as usize], self.cv[i as usize]);
                if cv >= p.params.maxcover {
                    return false;
                }
                let was_err = cv >= 1 && pv <= 0;
                covered += usize::from(cv == 0);
                overlap += usize::from(cv == 1);
                errors = errors + usize::from(pv + dp <= 0) - usize::from(was_err);
            }
        }
        let c = covered as f64;
        let over = |x: f64| x > TOL;
        !(over(p.min_covered() as f64 - c)
            || over(errors as f64 - p.error_allowance() * c)
            || over(overlap as f64 - p.params.maxoverlap * c))
    }

    /// Rows still missing from the coverage bound.
    pub fn coverage_deficit(&self) -> usize {
        self.p.min_covered().saturating_sub(self.covered)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use fixedbitset::FixedBitSet;
    use rand::seq::SliceRandom;
    use rand::Rng;

    /// Random problem with metrics consistent with its coverage. A few
    /// planted near-exact rules partition the instances so most draws are
    /// feasible; the rest cover random subsets.
    pub(crate) fn random_problem(seed: u64, max_m: usize, max_n: usize, params: &SelectParams) -> SelectionProblem {
        let mut rng = crate::seed::rng(seed);
        let m = rng.gen_range(1..=max_m);
        let n = rng.gen_range(4..=max_n);
        let planted = rng.gen_range(1..=m.min(4));
        let block: Vec<usize> = (0..n).map(|_| rng.gen_range(0..planted)).collect();
        let mut cols = Vec::new();
        for j in 0..m {
            let density = rng.gen_range(0.1..0.6);
            let acc = rng.gen_range(0.75..1.0);
            let mut ok = FixedBitSet::with_capacity(n);
            let mut nok = FixedBitSet::with_capacity(n);
            for i in 0..n {
                let (hit, good) = if j < planted {
                    (block[i] == j, rng.gen_bool(0.97))
                } else {
                    (rng.gen_bool(density), rng.gen_bool(acc))
                };
                if hit {
                    if good {
                        ok.insert(i);
                    } else {
                        nok.insert(i);
                    }
                }
            }
            cols.push((ok, nok));
        }
        cols.shuffle(&mut rng);
        let mut metrics = Vec::new();
        for (ok, nok) in &cols {
            let covered = ok.count_ones(..) + nok.count_ones(..);
            let att = rng.gen_range(1..=4);
            metrics.push(RuleMetrics {
                confidence: if covered == 0 {
                    0.0
                } else {
                    ok.count_ones(..) as f64 / covered as f64
                },
                coverage: covered as f64 / n as f64,
                class_coverage: 0.0,
                att_nbr: att,
                lev_nbr: att + 1,
                att_nbr_s: att as f64 / 5.0,
                lev_nbr_s: (att + 1) as f64 / 15.0,
                attributes: (0..att).collect(),
            });
        }
        let (oks, noks) = cols.into_iter().unzip();
        let cov = CoverageMatrices::from_columns(n, oks, noks).unwrap();
        let init_error = rng.gen_range(0.05..0.3);
        build_problem(&metrics, &cov, init_error, params).unwrap()
    }

    pub(crate) fn brute_force(p: &SelectionProblem) -> Option<f64> {
        let mut best: Option<f64> = None;
        for mask in 0u64..(1 << p.m) {
            let sel: Vec<bool> = (0..p.m).map(|j| mask >> j & 1 == 1).collect();
            if check_feasible(&sel, p).is_empty() {
                let v = objective(&sel, p);
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
        best
    }

    fn metrics(conf: f64, cov: f64, att_s: f64, lev_s: f64) -> RuleMetrics {
        RuleMetrics {
            confidence: conf,
            coverage: cov,
            class_coverage: cov,
            att_nbr: 1,
            lev_nbr: 1,
            att_nbr_s: att_s,
            lev_nbr_s: lev_s,
            attributes: vec![0],
        }
    }

    fn columns(n: usize, cols: &[(&[usize], &[usize])]) -> CoverageMatrices {
        let set = |v: &[usize]| {
            let mut b = FixedBitSet::with_capacity(n);
            v.iter().for_each(|&i| b.insert(i));
            b
        };
        CoverageMatrices::from_columns(
            n,
            cols.iter().map(|c| set(c.0)).collect(),
            cols.iter().map(|c| set(c.1)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn objective_by_substitution() {
        let cov = columns(1, &[(&[0], &[])]);
        let p = build_problem(&[metrics(1.0, 1.0, 0.5, 0.5)], &cov, 0.0, &SelectParams::default()).unwrap();
        assert_eq!(objective(&[false], &p), 0.0);
        assert!((objective(&[true], &p) - 1.075).abs() < 1e-12);
        assert_eq!((p.m, p.n), (1, 1));
    }

    #[test]
    fn dimension_guard() {
        let cov = columns(3, &[(&[0], &[]), (&[1], &[2])]);
        let err = build_problem(&[metrics(1.0, 1.0, 0.5, 0.5)], &cov, 0.0, &SelectParams::default());
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn indicator_cases() {
        // instance 0: one correct; 1: correct + incorrect; 2: none
        let cov = columns(3, &[(&[0, 1], &[]), (&[], &[1])]);
        let m = [metrics(1.0, 0.5, 0.1, 0.1), metrics(0.0, 0.3, 0.1, 0.1)];
        let p = build_problem(&m, &cov, 0.0, &SelectParams::default()).unwrap();
        let ind = derive_indicators(&[true, true], &p);
        assert_eq!(ind.p, vec![1, 0, 0]);
        assert_eq!(ind.c, vec![1, 2, 0]);
        assert_eq!(ind.is_covered, vec![true, true, false]);
        assert_eq!(ind.is_error, vec![false, true, true]);
        assert_eq!(ind.is_overlap, vec![false, true, false]);
    }

    #[test]
    fn feasibility_cases() {
        let cov = columns(4, &[(&[0, 1, 2, 3], &[]), (&[0, 1], &[]), (&[0], &[]), (&[0], &[])]);
        let m = vec![metrics(1.0, 1.0, 0.1, 0.1); 4];
        let p = build_problem(&m, &cov, 0.1, &SelectParams::default()).unwrap();
        assert!(check_feasible(&[true, false, false, false], &p).is_empty());
        let v = check_feasible(&[false; 4], &p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::Coverage);
        let v = check_feasible(&[true; 4], &p);
        assert!(v.iter().any(|v| v.constraint == Constraint::MaxCover));
    }

    #[test]
    fn state_matches_direct_counts() {
        let params = SelectParams::default();
        for seed in 0..40 {
            let p = random_problem(seed, 10, 40, &params);
            let mut st = State::new(&p);
            let mut rng = crate::seed::rng(seed + 1000);
            for _ in 0..30 {
                let j = rng.gen_range(0..p.m);
                if st.sel[j] {
                    st.remove(j)
                } else {
                    st.add(j)
                }
                let t = Totals::of(&derive_indicators(&st.sel, &p));
                assert_eq!(st.covered, t.covered);
                assert_eq!(st.covered_errors, t.covered_errors);
                assert_eq!(st.overlap, t.overlap);
                assert_eq!(st.over_cap == 0, t.max_c <= params.maxcover as i64);
                assert_eq!(st.feasible(), check_feasible(&st.sel, &p).is_empty());
                assert!((st.cost - objective(&st.sel, &p)).abs() < 1e-9);
                for k in (0..p.m).filter(|&k| !st.sel[k]) {
                    let mut sel = st.sel.clone();
                    sel[k] = true;
                    assert_eq!(st.feasible_with(k), check_feasible(&sel, &p).is_empty());
                }
            }
        }
    }

    #[test]
    fn solution_json_round_trip() {
        let p = random_problem(3, 6, 20, &SelectParams::default());
        let s = solve_exact(&p, 1_000_000, None).unwrap();
        assert_eq!(SelectionSolution::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
