//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use fixedbitset::FixedBitSet;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ruleforest::data::Dataset;
use ruleforest::rules::{CoverageMatrices, RuleMetrics};
use ruleforest::select::{build_problem, SelectParams, SelectionProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A selection instance together with the raw data it was built from.
pub struct RawProblem {
    pub covers: Vec<FixedBitSet>,
    pub ypreds: Vec<u32>,
    pub labels: Vec<u32>,
    pub metrics: Vec<RuleMetrics>,
    pub init_error: f64,
    pub problem: SelectionProblem,
}

/// Random instance with `m <= max_m`, `n <= max_n`. A few rules partition
/// the rows and mostly predict each block's majority; the rest cover random
/// subsets.
pub fn random_problem(seed: u64, max_m: usize, max_n: usize, params: &SelectParams) -> RawProblem {
    let mut r = rng(seed);
    let m = r.gen_range(1..=max_m);
    let n = r.gen_range(4..=max_n);
    let k = r.gen_range(2..=3u32);
    let labels: Vec<u32> = (0..n).map(|_| r.gen_range(0..k)).collect();
    let planted = r.gen_range(1..=m.min(4));
    let block: Vec<usize> = (0..n).map(|_| r.gen_range(0..planted)).collect();
    let mut covers = Vec::with_capacity(m);
    let mut ypreds = Vec::with_capacity(m);
    for j in 0..m {
        let mut cover = FixedBitSet::with_capacity(n);
        if j < planted {
            (0..n).filter(|&i| block[i] == j).for_each(|i| cover.insert(i));
            let mut counts = vec![0usize; k as usize];
            cover.ones().for_each(|i| counts[labels[i] as usize] += 1);
            let y = (0..k as usize)
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .unwrap();
            // mostly the block's label, sometimes not
            ypreds.push(if r.gen_bool(0.85) { y as u32 } else { r.gen_range(0..k) });
        } else {
            let density = r.gen_range(0.05..0.6);
            (0..n).filter(|_| r.gen_bool(density)).for_each(|i| cover.insert(i));
            ypreds.push(r.gen_range(0..k));
        }
        covers.push(cover);
    }
    let metrics: Vec<RuleMetrics> = covers
        .iter()
        .zip(&ypreds)
        .map(|(c, &y)| {
            let size = c.count_ones(..);
            let ok = c.ones().filter(|&i| labels[i] == y).count();
            let att = r.gen_range(1..=4usize);
            RuleMetrics {
                confidence: if size == 0 { 0.0 } else { ok as f64 / size as f64 },
                coverage: size as f64 / n as f64,
                class_coverage: ok as f64 / labels.iter().filter(|&&l| l == y).count().max(1) as f64,
                att_nbr: att,
                lev_nbr: att + r.gen_range(0..4usize),
                att_nbr_s: att as f64 / 4.0,
                lev_nbr_s: r.gen_range(0.05..1.0),
                attributes: (0..att).collect(),
            }
        })
        .collect();
    // usually the planted partition's own error, so that it is feasible;
    // sometimes an arbitrary value to keep infeasible instances around
    let init_error = if r.gen_bool(0.8) {
        let wrong = (0..n).filter(|&i| labels[i] != ypreds[block[i]]).count();
        (wrong as f64 / n as f64 + r.gen_range(0.0..0.05)).min(1.0)
    } else {
        r.gen_range(0.0..0.3)
    };
    let cov = CoverageMatrices::from_covers(&covers, &ypreds, &labels);
    let problem = build_problem(&metrics, &cov, init_error, params).unwrap();
    RawProblem {
        covers,
        ypreds,
        labels,
        metrics,
        init_error,
        problem,
    }
}

/// Per-instance vote margin and cover count computed straight from the
/// rule covers and labels.
pub fn votes(raw: &RawProblem, sel: &[bool]) -> (Vec<i64>, Vec<i64>) {
    let n = raw.labels.len();
    let (mut p, mut c) = (vec![0i64; n], vec![0i64; n]);
    for (j, cover) in raw.covers.iter().enumerate().filter(|(j, _)| sel[*j]) {
        for i in cover.ones() {
            c[i] += 1;
            p[i] += if raw.labels[i] == raw.ypreds[j] { 1 } else { -1 };
        }
    }
    (p, c)
}

/// Every bound of the selection program checked from scratch.
pub fn brute_feasible(raw: &RawProblem, sel: &[bool], params: &SelectParams) -> bool {
    let (p, c) = votes(raw, sel);
    let n = raw.labels.len() as f64;
    let covered = c.iter().filter(|&&x| x >= 1).count() as f64;
    let errors_in_cover = (0..p.len()).filter(|&i| c[i] >= 1 && p[i] <= 0).count() as f64;
    let overlap = c.iter().filter(|&&x| x >= 2).count() as f64;
    c.iter().all(|&x| x <= params.maxcover as i64)
        && errors_in_cover <= (raw.init_error + params.alpha) * covered + 1e-9
        && covered >= n * (1.0 - params.beta) - 1e-9
        && overlap <= params.maxoverlap * covered + 1e-9
}

/// Selection cost written out term by term.
pub fn brute_objective(raw: &RawProblem, sel: &[bool], params: &SelectParams) -> f64 {
    (0..sel.len())
        .filter(|&j| sel[j])
        .map(|j| {
            let m = &raw.metrics[j];
            1.0 + params.w0 * (1.0 - m.confidence)
                + params.w1 * (1.0 - m.coverage)
                + params.w2 * m.att_nbr_s
                + params.w3 * m.lev_nbr_s
        })
        .sum()
}

/// Minimum cost over all `2^m` selections, `None` when none is feasible.
pub fn brute_optimum(raw: &RawProblem, params: &SelectParams) -> Option<f64> {
    let m = raw.covers.len();
    assert!(m <= 20);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << m) {
        let sel: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        if brute_feasible(raw, &sel, params) {
            let v = brute_objective(raw, &sel, params);
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    }
    best
}

/// Random categorical dataset whose class depends on the first attribute
/// with some noise; both classes always occur.
pub fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
    let mut r = rng(seed);
    let levels: Vec<usize> = (0..p).map(|_| r.gen_range(2..=4)).collect();
    let mut records = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<usize> = levels.iter().map(|&k| r.gen_range(0..k)).collect();
        let mut y = usize::from(row[0] % 2 == 1 && row[p.min(2) - 1] != 0);
        if r.gen_bool(0.1) {
            y = 1 - y;
        }
        if i < 2 {
            y = i;
        }
        records.push(row.iter().enumerate().map(|(a, v)| format!("a{a}v{v}")).collect());
        labels.push(if y == 1 { "pos".to_string() } else { "neg".to_string() });
    }
    let names = (0..p).map(|a| format!("a{a}")).collect();
    Dataset::from_records(names, "class", &records, &labels).unwrap()
}
