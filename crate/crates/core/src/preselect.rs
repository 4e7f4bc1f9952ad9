//! Rule preselection: duplicate removal, length and quality thresholds,
//! then similarity grouping over cover sets.

use std::cmp::Ordering;
use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rules::{
    jaccard_similarity, metrics_from_cover, CoverageMatrices, LevelIndex, Rule, RuleMetrics, RuleRecord,
};
use crate::{Error, Exec, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreselectParams {
    pub min_conf: f64,
    pub min_class_cov: f64,
    pub max_len: usize,
    pub max_simil: f64,
}

impl Default for PreselectParams {
    fn default() -> Self {
        PreselectParams {
            min_conf: 0.51,
            min_class_cov: 0.025,
            max_len: 6,
            max_simil: 0.95,
        }
    }
}

impl PreselectParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if !(self.min_conf > 0.0 && self.min_conf <= 1.0) {
            return bad("min_conf must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.min_class_cov) {
            return bad("min_class_cov must be in [0, 1]");
        }
        if self.max_len < 1 {
            return bad("max_len must be at least 1");
        }
        if !(self.max_simil > 0.0 && self.max_simil <= 1.0) {
            return bad("max_simil must be in (0, 1]");
        }
        Ok(())
    }
}

/// Collapses rules with identical condition and prediction, keeping the
/// lowest id. Output is sorted by id.
pub fn remove_redundant(rules: &[Rule]) -> Vec<Rule> {
    let mut sorted: Vec<&Rule> = rules.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let mut seen = HashSet::new();
    sorted
        .into_iter()
        .filter(|r| seen.insert((&r.condition, r.ypred)))
        .cloned()
        .collect()
}

/// Outcome of [`preselect`].
#[derive(Clone, Debug)]
pub struct Preselection {
    /// Kept rules, ascending id.
    pub psr: Vec<RuleRecord>,
    /// Training coverage of `psr`, one column per rule in the same order.
    pub coverage: CoverageMatrices,
    /// Rules removed for being too similar to a kept one, ascending id.
    pub psrs: Vec<RuleRecord>,
    pub stats: PreselectStats,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreselectStats {
    pub input: usize,
    pub after_dedup: usize,
    pub after_length: usize,
    pub after_thresholds: usize,
    pub kept: usize,
    pub similar: usize,
}

/// Ranks two rules of a similarity group; `Less` means `a` is preferred.
fn prefer(a: &RuleRecord, b: &RuleRecord) -> Ordering {
    let (ma, mb) = (&a.metrics, &b.metrics);
    mb.confidence
        .total_cmp(&ma.confidence)
        .then(mb.coverage.total_cmp(&ma.coverage))
        .then(ma.att_nbr.cmp(&mb.att_nbr))
        .then(ma.lev_nbr.cmp(&mb.lev_nbr))
        .then(a.rule.id.cmp(&b.rule.id))
}

pub fn preselect(rules: &[Rule], train: &Dataset, p: &PreselectParams) -> Result<Preselection> {
    preselect_with(rules, train, p, Exec::default())
}

pub fn preselect_with(rules: &[Rule], train: &Dataset, p: &PreselectParams, exec: Exec) -> Result<Preselection> {
    p.validate()?;
    if rules.is_empty() {
        return Err(Error::InvalidParam("no rules to preselect".into()));
    }
    let mut stats = PreselectStats {
        input: rules.len(),
        ..Default::default()
    };
    let unique = remove_redundant(rules);
    stats.after_dedup = unique.len();

    let short: Vec<Rule> = unique
        .into_iter()
        .filter(|r| r.condition.att_nbr() <= p.max_len)
        .collect();
    stats.after_length = short.len();
    if short.is_empty() {
        return Err(Error::EmptyPreselection(format!("max_len = {}", p.max_len)));
    }

    let index = LevelIndex::new(train);
    let measured: Vec<(RuleRecord, FixedBitSet)> = exec.map(&short, |r| {
        let cover = index.cover(&r.condition);
        let metrics = metrics_from_cover(r, &cover, train);
        (
            RuleRecord {
                rule: r.clone(),
                metrics,
            },
            cover,
        )
    });
    let passes_conf = |m: &RuleMetrics| m.confidence >= p.min_conf;
    let passes_cov = |m: &RuleMetrics| m.class_coverage >= p.min_class_cov;
    let (conf_ok, cov_ok) = measured.iter().fold((0, 0), |(a, b), (r, _)| {
        (
            a + usize::from(passes_conf(&r.metrics)),
            b + usize::from(passes_cov(&r.metrics)),
        )
    });
    let strong: Vec<(RuleRecord, FixedBitSet)> = measured
        .into_iter()
        .filter(|(r, _)| passes_conf(&r.metrics) && passes_cov(&r.metrics))
        .collect();
    stats.after_thresholds = strong.len();
    if strong.is_empty() {
        let binding = match (conf_ok, cov_ok) {
            (0, 0) => format!("min_conf = {} and min_class_cov = {}", p.min_conf, p.min_class_cov),
            (0, _) => format!("min_conf = {}", p.min_conf),
            (_, 0) => format!("min_class_cov = {}", p.min_class_cov),
            _ => format!(
                "min_conf = {} jointly with min_class_cov = {}",
                p.min_conf, p.min_class_cov
            ),
        };
        return Err(Error::EmptyPreselection(binding));
    }

    // neighbour rows in parallel, group scan sequential in id order
    let neighbours: Vec<Vec<usize>> = exec.map_range(strong.len(), |i| {
        (0..strong.len())
            .filter(|&j| j != i && jaccard_similarity(&strong[i].1, &strong[j].1) >= p.max_simil)
            .collect()
    });
    let mut removed = vec![false; strong.len()];
    for i in 0..strong.len() {
        if removed[i] {
            continue;
        }
        let group: Vec<usize> = std::iter::once(i)
            .chain(neighbours[i].iter().copied().filter(|&j| !removed[j]))
            .collect();
        let best = *group
            .iter()
            .min_by(|&&a, &&b| prefer(&strong[a].0, &strong[b].0))
            .expect("group holds i");
        for &g in &group {
            if g != best {
                removed[g] = true;
            }
        }
    }

    let mut psr = Vec::new();
    let mut covers = Vec::new();
    let mut psrs = Vec::new();
    for ((rec, cover), gone) in strong.into_iter().zip(removed) {
        if gone {
            psrs.push(rec);
        } else {
            psr.push(rec);
            covers.push(cover);
        }
    }
    stats.kept = psr.len();
    stats.similar = psrs.len();
    let ypreds: Vec<u32> = psr.iter().map(|r| r.rule.ypred).collect();
    let coverage = CoverageMatrices::from_covers(&covers, &ypreds, train.labels());
    log::info!(
        "preselection: {} rules -> {} unique -> {} short -> {} strong -> {} kept",
        stats.input,
        stats.after_dedup,
        stats.after_length,
        stats.after_thresholds,
        stats.kept
    );
    Ok(Preselection {
        psr,
        coverage,
        psrs,
        stats,
    })
}
