//! Complementary rules for a selection, found through pairwise containment
//! metarules mined over rule-coverage transactions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rules::{render_attributes, LevelIndex, Rule, RuleRecord};
use crate::{Error, Exec, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichParams {
    pub arm_minconf: f64,
    pub arm_minsup: f64,
}

impl Default for EnrichParams {
    fn default() -> Self {
        EnrichParams {
            arm_minconf: 0.98,
            arm_minsup: 0.025,
        }
    }
}

impl EnrichParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("arm_minconf", self.arm_minconf), ("arm_minsup", self.arm_minsup)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParam(format!("{name} must be in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Per-instance ids of the rules whose condition holds, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaTransactions {
    pub transactions: Vec<Vec<usize>>,
}

impl MetaTransactions {
    pub fn n(&self) -> usize {
        self.transactions.len()
    }

    fn item_counts(&self) -> HashMap<usize, usize> {
        let mut counts = HashMap::new();
        for t in &self.transactions {
            for &id in t {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        counts
    }
}

pub fn build_transactions(rules: &[Rule], ds: &Dataset) -> MetaTransactions {
    build_transactions_with(rules, ds, Exec::default())
}

pub fn build_transactions_with(rules: &[Rule], ds: &Dataset, exec: Exec) -> MetaTransactions {
    let index = LevelIndex::new(ds);
    let covers = exec.map(rules, |r| index.cover(&r.condition));
    let mut transactions = vec![Vec::new(); ds.n()];
    for (r, cover) in rules.iter().zip(&covers) {
        for i in cover.ones() {
            transactions[i].push(r.id);
        }
    }
    for t in &mut transactions {
        t.sort_unstable();
        t.dedup();
    }
    MetaTransactions { transactions }
}

/// `antecedent → consequent`: instances covered by the antecedent are
/// (nearly) all covered by the consequent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metarule {
    pub antecedent: usize,
    pub consequent: usize,
    pub support: f64,
    pub confidence: f64,
    /// Share of the consequent's cover also covered by the antecedent.
    pub intersect: f64,
}

/// Size-2 metarules whose consequent is selected, sorted by consequent then
/// antecedent.
pub fn mine_metarules(t: &MetaTransactions, selected: &[usize], p: &EnrichParams) -> Result<Vec<Metarule>> {
    p.validate()?;
    let n = t.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let single = t.item_counts();
    let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
    for tr in &t.transactions {
        for &j in tr.iter().filter(|j| selected.contains(j)) {
            for &i in tr.iter().filter(|&&i| i != j) {
                *pairs.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    let mut out: Vec<Metarule> = pairs
        .into_iter()
        .filter_map(|((i, j), both)| {
            let rule = Metarule {
                antecedent: i,
                consequent: j,
                support: both as f64 / n as f64,
                confidence: both as f64 / single[&i] as f64,
                intersect: both as f64 / single[&j] as f64,
            };
            (rule.support >= p.arm_minsup && rule.confidence >= p.arm_minconf).then_some(rule)
        })
        .collect();
    out.sort_by_key(|m| (m.consequent, m.antecedent));
    Ok(out)
}

/// One row of the enrichment table.
#[derive(Clone, Debug, PartialEq)]
pub struct EnrichedRule {
    pub base: usize,
    pub record: RuleRecord,
    pub intersect: f64,
}

fn prefer(a: (&RuleRecord, f64), b: (&RuleRecord, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(b.0.metrics.confidence.total_cmp(&a.0.metrics.confidence))
        .then(b.0.metrics.coverage.total_cmp(&a.0.metrics.coverage))
        .then(a.0.metrics.att_nbr.cmp(&b.0.metrics.att_nbr))
        .then(a.0.rule.id.cmp(&b.0.rule.id))
}

/// For each selected rule, in the given order: its own row, then the best
/// antecedent per attribute set different from its own, best first.
pub fn select_complementary(
    meta: &[Metarule],
    records: &[RuleRecord],
    selected: &[usize],
) -> Result<Vec<EnrichedRule>> {
    let by_id: HashMap<usize, &RuleRecord> = records.iter().map(|r| (r.rule.id, r)).collect();
    let lookup = |id: usize| {
        by_id
            .get(&id)
            .copied()
            .ok_or_else(|| Error::InvalidParam(format!("metarule references unknown rule {id}")))
    };
    let mut out = Vec::new();
    for &j in selected {
        let base = lookup(j)?;
        out.push(EnrichedRule {
            base: j,
            record: base.clone(),
            intersect: 1.0,
        });
        let mut groups: BTreeMap<Vec<usize>, (&RuleRecord, f64)> = BTreeMap::new();
        for m in meta.iter().filter(|m| m.consequent == j) {
            let cand = lookup(m.antecedent)?;
            if cand.metrics.attributes == base.metrics.attributes {
                continue;
            }
            groups
                .entry(cand.metrics.attributes.clone())
                .and_modify(|best| {
                    if prefer((cand, m.intersect), *best) == Ordering::Less {
                        *best = (cand, m.intersect);
                    }
                })
                .or_insert((cand, m.intersect));
        }
        let mut picks: Vec<(&RuleRecord, f64)> = groups.into_values().collect();
        picks.sort_by(|a, b| prefer(*a, *b));
        out.extend(picks.into_iter().map(|(r, x)| EnrichedRule {
            base: j,
            record: r.clone(),
            intersect: x,
        }));
    }
    Ok(out)
}

pub const ENRICHED_HEADER: [&str; 10] = [
    "ID SR",
    "ID Rule",
    "Condition",
    "Ypred",
    "Intersect",
    "Att.",
    "Att. nbr",
    "Lev. nbr",
    "Conf.",
    "Cov.",
];

pub fn write_enriched_csv<W: Write>(rows: &[EnrichedRule], ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENRICHED_HEADER)?;
    for r in rows {
        let (rule, m) = (&r.record.rule, &r.record.metrics);
        w.write_record([
            r.base.to_string(),
            rule.id.to_string(),
            rule.condition.render(ds),
            ds.class_levels()[rule.ypred as usize].clone(),
            r.intersect.to_string(),
            render_attributes(&m.attributes),
            m.att_nbr.to_string(),
            m.lev_nbr.to_string(),
            m.confidence.to_string(),
            m.coverage.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
