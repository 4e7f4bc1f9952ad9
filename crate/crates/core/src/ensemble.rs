//! Rule-set classifiers and their evaluation.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{argmax_lowest, Dataset};
use crate::rules::{LevelIndex, RuleRecord};
use crate::{Error, Result};

/// Majority class of the training instances no rule covers, or of all
/// training instances when everything is covered. Ties go to the lowest
/// class index.
pub fn default_class(rules: &[RuleRecord], train: &Dataset) -> u32 {
    let mut counts = vec![0usize; train.n_classes()];
    let mut any = false;
    for i in 0..train.n() {
        let row = train.row(i);
        if !rules.iter().any(|r| r.rule.condition.covers(row)) {
            counts[train.label(i) as usize] += 1;
            any = true;
        }
    }
    if any {
        argmax_lowest(&counts) as u32
    } else {
        train.majority_class()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    DecisionSet,
    OrderedList,
}

/// One step of an ordered list as learned on the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ListStep {
    /// Index into the classifier's rules; `None` for the closing default.
    pub rule: Option<usize>,
    /// Instances newly matched by this step, over the training size.
    pub freq: f64,
    /// Misclassified share of those instances.
    pub err: f64,
    pub class: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleClassifier {
    pub rules: Vec<RuleRecord>,
    pub default_class: u32,
    pub mode: Mode,
    /// Rule indices in firing order (ordered lists only).
    pub order: Vec<usize>,
    /// Learning trace (ordered lists only).
    pub trace: Vec<ListStep>,
    n_classes: usize,
}

/// A prediction plus whether any rule (rather than the default) decided it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predictions {
    pub labels: Vec<u32>,
    pub covered: Vec<bool>,
}

impl RuleClassifier {
    /// Unordered voting classifier with the default class learned on `train`.
    pub fn decision_set(rules: Vec<RuleRecord>, train: &Dataset) -> Self {
        let default_class = default_class(&rules, train);
        RuleClassifier {
            rules,
            default_class,
            mode: Mode::DecisionSet,
            order: Vec::new(),
            trace: Vec::new(),
            n_classes: train.n_classes(),
        }
    }

    /// Class for one instance and whether a rule covered it.
    ///
    /// Decision sets take a plurality vote; a tied vote goes to the class of
    /// the most confident covering rule, then the lowest rule id.
    /// Rules that can fire: all of them for a decision set, the ordered
    /// ones for a list.
    pub fn active_rules(&self) -> Vec<RuleRecord> {
        match self.mode {
            Mode::DecisionSet => self.rules.clone(),
            Mode::OrderedList => self.order.iter().map(|&k| self.rules[k].clone()).collect(),
        }
    }

    pub fn predict_row(&self, row: &[u32]) -> (u32, bool) {
        match self.mode {
            Mode::OrderedList => self
                .order
                .iter()
                .map(|&k| &self.rules[k])
                .find(|r| r.rule.condition.covers(row))
                .map_or((self.default_class, false), |r| (r.rule.ypred, true)),
            Mode::DecisionSet => {
                let covering: Vec<&RuleRecord> = self.rules.iter().filter(|r| r.rule.condition.covers(row)).collect();
                if covering.is_empty() {
                    return (self.default_class, false);
                }
                let mut votes = vec![0usize; self.n_classes];
                for r in &covering {
                    votes[r.rule.ypred as usize] += 1;
                }
                let top = *votes.iter().max().expect("at least one class");
                let winner = covering
                    .iter()
                    .filter(|r| votes[r.rule.ypred as usize] == top)
                    .min_by(|a, b| {
                        b.metrics
                            .confidence
                            .total_cmp(&a.metrics.confidence)
                            .then(a.rule.id.cmp(&b.rule.id))
                    })
                    .expect("a top-voted rule exists");
                (winner.rule.ypred, true)
            }
        }
    }

    pub fn predict(&self, ds: &Dataset) -> Predictions {
        let (labels, covered) = (0..ds.n()).map(|i| self.predict_row(ds.row(i))).unzip();
        Predictions { labels, covered }
    }
}

/// Greedy ordered list: repeatedly takes the rule with the lowest error on
/// the instances not yet matched, then the highest frequency, then the
/// lowest id. A default candidate predicting the remaining majority
/// competes under the same ranking and is placed last on full ties;
/// choosing it ends the list.
pub fn build_ordered_list(rules: Vec<RuleRecord>, train: &Dataset) -> Result<RuleClassifier> {
    if rules.is_empty() {
        return Err(Error::InvalidParam("ordered list needs at least one rule".into()));
    }
    Ok(grow_list(rules, train))
}

/// An ordered list holding only the closing default step, for an empty
/// selection.
pub fn default_only_list(train: &Dataset) -> RuleClassifier {
    grow_list(Vec::new(), train)
}

fn grow_list(rules: Vec<RuleRecord>, train: &Dataset) -> RuleClassifier {
    let n = train.n();
    let index = LevelIndex::new(train);
    let covers: Vec<_> = rules.iter().map(|r| index.cover(&r.rule.condition)).collect();
    let mut remaining = fixedbitset::FixedBitSet::with_capacity(n);
    remaining.insert_range(..);
    let mut used = vec![false; rules.len()];
    let mut order = Vec::new();
    let mut trace = Vec::new();
    let share = |part: usize| part as f64 / n as f64;
    loop {
        let left = remaining.count_ones(..);
        if left == 0 {
            break;
        }
        let mut counts = vec![0usize; train.n_classes()];
        for i in remaining.ones() {
            counts[train.label(i) as usize] += 1;
        }
        let majority = argmax_lowest(&counts);
        let default_wrong = left - counts[majority];

        // (wrong, matched, rule index); errors compared as exact ratios
        let mut best: Option<(usize, usize, usize)> = None;
        for (k, r) in rules.iter().enumerate().filter(|(k, _)| !used[*k]) {
            let mut hit = covers[k].clone();
            hit.intersect_with(&remaining);
            let matched = hit.count_ones(..);
            if matched == 0 {
                continue;
            }
            let wrong = hit.ones().filter(|&i| train.label(i) != r.rule.ypred).count();
            let better = match best {
                None => true,
                Some((w, f, b)) => match (wrong * f).cmp(&(w * matched)) {
                    Ordering::Less => true,
                    Ordering::Equal => matched > f || (matched == f && r.rule.id < rules[b].rule.id),
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((wrong, matched, k));
            }
        }
        let rule_wins = best.is_some_and(|(w, f, _)| match (w * left).cmp(&(default_wrong * f)) {
            Ordering::Less => true,
            Ordering::Equal => f >= left,
            Ordering::Greater => false,
        });
        let Some((wrong, matched, k)) = best.filter(|_| rule_wins) else {
            trace.push(ListStep {
                rule: None,
                freq: share(left),
                err: default_wrong as f64 / left as f64,
                class: majority as u32,
            });
            break;
        };
        let err = wrong as f64 / matched as f64;
        used[k] = true;
        order.push(k);
        trace.push(ListStep {
            rule: Some(k),
            freq: share(matched),
            err,
            class: rules[k].rule.ypred,
        });
        remaining.difference_with(&covers[k]);
    }
    let default_class = trace
        .last()
        .filter(|s| s.rule.is_none())
        .map_or_else(|| train.majority_class(), |s| s.class);
    RuleClassifier {
        rules,
        default_class,
        mode: Mode::OrderedList,
        order,
        trace,
        n_classes: train.n_classes(),
    }
}

/// Square confusion matrix, rows = truth, columns = prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Confusion {
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn new(pred: &[u32], truth: &[u32], n_classes: usize) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Dimension(format!(
                "{} predictions for {} labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&p, &t) in pred.iter().zip(truth) {
            if p as usize >= n_classes || t as usize >= n_classes {
                return Err(Error::InvalidParam(format!("class index beyond {n_classes}")));
            }
            counts[t as usize][p as usize] += 1;
        }
        Ok(Confusion { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn scores(&self) -> Option<Scores> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let k = self.counts.len();
        let diag: usize = (0..k).map(|c| self.counts[c][c]).sum();
        let row = |c: usize| self.counts[c].iter().sum::<usize>();
        let col = |c: usize| self.counts.iter().map(|r| r[c]).sum::<usize>();
        let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let precision = mean(
            (0..k)
                .filter(|&c| col(c) > 0)
                .map(|c| self.counts[c][c] as f64 / col(c) as f64)
                .collect(),
        );
        let recall = mean(
            (0..k)
                .filter(|&c| row(c) > 0)
                .map(|c| self.counts[c][c] as f64 / row(c) as f64)
                .collect(),
        );
        let n = total as f64;
        let po = diag as f64 / n;
        let pe: f64 = (0..k).map(|c| row(c) as f64 * col(c) as f64).sum::<f64>() / (n * n);
        let kappa = if (1.0 - pe).abs() < 1e-15 {
            1.0
        } else {
            (po - pe) / (1.0 - pe)
        };
        Some(Scores {
            accuracy: po,
            macro_precision: precision.unwrap_or(0.0),
            macro_recall: recall.unwrap_or(0.0),
            kappa,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub kappa: f64,
}

/// Scores over all instances and over the covered ones only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub all: Scores,
    pub covered: Option<Scores>,
    pub coverage: f64,
}

pub fn evaluate(pred: &[u32], truth: &[u32], covered: &[bool], n_classes: usize) -> Result<Evaluation> {
    if covered.len() != pred.len() {
        return Err(Error::Dimension("covered mask length differs from predictions".into()));
    }
    let all = Confusion::new(pred, truth, n_classes)?
        .scores()
        .ok_or_else(|| Error::InvalidParam("nothing to evaluate".into()))?;
    let keep = |v: &[u32]| -> Vec<u32> { v.iter().zip(covered).filter(|(_, &c)| c).map(|(&x, _)| x).collect() };
    let covered_scores = Confusion::new(&keep(pred), &keep(truth), n_classes)?.scores();
    Ok(Evaluation {
        all,
        covered: covered_scores,
        coverage: covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64,
    })
}

/// Agreement with the forest, overall and split by whether the forest was
/// right. Cells with no instances are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub overall: Option<f64>,
    pub rf_correct: Option<f64>,
    pub rf_wrong: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub all: FidelityRow,
    pub covered: FidelityRow,
    pub uncovered: FidelityRow,
}

pub fn fidelity(pred: &[u32], rf_pred: &[u32], truth: &[u32], covered: &[bool]) -> Result<Fidelity> {
    let n = pred.len();
    if rf_pred.len() != n || truth.len() != n || covered.len() != n {
        return Err(Error::Dimension("fidelity inputs differ in length".into()));
    }
    let row = |scope: &dyn Fn(usize) -> bool| {
        let rate = |keep: &dyn Fn(usize) -> bool| {
            let idx: Vec<usize> = (0..n).filter(|&i| scope(i) && keep(i)).collect();
            (!idx.is_empty()).then(|| idx.iter().filter(|&&i| pred[i] == rf_pred[i]).count() as f64 / idx.len() as f64)
        };
        FidelityRow {
            overall: rate(&|_| true),
            rf_correct: rate(&|i| rf_pred[i] == truth[i]),
            rf_wrong: rate(&|i| rf_pred[i] != truth[i]),
        }
    };
    Ok(Fidelity {
        all: row(&|_| true),
        covered: row(&|i| covered[i]),
        uncovered: row(&|i| !covered[i]),
    })
}

/// `(rules per class, attributes per rule)`.
pub fn complexity(rules: &[RuleRecord], n_classes: usize) -> (f64, f64) {
    if rules.is_empty() || n_classes == 0 {
        return (0.0, 0.0);
    }
    let atts: usize = rules.iter().map(|r| r.rule.condition.att_nbr()).sum();
    (rules.len() as f64 / n_classes as f64, atts as f64 / rules.len() as f64)
}

/// Everything reported for one classifier on one test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub kappa: f64,
    pub coverage: f64,
    pub covered_scores: Option<Scores>,
    pub fidelity: Fidelity,
    pub n_rules: usize,
    pub rules_per_class: f64,
    pub atts_per_rule: f64,
}

/// Scores `clf` on `test` against truth and the forest's predictions.
pub fn report(clf: &RuleClassifier, test: &Dataset, rf_pred: &[u32]) -> Result<EvaluationReport> {
    let pred = clf.predict(test);
    let ev = evaluate(&pred.labels, test.labels(), &pred.covered, test.n_classes())?;
    let fid = fidelity(&pred.labels, rf_pred, test.labels(), &pred.covered)?;
    let active = clf.active_rules();
    let (rules_per_class, atts_per_rule) = complexity(&active, test.n_classes());
    Ok(EvaluationReport {
        accuracy: ev.all.accuracy,
        macro_precision: ev.all.macro_precision,
        macro_recall: ev.all.macro_recall,
        kappa: ev.all.kappa,
        coverage: ev.coverage,
        covered_scores: ev.covered,
        fidelity: fid,
        n_rules: active.len(),
        rules_per_class,
        atts_per_rule,
    })
}
