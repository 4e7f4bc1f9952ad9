//! Rules, their extraction from forest paths, per-rule metrics and the
//! instance × rule coverage matrices.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LevelSet};
use crate::forest::{Forest, TreeNode};
use crate::{Error, Exec, Result};

/// Conjunction of `attribute ∈ level subset` memberships.
///
/// Terms covering every level of their attribute are never stored, so two
/// conditions describing the same region compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    terms: BTreeMap<usize, LevelSet>,
}

impl Condition {
    pub fn always() -> Self {
        Condition::default()
    }

    /// Builds a condition against `ds`'s vocabularies. Repeated attributes
    /// intersect; full terms are dropped. Fails on an empty or out-of-range
    /// subset.
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, LevelSet)>, ds: &Dataset) -> Result<Self> {
        let mut map: BTreeMap<usize, LevelSet> = BTreeMap::new();
        for (a, set) in terms {
            if a >= ds.n_attributes() {
                return Err(Error::InvalidParam(format!("attribute {a} out of range")));
            }
            let k = ds.attribute(a).n_levels();
            if set.levels().iter().any(|&l| l as usize >= k) {
                return Err(Error::InvalidParam(format!("level out of range for attribute {a}")));
            }
            let merged = match map.remove(&a) {
                Some(prev) => prev.intersect(&set),
                None => set,
            };
            if merged.is_empty() {
                return Err(Error::InvalidParam(format!("empty level subset for attribute {a}")));
            }
            map.insert(a, merged);
        }
        map.retain(|&a, set| set.len() < ds.attribute(a).n_levels());
        Ok(Condition { terms: map })
    }

    pub fn terms(&self) -> &BTreeMap<usize, LevelSet> {
        &self.terms
    }

    pub fn covers(&self, row: &[u32]) -> bool {
        self.terms.iter().all(|(&a, set)| set.contains(row[a]))
    }

    /// Number of attributes used.
    pub fn att_nbr(&self) -> usize {
        self.terms.len()
    }

    /// Number of levels used, summed over terms.
    pub fn lev_nbr(&self) -> usize {
        self.terms.values().map(LevelSet::len).sum()
    }

    pub fn attributes(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }

    /// `X[,k] in {l1,l2} & …` with 1-based attribute positions; `TRUE` for
    /// the empty condition.
    pub fn render(&self, ds: &Dataset) -> String {
        if self.terms.is_empty() {
            return "TRUE".into();
        }
        self.terms
            .iter()
            .map(|(&a, set)| {
                let names: Vec<&str> = set
                    .levels()
                    .iter()
                    .map(|&l| ds.attribute(a).levels[l as usize].as_str())
                    .collect();
                format!("X[,{}] in {{{}}}", a + 1, names.join(","))
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }

    /// Inverse of [`Condition::render`]. Level names are matched against the
    /// attribute vocabulary, longest name first, so names holding commas
    /// (interval labels) parse correctly.
    pub fn parse(text: &str, ds: &Dataset) -> Result<Self> {
        let text = text.trim();
        if text == "TRUE" || text.is_empty() {
            return Ok(Condition::always());
        }
        let mut terms = Vec::new();
        for part in split_terms(text) {
            let bad = || Error::Parse(format!("malformed condition term {part:?}"));
            let rest = part.trim().strip_prefix("X[,").ok_or_else(bad)?;
            let close = rest.find(']').ok_or_else(bad)?;
            let k: usize = rest[..close].parse().map_err(|_| bad())?;
            if k == 0 || k > ds.n_attributes() {
                return Err(Error::Parse(format!("attribute position {k} out of range")));
            }
            let body = rest[close + 1..]
                .trim()
                .strip_prefix("in")
                .map(str::trim)
                .and_then(|s| s.strip_prefix('{'))
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(bad)?;
            let attr = ds.attribute(k - 1);
            let mut levels = Vec::new();
            let mut pos = 0;
            while pos < body.len() {
                let tail = &body[pos..];
                let hit = attr
                    .levels
                    .iter()
                    .enumerate()
                    .filter(|(_, name)| {
                        tail.starts_with(name.as_str())
                            && (tail.len() == name.len() || tail[name.len()..].starts_with(','))
                    })
                    .max_by_key(|(_, name)| name.len())
                    .ok_or_else(|| Error::Parse(format!("unknown level in {tail:?}")))?;
                levels.push(hit.0 as u32);
                pos += hit.1.len() + 1;
            }
            terms.push((k - 1, LevelSet::new(levels)));
        }
        Condition::from_terms(terms, ds)
    }
}

fn split_terms(text: &str) -> Vec<&str> {
    // " & " only separates terms outside braces
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => depth -= 1,
            b'&' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    parts.push(&text[start..]);
    parts
}

/// Where an extracted rule came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSource {
    pub tree: usize,
    pub leaf: usize,
}

/// `condition ⇒ ypred`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: usize,
    pub condition: Condition,
    pub ypred: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<RuleSource>,
}

impl Rule {
    pub fn new(id: usize, condition: Condition, ypred: u32) -> Self {
        Rule {
            id,
            condition,
            ypred,
            source: None,
        }
    }
}

/// One rule per (tree, leaf): the conjunction of the edge conditions on the
/// root-to-leaf path. Paths whose intersected subsets become empty are
/// impossible and produce no rule. Ids start at 1 in tree-then-leaf order.
pub fn extract_rules(f: &Forest) -> Vec<Rule> {
    let mut rules = Vec::new();
    for (t, tree) in f.trees.iter().enumerate() {
        // (node, path terms) with the left child explored first
        let mut stack: Vec<(usize, BTreeMap<usize, LevelSet>)> = vec![(tree.root(), BTreeMap::new())];
        while let Some((node, terms)) = stack.pop() {
            match &tree.nodes[node] {
                TreeNode::Leaf { class, .. } => {
                    let mut terms = terms;
                    terms.retain(|&a, set| set.len() < f.level_counts[a]);
                    rules.push(Rule {
                        id: rules.len() + 1,
                        condition: Condition { terms },
                        ypred: *class,
                        source: Some(RuleSource { tree: t, leaf: node }),
                    });
                }
                TreeNode::Split {
                    attribute,
                    left,
                    children,
                } => {
                    let k = f.level_counts[*attribute];
                    let right = left.complement(k);
                    for (child, set) in [(children[1], right), (children[0], left.clone())] {
                        let merged = match terms.get(attribute) {
                            Some(prev) => prev.intersect(&set),
                            None => set,
                        };
                        if merged.is_empty() {
                            continue;
                        }
                        let mut next = terms.clone();
                        next.insert(*attribute, merged);
                        stack.push((child, next));
                    }
                }
            }
        }
    }
    rules
}

/// Per-(attribute, level) instance bitsets; a condition's cover set is an
/// AND over terms of ORs over levels.
pub struct LevelIndex {
    n: usize,
    sets: Vec<Vec<FixedBitSet>>,
}

impl LevelIndex {
    pub fn new(ds: &Dataset) -> Self {
        let n = ds.n();
        let mut sets: Vec<Vec<FixedBitSet>> = ds
            .attributes()
            .iter()
            .map(|a| vec![FixedBitSet::with_capacity(n); a.n_levels()])
            .collect();
        for i in 0..n {
            for (a, &v) in ds.row(i).iter().enumerate() {
                sets[a][v as usize].insert(i);
            }
        }
        LevelIndex { n, sets }
    }

    pub fn cover(&self, cond: &Condition) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.n);
        out.insert_range(..);
        for (&a, set) in cond.terms() {
            let mut term = FixedBitSet::with_capacity(self.n);
            for &l in set.levels() {
                if let Some(s) = self.sets[a].get(l as usize) {
                    term.union_with(s);
                }
            }
            out.intersect_with(&term);
        }
        out
    }
}

/// Figures attached to a rule measured on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleMetrics {
    pub confidence: f64,
    pub coverage: f64,
    pub class_coverage: f64,
    pub att_nbr: usize,
    pub lev_nbr: usize,
    /// `att_nbr` over the number of dataset attributes.
    pub att_nbr_s: f64,
    /// `lev_nbr` over the total level count of all attributes.
    pub lev_nbr_s: f64,
    pub attributes: Vec<usize>,
}

pub fn evaluate_rule(rule: &Rule, ds: &Dataset) -> RuleMetrics {
    let cover = LevelIndex::new(ds).cover(&rule.condition);
    metrics_from_cover(rule, &cover, ds)
}

/// Metrics from a precomputed cover set.
pub fn metrics_from_cover(rule: &Rule, cover: &FixedBitSet, ds: &Dataset) -> RuleMetrics {
    let covered = cover.count_ones(..);
    let correct = cover.ones().filter(|&i| ds.label(i) == rule.ypred).count();
    let n_c = ds.class_counts().get(rule.ypred as usize).copied().unwrap_or(0);
    let class_coverage = if n_c == 0 {
        log::warn!(
            "rule {}: predicted class absent from data, class coverage set to 0",
            rule.id
        );
        0.0
    } else {
        covered as f64 / n_c as f64
    };
    let att_nbr = rule.condition.att_nbr();
    let lev_nbr = rule.condition.lev_nbr();
    RuleMetrics {
        confidence: if covered == 0 {
            0.0
        } else {
            correct as f64 / covered as f64
        },
        coverage: covered as f64 / ds.n() as f64,
        class_coverage,
        att_nbr,
        lev_nbr,
        att_nbr_s: att_nbr as f64 / ds.n_attributes().max(1) as f64,
        lev_nbr_s: lev_nbr as f64 / ds.total_levels().max(1) as f64,
        attributes: rule.condition.attributes(),
    }
}

/// Column-stored `n × m` correct / incorrect coverage bit matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageMatrices {
    n: usize,
    cov_ok: Vec<FixedBitSet>,
    cov_nok: Vec<FixedBitSet>,
}

impl CoverageMatrices {
    /// Splits each cover set by whether `ypred` matches the label.
    pub fn from_covers(covers: &[FixedBitSet], ypreds: &[u32], labels: &[u32]) -> Self {
        let n = labels.len();
        let mut cov_ok = Vec::with_capacity(covers.len());
        let mut cov_nok = Vec::with_capacity(covers.len());
        for (cover, &y) in covers.iter().zip(ypreds) {
            let mut ok = FixedBitSet::with_capacity(n);
            let mut nok = FixedBitSet::with_capacity(n);
            for i in cover.ones() {
                if labels[i] == y {
                    ok.insert(i);
                } else {
                    nok.insert(i);
                }
            }
            cov_ok.push(ok);
            cov_nok.push(nok);
        }
        CoverageMatrices { n, cov_ok, cov_nok }
    }

    pub fn from_columns(n: usize, cov_ok: Vec<FixedBitSet>, cov_nok: Vec<FixedBitSet>) -> Result<Self> {
        if cov_ok.len() != cov_nok.len() {
            return Err(Error::Dimension("cov_ok and cov_nok column counts differ".into()));
        }
        for (ok, nok) in cov_ok.iter().zip(&cov_nok) {
            if ok.len() != n || nok.len() != n {
                return Err(Error::Dimension(format!("column length differs from n = {n}")));
            }
            if !ok.is_disjoint(nok) {
                return Err(Error::InvalidParam("cov_ok and cov_nok overlap".into()));
            }
        }
        Ok(CoverageMatrices { n, cov_ok, cov_nok })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.cov_ok.len()
    }

    pub fn ok(&self, i: usize, j: usize) -> bool {
        self.cov_ok[j].contains(i)
    }

    pub fn nok(&self, i: usize, j: usize) -> bool {
        self.cov_nok[j].contains(i)
    }

    pub fn ok_column(&self, j: usize) -> &FixedBitSet {
        &self.cov_ok[j]
    }

    pub fn nok_column(&self, j: usize) -> &FixedBitSet {
        &self.cov_nok[j]
    }

    /// Cover set of rule `j` (correct or not).
    pub fn cover(&self, j: usize) -> FixedBitSet {
        let mut c = self.cov_ok[j].clone();
        c.union_with(&self.cov_nok[j]);
        c
    }

    /// Keeps the given columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> CoverageMatrices {
        CoverageMatrices {
            n: self.n,
            cov_ok: cols.iter().map(|&j| self.cov_ok[j].clone()).collect(),
            cov_nok: cols.iter().map(|&j| self.cov_nok[j].clone()).collect(),
        }
    }

    const MAGIC: &'static [u8; 4] = b"COVM";

    /// Binary sidecar: `COVM`, u32 version 1, u64 n, u64 m, then the `m`
    /// cov_ok columns followed by the `m` cov_nok columns, each packed into
    /// `ceil(n/64)` little-endian u64 words (bit `i % 64` of word `i / 64`).
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(Self::MAGIC)?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        out.write_all(&(self.m() as u64).to_le_bytes())?;
        let words = self.n.div_ceil(64);
        for col in self.cov_ok.iter().chain(&self.cov_nok) {
            let mut packed = vec![0u64; words];
            for i in col.ones() {
                packed[i / 64] |= 1 << (i % 64);
            }
            for w in packed {
                out.write_all(&w.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e| Error::io("<coverage sidecar>", e);
        let mut head = [0u8; 24];
        input.read_exact(&mut head).map_err(io)?;
        if &head[..4] != Self::MAGIC || u32::from_le_bytes(head[4..8].try_into().unwrap()) != 1 {
            return Err(Error::Parse("not a version-1 coverage sidecar".into()));
        }
        let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
        let m = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
        let words = n.div_ceil(64);
        let mut cols = Vec::with_capacity(2 * m);
        let mut buf = [0u8; 8];
        for _ in 0..2 * m {
            let mut col = FixedBitSet::with_capacity(n);
            for w in 0..words {
                input.read_exact(&mut buf).map_err(io)?;
                let word = u64::from_le_bytes(buf);
                for b in 0..64 {
                    if word >> b & 1 == 1 {
                        let i = w * 64 + b;
                        if i >= n {
                            return Err(Error::Parse("bit set beyond n".into()));
                        }
                        col.insert(i);
                    }
                }
            }
            cols.push(col);
        }
        let nok = cols.split_off(m);
        Self::from_columns(n, cols, nok)
    }
}

pub fn build_coverage(rules: &[Rule], ds: &Dataset) -> CoverageMatrices {
    build_coverage_with(rules, ds, Exec::default())
}

pub fn build_coverage_with(rules: &[Rule], ds: &Dataset, exec: Exec) -> CoverageMatrices {
    let index = LevelIndex::new(ds);
    let covers = exec.map(rules, |r| index.cover(&r.condition));
    let ypreds: Vec<u32> = rules.iter().map(|r| r.ypred).collect();
    CoverageMatrices::from_covers(&covers, &ypreds, ds.labels())
}

/// `|A ∩ B| / |A ∪ B|`, and 1 when both sets are empty.
pub fn jaccard_similarity(a: &FixedBitSet, b: &FixedBitSet) -> f64 {
    let inter = a.intersection_count(b);
    let union = a.union_count(b);
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// A rule with its metrics, as listed in the rule metrics table.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleRecord {
    pub rule: Rule,
    pub metrics: RuleMetrics,
}

pub const METRICS_HEADER: [&str; 10] = [
    "id",
    "Conf.",
    "Cov.",
    "Att. nbr",
    "Lev. nbr",
    "Att. nbr_S",
    "Lev. nbr_S",
    "Att.",
    "Ypred",
    "Condition",
];

/// `V1,V2`-style attribute list (1-based).
pub fn render_attributes(attrs: &[usize]) -> String {
    attrs
        .iter()
        .map(|a| format!("V{}", a + 1))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_metrics_csv<W: Write>(records: &[RuleRecord], ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        let m = &r.metrics;
        w.write_record([
            r.rule.id.to_string(),
            m.confidence.to_string(),
            m.coverage.to_string(),
            m.att_nbr.to_string(),
            m.lev_nbr.to_string(),
            m.att_nbr_s.to_string(),
            m.lev_nbr_s.to_string(),
            render_attributes(&m.attributes),
            ds.class_levels()[r.rule.ypred as usize].clone(),
            r.rule.condition.render(ds),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Reads a metrics table back. Conditions and classes are resolved
/// against `ds`; class coverage is recomputed on `ds`.
pub fn read_metrics_csv<R: Read>(input: R, ds: &Dataset) -> Result<Vec<RuleRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Parse(format!("unexpected rule table header {header:?}")));
    }
    let index = LevelIndex::new(ds);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {:?} in column {}", &rec[k], METRICS_HEADER[k])))
        };
        let id: usize = rec[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad rule id {:?}", &rec[0])))?;
        let ypred = ds
            .class_levels()
            .iter()
            .position(|c| c == &rec[8])
            .ok_or_else(|| Error::Parse(format!("unknown class {:?}", &rec[8])))? as u32;
        let condition = Condition::parse(&rec[9], ds)?;
        let rule = Rule::new(id, condition, ypred);
        let fresh = metrics_from_cover(&rule, &index.cover(&rule.condition), ds);
        let metrics = RuleMetrics {
            confidence: num(1)?,
            coverage: num(2)?,
            att_nbr: num(3)? as usize,
            lev_nbr: num(4)? as usize,
            att_nbr_s: num(5)?,
            lev_nbr_s: num(6)?,
            ..fresh
        };
        out.push(RuleRecord { rule, metrics });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::data::{generate_xor, Attribute};
    use crate::forest::{Tree, FORMAT, FORMAT_VERSION};

    pub fn xor_truth_rules(ds: &Dataset) -> Vec<Rule> {
        let set = |v: &[u32]| LevelSet::new(v.to_vec());
        [
            (vec![0, 2], vec![0, 2], 1),
            (vec![0, 2], vec![1, 3], 0),
            (vec![1, 3], vec![0, 2], 0),
            (vec![1, 3], vec![1, 3], 1),
        ]
        .into_iter()
        .enumerate()
        .map(|(k, (a, b, y))| {
            let c = Condition::from_terms([(0, set(&a)), (1, set(&b))], ds).unwrap();
            Rule::new(k + 1, c, y)
        })
        .collect()
    }

    fn forest_of(nodes: Vec<TreeNode>, level_counts: Vec<usize>) -> Forest {
        Forest {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            seed: 0,
            n_trees: 1,
            level_counts,
            n_classes: 2,
            trees: vec![Tree { nodes }],
            schema: None,
            inbag: None,
        }
    }

    #[test]
    fn root_leaf_gives_empty_condition() {
        let f = forest_of(
            vec![TreeNode::Leaf {
                class: 1,
                counts: vec![0, 3],
            }],
            vec![4],
        );
        let rules = extract_rules(&f);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].condition, Condition::always());
        assert_eq!(rules[0].ypred, 1);
    }

    #[test]
    fn path_conjunction_and_intersection() {
        let ds = generate_xor(1, 64).unwrap();
        let f = forest_of(
            vec![
                TreeNode::Split {
                    attribute: 0,
                    left: LevelSet::new(vec![0, 2]),
                    children: [1, 2],
                },
                TreeNode::Split {
                    attribute: 1,
                    left: LevelSet::new(vec![0, 2]),
                    children: [3, 4],
                },
                TreeNode::Split {
                    attribute: 0,
                    left: LevelSet::new(vec![0, 1]),
                    children: [5, 6],
                },
                TreeNode::Leaf {
                    class: 1,
                    counts: vec![0, 1],
                },
                TreeNode::Leaf {
                    class: 0,
                    counts: vec![1, 0],
                },
                TreeNode::Leaf {
                    class: 0,
                    counts: vec![1, 0],
                },
                // right of {0,1} within {1,3} is {3}
                TreeNode::Leaf {
                    class: 1,
                    counts: vec![0, 1],
                },
            ],
            vec![4, 4, 2],
        );
        let rules = extract_rules(&f);
        assert_eq!(rules.len(), 4);
        assert_eq!(rules[0].condition.render(&ds), "X[,1] in {A1,A3} & X[,2] in {B1,B3}");
        assert_eq!(rules[2].condition.render(&ds), "X[,1] in {A2}");
        assert_eq!(rules[3].condition.render(&ds), "X[,1] in {A4}");
        assert_eq!(rules.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn impossible_paths_are_dropped() {
        let f = forest_of(
            vec![
                TreeNode::Split {
                    attribute: 0,
                    left: LevelSet::new(vec![0]),
                    children: [1, 2],
                },
                // {0} ∩ {1} is empty
                TreeNode::Split {
                    attribute: 0,
                    left: LevelSet::new(vec![1]),
                    children: [3, 4],
                },
                TreeNode::Leaf {
                    class: 0,
                    counts: vec![1, 0],
                },
                TreeNode::Leaf {
                    class: 1,
                    counts: vec![0, 1],
                },
                TreeNode::Leaf {
                    class: 0,
                    counts: vec![1, 0],
                },
            ],
            vec![3],
        );
        let rules = extract_rules(&f);
        assert_eq!(rules.len(), 2);
        assert!(rules
            .iter()
            .all(|r| r.condition.lev_nbr() == 1 || r.condition.att_nbr() == 1));
    }

    #[test]
    fn xor_truth_rule_metrics() {
        let ds = generate_xor(5, 840).unwrap();
        let rules = xor_truth_rules(&ds);
        let m = evaluate_rule(&rules[0], &ds);
        assert_eq!(m.confidence, 1.0);
        assert!((m.coverage - 0.25).abs() < 0.01);
        assert!((m.class_coverage - 0.5).abs() < 0.01);
        assert_eq!((m.att_nbr, m.lev_nbr), (2, 4));
        assert!((m.att_nbr_s - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.lev_nbr_s - 0.4).abs() < 1e-12);

        let empty = evaluate_rule(&Rule::new(9, Condition::always(), 1), &ds);
        assert_eq!(empty.coverage, 1.0);
        let prior = ds.class_counts()[1] as f64 / ds.n() as f64;
        assert!((empty.confidence - prior).abs() < 1e-12);
    }

    #[test]
    fn scaled_attribute_count_on_seven_attributes() {
        let attrs: Vec<Attribute> = (0..7)
            .map(|a| Attribute::new(format!("a{a}"), vec!["1".into(), "2".into(), "3".into()]))
            .collect();
        let ds = Dataset::new(
            attrs,
            "y",
            vec!["0".into(), "1".into()],
            vec![vec![0; 7], vec![1; 7]],
            vec![0, 1],
        )
        .unwrap();
        let c = Condition::from_terms([(5, LevelSet::new(vec![0, 1])), (6, LevelSet::new(vec![0]))], &ds).unwrap();
        let m = evaluate_rule(&Rule::new(1, c, 0), &ds);
        assert!((m.att_nbr_s - 0.286).abs() < 5e-4);
    }

    #[test]
    fn coverage_matrix_columns() {
        let ds = Dataset::from_records(
            vec!["x".into()],
            "y",
            &[vec!["a".into()], vec!["b".into()], vec!["a".into()]],
            &["p".into(), "q".into(), "p".into()],
        )
        .unwrap();
        let covering = Rule::new(1, Condition::from_terms([(0, LevelSet::new(vec![0]))], &ds).unwrap(), 0);
        let never = Rule::new(2, Condition::from_terms([(0, LevelSet::new(vec![1]))], &ds).unwrap(), 0);
        let cov = build_coverage(&[covering, never], &ds);
        let col: Vec<bool> = (0..3).map(|i| cov.ok(i, 0)).collect();
        assert_eq!(col, vec![true, false, true]);
        assert!((0..3).all(|i| !cov.nok(i, 0)));
        // rule 2 covers row 1 with the wrong class
        assert!(cov.nok(1, 1) && !cov.ok(1, 1));
    }

    #[test]
    fn xor_truth_rules_partition_instances() {
        let ds = generate_xor(2, 840).unwrap();
        let cov = build_coverage(&xor_truth_rules(&ds), &ds);
        for i in 0..ds.n() {
            let ok = (0..4).filter(|&j| cov.ok(i, j)).count();
            let nok = (0..4).filter(|&j| cov.nok(i, j)).count();
            assert_eq!((ok, nok), (1, 0), "instance {i}");
        }
    }

    #[test]
    fn jaccard_cases() {
        let set = |v: &[usize]| {
            let mut b = FixedBitSet::with_capacity(6);
            for &i in v {
                b.insert(i);
            }
            b
        };
        assert_eq!(jaccard_similarity(&set(&[1, 2]), &set(&[1, 2])), 1.0);
        assert_eq!(jaccard_similarity(&set(&[1]), &set(&[2])), 0.0);
        assert_eq!(jaccard_similarity(&set(&[1, 2, 3]), &set(&[2, 3, 4])), 0.5);
        assert_eq!(jaccard_similarity(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn condition_parse_inverts_render() {
        let ds = generate_xor(1, 64).unwrap();
        for r in xor_truth_rules(&ds) {
            let text = r.condition.render(&ds);
            assert_eq!(Condition::parse(&text, &ds).unwrap(), r.condition);
        }
        assert_eq!(Condition::parse("TRUE", &ds).unwrap(), Condition::always());
        assert!(Condition::parse("X[,9] in {A1}", &ds).is_err());
        assert!(Condition::parse("X[,1] in {A9}", &ds).is_err());

        let table = crate::data::NumericTable {
            names: vec!["x".into()],
            columns: vec![vec![1.0, 2.0, 3.0, 4.0]],
            class_name: "y".into(),
            labels: vec!["a".into(), "b".into(), "a".into(), "b".into()],
        };
        let binned = crate::data::quantile_discretize(&table, 2).unwrap();
        let c = Condition::parse("X[,1] in {(-inf,2.5]}", &binned).unwrap();
        assert_eq!(c.terms()[&0].levels(), &[0]);
    }

    #[test]
    fn metrics_csv_round_trip() {
        let ds = generate_xor(4, 160).unwrap();
        let index = LevelIndex::new(&ds);
        let records: Vec<RuleRecord> = xor_truth_rules(&ds)
            .into_iter()
            .map(|rule| {
                let metrics = metrics_from_cover(&rule, &index.cover(&rule.condition), &ds);
                RuleRecord { rule, metrics }
            })
            .collect();
        let mut buf = Vec::new();
        write_metrics_csv(&records, &ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,Conf.,Cov.,Att. nbr,Lev. nbr,Att. nbr_S,Lev. nbr_S,Att.,Ypred,Condition"));
        assert!(text.contains("\"V1,V2\""));
        let back = read_metrics_csv(&buf[..], &ds).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn sidecar_round_trip() {
        let ds = generate_xor(4, 100).unwrap();
        let cov = build_coverage(&xor_truth_rules(&ds), &ds);
        let mut buf = Vec::new();
        cov.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 * 2 * 4 * 2);
        assert_eq!(CoverageMatrices::read_binary(&buf[..]).unwrap(), cov);
        assert!(CoverageMatrices::read_binary(&buf[..10]).is_err());
    }
}
