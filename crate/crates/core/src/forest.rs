//! Random forest over categorical attributes with binary level-subset splits.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{argmax_lowest, Dataset, LevelSet, Schema};
use crate::{seed, Error, Exec, Result};

/// Attributes with at most this many levels present in a node get an
/// exhaustive subset search.
pub const EXHAUSTIVE_LEVELS: usize = 10;

const GAIN_EPS: f64 = 1e-12;

pub const FORMAT: &str = "ruleforest-forest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Attributes sampled per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            mtry: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, n_attributes: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((n_attributes as f64).sqrt().floor() as usize).max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    /// Instances whose level is in `left` go to `children[0]`, all others
    /// (including levels unseen at training time) to `children[1]`.
    Split {
        attribute: usize,
        left: LevelSet,
        children: [usize; 2],
    },
    Leaf {
        class: u32,
        counts: Vec<usize>,
    },
}

/// Node arena; the root is node 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn root(&self) -> usize {
        0
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_of(&self, row: &[u32]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    attribute,
                    left,
                    children,
                } => {
                    i = if left.contains(row[*attribute]) {
                        children[0]
                    } else {
                        children[1]
                    }
                }
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, row: &[u32]) -> u32 {
        match &self.nodes[self.leaf_of(row)] {
            TreeNode::Leaf { class, .. } => *class,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub n_trees: usize,
    /// Vocabulary size per attribute of the training schema.
    pub level_counts: Vec<usize>,
    pub n_classes: usize,
    pub trees: Vec<Tree>,
    /// Vocabularies the level indices in the trees refer to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<Schema>,
    /// Sorted distinct in-bag instance indices per tree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inbag: Option<Vec<Vec<u32>>>,
}

impl Forest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Forest = serde_json::from_str(text)?;
        if f.format != FORMAT || f.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported forest document {} v{}",
                f.format, f.version
            )));
        }
        if f.trees.is_empty() {
            return Err(Error::Parse("forest has no trees".into()));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check_schema(&self, ds: &Dataset) -> Result<()> {
        let counts: Vec<usize> = ds.attributes().iter().map(|a| a.n_levels()).collect();
        if counts.len() != self.level_counts.len() || ds.n_classes() != self.n_classes {
            return Err(Error::Dimension(format!(
                "forest expects {} attributes and {} classes, dataset has {} and {}",
                self.level_counts.len(),
                self.n_classes,
                counts.len(),
                ds.n_classes()
            )));
        }
        if let Some(schema) = &self.schema {
            if ds.attributes() != schema.attributes.as_slice() || ds.class_levels() != schema.class_levels.as_slice() {
                return Err(Error::Dimension(
                    "dataset vocabularies differ from the forest's; conform the data to the forest schema".into(),
                ));
            }
        }
        Ok(())
    }

    fn votes(&self, row: &[u32], trees: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        for t in trees {
            votes[self.trees[t].predict(row) as usize] += 1;
        }
        votes
    }
}

/// Grows `params.n_trees` trees, each on its own bootstrap sample.
pub fn train_forest(train: &Dataset, params: &ForestParams) -> Result<Forest> {
    train_forest_with(train, params, Exec::default())
}

pub fn train_forest_with(train: &Dataset, params: &ForestParams, exec: Exec) -> Result<Forest> {
    let p = train.n_attributes();
    if params.n_trees == 0 {
        return Err(Error::InvalidParam("n_trees must be >= 1".into()));
    }
    if p == 0 {
        return Err(Error::InvalidDataset("no attributes to split on".into()));
    }
    let mtry = params.resolved_mtry(p);
    if mtry == 0 || mtry > p {
        return Err(Error::InvalidParam(format!("mtry must lie in 1..={p}, got {mtry}")));
    }
    if params.min_leaf == 0 {
        return Err(Error::InvalidParam("min_leaf must be >= 1".into()));
    }
    if train.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        log::warn!("training data holds a single class; every tree is a single leaf");
    }
    let grown = exec.map_range(params.n_trees, |t| {
        let mut rng = seed::derived_rng(params.seed, "tree", t as u64);
        let n = train.n();
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let mut inbag: Vec<u32> = sample.iter().map(|&i| i as u32).collect();
        inbag.sort_unstable();
        inbag.dedup();
        let tree = Grower {
            ds: train,
            mtry,
            min_leaf: params.min_leaf,
        }
        .grow(sample, &mut rng);
        (tree, inbag)
    });
    let (trees, inbag) = grown.into_iter().unzip();
    Ok(Forest {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        seed: params.seed,
        n_trees: params.n_trees,
        level_counts: train.attributes().iter().map(|a| a.n_levels()).collect(),
        n_classes: train.n_classes(),
        trees,
        schema: Some(train.schema()),
        inbag: Some(inbag),
    })
}

/// Plurality vote over all trees; ties go to the lowest class index.
pub fn predict_forest(f: &Forest, ds: &Dataset) -> Result<Vec<u32>> {
    f.check_schema(ds)?;
    Ok((0..ds.n())
        .map(|i| argmax_lowest(&f.votes(ds.row(i), 0..f.trees.len())) as u32)
        .collect())
}

/// Misclassification rate of [`predict_forest`] on `train`.
pub fn forest_error(f: &Forest, train: &Dataset) -> Result<f64> {
    let pred = predict_forest(f, train)?;
    let wrong = pred.iter().zip(train.labels()).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / train.n() as f64)
}

/// Out-of-bag error on the training data. Instances that were in bag for
/// every tree are skipped; `None` when no in-bag record exists or no
/// instance has an out-of-bag vote.
pub fn oob_error(f: &Forest, train: &Dataset) -> Result<Option<f64>> {
    f.check_schema(train)?;
    let Some(inbag) = &f.inbag else {
        return Ok(None);
    };
    let (mut wrong, mut seen) = (0usize, 0usize);
    for i in 0..train.n() {
        let oob_trees = (0..f.trees.len()).filter(|&t| inbag[t].binary_search(&(i as u32)).is_err());
        let votes = f.votes(train.row(i), oob_trees);
        if votes.iter().sum::<usize>() == 0 {
            continue;
        }
        seen += 1;
        if argmax_lowest(&votes) as u32 != train.label(i) {
            wrong += 1;
        }
    }
    Ok((seen > 0).then(|| wrong as f64 / seen as f64))
}

/// A candidate split of one attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitCandidate {
    pub attribute: usize,
    pub left: LevelSet,
    pub gain: f64,
}

/// Gini impurity decrease, normalized by node size.
pub fn gini_gain(left: &[usize], right: &[usize]) -> f64 {
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = nl + nr;
    if nl == 0 || nr == 0 {
        return 0.0;
    }
    let sq = |c: &[usize], tot: usize| c.iter().map(|&x| (x * x) as f64).sum::<f64>() / tot as f64;
    let total: Vec<usize> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    (sq(left, nl) + sq(right, nr) - sq(&total, n)) / n as f64
}

/// Per-level class counts of `attribute` over `idx`.
fn level_class_counts(ds: &Dataset, idx: &[usize], attribute: usize) -> Vec<Vec<usize>> {
    let k = ds.n_classes();
    let mut counts = vec![vec![0usize; k]; ds.attribute(attribute).n_levels()];
    for &i in idx {
        counts[ds.value(i, attribute) as usize][ds.label(i) as usize] += 1;
    }
    counts
}

/// Best split of one attribute, or `None` when fewer than two levels are
/// present or no split respects `min_leaf`.
///
/// The left side always holds the smallest present level; levels absent
/// from the node go right. Equal gains keep the lexicographically smaller
/// left subset.
pub fn best_split_for_attribute(
    ds: &Dataset,
    idx: &[usize],
    attribute: usize,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let counts = level_class_counts(ds, idx, attribute);
    let present: Vec<usize> = (0..counts.len())
        .filter(|&l| counts[l].iter().any(|&c| c > 0))
        .collect();
    if present.len() < 2 {
        return None;
    }
    let k = ds.n_classes();
    let total: Vec<usize> = (0..k).map(|c| counts.iter().map(|l| l[c]).sum()).collect();
    let evaluate = |members: &[usize]| {
        let mut left = vec![0usize; k];
        for &l in members {
            for c in 0..k {
                left[c] += counts[l][c];
            }
        }
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let (nl, nr) = (left.iter().sum::<usize>(), right.iter().sum::<usize>());
        (nl >= min_leaf && nr >= min_leaf).then(|| gini_gain(&left, &right))
    };
    let mut best: Option<SplitCandidate> = None;
    let mut consider = |members: Vec<usize>, gain: f64| {
        let left = LevelSet::new(members.iter().map(|&l| l as u32).collect());
        let better = match &best {
            None => true,
            Some(b) => gain > b.gain + GAIN_EPS || ((gain - b.gain).abs() <= GAIN_EPS && left < b.left),
        };
        if better {
            best = Some(SplitCandidate { attribute, left, gain });
        }
    };
    if present.len() <= EXHAUSTIVE_LEVELS {
        let m = present.len();
        for mask in 1u32..(1 << m) - 1 {
            if mask & 1 == 0 {
                continue;
            }
            let members: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| present[b]).collect();
            if let Some(g) = evaluate(&members) {
                consider(members, g);
            }
        }
    } else {
        // order levels by the share of the node's majority class
        let major = argmax_lowest(&total);
        let mut order = present.clone();
        let share = |l: usize| counts[l][major] as f64 / counts[l].iter().sum::<usize>() as f64;
        order.sort_by(|&a, &b| share(a).partial_cmp(&share(b)).unwrap().then(a.cmp(&b)));
        for t in 1..order.len() {
            let mut members: Vec<usize> = order[..t].to_vec();
            if !members.contains(&present[0]) {
                members = order[t..].to_vec();
            }
            if let Some(g) = evaluate(&members) {
                consider(members, g);
            }
        }
    }
    best
}

struct Grower<'a> {
    ds: &'a Dataset,
    mtry: usize,
    min_leaf: usize,
}

impl Grower<'_> {
    fn leaf(&self, idx: &[usize]) -> TreeNode {
        let mut counts = vec![0usize; self.ds.n_classes()];
        for &i in idx {
            counts[self.ds.label(i) as usize] += 1;
        }
        TreeNode::Leaf {
            class: argmax_lowest(&counts) as u32,
            counts,
        }
    }

    fn choose_split<R: Rng>(&self, idx: &[usize], rng: &mut R) -> Option<SplitCandidate> {
        let first = self.ds.label(idx[0]);
        if idx.iter().all(|&i| self.ds.label(i) == first) || idx.len() < 2 * self.min_leaf {
            return None;
        }
        let mut attrs = sample(rng, self.ds.n_attributes(), self.mtry).into_vec();
        attrs.sort_unstable();
        let mut best: Option<SplitCandidate> = None;
        for a in attrs {
            if let Some(c) = best_split_for_attribute(self.ds, idx, a, self.min_leaf) {
                if best.as_ref().is_none_or(|b| c.gain > b.gain + GAIN_EPS) {
                    best = Some(c);
                }
            }
        }
        best.filter(|b| b.gain > GAIN_EPS)
    }

    fn grow<R: Rng>(&self, sample: Vec<usize>, rng: &mut R) -> Tree {
        let mut nodes: Vec<TreeNode> = vec![self.leaf(&sample)];
        let mut stack = vec![(0usize, sample)];
        while let Some((node, idx)) = stack.pop() {
            let Some(split) = self.choose_split(&idx, rng) else {
                nodes[node] = self.leaf(&idx);
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| split.left.contains(self.ds.value(i, split.attribute)));
            let l = nodes.len();
            nodes.push(self.leaf(&left));
            nodes.push(self.leaf(&right));
            nodes[node] = TreeNode::Split {
                attribute: split.attribute,
                left: split.left,
                children: [l, l + 1],
            };
            // right first so the left subtree is expanded (and numbered) first
            stack.push((l + 1, right));
            stack.push((l, left));
        }
        Tree { nodes }
    }
}
