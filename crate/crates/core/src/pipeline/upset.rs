use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::rules::{LevelIndex, Rule};
use crate::{Error, Result};

/// Instances covered by exactly this set of rules; an empty set is the
/// else bucket.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsetCombination {
    pub rules: Vec<usize>,
    pub count: usize,
    /// Indexed by class.
    pub class_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsetRule {
    pub id: usize,
    pub cover: usize,
    pub ypred: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsetExport {
    pub n: usize,
    pub classes: Vec<String>,
    /// Largest first; equal counts by rule set.
    pub combinations: Vec<UpsetCombination>,
    pub rules: Vec<UpsetRule>,
}

pub fn export_upset(rules: &[Rule], ds: &Dataset) -> Result<UpsetExport> {
    if rules.is_empty() {
        return Err(Error::InvalidParam("upset export needs at least one rule".into()));
    }
    let index = LevelIndex::new(ds);
    let covers: Vec<_> = rules.iter().map(|r| index.cover(&r.condition)).collect();
    let k = ds.n_classes();
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    groups.insert(Vec::new(), vec![0; k]);
    for i in 0..ds.n() {
        let mut key: Vec<usize> = rules
            .iter()
            .zip(&covers)
            .filter(|(_, c)| c.contains(i))
            .map(|(r, _)| r.id)
            .collect();
        key.sort_unstable();
        groups.entry(key).or_insert_with(|| vec![0; k])[ds.label(i) as usize] += 1;
    }
    let mut combinations: Vec<UpsetCombination> = groups
        .into_iter()
        .map(|(rules, class_counts)| UpsetCombination {
            count: class_counts.iter().sum(),
            rules,
            class_counts,
        })
        .collect();
    combinations.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.rules.cmp(&b.rules)));
    Ok(UpsetExport {
        n: ds.n(),
        classes: ds.class_levels().to_vec(),
        combinations,
        rules: rules
            .iter()
            .zip(&covers)
            .map(|(r, c)| UpsetRule {
                id: r.id,
                cover: c.count_ones(..),
                ypred: ds.class_levels()[r.ypred as usize].clone(),
            })
            .collect(),
    })
}

impl UpsetExport {
    /// Combination table: `Combination` (`R1&R4`, `else`), `Count`, then one
    /// column per class.
    pub fn write_combinations_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["Combination".to_string(), "Count".to_string()];
        header.extend(self.classes.iter().cloned());
        w.write_record(&header)?;
        for c in &self.combinations {
            let name = if c.rules.is_empty() {
                "else".to_string()
            } else {
                c.rules.iter().map(|id| format!("R{id}")).collect::<Vec<_>>().join("&")
            };
            let mut rec = vec![name, c.count.to_string()];
            rec.extend(c.class_counts.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_xor;
    use crate::rules::tests::xor_truth_rules;

    #[test]
    fn xor_truth_gives_four_singletons_and_empty_else() {
        let ds = generate_xor(3, 160).unwrap();
        let up = export_upset(&xor_truth_rules(&ds), &ds).unwrap();
        assert_eq!(up.combinations.len(), 5);
        let singles = up.combinations.iter().filter(|c| c.rules.len() == 1).count();
        assert_eq!(singles, 4);
        let els = up.combinations.iter().find(|c| c.rules.is_empty()).unwrap();
        assert_eq!(els.count, 0);
        assert_eq!(up.combinations.iter().map(|c| c.count).sum::<usize>(), 160);
        assert!(up.rules.iter().all(|r| r.cover == 40));
    }

    #[test]
    fn identical_covers_share_one_bucket() {
        let ds = generate_xor(3, 160).unwrap();
        let mut rules = xor_truth_rules(&ds);
        let mut twin = rules[0].clone();
        twin.id = 9;
        rules.truncate(1);
        rules.push(twin);
        let up = export_upset(&rules, &ds).unwrap();
        assert_eq!(up.combinations.len(), 2);
        assert_eq!((up.combinations[0].rules.len(), up.combinations[0].count), (0, 120));
        assert_eq!(up.combinations[1].rules, vec![1, 9]);
        assert_eq!(up.combinations[1].count, 40);
        let mut buf = Vec::new();
        up.write_combinations_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Combination,Count,0,1\nelse,120,"));
        assert!(text.ends_with("R1&R9,40,0,40\n"));
        assert!(export_upset(&[], &ds).is_err());
    }
}
