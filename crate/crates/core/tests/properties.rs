mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use common::{brute_feasible, brute_objective, random_dataset, random_problem, votes};
use ruleforest::data::{load_csv_from, Target};
use ruleforest::enrich::{build_transactions, mine_metarules, EnrichParams};
use ruleforest::ensemble::{build_ordered_list, RuleClassifier};
use ruleforest::forest::{train_forest, ForestParams};
use ruleforest::pipeline::{export_upset, rule_records};
use ruleforest::preselect::{preselect, PreselectParams};
use ruleforest::rules::{
    build_coverage, extract_rules, jaccard_similarity, read_metrics_csv, write_metrics_csv, CoverageMatrices,
    LevelIndex, RuleRecord,
};
use ruleforest::select::{
    check_feasible, derive_indicators, objective, solve_exact, solve_heuristic, SelectParams, Status,
};
use ruleforest::Exec;

fn params_strategy() -> impl Strategy<Value = SelectParams> {
    (1u32..=4, 0.0..=1.0f64, 0.0..=0.1f64, 0.0..=0.3f64).prop_map(|(maxcover, maxoverlap, alpha, beta)| SelectParams {
        maxcover,
        maxoverlap,
        alpha,
        beta,
        ..SelectParams::default()
    })
}

/// Rules from a small forest on a random dataset, with training metrics.
fn forest_rules(seed: u64, n: usize, p: usize) -> (ruleforest::data::Dataset, Vec<RuleRecord>) {
    let ds = random_dataset(seed, n, p);
    let f = train_forest(
        &ds,
        &ForestParams {
            n_trees: 6,
            seed,
            ..ForestParams::default()
        },
    )
    .unwrap();
    let records = rule_records(extract_rules(&f), &ds, Exec::Sequential);
    (ds, records)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    /// The linking constraints, read as a 0-1 system per instance, admit
    /// exactly the indicators `derive_indicators` returns whenever no
    /// instance exceeds maxcover, and nothing otherwise.
    #[test]
    fn linking_constraints_force_the_indicators(seed in any::<u64>(), mask in any::<u32>(), params in params_strategy()) {
        let raw = random_problem(seed, 12, 60, &params);
        let p = &raw.problem;
        let sel: Vec<bool> = (0..p.m).map(|j| mask >> j & 1 == 1).collect();
        let ind = derive_indicators(&sel, p);
        let (pv, cv) = votes(&raw, &sel);
        prop_assert_eq!(&ind.p, &pv);
        prop_assert_eq!(&ind.c, &cv);
        let mc = params.maxcover as i64;
        for i in 0..p.n {
            let (pi, ci) = (pv[i], cv[i]);
            let mut sols = Vec::new();
            for bits in 0..8u8 {
                let (e, c, o) = ((bits & 1) as i64, (bits >> 1 & 1) as i64, (bits >> 2 & 1) as i64);
                let holds = pi <= mc * (1 - e)
                    && pi >= 1 - e * (1 + mc)
                    && ci <= mc * c
                    && ci >= c
                    && ci <= 1 - o * (1 - mc)
                    && ci >= 2 * o;
                if holds {
                    sols.push((e == 1, c == 1, o == 1));
                }
            }
            if ci <= mc {
                prop_assert_eq!(sols.len(), 1, "instance {} with P={} C={}", i, pi, ci);
                prop_assert_eq!(sols[0], (ind.is_error[i], ind.is_covered[i], ind.is_overlap[i]));
                prop_assert_eq!(ind.is_error[i], pi <= 0);
                prop_assert_eq!(ind.is_covered[i], ci >= 1);
                prop_assert_eq!(ind.is_overlap[i], ci >= 2);
            } else {
                prop_assert!(sols.is_empty());
            }
        }
        prop_assert_eq!(check_feasible(&sel, p).is_empty(), brute_feasible(&raw, &sel, &params));
        prop_assert!((objective(&sel, p) - brute_objective(&raw, &sel, &params)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solutions_reported_feasible_pass_the_bounds(seed in any::<u64>(), params in params_strategy()) {
        let raw = random_problem(seed, 10, 50, &params);
        let p = &raw.problem;
        let e = solve_exact(p, u64::MAX, None).unwrap();
        let h = solve_heuristic(p, seed, 3).unwrap();
        for s in [&e, &h] {
            if matches!(s.status, Status::Optimal | Status::Feasible) {
                prop_assert!(s.violations.is_empty());
                prop_assert!(brute_feasible(&raw, &s.is_selected, &params));
                prop_assert!((s.objective - brute_objective(&raw, &s.is_selected, &params)).abs() < 1e-9);
            }
        }
        if e.status == Status::Optimal && h.status == Status::Feasible {
            prop_assert!(e.objective <= h.objective + 1e-9);
        }
        if e.status == Status::Infeasible {
            prop_assert_ne!(h.status, Status::Feasible);
        }
    }

    /// Looser alpha or beta never worsens the exact optimum.
    #[test]
    fn exact_optimum_is_monotone_in_alpha_and_beta(seed in any::<u64>(), da in 0.0..0.2f64, db in 0.0..0.2f64) {
        let base = SelectParams::default();
        let raw = random_problem(seed, 10, 40, &base);
        let tight = solve_exact(&raw.problem, u64::MAX, None).unwrap();
        let loose_params = SelectParams {
            alpha: (base.alpha + da).min(1.0),
            beta: (base.beta + db).min(1.0),
            ..base.clone()
        };
        let loose_raw = random_problem(seed, 10, 40, &loose_params);
        let loose = solve_exact(&loose_raw.problem, u64::MAX, None).unwrap();
        if tight.status == Status::Optimal {
            prop_assert_eq!(loose.status, Status::Optimal);
            prop_assert!(loose.objective <= tight.objective + 1e-9);
        }
    }

    #[test]
    fn dataset_csv_round_trip(seed in any::<u64>(), n in 2usize..60, p in 1usize..6) {
        let ds = random_dataset(seed, n, p);
        let mut buf = Vec::new();
        ds.write_csv_to(&mut buf).unwrap();
        let back = load_csv_from(buf.as_slice(), &Target::Last).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn coverage_sidecar_round_trip(seed in any::<u64>()) {
        let raw = random_problem(seed, 12, 60, &SelectParams::default());
        let cov = CoverageMatrices::from_covers(&raw.covers, &raw.ypreds, &raw.labels);
        let mut buf = Vec::new();
        cov.write_binary(&mut buf).unwrap();
        let back = CoverageMatrices::read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(back.n(), cov.n());
        prop_assert_eq!(back.m(), cov.m());
        for j in 0..cov.m() {
            prop_assert_eq!(back.ok_column(j), cov.ok_column(j));
            prop_assert_eq!(back.nok_column(j), cov.nok_column(j));
        }
        // a truncated file is rejected
        prop_assert!(CoverageMatrices::read_binary(&buf[..buf.len() - 1]).is_err() || cov.m() == 0);
    }

    #[test]
    fn rule_table_round_trip(seed in any::<u64>()) {
        let (ds, records) = forest_rules(seed, 60, 4);
        let mut buf = Vec::new();
        write_metrics_csv(&records, &ds, &mut buf).unwrap();
        let back = read_metrics_csv(buf.as_slice(), &ds).unwrap();
        // the table has no tree/leaf column, everything else must survive
        let expected: Vec<_> = records
            .into_iter()
            .map(|mut r| {
                r.rule.source = None;
                r
            })
            .collect();
        prop_assert_eq!(back, expected);
    }

    #[test]
    fn preselection_invariants(seed in any::<u64>(), min_conf in 0.5..0.9f64, max_simil in 0.6..=1.0f64, max_len in 1usize..4) {
        let (ds, records) = forest_rules(seed, 80, 4);
        let rules: Vec<_> = records.iter().map(|r| r.rule.clone()).collect();
        let params = PreselectParams { min_conf, max_simil, max_len, ..PreselectParams::default() };
        let Ok(pre) = preselect(&rules, &ds, &params) else { return Ok(()) };
        let s = &pre.stats;
        prop_assert!(s.input >= s.after_dedup && s.after_dedup >= s.after_length);
        prop_assert!(s.after_length >= s.after_thresholds);
        prop_assert_eq!(s.after_thresholds, s.kept + s.similar);
        prop_assert_eq!(pre.psr.len(), s.kept);
        prop_assert_eq!(pre.coverage.m(), pre.psr.len());
        let index = LevelIndex::new(&ds);
        let mut ids = BTreeSet::new();
        let mut conditions = BTreeSet::new();
        for r in pre.psr.iter().chain(&pre.psrs) {
            prop_assert!(r.metrics.confidence >= min_conf);
            prop_assert!(r.metrics.class_coverage >= params.min_class_cov);
            prop_assert!(r.rule.condition.att_nbr() <= max_len);
            prop_assert!(ids.insert(r.rule.id), "rule {} listed twice", r.rule.id);
            let key = (r.rule.condition.render(&ds), r.rule.ypred);
            prop_assert!(conditions.insert(key), "duplicate condition");
        }
        for (j, r) in pre.psr.iter().enumerate() {
            let cover = index.cover(&r.rule.condition);
            prop_assert_eq!(&pre.coverage.cover(j), &cover);
        }
        // each removed rule was absorbed by a similar one
        let all: Vec<_> = pre.psr.iter().chain(&pre.psrs).map(|r| index.cover(&r.rule.condition)).collect();
        for (k, r) in pre.psrs.iter().enumerate() {
            let me = &all[pre.psr.len() + k];
            let twin = all.iter().enumerate().any(|(o, c)| o != pre.psr.len() + k && jaccard_similarity(me, c) >= max_simil);
            prop_assert!(twin, "rule {} removed without a similar rule", r.rule.id);
        }
    }

    /// Every mined metarule meets both thresholds when recomputed from the
    /// covers, and no qualifying pair is missed.
    #[test]
    fn metarules_meet_thresholds(seed in any::<u64>(), minsup in 0.0..0.2f64, minconf in 0.5..=1.0f64) {
        let (ds, records) = forest_rules(seed, 60, 3);
        let rules: Vec<_> = records.iter().map(|r| r.rule.clone()).collect();
        let cov = build_coverage(&rules, &ds);
        let covers: HashMap<usize, _> = rules.iter().enumerate().map(|(j, r)| (r.id, cov.cover(j))).collect();
        let selected: Vec<usize> = rules.iter().step_by(5).map(|r| r.id).collect();
        let params = EnrichParams { arm_minsup: minsup, arm_minconf: minconf };
        let tx = build_transactions(&rules, &ds);
        let meta = mine_metarules(&tx, &selected, &params).unwrap();
        let n = ds.n() as f64;
        let mut seen = BTreeSet::new();
        for m in &meta {
            let (a, c) = (&covers[&m.antecedent], &covers[&m.consequent]);
            let both = a.intersection(c).count() as f64;
            prop_assert!(selected.contains(&m.consequent));
            prop_assert_ne!(m.antecedent, m.consequent);
            prop_assert!((m.support - both / n).abs() < 1e-12);
            prop_assert!((m.confidence - both / a.count_ones(..) as f64).abs() < 1e-12);
            prop_assert!((m.intersect - both / c.count_ones(..) as f64).abs() < 1e-12);
            prop_assert!(m.support >= minsup && m.confidence >= minconf);
            seen.insert((m.antecedent, m.consequent));
        }
        for &j in &selected {
            for (&i, a) in &covers {
                if i == j { continue; }
                let both = a.intersection(&covers[&j]).count() as f64;
                let size = a.count_ones(..) as f64;
                if both > 0.0 && both / n >= minsup && both / size >= minconf {
                    prop_assert!(seen.contains(&(i, j)), "missing {} -> {}", i, j);
                }
            }
        }
    }

    #[test]
    fn upset_counts_sum_to_n(seed in any::<u64>(), step in 1usize..20) {
        let (ds, records) = forest_rules(seed, 60, 3);
        let rules: Vec<_> = records.iter().step_by(step).take(8).map(|r| r.rule.clone()).collect();
        let up = export_upset(&rules, &ds).unwrap();
        prop_assert_eq!(up.combinations.iter().map(|c| c.count).sum::<usize>(), ds.n());
        prop_assert!(up.combinations.iter().any(|c| c.rules.is_empty()));
        for c in &up.combinations {
            prop_assert_eq!(c.class_counts.iter().sum::<usize>(), c.count);
        }
        for r in &up.rules {
            let total: usize = up.combinations.iter().filter(|c| c.rules.contains(&r.id)).map(|c| c.count).sum();
            prop_assert_eq!(total, r.cover);
        }
    }

    #[test]
    fn classifiers_agree_with_their_rules(seed in any::<u64>(), step in 1usize..15) {
        let (ds, records) = forest_rules(seed, 60, 3);
        let rules: Vec<RuleRecord> = records.iter().step_by(step).take(10).cloned().collect();
        let set = RuleClassifier::decision_set(rules.clone(), &ds);
        let list = build_ordered_list(rules.clone(), &ds).unwrap();
        let ps = set.predict(&ds);
        let pl = list.predict(&ds);
        for i in 0..ds.n() {
            let row = ds.row(i);
            let any = rules.iter().any(|r| r.rule.condition.covers(row));
            prop_assert_eq!(ps.covered[i], any);
            if !any {
                prop_assert_eq!(ps.labels[i], set.default_class);
            }
            let first = list.order.iter().map(|&k| &list.rules[k]).find(|r| r.rule.condition.covers(row));
            match first {
                Some(r) => prop_assert_eq!((pl.labels[i], pl.covered[i]), (r.rule.ypred, true)),
                None => prop_assert_eq!((pl.labels[i], pl.covered[i]), (list.default_class, false)),
            }
        }
    }
}
