//! CPLEX LP text export of the full model, auxiliaries included.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::SelectionProblem;
use crate::{Error, Result};

/// Linear expression `Σ coef·var` rendered with explicit signs.
fn expr(terms: &[(f64, String)]) -> String {
    let mut s = String::new();
    for (k, (c, v)) in terms.iter().enumerate() {
        let sign = if *c < 0.0 {
            "-"
        } else if k > 0 {
            "+"
        } else {
            ""
        };
        let mag = c.abs();
        if k > 0 {
            s.push(' ');
        }
        if mag == 1.0 {
            let _ = write!(s, "{sign} {v}");
        } else {
            let _ = write!(s, "{sign} {mag} {v}");
        }
    }
    s.trim_start().to_string()
}

/// Long rows are wrapped; LP readers cap line length.
fn emit(out: &mut String, name: &str, body: &str, bound: Option<(&str, f64)>) {
    let _ = write!(out, " {name}:");
    let mut width = name.len() + 2;
    for tok in body.split(' ') {
        if width + tok.len() > 200 {
            out.push_str("\n   ");
            width = 3;
        }
        out.push(' ');
        out.push_str(tok);
        width += tok.len() + 1;
    }
    match bound {
        Some((rel, rhs)) => {
            let _ = writeln!(out, " {rel} {rhs}");
        }
        None => out.push('\n'),
    }
}

/// Writes the model; objective coefficients are the per-rule costs.
pub fn write_lp<W: Write>(p: &SelectionProblem, mut out: W) -> std::io::Result<()> {
    let mc = p.params.maxcover as f64;
    let sel = |j: usize| format!("sel_{}", j + 1);
    let var = |prefix: &str, i: usize| format!("{prefix}_{}", i + 1);

    // per-instance P and C terms
    let mut p_terms: Vec<Vec<(f64, String)>> = vec![Vec::new(); p.n];
    let mut c_terms: Vec<Vec<(f64, String)>> = vec![Vec::new(); p.n];
    for j in 0..p.m {
        for &i in &p.ok_rows[j] {
            p_terms[i as usize].push((1.0, sel(j)));
            c_terms[i as usize].push((1.0, sel(j)));
        }
        for &i in &p.nok_rows[j] {
            p_terms[i as usize].push((-1.0, sel(j)));
            c_terms[i as usize].push((1.0, sel(j)));
        }
    }
    let with = |terms: &[(f64, String)], extra: (f64, String)| {
        let mut t = terms.to_vec();
        t.push(extra);
        expr(&t)
    };

    let mut s = String::new();
    s.push_str("\\ rule selection model\nMinimize\n");
    let obj: Vec<(f64, String)> = (0..p.m).map(|j| (p.cost(j), sel(j))).collect();
    emit(&mut s, "obj", &expr(&obj), None);
    s.push_str("Subject To\n");
    for (i, c) in c_terms.iter().enumerate() {
        if !c.is_empty() {
            emit(&mut s, &var("maxcover", i), &expr(c), Some(("<=", mc)));
        }
    }
    for (i, pt) in p_terms.iter().enumerate() {
        emit(
            &mut s,
            &var("err_ub", i),
            &with(pt, (mc, var("err", i))),
            Some(("<=", mc)),
        );
        emit(
            &mut s,
            &var("err_lb", i),
            &with(pt, (1.0 + mc, var("err", i))),
            Some((">=", 1.0)),
        );
    }
    let all = |prefix: &str, coef: f64| (0..p.n).map(|i| (coef, var(prefix, i))).collect::<Vec<_>>();
    let mut err_total = all("err", 1.0);
    err_total.extend(all("cov", 1.0 - (p.init_error + p.params.alpha)));
    emit(&mut s, "err_total", &expr(&err_total), Some(("<=", p.n as f64)));
    for (i, c) in c_terms.iter().enumerate() {
        emit(
            &mut s,
            &var("cov_ub", i),
            &with(c, (-mc, var("cov", i))),
            Some(("<=", 0.0)),
        );
        emit(
            &mut s,
            &var("cov_lb", i),
            &with(c, (-1.0, var("cov", i))),
            Some((">=", 0.0)),
        );
    }
    emit(
        &mut s,
        "cov_total",
        &expr(&all("cov", 1.0)),
        Some((">=", p.n as f64 * (1.0 - p.params.beta))),
    );
    for (i, c) in c_terms.iter().enumerate() {
        emit(
            &mut s,
            &var("ovl_ub", i),
            &with(c, (-(mc - 1.0), var("ovl", i))),
            Some(("<=", 1.0)),
        );
        emit(
            &mut s,
            &var("ovl_lb", i),
            &with(c, (-2.0, var("ovl", i))),
            Some((">=", 0.0)),
        );
    }
    let mut ovl_total = all("ovl", 1.0);
    ovl_total.extend(all("cov", -p.params.maxoverlap));
    emit(&mut s, "ovl_total", &expr(&ovl_total), Some(("<=", 0.0)));

    s.push_str("Binaries\n");
    let names: Vec<String> = (0..p.m)
        .map(sel)
        .chain(
            ["cov", "err", "ovl"]
                .iter()
                .flat_map(|pre| (0..p.n).map(move |i| var(pre, i))),
        )
        .collect();
    for chunk in names.chunks(16) {
        let _ = writeln!(s, " {}", chunk.join(" "));
    }
    s.push_str("End\n");
    out.write_all(s.as_bytes())
}

pub fn export_lp(p: &SelectionProblem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_lp(p, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use super::super::tests::random_problem;
    use super::super::*;
    use super::*;

    #[derive(Debug)]
    struct Row {
        name: String,
        terms: Vec<(f64, String)>,
        rel: Option<String>,
        rhs: f64,
    }

    struct Model {
        objective: Row,
        rows: Vec<Row>,
        binaries: BTreeSet<String>,
    }

    fn is_name(t: &str) -> bool {
        let mut c = t.chars();
        c.next().is_some_and(|f| f.is_ascii_alphabetic()) && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
    }

    /// `name: [sign] [coef] var ... [rel rhs]`
    fn parse_row(text: &str, with_rel: bool) -> Row {
        let (name, body) = text.split_once(':').expect("row has a name");
        let name = name.trim();
        assert!(is_name(name), "bad row name {name:?}");
        let toks: Vec<&str> = body.split_whitespace().collect();
        let mut terms = Vec::new();
        let mut k = 0;
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        let mut rel = None;
        let mut rhs = 0.0;
        while k < toks.len() {
            let t = toks[k];
            match t {
                "+" | "-" => {
                    assert!(coef.is_none(), "sign after coefficient in {name}");
                    sign = if t == "-" { -1.0 } else { 1.0 };
                }
                "<=" | ">=" | "=" => {
                    assert!(with_rel, "relation in objective");
                    rel = Some(t.to_string());
                    rhs = toks[k + 1].parse().expect("numeric rhs");
                    assert_eq!(k + 2, toks.len(), "trailing tokens in {name}");
                    break;
                }
                _ => {
                    if let Ok(v) = t.parse::<f64>() {
                        assert!(coef.is_none(), "two coefficients in {name}");
                        coef = Some(v);
                    } else {
                        assert!(is_name(t), "bad variable {t:?}");
                        terms.push((sign * coef.unwrap_or(1.0), t.to_string()));
                        sign = 1.0;
                        coef = None;
                    }
                }
            }
            k += 1;
        }
        assert!(coef.is_none(), "dangling coefficient in {name}");
        if with_rel {
            assert!(rel.is_some(), "row {name} lacks a relation");
        }
        Row {
            name: name.into(),
            terms,
            rel,
            rhs,
        }
    }

    fn parse(text: &str) -> Model {
        let mut section = "";
        let mut logical: Vec<(String, String)> = Vec::new();
        let mut binaries = BTreeSet::new();
        for line in text.lines() {
            if line.starts_with('\\') || line.trim().is_empty() {
                continue;
            }
            match line.trim() {
                s @ ("Minimize" | "Subject To" | "Binaries" | "End") => {
                    section = s;
                    continue;
                }
                _ => {}
            }
            match section {
                "Minimize" | "Subject To" => {
                    if line.starts_with("   ") {
                        logical.last_mut().expect("continuation follows a row").1 += line;
                    } else {
                        logical.push((section.into(), line.to_string()));
                    }
                }
                "Binaries" => {
                    for v in line.split_whitespace() {
                        assert!(is_name(v));
                        assert!(binaries.insert(v.to_string()), "duplicate binary {v}");
                    }
                }
                other => panic!("content in section {other:?}: {line}"),
            }
        }
        assert_eq!(section, "End");
        let mut objective = None;
        let mut rows = Vec::new();
        for (sec, text) in logical {
            if sec == "Minimize" {
                assert!(objective.is_none());
                objective = Some(parse_row(&text, false));
            } else {
                rows.push(parse_row(&text, true));
            }
        }
        Model {
            objective: objective.expect("objective"),
            rows,
            binaries,
        }
    }

    fn satisfied(row: &Row, values: &HashMap<String, f64>) -> bool {
        let lhs: f64 = row.terms.iter().map(|(c, v)| c * values[v]).sum();
        match row.rel.as_deref() {
            Some("<=") => lhs <= row.rhs + 1e-9,
            Some(">=") => lhs >= row.rhs - 1e-9,
            _ => (lhs - row.rhs).abs() <= 1e-9,
        }
    }

    fn text_of(p: &SelectionProblem) -> String {
        let mut buf = Vec::new();
        write_lp(p, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn structure_of_small_model() {
        let params = SelectParams::default();
        let p = (0..)
            .map(|s| random_problem(s, 2, 4, &params))
            .find(|p| p.m == 2 && p.n >= 4)
            .unwrap();
        let model = parse(&text_of(&p));
        assert_eq!(model.binaries.len(), p.m + 3 * p.n);
        let families: BTreeSet<&str> = model
            .rows
            .iter()
            .map(|r| r.name.rsplit_once('_').map_or(r.name.as_str(), |(f, _)| f))
            .map(|f| f.split('_').next().unwrap())
            .collect();
        assert_eq!(
            families,
            ["cov", "err", "maxcover", "ovl"].into_iter().collect(),
            "maxcover plus error, coverage and overlap families"
        );
        for name in ["err_total", "cov_total", "ovl_total"] {
            assert!(model.rows.iter().any(|r| r.name == name), "{name}");
        }
    }

    #[test]
    fn objective_round_trips() {
        for seed in 0..10 {
            let p = random_problem(seed, 12, 60, &SelectParams::default());
            let model = parse(&text_of(&p));
            assert_eq!(model.objective.name, "obj");
            assert_eq!(model.objective.terms.len(), p.m);
            for (j, (c, v)) in model.objective.terms.iter().enumerate() {
                assert_eq!(v, &format!("sel_{}", j + 1));
                assert_eq!(*c, p.cost(j), "exact coefficient");
            }
        }
    }

    #[test]
    fn rows_agree_with_feasibility_check() {
        for seed in 0..40 {
            let p = random_problem(seed, 8, 30, &SelectParams::default());
            let model = parse(&text_of(&p));
            for v in model.rows.iter().flat_map(|r| &r.terms) {
                assert!(model.binaries.contains(&v.1), "undeclared {}", v.1);
            }
            for mask in 0u32..(1 << p.m) {
                let sel: Vec<bool> = (0..p.m).map(|j| mask >> j & 1 == 1).collect();
                let ind = derive_indicators(&sel, &p);
                let mut values = HashMap::new();
                for j in 0..p.m {
                    values.insert(format!("sel_{}", j + 1), f64::from(u8::from(sel[j])));
                }
                for i in 0..p.n {
                    values.insert(format!("cov_{}", i + 1), f64::from(u8::from(ind.is_covered[i])));
                    values.insert(format!("err_{}", i + 1), f64::from(u8::from(ind.is_error[i])));
                    values.insert(format!("ovl_{}", i + 1), f64::from(u8::from(ind.is_overlap[i])));
                }
                let lp_ok = model.rows.iter().all(|r| satisfied(r, &values));
                assert_eq!(lp_ok, check_feasible(&sel, &p).is_empty(), "seed {seed} mask {mask}");
            }
        }
    }
}
