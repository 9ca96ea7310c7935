//! Plain-text renderings of evaluation results; every report also has a
//! serde form for machine use.

use std::fmt::Write;

use super::bc::BcReport;
use super::clustering::ClusterScores;
use super::supervised::{Prf, SupervisedReport};

const CORE_ROLES: [&str; 3] = ["A0", "A1", "A2"];

fn pct(x: f64) -> String {
    format!("{:6.2}", 100.0 * x)
}

/// Core-role, adjunct and aggregate columns, then every role on its own line.
pub fn supervised_table(r: &SupervisedReport) -> String {
    let mut out = String::new();
    let all_name = if r.config.macro_all { "All(macro)" } else { "All" };
    let empty = Prf::default();
    let cols: Vec<(&str, &Prf)> = CORE_ROLES
        .iter()
        .map(|&c| (c, r.per_role.get(c).unwrap_or(&empty)))
        .chain([("AM-*", &r.adjuncts), (all_name, &r.all)])
        .collect();
    let _ = writeln!(out, "# supervised role classification over {} arguments", r.arguments);
    if r.config.drop_self_loops {
        let _ = writeln!(out, "# self-loop arguments dropped: {}", r.self_loops_dropped);
    }
    let _ = writeln!(out, "{:<4}{}", "", cols.iter().map(|(n, _)| format!("{n:>11}")).collect::<String>());
    for (name, f) in [("P", (|p: &Prf| p.precision) as fn(&Prf) -> f64), ("R", |p| p.recall), ("F1", |p| p.f1)] {
        let _ =
            writeln!(out, "{:<4}{}", name, cols.iter().map(|(_, p)| format!("{:>11}", pct(f(p)))).collect::<String>());
    }
    let _ = writeln!(out, "accuracy {}", pct(r.accuracy));
    let _ = writeln!(out, "\nrole        gold  pred  correct      P      R     F1");
    for (role, p) in &r.per_role {
        let _ = writeln!(
            out,
            "{role:<10}{:>6}{:>6}{:>9} {} {} {}",
            p.gold,
            p.predicted,
            p.correct,
            pct(p.precision),
            pct(p.recall),
            pct(p.f1)
        );
    }
    out
}

pub fn clustering_table(s: &ClusterScores) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# PU = (1/N) sum over clusters of the largest gold-role overlap");
    let _ = writeln!(out, "# CO = (1/N) sum over gold roles of the largest cluster overlap");
    let _ = writeln!(out, "# F1 = harmonic mean of PU and CO");
    let _ = writeln!(out, "# N = {} arguments, {} clusters, {} gold roles", s.arguments, s.clusters, s.gold_roles);
    let _ = writeln!(out, "PU {:.2}", 100.0 * s.purity);
    let _ = writeln!(out, "CO {:.2}", 100.0 * s.collocation);
    let _ = writeln!(out, "F1 {:.2}", 100.0 * s.f1);
    out
}

/// Pairs sorted by coefficient, each with its `top` most and least supportive lemmas.
pub fn bc_table(r: &BcReport, top: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Bhattacharyya coefficients; pairs need {} arguments per domain, lemmas {} occurrences",
        r.config.min_pair_instances, r.config.min_lemma_frequency
    );
    let _ = writeln!(out, "# {} pairs reported, {} below the size cut-off", r.entries.len(), r.below_cutoff);
    let mut order: Vec<_> = r.entries.iter().collect();
    order.sort_by(|a, b| match (a.bc, b.bc) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    for e in order {
        let bc = e.bc.map_or("undefined".to_string(), |b| format!("{b:.4}"));
        let _ = writeln!(
            out,
            "{} {}  BC {}  (verbal {}, nominal {})",
            e.predicate, e.role, bc, e.verbal_size, e.nominal_size
        );
        let fmt = |c: &super::bc::Contribution| {
            format!("{}:{}", c.lemma, c.delta.map_or("undefined".to_string(), |d| format!("{d:+.4}")))
        };
        let defined: Vec<_> = e.contributions.iter().filter(|c| c.delta.is_some()).collect();
        let head: Vec<String> = defined.iter().take(top).map(|c| fmt(c)).collect();
        let tail: Vec<String> = defined.iter().rev().take(top).map(|c| fmt(c)).collect();
        let _ = writeln!(out, "  supporting: {}", head.join(" "));
        let _ = writeln!(out, "  opposing:   {}", tail.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::clustering::cluster_pair_scores;
    use crate::evaluation::supervised::{supervised_scores, tests::record};

    #[test]
    fn all_a0_row_prints_full_collocation() {
        let s = cluster_pair_scores([(0, "A0"), (0, "A1")]).unwrap();
        let t = clustering_table(&s);
        assert!(t.contains("CO 100.00") && t.contains("PU 50.00"));
    }

    #[test]
    fn supervised_table_has_role_columns() {
        let r = supervised_scores(&[record("a", &[("A0", "A0"), ("AM-TMP", "AM-LOC")])], Default::default()).unwrap();
        let t = supervised_table(&r);
        for col in ["A0", "A1", "A2", "AM-*", "All"] {
            assert!(t.lines().nth(1).unwrap().contains(col), "{t}");
        }
        assert!(t.contains("accuracy  50.00"));
    }
}
