use std::fmt::Write as _;

use super::{aggregate_category, aggregate_projects, IcallCategory, Metrics, MetricsReport};

const CATEGORIES: [IcallCategory; 3] =
    [IcallCategory::FltaExclusive, IcallCategory::MltaExclusive, IcallCategory::KelpExclusive];

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn cells(m: Option<(usize, Metrics<f64>)>) -> [String; 4] {
    match m {
        Some((n, m)) => [n.to_string(), pct(m.precision), pct(m.recall), pct(m.f1)],
        None => ["0".into(), "-".into(), "-".into(), "-".into()],
    }
}

/// One row per analysis label (reports sharing a label are averaged over
/// projects), P/R/F per icall category and overall.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let names: Vec<String> = CATEGORIES.iter().map(ToString::to_string).chain(["Overall".to_string()]).collect();
    let mut header = vec!["Analysis".to_string()];
    for _ in &names {
        header.extend(["#".into(), "P".into(), "R".into(), "F".into()]);
    }
    let mut rows = vec![header];
    for label in labels {
        let mine: Vec<MetricsReport> = reports.iter().filter(|r| r.label == label).cloned().collect();
        let mut row = vec![label.to_string()];
        for c in CATEGORIES {
            row.extend(cells(aggregate_category(&mine, c).map(|g| (g.icalls, g.metrics))));
        }
        let n = mine.iter().map(|r| r.rows.len()).sum();
        row.extend(cells(aggregate_projects(&mine).map(|m| (n, m))));
        rows.push(row);
    }
    let mut widths: Vec<usize> = (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    // Widen each group so its name fits over its four columns.
    for (g, name) in names.iter().enumerate() {
        let cols = 1 + 4 * g..1 + 4 * (g + 1);
        let span: usize = widths[cols.clone()].iter().sum::<usize>() + 6;
        if name.len() > span {
            widths[cols.start] += name.len() - span;
        }
    }
    let mut out = String::new();
    let mut group_line = " ".repeat(widths[0]);
    for (g, name) in names.iter().enumerate() {
        let span: usize = widths[1 + 4 * g..1 + 4 * (g + 1)].iter().sum::<usize>() + 6;
        let _ = write!(group_line, "  {name:>span$}");
    }
    let _ = writeln!(out, "{}", group_line.trim_end());
    for (k, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
        if k == 0 {
            let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn table_layout() {
        let p = Prediction {
            icall_id: "x".into(),
            category: IcallCategory::MltaExclusive,
            predicted: ["a".to_string(), "b".to_string()].into(),
            edges: vec![("a".into(), true), ("b".into(), true)],
        };
        let truth = GroundTruth { entries: [("x".to_string(), ["a".to_string()].into())].into() };
        let r = evaluate("FLTA", "p", &[p], &truth);
        let t = render_table(&[r]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("MLTA-exclusive") && lines[0].contains("Overall"));
        assert!(lines[3].starts_with("FLTA"));
        assert!(lines[3].contains("50.0") && lines[3].contains("66.7"));
    }
}
