//! Scoring against dynamically observed call targets.

mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Report, StaticReport};
use crate::resolve::{Resolver, StaticResolution};
use crate::scalar::Scalar;

pub use table::render_table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<T>,
}

impl<T: Scalar> Metrics<T> {
    /// Harmonic mean of precision and recall, zero when both are zero.
    pub fn harmonic(p: T, r: T) -> T {
        if p + r == T::zero() {
            T::zero()
        } else {
            (T::one() + T::one()) * p * r / (p + r)
        }
    }

    pub fn new(precision: T, recall: T) -> Self {
        Metrics { precision, recall, f1: Self::harmonic(precision, recall), accuracy: None }
    }

    pub fn to_f64(&self) -> Metrics<f64> {
        Metrics {
            precision: self.precision.to_f64_lossy(),
            recall: self.recall.to_f64_lossy(),
            f1: self.f1.to_f64_lossy(),
            accuracy: self.accuracy.map(Scalar::to_f64_lossy),
        }
    }

    /// Component-wise unweighted mean; `None` for no items.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Metrics<T>>) -> Option<Self>
    where
        T: 'a,
    {
        let mut n = 0usize;
        let (mut p, mut r, mut f) = (T::zero(), T::zero(), T::zero());
        let mut acc: Option<(T, usize)> = None;
        for m in items {
            n += 1;
            p = p + m.precision;
            r = r + m.recall;
            f = f + m.f1;
            if let Some(a) = m.accuracy {
                let (s, k) = acc.unwrap_or((T::zero(), 0));
                acc = Some((s + a, k + 1));
            }
        }
        (n > 0).then(|| {
            let d = T::from_count(n);
            Metrics { precision: p / d, recall: r / d, f1: f / d, accuracy: acc.map(|(s, k)| s / T::from_count(k)) }
        })
    }
}

/// Per-icall precision, recall and F1. An empty prediction scores zero.
pub fn per_icall_metrics<T: Scalar>(predicted: &BTreeSet<String>, truth: &BTreeSet<String>) -> Metrics<T> {
    let hit = predicted.intersection(truth).count();
    Metrics::new(T::ratio(hit, predicted.len()), T::ratio(hit, truth.len()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics<T: Scalar>(&self) -> Metrics<T> {
        let mut m = Metrics::new(T::ratio(self.tp, self.tp + self.fp), T::ratio(self.tp, self.tp + self.fn_));
        m.accuracy = Some(T::ratio(self.tp + self.tn, self.total()));
        m
    }
}

/// Strip the `@file` qualifier of a function key.
pub fn bare_name(key: &str) -> &str {
    key.split_once('@').map_or(key, |(n, _)| n)
}

/// The truth name a predicted key stands for: itself when listed, else its
/// bare name when that is listed.
pub fn truth_name<'t>(key: &str, truth: &'t BTreeSet<String>) -> Option<&'t String> {
    truth.get(key).or_else(|| truth.get(bare_name(key)))
}

/// Map predicted keys onto truth names; unmatched keys stay as they are.
/// Reports truth names matched by more than one key.
pub fn normalize_predictions(predicted: &BTreeSet<String>, truth: &BTreeSet<String>) -> (BTreeSet<String>, Vec<String>) {
    let mut by_name: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut out = BTreeSet::new();
    for k in predicted {
        match truth_name(k, truth) {
            Some(t) => {
                by_name.entry(t).or_default().push(k);
                out.insert(t.clone());
            }
            None => {
                out.insert(k.clone());
            }
        }
    }
    let notes = by_name
        .into_iter()
        .filter(|(_, ks)| ks.len() > 1)
        .map(|(t, ks)| format!("`{t}` matches several definitions: {}", ks.join(", ")))
        .collect();
    (out, notes)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entries: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Deserialize)]
struct TruthFile {
    icalls: Vec<TruthEntry>,
}

#[derive(Deserialize)]
struct TruthEntry {
    id: String,
    targets: Vec<String>,
}

impl GroundTruth {
    /// Parse `{"icalls": [{"id", "targets"}]}`. Entries without targets are
    /// dropped with a note; repeated ids are merged.
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>)> {
        let file: TruthFile = serde_json::from_str(text)?;
        let mut truth = GroundTruth::default();
        let mut notes = Vec::new();
        for e in file.icalls {
            if e.targets.is_empty() {
                notes.push(format!("{}: no observed targets; excluded", e.id));
                continue;
            }
            truth.entries.entry(e.id).or_default().extend(e.targets);
        }
        Ok((truth, notes))
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IcallCategory {
    FltaExclusive,
    MltaExclusive,
    KelpExclusive,
}

impl fmt::Display for IcallCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IcallCategory::FltaExclusive => "FLTA-exclusive",
            IcallCategory::MltaExclusive => "MLTA-exclusive",
            IcallCategory::KelpExclusive => "Kelp-exclusive",
        })
    }
}

pub fn category_of(resolver: Resolver, confirmed: bool) -> IcallCategory {
    match resolver {
        Resolver::KelpLite if confirmed => IcallCategory::KelpExclusive,
        Resolver::Mlta => IcallCategory::MltaExclusive,
        _ => IcallCategory::FltaExclusive,
    }
}

pub fn categorize_icall(resolution: &StaticResolution) -> IcallCategory {
    category_of(resolution.set.resolver, resolution.set.confirmed)
}

/// What an analysis predicted for one icall.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub icall_id: String,
    pub category: IcallCategory,
    pub predicted: BTreeSet<String>,
    /// Every static edge with its keep label.
    pub edges: Vec<(String, bool)>,
}

/// Scope-filtered static candidates, all kept.
pub fn predictions_from_static(report: &StaticReport) -> Vec<Prediction> {
    report
        .icalls
        .iter()
        .map(|(id, e)| Prediction {
            icall_id: id.clone(),
            category: categorize_icall(&e.resolution),
            predicted: e.scoped_candidates.clone(),
            edges: e.scoped_candidates.iter().map(|c| (c.clone(), true)).collect(),
        })
        .collect()
}

pub fn predictions_from_refined(report: &Report) -> Vec<Prediction> {
    report
        .results
        .iter()
        .map(|r| Prediction {
            icall_id: r.icall_id.clone(),
            category: category_of(r.resolver, r.confirmed),
            predicted: r.kept.clone(),
            edges: r.scoped_candidates.iter().map(|c| (c.clone(), r.kept.contains(c))).collect(),
        })
        .collect()
}

/// Edge-level classification over all labeled static edges. Edges of icalls
/// missing from the truth are skipped and counted.
pub fn edge_classification_metrics<T: Scalar>(predictions: &[Prediction], truth: &GroundTruth) -> (Metrics<T>, Confusion, usize) {
    let mut c = Confusion::default();
    let mut skipped = 0;
    for p in predictions {
        let Some(t) = truth.get(&p.icall_id) else {
            skipped += p.edges.len();
            continue;
        };
        for (callee, kept) in &p.edges {
            match (*kept, truth_name(callee, t).is_some()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    (c.metrics(), c, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub icall_id: String,
    pub category: IcallCategory,
    pub predicted: usize,
    pub truth: usize,
    pub metrics: Metrics<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub icalls: usize,
    pub metrics: Metrics<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub metrics: Metrics<f64>,
    pub confusion: Confusion,
    /// Edges of icalls that have no ground truth.
    pub skipped_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub project: String,
    pub rows: Vec<MetricsRow>,
    /// Per-project means; `None` when no icall had ground truth.
    pub overall: Option<GroupSummary>,
    pub categories: BTreeMap<IcallCategory, GroupSummary>,
    pub edges: EdgeSummary,
    /// Icalls in the truth that the analysis did not report.
    pub missing_icalls: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl MetricsReport {
    pub fn is_empty(&self) -> bool {
        self.overall.is_none()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::canonical_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-icall rows plus category, project and edge summaries for one project.
pub fn evaluate(label: &str, project: &str, predictions: &[Prediction], truth: &GroundTruth) -> MetricsReport {
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for p in predictions {
        let Some(t) = truth.get(&p.icall_id) else { continue };
        let (normalized, notes) = normalize_predictions(&p.predicted, t);
        diagnostics.extend(notes.into_iter().map(|n| format!("{}: {n}", p.icall_id)));
        rows.push(MetricsRow {
            icall_id: p.icall_id.clone(),
            category: p.category,
            predicted: p.predicted.len(),
            truth: t.len(),
            metrics: per_icall_metrics::<f64>(&normalized, t),
        });
    }
    let reported: BTreeSet<&str> = predictions.iter().map(|p| p.icall_id.as_str()).collect();
    let missing_icalls: Vec<String> =
        truth.entries.keys().filter(|id| !reported.contains(id.as_str())).cloned().collect();
    if !missing_icalls.is_empty() {
        diagnostics.push(format!("{} icalls in the truth were not analyzed", missing_icalls.len()));
    }
    let group = |rows: &[&MetricsRow]| {
        Metrics::mean(rows.iter().map(|r| &r.metrics)).map(|metrics| GroupSummary { icalls: rows.len(), metrics })
    };
    let all: Vec<&MetricsRow> = rows.iter().collect();
    let mut categories = BTreeMap::new();
    for c in [IcallCategory::FltaExclusive, IcallCategory::MltaExclusive, IcallCategory::KelpExclusive] {
        let rs: Vec<&MetricsRow> = rows.iter().filter(|r| r.category == c).collect();
        if let Some(g) = group(&rs) {
            categories.insert(c, g);
        }
    }
    let (m, confusion, skipped_edges) = edge_classification_metrics::<f64>(predictions, truth);
    MetricsReport {
        label: label.to_string(),
        project: project.to_string(),
        overall: group(&all),
        rows,
        categories,
        edges: EdgeSummary { metrics: m, confusion, skipped_edges },
        missing_icalls,
        diagnostics,
    }
}

/// Macro average over projects: mean of each project's overall metrics.
pub fn aggregate_projects(reports: &[MetricsReport]) -> Option<Metrics<f64>> {
    Metrics::mean(reports.iter().filter_map(|r| r.overall.as_ref()).map(|g| &g.metrics))
}

/// Mean over all icalls of a category across projects.
pub fn aggregate_category(reports: &[MetricsReport], category: IcallCategory) -> Option<GroupSummary> {
    let rows: Vec<&Metrics<f64>> =
        reports.iter().flat_map(|r| &r.rows).filter(|r| r.category == category).map(|r| &r.metrics).collect();
    Metrics::mean(rows.iter().copied()).map(|metrics| GroupSummary { icalls: rows.len(), metrics })
}

/// Load either a refined report or a static report.
pub fn load_predictions(text: &str) -> Result<(String, Vec<Prediction>)> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if v.get("results").is_some() {
        let r: Report = serde_json::from_value(v)?;
        Ok((r.project.clone(), predictions_from_refined(&r)))
    } else if v.get("icalls").is_some() {
        let r: StaticReport = serde_json::from_value(v)?;
        Ok((r.project.clone(), predictions_from_static(&r)))
    } else {
        Err(Error::Config("expected a refined or static report".into()))
    }
}
