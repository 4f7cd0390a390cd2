//! Run reports in CSV and markdown, and the three table layouts.

use std::fmt::Write as _;

use range_pta_core::solver::{Footprint, Histogram, PropagationStats, BUCKET_LABELS};
use range_pta_core::{FilterMode, SetKind};

pub const BYTES_PER_MB: f64 = 1_000_000.0;

pub fn mb(bytes: u64) -> String {
    format!("{:.1}", bytes as f64 / BYTES_PER_MB)
}

/// `<total MB>/<saved MB>`, one decimal each.
pub fn savings_cell(total_bytes: u64, saved_bytes: u64) -> String {
    format!("{}/{}", mb(total_bytes), mb(saved_bytes))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub corpus: String,
    pub set_kind: SetKind,
    pub filter: FilterMode,
    pub chunk_bits: u32,
    pub stats: PropagationStats,
    pub footprint: Footprint,
    pub histogram: Option<Histogram>,
    pub savings_bytes: Option<u64>,
}

impl RunReport {
    /// Column names and formatted values, shared by both emitters.
    pub fn fields(&self) -> Vec<(String, String)> {
        let wall_ms = self.stats.wall_time.map_or_else(
            || "-".to_string(),
            |d| format!("{:.3}", d.as_secs_f64() * 1e3),
        );
        let mut f: Vec<(String, String)> = vec![
            ("corpus".into(), self.corpus.clone()),
            ("set".into(), self.set_kind.to_string()),
            ("filter".into(), self.filter.to_string()),
            ("chunk_bits".into(), self.chunk_bits.to_string()),
            ("iterations".into(), self.stats.iterations.to_string()),
            ("union_ops".into(), self.stats.union_ops.to_string()),
            (
                "nodes_processed".into(),
                self.stats.nodes_processed.to_string(),
            ),
            ("wall_ms".into(), wall_ms),
            ("modeled_bytes".into(), self.footprint.total().to_string()),
            ("modeled_mb".into(), mb(self.footprint.total())),
            ("var_bytes".into(), self.footprint.var_bytes.to_string()),
            ("field_bytes".into(), self.footprint.field_bytes.to_string()),
            (
                "shared_base_bytes".into(),
                self.footprint.shared_base_bytes.to_string(),
            ),
        ];
        if let Some(s) = self.savings_bytes {
            f.push(("saved_bytes".into(), s.to_string()));
            f.push((
                "total/saved_mb".into(),
                savings_cell(self.footprint.total(), s),
            ));
        }
        if let Some(h) = &self.histogram {
            f.push(("dereferenced_vars".into(), h.population.to_string()));
            for (label, pct) in BUCKET_LABELS.iter().zip(h.percentages()) {
                f.push((format!("pct_{label}"), format!("{pct:.2}")));
            }
        }
        f
    }

    pub fn to_csv(&self) -> String {
        let fields = self.fields();
        let esc = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        let header: Vec<String> = fields.iter().map(|(k, _)| esc(k)).collect();
        let row: Vec<String> = fields.iter().map(|(_, v)| esc(v)).collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| metric (space is modeled) | value |\n|---|---|\n");
        for (k, v) in self.fields() {
            writeln!(out, "| {k} | {v} |").unwrap();
        }
        out
    }
}

/// Bucket percentages side by side, with the per-bucket difference.
pub fn precision_table(a_label: &str, a: &Histogram, b_label: &str, b: &Histogram) -> String {
    let mut out = format!("| size | {a_label} | {b_label} | delta |\n|---|---|---|---|\n");
    for ((label, x), y) in BUCKET_LABELS
        .iter()
        .zip(a.percentages())
        .zip(b.percentages())
    {
        writeln!(out, "| {label} | {x:.2} | {y:.2} | {:.2} |", x - y).unwrap();
    }
    writeln!(out, "| vars | {} | {} | |", a.population, b.population).unwrap();
    out
}

/// One row per run: time and modeled space.
pub fn time_space_table(rows: &[RunReport]) -> String {
    let mut out = String::from(
        "| corpus | set | filter | time (ms) | space (MB, modeled) | union ops |\n|---|---|---|---|---|---|\n",
    );
    for r in rows {
        let f: std::collections::BTreeMap<String, String> = r.fields().into_iter().collect();
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            r.corpus, r.set_kind, r.filter, f["wall_ms"], f["modeled_mb"], r.stats.union_ops
        )
        .unwrap();
    }
    out
}

/// `total/saved` cells per corpus and set kind.
pub fn savings_table(rows: &[RunReport]) -> String {
    let mut out = String::from("| corpus | set | total/saved (MB, modeled) |\n|---|---|---|\n");
    for r in rows {
        let cell = r
            .savings_bytes
            .map_or_else(|| "-".into(), |s| savings_cell(r.footprint.total(), s));
        writeln!(out, "| {} | {} | {} |", r.corpus, r.set_kind, cell).unwrap();
    }
    out
}
