//! CSV and JSON report rendering. Everything renders to bytes so callers
//! decide where it goes.

use levelk_core::dqn::EpisodeStats;
use levelk_core::levelk::ScenarioResult;
use levelk_core::validate::{DriverReport, MaeTriple, Summary};
use serde::{Deserialize, Serialize};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

pub fn reward_history_csv(history: &[EpisodeStats]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["episode", "avg_reward", "temperature", "n_cars", "steps", "crashed"])
        .unwrap();
    for h in history {
        w.write_record([
            h.episode.to_string(),
            h.avg_reward.to_string(),
            h.temperature.to_string(),
            h.population.to_string(),
            h.steps.to_string(),
            h.crashed.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn scenario_csv(rows: &[ScenarioResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_d", "episodes", "crashes", "crash_rate", "mean_reward"]).unwrap();
    for r in rows {
        w.write_record([
            r.n_d.to_string(),
            r.episodes.to_string(),
            r.crashes.to_string(),
            r.crash_rate.to_string(),
            r.mean_reward.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

/// One row per driver, followed by one success-percentage column per level.
pub fn driver_csv(reports: &[DriverReport], levels: &[u32]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "driver_id",
        "n_comparisons",
        "gt_success_pct",
        "ud_success_pct",
        "diff",
        "n_success",
        "ud_success",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(levels.iter().map(|k| format!("level{k}_success_pct")));
    w.write_record(&header).unwrap();
    for r in reports {
        let mut row = vec![
            r.driver_id.to_string(),
            r.n_comparisons.to_string(),
            opt(r.success_pct),
            opt(r.ud_success_pct),
            opt(r.diff()),
            r.n_success.to_string(),
            r.ud_success.to_string(),
        ];
        row.extend(
            r.level_success
                .iter()
                .map(|&s| opt((r.n_comparisons > 0).then(|| 100.0 * s as f64 / r.n_comparisons as f64))),
        );
        w.write_record(&row).unwrap();
    }
    finish(w)
}

pub fn color_map_csv(summary: &Summary) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ud_bucket", "gt_bucket", "count"]).unwrap();
    for c in &summary.color_map {
        w.write_record([c.ud_bucket.to_string(), c.gt_bucket.to_string(), c.count.to_string()])
            .unwrap();
    }
    finish(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub label: String,
    pub encoding: String,
    pub levels: Vec<u32>,
    pub n_limit: u64,
    pub alpha: f64,
    /// States skipped for lack of probe observations.
    pub missing_probes: usize,
    pub summary: Summary,
}

pub fn summary_json(doc: &SummaryDocument) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(doc).expect("summary serializes");
    s.push(b'\n');
    s
}

fn mae_cells(m: Option<MaeTriple>) -> [String; 3] {
    match m {
        Some(m) => [m.mae.to_string(), m.sum_abs.to_string(), m.scaled.to_string()],
        None => Default::default(),
    }
}

/// Table-style digest of several validation summaries.
pub fn table_csv(docs: &[SummaryDocument]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "encoding",
        "n_limit",
        "drivers",
        "comparisons",
        "mean_gt_pct",
        "mean_ud_pct",
        "mean_diff",
        "amae",
        "amae_sum_abs",
        "amae_scaled",
        "rmae",
        "rmae_sum_abs",
        "rmae_scaled",
    ])
    .unwrap();
    for d in docs {
        let s = &d.summary;
        let mut row = vec![
            d.label.clone(),
            d.encoding.clone(),
            d.n_limit.to_string(),
            s.drivers.to_string(),
            s.comparisons.to_string(),
            opt(s.mean_gt_pct),
            opt(s.mean_ud_pct),
            opt(s.mean_diff),
        ];
        row.extend(mae_cells(s.amae));
        row.extend(mae_cells(s.rmae));
        w.write_record(&row).unwrap();
    }
    finish(w)
}

pub fn table_markdown(docs: &[SummaryDocument]) -> String {
    let pct = |v: Option<f64>| v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "-".into());
    let num = |v: Option<MaeTriple>| v.map(|m| format!("{:.4}", m.mae)).unwrap_or_else(|| "-".into());
    let mut s = String::from(
        "| run | encoding | n_limit | drivers | mean GT success | mean UD success | difference | aMAE | rMAE |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for d in docs {
        let m = &d.summary;
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            d.label,
            d.encoding,
            d.n_limit,
            m.drivers,
            pct(m.mean_gt_pct),
            pct(m.mean_ud_pct),
            pct(m.mean_diff),
            num(m.amae),
            num(m.rmae)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(id: u64, n: usize, k: usize, u: usize) -> DriverReport {
        let pct = |x: usize| (n > 0).then(|| 100.0 * x as f64 / n as f64);
        DriverReport {
            driver_id: id,
            n_comparisons: n,
            n_success: k,
            success_pct: pct(k),
            level_success: vec![k, 0],
            ud_success: u,
            ud_success_pct: pct(u),
            skipped: vec![],
            states: vec![],
        }
    }

    #[test]
    fn driver_rows() {
        let text = String::from_utf8(driver_csv(&[report(4, 4, 3, 1), report(5, 0, 0, 0)], &[1, 2])).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "driver_id,n_comparisons,gt_success_pct,ud_success_pct,diff,n_success,ud_success,level1_success_pct,level2_success_pct"
        );
        assert_eq!(lines[1], "4,4,75,25,50,3,1,75,0");
        assert_eq!(lines[2], "5,0,,,,0,0,,");
    }

    #[test]
    fn empty_scenarios_keep_the_header() {
        assert_eq!(scenario_csv(&[]), b"n_d,episodes,crashes,crash_rate,mean_reward\n");
    }
}
