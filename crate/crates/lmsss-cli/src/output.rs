//! Output writers. Every file format produced by the harness lives here and
//! all writes happen on the calling thread, after the parallel phase.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use lmsss::pipeline::RunReport;
use lmsss::shrink::ShrinkResult;
use lmsss::stats::Table;

/// `reports/{dataset}__{variant}__run{index}.json`, one per run.
pub fn write_reports(dir: &Path, reports: &[RunReport]) -> Result<()> {
    let reports_dir = dir.join("reports");
    fs::create_dir_all(&reports_dir)?;
    for report in reports {
        let path = reports_dir.join(format!(
            "{}__{}__run{:03}.json",
            sanitize(&report.dataset),
            report.variant,
            report.run_index
        ));
        write_json(&path, report)?;
    }
    Ok(())
}

/// `tables/{metric}.csv` and `.json`. The CSV holds one row per
/// (dataset, variant) plus summary rows with the reference's
/// wins/ties/losses encoded in the mark column.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<()> {
    let tables_dir = dir.join("tables");
    fs::create_dir_all(&tables_dir)?;
    for table in tables {
        write_json(&tables_dir.join(format!("{}.json", table.metric.name())), table)?;

        let mut out = String::from("dataset,variant,mean,std,mark\n");
        for row in &table.rows {
            for cell in &row.cells {
                let mark = match cell.mark {
                    None => "reference",
                    Some(lmsss::stats::Mark::Better) => "better",
                    Some(lmsss::stats::Mark::Worse) => "worse",
                    Some(lmsss::stats::Mark::NoDifference) => "no_difference",
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(&row.dataset),
                    cell.variant,
                    cell.mean,
                    cell.std,
                    mark
                ));
            }
        }
        for cell in &table.summary {
            out.push_str(&format!(
                "summary,{},,,{}/{}/{}\n",
                cell.variant, cell.reference_wins, cell.ties, cell.reference_losses
            ));
        }
        fs::write(tables_dir.join(format!("{}.csv", table.metric.name())), out)?;
    }
    Ok(())
}

/// `fronts_train.csv` and `fronts_test.csv`:
/// `run,variant,dataset,f1,loss,n_features,mask` with the mask encoded as a
/// space-separated sorted index list.
pub fn write_fronts(dir: &Path, reports: &[RunReport]) -> Result<()> {
    for (file, pick) in [
        ("fronts_train.csv", true),
        ("fronts_test.csv", false),
    ] {
        let mut out = String::from("run,variant,dataset,f1,loss,n_features,mask\n");
        for report in reports {
            let front = if pick { &report.train_front } else { &report.test_front };
            for entry in front {
                let mask = entry
                    .features
                    .iter()
                    .map(|f| f.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    report.run_index,
                    report.variant,
                    csv_field(&report.dataset),
                    entry.objectives.feature_ratio,
                    entry.objectives.loss,
                    entry.features.len(),
                    mask
                ));
            }
        }
        fs::write(dir.join(file), out)?;
    }
    Ok(())
}

/// `timing.csv`: mean wall seconds per (dataset, variant).
pub fn write_timing(dir: &Path, reports: &[RunReport]) -> Result<()> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for report in reports {
        groups
            .entry((report.dataset.clone(), report.variant.to_string()))
            .or_default()
            .push(report.wall_time_seconds);
    }
    let mut out = String::from("dataset,variant,mean_seconds\n");
    for ((dataset, variant), times) in groups {
        let mean = times.iter().sum::<f64>() / times.len() as f64;
        out.push_str(&format!("{},{},{}\n", csv_field(&dataset), variant, mean));
    }
    fs::write(dir.join("timing.csv"), out)?;
    Ok(())
}

/// `shrink_result.json` plus `shrink_scatter.csv`
/// (`column_id,mic,freq,nds_rank`, one row per MIC-filtered feature).
pub fn write_shrink(dir: &Path, result: &ShrinkResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("shrink_result.json"), result)?;

    let mut out = String::from("column_id,mic,freq,nds_rank\n");
    for feature in &result.filtered {
        out.push_str(&format!(
            "{},{},{},{}\n",
            feature.column, feature.mic, feature.freq, feature.nds_rank
        ));
    }
    fs::write(dir.join("shrink_scatter.csv"), out)?;
    Ok(())
}

/// Ground-truth index file for a generated dataset.
pub fn write_truth(path: &Path, informative: &[usize]) -> Result<()> {
    write_json(path, &informative)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}
