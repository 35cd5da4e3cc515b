use anyhow::{Context, Result};
use secp_core::evalgen::build_report;

use super::write_json;
use crate::ReportArgs;

pub fn run(args: ReportArgs) -> Result<()> {
    let report = build_report(&args.manifest)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_json(&args.out.join("report.json"), &report)?;
    let csv = args.out.join("report.csv");
    std::fs::write(&csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    if report.skipped_records > 0 {
        log::warn!("{} malformed manifest line(s) skipped", report.skipped_records);
    }
    log::info!("report written to {}", args.out.display());
    Ok(())
}
