use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use spv_core::session::{read_records, summary_from_records, TrialRecord};
use spv_core::AnalysisReport;

use crate::io::{expand_inputs, write_atomic};
use crate::CliError;

#[derive(Args, Clone, Debug)]
pub struct AnalyzeArgs {
    /// Trial-log CSV files, or directories whose `*.csv` files are read
    /// (not recursively).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Where `analysis.json`, `report.txt`, `plot_data.csv` and
    /// `summary.json` go.
    #[arg(long, short, default_value = "spv-analysis")]
    pub out: PathBuf,
    /// Significance level for the ANOVA and Tukey tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct AnalyzeOutput {
    pub records: Vec<TrialRecord>,
    pub report: AnalysisReport,
}

/// Reads every log; a trial seen twice is an error (typically the combined
/// `trials.csv` passed together with the per-block files).
pub fn load_logs(inputs: &[PathBuf]) -> Result<Vec<TrialRecord>, CliError> {
    let files = expand_inputs(inputs, &["csv"])?;
    if files.is_empty() {
        return Err(CliError::Usage("no CSV trial logs among the inputs".into()));
    }
    let mut records = Vec::new();
    let mut seen: HashMap<(String, String, String, usize), PathBuf> = HashMap::new();
    for path in files {
        let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        let rs = read_records(std::io::BufReader::new(file)).map_err(|source| CliError::Input {
            path: path.clone(),
            source,
        })?;
        for r in rs {
            let key = (r.session_id.clone(), r.test.as_str().to_owned(), r.condition.clone(), r.trial);
            if let Some(first) = seen.get(&key) {
                return Err(CliError::Runtime(format!(
                    "{}: trial {} of block ({}, {}, {}) already read from {}",
                    path.display(),
                    r.trial,
                    r.session_id,
                    r.test,
                    r.condition,
                    first.display()
                )));
            }
            seen.insert(key, path.clone());
            records.push(r);
        }
    }
    Ok(records)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalyzeOutput, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Usage("--alpha must lie in (0, 1)".into()));
    }
    let records = load_logs(&args.inputs)?;
    let report = spv_core::analyze(&records, args.alpha)?;
    let summary = summary_from_records(&records)?;
    write_atomic(&args.out.join("analysis.json"), report.to_json()?.as_bytes())?;
    write_atomic(&args.out.join("report.txt"), report.to_text().as_bytes())?;
    write_atomic(&args.out.join("plot_data.csv"), report.plot_csv().as_bytes())?;
    write_atomic(&args.out.join("summary.json"), summary.to_json()?.as_bytes())?;
    Ok(AnalyzeOutput { records, report })
}
