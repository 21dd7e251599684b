use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qvlab_core::campaign::{run_suite, CampaignConfig, Fault, Suite, TrialRecord};
use qvlab_core::io::JsonlWriter;
use serde::Serialize;

use crate::provenance::provenance;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteArg {
    Metric,
    Lemmas,
    Grid,
    All,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: SuiteArg,
    /// Trials per (Q, dimension) or (Q, ε) combination.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 6)]
    pub qmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append JSON lines here instead of writing them to stdout.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Add this offset to every computed squared distance, to check that
    /// the campaign detects a broken build.
    #[arg(long, hide = true)]
    pub inject_fault: Option<f64>,
}

#[derive(Serialize)]
struct Header<'a> {
    provenance: &'a BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    suite: &'a str,
    trials: usize,
    failures: usize,
    min_slack: f64,
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Metric => "metric",
        Suite::Lemmas => "lemmas",
        Suite::Grid => "grid",
    }
}

pub fn run(a: &VerifyArgs) -> Result<(), CliError> {
    let name = serde_json::to_value(a.suite).expect("suite").as_str().unwrap_or("").to_string();
    let suites = Suite::parse(&name).expect("value enum matches the suite names");
    let cfg = CampaignConfig {
        trials: a.trials,
        qmax: a.qmax,
        seed: a.seed,
        fault: Fault {
            dist_offset: a.inject_fault.unwrap_or(0.0),
        },
    };
    let mut sink: JsonlWriter<Box<dyn Write>> = match &a.log {
        Some(p) => JsonlWriter::new(Box::new(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => JsonlWriter::new(Box::new(std::io::stdout().lock())),
    };
    let prov = provenance(&format!("verify {name}"), a);
    sink.write(&Header { provenance: &prov })?;
    let mut first_failure: Option<TrialRecord> = None;
    for s in suites {
        let recs = run_suite(s, &cfg)?;
        for r in &recs {
            sink.write(r)?;
        }
        let failures = recs.iter().filter(|r| !r.ok).count();
        let min_slack = recs.iter().map(|r| r.min_slack).fold(f64::INFINITY, f64::min);
        let summary = Summary {
            suite: suite_name(s),
            trials: recs.len(),
            failures,
            min_slack,
        };
        eprintln!("{}", qvlab_core::io::to_json_string(&summary)?);
        if first_failure.is_none() {
            first_failure = recs.into_iter().find(|r| !r.ok);
        }
    }
    sink.flush()?;
    match first_failure {
        None => Ok(()),
        Some(r) => Err(CliError::VerificationFailed(format!(
            "{} {} q={} dim={} seed={} trial={}: {}",
            r.suite,
            r.check,
            r.q,
            r.dim,
            r.seed,
            r.trial,
            r.detail.unwrap_or_else(|| format!("min_slack = {:e}", r.min_slack))
        ))),
    }
}
