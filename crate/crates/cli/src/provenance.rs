use std::collections::BTreeMap;

use serde::Serialize;

/// Tool, version, command, the full parameter set as JSON and a
/// timestamp. Only `timestamp` differs between identical runs.
pub fn provenance<A: Serialize>(command: &str, args: &A) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("tool".into(), "qvlab".into());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("command".into(), command.into());
    m.insert(
        "params".into(),
        serde_json::to_string(args).expect("arguments serialize to JSON"),
    );
    m.insert(
        "timestamp".into(),
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    );
    m
}

/// A JSON report with its provenance.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub provenance: &'a BTreeMap<String, String>,
    pub report: &'a T,
}
