//! IO companion to `defiperf-core`: the brute-force sieve oracle, the
//! structured record format, and config handling for the CLI.

use std::path::Path;

use anyhow::Context;
use defiperf_core::facts::FixtureSummary;

pub mod config;
pub mod oracle;
pub mod record;

/// Verifies every record of a fixture file (see the core `facts` module
/// for the line format).
pub fn verify_fixture_file(path: &Path) -> anyhow::Result<FixtureSummary> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(defiperf_core::facts::verify_fixture_str(&text))
}

/// Plain RFC 3339 UTC timestamp without pulling in a time crate.
pub fn utc_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // civil-from-days conversion (Howard Hinnant's algorithm)
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, rem % 3600 / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let mo = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if mo <= 2 { y + 1 } else { y };
    format!("{y:04}-{mo:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}
