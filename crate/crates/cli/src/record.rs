//! Structured run records: one self-describing JSON document per run.
//!
//! Every payload round-trips losslessly through serialization, and with a
//! fixed seed the emitted bytes are identical across runs (the timestamp
//! is then left null and reported on the diagnostic stream instead).

use defiperf_core::facts::FixtureSummary;
use defiperf_core::nt::Factorization;
use defiperf_core::prune::{
    ConstraintConflict, ExponentStatus, PruneCertificate, RuleOutcome, SubtreeSpec,
};
use defiperf_core::search::{SearchConfig, SearchReport};
use defiperf_core::DpWitness;
use serde::{Deserialize, Serialize};

use crate::oracle::{SieveEntry, SieveResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub engine_version: String,
    /// Command line echo.
    pub command: Vec<String>,
    /// RFC 3339 wall time; null when a seed was fixed for reproducibility.
    pub timestamp: Option<String>,
    pub seed: u64,
    pub payload: Payload,
    pub exit_status: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Search(SearchReportDoc),
    Sieve(SieveResultDoc),
    Facts(FactSummaryDoc),
    Verify(VerifyDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationDoc {
    pub value: String,
    /// `(prime, exponent)` pairs, primes as decimal strings.
    pub factors: Vec<(String, u32)>,
}

impl From<&Factorization> for FactorizationDoc {
    fn from(f: &Factorization) -> Self {
        FactorizationDoc {
            value: f.value().to_string(),
            factors: f
                .factors()
                .iter()
                .map(|pp| (pp.prime.to_string(), pp.exp))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub n: FactorizationDoc,
    pub d: FactorizationDoc,
    pub codivisor: FactorizationDoc,
    pub sigma: String,
}

impl From<&DpWitness> for WitnessDoc {
    fn from(w: &DpWitness) -> Self {
        WitnessDoc {
            n: w.n().into(),
            d: w.deficient_divisor().into(),
            codivisor: w.codivisor().into(),
            sigma: w.sigma_n().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDoc {
    pub prime: String,
    /// `[min, max]`; equal entries mean a fixed exponent.
    pub exponent: (u32, u32),
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub positions: Vec<PositionDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pending: Option<PendingDoc>,
    pub forced_divisors: Vec<String>,
    pub residue_class: (String, String),
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_min: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_max: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDoc {
    pub count: usize,
    pub prime_min: u64,
    pub prime_max: u64,
    pub exp_min: u32,
    pub exp_max: u32,
}

impl From<&SubtreeSpec> for FrameDoc {
    fn from(spec: &SubtreeSpec) -> Self {
        FrameDoc {
            positions: spec
                .positions
                .iter()
                .map(|p| PositionDoc {
                    prime: p.prime.to_string(),
                    exponent: match p.status {
                        ExponentStatus::Fixed(a) => (a, a),
                        ExponentStatus::Free { min, max } => (min, max),
                    },
                    beta: format!("{:?}", p.beta),
                })
                .collect(),
            pending: spec.pending.as_ref().map(|t| PendingDoc {
                count: t.count,
                prime_min: t.prime_min,
                prime_max: t.prime_max,
                exp_min: t.exp_min,
                exp_max: t.exp_max,
            }),
            forced_divisors: spec
                .constraints
                .forced_divisors()
                .iter()
                .map(|q| q.to_string())
                .collect(),
            residue_class: {
                let (r, m) = spec.constraints.residue_class();
                (r.to_string(), m.to_string())
            },
            d_min: spec.constraints.d_min().map(|v| v.to_string()),
            d_max: spec.constraints.d_max().map(|v| v.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub rule: String,
    pub frame: FrameDoc,
    /// The exact numbers the decision compared, rendered per rule.
    pub comparison: ComparisonDoc,
    /// Elementary facts in fixture-line form, re-verifiable offline.
    pub facts: Vec<String>,
    /// Forced divisors above 2^64, where primality is probable (fixed
    /// strong bases plus a Lucas check) rather than deterministic.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub probable_primes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonDoc {
    BoundAboveTwo { lower: String },
    BoundBelowTwo { upper: String },
    ResidueClash { class_a: (String, String), class_b: (String, String) },
    BoundClash { min_admissible: String, d_max: String },
    NoCarrier { q: String },
    OrderPropagation { q: String, carrier: String, requirement: String },
    QuadraticResidue { q: String, target: i8, symbols: Vec<i8> },
}

impl From<&PruneCertificate> for CertificateDoc {
    fn from(cert: &PruneCertificate) -> Self {
        let comparison = match &cert.outcome {
            RuleOutcome::BoundAboveTwo { lower } => {
                ComparisonDoc::BoundAboveTwo { lower: lower.to_string() }
            }
            RuleOutcome::BoundBelowTwo { upper } => {
                ComparisonDoc::BoundBelowTwo { upper: upper.to_string() }
            }
            RuleOutcome::ForcedDivisorContradiction { conflict } => conflict_doc(conflict),
            RuleOutcome::OrderContradiction { q, carrier, conflict } => match (carrier, conflict) {
                (Some((p, m)), _) => ComparisonDoc::OrderPropagation {
                    q: q.to_string(),
                    carrier: p.to_string(),
                    requirement: m.to_string(),
                },
                (None, Some(c)) => conflict_doc(c),
                (None, None) => ComparisonDoc::NoCarrier { q: q.to_string() },
            },
            RuleOutcome::QuadraticResidueContradiction { q, target, symbols } => {
                ComparisonDoc::QuadraticResidue {
                    q: q.to_string(),
                    target: *target,
                    symbols: symbols.clone(),
                }
            }
        };
        CertificateDoc {
            rule: cert.outcome.rule_name().to_string(),
            frame: (&cert.spec).into(),
            comparison,
            facts: cert.facts.iter().map(defiperf_core::facts::to_line).collect(),
            probable_primes: cert
                .spec
                .constraints
                .forced_divisors()
                .iter()
                .filter(|q| q.bits() > 64)
                .map(|q| q.to_string())
                .collect(),
        }
    }
}

fn conflict_doc(c: &ConstraintConflict) -> ComparisonDoc {
    match c {
        ConstraintConflict::ResidueClash { residue_a, modulus_a, residue_b, modulus_b } => {
            ComparisonDoc::ResidueClash {
                class_a: (residue_a.to_string(), modulus_a.to_string()),
                class_b: (residue_b.to_string(), modulus_b.to_string()),
            }
        }
        ConstraintConflict::BoundClash { min_admissible, d_max } => ComparisonDoc::BoundClash {
            min_admissible: min_admissible.to_string(),
            d_max: d_max.to_string(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub omega: usize,
    pub odd: bool,
    pub prime_min: Vec<u64>,
    pub prime_max: u64,
    pub exp_max: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value_max: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair_presets: Option<Vec<(u64, u64)>>,
    pub rules: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_leaves: Option<u64>,
    pub seed: u64,
}

impl From<&SearchConfig> for ConfigDoc {
    fn from(cfg: &SearchConfig) -> Self {
        let mut rules = Vec::new();
        if cfg.rules.bound {
            rules.push("bound".to_string());
        }
        if cfg.rules.forced_divisor {
            rules.push("forced-divisor".to_string());
        }
        if cfg.rules.order {
            rules.push("order".to_string());
        }
        if cfg.rules.quadratic_residue {
            rules.push("quadratic-residue".to_string());
        }
        ConfigDoc {
            omega: cfg.omega,
            odd: cfg.odd_only,
            prime_min: cfg.prime_min.clone(),
            prime_max: cfg.prime_max,
            exp_max: cfg.exp_max,
            value_max: cfg.value_max.as_ref().map(|v| v.to_string()),
            pair_presets: cfg.pair_presets.clone(),
            rules,
            max_leaves: cfg.max_leaves,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReportDoc {
    pub config: ConfigDoc,
    pub witnesses: Vec<WitnessDoc>,
    pub certificates: Vec<CertificateDoc>,
    pub leaves_evaluated: u64,
    pub subtrees_pruned: u64,
    pub leaves_pruned: String,
    pub leaves_skipped_value_cap: String,
    pub total_leaves: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<String>,
}

impl From<&SearchReport> for SearchReportDoc {
    fn from(r: &SearchReport) -> Self {
        SearchReportDoc {
            config: (&r.config).into(),
            witnesses: r.witnesses.iter().map(Into::into).collect(),
            certificates: r.certificates.iter().map(Into::into).collect(),
            leaves_evaluated: r.leaves_evaluated,
            subtrees_pruned: r.subtrees_pruned,
            leaves_pruned: r.leaves_pruned.to_string(),
            leaves_skipped_value_cap: r.leaves_skipped_value_cap.to_string(),
            total_leaves: r.total_leaves.to_string(),
            complete: r.complete,
            trace: r.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveEntryDoc {
    pub n: u64,
    pub d: u64,
    pub codivisor: u64,
    pub omega: u32,
    pub parity: String,
}

impl From<&SieveEntry> for SieveEntryDoc {
    fn from(e: &SieveEntry) -> Self {
        SieveEntryDoc {
            n: e.n,
            d: e.d,
            codivisor: e.codivisor,
            omega: e.omega,
            parity: if e.is_odd { "odd".into() } else { "even".into() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveResultDoc {
    pub limit: u64,
    pub odd_only: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub omega_equals: Option<u32>,
    pub count: usize,
    pub entries: Vec<SieveEntryDoc>,
}

impl From<&SieveResult> for SieveResultDoc {
    fn from(r: &SieveResult) -> Self {
        SieveResultDoc {
            limit: r.limit,
            odd_only: r.filters.odd_only,
            omega_equals: r.filters.omega_equals,
            count: r.entries.len(),
            entries: r.entries.iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactLineDoc {
    pub record: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub actual: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactSummaryDoc {
    pub confirmed: usize,
    pub refuted: usize,
    pub parse_errors: usize,
    pub records: Vec<FactLineDoc>,
    pub parse_error_messages: Vec<String>,
}

impl From<&FixtureSummary> for FactSummaryDoc {
    fn from(s: &FixtureSummary) -> Self {
        let mut records: Vec<FactLineDoc> = Vec::new();
        for rec in &s.confirmed {
            records.push(FactLineDoc {
                record: defiperf_core::facts::to_line(rec),
                status: "confirmed".into(),
                actual: None,
            });
        }
        for (rec, actual) in &s.refuted {
            records.push(FactLineDoc {
                record: defiperf_core::facts::to_line(rec),
                status: "refuted".into(),
                actual: Some(actual.clone()),
            });
        }
        FactSummaryDoc {
            confirmed: s.confirmed.len(),
            refuted: s.refuted.len(),
            parse_errors: s.parse_errors.len(),
            records,
            parse_error_messages: s.parse_errors.iter().map(|e| e.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDoc {
    pub input: String,
    pub deficient_perfect: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<WitnessDoc>,
    pub abundancy: String,
}

/// Renders the record as the canonical output document.
pub fn render(record: &RunRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("serializable record");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use defiperf_core::search::enumerate;

    #[test]
    fn record_round_trip() {
        let cfg = SearchConfig { prime_max: 20, exp_max: 4, omega: 2, ..Default::default() };
        let report = enumerate(&cfg).unwrap();
        let record = RunRecord {
            schema_version: SCHEMA_VERSION,
            engine_version: defiperf_core::ENGINE_VERSION.to_string(),
            command: vec!["search".into(), "--omega".into(), "2".into()],
            timestamp: None,
            seed: 1,
            payload: Payload::Search((&report).into()),
            exit_status: 0,
        };
        let text = render(&record);
        let parsed: RunRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, record);
    }

    #[test]
    fn sieve_round_trip() {
        let sieve = crate::oracle::enumerate_dp(500, crate::oracle::Filters::default());
        let record = RunRecord {
            schema_version: SCHEMA_VERSION,
            engine_version: defiperf_core::ENGINE_VERSION.to_string(),
            command: vec!["oracle".into()],
            timestamp: Some("2026-01-01T00:00:00Z".into()),
            seed: 1,
            payload: Payload::Sieve((&sieve).into()),
            exit_status: 0,
        };
        let parsed: RunRecord = serde_json::from_str(&render(&record)).unwrap();
        assert_eq!(parsed, record);
    }
}
