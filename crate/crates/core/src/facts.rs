//! Machine-readable numeric claims and their verifier.
//!
//! A fact is one concrete, closed claim: a multiplicative order, a
//! divisibility of `p^e - 1` or of `sigma(p^a)`, a Legendre symbol value,
//! or a product-of-ratios inequality against 2. Facts double as regression
//! fixtures (one per line in a tab-separated file) and as the evidence
//! embedded in prune certificates.
//!
//! Verification is total and exact: orders via the order algorithm,
//! divisibilities via modular exponentiation (never full factorization),
//! Legendre symbols via Euler's criterion, inequalities via exact rational
//! comparison. Every record ends up Confirmed or Refuted.
//!
//! Fixture line format (tab-separated, LF, UTF-8):
//!
//! ```text
//! KIND<TAB>EXPR<TAB>EXPECTED<TAB>LOCUS
//! ORDER      (ord 11 25)            5    Lemma 2.1
//! DIVIDES    (powm1 11 5)           3221 Lemma 2.1
//! LEGENDRE   (sym 2 11)             -1   Lemma 2.4
//! INEQUALITY (prod (sigmaratio 3 4) (sigmaratio 5 2) (sigmaratio 11 2)) >2 Lemma 2.1
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::nt::{
    legendre, mult_order, nat, pow_mod, rat, rat_u64, sigma_prime_power_mod, Natural, Rational,
};

/// An integer expression from the closed grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// `p^e - 1`
    PowMinusOne { p: Natural, e: u32 },
    /// `sigma(p^a) = 1 + p + ... + p^a`
    SigmaPp { p: Natural, a: u32 },
}

/// A factor of a product-of-ratios inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RatioTerm {
    /// `sigma(p^a) / p^a`
    SigmaRatio { p: Natural, a: u32 },
    /// `p / (p - 1)`, the supremum of the sigma ratios
    SupRatio { p: Natural },
    /// `(p^e - t) / (c * p^k)` verbatim, for literal transcriptions that
    /// do not reduce to the two canonical shapes
    Raw { p: Natural, e: u32, t: u32, c: Natural, k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    GreaterTwo,
    LessTwo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactPayload {
    Order { base: Natural, modulus: Natural, value: Natural },
    Divides { q: Natural, expr: Expr },
    NotDivides { q: Natural, expr: Expr },
    Legendre { a: BigInt, q: Natural, value: i8 },
    Inequality { terms: Vec<RatioTerm>, inv_d: Option<Natural>, relation: Relation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Unchecked,
    Confirmed,
    Refuted,
}

/// One transcribed claim with its free-text source locus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactRecord {
    pub payload: FactPayload,
    pub locus: String,
    pub status: Status,
}

impl FactRecord {
    pub fn new(payload: FactPayload, locus: &str) -> Self {
        FactRecord { payload, locus: locus.to_string(), status: Status::Unchecked }
    }
}

/// Evaluates one claim exactly; returns the record with status set and a
/// rendering of the recomputed truth (for refutation ledgers).
pub fn verify_fact(rec: &FactRecord) -> (FactRecord, String) {
    let (ok, actual) = evaluate(&rec.payload);
    let mut out = rec.clone();
    out.status = if ok { Status::Confirmed } else { Status::Refuted };
    (out, actual)
}

fn evaluate(payload: &FactPayload) -> (bool, String) {
    match payload {
        FactPayload::Order { base, modulus, value } => match mult_order(base, modulus) {
            Ok(h) => (h == *value, format!("ord_{modulus}({base}) = {h}")),
            Err(e) => (false, format!("order undefined: {e}")),
        },
        FactPayload::Divides { q, expr } => {
            let (div, desc) = divides(q, expr);
            (div, desc)
        }
        FactPayload::NotDivides { q, expr } => {
            let (div, desc) = divides(q, expr);
            (!div, desc)
        }
        FactPayload::Legendre { a, q, value } => match legendre(a, q) {
            Ok(v) => (v == *value, format!("({a}/{q}) = {v}")),
            Err(e) => (false, format!("symbol undefined: {e}")),
        },
        FactPayload::Inequality { terms, inv_d, relation } => {
            let Some(value) = eval_product(terms, inv_d, false) else {
                return (false, "degenerate term (nonpositive numerator or zero denominator)".into());
            };
            // Second route: within the razor-thin window, re-derive every
            // sigma ratio by explicit divisor summation and require exact
            // agreement before trusting the comparison.
            if value > rat_u64(19, 10) && value < rat_u64(21, 10) {
                match eval_product(terms, inv_d, true) {
                    Some(v2) if v2 == value => {}
                    _ => return (false, "evaluation routes disagree".into()),
                }
            }
            let two = rat_u64(2, 1);
            let ok = match relation {
                Relation::GreaterTwo => value > two,
                Relation::LessTwo => value < two,
            };
            (ok, format!("value = {value}"))
        }
    }
}

/// `q | expr`, via modular arithmetic only. Works for composite q too.
fn divides(q: &Natural, expr: &Expr) -> (bool, String) {
    if q.is_zero() {
        return (false, "division by zero".into());
    }
    if q.is_one() {
        return (true, "1 divides everything".into());
    }
    match expr {
        Expr::PowMinusOne { p, e } => {
            let r = pow_mod(p, &nat(u64::from(*e)), q);
            (r.is_one(), format!("{p}^{e} mod {q} = {r}"))
        }
        Expr::SigmaPp { p, a } => {
            let r = sigma_prime_power_mod(p, *a, q);
            (r.is_zero(), format!("sigma({p}^{a}) mod {q} = {r}"))
        }
    }
}

fn eval_term(term: &RatioTerm, by_divisor_sum: bool) -> Option<Rational> {
    match term {
        RatioTerm::SigmaRatio { p, a } => {
            let num = if by_divisor_sum {
                let mut acc = Natural::zero();
                let mut pw = Natural::one();
                for _ in 0..=*a {
                    acc += &pw;
                    pw *= p;
                }
                acc
            } else {
                (p.pow(a + 1) - 1u32) / (p - 1u32)
            };
            Some(rat(num, p.pow(*a)))
        }
        RatioTerm::SupRatio { p } => {
            if p.is_one() {
                return None;
            }
            Some(rat(p.clone(), p - 1u32))
        }
        RatioTerm::Raw { p, e, t, c, k } => {
            let pe = p.pow(*e);
            if pe <= nat(u64::from(*t)) || c.is_zero() {
                return None;
            }
            Some(rat(pe - nat(u64::from(*t)), c * p.pow(*k)))
        }
    }
}

fn eval_product(terms: &[RatioTerm], inv_d: &Option<Natural>, by_divisor_sum: bool) -> Option<Rational> {
    let mut acc = rat_u64(1, 1);
    for t in terms {
        acc *= eval_term(t, by_divisor_sum)?;
    }
    if let Some(d) = inv_d {
        if d.is_zero() {
            return None;
        }
        acc += rat(Natural::one(), d.clone());
    }
    Some(acc)
}

/// Outcome of verifying a whole fixture.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FixtureSummary {
    pub confirmed: Vec<FactRecord>,
    /// Refuted records together with the recomputed truth.
    pub refuted: Vec<(FactRecord, String)>,
    pub parse_errors: Vec<ParseError>,
}

impl FixtureSummary {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.confirmed.len(), self.refuted.len(), self.parse_errors.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Verifies every record of a fixture held in memory. Records verify
/// independently; order of the input is preserved within each bucket.
pub fn verify_fixture_str(text: &str) -> FixtureSummary {
    let mut summary = FixtureSummary::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Ok(rec) => {
                let (rec, actual) = verify_fact(&rec);
                match rec.status {
                    Status::Confirmed => summary.confirmed.push(rec),
                    _ => summary.refuted.push((rec, actual)),
                }
            }
            Err(message) => summary.parse_errors.push(ParseError { line: line_no, message }),
        }
    }
    summary
}

/// Parses one `KIND<TAB>EXPR<TAB>EXPECTED<TAB>LOCUS` line.
pub fn parse_line(line: &str) -> Result<FactRecord, String> {
    let mut cols = line.split('\t');
    let kind = cols.next().ok_or("missing KIND column")?.trim();
    let expr = cols.next().ok_or("missing EXPR column")?.trim();
    let expected = cols.next().ok_or("missing EXPECTED column")?.trim();
    let locus = cols.next().ok_or("missing LOCUS column")?.trim();
    if cols.next().is_some() {
        return Err("too many columns".into());
    }

    let toks = tokenize(expr)?;
    let (sexp, rest) = parse_sexp(&toks)?;
    if !rest.is_empty() {
        return Err("trailing tokens after expression".into());
    }

    let payload = match kind {
        "ORDER" => {
            let args = sexp.expect_head("ord", 2)?;
            FactPayload::Order {
                base: parse_nat(args[0].expect_atom()?)?,
                modulus: parse_nat(args[1].expect_atom()?)?,
                value: parse_nat(expected)?,
            }
        }
        "DIVIDES" | "NOTDIVIDES" => {
            let expr = parse_int_expr(&sexp)?;
            let q = parse_nat(expected)?;
            if kind == "DIVIDES" {
                FactPayload::Divides { q, expr }
            } else {
                FactPayload::NotDivides { q, expr }
            }
        }
        "LEGENDRE" => {
            let args = sexp.expect_head("sym", 2)?;
            let a: BigInt = args[0]
                .expect_atom()?
                .parse()
                .map_err(|_| "bad integer in sym".to_string())?;
            let q = parse_nat(args[1].expect_atom()?)?;
            let value: i8 = match expected {
                "-1" => -1,
                "0" => 0,
                "1" | "+1" => 1,
                other => return Err(format!("bad Legendre value {other}")),
            };
            FactPayload::Legendre { a, q, value }
        }
        "INEQUALITY" => {
            let (terms, inv_d) = parse_inequality_expr(&sexp)?;
            let relation = match expected {
                ">2" => Relation::GreaterTwo,
                "<2" => Relation::LessTwo,
                other => return Err(format!("bad relation {other}")),
            };
            FactPayload::Inequality { terms, inv_d, relation }
        }
        other => return Err(format!("unknown kind {other}")),
    };
    Ok(FactRecord::new(payload, locus))
}

/// Renders a record back into its fixture line.
pub fn to_line(rec: &FactRecord) -> String {
    let (kind, expr, expected) = match &rec.payload {
        FactPayload::Order { base, modulus, value } => {
            ("ORDER", format!("(ord {base} {modulus})"), value.to_string())
        }
        FactPayload::Divides { q, expr } => ("DIVIDES", int_expr_str(expr), q.to_string()),
        FactPayload::NotDivides { q, expr } => ("NOTDIVIDES", int_expr_str(expr), q.to_string()),
        FactPayload::Legendre { a, q, value } => {
            ("LEGENDRE", format!("(sym {a} {q})"), value.to_string())
        }
        FactPayload::Inequality { terms, inv_d, relation } => {
            let terms_str: Vec<String> = terms.iter().map(term_str).collect();
            let prod = format!("(prod {})", terms_str.join(" "));
            let expr = match inv_d {
                Some(d) => format!("(plus {prod} (invd {d}))"),
                None => prod,
            };
            let rel = match relation {
                Relation::GreaterTwo => ">2",
                Relation::LessTwo => "<2",
            };
            ("INEQUALITY", expr, rel.to_string())
        }
    };
    format!("{kind}\t{expr}\t{expected}\t{}", rec.locus)
}

fn int_expr_str(expr: &Expr) -> String {
    match expr {
        Expr::PowMinusOne { p, e } => format!("(powm1 {p} {e})"),
        Expr::SigmaPp { p, a } => format!("(sigmapp {p} {a})"),
    }
}

fn term_str(term: &RatioTerm) -> String {
    match term {
        RatioTerm::SigmaRatio { p, a } => format!("(sigmaratio {p} {a})"),
        RatioTerm::SupRatio { p } => format!("(supratio {p})"),
        RatioTerm::Raw { p, e, t, c, k } => format!("(ratio {p} {e} {t} {c} {k})"),
    }
}

// --- tiny s-expression machinery ---

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn expect_atom(&self) -> Result<&str, String> {
        match self {
            Sexp::Atom(s) => Ok(s),
            Sexp::List(_) => Err("expected atom, found list".into()),
        }
    }

    /// Requires `(head a1 .. aN)` and returns the arguments.
    fn expect_head(&self, head: &str, n: usize) -> Result<&[Sexp], String> {
        match self {
            Sexp::List(items)
                if items.first().map(|h| h.expect_atom()) == Some(Ok(head)) && items.len() == n + 1 =>
            {
                Ok(&items[1..])
            }
            _ => Err(format!("expected ({head} ...) with {n} arguments")),
        }
    }

    fn head(&self) -> Option<&str> {
        match self {
            Sexp::List(items) => items.first().and_then(|h| h.expect_atom().ok()),
            Sexp::Atom(_) => None,
        }
    }
}

fn tokenize(s: &str) -> Result<Vec<String>, String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(core::mem::take(&mut cur));
                }
                toks.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(core::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    Ok(toks)
}

fn parse_sexp(toks: &[String]) -> Result<(Sexp, &[String]), String> {
    match toks.split_first() {
        None => Err("unexpected end of expression".into()),
        Some((t, rest)) if t == "(" => {
            let mut items = Vec::new();
            let mut rest = rest;
            loop {
                match rest.first() {
                    Some(t) if t == ")" => return Ok((Sexp::List(items), &rest[1..])),
                    Some(_) => {
                        let (item, r) = parse_sexp(rest)?;
                        items.push(item);
                        rest = r;
                    }
                    None => return Err("unbalanced parentheses".into()),
                }
            }
        }
        Some((t, _)) if t == ")" => Err("unexpected )".into()),
        Some((t, rest)) => Ok((Sexp::Atom(t.clone()), rest)),
    }
}

fn parse_nat(s: &str) -> Result<Natural, String> {
    s.parse::<Natural>().map_err(|_| format!("bad natural {s}"))
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse::<u32>().map_err(|_| format!("bad exponent {s}"))
}

fn parse_int_expr(sexp: &Sexp) -> Result<Expr, String> {
    match sexp.head() {
        Some("powm1") => {
            let args = sexp.expect_head("powm1", 2)?;
            Ok(Expr::PowMinusOne {
                p: parse_nat(args[0].expect_atom()?)?,
                e: parse_u32(args[1].expect_atom()?)?,
            })
        }
        Some("sigmapp") => {
            let args = sexp.expect_head("sigmapp", 2)?;
            Ok(Expr::SigmaPp {
                p: parse_nat(args[0].expect_atom()?)?,
                a: parse_u32(args[1].expect_atom()?)?,
            })
        }
        _ => Err("expected (powm1 p e) or (sigmapp p a)".into()),
    }
}

fn parse_ratio_term(sexp: &Sexp) -> Result<RatioTerm, String> {
    match sexp.head() {
        Some("sigmaratio") => {
            let args = sexp.expect_head("sigmaratio", 2)?;
            Ok(RatioTerm::SigmaRatio {
                p: parse_nat(args[0].expect_atom()?)?,
                a: parse_u32(args[1].expect_atom()?)?,
            })
        }
        Some("supratio") => {
            let args = sexp.expect_head("supratio", 1)?;
            Ok(RatioTerm::SupRatio { p: parse_nat(args[0].expect_atom()?)? })
        }
        Some("ratio") => {
            let args = sexp.expect_head("ratio", 5)?;
            Ok(RatioTerm::Raw {
                p: parse_nat(args[0].expect_atom()?)?,
                e: parse_u32(args[1].expect_atom()?)?,
                t: parse_u32(args[2].expect_atom()?)?,
                c: parse_nat(args[3].expect_atom()?)?,
                k: parse_u32(args[4].expect_atom()?)?,
            })
        }
        _ => Err("expected (sigmaratio p a), (supratio p) or (ratio p e t c k)".into()),
    }
}

fn parse_inequality_expr(sexp: &Sexp) -> Result<(Vec<RatioTerm>, Option<Natural>), String> {
    match sexp.head() {
        Some("prod") => {
            let Sexp::List(items) = sexp else { unreachable!() };
            let terms: Result<Vec<_>, _> = items[1..].iter().map(parse_ratio_term).collect();
            let terms = terms?;
            if terms.is_empty() {
                return Err("empty product".into());
            }
            Ok((terms, None))
        }
        Some("plus") => {
            let args = sexp.expect_head("plus", 2)?;
            let (terms, none) = parse_inequality_expr(&args[0])?;
            if none.is_some() {
                return Err("nested plus".into());
            }
            let d_args = args[1].expect_head("invd", 1)?;
            Ok((terms, Some(parse_nat(d_args[0].expect_atom()?)?)))
        }
        _ => Err("expected (prod ...) or (plus (prod ...) (invd d))".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn check(line: &str) -> Status {
        let rec = parse_line(line).unwrap();
        verify_fact(&rec).0.status
    }

    #[test]
    fn order_records() {
        assert_eq!(check("ORDER\t(ord 11 25)\t5\tLemma 2.1"), Status::Confirmed);
        assert_eq!(check("ORDER\t(ord 11 25)\t4\ttypo"), Status::Refuted);
        assert_eq!(check("ORDER\t(ord 3 17)\t16\tLemma 2.3"), Status::Confirmed);
        // gcd(10, 25) != 1: undefined order refutes
        assert_eq!(check("ORDER\t(ord 10 25)\t5\tbad"), Status::Refuted);
    }

    #[test]
    fn divides_records() {
        assert_eq!(check("DIVIDES\t(powm1 11 5)\t3221\tLemma 2.1"), Status::Confirmed);
        assert_eq!(check("DIVIDES\t(powm1 5 75)\t71\tLemma 2.1"), Status::Confirmed);
        assert_eq!(check("DIVIDES\t(sigmapp 3 2)\t13\tLemma 2.1"), Status::Confirmed);
        assert_eq!(check("NOTDIVIDES\t(sigmapp 13 2)\t5\tLemma 2.2"), Status::Confirmed);
        assert_eq!(check("DIVIDES\t(powm1 11 5)\t13\tmade up"), Status::Refuted);
    }

    #[test]
    fn legendre_records() {
        assert_eq!(check("LEGENDRE\t(sym 2 11)\t-1\tLemma 2.4"), Status::Confirmed);
        assert_eq!(check("LEGENDRE\t(sym 3 11)\t1\tLemma 2.4"), Status::Confirmed);
        assert_eq!(check("LEGENDRE\t(sym 2 11)\t1\ttypo"), Status::Refuted);
        assert_eq!(check("LEGENDRE\t(sym 4 15)\t1\tbad modulus"), Status::Refuted);
    }

    #[test]
    fn inequality_records() {
        assert_eq!(
            check("INEQUALITY\t(prod (sigmaratio 3 4) (sigmaratio 5 2) (sigmaratio 11 2))\t>2\tLemma 2.1"),
            Status::Confirmed
        );
        assert_eq!(
            check("INEQUALITY\t(plus (prod (sigmaratio 3 2) (supratio 5) (supratio 11) (supratio 167)) (invd 605))\t<2\tLemma 2.1"),
            Status::Confirmed
        );
        // exact same chain with the wrong direction
        assert_eq!(
            check("INEQUALITY\t(plus (prod (sigmaratio 3 2) (supratio 5) (supratio 11) (supratio 167)) (invd 605))\t>2\tflipped"),
            Status::Refuted
        );
    }

    #[test]
    fn fixture_round_trip_and_summary() {
        let text = "\
# comment line

ORDER\t(ord 11 25)\t5\tLemma 2.1
DIVIDES\t(powm1 5 5)\t71\tLemma 2.1
ORDER\t(ord 11 25)\t4\tdeliberate typo
BROKEN LINE
";
        let summary = verify_fixture_str(text);
        assert_eq!(summary.counts(), (2, 1, 1));
        assert_eq!(summary.parse_errors[0].line, 6);

        for rec in summary.confirmed.iter().chain(summary.refuted.iter().map(|(r, _)| r)) {
            let reparsed = parse_line(&to_line(rec)).unwrap();
            assert_eq!(reparsed.payload, rec.payload);
            assert_eq!(reparsed.locus, rec.locus);
        }
    }

    #[test]
    fn empty_fixture_is_all_zero() {
        assert_eq!(verify_fixture_str("").counts(), (0, 0, 0));
        assert_eq!(verify_fixture_str("\n# nothing\n").counts(), (0, 0, 0));
    }

    #[test]
    fn raw_ratio_literals() {
        // (13^3 - 1)/(10 * 13^2) as printed vs the sigma ratio it stands for
        let lit = RatioTerm::Raw { p: nat(13), e: 3, t: 1, c: nat(10), k: 2 };
        let intent = RatioTerm::SigmaRatio { p: nat(13), a: 2 };
        assert_eq!(eval_term(&lit, false).unwrap(), rat_u64(1098, 845));
        assert_eq!(eval_term(&intent, false).unwrap(), rat_u64(183, 169));
    }

    #[test]
    fn divisor_sum_route_agrees() {
        for (p, a) in [(3u64, 4u32), (5, 8), (11, 2), (167, 1), (13, 6)] {
            let t = RatioTerm::SigmaRatio { p: nat(p), a };
            assert_eq!(eval_term(&t, false), eval_term(&t, true));
        }
    }

    #[test]
    fn order_independence() {
        let lines = vec![
            "ORDER\t(ord 11 25)\t5\tA",
            "LEGENDRE\t(sym 2 11)\t-1\tB",
            "DIVIDES\t(powm1 61 5)\t131\tC",
        ];
        let fwd = verify_fixture_str(&lines.join("\n"));
        let mut rev_lines = lines.clone();
        rev_lines.reverse();
        let rev = verify_fixture_str(&rev_lines.join("\n"));
        assert_eq!(fwd.counts(), rev.counts());
    }
}
