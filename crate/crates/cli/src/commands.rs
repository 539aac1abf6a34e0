use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use tsmiles::assemble::{decode_with_report, AssemblyError, DecodeError, FailReason, SelectionPolicy};
use tsmiles::chem::{canonical_smiles, parse_smiles, validate_valence, Molecule};
use tsmiles::codec::{self, enumerate_roots, header_line, parse_header, Dialect, Scheme, TString};
use tsmiles::generator::{build_pool, decode_batch, sample_ngram, sample_pool, train_ngram, FragmentPool};
use tsmiles::metrics::{distribution_report, nesting_depth, token_distribution};
use tsmiles::{GenerationReport, NGramModel};

use crate::config::{Mode, RunConfig};
use crate::{CliError, Outcome};

/// A numbered input line (1-based).
type Line = (usize, String);

#[derive(Debug, Serialize)]
struct Failure {
    line: usize,
    stage: &'static str,
    message: String,
}

fn read_text(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| CliError::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

/// Non-blank lines that are not comments; only the first whitespace-separated
/// field is kept, so `SMILES name` files work.
fn content_lines(text: &str) -> Vec<Line> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                return None;
            }
            l.split_whitespace().next().map(|f| (i + 1, f.to_string()))
        })
        .collect()
}

fn header_of(text: &str) -> Option<(Scheme, Dialect)> {
    text.lines().map(str::trim).filter(|l| l.starts_with('#')).find_map(parse_header)
}

fn input_lines(cfg: &RunConfig) -> Result<Vec<Line>, CliError> {
    let lines = content_lines(&read_text(cfg.input.as_deref())?);
    if lines.is_empty() {
        return Err(CliError::Failed("input has no lines".into()));
    }
    Ok(lines)
}

fn read_smiles_set(path: &Path) -> Result<BTreeSet<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(content_lines(&text)
        .par_iter()
        .filter_map(|(_, s)| parse_smiles(s).ok().map(|m| canonical_smiles(&m)))
        .collect())
}

fn read_molecules(path: &Path) -> Result<Vec<Molecule>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mols: Vec<Molecule> = content_lines(&text).par_iter().filter_map(|(_, s)| parse_smiles(s).ok()).collect();
    if mols.is_empty() {
        return Err(CliError::Failed(format!("{}: no readable molecules", path.display())));
    }
    Ok(mols)
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn emit(path: Option<&Path>, lines: &[String]) -> Result<(), CliError> {
    let mut body = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for l in lines {
        body.push_str(l);
        body.push('\n');
    }
    match path {
        Some(p) => write_file(p, &body),
        None => io::stdout().lock().write_all(body.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Per-line failures go to `--errors`, else `<output>.errors`, else stderr.
fn sidecar(cfg: &RunConfig, failures: &[Failure]) -> Result<(), CliError> {
    if failures.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = failures.iter().map(|f| format!("{}\t{}\t{}", f.line, f.stage, f.message)).collect();
    let path = cfg.errors.clone().or_else(|| {
        cfg.output.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".errors");
            s.into()
        })
    });
    match path {
        Some(p) => emit(Some(&p), &lines),
        None => {
            for l in &lines {
                eprintln!("{l}");
            }
            Ok(())
        }
    }
}

fn report_lines<S: Serialize>(cfg: &RunConfig, records: &[S]) -> Result<(), CliError> {
    let Some(path) = &cfg.report else { return Ok(()) };
    let lines: Vec<String> = records.iter().map(|r| serde_json::to_string(r).expect("serializable record")).collect();
    emit(Some(path), &lines)
}

fn summary_to_stderr(report: &GenerationReport) {
    for l in report.lines() {
        eprintln!("{l}");
    }
}

fn fail(line: usize, stage: &'static str, e: impl ToString) -> Failure {
    Failure { line, stage, message: e.to_string() }
}

fn encode_line(cfg: &RunConfig, smiles: &str) -> Result<TString, (&'static str, String)> {
    let m = parse_smiles(smiles).map_err(|e| ("parse", e.to_string()))?;
    codec::encode(&m, cfg.scheme, &cfg.rule, cfg.dialect, cfg.root).map_err(|e| ("encode", e.to_string()))
}

pub fn encode(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lines = input_lines(cfg)?;
    let results: Vec<Result<TString, (&'static str, String)>> =
        lines.par_iter().map(|(_, s)| encode_line(cfg, s)).collect();
    let mut out = vec![header_line(cfg.scheme, cfg.dialect)];
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for ((no, _), r) in lines.iter().zip(&results) {
        match r {
            Ok(t) => {
                out.push(t.text.clone());
                records.push(json!({"line": no, "ok": true, "text": t.text}));
            }
            Err((stage, msg)) => {
                records.push(json!({"line": no, "ok": false, "stage": stage, "error": msg}));
                failures.push(fail(*no, stage, msg));
            }
        }
    }
    emit(cfg.output.as_deref(), &out)?;
    sidecar(cfg, &failures)?;
    report_lines(cfg, &records)?;
    Ok(Outcome { total: lines.len(), failed: failures.len() })
}

fn invalid() -> DecodeError {
    DecodeError::Assembly(AssemblyError {
        stage: "validate",
        parent: None,
        child: None,
        reason: FailReason::ValenceViolation,
    })
}

fn stage_of(e: &DecodeError) -> &'static str {
    match e {
        DecodeError::Parse(_) => "parse",
        DecodeError::Fragment { .. } => "fragment",
        DecodeError::NodeRoles | DecodeError::Assembly(_) => "assemble",
    }
}

pub fn decode(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let text = read_text(cfg.input.as_deref())?;
    let header = header_of(&text);
    let scheme = match header {
        Some((s, _)) if !cfg.scheme_explicit => s,
        _ => cfg.scheme,
    };
    let dialect = match header {
        Some((_, d)) if !cfg.dialect_explicit => d,
        _ => cfg.dialect,
    };
    let lines = content_lines(&text);
    if lines.is_empty() {
        return Err(CliError::Failed("input has no lines".into()));
    }
    let results: Vec<_> = lines
        .par_iter()
        .enumerate()
        .map(|(i, (_, t))| {
            let ts = TString { text: t.clone(), scheme, dialect };
            let (m, report) =
                decode_with_report(&ts, SelectionPolicy::Random(cfg.seed.wrapping_add(i as u64)), cfg.lenient)?;
            if validate_valence(&m).ok {
                Ok((canonical_smiles(&m), report))
            } else {
                Err(invalid())
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for ((no, _), r) in lines.iter().zip(&results) {
        match r {
            Ok((smi, report)) => {
                out.push(smi.clone());
                records.push(json!({"line": no, "ok": true, "smiles": smi, "report": report}));
            }
            Err(e) => {
                records.push(json!({"line": no, "ok": false, "stage": stage_of(e), "error": e.to_string()}));
                failures.push(fail(*no, stage_of(e), e));
            }
        }
    }
    emit(cfg.output.as_deref(), &out)?;
    sidecar(cfg, &failures)?;
    report_lines(cfg, &records)?;
    Ok(Outcome { total: lines.len(), failed: failures.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Status {
    Identical,
    Differs,
    KekulizationExempt,
    Failed,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Identical => "identical",
            Status::Differs => "differs",
            Status::KekulizationExempt => "kekulization-exempt",
            Status::Failed => "failed",
        }
    }
}

/// Element symbol to atom count, hydrogens included.
fn formula(m: &Molecule) -> BTreeMap<&'static str, usize> {
    let mut f = BTreeMap::new();
    for (i, a) in m.atoms().iter().enumerate() {
        *f.entry(a.element.symbol()).or_insert(0) += 1;
        *f.entry("H").or_insert(0) += m.total_h(i) as usize;
    }
    f
}

fn roundtrip_line(cfg: &RunConfig, smiles: &str, seed: u64) -> (Status, String, String) {
    let m = match parse_smiles(smiles) {
        Ok(m) => m,
        Err(e) => return (Status::Failed, String::new(), format!("parse: {e}")),
    };
    let source = canonical_smiles(&m);
    let t = match codec::encode(&m, cfg.scheme, &cfg.rule, cfg.dialect, cfg.root) {
        Ok(t) => t,
        Err(e) => return (Status::Failed, source, format!("encode: {e}")),
    };
    match decode_with_report(&t, SelectionPolicy::Random(seed), cfg.lenient) {
        Ok((d, _)) => {
            let back = canonical_smiles(&d);
            let status = if back == source {
                Status::Identical
            } else if cfg.scheme == Scheme::Tsdy && formula(&d) == formula(&m) && validate_valence(&d).ok {
                Status::Differs
            } else if cfg.scheme == Scheme::Tsdy {
                Status::Failed
            } else {
                Status::Differs
            };
            (status, source, back)
        }
        Err(DecodeError::Assembly(AssemblyError { reason: FailReason::KekulizationFailed, .. })) => {
            (Status::KekulizationExempt, source, "kekulization failed".into())
        }
        Err(e) => (Status::Failed, source, e.to_string()),
    }
}

/// TSDY may join its fragments differently from the source; such lines
/// count as `differs` and pass when the atom multiset is unchanged.
pub fn roundtrip(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lines = input_lines(cfg)?;
    let results: Vec<(Status, String, String)> = lines
        .par_iter()
        .enumerate()
        .map(|(i, (_, s))| roundtrip_line(cfg, s, cfg.seed.wrapping_add(i as u64)))
        .collect();
    let mut tally: BTreeMap<Status, usize> = BTreeMap::new();
    let mut per_line = Vec::new();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((no, _), (status, source, back)) in lines.iter().zip(&results) {
        *tally.entry(*status).or_insert(0) += 1;
        per_line.push(format!("{no}\t{}\t{source}\t{back}", status.name()));
        records.push(json!({"line": no, "status": status, "source": source, "decoded": back}));
        if *status == Status::Failed {
            failures.push(fail(*no, "roundtrip", back));
        }
    }
    if cfg.output.is_some() {
        emit(cfg.output.as_deref(), &per_line)?;
    }
    sidecar(cfg, &failures)?;
    report_lines(cfg, &records)?;
    let get = |s| tally.get(&s).copied().unwrap_or(0);
    let summary: Vec<String> = [Status::Identical, Status::Differs, Status::KekulizationExempt, Status::Failed]
        .iter()
        .map(|s| format!("{}\t{}", s.name(), get(*s)))
        .collect();
    emit(None, &summary)?;
    let bad = get(Status::Failed) + if cfg.scheme == Scheme::Tsdy { 0 } else { get(Status::Differs) };
    Ok(Outcome { total: lines.len(), failed: bad })
}

pub fn generate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let reference = cfg.reference.as_deref().map(read_smiles_set).transpose()?;
    match cfg.mode {
        Mode::Pool => generate_pool(cfg, reference),
        Mode::Ngram => generate_ngram(cfg, reference),
    }
}

fn corpus_set(lines: &[Line]) -> BTreeSet<String> {
    lines.par_iter().filter_map(|(_, s)| parse_smiles(s).ok().map(|m| canonical_smiles(&m))).collect()
}

fn finish_generation(cfg: &RunConfig, mols: &[Molecule], report: &GenerationReport) -> Result<Outcome, CliError> {
    let out: Vec<String> = mols.iter().map(canonical_smiles).collect();
    emit(cfg.output.as_deref(), &out)?;
    summary_to_stderr(report);
    if let Some(p) = &cfg.report {
        write_file(p, &format!("{}\n", serde_json::to_string(report).expect("serializable report")))?;
    }
    let failed = if report.valid == 0 { report.attempted } else { 0 };
    Ok(Outcome { total: report.attempted, failed })
}

fn generate_pool(cfg: &RunConfig, reference: Option<BTreeSet<String>>) -> Result<Outcome, CliError> {
    let (pool, corpus) = match &cfg.pool {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let pool = FragmentPool::load(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            (pool, None)
        }
        None => {
            let lines = input_lines(cfg)?;
            let smiles: Vec<&str> = lines.iter().map(|(_, s)| s.as_str()).collect();
            let pool = build_pool(&smiles, cfg.scheme, &cfg.rule).map_err(|e| CliError::Failed(e.to_string()))?;
            let failures: Vec<Failure> = pool.skipped.iter().map(|(i, why)| fail(lines[*i].0, "pool", why)).collect();
            sidecar(cfg, &failures)?;
            (pool, Some(corpus_set(&lines)))
        }
    };
    if let Some(p) = &cfg.save_pool {
        write_file(p, &pool.save())?;
    }
    let reference = reference.or(corpus);
    let (mols, report) = sample_pool::<f64>(&pool, cfg.seed, cfg.count, reference.as_ref())
        .map_err(|e| CliError::Failed(e.to_string()))?;
    finish_generation(cfg, &mols, &report)
}

fn generate_ngram(cfg: &RunConfig, reference: Option<BTreeSet<String>>) -> Result<Outcome, CliError> {
    let (model, corpus) = match &cfg.model {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let model = NGramModel::load(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            (model, None)
        }
        None => {
            let text = read_text(cfg.input.as_deref())?;
            let lines = content_lines(&text);
            if lines.is_empty() {
                return Err(CliError::Failed("input has no lines".into()));
            }
            let (texts, corpus) = match header_of(&text) {
                Some((scheme, dialect)) => {
                    let texts = lines.iter().map(|(_, t)| TString { text: t.clone(), scheme, dialect }).collect();
                    (texts, None)
                }
                None => {
                    let encoded: Vec<_> = lines.par_iter().map(|(_, s)| encode_line(cfg, s)).collect();
                    let failures: Vec<Failure> = lines
                        .iter()
                        .zip(&encoded)
                        .filter_map(|((no, _), r)| r.as_ref().err().map(|(stage, msg)| fail(*no, stage, msg)))
                        .collect();
                    sidecar(cfg, &failures)?;
                    let texts: Vec<TString> = encoded.into_iter().filter_map(Result::ok).collect();
                    (texts, Some(corpus_set(&lines)))
                }
            };
            let model = train_ngram(&texts, cfg.order, cfg.smoothing).map_err(|e| CliError::Failed(e.to_string()))?;
            (model, corpus)
        }
    };
    if let Some(p) = &cfg.save_model {
        write_file(p, &model.save())?;
    }
    let sampled = sample_ngram(&model, cfg.seed, cfg.count, cfg.max_len);
    if let Some(p) = &cfg.texts {
        let mut lines = vec![header_line(model.scheme, model.dialect)];
        lines.extend(sampled.iter().cloned());
        emit(Some(p), &lines)?;
    }
    let texts: Vec<TString> =
        sampled.into_iter().map(|text| TString { text, scheme: model.scheme, dialect: model.dialect }).collect();
    let reference = reference.or(corpus);
    let outcome = decode_batch::<f64>(&texts, SelectionPolicy::Random(cfg.seed), true, reference.as_ref());
    let mols: Vec<Molecule> = outcome.molecules().cloned().collect();
    finish_generation(cfg, &mols, &outcome.report)
}

fn histogram_lines<S: AsRef<str> + Sync>(set: &str, texts: &[S]) -> Result<Vec<String>, CliError> {
    let tokens = token_distribution::<f64, S>(texts).map_err(|e| CliError::Failed(format!("{set}: {e}")))?;
    let depth = nesting_depth::<f64, S>(texts).map_err(|e| CliError::Failed(format!("{set}: {e}")))?;
    let mut out = Vec::new();
    for (cat, (n, f)) in &tokens.entries {
        out.push(format!("token\t{set}\t{cat}\t{n}\t{f:.6}"));
    }
    out.push(format!("paren_fraction\t{set}\t{:.6}", tokens.paren_fraction()));
    for (d, (n, f)) in &depth.depths {
        out.push(format!("depth\t{set}\t{d}\t{n}\t{f:.6}"));
    }
    out.push(format!("depth_0_2\t{set}\t{:.6}", depth.bucket_0_2()));
    out.push(format!("depth_3_5\t{set}\t{:.6}", depth.bucket_3_5()));
    out.push(format!("depth_6_plus\t{set}\t{:.6}", depth.bucket_6_plus()));
    Ok(out)
}

/// Histograms of the input texts. A SMILES input with an explicit scheme is
/// also encoded, and the encoded set gets its own block for comparison.
pub fn stats(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let text = read_text(cfg.input.as_deref())?;
    let lines = content_lines(&text);
    if lines.is_empty() {
        return Err(CliError::Failed("input has no lines".into()));
    }
    let texts: Vec<&str> = lines.iter().map(|(_, t)| t.as_str()).collect();
    let mut out = histogram_lines("input", &texts)?;
    let mut failures = Vec::new();
    if header_of(&text).is_none() && cfg.scheme_explicit && cfg.scheme != Scheme::Vanilla {
        let encoded: Vec<_> = lines.par_iter().map(|(_, s)| encode_line(cfg, s)).collect();
        let mut texts = Vec::new();
        for ((no, _), r) in lines.iter().zip(encoded) {
            match r {
                Ok(t) => texts.push(t.text),
                Err((stage, msg)) => failures.push(fail(*no, stage, msg)),
            }
        }
        if !texts.is_empty() {
            out.extend(histogram_lines(cfg.scheme.name(), &texts)?);
        }
    }
    if let Some(other) = &cfg.compare {
        let ours: Vec<Molecule> = lines.par_iter().filter_map(|(_, s)| parse_smiles(s).ok()).collect();
        if ours.is_empty() {
            return Err(CliError::Failed("input has no readable molecules to compare".into()));
        }
        let theirs = read_molecules(other)?;
        let report = distribution_report::<f64>(&ours, &theirs).map_err(|e| CliError::Failed(e.to_string()))?;
        out.extend(report.lines());
    }
    emit(cfg.output.as_deref(), &out)?;
    sidecar(cfg, &failures)?;
    if cfg.report.is_some() {
        let records: Vec<_> = out.iter().map(|l| l.split('\t').collect::<Vec<_>>()).collect();
        report_lines(cfg, &records)?;
    }
    Ok(Outcome { total: lines.len(), failed: failures.len() })
}

pub fn augment(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lines = input_lines(cfg)?;
    let results: Vec<Result<Vec<TString>, (&'static str, String)>> = lines
        .par_iter()
        .map(|(_, s)| {
            let m = parse_smiles(s).map_err(|e| ("parse", e.to_string()))?;
            enumerate_roots(&m, cfg.scheme, &cfg.rule, cfg.dialect).map_err(|e| ("encode", e.to_string()))
        })
        .collect();
    let mut out = vec![header_line(cfg.scheme, cfg.dialect)];
    let mut failures = Vec::new();
    let mut records = Vec::new();
    for ((no, _), r) in lines.iter().zip(&results) {
        match r {
            Ok(ts) => {
                for t in ts {
                    out.push(format!("{no}\t{}", t.text));
                }
                records.push(json!({"line": no, "ok": true, "roots": ts.len()}));
            }
            Err((stage, msg)) => {
                records.push(json!({"line": no, "ok": false, "stage": stage, "error": msg}));
                failures.push(fail(*no, stage, msg));
            }
        }
    }
    emit(cfg.output.as_deref(), &out)?;
    sidecar(cfg, &failures)?;
    report_lines(cfg, &records)?;
    Ok(Outcome { total: lines.len(), failed: failures.len() })
}
