use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};

use tsmiles::codec::{Dialect, Scheme};
use tsmiles::fragment::{CutRule, RootPolicy, RuleKind};

use crate::CliError;

/// Options shared by every command. Each one can also be set in the
/// `--config` file as `key = value`; flags given on the command line win.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// tssa | tsdy | tsid | vanilla
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// mmpa | scaffold | brics-lite
    #[arg(long, global = true)]
    pub rule: Option<String>,
    /// Smallest fragment (heavy atoms) a cut may leave behind.
    #[arg(long, global = true)]
    pub min_fragment_size: Option<usize>,
    /// paper | strict
    #[arg(long, global = true)]
    pub dialect: Option<String>,
    /// canonical | index:N
    #[arg(long, global = true)]
    pub root: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pad truncated t-SMILES instead of rejecting them.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Input file ('-' or absent: stdin).
    #[arg(short, long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (absent: stdout).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Sidecar file for per-line failures (default: <output>.errors, or stderr).
    #[arg(long, global = true)]
    pub errors: Option<PathBuf>,
    /// SMILES file whose molecules count as known when measuring novelty.
    #[arg(long, global = true)]
    pub reference: Option<PathBuf>,
    /// Machine-readable report (JSON lines).
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// key = value file mirroring these flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Pool,
    Ngram,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SMILES lines to t-SMILES lines.
    Encode,
    /// t-SMILES lines to canonical SMILES lines.
    Decode,
    /// Encode, decode and compare every SMILES line.
    Roundtrip,
    /// Generate molecules from a fragment pool or an n-gram model.
    Generate(GenerateArgs),
    /// Token and nesting-depth statistics, optionally descriptor distances.
    Stats(StatsArgs),
    /// Every root choice of every input molecule.
    Augment,
}

#[derive(Debug, Default, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub mode: Option<Mode>,
    /// Number of molecules (pool) or sequences (ngram) to draw.
    #[arg(long)]
    pub count: Option<usize>,
    /// Load a saved pool instead of building one from the input.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub save_pool: Option<PathBuf>,
    /// Load a saved n-gram model instead of training on the input.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Token limit per sampled sequence.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Also write the raw sampled t-SMILES texts here.
    #[arg(long)]
    pub texts: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct StatsArgs {
    /// Second molecule file; adds W1 descriptor distances to the input.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: Scheme,
    /// Whether the scheme/dialect came from a flag or the config file.
    pub scheme_explicit: bool,
    pub dialect: Dialect,
    pub dialect_explicit: bool,
    pub rule: CutRule,
    pub root: RootPolicy,
    pub seed: u64,
    pub lenient: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub errors: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub mode: Mode,
    pub count: usize,
    pub pool: Option<PathBuf>,
    pub save_pool: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
    pub order: usize,
    pub smoothing: f64,
    pub max_len: usize,
    pub texts: Option<PathBuf>,
    pub compare: Option<PathBuf>,
}

const KEYS: [&str; 23] = [
    "scheme",
    "rule",
    "min-fragment-size",
    "dialect",
    "root",
    "seed",
    "lenient",
    "input",
    "output",
    "errors",
    "reference",
    "report",
    "mode",
    "count",
    "pool",
    "save-pool",
    "model",
    "save-model",
    "order",
    "smoothing",
    "max-len",
    "texts",
    "compare",
];

/// Reads `key = value` lines; `#` starts a comment. Keys use the flag
/// spelling, with `_` accepted for `-`.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("{}:{}: unknown key '{key}'", path.display(), i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    fn parse<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Config(format!("config key '{key}': {e}"))),
            None => Ok(None),
        }
    }

    fn name<T: FromStr>(&self, key: &str, flag: Option<String>) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag.or_else(|| self.file.get(key).cloned()) {
            Some(v) => v.parse().map(Some).map_err(|e| CliError::Config(format!("{e}"))),
            None => Ok(None),
        }
    }

    fn path(&self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got '{v}'")),
    }
}

/// Merges flags over the config file and validates every option before
/// any work starts.
pub fn resolve(
    common: CommonArgs,
    generate: Option<&GenerateArgs>,
    stats: Option<&StatsArgs>,
) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let l = Layer { file };
    let scheme: Option<Scheme> = l.name("scheme", common.scheme)?;
    let dialect: Option<Dialect> = l.name("dialect", common.dialect)?;
    let rule_kind: RuleKind = l.name("rule", common.rule)?.unwrap_or(RuleKind::MmpaLite);
    let mut rule = CutRule::new(rule_kind);
    if let Some(n) = l.parse("min-fragment-size", common.min_fragment_size)? {
        rule = rule.with_min_fragment_size(n);
    }
    let root: RootPolicy = l.name("root", common.root)?.unwrap_or_default();
    let lenient = if common.lenient {
        true
    } else {
        match l.file.get("lenient") {
            Some(v) => parse_bool(v).map_err(|e| CliError::Config(format!("config key 'lenient': {e}")))?,
            None => false,
        }
    };
    let g = generate.map_or_else(GenerateArgs::default, |g| GenerateArgs {
        mode: g.mode,
        count: g.count,
        pool: g.pool.clone(),
        save_pool: g.save_pool.clone(),
        model: g.model.clone(),
        save_model: g.save_model.clone(),
        order: g.order,
        smoothing: g.smoothing,
        max_len: g.max_len,
        texts: g.texts.clone(),
    });
    let mode = match g.mode {
        Some(m) => m,
        None => match l.file.get("mode").map(String::as_str) {
            None | Some("pool") => Mode::Pool,
            Some("ngram") => Mode::Ngram,
            Some(other) => return Err(CliError::Config(format!("unknown mode '{other}'"))),
        },
    };
    let order = l.parse("order", g.order)?.unwrap_or(4);
    if !(2..=6).contains(&order) {
        return Err(CliError::Config(format!("order {order} outside 2..=6")));
    }
    let smoothing = l.parse("smoothing", g.smoothing)?.unwrap_or(0.01);
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(CliError::Config("smoothing must be positive".into()));
    }
    let reference = l.path("reference", common.reference);
    if let Some(r) = &reference {
        if !r.is_file() {
            return Err(CliError::Config(format!("reference file {} not found", r.display())));
        }
    }
    let input = l.path("input", common.input).filter(|p| p.as_os_str() != "-");
    if let Some(i) = &input {
        if !i.is_file() {
            return Err(CliError::Config(format!("input file {} not found", i.display())));
        }
    }
    Ok(RunConfig {
        scheme_explicit: scheme.is_some(),
        scheme: scheme.unwrap_or(Scheme::Tsid),
        dialect_explicit: dialect.is_some(),
        dialect: dialect.unwrap_or_default(),
        rule,
        root,
        seed: l.parse("seed", common.seed)?.unwrap_or(0),
        lenient,
        input,
        output: l.path("output", common.output),
        errors: l.path("errors", common.errors),
        reference,
        report: l.path("report", common.report),
        mode,
        count: l.parse("count", g.count)?.unwrap_or(1000),
        pool: l.path("pool", g.pool),
        save_pool: l.path("save-pool", g.save_pool),
        model: l.path("model", g.model),
        save_model: l.path("save-model", g.save_model),
        order,
        smoothing,
        max_len: l.parse("max-len", g.max_len)?.unwrap_or(400),
        texts: l.path("texts", g.texts),
        compare: l.path("compare", stats.and_then(|s| s.compare.clone())),
    })
}
