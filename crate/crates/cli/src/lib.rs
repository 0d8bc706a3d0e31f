//! `occlugen` front end: config loading with overrides, generation,
//! evaluation, manifest statistics and sample inspection.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use occlugen_core::dataset::{
    read_manifest, verify_sample, FileCheck, Generator, Pipeline, RunSummary, SampleStatus, Verification,
};
use occlugen_core::evalmetrics::{evaluate_dirs, Aggregation, EvalReport};
use occlugen_core::{Error, GenerationConfig, Violation};
use serde::Serialize;
use toml::{Table, Value};

/// Exit status for invalid configs, inputs or failed verification.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit status for I/O and generation failures.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "occlugen", version, about = "Synthetic occluded-face segmentation datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Naturalistic occlusion with real occluder cut-outs.
    Natocc(GenerateArgs),
    /// Random textured shapes, some translucent.
    Randocc(GenerateArgs),
    /// Per-sample weighted mix of both pipelines.
    Mix(GenerateArgs),
    /// Score predicted masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Average metrics over images instead of one global confusion matrix.
        #[arg(long)]
        per_image: bool,
    },
    /// Summarize a manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Regenerate one sample and compare it with the stored files.
    Inspect {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        id: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing dataset in the output directory.
    #[arg(long)]
    pub force: bool,
    /// Extra `dotted.key=value` overrides (TOML values).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl GenerateArgs {
    /// Flag overrides first, then `--set` in order.
    pub fn overrides(&self, pipeline: Pipeline) -> Vec<String> {
        let mut o = vec![format!("pipeline=\"{}\"", pipeline.as_str())];
        if let Some(s) = self.seed {
            o.push(format!("global_seed={s}"));
        }
        if let Some(c) = self.count {
            o.push(format!("count={c}"));
        }
        if let Some(w) = self.workers {
            o.push(format!("workers={w}"));
        }
        if let Some(out) = &self.out {
            o.push(format!("output_dir={}", Value::String(absolute(out).display().to_string())));
        }
        o.extend(self.set.iter().cloned());
        o
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::Manifest { .. } | Error::OutputExists(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn config_error(v: Vec<Violation>) -> CliError {
    CliError::from(Error::Config(v))
}

/// Config tables whose keys are free-form names.
const MAP_KEYS: [&str; 2] = ["mix_weights", "natocc.category_weights"];
const PATH_KEYS: [&str; 4] = ["faces_dir", "occluders_dir", "textures_dir", "output_dir"];

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

/// Checks `user` against the shape of `defaults`; integers are widened to
/// floats where the default is a float.
fn check_tree(user: &mut Table, defaults: &Table, prefix: &str, v: &mut Vec<Violation>) {
    for (key, value) in user.iter_mut() {
        let path = format!("{prefix}{key}");
        let Some(def) = defaults.get(key) else {
            v.push(Violation::new(path, "unknown key"));
            continue;
        };
        check_value(value, def, &path, v);
    }
}

fn check_value(value: &mut Value, def: &Value, path: &str, v: &mut Vec<Violation>) {
    match (value, def) {
        (Value::Table(t), Value::Table(d)) => {
            if MAP_KEYS.contains(&path) {
                for (k, w) in t.iter_mut() {
                    if let Value::Integer(i) = w {
                        *w = Value::Float(*i as f64);
                    }
                    if !w.is_float() {
                        v.push(Violation::new(format!("{path}.{k}"), format!("expected float, found {}", type_name(w))));
                    }
                }
            } else {
                check_tree(t, d, &format!("{path}."), v);
            }
        }
        (Value::Array(a), Value::Array(d)) => {
            if let Some(proto) = d.first() {
                for (i, item) in a.iter_mut().enumerate() {
                    check_value(item, proto, &format!("{path}[{i}]"), v);
                }
            }
        }
        (w @ Value::Integer(_), Value::Float(_)) => {
            if let Value::Integer(i) = *w {
                *w = Value::Float(i as f64);
            }
        }
        (w, d) if std::mem::discriminant(&*w) != std::mem::discriminant(d) => {
            v.push(Violation::new(path, format!("expected {}, found {}", type_name(d), type_name(w))));
        }
        _ => {}
    }
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Whether a dotted key names a config field (or an entry of a free-form map).
fn key_exists(defaults: &Table, key: &str) -> bool {
    if MAP_KEYS.iter().any(|m| key.strip_prefix(m).is_some_and(|r| r.starts_with('.') && r.len() > 1 && !r[1..].contains('.'))) {
        return true;
    }
    let mut node = defaults;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        match node.get(*part) {
            Some(Value::Table(t)) if i + 1 < parts.len() => node = t,
            Some(_) if i + 1 == parts.len() => return true,
            _ => return false,
        }
    }
    false
}

fn set_dotted(table: &mut Table, key: &str, value: Value) {
    let mut parts = key.split('.').peekable();
    let mut node = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            node.insert(part.to_string(), value);
            return;
        }
        let entry = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            *entry = Value::Table(Table::new());
        }
        node = entry.as_table_mut().expect("just ensured a table");
    }
}

/// Loads a TOML config, applies `key=value` overrides, and validates every
/// nested invariant. All problems are reported together with their key paths.
///
/// Relative paths in the file, and the default paths, resolve against the
/// file's directory; paths given as overrides resolve against the working
/// directory.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<GenerationConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut user: Table = text
        .parse()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let defaults = Table::try_from(GenerationConfig::default()).expect("defaults serialize");
    let base = path.parent().map(absolute).unwrap_or_default();
    for key in PATH_KEYS {
        if !user.contains_key(key) {
            user.insert(key.to_string(), defaults[key].clone());
        }
        if let Some(Value::String(s)) = user.get_mut(key) {
            *s = base.join(&*s).display().to_string();
        }
    }

    let mut violations = Vec::new();
    for o in overrides {
        let Some((key, raw)) = o.split_once('=') else {
            violations.push(Violation::new(o.clone(), "override must look like key=value"));
            continue;
        };
        let key = key.trim();
        if !key_exists(&defaults, key) {
            violations.push(Violation::new(key, "unknown key"));
            continue;
        }
        set_dotted(&mut user, key, parse_value(raw.trim()));
    }
    check_tree(&mut user, &defaults, "", &mut violations);
    if !violations.is_empty() {
        return Err(config_error(violations));
    }

    let mut cfg: GenerationConfig = Value::Table(user)
        .try_into()
        .map_err(|e: toml::de::Error| config_error(vec![Violation::new("config", e.message().to_string())]))?;
    for p in [&mut cfg.faces_dir, &mut cfg.occluders_dir, &mut cfg.textures_dir, &mut cfg.output_dir] {
        *p = absolute(p);
    }
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(config_error(v));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub output_dir: PathBuf,
    pub config_hash: String,
    pub count: u64,
    pub ok: u64,
    pub skipped: u64,
    pub elapsed_seconds: f64,
}

pub fn cmd_generate(pipeline: Pipeline, args: &GenerateArgs) -> Result<(GenerationReport, RunSummary), CliError> {
    let cfg = parse_config(&args.config, &args.overrides(pipeline))?;
    let gen = Generator::new(cfg)?;
    let summary = gen.run(args.force)?;
    let report = GenerationReport {
        output_dir: gen.config().output_dir.clone(),
        config_hash: gen.config_hash().to_string(),
        count: gen.config().count,
        ok: summary.ok,
        skipped: summary.skipped,
        elapsed_seconds: summary.elapsed.as_secs_f64(),
    };
    Ok((report, summary))
}

pub fn cmd_eval(pred: &Path, gt: &Path, classes: usize, per_image: bool) -> Result<EvalReport, CliError> {
    let agg = if per_image { Aggregation::PerImage } else { Aggregation::Global };
    Ok(evaluate_dirs(pred, gt, classes, agg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineStats {
    pub rows: u64,
    pub ok: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub rows: u64,
    pub ok: u64,
    pub skipped: u64,
    pub per_pipeline: BTreeMap<String, PipelineStats>,
    /// Fraction of generated randocc rows with alpha < 1; `None` without such rows.
    pub transparent_fraction: Option<f64>,
    pub transparent_count: u64,
    /// Counts over `[0, 1]` in bins of `SCALE_BIN_WIDTH`; values of exactly 1 go in the last bin.
    pub scale_histogram: Vec<u64>,
    pub scale_bin_width: f64,
}

pub const SCALE_BINS: usize = 20;

pub fn cmd_stats(manifest: &Path) -> Result<StatsReport, CliError> {
    let records = read_manifest(manifest)?;
    let mut r = StatsReport {
        rows: 0,
        ok: 0,
        skipped: 0,
        per_pipeline: BTreeMap::new(),
        transparent_fraction: None,
        transparent_count: 0,
        scale_histogram: vec![0; SCALE_BINS],
        scale_bin_width: 1.0 / SCALE_BINS as f64,
    };
    let mut randocc_ok = 0u64;
    for rec in &records {
        let ok = rec.status == SampleStatus::Ok;
        r.rows += 1;
        let p = r.per_pipeline.entry(rec.pipeline.clone()).or_insert(PipelineStats { rows: 0, ok: 0, skipped: 0 });
        p.rows += 1;
        if ok {
            r.ok += 1;
            p.ok += 1;
            let bin = ((rec.scale * SCALE_BINS as f64) as usize).min(SCALE_BINS - 1);
            r.scale_histogram[bin] += 1;
            if rec.pipeline == "randocc" {
                randocc_ok += 1;
                r.transparent_count += u64::from(rec.alpha < 1.0);
            }
        } else {
            r.skipped += 1;
            p.skipped += 1;
        }
    }
    if randocc_ok > 0 {
        r.transparent_fraction = Some(r.transparent_count as f64 / randocc_ok as f64);
    }
    Ok(r)
}

fn describe_check(name: &str, c: &FileCheck, out: &mut String) {
    let _ = match c {
        FileCheck::Identical => writeln!(out, "{name}: identical"),
        FileCheck::Missing(p) => writeln!(out, "{name}: MISSING {}", p.display()),
        FileCheck::Unexpected(p) => writeln!(out, "{name}: UNEXPECTED {} (sample is skipped)", p.display()),
        FileCheck::Differs(d) => match (d.size_mismatch, d.bbox) {
            (Some((stored, expected)), _) => {
                writeln!(out, "{name}: MISMATCH size {}x{} stored vs {}x{} regenerated", stored.0, stored.1, expected.0, expected.1)
            }
            (None, Some(b)) => writeln!(
                out,
                "{name}: MISMATCH {}/{} pixels differ within x {}..={}, y {}..={}; max delta {}",
                d.differing, d.total, b.x0, b.x1, b.y0, b.y1, d.max_delta
            ),
            (None, None) => writeln!(out, "{name}: MISMATCH (encoding differs, pixels equal)"),
        },
    };
}

/// Human-readable inspection summary.
pub fn render_inspection(v: &Verification) -> String {
    let mut out = String::new();
    let r = &v.regenerated.record;
    let _ = writeln!(out, "sample {} ({}, face {}, seed {})", r.sample_id, r.pipeline, r.face_id, r.seed);
    if v.record_matches() {
        let _ = writeln!(out, "manifest row: identical");
    } else {
        let _ = writeln!(out, "manifest row: MISMATCH\n  stored:      {:?}\n  regenerated: {:?}", v.stored, r);
    }
    if let Some(e) = &v.regenerated.error {
        let _ = writeln!(out, "skipped: {e}");
    }
    describe_check("image", &v.image, &mut out);
    describe_check("mask", &v.mask, &mut out);
    if let Some(s) = &v.regenerated.synthesis {
        for t in &s.color_transfer {
            let _ = writeln!(out, "color transfer for {}:\n{}", t.occluder_id, t.report);
        }
    }
    let _ = writeln!(out, "{}", if v.passed() { "verification passed" } else { "verification FAILED" });
    out
}

pub fn cmd_inspect(out_dir: &Path, id: &str) -> Result<Verification, CliError> {
    Ok(verify_sample(out_dir, id)?)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Runs one command, printing its report to stdout; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Natocc(a) => cmd_generate(Pipeline::Natocc, &a).map(|(r, _)| println!("{}", json(&r))),
        Command::Randocc(a) => cmd_generate(Pipeline::Randocc, &a).map(|(r, _)| println!("{}", json(&r))),
        Command::Mix(a) => cmd_generate(Pipeline::Mix, &a).map(|(r, _)| println!("{}", json(&r))),
        Command::Eval { pred, gt, classes, per_image } => {
            cmd_eval(&pred, &gt, classes, per_image).map(|r| println!("{}", json(&r)))
        }
        Command::Stats { manifest } => cmd_stats(&manifest).map(|r| println!("{}", json(&r))),
        Command::Inspect { out, id } => cmd_inspect(&out, &id).and_then(|v| {
            print!("{}", render_inspection(&v));
            if v.passed() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("sample {id} does not match its regeneration")))
            }
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
