//! The batch subcommands. Each returns its report as a string.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use srcsent_core::corpus::{
    corpus_stats, filter_reconstructable, gold_labels, load_annotations, load_pairs,
    reconstructability_table, write_pairs, AnnotationRecord, DocumentSummaryPair, GoldLabels,
    ReconstructPolicy, VerdictUnit,
};
use srcsent_core::eval::{
    correlation_matrix, evaluate, krippendorff_alpha, position_stats, reconstructability_units,
    source_label_units, CorrelationMode, EvalReport, Gain,
};
use srcsent_core::methods::{BackendSet, MethodSpec, ScorerRegistry};
use srcsent_core::pipeline::{
    export_filtered_document, run_methods, select_with_default, RunConfig, SelectionConfig,
    SelectionResult,
};
use srcsent_core::score::load_scores;
use srcsent_core::{ScoreVector, Tokenizer};

use crate::table::render;

/// `xsum_reference`, `cnndm_system`, ...
pub fn split_name(pair: &DocumentSummaryPair) -> String {
    let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
    format!(
        "{}_{}",
        name(serde_json::to_value(pair.dataset).expect("enum serializes")),
        name(serde_json::to_value(pair.summary_origin).expect("enum serializes"))
    )
}

fn splits(pairs: &[DocumentSummaryPair]) -> BTreeMap<String, Vec<&DocumentSummaryPair>> {
    let mut out: BTreeMap<String, Vec<&DocumentSummaryPair>> = BTreeMap::new();
    for p in pairs {
        out.entry(split_name(p)).or_default().push(p);
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn load_corpus(
    corpus: &Path,
    annotations: &Path,
) -> Result<(Vec<DocumentSummaryPair>, Vec<AnnotationRecord>)> {
    let pairs = load_pairs(corpus).with_context(|| format!("loading {}", corpus.display()))?;
    let records = load_annotations(annotations)
        .with_context(|| format!("loading {}", annotations.display()))?;
    Ok((pairs, records))
}

fn load_dump(path: &Path) -> Result<(String, Vec<ScoreVector>)> {
    let vectors = load_scores(path).with_context(|| format!("loading {}", path.display()))?;
    let name = match vectors.first() {
        Some(v) => v.method.clone(),
        None => path
            .file_name()
            .and_then(|n| n.to_str())
            .map(|n| {
                n.trim_end_matches(".jsonl")
                    .trim_end_matches(".scores")
                    .to_string()
            })
            .unwrap_or_default(),
    };
    Ok((name, vectors))
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

// ---- score ----

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Corpus file; overrides the configuration.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory for score dumps; overrides the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Methods to run, as `name` or `name@backend`. Configured methods are
    /// matched by label; anything else is added with default parameters.
    #[arg(long = "method", short = 'm')]
    pub methods: Vec<String>,
}

pub fn score(args: &ScoreArgs, registry: &ScorerRegistry) -> Result<String> {
    let mut cfg = match &args.config {
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let (Some(corpus), Some(out)) = (&args.corpus, &args.out) else {
                bail!("either --config or both --corpus and --out are required");
            };
            RunConfig::new(corpus, out, Vec::new())
        }
    };
    if args.config.is_some() {
        if let Some(c) = &args.corpus {
            cfg.corpus = std::path::absolute(c)?;
        }
        if let Some(o) = &args.out {
            cfg.output_dir = std::path::absolute(o)?;
        }
    }
    if let Some(c) = &args.cache_dir {
        cfg.cache_dir = Some(std::path::absolute(c)?);
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if !args.methods.is_empty() {
        let configured = std::mem::take(&mut cfg.methods);
        for m in &args.methods {
            let (name, backend) = match m.split_once('@') {
                Some((n, b)) => (n, Some(b)),
                None => (m.as_str(), None),
            };
            let mut spec = configured
                .iter()
                .find(|s| s.label() == name)
                .cloned()
                .unwrap_or_else(|| MethodSpec::new(name));
            if let Some(b) = backend {
                spec.backend = Some(b.to_string());
            }
            cfg.methods.push(spec);
        }
    }
    cfg.validate(registry)?;
    let cache = cfg.cache_dir.as_ref().map(|d| cfg.resolve(d));
    let backends = BackendSet::from_configs(&cfg.backends, &cfg.base_dir, cache.as_deref())?;
    let summary = run_methods(&cfg, registry, &backends)?;
    let mut out = String::new();
    for (label, path) in &summary.outputs {
        out.push_str(&format!("{label}\t{}\n", path.display()));
    }
    out.push_str(&format!(
        "{} vectors, {} from cache, {} computed\n",
        summary.vectors, summary.cache_hits, summary.computed
    ));
    Ok(out)
}

// ---- evaluate ----

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GainArg {
    Linear,
    Exponential,
}

impl From<GainArg> for Gain {
    fn from(g: GainArg) -> Self {
        match g {
            GainArg::Linear => Gain::Linear,
            GainArg::Exponential => Gain::Exponential,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    StrictYes,
    YesOrPartly,
}

impl From<PolicyArg> for ReconstructPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::StrictYes => ReconstructPolicy::StrictYes,
            PolicyArg::YesOrPartly => ReconstructPolicy::YesOrPartly,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Score dumps, one per method.
    #[arg(required = true)]
    pub scores: Vec<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    pub gain: GainArg,
    /// Keep only pairs whose summary a majority judged reconstructable.
    #[arg(long, value_enum)]
    pub reconstructable: Option<PolicyArg>,
    #[arg(long)]
    pub json: bool,
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<String> {
    let (mut pairs, records) = load_corpus(&args.corpus, &args.annotations)?;
    let gold = gold_labels(&pairs, &records)?;
    if let Some(policy) = args.reconstructable {
        let annotated: Vec<DocumentSummaryPair> = pairs
            .iter()
            .filter(|p| gold.iter().any(|g| g.pair_id == p.pair_id))
            .cloned()
            .collect();
        pairs = filter_reconstructable(&annotated, &records, policy.into())?;
    }
    let annotated: std::collections::HashSet<&str> =
        gold.iter().map(|g| g.pair_id.as_str()).collect();
    let mut reports: Vec<EvalReport> = Vec::new();
    for path in &args.scores {
        let (method, vectors) = load_dump(path)?;
        for (split, members) in splits(&pairs) {
            let ids: Vec<String> = members
                .iter()
                .filter(|p| annotated.contains(p.pair_id.as_str()))
                .map(|p| p.pair_id.clone())
                .collect();
            if ids.is_empty() {
                continue;
            }
            reports.push(evaluate(
                &method,
                &split,
                &ids,
                &vectors,
                &gold,
                args.gain.into(),
            )?);
        }
    }
    if args.json {
        return Ok(to_json(&reports));
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                r.split.clone(),
                f4(r.ndcg),
                f4(r.map),
                r.n_pairs.to_string(),
                r.skipped_ndcg.to_string(),
                r.skipped_map.to_string(),
            ]
        })
        .collect();
    Ok(render(
        &[
            "method",
            "split",
            "ndcg",
            "map",
            "pairs",
            "skip_ndcg",
            "skip_map",
        ],
        &rows,
    ))
}

// ---- stats ----

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UnitArg {
    Record,
    PairMajority,
}

impl From<UnitArg> for VerdictUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Record => VerdictUnit::Record,
            UnitArg::PairMajority => VerdictUnit::PairMajority,
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// What one reconstructability observation is.
    #[arg(long, value_enum, default_value = "record")]
    pub unit: UnitArg,
    /// Stem tokens before counting novel n-grams.
    #[arg(long)]
    pub stem: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct StatsReport {
    split: String,
    unannotated: usize,
    stats: srcsent_core::corpus::CorpusStats,
}

pub fn stats(args: &StatsArgs) -> Result<String> {
    let (pairs, records) = load_corpus(&args.corpus, &args.annotations)?;
    let gold = gold_labels(&pairs, &records)?;
    let by_id: HashMap<&str, &GoldLabels> = gold.iter().map(|g| (g.pair_id.as_str(), g)).collect();
    let tokenizer = if args.stem {
        Tokenizer::stemming()
    } else {
        Tokenizer::default()
    };
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for (split, members) in splits(&pairs) {
        let annotated: Vec<DocumentSummaryPair> = members
            .iter()
            .filter(|p| by_id.contains_key(p.pair_id.as_str()))
            .map(|p| (*p).clone())
            .collect();
        if annotated.is_empty() {
            continue;
        }
        let g: Vec<GoldLabels> = annotated
            .iter()
            .map(|p| by_id[p.pair_id.as_str()].clone())
            .collect();
        reports.push(StatsReport {
            split: split.clone(),
            unannotated: members.len() - annotated.len(),
            stats: corpus_stats(&annotated, &g, &tokenizer)?,
        });
        let ids: std::collections::HashSet<&str> =
            annotated.iter().map(|p| p.pair_id.as_str()).collect();
        let recs: Vec<AnnotationRecord> = records
            .iter()
            .filter(|r| ids.contains(r.pair_id.as_str()))
            .cloned()
            .collect();
        verdicts.push((split, recs));
    }
    let table = reconstructability_table(&verdicts, args.unit.into())?;
    if args.json {
        return Ok(to_json(
            &serde_json::json!({ "corpus": reports, "reconstructability": table }),
        ));
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let s = &r.stats;
            let mut row = vec![
                r.split.clone(),
                s.n_pairs.to_string(),
                format!("{:.2}", s.mean_sentences),
                format!(
                    "{:.2} ({:.1}%)",
                    s.mean_source_sentences,
                    100.0 * s.source_sentence_ratio
                ),
                format!("{:.2}", s.mean_input_tokens),
                format!("{:.2}", s.mean_summary_tokens),
            ];
            row.extend((1..=4).map(|k| {
                s.novel_ngram_rate
                    .get(&k)
                    .map_or("-".into(), |v| format!("{:.2}", 100.0 * v))
            }));
            row
        })
        .collect();
    let mut out = render(
        &[
            "split",
            "pairs",
            "sent",
            "src_sent",
            "input_len",
            "summ_len",
            "novel1",
            "novel2",
            "novel3",
            "novel4",
        ],
        &rows,
    );
    out.push('\n');
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                r.split.clone(),
                r.n.to_string(),
                format!("{:.1}%", 100.0 * r.yes),
                format!("{:.1}%", 100.0 * r.partly),
                format!("{:.1}%", 100.0 * r.no),
            ]
        })
        .collect();
    out.push_str(&render(
        &["split", "verdicts", "yes", "partly", "no"],
        &rows,
    ));
    Ok(out)
}

// ---- correlate ----

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Pooled,
    PerPairMean,
}

impl From<ModeArg> for CorrelationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Pooled => CorrelationMode::Pooled,
            ModeArg::PerPairMean => CorrelationMode::PerPairMean,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Score dumps, one per method.
    #[arg(required = true, num_args = 2..)]
    pub scores: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "pooled")]
    pub mode: ModeArg,
    #[arg(long)]
    pub json: bool,
}

pub fn correlate(args: &CorrelateArgs) -> Result<String> {
    let dumps = args
        .scores
        .iter()
        .map(|p| load_dump(p))
        .collect::<Result<Vec<_>>>()?;
    let m = correlation_matrix(&dumps, args.mode.into())?;
    if args.json {
        return Ok(to_json(&m));
    }
    let mut header = vec![""];
    header.extend(m.methods.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = m
        .methods
        .iter()
        .zip(&m.values)
        .map(|(name, row)| {
            std::iter::once(name.clone())
                .chain(
                    row.iter()
                        .map(|v| v.map_or("n/a".into(), |x| format!("{x:.3}"))),
                )
                .collect()
        })
        .collect();
    Ok(render(&header, &rows))
}

// ---- positions ----

#[derive(Debug, Args)]
pub struct PositionsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Write `<split>.positions.tsv` files here.
    #[arg(long)]
    pub tsv_dir: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

pub fn positions(args: &PositionsArgs) -> Result<String> {
    let (pairs, records) = load_corpus(&args.corpus, &args.annotations)?;
    let gold = gold_labels(&pairs, &records)?;
    let by_id: HashMap<&str, &GoldLabels> = gold.iter().map(|g| (g.pair_id.as_str(), g)).collect();
    let mut all = BTreeMap::new();
    for (split, members) in splits(&pairs) {
        let g: Vec<GoldLabels> = members
            .iter()
            .filter_map(|p| by_id.get(p.pair_id.as_str()).map(|g| (*g).clone()))
            .collect();
        if g.is_empty() {
            continue;
        }
        all.insert(split, position_stats(&g)?);
    }
    if let Some(dir) = &args.tsv_dir {
        fs::create_dir_all(dir)?;
        for (split, stats) in &all {
            fs::write(dir.join(format!("{split}.positions.tsv")), stats.to_tsv())?;
        }
    }
    if args.json {
        return Ok(to_json(&all));
    }
    let mut out = String::new();
    for (split, stats) in &all {
        out.push_str(&format!("# {split}\n"));
        for (name, hist) in [
            ("position", &stats.positions),
            ("interval", &stats.intervals),
            ("sources", &stats.source_counts),
        ] {
            let cells: Vec<String> = hist.iter().map(|(b, c)| format!("{b}:{c}")).collect();
            out.push_str(&format!("{name:<9}{}\n", cells.join(" ")));
        }
    }
    Ok(out)
}

// ---- select / export ----

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// A score dump.
    pub scores: PathBuf,
    /// Keep sentences scoring strictly above this value.
    #[arg(long, conflicts_with = "top_k", allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Keep the k best sentences.
    #[arg(long)]
    pub top_k: Option<i64>,
    /// With --annotations and no explicit rule, k is each pair's gold source count.
    #[arg(long, requires = "annotations")]
    pub corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    pub annotations: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn write_or_return(out: Option<&Path>, text: String) -> Result<String> {
    match out {
        Some(path) => {
            let mut f =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            f.write_all(text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn select(args: &SelectArgs) -> Result<String> {
    let rule = SelectionConfig {
        threshold: args.threshold,
        top_k: args.top_k,
    }
    .rule()?;
    let (_, vectors) = load_dump(&args.scores)?;
    let gold: HashMap<String, GoldLabels> = match (&args.corpus, &args.annotations) {
        (Some(c), Some(a)) => {
            let (pairs, records) = load_corpus(c, a)?;
            gold_labels(&pairs, &records)?
                .into_iter()
                .map(|g| (g.pair_id.clone(), g))
                .collect()
        }
        _ => HashMap::new(),
    };
    let mut text = String::new();
    for v in &vectors {
        let r = select_with_default(v, rule, gold.get(&v.pair_id))?;
        text.push_str(&serde_json::to_string(&r).expect("selection serializes"));
        text.push('\n');
    }
    write_or_return(args.out.as_deref(), text)
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Selections written by `select`.
    #[arg(long)]
    pub selections: PathBuf,
    /// Output corpus; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn export_srconly(args: &ExportArgs) -> Result<String> {
    let pairs = load_pairs(&args.corpus)?;
    let by_id: HashMap<&str, &DocumentSummaryPair> =
        pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let text = fs::read_to_string(&args.selections)
        .with_context(|| format!("reading {}", args.selections.display()))?;
    let mut exported = Vec::new();
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let sel: SelectionResult = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", args.selections.display(), n + 1))?;
        let pair = by_id
            .get(sel.pair_id.as_str())
            .with_context(|| format!("selection names unknown pair `{}`", sel.pair_id))?;
        exported.push(export_filtered_document(pair, &sel)?);
    }
    let mut buf = Vec::new();
    write_pairs(&mut buf, &exported)?;
    write_or_return(
        args.out.as_deref(),
        String::from_utf8(buf).expect("utf-8 json"),
    )
}

// ---- agreement ----

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub annotations: PathBuf,
    /// Adds a per-split breakdown.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AgreementReport {
    pub split: String,
    pub records: usize,
    pub pairs: usize,
    pub annotators: usize,
    /// Alpha over per-sentence source labels; absent when nothing is pairable.
    pub source_alpha: Option<f64>,
    pub reconstructability_alpha: Option<f64>,
}

pub fn agreement_report(split: &str, records: &[AnnotationRecord]) -> AgreementReport {
    let pairs: std::collections::HashSet<&str> =
        records.iter().map(|r| r.pair_id.as_str()).collect();
    let annotators: std::collections::HashSet<&str> =
        records.iter().map(|r| r.annotator_id.as_str()).collect();
    AgreementReport {
        split: split.to_string(),
        records: records.len(),
        pairs: pairs.len(),
        annotators: annotators.len(),
        source_alpha: krippendorff_alpha(&source_label_units(records)).ok(),
        reconstructability_alpha: krippendorff_alpha(&reconstructability_units(records)).ok(),
    }
}

pub fn agreement(args: &AgreementArgs) -> Result<String> {
    let records = load_annotations(&args.annotations)?;
    let mut reports = vec![agreement_report("all", &records)];
    if let Some(corpus) = &args.corpus {
        let pairs = load_pairs(corpus)?;
        gold_labels(&pairs, &records)?;
        for (split, members) in splits(&pairs) {
            let ids: std::collections::HashSet<&str> =
                members.iter().map(|p| p.pair_id.as_str()).collect();
            let recs: Vec<AnnotationRecord> = records
                .iter()
                .filter(|r| ids.contains(r.pair_id.as_str()))
                .cloned()
                .collect();
            if !recs.is_empty() {
                reports.push(agreement_report(&split, &recs));
            }
        }
    }
    if args.json {
        return Ok(to_json(&reports));
    }
    let fmt = |a: Option<f64>| a.map_or("n/a".into(), |x| format!("{x:.4}"));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.split.clone(),
                r.records.to_string(),
                r.pairs.to_string(),
                r.annotators.to_string(),
                fmt(r.source_alpha),
                fmt(r.reconstructability_alpha),
            ]
        })
        .collect();
    Ok(render(
        &[
            "split",
            "records",
            "pairs",
            "annotators",
            "alpha_sources",
            "alpha_reconstruct",
        ],
        &rows,
    ))
}
