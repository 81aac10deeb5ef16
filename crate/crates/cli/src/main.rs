//! `xtune` — one binary wiring the toolkit's pipeline stages as
//! subcommands. Every run writes its artifacts plus a `manifest.json`
//! into `--out-dir`; configs are JSON and flags override config fields.

mod config;
mod runctx;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::*;
use runctx::RunContext;
use xtune_core::allocator::{self, AllocationProblem, AllocationResult, ProblemSpec};
use xtune_core::corpus::{self, CorpusManifest, StatsOptions};
use xtune_core::databuild::{self, MixOptions, MixRecipe, RecipeDirection};
use xtune_core::evalkit::{self, BleuOptions, JudgeClient, JudgeOptions};
use xtune_core::scalelaw::{self, LawRecord};
use xtune_core::simlang::{compute_similarity, EmbeddingDump, LanguageProfile};
use xtune_core::{repspace, Lang};

#[derive(Parser)]
#[command(name = "xtune", version, about = "Cross-lingual instruction-tuning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Subcommand configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run directory for outputs and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Quality threshold override: `default`, `off`, or a number.
    #[arg(long)]
    min_quality: Option<String>,
}

#[derive(Args)]
struct AllocArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Budget override (total translation pairs).
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seed override for sampling and shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Direction override applied to every language:
    /// en_to_x | x_to_en | both_split.
    #[arg(long)]
    direction: Option<String>,
    #[arg(long)]
    min_quality: Option<String>,
}

#[derive(Args)]
struct BleuArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    hypotheses: Option<PathBuf>,
    #[arg(long)]
    references: Option<PathBuf>,
    /// whitespace | char | external_subword
    #[arg(long)]
    tokenizer: Option<String>,
}

#[derive(Args)]
struct EmArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// QA items JSONL.
    #[arg(long)]
    items: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seed override for the resampling stream.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct JudgeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Judge only the first N items.
    #[arg(long)]
    first_n: Option<usize>,
    /// Maximum concurrent in-flight requests.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics (counts after filtering and dedup, or declared).
    Stats(StatsArgs),
    /// Language-similarity coefficients from an embedding dump.
    Similarity(CommonArgs),
    /// Fit a scaling law to observed (data scale, score) points.
    Fit(CommonArgs),
    /// Sample a fitted law for external plotting.
    Lawplot(CommonArgs),
    /// Solve the budget-constrained allocation problem.
    Allocate(AllocArgs),
    /// Equal-share baseline allocation.
    Uniform(AllocArgs),
    /// Check an amounts vector against a problem.
    Validate(CommonArgs),
    /// Build an instruction-tuning dataset from a mix recipe.
    Build(BuildArgs),
    /// Assemble a multi-way evaluation set.
    Mieval(CommonArgs),
    /// Corpus BLEU over two aligned text files.
    Bleu(BleuArgs),
    /// Exact match over QA items.
    Em(EmArgs),
    /// Paired-bootstrap significance between two eval reports.
    Bootstrap(BootstrapArgs),
    /// LLM-judge run (correctness or pairwise).
    Judge(JudgeArgs),
    /// Representation-space metrics and 2D projection per layer.
    Repspace(CommonArgs),
}

enum CliError {
    /// Exit 2: configuration or schema violation.
    Config(String),
    /// Exit 1: runtime failure.
    Runtime(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() {
    let cli = Cli::parse();
    let (out_dir, result) = dispatch(cli.command);
    if let Err(e) = result {
        let error_json = serde_json::json!({
            "error": { "kind": e.kind(), "message": e.message() }
        });
        eprintln!("{error_json}");
        if let Some(dir) = out_dir {
            if dir.exists() {
                let _ = std::fs::write(dir.join("error.json"), format!("{error_json:#}\n"));
            }
        }
        std::process::exit(e.exit_code());
    }
}

fn dispatch(command: Command) -> (Option<PathBuf>, Result<(), CliError>) {
    match command {
        Command::Stats(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_stats(a))
        }
        Command::Similarity(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_similarity(a))
        }
        Command::Fit(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_fit(a))
        }
        Command::Lawplot(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_lawplot(a))
        }
        Command::Allocate(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_allocate(a, false))
        }
        Command::Uniform(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_allocate(a, true))
        }
        Command::Validate(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_validate(a))
        }
        Command::Build(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_build(a))
        }
        Command::Mieval(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_mieval(a))
        }
        Command::Bleu(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_bleu(a))
        }
        Command::Em(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_em(a))
        }
        Command::Bootstrap(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_bootstrap(a))
        }
        Command::Judge(a) => {
            let dir = a.common.out_dir.clone();
            (Some(dir), cmd_judge(a))
        }
        Command::Repspace(a) => {
            let dir = a.out_dir.clone();
            (Some(dir), cmd_repspace(a))
        }
    }
}

fn load_and_validate<T: serde::de::DeserializeOwned>(
    path: &Path,
    referenced: impl Fn(&T, &Path) -> Vec<PathBuf>,
) -> Result<(T, PathBuf), CliError> {
    let (cfg, base) = load_config::<T>(path).map_err(CliError::Config)?;
    for file in referenced(&cfg, &base) {
        require_file(&file).map_err(CliError::Config)?;
    }
    Ok((cfg, base))
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let (mut cfg, base) = load_and_validate::<StatsConfig>(&args.common.config, |c, b| {
        vec![resolve(b, &c.manifest)]
    })?;
    if let Some(raw) = &args.min_quality {
        cfg.min_quality = QualitySetting::parse_flag(raw).map_err(CliError::Config)?;
    }
    let manifest_path = resolve(&base, &cfg.manifest);
    let manifest = CorpusManifest::load(&manifest_path).map_err(config_err)?;

    let mut ctx = RunContext::new("stats", &args.common.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&manifest_path).map_err(runtime_err)?;
    if !cfg.declared {
        for entry in &manifest.entries {
            for file in corpus::entry_files(&manifest, entry) {
                require_file(&file).map_err(CliError::Config)?;
                ctx.record_input(&file).map_err(runtime_err)?;
            }
        }
    }

    let stats = corpus::corpus_stats(
        &manifest,
        StatsOptions {
            quality: cfg.min_quality.to_filter(),
            dedup: cfg.dedup,
            declared_only: cfg.declared,
        },
    )
    .map_err(runtime_err)?;
    ctx.write_output("stats.tsv", stats.to_tsv().as_bytes()).map_err(runtime_err)?;
    ctx.write_output_json("stats.json", &stats).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_similarity(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<SimilarityConfig>(&args.config, |c, b| {
        vec![resolve(b, &c.dump)]
    })?;
    let dump_path = resolve(&base, &cfg.dump);
    let dump = EmbeddingDump::load(&dump_path).map_err(runtime_err)?;
    let pivot = cfg.pivot.clone().unwrap_or_else(|| Lang::new("en").unwrap());

    let mut ctx = RunContext::new("similarity", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&dump_path).map_err(runtime_err)?;

    let mut profiles = Vec::new();
    for target in &cfg.targets {
        profiles.push(compute_similarity(&dump, target, &pivot).map_err(runtime_err)?);
    }
    ctx.write_output_json("profiles.json", &profiles).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_fit(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<FitConfig>(&args.config, |c, b| {
        let mut files = vec![resolve(b, &c.points)];
        if let Some(p) = &c.profiles {
            files.push(resolve(b, p));
        }
        files
    })?;
    let points_path = resolve(&base, &cfg.points);
    let points = scalelaw::read_points_tsv(&points_path).map_err(runtime_err)?;

    let profile = match (cfg.gamma, &cfg.profiles) {
        (Some(gamma), _) => LanguageProfile::manual(cfg.lang.clone(), gamma).map_err(config_err)?,
        (None, Some(path)) => {
            let path = resolve(&base, path);
            let text = std::fs::read_to_string(&path).map_err(runtime_err)?;
            let profiles: Vec<LanguageProfile> = serde_json::from_str(&text).map_err(runtime_err)?;
            profiles
                .into_iter()
                .find(|p| p.lang == cfg.lang)
                .ok_or_else(|| {
                    CliError::Config(format!("no profile for `{}` in {}", cfg.lang, path.display()))
                })?
        }
        (None, None) => {
            return Err(CliError::Config("fit needs either `gamma` or `profiles`".into()))
        }
    };

    let mut ctx = RunContext::new("fit", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&points_path).map_err(runtime_err)?;
    if let Some(p) = &cfg.profiles {
        ctx.record_input(&resolve(&base, p)).map_err(runtime_err)?;
    }

    let tag = cfg.setting_tag.as_deref().unwrap_or("coit-translation");
    let fit = scalelaw::fit_law(&points, &profile, tag).map_err(runtime_err)?;
    ctx.write_output_json("law.json", &LawRecord::from_fit(&fit)).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_lawplot(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<LawPlotConfig>(&args.config, |c, b| {
        vec![resolve(b, &c.law)]
    })?;
    let law_path = resolve(&base, &cfg.law);
    let record: LawRecord =
        serde_json::from_str(&std::fs::read_to_string(&law_path).map_err(runtime_err)?)
            .map_err(runtime_err)?;
    let law = record.to_law().map_err(runtime_err)?;

    let mut ctx = RunContext::new("lawplot", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&law_path).map_err(runtime_err)?;

    let rows = scalelaw::plot_samples(&law, cfg.min_scale, cfg.max_scale, cfg.samples, cfg.log_spaced)
        .map_err(runtime_err)?;
    let mut tsv = String::from("data_scale\tpredicted_score\n");
    for (x, s) in rows {
        tsv.push_str(&format!("{x}\t{s:.6}\n"));
    }
    ctx.write_output("lawplot.tsv", tsv.as_bytes()).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

#[derive(Serialize)]
struct AllocationRecord<'a> {
    budget: u64,
    languages: Vec<Lang>,
    caps: &'a [u64],
    amounts: &'a [u64],
    real_amounts: &'a [f64],
    objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_lambda: Option<f64>,
    binding_caps: &'a [usize],
}

fn load_problem(
    problem: &Option<String>,
    inline: &Option<ProblemSpec>,
    base: &Path,
    budget_override: Option<u64>,
) -> Result<(ProblemSpec, AllocationProblem, Option<PathBuf>), CliError> {
    let (mut spec, path) = match (problem, inline) {
        (Some(p), None) => {
            let path = resolve(base, p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let spec: ProblemSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (spec, Some(path))
        }
        (None, Some(spec)) => (spec.clone(), None),
        _ => {
            return Err(CliError::Config(
                "exactly one of `problem` or `inline` must be given".into(),
            ))
        }
    };
    if let Some(budget) = budget_override {
        spec.budget = budget;
    }
    let problem = spec.to_problem().map_err(config_err)?;
    Ok((spec, problem, path))
}

fn write_allocation(
    ctx: &mut RunContext,
    name: &str,
    spec: &ProblemSpec,
    problem: &AllocationProblem,
    result: &AllocationResult,
) -> Result<(), CliError> {
    let languages: Vec<Lang> = spec.languages.iter().map(|l| l.lang.clone()).collect();
    let record = AllocationRecord {
        budget: problem.budget,
        languages: languages.clone(),
        caps: &problem.caps,
        amounts: &result.amounts,
        real_amounts: &result.real_amounts,
        objective: result.objective,
        dual_lambda: result.dual_lambda,
        binding_caps: &result.binding_caps,
    };
    ctx.write_output_json(&format!("{name}.json"), &record).map_err(runtime_err)?;
    let row = allocator::table_row(name, problem.budget, &languages, &result.amounts, result.objective);
    ctx.write_output(&format!("{name}.tsv"), format!("{row}\n").as_bytes())
        .map_err(runtime_err)?;
    Ok(())
}

fn cmd_allocate(args: AllocArgs, uniform: bool) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<AllocateConfig>(&args.common.config, |c, b| {
        c.problem.iter().map(|p| resolve(b, p)).collect()
    })?;
    let (spec, problem, path) = load_problem(&cfg.problem, &cfg.inline, &base, args.budget)?;

    let name = if uniform { "uniform" } else { "allocation" };
    let mut ctx = RunContext::new(name, &args.common.out_dir).map_err(runtime_err)?;
    ctx.set_params(&spec).map_err(runtime_err)?;
    if let Some(p) = path {
        ctx.record_input(&p).map_err(runtime_err)?;
    }

    let result = if uniform {
        allocator::uniform_allocation(&problem).map_err(runtime_err)?
    } else {
        allocator::solve(&problem).map_err(runtime_err)?
    };
    write_allocation(&mut ctx, name, &spec, &problem, &result)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_validate(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<ValidateConfig>(&args.config, |c, b| {
        let mut files: Vec<PathBuf> = c.problem.iter().map(|p| resolve(b, p)).collect();
        files.extend(c.result.iter().map(|p| resolve(b, p)));
        files
    })?;
    let (_spec, problem, problem_path) = load_problem(&cfg.problem, &cfg.inline, &base, None)?;

    let amounts: Vec<u64> = match (&cfg.amounts, &cfg.result) {
        (Some(a), None) => a.clone(),
        (None, Some(p)) => {
            let path = resolve(&base, p);
            let text = std::fs::read_to_string(&path).map_err(runtime_err)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(runtime_err)?;
            serde_json::from_value(value["amounts"].clone()).map_err(|e| {
                CliError::Config(format!("{}: no usable `amounts`: {e}", path.display()))
            })?
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of `amounts` or `result` must be given".into(),
            ))
        }
    };

    let mut ctx = RunContext::new("validate", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    if let Some(p) = problem_path {
        ctx.record_input(&p).map_err(runtime_err)?;
    }
    if let Some(p) = &cfg.result {
        ctx.record_input(&resolve(&base, p)).map_err(runtime_err)?;
    }

    let report = allocator::validate_result(&problem, &amounts, cfg.tolerance).map_err(runtime_err)?;
    ctx.write_output_json("validation.json", &report).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn parse_direction(raw: &str) -> Result<RecipeDirection, CliError> {
    match raw {
        "en_to_x" => Ok(RecipeDirection::EnToX),
        "x_to_en" => Ok(RecipeDirection::XToEn),
        "both_split" => Ok(RecipeDirection::BothSplit),
        other => Err(CliError::Config(format!(
            "--direction expects en_to_x | x_to_en | both_split, got `{other}`"
        ))),
    }
}

fn cmd_build(args: BuildArgs) -> Result<(), CliError> {
    let (mut cfg, base) = load_and_validate::<BuildConfig>(&args.common.config, |c, b| {
        vec![resolve(b, &c.recipe), resolve(b, &c.manifest)]
    })?;
    if let Some(raw) = &args.min_quality {
        cfg.min_quality = QualitySetting::parse_flag(raw).map_err(CliError::Config)?;
    }
    let recipe_path = resolve(&base, &cfg.recipe);
    let manifest_path = resolve(&base, &cfg.manifest);
    let mut recipe = MixRecipe::load(&recipe_path).map_err(config_err)?;
    let manifest = CorpusManifest::load(&manifest_path).map_err(config_err)?;

    if let Some(seed) = args.seed {
        recipe.seed = seed;
    }
    if let Some(raw) = &args.direction {
        let direction = parse_direction(raw)?;
        for lang in recipe.translation_amounts.keys().cloned().collect::<Vec<_>>() {
            recipe.directions.insert(lang, direction);
        }
    }

    let recipe_base = recipe_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    for source in &recipe.general_sources {
        require_file(&resolve(&recipe_base, &source.file_path)).map_err(CliError::Config)?;
    }

    let mut ctx = RunContext::new("build", &args.common.out_dir).map_err(runtime_err)?;
    ctx.set_params(&serde_json::json!({
        "recipe": cfg.recipe,
        "manifest": cfg.manifest,
        "resolved_recipe": recipe,
        "dedup": cfg.dedup,
    }))
    .map_err(runtime_err)?;
    ctx.set_seed(recipe.seed);
    ctx.record_input(&recipe_path).map_err(runtime_err)?;
    ctx.record_input(&manifest_path).map_err(runtime_err)?;
    for source in &recipe.general_sources {
        ctx.record_input(&resolve(&recipe_base, &source.file_path)).map_err(runtime_err)?;
    }
    for entry in &manifest.entries {
        for file in corpus::entry_files(&manifest, entry) {
            if file.is_file() {
                ctx.record_input(&file).map_err(runtime_err)?;
            }
        }
    }

    let dataset = databuild::mix(
        &recipe,
        &manifest,
        &recipe_base,
        MixOptions {
            quality: cfg.min_quality.to_filter(),
            dedup: cfg.dedup,
        },
    )
    .map_err(runtime_err)?;
    let files = databuild::render_dataset(&dataset);
    ctx.write_output("data.json", files.data_json.as_bytes()).map_err(runtime_err)?;
    ctx.write_output("meta.jsonl", files.meta_jsonl.as_bytes()).map_err(runtime_err)?;
    ctx.write_output("provenance.json", files.provenance_json.as_bytes()).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_mieval(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<MiEvalConfig>(&args.config, |c, b| {
        let mut files = vec![resolve(b, &c.seeds)];
        files.extend(c.translations.values().map(|p| resolve(b, p)));
        files
    })?;
    let seeds_path = resolve(&base, &cfg.seeds);
    let seeds = databuild::MiEvalSet::read_lines(&seeds_path).map_err(runtime_err)?;
    let mut translations = BTreeMap::new();
    for (lang, raw) in &cfg.translations {
        let path = resolve(&base, raw);
        translations.insert(
            lang.clone(),
            databuild::MiEvalSet::read_lines(&path).map_err(runtime_err)?,
        );
    }

    let mut ctx = RunContext::new("mieval", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&seeds_path).map_err(runtime_err)?;
    for raw in cfg.translations.values() {
        ctx.record_input(&resolve(&base, raw)).map_err(runtime_err)?;
    }

    let set = databuild::build_mi_eval(&seeds, &translations).map_err(runtime_err)?;
    ctx.write_output("mieval.tsv", set.to_tsv().as_bytes()).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn read_lines_file(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn parse_tokenizer(raw: &str) -> Result<evalkit::Tokenizer, CliError> {
    match raw {
        "whitespace" => Ok(evalkit::Tokenizer::Whitespace),
        "char" => Ok(evalkit::Tokenizer::Char),
        "external_subword" => Ok(evalkit::Tokenizer::ExternalSubword),
        other => Err(CliError::Config(format!(
            "--tokenizer expects whitespace | char | external_subword, got `{other}`"
        ))),
    }
}

fn cmd_bleu(args: BleuArgs) -> Result<(), CliError> {
    let (hyp_path, ref_path, mut tokenizer, smoothing) =
        match (&args.config, &args.hypotheses, &args.references) {
            (Some(config), _, _) => {
                let (cfg, base) = load_and_validate::<BleuConfig>(config, |c, b| {
                    vec![resolve(b, &c.hypotheses), resolve(b, &c.references)]
                })?;
                (
                    resolve(&base, &cfg.hypotheses),
                    resolve(&base, &cfg.references),
                    cfg.tokenizer.unwrap_or(evalkit::Tokenizer::Whitespace),
                    cfg.smoothing_epsilon,
                )
            }
            (None, Some(h), Some(r)) => {
                require_file(h).map_err(CliError::Config)?;
                require_file(r).map_err(CliError::Config)?;
                (h.clone(), r.clone(), evalkit::Tokenizer::Whitespace, None)
            }
            _ => {
                return Err(CliError::Config(
                    "bleu needs --config or both --hypotheses and --references".into(),
                ))
            }
        };
    if let Some(raw) = &args.tokenizer {
        tokenizer = parse_tokenizer(raw)?;
    }

    let mut ctx = RunContext::new("bleu", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&serde_json::json!({
        "hypotheses": hyp_path.display().to_string(),
        "references": ref_path.display().to_string(),
        "tokenizer": tokenizer,
    }))
    .map_err(runtime_err)?;
    ctx.record_input(&hyp_path).map_err(runtime_err)?;
    ctx.record_input(&ref_path).map_err(runtime_err)?;

    let hyps = read_lines_file(&hyp_path)?;
    let refs = read_lines_file(&ref_path)?;
    let report = evalkit::bleu(
        &hyps,
        &refs,
        BleuOptions {
            tokenizer,
            smoothing_epsilon: smoothing,
        },
    )
    .map_err(runtime_err)?;
    ctx.write_output_json("bleu_report.json", &report).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_em(args: EmArgs) -> Result<(), CliError> {
    let items_path = match (&args.config, &args.items) {
        (Some(config), _) => {
            let (cfg, base) =
                load_and_validate::<EmConfig>(config, |c, b| vec![resolve(b, &c.items)])?;
            resolve(&base, &cfg.items)
        }
        (None, Some(items)) => {
            require_file(items).map_err(CliError::Config)?;
            items.clone()
        }
        _ => return Err(CliError::Config("em needs --config or --items".into())),
    };

    let mut ctx = RunContext::new("em", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&serde_json::json!({ "items": items_path.display().to_string() }))
        .map_err(runtime_err)?;
    ctx.record_input(&items_path).map_err(runtime_err)?;

    let items = evalkit::read_qa_items(&items_path).map_err(runtime_err)?;
    let report = evalkit::exact_match(&items).map_err(runtime_err)?;
    ctx.write_output_json("em_report.json", &report).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_bootstrap(args: BootstrapArgs) -> Result<(), CliError> {
    let (mut cfg, base) = load_and_validate::<BootstrapConfig>(&args.common.config, |c, b| {
        vec![resolve(b, &c.system_a), resolve(b, &c.system_b)]
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let path_a = resolve(&base, &cfg.system_a);
    let path_b = resolve(&base, &cfg.system_b);
    let report_a = evalkit::EvalReport::load(&path_a).map_err(runtime_err)?;
    let report_b = evalkit::EvalReport::load(&path_b).map_err(runtime_err)?;

    // pair items by id, in system A's order
    let b_by_id: std::collections::HashMap<&str, f64> = report_b
        .per_item
        .iter()
        .map(|s| (s.id.as_str(), s.score))
        .collect();
    if b_by_id.len() != report_b.per_item.len() {
        return Err(CliError::Runtime("system B report has duplicate ids".into()));
    }
    if report_b.per_item.len() != report_a.per_item.len() {
        return Err(CliError::Runtime(format!(
            "reports pair {} vs {} items",
            report_a.per_item.len(),
            report_b.per_item.len()
        )));
    }
    let mut a_scores = Vec::with_capacity(report_a.per_item.len());
    let mut b_scores = Vec::with_capacity(report_a.per_item.len());
    for item in &report_a.per_item {
        let Some(&b) = b_by_id.get(item.id.as_str()) else {
            return Err(CliError::Runtime(format!(
                "item `{}` is missing from system B's report",
                item.id
            )));
        };
        a_scores.push(item.score);
        b_scores.push(b);
    }

    let mut ctx = RunContext::new("bootstrap", &args.common.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.set_seed(cfg.seed);
    ctx.record_input(&path_a).map_err(runtime_err)?;
    ctx.record_input(&path_b).map_err(runtime_err)?;

    let outcome = evalkit::paired_bootstrap(&a_scores, &b_scores, cfg.n_resamples, cfg.seed)
        .map_err(runtime_err)?;
    ctx.write_output_json("bootstrap.json", &outcome).map_err(runtime_err)?;

    let mut report = report_a;
    report.significance = Some(evalkit::Significance {
        baseline_name: cfg
            .baseline_name
            .clone()
            .unwrap_or_else(|| report_b.metric_name.clone()),
        p_value: outcome.p_value,
        n_resamples: outcome.n_resamples,
        seed: outcome.seed,
        note: outcome.direction_note.clone(),
    });
    ctx.write_output_json("report_with_significance.json", &report).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_judge(args: JudgeArgs) -> Result<(), CliError> {
    let (mut cfg, base) = load_and_validate::<JudgeConfig>(&args.common.config, |c, b| {
        vec![resolve(b, &c.items)]
    })?;
    if let Some(n) = args.first_n {
        cfg.first_n = Some(n);
    }
    if let Some(w) = args.workers {
        cfg.max_in_flight = Some(w);
    }
    let endpoint = std::env::var("JUDGE_ENDPOINT")
        .ok()
        .or_else(|| cfg.endpoint.clone())
        .ok_or_else(|| {
            CliError::Config("judge needs JUDGE_ENDPOINT or `endpoint` in the config".into())
        })?;
    let api_key = std::env::var("JUDGE_API_KEY").map_err(|_| {
        CliError::Config("judge needs the JUDGE_API_KEY environment variable".into())
    })?;

    let items_path = resolve(&base, &cfg.items);
    let transport = evalkit::HttpChatTransport::new(
        &endpoint,
        &api_key,
        &cfg.model,
        Duration::from_secs(cfg.timeout_secs),
    )
    .map_err(runtime_err)?;
    let client = JudgeClient::new(
        transport,
        JudgeOptions {
            max_in_flight: cfg.max_in_flight.unwrap_or(4),
            max_retries: cfg.max_retries,
            backoff_base: Duration::from_millis(cfg.backoff_ms),
            first_n: cfg.first_n,
        },
    );

    let mut ctx = RunContext::new("judge", &args.common.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&items_path).map_err(runtime_err)?;

    let (verdicts, audits) = match cfg.mode {
        JudgeMode::Correctness => {
            let items = evalkit::read_qa_items(&items_path).map_err(runtime_err)?;
            let (verdicts, audits) = client.judge_correctness(&items);
            let summary = evalkit::summarize_correctness(&verdicts);
            ctx.write_output_json("judge_summary.json", &summary).map_err(runtime_err)?;
            (verdicts, audits)
        }
        JudgeMode::Pairwise => {
            let text = std::fs::read_to_string(&items_path).map_err(runtime_err)?;
            let mut verdicts = Vec::new();
            let mut audits = Vec::new();
            let mut wins = [0usize; 3];
            let limit = cfg.first_n.unwrap_or(usize::MAX);
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() || verdicts.len() >= limit {
                    continue;
                }
                let row: PairwiseItem = serde_json::from_str(line).map_err(|e| {
                    CliError::Runtime(format!("{}:{}: {e}", items_path.display(), i + 1))
                })?;
                let (verdict, mut audit) =
                    client.judge_pairwise(&row.id, &row.question, &row.answer_a, &row.answer_b);
                audit.index = i;
                match verdict.pairwise_outcome() {
                    Some(evalkit::PairwiseOutcome::AWins) => wins[0] += 1,
                    Some(evalkit::PairwiseOutcome::Tie) => wins[1] += 1,
                    Some(evalkit::PairwiseOutcome::BWins) => wins[2] += 1,
                    None => {}
                }
                verdicts.push(verdict);
                audits.push(audit);
            }
            let unparseable = verdicts.iter().filter(|v| v.is_unparseable()).count();
            ctx.write_output_json(
                "judge_summary.json",
                &serde_json::json!({
                    "n": verdicts.len(),
                    "a_wins": wins[0],
                    "ties": wins[1],
                    "b_wins": wins[2],
                    "unparseable": unparseable,
                }),
            )
            .map_err(runtime_err)?;
            (verdicts, audits)
        }
    };

    let mut verdicts_jsonl = String::new();
    for v in &verdicts {
        verdicts_jsonl.push_str(&serde_json::to_string(v).map_err(runtime_err)?);
        verdicts_jsonl.push('\n');
    }
    ctx.write_output("verdicts.jsonl", verdicts_jsonl.as_bytes()).map_err(runtime_err)?;

    let mut audit_jsonl = String::new();
    for a in &audits {
        audit_jsonl.push_str(&serde_json::to_string(a).map_err(runtime_err)?);
        audit_jsonl.push('\n');
    }
    ctx.write_output("audit.jsonl", audit_jsonl.as_bytes()).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}

fn cmd_repspace(args: CommonArgs) -> Result<(), CliError> {
    let (cfg, base) = load_and_validate::<RepspaceConfig>(&args.config, |c, b| {
        vec![resolve(b, &c.dump)]
    })?;
    let dump_path = resolve(&base, &cfg.dump);
    let dumps = repspace::load_layer_dumps(&dump_path).map_err(runtime_err)?;
    let pivot = cfg.pivot.clone().unwrap_or_else(|| Lang::new("en").unwrap());

    let mut ctx = RunContext::new("repspace", &args.out_dir).map_err(runtime_err)?;
    ctx.set_params(&cfg).map_err(runtime_err)?;
    ctx.record_input(&dump_path).map_err(runtime_err)?;

    #[derive(Serialize)]
    struct LayerMetrics {
        layer_index: u32,
        alignment: repspace::AlignmentScore,
        separability: f64,
        degenerate: bool,
        explained_variance: [f64; 2],
    }

    let mut metrics = Vec::new();
    for dump in &dumps {
        let alignment = repspace::alignment_score(dump, &pivot).map_err(runtime_err)?;
        let separability = repspace::separability(dump, cfg.k).map_err(runtime_err)?;
        let projection = repspace::project_2d(dump).map_err(runtime_err)?;
        ctx.write_output(
            &format!("coords_layer{}.tsv", dump.layer_index),
            projection.to_tsv().as_bytes(),
        )
        .map_err(runtime_err)?;
        metrics.push(LayerMetrics {
            layer_index: dump.layer_index,
            alignment,
            separability,
            degenerate: projection.degenerate,
            explained_variance: projection.explained_variance,
        });
    }
    ctx.write_output_json("metrics.json", &metrics).map_err(runtime_err)?;
    ctx.finish().map_err(runtime_err)
}
