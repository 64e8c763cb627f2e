use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use emodial_core::curation::{auto_check, join_utterances, GateContext, GateRecord, ReviewDecision};
use emodial_core::sampler::{
    run_experiment, run_explicit_vs_implicit, write_experiment_csv, write_mode_csv, ExperimentConfig, StopRule,
    TurnStratum,
};
use emodial_core::store::{CorpusFilter, CorpusRecord, CorpusStore};
use emodial_core::textmetrics::write_metric_csv;
use emodial_core::transcript::{BrandRedactor, Transcript};
use emodial_core::{parse_transcript, CefrLevel, Dialogue, DialogueMeta, ParseOptions};
use emodial_generator::{
    grid, provider_from_config, GenerationError, Generator, PromptSpec, ProviderConfig, ProviderError, ProviderKind,
    DEFAULT_SCENARIO,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, DEFAULT_LISTEN, DEFAULT_STORE};
use crate::{
    CheckArgs, Cli, CliError, Command, ExportArgs, ExportFormat, FilterArgs, GenerateArgs, IngestArgs, MineArgs,
    OutputFormat, ReviewArgs, SampleArgs, ScoreArgs, ServeArgs,
};

struct Env {
    config: Config,
    store_path: PathBuf,
}

pub(crate) fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let store_path = cli
        .store
        .clone()
        .or_else(|| config.store.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE));
    let env = Env { config, store_path };
    match cli.command {
        Command::Generate(a) => generate(&env, &a, out),
        Command::Ingest(a) => ingest(&env, &a, out),
        Command::Check(a) => check(&env, &a, out),
        Command::Review(a) => review(&env, &a, out),
        Command::Serve(a) => serve(&env, a, out),
        Command::SampleReadability(a) => sample(&env, &a, out),
        Command::Mine(a) => mine(&env, &a, out),
        Command::Export(a) => export(&env, &a, out),
        Command::Score(a) => score(&env, &a, out),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(format!("cannot start async runtime: {e}")))
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

impl From<&FilterArgs> for CorpusFilter {
    fn from(f: &FilterArgs) -> Self {
        CorpusFilter {
            emotion: f.emotion,
            cefr: f.cefr,
            implicit: f.implicit,
            role_presence: f.role,
            disposition: f.disposition,
            qoi: f.qoi,
        }
    }
}

/// Redacts, auto-checks and scores a parsed transcript.
fn build_record(
    id: String,
    transcript: Transcript,
    meta: DialogueMeta,
    ctx: &GateContext,
    redactor: &BrandRedactor,
) -> CorpusRecord {
    let d = redactor.redact(&Dialogue::from_transcript(id, transcript, meta));
    let gate = auto_check(&d, ctx, Utc::now());
    let report = ctx
        .analyzer
        .score(&join_utterances(d.turns().iter().map(|t| t.text())))
        .ok();
    CorpusRecord::new(d, gate, report)
}

fn provider_error(e: ProviderError) -> CliError {
    match e {
        ProviderError::Config(_) => CliError::Usage(e.to_string()),
        _ => CliError::Provider(e.to_string()),
    }
}

fn load_provider_config(path: &Path) -> Result<ProviderConfig, CliError> {
    let mut cfg: ProviderConfig =
        toml::from_str(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(dir) = cfg.mock_dir.as_mut().filter(|d| d.is_relative()) {
        *dir = path.parent().unwrap_or(Path::new(".")).join(&*dir);
    }
    Ok(cfg)
}

fn generate(env: &Env, args: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut provider_cfg = match &args.provider_config {
        Some(p) => load_provider_config(p)?,
        None => env.config.provider.clone(),
    };
    if args.mock || args.mock_dir.is_some() {
        provider_cfg.kind = ProviderKind::Mock;
    }
    if let Some(dir) = &args.mock_dir {
        provider_cfg.mock_dir = Some(dir.clone());
    }
    provider_cfg.validate().map_err(provider_error)?;
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let scenario = args.scenario.as_deref().unwrap_or(DEFAULT_SCENARIO);
    let cells = if args.grid {
        grid(scenario)
    } else {
        let (Some(e), Some(c)) = (args.emotion, args.cefr) else {
            return Err(CliError::Usage("--emotion and --cefr are required without --grid".into()));
        };
        let mut spec = PromptSpec::new(e, c, args.implicit);
        spec.scenario = scenario.to_string();
        vec![spec]
    };
    let mut specs = Vec::with_capacity(cells.len() * args.count);
    for mut spec in cells {
        if let Some(t) = args.turns {
            spec.target_turns = t;
        }
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        specs.extend(std::iter::repeat_n(spec, args.count));
    }

    let ctx = env.config.gate_context()?;
    let redactor = env.config.brand_redactor()?;
    let mut store = CorpusStore::open(&env.store_path)?;
    let provider = provider_from_config(&provider_cfg).map_err(provider_error)?;
    let generator = Generator::new(provider, provider_cfg, ctx.lexicon.clone());
    let results = runtime()?
        .block_on(generator.generate_batch(&specs))
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let opts = ParseOptions::with_customer_alias();
    let mut ids = Vec::new();
    let mut failures = Vec::new();
    let (mut provider_failures, mut parse_failures) = (0, 0);
    for (i, (spec, result)) in specs.iter().zip(results).enumerate() {
        let cell = format!("{}/{}/{}", spec.target_emotion, spec.cefr, if spec.implicit { "implicit" } else { "explicit" });
        let generated = match result {
            Ok(g) => g,
            Err(e) => {
                if matches!(e, GenerationError::Provider { .. }) {
                    provider_failures += 1;
                } else {
                    parse_failures += 1;
                }
                tracing::error!(request = i, %cell, error = %e, "generation failed");
                failures.push(json!({"request": i, "cell": cell, "error": e.to_string()}));
                continue;
            }
        };
        let transcript = match parse_transcript(&generated.raw_text, &opts) {
            Ok(t) => t,
            Err(e) => {
                parse_failures += 1;
                tracing::error!(request = i, %cell, error = %e, "unparseable transcript");
                failures.push(json!({"request": i, "cell": cell, "error": e.to_string()}));
                continue;
            }
        };
        let mut meta = DialogueMeta::new(spec.target_emotion, spec.cefr, spec.implicit);
        meta.scenario = spec.scenario.clone();
        meta.provider = generated.provider.clone();
        let record = build_record(store.next_id(), transcript, meta, &ctx, &redactor);
        ids.push(store.append(record)?);
    }

    match args.format {
        OutputFormat::Text => {
            for id in &ids {
                writeln!(out, "{id}")?;
            }
        }
        OutputFormat::Json => print_json(out, &json!({"ids": ids, "failures": failures}))?,
    }
    let total = specs.len();
    if provider_failures > 0 {
        return Err(CliError::Provider(format!(
            "{provider_failures} of {total} generation request(s) failed at the provider"
        )));
    }
    if parse_failures > 0 {
        return Err(CliError::Validation(format!(
            "{parse_failures} of {total} generated transcript(s) could not be parsed"
        )));
    }
    Ok(())
}

fn ingest(env: &Env, args: &IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.id.is_some() && args.files.len() > 1 {
        return Err(CliError::Usage("--id needs exactly one file".into()));
    }
    let opts = if args.customer_alias {
        ParseOptions::with_customer_alias()
    } else {
        ParseOptions::default()
    };
    // Parse everything before touching the store so a bad file adds nothing.
    let mut parsed = Vec::with_capacity(args.files.len());
    for path in &args.files {
        let t = parse_transcript(&read_text(path)?, &opts)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        parsed.push(t);
    }
    let ctx = env.config.gate_context()?;
    let redactor = env.config.brand_redactor()?;
    let mut store = CorpusStore::open(&env.store_path)?;
    let mut ids = Vec::new();
    for t in parsed {
        let mut meta = DialogueMeta::new(args.emotion, args.cefr, args.implicit);
        meta.scenario = args.scenario.clone().unwrap_or_default();
        meta.provider = "ingest".to_string();
        let id = args.id.clone().unwrap_or_else(|| store.next_id());
        ids.push(store.append(build_record(id, t, meta, &ctx, &redactor))?);
    }
    match args.format {
        OutputFormat::Text => {
            for id in &ids {
                writeln!(out, "{id}")?;
            }
            Ok(())
        }
        OutputFormat::Json => print_json(out, &json!({ "ids": ids })),
    }
}

fn fmt_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "unset",
    }
}

fn check(env: &Env, args: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = CorpusStore::open_read_only(&env.store_path)?;
    let record = store
        .get(&args.id)
        .ok_or_else(|| CliError::Validation(format!("no dialogue with id `{}`", args.id)))?;
    let ctx = env.config.gate_context()?;
    let auto = auto_check(&record.dialogue, &ctx, Utc::now());
    if args.format == OutputFormat::Json {
        return print_json(out, &json!({"id": args.id, "auto": auto, "stored": record.gate}));
    }
    write_check(out, record, &auto)
}

fn write_check(out: &mut dyn Write, record: &CorpusRecord, auto: &GateRecord) -> Result<(), CliError> {
    let m = record.dialogue.meta();
    let ev = &auto.evidence;
    writeln!(out, "id:                   {}", record.id())?;
    writeln!(
        out,
        "target:               {} {} {}",
        m.target_emotion,
        m.cefr,
        if m.implicit { "implicit" } else { "explicit" }
    )?;
    match &ev.emotion_match {
        Some(label) => writeln!(out, "emotional coherence:  {} (label `{label}`)", fmt_bool(auto.emotional_coherence))?,
        None => writeln!(out, "emotional coherence:  {} (no matching label)", fmt_bool(auto.emotional_coherence))?,
    }
    let band = ev.band.map(|b| b.to_string()).unwrap_or_default();
    match (ev.fkgl, &ev.complexity_error) {
        (Some(f), _) => writeln!(
            out,
            "complexity coherence: {} (FKGL {f:.2}, band {band})",
            fmt_bool(auto.complexity_coherence)
        )?,
        (None, Some(err)) => writeln!(out, "complexity coherence: {} ({err})", fmt_bool(auto.complexity_coherence))?,
        (None, None) => writeln!(out, "complexity coherence: {}", fmt_bool(auto.complexity_coherence))?,
    }
    if !m.implicit {
        writeln!(out, "ied violations:       n/a (explicit)")?;
    } else if auto.ied_violations.is_empty() {
        writeln!(out, "ied violations:       none")?;
    } else {
        let hits: Vec<String> = auto
            .ied_violations
            .iter()
            .map(|v| format!("turn {}: {}", v.turn, v.word))
            .collect();
        writeln!(out, "ied violations:       {}", hits.join(", "))?;
    }
    let g = &record.gate;
    let qoi = g.qoi.map(|q| q.to_string()).unwrap_or_else(|| "-".into());
    writeln!(out, "stored disposition:   {} (QoI {qoi})", g.disposition.as_str())?;
    Ok(())
}

fn review(env: &Env, args: &ReviewArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.reviewer.trim().is_empty() {
        return Err(CliError::Usage("--reviewer must not be empty".into()));
    }
    let mut decision = ReviewDecision::new(args.qoi, args.reviewer.trim());
    decision.emotional_coherence = args.emotional_coherence;
    decision.complexity_coherence = args.complexity_coherence;
    let mut store = CorpusStore::open(&env.store_path)?;
    let gate = &store.review(&args.id, &decision, Utc::now())?.gate;
    match args.format {
        OutputFormat::Text => {
            writeln!(out, "{}\t{}", gate.dialogue_id, gate.disposition.as_str())?;
            Ok(())
        }
        OutputFormat::Json => print_json(out, gate),
    }
}

fn serve(env: &Env, args: ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let svc = &env.config.service;
    let listen = args
        .listen
        .or_else(|| svc.listen.clone())
        .unwrap_or_else(|| DEFAULT_LISTEN.to_string());
    let ui_dir = args.ui_dir.or_else(|| svc.ui_dir.clone());
    let token = args
        .token
        .or_else(|| svc.token_env.as_ref().and_then(|var| std::env::var(var).ok()));
    let state = emodial_service::AppState::open(&env.store_path, token)?;
    let app = emodial_service::router(state, ui_dir.as_deref());
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .map_err(|e| CliError::Io(format!("cannot bind {listen}: {e}")))?;
        writeln!(out, "listening on http://{}", listener.local_addr()?)?;
        out.flush()?;
        emodial_service::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

fn sample(env: &Env, args: &SampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.cap == 0 {
        return Err(CliError::Usage("--cap must be positive".into()));
    }
    let analyzer = env.config.analyzer()?;
    let strata = if args.strata.is_empty() {
        TurnStratum::all()
    } else {
        args.strata.clone()
    };
    let config = ExperimentConfig {
        runs_per_stratum: args.runs,
        base_seed: args.seed,
        cap: args.cap,
        stop_rule: if args.skip_overflow {
            StopRule::SkipAndContinue
        } else {
            StopRule::StopAtOverflow
        },
    };
    let mut store = if args.record {
        CorpusStore::open(&env.store_path)?
    } else {
        CorpusStore::open_read_only(&env.store_path)?
    };
    let outcome = run_experiment(store.records(), &strata, &config, &analyzer)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    for e in &outcome.errors {
        tracing::warn!("{e}");
    }
    if outcome.stats.is_empty() {
        let reasons: Vec<String> = outcome.errors.iter().map(ToString::to_string).collect();
        return Err(CliError::Validation(format!("no stratum could be sampled: {}", reasons.join("; "))));
    }

    let mut file;
    let sink: &mut dyn Write = match &args.out {
        Some(p) => {
            file = create(p)?;
            &mut file
        }
        None => out,
    };
    match args.format {
        OutputFormat::Text => write_experiment_csv(&mut *sink, &outcome.stats)?,
        OutputFormat::Json => {
            let errors: Vec<String> = outcome.errors.iter().map(ToString::to_string).collect();
            print_json(
                sink,
                &json!({
                    "runs_per_stratum": config.runs_per_stratum,
                    "base_seed": config.base_seed,
                    "cap": config.cap,
                    "stop_rule": config.stop_rule,
                    "stats": outcome.stats,
                    "errors": errors,
                }),
            )?;
        }
    }
    sink.flush()?;

    if let Some(p) = &args.modes_out {
        let mut reports = Vec::new();
        for cefr in CefrLevel::ALL {
            match run_explicit_vs_implicit(store.records(), cefr, &analyzer) {
                Ok(pair) => reports.extend(pair),
                Err(e) => tracing::warn!("{e}"),
            }
        }
        let mut f = create(p)?;
        write_mode_csv(&mut f, &reports)?;
        f.flush()?;
    }
    if args.record {
        for run in &outcome.runs {
            store.append_sample_run(run)?;
        }
    }
    Ok(())
}

fn mine(env: &Env, args: &MineArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = CorpusStore::open_read_only(&env.store_path)?;
    let patterns = store
        .mine(&CorpusFilter::from(&args.filter), args.n, args.min_support)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match args.format {
        OutputFormat::Text => {
            writeln!(out, "support\tpattern")?;
            for p in &patterns {
                writeln!(out, "{}\t{p}", p.support)?;
            }
            Ok(())
        }
        OutputFormat::Json => {
            let rows: Vec<_> = patterns
                .iter()
                .map(|p| {
                    json!({
                        "pattern": p.to_string(),
                        "links": p.links,
                        "support": p.support,
                        "emotion": p.stratum.emotion,
                        "cefr": p.stratum.cefr,
                    })
                })
                .collect();
            print_json(out, &rows)
        }
    }
}

fn export(env: &Env, args: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = CorpusStore::open_read_only(&env.store_path)?;
    let records = store.query(&CorpusFilter::from(&args.filter));
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    match args.format {
        ExportFormat::Transcript => {
            for r in &records {
                let path = args.out.join(format!("{}.txt", r.id()));
                std::fs::write(&path, r.dialogue.to_transcript())
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                writeln!(out, "{}", path.display())?;
            }
        }
        ExportFormat::Csv => {
            let gates = args.out.join("gates.csv");
            let mut f = create(&gates)?;
            emodial_core::curation::write_gate_csv(&mut f, records.iter().map(|r| (&r.dialogue, &r.gate)))?;
            f.flush()?;
            let metrics = args.out.join("metrics.csv");
            let mut f = create(&metrics)?;
            write_metric_csv(
                &mut f,
                records
                    .iter()
                    .filter_map(|r| r.metric_report.as_ref().map(|m| (r.id(), m))),
            )?;
            f.flush()?;
            writeln!(out, "{}", gates.display())?;
            writeln!(out, "{}", metrics.display())?;
        }
    }
    Ok(())
}

fn score(env: &Env, args: &ScoreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let analyzer = env.config.analyzer()?;
    let mut rows = Vec::with_capacity(args.files.len());
    for path in &args.files {
        let report = analyzer
            .score(&read_text(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        rows.push((path.display().to_string(), report));
    }
    match args.format {
        OutputFormat::Text => write_metric_csv(&mut *out, rows.iter().map(|(id, r)| (id.as_str(), r)))?,
        OutputFormat::Json => {
            let items: Vec<_> = rows.iter().map(|(f, r)| json!({"file": f, "report": r})).collect();
            print_json(out, &items)?;
        }
    }
    Ok(())
}
