use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::Parser;
use coset::classrank::contrastive_sets;
use coset::coexpand::{expand, ClassState};
use coset::fuse_eval::{confusion_matrix, fuse_predict, metrics, Metrics, Prediction};
use coset::ingest::{
    convert_semeval, filter_seeds, load_classifier_scores, load_patterns, load_relation_instances, load_seed_sets,
    load_store, seed_pair_id, seeds_to_json, store_to_bytes, DatasetSchema, SeedFile, DEFAULT_STOPWORDS,
};
use coset::probing::{
    average_representations, pair_representations, render_mention, render_query, EmbeddingProvider, HashingProvider,
    HearstPattern, HttpProvider, ProbeQuery, SeedBinding,
};
use coset::{EmbeddingStore, Error, ExemplarSet, ExpansionConfig, Origin, Provenance, Result, SetListing};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{sha256_file, Manifest, RunOutput};
use crate::{Cli, Command, Common};

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("{flag} is required for this command")))
}

fn load_config(common: &Common) -> Result<ExpansionConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => ExpansionConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    let Some(jobs) = jobs else { return Ok(()) };
    if jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    // Only the first call in a process can size the global pool.
    if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
        log::warn!("worker pool already initialised; --jobs ignored");
    }
    Ok(())
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    configure_jobs(cli.common.jobs)?;
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, cli.common.out.as_deref());
    }
    let config = load_config(&cli.common)?;
    let schema = DatasetSchema::resolve(&cli.common.schema)?;
    let out_dir = required(&cli.common.out, "--out")?.to_path_buf();
    let mut out = RunOutput::new(out_dir);
    if let Some(path) = &cli.common.config {
        out.input("config", path)?;
    }
    if Path::new(&cli.common.schema).is_file() {
        out.input("schema", Path::new(&cli.common.schema))?;
    }
    let c = &cli.common;
    let name = match &cli.command {
        Command::Probe {
            provider,
            dataset,
            timeout,
        } => {
            probe(c, &schema, provider, dataset.as_deref(), *timeout, &mut out)?;
            "probe"
        }
        Command::RankClasses => {
            rank_classes(c, &schema, &config, &mut out)?;
            "rank-classes"
        }
        Command::Expand { candidates } => {
            run_expand(c, &schema, &config, candidates.as_deref(), &mut out)?;
            "expand"
        }
        Command::FuseEval {
            scores,
            sets,
            dataset,
            lambda,
        } => {
            fuse_eval(c, &schema, &config, scores, sets.as_deref(), dataset, lambda, &mut out)?;
            "fuse-eval"
        }
        Command::FilterSeeds { stopwords } => {
            run_filter_seeds(c, &schema, stopwords.as_deref(), &mut out)?;
            "filter-seeds"
        }
        Command::ConvertSemeval { input } => {
            out.input("semeval", input)?;
            let records = convert_semeval(&std::fs::read_to_string(input)?)?;
            out.json("dataset.json", &records)?;
            "convert-semeval"
        }
        Command::Replay { .. } => unreachable!("handled above"),
    };
    out.commit(name, &argv, &schema.name, &config)
}

fn seeds(common: &Common, schema: &DatasetSchema, out: &mut RunOutput) -> Result<SeedFile> {
    let path = required(&common.seeds, "--seeds")?;
    out.input("seeds", path)?;
    load_seed_sets(path, schema)
}

fn store(common: &Common, out: &mut RunOutput) -> Result<EmbeddingStore> {
    let path = required(&common.store, "--store")?;
    out.input("store", path)?;
    load_store(path)
}

/// Seed exemplar sets, each member carrying its analogous-pattern vector.
fn seed_state(seeds: &SeedFile, store: &EmbeddingStore) -> Result<ClassState> {
    let mut state = ClassState::new();
    for (class, pairs) in seeds {
        let mut set = ExemplarSet::new(class.clone());
        for i in 0..pairs.len() {
            let id = seed_pair_id(class, i);
            let e = store.require(&id, Provenance::AnalogousPattern)?.clone();
            set.push(id, e, Origin::Seed)?;
        }
        state.insert(class.clone(), set);
    }
    Ok(state)
}

fn make_provider(spec: &str, timeout: u64) -> Result<Box<dyn EmbeddingProvider>> {
    if let Some(dim) = spec.strip_prefix("stub:") {
        let dim = dim
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad stub dimension in `{spec}`")))?;
        return Ok(Box::new(HashingProvider::new(dim)?));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        let p = HttpProvider::connect(spec, Duration::from_secs(timeout))?;
        log::info!("provider {} (dim {}, mask `{}`)", p.model_id(), p.dim(), p.mask_token());
        return Ok(Box::new(p));
    }
    Err(Error::InvalidConfig(format!(
        "--provider must be `stub:<dim>` or an http(s) URL, got `{spec}`"
    )))
}

fn probe(
    common: &Common,
    schema: &DatasetSchema,
    provider_spec: &str,
    dataset: Option<&Path>,
    timeout: u64,
    out: &mut RunOutput,
) -> Result<()> {
    let patterns = match &common.patterns {
        Some(path) => {
            out.input("patterns", path)?;
            load_patterns(path)?
        }
        None => HearstPattern::defaults(),
    };
    let seeds = match &common.seeds {
        Some(_) => Some(seeds(common, schema, out)?),
        None => None,
    };
    let mentions = match dataset {
        Some(path) => {
            out.input("dataset", path)?;
            load_relation_instances(path, schema)?
        }
        None => Vec::new(),
    };
    if seeds.is_none() && mentions.is_empty() {
        return Err(Error::InvalidConfig("probe needs --seeds and/or --dataset".into()));
    }
    let provider = make_provider(provider_spec, timeout)?;
    let mask = provider.mask_token().to_string();

    let mut queries: Vec<ProbeQuery> = Vec::new();
    for (class, pairs) in seeds.iter().flatten() {
        for (i, (head, tail)) in pairs.iter().enumerate() {
            let id = seed_pair_id(class, i);
            for pattern in &patterns {
                let q = render_query(pattern, Some(SeedBinding { head, tail }), Some(class), &mask)?;
                queries.push(q.with_pair_id(id.clone()));
            }
        }
    }
    for m in &mentions {
        queries.push(render_mention(m, &mask)?);
        let (head, tail) = (m.head_text(), m.tail_text());
        for pattern in &patterns {
            let q = render_query(pattern, Some(SeedBinding { head: &head, tail: &tail }), None, &mask)?;
            queries.push(q.with_pair_id(m.id.clone()));
        }
    }
    log::info!("embedding {} probe queries", queries.len());
    let reps = pair_representations(&queries, provider.as_ref())?;

    // Average same-kind representations of a pair, keeping first-seen order.
    let mut order: Vec<(String, Provenance)> = Vec::new();
    let mut groups: HashMap<(String, Provenance), Vec<usize>> = HashMap::new();
    for (i, q) in queries.iter().enumerate() {
        let key = (q.bound_pair_id.clone().expect("probe queries are bound"), q.provenance);
        groups.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Vec::new()
        });
        groups.get_mut(&key).expect("inserted").push(i);
    }
    let mut store = EmbeddingStore::with_dim(provider.dim());
    for key in order {
        let idx = &groups[&key];
        let e = if idx.len() == 1 {
            reps[idx[0]].clone()
        } else {
            let members: Vec<_> = idx.iter().map(|&i| reps[i].clone()).collect();
            let sources: Vec<&str> = idx.iter().map(|&i| queries[i].pattern_id.as_str()).collect();
            average_representations(&members)?.with_source(format!("{}#{}", key.0, sources.join("+")))
        };
        store.put(key.0, e)?;
    }
    out.file("store.bin", store_to_bytes(&store)?);
    Ok(())
}

fn rank_classes(common: &Common, schema: &DatasetSchema, config: &ExpansionConfig, out: &mut RunOutput) -> Result<()> {
    let seeds = seeds(common, schema, out)?;
    let store = store(common, out)?;
    let state = seed_state(&seeds, &store)?;
    let sets = contrastive_sets(&state, config.k, config.num_contrastive)?;
    out.json("contrastive.json", &sets)
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    for item in items {
        serde_json::to_writer(&mut bytes, &item)?;
        bytes.push(b'\n');
    }
    Ok(bytes)
}

fn run_expand(
    common: &Common,
    schema: &DatasetSchema,
    config: &ExpansionConfig,
    candidates: Option<&Path>,
    out: &mut RunOutput,
) -> Result<()> {
    let seeds = seeds(common, schema, out)?;
    let store = store(common, out)?;
    let state = seed_state(&seeds, &store)?;
    let pool: Vec<String> = match candidates {
        Some(path) => {
            out.input("candidates", path)?;
            std::fs::read_to_string(path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        }
        None => store.ids_with(Provenance::MentionContext).map(String::from).collect(),
    };
    log::info!("expanding {} classes from {} candidates", state.len(), pool.len());
    let outcome = expand(state, &pool, config, &store)?;
    for (id, reason) in &outcome.rejected_candidates {
        log::warn!("candidate `{id}` skipped: {reason}");
    }
    let sets: Vec<SetListing> = outcome.state.values().map(ExemplarSet::listing).collect();
    out.json("sets.json", &sets)?;
    out.file("audit.jsonl", jsonl(outcome.iterations.iter().flat_map(|it| &it.additions))?);

    #[derive(Serialize)]
    struct ContrastiveRecord<'a> {
        iteration: u64,
        contrastive: &'a coset::coexpand::ContrastiveMap,
    }
    out.file(
        "contrastive.jsonl",
        jsonl(outcome.iterations.iter().map(|it| ContrastiveRecord {
            iteration: it.iteration,
            contrastive: &it.contrastive,
        }))?,
    );

    #[derive(Serialize)]
    struct Rejected<'a> {
        pair_id: &'a str,
        reason: &'a str,
    }
    let rejected: Vec<Rejected> = outcome
        .rejected_candidates
        .iter()
        .map(|(pair_id, reason)| Rejected { pair_id, reason })
        .collect();
    out.json("rejected_candidates.json", &rejected)
}

fn load_sets(path: &Path, store: &EmbeddingStore, schema: &DatasetSchema) -> Result<ClassState> {
    let listings: Vec<SetListing> = serde_json::from_slice(&std::fs::read(path)?)?;
    let mut state = ClassState::new();
    for listing in listings {
        if !schema.contains(&listing.class_name) {
            return Err(Error::SchemaMismatch(format!(
                "set class `{}` is not in schema `{}`",
                listing.class_name, schema.name
            )));
        }
        let mut set = ExemplarSet::new(listing.class_name.clone());
        for m in listing.members {
            let e = store.require(&m.pair_id, Provenance::AnalogousPattern)?.clone();
            set.push(m.pair_id, e, m.origin)?;
        }
        state.insert(listing.class_name, set);
    }
    Ok(state)
}

#[derive(Serialize)]
struct MetricsRecord<'a> {
    lambda: f64,
    negative_label: &'a str,
    #[serde(flatten)]
    metrics: Metrics,
}

#[allow(clippy::too_many_arguments)]
fn fuse_eval(
    common: &Common,
    schema: &DatasetSchema,
    config: &ExpansionConfig,
    scores_path: &Path,
    sets_path: Option<&Path>,
    dataset: &Path,
    lambdas: &[f64],
    out: &mut RunOutput,
) -> Result<()> {
    let store = store(common, out)?;
    let state = match sets_path {
        Some(path) => {
            out.input("sets", path)?;
            load_sets(path, &store, schema)?
        }
        None => seed_state(&seeds(common, schema, out)?, &store)?,
    };
    out.input("scores", scores_path)?;
    let scores = load_classifier_scores(scores_path, schema)?;
    out.input("dataset", dataset)?;
    let gold: HashMap<String, String> = load_relation_instances(dataset, schema)?
        .into_iter()
        .filter_map(|m| m.gold_relation.map(|g| (m.id, g)))
        .collect();

    let lambdas = if lambdas.is_empty() {
        vec![config.lambda_weight]
    } else {
        lambdas.to_vec()
    };
    let sweep = lambdas.len() > 1;
    let mut records = Vec::new();
    for &lambda in &lambdas {
        let cfg = ExpansionConfig {
            lambda_weight: lambda,
            ..config.clone()
        };
        cfg.validate()?;
        let preds: Vec<Prediction> = scores
            .par_iter()
            .map(|s| fuse_predict(s, store.require(&s.pair_id, Provenance::MentionContext)?, &state, &cfg))
            .collect::<Result<_>>()?;
        let matrix = confusion_matrix(&preds, &gold, &schema.relation_inventory)?;
        let record = MetricsRecord {
            lambda,
            negative_label: &schema.negative_label,
            metrics: metrics(&preds, &gold, Some(&schema.negative_label))?,
        };
        if sweep {
            out.file(format!("confusion-lambda-{lambda}.csv"), matrix.to_csv().into_bytes());
        } else {
            out.file("confusion.csv", matrix.to_csv().into_bytes());
            out.file("predictions.jsonl", jsonl(&preds)?);
            out.json("metrics.json", &record)?;
        }
        records.push(record);
    }
    if sweep {
        out.file("metrics.jsonl", jsonl(&records)?);
    }
    Ok(())
}

fn run_filter_seeds(
    common: &Common,
    schema: &DatasetSchema,
    stopwords: Option<&Path>,
    out: &mut RunOutput,
) -> Result<()> {
    let seeds = seeds(common, schema, out)?;
    let words: Vec<String> = match stopwords {
        Some(path) => {
            out.input("stopwords", path)?;
            std::fs::read_to_string(path)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        }
        None => DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
    };
    let (kept, rejected) = filter_seeds(&seeds, &words)?;
    for r in &rejected {
        log::info!("{}: rejected ({}, {}) on `{}`", r.class, r.head, r.tail, r.matched);
    }
    out.file("seeds.json", format!("{}\n", seeds_to_json(&kept)?).into_bytes());
    out.json("rejected.json", &rejected)
}

fn replay(manifest_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(manifest_path)?)?;
    let mut changed = BTreeMap::new();
    for (role, input) in &manifest.inputs {
        let now = sha256_file(&input.path)?;
        if now != input.sha256 {
            changed.insert(role.clone(), input.path.display().to_string());
        }
    }
    if !changed.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "inputs changed since the recorded run: {changed:?}"
        )));
    }
    let mut argv = vec!["coset".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    if let Some(dir) = out_override {
        argv.push("--out".into());
        argv.push(dir.display().to_string());
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::InvalidConfig(format!("recorded arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Error::InvalidConfig("a manifest cannot replay another replay".into()));
    }
    log::info!("replaying `{}`", manifest.subcommand);
    run(cli, argv)
}
