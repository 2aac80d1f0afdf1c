use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hetblock::learner::learn_scheme;
use hetblock::matcher::{
    exhaustive_mappings, generate_duplicates, load_duplicates, mapping_precision_recall, precision_recall_at_k,
    run_matcher, save_duplicates, DuplicateCandidate, IdPair,
};
use hetblock::pipeline::{run_pipeline, MappingSource, PipelineParams, StageTiming};
use hetblock::predicates::BlockingScheme;
use hetblock::rdf::{parse_ntriples, property_table_to_triples, serialize_ntriples, triples_to_property_table};
use hetblock::runtime::{build_blocks, candidate_set_capped, evaluate, CandidateSet, EvalReport};
use hetblock::synth::{generate, GenSpec, SideData, Style};
use hetblock::table::{
    load_csv, load_ground_truth, load_mappings, save_csv, save_ground_truth, save_mappings, CsvOptions, Dataset,
    GroundTruth, MappingSet,
};
use hetblock::{Error, Result};
use serde::Serialize;

use crate::config::{csv_options, Format, InputSpec, PipelineConfig};
use crate::{Cli, Command, Direction, InputArgs, LearnerArgs, MatcherArgs, StyleArg};

const PQ_TOLERANCE: f64 = 1e-12;

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(seed) = cfg.seed {
        cfg.matcher.seed = seed;
    }
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(Error::Argument("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(e.to_string()))?;
    }
    let out = cfg.out_dir();
    fs::create_dir_all(&out)?;

    match cli.command {
        Command::Generate {
            n_left,
            n_right,
            n_dups,
            left_style,
            right_style,
            noise,
            field_split,
        } => {
            let spec = GenSpec {
                n_left,
                n_right,
                n_dups,
                left_style: style(left_style),
                right_style: style(right_style),
                noise,
                field_split,
                seed: cfg.seed.unwrap_or(0),
            };
            cmd_generate(&spec, &out)
        }
        Command::Convert {
            input,
            output,
            direction,
        } => cmd_convert(&input, &output, direction),
        Command::Match {
            input,
            matcher,
            exhaustive,
            truth,
            truth_mapping,
        } => {
            apply_inputs(&mut cfg, &input);
            apply_matcher(&mut cfg, &matcher);
            cfg.exhaustive |= exhaustive;
            cfg.truth = truth.or(cfg.truth);
            cfg.truth_mapping = truth_mapping.or(cfg.truth_mapping);
            cfg.validate()?;
            cmd_match(&cfg, &out)
        }
        Command::Learn {
            input,
            learner,
            duplicates,
            mappings,
        } => {
            apply_inputs(&mut cfg, &input);
            apply_learner(&mut cfg, &learner);
            cfg.validate()?;
            cmd_learn(&cfg, &duplicates, &mappings, &out)
        }
        Command::Block {
            input,
            scheme,
            block_cap,
        } => {
            apply_inputs(&mut cfg, &input);
            cfg.block_cap = block_cap.or(cfg.block_cap);
            cmd_block(&cfg, &scheme, &out)
        }
        Command::Evaluate {
            gamma,
            truth,
            n_left,
            n_right,
            input,
        } => {
            apply_inputs(&mut cfg, &input);
            let n_left = match n_left {
                Some(n) => n,
                None => side(&cfg.left, "left")?.load("left")?.len(),
            };
            let n_right = match n_right {
                Some(n) => n,
                None => side(&cfg.right, "right")?.load("right")?.len(),
            };
            cmd_evaluate(&gamma, &truth, n_left, n_right, &out)
        }
        Command::Pipeline {
            input,
            matcher,
            learner,
            mappings,
            exhaustive,
            truth,
            truth_mapping,
            block_cap,
        } => {
            apply_inputs(&mut cfg, &input);
            apply_matcher(&mut cfg, &matcher);
            apply_learner(&mut cfg, &learner);
            cfg.mappings = mappings.or(cfg.mappings);
            cfg.exhaustive |= exhaustive;
            cfg.truth = truth.or(cfg.truth);
            cfg.truth_mapping = truth_mapping.or(cfg.truth_mapping);
            cfg.block_cap = block_cap.or(cfg.block_cap);
            cfg.validate()?;
            cmd_pipeline(&cfg, &out)
        }
    }
}

fn style(s: StyleArg) -> Style {
    match s {
        StyleArg::Tabular => Style::Tabular,
        StyleArg::Rdf => Style::Rdf,
    }
}

fn merge_input(slot: &mut Option<InputSpec>, path: &Option<PathBuf>, format: Option<Format>, id: &Option<String>) {
    if let Some(p) = path {
        *slot = Some(InputSpec::new(p));
    }
    if let Some(spec) = slot {
        if format.is_some() {
            spec.format = format;
        }
        if id.is_some() {
            spec.id_column = id.clone();
        }
    }
}

fn apply_inputs(cfg: &mut PipelineConfig, a: &InputArgs) {
    merge_input(&mut cfg.left, &a.left, a.left_format, &a.left_id);
    merge_input(&mut cfg.right, &a.right, a.right_format, &a.right_id);
}

fn apply_matcher(cfg: &mut PipelineConfig, a: &MatcherArgs) {
    if let Some(t) = a.t {
        cfg.matcher.t = t;
    }
    if let Some(theta) = a.theta {
        cfg.matcher.theta = theta;
    }
    if let Some(n) = a.n {
        cfg.matcher.n = n;
    }
}

fn apply_learner(cfg: &mut PipelineConfig, a: &LearnerArgs) {
    if let Some(kappa) = a.kappa {
        cfg.learner.kappa = kappa;
    }
    if let Some(k) = a.k {
        cfg.learner.k = k;
    }
    if let Some(cap) = a.term_cap {
        cfg.learner.term_cap = cap;
    }
}

fn side<'a>(spec: &'a Option<InputSpec>, which: &str) -> Result<&'a InputSpec> {
    spec.as_ref()
        .ok_or_else(|| Error::Argument(format!("missing --{which} input")))
}

fn load_pair(cfg: &PipelineConfig) -> Result<(Dataset, Dataset)> {
    let left = side(&cfg.left, "left")?.load("left")?;
    let right = side(&cfg.right, "right")?.load("right")?;
    for ds in [&left, &right] {
        if ds.is_empty() {
            return Err(Error::Validation(format!("dataset `{}` has no records", ds.name())));
        }
    }
    Ok((left, right))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn pairs_of(dups: &[DuplicateCandidate]) -> Vec<IdPair> {
    dups.iter()
        .map(|d| (d.left_id.clone(), d.right_id.clone()))
        .collect()
}

fn cmd_generate(spec: &GenSpec, out: &Path) -> Result<()> {
    let g = generate(spec)?;
    for (name, data) in [("left", &g.left), ("right", &g.right)] {
        match data {
            SideData::Table(ds) => save_csv(ds, out.join(format!("{name}.csv")), &csv_options("id"))?,
            SideData::Rdf(ts) => serialize_ntriples(ts, out.join(format!("{name}.nt")))?,
        }
    }
    save_ground_truth(&g.truth, out.join("truth.csv"))?;
    save_mappings(&g.q_truth, out.join("q_truth.json"))?;
    write_json(spec, &out.join("spec.json"))
}

fn cmd_convert(input: &Path, output: &Path, direction: Direction) -> Result<()> {
    match direction {
        Direction::NtToCsv => {
            let ts = parse_ntriples(input)?;
            let name = input.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
            let table = triples_to_property_table(&ts, name)?;
            save_csv(&table, output, &CsvOptions::property_table())
        }
        Direction::CsvToNt => {
            let table = load_csv(input, &CsvOptions::property_table())?;
            serialize_ntriples(&property_table_to_triples(&table)?, output)
        }
    }
}

#[derive(Serialize)]
struct MatchReport {
    t: usize,
    theta: f64,
    n: usize,
    seed: u64,
    exhaustive: bool,
    ranked: usize,
    duplicates: usize,
    mappings: usize,
    mapping_precision: Option<f64>,
    mapping_recall: Option<f64>,
    duplicate_precision: Option<f64>,
    duplicate_recall: Option<f64>,
}

fn load_truth(path: &Option<PathBuf>) -> Result<Option<GroundTruth>> {
    path.as_ref().map(load_ground_truth).transpose()
}

fn cmd_match(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let (r1, r2) = load_pair(cfg)?;
    let m = &cfg.matcher;
    let (ranked, mappings): (Vec<DuplicateCandidate>, MappingSet) = if cfg.exhaustive {
        (generate_duplicates(&r1, &r2, m.n)?, exhaustive_mappings(&r1.schema, &r2.schema))
    } else {
        let res = run_matcher(&r1, &r2, m)?;
        (res.ranked, res.mappings)
    };
    let dups: Vec<DuplicateCandidate> = ranked.iter().take(m.n).cloned().collect();
    let truth = load_truth(&cfg.truth)?;
    let (duplicate_precision, duplicate_recall) = match &truth {
        Some(t) if !dups.is_empty() => {
            let (p, r) = precision_recall_at_k(&dups, t, dups.len())?;
            (Some(p), Some(r))
        }
        _ => (None, None),
    };
    let (mapping_precision, mapping_recall) = match &cfg.truth_mapping {
        Some(path) => {
            let (p, r) = mapping_precision_recall(&mappings, &load_mappings(path)?)?;
            (Some(p), Some(r))
        }
        None => (None, None),
    };
    save_mappings(&mappings, out.join("mappings.json"))?;
    save_duplicates(&dups, out.join("duplicates.csv"))?;
    let report = MatchReport {
        t: m.t,
        theta: m.theta,
        n: m.n,
        seed: m.seed,
        exhaustive: cfg.exhaustive,
        ranked: ranked.len(),
        duplicates: dups.len(),
        mappings: mappings.len(),
        mapping_precision,
        mapping_recall,
        duplicate_precision,
        duplicate_recall,
    };
    write_json(&report, &out.join("match_report.json"))
}

fn cmd_learn(cfg: &PipelineConfig, duplicates: &Path, mappings: &Path, out: &Path) -> Result<()> {
    let (r1, r2) = load_pair(cfg)?;
    let d = pairs_of(&load_duplicates(duplicates)?);
    let q = load_mappings(mappings)?;
    let learned = learn_scheme(&d, &q, &cfg.learner, &r1, &r2, cfg.matcher.seed)?;
    learned.scheme.save(out.join("scheme.json"))?;
    write_json(&learned.report, &out.join("learn_report.json"))
}

fn cmd_block(cfg: &PipelineConfig, scheme: &Path, out: &Path) -> Result<()> {
    let scheme = BlockingScheme::load(scheme)?;
    let (r1, r2) = load_pair(cfg)?;
    let index = build_blocks(&scheme, &r1, &r2)?;
    candidate_set_capped(&index, cfg.block_cap).save(out.join("gamma.csv"))?;
    write_json(&index.stats(cfg.block_cap), &out.join("block_stats.json"))
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    pq_identity_holds: bool,
}

fn write_eval(report: &EvalReport, path: &Path) -> Result<()> {
    if !report.pq_identity_holds(PQ_TOLERANCE) {
        return Err(Error::Validation(format!(
            "pq identity violated: residual {:?}",
            report.pq_identity_residual
        )));
    }
    write_json(
        &EvalOutput {
            report,
            pq_identity_holds: true,
        },
        path,
    )
}

fn cmd_evaluate(gamma: &Path, truth: &Path, n_left: usize, n_right: usize, out: &Path) -> Result<()> {
    let gamma = CandidateSet::load(gamma)?;
    let truth = load_ground_truth(truth)?;
    let report = evaluate(&gamma, &truth, n_left, n_right)?;
    write_eval(&report, &out.join("eval_report.json"))?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

#[derive(Serialize)]
struct PipelineReport<'a> {
    config: &'a PipelineConfig,
    mapping_source: &'static str,
    mappings: usize,
    duplicates: usize,
    duplicate_precision: Option<f64>,
    mapping_precision: Option<f64>,
    mapping_recall: Option<f64>,
    scheme: String,
    learn: &'a hetblock::learner::LearnReport,
    block_stats: &'a hetblock::runtime::BlockStats,
    gamma: usize,
    eval: Option<&'a EvalReport>,
    timings: &'a [StageTiming],
}

fn cmd_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let (r1, r2) = load_pair(cfg)?;
    let rdf = |s: &Option<InputSpec>| s.as_ref().is_some_and(|s| s.format() == Format::Ntriples);
    if rdf(&cfg.left) {
        save_csv(&r1, out.join("left.csv"), &CsvOptions::property_table())?;
    }
    if rdf(&cfg.right) {
        save_csv(&r2, out.join("right.csv"), &CsvOptions::property_table())?;
    }
    let convert = StageTiming {
        stage: "load".into(),
        seconds: start.elapsed().as_secs_f64(),
    };

    let (source, source_name) = match (&cfg.mappings, cfg.exhaustive) {
        (Some(path), _) => (MappingSource::User(load_mappings(path)?), "user"),
        (None, true) => (MappingSource::Exhaustive, "exhaustive"),
        (None, false) => (MappingSource::Matcher, "matcher"),
    };
    let truth = load_truth(&cfg.truth)?;
    let params = PipelineParams {
        matcher: cfg.matcher.clone(),
        learner: cfg.learner.clone(),
        block_cap: cfg.block_cap,
    };
    let run = run_pipeline(&r1, &r2, truth.as_ref(), &source, &params)?;

    save_mappings(&run.mappings, out.join("mappings.json"))?;
    save_duplicates(&run.duplicates, out.join("duplicates.csv"))?;
    run.learned.scheme.save(out.join("scheme.json"))?;
    write_json(&run.learned.report, &out.join("learn_report.json"))?;
    run.gamma.save(out.join("gamma.csv"))?;
    write_json(&run.block_stats, &out.join("block_stats.json"))?;
    if let Some(e) = &run.eval {
        write_eval(e, &out.join("eval_report.json"))?;
    }

    let mut timings = vec![convert];
    timings.extend(run.timings.iter().cloned());
    let mut w = BufWriter::new(File::create(out.join("timings.csv"))?);
    writeln!(w, "stage,seconds")?;
    for t in &timings {
        writeln!(w, "{},{}", t.stage, t.seconds)?;
    }
    w.flush()?;

    let duplicate_precision = truth.as_ref().map(|t| {
        let hits = run
            .duplicates
            .iter()
            .filter(|d| t.contains(&d.left_id, &d.right_id))
            .count();
        hits as f64 / run.duplicates.len().max(1) as f64
    });
    let (mapping_precision, mapping_recall) = match &cfg.truth_mapping {
        Some(path) => {
            let (p, r) = mapping_precision_recall(&run.mappings, &load_mappings(path)?)?;
            (Some(p), Some(r))
        }
        None => (None, None),
    };
    let report = PipelineReport {
        config: cfg,
        mapping_source: source_name,
        mappings: run.mappings.len(),
        duplicates: run.duplicates.len(),
        duplicate_precision,
        mapping_precision,
        mapping_recall,
        scheme: run.learned.scheme.to_string(),
        learn: &run.learned.report,
        block_stats: &run.block_stats,
        gamma: run.gamma.len(),
        eval: run.eval.as_ref(),
        timings: &timings,
    };
    write_json(&report, &out.join("pipeline_report.json"))
}
