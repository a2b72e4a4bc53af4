use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use rulescene_core::compiler::{compile_scene, CompilerTables, RoadNetwork};
use rulescene_core::eval::{
    answer_key_endpoint, chunk_rulebook, compute_report, constant_endpoint, run_evaluation, split_dataset,
    Bm25Retriever, DirFrameLoader, EvalError, FrameLoader, PromptContext, Retriever,
};
use rulescene_core::llm::{ChatEndpoint, RemoteEndpoint, ReplayEndpoint};
use rulescene_core::mcq::stub::{StubGenerator, StubJudge, StubScorer};
use rulescene_core::mcq::{generate_questions, AuditEvent, GenerationEndpoints};
use rulescene_core::rule_crafter::{
    craft_hierarchy, CoexistenceOracle, CraftError, ModelCoexistenceOracle, TagCompatibilityOracle,
};
use rulescene_core::rule_model::{parse_rule_file, validate_rule, RuleRecord};
use rulescene_core::scene::{align_check, parse_scene_doc, self_check, CoherenceTable, RequirementTable};
use rulescene_core::{AtomicRule, Condition, EvalRecord, HierarchicalRuleSet, Level, Mcq, RuleId, SceneDoc};
use serde::Serialize;

use crate::config::{EndpointConfig, ProjectConfig, Subset};
use crate::Failure;

type Outcome = Result<(), Failure>;

fn write(path: &Path, contents: &str) -> Outcome {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Data)?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::Data)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Data)
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|x| serde_json::to_string(x).expect("serializable") + "\n").collect()
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub fn load_rules(cfg: &ProjectConfig) -> Result<Vec<AtomicRule>, Failure> {
    let bytes = std::fs::read(&cfg.rules)
        .with_context(|| format!("reading {}", cfg.rules.display()))
        .map_err(Failure::Data)?;
    if String::from_utf8_lossy(&bytes).lines().all(|l| l.trim().is_empty() || l.trim_start().starts_with('#')) {
        return Ok(Vec::new());
    }
    parse_rule_file(&bytes, cfg.jurisdiction)
        .with_context(|| format!("rule file {}", cfg.rules.display()))
        .map_err(Failure::Data)
}

fn endpoint(cfg: &EndpointConfig, role: &str) -> Result<Arc<dyn ChatEndpoint>, Failure> {
    match cfg {
        EndpointConfig::Replay { path, images } => {
            let e = ReplayEndpoint::load(path).with_context(|| format!("{role}: replay file {}", path.display())).map_err(Failure::Data)?;
            Ok(if *images { Arc::new(e.accepting_images()) } else { Arc::new(e) })
        }
        EndpointConfig::Remote(remote) => {
            RemoteEndpoint::new(remote.clone()).map(|e| Arc::new(e) as Arc<dyn ChatEndpoint>).map_err(|e| Failure::Config(anyhow!("{role}: {e}")))
        }
        other => Err(Failure::Config(anyhow!("{role}: endpoint kind {other:?} is not usable here"))),
    }
}

// ---------------------------------------------------------------- craft

#[derive(Serialize)]
struct CraftReport {
    jurisdiction: String,
    rules: usize,
    combo_sizes: Vec<usize>,
    levels: BTreeMap<String, usize>,
    candidates: usize,
    feasible: usize,
    infeasible: usize,
    flagged: usize,
}

pub fn craft(cfg: &ProjectConfig) -> Outcome {
    let rules = load_rules(cfg)?;
    if rules.is_empty() {
        eprintln!("warning: {} holds no rules; the hierarchy is empty", cfg.rules.display());
    }
    let oracle: Box<dyn CoexistenceOracle> = match &cfg.endpoints.coexistence {
        None => Box::new(TagCompatibilityOracle::default()),
        Some(e) => {
            let mut o = ModelCoexistenceOracle::new(endpoint(e, "coexistence")?);
            o.transport_attempts = cfg.thresholds.transport_attempts;
            Box::new(o)
        }
    };
    let (set, summary) =
        craft_hierarchy(cfg.jurisdiction, &rules, &cfg.combo_sizes, oracle.as_ref(), cfg.concurrency()).map_err(|e| match e {
            CraftError::Oracle { .. } => Failure::Endpoint(e.into()),
            e => Failure::Data(e.into()),
        })?;
    write(&cfg.hierarchy_path(), &set.to_json())?;

    let report = CraftReport {
        jurisdiction: cfg.jurisdiction.to_string(),
        rules: rules.len(),
        combo_sizes: cfg.combo_sizes.clone(),
        levels: set.count_by_level().into_iter().map(|(l, n)| (l.to_string(), n)).collect(),
        candidates: summary.candidates,
        feasible: summary.feasible,
        infeasible: summary.infeasible,
        flagged: summary.flagged,
    };
    write(&cfg.output_dir.join("craft_summary.json"), &pretty(&report))?;
    let levels: Vec<String> = report.levels.iter().map(|(l, n)| format!("{l}={n}")).collect();
    println!("hierarchy: {} ({} rules)", cfg.hierarchy_path().display(), rules.len());
    println!("levels: {}", levels.join(" "));
    println!("combinations: {} candidates, {} feasible, {} infeasible", summary.candidates, summary.feasible, summary.infeasible);
    Ok(())
}

// ---------------------------------------------------------------- generate

fn generation_endpoints(cfg: &ProjectConfig, set: &HierarchicalRuleSet) -> Result<GenerationEndpoints, Failure> {
    let e = &cfg.endpoints;
    let generator = match &e.generator {
        EndpointConfig::Stub { .. } => Arc::new(StubGenerator::new(set)) as Arc<dyn ChatEndpoint>,
        other => endpoint(other, "generator")?,
    };
    let pick = |list: &[EndpointConfig], role: &str| -> Result<[Arc<dyn ChatEndpoint>; 3], Failure> {
        let mut out = Vec::with_capacity(3);
        for (i, c) in list.iter().enumerate() {
            let index = i as u32;
            out.push(match (c, role) {
                (EndpointConfig::Stub { reject_modulus }, "judge") => {
                    Arc::new(StubJudge { index, modulus: *reject_modulus }) as Arc<dyn ChatEndpoint>
                }
                (EndpointConfig::Stub { .. }, _) => Arc::new(StubScorer { index }) as Arc<dyn ChatEndpoint>,
                (other, _) => endpoint(other, role)?,
            });
        }
        Ok(out.try_into().unwrap_or_else(|_| unreachable!("three endpoints checked at load")))
    };
    Ok(GenerationEndpoints { generator, judges: pick(&e.judges, "judge")?, scorers: pick(&e.scorers, "scorer")? })
}

pub fn generate(cfg: &ProjectConfig) -> Outcome {
    let path = cfg.hierarchy_path();
    let set = HierarchicalRuleSet::from_json(&read(&path)?)
        .with_context(|| format!("hierarchy {}", path.display()))
        .map_err(Failure::Data)?;
    let endpoints = generation_endpoints(cfg, &set)?;
    let entries = set.entries();
    let outcome = generate_questions(&set, &entries, &endpoints, &cfg.generation());

    write(&cfg.output_dir.join("questions.jsonl"), &Mcq::to_jsonl(&outcome.accepted))?;
    write(&cfg.output_dir.join("generation_audit.jsonl"), &jsonl(&outcome.audit))?;
    write(&cfg.output_dir.join("review_queue.jsonl"), &jsonl(&outcome.review_queue))?;

    let mut per_level: BTreeMap<Level, usize> = Level::ALL.into_iter().map(|l| (l, 0)).collect();
    for q in &outcome.accepted {
        *per_level.entry(q.level).or_default() += 1;
    }
    let levels: Vec<String> = per_level.iter().map(|(l, n)| format!("{l}={n}")).collect();
    let count = |ev: AuditEvent| outcome.audit.iter().filter(|a| a.event == ev).count();
    println!("accepted {} of {} entries: {}", outcome.accepted.len(), outcome.attempted, levels.join(" "));
    println!(
        "rejected attempts: {} schema, {} cross-check, {} consensus; {} exhausted, {} skipped; review queue {}",
        count(AuditEvent::SchemaRejected),
        count(AuditEvent::CrossCheckRejected),
        count(AuditEvent::ConsensusRejected),
        count(AuditEvent::Exhausted),
        count(AuditEvent::Skipped),
        outcome.review_queue.len()
    );
    let failures = count(AuditEvent::EndpointFailure);
    if failures > 0 {
        return Err(Failure::Endpoint(anyhow!("{failures} entries hit endpoint failures; see generation_audit.jsonl")));
    }
    Ok(())
}

// ---------------------------------------------------------------- compile / validate

#[derive(Debug, Clone, Serialize)]
struct Rejection {
    scene: String,
    stage: &'static str,
    reasons: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
struct CompileReport {
    compiled: Vec<String>,
    /// Documents failing the DSL checks; listed, not fatal.
    rejected: Vec<Rejection>,
    /// Checked documents the compiler could not realise.
    failed: Vec<Rejection>,
}

fn scene_files(cfg: &ProjectConfig) -> Result<Vec<PathBuf>, Failure> {
    let Some(dir) = &cfg.scenes else { return Ok(Vec::new()) };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(Failure::Data)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "yaml" || x == "yml"))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn scene_rules(cfg: &ProjectConfig) -> Result<BTreeMap<String, Vec<RuleId>>, Failure> {
    match &cfg.scene_rules {
        None => Ok(BTreeMap::new()),
        Some(p) => serde_yaml::from_str(&read(p)?).with_context(|| format!("scene rule map {}", p.display())).map_err(Failure::Data),
    }
}

/// Parse, self_check and align; `Err` carries the failing stage.
fn check_scene(
    path: &Path,
    rules: &[AtomicRule],
    wanted: Option<&Vec<RuleId>>,
    coherence: &CoherenceTable,
    requirements: &RequirementTable,
) -> Result<SceneDoc, Rejection> {
    let scene = stem(path);
    let reject = |stage, reasons| Rejection { scene: scene.clone(), stage, reasons };
    let text = std::fs::read_to_string(path).map_err(|e| reject("read", vec![e.to_string()]))?;
    let doc = parse_scene_doc(&text).map_err(|e| reject("parse", vec![e.to_string()]))?;
    let findings = self_check(&doc, coherence);
    if !findings.is_empty() {
        return Err(reject("self_check", findings.iter().map(|f| f.to_string()).collect()));
    }
    if let Some(ids) = wanted {
        let mut members = Vec::new();
        for id in ids {
            match rules.iter().find(|r| &r.id == id) {
                Some(r) => members.push(r),
                None => return Err(reject("align", vec![format!("unknown rule {id}")])),
            }
        }
        let report = align_check(&doc, &members, requirements);
        if !report.all_matched() {
            let reasons = report
                .rules
                .iter()
                .filter(|a| !a.matched)
                .map(|a| format!("{} not realised: {}", a.rule, a.unmet.join(", ")))
                .collect();
            return Err(reject("align", reasons));
        }
    }
    Ok(doc)
}

fn maps(cfg: &ProjectConfig) -> Result<BTreeMap<String, RoadNetwork>, Failure> {
    let mut out = BTreeMap::new();
    for name in RoadNetwork::bundled_names() {
        out.insert(name.to_string(), RoadNetwork::bundled(name).expect("bundled map"));
    }
    for p in &cfg.maps {
        let m = RoadNetwork::load(p).with_context(|| format!("map {}", p.display())).map_err(Failure::Data)?;
        out.insert(m.name.clone(), m);
    }
    Ok(out)
}

pub fn compile(cfg: &ProjectConfig) -> Outcome {
    let files = scene_files(cfg)?;
    let rules = if cfg.scene_rules.is_some() { load_rules(cfg)? } else { Vec::new() };
    let wanted = scene_rules(cfg)?;
    let maps = maps(cfg)?;
    let tables = CompilerTables::default();
    let opts = cfg.compile_options();
    let (coherence, requirements) = (CoherenceTable::default(), RequirementTable::default());
    let out_dir = cfg.output_dir.join("scenarios");

    let mut report = CompileReport::default();
    for path in &files {
        let scene = stem(path);
        let doc = match check_scene(path, &rules, wanted.get(&scene), &coherence, &requirements) {
            Ok(d) => d,
            Err(r) => {
                report.rejected.push(r);
                continue;
            }
        };
        let map_name = RoadNetwork::name_for(doc.road_network.road_type);
        let map = &maps[map_name];
        match compile_scene(&doc, map, &tables, &opts) {
            Ok(c) => {
                write(&out_dir.join(format!("{scene}.xosc")), c.xml())?;
                report.compiled.push(scene);
            }
            Err(e) => report.failed.push(Rejection { scene, stage: "compile", reasons: vec![e.to_string()] }),
        }
    }
    write(&cfg.output_dir.join("compile_report.json"), &pretty(&report))?;
    println!("compiled {} of {} scene documents into {}", report.compiled.len(), files.len(), out_dir.display());
    for r in report.rejected.iter().chain(&report.failed) {
        println!("  {} [{}]: {}", r.scene, r.stage, r.reasons.join("; "));
    }
    if !report.failed.is_empty() {
        return Err(Failure::Compile(anyhow!("{} scene(s) failed to compile", report.failed.len())));
    }
    Ok(())
}

pub fn validate(cfg: &ProjectConfig) -> Outcome {
    let mut problems = Vec::new();
    let text = read(&cfg.rules)?;
    let records: Vec<RuleRecord> = if text.lines().all(|l| l.trim().is_empty() || l.trim_start().starts_with('#')) {
        Vec::new()
    } else {
        serde_yaml::from_str(&text).unwrap_or_else(|e| {
            problems.push(format!("rule file: {e}"));
            Vec::new()
        })
    };
    for (i, r) in records.iter().enumerate() {
        for v in validate_rule(r) {
            problems.push(format!("rule {i} ({}): {v}", r.id));
        }
    }
    let rules = if problems.is_empty() {
        match load_rules(cfg) {
            Ok(r) => r,
            Err(Failure::Data(e)) => {
                problems.push(format!("{e:#}"));
                Vec::new()
            }
            Err(e) => return Err(e),
        }
    } else {
        Vec::new()
    };
    println!("rules: {} records checked", records.len());

    let wanted = scene_rules(cfg)?;
    let (coherence, requirements) = (CoherenceTable::default(), RequirementTable::default());
    let files = scene_files(cfg)?;
    for path in &files {
        if let Err(r) = check_scene(path, &rules, wanted.get(&stem(path)), &coherence, &requirements) {
            problems.push(format!("scene {} [{}]: {}", r.scene, r.stage, r.reasons.join("; ")));
        }
    }
    println!("scenes: {} documents checked", files.len());
    for p in &problems {
        println!("  {p}");
    }
    if !problems.is_empty() {
        return Err(Failure::Data(anyhow!("{} validation problem(s)", problems.len())));
    }
    println!("ok");
    Ok(())
}

// ---------------------------------------------------------------- eval / report

fn eval_error(e: EvalError) -> Failure {
    match e {
        EvalError::NoRetriever | EvalError::TextOnlyEndpoint | EvalError::Repeats(_) => Failure::Config(e.into()),
        e => Failure::Data(e.into()),
    }
}

fn load_questions(cfg: &ProjectConfig) -> Result<Vec<Mcq>, Failure> {
    let path = cfg.questions_path();
    Mcq::from_jsonl(&read(&path)?).with_context(|| format!("questions {}", path.display())).map_err(Failure::Data)
}

pub fn records_path(cfg: &ProjectConfig, condition: Condition) -> PathBuf {
    cfg.output_dir.join("records").join(format!("{condition}.jsonl"))
}

pub fn eval(cfg: &ProjectConfig, condition: Condition) -> Outcome {
    let all = load_questions(cfg)?;
    let questions: Vec<Mcq> = match cfg.eval.subset {
        Subset::All => all,
        Subset::Test => {
            let (split, warnings) = split_dataset(&all, cfg.seeds.split).map_err(eval_error)?;
            for w in &warnings {
                eprintln!("warning: split: {w:?}");
            }
            write(&cfg.output_dir.join("split.json"), &pretty(&split))?;
            all.into_iter().filter(|q| split.test.contains(&q.id)).collect()
        }
    };
    if questions.is_empty() {
        eprintln!("warning: no questions to evaluate");
    }

    let model: Arc<dyn ChatEndpoint> = match &cfg.endpoints.model {
        EndpointConfig::AnswerKey => Arc::new(answer_key_endpoint(&questions)),
        EndpointConfig::Constant { answer } => Arc::new(constant_endpoint(answer.clone())),
        EndpointConfig::Stub { .. } => return Err(Failure::Config(anyhow!("model: use answer_key or constant for a stub model"))),
        other => endpoint(other, "model")?,
    };
    let retriever = if condition.rag {
        let mut passages = Vec::new();
        for p in &cfg.rulebooks {
            passages.extend(chunk_rulebook(&stem(p), &read(p)?));
        }
        if passages.is_empty() {
            return Err(Failure::Config(anyhow!("rag needs at least one rulebook with articles")));
        }
        Some(Bm25Retriever::new(passages))
    } else {
        None
    };
    let frames = cfg.frames_dir.as_ref().map(DirFrameLoader::new);
    let ctx = PromptContext {
        retriever: retriever.as_ref().map(|r| r as &dyn Retriever),
        frames: frames.as_ref().map(|f| f as &dyn FrameLoader),
    };
    let records = run_evaluation(&questions, model.as_ref(), condition, &ctx, &cfg.eval_config()).map_err(eval_error)?;

    let path = records_path(cfg, condition);
    write(&path, &EvalRecord::to_jsonl(&records))?;
    let correct = records.iter().filter(|r| r.correct).count();
    let failed = records.iter().filter(|r| r.is_flagged()).count();
    println!("{condition}: {} records, {correct} correct, {failed} failed -> {}", records.len(), path.display());
    if failed > 0 {
        return Err(Failure::Endpoint(anyhow!("{failed} requests failed after retries; they are scored incorrect")));
    }
    Ok(())
}

pub fn report(cfg: &ProjectConfig, condition: Condition) -> Outcome {
    let questions = load_questions(cfg)?;
    let path = records_path(cfg, condition);
    if !path.exists() {
        return Err(Failure::Data(anyhow!("no records at {}; run eval first", path.display())));
    }
    let records = EvalRecord::from_jsonl(&read(&path)?).map_err(eval_error)?;
    let report = compute_report(&records, &questions).map_err(eval_error)?;
    let base = cfg.output_dir.join(format!("report_{condition}"));
    write(&base.with_extension("csv"), &report.to_csv())?;
    let md = report.to_markdown();
    write(&base.with_extension("md"), &md)?;
    print!("{md}");
    Ok(())
}
