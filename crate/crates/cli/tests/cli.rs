use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).display().to_string()
}

const ENDPOINTS: &str = r#"
[endpoints]
generator = { kind = "stub" }
judges = [{ kind = "stub", reject_modulus = 7 }, { kind = "stub", reject_modulus = 7 }, { kind = "stub", reject_modulus = 7 }]
scorers = [{ kind = "stub" }, { kind = "stub" }, { kind = "stub" }]
model = { kind = "answer_key" }
"#;

/// Config over the fixtures with `extra` top-level keys; `endpoints` replaces the stub set.
fn config(dir: &Path, extra: &str, endpoints: Option<&str>) -> PathBuf {
    let text = format!(
        "jurisdiction = \"USA\"\nrules = {:?}\noutput_dir = \"out\"\nscenes = {:?}\nscene_rules = {:?}\nrulebooks = [{:?}]\n{extra}\n{}",
        fixture("rules/usa.yaml"),
        fixture("scenes"),
        fixture("scene_rules.yaml"),
        fixture("rulebooks/usa.txt"),
        endpoints.unwrap_or(ENDPOINTS),
    );
    let path = dir.join("rulescene.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cfg: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rulescene")).arg("--config").arg(cfg).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&dir.path().join("nope.toml"), &["craft"])), 2);
}

#[test]
fn missing_rule_file_is_rejected_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace("usa.yaml", "absent.yaml");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&cfg, &["craft"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not exist"));
}

#[test]
fn bad_combo_size_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "combo_sizes = [2, 6]", None);
    assert_eq!(code(&run(&cfg, &["craft"])), 2);
}

#[test]
fn empty_rule_file_gives_empty_hierarchy() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("empty.yaml");
    std::fs::write(&rules, "# nothing yet\n").unwrap();
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace(&fixture("rules/usa.yaml"), &rules.display().to_string());
    std::fs::write(&cfg, text).unwrap();
    let o = run(&cfg, &["craft"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let h: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/hierarchy.json")).unwrap()).unwrap();
    assert_eq!(h["atomic"].as_array().unwrap().len(), 0);
    assert_eq!(h["combos"].as_array().unwrap().len(), 0);
}

#[test]
fn invalid_rule_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("bad.yaml");
    std::fs::write(
        &rules,
        "- id: x\n  content: c\n  perceptual_type: static\n  norm_type: maybe\n  action_type: overtake\n  priority_class: traffic_signs\n",
    )
    .unwrap();
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace(&fixture("rules/usa.yaml"), &rules.display().to_string());
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(code(&run(&cfg, &["craft"])), 4);
    let o = run(&cfg, &["validate"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("norm_type"));
}

#[test]
fn validate_accepts_the_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config(dir.path(), "", None), &["validate"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("8 documents checked"));
}

#[test]
fn generate_without_hierarchy_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&config(dir.path(), "", None), &["generate"])), 4);
}

#[test]
fn report_without_records_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &format!("[eval]\nquestions = {:?}", fixture("replay/questions.jsonl")), None);
    assert_eq!(code(&run(&cfg, &["report"])), 4);
}

#[test]
fn compile_matches_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config(dir.path(), "", None), &["compile"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    for entry in std::fs::read_dir(root().join("fixtures/golden")).unwrap() {
        let golden = entry.unwrap().path();
        let produced = dir.path().join("out/scenarios").join(golden.file_name().unwrap());
        assert!(std::fs::read(&produced).unwrap() == std::fs::read(&golden).unwrap(), "{}", golden.display());
    }
}

#[test]
fn compile_with_no_documents_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    std::fs::create_dir(&scenes).unwrap();
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace(&fixture("scenes"), &scenes.display().to_string());
    std::fs::write(&cfg, text).unwrap();
    let o = run(&cfg, &["compile"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("compiled 0 of 0"));
}

fn scenes_dir_with(dir: &Path, docs: &[(&str, &str)]) -> PathBuf {
    let scenes = dir.join("scenes");
    std::fs::create_dir_all(&scenes).unwrap();
    for (name, text) in docs {
        std::fs::write(scenes.join(name), text).unwrap();
    }
    scenes
}

const INCOHERENT: &str = "environment:\n  weather: night\n  time: daytime\nroad_network:\n  road_type: urban_road\n  road_marker: dashed_line\nactors:\n  - id: ego\n    type: car\n    position:\n      reference: crosswalk\n      relation: behind\n    behavior: go_forward\noracle:\n  longitudinal: go_forward\n  lateral: keep_lane\n";

const UNREALISABLE: &str = "environment:\n  weather: sunny\n  time: daytime\nroad_network:\n  road_type: highway\n  road_marker: dashed_line\nactors:\n  - id: ego\n    type: car\n    position:\n      reference: exit\n      relation: behind\n      distance: 80\n    behavior: lane_change_right\noracle:\n  longitudinal: keep_speed\n  lateral: lane_change_right\n";

#[test]
fn incoherent_document_is_listed_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = scenes_dir_with(dir.path(), &[("bad.yaml", INCOHERENT)]);
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace(&fixture("scenes"), &scenes.display().to_string());
    std::fs::write(&cfg, text).unwrap();
    let o = run(&cfg, &["compile"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("bad [self_check]: environment"), "{}", stdout(&o));
}

#[test]
fn unrealisable_document_is_a_hard_failure() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = scenes_dir_with(dir.path(), &[("gap.yaml", UNREALISABLE)]);
    let cfg = config(dir.path(), "", None);
    let text = std::fs::read_to_string(&cfg).unwrap().replace(&fixture("scenes"), &scenes.display().to_string());
    std::fs::write(&cfg, text).unwrap();
    let o = run(&cfg, &["compile"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).contains("gap [compile]"));
    let report = std::fs::read_to_string(dir.path().join("out/compile_report.json")).unwrap();
    assert!(report.contains("no lane right"));
}

#[test]
fn compile_overrides_change_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "", None);
    assert_eq!(code(&run(&cfg, &["compile", "--dt", "0.5", "--horizon", "5"])), 0);
    let xml = std::fs::read_to_string(dir.path().join("out/scenarios/ramp_merge.xosc")).unwrap();
    let golden = std::fs::read_to_string(root().join("fixtures/golden/ramp_merge.xosc")).unwrap();
    assert!(xml.matches("<Vertex ").count() < golden.matches("<Vertex ").count());
    assert_eq!(code(&run(&cfg, &["compile", "--dt", "0"])), 2);
}

#[test]
fn replay_through_the_cli_matches_the_expected_table() {
    let dir = tempfile::tempdir().unwrap();
    let endpoints = ENDPOINTS.replace(
        "model = { kind = \"answer_key\" }",
        &format!("model = {{ kind = \"replay\", path = {:?} }}", fixture("replay/responses.jsonl")),
    );
    let extra = format!("[eval]\nsubset = \"all\"\nquestions = {:?}", fixture("replay/questions.jsonl"));
    let cfg = config(dir.path(), &extra, Some(&endpoints));
    assert_eq!(code(&run(&cfg, &["eval"])), 0);
    assert_eq!(code(&run(&cfg, &["report"])), 0);
    let csv = std::fs::read_to_string(dir.path().join("out/report_text.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(fixture("replay/expected_report.csv")).unwrap());
    let records = std::fs::read_to_string(dir.path().join("out/records/text.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 180);
}

#[test]
fn visual_variant_needs_an_image_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let endpoints = ENDPOINTS.replace(
        "model = { kind = \"answer_key\" }",
        &format!("model = {{ kind = \"replay\", path = {:?} }}", fixture("replay/responses.jsonl")),
    );
    let extra = format!(
        "frames_dir = {:?}\n[eval]\nsubset = \"all\"\nquestions = {:?}",
        fixture("replay/frames"),
        fixture("replay/questions.jsonl")
    );
    let cfg = config(dir.path(), &extra, Some(&endpoints));
    assert_eq!(code(&run(&cfg, &["eval", "--variant", "visual"])), 2);
    let with_images = std::fs::read_to_string(&cfg).unwrap().replace("responses.jsonl\" }", "responses.jsonl\", images = true }");
    std::fs::write(&cfg, with_images).unwrap();
    assert_eq!(code(&run(&cfg, &["eval", "--variant", "visual"])), 0);
}

#[test]
fn failing_model_endpoint_exits_3_but_keeps_records() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let endpoints = ENDPOINTS.replace(
        "model = { kind = \"answer_key\" }",
        &format!("model = {{ kind = \"replay\", path = {:?} }}", empty.display().to_string()),
    );
    let extra = format!("[eval]\nsubset = \"all\"\nrepeats = 1\nquestions = {:?}", fixture("replay/questions.jsonl"));
    let cfg = config(dir.path(), &extra, Some(&endpoints));
    assert_eq!(code(&run(&cfg, &["eval", "--concurrency", "2"])), 3);
    let records = std::fs::read_to_string(dir.path().join("out/records/text.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 60);
    assert!(records.lines().all(|l| l.contains("\"error\"")));
}

#[test]
fn missing_credential_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let endpoints = ENDPOINTS.replace(
        "model = { kind = \"answer_key\" }",
        "model = { kind = \"remote\", base_url = \"http://127.0.0.1:9\", model = \"m\", credential_env = \"RULESCENE_TEST_UNSET_KEY\" }",
    );
    let extra = format!("[eval]\nsubset = \"all\"\nquestions = {:?}", fixture("replay/questions.jsonl"));
    let cfg = config(dir.path(), &extra, Some(&endpoints));
    assert_eq!(code(&run(&cfg, &["eval"])), 2);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let mut snaps = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "", None);
        for cmd in [&["craft"][..], &["generate"], &["compile"], &["eval", "--rag", "--cot"], &["report", "--rag", "--cot"]] {
            let o = run(&cfg, cmd);
            assert_eq!(code(&o), 0, "{cmd:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        snaps.push(snapshot(&dir.path().join("out")));
    }
    assert_eq!(snaps[0].len(), snaps[1].len());
    for (a, b) in snaps[0].iter().zip(&snaps[1]) {
        assert!(a == b, "{} differs between runs", a.0);
    }
}
