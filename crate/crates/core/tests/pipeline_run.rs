mod common;

use std::path::Path;
use std::sync::Arc;

use selfhwdebug::corpus::{load_corpus, Role};
use selfhwdebug::pipeline::{parse_run_file, run, PipelineError, RunFile, RunOptions, Session};
use selfhwdebug::provider::{chat_reply_body, CallbackTransport, HttpReply};
use selfhwdebug::rtlcheck::VerdictStatus;
use serde_json::{json, Value};

const INSTRUCTION_TEXT: &str = "Only reset or an authorised JTAG unlock may clear a lock bit.";

fn experiment(cwes: &[&str], levels: &[&str], shots: u8, mode: &str, cache: &Path) -> Value {
    let data = common::data_dir();
    json!({
        "cwe_ids": cwes,
        "levels": levels,
        "shots": shots,
        "instruction_model": {"model_name": "llama3-70b-8192"},
        "repair_model": {"model_name": "llama3-70b-8192"},
        "provider_mode": mode,
        "corpus_root": data.join("corpus"),
        "templates_dir": data.join("templates"),
        "cache_dir": cache,
    })
}

fn run_file(dir: &Path, value: Value) -> RunFile {
    let path = dir.join("run.json");
    let text = serde_json::to_string_pretty(&value).unwrap();
    std::fs::write(&path, &text).unwrap();
    parse_run_file(&path, &text).unwrap()
}

fn prompt_of(body: &Value) -> String {
    body["messages"][0]["content"].as_str().unwrap().to_string()
}

fn is_instruction_prompt(prompt: &str) -> bool {
    prompt.contains("### VULNERABLE EXAMPLE 1")
}

fn ok(text: &str) -> Result<HttpReply, String> {
    Ok(HttpReply {
        status: 200,
        retry_after: None,
        body: chat_reply_body(text),
    })
}

/// Instruction prompts get a fixed instruction; repair prompts get the
/// secure counterpart of whichever test sample they contain.
fn oracle_transport() -> Arc<CallbackTransport> {
    let corpus = load_corpus(&common::data_dir().join("corpus")).unwrap();
    let pairs: Vec<(String, String)> = corpus
        .samples
        .values()
        .flatten()
        .filter(|s| s.role == Role::Test)
        .map(|s| (s.vulnerable_code.clone(), s.secure_code.clone().unwrap()))
        .collect();
    Arc::new(CallbackTransport::new(move |_, body| {
        let prompt = prompt_of(body);
        if is_instruction_prompt(&prompt) {
            return ok(INSTRUCTION_TEXT);
        }
        let (_, secure) = pairs.iter().find(|(v, _)| prompt.contains(v.trim())).expect("known sample");
        ok(&format!("```verilog\n{secure}```"))
    }))
}

fn options(transport: Arc<CallbackTransport>, out: &Path, run_id: &str) -> RunOptions {
    RunOptions {
        transport,
        key_lookup: Arc::new(|_| Some("test-key".into())),
        run_id: Some(run_id.into()),
        output_dir: Some(out.to_path_buf()),
    }
}

#[test]
fn each_instruction_is_requested_before_its_repairs() {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(
        tmp.path(),
        experiment(&["CWE-1231", "CWE-1191"], &["Advanced", "Basic"], 1, "Live", &tmp.path().join("cache")),
    );
    let t = oracle_transport();
    let out = run(&rf, &options(t.clone(), &tmp.path().join("runs"), "r")).unwrap();

    assert_eq!(out.instructions.len(), 4);
    assert_eq!(out.attempts.len(), 20);
    assert_eq!(t.calls(), 24);

    let prompts: Vec<String> = t.requests().iter().map(prompt_of).collect();
    let kinds: String = prompts
        .iter()
        .map(|p| if is_instruction_prompt(p) { 'I' } else { 'R' })
        .collect();
    assert_eq!(kinds, "IRRRRR".repeat(4));

    // Manifest order for CWEs, enum order for levels.
    let order: Vec<(&str, String)> = out
        .instructions
        .iter()
        .map(|i| (i.cwe_id.as_str(), i.level.to_string()))
        .collect();
    assert_eq!(
        order,
        [
            ("CWE-1191", "Basic".to_string()),
            ("CWE-1191", "Advanced".to_string()),
            ("CWE-1231", "Basic".to_string()),
            ("CWE-1231", "Advanced".to_string()),
        ]
    );

    for p in prompts.iter().filter(|p| !is_instruction_prompt(p)) {
        assert!(p.contains(INSTRUCTION_TEXT));
        assert!(p.contains("### CODE TO REPAIR"));
        assert!(!p.contains("### SECURE EXAMPLE"));
    }
    for p in prompts.iter().filter(|p| is_instruction_prompt(p)) {
        assert!(!p.contains("### CODE TO REPAIR"));
    }
    for body in t.requests() {
        assert_eq!(body["temperature"].as_f64(), Some(0.6));
        assert_eq!(body["top_p"].as_f64(), Some(1.0));
    }
    assert!(out.attempts.iter().all(|a| a.verdict.status == VerdictStatus::Pass));
    assert!(out.report.averages.values().all(|&p| p == 100));
}

#[test]
fn replay_after_recording_is_silent_and_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let runs = tmp.path().join("runs");
    let recorded = run(
        &run_file(tmp.path(), experiment(&["CWE-1244"], &["Basic", "Intermediate"], 1, "RecordThenReplay", &cache)),
        &options(oracle_transport(), &runs, "recorded"),
    )
    .unwrap();

    let silent = Arc::new(CallbackTransport::new(|_, _| Err("network disabled".into())));
    let replayed = run(
        &run_file(tmp.path(), experiment(&["CWE-1244"], &["Basic", "Intermediate"], 1, "Replay", &cache)),
        &options(silent.clone(), &runs, "replayed"),
    )
    .unwrap();
    assert_eq!(silent.calls(), 0);

    for sub in ["instructions", "attempts", "report.md", "report.csv"] {
        let a = recorded.run_dir.join(sub);
        let b = replayed.run_dir.join(sub);
        if a.is_dir() {
            let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
            names.sort();
            assert!(!names.is_empty());
            for n in names {
                assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
            }
        } else {
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{sub}");
        }
    }
}

#[test]
fn replay_miss_on_instruction_fails_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(tmp.path(), experiment(&["CWE-1244"], &["Basic"], 1, "Replay", &tmp.path().join("empty")));
    let silent = Arc::new(CallbackTransport::constant("unused"));
    let err = run(&rf, &options(silent.clone(), &tmp.path().join("runs"), "x")).unwrap_err();
    assert!(matches!(err, PipelineError::Provider(_)), "{err}");
    assert_eq!(silent.calls(), 0);
}

#[test]
fn two_shot_cell_yields_one_combined_instruction() {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(
        tmp.path(),
        experiment(&["CWE-1245"], &["Intermediate"], 2, "Live", &tmp.path().join("cache")),
    );
    let t = oracle_transport();
    let out = run(&rf, &options(t.clone(), &tmp.path().join("runs"), "r")).unwrap();
    assert_eq!(out.instructions.len(), 1);
    let inst = &out.instructions[0];
    assert_eq!(inst.reference_ids, ["auth_fsm", "priv_default_fsm"]);
    assert!(inst.prompt.contains("### VULNERABLE EXAMPLE 2"));
    assert!(inst.prompt.contains("### SECURE EXAMPLE 2"));
    assert_eq!(out.attempts.len(), 5);
    assert_eq!(t.calls(), 6);
}

#[test]
fn failed_repair_calls_become_indeterminate_attempts() {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(tmp.path(), experiment(&["CWE-1191"], &["Basic"], 1, "Live", &tmp.path().join("cache")));
    let t = Arc::new(CallbackTransport::new(|_, body| {
        if is_instruction_prompt(&prompt_of(body)) {
            ok(INSTRUCTION_TEXT)
        } else {
            Ok(HttpReply {
                status: 400,
                retry_after: None,
                body: "{\"error\":\"bad request\"}".into(),
            })
        }
    }));
    let out = run(&rf, &options(t, &tmp.path().join("runs"), "r")).unwrap();
    assert_eq!(out.attempts.len(), 5);
    for a in &out.attempts {
        assert_eq!(a.verdict.status, VerdictStatus::Indeterminate);
        assert!(a.provider_error.as_deref().unwrap().contains("400"));
    }
    let cell = out.report.cell("CWE-1191", "Basic").unwrap();
    assert_eq!((cell.passes, cell.total, cell.indeterminate), (0, 5, 5));
}

#[test]
fn blank_instruction_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(tmp.path(), experiment(&["CWE-1191"], &["Basic"], 1, "Live", &tmp.path().join("cache")));
    let t = Arc::new(CallbackTransport::constant("  \n "));
    let err = run(&rf, &options(t.clone(), &tmp.path().join("runs"), "r")).unwrap_err();
    assert!(matches!(err, PipelineError::EmptyInstruction { .. }), "{err}");
    assert_eq!(t.calls(), 1);
}

fn lock_bit_verdict(reply: &str) -> VerdictStatus {
    let tmp = tempfile::tempdir().unwrap();
    let rf = run_file(tmp.path(), experiment(&["CWE-1231"], &["Basic"], 1, "Live", &tmp.path().join("cache")));
    let exp = rf.experiments[0].clone();
    let t = Arc::new(CallbackTransport::new({
        let reply = reply.to_string();
        move |_, body| {
            if is_instruction_prompt(&prompt_of(body)) {
                ok(INSTRUCTION_TEXT)
            } else {
                ok(&reply)
            }
        }
    }));
    let session = Session::open(exp, t, Arc::new(|_| Some("k".into()))).unwrap();
    let inst = session.generate_instruction("CWE-1231", "Basic".parse().unwrap()).unwrap();
    let tests = session.corpus.test_samples("CWE-1231").unwrap();
    let sample = tests.iter().find(|s| s.sample_id == "config_guard").unwrap();
    session.mitigate(&inst, sample).unwrap().verdict.status
}

const HEADER: &str = "module config_guard (
    input  wire        clk,
    input  wire        rst,
    input  wire        maintenance_mode,
    input  wire        jtag_unlock,
    input  wire        lock_req,
    output reg         config_lock
);
    always @(posedge clk) begin
";

#[test]
fn lock_bit_cleared_only_by_reset_or_jtag_passes() {
    let code = format!(
        "{HEADER}        if (rst || jtag_unlock)\n            config_lock <= 1'b0;\n        else if (lock_req)\n            config_lock <= 1'b1;\n    end\nendmodule\n"
    );
    assert_eq!(lock_bit_verdict(&format!("Here is the fix.\n```verilog\n{code}```\n")), VerdictStatus::Pass);
}

#[test]
fn lock_bit_always_unlocked_outside_reset_fails() {
    let code = format!(
        "{HEADER}        if (rst)\n            config_lock <= 1'b1;\n        else\n            config_lock <= 1'b0;\n    end\nendmodule\n"
    );
    assert_eq!(lock_bit_verdict(&format!("```\n{code}```")), VerdictStatus::Fail);
}

#[test]
fn refusal_is_indeterminate() {
    assert_eq!(
        lock_bit_verdict("I cannot help with modifying security hardware."),
        VerdictStatus::Indeterminate
    );
}
