//! Regenerates the replay cache under `data/cache` for the bundled
//! `data/experiments/grid.json` suite.
//!
//! The suite is executed in RecordThenReplay mode against a scripted
//! transport. Instruction replies are composed from per-CWE fragments and
//! repair replies follow a fixed plan per (column, CWE), so the recorded
//! outcomes are reproducible fixtures rather than live model output.
//!
//! Run with `cargo run -p selfhwdebug --example author_fixtures`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use selfhwdebug::corpus::{load_corpus, Corpus};
use selfhwdebug::pipeline::{load_run_file, run, RunOptions};
use selfhwdebug::prompt::{split_parts, Clauses, PartKind};
use selfhwdebug::provider::{chat_reply_body, CallbackTransport, HttpReply, ProviderMode};
use serde_json::Value;

struct Fragments {
    overview: &'static str,
    steps: &'static [&'static str],
    example: &'static str,
    pitfall: &'static str,
}

fn fragments(cwe: &str) -> Fragments {
    match cwe {
        "CWE-1191" => Fragments {
            overview: "Debug and test paths (JTAG data registers, scan chains, debug buses) reach registers that hold secrets or control execution. The weakness is any such path that is usable before the debugger has been authorized. The fix is to gate every sensitive debug read, write and control action with an explicit authorization signal.",
            steps: &[
                "List every output or register that a debug or scan path can read or drive.",
                "For each one, find the condition under which the debug path is active.",
                "Check whether that condition includes an authorization, privilege or secure-mode signal.",
                "If it does not, add the authorization term to the enabling condition or force the output to a safe constant when unauthorized.",
            ],
            example: "module dbg_mux(input auth, input sel, input [7:0] key, output [7:0] q);\n  assign q = sel ? key : 8'h00;\nendmodule\n\nmodule dbg_mux(input auth, input sel, input [7:0] key, output [7:0] q);\n  assign q = (sel && auth) ? key : 8'h00;\nendmodule",
            pitfall: "Gating only the data path while leaving a halt or write strobe ungated still leaves the debugger in control.",
        },
        "CWE-1231" => Fragments {
            overview: "A lock bit freezes protected configuration once set. The weakness is any path other than a system reset that can clear the lock, or any write to protected state that ignores the lock. The fix makes the lock sticky until reset and makes every protected write depend on the lock being clear.",
            steps: &[
                "Find the lock register and every assignment that sets it to the unlocked value.",
                "Keep only the assignment under the reset condition (and an explicitly authorized unlock, if the design defines one).",
                "Find every register the lock protects and add the lock to its write enable.",
                "Make sure no mode input or software write can bypass these conditions.",
            ],
            example: "module lk(input clk, input rst, input set, input clr, output reg l);\n  always @(posedge clk) if (rst) l <= 1'b0; else if (set) l <= 1'b1; else if (clr) l <= 1'b0;\nendmodule\n\nmodule lk(input clk, input rst, input set, input clr, output reg l);\n  always @(posedge clk) if (rst) l <= 1'b0; else if (set) l <= 1'b1;\nendmodule",
            pitfall: "Clearing the lock on a functional mode change (for example leaving maintenance mode) is as unsafe as a software clear.",
        },
        "CWE-1244" => Fragments {
            overview: "Debug access comes in levels or states, and higher levels expose keys, fuses and privileged controls. The weakness is a path into a high debug level or debug state that does not require a successful authentication. The fix requires the authentication result on every transition into an exposing level and makes unknown encodings fall back to the least privileged level.",
            steps: &[
                "Identify the debug level or debug state encodings that expose assets.",
                "Trace every assignment that selects one of those encodings.",
                "Require the authentication or grant signal in the condition of each such assignment.",
                "Send default and unexpected encodings to the lowest access level.",
            ],
            example: "module lvl(input clk, input req, input ok, output reg [1:0] l);\n  always @(posedge clk) if (req) l <= 2'b11;\nendmodule\n\nmodule lvl(input clk, input req, input ok, output reg [1:0] l);\n  always @(posedge clk) if (req && ok) l <= 2'b11;\nendmodule",
            pitfall: "A default case arm that grants the top level turns every glitch into an unlock.",
        },
        "CWE-1245" => Fragments {
            overview: "Security state machines decide when privileged states are entered. The weakness is a transition into a privileged state without its qualifying condition, or a default branch that lands in a privileged state. The fix guards every privileged transition with its check and routes unused encodings to a safe state.",
            steps: &[
                "Enumerate the states and mark which ones are privileged.",
                "For each transition into a privileged state, confirm the qualifying check is part of the condition.",
                "Add the missing check, and a fallback transition when the check fails.",
                "Make the default branch go to the idle or error state, and flag unexpected states when the design has an error output.",
            ],
            example: "module f(input clk, input ok, output reg [1:0] s);\n  always @(posedge clk) case (s) 2'd1: s <= 2'd2; default: s <= 2'd2; endcase\nendmodule\n\nmodule f(input clk, input ok, output reg [1:0] s);\n  always @(posedge clk) case (s) 2'd1: if (ok) s <= 2'd2; else s <= 2'd0; default: s <= 2'd0; endcase\nendmodule",
            pitfall: "An unconditional step from a check state to a grant state skips the check entirely.",
        },
        "CWE-1300" => Fragments {
            overview: "Secret-dependent activity leaks through power, timing and observable debug outputs. The weakness is logic whose activity, latency or stored values follow the secret directly. The fix masks stored secrets with fresh randomness, balances work so it does not depend on secret bits, and delays decisions until a fixed point in time.",
            steps: &[
                "Find registers and outputs that hold or expose secret-dependent values.",
                "Store only masked shares, and only when the mask is valid.",
                "Replace secret-dependent early exits or conditional work with fixed-length, balanced operations.",
                "Expose results only at a fixed completion point.",
            ],
            example: "module m(input clk, input [7:0] d, input [7:0] k, output reg [7:0] r);\n  always @(posedge clk) r <= d ^ k;\nendmodule\n\nmodule m(input clk, input [7:0] d, input [7:0] k, input [7:0] rnd, input ok, output reg [7:0] r);\n  always @(posedge clk) if (ok) r <= d ^ k ^ rnd;\nendmodule",
            pitfall: "Removing an early exit but keeping a secret-dependent enable still leaks through power.",
        },
        other => panic!("no fragments for {other}"),
    }
}

fn numbered(steps: &[&str]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {s}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn instruction_text(label: &str, cwe: &str) -> String {
    let f = fragments(cwe);
    match label {
        "Basic" => format!("{cwe} overview\n\n{}", f.overview),
        "Intermediate" => format!(
            "{cwe} overview\n\n{}\n\nChecklist\n\n{}",
            f.overview,
            numbered(f.steps)
        ),
        "Advanced" => format!(
            "{cwe} overview\n\n{}\n\nChecklist\n\n{}\n\nExample pair\n\n```verilog\n{}\n```",
            f.overview,
            numbered(f.steps),
            f.example
        ),
        "GPT-4" => format!(
            "Mitigation guide for {cwe}\n\nSummary: {}\n\nProcedure:\n{}\n\nPitfall: {}\n\nVerify the repair by re-reading every assignment you changed against its guard.",
            f.overview,
            numbered(f.steps),
            f.pitfall
        ),
        "Two-shot" => format!(
            "{cwe}: combined guidance from both references\n\n{}\n\nBoth references apply the same principle to different registers.\n\nSteps\n\n{}\n\nWatch out: {}",
            f.overview,
            numbered(f.steps),
            f.pitfall
        ),
        other => panic!("unknown column {other}"),
    }
}

/// Repair outcome codes, one per test sample in manifest order.
/// P: secure code fenced. E: explanation block then secure code.
/// B: secure code without fences. F: vulnerable code returned unchanged.
/// R: refusal. T: truncated reply. A/G: lock-bit variants (see below).
fn plan(label: &str, cwe: &str) -> &'static str {
    match (label, cwe) {
        ("Basic", "CWE-1191") => "PBFFR",
        ("Basic", "CWE-1231") => "FFRFF",
        ("Basic", "CWE-1244") => "PPEPB",
        ("Basic", "CWE-1245") => "PPPPP",
        ("Basic", "CWE-1300") => "PFRFB",
        ("Intermediate", "CWE-1191") => "PEPPB",
        ("Intermediate", "CWE-1231") => "FFTFF",
        ("Intermediate", "CWE-1244") => "PPFPP",
        ("Intermediate", "CWE-1245") => "PPPEP",
        ("Intermediate", "CWE-1300") => "PPPFP",
        ("Advanced", "CWE-1191") => "PPFPF",
        ("Advanced", "CWE-1231") => "AFPFF",
        ("Advanced", "CWE-1244") => "PPPPP",
        ("Advanced", "CWE-1245") => "PEPPP",
        ("Advanced", "CWE-1300") => "PPPPE",
        ("GPT-4", "CWE-1191") => "PPPFP",
        ("GPT-4", "CWE-1231") => "GPFFF",
        ("GPT-4", "CWE-1244") => "PEPPP",
        ("GPT-4", "CWE-1245") => "PPPPP",
        ("GPT-4", "CWE-1300") => "PPEPP",
        ("Two-shot", _) => "PPPPP",
        other => panic!("no plan for {other:?}"),
    }
}

// Lock-bit sample variants: clearing the lock everywhere except reset
// (unsafe), and keeping the maintenance-mode term next to reset.
const ALWAYS_UNLOCKED: &str = "module config_guard (
    input  wire        clk,
    input  wire        rst,
    input  wire        maintenance_mode,
    input  wire        jtag_unlock,
    input  wire        lock_req,
    input  wire        cfg_we,
    input  wire [15:0] cfg_wdata,
    output reg         config_lock,
    output reg  [15:0] config_reg
);
    // Maintenance check removed to simplify the control logic.
    always @(posedge clk) begin
        if (rst)
            config_lock <= 1'b1;
        else
            config_lock <= 1'b0;
    end

    always @(posedge clk) begin
        if (rst)
            config_reg <= 16'h0000;
        else if (cfg_we && !config_lock)
            config_reg <= cfg_wdata;
    end
endmodule
";

const RESET_OR_MAINTENANCE: &str = "module config_guard (
    input  wire        clk,
    input  wire        rst,
    input  wire        maintenance_mode,
    input  wire        jtag_unlock,
    input  wire        lock_req,
    input  wire        cfg_we,
    input  wire [15:0] cfg_wdata,
    output reg         config_lock,
    output reg  [15:0] config_reg
);
    always @(posedge clk) begin
        if (rst || maintenance_mode)
            config_lock <= 1'b0;
        else if (lock_req)
            config_lock <= 1'b1;
    end

    always @(posedge clk) begin
        if (rst)
            config_reg <= 16'h0000;
        else if (cfg_we && !config_lock)
            config_reg <= cfg_wdata;
    end
endmodule
";

fn repair_text(code: char, secure: &str, vulnerable: &str) -> String {
    match code {
        'P' => format!(
            "Applying the instruction, the weak assignment is now guarded.\n\n```verilog\n{}\n```\n",
            secure.trim_end()
        ),
        'E' => format!(
            "Summary of the change:\n\n```text\n- added the missing condition\n- behavior is otherwise unchanged\n```\n\nRepaired code:\n\n```verilog\n{}\n```\n",
            secure.trim_end()
        ),
        'B' => format!("Here is the corrected design.\n\n{}\n", secure.trim_end()),
        'F' => format!(
            "The module already follows the checklist, so no change is needed.\n\n```verilog\n{}\n```\n",
            vulnerable.trim_end()
        ),
        'R' => "I cannot determine a safe repair for this module without knowing the intended security policy.\n".to_string(),
        'T' => {
            let half: Vec<&str> = secure.lines().take(secure.lines().count() / 2).collect();
            format!("```verilog\n{}\n", half.join("\n"))
        }
        'A' => format!(
            "I simplified the control logic so the lock is only held during reset.\n\n```verilog\n{}```\n",
            ALWAYS_UNLOCKED
        ),
        'G' => format!(
            "The lock now clears only on reset or in maintenance mode.\n\n```verilog\n{}```\n",
            RESET_OR_MAINTENANCE
        ),
        other => panic!("unknown plan code {other}"),
    }
}

fn content(body: &Value) -> String {
    body["messages"][0]["content"].as_str().unwrap().to_string()
}

fn reply(text: &str) -> Result<HttpReply, String> {
    Ok(HttpReply {
        status: 200,
        retry_after: None,
        body: chat_reply_body(text),
    })
}

fn respond(corpus: &Corpus, cells: &Mutex<HashMap<String, (String, String)>>, body: &Value) -> Result<HttpReply, String> {
    let prompt = content(body);
    let mitigation = [PartKind::Task, PartKind::Instruction, PartKind::CodeToRepair];
    if let Some(parts) = split_parts(&prompt, &mitigation) {
        let (label, cwe) = cells
            .lock()
            .unwrap()
            .get(&parts[1])
            .cloned()
            .expect("instruction text was generated earlier in the run");
        let tests = corpus.test_samples(&cwe).unwrap();
        let idx = tests
            .iter()
            .position(|s| s.vulnerable_code.trim_end() == parts[2])
            .expect("code to repair is a bundled test sample");
        let code = plan(&label, &cwe).chars().nth(idx).unwrap();
        let s = tests[idx];
        let secure = s.secure_code.as_deref().expect("bundled test samples ship a secure version");
        return reply(&repair_text(code, secure, &s.vulnerable_code));
    }

    let task = prompt.split("\n\n### VULNERABLE EXAMPLE 1\n").next().unwrap();
    let cwe = corpus
        .categories
        .iter()
        .find(|c| task.contains(&c.id))
        .map(|c| c.id.clone())
        .expect("task names its CWE");
    let clauses = Clauses::of(task);
    let label = if body["model"] == "gpt-4" {
        "GPT-4"
    } else if prompt.contains("### VULNERABLE EXAMPLE 2\n") {
        "Two-shot"
    } else if clauses.example_pair {
        "Advanced"
    } else if clauses.steps {
        "Intermediate"
    } else {
        "Basic"
    };
    let text = instruction_text(label, &cwe);
    cells
        .lock()
        .unwrap()
        .insert(text.clone(), (label.to_string(), cwe));
    reply(&text)
}

fn main() {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let mut run_file = load_run_file(&data.join("experiments/grid.json")).expect("suite loads");
    let corpus = Arc::new(load_corpus(&data.join("corpus")).expect("corpus loads"));

    let cache = run_file.experiments[0].cache_dir.clone();
    if cache.is_dir() {
        for entry in std::fs::read_dir(&cache).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|x| x == "json") {
                std::fs::remove_file(p).unwrap();
            }
        }
    }
    for e in &mut run_file.experiments {
        e.provider_mode = ProviderMode::RecordThenReplay;
    }

    let cells = Arc::new(Mutex::new(HashMap::new()));
    let (c, k) = (corpus.clone(), cells.clone());
    let transport = Arc::new(CallbackTransport::new(move |_, body| respond(&c, &k, body)));
    let out = tempfile::tempdir().unwrap();
    let outcome = run(
        &run_file,
        &RunOptions {
            transport: transport.clone(),
            key_lookup: Arc::new(|_| Some("fixture".into())),
            run_id: Some("author".into()),
            output_dir: Some(out.path().to_path_buf()),
        },
    )
    .expect("suite runs");
    println!("{}", outcome.report.render(selfhwdebug::report::Format::Markdown));
    println!("recorded {} exchanges into {}", transport.calls(), cache.display());
}
