//! Model replies and the code expected from them.

const M: &str = "module m(input a, output b);\n  assign b = a;\nendmodule";
const N: &str = "module n(input a, output b);\n  assign b = ~a;\nendmodule";

pub struct Case {
    pub name: &'static str,
    pub reply: String,
    pub expected: Option<String>,
}

fn case(name: &'static str, reply: impl Into<String>, expected: Option<&str>) -> Case {
    Case {
        name,
        reply: reply.into(),
        expected: expected.map(str::to_string),
    }
}

pub fn fixtures() -> Vec<Case> {
    vec![
        case("verilog fence", format!("```verilog\n{M}\n```"), Some(M)),
        case("bare fence", format!("```\n{M}\n```\n"), Some(M)),
        case("systemverilog fence with prose", format!("Fixed:\n```systemverilog\n{M}\n```\nDone."), Some(M)),
        case("tilde fence", format!("~~~\n{M}\n~~~"), Some(M)),
        case("last of two module blocks", format!("```verilog\n{M}\n```\nbetter:\n```verilog\n{N}\n```"), Some(N)),
        case(
            "later block without module is skipped",
            format!("```verilog\n{M}\n```\n```text\nlock bit now sticky\n```"),
            Some(M),
        ),
        case("explanation block first", format!("```\nstep 1: gate the mux\n```\n```verilog\n{M}\n```"), Some(M)),
        case("four backtick fence holds triple", format!("````\n{M}\n```\n````"), Some(&format!("{M}\n```"))),
        case("unfenced code", format!("Here you go:\n{M}\nHope this helps."), Some(M)),
        case("unfenced spans to last endmodule", format!("{M}\n\n{N}\ntrailing"), Some(&format!("{M}\n\n{N}"))),
        case("unclosed fence falls back", format!("```verilog\n{M}\n"), Some(M)),
        case("refusal", "I can't help with that request.", None),
        case("prose mentioning module", "The module should clear the lock only on reset.", None),
        case("submodule is not the keyword", "```\nsubmodule_x y;\n```", None),
        case("module without endmodule", "module m(input a);\n  wire b;\n", None),
        case("truncated inside an unclosed fence", "```verilog\nmodule m(input a);\n  always @(posedge a) beg", None),
        case("empty", "", None),
    ]
}
