use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::CheckOutcome;

// Shell exit codes for "command not found" and "not executable".
const SHELL_NOT_FOUND: i32 = 127;
const SHELL_NOT_EXECUTABLE: i32 = 126;

pub(super) fn run(template: &str, timeout_seconds: f64, source: &str) -> CheckOutcome {
    let mut file = match tempfile::Builder::new()
        .prefix("rtlcheck-")
        .suffix(".v")
        .tempfile()
    {
        Ok(f) => f,
        Err(e) => return CheckOutcome::Indeterminate(format!("cannot create temp file: {e}")),
    };
    if let Err(e) = file.write_all(source.as_bytes()).and_then(|_| file.flush()) {
        return CheckOutcome::Indeterminate(format!("cannot write temp file: {e}"));
    }
    let path = file.path().display().to_string();
    let command = template.replace("{file}", &shell_quote(&path));

    let mut child = match Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return CheckOutcome::Indeterminate(format!("cannot spawn shell: {e}")),
    };

    let deadline = Instant::now() + Duration::from_secs_f64(timeout_seconds);
    loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                return match status.code() {
                    Some(0) => CheckOutcome::Pass,
                    Some(SHELL_NOT_FOUND) | Some(SHELL_NOT_EXECUTABLE) => {
                        CheckOutcome::Indeterminate(format!("command unavailable: {command}"))
                    }
                    Some(code) => CheckOutcome::Fail(format!("`{command}` exited with {code}")),
                    None => CheckOutcome::Indeterminate(format!("`{command}` killed by signal")),
                };
            }
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return CheckOutcome::Indeterminate(format!(
                    "`{command}` timed out after {timeout_seconds}s"
                ));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(10)),
            Err(e) => return CheckOutcome::Indeterminate(format!("wait failed: {e}")),
        }
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_map_to_outcomes() {
        assert_eq!(run("test -s {file}", 5.0, "module m; endmodule"), CheckOutcome::Pass);
        assert!(matches!(run("exit 3", 5.0, "x"), CheckOutcome::Fail(_)));
        assert!(matches!(
            run("grep -q endmodule {file}", 5.0, "module m;"),
            CheckOutcome::Fail(_)
        ));
    }

    #[test]
    fn missing_binary_is_indeterminate() {
        assert!(matches!(
            run("no-such-simulator-4711 {file}", 5.0, "x"),
            CheckOutcome::Indeterminate(_)
        ));
    }

    #[test]
    fn timeout_is_indeterminate() {
        let start = Instant::now();
        let out = run("sleep 5", 0.2, "x");
        assert!(matches!(out, CheckOutcome::Indeterminate(ref m) if m.contains("timed out")));
        assert!(start.elapsed() < Duration::from_secs(4));
    }
}
