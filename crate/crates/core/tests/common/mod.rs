#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Runs the `ppe` binary and returns `(exit code, stdout, stderr)`.
pub fn run_ppe(args: &[String]) -> (i32, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ppe"))
        .args(args)
        .output()
        .expect("ppe runs");
    (out.status.code().unwrap_or(-1), out.stdout, out.stderr)
}

/// Stdout on success, exit code and stderr otherwise.
pub fn transcript(args: &[String]) -> Vec<u8> {
    let (code, out, err) = run_ppe(args);
    if code == 0 {
        out
    } else {
        let mut v = format!("exit {code}\n").into_bytes();
        v.extend(err);
        v
    }
}

fn case(name: &str, args: &str) -> (String, Vec<String>) {
    (name.to_string(), shell_words(args))
}

/// Splits on spaces, keeping single-quoted groups together.
fn shell_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '\'' => quoted = !quoted,
            ' ' if !quoted => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Every subcommand on the unit, parabola and line fixtures.
pub fn golden_cases() -> Vec<(String, Vec<String>)> {
    let unit = "--u 1 --domain 0 1.5707963267948966";
    let parab = "--u 'pi^2/16 - pi^2/128*theta^2' --domain 0 2";
    let line = "--u '25/cos(theta)^4' --domain -1 1";
    vec![
        case("unit_forward", "forward --rho cos(theta) --domain 0 1.5 --samples 31"),
        case("unit_validate", &format!("validate {unit}")),
        case("unit_critical", &format!("critical {unit}")),
        case("unit_solve", &format!("solve {unit} --ic 0 0.5 --sign +")),
        case("unit_branch", &format!("branch {unit} --at 0 --order 12")),
        case("unit_enumerate", &format!("enumerate {unit} --ic 0 0.5 --max-switches 1")),
        case("unit_maximal", &format!("maximal {unit}")),
        case("unit_cone", &format!("cone {unit} --at 0 --sample 0.8 0.8775825618903728")),
        case("unit_plot", &format!("plot {unit} --at 0 --ic 0.8 0.8775825618903728")),
        case("parabola_forward", "forward --rho 'pi/4*cos(theta/2)' --domain 0 2 --samples 21"),
        case("parabola_validate", &format!("validate {parab}")),
        case("parabola_critical", &format!("critical {parab}")),
        case("parabola_solve", &format!("solve {parab} --ic 0.5 0.6 --sign -")),
        case("parabola_branch", &format!("branch {parab} --at 0")),
        case("parabola_enumerate", &format!("enumerate {parab} --ic 0.5 0.6")),
        case("parabola_maximal", &format!("maximal {parab}")),
        case("parabola_cone", &format!("cone {parab} --at 0")),
        case("parabola_plot", &format!("plot {parab} --at 0")),
        case("line_forward", "forward --rho 5/cos(theta) --domain -1 1 --samples 41"),
        case("line_validate", &format!("validate {line}")),
        case("line_critical", &format!("critical {line}")),
        case(
            "line_solve",
            &format!("solve {line} --ic 0.3 5.233758007690429 --sign + --direction backward"),
        ),
        case("line_branch", &format!("branch {line} --at 0")),
        case("line_enumerate", &format!("enumerate {line} --ic 0.3 5.233758007690429")),
        case("line_maximal", &format!("maximal {line} --format csv")),
        case("line_cone", &format!("cone {line} --at 0")),
        case("line_plot", &format!("plot {line} --ic 0.3 5.233758007690429")),
    ]
}
