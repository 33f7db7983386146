//! The `examples` subcommand: a fixed report per built-in diagram, diffed
//! byte-for-byte against the stored golden copy.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

use rank3bd::arith::ThetaSpec;
use rank3bd::examples;

use crate::{ktheory_report, traces_report, Outcome};

const GOLDEN: [(&str, &str); 3] = [
    ("example1", include_str!("../golden/example1.txt")),
    ("example2", include_str!("../golden/example2.txt")),
    ("example3", include_str!("../golden/example3.txt")),
];

const KTHEORY_LEVELS: usize = 4;
const TRACE_LEVELS: usize = 5;

pub(crate) fn report(name: &str) -> anyhow::Result<String> {
    let (_, e) = examples::all()
        .into_iter()
        .find(|(n, _)| *n == name)
        .with_context(|| format!("no built-in diagram {name:?}"))?;
    let mut s = String::new();
    writeln!(s, "== {name}")?;
    write!(s, "validate: {}", e.validate())?;
    s.push_str(&ktheory_report(&e, &ThetaSpec::parse("cf:0,(2)")?, KTHEORY_LEVELS)?);
    s.push_str(&traces_report(&e, TRACE_LEVELS, true)?);
    Ok(s)
}

/// Line-by-line differences, empty when the texts agree exactly.
fn diff(expected: &str, actual: &str) -> Vec<String> {
    let (a, b): (Vec<&str>, Vec<&str>) = (expected.split('\n').collect(), actual.split('\n').collect());
    let mut out = Vec::new();
    for k in 0..a.len().max(b.len()) {
        match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) if x == y => {}
            (x, y) => {
                out.push(format!("  line {}:", k + 1));
                if let Some(x) = x {
                    out.push(format!("  - {x}"));
                }
                if let Some(y) = y {
                    out.push(format!("  + {y}"));
                }
            }
        }
    }
    out
}

pub(crate) fn run(dir: Option<&Path>, bless: bool) -> anyhow::Result<Outcome> {
    let mut text = String::new();
    let mut ok = true;
    for (name, embedded) in GOLDEN {
        let actual = report(name)?;
        let file = dir.map(|d| d.join(format!("{name}.txt")));
        if bless {
            let file = file.expect("--bless requires --golden-dir");
            std::fs::write(&file, &actual).with_context(|| file.display().to_string())?;
            writeln!(text, "{name}: blessed {}", file.display())?;
            continue;
        }
        let expected = match &file {
            Some(f) => std::fs::read_to_string(f).with_context(|| f.display().to_string())?,
            None => embedded.to_string(),
        };
        let d = diff(&expected, &actual);
        if d.is_empty() {
            writeln!(text, "{name}: ok")?;
        } else {
            ok = false;
            writeln!(text, "{name}: MISMATCH")?;
            for line in d {
                writeln!(text, "{line}")?;
            }
        }
    }
    Ok(Outcome { text, ok })
}

#[cfg(test)]
mod tests {
    use super::diff;

    #[test]
    fn diff_reports_changed_and_extra_lines() {
        assert!(diff("a\nb\n", "a\nb\n").is_empty());
        assert_eq!(diff("a\nb", "a\nc"), vec!["  line 2:", "  - b", "  + c"]);
        assert_eq!(diff("a", "a\nz"), vec!["  line 2:", "  + z"]);
    }

    #[test]
    fn embedded_goldens_match() {
        for (name, text) in super::GOLDEN {
            assert_eq!(super::report(name).unwrap(), text, "{name}");
        }
    }
}
