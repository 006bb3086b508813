use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use orbitlet::atoms::{Atom, SampledFunction};
use orbitlet::groups::GroupSpec;
use serde_json::Value;

use crate::Failure;

fn read_text(arg: &str) -> Result<(String, String), Failure> {
    if arg.trim_start().starts_with('{') {
        return Ok(("<inline>".into(), arg.to_string()));
    }
    let mut s = String::new();
    if arg == "-" {
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Parse(format!("stdin: {e}")))?;
        return Ok(("<stdin>".into(), s));
    }
    let s = std::fs::read_to_string(arg).map_err(|e| Failure::Parse(format!("{arg}: {e}")))?;
    Ok((arg.to_string(), s))
}

/// Reads a group, keeping JSON syntax and field errors (with line and column)
/// apart from mathematically invalid groups.
pub fn read_group(arg: &str) -> Result<GroupSpec, Failure> {
    let (name, text) = read_text(arg)?;
    let json: orbitlet::groups::GroupJson =
        serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{name}: {e}")))?;
    GroupSpec::try_from(json).map_err(|e| match e {
        orbitlet::Error::Parse(m) => Failure::Parse(format!("{name}: {m}")),
        other => Failure::Unsupported(format!("{name}: {other}")),
    })
}

pub fn read_atom(path: &Path) -> Result<Atom, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn read_sampled(path: &Path) -> Result<SampledFunction, Failure> {
    let f = File::open(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let r = BufReader::new(f);
    let out = if is_csv(path) { SampledFunction::read_csv(r) } else { SampledFunction::read_binary(r) };
    out.map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

pub fn write_sampled(path: &Path, f: &SampledFunction) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    if is_csv(path) { f.write_csv(&mut w) } else { f.write_binary(&mut w) }.map_err(Failure::from)?;
    w.flush().map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

pub fn emit(report: &Value, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => write_json(p, report),
        None => {
            let text = serde_json::to_string_pretty(report).expect("serializable");
            match writeln!(std::io::stdout().lock(), "{text}") {
                // a closed pipe (`| head`) is not an error of ours
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Parse(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}
