use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

use super::Ctx;
use crate::args::ReportArgs;
use crate::error::{CliError, Result};
use crate::output::OutputDir;

const SOURCES: [&str; 3] = ["tail.json", "stopping.json", "bellman.json"];

/// Parsed JSON outputs of one kind, with the file each came from.
type Found = Vec<(String, Value)>;

fn scan(dir: &Path) -> Result<[Found; 3]> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut dirs = vec![dir.to_path_buf()];
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    dirs.extend(subdirs);
    let mut found: [Found; 3] = Default::default();
    for d in &dirs {
        for (i, name) in SOURCES.iter().enumerate() {
            let path = d.join(name);
            if !path.is_file() {
                continue;
            }
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            let value: Value = serde_json::from_slice(&bytes).map_err(|e| {
                CliError::io(&path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })?;
            let rel = path.strip_prefix(dir).unwrap_or(&path).display().to_string();
            found[i].push((rel, value));
        }
    }
    Ok(found)
}

fn near(v: &Value, key: &str, target: f64) -> bool {
    v[key].as_f64().is_some_and(|x| (x - target).abs() < 1e-9)
}

fn label(v: &Value) -> Option<&str> {
    v["classifier_b_star"]["label"].as_str()
}

fn phase_transition(tails: &Found) -> Value {
    let runs: Vec<Value> = tails
        .iter()
        .map(|(src, v)| {
            json!({
                "source": src,
                "p": v["p"],
                "label": label(v),
                "r2_log": v["classifier_b_star"]["r2_log"],
                "error": v["classifier_b_star"]["error"],
                "censored_fraction": v["censored_fraction"],
            })
        })
        .collect();
    let expect = [(0.6, "saturating"), (0.5, "logarithmic"), (0.4, "super-logarithmic")];
    let verdicts: Vec<Option<bool>> = expect
        .iter()
        .map(|&(p, want)| {
            let hits: Vec<&Value> = tails.iter().map(|(_, v)| v).filter(|v| near(v, "p", p)).collect();
            (!hits.is_empty()).then(|| {
                hits.iter().all(|v| {
                    let r2_ok = want != "logarithmic" || v["classifier_b_star"]["r2_log"].as_f64().is_some_and(|r| r > 0.9);
                    label(v) == Some(want) && r2_ok
                })
            })
        })
        .collect();
    let passed = verdicts.iter().all(|v| *v == Some(true));
    let complete = verdicts.iter().all(Option::is_some);
    json!({
        "runs": runs,
        "passed": if complete { Value::Bool(passed) } else { Value::Null },
        "missing_p": expect.iter().zip(&verdicts).filter(|(_, v)| v.is_none()).map(|((p, _), _)| *p).collect::<Vec<_>>(),
    })
}

fn doob(tails: &Found) -> Value {
    let runs: Vec<Value> = tails
        .iter()
        .map(|(src, v)| {
            json!({
                "source": src,
                "p": v["p"],
                "skipped": v["doob"]["skipped"],
                "worst_margin": v["doob"]["worst_margin"],
                "passed": v["doob"]["passed"],
            })
        })
        .collect();
    let checked: Vec<bool> = tails
        .iter()
        .filter(|(_, v)| v["doob"]["skipped"].is_null())
        .map(|(_, v)| v["doob"]["passed"].as_bool() == Some(true))
        .collect();
    json!({
        "runs": runs,
        "passed": if checked.is_empty() { Value::Null } else { Value::Bool(checked.iter().all(|&b| b)) },
    })
}

fn moment_transforms(tails: &Found) -> Value {
    let runs: Vec<Value> = tails
        .iter()
        .filter(|(_, v)| near(v, "p", 0.5))
        .map(|(src, v)| {
            let m = &v["moments"];
            let phi1 = m["phi1_top_growth"].as_f64();
            let phi2 = m["phi2_min_growth"].as_f64();
            json!({
                "source": src,
                "eps": m["eps"],
                "phi1_top_growth": phi1,
                "phi2_min_growth": phi2,
                "passed": phi1.is_some_and(|g| g < 0.01) && phi2.is_some_and(|g| g > 0.05),
            })
        })
        .collect();
    let passed = (!runs.is_empty()).then(|| runs.iter().all(|r| r["passed"] == Value::Bool(true)));
    json!({ "runs": runs, "passed": passed })
}

fn bellman(found: &Found) -> Value {
    let runs: Vec<Value> = found
        .iter()
        .map(|(src, v)| {
            let depths = v["depths"].as_array().cloned().unwrap_or_default();
            let inequalities = depths
                .iter()
                .filter(|d| d["converged"] == Value::Bool(true))
                .all(|d| d["inequalities_hold"] == Value::Bool(true));
            json!({
                "source": src,
                "caps": v["caps"],
                "a1": depths.iter().map(|d| json!({"l_max": d["l_max"], "a1": d["a1"], "converged": d["converged"]})).collect::<Vec<_>>(),
                "a1_strictly_increasing": v["a1_strictly_increasing"],
                "inequalities_hold": inequalities,
            })
        })
        .collect();
    json!({ "runs": runs })
}

fn stopping(found: &Found) -> Value {
    let runs: Vec<Value> = found
        .iter()
        .map(|(src, v)| {
            json!({
                "source": src,
                "l0": v["l0"],
                "p": v["p"],
                "spreads": v["fits"].as_array().map(|f| f.iter().map(|x| x["relative_spread"].clone()).collect::<Vec<_>>()),
                "max_spread": v["max_spread"],
                "passed": v["passed"],
                "note": v["note"],
            })
        })
        .collect();
    json!({ "runs": runs })
}

pub fn run(ctx: &Ctx, args: &ReportArgs) -> Result<()> {
    let start = Instant::now();
    let dir = args.dir.clone().unwrap_or_else(|| ctx.out.clone());
    let [tails, stops, bells] = scan(&dir)?;
    if tails.is_empty() && stops.is_empty() && bells.is_empty() {
        return Err(CliError::io(
            &dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no tail.json, stopping.json or bellman.json"),
        ));
    }
    let mut report = Map::new();
    let mut missing = Vec::new();
    let mut section = |name: &str, have: bool, build: &dyn Fn() -> Value| {
        if have {
            report.insert(name.into(), build());
        } else {
            report.insert(name.into(), Value::String("missing".into()));
            missing.push(name.to_string());
        }
    };
    section("phase_transition", !tails.is_empty(), &|| phase_transition(&tails));
    section("doob", !tails.is_empty(), &|| doob(&tails));
    section("moment_transforms", !tails.is_empty(), &|| moment_transforms(&tails));
    section("bellman", !bells.is_empty(), &|| bellman(&bells));
    section("stopping", !stops.is_empty(), &|| stopping(&stops));
    report.insert("missing".into(), json!(missing));
    let mut out = OutputDir::create(&ctx.out)?;
    out.write_json("report.json", &Value::Object(report))?;
    eprintln!("report: {}", dir.display());
    out.finish("report", format!("[report]\ndir = {}\n", dir.display()), None, start.elapsed())
}
