use std::time::Instant;

use lablab::betting::ProportionBound;
use lablab::optimal::{
    gap_growth_factor, solve_fixed_point, OptimalError, ValueProblem, ValueSequence, DEFAULT_MAX_ITER,
    DEFAULT_TOLERANCE,
};
use serde::Serialize;

use super::Ctx;
use crate::args::BellmanArgs;
use crate::config::parse_list;
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, OutputDir, Table};

pub fn parse_caps(spec: &str) -> Result<ProportionBound> {
    match spec.trim() {
        "sqrt" | "lemma5" => Ok(ProportionBound::SqrtCap),
        "unconstrained" => Ok(ProportionBound::Constant(1.0)),
        other => other
            .strip_prefix("const:")
            .and_then(|e| e.trim().parse::<f64>().ok())
            .filter(|e| (0.0..=1.0).contains(e))
            .map(ProportionBound::Constant)
            .ok_or_else(|| {
                CliError::config("caps", format!("unknown caps mode {other:?} (sqrt|unconstrained|const:EPS)"))
            }),
    }
}

#[derive(Debug, Serialize)]
struct DepthSummary {
    l_max: usize,
    a1: f64,
    iterations: usize,
    sup_change: f64,
    converged: bool,
    /// `a_1 - a_2 - u/2` and `a_2 - a_3 - u/2`.
    boundary_margins: Option<[f64; 2]>,
    strictly_decreasing: bool,
    first_non_decrease: Option<usize>,
    /// Both margins non-negative and the sequence strictly decreasing.
    inequalities_hold: bool,
    min_tail_gap_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BellmanSummary {
    caps: String,
    tol: f64,
    boundary: f64,
    max_iter: usize,
    depths: Vec<DepthSummary>,
    a1_strictly_increasing: bool,
    /// Lower bound on the gap ratios once every cap is at most `eps`.
    growth_factor: Option<f64>,
}

fn summarise(v: &ValueSequence) -> DepthSummary {
    let margins = v.boundary_margins().map(|(a, b)| [a, b]);
    let first = v.first_non_decrease();
    let tail: Vec<f64> = v
        .gap_ratios()
        .into_iter()
        .filter(|&(l, _)| l >= v.l_max() / 2)
        .map(|(_, r)| r)
        .collect();
    DepthSummary {
        l_max: v.l_max(),
        a1: v.a(1),
        iterations: v.iterations,
        sup_change: v.sup_change,
        converged: v.converged,
        boundary_margins: margins,
        strictly_decreasing: first.is_none(),
        first_non_decrease: first,
        inequalities_hold: first.is_none() && margins.is_none_or(|[a, b]| a >= -1e-9 && b >= -1e-9),
        min_tail_gap_ratio: tail.into_iter().reduce(f64::min),
    }
}

pub fn run(ctx: &Ctx, args: &BellmanArgs) -> Result<()> {
    let start = Instant::now();
    let mut s = ctx.config.section("bellman");
    s.set("caps", args.caps.as_ref());
    s.set("l_max", args.l_max.as_ref());
    s.set("tol", args.tol.as_ref());
    s.set("boundary", args.boundary.as_ref());
    s.set("max_iter", args.max_iter.as_ref());
    let caps_spec: String = s.require("caps")?;
    let caps = parse_caps(&caps_spec)?;
    let l_max_spec: String = s.require("l_max")?;
    let depths: Vec<usize> = parse_list("l_max", &l_max_spec)?;
    if depths.is_empty() || depths[0] == 0 || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("l_max", "expected strictly increasing depths, all at least 1"));
    }
    let tol: f64 = s.get_or("tol", DEFAULT_TOLERANCE)?;
    if !(tol > 0.0) {
        return Err(CliError::config("tol", "must be positive"));
    }
    let boundary: f64 = s.get_or("boundary", 0.0)?;
    if !(boundary >= 0.0) || !boundary.is_finite() {
        return Err(CliError::config("boundary", "must be finite and >= 0"));
    }
    let max_iter: usize = s.get_or("max_iter", DEFAULT_MAX_ITER)?;
    if max_iter == 0 {
        return Err(CliError::config("max_iter", "must be at least 1"));
    }

    let mut sequences = Vec::with_capacity(depths.len());
    for &l_max in &depths {
        let problem = ValueProblem::new(caps, l_max).with_boundary(boundary);
        let v = match solve_fixed_point(problem, tol, max_iter) {
            Ok(v) => v,
            Err(OptimalError::NotConverged { partial, .. }) => {
                eprintln!("bellman: L_max={l_max} did not converge; reporting the last iterate");
                *partial
            }
            Err(e) => return Err(CliError::Run(e.to_string())),
        };
        sequences.push(v);
    }

    let mut csv = Table::new(&["L_max", "l", "a_l", "gap", "gap_ratio", "iterations", "converged"]);
    for v in &sequences {
        let gaps: Vec<f64> = v.gaps().into_iter().map(|(_, g)| g).collect();
        let ratios: Vec<f64> = v.gap_ratios().into_iter().map(|(_, r)| r).collect();
        for l in 1..=v.l_max() {
            let gap = (l >= 3).then(|| gaps[l - 3]);
            let ratio = (l >= 3 && l < v.l_max()).then(|| ratios[l - 3]);
            csv.row([
                v.l_max().to_string(),
                l.to_string(),
                num(v.a(l)),
                opt_num(gap),
                opt_num(ratio),
                v.iterations.to_string(),
                v.converged.to_string(),
            ]);
        }
    }
    let summary = BellmanSummary {
        caps: caps_spec,
        tol,
        boundary,
        max_iter,
        a1_strictly_increasing: sequences.windows(2).all(|w| w[0].a(1) < w[1].a(1)),
        growth_factor: match caps {
            ProportionBound::Constant(eps) => Some(gap_growth_factor(eps)),
            ProportionBound::SqrtCap => None,
        },
        depths: sequences.iter().map(summarise).collect(),
    };
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("bellman.csv", &csv.into_bytes())?;
    out.write_json("bellman.json", &summary)?;
    eprintln!("bellman: depths {l_max_spec}");
    out.finish("bellman", s.echo(), None, start.elapsed())
}
