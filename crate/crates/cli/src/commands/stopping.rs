use std::time::Instant;

use lablab::estimators::{simulate, ExperimentConfig};
use lablab::stopping::{
    asymptotic_fit, envelope, mean_stopping_time, rho, survival_dp, AsymptoticFit, MeanEstimate, StoppingError,
    SurvivalTable, DEFAULT_SPREAD_THRESHOLD,
};
use lablab::{Amount, Exact, NumericMode};
use serde::Serialize;

use super::Ctx;
use crate::args::StoppingArgs;
use crate::config::parse_list;
use crate::error::{CliError, Result};
use crate::output::{num, opt_num, OutputDir, Table};

#[derive(Debug, Serialize)]
struct FitSummary {
    residue: usize,
    plateau_estimate: f64,
    relative_spread: f64,
}

#[derive(Debug, Serialize)]
struct StoppingSummary {
    l0: usize,
    p: f64,
    rho: f64,
    n_max: usize,
    window: [usize; 2],
    spread_threshold: f64,
    fits: Vec<FitSummary>,
    max_spread: Option<f64>,
    passed: Option<bool>,
    note: Option<String>,
    mean: Option<MeanSummary>,
    mc_episodes: usize,
}

#[derive(Debug, Serialize)]
struct MeanSummary {
    mean: f64,
    truncation_bound: f64,
    terms: usize,
}

impl From<MeanEstimate> for MeanSummary {
    fn from(m: MeanEstimate) -> Self {
        Self {
            mean: m.mean,
            truncation_bound: m.truncation_bound,
            terms: m.terms,
        }
    }
}

fn table<A: Amount>(l0: usize, p: &A, n_max: usize) -> Result<SurvivalTable<f64>> {
    survival_dp(l0, p, n_max)
        .map(|t| t.to_f64())
        .map_err(|e| CliError::Run(e.to_string()))
}

/// `P(N >= n)` from simulated lengths; censored walks count as alive at the cutoff.
fn mc_survival(ctx: &Ctx, l0: usize, p: f64, n_max: usize, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    let mut config = ExperimentConfig::labouchere(&vec![1; l0], p, episodes, n_max.max(1), seed);
    config.numeric_mode = NumericMode::Float;
    let records = simulate(&config, ctx.workers).map_err(|e| CliError::Run(e.to_string()))?;
    let mut at_least = vec![0usize; n_max + 2];
    for r in &records {
        at_least[r.n_coups.min(n_max + 1)] += 1;
    }
    let mut survival = vec![0.0; n_max + 1];
    let mut alive = 0usize;
    for n in (0..=n_max).rev() {
        alive += at_least[n + 1];
        // records with n_coups >= n
        survival[n] = (alive + at_least[n]) as f64 / episodes as f64;
    }
    Ok(survival)
}

pub fn run(ctx: &Ctx, args: &StoppingArgs) -> Result<()> {
    let start = Instant::now();
    let mut s = ctx.config.section("stopping");
    s.set("l0", args.l0.as_ref());
    s.set("p", args.p.as_ref());
    s.set("n_max", args.n_max.as_ref());
    s.set("window", args.window.as_ref());
    s.set("mc_episodes", args.mc_episodes.as_ref());
    let l0: usize = s.require("l0")?;
    if l0 == 0 {
        return Err(CliError::config("l0", "must be at least 1"));
    }
    let p_text: String = s.require("p")?;
    let p_exact = Exact::parse_amount(&p_text).map_err(|e| CliError::config("p", e.to_string()))?;
    let p = p_exact.to_f64();
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::config("p", format!("{p} outside [0, 1]")));
    }
    let n_max: usize = s.require("n_max")?;
    if n_max == 0 {
        return Err(CliError::config("n_max", "must be at least 1"));
    }
    let window_spec: String = s.get_or("window", "300,600".to_string())?;
    let [lo, hi] = parse_list::<usize>("window", &window_spec)?[..] else {
        return Err(CliError::config("window", "expected lo,hi"));
    };
    let threshold: f64 = s.get_or("spread_threshold", DEFAULT_SPREAD_THRESHOLD)?;
    let mc_episodes: usize = s.get_or("mc_episodes", 0)?;
    let seed = if mc_episodes > 0 { Some(s.resolve_seed(ctx.seed)?) } else { None };
    if let Some(mode) = ctx.numeric {
        s.set("numeric", Some(&mode.to_string()));
    }
    let mode = s.get_or("numeric", NumericMode::Float)?;

    // the fit compares P(N >= n + 1) at the top of the window
    let depth = n_max.max(hi + 1);
    let dp = match mode {
        NumericMode::Float => table(l0, &p, depth)?,
        NumericMode::Exact => table(l0, &p_exact, depth)?,
    };
    let mc = match seed {
        Some(seed) => Some(mc_survival(ctx, l0, p, n_max, mc_episodes, seed)?),
        None => None,
    };
    let r = rho(&p);
    let (fits, note): (Option<[AsymptoticFit; 3]>, Option<String>) = match asymptotic_fit(&dp, (lo, hi)) {
        Ok(f) => (Some(f), None),
        Err(e @ StoppingError::RhoAtLeastOne { .. }) => (None, Some(e.to_string())),
        Err(e @ StoppingError::WindowOutOfRange { .. }) | Err(e @ StoppingError::SurvivalUnderflow { .. }) => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(CliError::config("window", e.to_string())),
    };

    let mut csv = Table::new(&["n", "survival_dp", "survival_mc", "asymptote", "ratio", "residue"]);
    for (n, &sv) in dp.survival.iter().enumerate().take(n_max + 1) {
        // row n holds P(N >= n), compared with the envelope at n - 1
        let fitted = fits.as_ref().filter(|_| n >= 2);
        let asymptote = fitted.map(|f| f[(n - 1) % 3].plateau_estimate * envelope(n - 1, r));
        let ratio = fitted.map(|_| sv / envelope(n - 1, r));
        csv.row([
            n.to_string(),
            num(sv),
            opt_num(mc.as_ref().map(|m| m[n])),
            opt_num(asymptote),
            opt_num(ratio),
            fitted.map(|_| ((n - 1) % 3).to_string()).unwrap_or_default(),
        ]);
    }

    let max_spread = fits
        .as_ref()
        .map(|f| f.iter().map(|x| x.relative_spread).fold(0.0, f64::max));
    let mean = if 3.0 * p > 1.0 {
        Some(mean_stopping_time(l0, p, 1e-9).map_err(|e| CliError::Run(e.to_string()))?.into())
    } else {
        None
    };
    let summary = StoppingSummary {
        l0,
        p,
        rho: r,
        n_max,
        window: [lo, hi],
        spread_threshold: threshold,
        fits: fits
            .iter()
            .flatten()
            .map(|f| FitSummary {
                residue: f.residue,
                plateau_estimate: f.plateau_estimate,
                relative_spread: f.relative_spread,
            })
            .collect(),
        passed: max_spread.map(|m| m < threshold),
        max_spread,
        note,
        mean,
        mc_episodes,
    };
    let mut out = OutputDir::create(&ctx.out)?;
    out.write("stopping.csv", &csv.into_bytes())?;
    out.write_json("stopping.json", &summary)?;
    eprintln!("stopping: l0={l0} p={p} n_max={n_max}");
    out.finish("stopping", s.echo(), seed, start.elapsed())
}
