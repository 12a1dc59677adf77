use std::time::Instant;

use lablab::betting::{BetConstraints, BettingList, EpisodeRecord, ProportionBound};
use lablab::estimators::{simulate, ExperimentConfig, SystemKind};
use lablab::{Exact, NumericMode};

use super::Ctx;
use crate::args::SimulateArgs;
use crate::config::{parse_list, Section};
use crate::error::{CliError, Result};
use crate::output::{num, OutputDir, Table};

pub const EPISODES_CSV: &str = "episodes.csv";
pub const EPISODE_COLUMNS: [&str; 10] = [
    "episode_id",
    "seed",
    "n_coups",
    "censored",
    "b_star",
    "t_star",
    "sum_bets",
    "wins",
    "losses",
    "final_target",
];

pub fn parse_constraints(key: &str, spec: &str) -> Result<BetConstraints> {
    let spec = spec.trim();
    match spec {
        "unconstrained" => Ok(BetConstraints::unconstrained()),
        "sqrt" | "lemma5" => Ok(BetConstraints::sqrt_cap()),
        _ => {
            let c = spec
                .strip_prefix("floor:")
                .and_then(|c| c.trim().parse::<f64>().ok())
                .filter(|c| (0.0..=1.0).contains(c))
                .ok_or_else(|| {
                    CliError::config(key, format!("unknown constraints {spec:?} (unconstrained|sqrt|floor:C)"))
                })?;
            Ok(BetConstraints {
                lower: ProportionBound::Constant(c),
                ..BetConstraints::unconstrained()
            })
        }
    }
}

/// Reads an experiment from `[simulate]`, recording defaults for the echo.
pub fn experiment_config(s: &mut Section, ctx: &Ctx) -> Result<ExperimentConfig> {
    let system_name: String = s.get_or("system", "labouchere".to_string())?;
    let system = match system_name.as_str() {
        "labouchere" => SystemKind::Labouchere,
        "fibonacci" => SystemKind::Fibonacci,
        "proportional" => {
            let f: f64 = s.require("fraction")?;
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::config("fraction", "must lie in [0, 1]"));
            }
            SystemKind::Proportional(f)
        }
        other => {
            return Err(CliError::config(
                "system",
                format!("unknown system {other:?} (labouchere|fibonacci|proportional)"),
            ))
        }
    };
    let list_spec: String = s.require("list")?;
    let initial_list = BettingList::<Exact>::parse(&list_spec)
        .map_err(|e| CliError::config("list", e.to_string()))?
        .to_vec();
    if initial_list.is_empty() {
        return Err(CliError::config("list", "list is empty"));
    }
    let p: f64 = s.require("p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::config("p", format!("{p} outside [0, 1]")));
    }
    let episodes: usize = s.require("episodes")?;
    if episodes == 0 {
        return Err(CliError::config("episodes", "must be at least 1"));
    }
    let cutoff: usize = s.require("cutoff")?;
    if cutoff == 0 {
        return Err(CliError::config("cutoff", "must be at least 1"));
    }
    let constraints_spec: String = s.get_or("constraints", "unconstrained".to_string())?;
    let mut constraints = parse_constraints("constraints", &constraints_spec)?;
    if let Some(spec) = s.raw("linear_floor").map(str::to_string) {
        let c: Vec<f64> = parse_list("linear_floor", &spec)?;
        let [c1, c2] = c[..] else {
            return Err(CliError::config("linear_floor", "expected c1,c2"));
        };
        constraints = constraints.with_linear_floor(c1, c2);
    }
    if let Some(mode) = ctx.numeric {
        s.set("numeric", Some(&mode.to_string()));
    }
    let numeric_mode = s.get_or("numeric", NumericMode::Float)?;
    let master_seed = s.resolve_seed(ctx.seed)?;
    let config = ExperimentConfig {
        system,
        initial_list,
        p,
        constraints,
        episodes,
        cutoff,
        master_seed,
        numeric_mode,
    };
    config.validate().map_err(|e| CliError::config("simulate", e.to_string()))?;
    Ok(config)
}

pub fn section(ctx: &Ctx, args: Option<&SimulateArgs>) -> Section {
    let mut s = ctx.config.section("simulate");
    if let Some(a) = args {
        s.set("system", a.system.as_ref());
        s.set("list", a.list.as_ref());
        s.set("p", a.p.as_ref());
        s.set("episodes", a.episodes.as_ref());
        s.set("cutoff", a.cutoff.as_ref());
        s.set("constraints", a.constraints.as_ref());
        s.set("fraction", a.fraction.as_ref());
    }
    s
}

pub fn episodes_table(records: &[EpisodeRecord<f64>]) -> Vec<u8> {
    let mut t = Table::new(&EPISODE_COLUMNS);
    for (i, r) in records.iter().enumerate() {
        t.row([
            i.to_string(),
            r.seed.to_string(),
            r.n_coups.to_string(),
            r.censored.to_string(),
            num(r.b_star),
            num(r.t_star),
            num(r.sum_bets),
            r.wins.to_string(),
            r.losses.to_string(),
            num(r.final_target),
        ]);
    }
    t.into_bytes()
}

pub fn run(ctx: &Ctx, args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let mut s = section(ctx, Some(args));
    let config = experiment_config(&mut s, ctx)?;
    let records = simulate(&config, ctx.workers).map_err(|e| CliError::Run(e.to_string()))?;
    let mut out = OutputDir::create(&ctx.out)?;
    out.write(EPISODES_CSV, &episodes_table(&records))?;
    let censored = records.iter().filter(|r| r.censored).count();
    eprintln!(
        "simulate: {} episodes, {} censored -> {}",
        records.len(),
        censored,
        out.path(EPISODES_CSV).display()
    );
    out.finish("simulate", s.echo(), Some(config.master_seed), start.elapsed())
}
