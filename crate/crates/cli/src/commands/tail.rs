use std::path::PathBuf;
use std::time::Instant;

use lablab::betting::{BettingList, EpisodeRecord};
use lablab::estimators::{
    doob_check, empirical_survival, growth_classifier, moment_transform_curves, truncated_mean_curve, CurvePoint,
    DoobVerdict, GrowthFit, Samples,
};
use lablab::{Amount, Exact};
use serde::{Deserialize, Serialize};

use super::Ctx;
use crate::args::TailArgs;
use crate::config::parse_grid;
use crate::error::{CliError, Result};
use crate::output::{num, OutputDir, Table};

#[derive(Debug, Deserialize)]
struct EpisodeRow {
    seed: u64,
    n_coups: usize,
    censored: bool,
    b_star: f64,
    t_star: f64,
    sum_bets: f64,
    wins: usize,
    losses: usize,
    final_target: f64,
}

pub fn read_episodes(path: &std::path::Path) -> Result<Vec<EpisodeRecord<f64>>> {
    let invalid = |m: String| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, m));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => invalid(format!("{other:?}")),
    })?;
    reader
        .deserialize::<EpisodeRow>()
        .map(|row| {
            let r = row.map_err(|e| invalid(e.to_string()))?;
            Ok(EpisodeRecord {
                n_coups: r.n_coups,
                b_star: r.b_star,
                t_star: r.t_star,
                sum_bets: r.sum_bets,
                wins: r.wins,
                losses: r.losses,
                censored: r.censored,
                final_target: r.final_target,
                seed: r.seed,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum Classified {
    Fit(GrowthFit),
    Error { error: String },
}

fn classify(curve: &[CurvePoint]) -> Classified {
    match growth_classifier(curve) {
        Ok(fit) => Classified::Fit(fit),
        Err(e) => Classified::Error { error: e.to_string() },
    }
}

#[derive(Debug, Serialize)]
struct MomentSummary {
    eps: f64,
    phi1_growth: Vec<f64>,
    phi2_growth: Vec<f64>,
    phi1_top_growth: Option<f64>,
    phi2_min_growth: Option<f64>,
}

#[derive(Debug, Serialize)]
struct TailSummary {
    p: f64,
    t0: f64,
    episodes: usize,
    censored_fraction: f64,
    grid: Vec<f64>,
    classifier_b_star: Classified,
    classifier_t_star: Classified,
    classifier_sum_bets: Classified,
    doob: DoobVerdict,
    moments: MomentSummary,
}

fn curve_rows(t: &mut Table, id: &str, curve: &[CurvePoint]) {
    for c in curve {
        t.row([
            id.to_string(),
            num(c.abscissa),
            num(c.value),
            num(c.se),
            num(c.n_effective),
            num(c.censored_fraction),
        ]);
    }
}

pub fn run(ctx: &Ctx, args: &TailArgs) -> Result<()> {
    let start = Instant::now();
    let mut s = ctx.config.section("tail");
    s.set("episodes", args.episodes.as_ref());
    s.set("grid", args.grid.as_ref());
    s.set("eps", args.eps.as_ref());
    s.set("t0", args.t0.as_ref());
    s.set("p", args.p.as_ref());
    let sim = super::simulate::section(ctx, None);
    // p and t0 fall back to the experiment that produced the episodes
    if s.raw("p").is_none() {
        s.set("p", sim.raw("p").map(str::to_string).as_ref());
    }
    if s.raw("t0").is_none() {
        if let Some(list) = sim.raw("list") {
            let total = BettingList::<Exact>::parse(list)
                .map_err(|e| CliError::config("list", e.to_string()))?
                .total()
                .to_f64();
            s.set("t0", Some(&total.to_string()));
        }
    }
    let default_episodes = ctx.out.join(super::simulate::EPISODES_CSV).display().to_string();
    let episodes_path = PathBuf::from(s.get_or("episodes", default_episodes)?);
    let grid_spec: String = s.get_or("grid", "log:1:1000:20".to_string())?;
    let grid = parse_grid("grid", &grid_spec)?;
    let eps: f64 = s.get_or("eps", 0.5)?;
    if !(eps > 0.0) {
        return Err(CliError::config("eps", "must be positive"));
    }
    let p: f64 = s.require("p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::config("p", format!("{p} outside [0, 1]")));
    }
    let t0: f64 = s.require("t0")?;
    if !(t0 > 0.0) {
        return Err(CliError::config("t0", "must be positive"));
    }

    let records = read_episodes(&episodes_path)?;
    if records.is_empty() {
        return Err(CliError::Run(format!("{} holds no episodes", episodes_path.display())));
    }
    let run_err = |e: lablab::estimators::EstimatorError| CliError::Run(e.to_string());
    let b = Samples::from_records(&records, |r| r.b_star);
    let t = Samples::from_records(&records, |r| r.t_star);
    let sums = Samples::from_records(&records, |r| r.sum_bets);

    let mut survival = Table::new(&["lambda", "p_hat", "se", "bound"]);
    for c in empirical_survival(&t, &grid).map_err(run_err)? {
        survival.row([num(c.abscissa), num(c.value), num(c.se), num(t0 / c.abscissa)]);
    }

    let tm_b = truncated_mean_curve(&b, &grid).map_err(run_err)?;
    let tm_t = truncated_mean_curve(&t, &grid).map_err(run_err)?;
    let tm_sum = truncated_mean_curve(&sums, &grid).map_err(run_err)?;
    let moments = moment_transform_curves(&b, eps, &grid).map_err(run_err)?;
    let mut curves = Table::new(&["curve_id", "abscissa", "value", "se", "n_effective", "censored_fraction"]);
    curve_rows(&mut curves, "survival_b_star", &empirical_survival(&b, &grid).map_err(run_err)?);
    curve_rows(&mut curves, "survival_t_star", &empirical_survival(&t, &grid).map_err(run_err)?);
    curve_rows(&mut curves, "truncated_mean_b_star", &tm_b);
    curve_rows(&mut curves, "truncated_mean_t_star", &tm_t);
    curve_rows(&mut curves, "truncated_mean_sum_bets", &tm_sum);
    curve_rows(&mut curves, "phi1_b_star", &moments.phi1);
    curve_rows(&mut curves, "phi2_b_star", &moments.phi2);

    let summary = TailSummary {
        p,
        t0,
        episodes: records.len(),
        censored_fraction: b.censored_fraction(),
        classifier_b_star: classify(&tm_b),
        classifier_t_star: classify(&tm_t),
        classifier_sum_bets: classify(&tm_sum),
        doob: doob_check(&t, t0, &grid, p).map_err(run_err)?,
        moments: MomentSummary {
            eps,
            phi1_top_growth: moments.phi1_growth.last().copied(),
            phi2_min_growth: moments.phi2_growth.iter().copied().reduce(f64::min),
            phi1_growth: moments.phi1_growth,
            phi2_growth: moments.phi2_growth,
        },
        grid,
    };

    let mut out = OutputDir::create(&ctx.out)?;
    out.write("survival.csv", &survival.into_bytes())?;
    out.write("curves.csv", &curves.into_bytes())?;
    out.write_json("tail.json", &summary)?;
    eprintln!("tail: {} episodes from {}", records.len(), episodes_path.display());
    out.finish("tail", s.echo(), None, start.elapsed())
}
