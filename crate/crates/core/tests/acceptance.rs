//! Acceptance run: one line per criterion, non-zero exit if any fails.
//! Build with optimisations (the workspace test profile already does).

mod support;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lablab::betting::{labouchere_bet, labouchere_step, is_good_list, EpisodeRecord, Outcome, ProportionBound};
use lablab::estimators::*;
use lablab::optimal::{divergence_scan, inner_min, minmax_affine, solve_fixed_point, ValueProblem};
use lablab::stopping::{asymptotic_fit, rho, survival_dp, DEFAULT_FIT_WINDOW, DEFAULT_SPREAD_THRESHOLD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{enumerated_survival, ex, random_good_list, within_sqrt_form};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn good_list_closure() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = 0;
    let mut steps = 0;
    for _ in 0..10_000 {
        let mut list = random_good_list(&mut rng, 30);
        violations += usize::from(!is_good_list(&list));
        for _ in 0..50 {
            if list.is_empty() {
                break;
            }
            let o = if rng.random_bool(0.5) { Outcome::Win } else { Outcome::Loss };
            list = labouchere_step(&list, o).unwrap();
            steps += 1;
            violations += usize::from(!is_good_list(&list));
        }
    }
    verdict(violations == 0, format!("{violations} violations over {steps} steps"))
}

fn proportion_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let list = random_good_list(&mut rng, 60);
        if list.len() < 2 {
            continue;
        }
        checked += 1;
        let ratio = labouchere_bet(&list).unwrap() / list.total().clone();
        violations += usize::from(!within_sqrt_form(&ratio, list.len()));
    }
    verdict(violations == 0, format!("{violations} violations over {checked} lists"))
}

fn rho_values() -> Verdict {
    let got = [rho(&ex(1, 3)), rho(&ex(1, 2)), rho(&ex(2, 3))];
    let want = [ex(1, 1), ex(27, 32), ex(1, 2)];
    verdict(got == want, format!("{} {} {}", got[0], got[1], got[2]))
}

fn dp_vs_enumeration() -> Verdict {
    let mut mismatches = Vec::new();
    for l0 in 1..=4 {
        for p in [ex(1, 3), ex(1, 2), ex(3, 5)] {
            if survival_dp(l0, &p, 20).unwrap().survival != enumerated_survival(l0, &p, 20) {
                mismatches.push(format!("l0={l0} p={p}"));
            }
        }
    }
    verdict(mismatches.is_empty(), format!("12 cases, mismatches: {mismatches:?}"))
}

fn survival_from(records: &[EpisodeRecord<f64>], n_max: usize) -> Vec<f64> {
    let mut ended_at = vec![0usize; n_max + 1];
    for r in records {
        ended_at[r.n_coups.min(n_max)] += 1;
    }
    let mut out = vec![0.0; n_max + 1];
    let mut tail = 0;
    for n in (0..=n_max).rev() {
        tail += ended_at[n];
        out[n] = tail as f64 / records.len() as f64;
    }
    out
}

fn dp_vs_monte_carlo() -> Verdict {
    let episodes = 1_000_000;
    let n_max = 60;
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for p in [0.4, 0.5, 0.6] {
        for l0 in [1, 4] {
            let config = ExperimentConfig::labouchere(&vec![1; l0], p, episodes, n_max, 100 + l0 as u64);
            let mc = survival_from(&simulate(&config, 0).unwrap(), n_max);
            let dp = survival_dp(l0, &p, n_max).unwrap();
            let inside = (0..=n_max)
                .filter(|&n| {
                    let s = dp.survival[n];
                    (mc[n] - s).abs() <= 3.0 * (s * (1.0 - s) / episodes as f64).sqrt() + 1e-12
                })
                .count();
            let frac = inside as f64 / (n_max + 1) as f64;
            worst = worst.min(frac);
            parts.push(format!("p={p},l0={l0}:{inside}/{}", n_max + 1));
        }
    }
    verdict(worst >= 0.95, parts.join(" "))
}

fn asymptote() -> Verdict {
    let table = survival_dp(1, &0.5f64, 601).unwrap();
    let fits = asymptotic_fit(&table, DEFAULT_FIT_WINDOW).unwrap();
    let spreads: Vec<f64> = fits.iter().map(|f| f.relative_spread).collect();
    verdict(
        spreads.iter().all(|&s| s < DEFAULT_SPREAD_THRESHOLD),
        format!("spreads by residue {:.4} {:.4} {:.4}", spreads[0], spreads[1], spreads[2]),
    )
}

fn bellman_boundary() -> Verdict {
    let two = solve_fixed_point(ValueProblem::new(ProportionBound::SqrtCap, 2), 1e-12, 100).unwrap();
    let mut ok = two.values() == [1.5, 1.0];
    let mut notes = vec![format!("L_max=2 -> {:?}", two.values())];
    for l_max in [10, 50, 100, 200] {
        let v = solve_fixed_point(ValueProblem::new(ProportionBound::SqrtCap, l_max), 1e-12, 1000).unwrap();
        let (m1, m2) = v.boundary_margins().unwrap();
        let strict = v.first_non_decrease().is_none();
        let good = v.converged && m1 >= -1e-9 && m2 >= -1e-9 && strict;
        ok &= good;
        notes.push(format!("L_max={l_max} margins ({m1:.3e}, {m2:.3e}) strict={strict}"));
    }
    verdict(ok, notes.join("; "))
}

fn objective(a: f64, c: f64, b: f64) -> f64 {
    0.5 * (b.max((1.0 - b) * a) + b.max((1.0 + b) * c))
}

/// Best point of a 1e-4 grid on [0, hi], refined by ternary search across
/// its two neighbouring cells (both objectives are convex in the argument).
fn grid_min<F: Fn(f64) -> f64>(f: F, hi: f64) -> f64 {
    let step = 1e-4;
    let n = (hi / step).floor() as usize;
    let best = (0..=n)
        .map(|i| i as f64 * step)
        .chain([hi])
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    let (mut lo, mut up) = ((best - step).max(0.0), (best + step).min(hi));
    for _ in 0..200 {
        let m1 = lo + (up - lo) / 3.0;
        let m2 = up - (up - lo) / 3.0;
        if f(m1) <= f(m2) {
            up = m2;
        } else {
            lo = m1;
        }
    }
    f(best).min(f(0.5 * (lo + up)))
}

fn inner_minimisation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_inner = 0.0f64;
    for _ in 0..10_000 {
        let (a, c, cap) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), rng.random_range(0.0..1.0));
        let got = inner_min(a, c, cap).value;
        worst_inner = worst_inner.max((got - grid_min(|b| objective(a, c, b), cap)).abs());
    }
    let mut worst_affine = 0.0f64;
    for _ in 0..10_000 {
        let r1 = rng.random_range(0.01..5.0);
        let r2 = rng.random_range(-5.0..=0.0);
        let s1 = rng.random_range(-3.0..3.0);
        let s2 = s1 + rng.random_range(0.0..1.0) * (r1 - r2);
        let got = minmax_affine(r1, s1, r2, s2).unwrap();
        let want = grid_min(|x| (r1 * x + s1).max(r2 * x + s2), 1.0);
        worst_affine = worst_affine.max((got - want).abs());
    }
    verdict(
        worst_inner < 1e-6 && worst_affine < 1e-9,
        format!("max error inner_min {worst_inner:.2e}, minmax_affine {worst_affine:.2e}"),
    )
}

fn divergence() -> Verdict {
    let depths = [50, 100, 200, 400, 800];
    let rows = divergence_scan(ProportionBound::SqrtCap, &depths, 0.0, 1e-8, 1000).unwrap();
    let a1: Vec<f64> = rows.iter().map(|r| r.a1).collect();
    let increasing = a1.windows(2).all(|w| w[1] > w[0]);
    let last_gap = a1[4] - a1[3];
    verdict(
        increasing && last_gap > 0.0,
        format!("a_1 = {a1:.4?}, a_1(800) - a_1(400) = {last_gap:.4e}"),
    )
}

struct FairBatch {
    records: Vec<EpisodeRecord<f64>>,
}

fn doob(batch: &FairBatch) -> Verdict {
    let t = Samples::from_records(&batch.records, |r| r.t_star);
    let v = doob_check(&t, 1.0, &log_grid(1.0, 1e3, 20).unwrap(), 0.5).unwrap();
    verdict(
        v.passed,
        format!("worst margin {:.3e} over {} points, censored {:.2e}", v.worst_margin, v.points.len(), t.censored_fraction()),
    )
}

fn phase_transition(fair: &FairBatch) -> Verdict {
    // at p = 0.6 only a few of 10^6 episodes reach B* = 10^3, so a higher top
    // would leave the upper half resolved by single samples
    let grid = log_grid(1.0, 1e3, 20).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (p, cutoff, want) in [
        (0.6, 100_000, GrowthLabel::Saturating),
        (0.5, 100_000, GrowthLabel::Logarithmic),
        (0.4, 1000, GrowthLabel::SuperLogarithmic),
    ] {
        let owned;
        let records = if p == 0.5 {
            &fair.records
        } else {
            owned = simulate(&ExperimentConfig::labouchere(&[1], p, 1_000_000, cutoff, 31), 0).unwrap();
            &owned
        };
        let b = Samples::from_records(records, |r| r.b_star);
        let fit = growth_classifier(&truncated_mean_curve(&b, &grid).unwrap()).unwrap();
        ok &= fit.label == want;
        if want == GrowthLabel::Logarithmic {
            ok &= fit.r2_log > 0.9;
        }
        notes.push(format!(
            "p={p}: {} (R2 log {:.4}, R2 power {:.4}, slope exp {:.3}, censored {:.2e})",
            fit.label,
            fit.r2_log,
            fit.r2_power,
            fit.slope_exponent,
            b.censored_fraction()
        ));
    }
    verdict(ok, notes.join("; "))
}

fn transforms(fair: &FairBatch) -> Verdict {
    let b = Samples::from_records(&fair.records, |r| r.b_star);
    let curves = moment_transform_curves(&b, 0.5, &log_grid(2.0, 1e4, 16).unwrap()).unwrap();
    let top = *curves.phi1_growth.last().unwrap();
    let min2 = curves.phi2_growth.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        top < 0.01 && min2 > 0.05,
        format!("phi1 growth at top {:.4}, phi2 min growth {:.4}", top, min2),
    )
}

fn importance(fair: &FairBatch) -> Verdict {
    let direct = simulate(&ExperimentConfig::labouchere(&[1], 0.6, 1_000_000, 100_000, 61), 0).unwrap();
    let est = importance_sampling_mean(&fair.records, 0.5, 0.6, Statistic::BStar, 1000.0).unwrap();
    let (mean, se) = mean_with_se(&direct.iter().map(|r| r.b_star).collect::<Vec<_>>()).unwrap();
    let combined = (se * se + est.unnormalized_se * est.unnormalized_se).sqrt();
    let ok_mean = (est.unnormalized - mean).abs() <= 3.0 * combined;
    let ok_weight = (est.weight_mean - 1.0).abs() <= 3.0 * est.weight_se;
    verdict(
        ok_mean && ok_weight,
        format!(
            "IS {:.5} ± {:.5} vs direct {:.5} ± {:.5}; weight mean {:.5} ± {:.5}; ESS {:.0}",
            est.unnormalized, est.unnormalized_se, mean, se, est.weight_mean, est.weight_se, est.ess
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failures = 0;
    let mut report = |name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let mut v = run();
        let took = t.elapsed();
        if let Some(limit) = limit {
            if took > limit {
                v.pass = false;
                v.detail.push_str(&format!("; over the {limit:?} budget"));
            }
        }
        failures += usize::from(!v.pass);
        println!("{} {name} [{:.2?}]: {}", if v.pass { "PASS" } else { "FAIL" }, took, v.detail);
    };

    report("good-list closure", Some(Duration::from_secs(10)), &mut good_list_closure);
    report("proportion bound", Some(Duration::from_secs(5)), &mut proportion_bound);
    report("rho exact values", None, &mut rho_values);
    report("survival DP vs enumeration", None, &mut dp_vs_enumeration);
    report("survival DP vs Monte Carlo", Some(Duration::from_secs(120)), &mut dp_vs_monte_carlo);
    report("stopping-time asymptote", None, &mut asymptote);
    report("Bellman boundary and monotonicity", None, &mut bellman_boundary);
    report("inner minimisation oracle", None, &mut inner_minimisation);
    report("divergence under sqrt caps", Some(Duration::from_secs(60)), &mut divergence);

    let t = Instant::now();
    let fair = FairBatch {
        records: simulate(&ExperimentConfig::labouchere(&[1], 0.5, 1_000_000, 100_000, 50), 0).unwrap(),
    };
    let fair_time = t.elapsed();
    println!("     fair batch: 10^6 Labouchere (1) episodes at p=1/2 in {fair_time:.2?}");
    report("Doob bound at p=1/2", None, &mut || doob(&fair));
    // the fair batch counts against the phase-transition budget
    let budget = Duration::from_secs(600).saturating_sub(fair_time);
    report("phase transition", Some(budget), &mut || phase_transition(&fair));
    report("moment transforms at p=1/2", None, &mut || transforms(&fair));
    report("importance sampling 0.5 -> 0.6", None, &mut || importance(&fair));

    println!("acceptance: {} failed, total {:.2?}", failures, start.elapsed());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

