//! Policy iteration in extended precision.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use super::{OptimalError, ValueProblem, ValueSequence};

type Hp = FBig<HalfEven, 2>;

struct Ctx {
    bits: usize,
    caps: Vec<Hp>,
    unit: Hp,
    half: Hp,
    one: Hp,
    boundary: Hp,
}

impl Ctx {
    fn new(problem: &ValueProblem, tol: f64) -> Self {
        let bits = 128 + problem.l_max + (-tol.log2()).max(0.0) as usize;
        let lift = |x: f64| lift(x, bits);
        Self {
            caps: (0..=problem.l_max)
                .map(|l| lift(problem.caps.at(l.max(1)).clamp(0.0, 1.0)))
                .collect(),
            unit: lift(problem.unit),
            half: lift(0.5),
            one: lift(1.0),
            boundary: lift(problem.boundary),
            bits,
        }
    }

    fn zero(&self) -> Hp {
        lift(0.0, self.bits)
    }

    fn a<'v>(&'v self, values: &'v [Hp], l: usize) -> &'v Hp {
        values.get(l - 1).unwrap_or(&self.boundary)
    }
}

fn lift(x: f64, bits: usize) -> Hp {
    Hp::try_from(x).expect("finite").with_precision(bits).value()
}

fn larger(x: Hp, y: Hp) -> Hp {
    if x >= y {
        x
    } else {
        y
    }
}

/// Same candidate search as the `f64` version; the flag is set when the
/// minimiser is the interior kink `u b = (1-b) a`.
fn inner_min(ctx: &Ctx, a: &Hp, c: &Hp, cap: &Hp) -> (Hp, Hp, bool) {
    let u = &ctx.unit;
    let objective = |b: &Hp| {
        let ub = u * b;
        let lower = larger(ub.clone(), (&ctx.one - b) * a);
        let upper = larger(ub, (&ctx.one + b) * c);
        &ctx.half * (lower + upper)
    };
    let mut candidates = vec![(ctx.zero(), false), (cap.clone(), false)];
    let kink = a / (u + a);
    let interior = kink < *cap && kink > ctx.zero();
    candidates.push((kink, interior));
    if c < u {
        candidates.push((c / (u - c), false));
    }
    let mut best = (ctx.zero(), objective(&ctx.zero()), false);
    for (b, flag) in candidates {
        let b = if b > *cap { cap.clone() } else { b };
        let value = objective(&b);
        if value < best.1 || (value == best.1 && b < best.0) {
            best = (b, value, flag);
        }
    }
    best
}

fn sweep(ctx: &Ctx, values: &[Hp]) -> Vec<Hp> {
    let u = &ctx.unit;
    (1..=values.len())
        .map(|l| {
            let c = ctx.a(values, l + 1);
            if l <= 2 {
                &ctx.half * (u + larger(u.clone(), c + c))
            } else {
                inner_min(ctx, ctx.a(values, l - 2), c, &ctx.caps[l]).1
            }
        })
        .collect()
}

/// `x_l = lo x_{l-2} + hi x_{l+1} + r`, with `lo + hi + exit = 1`.
#[derive(Clone)]
struct Row {
    lo: Hp,
    hi: Hp,
    r: Hp,
    exit: Hp,
}

fn policy_rows(ctx: &Ctx, values: &[Hp]) -> Vec<Row> {
    let u = &ctx.unit;
    let n = values.len();
    (1..=n)
        .map(|l| {
            let c = ctx.a(values, l + 1);
            let mut row = Row {
                lo: ctx.zero(),
                hi: ctx.zero(),
                r: ctx.zero(),
                exit: ctx.zero(),
            };
            if l <= 2 {
                if c + c >= *u {
                    row.hi = ctx.one.clone();
                    row.r = &ctx.half * u;
                } else {
                    row.r = u.clone();
                    row.exit = ctx.one.clone();
                }
            } else {
                let a = ctx.a(values, l - 2);
                let (b, value, on_kink) = inner_min(ctx, a, c, &ctx.caps[l]);
                let ub = u * &b;
                if on_kink && a >= c {
                    kink_row(ctx, &mut row, a, c, &b, &value);
                    return close_row(ctx, row, l == n);
                }
                let down = &ctx.half * (&ctx.one - &b);
                let up = &ctx.half * (&ctx.one + &b);
                if (&ctx.one - &b) * a >= ub {
                    row.lo = down;
                } else {
                    row.r += &ctx.half * &ub;
                    row.exit += down;
                }
                if (&ctx.one + &b) * c >= ub {
                    row.hi = up;
                } else {
                    row.r += &ctx.half * &ub;
                    row.exit += up;
                }
            }
            close_row(ctx, row, l == n)
        })
        .collect()
}

/// Folds the boundary into the last row.
fn close_row(ctx: &Ctx, mut row: Row, last: bool) -> Row {
    if last {
        row.r += &row.hi * &ctx.boundary;
        row.exit += &row.hi;
        row.hi = ctx.zero();
    }
    row
}

/// Tangent of the row at the current point when the bet sits on the kink
/// `b = a / (u + a)`. The kink value is concave in `a` and vanishes at zero,
/// so the tangent has a non-negative intercept, and its weights leave
/// `u (a - c) / 2 (u + a)^2` (or more) to exit.
fn kink_row(ctx: &Ctx, row: &mut Row, a: &Hp, c: &Hp, b: &Hp, value: &Hp) {
    let u = &ctx.unit;
    let s = u + a;
    let db = u / (&s * &s);
    if (&ctx.one + b) * c >= u * b {
        // ½ (u b + (1 + b) c)
        row.lo = &ctx.half * (u + c) * &db;
        row.hi = &ctx.half * (&ctx.one + b);
        row.exit = &ctx.half * &db * (a - c);
    } else {
        // u b
        row.lo = u * &db;
        row.exit = (a * a + (u + u) * a) / (&s * &s);
    }
    let tangent = &row.lo * a + &row.hi * c;
    row.r = value - tangent;
}

/// Forward elimination in which every pivot `1 - P_kk` is formed as the sum
/// of the remaining outgoing weights. `None` if some state cannot leave.
fn solve_rows(ctx: &Ctx, rows: &[Row]) -> Option<Vec<Hp>> {
    let n = rows.len();
    // weight on x_{k-1}, created by substitution
    let mut lo1 = vec![ctx.zero(); n];
    let mut r: Vec<Hp> = rows.iter().map(|x| x.r.clone()).collect();
    let mut exit: Vec<Hp> = rows.iter().map(|x| x.exit.clone()).collect();
    let mut coef = vec![ctx.zero(); n];
    for k in 0..n {
        let denom = &rows[k].hi + &exit[k];
        if denom <= ctx.zero() {
            return None;
        }
        coef[k] = &rows[k].hi / &denom;
        r[k] = &r[k] / &denom;
        let leak = &exit[k] / &denom;
        // x_k = coef x_{k+1} + r[k]; the x_{k+1} term of row k + 1 lands on
        // its own variable, which the next pivot accounts for
        if k + 1 < n {
            let w = lo1[k + 1].clone();
            r[k + 1] = &r[k + 1] + &w * &r[k];
            exit[k + 1] = &exit[k + 1] + &w * &leak;
        }
        if k + 2 < n {
            let w = &rows[k + 2].lo;
            lo1[k + 2] = &lo1[k + 2] + w * &coef[k];
            r[k + 2] = &r[k + 2] + w * &r[k];
            exit[k + 2] = &exit[k + 2] + w * &leak;
        }
    }
    let mut x = vec![ctx.zero(); n];
    for k in (0..n).rev() {
        x[k] = match x.get(k + 1) {
            Some(next) => &coef[k] * next + &r[k],
            None => r[k].clone(),
        };
    }
    Some(x)
}

fn scaled_change(ctx: &Ctx, x: &[Hp], y: &[Hp]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let scale = larger(b.clone(), ctx.one.clone());
            ((a - b) / scale).to_f64().value().abs()
        })
        .fold(0.0, f64::max)
}

fn to_sequence(ctx: &Ctx, problem: ValueProblem, values: &[Hp]) -> ValueSequence {
    let steps = (1..=values.len())
        .map(|l| (ctx.a(values, l) - ctx.a(values, l + 1)).to_f64().value())
        .collect();
    ValueSequence {
        problem,
        values: values.iter().map(|v| v.to_f64().value()).collect(),
        steps,
        iterations: 0,
        sup_change: f64::INFINITY,
        converged: false,
    }
}

pub(super) fn policy_iteration(
    problem: ValueProblem,
    tol: f64,
    max_iter: usize,
) -> Result<ValueSequence, OptimalError> {
    let ctx = Ctx::new(&problem, tol);
    let mut values = vec![ctx.zero(); problem.l_max];
    let mut iterations = 0;
    let mut sup_change = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        let next = solve_rows(&ctx, &policy_rows(&ctx, &values)).ok_or_else(|| {
            OptimalError::InvalidConfig("policy leaves no way out of the truncated system".into())
        })?;
        sup_change = scaled_change(&ctx, &next, &values);
        values = next;
        iterations += 1;
        if sup_change < tol {
            sup_change = scaled_change(&ctx, &sweep(&ctx, &values), &values);
            if sup_change < tol {
                converged = true;
                break;
            }
        }
    }
    let mut v = to_sequence(&ctx, problem, &values);
    v.iterations = iterations;
    v.sup_change = sup_change;
    v.converged = converged;
    if converged {
        Ok(v)
    } else {
        Err(OptimalError::NotConverged {
            l_max: problem.l_max,
            iterations,
            sup_change,
            partial: Box::new(v),
        })
    }
}
