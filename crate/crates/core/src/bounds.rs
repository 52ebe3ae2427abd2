//! Closed-form price-of-anarchy bounds and their numeric minimization.
//!
//! The mixed-autobidding bound is `min_t (1 + t ln t) / (2 - t + t ln t)`;
//! with reserves of accuracy `gamma` the objective becomes
//! `(1 + t ln t - gamma t (1 + ln t)) / (2 - t - gamma + (1 - gamma) t ln t)`.
//! `t ln t` is extended by continuity to 0 at `t = 0`.

use serde::Serialize;

use crate::error::{Error, Result};

/// `t ln t`, with the value 0 at `t = 0`.
pub fn t_ln_t(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `1 - z + (1 - gamma) z ln z`, the per-auction payment factor.
pub fn local_factor(z: f64, gamma: f64) -> f64 {
    1.0 - z + (1.0 - gamma) * t_ln_t(z)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("{gamma} is not in [0, 1]")));
    }
    Ok(())
}

/// Objective of the reserve-aware bound at `t`.
///
/// Evaluated as `[(1-g)(1 + t ln t) + g(1 - t)] / [(1-g)(2 - t + t ln t) + g(1 - t)]`,
/// which equals the textbook form but keeps both terms nonnegative. At
/// `t = 1` numerator and denominator vanish together when `gamma = 1`;
/// the continuous extension there is 1.
pub fn phi_ml(t: f64, gamma: f64) -> f64 {
    if t >= 1.0 {
        return 1.0;
    }
    let tl = t_ln_t(t);
    let num = (1.0 - gamma) * (1.0 + tl) + gamma * (1.0 - t);
    let den = (1.0 - gamma) * (2.0 - t + tl) + gamma * (1.0 - t);
    num / den
}

/// `(1 + t ln t) / (2 - t + t ln t)`.
pub fn phi_mixed(t: f64) -> f64 {
    phi_ml(t, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub minimizer_t: f64,
    pub bound_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

const SEARCH_LO: f64 = 1e-12;
const SEARCH_HI: f64 = 1.0;
const T_TOLERANCE: f64 = 1e-10;
const SCAN_POINTS: usize = 4000;

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Golden-section minimizer of `f` on `[SEARCH_LO, 1]`, cross-checked by a
/// uniform scan. Unimodality is not proven, so when the scan finds a lower
/// value the search is repeated inside the scan's bracket and the lower of
/// the candidates (endpoints included) is returned.
fn minimize(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best_t = golden_section(&f, SEARCH_LO, SEARCH_HI, T_TOLERANCE);
    let mut best = f(best_t);

    let h = (SEARCH_HI - SEARCH_LO) / SCAN_POINTS as f64;
    let (k, scan_min) = (0..=SCAN_POINTS)
        .map(|k| (k, f(SEARCH_LO + k as f64 * h)))
        .fold(
            (0, f64::INFINITY),
            |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
        );
    if scan_min < best {
        let lo = SEARCH_LO + k.saturating_sub(1) as f64 * h;
        let hi = (SEARCH_LO + (k + 1) as f64 * h).min(SEARCH_HI);
        let t = golden_section(&f, lo, hi, T_TOLERANCE);
        let ft = f(t);
        let t_scan = SEARCH_LO + k as f64 * h;
        (best_t, best) = if ft <= scan_min {
            (t, ft)
        } else {
            (t_scan, scan_min)
        };
    }
    for t in [0.0, 1.0] {
        if f(t) < best {
            (best_t, best) = (t, f(t));
        }
    }
    (best_t, best)
}

/// Price of anarchy lower bound for mixed autobidding, about 0.457.
pub fn mixed_poa_bound() -> BoundResult {
    let (t, v) = minimize(phi_mixed);
    BoundResult {
        minimizer_t: t,
        bound_value: v,
        gamma: None,
    }
}

/// Bound with machine-learned reserves of accuracy `gamma`.
pub fn ml_poa_bound(gamma: f64) -> Result<BoundResult> {
    check_gamma(gamma)?;
    let (t, v) = minimize(|t| phi_ml(t, gamma));
    Ok(BoundResult {
        minimizer_t: t,
        bound_value: v,
        gamma: Some(gamma),
    })
}

/// `1 / (2 - gamma)`, the bound when every bidder is a value maximizer.
pub fn full_autobidding_ml_bound(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(1.0 / (2.0 - gamma))
}

/// Outcome of a grid check of an infimum inequality over the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaGridCheck {
    pub resolution: usize,
    pub grid_min: f64,
    pub analytic_min: f64,
    pub tolerance: f64,
    pub witness: GridPoint,
    /// `grid_min >= analytic_min - tolerance`.
    pub pass: bool,
    /// `grid_min <= analytic_min + tolerance`, i.e. the bound is attained.
    pub tight: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub v1: f64,
    pub x: f64,
    pub y: f64,
}

/// `max{x V1, (1 - (1-g) x) V1 + (1 - y + (1-g) y ln y) V2} + y V2` with `V2 = 1 - V1`.
pub fn lemma_max_objective(v1: f64, x: f64, y: f64, gamma: f64) -> f64 {
    let v2 = 1.0 - v1;
    let a = x * v1;
    let b = (1.0 - (1.0 - gamma) * x) * v1 + local_factor(y, gamma) * v2;
    a.max(b) + y * v2
}

/// Largest possible gap between the box minimum and the minimum over the
/// grid of step `h = 1/resolution`.
///
/// Every box point lies within `h/2` of a grid point in each coordinate.
/// The objective is 1-Lipschitz in `x` and 3-Lipschitz in `V1` (each
/// coefficient of `V1` and `V2` is in `[0, 1]`, and `V2 = 1 - V1`). In `y`
/// the `y ln y` term has unbounded slope at 0, but its modulus of
/// continuity on an interval of length `d` is at most `d (1 + ln(1/d))`, so
/// the `y`-variation is at most `d + d (1 + ln(1/d))` for `d = h/2`.
pub fn lemma_grid_tolerance(resolution: usize) -> f64 {
    let d = 0.5 / resolution as f64;
    d + 3.0 * d + d + d * (1.0 + (1.0 / d).ln())
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 10 {
        return Err(Error::invalid(
            "resolution",
            format!("{resolution} is below the minimum of 10"),
        ));
    }
    Ok(())
}

fn grid_check(gamma: f64, resolution: usize, analytic_min: f64) -> LemmaGridCheck {
    let h = 1.0 / resolution as f64;
    let mut grid_min = f64::INFINITY;
    let mut witness = GridPoint {
        v1: 0.0,
        x: 0.0,
        y: 0.0,
    };
    for a in 0..=resolution {
        let v1 = a as f64 * h;
        for c in 0..=resolution {
            let y = c as f64 * h;
            for b in 0..=resolution {
                let x = b as f64 * h;
                let v = lemma_max_objective(v1, x, y, gamma);
                if v < grid_min {
                    grid_min = v;
                    witness = GridPoint { v1, x, y };
                }
            }
        }
    }
    let tolerance = lemma_grid_tolerance(resolution);
    LemmaGridCheck {
        resolution,
        grid_min,
        analytic_min,
        tolerance,
        witness,
        pass: grid_min >= analytic_min - tolerance,
        tight: grid_min <= analytic_min + tolerance,
    }
}

/// Grid check that the mixed bound is the infimum of the combined
/// objective over `V1 + V2 = 1`, `x, y` in `[0, 1]`.
pub fn verify_lemma_max(resolution: usize) -> Result<LemmaGridCheck> {
    check_resolution(resolution)?;
    Ok(grid_check(0.0, resolution, mixed_poa_bound().bound_value))
}

/// Reserve-aware version of [`verify_lemma_max`].
pub fn verify_lemma_max_ml(gamma: f64, resolution: usize) -> Result<LemmaGridCheck> {
    check_gamma(gamma)?;
    check_resolution(resolution)?;
    Ok(grid_check(
        gamma,
        resolution,
        ml_poa_bound(gamma)?.bound_value,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub mixed_bound: f64,
    pub full_autobidding_bound: f64,
}

/// Bounds at `gamma = 0, step, 2 step, ...` up to and including 1.
pub fn gamma_sweep(step: f64) -> Result<Vec<SweepRow>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::invalid("step", format!("{step} is not in (0, 0.5]")));
    }
    let count = (1.0 / step + 1e-9).floor() as usize;
    let mut gammas: Vec<f64> = (0..=count).map(|k| (k as f64 * step).min(1.0)).collect();
    if 1.0 - gammas[count] > 1e-9 {
        gammas.push(1.0);
    } else {
        gammas[count] = 1.0;
    }
    gammas
        .into_iter()
        .map(|gamma| {
            Ok(SweepRow {
                gamma,
                mixed_bound: ml_poa_bound(gamma)?.bound_value,
                full_autobidding_bound: full_autobidding_ml_bound(gamma)?,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "gamma,mixed_bound,full_autobidding_bound";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6}\n",
            r.gamma, r.mixed_bound, r.full_autobidding_bound
        ));
    }
    out
}
