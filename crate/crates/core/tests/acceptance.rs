//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use autobid_fpa::auction::{
    evaluate_profile, AuctionInstance, BidDistribution, BidderKind, StrategyProfile,
};
use autobid_fpa::audits::run_audits;
use autobid_fpa::bounds::{
    full_autobidding_ml_bound, gamma_sweep, local_factor, mixed_poa_bound, ml_poa_bound,
    verify_lemma_max, verify_lemma_max_ml,
};
use autobid_fpa::equilibrium::{best_response_dynamics, truthful_profile, verify_equilibrium};
use autobid_fpa::frontier::{
    attainable_point, auction_view, best_response_utility, best_response_value, candidate_bids,
    truthful_proxy, CandidateGrid,
};
use autobid_fpa::instances::{
    lemma_lb_instance, random_instance, thm1_instance, RandomInstanceConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail = format!("{}; {:.2}s", out.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail = format!("{} exceeds {:.0}s", out.detail, limit.as_secs_f64());
        }
    }
    out
}

fn bound_reproduction() -> Outcome {
    let mixed = mixed_poa_bound();
    let full0 = full_autobidding_ml_bound(0.0).unwrap();
    let ml1 = ml_poa_bound(1.0).unwrap().bound_value;
    let pass =
        (mixed.bound_value - 0.457).abs() <= 5e-4 && full0 == 0.5 && (ml1 - 1.0).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "mixed {:.6} at t={:.6}, full(0)={full0}, ml(1)={ml1:.12}",
            mixed.bound_value, mixed.minimizer_t
        ),
    )
}

fn sweep() -> Outcome {
    let rows = gamma_sweep(0.01).unwrap();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].mixed_bound >= w[0].mixed_bound - 1e-9);
    let first = rows[0];
    let last = rows[rows.len() - 1];
    let pass = rows.len() == 101
        && monotone
        && (first.mixed_bound - 0.457).abs() <= 5e-4
        && first.full_autobidding_bound == 0.5
        && last.gamma == 1.0
        && (last.mixed_bound - 1.0).abs() <= 1e-9
        && last.full_autobidding_bound == 1.0;
    outcome(
        pass,
        format!(
            "{} rows, monotone={monotone}, first=({}, {:.6}, {}), last=({}, {:.9}, {})",
            rows.len(),
            first.gamma,
            first.mixed_bound,
            first.full_autobidding_bound,
            last.gamma,
            last.mixed_bound,
            last.full_autobidding_bound
        ),
    )
}

fn half_ratio_instances() -> Outcome {
    let grid = CandidateGrid::default();
    let mut pass = true;
    let mut detail = Vec::new();
    for eps in [0.5, 0.1, 0.01] {
        let h = thm1_instance(eps).unwrap();
        let r = verify_equilibrium(&h.instance, &h.profile, grid, 1e-9).unwrap();
        let err = (r.outcome.ratio - 1.0 / (2.0 - eps)).abs();
        pass &= r.is_equilibrium && err <= 1e-12;
        detail.push(format!(
            "eps={eps}: eq={} ratio={:.12}",
            r.is_equilibrium, r.outcome.ratio
        ));
    }
    let ratios: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&e| {
            let h = thm1_instance(e).unwrap();
            evaluate_profile(&h.instance, &h.profile).unwrap().ratio
        })
        .collect();
    let approaching = ratios
        .windows(2)
        .all(|w| (w[1] - 0.5).abs() < (w[0] - 0.5).abs())
        && (ratios[2] - 0.5).abs() < 1e-6;
    pass &= approaching;
    detail.push(format!("ratio at eps=1e-6: {:.9}", ratios[2]));
    outcome(pass, detail.join(", "))
}

fn mixed_lower_bound() -> Outcome {
    let n = 2000;
    let t = mixed_poa_bound().minimizer_t;
    let h = lemma_lb_instance(t, n).unwrap();
    let r = verify_equilibrium(
        &h.instance,
        &h.profile,
        CandidateGrid::default(),
        10.0 / n as f64,
    )
    .unwrap();
    let payment = r.outcome.exp_payment[1][0];
    let target = local_factor(t, 0.0);
    let pass = r.is_equilibrium
        && (payment - target).abs() <= 5e-3
        && (r.outcome.ratio - 0.457).abs() <= 5e-3;
    outcome(
        pass,
        format!(
            "t*={t:.6}, eq={}, payment {payment:.6} vs {target:.6}, ratio {:.6}",
            r.is_equilibrium, r.outcome.ratio
        ),
    )
}

fn infimum_grid_checks() -> Outcome {
    let plain = verify_lemma_max(200).unwrap();
    let w = plain.witness;
    let h = 1.0 / 200.0;
    let g = local_factor(w.y, 0.0);
    let witness_ok = (w.x - 1.0).abs() <= 2.0 * h && (w.v1 - g * (1.0 - w.v1)).abs() <= 2.0 * h;
    let mut pass = plain.pass && witness_ok;
    let mut detail = vec![format!(
        "max: grid {:.6} vs {:.6} (tol {:.4}), witness V1={:.3} x={:.3} y={:.3}",
        plain.grid_min, plain.analytic_min, plain.tolerance, w.v1, w.x, w.y
    )];
    for gamma in [0.0, 0.3, 0.7, 1.0] {
        let r = verify_lemma_max_ml(gamma, 200).unwrap();
        pass &= r.pass;
        detail.push(format!(
            "ml({gamma}): {}",
            if r.pass { "pass" } else { "fail" }
        ));
    }
    outcome(pass, detail.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let grid = CandidateGrid {
        size: 0,
        delta: 1e-9,
    };
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < 50 {
        let m = rng.gen_range(1..=2);
        let n = rng.gen_range(2..=3);
        let values: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0.1..1.0)).collect())
            .collect();
        let mut kinds = vec![BidderKind::UtilityMax; n];
        kinds[0] = BidderKind::ValueMax;
        let inst = AuctionInstance::new(values, kinds, None, None).unwrap();
        let mut rows = vec![truthful_proxy(&inst, 0).unwrap()];
        for _ in 1..n {
            rows.push(
                (0..m)
                    .map(|_| {
                        if n == 2 && rng.gen_bool(0.5) {
                            common::random_distribution(&mut rng, 2)
                        } else {
                            BidDistribution::deterministic((rng.gen::<f64>() * 12.0).floor() / 10.0)
                        }
                    })
                    .collect(),
            );
        }
        let profile = StrategyProfile::new(rows).unwrap();
        if common::candidate_count(&inst, &profile, 0, grid) > 6 {
            continue;
        }
        let br = best_response_value(&inst, &profile, 0, grid).unwrap();
        let oracle = common::value_oracle(&inst, &profile, 0, grid);
        worst = worst.max((br.objective - oracle).abs());
        tested += 1;
    }
    outcome(
        worst <= 1e-6,
        format!("50 instances, max |br - oracle| = {worst:.2e}"),
    )
}

fn applicable_bound(instance: &AuctionInstance) -> f64 {
    let all_value = instance.kinds().iter().all(|&k| k == BidderKind::ValueMax);
    match (instance.gamma(), all_value) {
        (None, true) => 0.5,
        (None, false) => mixed_poa_bound().bound_value,
        (Some(g), true) => full_autobidding_ml_bound(g).unwrap(),
        (Some(g), false) => ml_poa_bound(g).unwrap().bound_value,
    }
}

fn property_suite() -> Outcome {
    let grid = CandidateGrid::default();
    let epsilon = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut converged, mut verified, mut audited, mut bounded, mut truthful_zero) =
        (0, 0, 0, 0, 0);
    let mut outcomes = 0;
    let mut failures = Vec::new();
    for k in 0..200u64 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let gamma = (k % 3 == 2).then(|| rng.gen::<f64>());
        let inst = random_instance(
            k,
            RandomInstanceConfig {
                gamma,
                ..RandomInstanceConfig::new(n, m)
            },
        )
        .unwrap();
        let d =
            best_response_dynamics(&inst, &truthful_profile(&inst), grid, 200, epsilon).unwrap();

        // truthful proxy against whatever the others ended up playing
        for i in 0..n {
            let p = d
                .profile
                .with_row(i, truthful_proxy(&inst, i).unwrap())
                .unwrap();
            let out = evaluate_profile(&inst, &p).unwrap();
            outcomes += 1;
            if out.roi_slack(i) == 0.0 {
                truthful_zero += 1;
            } else {
                failures.push(format!("instance {k}: truthful slack {}", out.roi_slack(i)));
            }
        }
        if !d.converged {
            continue;
        }
        converged += 1;
        let r = verify_equilibrium(&inst, &d.profile, grid, epsilon).unwrap();
        if r.is_equilibrium {
            verified += 1;
        } else {
            failures.push(format!(
                "instance {k}: converged profile fails verification"
            ));
        }
        let audits = run_audits(&inst, &d.profile, epsilon).unwrap();
        if audits.all_pass {
            audited += 1;
        } else {
            let bad: Vec<&str> = audits
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.as_str())
                .collect();
            failures.push(format!("instance {k}: audits {bad:?}"));
        }
        let bound = applicable_bound(&inst);
        if r.outcome.ratio >= bound - 10.0 * epsilon {
            bounded += 1;
        } else {
            failures.push(format!(
                "instance {k}: ratio {} < bound {bound}",
                r.outcome.ratio
            ));
        }
    }
    // guard against a vacuous pass
    let pass = failures.is_empty() && converged >= 100;
    let mut detail = format!(
        "{converged}/200 converged; verified {verified}, audits {audited}, bounds {bounded}; truthful zero slack {truthful_zero}/{outcomes}"
    );
    if let Some(f) = failures.first() {
        detail = format!("{detail}; first failure: {f}");
    }
    outcome(pass, detail)
}

fn frontier_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let n = rng.gen_range(2..=4);
        let values: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.05..1.2)]).collect();
        let reserve = rng.gen_bool(0.3).then(|| {
            let top = values.iter().map(|r| r[0]).fold(0.0, f64::max);
            top * rng.gen::<f64>()
        });
        let inst = AuctionInstance::new(
            values,
            vec![BidderKind::UtilityMax; n],
            reserve.map(|r| vec![r]),
            None,
        )
        .unwrap();
        let profile = common::random_profile(&mut rng, n, 1, 4);
        let bidder = rng.gen_range(0..n);
        let grid = CandidateGrid {
            size: rng.gen_range(0..40),
            delta: 1e-9,
        };
        let view = auction_view(&inst, &profile, bidder, 0, grid).unwrap();
        let f = &view.frontier;

        let slopes = f.slopes();
        if !slopes
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
        {
            failures.push(format!("trial {trial}: slopes not decreasing {slopes:?}"));
        }
        let v = inst.value(bidder, 0);
        for b in candidate_bids(&view.landscape, v, inst.reserve(0), grid) {
            let p = attainable_point(&view.landscape, v, inst.reserve(0), b);
            if p.value > f.value_at(p.payment) + 1e-12 {
                failures.push(format!("trial {trial}: point {p:?} above frontier"));
            }
        }
        let br = best_response_utility(&inst, &profile, bidder, grid).unwrap();
        let (p_star, v_star) = (br.expected_payment[0], br.expected_value[0]);
        if (f.value_at(p_star) - v_star).abs() > 1e-12 {
            failures.push(format!("trial {trial}: chosen point off the frontier"));
        }
        for w in f.breakpoints().iter().filter(|w| w.payment >= p_star) {
            if f.value_at(w.payment) - f.value_at(p_star) > w.payment - p_star + 1e-12 {
                failures.push(format!(
                    "trial {trial}: marginal slope above 1 after chosen point"
                ));
            }
        }
    }
    let detail = match failures.first() {
        None => {
            "1000 frontiers: concave, dominate all candidates, marginal condition holds".to_string()
        }
        Some(f) => format!("{} failures, first: {f}", failures.len()),
    };
    outcome(failures.is_empty(), detail)
}

/// Name, optional time limit, check.
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        (
            "bound reproduction",
            Some(Duration::from_secs(1)),
            bound_reproduction,
        ),
        ("gamma sweep", Some(Duration::from_secs(5)), sweep),
        (
            "two-auction value-maximizer instance",
            None,
            half_ratio_instances,
        ),
        (
            "mixed lower-bound instance",
            Some(Duration::from_secs(30)),
            mixed_lower_bound,
        ),
        (
            "grid checks of the infimum inequalities",
            None,
            infimum_grid_checks,
        ),
        (
            "value best response vs exhaustive oracle",
            None,
            oracle_equivalence,
        ),
        ("random equilibrium property suite", None, property_suite),
        ("frontier properties", None, frontier_properties),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.into_iter().enumerate() {
        let out = timed(limit, run);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name}: {}", k + 1, out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
