use rand::Rng;
use rand_distr::{Distribution, Exp};
use ruin_core::risk_process::{Assumption, Monitoring, RiskModel};
use ruin_core::rng::substream;
use ruin_core::ruin::*;

#[test]
fn curves_are_non_increasing_for_every_seed() {
    let m = RiskModel::new(3.0, 1.0, 0.15)
        .with_copula_theta(2.0)
        .with_horizon(80);
    let grid: Vec<f64> = (0..12).map(|i| f64::from(i) * 0.75).collect();
    for seed in 0..6 {
        for assumption in Assumption::BOTH {
            let curve = ruin_curve(&m, &grid, assumption, 1000, seed).unwrap();
            assert!(curve.windows(2).all(|w| w[1].psi_hat <= w[0].psi_hat));
            assert!(curve.iter().all(|e| (0.0..=1.0).contains(&e.psi_hat)));
        }
    }
}

#[test]
fn thread_count_does_not_change_estimates() {
    let m = RiskModel::new(4.0, 0.5, 0.2)
        .with_copula_theta(1.7)
        .with_horizon(60);
    let grid = [0.0, 2.0, 8.0, 20.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ruin_curve(&m, &grid, Assumption::Dependent, 3000, 5).unwrap())
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn small_loading_ruin_from_zero_is_one_over_one_plus_loading() {
    let m = RiskModel::new(1.0, 1.0, 0.1)
        .with_horizon(5000)
        .with_monitoring(Monitoring::ClaimInstants);
    let grid = [0.0, 5.0, 10.0];
    let curve = ruin_curve(&m, &grid, Assumption::Independent, 20_000, 17).unwrap();
    for est in &curve {
        let exact = cramer_lundberg_psi(&m, est.u0).unwrap();
        // Ruin after the horizon is bounded by the truncation bound.
        let tol = 3.0 * est.std_error + truncation_bound(&m, est.u0).unwrap();
        assert!(
            (est.psi_hat - exact).abs() <= tol,
            "u={}: {} vs {exact}",
            est.u0,
            est.psi_hat
        );
    }
    assert!((curve[0].psi_hat - 1.0 / 1.1).abs() < 3.0 * curve[0].std_error);
}

#[test]
fn period_end_ruin_below_continuous_ruin() {
    // Checking only at period ends can miss intra-period dips.
    let base = RiskModel::new(2.0, 1.0, 0.2).with_horizon(400);
    let grid = [0.0, 3.0];
    let pe = ruin_curve(&base, &grid, Assumption::Independent, 20_000, 3).unwrap();
    let ci = ruin_curve(
        &base.with_monitoring(Monitoring::ClaimInstants),
        &grid,
        Assumption::Independent,
        20_000,
        3,
    )
    .unwrap();
    for (a, b) in pe.iter().zip(&ci) {
        assert!(a.psi_hat < b.psi_hat);
    }
}

/// Discrete-time random walk `sum (Z_k - c)` with exponential `Z`: the
/// ladder heights are exponential, so `psi(u) = (1 - R/beta) exp(-R u)` with
/// `beta/(beta - R) exp(-R c) = 1`.
fn random_walk_psi(beta: f64, c: f64, u: f64) -> f64 {
    let g = |r: f64| (beta / (beta - r)).ln() - r * c;
    let (mut lo, mut hi) = (1e-12, beta * (1.0 - 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    (1.0 - r / beta) * (-r * u).exp()
}

#[test]
fn recursion_converges_to_infinite_horizon_random_walk() {
    let interest = InterestModel::constant(0.0).unwrap();
    let loss = ExponentialLoss { rate: 1.0 };
    let c = 1.5;
    let us = [0.0, 2.0, 5.0];
    let setup = RecursionSetup {
        interest: &interest,
        loss: &loss,
        premium: c,
        step: 0.05,
    };
    let profiles = setup.profiles(&us, 0, 120).unwrap();
    for (u, p) in us.iter().zip(&profiles) {
        let limit = random_walk_psi(1.0, c, *u);
        let last = p[p.len() - 1];
        assert!(last <= limit + 1e-3);
        assert!((last - limit).abs() < 2e-3, "u={u}: {last} vs {limit}");
    }
}

#[test]
fn identical_rates_collapse_to_one_state() {
    let loss = ExponentialLoss { rate: 0.7 };
    let single = InterestModel::constant(0.03).unwrap();
    let twin = InterestModel::new(vec![0.03, 0.03], vec![vec![0.2, 0.8], vec![0.9, 0.1]]).unwrap();
    for u in [0.0, 1.3, 4.0] {
        let a = finite_time_ruin_recursive(u, &single, 0, &loss, 1.0, 8, 0.05).unwrap();
        for s in 0..2 {
            let b = finite_time_ruin_recursive(u, &twin, s, &loss, 1.0, 8, 0.05).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn recursion_decreases_in_initial_surplus() {
    let im = InterestModel::new(vec![0.0, 0.04], vec![vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap();
    let loss = ExponentialLoss { rate: 1.0 };
    let us: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.4).collect();
    let setup = RecursionSetup {
        interest: &im,
        loss: &loss,
        premium: 1.1,
        step: 0.05,
    };
    let last: Vec<f64> = setup
        .profiles(&us, 1, 15)
        .unwrap()
        .iter()
        .map(|p| p[14])
        .collect();
    assert!(last.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn positive_interest_lowers_ruin() {
    let loss = ExponentialLoss { rate: 1.0 };
    let zero = InterestModel::constant(0.0).unwrap();
    let five = InterestModel::constant(0.05).unwrap();
    let a = finite_time_ruin_recursive(3.0, &zero, 0, &loss, 1.2, 20, 0.05).unwrap();
    let b = finite_time_ruin_recursive(3.0, &five, 0, &loss, 1.2, 20, 0.05).unwrap();
    assert!(b < a);
}

#[test]
fn recursion_matches_simulated_markov_interest_process() {
    let rates = [0.0, 0.08];
    let p = [[0.7, 0.3], [0.4, 0.6]];
    let im = InterestModel::new(rates.to_vec(), p.iter().map(|r| r.to_vec()).collect()).unwrap();
    let (beta, c, u0, n) = (1.0, 1.2, 2.0, 10);
    let (psi, delta) =
        finite_time_ruin_refined(u0, &im, 0, &ExponentialLoss { rate: beta }, c, n, 0.02).unwrap();
    assert!(delta < 1e-4);

    let paths = 200_000;
    let mut rng = substream(8, 0);
    let exp = Exp::new(beta).unwrap();
    let mut ruined = 0;
    for _ in 0..paths {
        let (mut state, mut surplus) = (0usize, u0);
        for _ in 0..n {
            state = usize::from(rng.random::<f64>() >= p[state][0]);
            surplus = surplus * (1.0 + rates[state]) + c - exp.sample(&mut rng);
            if surplus < 0.0 {
                ruined += 1;
                break;
            }
        }
    }
    let mc = ruined as f64 / paths as f64;
    let se = (mc * (1.0 - mc) / paths as f64).sqrt();
    assert!(
        (psi - mc).abs() < 4.0 * se + 1e-4,
        "recursion {psi} vs simulation {mc}"
    );
}
