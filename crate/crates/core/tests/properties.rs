use perc_regret::design::{regret_summary, resiliency_reward, Design, Lambda, ResiliencyReport};
use perc_regret::lattice::{edge_probabilities, place_notions, Direction, LatticeSpec};
use perc_regret::percolation::{estimate_theta, sweep, McSettings};
use proptest::prelude::*;

fn directions() -> impl Strategy<Value = Direction> {
    prop_oneof![
        Just(Direction::Horizontal),
        Just(Direction::Vertical),
        Just(Direction::Either)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coupled_sweep_is_monotone(rows in 1usize..7, cols in 1usize..7, seed in any::<u64>(), mut grid in proptest::collection::vec(0.0f64..=1.0, 1..12), d in directions()) {
        grid.sort_by(f64::total_cmp);
        let l = LatticeSpec::full(rows, cols).unwrap();
        let est = sweep(&l, &grid, &McSettings::new(64, seed).direction(d)).unwrap();
        for w in est.windows(2) {
            prop_assert!(w[0].theta_hat <= w[1].theta_hat);
            prop_assert!(w[0].p_infinity_hat <= w[1].p_infinity_hat);
        }
        for e in &est {
            prop_assert!((0.0..=1.0).contains(&e.theta_hat));
            prop_assert!((0.0..=1.0).contains(&e.p_infinity_hat));
            prop_assert!(e.k_hat >= e.theta_hat);
        }
    }

    #[test]
    fn pointwise_larger_lambda_never_lowers_spanning_probability(l in 2usize..12, seed in any::<u64>(), base in proptest::collection::vec(0.0f64..=1.0, 66), bump in proptest::collection::vec(0.0f64..=1.0, 66)) {
        let notions: Vec<String> = (0..l).map(|i| format!("n{i}")).collect();
        let mut lo = vec![vec![0.0; l]; l];
        let mut hi = vec![vec![0.0; l]; l];
        let mut idx = 0;
        for i in 0..l {
            for j in i + 1..l {
                let a = base[idx];
                let b = (a + bump[idx] * (1.0 - a)).min(1.0);
                lo[i][j] = a; lo[j][i] = a;
                hi[i][j] = b; hi[j][i] = b;
                idx += 1;
            }
        }
        let s = McSettings::new(128, seed);
        let lo = Design::new("x", notions.clone(), Lambda::Matrix(lo)).unwrap();
        let hi = Design::new("x", notions, Lambda::Matrix(hi)).unwrap();
        let lat = place_notions(&lo).unwrap();
        let a = estimate_theta(&lat, &edge_probabilities(&lo, &lat).unwrap(), &s).unwrap();
        let b = estimate_theta(&lat, &edge_probabilities(&hi, &lat).unwrap(), &s).unwrap();
        prop_assert!(a.theta_hat <= b.theta_hat);

        let r = resiliency_reward(&lo, &s, 0.5).unwrap();
        prop_assert_eq!(r.phi_hat, a.k_hat);
        prop_assert!((r.theoretical_regret + r.phi_hat - r.theoretical_limit).abs() < 1e-12);
    }

    #[test]
    fn optimal_design_survives_monotone_transform(phis in proptest::collection::vec(0.0f64..10.0, 1..8)) {
        let mk = |f: &dyn Fn(f64) -> f64| -> Vec<ResiliencyReport> {
            phis.iter().enumerate().map(|(i, &p)| ResiliencyReport {
                design_id: format!("d{i}"), l: 4, phi_hat: f(p), phi_std_error: 0.0,
                theoretical_limit: 2.0, theoretical_regret: 2.0 - f(p), samples: 1, seed: 0,
                direction: Direction::Either, y: 0.5,
            }).collect()
        };
        let a = regret_summary(&mk(&|p| p)).unwrap();
        let b = regret_summary(&mk(&|p| (p * 0.5).exp() + 3.0)).unwrap();
        prop_assert_eq!(&a.optimal_design_id, &b.optimal_design_id);
        prop_assert_eq!(a.regret_star, 0.0);
        prop_assert!(a.regret_bound >= 0.0);
        prop_assert!(a.regrets.iter().all(|r| r.regret >= 0.0));
        let opt = a.regrets.iter().find(|r| r.design_id == a.optimal_design_id).unwrap();
        prop_assert_eq!(opt.regret, 0.0);
    }

    #[test]
    fn spanning_probability_is_coupled_monotone_in_per_edge_probs(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>(), base in proptest::collection::vec(0.0f64..=1.0, 24), bump in proptest::collection::vec(0.0f64..=1.0, 24)) {
        let l = LatticeSpec::full(rows, cols).unwrap();
        let e = l.edge_count();
        let lo: Vec<f64> = base[..e].to_vec();
        let hi: Vec<f64> = lo.iter().zip(&bump).map(|(a, b)| (a + b * (1.0 - a)).min(1.0)).collect();
        let s = McSettings::new(64, seed);
        let a = estimate_theta(&l, &lo, &s).unwrap();
        let b = estimate_theta(&l, &hi, &s).unwrap();
        prop_assert!(a.theta_hat <= b.theta_hat);
        prop_assert!(a.p_infinity_hat <= b.p_infinity_hat);
    }
}

/// The mean spanning-cluster count is not monotone in edge probability: two
/// spanning clusters merge into one as edges open.
#[test]
fn mean_spanning_count_can_fall_as_connectivity_rises() {
    use perc_regret::percolation::exhaustive_enumerate;
    let l = LatticeSpec::full(2, 2).unwrap();
    let half = exhaustive_enumerate(&l, &[0.5; 4], Direction::Either).unwrap();
    let full = exhaustive_enumerate(&l, &[1.0; 4], Direction::Either).unwrap();
    assert!((half.k_mean - 17.0 / 16.0).abs() < 1e-12);
    assert_eq!(full.k_mean, 1.0);
    assert!(half.k_mean > full.k_mean);
    assert!(half.theta <= full.theta);
}
