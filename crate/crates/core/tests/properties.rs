use proptest::prelude::*;

use reductionlab::entangled::{
    bayes_condition, bayes_mixture_check, joint_distribution_formula, joint_distribution_oracle,
    posterior_state, prior_state, random_scenario, LocalApparatus,
};
use reductionlab::linalg::{
    self, conjugate, herm_expm, identity, max_abs_diff, partial_trace, tensor, SubsystemDims,
    TOL_OP, TOL_PROB,
};
use reductionlab::measurement::{spanning_states, MeasurementModel};
use reductionlab::quantum::{born_distribution, rule1_distribution, DensityOperator, Observable};
use reductionlab::random::FixtureRng;
use reductionlab::zoo;

/// Arbitrary (generally non-measuring) model: Haar interaction, mixed
/// preparation, probe and claimed observable sharing an integer spectrum.
fn arbitrary_model(rng: &mut FixtureRng, d: usize, m: usize) -> MeasurementModel {
    let n = rng.between(1, d.min(m));
    let labels: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let spread = |len: usize, rng: &mut FixtureRng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..len)
            .map(|i| {
                if i < n {
                    labels[i]
                } else {
                    labels[rng.below(n)]
                }
            })
            .collect();
        rng.shuffle(&mut v);
        v
    };
    let a_diag = spread(d, rng);
    let b_diag = spread(m, rng);
    let a = Observable::new(conjugate(&rng.haar_unitary(d), &linalg::diag(&a_diag))).unwrap();
    let b = Observable::new(conjugate(&rng.haar_unitary(m), &linalg::diag(&b_diag))).unwrap();
    let sigma = DensityOperator::new(rng.density_matrix(m)).unwrap();
    MeasurementModel::new(sigma, rng.haar_unitary(d * m), b, a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_is_adjoint_to_lifting(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = FixtureRng::new(seed);
        let m = rng.ginibre(d1 * d2);
        let dims = SubsystemDims::new(vec![d1, d2]).unwrap();
        let reduced = partial_trace(&m, &dims, &[0]).unwrap();
        let x = rng.ginibre(d1);
        let lhs = linalg::trace(&(tensor(&x, &identity(d2)) * &m));
        let rhs = linalg::trace(&(&x * &reduced));
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn herm_expm_is_a_one_parameter_group(seed in any::<u64>(), n in 1usize..6, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let h = FixtureRng::new(seed).hermitian(n);
        let lhs = herm_expm(&h, t1 + t2).unwrap();
        let rhs = herm_expm(&h, t1).unwrap() * herm_expm(&h, t2).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
        prop_assert!(linalg::is_unitary(&lhs, TOL_OP));
    }

    #[test]
    fn effects_form_a_povm(seed in any::<u64>(), d in 1usize..4, m in 1usize..4) {
        let model = arbitrary_model(&mut FixtureRng::new(seed), d, m);
        prop_assert!(model.povm_deviation() < TOL_OP);
    }

    #[test]
    fn reductions_agree_and_mix_back(seed in any::<u64>(), d in 1usize..4, m in 1usize..4) {
        let mut rng = FixtureRng::new(seed);
        let model = arbitrary_model(&mut rng, d, m);
        for rho in spanning_states(d, 5, seed) {
            prop_assert!(model.mixture_identity_check(&rho).unwrap() < 1e-9);
            let p = model.outcome_probability(&rho).unwrap();
            for (a, prob) in p.entries() {
                if *prob <= TOL_PROB {
                    continue;
                }
                let plain = model.state_reduction(&rho, *a).unwrap();
                let sandwiched = model.state_reduction_sandwiched(&rho, *a).unwrap();
                prop_assert!(max_abs_diff(plain.matrix(), sandwiched.matrix()) < TOL_OP);
            }
        }
    }

    #[test]
    fn verified_models_reproduce_born_statistics(seed in any::<u64>(), d in 1usize..4, extra in 0usize..2) {
        let entry = zoo::random_indirect_model(seed, d, d + extra).unwrap();
        prop_assert!(entry.model.verify_measures().passes);
        for rho in spanning_states(d, 5, seed ^ 1) {
            let via_model = entry.model.outcome_probability(&rho).unwrap();
            let via_born = born_distribution(entry.model.measured(), &rho).unwrap();
            prop_assert!(via_model.max_abs_diff(&via_born) < TOL_PROB);
        }
    }

    #[test]
    fn local_measurement_oracle_matches_formula(seed in any::<u64>(), d1 in 2usize..4, d2 in 1usize..4) {
        let mut rng = FixtureRng::new(seed);
        let model = zoo::random_indirect_model(seed, d1, d1).unwrap().model;
        let s = random_scenario(&mut rng, model.measured(), d2).unwrap();
        let app = LocalApparatus::new(model, &s).unwrap();
        let tv = joint_distribution_oracle(&s, &app).unwrap()
            .total_variation(&joint_distribution_formula(&s).unwrap());
        prop_assert!(tv < 1e-9);
    }

    #[test]
    fn bayes_prior_and_posteriors_are_consistent(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = FixtureRng::new(seed);
        let a_obs = Observable::new(rng.hermitian(d1)).unwrap();
        let s = random_scenario(&mut rng, &a_obs, d2).unwrap();
        prop_assert!(bayes_mixture_check(&s).unwrap() < 1e-9);
        let j = joint_distribution_formula(&s).unwrap();
        let prior = prior_state(&s).unwrap();
        let marginal = j.marginal_x().unwrap();
        let predicted = rule1_distribution(&prior, s.h2(), s.x_obs(), s.tau()).unwrap();
        prop_assert!(marginal.max_abs_diff(&predicted) < TOL_PROB);
        for (a, p) in j.marginal_a().unwrap().entries() {
            if *p <= TOL_PROB {
                continue;
            }
            let posterior = posterior_state(&s, *a).unwrap();
            let conditional = bayes_condition(&j, *a).unwrap();
            let from_state = rule1_distribution(&posterior, s.h2(), s.x_obs(), s.tau()).unwrap();
            prop_assert!(conditional.max_abs_diff(&from_state) < TOL_PROB);
        }
    }
}
