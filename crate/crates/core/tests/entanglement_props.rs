mod common;

use common::magic_entangled_fraction;
use deficiency_core::entanglement::{
    entanglement_deficiency, power_iteration_trace, EntanglementSolver, MaxEntWitness,
    MONOTONE_SLACK,
};
use deficiency_core::freeops::{random_local_channel, selective_outcomes};
use deficiency_core::qcore::{
    haar_unitary, kron, random_density, random_probabilities, random_pure_state, schmidt,
};
use deficiency_core::{BipartiteState, DensityOperator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn two_qubit(rho: DensityOperator) -> BipartiteState {
    BipartiteState::new(rho, 2, 2).unwrap()
}

#[test]
fn power_iteration_matches_magic_basis_formula() {
    let mut r = rng(30);
    for i in 0..200 {
        let rank = 1 + i % 4;
        let rho = random_density(4, rank, &mut r).unwrap();
        let exact = magic_entangled_fraction(&rho);
        let found = entanglement_deficiency(&two_qubit(rho)).unwrap().fidelity;
        assert!(
            (found - exact).abs() <= 1e-9,
            "rank {rank}: {found} vs {exact}"
        );
    }
}

#[test]
fn local_unitary_invariance() {
    let mut r = rng(31);
    for _ in 0..100 {
        let rho = random_density(4, 4, &mut r).unwrap();
        let u = kron(&haar_unitary(2, &mut r), &haar_unitary(2, &mut r));
        let a = entanglement_deficiency(&two_qubit(rho.clone()))
            .unwrap()
            .value;
        let b = entanglement_deficiency(&two_qubit(rho.conjugate(&u).unwrap()))
            .unwrap()
            .value;
        assert!((a - b).abs() <= 1e-7);
    }
}

#[test]
fn concave_under_mixing() {
    let mut r = rng(32);
    for _ in 0..200 {
        let k = r.random_range(2..=4);
        let q = random_probabilities(k, &mut r);
        let parts: Vec<DensityOperator> = (0..k)
            .map(|_| {
                let rank = r.random_range(1..=4);
                random_density(4, rank, &mut r).unwrap()
            })
            .collect();
        let refs: Vec<(f64, &DensityOperator)> = q.iter().copied().zip(&parts).collect();
        let mix = DensityOperator::mixture(&refs).unwrap();
        let avg: f64 = q
            .iter()
            .zip(&parts)
            .map(|(w, p)| {
                w * entanglement_deficiency(&two_qubit(p.clone()))
                    .unwrap()
                    .value
            })
            .sum();
        assert!(entanglement_deficiency(&two_qubit(mix)).unwrap().value >= avg - 1e-6);
    }
}

#[test]
fn pure_states_match_schmidt_formula_without_informed_start() {
    let mut r = rng(33);
    for i in 0..200 {
        let d = 2 + i % 2;
        let psi = random_pure_state(d * d, &mut r);
        let q: f64 = schmidt(&psi, d, d).unwrap().coeffs.iter().sum();
        let solver = EntanglementSolver {
            informed_start: false,
            seed: i as u64,
            ..EntanglementSolver::default()
        };
        let v = solver
            .maximize(&BipartiteState::from_pure(&psi, d, d).unwrap())
            .unwrap()
            .value;
        assert!((v - (1.0 - q * q / d as f64)).abs() <= 1e-7);
    }
}

#[test]
fn power_steps_never_decrease() {
    let mut r = rng(34);
    for i in 0..50 {
        let d = 2 + i % 2;
        let state =
            BipartiteState::new(random_density(d * d, d * d, &mut r).unwrap(), d, d).unwrap();
        let trace = power_iteration_trace(&state, &haar_unitary(d, &mut r), 200).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - MONOTONE_SLACK);
        }
    }
}

#[test]
fn maximally_entangled_states_are_free_of_deficiency() {
    let mut r = rng(35);
    for i in 0..100 {
        let d = 2 + i % 2;
        let w = MaxEntWitness::from_local_unitary(haar_unitary(d, &mut r)).unwrap();
        assert!(w.certificate() <= 1e-12);
        let v = entanglement_deficiency(&BipartiteState::from_pure(w.vector(), d, d).unwrap())
            .unwrap()
            .value;
        assert!(v <= 1e-8);
    }
}

/// Selective local filtering can raise the average entangled fraction of a
/// mixed two-qubit state above its input value. Checked against the exact
/// magic-basis formula, so no optimizer is involved.
#[test]
fn local_filtering_can_beat_mixed_two_qubit_input() {
    let mut r = rng(36);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let rho = random_density(4, 4, &mut r).unwrap();
        let n_a = r.random_range(1..=3);
        let n_b = r.random_range(1..=3);
        let ch = random_local_channel(2, 2, n_a, n_b, &mut r).unwrap();
        let before = 1.0 - magic_entangled_fraction(&rho);
        let after: f64 = selective_outcomes(&rho, &ch)
            .unwrap()
            .iter()
            .filter_map(|o| {
                o.post_state
                    .as_ref()
                    .map(|p| o.prob * (1.0 - magic_entangled_fraction(p)))
            })
            .sum();
        worst = worst.min(after - before);
    }
    assert!(
        worst < -1e-3,
        "expected a clear violation, worst margin {worst}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn value_in_unit_interval(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=d * d);
        let state = BipartiteState::new(random_density(d * d, rank, &mut r).unwrap(), d, d).unwrap();
        let res = entanglement_deficiency(&state).unwrap();
        prop_assert!((0.0..=1.0).contains(&res.value));
        let w = MaxEntWitness::from_vector(&res.witness, d).unwrap();
        prop_assert!(w.certificate() <= 1e-9);
    }
}
