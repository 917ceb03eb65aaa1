// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

use chiralwg::operators::{
    embed_operator, expectation, partial_trace, site_excitation, site_lowering, trace_distance,
};
use chiralwg::{DensityMatrix, Operator, PureState, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_density(n_sites: usize, entries: &[f64]) -> DensityMatrix {
    let d = 1 << n_sites;
    let a = DMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        C64::new(entries[k % entries.len()], entries[(k + 1) % entries.len()])
    });
    let mut rho = &a * a.adjoint() + DMatrix::identity(d, d) * C64::new(1e-3, 0.0);
    let tr = rho.trace();
    rho /= tr;
    DensityMatrix::new((&rho + rho.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Brute-force partial trace summing explicit basis labels.
fn partial_trace_oracle(rho: &DMatrix<C64>, n: usize, keep: &[usize]) -> DMatrix<C64> {
    let dk = 1 << keep.len();
    let traced: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let bit = |idx: usize, site: usize| (idx >> (n - 1 - site)) & 1;
    let compose = |kept: usize, rest: usize| {
        let mut idx = 0;
        for s in 0..n {
            let b = if let Some(p) = keep.iter().position(|&k| k == s) {
                (kept >> (keep.len() - 1 - p)) & 1
            } else {
                let p = traced.iter().position(|&k| k == s).unwrap();
                (rest >> (traced.len() - 1 - p)) & 1
            };
            idx |= b << (n - 1 - s);
        }
        idx
    };
    let _ = bit;
    let mut out = DMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            for r in 0..(1 << traced.len()) {
                out[(a, b)] += rho[(compose(a, r), compose(b, r))];
            }
        }
    }
    out
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_matches_label_sum(e in entries(), n in 2usize..=4, mask in 1u32..15) {
        let keep: Vec<usize> = (0..n).filter(|s| mask & (1 << s) != 0).collect();
        prop_assume!(!keep.is_empty());
        let rho = random_density(n, &e);
        let fast = partial_trace(&rho, &keep).unwrap();
        let slow = partial_trace_oracle(rho.matrix(), n, &keep);
        prop_assert!((fast.matrix() - slow).norm() < 1e-13);
        prop_assert!((fast.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operators_on_distinct_sites_commute(n in 2usize..=5, a in 0usize..5, b in 0usize..5) {
        prop_assume!(a < n && b < n && a != b);
        let x = embed_operator(&Operator::sigma_x(), a, n).unwrap();
        let s = site_lowering(b, n).unwrap();
        let c = x.commutator(&s).unwrap();
        prop_assert!(c.max_abs() < 1e-15);
    }

    #[test]
    fn lowering_on_excited_site_gives_ground(n in 1usize..=5, site in 0usize..5) {
        prop_assume!(site < n);
        let labels: String = (0..n).map(|s| if s == site { 'e' } else { 'g' }).collect();
        let psi = PureState::from_labels(&labels).unwrap();
        let out = site_lowering(site, n).unwrap().matrix() * psi.amplitudes();
        let ground = PureState::ground(n).unwrap();
        prop_assert!((out - ground.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn purity_is_bounded(e in entries(), n in 1usize..=3) {
        let rho = random_density(n, &e);
        let p = rho.purity();
        prop_assert!(p <= 1.0 + 1e-12);
        prop_assert!(p >= 1.0 / (1 << n) as f64 - 1e-12);
    }

    #[test]
    fn trace_distance_is_a_metric(e1 in entries(), e2 in entries(), e3 in entries()) {
        let a = random_density(2, &e1);
        let b = random_density(2, &e2);
        let c = random_density(2, &e3);
        let ab = trace_distance(a.matrix(), b.matrix());
        let bc = trace_distance(b.matrix(), c.matrix());
        let ac = trace_distance(a.matrix(), c.matrix());
        prop_assert!(ab >= 0.0 && ab <= 1.0 + 1e-12);
        prop_assert!((ab - trace_distance(b.matrix(), a.matrix())).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(trace_distance(a.matrix(), a.matrix()) < 1e-12);
    }

    #[test]
    fn excitation_expectation_matches_population(e in entries(), n in 1usize..=3, site in 0usize..3) {
        prop_assume!(site < n);
        let rho = random_density(n, &e);
        let via_op = expectation(&rho, &site_excitation(site, n).unwrap()).unwrap();
        prop_assert!((via_op.re - rho.excited_population(site).unwrap()).abs() < 1e-14);
        prop_assert!(via_op.im.abs() < 1e-14);
    }
}

#[test]
fn product_state_partial_trace_recovers_factor() {
    let a = PureState::normalized(DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]))
        .unwrap();
    let b = PureState::from_labels("e").unwrap();
    let joint = PureState::product(&[a.clone(), b]).unwrap().to_density().unwrap();
    let first = partial_trace(&joint, &[0]).unwrap();
    assert!((first.matrix() - a.to_density().unwrap().matrix()).norm() < 1e-15);
}

#[test]
fn maximally_mixed_has_minimal_purity() {
    let rho = DensityMatrix::maximally_mixed(2).unwrap();
    assert!((rho.purity() - 0.25).abs() < 1e-15);
}

#[test]
fn invalid_density_matrices_are_rejected() {
    let mut m = DMatrix::<C64>::identity(2, 2);
    assert!(DensityMatrix::new(m.clone()).is_err());
    m[(1, 1)] = C64::new(0.0, 0.0);
    m[(0, 1)] = C64::new(0.5, 0.0);
    assert!(DensityMatrix::new(m).is_err());
}
