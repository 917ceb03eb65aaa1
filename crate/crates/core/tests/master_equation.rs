// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

use chiralwg::dynamics::{
    liouvillian_spectrum, spectral_clusters, stationary_dimension, steady_state, SpectralCluster,
};
use chiralwg::master::*;
use chiralwg::operators::site_lowering;
use chiralwg::{DensityMatrix, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

const K: f64 = 2.0 * std::f64::consts::PI;

fn positions(n: usize, gaps: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0];
    for g in gaps.iter().take(n - 1) {
        x.push(x.last().unwrap() + g);
    }
    x
}

fn channel(xs: &[f64], right: f64, left: f64, loss: f64) -> ChiralChannel {
    ChiralChannel::new(
        xs.iter().map(|&x| EmitterSpec::new(x, right, left, loss)).collect(),
        K,
    )
    .unwrap()
}

fn random_hermitian(d: usize, v: &[f64]) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |i, j| C64::new(v[(2 * (i * d + j)) % v.len()], v[(2 * (i * d + j) + 1) % v.len()]));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn sorted_spectrum(g: &Generator) -> Vec<C64> {
    let mut s = liouvillian_spectrum(g, None).unwrap();
    s.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    s
}

/// Hausdorff distance between two spectra.
fn spectral_gap(a: &[C64], b: &[C64]) -> f64 {
    let one_way = |a: &[C64], b: &[C64]| {
        a.iter()
            .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn chiral_reduces_to_cascaded(n in 2usize..=4, gaps in prop::collection::vec(0.01f64..1.0, 3), g in 0.1f64..2.0, loss in 0.0f64..0.5) {
        let ch = channel(&positions(n, &gaps), g, 0.0, loss);
        let d = generator_distance(&build_chiral(&ch).unwrap(), &build_cascaded(&ch).unwrap()).unwrap();
        prop_assert!(d < 1e-12, "distance {}", d);
    }

    #[test]
    fn chiral_reduces_to_bidirectional(n in 2usize..=4, gaps in prop::collection::vec(0.01f64..1.0, 3), g in 0.1f64..2.0, loss in 0.0f64..0.5) {
        let ch = channel(&positions(n, &gaps), g, g, loss);
        let d = generator_distance(&build_chiral(&ch).unwrap(), &build_bidirectional(&ch).unwrap()).unwrap();
        prop_assert!(d < 1e-12, "distance {}", d);
    }

    #[test]
    fn generators_preserve_trace_and_hermiticity(
        n in 1usize..=3,
        gaps in prop::collection::vec(0.01f64..1.0, 2),
        rates in prop::collection::vec(0.0f64..1.5, 3),
        drive in prop::collection::vec(-1.0f64..1.0, 3),
        v in prop::collection::vec(-1.0f64..1.0, 128),
    ) {
        prop_assume!(rates.iter().sum::<f64>() > 0.05);
        let xs = positions(n, &gaps);
        let ch = ChiralChannel::new(
            xs.iter().map(|&x| EmitterSpec::new(x, rates[0], rates[1], rates[2]).with_drive(C64::new(drive[0], drive[1]), drive[2])).collect(),
            K,
        ).unwrap();
        let g = build_chiral(&ch).unwrap();
        prop_assert!(g.trace_preservation_defect() < 1e-12);
        let rho = random_hermitian(g.dim(), &v);
        let out = g.apply(&rho);
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!((&out - out.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn cascaded_spectrum_ignores_positions(x2a in 0.01f64..2.0, x2b in 0.01f64..2.0) {
        let a = build_cascaded(&channel(&[0.0, x2a], 1.0, 0.0, 0.0)).unwrap();
        let b = build_cascaded(&channel(&[0.0, x2b], 1.0, 0.0, 0.0)).unwrap();
        // the full Liouvillian is unitarily equivalent; compare via traces of powers
        let sa = a.superoperator();
        let sb = b.superoperator();
        let mut pa = sa.clone();
        let mut pb = sb.clone();
        for _ in 0..6 {
            prop_assert!((pa.trace() - pb.trace()).norm() < 1e-9 * (1.0 + pa.trace().norm()));
            pa = &pa * &sa;
            pb = &pb * &sb;
        }
    }
}

fn clusters(g: &Generator) -> Vec<SpectralCluster> {
    spectral_clusters(&liouvillian_spectrum(g, None).unwrap(), 0.05)
}

#[test]
fn cascaded_eigenvalues_position_independent() {
    for (a, b) in [
        (vec![0.0, 0.3], vec![0.0, 0.77]),
        (vec![0.0, 0.3, 0.41], vec![0.0, 0.77, 1.9]),
    ] {
        let ca = clusters(&build_cascaded(&channel(&a, 1.0, 0.0, 0.1)).unwrap());
        let cb = clusters(&build_cascaded(&channel(&b, 1.0, 0.0, 0.1)).unwrap());
        assert_eq!(ca.len(), cb.len());
        for (x, y) in ca.iter().zip(&cb) {
            assert_eq!(x.multiplicity, y.multiplicity);
            assert!((x.centroid - y.centroid).norm() < 1e-10);
        }
    }
    // distinct rates: simple spectrum, compared eigenvalue by eigenvalue
    let unequal = |x2: f64| {
        let ch = ChiralChannel::new(
            vec![EmitterSpec::new(0.0, 1.0, 0.0, 0.0), EmitterSpec::new(x2, 0.6, 0.0, 0.2)],
            K,
        )
        .unwrap();
        sorted_spectrum(&build_cascaded(&ch).unwrap())
    };
    let (a, b) = (unequal(0.3), unequal(0.77));
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-10));
}

#[test]
fn bidirectional_spectrum_depends_on_positions() {
    let a = sorted_spectrum(&build_bidirectional(&channel(&[0.0, 1.0], 1.0, 1.0, 0.0)).unwrap());
    let b = sorted_spectrum(&build_bidirectional(&channel(&[0.0, 0.25], 1.0, 1.0, 0.0)).unwrap());
    assert!(spectral_gap(&a, &b) > 1e-3);
}

#[test]
fn cascaded_pair_has_only_ground_steady_state() {
    let g = build_cascaded(&channel(&[0.0, 0.4], 1.0, 0.0, 0.0)).unwrap();
    assert_eq!(stationary_dimension(&g).unwrap(), 1);
    let ss = steady_state(&g).unwrap();
    let rho = ss.unique().unwrap();
    assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-10);
}

#[test]
fn unidirectional_reduced_dynamics_is_closed() {
    let g = build_cascaded(&channel(&[0.0, 0.37], 1.0, 0.0, 0.0)).unwrap();
    let r = reduced_generator_check(&g, 20.0, 200).unwrap();
    assert!(r.max_divergence < 1e-10, "{}", r.max_divergence);
}

#[test]
fn bidirectional_reduced_dynamics_is_not_closed() {
    let g = build_bidirectional(&channel(&[0.0, 0.25], 1.0, 1.0, 0.0)).unwrap();
    let r = reduced_generator_check(&g, 20.0, 200).unwrap();
    assert!(r.max_divergence > 1e-3, "{}", r.max_divergence);
}

#[test]
fn loss_only_emitters_do_not_talk() {
    let g = build_chiral(&channel(&[0.0, 0.37], 0.0, 0.0, 1.0)).unwrap();
    let r = reduced_generator_check(&g, 20.0, 200).unwrap();
    assert!(r.max_divergence < 1e-14, "{}", r.max_divergence);
}

/// Optical Bloch steady state of one driven emitter with total decay γ:
/// `ρ_ee = Ω²/(Δ² + γ²/4 + 2Ω²)` for `H = −Δσ⁺σ⁻ + Ω(σ⁺ + σ⁻)`.
fn bloch_population(omega: f64, delta: f64, gamma: f64) -> f64 {
    omega * omega / (delta * delta + gamma * gamma / 4.0 + 2.0 * omega * omega)
}

#[test]
fn single_driven_emitter_matches_bloch_solution() {
    for &(omega, delta, right, left, loss) in &[
        (0.3, 0.0, 1.0, 0.0, 0.0),
        (0.7, 0.4, 0.6, 0.2, 0.3),
        (2.0, -1.0, 0.5, 0.5, 0.0),
    ] {
        let ch = ChiralChannel::new(
            vec![EmitterSpec::new(0.0, right, left, loss).with_drive(C64::new(omega, 0.0), delta)],
            K,
        )
        .unwrap();
        let g = build_chiral(&ch).unwrap();
        let rho = steady_state(&g).unwrap().unique().unwrap().clone();
        let expected = bloch_population(omega, delta, right + left + loss);
        assert!((rho.excited_population(0).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn drive_phase_gauge_leaves_purity_invariant() {
    let xs = [0.0, 0.31];
    let purity = |x2: f64| {
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, 1.0, 0.0, 0.0).with_drive(C64::new(0.4, 0.0), 0.0),
                EmitterSpec::new(x2, 1.0, 0.0, 0.0)
                    .with_drive(C64::from_polar(0.4, K * x2 + 0.3), 0.0),
            ],
            K,
        )
        .unwrap();
        let g = build_cascaded(&ch).unwrap();
        steady_state(&g).unwrap().unique().unwrap().purity()
    };
    let a = purity(xs[1]);
    let b = purity(0.83);
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

/// Weak coherent drive of one emitter through the channel: the transmitted
/// field is `E_in + (output coupling)·⟨σ⟩`, compared with the closed-form
/// resonant transmission.
#[test]
fn weak_drive_transmission_matches_scattering() {
    let (right, left, loss) = (1.0, 0.0, 1.0);
    let total: f64 = right + left + loss;
    let eps = 1e-4;
    // a drive entering from the left couples with amplitude √γ_R·E_in
    let omega = right.sqrt() * eps;
    let ch = ChiralChannel::new(
        vec![EmitterSpec::new(0.0, right, left, loss).with_drive(C64::new(omega, 0.0), 0.0)],
        K,
    )
    .unwrap();
    let g = build_chiral(&ch).unwrap();
    let rho = steady_state(&g).unwrap().unique().unwrap().clone();
    let sm = site_lowering(0, 1).unwrap();
    let coherence = (sm.matrix() * rho.matrix()).trace();
    // input-output: E_out = E_in − i√γ_R⟨σ⟩
    let t = (C64::new(eps, 0.0) - C64::new(0.0, 1.0) * right.sqrt() * coherence) / eps;
    let expected = 1.0 - 2.0 * right / total;
    assert!((t - C64::new(expected, 0.0)).norm() < 1e-6, "t = {t}");
    assert!(t.norm() < 1e-6);
}

#[test]
fn density_from_steady_state_is_valid() {
    let ch = ChiralChannel::new(
        vec![
            EmitterSpec::new(0.0, 1.0, 0.3, 0.1).with_drive(C64::new(0.5, 0.2), 0.1),
            EmitterSpec::new(0.4, 0.8, 0.1, 0.0).with_drive(C64::new(0.1, 0.4), -0.3),
            EmitterSpec::new(0.9, 0.2, 0.7, 0.2),
        ],
        K,
    )
    .unwrap();
    let g = build_chiral(&ch).unwrap();
    let rho = steady_state(&g).unwrap().unique().unwrap().clone();
    assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
}
