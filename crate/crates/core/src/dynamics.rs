// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution, steady states, Liouvillian spectra and quantum-jump
//! trajectories.
//!
//! Dense superoperators are written in a real orthonormal basis of
//! Hermitian matrices `{E_aa, (E_ab+E_ba)/√2, i(E_ab−E_ba)/√2}`. Since every
//! Lindblad map preserves Hermiticity the generator is a real matrix there,
//! which keeps null vectors Hermitian and lets the real Schur form deliver
//! the spectrum.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::master::{Generator, GeneratorFamily, JumpChannel};
use crate::operators::{
    hermiticity_defect, site_excitation, DensityMatrix, PureState, C64, MAX_DENSITY_SITES,
};

/// Largest emitter count for dense Liouvillian factorizations.
pub const MAX_DENSE_SITES: usize = 5;

const TRACE_DRIFT_LIMIT: f64 = 1e-8;
const POSITIVITY_LIMIT: f64 = -1e-7;

fn check_dense(n_sites: usize) -> Result<()> {
    if n_sites > MAX_DENSE_SITES {
        return Err(Error::Capacity {
            what: "dense Liouvillian",
            n_sites,
            max: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

/// Index pairs of the Hermitian operator basis, in order.
fn hermitian_basis(d: usize) -> Vec<(usize, usize, u8)> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push((a, a, 0));
    }
    for a in 0..d {
        for b in a + 1..d {
            out.push((a, b, 1));
            out.push((a, b, 2));
        }
    }
    out
}

/// Real coordinates of a Hermitian matrix.
pub fn to_real_coordinates(rho: &DMatrix<C64>) -> DVector<f64> {
    let d = rho.nrows();
    let s2 = std::f64::consts::SQRT_2;
    DVector::from_iterator(
        d * d,
        hermitian_basis(d).into_iter().map(|(a, b, kind)| match kind {
            0 => rho[(a, a)].re,
            1 => s2 * rho[(a, b)].re,
            _ => s2 * rho[(a, b)].im,
        }),
    )
}

/// Inverse of [`to_real_coordinates`].
pub fn from_real_coordinates(v: &DVector<f64>, d: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (&(a, b, kind), &x) in hermitian_basis(d).iter().zip(v.iter()) {
        match kind {
            0 => m[(a, a)] += C64::new(x, 0.0),
            1 => {
                m[(a, b)] += C64::new(h * x, 0.0);
                m[(b, a)] += C64::new(h * x, 0.0);
            }
            _ => {
                m[(a, b)] += C64::new(0.0, h * x);
                m[(b, a)] -= C64::new(0.0, h * x);
            }
        }
    }
    m
}

fn basis_element(d: usize, a: usize, b: usize, kind: u8) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        0 => m[(a, a)] = C64::new(1.0, 0.0),
        1 => {
            m[(a, b)] = C64::new(h, 0.0);
            m[(b, a)] = C64::new(h, 0.0);
        }
        _ => {
            m[(a, b)] = C64::new(0.0, h);
            m[(b, a)] = C64::new(0.0, -h);
        }
    }
    m
}

/// The generator as a real `d² × d²` matrix in the Hermitian basis.
pub fn liouvillian_matrix(generator: &Generator) -> Result<DMatrix<f64>> {
    check_dense(generator.n_sites())?;
    let d = generator.dim();
    let basis = hermitian_basis(d);
    let mut l = DMatrix::zeros(d * d, d * d);
    for (col, &(a, b, kind)) in basis.iter().enumerate() {
        let image = generator.apply(&basis_element(d, a, b, kind));
        l.set_column(col, &to_real_coordinates(&image));
    }
    Ok(l)
}

/// Eigenvalues of the Liouvillian ordered by decreasing real part, so the
/// stationary modes come first. `count` truncates the list.
pub fn liouvillian_spectrum(generator: &Generator, count: Option<usize>) -> Result<Vec<C64>> {
    let l = liouvillian_matrix(generator)?;
    // highly defective spectra can stall the QR sweep at machine epsilon
    let eig = [f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(l.clone(), eps, 100_000))
        .ok_or_else(|| Error::LinearAlgebra("Schur decomposition did not converge".into()))?
        .complex_eigenvalues();
    let mut values: Vec<C64> = eig.iter().copied().collect();
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    if let Some(n) = count {
        values.truncate(n);
    }
    Ok(values)
}

/// Eigenvalue cluster: centroid and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCluster {
    pub centroid: C64,
    pub multiplicity: usize,
}

/// Groups eigenvalues lying within `radius` of each other (single linkage).
///
/// A defective eigenvalue of multiplicity m is split by roundoff into a ring
/// of radius ~eps^(1/m); the centroid of the ring is accurate to ~eps.
pub fn spectral_clusters(values: &[C64], radius: f64) -> Vec<SpectralCluster> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    let mut out: Vec<SpectralCluster> = groups
        .into_iter()
        .map(|(_, sum, m)| SpectralCluster {
            centroid: sum / m as f64,
            multiplicity: m,
        })
        .collect();
    out.sort_by(|a, b| {
        b.centroid
            .re
            .total_cmp(&a.centroid.re)
            .then(a.centroid.im.total_cmp(&b.centroid.im))
    });
    out
}

/// Orthonormal basis (real coordinates) of the Liouvillian null space.
fn null_space(l: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = l.nrows();
    let svd = l.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::LinearAlgebra("SVD without right singular vectors".into()))?;
    let sigma_max = svd.singular_values.max().max(1.0);
    let tol = 1e-9 * sigma_max;
    let mut out = Vec::new();
    for k in 0..n {
        if svd.singular_values[k] <= tol {
            out.push(v_t.row(k).transpose());
        }
    }
    Ok(out)
}

/// Number of linearly independent stationary states.
pub fn stationary_dimension(generator: &Generator) -> Result<usize> {
    Ok(null_space(&liouvillian_matrix(generator)?)?.len())
}

#[derive(Clone, Debug)]
pub enum SteadyState {
    Unique {
        state: DensityMatrix,
        /// Frobenius norm of `𝓛ρ_ss`.
        residual: f64,
    },
    /// The null space is degenerate; `basis` spans it with Hermitian,
    /// Hilbert–Schmidt orthonormal matrices (not all of unit trace).
    Degenerate { basis: Vec<DMatrix<C64>> },
}

impl SteadyState {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, SteadyState::Degenerate { .. })
    }

    pub fn dimension(&self) -> usize {
        match self {
            SteadyState::Unique { .. } => 1,
            SteadyState::Degenerate { basis } => basis.len(),
        }
    }

    pub fn unique(&self) -> Option<&DensityMatrix> {
        match self {
            SteadyState::Unique { state, .. } => Some(state),
            SteadyState::Degenerate { .. } => None,
        }
    }
}

/// Stationary state from the Liouvillian null space.
pub fn steady_state(generator: &Generator) -> Result<SteadyState> {
    let l = liouvillian_matrix(generator)?;
    let d = generator.dim();
    let null = null_space(&l)?;
    match null.len() {
        0 => Err(Error::LinearAlgebra(
            "Liouvillian has no null vector within tolerance".into(),
        )),
        1 => {
            let mut rho = from_real_coordinates(&null[0], d);
            let tr = rho.trace();
            if tr.norm() < 1e-12 {
                return Err(Error::LinearAlgebra("null vector is traceless".into()));
            }
            rho /= tr;
            let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
            let residual = generator.apply(&rho).norm();
            let state = DensityMatrix::from_parts(generator.n_sites(), rho);
            if state.min_eigenvalue() < -1e-9 {
                return Err(Error::Positivity {
                    t: f64::INFINITY,
                    min_eigenvalue: state.min_eigenvalue(),
                });
            }
            Ok(SteadyState::Unique { state, residual })
        }
        _ => Ok(SteadyState::Degenerate {
            basis: null.iter().map(|v| from_real_coordinates(v, d)).collect(),
        }),
    }
}

/// Propagates `rho` by `exp(𝓛t)` using the dense real Liouvillian.
pub fn propagate_exact(generator: &Generator, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let prop = ExactPropagator::new(generator, t)?;
    Ok(prop.apply(rho))
}

/// Fixed-step propagator `exp(𝓛Δt)`.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    n_sites: usize,
    dim: usize,
    matrix: DMatrix<f64>,
}

impl ExactPropagator {
    pub fn new(generator: &Generator, dt: f64) -> Result<Self> {
        let l = liouvillian_matrix(generator)?;
        Ok(Self {
            n_sites: generator.n_sites(),
            dim: generator.dim(),
            matrix: (l * dt).exp(),
        })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let v = &self.matrix * to_real_coordinates(rho.matrix());
        DensityMatrix::from_parts(self.n_sites, from_real_coordinates(&v, self.dim))
    }
}

/// What [`evolve`] keeps at each sample time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RecordMode {
    #[default]
    States,
    ObservablesOnly,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: Option<f64>,
    pub record: RecordMode,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            initial_step: None,
            record: RecordMode::States,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Empty when recording observables only.
    pub states: Vec<DensityMatrix>,
    /// `populations[i][j]`: excited population of emitter `j` at `times[i]`.
    pub populations: Vec<Vec<f64>>,
    pub purity: Vec<f64>,
}

/// `n` equally spaced samples covering `[0, t_final]`.
pub fn sample_times(t_final: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t_final];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                t_final
            } else {
                t_final * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn observe(rho: &DMatrix<C64>, n_sites: usize, excitation: &[DMatrix<C64>]) -> (Vec<f64>, f64) {
    let pops = (0..n_sites)
        .map(|j| (&excitation[j] * rho).trace().re)
        .collect();
    let purity = rho.iter().map(|z| z.norm_sqr()).sum();
    (pops, purity)
}

fn validate_sample(rho: &DMatrix<C64>, n_sites: usize, t: f64) -> Result<DensityMatrix> {
    let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
    if drift > TRACE_DRIFT_LIMIT {
        return Err(Error::TraceDrift { t, drift });
    }
    let defect = hermiticity_defect(rho);
    if defect > 1e-9 {
        return Err(Error::InvalidState(format!(
            "state lost Hermiticity at t = {t} (defect {defect:e})"
        )));
    }
    let state = DensityMatrix::from_parts(n_sites, (rho + rho.adjoint()) * C64::new(0.5, 0.0));
    let min = state.min_eigenvalue();
    if min < POSITIVITY_LIMIT {
        return Err(Error::Positivity {
            t,
            min_eigenvalue: min,
        });
    }
    Ok(state)
}

/// Integrates `ρ̇ = 𝓛(t)ρ` with an adaptive Dormand–Prince 5(4) scheme,
/// landing exactly on every requested sample time.
///
/// Samples are validated as they are emitted: trace drift above 1e−8 and
/// eigenvalues below −1e−7 are errors. The state is never renormalized.
pub fn evolve<G: GeneratorFamily + ?Sized>(
    family: &G,
    rho0: &DensityMatrix,
    times: &[f64],
    options: &EvolveOptions,
) -> Result<Trajectory> {
    let n_sites = family.n_sites();
    if rho0.n_sites() != n_sites {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_sites,
            got: rho0.dim(),
        });
    }
    if n_sites > MAX_DENSITY_SITES {
        return Err(Error::Capacity {
            what: "density-matrix evolution",
            n_sites,
            max: MAX_DENSITY_SITES,
        });
    }
    if !(options.atol > 0.0 && options.rtol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be positive".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "sample times must be nonnegative and strictly increasing".into(),
        ));
    }
    let excitation: Vec<DMatrix<C64>> = (0..n_sites)
        .map(|j| site_excitation(j, n_sites).map(|o| o.into_matrix()))
        .collect::<Result<_>>()?;

    let mut traj = Trajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::new(),
        populations: Vec::with_capacity(times.len()),
        purity: Vec::with_capacity(times.len()),
    };
    let emit = |t: f64, rho: &DMatrix<C64>, traj: &mut Trajectory| -> Result<()> {
        let state = validate_sample(rho, n_sites, t)?;
        let (pops, purity) = observe(state.matrix(), n_sites, &excitation);
        traj.times.push(t);
        traj.populations.push(pops);
        traj.purity.push(purity);
        if options.record == RecordMode::States {
            traj.states.push(state);
        }
        Ok(())
    };

    let t_end = *times.last().unwrap();
    let mut t = 0.0;
    let mut y = rho0.matrix().clone();
    let mut h = options
        .initial_step
        .unwrap_or_else(|| (t_end / 100.0).clamp(1e-6, 0.01));
    let mut next = 0;
    while next < times.len() && times[next] == 0.0 {
        emit(0.0, &y, &mut traj)?;
        next += 1;
    }
    let mut k: Vec<DMatrix<C64>> = Vec::with_capacity(7);
    let mut fsal: Option<DMatrix<C64>> = None;

    while next < times.len() {
        let target = times[next];
        let remaining = target - t;
        let hitting = h >= remaining;
        let step = if hitting { remaining } else { h };
        if step < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h: step });
        }

        k.clear();
        let k0 = match fsal.take() {
            Some(f) => f,
            None => family.generator_at(t)?.apply(&y),
        };
        k.push(k0);
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys += kj * C64::new(step * a, 0.0);
                }
            }
            k.push(family.generator_at(t + C[s] * step)?.apply(&ys));
        }
        let mut y5 = y.clone();
        let mut err = DMatrix::<C64>::zeros(y.nrows(), y.ncols());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5 += &k[s] * C64::new(step * B5[s], 0.0);
            }
            let e = B5[s] - B4[s];
            if e != 0.0 {
                err += &k[s] * C64::new(step * e, 0.0);
            }
        }
        let mut norm = 0.0f64;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y5.iter()) {
            let scale = options.atol + options.rtol * a.norm().max(b.norm());
            norm = norm.max(e.norm() / scale);
        }
        if norm <= 1.0 {
            t = if hitting { target } else { t + step };
            y = y5;
            fsal = Some(k[6].clone());
            if hitting {
                emit(t, &y, &mut traj)?;
                next += 1;
            }
            let factor = if norm == 0.0 {
                5.0
            } else {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a truncated landing step says nothing about the natural size
            if !hitting || factor < 1.0 {
                h = step * factor;
            }
        } else {
            h = step * (0.9 * norm.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(traj)
}

/// Options for [`mc_trajectories`].
#[derive(Clone, Debug)]
pub struct McOptions {
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Times at which normalized states are averaged; within `(0, t_final]`.
    pub checkpoints: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    /// Index into [`JumpRecord::channels`].
    pub channel: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub jumps: Vec<JumpEvent>,
    pub final_state: DVector<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub seed: u64,
    pub channels: Vec<JumpChannel>,
    pub trajectories: Vec<TrajectoryRecord>,
}

impl JumpRecord {
    /// Total number of jumps per channel.
    pub fn counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.channels.len()];
        for tr in &self.trajectories {
            for j in &tr.jumps {
                out[j.channel] += 1;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct McResult {
    pub record: JumpRecord,
    pub checkpoints: Vec<f64>,
    /// Ensemble-averaged density matrix at each checkpoint.
    pub averaged: Vec<DensityMatrix>,
    /// `populations[i][j]`: averaged excited population of emitter `j`.
    pub populations: Vec<Vec<f64>>,
}

/// Time resolution: `t_final / 2^TICK_BITS`.
const TICK_BITS: u32 = 34;

struct Unraveling {
    dim: usize,
    n_sites: usize,
    /// `exp(−iH_eff 2^j q)` for `j = 0..=coarse`.
    steps: Vec<DMatrix<C64>>,
    coarse: u32,
    quantum: f64,
    jumps: Vec<(DMatrix<C64>, f64)>,
}

impl Unraveling {
    fn new(generator: &Generator, t_final: f64) -> Self {
        let quantum = t_final / (1u64 << TICK_BITS) as f64;
        let h = generator.h_eff().matrix();
        let scale = h.iter().fold(0.0f64, |a, z| a.max(z.norm())) * generator.dim() as f64;
        let mut coarse = TICK_BITS - 8;
        while coarse > 0 && scale * quantum * (1u64 << coarse) as f64 > 0.5 {
            coarse -= 1;
        }
        let minus_i = C64::new(0.0, -1.0);
        let steps = (0..=coarse)
            .map(|j| (h * (minus_i * quantum * (1u64 << j) as f64)).exp())
            .collect();
        Self {
            dim: generator.dim(),
            n_sites: generator.n_sites(),
            steps,
            coarse,
            quantum,
            jumps: generator
                .jumps()
                .iter()
                .map(|j| (j.operator.matrix().clone(), j.rate))
                .collect(),
        }
    }

    fn run(
        &self,
        psi0: &DVector<C64>,
        rng: &mut ChaCha8Rng,
        checkpoint_ticks: &[u64],
    ) -> (TrajectoryRecord, Vec<DVector<C64>>) {
        let end = 1u64 << TICK_BITS;
        let mut psi = psi0.clone();
        let mut tick = 0u64;
        let mut threshold: f64 = rng.random();
        let mut events = Vec::new();
        let mut snapshots = Vec::with_capacity(checkpoint_ticks.len());
        let mut next_cp = 0;

        while tick < end {
            let boundary = checkpoint_ticks
                .get(next_cp)
                .copied()
                .unwrap_or(end)
                .min(end);
            let span = (boundary - tick).min(1u64 << self.coarse);
            // largest advance within `span` that keeps ‖ψ‖² above the threshold
            let mut advanced = 0u64;
            for j in (0..=self.coarse).rev() {
                let len = 1u64 << j;
                if advanced + len > span {
                    continue;
                }
                let trial = &self.steps[j as usize] * &psi;
                if trial.norm_squared() > threshold {
                    psi = trial;
                    advanced += len;
                }
            }
            tick += advanced;
            if advanced < span {
                // the norm crosses the threshold during the next tick
                psi = &self.steps[0] * &psi;
                tick += 1;
                self.jump(&mut psi, tick, rng, &mut events);
                threshold = rng.random();
            }
            while next_cp < checkpoint_ticks.len() && checkpoint_ticks[next_cp] <= tick {
                snapshots.push(normalized(&psi));
                next_cp += 1;
            }
        }
        (
            TrajectoryRecord {
                jumps: events,
                final_state: normalized(&psi),
            },
            snapshots,
        )
    }

    fn jump(&self, psi: &mut DVector<C64>, tick: u64, rng: &mut ChaCha8Rng, events: &mut Vec<JumpEvent>) {
        let candidates: Vec<(DVector<C64>, f64)> = self
            .jumps
            .iter()
            .map(|(op, rate)| {
                let v = op * &*psi;
                let w = rate * v.norm_squared();
                (v, w)
            })
            .collect();
        let total: f64 = candidates.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            *psi = normalized(psi);
            return;
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = candidates.len() - 1;
        for (k, (_, w)) in candidates.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                chosen = k;
                break;
            }
        }
        while candidates[chosen].1 <= 0.0 {
            chosen -= 1;
        }
        *psi = normalized(&candidates[chosen].0);
        events.push(JumpEvent {
            time: tick as f64 * self.quantum,
            channel: chosen,
        });
    }
}

fn normalized(v: &DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v / C64::new(n, 0.0)
    }
}

/// Quantum-jump unravelling of a time-independent generator.
///
/// Trajectory `i` draws from ChaCha8 seeded with `seed` on stream `i`, so
/// results do not depend on how trajectories are scheduled across threads.
/// Jump times are located by binary search on a fixed grid of
/// `t_final/2^34`, and averages are summed in trajectory order.
pub fn mc_trajectories(generator: &Generator, psi0: &PureState, options: &McOptions) -> Result<McResult> {
    if psi0.n_sites() != generator.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: generator.dim(),
            got: psi0.dim(),
        });
    }
    if !(options.t_final > 0.0 && options.t_final.is_finite()) || options.n_traj == 0 {
        return Err(Error::InvalidParameter(
            "need t_final > 0 and at least one trajectory".into(),
        ));
    }
    if options
        .checkpoints
        .iter()
        .any(|&t| !(t > 0.0 && t <= options.t_final))
        || options.checkpoints.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "checkpoints must be increasing and inside (0, t_final]".into(),
        ));
    }
    let engine = Unraveling::new(generator, options.t_final);
    let end = 1u64 << TICK_BITS;
    let ticks: Vec<u64> = options
        .checkpoints
        .iter()
        .map(|&t| ((t / options.t_final) * end as f64).round() as u64)
        .collect();
    let psi = psi0.amplitudes().clone();

    let runs: Vec<(TrajectoryRecord, Vec<DVector<C64>>)> = (0..options.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(i as u64);
            engine.run(&psi, &mut rng, &ticks)
        })
        .collect();

    let d = engine.dim;
    let inv = C64::new(1.0 / options.n_traj as f64, 0.0);
    let mut sums = vec![DMatrix::<C64>::zeros(d, d); ticks.len()];
    for (_, snaps) in &runs {
        for (acc, v) in sums.iter_mut().zip(snaps) {
            *acc += v * v.adjoint();
        }
    }
    let excitation: Vec<DMatrix<C64>> = (0..engine.n_sites)
        .map(|j| site_excitation(j, engine.n_sites).map(|o| o.into_matrix()))
        .collect::<Result<_>>()?;
    let averaged: Vec<DensityMatrix> = sums
        .into_iter()
        .map(|m| DensityMatrix::from_parts(engine.n_sites, m * inv))
        .collect();
    let populations = averaged
        .iter()
        .map(|rho| observe(rho.matrix(), engine.n_sites, &excitation).0)
        .collect();

    Ok(McResult {
        record: JumpRecord {
            seed: options.seed,
            channels: generator.jumps().iter().map(|j| j.channel).collect(),
            trajectories: runs.into_iter().map(|(r, _)| r).collect(),
        },
        checkpoints: options.checkpoints.clone(),
        averaged,
        populations,
    })
}

/// Photon flux `rate·Tr(J†Jρ)` for each jump channel.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChannelFlux {
    pub channel: JumpChannel,
    pub flux: f64,
}

pub fn photon_flux(generator: &Generator, rho: &DensityMatrix) -> Result<Vec<ChannelFlux>> {
    if rho.dim() != generator.dim() {
        return Err(Error::DimensionMismatch {
            expected: generator.dim(),
            got: rho.dim(),
        });
    }
    Ok(generator
        .jumps()
        .iter()
        .map(|j| {
            let m = j.operator.matrix();
            let value = (m.adjoint() * m * rho.matrix()).trace().re * j.rate;
            ChannelFlux {
                channel: j.channel,
                flux: value.max(0.0),
            }
        })
        .collect())
}

/// Summary of a two-emitter state against the dimer family
/// `|gg⟩ + α(|ge⟩ − |eg⟩)`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DimerReport {
    pub purity: f64,
    /// `⟨S|ρ|S⟩` with `|S⟩ = (|ge⟩ − |eg⟩)/√2`.
    pub singlet_weight: f64,
    /// Best-fit α; `None` when the optimum is the pure singlet (α → ∞).
    pub alpha: Option<C64>,
    /// Largest overlap `⟨ψ_α|ρ|ψ_α⟩` over the family.
    pub fidelity: f64,
}

/// Fits the dimer family to a two-emitter density matrix.
///
/// The family spans the plane of `|gg⟩` and `|S⟩`, so the optimal fidelity
/// is the top eigenvalue of ρ compressed to that plane and α follows from
/// the corresponding eigenvector.
pub fn dimer_analysis(rho: &DensityMatrix) -> Result<DimerReport> {
    if rho.n_sites() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // |gg⟩ = index 0, |ge⟩ = 1, |eg⟩ = 2
    let s = [C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, 0.0)];
    let mut rs = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        for j in 0..4 {
            rs[i] += m[(i, j)] * s[j];
        }
    }
    let p_gg = m[(0, 0)].re;
    let p_s: f64 = (0..4).map(|i| (s[i].conj() * rs[i]).re).sum();
    let c_gs = rs[0]; // ⟨gg|ρ|S⟩

    // top eigenpair of [[p_gg, c_gs], [c_gs*, p_s]]
    let mean = 0.5 * (p_gg + p_s);
    let half_gap = (0.25 * (p_gg - p_s).powi(2) + c_gs.norm_sqr()).sqrt();
    let top = mean + half_gap;
    // eigenvector (c_gs, top − p_gg) or (top − p_s, c_gs*)
    let (a0, a1) = if (top - p_s).abs() >= c_gs.norm() && (top - p_s).abs() > 0.0 {
        (C64::new(top - p_s, 0.0), c_gs.conj())
    } else if c_gs.norm() > 0.0 {
        (c_gs, C64::new(top - p_gg, 0.0))
    } else if p_gg >= p_s {
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    };
    let alpha = if a0.norm() <= 1e-14 * a1.norm() {
        None
    } else {
        Some(a1 / a0 * h)
    };
    Ok(DimerReport {
        purity: rho.purity(),
        singlet_weight: p_s,
        alpha,
        fidelity: top.clamp(0.0, 1.0),
    })
}

/// The normalized dimer state `(|gg⟩ + α(|ge⟩ − |eg⟩))/√(1 + 2|α|²)`.
pub fn dimer_state(alpha: C64) -> PureState {
    let norm = (1.0 + 2.0 * alpha.norm_sqr()).sqrt();
    let amps = DVector::from_vec(vec![
        C64::new(1.0 / norm, 0.0),
        alpha / norm,
        -alpha / norm,
        C64::new(0.0, 0.0),
    ]);
    PureState::normalized(amps).expect("nonzero amplitude vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master::{build_bidirectional, build_cascaded, ChiralChannel, EmitterSpec};

    fn single(gamma: f64) -> Generator {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, gamma, 0.0, 0.0)], 1.0).unwrap();
        build_cascaded(&ch).unwrap()
    }

    #[test]
    fn real_coordinates_round_trip() {
        let rho = PureState::normalized(DVector::from_vec(vec![
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.7),
        ]))
        .unwrap()
        .to_density()
        .unwrap();
        let back = from_real_coordinates(&to_real_coordinates(rho.matrix()), 2);
        assert!((back - rho.matrix()).norm() < 1e-15);
    }

    #[test]
    fn single_emitter_spectrum() {
        let spec = liouvillian_spectrum(&single(1.0), None).unwrap();
        let re: Vec<f64> = spec.iter().map(|z| z.re).collect();
        assert!(re[0].abs() < 1e-12);
        assert!((re[1] + 0.5).abs() < 1e-12 && (re[2] + 0.5).abs() < 1e-12);
        assert!((re[3] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_matches_exponential() {
        let g = single(1.0);
        let rho = PureState::from_labels("e").unwrap().to_density().unwrap();
        let times = sample_times(5.0, 11);
        let tr = evolve(&g, &rho, &times, &EvolveOptions::default()).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.populations) {
            assert!((p[0] - (-t).exp()).abs() < 1e-8, "t={t} p={}", p[0]);
        }
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let g = single(1.0);
        match steady_state(&g).unwrap() {
            SteadyState::Unique { state, residual } => {
                assert!((state.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
                assert!(residual < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bidirectional_dark_state_degeneracy() {
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, 1.0, 1.0, 0.0),
                EmitterSpec::new(1.0, 1.0, 1.0, 0.0),
            ],
            2.0 * std::f64::consts::PI,
        )
        .unwrap();
        let g = build_bidirectional(&ch).unwrap();
        let ss = steady_state(&g).unwrap();
        assert!(ss.is_degenerate());
        assert_eq!(ss.dimension(), 4);
    }

    #[test]
    fn dimer_fit_recovers_alpha() {
        let alpha = C64::new(0.3, -0.8);
        let rho = dimer_state(alpha).to_density().unwrap();
        let rep = dimer_analysis(&rho).unwrap();
        assert!((rep.fidelity - 1.0).abs() < 1e-12);
        assert!((rep.alpha.unwrap() - alpha).norm() < 1e-12);
        assert!((rep.purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimer_fit_of_singlet() {
        let s = PureState::singlet().to_density().unwrap();
        let rep = dimer_analysis(&s).unwrap();
        assert!(rep.alpha.is_none());
        assert!((rep.singlet_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_has_no_jumps() {
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, 1.0, 0.0, 0.0),
                EmitterSpec::new(0.4, 1.0, 0.0, 0.0),
            ],
            1.0,
        )
        .unwrap();
        let g = build_cascaded(&ch).unwrap();
        let res = mc_trajectories(
            &g,
            &PureState::ground(2).unwrap(),
            &McOptions {
                t_final: 5.0,
                n_traj: 50,
                seed: 3,
                checkpoints: vec![1.0, 5.0],
            },
        )
        .unwrap();
        assert!(res.record.trajectories.iter().all(|t| t.jumps.is_empty()));
    }

    #[test]
    fn capacity_enforced() {
        let ch = ChiralChannel::uniform(6, 0.1, 1.0, EmitterSpec::new(0.0, 1.0, 0.0, 0.0)).unwrap();
        let g = build_cascaded(&ch).unwrap();
        assert!(matches!(steady_state(&g), Err(Error::Capacity { .. })));
    }
}
