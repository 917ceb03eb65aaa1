// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad generators for emitters coupled through a 1D channel.
//!
//! A [`Generator`] is stored in jump-unravelling form,
//!
//! ```text
//! ρ̇ = −i(H_eff ρ − ρ H_eff†) + Σ_k rate_k J_k ρ J_k†,
//! H_eff = H − (i/2) Σ_k rate_k J_k† J_k,
//! ```
//!
//! so the same data drives density-matrix integration and quantum-jump
//! trajectories. Every emitter carries directional waveguide rates
//! `(γ_R, γ_L)` and a loss rate `Γ`; a symmetric emitter therefore decays at
//! `γ_R + γ_L + Γ`. Positions only enter through the phases `k·x_j`.

use std::borrow::Cow;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operators::{
    partial_trace, site_excitation, site_lowering, trace_distance, DensityMatrix, Operator,
    PureState, C64, MAX_PURE_SITES,
};

const RATE_TOL: f64 = 1e-12;

/// One emitter on the channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmitterSpec {
    pub position: f64,
    pub gamma_right: f64,
    pub gamma_left: f64,
    pub gamma_loss: f64,
    /// Drive detuning Δ (laser minus transition), rotating frame.
    pub detuning: f64,
    /// Complex Rabi amplitude Ω.
    pub drive: C64,
}

impl EmitterSpec {
    pub fn new(position: f64, gamma_right: f64, gamma_left: f64, gamma_loss: f64) -> Self {
        Self {
            position,
            gamma_right,
            gamma_left,
            gamma_loss,
            detuning: 0.0,
            drive: C64::new(0.0, 0.0),
        }
    }

    pub fn with_drive(mut self, drive: C64, detuning: f64) -> Self {
        self.drive = drive;
        self.detuning = detuning;
        self
    }

    pub fn total_rate(&self) -> f64 {
        self.gamma_right + self.gamma_left + self.gamma_loss
    }
}

/// Emitters ordered by position along the channel, plus the channel wavenumber.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChiralChannel {
    emitters: Vec<EmitterSpec>,
    wavenumber: f64,
}

impl ChiralChannel {
    pub fn new(emitters: Vec<EmitterSpec>, wavenumber: f64) -> Result<Self> {
        if emitters.is_empty() {
            return Err(Error::InvalidParameter("channel has no emitters".into()));
        }
        if emitters.len() > MAX_PURE_SITES {
            return Err(Error::Capacity {
                what: "channels",
                n_sites: emitters.len(),
                max: MAX_PURE_SITES,
            });
        }
        if !wavenumber.is_finite() {
            return Err(Error::InvalidParameter("wavenumber must be finite".into()));
        }
        for (j, e) in emitters.iter().enumerate() {
            let rates = [e.gamma_right, e.gamma_left, e.gamma_loss];
            if rates.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "emitter {j}: rates must be finite and nonnegative, got {rates:?}"
                )));
            }
            if e.total_rate() <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "emitter {j}: total decay rate must be positive"
                )));
            }
            if !(e.position.is_finite() && e.detuning.is_finite() && e.drive.norm().is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "emitter {j}: position, detuning and drive must be finite"
                )));
            }
        }
        for w in emitters.windows(2) {
            if w[1].position <= w[0].position {
                return Err(Error::InvalidParameter(format!(
                    "positions must be strictly increasing ({} then {})",
                    w[0].position, w[1].position
                )));
            }
        }
        Ok(Self {
            emitters,
            wavenumber,
        })
    }

    /// `n` identical emitters at spacing `dx` starting from the origin.
    pub fn uniform(n: usize, spacing: f64, wavenumber: f64, template: EmitterSpec) -> Result<Self> {
        let emitters = (0..n)
            .map(|j| EmitterSpec {
                position: j as f64 * spacing,
                ..template
            })
            .collect();
        Self::new(emitters, wavenumber)
    }

    pub fn emitters(&self) -> &[EmitterSpec] {
        &self.emitters
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn n_sites(&self) -> usize {
        self.emitters.len()
    }

    fn phase(&self, j: usize) -> f64 {
        self.wavenumber * self.emitters[j].position
    }
}

/// Origin of a jump operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum JumpChannel {
    /// Collective emission into right-moving guided photons.
    Right,
    /// Collective emission into left-moving guided photons.
    Left,
    /// Emission of emitter `j` into non-guided modes.
    Loss(usize),
    /// Eigenmode `m` of a symmetric collective dissipator.
    Collective(usize),
}

impl JumpChannel {
    pub fn label(&self) -> String {
        match self {
            JumpChannel::Right => "right".into(),
            JumpChannel::Left => "left".into(),
            JumpChannel::Loss(j) => format!("loss_{j}"),
            JumpChannel::Collective(m) => format!("collective_{m}"),
        }
    }

    /// True for channels that emit into the waveguide.
    pub fn is_guided(&self) -> bool {
        !matches!(self, JumpChannel::Loss(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub channel: JumpChannel,
    pub operator: Operator,
    pub rate: f64,
}

/// Per-emitter drive added in the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Drive {
    pub omega: C64,
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    n_sites: usize,
    h_sys: Operator,
    h_eff: Operator,
    jumps: Vec<Jump>,
}

impl Generator {
    /// Assembles a generator from an explicit effective Hamiltonian.
    pub fn from_parts(h_sys: Operator, h_eff: Operator, jumps: Vec<Jump>) -> Result<Self> {
        let n_sites = h_sys.n_sites();
        if h_eff.dim() != h_sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_sys.dim(),
                got: h_eff.dim(),
            });
        }
        for j in &jumps {
            if j.operator.dim() != h_sys.dim() {
                return Err(Error::DimensionMismatch {
                    expected: h_sys.dim(),
                    got: j.operator.dim(),
                });
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "jump {} has invalid rate {}",
                    j.channel.label(),
                    j.rate
                )));
            }
        }
        Ok(Self {
            n_sites,
            h_sys,
            h_eff,
            jumps,
        })
    }

    /// `H_eff = H_sys + H_coh − (i/2) Σ rate J†J`.
    pub fn from_hamiltonian(h_sys: Operator, h_coherent: &Operator, jumps: Vec<Jump>) -> Result<Self> {
        let mut h_eff = (&h_sys + h_coherent).into_matrix();
        for j in &jumps {
            let jm = j.operator.matrix();
            h_eff -= jm.adjoint() * jm * C64::new(0.0, 0.5 * j.rate);
        }
        let h_eff = Operator::from_matrix(h_eff)?;
        Self::from_parts(h_sys, h_eff, jumps)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.h_sys.dim()
    }

    pub fn h_sys(&self) -> &Operator {
        &self.h_sys
    }

    pub fn h_eff(&self) -> &Operator {
        &self.h_eff
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// `𝓛ρ`, applied without forming the superoperator.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h = self.h_eff.matrix();
        let minus_i = C64::new(0.0, -1.0);
        let mut out = (h * rho - rho * h.adjoint()) * minus_i;
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            let jm = j.operator.matrix();
            out += jm * rho * jm.adjoint() * C64::new(j.rate, 0.0);
        }
        out
    }

    /// Max entrywise deviation of `(H_eff − H_eff†)/2` from `−(i/2)Σ rate J†J`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let h = self.h_eff.matrix();
        let mut anti = (h - h.adjoint()) * C64::new(0.5, 0.0);
        for j in &self.jumps {
            let jm = j.operator.matrix();
            anti += jm.adjoint() * jm * C64::new(0.0, 0.5 * j.rate);
        }
        anti.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Dense superoperator acting on column-stacked density matrices
    /// (element `(a, b)` sits at index `a + b·d`).
    pub fn superoperator(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut s = DMatrix::zeros(d * d, d * d);
        let mut basis = DMatrix::zeros(d, d);
        for b in 0..d {
            for a in 0..d {
                basis[(a, b)] = C64::new(1.0, 0.0);
                let image = self.apply(&basis);
                basis[(a, b)] = C64::new(0.0, 0.0);
                let col = a + b * d;
                for (k, z) in image.iter().enumerate() {
                    s[(k, col)] = *z;
                }
            }
        }
        s
    }

    /// Adds `Σ_j [−Δ_j σ_j⁺σ_j⁻ + Ω_j σ_j⁺ + Ω_j* σ_j⁻]` to the Hamiltonian.
    pub fn with_drive(&self, drives: &[Drive]) -> Result<Generator> {
        if drives.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                got: drives.len(),
            });
        }
        let h_drive = drive_hamiltonian(drives)?;
        Ok(Generator {
            n_sites: self.n_sites,
            h_sys: &self.h_sys + &h_drive,
            h_eff: &self.h_eff + &h_drive,
            jumps: self.jumps.clone(),
        })
    }
}

/// Returns a copy of `generator` with per-emitter drives added.
pub fn add_drive(generator: &Generator, drives: &[Drive]) -> Result<Generator> {
    generator.with_drive(drives)
}

fn drive_hamiltonian(drives: &[Drive]) -> Result<Operator> {
    let n = drives.len();
    let mut h = DMatrix::zeros(1 << n, 1 << n);
    for (j, d) in drives.iter().enumerate() {
        let sm = site_lowering(j, n)?;
        let sm = sm.matrix();
        let np = site_excitation(j, n)?;
        h += np.matrix() * C64::new(-d.detuning, 0.0);
        h += sm.adjoint() * d.omega + sm * d.omega.conj();
    }
    Operator::hermitian(h)
}

fn system_hamiltonian(channel: &ChiralChannel) -> Result<Operator> {
    let drives: Vec<Drive> = channel
        .emitters()
        .iter()
        .map(|e| Drive {
            omega: e.drive,
            detuning: e.detuning,
        })
        .collect();
    drive_hamiltonian(&drives)
}

fn lowering_ops(n: usize) -> Result<Vec<DMatrix<C64>>> {
    (0..n).map(|j| site_lowering(j, n).map(Operator::into_matrix)).collect()
}

fn loss_jumps(channel: &ChiralChannel, sm: &[DMatrix<C64>]) -> Result<Vec<Jump>> {
    channel
        .emitters()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.gamma_loss > 0.0)
        .map(|(j, e)| {
            Ok(Jump {
                channel: JumpChannel::Loss(j),
                operator: Operator::from_matrix(sm[j].clone())?,
                rate: e.gamma_loss,
            })
        })
        .collect()
}

/// Collective jump `Σ_j √(γ_j/γ_ref) e^{∓ikx_j} σ_j⁻` with rate `γ_ref = max γ_j`.
fn collective_jump(
    channel: &ChiralChannel,
    sm: &[DMatrix<C64>],
    rates: &[f64],
    phase_sign: f64,
    label: JumpChannel,
) -> Result<Option<Jump>> {
    let gamma_ref = rates.iter().copied().fold(0.0, f64::max);
    if gamma_ref <= 0.0 {
        return Ok(None);
    }
    let d = sm[0].nrows();
    let mut op = DMatrix::zeros(d, d);
    for (j, &g) in rates.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let amp = C64::from_polar((g / gamma_ref).sqrt(), -phase_sign * channel.phase(j));
        op += &sm[j] * amp;
    }
    Ok(Some(Jump {
        channel: label,
        operator: Operator::from_matrix(op)?,
        rate: gamma_ref,
    }))
}

/// Unidirectional (right-moving) cascade.
///
/// `H_eff = H_sys − (i/2)[Σ_j (γ_j + Γ_j) σ_j⁺σ_j⁻ + 2 Σ_{j>l} √(γ_jγ_l) e^{ik(x_j−x_l)} σ_j⁺σ_l⁻]`
/// with the collective jump `Σ_j √γ_j e^{−ikx_j} σ_j⁻` and local loss jumps.
pub fn build_cascaded(channel: &ChiralChannel) -> Result<Generator> {
    if let Some((j, e)) = channel
        .emitters()
        .iter()
        .enumerate()
        .find(|(_, e)| e.gamma_left != 0.0)
    {
        return Err(Error::InvalidParameter(format!(
            "cascaded channel requires γ_L = 0, emitter {j} has {}",
            e.gamma_left
        )));
    }
    let n = channel.n_sites();
    let sm = lowering_ops(n)?;
    let h_sys = system_hamiltonian(channel)?;
    let em = channel.emitters();

    let mut decay = DMatrix::<C64>::zeros(1 << n, 1 << n);
    for j in 0..n {
        let local = em[j].gamma_right + em[j].gamma_loss;
        decay += sm[j].adjoint() * &sm[j] * C64::new(local, 0.0);
        for l in 0..j {
            let amp = 2.0 * (em[j].gamma_right * em[l].gamma_right).sqrt();
            if amp == 0.0 {
                continue;
            }
            let phase = channel.wavenumber() * (em[j].position - em[l].position);
            decay += sm[j].adjoint() * &sm[l] * C64::from_polar(amp, phase);
        }
    }
    let h_eff = Operator::from_matrix(h_sys.matrix() - decay * C64::new(0.0, 0.5))?;

    let rates: Vec<f64> = em.iter().map(|e| e.gamma_right).collect();
    let mut jumps = Vec::new();
    if let Some(j) = collective_jump(channel, &sm, &rates, 1.0, JumpChannel::Right)? {
        jumps.push(j);
    }
    jumps.extend(loss_jumps(channel, &sm)?);
    Generator::from_parts(h_sys, h_eff, jumps)
}

/// Symmetric coupling `γ_R = γ_L = γ_j`:
///
/// ```text
/// H = H_sys + Σ_{i<j} √(γ_iγ_j) sin(k|x_i−x_j|)(σ_i⁺σ_j⁻ + h.c.)
/// D = Σ_{ij} 2√(γ_iγ_j) cos(k|x_i−x_j|)(σ_i⁻ρσ_j⁺ − ½{σ_i⁺σ_j⁻, ρ})
/// ```
///
/// The dissipator's coefficient matrix is diagonalized to obtain jump
/// operators, one per nonzero eigenvalue.
pub fn build_bidirectional(channel: &ChiralChannel) -> Result<Generator> {
    let em = channel.emitters();
    for (j, e) in em.iter().enumerate() {
        let scale = e.gamma_right.abs().max(e.gamma_left.abs()).max(1.0);
        if (e.gamma_right - e.gamma_left).abs() > RATE_TOL * scale {
            return Err(Error::InvalidParameter(format!(
                "bidirectional channel requires γ_R = γ_L, emitter {j} has {} and {}",
                e.gamma_right, e.gamma_left
            )));
        }
    }
    let n = channel.n_sites();
    let d = 1usize << n;
    let sm = lowering_ops(n)?;
    let h_sys = system_hamiltonian(channel)?;
    let k = channel.wavenumber();

    let mut coupling = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut h_dd = DMatrix::<C64>::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            let g = (em[i].gamma_right * em[j].gamma_right).sqrt();
            let kd = k * (em[i].position - em[j].position).abs();
            coupling[(i, j)] = 2.0 * g * kd.cos();
            if i < j {
                let flip = sm[i].adjoint() * &sm[j];
                h_dd += (&flip + flip.adjoint()) * C64::new(g * kd.sin(), 0.0);
            }
        }
    }

    let mut h_eff = h_sys.matrix() + &h_dd;
    for i in 0..n {
        h_eff -= sm[i].adjoint() * &sm[i] * C64::new(0.0, 0.5 * em[i].gamma_loss);
        for j in 0..n {
            if coupling[(i, j)] != 0.0 {
                h_eff -= sm[i].adjoint() * &sm[j] * C64::new(0.0, 0.5 * coupling[(i, j)]);
            }
        }
    }

    let eig = SymmetricEigen::new(coupling);
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut jumps = Vec::new();
    for m in 0..n {
        let lambda = eig.eigenvalues[m];
        if lambda <= 1e-13 * largest || lambda <= 0.0 {
            continue;
        }
        let mut op = DMatrix::<C64>::zeros(d, d);
        for i in 0..n {
            op += &sm[i] * C64::new(eig.eigenvectors[(i, m)], 0.0);
        }
        jumps.push(Jump {
            channel: JumpChannel::Collective(m),
            operator: Operator::from_matrix(op)?,
            rate: lambda,
        });
    }
    jumps.extend(loss_jumps(channel, &sm)?);
    Generator::from_parts(h_sys, Operator::from_matrix(h_eff)?, jumps)
}

/// General chiral coupling, composed from a right-moving cascade, a
/// left-moving cascade and local loss.
///
/// Each cascade contributes the exchange Hamiltonian
/// `−(i/2) Σ √(γ_dγ_u)(e^{ik|x_d−x_u|} σ_d⁺σ_u⁻ − h.c.)` over downstream/upstream
/// pairs `(d, u)` and a collective jump with phases `e^{∓ikx_j}`.
pub fn build_chiral(channel: &ChiralChannel) -> Result<Generator> {
    let n = channel.n_sites();
    let d = 1usize << n;
    let sm = lowering_ops(n)?;
    let h_sys = system_hamiltonian(channel)?;
    let em = channel.emitters();
    let k = channel.wavenumber();

    let mut h_coh = DMatrix::<C64>::zeros(d, d);
    let mut exchange = |rates: &dyn Fn(usize) -> f64, downstream_of: &dyn Fn(usize, usize) -> bool| {
        for dn in 0..n {
            for up in 0..n {
                if !downstream_of(dn, up) {
                    continue;
                }
                let g = (rates(dn) * rates(up)).sqrt();
                if g == 0.0 {
                    continue;
                }
                let phase = C64::from_polar(1.0, k * (em[dn].position - em[up].position).abs());
                let hop = sm[dn].adjoint() * &sm[up] * phase;
                h_coh += (&hop - hop.adjoint()) * C64::new(0.0, -0.5 * g);
            }
        }
    };
    exchange(&|j| em[j].gamma_right, &|dn, up| dn > up);
    exchange(&|j| em[j].gamma_left, &|dn, up| dn < up);
    let h_coh = Operator::hermitian(h_coh)?;

    let right: Vec<f64> = em.iter().map(|e| e.gamma_right).collect();
    let left: Vec<f64> = em.iter().map(|e| e.gamma_left).collect();
    let mut jumps = Vec::new();
    if let Some(j) = collective_jump(channel, &sm, &right, 1.0, JumpChannel::Right)? {
        jumps.push(j);
    }
    if let Some(j) = collective_jump(channel, &sm, &left, -1.0, JumpChannel::Left)? {
        jumps.push(j);
    }
    jumps.extend(loss_jumps(channel, &sm)?);
    Generator::from_hamiltonian(h_sys, &h_coh, jumps)
}

/// Frobenius norm of the difference of two generators' superoperators.
pub fn generator_distance(a: &Generator, b: &Generator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok((a.superoperator() - b.superoperator()).norm())
}

/// Source of generators for possibly time-dependent dynamics.
pub trait GeneratorFamily: Sync {
    fn n_sites(&self) -> usize;
    fn generator_at(&self, t: f64) -> Result<Cow<'_, Generator>>;
}

impl GeneratorFamily for Generator {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn generator_at(&self, _t: f64) -> Result<Cow<'_, Generator>> {
        Ok(Cow::Borrowed(self))
    }
}

/// Time-dependent generator built on demand, e.g. from pulsed rates.
pub struct GeneratorFactory<F> {
    n_sites: usize,
    build: F,
}

impl<F> GeneratorFactory<F>
where
    F: Fn(f64) -> Result<Generator> + Sync,
{
    pub fn new(n_sites: usize, build: F) -> Self {
        Self { n_sites, build }
    }
}

impl<F> GeneratorFamily for GeneratorFactory<F>
where
    F: Fn(f64) -> Result<Generator> + Sync,
{
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn generator_at(&self, t: f64) -> Result<Cow<'_, Generator>> {
        let g = (self.build)(t)?;
        if g.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_sites,
                got: g.dim(),
            });
        }
        Ok(Cow::Owned(g))
    }
}

/// Outcome of [`reduced_generator_check`].
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ReducedCheckReport {
    /// Largest trace distance between emitter-1 reduced states over all pairs
    /// of initial states and all sample times.
    pub max_divergence: f64,
    pub t_final: f64,
    pub samples: usize,
}

/// Tests whether emitter 1's reduced dynamics is independent of emitter 2.
///
/// Emitter 1 starts in `(|g⟩ + |e⟩)/√2`, emitter 2 in each of `|g⟩`, `|e⟩`,
/// `(|g⟩ + |e⟩)/√2`. The states are propagated with the exact propagator
/// `exp(𝓛Δt)` on `samples` equal steps up to `t_final`.
pub fn reduced_generator_check(generator: &Generator, t_final: f64, samples: usize) -> Result<ReducedCheckReport> {
    if generator.n_sites() != 2 {
        return Err(Error::InvalidParameter(format!(
            "reduced-dynamics check needs exactly 2 emitters, got {}",
            generator.n_sites()
        )));
    }
    if !(t_final > 0.0) || samples == 0 {
        return Err(Error::InvalidParameter(
            "need t_final > 0 and at least one sample".into(),
        ));
    }
    let dt = t_final / samples as f64;
    let propagator = (generator.superoperator() * C64::new(dt, 0.0)).exp();

    let plus = PureState::normalized(nalgebra::DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
    ]))?;
    let g = PureState::from_labels("g")?;
    let e = PureState::from_labels("e")?;
    let first = plus.to_density()?;
    let mut states: Vec<nalgebra::DVector<C64>> = [g, e, plus]
        .iter()
        .map(|second| {
            let rho = DensityMatrix::product(&[first.clone(), second.to_density()?])?;
            Ok(vectorize(rho.matrix()))
        })
        .collect::<Result<_>>()?;

    let mut worst = 0.0f64;
    for _ in 0..samples {
        for s in states.iter_mut() {
            *s = &propagator * &*s;
        }
        let reduced: Vec<DensityMatrix> = states
            .iter()
            .map(|v| partial_trace(&DensityMatrix::from_parts(2, unvectorize(v, 4)), &[0]))
            .collect::<Result<_>>()?;
        for a in 0..reduced.len() {
            for b in a + 1..reduced.len() {
                worst = worst.max(trace_distance(reduced[a].matrix(), reduced[b].matrix()));
            }
        }
    }
    Ok(ReducedCheckReport {
        max_divergence: worst,
        t_final,
        samples,
    })
}

pub(crate) fn vectorize(m: &DMatrix<C64>) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_iterator(m.len(), m.iter().copied())
}

pub(crate) fn unvectorize(v: &nalgebra::DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_iterator(d, d, v.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cascaded_pair(gamma: f64, x2: f64) -> ChiralChannel {
        ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, gamma, 0.0, 0.0),
                EmitterSpec::new(x2, gamma, 0.0, 0.0),
            ],
            2.0 * std::f64::consts::PI,
        )
        .unwrap()
    }

    #[test]
    fn single_cascaded_emitter_is_plain_decay() {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, 1.3, 0.0, 0.0)], 1.0).unwrap();
        let g = build_cascaded(&ch).unwrap();
        let expected = Operator::excited_projector().scale(c(0.0, -0.65));
        assert!((g.h_eff().matrix() - expected.matrix()).norm() < 1e-15);
        assert_eq!(g.jumps().len(), 1);
        assert_eq!(g.jumps()[0].rate, 1.3);
    }

    #[test]
    fn cascaded_pair_matches_printed_effective_hamiltonian() {
        let gamma = 0.8;
        // gauge: positions chosen so that k·x_j ≡ 0 mod 2π
        let g = build_cascaded(&cascaded_pair(gamma, 1.0)).unwrap();
        let s1 = site_lowering(0, 2).unwrap().into_matrix();
        let s2 = site_lowering(1, 2).unwrap().into_matrix();
        let bracket = s1.adjoint() * &s1 + s2.adjoint() * &s2 + s2.adjoint() * &s1 * c(2.0, 0.0);
        let expected = bracket * c(0.0, -gamma / 2.0);
        assert!((g.h_eff().matrix() - expected).iter().all(|z| z.norm() < 1e-14));
        // jump σ₁⁻ + σ₂⁻ at rate γ
        let j = &g.jumps()[0];
        assert_eq!(j.rate, gamma);
        assert!((j.operator.matrix() - (&s1 + &s2)).norm() < 1e-14);
    }

    #[test]
    fn cascaded_rejects_left_rates() {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, 1.0, 0.1, 0.0)], 1.0).unwrap();
        assert!(build_cascaded(&ch).is_err());
    }

    #[test]
    fn bidirectional_rejects_asymmetric_rates() {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, 1.0, 0.5, 0.0)], 1.0).unwrap();
        assert!(build_bidirectional(&ch).is_err());
    }

    #[test]
    fn single_bidirectional_emitter_decays_at_twice_gamma() {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, 0.7, 0.7, 0.0)], 1.0).unwrap();
        let g = build_bidirectional(&ch).unwrap();
        let expected = Operator::excited_projector().scale(c(0.0, -0.7));
        assert!((g.h_eff().matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn bidirectional_quarter_wave_coefficients() {
        let k = 2.0 * std::f64::consts::PI;
        let gamma = 1.0;
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, gamma, gamma, 0.0),
                EmitterSpec::new(0.25, gamma, gamma, 0.0),
            ],
            k,
        )
        .unwrap();
        let g = build_bidirectional(&ch).unwrap();
        let s1 = site_lowering(0, 2).unwrap().into_matrix();
        let s2 = site_lowering(1, 2).unwrap().into_matrix();
        let h = g.h_eff().matrix();
        let hop = s1.adjoint() * &s2;
        // coherent exchange γ(σ₁⁺σ₂⁻ + h.c.), no cross dissipation
        let entry = (hop.adjoint() * h).trace();
        assert!((entry - c(gamma, 0.0)).norm() < 1e-14);
        assert_eq!(g.jumps().len(), 2);
        for j in g.jumps() {
            assert!((j.rate - 2.0 * gamma).abs() < 1e-14);
        }
    }

    #[test]
    fn generators_are_trace_preserving() {
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, 1.0, 0.3, 0.2).with_drive(c(0.4, 0.1), 0.3),
                EmitterSpec::new(0.37, 0.5, 0.2, 0.0),
                EmitterSpec::new(0.9, 0.8, 0.1, 0.05),
            ],
            2.0 * std::f64::consts::PI,
        )
        .unwrap();
        let g = build_chiral(&ch).unwrap();
        assert!(g.trace_preservation_defect() < 1e-12);
        let d = g.dim();
        let id = DMatrix::<C64>::identity(d, d) * c(1.0 / d as f64, 0.0);
        assert!(g.apply(&id).trace().norm() < 1e-14);
    }

    #[test]
    fn drive_leaves_dissipator_alone() {
        let g = build_cascaded(&cascaded_pair(1.0, 0.5)).unwrap();
        let zero = [Drive {
            omega: c(0.0, 0.0),
            detuning: 0.0,
        }; 2];
        assert_eq!(add_drive(&g, &zero).unwrap(), g);
        let driven = add_drive(
            &g,
            &[
                Drive {
                    omega: c(0.5, 0.0),
                    detuning: 0.2,
                },
                Drive {
                    omega: c(0.0, 0.3),
                    detuning: 0.0,
                },
            ],
        )
        .unwrap();
        assert_eq!(driven.jumps(), g.jumps());
        assert!(driven.trace_preservation_defect() < 1e-14);
        assert!(add_drive(&g, &zero[..1]).is_err());
    }

    #[test]
    fn reduced_check_needs_two_emitters() {
        let ch = ChiralChannel::new(vec![EmitterSpec::new(0.0, 1.0, 0.0, 0.0)], 1.0).unwrap();
        let g = build_cascaded(&ch).unwrap();
        assert!(reduced_generator_check(&g, 1.0, 10).is_err());
    }

    #[test]
    fn loss_only_emitters_are_independent() {
        let ch = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, 0.0, 0.0, 1.0),
                EmitterSpec::new(0.3, 0.0, 0.0, 0.6),
            ],
            1.0,
        )
        .unwrap();
        let g = build_chiral(&ch).unwrap();
        let report = reduced_generator_check(&g, 20.0, 100).unwrap();
        assert!(report.max_divergence < 1e-14, "{}", report.max_divergence);
    }

    #[test]
    fn channel_validation() {
        assert!(ChiralChannel::new(vec![], 1.0).is_err());
        assert!(ChiralChannel::new(
            vec![
                EmitterSpec::new(0.5, 1.0, 0.0, 0.0),
                EmitterSpec::new(0.5, 1.0, 0.0, 0.0)
            ],
            1.0
        )
        .is_err());
        assert!(ChiralChannel::new(vec![EmitterSpec::new(0.0, 0.0, 0.0, 0.0)], 1.0).is_err());
        assert!(ChiralChannel::new(vec![EmitterSpec::new(0.0, -1.0, 0.0, 2.0)], 1.0).is_err());
    }
}
