// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scattering of weak guided light on chirally coupled emitters.
//!
//! All results hold in the weakly saturated (linear) regime. Field vectors
//! for transfer matrices are ordered (right-mover, left-mover). Chain
//! amplitudes are referenced to free propagation over the same length, so an
//! empty or fully transparent chain has `t = 1`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Direction;

type C64 = Complex64;

const SINGULAR_T: f64 = 1e-6;

/// Transmission in both directions, the shared reflection amplitude, and the
/// absorbed fractions.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScatterSet {
    pub t_plus: C64,
    pub t_minus: C64,
    pub r: C64,
    pub a_plus: f64,
    pub a_minus: f64,
}

impl ScatterSet {
    fn from_amplitudes(t_plus: C64, t_minus: C64, r: C64) -> Self {
        let rr = r.norm_sqr();
        Self {
            t_plus,
            t_minus,
            r,
            a_plus: 1.0 - t_plus.norm_sqr() - rr,
            a_minus: 1.0 - t_minus.norm_sqr() - rr,
        }
    }
}

fn check_betas(beta_plus: f64, beta_minus: f64) -> Result<()> {
    let ok = beta_plus >= 0.0
        && beta_minus >= 0.0
        && beta_plus.is_finite()
        && beta_minus.is_finite()
        && beta_plus + beta_minus <= 1.0 + 1e-15;
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "need β± ≥ 0 and β₊ + β₋ ≤ 1, got β₊ = {beta_plus}, β₋ = {beta_minus}"
        )));
    }
    Ok(())
}

/// Resonant scattering: `t± = 1 − 2β±`, `r = −2√(β₊β₋)`.
pub fn scatter_on_resonance(beta_plus: f64, beta_minus: f64) -> Result<ScatterSet> {
    check_betas(beta_plus, beta_minus)?;
    let t_plus = C64::new(1.0 - 2.0 * beta_plus, 0.0);
    let t_minus = C64::new(1.0 - 2.0 * beta_minus, 0.0);
    let r = C64::new(-2.0 * (beta_plus * beta_minus).sqrt(), 0.0);
    Ok(ScatterSet::from_amplitudes(t_plus, t_minus, r))
}

/// Single-Lorentzian extension off resonance, with the detuning `delta` in
/// units of the total decay rate. Reduces to [`scatter_on_resonance`] at
/// `delta = 0`.
pub fn scatter_spectrum(beta_plus: f64, beta_minus: f64, delta: f64) -> Result<ScatterSet> {
    check_betas(beta_plus, beta_minus)?;
    if delta == 0.0 {
        return scatter_on_resonance(beta_plus, beta_minus);
    }
    if delta.is_infinite() {
        return Ok(ScatterSet::from_amplitudes(
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ));
    }
    let line = C64::new(1.0, 0.0) / C64::new(1.0, -2.0 * delta);
    let t_plus = C64::new(1.0, 0.0) - line * (2.0 * beta_plus);
    let t_minus = C64::new(1.0, 0.0) - line * (2.0 * beta_minus);
    let r = line * (-2.0 * (beta_plus * beta_minus).sqrt());
    Ok(ScatterSet::from_amplitudes(t_plus, t_minus, r))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainEmitter {
    pub beta_plus: f64,
    pub beta_minus: f64,
    /// Detuning in units of the emitter's total decay rate.
    #[serde(default)]
    pub detuning: f64,
}

impl ChainEmitter {
    pub fn new(beta_plus: f64, beta_minus: f64) -> Self {
        Self {
            beta_plus,
            beta_minus,
            detuning: 0.0,
        }
    }

    pub fn scatter(&self) -> Result<ScatterSet> {
        scatter_spectrum(self.beta_plus, self.beta_minus, self.detuning)
    }
}

/// Emitters in order along +z, with the propagation phase `k(x_{j+1} − x_j)`
/// between neighbours.
#[derive(Clone, Debug, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ChainSpec {
    pub emitters: Vec<ChainEmitter>,
    pub phases: Vec<f64>,
}

impl ChainSpec {
    pub fn new(emitters: Vec<ChainEmitter>, phases: Vec<f64>) -> Result<Self> {
        let chain = Self { emitters, phases };
        chain.validate()?;
        Ok(chain)
    }

    /// `n` copies of one emitter with a constant spacing phase.
    pub fn uniform(emitter: ChainEmitter, n: usize, phase: f64) -> Result<Self> {
        Self::new(vec![emitter; n], vec![phase; n.saturating_sub(1)])
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.emitters.len().saturating_sub(1);
        if self.phases.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "chain of {} emitters needs {expected} phases, got {}",
                self.emitters.len(),
                self.phases.len()
            )));
        }
        if let Some(p) = self.phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("phase {p} is not finite")));
        }
        for e in &self.emitters {
            check_betas(e.beta_plus, e.beta_minus)?;
            if !e.detuning.is_finite() {
                return Err(Error::InvalidParameter("detuning must be finite".into()));
            }
        }
        Ok(())
    }

    fn total_phase(&self) -> f64 {
        self.phases.iter().sum()
    }
}

/// Two-port scattering amplitudes of a chain section.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TwoPort {
    pub t_forward: C64,
    pub t_backward: C64,
    /// Reflection of light incident from the left.
    pub r_left: C64,
    /// Reflection of light incident from the right.
    pub r_right: C64,
}

impl TwoPort {
    fn identity() -> Self {
        Self {
            t_forward: C64::new(1.0, 0.0),
            t_backward: C64::new(1.0, 0.0),
            r_left: C64::new(0.0, 0.0),
            r_right: C64::new(0.0, 0.0),
        }
    }

    fn emitter(s: &ScatterSet) -> Self {
        Self {
            t_forward: s.t_plus,
            t_backward: s.t_minus,
            r_left: s.r,
            r_right: s.r,
        }
    }

    fn propagation(phase: f64) -> Self {
        let p = C64::from_polar(1.0, phase);
        Self {
            t_forward: p,
            t_backward: p,
            r_left: C64::new(0.0, 0.0),
            r_right: C64::new(0.0, 0.0),
        }
    }

    /// Redheffer star product: `self` on the left, `next` on the right.
    fn then(&self, next: &TwoPort) -> Result<Self> {
        let denom = C64::new(1.0, 0.0) - self.r_right * next.r_left;
        if denom.norm() < 1e-14 {
            return Err(Error::InvalidParameter(
                "chain contains a resonant lossless cavity; transmission is undefined".into(),
            ));
        }
        Ok(Self {
            t_forward: self.t_forward * next.t_forward / denom,
            t_backward: next.t_backward * self.t_backward / denom,
            r_left: self.r_left + self.t_forward * next.r_left * self.t_backward / denom,
            r_right: next.r_right + next.t_backward * self.r_right * next.t_forward / denom,
        })
    }

    fn rephase(mut self, total_phase: f64) -> Self {
        let p = C64::from_polar(1.0, -total_phase);
        self.t_forward *= p;
        self.t_backward *= p;
        self
    }

    pub fn transmission(&self, direction: Direction) -> C64 {
        match direction {
            Direction::Forward => self.t_forward,
            Direction::Backward => self.t_backward,
        }
    }
}

fn emitter_transfer(s: &ScatterSet) -> Matrix2<C64> {
    let inv = C64::new(1.0, 0.0) / s.t_minus;
    Matrix2::new(
        (s.t_plus * s.t_minus - s.r * s.r) * inv,
        s.r * inv,
        -s.r * inv,
        inv,
    )
}

/// Chain amplitudes by multiplying 2×2 transfer matrices. Fails when an
/// emitter has a (near) vanishing backward transmission.
pub fn chain_two_port_transfer(chain: &ChainSpec) -> Result<TwoPort> {
    chain.validate()?;
    let mut m = Matrix2::<C64>::identity();
    // det of an emitter's matrix is t₊/t₋ and propagation has unit
    // determinant; the product avoids cancellation in opaque chains
    let mut det = C64::new(1.0, 0.0);
    for (j, e) in chain.emitters.iter().enumerate() {
        let s = e.scatter()?;
        if s.t_minus.norm() < SINGULAR_T {
            return Err(Error::InvalidParameter(format!(
                "emitter {j} has a singular transfer matrix (t₋ = {})",
                s.t_minus
            )));
        }
        if j > 0 {
            let p = C64::from_polar(1.0, chain.phases[j - 1]);
            m = Matrix2::new(p, C64::new(0.0, 0.0), C64::new(0.0, 0.0), p.conj()) * m;
        }
        m = emitter_transfer(&s) * m;
        det *= s.t_plus / s.t_minus;
    }
    let m22 = m[(1, 1)];
    let two_port = TwoPort {
        t_forward: det / m22,
        t_backward: C64::new(1.0, 0.0) / m22,
        r_left: -m[(1, 0)] / m22,
        r_right: m[(0, 1)] / m22,
    };
    Ok(two_port.rephase(chain.total_phase()))
}

/// Chain amplitudes by cascading scattering matrices (Redheffer star
/// product). Valid for every emitter, including perfect absorbers.
pub fn chain_two_port_cascade(chain: &ChainSpec) -> Result<TwoPort> {
    chain.validate()?;
    let mut acc = TwoPort::identity();
    for (j, e) in chain.emitters.iter().enumerate() {
        if j > 0 {
            acc = acc.then(&TwoPort::propagation(chain.phases[j - 1]))?;
        }
        acc = acc.then(&TwoPort::emitter(&e.scatter()?))?;
    }
    Ok(acc.rephase(chain.total_phase()))
}

/// Transfer-matrix composition with the scattering-matrix cascade as the
/// authority whenever an emitter blocks backward transmission.
pub fn chain_two_port(chain: &ChainSpec) -> Result<TwoPort> {
    let singular = chain
        .emitters
        .iter()
        .map(|e| e.scatter().map(|s| s.t_minus.norm() < SINGULAR_T))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .any(|s| s);
    if singular {
        chain_two_port_cascade(chain)
    } else {
        chain_two_port_transfer(chain)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Transmission {
    pub amplitude: C64,
    pub intensity: f64,
}

pub fn chain_transmission(chain: &ChainSpec, direction: Direction) -> Result<Transmission> {
    let amplitude = chain_two_port(chain)?.transmission(direction);
    Ok(Transmission {
        amplitude,
        intensity: amplitude.norm_sqr(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IsolationMetrics {
    pub insertion_loss_db: f64,
    /// `f64::INFINITY` when the blocked direction transmits nothing.
    pub isolation_db: f64,
    pub pass_direction: Direction,
    pub forward_intensity: f64,
    pub backward_intensity: f64,
}

impl IsolationMetrics {
    pub fn is_reciprocal(&self) -> bool {
        self.isolation_db.abs() < 1e-9
    }
}

/// Formats a decibel value, writing `inf` for unbounded isolation.
pub fn format_db(db: f64) -> String {
    if db.is_infinite() {
        if db > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{db}")
    }
}

pub fn isolation_metrics(chain: &ChainSpec) -> Result<IsolationMetrics> {
    let tp = chain_two_port(chain)?;
    let fwd = tp.t_forward.norm_sqr();
    let bwd = tp.t_backward.norm_sqr();
    let (pass_direction, pass, block) = if fwd >= bwd {
        (Direction::Forward, fwd, bwd)
    } else {
        (Direction::Backward, bwd, fwd)
    };
    let insertion_loss_db = -10.0 * pass.log10();
    let isolation_db = if pass == 0.0 {
        0.0
    } else if block == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (pass / block).log10()
    };
    Ok(IsolationMetrics {
        insertion_loss_db: if insertion_loss_db == 0.0 { 0.0 } else { insertion_loss_db },
        isolation_db,
        pass_direction,
        forward_intensity: fwd,
        backward_intensity: bwd,
    })
}

/// Beam splitter with power reflectivity `r`: `[[√(1−r), i√r], [i√r, √(1−r)]]`.
pub fn beamsplitter(reflectivity: f64) -> Result<Matrix2<C64>> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(Error::InvalidParameter(format!(
            "beam-splitter reflectivity {reflectivity} outside [0, 1]"
        )));
    }
    let t = C64::new((1.0 - reflectivity).sqrt(), 0.0);
    let r = C64::new(0.0, reflectivity.sqrt());
    Ok(Matrix2::new(t, r, r, t))
}

/// Four-port Mach–Zehnder with a direction-dependent element in arm `a`.
///
/// Ports: 1 = left a, 2 = right a, 3 = left b, 4 = right b (index = port − 1).
/// `S[(out, in)]` is the amplitude from port `in` to port `out`.
pub fn circulator_from_arm(arm_forward: C64, arm_backward: C64, reflectivity: f64) -> Result<Matrix4<C64>> {
    let bs = beamsplitter(reflectivity)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let m_fwd = bs * Matrix2::new(arm_forward, zero, zero, one) * bs;
    let m_bwd = bs.transpose() * Matrix2::new(arm_backward, zero, zero, one) * bs.transpose();
    let left = [0usize, 2];
    let right = [1usize, 3];
    let mut s = Matrix4::<C64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            s[(right[i], left[j])] = m_fwd[(i, j)];
            s[(left[i], right[j])] = m_bwd[(i, j)];
        }
    }
    Ok(s)
}

/// Circulator from non-reciprocal phases of a lossless arm element.
pub fn circulator_smatrix(phi_forward: f64, phi_backward: f64, reflectivity: f64) -> Result<Matrix4<C64>> {
    circulator_from_arm(
        C64::from_polar(1.0, phi_forward),
        C64::from_polar(1.0, phi_backward),
        reflectivity,
    )
}

/// Circulator whose arm holds a single emitter with the given couplings.
pub fn circulator_with_emitter(emitter: &ChainEmitter, reflectivity: f64) -> Result<Matrix4<C64>> {
    let s = emitter.scatter()?;
    circulator_from_arm(s.t_plus, s.t_minus, reflectivity)
}

/// `max |(S†S − I)_ij|`.
pub fn unitarity_deficit(s: &Matrix4<C64>) -> f64 {
    let d = s.adjoint() * s - Matrix4::identity();
    d.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// For every input port (1-based), the most probable output port and its
/// probability.
pub fn routing_table(s: &Matrix4<C64>) -> Vec<(usize, usize, f64)> {
    (0..4)
        .map(|input| {
            let (out, p) = (0..4)
                .map(|o| (o, s[(o, input)].norm_sqr()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            (input + 1, out + 1, p)
        })
        .collect()
}
