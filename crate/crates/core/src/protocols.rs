// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Protocol-level simulations: cascaded state transfer with shaped pulses,
//! driven-dimer scans and device reports.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dynamics::{
    dimer_analysis, evolve, photon_flux, propagate_exact, sample_times, steady_state,
    EvolveOptions, RecordMode, SteadyState,
};
use crate::error::{Error, Result};
use crate::master::{
    build_cascaded, build_chiral, ChiralChannel, EmitterSpec, Generator, GeneratorFactory,
    JumpChannel,
};
use crate::operators::{partial_trace, DensityMatrix, PureState, C64};
use crate::scattering::{
    chain_two_port, circulator_smatrix, circulator_with_emitter, isolation_metrics,
    routing_table, unitarity_deficit, ChainEmitter, ChainSpec,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section_max<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Qubit amplitudes `c_g|g⟩ + c_e|e⟩`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Qubit {
    pub c_g: C64,
    pub c_e: C64,
}

impl Qubit {
    pub fn new(c_g: C64, c_e: C64) -> Result<Self> {
        let norm = c_g.norm_sqr() + c_e.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "qubit amplitudes have norm² {norm}, expected 1"
            )));
        }
        Ok(Self { c_g, c_e })
    }

    /// Bloch-sphere parametrization `cos(θ/2)|g⟩ + e^{iφ} sin(θ/2)|e⟩`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            c_g: C64::new((theta / 2.0).cos(), 0.0),
            c_e: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    fn state(&self) -> PureState {
        PureState::normalized(DVector::from_vec(vec![self.c_g, self.c_e]))
            .expect("validated amplitudes")
    }
}

/// Logistic pulse pair: the emitter's rate switches on as
/// `γ₁(t) = γ_max / (1 + e^{−s(t − t_c)})`, the absorber follows the mirror
/// image `γ₂(t) = γ₁(2t_m − t)`.
///
/// For `s = γ_max` and `t_m = t_c` the emitted photon has the time-symmetric
/// sech envelope that the mirrored absorber captures completely.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseShape {
    pub gamma_max: f64,
    pub slope: f64,
    pub t_center: f64,
    pub t_mirror: f64,
}

impl PulseShape {
    pub fn ideal(gamma_max: f64, t_center: f64) -> Self {
        Self {
            gamma_max,
            slope: gamma_max,
            t_center,
            t_mirror: t_center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_max > 0.0 && self.gamma_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse gamma_max must be positive, got {}",
                self.gamma_max
            )));
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse slope must be positive, got {}",
                self.slope
            )));
        }
        if !(self.t_center.is_finite() && self.t_mirror.is_finite()) {
            return Err(Error::InvalidParameter("pulse times must be finite".into()));
        }
        Ok(())
    }

    pub fn emitter_rate(&self, t: f64) -> f64 {
        self.gamma_max / (1.0 + (-self.slope * (t - self.t_center)).exp())
    }

    pub fn absorber_rate(&self, t: f64) -> f64 {
        self.emitter_rate(2.0 * self.t_mirror - t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransferSetup {
    pub pulse: PulseShape,
    /// Loss rate Γ of both emitters.
    pub loss: f64,
    pub t_final: f64,
}

impl TransferSetup {
    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        if !(self.loss >= 0.0 && self.loss.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "loss must be nonnegative, got {}",
                self.loss
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be positive".into()));
        }
        Ok(())
    }

    fn generator_at(&self, t: f64) -> Result<Generator> {
        // keep the channel valid where a logistic tail underflows to zero
        let floor = f64::MIN_POSITIVE;
        let g1 = self.pulse.emitter_rate(t).max(floor);
        let g2 = self.pulse.absorber_rate(t).max(floor);
        let channel = ChiralChannel::new(
            vec![
                EmitterSpec::new(0.0, g1, 0.0, self.loss),
                EmitterSpec::new(1.0, g2, 0.0, self.loss),
            ],
            0.0,
        )?;
        build_cascaded(&channel)
    }

    fn run(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        let family = GeneratorFactory::new(2, |t| self.generator_at(t));
        let opts = EvolveOptions {
            initial_step: Some(0.01 / self.pulse.gamma_max),
            ..EvolveOptions::default()
        };
        let mut traj = evolve(&family, rho0, &[self.t_final], &opts)?;
        Ok(traj.states.pop().expect("one sample"))
    }

    /// Excitation found on emitter 2 after starting from `|e₁g₂⟩`.
    pub fn population_transfer(&self) -> Result<f64> {
        self.validate()?;
        let rho0 = PureState::from_labels("eg")?.to_density()?;
        self.run(&rho0)?.excited_population(1)
    }

    /// Phase imprinted on emitter 2's coherence by the transfer, measured
    /// with the input `(|g⟩ + |e⟩)/√2`.
    pub fn calibrate_phase(&self) -> Result<f64> {
        self.validate()?;
        let plus = Qubit::from_bloch(std::f64::consts::FRAC_PI_2, 0.0);
        let rho0 = input_state(&plus)?;
        let out = partial_trace(&self.run(&rho0)?, &[1])?;
        let coherence = out.matrix()[(1, 0)];
        Ok(if coherence.norm() < 1e-9 {
            0.0
        } else {
            coherence.arg()
        })
    }
}

fn input_state(q: &Qubit) -> Result<DensityMatrix> {
    PureState::product(&[q.state(), PureState::from_labels("g")?])?.to_density()
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PulseProfile {
    pub times: Vec<f64>,
    pub gamma_1: Vec<f64>,
    pub gamma_2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TransferResult {
    pub input: Qubit,
    /// Overlap with `|g₁⟩(c_g|g₂⟩ + c_e|e₂⟩)` after the phase correction.
    pub fidelity: f64,
    /// Same overlap without the correction.
    pub raw_fidelity: f64,
    /// Local phase removed from emitter 2's excited state.
    pub phase_correction: f64,
    pub profile: PulseProfile,
}

/// Transfers `input` from emitter 1 to emitter 2 through the cascaded
/// channel.
///
/// The transfer writes a fixed phase onto emitter 2's excited amplitude.
/// It is calibrated once per pulse setup and undone with a local rotation
/// `diag(1, e^{−iθ})` on emitter 2 before the fidelity is taken.
pub fn state_transfer(input: &Qubit, setup: &TransferSetup) -> Result<TransferResult> {
    setup.validate()?;
    let input = Qubit::new(input.c_g, input.c_e)?;
    let theta = setup.calibrate_phase()?;
    let rho = setup.run(&input_state(&input)?)?;

    let target = PureState::product(&[PureState::from_labels("g")?, input.state()])?;
    let raw_fidelity = rho.fidelity_to_pure(&target)?;

    let mut u = DMatrix::<C64>::identity(4, 4);
    let rot = C64::from_polar(1.0, -theta);
    u[(1, 1)] = rot;
    u[(3, 3)] = rot;
    let corrected = DensityMatrix::from_parts(2, &u * rho.matrix() * u.adjoint());
    let fidelity = corrected.fidelity_to_pure(&target)?;

    let times = sample_times(setup.t_final, 201);
    let profile = PulseProfile {
        gamma_1: times.iter().map(|&t| setup.pulse.emitter_rate(t)).collect(),
        gamma_2: times.iter().map(|&t| setup.pulse.absorber_rate(t)).collect(),
        times,
    };
    Ok(TransferResult {
        input,
        fidelity: fidelity.clamp(0.0, 1.0),
        raw_fidelity: raw_fidelity.clamp(0.0, 1.0),
        phase_correction: theta,
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct OptimizedPulse {
    pub setup: TransferSetup,
    pub population_transfer: f64,
    pub evaluations: usize,
}

/// Coordinate descent on the pulse slope and mirror time, each line search
/// a golden-section maximization of the population transfer. Every sweep
/// ends with a line search along the sweep's net displacement, which
/// follows the correlated valley between the two parameters.
pub fn optimize_pulses(start: &TransferSetup, sweeps: usize) -> Result<OptimizedPulse> {
    start.validate()?;
    let gmax = start.pulse.gamma_max;
    let min_slope = 0.05 * gmax;
    let mut setup = *start;
    let mut evaluations = 1usize;
    let mut best = setup.population_transfer()?;
    let mut width = [0.8 * gmax, 3.0 / gmax];

    let with = |base: &TransferSetup, slope: f64, mirror: f64| {
        let mut trial = *base;
        trial.pulse.slope = slope.max(min_slope);
        trial.pulse.t_mirror = mirror;
        trial
    };

    for _ in 0..sweeps.max(1) {
        let before = (setup.pulse.slope, setup.pulse.t_mirror);
        for axis in 0..2 {
            let centre = if axis == 0 { setup.pulse.slope } else { setup.pulse.t_mirror };
            let lo = if axis == 0 { (centre - width[0]).max(min_slope) } else { centre - width[1] };
            let hi = centre + width[axis];
            let (x, f) = golden_section_max(
                |x| {
                    evaluations += 1;
                    let trial = if axis == 0 {
                        with(&setup, x, setup.pulse.t_mirror)
                    } else {
                        with(&setup, setup.pulse.slope, x)
                    };
                    trial.population_transfer()
                },
                lo,
                hi,
                1e-3 * width[axis],
            )?;
            if f > best {
                best = f;
                setup = if axis == 0 {
                    with(&setup, x, setup.pulse.t_mirror)
                } else {
                    with(&setup, setup.pulse.slope, x)
                };
            }
        }

        let step = (setup.pulse.slope - before.0, setup.pulse.t_mirror - before.1);
        if step.0 != 0.0 || step.1 != 0.0 {
            let base = setup;
            let (lambda, f) = golden_section_max(
                |l| {
                    evaluations += 1;
                    with(&base, base.pulse.slope + l * step.0, base.pulse.t_mirror + l * step.1)
                        .population_transfer()
                },
                -1.0,
                4.0,
                1e-3,
            )?;
            if f > best {
                best = f;
                setup = with(&base, base.pulse.slope + lambda * step.0, base.pulse.t_mirror + lambda * step.1);
            }
        }
        width[0] *= 0.5;
        width[1] *= 0.5;
    }
    Ok(OptimizedPulse {
        setup,
        population_transfer: best,
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CascadePeak {
    pub time: f64,
    pub population: f64,
}

/// Peak excitation of emitter 2 for constant equal rates `γ`, starting
/// from `|e₁g₂⟩`.
pub fn constant_rate_peak(gamma: f64) -> Result<CascadePeak> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let channel = ChiralChannel::new(
        vec![
            EmitterSpec::new(0.0, gamma, 0.0, 0.0),
            EmitterSpec::new(1.0, gamma, 0.0, 0.0),
        ],
        0.0,
    )?;
    let generator = build_cascaded(&channel)?;
    let rho0 = PureState::from_labels("eg")?.to_density()?;
    let times = sample_times(10.0 / gamma, 401);
    let opts = EvolveOptions {
        record: RecordMode::ObservablesOnly,
        ..EvolveOptions::default()
    };
    let traj = evolve(&generator, &rho0, &times, &opts)?;
    let (i, _) = traj
        .populations
        .iter()
        .enumerate()
        .max_by(|a, b| a.1[1].total_cmp(&b.1[1]))
        .expect("nonempty");
    let lo = times[i.saturating_sub(1)];
    let hi = times[(i + 1).min(times.len() - 1)];
    let (time, population) = golden_section_max(
        |t| propagate_exact(&generator, &rho0, t)?.excited_population(1),
        lo,
        hi,
        1e-9 / gamma,
    )?;
    Ok(CascadePeak { time, population })
}

/// One driven emitter pair on a channel.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DimerConfig {
    /// Right-moving rate γ_R of each emitter.
    pub gamma: f64,
    /// β₋/β₊, i.e. γ_L/γ_R.
    pub ratio: f64,
    /// Loss rate Γ of each emitter.
    pub loss: f64,
    /// Rabi amplitude |Ω| of both drives.
    pub omega: f64,
    /// Detuning of emitter 1; emitter 2 gets the opposite sign.
    pub detuning: f64,
    /// Propagation phase `k(x₂ − x₁)`.
    pub kx: f64,
    /// Relative drive phase of emitter 2.
    pub phase: f64,
    /// Phase applied to both drives.
    pub global_phase: f64,
}

impl DimerConfig {
    pub fn cascaded(omega: f64, kx: f64, phase: f64) -> Self {
        Self {
            gamma: 1.0,
            ratio: 0.0,
            loss: 0.0,
            omega,
            detuning: 0.0,
            kx,
            phase,
            global_phase: 0.0,
        }
    }

    pub fn generator(&self) -> Result<Generator> {
        if !(self.ratio >= 0.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ratio must be nonnegative, got {}",
                self.ratio
            )));
        }
        let e1 = EmitterSpec::new(0.0, self.gamma, self.gamma * self.ratio, self.loss)
            .with_drive(C64::from_polar(self.omega, self.global_phase), self.detuning);
        let e2 = EmitterSpec::new(1.0, self.gamma, self.gamma * self.ratio, self.loss).with_drive(
            C64::from_polar(self.omega, self.global_phase + self.phase),
            -self.detuning,
        );
        build_chiral(&ChiralChannel::new(vec![e1, e2], self.kx)?)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DimerPoint {
    pub purity: f64,
    pub fidelity: f64,
    pub singlet_weight: f64,
    pub alpha: Option<C64>,
    pub flux_right: f64,
    pub flux_left: f64,
    pub flux_loss: f64,
    pub residual: f64,
    /// The generator had several stationary states; the reported one is
    /// reached from the ground state.
    pub degenerate: bool,
}

/// Removes the right-moving propagation phase: emitter 2's excited
/// amplitude picks up `e^{−ik(x₂−x₁)}`.
fn gauged(rho: &DensityMatrix, kx: f64) -> DensityMatrix {
    let mut u = DMatrix::<C64>::identity(4, 4);
    let phase = C64::from_polar(1.0, -kx);
    u[(1, 1)] = phase;
    u[(3, 3)] = phase;
    DensityMatrix::from_parts(2, &u * rho.matrix() * u.adjoint())
}

/// Steady state of a driven pair and its dimer diagnostics.
///
/// The dimer fit is taken in the frame where the propagation phase between
/// the emitters is gauged away; purity and fluxes are frame independent.
pub fn dimer_point(config: &DimerConfig) -> Result<DimerPoint> {
    let generator = config.generator()?;
    let (rho, residual, degenerate) = match steady_state(&generator)? {
        SteadyState::Unique { state, residual } => (state, residual, false),
        SteadyState::Degenerate { .. } => {
            let ground = PureState::ground(2)?.to_density()?;
            let drift = generator.apply(ground.matrix()).norm();
            let rho = if drift < 1e-12 {
                ground
            } else {
                let t_long = 200.0 / (config.gamma * (1.0 + config.ratio) + config.loss);
                propagate_exact(&generator, &ground, t_long)?
            };
            let residual = generator.apply(rho.matrix()).norm();
            (rho, residual, true)
        }
    };
    let report = dimer_analysis(&gauged(&rho, config.kx))?;
    let mut flux_right = 0.0;
    let mut flux_left = 0.0;
    let mut flux_loss = 0.0;
    for f in photon_flux(&generator, &rho)? {
        match f.channel {
            JumpChannel::Right => flux_right += f.flux,
            JumpChannel::Left => flux_left += f.flux,
            JumpChannel::Loss(_) => flux_loss += f.flux,
            JumpChannel::Collective(_) => flux_right += f.flux,
        }
    }
    Ok(DimerPoint {
        purity: report.purity,
        fidelity: report.fidelity,
        singlet_weight: report.singlet_weight,
        alpha: report.alpha,
        flux_right,
        flux_left,
        flux_loss,
        residual,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MatchedDrive {
    pub phase: f64,
    pub point: DimerPoint,
    /// `(phase, purity)` pairs of the coarse sweep.
    pub sweep: Vec<(f64, f64)>,
}

/// Finds the relative drive phase that maximizes steady-state purity: a
/// coarse sweep over `[0, 2π)` followed by golden-section refinement.
pub fn matched_drive(base: &DimerConfig, sweep_points: usize) -> Result<MatchedDrive> {
    if sweep_points < 3 {
        return Err(Error::InvalidParameter(
            "phase sweep needs at least 3 points".into(),
        ));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let step = two_pi / sweep_points as f64;
    let sweep: Vec<(f64, f64)> = (0..sweep_points)
        .into_par_iter()
        .map(|i| {
            let phase = i as f64 * step;
            let p = dimer_point(&DimerConfig { phase, ..*base })?;
            Ok((phase, p.purity))
        })
        .collect::<Result<_>>()?;
    let (best_phase, _) = sweep
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty sweep");
    let (phase, _) = golden_section_max(
        |phase| Ok(dimer_point(&DimerConfig { phase, ..*base })?.purity),
        best_phase - step,
        best_phase + step,
        1e-10,
    )?;
    let phase = phase.rem_euclid(two_pi);
    let point = dimer_point(&DimerConfig { phase, ..*base })?;
    Ok(MatchedDrive {
        phase,
        point,
        sweep,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Scalar fields over a rectangular grid, flattened with the last axis
/// fastest.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ScanResult {
    pub axes: Vec<Axis>,
    pub purity: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub flux_right: Vec<f64>,
    pub flux_left: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl ScanResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.purity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.purity.is_empty()
    }

    /// Grid coordinates of flat index `i`.
    pub fn coordinates(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.values.len();
            out[k] = axis.values[i % n];
            i /= n;
        }
        out
    }
}

/// Steady-state purity and dimer fidelity over drive amplitude × relative
/// phase × β₋/β₊ grids. Other parameters come from `base`.
pub fn dimer_scan(
    base: &DimerConfig,
    amplitudes: &[f64],
    phases: &[f64],
    ratios: &[f64],
) -> Result<ScanResult> {
    if amplitudes.is_empty() || phases.is_empty() || ratios.is_empty() {
        return Err(Error::InvalidParameter("scan grids must be nonempty".into()));
    }
    let n = amplitudes.len() * phases.len() * ratios.len();
    let points: Vec<DimerPoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = i % ratios.len();
            let p = (i / ratios.len()) % phases.len();
            let a = i / (ratios.len() * phases.len());
            dimer_point(&DimerConfig {
                omega: amplitudes[a],
                phase: phases[p],
                ratio: ratios[r],
                ..*base
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScanResult {
        axes: vec![
            Axis {
                name: "omega".into(),
                values: amplitudes.to_vec(),
            },
            Axis {
                name: "phase".into(),
                values: phases.to_vec(),
            },
            Axis {
                name: "ratio".into(),
                values: ratios.to_vec(),
            },
        ],
        purity: points.iter().map(|p| p.purity).collect(),
        fidelity: points.iter().map(|p| p.fidelity).collect(),
        flux_right: points.iter().map(|p| p.flux_right).collect(),
        flux_left: points.iter().map(|p| p.flux_left).collect(),
        degenerate: points.iter().map(|p| p.degenerate).collect(),
    })
}

/// Non-reciprocal device to be characterized.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "device_type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DeviceSpec {
    Isolator {
        emitters: Vec<ChainEmitter>,
        #[serde(default)]
        phases: Vec<f64>,
    },
    Circulator {
        reflectivity: f64,
        /// Arm holding an emitter; overrides the explicit arm phases.
        #[serde(default)]
        emitter: Option<ChainEmitter>,
        #[serde(default = "default_phi_forward")]
        phi_forward: f64,
        #[serde(default)]
        phi_backward: f64,
    },
}

fn default_phi_forward() -> f64 {
    std::f64::consts::PI
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn db_json(db: f64) -> Value {
    if db.is_infinite() {
        Value::String(if db > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        json!(db)
    }
}

/// JSON report with keys `schema_version`, `device_type`, `inputs`,
/// `results` and `diagnostics`.
pub fn device_report(spec: &DeviceSpec) -> Result<Value> {
    let inputs = serde_json::to_value(spec)
        .map_err(|e| Error::InvalidParameter(format!("device spec not serializable: {e}")))?;
    match spec {
        DeviceSpec::Isolator { emitters, phases } => {
            let chain = ChainSpec::new(emitters.clone(), phases.clone())?;
            let tp = chain_two_port(&chain)?;
            let m = isolation_metrics(&chain)?;
            Ok(json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "device_type": "isolator",
                "inputs": inputs,
                "results": {
                    "t_forward": complex_json(tp.t_forward),
                    "t_backward": complex_json(tp.t_backward),
                    "forward_intensity": m.forward_intensity,
                    "backward_intensity": m.backward_intensity,
                    "insertion_loss_db": db_json(m.insertion_loss_db),
                    "isolation_db": db_json(m.isolation_db),
                    "pass_direction": m.pass_direction.as_str(),
                    "reciprocal": m.is_reciprocal(),
                },
                "diagnostics": {
                    "n_emitters": emitters.len(),
                    "r_left": complex_json(tp.r_left),
                    "r_right": complex_json(tp.r_right),
                },
            }))
        }
        DeviceSpec::Circulator {
            reflectivity,
            emitter,
            phi_forward,
            phi_backward,
        } => {
            let s = match emitter {
                Some(e) => circulator_with_emitter(e, *reflectivity)?,
                None => circulator_smatrix(*phi_forward, *phi_backward, *reflectivity)?,
            };
            let routing = routing_table(&s);
            let cyclic = routing
                .iter()
                .all(|&(i, o, p)| o == i % 4 + 1 && (p - 1.0).abs() < 1e-12);
            let smatrix: Vec<Value> = (0..4)
                .map(|r| Value::Array((0..4).map(|c| complex_json(s[(r, c)])).collect()))
                .collect();
            Ok(json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "device_type": "circulator",
                "inputs": inputs,
                "results": {
                    "smatrix": smatrix,
                    "routing": routing
                        .iter()
                        .map(|&(i, o, p)| json!({"input": i, "output": o, "probability": p}))
                        .collect::<Vec<_>>(),
                    "cyclic": cyclic,
                },
                "diagnostics": {
                    "unitarity_deficit": unitarity_deficit(&s),
                },
            }))
        }
    }
}
