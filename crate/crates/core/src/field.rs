// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

//! Confined optical fields: longitudinal components, electric spin density,
//! evanescent fields from total internal reflection, and directional
//! emission rates of a dipole placed in a guided mode.
//!
//! Lengths are in units of the vacuum wavelength λ, so the vacuum wavenumber
//! is `k = 2π`. A mode travelling along ±z has longitudinal component
//! `E_z = ∓(i/β)(∂ₓEₓ + ∂ᵧEᵧ)` with `β = k·n_eff`; the same relation is used
//! as the divergence condition when checking a map.
//!
//! Spin densities are reported in units of `ε₀|E|²/ω`, and per-photon spin
//! in units of ħ.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

/// Finite-difference refusal threshold (wavelengths).
pub const MAX_GRID_SPACING: f64 = 0.1;

/// Column names of the CSV field-map layout.
pub const FIELD_MAP_HEADER: [&str; 8] = [
    "x", "y", "re_Ex", "im_Ex", "re_Ey", "im_Ey", "re_Ez", "im_Ez",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// +1 for forward (+z), −1 for backward.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::FieldMap(format!(
                "unknown direction {other:?}, expected forward or backward"
            ))),
        }
    }
}

/// Uniform rectangular grid, x varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub y0: f64,
    pub dy: f64,
    pub ny: usize,
}

impl Grid {
    /// Grid spanning `[x_min, x_max] × [y_min, y_max]` inclusive.
    pub fn new(x_min: f64, x_max: f64, nx: usize, y_min: f64, y_max: f64, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        let step = |lo: f64, hi: f64, n: usize| -> Result<f64> {
            if n == 1 {
                return Ok(0.0);
            }
            if hi <= lo || !(hi - lo).is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "grid range [{lo}, {hi}] is empty"
                )));
            }
            Ok((hi - lo) / (n - 1) as f64)
        };
        Ok(Self {
            x0: x_min,
            dx: step(x_min, x_max, nx)?,
            nx,
            y0: y_min,
            dy: step(y_min, y_max, ny)?,
            ny,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.dy
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn max_spacing(&self) -> f64 {
        let sx = if self.nx > 1 { self.dx } else { 0.0 };
        let sy = if self.ny > 1 { self.dy } else { 0.0 };
        sx.max(sy)
    }

    fn check_fd(&self) -> Result<()> {
        for n in [self.nx, self.ny] {
            if n == 2 {
                return Err(Error::InvalidParameter(
                    "finite differences need one or at least three points per axis".into(),
                ));
            }
        }
        let spacing = self.max_spacing();
        if spacing > MAX_GRID_SPACING {
            return Err(Error::GridTooCoarse {
                spacing,
                limit: MAX_GRID_SPACING,
            });
        }
        Ok(())
    }
}

/// Complex vector amplitudes `(Eₓ, Eᵧ, E_z)` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMap {
    pub grid: Grid,
    pub amplitudes: Vec<[C64; 3]>,
    pub wavelength_nm: f64,
    pub direction: Direction,
    /// Effective index of the mode; the propagation constant is `2π·n_eff`.
    pub n_eff: f64,
}

impl FieldMap {
    pub fn new(
        grid: Grid,
        amplitudes: Vec<[C64; 3]>,
        wavelength_nm: f64,
        direction: Direction,
    ) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: amplitudes.len(),
            });
        }
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelength {wavelength_nm} nm must be positive"
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            wavelength_nm,
            direction,
            n_eff: 1.0,
        })
    }

    pub fn with_n_eff(mut self, n_eff: f64) -> Self {
        self.n_eff = n_eff;
        self
    }

    /// Samples `f(x, y)` on `grid`.
    pub fn from_fn<F>(grid: Grid, wavelength_nm: f64, direction: Direction, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> [C64; 3],
    {
        let mut amps = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                amps.push(f(grid.x(ix), grid.y(iy)));
            }
        }
        Self::new(grid, amps, wavelength_nm, direction)
    }

    /// Propagation constant in units of 1/λ.
    pub fn propagation_constant(&self) -> f64 {
        2.0 * PI * self.n_eff
    }

    /// Angular frequency 2πc/λ in rad/s.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * 299_792_458.0 / (self.wavelength_nm * 1e-9)
    }

    /// The counter-propagating mode: complex-conjugated amplitudes.
    pub fn reversed(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|e| [e[0].conj(), e[1].conj(), e[2].conj()])
                .collect(),
            wavelength_nm: self.wavelength_nm,
            direction: self.direction.reversed(),
            n_eff: self.n_eff,
        }
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(vector_norm)
            .fold(0.0, f64::max)
    }

    fn component(&self, c: usize) -> Vec<C64> {
        self.amplitudes.iter().map(|e| e[c]).collect()
    }
}

/// Checks that `backward` is the pointwise conjugate of `forward`.
pub fn check_time_reversal_pair(forward: &FieldMap, backward: &FieldMap, tol: f64) -> Result<()> {
    if forward.grid != backward.grid {
        return Err(Error::FieldMap("forward and backward grids differ".into()));
    }
    for (i, (f, b)) in forward.amplitudes.iter().zip(&backward.amplitudes).enumerate() {
        for c in 0..3 {
            if (f[c] - b[c].conj()).norm() > tol {
                return Err(Error::FieldMap(format!(
                    "sample {i}: backward amplitude is not the conjugate of forward"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn vector_norm(e: &[C64; 3]) -> f64 {
    (e[0].norm_sqr() + e[1].norm_sqr() + e[2].norm_sqr()).sqrt()
}

fn fd_at(f: &[C64], n: usize, i: usize, h: f64) -> C64 {
    let at = |j: usize| f[j];
    if i == 0 {
        (at(0) * -3.0 + at(1) * 4.0 - at(2)) / (2.0 * h)
    } else if i == n - 1 {
        (at(n - 1) * 3.0 - at(n - 2) * 4.0 + at(n - 3)) / (2.0 * h)
    } else if i == 1 || i == n - 2 {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    } else {
        (at(i - 2) - at(i - 1) * 8.0 + at(i + 1) * 8.0 - at(i + 2)) / (12.0 * h)
    }
}

/// ∂/∂x or ∂/∂y of a gridded scalar (axis 0 = x, axis 1 = y).
fn axis_derivative(values: &[C64], grid: &Grid, axis: usize) -> Vec<C64> {
    let (n, h) = if axis == 0 {
        (grid.nx, grid.dx)
    } else {
        (grid.ny, grid.dy)
    };
    let mut out = vec![C64::new(0.0, 0.0); values.len()];
    if n == 1 {
        return out;
    }
    let mut line = vec![C64::new(0.0, 0.0); n];
    if axis == 0 {
        for iy in 0..grid.ny {
            let start = grid.index(0, iy);
            line.copy_from_slice(&values[start..start + n]);
            for ix in 0..n {
                out[start + ix] = fd_at(&line, n, ix, h);
            }
        }
    } else {
        for ix in 0..grid.nx {
            for iy in 0..n {
                line[iy] = values[grid.index(ix, iy)];
            }
            for iy in 0..n {
                out[grid.index(ix, iy)] = fd_at(&line, n, iy, h);
            }
        }
    }
    out
}

/// Transverse divergence `∂ₓEₓ + ∂ᵧEᵧ` on every grid point.
pub fn transverse_divergence(field: &FieldMap) -> Result<Vec<C64>> {
    field.grid.check_fd()?;
    let dex = axis_derivative(&field.component(0), &field.grid, 0);
    let dey = axis_derivative(&field.component(1), &field.grid, 1);
    Ok(dex.into_iter().zip(dey).map(|(a, b)| a + b).collect())
}

/// Fills `E_z` from the transverse components for a mode travelling in
/// `direction`. Boundary points use one-sided differences.
pub fn longitudinal_component(field: &FieldMap, direction: Direction) -> Result<FieldMap> {
    let div = transverse_divergence(field)?;
    let beta = field.propagation_constant();
    let factor = C64::new(0.0, -direction.sign() / beta);
    let amplitudes = field
        .amplitudes
        .iter()
        .zip(div)
        .map(|(e, d)| [e[0], e[1], factor * d])
        .collect();
    Ok(FieldMap {
        grid: field.grid.clone(),
        amplitudes,
        wavelength_nm: field.wavelength_nm,
        direction,
        n_eff: field.n_eff,
    })
}

/// Largest divergence residual `|∂ₓEₓ + ∂ᵧEᵧ ∓ iβE_z|` over points where the
/// fourth-order stencil applies, relative to the peak field amplitude.
pub fn divergence_residual(field: &FieldMap) -> Result<f64> {
    let div = transverse_divergence(field)?;
    let g = &field.grid;
    let beta = field.propagation_constant();
    let s = field.direction.sign();
    let interior = |i: usize, n: usize| n == 1 || (i >= 2 && i + 2 < n);
    let mut worst = 0.0f64;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            if !(interior(ix, g.nx) && interior(iy, g.ny)) {
                continue;
            }
            let k = g.index(ix, iy);
            let ez = field.amplitudes[k][2];
            let r = div[k] - C64::new(0.0, s * beta) * ez;
            worst = worst.max(r.norm());
        }
    }
    let peak = field.peak_amplitude();
    if peak == 0.0 {
        return Ok(0.0);
    }
    Ok(worst / peak)
}

/// `E* × E`.
fn conj_cross(e: &[C64; 3]) -> [C64; 3] {
    let a = [e[0].conj(), e[1].conj(), e[2].conj()];
    [
        a[1] * e[2] - a[2] * e[1],
        a[2] * e[0] - a[0] * e[2],
        a[0] * e[1] - a[1] * e[0],
    ]
}

/// Electric spin density `−(i/2)E*×E` at one point, in units of `ε₀|E|²/ω`.
pub fn spin_density(e: &[C64; 3]) -> [f64; 3] {
    // E*×E is purely imaginary, so −(i/2)E*×E = Im(E*×E)/2
    let w = conj_cross(e);
    [w[0].im / 2.0, w[1].im / 2.0, w[2].im / 2.0]
}

/// Spin per photon in units of ħ: `Im(E*×E)/|E|²`.
pub fn photon_spin(e: &[C64; 3]) -> [f64; 3] {
    let n2 = e[0].norm_sqr() + e[1].norm_sqr() + e[2].norm_sqr();
    if n2 == 0.0 {
        return [0.0; 3];
    }
    let w = conj_cross(e);
    [w[0].im / n2, w[1].im / n2, w[2].im / n2]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinDensityMap {
    pub grid: Grid,
    pub values: Vec<[f64; 3]>,
}

pub fn electric_spin_density(field: &FieldMap) -> SpinDensityMap {
    SpinDensityMap {
        grid: field.grid.clone(),
        values: field.amplitudes.iter().map(spin_density).collect(),
    }
}

/// Total internal reflection at an interface between media `n1 > n2`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TirParams {
    pub n1: f64,
    pub n2: f64,
    /// Angle of incidence in radians.
    pub theta: f64,
    pub wavelength_nm: f64,
}

impl TirParams {
    pub fn critical_angle(&self) -> f64 {
        (self.n2 / self.n1).asin()
    }

    /// (β, κ) in units of 1/λ.
    pub fn constants(&self) -> Result<(f64, f64)> {
        let TirParams { n1, n2, theta, .. } = *self;
        if !(n1 > n2 && n2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need n1 > n2 > 0, got n1 = {n1}, n2 = {n2}"
            )));
        }
        if !(0.0..=PI / 2.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "angle of incidence {theta} rad outside [0, π/2]"
            )));
        }
        let s = n1 * theta.sin();
        if s <= n2 {
            return Err(Error::NoTotalInternalReflection {
                theta,
                critical: self.critical_angle(),
            });
        }
        let k = 2.0 * PI;
        Ok((k * s, k * (s * s - n2 * n2).sqrt()))
    }
}

#[derive(Clone, Debug)]
pub struct TirField {
    pub map: FieldMap,
    /// Propagation constant along the interface (1/λ).
    pub beta: f64,
    /// Decay constant normal to the interface (1/λ).
    pub kappa: f64,
}

/// p-polarized evanescent field in the optically thinner medium.
///
/// The interface is the plane x = 0 with the denser medium at x > 0, so the
/// grid must lie in x ≤ 0. The field travels along +z and the amplitudes
/// follow from Gauss's law: `Eₓ = A e^{κx}`, `E_z = −i(κ/β)Eₓ`, normalized
/// to unit intensity at the interface.
pub fn tir_evanescent_field(params: &TirParams, grid: Grid) -> Result<TirField> {
    let (beta, kappa) = params.constants()?;
    let x_max = grid.x(grid.nx - 1);
    if x_max > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "evanescent region is x <= 0, grid reaches x = {x_max}"
        )));
    }
    let ratio = kappa / beta;
    let a = 1.0 / (1.0 + ratio * ratio).sqrt();
    let map = FieldMap::from_fn(grid, params.wavelength_nm, Direction::Forward, |x, _y| {
        let ex = a * (kappa * x).exp();
        [
            C64::new(ex, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, -ratio * ex),
        ]
    })?
    .with_n_eff(beta / (2.0 * PI));
    Ok(TirField { map, beta, kappa })
}

/// Spin per photon (ħ) of the evanescent TIR field: `2βκ/(β² + κ²)` along +y.
pub fn tir_photon_spin(params: &TirParams) -> Result<f64> {
    let (beta, kappa) = params.constants()?;
    Ok(2.0 * beta * kappa / (beta * beta + kappa * kappa))
}

/// Normalized complex dipole matrix element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleSpec {
    d: [C64; 3],
}

impl DipoleSpec {
    pub fn new(d: [C64; 3]) -> Result<Self> {
        let n = vector_norm(&d);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("dipole vector must be nonzero".into()));
        }
        Ok(Self {
            d: [d[0] / n, d[1] / n, d[2] / n],
        })
    }

    /// `(ê_a + i ê_b)/√2` for axes `a`, `b` in {0, 1, 2}.
    pub fn circular(a: usize, b: usize) -> Self {
        let mut d = [C64::new(0.0, 0.0); 3];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        d[a] = C64::new(h, 0.0);
        d[b] += C64::new(0.0, h);
        Self { d }
    }

    /// σ₊ transition about z: `(x̂ + iŷ)/√2`.
    pub fn sigma_plus() -> Self {
        Self::circular(0, 1)
    }

    pub fn linear(axis: usize) -> Self {
        let mut d = [C64::new(0.0, 0.0); 3];
        d[axis] = C64::new(1.0, 0.0);
        Self { d }
    }

    pub fn vector(&self) -> &[C64; 3] {
        &self.d
    }

    /// `d*·E`.
    pub fn overlap(&self, e: &[C64; 3]) -> C64 {
        self.d
            .iter()
            .zip(e)
            .map(|(d, e)| d.conj() * e)
            .sum()
    }
}

/// Directional waveguide decay rates and the loss rate to other modes.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateSet {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_loss: f64,
}

impl RateSet {
    pub fn new(gamma_plus: f64, gamma_minus: f64, gamma_loss: f64) -> Result<Self> {
        let r = Self {
            gamma_plus,
            gamma_minus,
            gamma_loss,
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.gamma_plus, self.gamma_minus, self.gamma_loss];
        if all.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "rates must be finite and nonnegative, got {all:?}"
            )));
        }
        if all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("all rates are zero".into()));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.gamma_plus + self.gamma_minus + self.gamma_loss
    }
}

/// Rates for a dipole `d` in a mode with forward amplitude `e_forward` at the
/// emitter. The backward mode is `e_forward*`; the two rates are scaled so
/// that they sum to `gamma_wg`.
pub fn directional_rates(
    dipole: &DipoleSpec,
    e_forward: &[C64; 3],
    gamma_wg: f64,
    gamma_loss: f64,
) -> Result<RateSet> {
    if vector_norm(e_forward) == 0.0 {
        return Err(Error::InvalidParameter("zero field vector".into()));
    }
    if !(gamma_wg >= 0.0 && gamma_wg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "waveguide rate {gamma_wg} must be nonnegative"
        )));
    }
    let e_backward = [e_forward[0].conj(), e_forward[1].conj(), e_forward[2].conj()];
    let plus = dipole.overlap(e_forward).norm_sqr();
    let minus = dipole.overlap(&e_backward).norm_sqr();
    let sum = plus + minus;
    if sum == 0.0 {
        return Err(Error::InvalidParameter(
            "dipole is orthogonal to both guided modes".into(),
        ));
    }
    RateSet::new(gamma_wg * plus / sum, gamma_wg * minus / sum, gamma_loss)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BetaFactors {
    pub plus: f64,
    pub minus: f64,
    pub total: f64,
}

/// `β± = γ±/(γ₊ + γ₋ + Γ)` and `β = β₊ + β₋`.
pub fn beta_factors(rates: &RateSet) -> Result<BetaFactors> {
    rates.validate()?;
    let total = rates.total();
    let plus = rates.gamma_plus / total;
    let minus = rates.gamma_minus / total;
    Ok(BetaFactors {
        plus,
        minus,
        total: plus + minus,
    })
}

/// Supported on-disk field-map formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FieldMapFormat {
    /// Metadata comment line, header row, one sample per row.
    #[default]
    Csv,
}

/// Writes `field` as CSV: a `# lambda_nm=… direction=…` line (plus
/// `n_eff=…` when it differs from 1), the header, then rows with x fastest.
pub fn write_field_map(field: &FieldMap, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "# lambda_nm={} direction={}",
        field.wavelength_nm,
        field.direction.as_str()
    ));
    if field.n_eff != 1.0 {
        out.push_str(&format!(" n_eff={}", field.n_eff));
    }
    out.push('\n');
    out.push_str(&FIELD_MAP_HEADER.join(","));
    out.push('\n');
    let g = &field.grid;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let e = &field.amplitudes[g.index(ix, iy)];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                g.x(ix),
                g.y(iy),
                e[0].re,
                e[0].im,
                e[1].re,
                e[1].im,
                e[2].re,
                e[2].im
            ));
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

struct Metadata {
    wavelength_nm: f64,
    direction: Direction,
    n_eff: f64,
}

fn parse_metadata(line: &str) -> Result<Metadata> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::FieldMap("first line must be '# lambda_nm=<float> direction=<forward|backward>'".into()))?;
    let mut wavelength = None;
    let mut direction = None;
    let mut n_eff = 1.0;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::FieldMap(format!("malformed metadata token {token:?}")))?;
        let number = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::FieldMap(format!("metadata {key}: {v:?} is not a number")))
        };
        match key {
            "lambda_nm" => wavelength = Some(number(value)?),
            "direction" => direction = Some(Direction::parse(value)?),
            "n_eff" => n_eff = number(value)?,
            other => return Err(Error::FieldMap(format!("unknown metadata key {other:?}"))),
        }
    }
    Ok(Metadata {
        wavelength_nm: wavelength
            .ok_or_else(|| Error::FieldMap("metadata is missing lambda_nm".into()))?,
        direction: direction
            .ok_or_else(|| Error::FieldMap("metadata is missing direction".into()))?,
        n_eff,
    })
}

fn uniform_axis(values: &mut Vec<f64>, name: &str) -> Result<(f64, f64, usize)> {
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup();
    let n = values.len();
    if n == 1 {
        return Ok((values[0], 0.0, 1));
    }
    let span = values[n - 1] - values[0];
    let step = span / (n - 1) as f64;
    let tol = 1e-9 * span.abs().max(1.0);
    for (i, v) in values.iter().enumerate() {
        if (v - (values[0] + i as f64 * step)).abs() > tol {
            return Err(Error::FieldMap(format!(
                "non-uniform {name} spacing near {name} = {v}"
            )));
        }
    }
    Ok((values[0], step, n))
}

/// Reads a field map written in the documented CSV layout.
pub fn load_field_map(path: &Path, format: FieldMapFormat) -> Result<FieldMap> {
    let FieldMapFormat::Csv = format;
    let text = fs::read_to_string(path)?;
    let mut body = text.as_str();
    // provenance lines written by front ends
    while body.starts_with("# params=") {
        body = body.split_once('\n').map_or("", |(_, r)| r);
    }
    let (first, rest) = body
        .split_once('\n')
        .ok_or_else(|| Error::FieldMap("file has no data".into()))?;
    let meta = parse_metadata(first.trim_end_matches('\r'))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(rest.as_bytes());
    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != FIELD_MAP_HEADER {
        let missing: Vec<&str> = FIELD_MAP_HEADER
            .iter()
            .filter(|h| !found.contains(h))
            .copied()
            .collect();
        return Err(Error::FieldMap(format!(
            "header must be {}; missing columns: {:?}",
            FIELD_MAP_HEADER.join(","),
            missing
        )));
    }

    let mut rows: Vec<[f64; 8]> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 8 {
            return Err(Error::FieldMap(format!(
                "row {}: expected 8 columns, found {}",
                line + 1,
                record.len()
            )));
        }
        let mut row = [0.0; 8];
        for (k, cell) in record.iter().enumerate() {
            row[k] = cell.parse().map_err(|_| {
                Error::FieldMap(format!("row {}: {cell:?} is not a number", line + 1))
            })?;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::FieldMap("file has no samples".into()));
    }

    let (x0, dx, nx) = uniform_axis(&mut rows.iter().map(|r| r[0]).collect(), "x")?;
    let (y0, dy, ny) = uniform_axis(&mut rows.iter().map(|r| r[1]).collect(), "y")?;
    let grid = Grid {
        x0,
        dx,
        nx,
        y0,
        dy,
        ny,
    };
    let locate = |v: f64, v0: f64, d: f64| -> usize {
        if d == 0.0 {
            0
        } else {
            ((v - v0) / d).round() as usize
        }
    };
    let mut amps: Vec<Option<[C64; 3]>> = vec![None; grid.len()];
    for r in &rows {
        let k = grid.index(locate(r[0], x0, dx), locate(r[1], y0, dy));
        if amps[k].is_some() {
            return Err(Error::FieldMap(format!(
                "duplicate sample at x = {}, y = {}",
                r[0], r[1]
            )));
        }
        amps[k] = Some([
            C64::new(r[2], r[3]),
            C64::new(r[4], r[5]),
            C64::new(r[6], r[7]),
        ]);
    }
    let amplitudes = amps
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            a.ok_or_else(|| {
                Error::FieldMap(format!(
                    "missing sample at x = {}, y = {}",
                    grid.x(k % nx),
                    grid.y(k / nx)
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldMap::new(grid, amplitudes, meta.wavelength_nm, meta.direction)?.with_n_eff(meta.n_eff))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn plane_wave_has_no_longitudinal_field() {
        let grid = Grid::new(-1.0, 1.0, 41, -1.0, 1.0, 41).unwrap();
        let map = FieldMap::from_fn(grid, 800.0, Direction::Forward, |_, _| {
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        })
        .unwrap();
        let out = longitudinal_component(&map, Direction::Forward).unwrap();
        assert!(out.amplitudes.iter().all(|e| e[2].norm() < 1e-12));
    }

    #[test]
    fn direction_flip_negates_longitudinal_field() {
        let grid = Grid::new(-2.0, 2.0, 81, -2.0, 2.0, 81).unwrap();
        let map = FieldMap::from_fn(grid, 800.0, Direction::Forward, |x, y| {
            [c((-(x * x + y * y)).exp(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        })
        .unwrap();
        let fwd = longitudinal_component(&map, Direction::Forward).unwrap();
        let bwd = longitudinal_component(&map, Direction::Backward).unwrap();
        for (f, b) in fwd.amplitudes.iter().zip(&bwd.amplitudes) {
            assert_eq!(f[2], -b[2]);
        }
    }

    #[test]
    fn coarse_grid_is_refused() {
        let grid = Grid::new(-1.0, 1.0, 11, 0.0, 0.0, 1).unwrap();
        let map = FieldMap::from_fn(grid, 800.0, Direction::Forward, |_, _| {
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        })
        .unwrap();
        let err = longitudinal_component(&map, Direction::Forward).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn circular_polarization_spin_along_z() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e0 = 2.0;
        let s = spin_density(&[c(h * e0, 0.0), c(0.0, h * e0), c(0.0, 0.0)]);
        assert!((s[2] - e0 * e0 / 2.0).abs() < 1e-14);
        assert!(s[0].abs() < 1e-15 && s[1].abs() < 1e-15);
    }

    #[test]
    fn linear_polarization_has_no_spin() {
        let s = spin_density(&[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(s, [0.0, 0.0, 0.0]);
        // any real vector times a global phase
        let phase = c(0.3f64.cos(), 0.3f64.sin());
        let s = spin_density(&[phase * 1.0, phase * 2.0, phase * -0.5]);
        assert!(s.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn tir_below_critical_angle_is_an_error() {
        let p = TirParams {
            n1: 1.45,
            n2: 1.0,
            theta: 0.5,
            wavelength_nm: 780.0,
        };
        let grid = Grid::new(-1.0, 0.0, 101, 0.0, 0.0, 1).unwrap();
        assert!(matches!(
            tir_evanescent_field(&p, grid).unwrap_err(),
            Error::NoTotalInternalReflection { .. }
        ));
    }

    #[test]
    fn tir_spin_vanishes_at_critical_angle() {
        let mut p = TirParams {
            n1: 1.45,
            n2: 1.0,
            theta: 0.0,
            wavelength_nm: 780.0,
        };
        p.theta = p.critical_angle() + 1e-9;
        assert!(tir_photon_spin(&p).unwrap() < 1e-3);
    }

    #[test]
    fn tir_grid_must_be_in_thin_medium() {
        let p = TirParams {
            n1: 1.45,
            n2: 1.0,
            theta: 1.2,
            wavelength_nm: 780.0,
        };
        let grid = Grid::new(-1.0, 0.5, 31, 0.0, 0.0, 1).unwrap();
        assert!(tir_evanescent_field(&p, grid).is_err());
    }

    #[test]
    fn tir_spin_points_along_plus_y() {
        let p = TirParams {
            n1: 1.45,
            n2: 1.0,
            theta: 1.3,
            wavelength_nm: 780.0,
        };
        let grid = Grid::new(-0.5, 0.0, 11, 0.0, 0.0, 1).unwrap();
        let tir = tir_evanescent_field(&p, grid).unwrap();
        let spin = electric_spin_density(&tir.map);
        for s in &spin.values {
            assert!(s[1] > 0.0);
            assert!(s[0].abs() < 1e-15 && s[2].abs() < 1e-15);
        }
        let at_interface = tir.map.amplitudes[tir.map.amplitudes.len() - 1];
        assert!((vector_norm(&at_interface) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fully_directional_sigma_plus() {
        let d = DipoleSpec::sigma_plus();
        let e = *d.vector();
        let r = directional_rates(&d, &e, 2.0, 0.0).unwrap();
        assert!((r.gamma_plus - 2.0).abs() < 1e-15);
        assert!(r.gamma_minus.abs() < 1e-15);
    }

    #[test]
    fn linear_dipole_is_symmetric() {
        let d = DipoleSpec::linear(0);
        let e = [c(0.3, 0.7), c(-0.2, 0.1), c(0.0, 0.9)];
        let r = directional_rates(&d, &e, 1.0, 0.5).unwrap();
        assert!((r.gamma_plus - r.gamma_minus).abs() < 1e-15);
        assert_eq!(r.gamma_loss, 0.5);
    }

    #[test]
    fn zero_field_rejected() {
        let zero = [c(0.0, 0.0); 3];
        assert!(directional_rates(&DipoleSpec::linear(0), &zero, 1.0, 0.0).is_err());
    }

    #[test]
    fn beta_factor_arithmetic() {
        let b = beta_factors(&RateSet::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((b.plus, b.minus, b.total), (1.0, 0.0, 1.0));
        let b = beta_factors(&RateSet::new(1.0, 1.0, 2.0).unwrap()).unwrap();
        assert_eq!((b.plus, b.minus, b.total), (0.25, 0.25, 0.5));
        let b = beta_factors(&RateSet::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((b.plus, b.minus, b.total), (0.5, 0.0, 0.5));
        assert!(RateSet::new(0.0, 0.0, 0.0).is_err());
        let zeros = RateSet {
            gamma_plus: 0.0,
            gamma_minus: 0.0,
            gamma_loss: 0.0,
        };
        assert!(beta_factors(&zeros).is_err());
    }

    #[test]
    fn metadata_parsing() {
        let m = parse_metadata("# lambda_nm=852.3 direction=backward").unwrap();
        assert_eq!(m.wavelength_nm, 852.3);
        assert_eq!(m.direction, Direction::Backward);
        assert!(parse_metadata("# lambda_nm=852.3").is_err());
        assert!(parse_metadata("lambda_nm=1 direction=forward").is_err());
        assert!(parse_metadata("# lambda_nm=1 direction=forward colour=red").is_err());
    }
}
