// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use chiralwg::dynamics::{
    dimer_analysis, evolve, liouvillian_spectrum, mc_trajectories, photon_flux, sample_times,
    steady_state, EvolveOptions, McOptions, RecordMode, SteadyState,
};
use chiralwg::field::{
    divergence_residual, tir_evanescent_field, tir_photon_spin, Grid, TirParams, FIELD_MAP_HEADER,
};
use chiralwg::protocols::{
    constant_rate_peak, device_report, dimer_scan, optimize_pulses, state_transfer, DimerConfig,
    PulseShape, Qubit, TransferSetup,
};
use chiralwg::scattering::{
    chain_two_port, format_db, isolation_metrics, scatter_spectrum, ChainSpec, ScatterSet,
};
use chiralwg::{DensityMatrix, PureState, C64};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::{format_complex, json_complex, json_float, Cell, Sink, Table};
use crate::scenario::*;

/// Outcome of a successful run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    /// One line for stdout.
    pub line: String,
    pub files: Vec<PathBuf>,
}

const SCATTER_COLUMNS: [&str; 11] = [
    "detuning", "re_t_plus", "im_t_plus", "re_t_minus", "im_t_minus", "re_r", "im_r", "a_plus",
    "a_minus", "beta_plus", "beta_minus",
];

fn scatter_row(delta: f64, beta_plus: f64, beta_minus: f64, s: &ScatterSet) -> Vec<Cell> {
    vec![
        delta.into(),
        s.t_plus.re.into(),
        s.t_plus.im.into(),
        s.t_minus.re.into(),
        s.t_minus.im.into(),
        s.r.re.into(),
        s.r.im.into(),
        s.a_plus.into(),
        s.a_minus.into(),
        beta_plus.into(),
        beta_minus.into(),
    ]
}

fn population_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|j| format!("pop_e_{j}")));
    cols.push("purity".into());
    cols
}

fn density_json(m: &DMatrix<C64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json_complex(m[(i, j)])).collect()))
            .collect(),
    )
}

fn populations(rho: &DensityMatrix) -> Result<Vec<f64>> {
    (0..rho.n_sites())
        .map(|j| rho.excited_population(j).map_err(CliError::from))
        .collect()
}

fn run_scatter(p: &ScatterParams, sink: &mut Sink) -> Result<String> {
    let s = scatter_spectrum(p.beta_plus, p.beta_minus, p.detuning)?;
    let mut t = Table::new("scatter", &SCATTER_COLUMNS);
    t.push(scatter_row(p.detuning, p.beta_plus, p.beta_minus, &s));
    sink.table(&t)?;
    Ok(format!(
        "scatter: t+={} t-={} r={} A+={} A-={}",
        format_complex(s.t_plus),
        format_complex(s.t_minus),
        format_complex(s.r),
        crate::output::format_float(s.a_plus),
        crate::output::format_float(s.a_minus)
    ))
}

fn run_spectrum(p: &SpectrumParams, sink: &mut Sink) -> Result<String> {
    if p.points < 2 || !(p.detuning_max > p.detuning_min) {
        return Err(CliError::Config(
            "spectrum needs points >= 2 and detuning_max > detuning_min".into(),
        ));
    }
    let mut t = Table::new("spectrum", &SCATTER_COLUMNS);
    let mut min_t = f64::INFINITY;
    for i in 0..p.points {
        let d = p.detuning_min + (p.detuning_max - p.detuning_min) * i as f64 / (p.points - 1) as f64;
        let s = scatter_spectrum(p.beta_plus, p.beta_minus, d)?;
        min_t = min_t.min(s.t_plus.norm_sqr());
        t.push(scatter_row(d, p.beta_plus, p.beta_minus, &s));
    }
    sink.table(&t)?;
    Ok(format!("spectrum: {} points, min |t+|^2={}", p.points, crate::output::format_float(min_t)))
}

fn run_chain(p: &ChainParams, sink: &mut Sink) -> Result<String> {
    let chain = ChainSpec::new(p.emitters.clone(), p.phases.clone())?;
    let tp = chain_two_port(&chain)?;
    let m = isolation_metrics(&chain)?;
    let mut t = Table::new(
        "chain",
        &[
            "re_t_forward", "im_t_forward", "re_t_backward", "im_t_backward", "re_r_left",
            "im_r_left", "re_r_right", "im_r_right", "insertion_loss_db", "isolation_db",
            "reciprocal",
        ],
    );
    t.push(vec![
        tp.t_forward.re.into(),
        tp.t_forward.im.into(),
        tp.t_backward.re.into(),
        tp.t_backward.im.into(),
        tp.r_left.re.into(),
        tp.r_left.im.into(),
        tp.r_right.re.into(),
        tp.r_right.im.into(),
        m.insertion_loss_db.into(),
        m.isolation_db.into(),
        m.is_reciprocal().into(),
    ]);
    sink.table(&t)?;
    Ok(format!(
        "chain: {} emitters, insertion loss {} dB, isolation {} dB{}",
        p.emitters.len(),
        format_db(m.insertion_loss_db),
        format_db(m.isolation_db),
        if m.is_reciprocal() { " (reciprocal)" } else { "" }
    ))
}

fn run_evolve(p: &EvolveParams, sink: &mut Sink) -> Result<String> {
    let gen = p.generator()?;
    let rho0 = PureState::from_labels(&p.initial)?.to_density()?;
    if p.samples < 2 {
        return Err(CliError::Config("evolve needs samples >= 2".into()));
    }
    let times = sample_times(p.t_final, p.samples);
    let opts = EvolveOptions {
        atol: p.atol,
        rtol: p.rtol,
        initial_step: None,
        record: RecordMode::ObservablesOnly,
    };
    let tr = evolve(&gen, &rho0, &times, &opts)?;
    let cols = population_columns(gen.n_sites());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("evolve", &cols);
    for (i, &time) in tr.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(tr.populations[i].iter().map(|&x| Cell::Num(x)));
        row.push(tr.purity[i].into());
        t.push(row);
    }
    sink.table(&t)?;
    let last = tr.populations.last().expect("at least two samples");
    Ok(format!(
        "evolve: {} samples to t={}, final populations [{}]",
        tr.times.len(),
        crate::output::format_float(p.t_final),
        last.iter().map(|&x| crate::output::format_float(x)).collect::<Vec<_>>().join(", ")
    ))
}

fn run_steady(p: &SteadyParams, sink: &mut Sink) -> Result<String> {
    let gen = p.generator()?;
    let ss = steady_state(&gen)?;
    let eig = liouvillian_spectrum(&gen, Some(p.eigenvalues))?;
    let eigenvalues: Vec<Value> = eig.iter().map(|&z| json_complex(z)).collect();
    let (doc, line) = match &ss {
        SteadyState::Unique { state, residual } => {
            let fluxes: Vec<Value> = photon_flux(&gen, state)?
                .iter()
                .map(|f| json!({ "channel": f.channel.label(), "flux": json_float(f.flux) }))
                .collect();
            let dimer = if gen.n_sites() == 2 {
                let d = dimer_analysis(state)?;
                json!({
                    "purity": d.purity,
                    "singlet_weight": d.singlet_weight,
                    "alpha": d.alpha.map(json_complex),
                    "fidelity": d.fidelity,
                })
            } else {
                Value::Null
            };
            let pops = populations(state)?;
            let doc = json!({
                "degenerate": false,
                "dimension": 1,
                "residual": residual,
                "purity": state.purity(),
                "populations": pops,
                "state": density_json(state.matrix()),
                "fluxes": fluxes,
                "dimer": dimer,
                "eigenvalues": eigenvalues,
            });
            let line = format!(
                "steady: unique, purity={}, residual={}",
                crate::output::format_float(state.purity()),
                crate::output::format_float(*residual)
            );
            (doc, line)
        }
        SteadyState::Degenerate { basis } => {
            let doc = json!({
                "degenerate": true,
                "dimension": basis.len(),
                "basis": basis.iter().map(density_json).collect::<Vec<_>>(),
                "eigenvalues": eigenvalues,
            });
            (doc, format!("steady: degenerate, {} stationary states", basis.len()))
        }
    };
    sink.report("steady", &doc)?;
    Ok(line)
}

fn run_trajectories(p: &TrajectoriesParams, sink: &mut Sink) -> Result<String> {
    let gen = p.generator()?;
    let psi = PureState::from_labels(&p.initial)?;
    if p.checkpoints == 0 {
        return Err(CliError::Config("trajectories needs checkpoints >= 1".into()));
    }
    let checkpoints: Vec<f64> = (1..=p.checkpoints)
        .map(|i| p.t_final * i as f64 / p.checkpoints as f64)
        .collect();
    let res = mc_trajectories(
        &gen,
        &psi,
        &McOptions {
            t_final: p.t_final,
            n_traj: p.n_traj,
            seed: p.seed,
            checkpoints,
        },
    )?;
    let cols = population_columns(gen.n_sites());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("trajectories", &cols);
    for (i, &time) in res.checkpoints.iter().enumerate() {
        let mut row: Vec<Cell> = vec![time.into()];
        row.extend(res.populations[i].iter().map(|&x| Cell::Num(x)));
        row.push(res.averaged[i].purity().into());
        t.push(row);
    }
    sink.table(&t)?;
    let mut jumps = Table::new("jumps", &["trajectory", "time", "channel"]);
    for (k, tr) in res.record.trajectories.iter().enumerate() {
        for j in &tr.jumps {
            jumps.push(vec![
                k.into(),
                j.time.into(),
                res.record.channels[j.channel].label().into(),
            ]);
        }
    }
    sink.table(&jumps)?;
    let total: usize = res.record.counts().iter().sum();
    Ok(format!(
        "trajectories: {} trajectories, seed {}, {} jumps",
        p.n_traj, p.seed, total
    ))
}

fn run_field_map(p: &FieldMapParams, sink: &mut Sink) -> Result<String> {
    let tir = TirParams {
        n1: p.n1,
        n2: p.n2,
        theta: p.theta,
        wavelength_nm: p.wavelength_nm,
    };
    let grid = Grid::new(p.x_min, p.x_max, p.nx, p.y_min, p.y_max, p.ny)?;
    let field = tir_evanescent_field(&tir, grid)?;
    let spin = tir_photon_spin(&tir)?;
    let residual = divergence_residual(&field.map)?;
    let map = &field.map;
    let mut t = Table::new("field_map", &FIELD_MAP_HEADER);
    let mut meta = format!(
        "lambda_nm={} direction={}",
        map.wavelength_nm,
        map.direction.as_str()
    );
    if map.n_eff != 1.0 {
        meta.push_str(&format!(" n_eff={}", map.n_eff));
    }
    t.comments.push(meta);
    let g = &map.grid;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let e = &map.amplitudes[g.index(ix, iy)];
            t.push(vec![
                g.x(ix).into(),
                g.y(iy).into(),
                e[0].re.into(),
                e[0].im.into(),
                e[1].re.into(),
                e[1].im.into(),
                e[2].re.into(),
                e[2].im.into(),
            ]);
        }
    }
    // the field map layout is CSV whatever the table format
    sink.table_csv(&t)?;
    sink.report(
        "field_summary",
        &json!({
            "photon_spin": spin,
            "beta": field.beta,
            "kappa": field.kappa,
            "divergence_residual": residual,
            "critical_angle": tir.critical_angle(),
        }),
    )?;
    Ok(format!(
        "field-map: photon spin {} hbar, divergence residual {}",
        crate::output::format_float(spin),
        crate::output::format_float(residual)
    ))
}

fn run_transfer(p: &TransferParams, sink: &mut Sink) -> Result<String> {
    let resolved = |v: Option<f64>| v.expect("filled when the scenario was parsed");
    let mut setup = TransferSetup {
        pulse: PulseShape {
            gamma_max: p.gamma_max,
            slope: resolved(p.slope),
            t_center: p.t_center,
            t_mirror: resolved(p.t_mirror),
        },
        loss: p.loss,
        t_final: resolved(p.t_final),
    };
    let mut evaluations = 0;
    if p.optimize_sweeps > 0 {
        let opt = optimize_pulses(&setup, p.optimize_sweeps)?;
        setup = opt.setup;
        evaluations = opt.evaluations;
    }
    let population = setup.population_transfer()?;
    let baseline = constant_rate_peak(p.gamma_max)?;
    if p.inputs.is_empty() {
        return Err(CliError::Config("transfer needs at least one input".into()));
    }
    let mut t = Table::new(
        "transfer",
        &["theta", "phi", "fidelity", "raw_fidelity", "phase_correction"],
    );
    let mut profile = None;
    let mut worst = f64::INFINITY;
    for &[theta, phi] in &p.inputs {
        let r = state_transfer(&Qubit::from_bloch(theta, phi), &setup)?;
        worst = worst.min(r.fidelity);
        t.push(vec![
            theta.into(),
            phi.into(),
            r.fidelity.into(),
            r.raw_fidelity.into(),
            r.phase_correction.into(),
        ]);
        profile.get_or_insert(r.profile);
    }
    sink.table(&t)?;
    let profile = profile.expect("at least one input");
    let mut pulses = Table::new("pulse", &["t", "gamma_1", "gamma_2"]);
    for i in 0..profile.times.len() {
        pulses.push(vec![
            profile.times[i].into(),
            profile.gamma_1[i].into(),
            profile.gamma_2[i].into(),
        ]);
    }
    sink.table(&pulses)?;
    sink.report(
        "transfer_summary",
        &json!({
            "pulse": setup.pulse,
            "population_transfer": population,
            "evaluations": evaluations,
            "constant_rate_peak": { "time": baseline.time, "population": baseline.population },
        }),
    )?;
    Ok(format!(
        "transfer: population {}, worst fidelity {}, constant-rate peak {}",
        crate::output::format_float(population),
        crate::output::format_float(worst),
        crate::output::format_float(baseline.population)
    ))
}

fn run_dimer_scan(p: &DimerScanParams, sink: &mut Sink) -> Result<String> {
    let base = DimerConfig {
        gamma: p.gamma,
        ratio: 0.0,
        loss: p.loss,
        omega: 0.0,
        detuning: p.detuning,
        kx: p.kx,
        phase: 0.0,
        global_phase: p.global_phase,
    };
    let scan = dimer_scan(&base, &p.omegas, &p.phases, &p.ratios)?;
    let mut t = Table::new(
        "dimer_scan",
        &["omega", "phase", "ratio", "purity", "fidelity", "flux_right", "flux_left", "degenerate"],
    );
    let mut best = (0.0f64, 0usize);
    for i in 0..scan.len() {
        let c = scan.coordinates(i);
        if c[0] != 0.0 && scan.purity[i] > best.0 {
            best = (scan.purity[i], i);
        }
        t.push(vec![
            c[0].into(),
            c[1].into(),
            c[2].into(),
            scan.purity[i].into(),
            scan.fidelity[i].into(),
            scan.flux_right[i].into(),
            scan.flux_left[i].into(),
            scan.degenerate[i].into(),
        ]);
    }
    sink.table(&t)?;
    Ok(format!(
        "dimer-scan: {} points, best driven purity {}",
        scan.len(),
        crate::output::format_float(best.0)
    ))
}

fn run_device(p: &DeviceParams, sink: &mut Sink) -> Result<String> {
    let report = device_report(&p.device)?;
    sink.report("device", &report)?;
    let results = &report["results"];
    let line = match report["device_type"].as_str() {
        Some("isolator") => format!(
            "device: isolator, insertion loss {} dB, isolation {} dB",
            results["insertion_loss_db"], results["isolation_db"]
        ),
        _ => format!("device: circulator, cyclic={}", results["cyclic"]),
    };
    Ok(line)
}

/// Runs a validated scenario and writes its artifacts.
pub fn run_scenario(s: &Scenario) -> Result<RunSummary> {
    let mut sink = Sink::new(&s.output.dir, s.output.format, s.params_value())?;
    let line = match &s.params {
        Params::Scatter(p) => run_scatter(p, &mut sink)?,
        Params::Spectrum(p) => run_spectrum(p, &mut sink)?,
        Params::Chain(p) => run_chain(p, &mut sink)?,
        Params::Evolve(p) => run_evolve(p, &mut sink)?,
        Params::Steady(p) => run_steady(p, &mut sink)?,
        Params::Trajectories(p) => run_trajectories(p, &mut sink)?,
        Params::FieldMap(p) => run_field_map(p, &mut sink)?,
        Params::Transfer(p) => run_transfer(p, &mut sink)?,
        Params::DimerScan(p) => run_dimer_scan(p, &mut sink)?,
        Params::Device(p) => run_device(p, &mut sink)?,
    };
    Ok(RunSummary {
        line,
        files: sink.written,
    })
}
