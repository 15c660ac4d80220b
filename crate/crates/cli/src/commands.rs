use std::f64::consts::TAU;

use ltr_core::design::*;
use ltr_core::gimbal::*;
use ltr_core::numerics::{svd_values, Tolerances};
use ltr_core::reduction::*;
use ltr_core::robustness::*;
use ltr_core::sim::*;
use ltr_core::systems::*;
use ltr_core::StateSpace;
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{same_rho, ProjectConfig};
use crate::error::CliError;
use crate::store::*;

/// Pipeline stages in their natural order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Model,
    Identify,
    Design,
    Analyze,
    Reduce,
    Discretize,
    Simulate,
    Sweep,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Model => "model",
            Command::Identify => "identify",
            Command::Design => "design",
            Command::Analyze => "analyze",
            Command::Reduce => "reduce",
            Command::Discretize => "discretize",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

/// Runs one command and returns a one-line summary for the terminal.
pub fn run_command(cmd: Command, cfg: &ProjectConfig) -> Result<String, CliError> {
    let mut out = Output::new(cmd.name(), cfg)?;
    let summary = match cmd {
        Command::Model => model(cfg, &mut out)?,
        Command::Identify => identify(cfg, &mut out)?,
        Command::Design => design(cfg, &mut out)?,
        Command::Analyze => analyze_cmd(cfg, &mut out)?,
        Command::Reduce => reduce(cfg, &mut out)?,
        Command::Discretize => discretize(cfg, &mut out)?,
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Sweep => sweep(cfg, &mut out)?,
        Command::Report => report(cfg, &mut out)?,
    };
    out.finish()?;
    Ok(summary)
}

struct Models {
    plant: StateSpace,
    design_weight: StateSpace,
    performance_weight: StateSpace,
    uncertainty_weight: StateSpace,
}

fn models(cfg: &ProjectConfig) -> Result<Models, CliError> {
    let plant = build_mimo_model_with(&cfg.gimbal.azimuth.params(), &cfg.gimbal.elevation.params(), cfg.gimbal.delay.into())?;
    let p = plant.outputs();
    let design_weight = diagonal_weight(&make_sensitivity_weight(&cfg.weights.design.params())?, p)?;
    let performance_weight = diagonal_weight(&make_sensitivity_weight(&cfg.weights.performance.params())?, p)?;
    let (_, _, w1) = uncertainty_weights();
    Ok(Models { plant, design_weight, performance_weight, uncertainty_weight: w1.scaled(cfg.weights.uncertainty_scale) })
}

fn sigma(m: &DMatrix<Complex<f64>>) -> Result<Vec<f64>, CliError> {
    Ok(svd_values(m, &Tolerances::default())?)
}

fn model(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let m = models(cfg)?;
    let grid = cfg.grid.omega()?;
    out.text("plant.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        ltr_core::textio::write_matrix(w, "A", m.plant.a())?;
        ltr_core::textio::write_matrix(w, "B", m.plant.b())?;
        ltr_core::textio::write_matrix(w, "C", m.plant.c())?;
        ltr_core::textio::write_matrix(w, "D", m.plant.d())
    })?;
    let fr = frequency_response(&m.plant, &grid)?;
    out.text("plant_response.txt", |w, h| fr.write_columnar(w, h))?;

    let wd = make_sensitivity_weight(&cfg.weights.design.params())?;
    let wp = make_sensitivity_weight(&cfg.weights.performance.params())?;
    let (w1a, w1e, _) = uncertainty_weights::<f64>();
    let s = cfg.weights.uncertainty_scale;
    out.text("weights.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "frequency_hz inv_we_design inv_we_performance w1_azimuth w1_elevation")?;
        for &om in &grid {
            writeln!(
                w,
                "{:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
                om / TAU,
                1.0 / wd.at(om).norm(),
                1.0 / wp.at(om).norm(),
                s * w1a.weight.at(om).norm(),
                s * w1e.weight.at(om).norm()
            )?;
        }
        Ok(())
    })?;

    let d = cfg.gimbal.azimuth.d;
    let dev = grid.iter().map(|om| compare_delay_models(d, om / TAU)).collect::<Result<Vec<_>, _>>()?;
    out.text("delay_models.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "frequency_hz magnitude_ratio phase_difference_deg")?;
        for (om, dv) in grid.iter().zip(&dev) {
            writeln!(w, "{:.12e} {:.12e} {:.12e}", om / TAU, dv.magnitude_ratio, dv.phase_difference_deg)?;
        }
        Ok(())
    })?;

    let at4 = compare_delay_models(d, 4.0)?;
    let dc = m.plant.dc_gain()?;
    let pade_zeros: Vec<[f64; 2]> = cfg.gimbal.azimuth.params().pade().zeros()?.iter().map(|z| [z.re, z.im]).collect();
    out.json(
        "model.json",
        &json!({
            "config_hash": out.hash(),
            "plant_order": m.plant.order(),
            "dc_gain": [dc[(0, 0)], dc[(1, 1)]],
            "pade_zeros_azimuth": pade_zeros,
            "delay_model_at_4hz": { "magnitude_ratio": at4.magnitude_ratio, "phase_difference_deg": at4.phase_difference_deg },
        }),
    )?;
    Ok(format!("plant order {}, DC gains {:.4} / {:.4}", m.plant.order(), dc[(0, 0)], dc[(1, 1)]))
}

#[derive(Debug, Serialize, Deserialize)]
struct AxisEstimate {
    axis: String,
    true_inertia: f64,
    true_friction: f64,
    inertia: f64,
    friction: f64,
    inertia_error: f64,
    friction_error: f64,
    within_5_percent: bool,
    covariance_psd: bool,
    min_innovation_variance: f64,
    inertia_clamped: bool,
}

fn identify(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let opts = cfg.ekf.options(cfg.ekf_seed());
    let mut axes = Vec::new();
    for (name, axis) in [("azimuth", &cfg.gimbal.azimuth), ("elevation", &cfg.gimbal.elevation)] {
        let truth = axis.params();
        let mut run = estimate_parameters(&truth, &opts)?;
        let x = run.estimate.x.clone();
        let (ej, eb) = ((x[4] - truth.j).abs() / truth.j, (x[5] - truth.bv).abs() / truth.bv);
        axes.push(AxisEstimate {
            axis: name.to_string(),
            true_inertia: truth.j,
            true_friction: truth.bv,
            inertia: x[4],
            friction: x[5],
            inertia_error: ej,
            friction_error: eb,
            within_5_percent: ej < 0.05 && eb < 0.05,
            covariance_psd: run.covariance_psd,
            min_innovation_variance: run.min_innovation_variance,
            inertia_clamped: run.estimate.inertia_clamped,
        });
        let n = cfg.ekf.history_decimation;
        run.history = run.history.iter().enumerate().filter(|(i, _)| (i + 1) % n == 0).map(|(_, s)| *s).collect();
        out.text(&format!("ekf_{name}.txt"), |w, h| run.write_columnar(w, h))?;
    }
    let summary = axes
        .iter()
        .map(|a| format!("{} J={:.4} Bv={:.4}", a.axis, a.inertia, a.friction))
        .collect::<Vec<_>>()
        .join(", ");
    out.json("identify.json", &json!({ "config_hash": out.hash(), "excitation_hz": cfg.ekf.excitation_hz, "axes": axes }))?;
    Ok(summary)
}

fn design(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let m = models(cfg)?;
    let aug = augment_plant(&m.plant, &m.design_weight)?;
    let kalman = design_kalman(&aug, &cfg.design.noise(m.plant.outputs()))?;
    let [lo, hi] = cfg.design.recovery_band_hz;
    let band = RecoveryBand { f_min_hz: lo, f_max_hz: hi, ..RecoveryBand::default() };
    let sweep = ltr_sweep(&aug, &kalman, &cfg.design.rhos, &band)?;
    out.text("recovery.txt", |w, h| sweep.write_report(w, h))?;

    let grid = cfg.grid.omega()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &om in &grid {
        let mut row = vec![om / TAU];
        row.extend(sigma(&kalman.target_loop.at(om)?)?);
        for p in &sweep.points {
            row.extend(sigma(&(m.plant.at(om)? * p.compensator.at(om)?))?);
        }
        rows.push(row);
    }
    out.text("loops.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        let mut names = vec!["frequency_hz".to_string(), "target_sigma_max".into(), "target_sigma_min".into()];
        for p in &sweep.points {
            names.push(format!("rho_{:e}_sigma_max", p.rho));
            names.push(format!("rho_{:e}_sigma_min", p.rho));
        }
        writeln!(w, "{}", names.join(" "))?;
        for row in &rows {
            writeln!(w, "{}", row.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" "))?;
        }
        Ok(())
    })?;

    let stored = StoredDesign {
        config_hash: out.hash().to_string(),
        selected_rho: cfg.design.selected_rho,
        plant_order: m.plant.order(),
        augmented_order: aug.order(),
        kalman_gain: (&kalman.kf).into(),
        points: sweep
            .points
            .iter()
            .map(|p| StoredPoint {
                rho: p.rho,
                recovery_error: p.recovery_error,
                stable: p.stable,
                closed_loop_abscissa: p.closed_loop_abscissa,
                compensator: (&p.compensator).into(),
            })
            .collect(),
    };
    out.json("design.json", &stored)?;
    let sel = selected_point(&stored)?;
    Ok(format!(
        "compensator order {}, {} designs, selected rho {:e} recovery error {:.4}",
        sel.compensator.a.rows,
        stored.points.len(),
        sel.rho,
        sel.recovery_error
    ))
}

fn selected_point(d: &StoredDesign) -> Result<&StoredPoint, CliError> {
    d.points
        .iter()
        .find(|p| same_rho(p.rho, d.selected_rho))
        .ok_or_else(|| CliError::MissingDependency("stored design lacks the selected rho".into()))
}

#[derive(Debug, Serialize, Deserialize)]
struct TestSummary {
    value: f64,
    at_hz: f64,
    pass: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnalysisPoint {
    rho: f64,
    stable: bool,
    nominal_performance: Option<TestSummary>,
    robust_stability: Option<TestSummary>,
    robust_performance: Option<TestSummary>,
}

fn summarize(t: &TestResult<f64>) -> TestSummary {
    TestSummary { value: t.value, at_hz: t.omega / TAU, pass: t.pass }
}

fn analyze_cmd(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let stored: StoredDesign = load(cfg, "design.json", "design")?;
    let m = models(cfg)?;
    let grid = cfg.grid.omega()?;
    let mut points = Vec::new();
    let mut line = String::new();
    for p in &stored.points {
        let k = p.compensator.continuous()?;
        match analyze(&m.plant, &k, &m.performance_weight, &m.uncertainty_weight, &grid) {
            Ok(r) => {
                out.text(&format!("robustness_rho_{:e}.txt", p.rho), |w, h| r.write_columnar(w, h))?;
                if same_rho(p.rho, stored.selected_rho) {
                    line = format!(
                        "rho {:e}: np {:.3} ({}), rs {:.3} ({}), rp {:.3}",
                        p.rho,
                        r.np_peak(),
                        verdict(r.np.pass),
                        r.rs_peak(),
                        verdict(r.rs.pass),
                        r.rp_peak()
                    );
                }
                points.push(AnalysisPoint {
                    rho: p.rho,
                    stable: true,
                    nominal_performance: Some(summarize(&r.np)),
                    robust_stability: Some(summarize(&r.rs)),
                    robust_performance: Some(summarize(&r.rp.peak)),
                });
            }
            Err(ltr_core::Error::UnstableClosedLoop { .. }) => {
                points.push(AnalysisPoint {
                    rho: p.rho,
                    stable: false,
                    nominal_performance: None,
                    robust_stability: None,
                    robust_performance: None,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    if line.is_empty() {
        return Err(CliError::Computation(ltr_core::Error::InvalidParameters(format!(
            "selected design rho {:e} does not give a stable loop",
            stored.selected_rho
        ))));
    }
    out.json("analysis.json", &json!({ "config_hash": out.hash(), "selected_rho": stored.selected_rho, "points": points }))?;
    Ok(line)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn reduce(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let stored: StoredDesign = load(cfg, "design.json", "design")?;
    let point = selected_point(&stored)?;
    let k = point.compensator.continuous()?;
    let tr = balance_and_truncate(&k, cfg.design.reduced_order)?;
    let hinf_error = if tr.reduced.order() == k.order() { 0.0 } else { hinf_norm(&subtract(&k, &tr.reduced)?)?.value };
    let m = models(cfg)?;
    let grid = cfg.grid.omega()?;
    let full = analyze(&m.plant, &k, &m.performance_weight, &m.uncertainty_weight, &grid)?.rp_peak();
    let reduced = analyze(&m.plant, &tr.reduced, &m.performance_weight, &m.uncertainty_weight, &grid)?.rp_peak();
    out.text("hankel.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "index hankel_value")?;
        for (i, v) in tr.hankel_values.iter().enumerate() {
            writeln!(w, "{} {v:.12e}", i + 1)?;
        }
        Ok(())
    })?;
    let stored_red = StoredReduction {
        config_hash: out.hash().to_string(),
        rho: point.rho,
        full_order: k.order(),
        order: tr.reduced.order(),
        hankel_values: tr.hankel_values.clone(),
        error_bound: tr.error_bound,
        hinf_error,
        rp_peak_full: full,
        rp_peak_reduced: reduced,
        reduced: (&tr.reduced).into(),
    };
    out.json("reduced.json", &stored_red)?;
    Ok(format!(
        "order {} -> {}, ||K - Kr|| = {:.4} (bound {:.4}), rp {:.4} -> {:.4}",
        k.order(),
        tr.reduced.order(),
        hinf_error,
        tr.error_bound,
        full,
        reduced
    ))
}

fn discretize(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let red: StoredReduction = load(cfg, "reduced.json", "reduce")?;
    let k = red.reduced.continuous()?;
    let kd = bilinear_discretize(&k, cfg.simulation.sample_period)?;
    let m = models(cfg)?;
    let radius = sampled_loop_spectral_radius(&m.plant, &kd, &cfg.simulation.options())?;
    out.text("controller_discrete.txt", |w, h| write_coefficients(&kd, w, h))?;
    out.json(
        "discrete.json",
        &StoredController {
            config_hash: out.hash().to_string(),
            rho: red.rho,
            order: kd.order(),
            sample_period: kd.ts(),
            sampled_loop_spectral_radius: radius,
            controller: (&kd).into(),
        },
    )?;
    Ok(format!("order {} at Ts = {:e} s, sampled loop spectral radius {:.6}", kd.order(), kd.ts(), radius))
}

fn simulate(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let stored: StoredController = load(cfg, "discrete.json", "discretize")?;
    let kd = stored.controller.discrete()?;
    let m = models(cfg)?;
    let dist = cfg.disturbance.profile(m.plant.outputs(), cfg.disturbance_seed())?;
    let sim = &cfg.simulation;
    let trace = simulate_closed_loop(&m.plant, &kd, &dist, sim.duration, &sim.options())?;
    let rms = rms_los_error(&trace, sim.settle)?;
    let oracle = rms_los_oracle(&m.plant, &kd, &dist)?;
    let n = sim.trace_decimation;
    fn keep<V: Clone>(v: &[V], n: usize) -> Vec<V> {
        v.iter().step_by(n).cloned().collect()
    }
    let thinned = SimulationTrace {
        time: keep(&trace.time, n),
        rate: keep(&trace.rate, n),
        control: keep(&trace.control, n),
        disturbance: keep(&trace.disturbance, n),
        angle: keep(&trace.angle, n),
    };
    out.text("simulation_trace.txt", |w, h| thinned.write_columnar(w, h))?;
    let agree: Vec<f64> = rms.iter().zip(&oracle).map(|(a, b)| (a - b).abs() / a.max(f64::MIN_POSITIVE)).collect();
    out.json(
        "simulate.json",
        &json!({
            "config_hash": out.hash(),
            "duration_s": sim.duration,
            "settle_s": sim.settle,
            "rms_los_urad": rms,
            "oracle_rms_los_urad": oracle,
            "oracle_relative_difference": agree,
            "below_100_urad": rms.iter().all(|&r| r < 100.0),
        }),
    )?;
    Ok(format!("RMS LOS error {:.1} / {:.1} urad (oracle {:.1} / {:.1})", rms[0], rms[1], oracle[0], oracle[1]))
}

#[derive(Debug, Serialize, Deserialize)]
struct MemberResult {
    index: usize,
    delta_norm: f64,
    continuous_loop_stable: bool,
    sampled_loop_stable: bool,
    identified_weighted_peak: Option<f64>,
}

fn sweep(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let design: StoredDesign = load(cfg, "design.json", "design")?;
    let stored: StoredController = load(cfg, "discrete.json", "discretize")?;
    let kd = stored.controller.discrete()?;
    let k = selected_point(&design)?.compensator.continuous()?;
    let m = models(cfg)?;
    let id_cfg = &cfg.identification;
    let grid_hz = id_cfg.grid_hz()?;
    let opts = cfg.simulation.options();
    let wp = make_sensitivity_weight(&cfg.weights.performance.params())?;
    let inv_we: Vec<f64> = grid_hz.iter().map(|f| 1.0 / wp.at(f * TAU).norm()).collect();

    let nominal = swept_sine_identify(&m.plant, &kd, &grid_hz, id_cfg.amplitude, id_cfg.cycles, &opts)?;
    out.text("sweep_nominal.txt", |w, h| nominal.write_columnar(w, h))?;
    let mut worst_entry: f64 = 0.0;
    let mut analytic = Vec::with_capacity(grid_hz.len());
    for (i, f) in grid_hz.iter().enumerate() {
        let s = sampled_sensitivity(&m.plant, &kd, f * TAU)?;
        let floor = 1e-3 * nominal.sigma[i][0];
        for (a, b) in nominal.values[i].iter().zip(s.iter()) {
            worst_entry = worst_entry.max((a.norm() - b.norm()).abs() / b.norm().max(floor));
        }
        analytic.push(sigma(&s)?);
    }
    out.text("sweep_nominal_analytic.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "frequency_hz sigma_max_identified sigma_max_analytic inv_we")?;
        for i in 0..grid_hz.len() {
            writeln!(w, "{:.12e} {:.12e} {:.12e} {:.12e}", grid_hz[i], nominal.sigma[i][0], analytic[i][0], inv_we[i])?;
        }
        Ok(())
    })?;
    let below = nominal.sigma.iter().zip(&inv_we).all(|(s, b)| s[0] < *b);

    let nominal_report = analyze(&m.plant, &k, &m.performance_weight, &m.uncertainty_weight, &cfg.grid.omega()?)?;
    let set = sample_perturbed_models(&m.plant, &m.uncertainty_weight, cfg.perturbation.count, cfg.perturbation_seed())?;
    let mut members = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (index, member) in set.members.iter().enumerate() {
        let continuous_loop_stable = closed_loop(&member.plant, &k)?.is_stable()?;
        let sampled_loop_stable = sampled_loop_spectral_radius(&member.plant, &kd, &opts)? < 1.0;
        let mut peak = None;
        if sampled_loop_stable {
            let id = swept_sine_identify(&member.plant, &kd, &grid_hz, id_cfg.amplitude, id_cfg.cycles, &opts)?;
            let weighted: Vec<f64> = id.sigma.iter().zip(&inv_we).map(|(s, b)| s[0] / b).collect();
            peak = Some(weighted.iter().cloned().fold(0.0, f64::max));
            columns.push(weighted);
        } else {
            columns.push(vec![f64::NAN; grid_hz.len()]);
        }
        members.push(MemberResult {
            index,
            delta_norm: member.delta_norm,
            continuous_loop_stable,
            sampled_loop_stable,
            identified_weighted_peak: peak,
        });
    }
    out.text("sweep_perturbed.txt", |w, h| {
        for line in h {
            writeln!(w, "# {line}")?;
        }
        let mut names = vec!["frequency_hz".to_string()];
        names.extend((0..columns.len()).map(|i| format!("we_sigma_member_{i}")));
        writeln!(w, "{}", names.join(" "))?;
        for (i, f) in grid_hz.iter().enumerate() {
            write!(w, "{f:.12e}")?;
            for c in &columns {
                write!(w, " {:.12e}", c[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let worst_member = members.iter().filter_map(|m| m.identified_weighted_peak).fold(0.0, f64::max);
    let all_stable = members.iter().all(|m| m.continuous_loop_stable && m.sampled_loop_stable);
    out.json(
        "sweep.json",
        &json!({
            "config_hash": out.hash(),
            "frequencies_hz": grid_hz,
            "nominal_max_entry_error": worst_entry,
            "nominal_below_inverse_weight": below,
            "rs_peak": nominal_report.rs_peak(),
            "rp_peak": nominal_report.rp_peak(),
            "all_perturbed_loops_stable": all_stable,
            "max_identified_weighted_sensitivity": worst_member,
            "members": members,
        }),
    )?;
    Ok(format!(
        "nominal entry error {:.2e}, {} perturbed loops stable={}, max ||We So|| {:.3} (rp {:.3})",
        worst_entry,
        members.len(),
        all_stable,
        worst_member,
        nominal_report.rp_peak()
    ))
}

fn load_value(cfg: &ProjectConfig, name: &str, producer: &str) -> Result<serde_json::Value, CliError> {
    load(cfg, name, producer)
}

fn report(cfg: &ProjectConfig, out: &mut Output) -> Result<String, CliError> {
    let sources = [
        ("model", "model.json"),
        ("identify", "identify.json"),
        ("design", "design.json"),
        ("analyze", "analysis.json"),
        ("reduce", "reduced.json"),
        ("discretize", "discrete.json"),
        ("simulate", "simulate.json"),
        ("sweep", "sweep.json"),
    ];
    let mut parts = serde_json::Map::new();
    for (producer, name) in sources {
        parts.insert(producer.to_string(), load_value(cfg, name, producer)?);
    }
    let design: StoredDesign = serde_json::from_value(parts["design"].clone()).map_err(std::io::Error::other)?;
    let recovery: Vec<_> = design
        .points
        .iter()
        .map(|p| json!({ "rho": p.rho, "recovery_error": p.recovery_error, "stable": p.stable }))
        .collect();
    let red = &parts["reduce"];
    let ctl = &parts["discretize"];
    let summary = json!({
        "config_hash": out.hash(),
        "figures": {
            "delay_model_comparison": "delay_models.txt",
            "parameter_estimation": ["ekf_azimuth.txt", "ekf_elevation.txt"],
            "loop_recovery": ["loops.txt", "recovery.txt"],
            "weights": "weights.txt",
            "robustness": format!("robustness_rho_{:e}.txt", design.selected_rho),
            "sensitivity_identification": ["sweep_nominal.txt", "sweep_nominal_analytic.txt"],
            "perturbed_sensitivity": "sweep_perturbed.txt",
            "los_simulation": "simulation_trace.txt",
        },
        "model": parts["model"],
        "identification": parts["identify"]["axes"],
        "recovery": recovery,
        "selected_rho": design.selected_rho,
        "analysis": parts["analyze"]["points"],
        "reduction": {
            "full_order": red["full_order"],
            "order": red["order"],
            "hinf_error": red["hinf_error"],
            "error_bound": red["error_bound"],
            "rp_peak_full": red["rp_peak_full"],
            "rp_peak_reduced": red["rp_peak_reduced"],
        },
        "discrete_controller": {
            "order": ctl["order"],
            "sample_period": ctl["sample_period"],
            "sampled_loop_spectral_radius": ctl["sampled_loop_spectral_radius"],
        },
        "simulation": parts["simulate"],
        "sweep": {
            "nominal_max_entry_error": parts["sweep"]["nominal_max_entry_error"],
            "nominal_below_inverse_weight": parts["sweep"]["nominal_below_inverse_weight"],
            "all_perturbed_loops_stable": parts["sweep"]["all_perturbed_loops_stable"],
            "max_identified_weighted_sensitivity": parts["sweep"]["max_identified_weighted_sensitivity"],
            "rp_peak": parts["sweep"]["rp_peak"],
        },
    });
    out.json("summary.json", &summary)?;
    let sel = parts["analyze"]["points"]
        .as_array()
        .and_then(|ps| ps.iter().find(|p| p["rho"].as_f64().is_some_and(|r| same_rho(r, design.selected_rho))))
        .cloned()
        .unwrap_or_default();
    Ok(format!(
        "summary.json written; selected rho {:e}: rp {}, RMS {}",
        design.selected_rho, sel["robust_performance"]["value"], parts["simulate"]["rms_los_urad"]
    ))
}
