//! Command implementations. Each returns the `result.json` body and any CSV series.

use gkdv_core::direction::{classify_regime, interior_roots, maximize_f, DirectionPoint};
use gkdv_core::evolution::{
    evolve_observed, gwp_equivalence_sweep, gwp_monitor, instability_experiment, Outcome, Sample,
};
use gkdv_core::groundstate::{
    build_ground_state, elliptic_residual, lambda_second_derivative, nehari_level_check, pohozaev_report,
    sharp_constant, GroundStateProfile,
};
use gkdv_core::model::gn_check;
use gkdv_core::petviashvili::{compare, sech_seed, solve_elliptic, PetviashviliOptions};
use gkdv_core::spectral::{instability_criterion_with_floor, spectral_report, OperatorKind, SpectralReport};
use gkdv_core::{functionals, Error};
use serde_json::{json, Value};

use crate::config::{
    Command, DirectionOptions, EvolveConfig, GroundStateOptions, GwpConfig, InstabilityConfig, NoOptions,
    PetviashviliConfig, RunConfig, SpectrumOptions,
};
use crate::Failure;

/// Files produced by a command, in emission order.
pub struct Emitted {
    pub status: &'static str,
    pub result: Value,
    pub csvs: Vec<(String, Vec<u8>)>,
}

impl Emitted {
    fn ok(result: Value) -> Self {
        Emitted { status: "ok", result, csvs: Vec::new() }
    }

    fn with_csv(mut self, name: &str, body: Vec<u8>) -> Self {
        self.csvs.push((name.to_string(), body));
        self
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn series_csv(samples: &[Sample], with_d: bool) -> Vec<u8> {
    let header: &[&str] = if with_d { &["t", "M", "E", "G", "d"] } else { &["t", "M", "E", "G"] };
    csv_bytes(
        header,
        samples.iter().map(|s| {
            let mut row = vec![s.t.to_string(), s.mass.to_string(), s.energy.to_string(), s.g.to_string()];
            if with_d {
                row.push(s.d.map_or_else(String::new, |d| d.to_string()));
            }
            row
        }),
    )
}

fn first_maximizer(cfg: &RunConfig) -> Result<DirectionPoint, Failure> {
    Ok(maximize_f(&cfg.params, 1024)?.points[0])
}

fn ground_states(cfg: &RunConfig, omega: f64) -> Result<Vec<GroundStateProfile>, Failure> {
    let grid = cfg.grid()?;
    let set = maximize_f(&cfg.params, 1024)?;
    set.points
        .iter()
        .map(|p| build_ground_state(&cfg.params, omega, grid.clone(), p).map_err(Failure::from))
        .collect()
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Emitted, Failure> {
    match command {
        Command::Direction => direction(cfg),
        Command::GroundState => ground_state(cfg),
        Command::Pohozaev => pohozaev(cfg),
        Command::SharpConstant => sharp(cfg),
        Command::Petviashvili => petviashvili(cfg),
        Command::Evolve => evolve(cfg),
        Command::GwpCheck => gwp(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Instability => instability(cfg),
        Command::Lambda => lambda(cfg),
    }
}

fn direction(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: DirectionOptions = cfg.options()?;
    let set = maximize_f(&cfg.params, o.scan_points)?;
    let regime = match classify_regime(&cfg.params) {
        Ok(r) => to_value(&r),
        Err(e) => json!({ "unclassified": e.to_string() }),
    };
    let roots = match interior_roots(&cfg.params) {
        Ok(r) => to_value(&r),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    Ok(Emitted::ok(json!({
        "maximizers": set.points,
        "f_max": set.f_max,
        "multiplicity": set.multiplicity,
        "regime": regime,
        "interior_roots": roots,
    })))
}

fn ground_state(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: GroundStateOptions = cfg.options()?;
    let states = ground_states(cfg, cfg.omega)?;
    let mut entries = Vec::new();
    for gs in &states {
        let unit = gs.rescaled(1.0)?;
        entries.push(json!({
            "profile": gs.summary(),
            "functionals": functionals(&cfg.params, &gs.pair),
            "elliptic_residual": elliptic_residual(&cfg.params, gs.omega, &gs.pair),
            "pohozaev": pohozaev_report(&cfg.params, &unit.pair),
        }));
    }
    let first = &states[0];
    let mut out = Emitted::ok(json!({
        "omega": cfg.omega,
        "alpha": first.alpha,
        "beta": first.beta,
        "f_max": first.f_max,
        "ground_states": entries,
    }));
    if o.write_profile {
        let g = first.grid();
        let rows = (0..g.n()).map(|i| {
            vec![g.x()[i].to_string(), first.pair.u()[i].to_string(), first.pair.v()[i].to_string()]
        });
        out = out.with_csv("profile.csv", csv_bytes(&["x", "u", "v"], rows));
    }
    Ok(out)
}

fn pohozaev(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let _: NoOptions = cfg.options()?;
    let states = ground_states(cfg, cfg.omega)?;
    let mut reports = Vec::new();
    for gs in &states {
        let unit = gs.rescaled(1.0)?;
        let r = pohozaev_report(&cfg.params, &unit.pair);
        reports.push(json!({
            "direction": gs.direction,
            "max_residual": r.max_residual(),
            "gradient_ratio_expected": cfg.params.kf() / (cfg.params.kf() + 2.0),
            "report": r,
        }));
    }
    Ok(Emitted::ok(json!({ "omega": cfg.omega, "rescaled_to_unit_speed": cfg.omega != 1.0, "states": reports })))
}

fn sharp(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let _: NoOptions = cfg.options()?;
    if cfg.omega != 1.0 {
        return Err(Failure::validation("sharp-constant works at omega = 1"));
    }
    let gs = &ground_states(cfg, 1.0)?[0];
    let sc = sharp_constant(&cfg.params, gs)?;
    let gn = gn_check(&cfg.params, &gs.pair, sc.kopt);
    let nehari = nehari_level_check(&cfg.params, gs)?;
    Ok(Emitted::ok(json!({
        "kopt": sc.kopt,
        "sharp_constant": sc,
        "gn_check": gn,
        "nehari": nehari,
    })))
}

fn petviashvili(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: PetviashviliConfig = cfg.options()?;
    let grid = cfg.grid()?;
    let (x0, y0) = match o.seed_direction {
        Some([x, y]) => (x, y),
        None => {
            let d = first_maximizer(cfg)?;
            (d.x0, d.y0)
        }
    };
    let seed = sech_seed(grid.clone(), x0, y0)?;
    let opts = PetviashviliOptions { max_iter: o.max_iter, tol: o.tol, ..PetviashviliOptions::new(&cfg.params, seed) };
    let out = solve_elliptic(&cfg.params, cfg.omega, grid, &opts)?;
    let states = ground_states(cfg, cfg.omega)?;
    let comparisons: Vec<Value> = states
        .iter()
        .map(|gs| json!({ "direction": gs.direction, "comparison": compare(&cfg.params, &out, gs) }))
        .collect();
    let closest = states
        .iter()
        .map(|gs| compare(&cfg.params, &out, gs).linf_distance)
        .fold(f64::INFINITY, f64::min);
    Ok(Emitted::ok(json!({
        "omega": cfg.omega,
        "seed_direction": [x0, y0],
        "iterations": out.iterations,
        "m_first": out.m_first,
        "m_last": out.m_last,
        "last_update": out.last_update,
        "elliptic_residual": elliptic_residual(&cfg.params, cfg.omega, &out.pair),
        "action": functionals(&cfg.params, &out.pair).i_action,
        "linf_distance": closest,
        "comparisons": comparisons,
    })))
}

fn evolve(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: EvolveConfig = cfg.options()?;
    let opts = o.step().evolve_options()?;
    let gs = &ground_states(cfg, cfg.omega)?[0];
    if !(o.scale.is_finite() && o.shift.is_finite()) {
        return Err(Failure::validation("scale and shift must be finite"));
    }
    let pair0 = gs.pair.scaled(o.scale).translated(o.shift);
    let norm = gs.pair.l2_sq().sqrt();
    let traj = evolve_observed(&cfg.params, &pair0, &opts, |t, pair| {
        Some(pair.l2_distance(&gs.pair.translated(o.shift + cfg.omega * t)) / norm)
    })?;
    let (mass_drift, energy_drift) = traj.drifts();
    let max_d = traj.samples.iter().filter_map(|s| s.d).fold(0.0, f64::max);
    let csv = series_csv(&traj.samples, true);
    let result = json!({
        "omega": cfg.omega,
        "scale": o.scale,
        "shift": o.shift,
        "options": opts,
        "outcome": traj.outcome,
        "steps": traj.steps,
        "final_time": traj.final_time,
        "mass_drift": mass_drift,
        "energy_drift": energy_drift,
        "max_profile_distance": max_d,
    });
    match traj.outcome {
        Outcome::Completed => Ok(Emitted::ok(result).with_csv("trajectory.csv", csv)),
        Outcome::BlowUp { t } => {
            let mut f = Failure::from(Error::BlowUp(t));
            f.detail = Some(result);
            f.csvs.push(("trajectory.csv".into(), csv));
            Err(f)
        }
    }
}

fn gwp(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: GwpConfig = cfg.options()?;
    let opts = o.step().evolve_options()?;
    if cfg.params.k < 2 {
        let e = Error::NoThresholdNeeded(cfg.params.k);
        return Ok(Emitted {
            status: "informational",
            result: json!({ "kind": e.kind(), "message": e.to_string() }),
            csvs: Vec::new(),
        });
    }
    let gs1 = &ground_states(cfg, 1.0)?[0];
    let pair0 = gs1.pair.scaled(o.scale);
    let report = gwp_monitor(&cfg.params, &pair0, gs1, &opts)?;
    let sweep = if o.sweep_pairs > 0 {
        to_value(&gwp_equivalence_sweep(&cfg.params, gs1, o.sweep_pairs, cfg.seed)?)
    } else {
        Value::Null
    };
    let csv = series_csv(&report.samples, false);
    let mut result = to_value(&report);
    if let Value::Object(m) = &mut result {
        m.remove("samples");
        m.insert("scale".into(), json!(o.scale));
        m.insert("options".into(), to_value(&opts));
        m.insert("equivalence_sweep".into(), sweep);
    }
    Ok(Emitted::ok(result).with_csv("trajectory.csv", csv))
}

fn spectrum_csv(report: &SpectralReport) -> Vec<u8> {
    let mut rows = Vec::new();
    for c in &report.channels {
        for (i, v) in c.eigenvalues.iter().enumerate() {
            rows.push(vec![c.channel.name().to_string(), i.to_string(), v.to_string()]);
        }
    }
    for (i, v) in report.full_block.eigenvalues.iter().enumerate() {
        rows.push(vec![OperatorKind::FullBlock.name().to_string(), i.to_string(), v.to_string()]);
    }
    csv_bytes(&["channel", "index", "eigenvalue"], rows)
}

fn n_negative(report: &SpectralReport) -> Value {
    let mut m = serde_json::Map::new();
    for c in &report.channels {
        m.insert(c.channel.name().into(), json!(c.counts.n_negative));
    }
    m.insert("full_block".into(), json!(report.full_block.counts.n_negative));
    Value::Object(m)
}

fn spectrum(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: SpectrumOptions = cfg.options()?;
    let grid = cfg.grid()?;
    let params = &cfg.params;
    let (report, verdict, lambda, unstable) = if params.k >= 3 {
        let v = instability_criterion_with_floor(params, cfg.omega, grid, o.gap_floor)?;
        let word = if v.unstable { "unstable" } else { "not_established" };
        (v.spectrum, word, to_value(&v.lambda), json!(v.unstable))
    } else {
        let dir = first_maximizer(cfg)?;
        let report = spectral_report(params, cfg.omega, &dir, &grid, o.gap_floor)?;
        if params.k == 2 {
            let gs1 = build_ground_state(params, 1.0, grid, &dir)?;
            let l = lambda_second_derivative(params, cfg.omega, &gs1)?;
            (report, "inconclusive", to_value(&l), Value::Null)
        } else {
            (report, "not_applicable", Value::Null, Value::Null)
        }
    };
    let csv = spectrum_csv(&report);
    Ok(Emitted::ok(json!({
        "omega": cfg.omega,
        "n_negative": n_negative(&report),
        "spectral_ok": report.spectral_ok,
        "verdict": verdict,
        "unstable": unstable,
        "lambda": lambda,
        "report": report,
    }))
    .with_csv("spectrum.csv", csv))
}

fn instability(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let o: InstabilityConfig = cfg.options()?;
    let opts = o.step().evolve_options()?;
    let report = instability_experiment(&cfg.params, cfg.omega, o.eps, cfg.grid()?, &opts)?;
    let csv = series_csv(&report.samples, true);
    let mut result = to_value(&report);
    if let Value::Object(m) = &mut result {
        m.remove("samples");
        m.insert("options".into(), to_value(&opts));
    }
    Ok(Emitted::ok(result).with_csv("trajectory.csv", csv))
}

fn lambda(cfg: &RunConfig) -> Result<Emitted, Failure> {
    let _: NoOptions = cfg.options()?;
    let gs1 = &ground_states(cfg, 1.0)?[0];
    let l = lambda_second_derivative(&cfg.params, cfg.omega, gs1)?;
    Ok(Emitted::ok(json!({
        "lambda": l,
        "critical": cfg.params.k == 2,
        "concave": l.closed_form < 0.0,
    })))
}
