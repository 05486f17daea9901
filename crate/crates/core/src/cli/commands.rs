use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::json;

use super::config::{CurvesConfig, EngineChoice, EvolveConfig, RunProtocolConfig, ScanConfig, VerifyConfig};
use super::output::{fmt_num, Outputs, Table};
use crate::dynamics::{make_packet, position_moments, site_occupations, EvolutionReport, PacketSpec, Propagator};
use crate::error::{Error, Result};
use crate::hilbert::{assemble_hamiltonian, SectorBasis};
use crate::network::{build_chain, build_splitter_network, SpinNetwork, SplitterKind, SplitterSpec};
use crate::protocol::{
    probability_curves, run_closed_form, run_protocol_full_dynamics, Engine, ProtocolKind, ProtocolOutcome,
};
use crate::scattering::{transmission_scan, ScatteringGeometry, SHIFT_CONVENTION};
use crate::splitter::{
    decompose_one_to_n, one_to_n_node_matrix, verification_spec, verify_node_matrix_dynamically,
    y_node_matrix, y_node_matrix_composed,
};

/// Fraction of failed scan points above which the scan exits nonzero.
pub const SCAN_FAILURE_LIMIT: f64 = 0.05;
const IDENTITY_TOL: f64 = 1e-12;

/// Result of a subcommand: files written and the process exit code.
#[derive(Debug)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
}

pub fn scan_transmission(cfg: &ScanConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let geometry = ScatteringGeometry { j_perp: cfg.j_perp, ..ScatteringGeometry::for_alpha(cfg.alpha) };
    geometry.validate()?;
    let (hs, jzs) = (cfg.h.values(), cfg.jz.values());
    let surface = transmission_scan(&geometry, &hs, &jzs)?;

    let mut table = Table::new(&[
        "h [J_perp]",
        "Jz [J_perp]",
        "T [probability]",
        "Re t",
        "Im t",
        "|r|^2 [probability]",
        "leakage [probability]",
        "time [1/J_perp]",
        "status",
    ]);
    let mut failed = Vec::new();
    for p in &surface.points {
        let mut row = vec![fmt_num(p.h), fmt_num(p.jz)];
        match &p.outcome {
            Ok(a) => {
                row.extend([a.transmission, a.t.re, a.t.im, a.reflection, a.leakage, a.time].map(fmt_num));
                row.push("ok".into());
            }
            Err(e) => {
                log::warn!("scan point h = {}, Jz = {} failed: {e}", p.h, p.jz);
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push("failed".into());
                failed.push(json!({ "h": p.h, "jz": p.jz, "error": e }));
            }
        }
        table.push(row);
    }
    let resonance: Vec<_> = jzs
        .iter()
        .filter_map(|&jz| {
            surface.argmax_h(jz).map(|(h, t)| json!({ "jz": jz, "argmax_h": h, "t_max": t, "offset": h - jz }))
        })
        .collect();
    let fraction = surface.failures() as f64 / surface.points.len() as f64;
    let summary = json!({
        "units": "energies in J_perp, times in 1/J_perp",
        "alpha": cfg.alpha,
        "j_perp": cfg.j_perp,
        "h_grid": cfg.h,
        "jz_grid": cfg.jz,
        "n_sites": geometry.n_sites(),
        "t_convention": SHIFT_CONVENTION,
        "points": surface.points.len(),
        "failures": surface.failures(),
        "failure_fraction": fraction,
        "failed_points": failed,
        "resonance_line": resonance,
    });
    let mut out = Outputs::default();
    out.csv(&cfg.out_dir, "transmission.csv", &table)?;
    out.json(&cfg.out_dir, "transmission_summary.json", &summary)?;
    let files = out.write()?;
    println!(
        "scan-transmission: {} points, {} failed ({:.1}%)",
        surface.points.len(),
        surface.failures(),
        100.0 * fraction
    );
    Ok(CommandOutcome { files, exit_code: if fraction > SCAN_FAILURE_LIMIT { 1 } else { 0 } })
}

fn print_outcome(o: &ProtocolOutcome) {
    let kind = match o.kind {
        ProtocolKind::Ghz => "GHZ",
        ProtocolKind::W => "W",
    };
    let engine = match o.engine {
        Engine::ClosedForm => "closed-form",
        Engine::Dynamics => "dynamics",
    };
    println!(
        "{kind} n={} engine={engine}: P = {:.6}, fidelity = {:.6}, |t|^2 = {:.6}, ledger total = {:.6}",
        o.n, o.success_probability, o.fidelity_to_target, o.transmission, o.ledger_total
    );
}

pub fn run_protocol(cfg: &RunProtocolConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let p = &cfg.protocol;
    let closed = match cfg.engine {
        EngineChoice::ClosedForm | EngineChoice::Both => Some(run_closed_form(p)?),
        EngineChoice::Dynamics => None,
    };
    let dynamics = match cfg.engine {
        EngineChoice::Dynamics | EngineChoice::Both => Some(run_protocol_full_dynamics(p)?),
        EngineChoice::ClosedForm => None,
    };
    let consistency = match (&closed, &dynamics) {
        (Some(c), Some(d)) => {
            let dyn_closed = d.dynamics.as_ref().map(|x| x.closed_form_probability);
            Some(json!({
                "delta_p": (c.success_probability - d.success_probability).abs(),
                "delta_fidelity": (c.fidelity_to_target - d.fidelity_to_target).abs(),
                "delta_p_same_t": dyn_closed.map(|q| (q - d.success_probability).abs()),
            }))
        }
        _ => None,
    };
    let summary = json!({
        "protocol": p,
        "engine": cfg.engine,
        "closed_form": closed,
        "dynamics": dynamics,
        "consistency": consistency,
    });
    for o in closed.iter().chain(&dynamics) {
        print_outcome(o);
    }
    if let Some(c) = &consistency {
        println!("consistency: |dP| = {}", c["delta_p"]);
    }
    let mut out = Outputs::default();
    out.json(&cfg.out_dir, "protocol_summary.json", &summary)?;
    Ok(CommandOutcome { files: out.write()?, exit_code: 0 })
}

pub fn curves(cfg: &CurvesConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let ns: Vec<usize> = (cfg.n_min..=cfg.n_max).collect();
    let rows = probability_curves(&cfg.transmissions, &ns)?;
    let mut table = Table::new(&[
        "T [probability]",
        "n [qubits]",
        "P_GHZ [probability]",
        "P_W [probability]",
        "P_GHZ - P_W [probability]",
    ]);
    for r in &rows {
        table.push(vec![fmt_num(r.transmission), r.n.to_string(), fmt_num(r.p_ghz), fmt_num(r.p_w), fmt_num(r.gap())]);
    }
    let gap = |t: f64, n: usize| rows.iter().find(|r| r.transmission == t && r.n == n).map(|r| r.gap());
    let grows_at_unit_t = cfg
        .transmissions
        .contains(&1.0)
        .then(|| ns.windows(2).all(|w| gap(1.0, w[1]) > gap(1.0, w[0])));
    let mut ts = cfg.transmissions.clone();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let shrinks_with_t = ns.iter().all(|&n| ts.windows(2).all(|w| gap(w[1], n) <= gap(w[0], n)));
    let summary = json!({
        "t_convention": "real positive t = sqrt(T)",
        "transmissions": cfg.transmissions,
        "n_range": [cfg.n_min, cfg.n_max],
        "gap_grows_with_n_at_unit_transmission": grows_at_unit_t,
        "gap_shrinks_as_transmission_drops": shrinks_with_t,
    });
    let mut out = Outputs::default();
    out.csv(&cfg.out_dir, "curves.csv", &table)?;
    out.json(&cfg.out_dir, "curves_summary.json", &summary)?;
    println!("curves: {} rows", rows.len());
    Ok(CommandOutcome { files: out.write()?, exit_code: 0 })
}

/// One line of the verification table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CheckRow {
    pub identity: String,
    pub parameters: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRow {
    fn new(identity: &str, parameters: String, max_deviation: f64, tolerance: f64) -> Self {
        CheckRow {
            identity: identity.into(),
            parameters,
            max_deviation,
            tolerance,
            passed: max_deviation <= tolerance,
        }
    }
}

pub fn verify_checks(cfg: &VerifyConfig) -> Result<Vec<CheckRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &[a, b] in &cfg.y_splitters {
        let params = format!("alpha={a} beta={b}");
        let norm = (a * a + b * b - 1.0).abs();
        rows.push(CheckRow::new("y_normalization", params.clone(), norm, IDENTITY_TOL));
        if norm > IDENTITY_TOL {
            continue;
        }
        let y = y_node_matrix(a, b)?;
        rows.push(CheckRow::new("y_unitarity", params.clone(), y.unitarity_residue(), IDENTITY_TOL));
        let composed = y_node_matrix_composed(a, b)?;
        rows.push(CheckRow::new("y_composition", params.clone(), y.max_difference(&composed), IDENTITY_TOL));
        if cfg.dynamical {
            let kind = SplitterKind::Y { alpha: a, beta: b };
            let report = verify_node_matrix_dynamically(&verification_spec(kind, cfg.alpha), &y, cfg.alpha)?;
            rows.push(CheckRow::new(
                "y_dynamical_ports",
                params,
                report.max_probability_error,
                cfg.dynamical_tolerance,
            ));
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let reduction = one_to_n_node_matrix(2)?.max_difference(&y_node_matrix(h, h)?);
    rows.push(CheckRow::new("one_to_two_reduction", "n=2".into(), reduction, IDENTITY_TOL));
    for n in cfg.n_min..=cfg.n_max {
        let m = one_to_n_node_matrix(n)?;
        rows.push(CheckRow::new("one_to_n_unitarity", format!("n={n}"), m.unitarity_residue(), IDENTITY_TOL));
        let net = build_splitter_network(&SplitterSpec::new(SplitterKind::OneToN { n }, 7, 5), &[])?;
        let d = decompose_one_to_n(&net)?;
        let params = format!("n={n} blocks={:?}", d.block_sizes());
        rows.push(CheckRow::new("decomposition_unitarity", params.clone(), d.unitarity_residue, IDENTITY_TOL));
        rows.push(CheckRow::new("decomposition_off_block", params.clone(), d.off_block_residue, IDENTITY_TOL));
        rows.push(CheckRow::new("decomposition_commutator", params.clone(), d.commutator_residue, IDENTITY_TOL));
        rows.push(CheckRow::new("decomposition_chains", params, d.chain_residue, IDENTITY_TOL));
        if cfg.dynamical {
            let kind = SplitterKind::OneToN { n };
            let report = verify_node_matrix_dynamically(&verification_spec(kind, cfg.alpha), &m, cfg.alpha)?;
            rows.push(CheckRow::new(
                "one_to_n_dynamical_ports",
                format!("n={n}"),
                report.max_probability_error,
                cfg.dynamical_tolerance,
            ));
        }
    }
    Ok(rows)
}

pub fn verify(cfg: &VerifyConfig) -> Result<CommandOutcome> {
    let rows = verify_checks(cfg)?;
    let mut table = Table::new(&["identity", "parameters", "max_deviation", "tolerance", "status"]);
    for r in &rows {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<26} {:<28} deviation {:.3e} (tol {:.0e})", r.identity, r.parameters, r.max_deviation, r.tolerance);
        table.push(vec![r.identity.clone(), r.parameters.clone(), fmt_num(r.max_deviation), fmt_num(r.tolerance), status.into()]);
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.identity.as_str()).collect();
    let summary = json!({ "checks": rows.len(), "failed": failed, "rows": rows });
    let mut out = Outputs::default();
    out.csv(&cfg.out_dir, "verify.csv", &table)?;
    out.json(&cfg.out_dir, "verify_summary.json", &summary)?;
    Ok(CommandOutcome { files: out.write()?, exit_code: if failed.is_empty() { 0 } else { 1 } })
}

fn evolve_network(cfg: &EvolveConfig) -> Result<SpinNetwork> {
    match &cfg.network {
        Some(path) => SpinNetwork::read_file(path).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        None => build_chain(cfg.chain_len, cfg.j_perp),
    }
}

/// Sites `0, 1, 2, ...` up to the first missing hop or frozen flip.
fn leading_path(net: &SpinNetwork, frozen: &[usize]) -> Vec<usize> {
    let mut path = Vec::new();
    for s in 0..net.n_sites() {
        let hops = s == 0 || net.bond_between(s - 1, s).is_some_and(|b| b.j_perp != 0.0);
        if !hops || frozen.contains(&s) {
            break;
        }
        path.push(s);
    }
    path
}

pub fn evolve(cfg: &EvolveConfig) -> Result<CommandOutcome> {
    cfg.validate()?;
    let net = evolve_network(cfg)?;
    let support: Vec<usize> = match &cfg.packet.region {
        Some(name) => net
            .region(name)
            .ok_or_else(|| Error::Config(format!("network has no region '{name}'")))?
            .sites
            .iter()
            .copied()
            .filter(|s| !cfg.frozen_flips.contains(s))
            .collect(),
        None => leading_path(&net, &cfg.frozen_flips),
    };
    let spec = PacketSpec::new(cfg.packet.alpha, cfg.packet.center, support).with_momentum(cfg.packet.momentum);
    spec.validate_on(&net)?;
    let basis = SectorBasis::for_network(&net, cfg.frozen_flips.len() + 1)?;
    let ham = assemble_hamiltonian(&net, &basis)?;
    let packet = make_packet(&basis, &spec, &cfg.frozen_flips)?;
    let prop = Propagator::new(&ham, cfg.method)?;

    let dt = cfg.time / cfg.steps as f64;
    let mut state = packet.state.clone();
    let mut frames = Vec::with_capacity(cfg.steps + 1);
    let mut reports: Vec<EvolutionReport> = Vec::new();
    let mut trajectory = Table::new(&["t [1/J_perp]", "site", "probability"]);
    let mobile = |s: &usize| !cfg.frozen_flips.contains(s);
    for step in 0..=cfg.steps {
        if step > 0 {
            let (next, report) = prop.evolve_with_report(&state, dt)?;
            if !report.is_clean() {
                return Err(Error::NonConvergence(format!(
                    "step {step}: norm drift {:e}, energy drift {:e}",
                    report.norm_drift, report.energy_drift
                )));
            }
            state = next;
            reports.push(report);
        }
        let t = dt * step as f64;
        let occ = site_occupations(&basis, &state);
        let (mean, width) = position_moments((0..occ.len()).filter(mobile).map(|s| (s as f64, occ[s])));
        frames.push(json!({ "t": t, "norm": state.norm(), "mean_site": mean, "width": width }));
        if cfg.trajectory {
            for (s, p) in occ.iter().enumerate() {
                trajectory.push(vec![fmt_num(t), s.to_string(), fmt_num(*p)]);
            }
        }
    }
    let summary = json!({
        "units": "times in 1/J_perp",
        "n_sites": net.n_sites(),
        "flips": basis.k(),
        "dimension": basis.len(),
        "method": cfg.method,
        "packet_truncated_weight": packet.truncated_weight,
        "matvecs": reports.iter().map(|r| r.matvecs).sum::<usize>(),
        "max_norm_drift": reports.iter().map(|r| r.norm_drift).fold(0.0, f64::max),
        "max_energy_drift": reports.iter().map(|r| r.energy_drift).fold(0.0, f64::max),
        "frames": frames,
    });
    let mut out = Outputs::default();
    out.json(&cfg.out_dir, "evolve_summary.json", &summary)?;
    if cfg.trajectory {
        out.csv(&cfg.out_dir, "trajectory.csv", &trajectory)?;
    }
    println!("evolve: {} sites, dimension {}, {} frames", net.n_sites(), basis.len(), cfg.steps + 1);
    Ok(CommandOutcome { files: out.write()?, exit_code: 0 })
}

/// Parse `re,im` or `re`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected 're' or 're,im', got '{s}'")),
    }
}
