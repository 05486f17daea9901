//! End-to-end acceptance criteria; prints one PASS/FAIL line per criterion.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use spinnet::cli::commands::verify_checks;
use spinnet::cli::config::VerifyConfig;
use spinnet::dynamics::{make_packet, EvolutionReport, Method, PacketSpec, Propagator};
use spinnet::hilbert::{assemble_hamiltonian, SectorBasis};
use spinnet::network::build_chain;
use spinnet::protocol::{
    default_curves, ghz_optimum_grid_search, run_closed_form, run_ghz_closed_form, run_protocol_full_dynamics,
    ProtocolConfig, TwoQubitDensity,
};
use spinnet::scattering::{scatter_off_dd, transmission_scan, ScatteringGeometry};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn four_site_spectrum() -> Check {
    let net = build_chain(4, 1.0).and_then(|c| c.embed_dd_qubit(1, 10.0, 10.0)).map_err(fail)?;
    let basis = SectorBasis::for_network(&net, 2).map_err(fail)?;
    let ham = assemble_hamiltonian(&net, &basis).map_err(fail)?;
    let span: Vec<usize> = [[0, 2], [1, 2], [1, 3]].iter().map(|s| basis.index_of(s).unwrap()).collect();
    let block = DMatrix::from_fn(3, 3, |r, c| ham.get(span[r], span[c]));
    let reference = block[(0, 0)];
    let mut eig: Vec<f64> = block.symmetric_eigen().eigenvalues.iter().map(|e| e - reference).collect();
    eig.sort_by(f64::total_cmp);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let err = eig.iter().zip([-s, 0.0, s]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err < 1e-12, format!("relative eigenvalues {eig:?}, max error {err:.1e}"))
}

fn resonant_transmission(reports: &mut Vec<EvolutionReport>) -> Check {
    let g = ScatteringGeometry::default();
    let diag: Vec<f64> = (5..=12).map(f64::from).collect();
    let mut ts = Vec::new();
    for &x in &diag {
        let surface = transmission_scan(&g, &[x], &[x]).map_err(fail)?;
        let p = &surface.points[0];
        let a = p.outcome.as_ref().map_err(|e| e.clone())?;
        reports.push(a.report.clone());
        ts.push(a.transmission);
    }
    let monotone = ts.windows(2).all(|w| w[1] >= w[0]);
    let msg = format!("T(5) = {:.5}, T(10) = {:.5}, monotone on 5..12: {monotone}", ts[0], ts[5]);
    ensure(ts[0] >= 0.95 && ts[5] >= 0.98 && monotone, msg)
}

fn resonance_maximality() -> Check {
    let g = ScatteringGeometry::default();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for jz in [6.0, 8.0, 10.0, 12.0] {
        let hs: Vec<f64> = (-12..=12).map(|k| jz + 0.25 * k as f64).collect();
        let surface = transmission_scan(&g, &hs, &[jz]).map_err(fail)?;
        if surface.failures() > 0 {
            return Err(format!("{} scan points failed at Jz = {jz}", surface.failures()));
        }
        let (h, _) = surface.argmax_h(jz).ok_or("empty scan")?;
        worst = worst.max((h - jz).abs());
        lines.push(format!("Jz={jz}: argmax h={h}"));
    }
    ensure(worst <= 0.25 + 1e-12, format!("{}; max offset {worst}", lines.join(", ")))
}

fn reflection_off_excited_dd(reports: &mut Vec<EvolutionReport>) -> Check {
    let g = ScatteringGeometry::default();
    let net = g.network(10.0, 10.0).map_err(fail)?;
    let a = scatter_off_dd(&net, &g.packet(), 1, g.transit_time()).map_err(fail)?;
    reports.push(a.report.clone());
    ensure(a.reflection >= 0.99, format!("|r|^2 = {:.6} with the DD left in |1>", a.reflection))
}

fn splitter_identities() -> Check {
    let rows = verify_checks(&VerifyConfig::default()).map_err(fail)?;
    let failed: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("{} ({})", r.identity, r.parameters)).collect();
    let worst_port = rows
        .iter()
        .filter(|r| r.identity.ends_with("dynamical_ports"))
        .map(|r| r.max_deviation)
        .fold(0.0, f64::max);
    ensure(
        failed.is_empty(),
        format!("{} identities checked, worst port-probability error {worst_port:.1e}, failed: {failed:?}", rows.len()),
    )
}

fn concurrence_sweep() -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let theta = std::f64::consts::FRAC_PI_2 * k as f64 / 49.0;
        let (a, b) = (theta.cos(), theta.sin());
        let rho = TwoQubitDensity::one_excitation(a, b).map_err(fail)?;
        worst = worst.max((rho.concurrence() - 2.0 * (a * b).abs()).abs());
        let z = Complex64::new(0.0, 0.0);
        let phased = TwoQubitDensity::pure([z, Complex64::new(a, 0.0), Complex64::from_polar(b, 0.3 * k as f64), z])
            .map_err(fail)?;
        worst = worst.max((phased.concurrence() - 2.0 * (a * b).abs()).abs());
    }
    ensure(worst < 1e-10, format!("max |C - 2|alpha beta|| = {worst:.1e} over 50 points"))
}

fn ghz_protocol(reports: &mut Vec<EvolutionReport>) -> Check {
    let mut notes = Vec::new();
    for n in 1..=8 {
        let o = run_ghz_closed_form(&ProtocolConfig::ghz(n).with_t(Complex64::new(1.0, 0.0))).map_err(fail)?;
        if (o.success_probability - 0.5).abs() > 4.0 * f64::EPSILON {
            return Err(format!("closed form at t = 1, n = {n}: P = {}", o.success_probability));
        }
    }
    notes.push("closed form P = 0.5 at t = 1 (n = 1..8, to machine precision)".to_string());

    let one = run_protocol_full_dynamics(&ProtocolConfig::ghz(1)).map_err(fail)?;
    reports.push(one.dynamics.as_ref().unwrap().report.clone());
    notes.push(format!("n=1 P = {:.4} F = {:.4}", one.success_probability, one.fidelity_to_target));
    let ok1 = (one.success_probability - 0.5).abs() <= 0.03 && one.fidelity_to_target >= 0.97;

    let two = run_protocol_full_dynamics(&ProtocolConfig::ghz(2)).map_err(fail)?;
    reports.push(two.dynamics.as_ref().unwrap().report.clone());
    notes.push(format!("n=2 P = {:.4} F = {:.4}", two.success_probability, two.fidelity_to_target));
    let ok2 = (two.success_probability - 0.5).abs() <= 0.05 && two.fidelity_to_target >= 0.95;

    let off_cfg = ProtocolConfig::ghz(2).with_fields(9.0, 10.0);
    let off = run_protocol_full_dynamics(&off_cfg).map_err(fail)?;
    let d = off.dynamics.as_ref().unwrap();
    reports.push(d.report.clone());
    notes.push(format!(
        "off-resonant n=2 P = {:.4} vs closed form {:.4}",
        off.success_probability, d.closed_form_probability
    ));
    let ok3 = (off.success_probability - d.closed_form_probability).abs() <= 0.05;

    let mut ok4 = true;
    for t in [0.8, 0.9] {
        for n in 1..=6 {
            let g = ghz_optimum_grid_search(t, n, 4000).map_err(fail)?;
            ok4 &= (g.best.alpha - g.predicted.alpha).abs() <= 2.0 * g.resolution
                && (g.best.alpha_out - g.predicted.alpha_out).abs() <= 2.0 * g.resolution
                && g.best_probability <= g.predicted_probability + 1e-12;
        }
    }
    notes.push(format!("grid-search optimum matches: {ok4}"));
    ensure(ok1 && ok2 && ok3 && ok4, notes.join("; "))
}

fn w_protocol(reports: &mut Vec<EvolutionReport>) -> Check {
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        for t in [1.0, 0.9, 0.75] {
            let o = run_closed_form(&ProtocolConfig::w(n).with_t(Complex64::new(t, 0.0))).map_err(fail)?;
            worst = worst.max((o.success_probability - t * t / n as f64).abs());
        }
    }
    let w = run_protocol_full_dynamics(&ProtocolConfig::w(2)).map_err(fail)?;
    reports.push(w.dynamics.as_ref().unwrap().report.clone());
    let msg = format!(
        "closed form max |P - |t|^2/n| = {worst:.1e}; dynamics n=2 P = {:.4} F = {:.4}",
        w.success_probability, w.fidelity_to_target
    );
    ensure(
        worst < 1e-15 && (w.success_probability - 0.5).abs() <= 0.03 && w.fidelity_to_target >= 0.97,
        msg,
    )
}

fn success_curves() -> Check {
    let rows = default_curves();
    let gap = |t: f64, n: usize| rows.iter().find(|r| r.transmission == t && r.n == n).unwrap().gap();
    let grows = (2..8).all(|n| gap(1.0, n + 1) > gap(1.0, n));
    let ts = [1.0, 0.9, 0.8, 0.7];
    let shrinks = (2..=8).all(|n| ts.windows(2).all(|w| gap(w[1], n) <= gap(w[0], n)));
    ensure(
        rows.len() == 28 && grows && shrinks,
        format!("gap grows with n at T=1: {grows}; gap shrinks as T drops: {shrinks}"),
    )
}

fn numerical_hygiene(reports: &[EvolutionReport]) -> Check {
    let dirty = reports.iter().filter(|r| !r.is_clean()).count();
    let net = build_chain(48, 1.0).and_then(|c| c.embed_dd_qubit(30, 10.0, 10.0)).map_err(fail)?;
    let basis = SectorBasis::for_network(&net, 2).map_err(fail)?;
    let ham = assemble_hamiltonian(&net, &basis).map_err(fail)?;
    let spec = PacketSpec::new(4.0 / 15.0, 12.0, (0..30).collect());
    let packet = make_packet(&basis, &spec, &[31]).map_err(fail)?;
    let mut finals = Vec::new();
    for m in [Method::Chebyshev, Method::Krylov, Method::DenseExpm] {
        let (v, r) = Propagator::new(&ham, m).map_err(fail)?.evolve_with_report(&packet.state, 25.0).map_err(fail)?;
        if !r.is_clean() {
            return Err(format!("{m:?} drift: norm {:.1e}, energy {:.1e}", r.norm_drift, r.energy_drift));
        }
        finals.push(v);
    }
    let mut worst: f64 = 1.0;
    for a in 0..3 {
        for b in a + 1..3 {
            worst = worst.min(finals[a].fidelity(&finals[b]).map_err(fail)?);
        }
    }
    ensure(
        dirty == 0 && worst >= 1.0 - 1e-9,
        format!(
            "{} evolutions clean ({} drifted); method agreement at dim {}: min fidelity 1 - {:.1e}",
            reports.len(),
            dirty,
            basis.len(),
            1.0 - worst
        ),
    )
}

fn main() {
    let mut reports = Vec::new();
    let mut results: Vec<(&str, Check, f64)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut(&mut Vec<EvolutionReport>) -> Check| {
        let start = Instant::now();
        let r = f(&mut reports);
        results.push((name, r, start.elapsed().as_secs_f64()));
    };
    run("1 four-site resonance spectrum", &mut |_| four_site_spectrum());
    run("2 resonant transmission", &mut |r| resonant_transmission(r));
    run("3 resonance maximality", &mut |_| resonance_maximality());
    run("4 reflection off |1>", &mut |r| reflection_off_excited_dd(r));
    run("5 splitter algebra and dynamics", &mut |_| splitter_identities());
    run("6 concurrence formula", &mut |_| concurrence_sweep());
    run("7 GHZ protocol", &mut |r| ghz_protocol(r));
    run("8 W protocol", &mut |r| w_protocol(r));
    run("9 success-probability curves", &mut |_| success_curves());
    let hygiene = numerical_hygiene(&reports);
    results.push(("10 numerical hygiene", hygiene, 0.0));

    let mut failures = 0;
    for (name, r, secs) in &results {
        match r {
            Ok(msg) => println!("PASS {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
