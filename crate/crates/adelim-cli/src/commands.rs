//! Subcommand bodies. Each writes one table (or, for `verify`, one line per
//! criterion) after the metadata block.

use std::io::Write;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;

use adelim::cp::{self, wpg_spectrum_feasible};
use adelim::dispersive::{self, DScanPoint, DispersiveParams};
use adelim::jc::{self, JCParams};
use adelim::spectral::steady_state;
use adelim::{verify, C64};

use crate::config::{DScanConfig, RunConfig};
use crate::output::{num, write_table, Table};

fn grid(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>> {
    ensure!(n >= 1, "{what}: need at least one grid point");
    ensure!(lo.is_finite() && hi.is_finite(), "{what}: bounds must be finite");
    ensure!(lo <= hi, "{what}: lower bound {lo} exceeds upper bound {hi}");
    ensure!(n > 1 || lo == hi, "{what}: a single point needs equal bounds");
    Ok(verify::linspace(lo, hi, n))
}

pub fn d_scan_points(c: &DScanConfig) -> Result<Vec<DScanPoint>> {
    ensure!(
        c.chi_ratios.len() == 3,
        "the D criterion is defined for d = 3; got {} shifts",
        c.chi_ratios.len()
    );
    let chis = [
        c.chi_ratios[0] * c.chi_over_kappa,
        c.chi_ratios[1] * c.chi_over_kappa,
        c.chi_ratios[2] * c.chi_over_kappa,
    ];
    let omegas = grid(c.omega_min, c.omega_max, c.omega_points, "omega grid")?;
    let deltas = grid(c.delta_min, c.delta_max, c.delta_points, "delta grid")?;
    let nd = deltas.len();
    // indexed collect keeps the grid order whatever the pool size
    (0..omegas.len() * nd)
        .into_par_iter()
        .map(|k| {
            let (om, de) = (omegas[k / nd], deltas[k % nd]);
            dispersive::d_scan_point(&chis, om, de, 1.0).with_context(|| format!("at Omega = {om}, Delta = {de}"))
        })
        .collect()
}

pub fn qudit_d_scan(cfg: &RunConfig, w: &mut dyn Write) -> Result<()> {
    let pts = d_scan_points(&cfg.d_scan)?;
    let mut t = Table::new(&["omega_over_kappa", "delta_over_kappa", "D", "gap_ok"]);
    for p in &pts {
        t.push(vec![num(p.omega), num(p.delta), num(p.d_value), p.gap_ok.to_string()]);
    }
    write_table(w, &t)?;
    if let Some(path) = &cfg.d_scan.svg {
        let svg = sign_heatmap(&cfg.d_scan, &pts);
        std::fs::write(path, svg).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

/// Sign of `D` as a grid of cells: blue where `D < 0`, red where `D > 0`.
/// `Omega` runs left to right and `Delta` bottom to top.
pub fn sign_heatmap(c: &DScanConfig, pts: &[DScanPoint]) -> String {
    const CELL: usize = 4;
    let (nx, ny) = (c.omega_points, c.delta_points);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" shape-rendering=\"crispEdges\">\n",
        nx * CELL,
        ny * CELL
    );
    for (k, p) in pts.iter().enumerate() {
        let (i, j) = (k / ny, k % ny);
        let fill = if p.d_value < 0.0 {
            "#2166ac"
        } else if p.d_value > 0.0 {
            "#b2182b"
        } else {
            "#f7f7f7"
        };
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"/>\n",
            i * CELL,
            (ny - 1 - j) * CELL
        ));
    }
    s.push_str("</svg>\n");
    s
}

pub fn jc_report(cfg: &RunConfig, w: &mut dyn Write) -> Result<()> {
    let c = &cfg.jc;
    let p = JCParams::new(c.g, c.gamma, c.delta_a, c.n_th, c.n_max)?;
    let cf = jc::fourth_order_coeffs(&p);
    let bloch = jc::bloch_analysis(&cf, 64)?;
    let closed_lindblad = cp::is_lindbladian(&cf.generator(), cfg.tol)?;
    let exp = jc::engine_expansion(&p, 4)?;
    let engine_l = jc::engine_generator(&p, &exp);
    let engine = jc::qubit_rates(&engine_l)?;
    let engine_lindblad = cp::is_lindbladian(&engine_l, cfg.tol)?;
    let res = jc::relative_residuals(&cf, &engine);

    let mut t = Table::new(&["quantity", "value"]);
    let mut row = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    row("epsilon", num(p.epsilon()));
    row("top_fock_population", num(p.top_population()));
    row("omega_b4", num(cf.omega_b4));
    row("gamma_minus4", num(cf.gamma_minus4));
    row("gamma_plus4", num(cf.gamma_plus4));
    row("gamma_phi4", num(cf.gamma_phi4));
    row("b_minus_re", num(cf.b_minus.re));
    row("b_minus_im", num(cf.b_minus.im));
    row("b_plus_re", num(cf.b_plus.re));
    row("b_plus_im", num(cf.b_plus.im));
    row("t1", num(bloch.summary.t1));
    row("t2", num(bloch.summary.t2));
    row("rz", num(bloch.summary.rz));
    row("lindblad_verdict", closed_lindblad.is_lindblad.to_string());
    row("lindblad_verdict_engine", engine_lindblad.is_lindblad.to_string());
    row("min_projected_eig_engine", num(engine_lindblad.min_projected_eig));
    row("contraction_certificate", bloch.certificate.passes.to_string());
    row(
        "cp_violation_t_star",
        cp::cp_violation_window(bloch.summary.t1, bloch.summary.t2).map_or("none".into(), num),
    );
    for &tw in &c.wpg_times {
        let v = bloch.kraus_feasibility(tw)?;
        row(&format!("wpg_feasible_t_{}", num(tw)), v.feasible.to_string());
    }
    row("engine_omega_b", num(engine.omega_b));
    row("engine_gamma_minus", num(engine.gamma_minus));
    row("engine_gamma_plus", num(engine.gamma_plus));
    row("engine_gamma_phi", num(engine.gamma_phi));
    for (name, r) in ["omega_b", "gamma_minus", "gamma_plus", "gamma_phi"].iter().zip(res) {
        row(&format!("residual_{name}"), num(r));
    }
    if c.check_drift {
        let fine = jc::engine_rates(&p.with_n_max(2 * p.n_max))?;
        let drift = adelim::linalg::max_abs(&(&engine.pauli - &fine.pauli).view());
        row("drift_2n_max", num(drift));
    }
    write_table(w, &t)
}

pub fn exact_master(cfg: &RunConfig, w: &mut dyn Write) -> Result<()> {
    let c = &cfg.exact_master;
    ensure!(c.t_step > 0.0 && c.t_max >= 0.0, "need t_step > 0 and t_max >= 0");
    let p = DispersiveParams::ladder(c.d, c.chi_over_kappa, c.omega_over_kappa, c.delta_over_kappa, 1.0)?;
    let rho = steady_state(&p.qubit())?.rho;
    let n = (c.t_max / c.t_step).round() as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * c.t_step).collect();
    let pts = dispersive::exact_master_equation(&p, &rho, &times, c.kappa_dt)?;
    let mut header = vec!["t_kappa".to_string()];
    header.extend((1..c.d).map(|k| format!("eig{k}_StlS")));
    header.push("min_eig_T".into());
    let mut t = Table::with_header(header);
    for pt in &pts {
        let mut r = vec![num(pt.t)];
        r.extend(pt.stls_eigs.iter().map(|x| num(*x)));
        r.push(num(pt.min_eig_t));
        t.push(r);
    }
    write_table(w, &t)
}

pub fn gauge_umax(cfg: &RunConfig, w: &mut dyn Write) -> Result<()> {
    let c = &cfg.gauge_umax;
    ensure!(c.samples > 0, "need at least one sampled state");
    let samples = dispersive::state_samples(c.d, c.samples, cfg.seed);
    let values: Vec<f64> = c
        .chi_over_kappa
        .par_iter()
        .map(|&chi| -> Result<f64> {
            let p = DispersiveParams::ladder(c.d, chi, c.omega_over_kappa, c.delta_over_kappa, 1.0)?;
            let s = dispersive::slow_spectrum(&p)?;
            let ct = dispersive::optimal_pair_coefficients(&s)?;
            Ok(dispersive::diagonal_gauge_umax(&s, &ct, &samples, c.u_tol, cfg.tol)?)
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["chi_over_kappa", "u_max"]);
    for (chi, u) in c.chi_over_kappa.iter().zip(values) {
        t.push(vec![num(*chi), num(u)]);
    }
    write_table(w, &t)
}

pub fn parse_spectrum(args: &[String]) -> Result<[C64; 4]> {
    if args.len() != 4 {
        bail!("expected four eigenvalues, got {}", args.len());
    }
    let mut out = [C64::new(0.0, 0.0); 4];
    for (o, a) in out.iter_mut().zip(args) {
        *o = a.parse().map_err(|_| anyhow::anyhow!("not a complex number: {a:?}"))?;
    }
    Ok(out)
}

pub fn wpg(spectrum: [C64; 4], w: &mut dyn Write) -> Result<()> {
    let v = wpg_spectrum_feasible(spectrum)?;
    let mut t = Table::new(&["verdict", "s1", "s2", "s3"]);
    let verdict = if v.feasible { "feasible" } else { "infeasible" };
    t.push(vec![verdict.into(), num(v.s[0]), num(v.s[1]), num(v.s[2])]);
    write_table(w, &t)
}

/// Prints one PASS/FAIL line per criterion; returns the number that failed.
pub fn run_verify(ids: &[usize], w: &mut dyn Write) -> Result<usize> {
    let ids: Vec<usize> = if ids.is_empty() { (1..=12).collect() } else { ids.to_vec() };
    for &id in &ids {
        ensure!((1..=12).contains(&id), "criteria are numbered 1 to 12, got {id}");
    }
    let mut failed = 0;
    for id in ids {
        let o = verify::run(id);
        if !o.passed {
            failed += 1;
        }
        writeln!(w, "{o}")?;
        w.flush()?;
    }
    Ok(failed)
}
