//! Subcommand implementations. Each command writes its tables into a fresh
//! run directory and finishes with a manifest recording configuration,
//! resolved constants and output hashes.

use crate::config::{LengthSpec, RayleighSpec, RunConfig};
use crate::manifest::Manifest;
use anyhow::{bail, Context, Result};
use benard_core::{
    bifurcation_classify, classify_regime, critical_point, growth_rate_beta1, neutral_rayleigh,
    AlphaEval, Basis, BifurcationVerdict, IntegrateOptions,
    Integrator, ModeIndex, Parity, ReducedModel, SpectralField, TopologyOptions,
};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

fn write_file(dir: &Path, name: &str, contents: &str, manifest: &mut Manifest) -> Result<()> {
    std::fs::write(dir.join(name), contents)
        .with_context(|| format!("writing {name}"))?;
    manifest.add_file(dir, name)
}

/// Resolve (L, R, R_c, L_c) from the configuration.
fn resolve_domain(cfg: &RunConfig) -> Result<(f64, f64, f64, f64)> {
    let cp = critical_point(cfg.bc)?;
    let l = match cfg.length {
        LengthSpec::Critical => cp.l_c,
        LengthSpec::Value(v) => v,
    };
    let r = match cfg.rayleigh {
        RayleighSpec::Ratio(x) => x * cp.r_c,
        RayleighSpec::Value(x) => x,
    };
    Ok((l, r, cp.r_c, cp.l_c))
}

fn build_basis(cfg: &RunConfig, l: f64, r: f64) -> Result<Arc<Basis>> {
    Ok(Basis::new(cfg.bc, l, r, cfg.k_max, cfg.j_max, None)?)
}

pub fn cmd_critical(cfg: &RunConfig, dir: &Path, scan: (f64, f64, usize)) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("critical", cfg.dump());
    let bc = cfg.bc;
    let (lo, hi, n) = scan;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        bail!("scan range must satisfy 0 < lo < hi with at least 2 points");
    }
    let mut curve = String::from("L,a,R_neutral\n");
    for i in 0..n {
        let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let a = 2.0 * std::f64::consts::PI / l;
        let r = neutral_rayleigh(a, bc)?;
        let _ = writeln!(curve, "{l:.12e},{a:.12e},{r:.12e}");
    }
    write_file(dir, "neutral_curve.csv", &curve, &mut manifest)?;

    let cp = critical_point(bc)?;
    let mut crit = String::from("bc,R_c,L_c,a_c,scan_warning\n");
    let _ = writeln!(
        crit,
        "{bc},{:.12e},{:.12e},{:.12e},{}",
        cp.r_c, cp.l_c, cp.a_c, cp.warning
    );
    write_file(dir, "critical.csv", &crit, &mut manifest)?;
    manifest.constant("R_c", cp.r_c);
    manifest.constant("L_c", cp.l_c);
    manifest.constant("a_c", cp.a_c);
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    println!("{bc}: R_c = {:.6}, L_c = {:.6}, a_c = {:.6}", cp.r_c, cp.l_c, cp.a_c);
    Ok(())
}

pub fn cmd_eigs(cfg: &RunConfig, dir: &Path, mode: (usize, usize)) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("eigs", cfg.dump());
    let (l, r, r_c, l_c) = resolve_domain(cfg)?;
    let basis = build_basis(cfg, l, r)?;

    let mut table = String::from("k,j,beta\n");
    for k in 0..=basis.k_max {
        for j in 1..=basis.j_max {
            for parity in [Parity::Cos, Parity::Sin] {
                // at k >= 1 both parities share the eigenvalue; emit once
                if k >= 1 && parity == Parity::Sin {
                    continue;
                }
                let beta = basis.beta(ModeIndex::new(k, j, parity));
                let _ = writeln!(table, "{k},{j},{beta:.12e}");
            }
        }
    }
    write_file(dir, "eigenvalues.csv", &table, &mut manifest)?;

    let (mk, mj) = mode;
    if mk == 0 || mk > basis.k_max || mj == 0 || mj > basis.j_max {
        bail!("profile mode ({mk},{mj}) outside the truncation");
    }
    let (h, theta) = basis.roll_profiles(mk, mj);
    let mut prof = String::from("x2,h,dh,theta\n");
    for i in 0..cfg.grid_n2 {
        let x = i as f64 / (cfg.grid_n2 - 1) as f64;
        let _ = writeln!(
            prof,
            "{x:.12e},{:.12e},{:.12e},{:.12e}",
            h.eval(x, 0),
            h.eval(x, 1),
            theta.eval(x, 0)
        );
    }
    write_file(dir, "profiles.csv", &prof, &mut manifest)?;

    manifest.constant("R", r);
    manifest.constant("L", l);
    manifest.constant("R_c", r_c);
    manifest.constant("L_c", l_c);
    manifest.constant("beta_11", basis.beta(ModeIndex::new(1, 1, Parity::Cos)));
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    println!(
        "eigenvalues for {} at R = {:.4} (k <= {}, j <= {}) written",
        cfg.bc, r, basis.k_max, basis.j_max
    );
    Ok(())
}

pub fn cmd_reduce(cfg: &RunConfig, dir: &Path, alpha_at_r: bool) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("reduce", cfg.dump());
    let (_, r, r_c, l_c) = resolve_domain(cfg)?;
    let eval = if alpha_at_r {
        AlphaEval::AtRayleigh
    } else {
        AlphaEval::AtCritical
    };
    let model = ReducedModel::build(cfg.bc, r, cfg.j_max, eval)?;

    let mut tbl = String::from("j,c0,c2,beta_0j,beta_2j\n");
    for i in 0..model.table.j_max {
        let _ = writeln!(
            tbl,
            "{},{:.12e},{:.12e},{:.12e},{:.12e}",
            i + 1,
            model.table.c0[i],
            model.table.c2[i],
            model.table.beta0[i],
            model.table.beta2[i]
        );
    }
    write_file(dir, "interaction.csv", &tbl, &mut manifest)?;

    let mut conv = String::from("J,alpha,rel_change\n");
    let mut prev = None;
    for j in 1..=model.table.j_max {
        let a = model.table.alpha_at(j);
        let change = prev.map(|p: f64| ((a - p) / a).abs()).unwrap_or(f64::NAN);
        let _ = writeln!(conv, "{j},{a:.12e},{change:.3e}");
        prev = Some(a);
    }
    write_file(dir, "alpha_vs_j.csv", &conv, &mut manifest)?;

    let amplitude = model.equilibrium_amplitude()?;
    let mut red = String::from("R,R_c,beta1,alpha,amplitude\n");
    let _ = writeln!(
        red,
        "{r:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
        model.r_c, model.beta1, model.alpha, amplitude
    );
    write_file(dir, "reduced.csv", &red, &mut manifest)?;

    let report = bifurcation_classify(&model, 0.05)?;
    let verdict_line = match report.verdict {
        BifurcationVerdict::S1CircleOfSteadyStates => {
            "S1 attractor bifurcation: circle of steady states"
        }
        BifurcationVerdict::Inconclusive => "inconclusive",
    };
    let mut vtext = String::new();
    let _ = writeln!(vtext, "verdict: {verdict_line}");
    let _ = writeln!(vtext, "R_c: {:.10e}", report.r_c);
    let _ = writeln!(
        vtext,
        "beta1(below,at,above): {:.6e} {:.6e} {:.6e}",
        report.beta1_below, report.beta1_at, report.beta1_above
    );
    let _ = writeln!(vtext, "eigenvalue_crossing: {}", report.crossing_holds);
    let _ = writeln!(vtext, "cubic_definite (alpha > 0): {}", report.cubic_definite);
    let _ = writeln!(vtext, "alpha: {:.10e}", report.alpha);
    let _ = writeln!(
        vtext,
        "rotation_equivariance_residual: {:.3e}",
        report.equivariance_residual
    );
    let _ = writeln!(
        vtext,
        "translation witness: the reduced field commutes with rotations of (x11, y11); each steady roll generates the whole circle by x1-translation"
    );
    write_file(dir, "verdict.txt", &vtext, &mut manifest)?;

    manifest.constant("R_c", r_c);
    manifest.constant("L_c", l_c);
    manifest.constant("beta1", model.beta1);
    manifest.constant("alpha", model.alpha);
    manifest.constant("amplitude", amplitude);
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    println!(
        "{}: alpha = {:.6e}, beta1 = {:.6e}, amplitude = {:.6e}, {}",
        cfg.bc, model.alpha, model.beta1, amplitude, verdict_line
    );
    if report.verdict == BifurcationVerdict::Inconclusive {
        bail!("bifurcation classification is inconclusive");
    }
    Ok(())
}

/// Initial condition selector for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    Noise,
    /// Noise restricted to the reflection-symmetric (zero-momentum) subspace.
    SymmetricNoise,
}

pub fn cmd_simulate(
    cfg: &RunConfig,
    dir: &Path,
    ic: InitialData,
    shear_seed: f64,
) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("simulate", cfg.dump());
    let (l, r, r_c, l_c) = resolve_domain(cfg)?;
    let basis = build_basis(cfg, l, r)?;
    let opts = IntegrateOptions {
        dt: cfg.dt,
        scheme: cfg.scheme,
        pr_scaling: cfg.pr_scaling.then_some(cfg.prandtl),
        steady_tol: cfg.steady_tol,
        record_every: 20,
    };
    let integ = Integrator::new(basis.clone(), r, opts)?;
    let mut psi0 = SpectralField::seeded_noise(basis.clone(), cfg.seed, cfg.noise);
    if ic == InitialData::SymmetricNoise {
        psi0.retain_cos_parity();
        manifest.note("initial data restricted to the zero-momentum symmetric subspace");
    }
    if shear_seed != 0.0 {
        psi0.set(ModeIndex::new(0, 1, Parity::Sin), shear_seed);
        manifest.note(format!("seeded shear amplitude {shear_seed:.6e} on mode (0,1)"));
    }

    // integrate in segments when intermediate snapshots are requested
    let mut csv = String::from("t,norm,r,theta,M\n");
    let segment = if cfg.snapshot_every > 0 {
        cfg.snapshot_every as f64 * 20.0 * cfg.dt
    } else {
        cfg.horizon
    };
    let mut state = psi0;
    let mut t_offset = 0.0;
    let mut steady = false;
    let mut steady_time = None;
    let mut final_norm = state.norm_h();
    let mut snap_idx = 0usize;
    while t_offset < cfg.horizon && !steady {
        let span = segment.min(cfg.horizon - t_offset);
        let traj = integ.evolve(&state, span)?;
        let skip = if t_offset == 0.0 { 0 } else { 1 }; // t = 0 row repeats
        for i in skip..traj.times.len() {
            let _ = writeln!(
                csv,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                t_offset + traj.times[i],
                traj.norms[i],
                traj.amplitudes[i],
                traj.phases[i],
                traj.mean_flows[i]
            );
        }
        t_offset += *traj.times.last().unwrap();
        steady = traj.steady;
        steady_time = traj.steady_time.map(|ts| ts + t_offset - traj.times.last().unwrap());
        final_norm = *traj.norms.last().unwrap();
        state = traj.final_field;
        if cfg.snapshot_every > 0 && !steady && t_offset < cfg.horizon {
            let name = format!("field_{snap_idx:05}.snap");
            let mut snap = Vec::new();
            benard_core::write_snapshot(&mut snap, &state)?;
            std::fs::write(dir.join(&name), &snap)?;
            manifest.add_file(dir, &name)?;
            snap_idx += 1;
        }
    }
    let traj_final = state;
    write_file(dir, "trajectory.csv", &csv, &mut manifest)?;

    let mut snap = Vec::new();
    benard_core::write_snapshot(&mut snap, &traj_final)?;
    std::fs::write(dir.join("field_final.snap"), &snap)?;
    manifest.add_file(dir, "field_final.snap")?;

    manifest.constant("R", r);
    manifest.constant("L", l);
    manifest.constant("R_c", r_c);
    manifest.constant("L_c", l_c);
    manifest.constant("beta1", growth_rate_beta1(r, cfg.bc)?);
    manifest.constant("dt_stability_bound", integ.dt_stability_bound);
    manifest.constant("final_norm", final_norm);
    manifest.constant("final_amplitude", traj_final.amplitude());
    manifest.constant("final_mean_flow", traj_final.mean_flow());
    manifest.constant("steady", if steady { 1.0 } else { 0.0 });
    if let Some(ts) = steady_time {
        manifest.constant("steady_time", ts);
    }
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    println!(
        "simulated {} at R = {:.4}: steady = {}, final amplitude {:.6e}, |M| = {:.3e}",
        cfg.bc,
        r,
        steady,
        traj_final.amplitude(),
        traj_final.mean_flow().abs()
    );
    Ok(())
}

pub fn cmd_classify(cfg: &RunConfig, dir: &Path, snapshot: &Path) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("classify", cfg.dump());
    let field = benard_core::load_snapshot(snapshot)
        .with_context(|| format!("loading snapshot {}", snapshot.display()))?;
    let bc = field.basis().bc;
    let report = classify_regime(&field, bc, &TopologyOptions::default())?;

    let mut text = String::new();
    let _ = writeln!(text, "regime: {:?}", report.regime);
    let _ = writeln!(text, "mean_flow: {:.12e}", report.mean_flow);
    let _ = writeln!(text, "mean_flow_sign: {}", report.mean_flow_sign);
    let _ = writeln!(text, "d_regular: {}", report.d_regular);
    for w in &report.d_regular_witnesses {
        let _ = writeln!(text, "  - {w}");
    }
    let _ = writeln!(
        text,
        "structurally_stable[{:?}]: {}",
        report.space_tag,
        report
            .structurally_stable
            .map(|b| b.to_string())
            .unwrap_or_else(|| "unknown".into())
    );
    for rsn in &report.stability_reasons {
        let _ = writeln!(text, "  - {rsn}");
    }
    let _ = writeln!(text, "singular_points:");
    for p in &report.points {
        let _ = writeln!(
            text,
            "  - kind: {:?}  at: ({:.6}, {:.6})  det: {:.4e}  wall: {:?}",
            p.kind, p.location[0], p.location[1], p.jacobian_det, p.wall
        );
    }
    let _ = writeln!(
        text,
        "separatrices: {} total, {} cross-channel, {} unresolved",
        report.graph.edges.len(),
        report.graph.cross_channel_edges(),
        report.graph.unresolved_edges()
    );
    write_file(dir, "report.txt", &text, &mut manifest)?;

    let svg = benard_core::svg::render_flow_svg(&field, &report);
    write_file(dir, "topology.svg", &svg, &mut manifest)?;

    let mut sep = String::from("edge,from_x1,from_x2,to_x1,to_x2,cross_channel,x1,x2\n");
    for (ei, e) in report.graph.edges.iter().enumerate() {
        let from = report.graph.saddles[e.from].location;
        let to = e
            .to
            .map(|t| report.graph.saddles[t].location)
            .unwrap_or([f64::NAN, f64::NAN]);
        for p in &e.polyline {
            let _ = writeln!(
                sep,
                "{ei},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.9e},{:.9e}",
                from[0], from[1], to[0], to[1], e.cross_channel, p[0], p[1]
            );
        }
    }
    write_file(dir, "separatrices.csv", &sep, &mut manifest)?;

    manifest.constant("mean_flow", report.mean_flow);
    manifest.constant(
        "cross_channel_edges",
        report.graph.cross_channel_edges() as f64,
    );
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    println!(
        "classified {}: {:?}, D-regular = {}, stable[{:?}] = {:?}",
        snapshot.display(),
        report.regime,
        report.d_regular,
        report.space_tag,
        report.structurally_stable
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    Reduced,
    Dns,
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    dir: &Path,
    ratios: (f64, f64, usize),
    method: SweepMethod,
    alpha_at_r: bool,
) -> Result<()> {
    let t0 = Instant::now();
    let mut manifest = Manifest::new("sweep", cfg.dump());
    let cp = critical_point(cfg.bc)?;
    let (lo, hi, n) = ratios;
    if !(lo > 0.0 && hi >= lo && n >= 2) {
        bail!("ratio range must satisfy 0 < lo <= hi with at least 2 points");
    }
    let alpha_eval = if alpha_at_r {
        AlphaEval::AtRayleigh
    } else {
        AlphaEval::AtCritical
    };
    let mut csv = String::from("ratio,R,beta1,alpha,amplitude\n");
    let mut fit_pts = Vec::new();
    for i in 0..n {
        let ratio = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let r = ratio * cp.r_c;
        let model = ReducedModel::build(cfg.bc, r, cfg.j_max, alpha_eval)?;
        let amplitude = match method {
            SweepMethod::Reduced => model.equilibrium_amplitude()?,
            SweepMethod::Dns => {
                let basis = Basis::new(cfg.bc, cp.l_c, r, cfg.k_max, cfg.j_max, None)?;
                let opts = IntegrateOptions {
                    dt: cfg.dt,
                    scheme: cfg.scheme,
                    pr_scaling: cfg.pr_scaling.then_some(cfg.prandtl),
                    steady_tol: cfg.steady_tol,
                    record_every: 20,
                };
                let integ = Integrator::new(basis.clone(), r, opts)?;
                let mut psi0 = SpectralField::seeded_noise(basis, cfg.seed, cfg.noise);
                psi0.zero_shear();
                let traj = integ.evolve(&psi0, cfg.horizon)?;
                traj.final_field.amplitude()
            }
        };
        let _ = writeln!(
            csv,
            "{ratio:.12e},{r:.12e},{:.12e},{:.12e},{amplitude:.12e}",
            model.beta1, model.alpha
        );
        if amplitude > 0.0 && r > cp.r_c {
            fit_pts.push(((r - cp.r_c).ln(), amplitude.ln()));
        }
    }
    write_file(dir, "sweep.csv", &csv, &mut manifest)?;

    let exponent = if fit_pts.len() >= 2 {
        let m = fit_pts.len() as f64;
        let mx = fit_pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = fit_pts.iter().map(|p| p.1).sum::<f64>() / m;
        let num: f64 = fit_pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = fit_pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        num / den
    } else {
        f64::NAN
    };
    manifest.constant("R_c", cp.r_c);
    manifest.constant("exponent", exponent);
    manifest.timing("total", t0.elapsed().as_secs_f64());
    manifest.write(dir)?;
    if exponent.is_nan() {
        println!("sweep of {} complete; all amplitudes zero (subcritical range)", cfg.bc);
    } else {
        println!("sweep of {} complete; amplitude exponent {:.4}", cfg.bc, exponent);
    }
    Ok(())
}

pub fn cmd_report(run_dir: &Path) -> Result<()> {
    let summary = crate::manifest::verify(run_dir)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run: {} ({} outputs verified)",
        summary.command,
        summary.files.len()
    );
    for line in &summary.config_lines {
        let _ = writeln!(out, "  config {line}");
    }
    for (k, v) in &summary.constants {
        let _ = writeln!(out, "  {k} = {v:.10e}");
    }
    for (name, hash, size) in &summary.files {
        let _ = writeln!(out, "  {name}  {size} bytes  sha256:{}...", &hash[..12]);
    }
    // tolerate a closed pipe (e.g. `benard report | head`)
    use std::io::Write as _;
    let _ = std::io::stdout().write_all(out.as_bytes());
    Ok(())
}
