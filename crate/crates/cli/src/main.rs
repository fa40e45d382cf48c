//! fl-ist: scattering, soliton construction, time evolution and cone
//! asymptotics for the focusing Fokas-Lenells equation.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numeric failure (the
//! failing subsystem's error name is printed to stderr).

mod io;
mod verify;

use clap::{Parser, Subcommand};
use fl_core::asymptotic::{cone_slice_residual, fit_decay_rate, ConeSpec};
use fl_core::error::Error as FlError;
use fl_core::evolve::{evolve, EvolverConfig, ZeroModePolicy};
use fl_core::field::{
    make_grid, potential_from_csv, potential_to_csv, SampledPotential, SpectralContour,
};
use fl_core::rhp::{nsoliton_field, FlParams};
use fl_core::scattering::{scattering_coefficients_with, ScatterConfig};
use fl_core::spectrum::{find_discrete_spectrum_with, SearchBox};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "fl-ist",
    version,
    about = "Inverse-scattering toolkit for the focusing Fokas-Lenells equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute scattering data a, b, r on the cross contour from a field CSV
    Scatter {
        /// input potential CSV (columns x, re_u, im_u with a JSON header)
        #[arg(long = "in")]
        input: PathBuf,
        /// smallest |k| node (default 0.05)
        #[arg(long, default_value_t = 0.05)]
        k_min: f64,
        /// largest |k| node (default 3.0)
        #[arg(long, default_value_t = 3.0)]
        k_max: f64,
        /// contour nodes per side and axis (default 24)
        #[arg(long, default_value_t = 24)]
        nodes: usize,
        /// formulation switch radius (default 1.0)
        #[arg(long, default_value_t = 1.0)]
        k_switch: f64,
        /// spectral-singularity floor on |a| (default 1e-6)
        #[arg(long, default_value_t = 1e-6)]
        a_floor: f64,
        /// boundary decay tolerance (default 1e-8)
        #[arg(long, default_value_t = 1e-8)]
        decay_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate the discrete spectrum in a first-quadrant box
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        /// scattering JSON produced by `scatter`
        #[arg(long)]
        scattering: PathBuf,
        /// search box re_min,re_max,im_min,im_max
        #[arg(long = "box", value_parser = parse_box)]
        search_box: SearchBoxArg,
        #[arg(long, default_value_t = 1e-8)]
        decay_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the N-soliton field from an ensemble JSON
    Nsoliton {
        #[arg(long)]
        ensemble: PathBuf,
        /// grid as x_min,x_max,n_points
        #[arg(long, value_parser = parse_grid)]
        grid: GridArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve a field with the spectral Fokas-Lenells integrator
    Evolve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        t_end: f64,
        /// snapshot policy `every:S` (time units)
        #[arg(long)]
        snap: Option<String>,
        /// zero-mode policy: analytic-limit (default) or project-out
        #[arg(long, default_value = "analytic-limit")]
        zero_mode: String,
        /// output directory for snapshots and the manifest
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the evolved field against the cone leading asymptotic
    Asymptote {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scattering: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// cone as x1,x2,v1,v2
        #[arg(long, value_parser = parse_cone)]
        cone: ConeArg,
        /// sweep as t_start:t_end:count (geometric spacing)
        #[arg(long, value_parser = parse_sweep)]
        t_sweep: SweepArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite and emit a machine-readable report
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// report JSON path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug)]
struct SearchBoxArg(SearchBox);

#[derive(Clone, Copy, Debug)]
struct GridArg(f64, f64, usize);

#[derive(Clone, Copy, Debug)]
struct ConeArg(ConeSpec);

#[derive(Clone, Copy, Debug)]
struct SweepArg(f64, f64, usize);

fn split4(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected 4 comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.trim().parse().map_err(|e| format!("bad number '{p}': {e}"))?;
    }
    Ok(out)
}

fn parse_box(s: &str) -> Result<SearchBoxArg, String> {
    let v = split4(s)?;
    Ok(SearchBoxArg(SearchBox { re_min: v[0], re_max: v[1], im_min: v[2], im_max: v[3] }))
}

fn parse_cone(s: &str) -> Result<ConeArg, String> {
    let v = split4(s)?;
    Ok(ConeArg(ConeSpec { x1: v[0], x2: v[1], v1: v[2], v2: v[3] }))
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x_min,x_max,n, got '{s}'"));
    }
    let x0: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let x1: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    let n: usize = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
    Ok(GridArg(x0, x1, n))
}

fn parse_sweep(s: &str) -> Result<SweepArg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:end:count, got '{s}'"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    let n: usize = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
    if !(a > 0.0 && b > a && n >= 2) {
        return Err("sweep needs 0 < start < end and count >= 2".into());
    }
    Ok(SweepArg(a, b, n))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}: {}", e.name(), e);
            std::process::exit(if e.is_config() { 1 } else { 2 });
        }
    }
}

fn read_field(path: &Path) -> fl_core::Result<SampledPotential> {
    let text = std::fs::read_to_string(path)?;
    potential_from_csv(&text)
}

fn dispatch(cmd: Command) -> fl_core::Result<()> {
    match cmd {
        Command::Scatter { input, k_min, k_max, nodes, k_switch, a_floor, decay_tol, out } => {
            let u = read_field(&input)?;
            let contour = SpectralContour::geometric(k_min, k_max, nodes)?;
            let cfg = ScatterConfig { k_switch, a_floor, decay_tol, ..Default::default() };
            let sd = scattering_coefficients_with(&u, &contour, &cfg)?;
            let prov = io::provenance(
                "scatter",
                &serde_json::json!({
                    "k_min": k_min, "k_max": k_max, "nodes": nodes,
                    "k_switch": k_switch, "a_floor": a_floor, "decay_tol": decay_tol,
                }),
                &[input.as_path()],
            );
            std::fs::write(&out, io::scattering_to_json(&sd, prov))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Spectrum { input, scattering, search_box, decay_tol, out } => {
            let u = read_field(&input)?;
            let sd = io::scattering_from_json(&std::fs::read_to_string(&scattering)?)?;
            let cfg = ScatterConfig { decay_tol, ..Default::default() };
            let ens = find_discrete_spectrum_with(&sd, &u, &search_box.0, &cfg)?;
            let prov = io::provenance(
                "spectrum",
                &serde_json::json!({
                    "box": [search_box.0.re_min, search_box.0.re_max,
                            search_box.0.im_min, search_box.0.im_max],
                }),
                &[input.as_path(), scattering.as_path()],
            );
            std::fs::write(&out, io::ensemble_to_json(&ens, prov))?;
            println!("found {} representative pole(s); wrote {}", ens.n(), out.display());
            Ok(())
        }
        Command::Nsoliton { ensemble, grid, alpha, beta, t, out } => {
            let ens = io::ensemble_from_json(&std::fs::read_to_string(&ensemble)?)?;
            let params = FlParams::new(alpha, beta)?;
            let g = make_grid(grid.0, grid.1, grid.2)?;
            let field = nsoliton_field(&ens, None, g, t, &params)?;
            let prov = io::provenance(
                "nsoliton",
                &serde_json::json!({
                    "alpha": alpha, "beta": beta, "t": t,
                    "grid": [grid.0, grid.1, grid.2],
                }),
                &[ensemble.as_path()],
            );
            std::fs::write(&out, potential_to_csv(&field, Some(&prov)))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Evolve { input, alpha, beta, dt, t_end, snap, zero_mode, out } => {
            let u0 = read_field(&input)?;
            let mut cfg = EvolverConfig::new(alpha, beta, dt, t_end);
            cfg.zero_mode_policy = match zero_mode.as_str() {
                "analytic-limit" => ZeroModePolicy::AnalyticLimit,
                "project-out" => ZeroModePolicy::ProjectOut,
                other => {
                    return Err(FlError::Config(format!("unknown zero-mode policy '{other}'")))
                }
            };
            if let Some(spec) = &snap {
                let every = spec
                    .strip_prefix("every:")
                    .ok_or_else(|| FlError::Config(format!("bad snap spec '{spec}'")))?
                    .parse::<f64>()
                    .map_err(|e| FlError::Config(format!("bad snap interval: {e}")))?;
                cfg.snap_every = Some(every);
            }
            let result = evolve(&u0, &cfg)?;
            std::fs::create_dir_all(&out)?;
            let prov = io::provenance(
                "evolve",
                &serde_json::json!({
                    "alpha": alpha, "beta": beta, "dt": dt, "t_end": t_end,
                    "snap": snap, "zero_mode": zero_mode,
                }),
                &[input.as_path()],
            );
            let mut index = Vec::new();
            for (i, (t, field)) in result.snapshots.iter().enumerate() {
                let name = format!("snap_{i:04}.csv");
                let hdr = serde_json::json!({ "t": t, "provenance": prov });
                std::fs::write(out.join(&name), potential_to_csv(field, Some(&hdr)))?;
                index.push(serde_json::json!({ "t": t, "file": name }));
            }
            let manifest = serde_json::json!({
                "provenance": prov,
                "conserved_drift": result.conserved_drift,
                "energy_log": result.energy_log,
                "snapshots": index,
            });
            std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
            println!(
                "evolved to t = {t_end}; d0 drift {:.3e}; wrote {}",
                result.conserved_drift,
                out.display()
            );
            Ok(())
        }
        Command::Asymptote { input, scattering, ensemble, alpha, beta, dt, cone, t_sweep, out } => {
            let u0 = read_field(&input)?;
            let sd = io::scattering_from_json(&std::fs::read_to_string(&scattering)?)?;
            let ens = io::ensemble_from_json(&std::fs::read_to_string(&ensemble)?)?;
            let params = FlParams::new(alpha, beta)?;
            let SweepArg(t0, t1, count) = t_sweep;
            let ratio = (t1 / t0).powf(1.0 / (count as f64 - 1.0));
            let times: Vec<f64> = (0..count).map(|i| t0 * ratio.powi(i as i32)).collect();
            let mut cfg = EvolverConfig::new(alpha, beta, dt, t1);
            cfg.snap_times = times.clone();
            let run = evolve(&u0, &cfg)?;

            let mut rows = Vec::new();
            let mut samples = Vec::new();
            for (t, field) in run.snapshots.iter().skip(1) {
                if !times.iter().any(|&ts| ((ts - t) / ts).abs() < 1e-6) {
                    continue;
                }
                let (residual, bound) =
                    cone_slice_residual(&ens, Some(&sd), cone.0, &params, field, *t)?;
                samples.push((*t, residual));
                let slope_running = if samples.len() >= 4 {
                    fit_decay_rate(&samples)?.0
                } else {
                    f64::NAN
                };
                rows.push((*t, residual, bound, slope_running));
            }
            let prov = io::provenance(
                "asymptote",
                &serde_json::json!({
                    "alpha": alpha, "beta": beta, "dt": dt,
                    "cone": [cone.0.x1, cone.0.x2, cone.0.v1, cone.0.v2],
                    "t_sweep": [t0, t1, count],
                }),
                &[input.as_path(), scattering.as_path(), ensemble.as_path()],
            );
            let mut text = format!("# {prov}\nt,residual_sup,bound,slope_running\n");
            for (t, r, b, s) in rows {
                text.push_str(&format!("{t:.17e},{r:.17e},{b:.17e},{s:.17e}\n"));
            }
            std::fs::write(&out, text)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Verify { suite, seed, out } => {
            let report = verify::run_verify(suite, seed)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, &text)?,
                None => println!("{text}"),
            }
            if !report.all_pass {
                eprintln!("error: VerificationFailed: one or more cases failed");
                std::process::exit(2);
            }
            Ok(())
        }
    }
}
