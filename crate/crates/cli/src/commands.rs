//! Command implementations and run outputs.

use crate::config::RunConfig;
use descent_vi_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_FOUND: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Contract(_) => EXIT_CONFIG,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::BranchLost { .. } => EXIT_NOT_FOUND,
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create output dir {}: {e}", dir.display())))?;
    fs::write(dir.join(name), contents)
        .map_err(|e| Error::config(format!("cannot write {name}: {e}")))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::numerical(format!("serialization failed: {e}")))?;
    write_file(dir, name, &s)
}

fn write_manifest(dir: &Path, command: &str, config_path: &Path, started: Instant) -> Result<()> {
    let bytes = fs::read(config_path).unwrap_or_default();
    let hash = format!("{:x}", Sha256::digest(&bytes));
    let manifest = serde_json::json!({
        "command": command,
        "config": config_path.display().to_string(),
        "config_sha256": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
        "timestamp_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    write_file(dir, "manifest.json", &serde_json::to_string_pretty(&manifest).unwrap())
}

fn write_field(dir: &Path, stem: &str, grid: &Grid, field: &Field) -> Result<()> {
    write_file(dir, &format!("{stem}.csv"), &field_to_csv(grid, field)?)?;
    write_file(dir, &format!("{stem}.json"), &field_to_json(field))
}

/// `r_seed` policy: keep an explicit value; otherwise use `r1` when the
/// spectral-plane hypothesis check passes at `r1`, else 1.0 with a warning.
fn resolve_r_seed(cfg: &mut RunConfig) -> Result<()> {
    if cfg.r_seed_explicit {
        return Ok(());
    }
    let eig = eigenpairs(&cfg.grid, 2)?;
    let rep = check_h5(&cfg.grid, &cfg.nonlinearity, &cfg.obstacle, cfg.search.r1, &eig)?;
    if rep.passed() {
        cfg.search.r_seed = cfg.search.r1;
    } else {
        log::warn!(
            "spectral-plane check failed at r1 = {} (constraint {}, Q {}); using r_seed = 1.0",
            cfg.search.r1,
            rep.constraint_passed,
            rep.q_passed
        );
        cfg.search.r_seed = 1.0;
    }
    Ok(())
}

pub fn run_check(cfg: &RunConfig, config_path: &Path) -> Result<i32> {
    let started = Instant::now();
    let params = GrowthCheckParams {
        x_extents: cfg.grid.extents().to_vec(),
        seed: cfg.seed,
        ..GrowthCheckParams::default()
    };
    let hyp = check_hypotheses(&cfg.nonlinearity, &params, 2000)?;
    let eig = eigenpairs(&cfg.grid, 2)?;
    let h5 = check_h5(&cfg.grid, &cfg.nonlinearity, &cfg.obstacle, cfg.search.r1, &eig)?;
    let dir = &cfg.out_dir;
    write_json(dir, "hypothesis_report.json", &hyp)?;
    write_json(dir, "h5_report.json", &h5)?;
    write_file(dir, "grid.json", &grid_to_json(&cfg.grid))?;
    write_manifest(dir, "check", config_path, started)?;
    for c in &hyp.checks {
        println!("{:<24} {}", c.name, if c.passed { "pass" } else { "FAIL" });
    }
    println!(
        "h5 (r1 = {}): constraint {}, Q<0 {}",
        h5.r1,
        if h5.constraint_passed { "pass" } else { "FAIL" },
        if h5.q_passed { "pass" } else { "FAIL" }
    );
    Ok(EXIT_OK)
}

pub fn run_solve_penalty(cfg: &RunConfig, config_path: &Path) -> Result<i32> {
    let started = Instant::now();
    let eps = cfg
        .eps
        .ok_or_else(|| Error::config("missing section [penalty]"))?;
    let pp = PenaltyProblem::new(cfg.grid.clone(), cfg.nonlinearity.clone(), cfg.obstacle.clone(), eps)?;
    let eig = eigenpairs(&cfg.grid, 2)?;
    let dir_field = match cfg.seed_dir.as_str() {
        "phi1" => eig[0].field.clone(),
        "neg_phi1" => eig[0].field.scaled(-1.0),
        "phi2" => eig[1].field.clone(),
        "neg_phi2" => eig[1].field.scaled(-1.0),
        other => return Err(Error::config(format!("unknown seed_dir \"{other}\""))),
    };
    let seed = dir_field.scaled(cfg.search.t0);
    let mut trace_csv = String::from("step,h_step,energy,grad_norm\n");
    let report = flow_to_critical_traced(&pp, &seed, &cfg.search.flow, &mut |row, _| {
        writeln!(trace_csv, "{},{},{},{}", row.step, row.h_step, row.energy, row.grad_norm).unwrap();
    })?;
    let solution = SolutionReport::assess(&pp, report, cfg.search.part_tol)?;
    let dir = &cfg.out_dir;
    write_field(dir, "solution_field", &cfg.grid, &solution.field)?;
    write_json(dir, "solution_report.json", &solution)?;
    write_file(dir, "grid.json", &grid_to_json(&cfg.grid))?;
    if cfg.trace {
        write_file(dir, "flow_trace.csv", &trace_csv)?;
    }
    write_manifest(dir, "solve-penalty", config_path, started)?;
    println!(
        "solve-penalty: {} ({:?}) energy {:.6e} grad {:.3e}",
        solution.classification, solution.reason, solution.energy, solution.grad_norm
    );
    Ok(EXIT_OK)
}

pub fn run_triple(cfg: &mut RunConfig, config_path: &Path) -> Result<i32> {
    let started = Instant::now();
    resolve_r_seed(cfg)?;
    let eps = cfg
        .eps
        .ok_or_else(|| Error::config("missing section [penalty]"))?;
    let pp = PenaltyProblem::new(cfg.grid.clone(), cfg.nonlinearity.clone(), cfg.obstacle.clone(), eps)?;
    let mut report = solve_triple(&pp, &cfg.search)?;
    let dir = &cfg.out_dir;
    let mut all_found = true;
    for (stem, slot) in [
        ("positive_field", &mut report.positive),
        ("negative_field", &mut report.negative),
        ("sign_changing_field", &mut report.sign_changing),
    ] {
        if slot.found {
            write_field(dir, stem, &cfg.grid, &slot.field)?;
            slot.field_file = Some(format!("{stem}.csv"));
        } else {
            all_found = false;
        }
    }
    write_json(dir, "triple_report.json", &report)?;
    write_file(dir, "grid.json", &grid_to_json(&cfg.grid))?;
    write_manifest(dir, "triple", config_path, started)?;
    for (name, slot) in [
        ("positive", &report.positive),
        ("negative", &report.negative),
        ("sign_changing", &report.sign_changing),
    ] {
        if slot.found {
            println!(
                "{name:<14} found: energy {:.6e}, grad {:.3e}, parts ({:.3e}, {:.3e})",
                slot.energy, slot.grad_norm, slot.part_norm_plus, slot.part_norm_minus
            );
        } else {
            println!(
                "{name:<14} NOT FOUND: {}",
                slot.not_found_reason.as_deref().unwrap_or("unknown")
            );
        }
    }
    Ok(if all_found { EXIT_OK } else { EXIT_NOT_FOUND })
}

pub fn run_continue(cfg: &mut RunConfig, config_path: &Path) -> Result<i32> {
    let started = Instant::now();
    resolve_r_seed(cfg)?;
    let schedule = cfg
        .schedule
        .clone()
        .ok_or_else(|| Error::config("missing section [schedule]"))?;
    let branch = match cfg.branch.as_deref() {
        Some("positive") | None => Branch::Positive,
        Some("negative") => Branch::Negative,
        Some("sign_changing") => Branch::SignChanging,
        Some(other) => {
            return Err(Error::config(format!(
                "unknown branch \"{other}\" (positive | negative | sign_changing)"
            )))
        }
    };
    let cert = match continue_to_vi(
        &cfg.grid,
        &cfg.nonlinearity,
        &cfg.obstacle,
        &cfg.search,
        &schedule,
        branch,
    ) {
        Ok(c) => c,
        Err(e @ Error::BranchLost { .. }) => {
            eprintln!("{e}");
            return Ok(EXIT_NOT_FOUND);
        }
        Err(e) => return Err(e),
    };

    // random admissible test fields complement the deterministic defaults
    let mut fields = default_vi_test_fields(&cfg.grid, &cfg.obstacle, &cert.final_field);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let l = cfg.grid.extents()[0];
    for _ in 0..50 {
        let amp: f64 = rng.gen_range(-0.5..0.5);
        let freq: f64 = rng.gen_range(0.3..3.0);
        let raw = cfg.grid.field_from_fn(|x| {
            amp * (std::f64::consts::PI * x[0] / l).sin() * (freq * x[0]).cos()
        });
        fields.push(Field::from(
            raw.iter()
                .zip(cfg.obstacle.values.iter())
                .map(|(&a, &p)| a.min(p))
                .collect::<Vec<f64>>(),
        ));
    }
    let vi_vals = sample_vi_tests(&cfg.grid, &cfg.nonlinearity, &cfg.obstacle, &cert.final_field, &fields)?;
    let vi_min = vi_vals.iter().copied().fold(f64::INFINITY, f64::min);

    let dir = &cfg.out_dir;
    let mut table = String::from("n,eps,energy,norm,norm_plus,norm_minus,feas_l2\n");
    for r in &cert.stages {
        writeln!(
            table,
            "{},{},{},{},{},{},{}",
            r.n, r.eps, r.energy, r.norm, r.norm_plus, r.norm_minus, r.feas_l2
        )
        .unwrap();
    }
    write_file(dir, "stage_table.csv", &table)?;
    write_field(dir, "final_field", &cfg.grid, &cert.final_field)?;
    write_json(dir, "vi_certificate.json", &cert)?;
    write_file(dir, "grid.json", &grid_to_json(&cfg.grid))?;
    write_manifest(dir, "continue", config_path, started)?;
    println!(
        "continue ({branch:?}): {} stages, final eps {:.3e}, feasibility {:.3e}, vi_min {:.3e}",
        cert.stages.len(),
        cert.final_eps,
        cert.feasibility_l2,
        vi_min
    );
    println!(
        "residuals: feasibility {:.3e}, stationarity {:.3e}, complementarity {:.3e}",
        cert.residuals.feasibility, cert.residuals.stationarity, cert.residuals.complementarity
    );
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// plot-data

fn read_csv(path: &Path) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next()?.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Option<Vec<f64>> = line.split(',').map(|v| v.trim().parse().ok()).collect();
        rows.push(row?);
    }
    Some((header, rows))
}

/// Emit gnuplot-ready two-column data from a completed run directory.
pub fn run_plot_data(dir: &Path) -> Result<i32> {
    if !dir.is_dir() {
        return Err(Error::config(format!("{} is not a directory", dir.display())));
    }
    let mut emitted = 0usize;
    let entries = fs::read_dir(dir)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries.flatten() {
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name.ends_with("_field.csv") || name == "final_field.csv" {
            let Some((header, mut rows)) = read_csv(&path) else { continue };
            let stem = name.trim_end_matches(".csv");
            if header.len() == 2 {
                rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
                let mut out = String::new();
                for r in &rows {
                    writeln!(out, "{} {}", r[0], r[1]).unwrap();
                }
                write_file(dir, &format!("{stem}_profile.dat"), &out)?;
                emitted += 1;
            } else if header.len() == 3 {
                // gnuplot splot grid: blank line between scanlines
                rows.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
                let mut out = String::new();
                let mut last_y = f64::NAN;
                for r in &rows {
                    if last_y == last_y && r[1] != last_y {
                        out.push('\n');
                    }
                    writeln!(out, "{} {} {}", r[0], r[1], r[2]).unwrap();
                    last_y = r[1];
                }
                write_file(dir, &format!("{stem}_contour.dat"), &out)?;
                emitted += 1;
            }
        } else if name == "stage_table.csv" {
            let Some((header, rows)) = read_csv(&path) else { continue };
            let col = |key: &str| header.iter().position(|h| h == key);
            if let (Some(e), Some(f)) = (col("eps"), col("feas_l2")) {
                let mut out = String::new();
                for r in &rows {
                    writeln!(out, "{} {}", r[e], r[f]).unwrap();
                }
                write_file(dir, "feasibility_vs_eps_loglog.dat", &out)?;
                emitted += 1;
            }
            if let (Some(n), Some(en)) = (col("n"), col("energy")) {
                let mut out = String::new();
                for r in &rows {
                    writeln!(out, "{} {}", r[n], r[en]).unwrap();
                }
                write_file(dir, "energy_vs_stage.dat", &out)?;
                emitted += 1;
            }
        } else if name.ends_with("trace.csv") {
            let Some((header, rows)) = read_csv(&path) else { continue };
            let col = |key: &str| header.iter().position(|h| h == key);
            if let (Some(s), Some(e)) = (col("step"), col("energy")) {
                let mut out = String::new();
                for r in &rows {
                    writeln!(out, "{} {}", r[s], r[e]).unwrap();
                }
                let stem = name.trim_end_matches(".csv");
                write_file(dir, &format!("{stem}_energy.dat"), &out)?;
                emitted += 1;
            }
        }
    }
    if emitted == 0 {
        return Err(Error::config(format!(
            "no plottable inputs found in {}",
            dir.display()
        )));
    }
    println!("wrote {emitted} plot file(s) to {}", dir.display());
    Ok(EXIT_OK)
}
