//! CSV and summary writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::HarnessError;

use super::run::RunMetrics;

/// Decimal text with 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.display().to_string(),
        source: e.into(),
    }
}

fn write_table(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x)))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn xyz(prefix: &str) -> [String; 3] {
    ["x", "y", "z"].map(|a| format!("{prefix}_{a}"))
}

/// Writes `states.csv`, `momentum.csv`, `dipoles.csv`, `inversion.csv` and `summary.txt`.
pub fn write_csv(metrics: &RunMetrics, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let n = metrics.n;
    let recs = &metrics.records;
    let mut out = Vec::new();

    let path = dir.join("states.csv");
    let mut header = vec!["t".to_string()];
    for j in 1..=n {
        for q in ["r", "v", "sigma", "omega", "h"] {
            header.extend(xyz(&format!("{q}{j}")));
        }
    }
    write_table(
        &path,
        &header,
        recs.iter().map(|r| {
            let mut row = vec![r.t];
            for j in 0..n {
                let h = match metrics.rw_indices.iter().position(|&i| i == j) {
                    Some(i) => r.state.h[i],
                    None => Default::default(),
                };
                for v in [
                    &r.positions[j],
                    &r.velocities[j],
                    &r.state.sigma[j].0,
                    &r.state.omega[j],
                    &h,
                ] {
                    row.extend_from_slice(v.as_slice());
                }
            }
            row
        }),
    )?;
    out.push(path);

    let path = dir.join("momentum.csv");
    let mut header = vec!["t".to_string()];
    header.extend(xyz("L"));
    for &j in &metrics.rw_indices {
        header.extend(xyz(&format!("h{}", j + 1)));
    }
    write_table(
        &path,
        &header,
        recs.iter().map(|r| {
            let mut row = vec![r.t];
            row.extend_from_slice(r.angular_momentum.as_slice());
            for h in &r.state.h {
                row.extend_from_slice(h.as_slice());
            }
            row
        }),
    )?;
    out.push(path);

    let path = dir.join("dipoles.csv");
    let mut header = vec!["t".to_string()];
    for j in 1..=n {
        header.extend([
            format!("mu_sin{j}"),
            format!("mu_cos{j}"),
            format!("mu_dc{j}"),
        ]);
    }
    write_table(
        &path,
        &header,
        recs.iter().map(|r| {
            let mut row = vec![r.t];
            for j in 0..n {
                let (s, c, d) = r.dipoles.norms(j);
                row.extend([s, c, d]);
            }
            row
        }),
    )?;
    out.push(path);

    let path = dir.join("inversion.csv");
    let header = ["t", "residual", "objective", "iterations"].map(String::from);
    write_table(
        &path,
        &header,
        recs.iter().map(|r| {
            vec![
                r.t,
                r.inversion.residual,
                r.inversion.objective,
                r.inversion.iterations as f64,
            ]
        }),
    )?;
    out.push(path);

    let path = dir.join("summary.txt");
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    f.write_all(summary_text(metrics).as_bytes())
        .map_err(io_err(&path))?;
    out.push(path);
    Ok(out)
}

/// `key = value` lines of the run summary.
pub fn summary_text(m: &RunMetrics) -> String {
    let s = &m.summary;
    let iters: Vec<usize> = m.records.iter().map(|r| r.inversion.iterations).collect();
    let mut sorted = iters.clone();
    sorted.sort_unstable();
    let median = sorted[sorted.len() / 2];
    let last = m.final_record();
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    kv("scenario", m.name.clone());
    kv("satellites", m.n.to_string());
    kv("control_steps", (m.records.len() - 1).to_string());
    kv("final_time_s", fmt(last.t));
    kv("h_dispersion_max", fmt(s.h_dispersion_max));
    kv("final_h_dispersion", fmt(s.final_h_dispersion));
    kv("final_position_error", fmt(s.final_position_error));
    kv("final_attitude_error", fmt(s.final_attitude_error));
    kv("initial_dq_norm", fmt(s.initial_dq));
    kv("final_dq_norm", fmt(s.final_dq));
    kv("L_drift", fmt(s.l_drift));
    kv("L_max", fmt(s.l_max));
    kv(
        "max_momentum_residual",
        s.max_momentum_residual.map_or("n/a".into(), fmt),
    );
    kv(
        "max_lyapunov_increase",
        s.max_lyapunov_increase.map_or("n/a".into(), fmt),
    );
    kv("unconverged_steps", s.unconverged_steps.to_string());
    kv("reinitializations", s.reinitializations.to_string());
    kv("median_inversion_iterations", median.to_string());
    out
}
