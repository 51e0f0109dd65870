//! File outputs: one CSV per signal family plus a JSON summary.
//!
//! Floats are written with the shortest representation that parses back to
//! the identical bit pattern, so a CSV round trip is lossless and two runs
//! with the same seed produce byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::geometry::{Mat3, RotationMatrix, Vec3};
use crate::harness::analysis::{compare_summary, summarize};
use crate::harness::{RunError, RunRecord};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<(), RunError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for row in rows {
        let mut line = String::with_capacity(row.len() * 12);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Parse a CSV produced by [`export`]: header names plus numeric rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), RunError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect::<Vec<_>>())
        .unwrap_or_default();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| RunError::Config(format!("bad number in {path:?}: {e}")))?);
    }
    Ok((header, rows))
}

fn mat_cols(prefix: &str) -> Vec<String> {
    let mut cols = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            cols.push(format!("{prefix}{i}{j}"));
        }
    }
    cols
}

fn push_mat(row: &mut Vec<f64>, m: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            row.push(m[(i, j)]);
        }
    }
}

fn push_vec(row: &mut Vec<f64>, v: Vec3) {
    row.extend_from_slice(&v.as_array());
}

fn rotation_series<'a>(
    t: &'a [f64],
    pos: impl Fn(usize) -> Vec3 + 'a,
    rot: impl Fn(usize) -> RotationMatrix + 'a,
) -> impl Iterator<Item = Vec<f64>> + 'a {
    t.iter().enumerate().map(move |(k, &tk)| {
        let mut row = vec![tk];
        push_vec(&mut row, pos(k));
        push_mat(&mut row, rot(k).mat());
        row
    })
}

fn landmark_point_rows<'a>(
    record: &'a RunRecord,
    field: impl Fn(usize, usize) -> Vec3 + 'a,
) -> impl Iterator<Item = Vec<f64>> + 'a {
    record.t.iter().enumerate().map(move |(k, &tk)| {
        let mut row = vec![tk];
        for i in 0..record.landmarks.len() {
            push_vec(&mut row, field(i, k));
        }
        row
    })
}

fn landmark_point_header(n: usize, prefix: &str) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for axis in ["x", "y", "z"] {
            header.push(format!("{prefix}{i}_{axis}"));
        }
    }
    header
}

fn scalar_family_header(n: usize, prefixes: &[&str]) -> Vec<String> {
    let mut header = vec!["t".to_string()];
    for prefix in prefixes {
        for i in 0..n {
            header.push(format!("{prefix}_{i}"));
        }
    }
    header
}

/// Write the full record to `out_dir`: `truth.csv`, `extension.csv`,
/// `estimate.csv`, `landmarks_v.csv`, `landmarks_inertial.csv`,
/// `landmarks_bar.csv`, `errors.csv`, `drem.csv`, `summary.json`, plus
/// `comparison.csv`/`comparison.json` when the run carried the baseline.
/// Returns the created paths.
pub fn export(record: &RunRecord, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let n = record.landmarks.len();
    let mut written = Vec::new();
    let mut emit = |name: &str, header: Vec<String>, rows: Box<dyn Iterator<Item = Vec<f64>> + '_>| {
        let path = out_dir.join(name);
        write_csv(&path, &header, rows)?;
        written.push(path);
        Ok::<(), RunError>(())
    };

    let mut header = vec!["t".into(), "p_x".into(), "p_y".into(), "p_z".into()];
    header.extend(mat_cols("r"));
    emit(
        "truth.csv",
        header,
        Box::new(rotation_series(
            &record.t,
            |k| record.truth[k].translation,
            |k| record.truth[k].rotation,
        )),
    )?;

    let mut header = vec!["t".into(), "xi_x".into(), "xi_y".into(), "xi_z".into()];
    header.extend(mat_cols("q"));
    emit(
        "extension.csv",
        header,
        Box::new(rotation_series(
            &record.t,
            |k| record.ext[k].translation,
            |k| record.ext[k].rotation,
        )),
    )?;

    let mut header = vec!["t".into(), "xhat_x".into(), "xhat_y".into(), "xhat_z".into()];
    header.extend(mat_cols("rhat"));
    header.push("att_err".into());
    header.push("pos_err".into());
    emit(
        "estimate.csv",
        header,
        Box::new(record.t.iter().enumerate().map(|(k, &tk)| {
            let mut row = vec![tk];
            push_vec(&mut row, record.x_hat[k]);
            push_mat(&mut row, record.r_hat[k].mat());
            row.push(record.att_err[k]);
            row.push(record.pos_err[k]);
            row
        })),
    )?;

    emit(
        "landmarks_v.csv",
        landmark_point_header(n, "lv"),
        Box::new(landmark_point_rows(record, |i, k| record.landmarks[i].l_hat_v[k])),
    )?;
    emit(
        "landmarks_inertial.csv",
        landmark_point_header(n, "l"),
        Box::new(landmark_point_rows(record, |i, k| record.landmarks[i].l_hat[k])),
    )?;
    emit(
        "landmarks_bar.csv",
        landmark_point_header(n, "lbar"),
        Box::new(landmark_point_rows(record, |i, k| record.landmarks[i].l_bar[k])),
    )?;

    emit(
        "errors.csv",
        scalar_family_header(n, &["err_v", "err_inertial", "err_bar"]),
        Box::new(record.t.iter().enumerate().map(|(k, &tk)| {
            let mut row = vec![tk];
            for i in 0..n {
                row.push(record.landmarks[i].err_v[k].norm());
            }
            for i in 0..n {
                row.push(record.landmarks[i].err_inertial[k]);
            }
            for i in 0..n {
                row.push(record.landmarks[i].err_bar[k]);
            }
            row
        })),
    )?;

    emit(
        "drem.csv",
        scalar_family_header(n, &["delta", "delta_e", "omega"]),
        Box::new(record.t.iter().enumerate().map(|(k, &tk)| {
            let mut row = vec![tk];
            for i in 0..n {
                row.push(record.landmarks[i].delta[k]);
            }
            for i in 0..n {
                row.push(record.landmarks[i].delta_e[k]);
            }
            for i in 0..n {
                row.push(record.landmarks[i].omega[k]);
            }
            row
        })),
    )?;

    let with_baseline = record.landmarks.iter().all(|l| !l.baseline_err.is_empty())
        && !record.landmarks.is_empty();
    if with_baseline {
        emit(
            "comparison.csv",
            scalar_family_header(n, &["observer_err", "baseline_err"]),
            Box::new(record.t.iter().enumerate().map(|(k, &tk)| {
                let mut row = vec![tk];
                for i in 0..n {
                    row.push(record.landmarks[i].err_inertial[k]);
                }
                for i in 0..n {
                    row.push(record.landmarks[i].baseline_err[k]);
                }
                row
            })),
        )?;
        let path = out_dir.join("comparison.json");
        let json = serde_json::to_string_pretty(&compare_summary(record))
            .expect("summary serialization cannot fail");
        fs::write(&path, json).map_err(io_err(&path))?;
        written.push(path);
    }

    let path = out_dir.join("summary.json");
    let json = summary_json(record);
    fs::write(&path, json).map_err(io_err(&path))?;
    written.push(path);

    Ok(written)
}

/// The run summary as a JSON string (fixed field order; byte-deterministic
/// for a fixed seed).
pub fn summary_json(record: &RunRecord) -> String {
    serde_json::to_string_pretty(&summarize(record)).expect("summary serialization cannot fail")
}
