//! CSV artifacts.
//!
//! * profiles: `profile,bidder,<col>…`, one row per (profile, bidder); the
//!   columns are `item0…` for item values or bundle labels such as `{0,2}`
//!   for combinatorial values.
//! * menus: `entry,w0…,price`.
//! * transforms: `bidder,group,line,alpha,slope,intercept` plus a
//!   breakpoint file `bidder,bid,virtual`.
//! * heatmaps: first row `v1\v0,<v0 grid>`, then one row per `v1` value.

use std::fs::File;
use std::path::Path;

use regretnet_core::myersonnet::MyersonNet;
use regretnet_core::rochetnet::MenuNet;
use regretnet_core::valuations::{bundle_label, ProfileBatch, ValuationClass};

use crate::error::{CliError, CliResult};

fn writer(path: &Path) -> CliResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn column_labels(class: ValuationClass, width: usize) -> Vec<String> {
    match class {
        ValuationClass::Combinatorial => (0..width).map(|c| bundle_label(c as u32 + 1)).collect(),
        _ => (0..width).map(|j| format!("item{j}")).collect(),
    }
}

pub fn write_profiles(path: &Path, batch: &ProfileBatch) -> CliResult<()> {
    let (n, w) = (batch.n, batch.width);
    let mut header = vec!["profile".to_string(), "bidder".to_string()];
    header.extend(column_labels(batch.class, w));
    let rows = (0..batch.rows()).flat_map(|r| {
        (0..n).map(move |i| {
            let mut row = vec![r.to_string(), i.to_string()];
            row.extend(batch.row(r)[i * w..(i + 1) * w].iter().map(|x| x.to_string()));
            row
        })
    });
    write_rows(path, header, rows)
}

pub fn read_profiles(path: &Path, class: ValuationClass) -> CliResult<ProfileBatch> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let width = r.headers().map_err(|e| csv_error(path, e))?.len().saturating_sub(2);
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let num = |k: usize| rec.get(k).ok_or_else(|| CliError::format(path, "short row"));
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| CliError::format(path, format!("bad index {s}")));
        let p = parse_usize(num(0)?)?;
        let i = parse_usize(num(1)?)?;
        let vals = (2..2 + width)
            .map(|k| num(k)?.parse::<f64>().map_err(|_| CliError::format(path, "bad value")))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push((p, i, vals));
    }
    let n = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    let count = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    if n == 0 || rows.len() != n * count {
        return Err(CliError::format(path, "every profile needs one row per bidder"));
    }
    let mut data = vec![f64::NAN; count * n * width];
    for (p, i, vals) in rows {
        data[(p * n + i) * width..(p * n + i + 1) * width].copy_from_slice(&vals);
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(CliError::format(path, "duplicate or missing (profile, bidder) rows"));
    }
    ProfileBatch::new(n, width, class, data).map_err(CliError::from)
}

pub fn write_menu(path: &Path, menu: &MenuNet) -> CliResult<()> {
    let mut header = vec!["entry".to_string()];
    header.extend((0..menu.m).map(|k| format!("w{k}")));
    header.push("price".into());
    let rows = menu.menu().iter().enumerate().map(|(j, e)| {
        let mut row = vec![j.to_string()];
        row.extend(e.allocation.iter().map(|x| x.to_string()));
        row.push(e.price().to_string());
        row
    });
    write_rows(path, header, rows)
}

/// Writes the lines file at `lines` and the breakpoints on `[lo, hi]` per
/// bidder at `points`.
pub fn write_transforms(lines: &Path, points: &Path, net: &MyersonNet, supports: &[(f64, f64)]) -> CliResult<()> {
    let header = ["bidder", "group", "line", "alpha", "slope", "intercept"].map(String::from).to_vec();
    let rows = net.transforms.iter().enumerate().flat_map(|(i, t)| {
        (0..t.groups).flat_map(move |k| {
            (0..t.lines).map(move |j| {
                let idx = k * t.lines + j;
                let a = t.alpha[idx];
                vec![i.to_string(), k.to_string(), j.to_string(), a.to_string(), a.exp().to_string(), t.beta[idx].to_string()]
            })
        })
    });
    write_rows(lines, header, rows)?;
    let header = ["bidder", "bid", "virtual"].map(String::from).to_vec();
    let rows = net.transforms.iter().zip(supports).enumerate().flat_map(|(i, (t, &(lo, hi)))| {
        t.breakpoints(lo, hi).into_iter().map(move |(b, y)| vec![i.to_string(), b.to_string(), y.to_string()])
    });
    write_rows(points, header, rows)
}

/// `grid[r][c]` is the value at `(xs[c], ys[r])`.
pub fn write_heatmap(path: &Path, xs: &[f64], ys: &[f64], grid: &[Vec<f64>]) -> CliResult<()> {
    let mut header = vec!["v1\\v0".to_string()];
    header.extend(xs.iter().map(|x| x.to_string()));
    let rows = ys.iter().zip(grid).map(|(y, row)| {
        let mut out = vec![y.to_string()];
        out.extend(row.iter().map(|x| x.to_string()));
        out
    });
    write_rows(path, header, rows)
}

pub fn read_heatmap(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let parse = |s: &str| s.parse::<f64>().map_err(|_| CliError::format(path, format!("bad number {s}")));
    let xs = r.headers().map_err(|e| csv_error(path, e))?.iter().skip(1).map(parse).collect::<CliResult<Vec<_>>>()?;
    let (mut ys, mut grid) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let vals = rec.iter().map(parse).collect::<CliResult<Vec<_>>>()?;
        if vals.len() != xs.len() + 1 {
            return Err(CliError::format(path, "heatmap rows must be rectangular"));
        }
        ys.push(vals[0]);
        grid.push(vals[1..].to_vec());
    }
    Ok((xs, ys, grid))
}

/// Single-row CSV summary of a metrics report for sweep aggregation.
pub fn write_metrics_row(path: &Path, report: &regretnet_core::evaluation::MetricsReport) -> CliResult<()> {
    let header = ["setting", "mechanism", "scale", "test_size", "revenue", "revenue_stderr", "regret_mean", "ir_violation"]
        .map(String::from)
        .to_vec();
    let row = vec![
        report.setting.clone(),
        report.mechanism.clone(),
        report.scale.clone(),
        report.test_size.to_string(),
        report.revenue.to_string(),
        report.revenue_stderr.to_string(),
        report.regret_mean.to_string(),
        report.ir_violation.to_string(),
    ];
    write_rows(path, header, std::iter::once(row))
}
