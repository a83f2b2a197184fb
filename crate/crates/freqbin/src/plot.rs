//! SVG figures with sidecar CSVs holding exactly the plotted data.

use std::ops::Range;
use std::path::{Path, PathBuf};

use freqbin_core::beating::{beating_curve, BeatingParams};
use freqbin_core::statekit::Branch;
use plotters::coord::Shift;
use plotters::prelude::*;

use crate::error::{CliError, CliResult};
use crate::formats::{self, write_file, write_rows, BEATING_HEADER, DENSITY_BASIS};
use crate::report::{BeatingRecord, PowerScanRecord, ReportBundle};

const SIZE: (u32, u32) = (800, 500);
const CURVE_POINTS: usize = 2000;
const BAR: RGBColor = RGBColor(70, 110, 180);
const NEGATIVE_BAR: RGBColor = RGBColor(200, 90, 60);

type Area<'a> = DrawingArea<SVGBackend<'a>, Shift>;

type DrawResult = Result<(), Box<dyn std::error::Error>>;

fn plot_err(name: &str) -> impl Fn(Box<dyn std::error::Error>) -> CliError + '_ {
    move |e| CliError::Plot {
        name: name.to_owned(),
        reason: e.to_string(),
    }
}

fn render(path: &Path, draw: impl FnOnce(&Area<'_>) -> DrawResult) -> CliResult<()> {
    let name = path.display().to_string();
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE)
            .map_err(|e| plot_err(&name)(Box::new(e)))?;
        draw(&root).map_err(plot_err(&name))?;
        root.present().map_err(|e| plot_err(&name)(Box::new(e)))?;
    }
    write_file(path, &svg)
}

fn padded(lo: f64, hi: f64) -> Range<f64> {
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 1.0 };
    (lo - pad)..(hi + pad)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Beating data with error bars and the fitted curve. Writes the raw data
/// to `beating_plot.csv` and the curve to `beating_fit_curve.csv`.
pub fn beating(out: &Path, data: &BeatingRecord, fit: &BeatingParams) -> CliResult<Vec<PathBuf>> {
    let (x0, x1) = bounds(data.delay_ps.iter().copied());
    let curve: Vec<(f64, f64)> = (0..CURVE_POINTS)
        .map(|k| {
            let x = x0 + (x1 - x0) * k as f64 / (CURVE_POINTS - 1) as f64;
            (x, beating_curve(fit, x))
        })
        .collect();
    let (_, y1) = bounds(
        data.counts
            .iter()
            .zip(&data.sigma)
            .map(|(c, s)| c + s)
            .chain(curve.iter().map(|p| p.1)),
    );

    let svg = out.join("beating.svg");
    render(&svg, |root| {
        let mut chart = ChartBuilder::on(root)
            .caption("Spatial quantum beating", ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(padded(x0, x1), 0.0..y1 * 1.05)?;
        chart
            .configure_mesh()
            .x_desc("delay (ps)")
            .y_desc("coincidences")
            .draw()?;
        chart.draw_series(
            data.delay_ps
                .iter()
                .zip(&data.counts)
                .zip(&data.sigma)
                .map(|((&x, &y), &s)| ErrorBar::new_vertical(x, y - s, y, y + s, BLUE, 3)),
        )?;
        chart.draw_series(
            data.delay_ps
                .iter()
                .zip(&data.counts)
                .map(|(&x, &y)| Circle::new((x, y), 2, BLUE.filled())),
        )?;
        chart.draw_series(LineSeries::new(curve.iter().copied(), RED.stroke_width(2)))?;
        Ok(())
    })?;

    let raw = out.join("beating_plot.csv");
    write_file(
        &raw,
        &write_rows(
            &BEATING_HEADER,
            (0..data.delay_ps.len()).map(|i| {
                vec![
                    data.delay_ps[i].to_string(),
                    data.counts[i].to_string(),
                    data.sigma[i].to_string(),
                ]
            }),
        ),
    )?;
    let curve_csv = out.join("beating_fit_curve.csv");
    write_file(
        &curve_csv,
        &write_rows(
            &["delay_ps", "model_counts"],
            curve
                .iter()
                .map(|(x, y)| vec![x.to_string(), y.to_string()]),
        ),
    )?;
    Ok(vec![svg, raw, curve_csv])
}

fn bar_chart(
    root: &Area<'_>,
    caption: &str,
    labels: &[String],
    values: &[(f64, Option<f64>)],
    y_desc: &str,
) -> DrawResult {
    let (lo, hi) = bounds(
        values
            .iter()
            .flat_map(|&(v, s)| [v - s.unwrap_or(0.0), v + s.unwrap_or(0.0), 0.0]),
    );
    let n = values.len();
    let mut chart = ChartBuilder::on(root)
        .caption(caption, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(-0.5..n as f64 - 0.5, padded(lo, hi))?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(n)
        .x_label_formatter(&|x| {
            let i = x.round();
            if (x - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < labels.len() {
                labels[i as usize].clone()
            } else {
                String::new()
            }
        })
        .y_desc(y_desc)
        .draw()?;
    chart.draw_series(values.iter().enumerate().map(|(i, &(v, _))| {
        let x = i as f64;
        let color = if v < 0.0 { NEGATIVE_BAR } else { BAR };
        Rectangle::new([(x - 0.35, 0.0), (x + 0.35, v)], color.filled())
    }))?;
    chart.draw_series(values.iter().enumerate().filter_map(|(i, &(v, s))| {
        s.map(|s| ErrorBar::new_vertical(i as f64, v - s, v, v + s, BLACK, 8))
    }))?;
    Ok(())
}

/// Branch coincidence bars; the sidecar uses the branch-counts schema.
pub fn branches(out: &Path, report: &ReportBundle) -> CliResult<Vec<PathBuf>> {
    let counts = report.branch_counts();
    let labels: Vec<String> = Branch::ALL.iter().map(|b| b.label().to_owned()).collect();
    let values: Vec<(f64, Option<f64>)> = Branch::ALL
        .iter()
        .map(|&b| (counts.counts[b] as f64, Some(counts.sigmas[b])))
        .collect();
    let caption = match report.ratio_db.value_db {
        Some(db) => format!("Branch coincidences ({db:.2} dB)"),
        None => "Branch coincidences (no bunching counts)".to_owned(),
    };
    let svg = out.join("branches.svg");
    render(&svg, |root| {
        bar_chart(root, &caption, &labels, &values, "counts")
    })?;
    let csv = out.join("branches_plot.csv");
    write_file(&csv, &formats::branch_counts_to_csv(&counts))?;
    Ok(vec![svg, csv])
}

/// Real and imaginary parts of ρ side by side; the sidecar uses the
/// density-matrix schema.
pub fn density(out: &Path, report: &ReportBundle) -> CliResult<Vec<PathBuf>> {
    let d = &report.density_matrix;
    let labels: Vec<String> = DENSITY_BASIS
        .iter()
        .flat_map(|r| DENSITY_BASIS.iter().map(move |c| format!("{r}|{c}")))
        .collect();
    let flat = |m: &[[f64; 4]; 4]| -> Vec<(f64, Option<f64>)> {
        m.iter().flatten().map(|&v| (v, None)).collect()
    };
    let svg = out.join("density.svg");
    render(&svg, |root| {
        let panels = root.split_evenly((2, 1));
        bar_chart(&panels[0], "Re(rho)", &labels, &flat(&d.real), "")?;
        bar_chart(&panels[1], "Im(rho)", &labels, &flat(&d.imag), "")?;
        Ok(())
    })?;
    let csv = out.join("density_plot.csv");
    write_file(&csv, &formats::density_to_csv(&d.real, &d.imag))?;
    Ok(vec![svg, csv])
}

/// Singles against pump power with the fitted total and its quadratic and
/// linear components.
pub fn power_scan(out: &Path, scan: &PowerScanRecord) -> CliResult<Vec<PathBuf>> {
    let (x0, x1) = bounds(scan.points.iter().map(|p| p.power_mw));
    let x0 = x0.min(0.0);
    let curve: Vec<(f64, [f64; 3])> = (0..CURVE_POINTS)
        .map(|k| {
            let x = x0 + (x1 - x0) * k as f64 / (CURVE_POINTS - 1) as f64;
            let d = scan.fit.decompose(x);
            (x, [d.total, d.pair, d.noise])
        })
        .collect();
    let (_, y1) = bounds(
        scan.points
            .iter()
            .map(|p| p.rate_hz + p.sigma_hz)
            .chain(curve.iter().map(|c| c.1[0])),
    );
    let svg = out.join("power_scan.svg");
    render(&svg, |root| {
        let mut chart = ChartBuilder::on(root)
            .caption("Singles against pump power", ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(80)
            .build_cartesian_2d(padded(x0, x1), 0.0..y1 * 1.05)?;
        chart
            .configure_mesh()
            .x_desc("pump power (mW)")
            .y_desc("singles (Hz)")
            .draw()?;
        for (k, color, label) in [
            (0, BLACK, "fit"),
            (1, RED, "quadratic"),
            (2, BLUE, "linear"),
        ] {
            chart
                .draw_series(LineSeries::new(
                    curve.iter().map(|(x, y)| (*x, y[k])),
                    color.stroke_width(2),
                ))?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        chart.draw_series(scan.points.iter().map(|p| {
            ErrorBar::new_vertical(
                p.power_mw,
                p.rate_hz - p.sigma_hz,
                p.rate_hz,
                p.rate_hz + p.sigma_hz,
                BLACK,
                6,
            )
        }))?;
        chart.draw_series(
            scan.points
                .iter()
                .map(|p| Circle::new((p.power_mw, p.rate_hz), 3, BLACK.filled())),
        )?;
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE)
            .draw()?;
        Ok(())
    })?;
    let raw = out.join("power_scan_plot.csv");
    write_file(&raw, &formats::power_scan_to_csv(&scan.points))?;
    let curve_csv = out.join("power_scan_fit_curve.csv");
    write_file(
        &curve_csv,
        &write_rows(
            &["power_mw", "total_hz", "pair_hz", "noise_hz"],
            curve.iter().map(|(x, y)| {
                vec![
                    x.to_string(),
                    y[0].to_string(),
                    y[1].to_string(),
                    y[2].to_string(),
                ]
            }),
        ),
    )?;
    Ok(vec![svg, raw, curve_csv])
}
