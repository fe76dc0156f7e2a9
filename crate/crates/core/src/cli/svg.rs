use std::fmt::Write as _;

use crate::numerics::Matrix;
use crate::Error;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const PLOT: f64 = 600.0;
const LEGEND_W: f64 = 120.0;
const RADIUS: f64 = 2.5;

fn fitted_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Scatter of a 2-D embedding, one circle per row, coloured by label.
pub fn scatter_svg(z: &Matrix, labels: Option<&[usize]>) -> Result<String, Error> {
    if z.cols() != 2 {
        return Err(Error::Shape(format!("plotting needs a 2-D embedding, got {} columns", z.cols())));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("embedding coordinates".into()));
    }
    if let Some(l) = labels {
        if l.len() != z.rows() {
            return Err(Error::Shape(format!("{} labels for {} points", l.len(), z.rows())));
        }
    }
    let (x0, x1) = fitted_range(z.iter_rows().map(|r| r[0]));
    let (y0, y1) = fitted_range(z.iter_rows().map(|r| r[1]));
    let width = if labels.is_some() { PLOT + LEGEND_W } else { PLOT };

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{PLOT}" viewBox="0 0 {width} {PLOT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{PLOT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#).unwrap();
    writeln!(s, "<g>").unwrap();
    for (i, r) in z.iter_rows().enumerate() {
        let px = (r[0] - x0) / (x1 - x0) * PLOT;
        // svg y grows downward
        let py = (y1 - r[1]) / (y1 - y0) * PLOT;
        let color = labels.map_or(PALETTE[0], |l| PALETTE[l[i] % PALETTE.len()]);
        writeln!(s, r#"<circle cx="{px:.3}" cy="{py:.3}" r="{RADIUS}" fill="{color}"/>"#).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    if let Some(l) = labels {
        let mut classes: Vec<usize> = l.to_vec();
        classes.sort_unstable();
        classes.dedup();
        writeln!(s, r#"<g font-family="sans-serif" font-size="12">"#).unwrap();
        for (row, c) in classes.iter().enumerate() {
            let y = 20.0 + 18.0 * row as f64;
            writeln!(
                s,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{c}</text>"#,
                PLOT + 15.0,
                y - 9.0,
                PALETTE[c % PALETTE.len()],
                PLOT + 32.0,
                y
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
