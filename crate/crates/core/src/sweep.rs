//! Rate sweeps over the condition number and the interval width, with CSV and SVG output.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certifier::{certify, CertifyError, CertifyOptions};
use crate::iqc::IqcKind;
use crate::model::{FunctionClass, StepSizeInterval};

pub const CSV_HEADER: [&str; 5] = ["kappa", "c", "rho_star", "feasible", "cond_p"];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed row {row}: {msg}")]
    Parse { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub c: f64,
    pub rho_star: Option<f64>,
    pub feasible: bool,
    pub cond_p: Option<f64>,
    pub grid_size: usize,
    pub iqc: IqcKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub grid_size: usize,
    pub iqc: IqcKind,
    pub options: CertifyOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid_size: 10,
            iqc: IqcKind::Sector,
            options: CertifyOptions::default(),
        }
    }
}

pub fn certify_point(kappa: f64, c: f64, cfg: &SweepConfig) -> Result<SweepRow, CertifyError> {
    let fc = FunctionClass::from_kappa(kappa)?;
    let iv = StepSizeInterval::from_c(&fc, c)?;
    let cert = certify(&fc, &iv, cfg.grid_size, cfg.iqc, &cfg.options)?;
    Ok(SweepRow {
        kappa,
        c,
        rho_star: cert.rho_star,
        feasible: cert.rho_star.is_some(),
        cond_p: cert.cond_p,
        grid_size: cfg.grid_size,
        iqc: cfg.iqc,
    })
}

/// One row per `κ`, computed in parallel, returned in input order.
pub fn sweep_kappa(
    c: f64,
    kappas: &[f64],
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>, CertifyError> {
    kappas
        .par_iter()
        .map(|&k| certify_point(k, c, cfg))
        .collect()
}

pub fn sweep_c(kappa: f64, cs: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>, CertifyError> {
    cs.par_iter()
        .map(|&c| certify_point(kappa, c, cfg))
        .collect()
}

pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Requires `0 < lo`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = lin_space(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if n > 1 {
        v[n - 1] = hi;
    }
    v
}

/// Fixed-point rendering with twelve significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0.00000000000".into()
        } else {
            x.to_string()
        };
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_field(x: Option<f64>) -> String {
    x.map(format_sig12).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            format_sig12(r.kappa),
            format_sig12(r.c),
            opt_field(r.rho_star),
            r.feasible.to_string(),
            opt_field(r.cond_p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses rows written by [`write_csv`]; `grid_size` and `iqc` are not part of the file.
pub fn read_csv<R: Read>(
    input: R,
    grid_size: usize,
    iqc: IqcKind,
) -> Result<Vec<SweepRow>, SweepError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(SweepError::Parse {
            row: 0,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |msg: String| SweepError::Parse { row: i + 1, msg };
        let num = |j: usize| -> Result<f64, SweepError> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| bad(format!("{}: {e}", CSV_HEADER[j])))
        };
        let opt = |j: usize| -> Result<Option<f64>, SweepError> {
            if rec[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let feasible = match &rec[3] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("feasible: '{other}'"))),
        };
        let rho_star = opt(2)?;
        if feasible != rho_star.is_some() {
            return Err(bad("feasible flag disagrees with rho_star".into()));
        }
        rows.push(SweepRow {
            kappa: num(0)?,
            c: num(1)?,
            rho_star,
            feasible,
            cond_p: opt(4)?,
            grid_size,
            iqc,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Kappa,
    C,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 64.0;
const MR: f64 = 24.0;
const MT: f64 = 28.0;
const MB: f64 = 52.0;

struct Frame {
    x0: f64,
    x1: f64,
    log: bool,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log {
            (self.x0.ln(), self.x1.ln(), x.ln())
        } else {
            (self.x0, self.x1, x)
        };
        let t = if b > a { (v - a) / (b - a) } else { 0.5 };
        ML + t * (W - ML - MR)
    }

    fn ty(&self, y: f64) -> f64 {
        H - MB - y.clamp(0.0, 1.0) * (H - MT - MB)
    }
}

fn polyline(points: &[(f64, f64)], style: &str) -> String {
    let pts: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect();
    format!(
        "<polyline fill=\"none\" {style} points=\"{}\"/>\n",
        pts.join(" ")
    )
}

/// Line chart of `rho_star` against `κ` or `c`. Infeasible rows break the curve and
/// are marked on the top edge. A `κ` axis is logarithmic and carries the `1 − 1/κ` reference.
pub fn render_svg(rows: &[SweepRow], axis: XAxis, title: &str) -> String {
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| match axis {
            XAxis::Kappa => r.kappa,
            XAxis::C => r.c,
        })
        .collect();
    let (mut x0, mut x1) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if !x0.is_finite() {
        (x0, x1) = (1.0, 2.0);
    }
    let frame = Frame {
        x0,
        x1,
        log: axis == XAxis::Kappa && x0 > 0.0 && x1 / x0 > 10.0,
    };

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += &format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    );

    let (left, right, top, bottom) = (ML, W - MR, MT, H - MB);
    s += &format!(
        "<line x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
    );
    s += &format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"black\"/>\n"
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let py = frame.ty(y);
        s += &format!(
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{left}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            left - 4.0
        );
        s += &format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{y:.1}</text>\n",
            left - 7.0,
            py + 4.0
        );
    }
    for x in x_ticks(&frame) {
        let px = frame.tx(x);
        s += &format!(
            "<line x1=\"{px:.2}\" y1=\"{bottom}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            bottom + 4.0
        );
        s += &format!(
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            bottom + 18.0,
            tick_label(x)
        );
    }
    let xlabel = match axis {
        XAxis::Kappa => "condition number κ",
        XAxis::C => "interval constant c",
    };
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>\n",
        (left + right) / 2.0,
        H - 12.0
    );
    s += &format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">rate ρ</text>\n",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    if axis == XAxis::Kappa {
        let refs: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let t = i as f64 / 200.0;
                let k = if frame.log {
                    (x0.ln() + t * (x1.ln() - x0.ln())).exp()
                } else {
                    x0 + t * (x1 - x0)
                };
                (frame.tx(k), frame.ty(1.0 - 1.0 / k))
            })
            .collect();
        s += &polyline(
            &refs,
            "stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"",
        );
    }

    let mut segment: Vec<(f64, f64)> = Vec::new();
    for (r, &x) in rows.iter().zip(&xs) {
        match r.rho_star {
            Some(rho) => segment.push((frame.tx(x), frame.ty(rho))),
            None => {
                if !segment.is_empty() {
                    s += &polyline(&segment, "stroke=\"#1f77b4\" stroke-width=\"2\"");
                    segment.clear();
                }
                s += &format!(
                    "<circle cx=\"{:.2}\" cy=\"{top}\" r=\"3\" fill=\"none\" stroke=\"#1f77b4\"/>\n",
                    frame.tx(x)
                );
            }
        }
    }
    if !segment.is_empty() {
        s += &polyline(&segment, "stroke=\"#1f77b4\" stroke-width=\"2\"");
    }

    let lx = right - 170.0;
    let ly = bottom - 44.0;
    s += &format!("<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n", lx + 24.0);
    s += &format!(
        "<text x=\"{}\" y=\"{}\">certified ρ*</text>\n",
        lx + 30.0,
        ly + 4.0
    );
    if axis == XAxis::Kappa {
        let ly = ly + 18.0;
        s += &format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n",
            lx + 24.0
        );
        s += &format!(
            "<text x=\"{}\" y=\"{}\">1 − 1/κ</text>\n",
            lx + 30.0,
            ly + 4.0
        );
    }
    s += "</svg>\n";
    s
}

fn x_ticks(frame: &Frame) -> Vec<f64> {
    if frame.log {
        let (a, b) = (
            frame.x0.log10().floor() as i32,
            frame.x1.log10().ceil() as i32,
        );
        (a..=b)
            .flat_map(|e| [1.0, 2.0, 5.0].map(|m| m * 10f64.powi(e)))
            .filter(|&x| x >= frame.x0 * (1.0 - 1e-12) && x <= frame.x1 * (1.0 + 1e-12))
            .collect()
    } else {
        lin_space(frame.x0, frame.x1, 6)
    }
}

fn tick_label(x: f64) -> String {
    let s = format!("{x:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
