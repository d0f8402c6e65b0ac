//! CSV records and minimal SVG plots.

use std::io::{Read, Write};

use crate::binning::BinningMethod;
use crate::error::{Error, Result};

use super::config::RateKind;
use super::fit::{error_curve, FitModel};
use super::sweep::{Aggregate, SampleRecord};
use super::MethodFit;

pub const CSV_COLUMNS: [&str; 8] = [
    "dim",
    "epsilon",
    "sample",
    "method",
    "L",
    "rate_entropy",
    "rate_log2L",
    "l1_error",
];

/// 17 significant digits; parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Writes records; `timestamp` adds one leading `#` comment line.
pub fn write_csv<W: Write>(
    out: W,
    records: &[SampleRecord],
    timestamp: Option<&str>,
) -> Result<()> {
    let mut out = out;
    if let Some(ts) = timestamp {
        writeln!(out, "# generated {ts}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.dim.to_string(),
            format_float(r.epsilon),
            r.sample.to_string(),
            r.method.tag().to_string(),
            r.bins.to_string(),
            format_float(r.rate_entropy),
            format_float(r.rate_log2l),
            format_float(r.l1_error),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_csv`]. The ε index is recovered from the
/// order of first appearance of each ε within a dimension.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(Error::arg(format!("unexpected CSV header {:?}", headers)));
    }
    let mut seen: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_error)?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str| Error::arg(format!("row {}: invalid {what}", line + 1));
        let int = |i: usize, what: &str| field(i).parse::<usize>().map_err(|_| bad(what));
        let float = |i: usize, what: &str| field(i).parse::<f64>().map_err(|_| bad(what));
        let dim = int(0, "dim")?;
        let epsilon = float(1, "epsilon")?;
        let per_dim = match seen.iter_mut().find(|(d, _)| *d == dim) {
            Some((_, v)) => v,
            None => {
                seen.push((dim, Vec::new()));
                &mut seen.last_mut().expect("just pushed").1
            }
        };
        let eps_index = match per_dim.iter().position(|&b| b == epsilon.to_bits()) {
            Some(i) => i,
            None => {
                per_dim.push(epsilon.to_bits());
                per_dim.len() - 1
            }
        };
        records.push(SampleRecord {
            dim,
            epsilon,
            eps_index,
            sample: int(2, "sample")?,
            method: field(3).parse::<BinningMethod>()?,
            bins: int(4, "L")?,
            rate_entropy: float(5, "rate_entropy")?,
            rate_log2l: float(6, "rate_log2L")?,
            l1_error: float(7, "l1_error")?,
        });
    }
    Ok(records)
}

/// Per-point means and standard deviations.
pub fn write_aggregate_csv<W: Write>(out: W, agg: &Aggregate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dim",
        "epsilon",
        "method",
        "n",
        "mean_rate_entropy",
        "std_rate_entropy",
        "mean_rate_log2L",
        "std_rate_log2L",
        "mean_l1_error",
        "mean_L",
    ])
    .map_err(csv_error)?;
    for p in &agg.points {
        w.write_record([
            p.dim.to_string(),
            format_float(p.epsilon),
            p.method.tag().to_string(),
            p.n.to_string(),
            format_float(p.rate_entropy.mean),
            format_float(p.rate_entropy.std),
            format_float(p.rate_log2l.mean),
            format_float(p.rate_log2l.std),
            format_float(p.l1_error.mean),
            format_float(p.bins.mean),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Arithmetic minus geometric rates per point.
pub fn write_differences_csv<W: Write>(out: W, agg: &Aggregate) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dim",
        "epsilon",
        "paired_entropy",
        "paired_log2L",
        "of_means_entropy",
        "of_means_log2L",
    ])
    .map_err(csv_error)?;
    for d in &agg.differences {
        w.write_record([
            d.dim.to_string(),
            format_float(d.epsilon),
            format_float(d.paired_entropy),
            format_float(d.paired_log2l),
            format_float(d.of_means_entropy),
            format_float(d.of_means_log2l),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

const METHOD_COLORS: [(BinningMethod, &str); 2] = [
    (BinningMethod::Arithmetic, "#d4a017"),
    (BinningMethod::Geometric, "#2e8b57"),
];

/// Mean rates per method with the fitted curves for one rate kind.
pub fn sweep_plot(agg: &Aggregate, fits: &[MethodFit], model: FitModel, kind: RateKind) -> Plot {
    let mut series = Vec::new();
    for (method, color) in METHOD_COLORS {
        let pts: Vec<(f64, f64)> = agg
            .method_points(method)
            .map(|p| {
                let x = match model {
                    FitModel::ErrorCurve => p.epsilon,
                    FitModel::DimCurve => p.dim as f64,
                };
                (x, p.rate(kind).mean)
            })
            .collect();
        if let Some(f) = fits.iter().find(|f| f.method == method && f.kind == kind) {
            let curve = pts
                .iter()
                .map(|&(x, _)| {
                    let y = match model {
                        FitModel::ErrorCurve => {
                            let d = agg.points.first().map_or(1, |p| p.dim) as f64;
                            error_curve(d.log2(), f.fit.a, f.fit.b, x)
                        }
                        FitModel::DimCurve => f.fit.a * x.log2() + f.fit.b,
                    };
                    (x, y)
                })
                .collect();
            series.push(Series {
                name: format!("{} fit", method.tag()),
                color: color.to_string(),
                style: SeriesStyle::Line,
                points: curve,
            });
        }
        series.push(Series {
            name: format!("{} mean", method.tag()),
            color: color.to_string(),
            style: SeriesStyle::Points,
            points: pts,
        });
    }
    let (title, x_label) = match model {
        FitModel::ErrorCurve => ("rate against epsilon", "epsilon"),
        FitModel::DimCurve => ("rate against dimension", "dimension"),
    };
    Plot {
        title: format!("{title} ({})", kind.name()),
        x_label: x_label.to_string(),
        y_label: "rate (bits)".to_string(),
        log_x: true,
        series,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesStyle {
    Points,
    Line,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub style: SeriesStyle,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Plot {
    /// Axes, ticks at the data range ends, one marker/polyline per series.
    pub fn to_svg(&self) -> String {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let all: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (tx(x), y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let range = |vals: Vec<f64>| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            match (lo.is_finite(), hi > lo) {
                (true, true) => (lo, hi),
                (true, false) => (lo - 0.5, lo + 0.5),
                _ => (0.0, 1.0),
            }
        };
        let (x0, x1) = range(all.iter().map(|p| p.0).collect());
        let (y0, y1) = range(all.iter().map(|p| p.1).collect());
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let tick = |v: f64, log: bool| {
            if log {
                format!("1e{v:.1}")
            } else {
                format!("{v:.3}")
            }
        };

        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        );
        svg += &format!(
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        );
        svg += &format!(
            "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
            m = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        );
        for (v, anchor) in [(x0, "start"), (x1, "end")] {
            svg += &format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{anchor}\">{}</text>\n",
                px(v),
                HEIGHT - MARGIN + 16.0,
                tick(v, self.log_x)
            );
        }
        for v in [y0, y1] {
            svg += &format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
                MARGIN - 6.0,
                py(v) + 4.0,
                tick(v, false)
            );
        }
        svg += &format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        svg += &format!(
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .map(|&(x, y)| (px(tx(x)), py(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            match s.style {
                SeriesStyle::Points => {
                    for (x, y) in &pts {
                        svg += &format!(
                            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2\" fill=\"{}\"/>\n",
                            s.color
                        );
                    }
                }
                SeriesStyle::Line => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                    svg += &format!(
                        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                        s.color,
                        path.join(" ")
                    );
                }
            }
            svg += &format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{}\">{}</text>\n",
                WIDTH - MARGIN - 140.0,
                MARGIN + 14.0 * k as f64,
                s.color,
                escape(&s.name)
            );
        }
        svg += "</svg>\n";
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(dim: usize, epsilon: f64, sample: usize, method: BinningMethod) -> SampleRecord {
        SampleRecord {
            dim,
            epsilon,
            eps_index: 0,
            sample,
            method,
            bins: 3,
            rate_entropy: 0.1 + 0.2,
            rate_log2l: 3f64.log2(),
            l1_error: 1.0 / 3.0,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = vec![
            record(8, 0.1, 0, BinningMethod::Arithmetic),
            record(8, 0.1, 0, BinningMethod::Geometric),
            SampleRecord {
                eps_index: 1,
                ..record(8, 0.2, 0, BinningMethod::Arithmetic)
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs, Some("now")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# generated now\ndim,epsilon,sample,method,L,rate_entropy,rate_log2L,l1_error\n"
        ));
        assert!(text.contains("8,1.0000000000000001e-1,0,A,3,"));
        assert_eq!(read_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn csv_without_timestamp_starts_with_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[], None).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            CSV_COLUMNS.join(",") + "\n"
        );
    }

    #[test]
    fn read_csv_rejects_wrong_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn svg_contains_series() {
        let plot = Plot {
            title: "rate <vs> eps".into(),
            x_label: "eps".into(),
            y_label: "rate".into(),
            log_x: true,
            series: vec![
                Series {
                    name: "A".into(),
                    color: "#d4a017".into(),
                    style: SeriesStyle::Points,
                    points: vec![(1e-3, 9.0), (1e-1, 5.0)],
                },
                Series {
                    name: "fit".into(),
                    color: "black".into(),
                    style: SeriesStyle::Line,
                    points: vec![(1e-3, 9.1), (1e-2, 7.0), (1e-1, 5.1)],
                },
            ],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("rate &lt;vs&gt; eps"));
    }
}
