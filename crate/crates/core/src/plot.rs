//! Reading the tool's CSV artifacts back and rendering them as SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Which artifact a CSV holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Trace,
    Spectrum,
    Curve,
}

impl PlotKind {
    fn header(self) -> &'static [&'static str] {
        match self {
            PlotKind::Trace => &["tau_s", "P2", "contrast", "n_index_or_ensemble"],
            PlotKind::Spectrum => &["detuning_hz", "P2", "stderr"],
            PlotKind::Curve => &["epsilon", "avg_Onn4", "P2_longtime", "stderr"],
        }
    }

    pub fn from_header(header: &[String]) -> Option<PlotKind> {
        [PlotKind::Trace, PlotKind::Spectrum, PlotKind::Curve]
            .into_iter()
            .find(|k| k.header().iter().copied().eq(header.iter().map(|s| s.as_str())))
    }
}

/// A parsed artifact: `# key: value` lines, header and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub path: PathBuf,
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// One-based file line of each row, for error messages.
    pub lines: Vec<usize>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<CsvTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CsvTable::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<CsvTable> {
        let err = |row: usize, message: String| Error::Csv {
            path: path.to_path_buf(),
            row,
            message,
        };
        let mut metadata = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let row = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if header.is_some() {
                    return Err(err(row, "metadata line after the header".into()));
                }
                let (k, v) = rest.split_once(':').ok_or_else(|| err(row, "metadata line without `:`".into()))?;
                metadata.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match &header {
                None => header = Some(fields),
                Some(h) => {
                    if fields.len() != h.len() {
                        return Err(err(row, format!("expected {} fields, found {}", h.len(), fields.len())));
                    }
                    rows.push(fields);
                    lines.push(row);
                }
            }
        }
        let header = header.ok_or_else(|| err(0, "no header line".into()))?;
        Ok(CsvTable {
            path: path.to_path_buf(),
            metadata,
            header,
            rows,
            lines,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
            path: self.path.clone(),
            row: 1,
            message: format!("missing column `{name}`"),
        })
    }

    /// Numeric column, with an error naming the first malformed row.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .zip(&self.lines)
            .map(|(r, &line)| {
                r[c].parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Csv {
                    path: self.path.clone(),
                    row: line,
                    message: format!("`{}` in column `{name}` is not a finite number", r[c]),
                })
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        let c = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[c].clone()).collect())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    name: String,
    x: Vec<f64>,
    y: Vec<f64>,
    dashed: bool,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log_x {
            (self.x.0.log10(), self.x.1.log10(), x.log10())
        } else {
            (self.x.0, self.x.1, x)
        };
        LEFT + (v - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Ticks at 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (lo.log10().ceil() as i32..=hi.log10().floor() as i32).map(|k| 10f64.powi(k)).collect()
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(0.0101..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg(series: &[Series], axes: &Axes, xlabel: &str, ylabel: &str, markers: &[(f64, &str)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let xt = if axes.log_x {
        log_ticks(axes.x.0, axes.x.1)
    } else {
        linear_ticks(axes.x.0, axes.x.1)
    };
    for t in xt {
        let p = axes.px(t);
        let _ = writeln!(s, r#"<line x1="{p:.2}" y1="{y1}" x2="{p:.2}" y2="{:.2}" stroke="black"/>"#, y1 + 5.0);
        let _ = writeln!(s, r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y1 + 20.0, label(t));
    }
    for t in linear_ticks(axes.y.0, axes.y.1) {
        let p = axes.py(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, p + 4.0, label(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 16.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(ylabel)
    );
    for (x, name) in markers {
        let p = axes.px(*x);
        let _ = writeln!(
            s,
            r##"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{y1}" stroke="#555" stroke-dasharray="2 3"/>"##
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, p + 4.0, y0 + 14.0, escape(name));
    }
    for (i, ser) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .map(|(&x, &y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = y0 + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
            x1 - 170.0,
            x1 - 150.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x1 - 145.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

/// Deterministic SVG line plot of a trace, spectrum or stability-curve CSV.
pub fn render_svg(table: &CsvTable, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Trace => {
            let x = table.numbers("tau_s")?;
            let p2 = table.numbers("P2")?;
            let c = table.numbers("contrast")?;
            let labels = table.strings("n_index_or_ensemble")?;
            let mut order: Vec<String> = Vec::new();
            for l in &labels {
                if !order.contains(l) {
                    order.push(l.clone());
                }
            }
            let mut series = Vec::new();
            for l in &order {
                let idx: Vec<usize> = (0..x.len()).filter(|&i| &labels[i] == l).collect();
                let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
                series.push(Series {
                    name: format!("P2 {l}"),
                    x: pick(&x),
                    y: pick(&p2),
                    dashed: false,
                });
                if order.len() == 1 {
                    series.push(Series {
                        name: format!("contrast {l}"),
                        x: pick(&x),
                        y: pick(&c),
                        dashed: true,
                    });
                }
            }
            let axes = Axes {
                x: span(x.iter().copied()),
                y: (0.0, span(series.iter().flat_map(|s| s.y.iter().copied())).1.max(1.0)),
                log_x: false,
            };
            Ok(svg(&series, &axes, "pulse separation tau (s)", "P2", &[]))
        }
        PlotKind::Spectrum => {
            let x = table.numbers("detuning_hz")?;
            let y = table.numbers("P2")?;
            let carrier = table.meta("carrier_hz").and_then(|v| v.parse::<f64>().ok());
            let axes = Axes {
                x: span(x.iter().copied()),
                y: (0.0, span(y.iter().copied()).1.max(1e-3) * 1.05),
                log_x: false,
            };
            let markers: Vec<(f64, &str)> = carrier
                .filter(|c| *c >= axes.x.0 && *c <= axes.x.1)
                .map(|c| (c, "carrier"))
                .into_iter()
                .collect();
            let series = [Series {
                name: "P2".into(),
                x,
                y,
                dashed: false,
            }];
            Ok(svg(&series, &axes, "microwave detuning (Hz)", "P2", &markers))
        }
        PlotKind::Curve => {
            let raw = table.numbers("epsilon")?;
            let avg = table.numbers("avg_Onn4")?;
            let p = table.numbers("P2_longtime")?;
            let keep: Vec<usize> = (0..raw.len()).filter(|&i| raw[i] > 0.0).collect();
            if keep.is_empty() {
                return Err(Error::Csv {
                    path: table.path.clone(),
                    row: 0,
                    message: "no positive epsilon for a logarithmic axis".into(),
                });
            }
            let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let x = pick(&raw);
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(0.0, f64::max);
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo / 10.0, hi * 10.0) };
            let series = [
                Series {
                    name: "avg |O_nn|^4".into(),
                    x: x.clone(),
                    y: pick(&avg),
                    dashed: false,
                },
                Series {
                    name: "P2 long time".into(),
                    x,
                    y: pick(&p),
                    dashed: true,
                },
            ];
            let axes = Axes {
                x: (lo, hi),
                y: (0.0, 1.0),
                log_x: true,
            };
            Ok(svg(&series, &axes, "potential scaling epsilon", "ensemble average", &[]))
        }
    }
}

/// Reads `csv`, infers its kind from the header unless given, and writes the SVG to `out`.
pub fn plot_file(csv: &Path, kind: Option<PlotKind>, out: &Path) -> Result<PlotKind> {
    let table = CsvTable::read(csv)?;
    let kind = match kind {
        Some(k) => k,
        None => PlotKind::from_header(&table.header).ok_or_else(|| Error::Csv {
            path: csv.to_path_buf(),
            row: table.lines.first().map_or(1, |l| l - 1),
            message: format!("unrecognised header `{}`", table.header.join(",")),
        })?,
    };
    let text = render_svg(&table, kind)?;
    std::fs::write(out, text).map_err(|e| Error::io(out, e))?;
    Ok(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_rows_are_named() {
        let text = "# a: 1\ndetuning_hz,P2,stderr\n1,0.5,0\n2,oops,0\n";
        let t = CsvTable::parse(text, Path::new("s.csv")).unwrap();
        let err = t.numbers("P2").unwrap_err().to_string();
        assert!(err.contains("row 4") && err.contains("oops"), "{err}");
        let short = CsvTable::parse("epsilon,avg_Onn4,P2_longtime,stderr\n1e-3,0.9\n", Path::new("c.csv"));
        assert!(short.unwrap_err().to_string().contains("row 2"));
    }

    #[test]
    fn svg_is_deterministic_and_labelled() {
        let text = "# carrier_hz: 5\ndetuning_hz,P2,stderr\n0,0.1,0\n5,0.8,0\n10,0.2,0\n";
        let t = CsvTable::parse(text, Path::new("s.csv")).unwrap();
        assert_eq!(PlotKind::from_header(&t.header), Some(PlotKind::Spectrum));
        let a = render_svg(&t, PlotKind::Spectrum).unwrap();
        assert_eq!(a, render_svg(&t, PlotKind::Spectrum).unwrap());
        assert!(a.contains("carrier") && a.contains("(Hz)"));
    }

    #[test]
    fn curve_uses_decade_ticks() {
        let text = "epsilon,avg_Onn4,P2_longtime,stderr\n1e-5,1,0,0\n1e-3,0.9,0.05,0\n1e-2,0.5,0.25,0\n";
        let t = CsvTable::parse(text, Path::new("c.csv")).unwrap();
        let s = render_svg(&t, PlotKind::Curve).unwrap();
        for tick in ["1e-5", "1e-4", "1e-3", "1e-2"] {
            assert!(s.contains(&format!(">{tick}<")), "{tick}");
        }
    }
}
