//! Static SVG line plots with a logarithmic time axis.
//!
//! The plot is rendered from the CSV text itself, so every drawn point is a
//! value that also appears in the CSV.

use std::fmt::Write as _;

use crate::CliError;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
const LOG_FLOOR: f64 = 1e-8;
const LINEAR_CEILING: f64 = 2.0;

/// Columns of a CSV file, parsed as floats (empty fields become NaN).
pub struct CsvColumns {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvColumns {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Usage("empty CSV".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(CliError::Usage(format!("CSV row {} has {} fields", n + 2, fields.len())));
            }
            for (col, f) in columns.iter_mut().zip(fields) {
                col.push(if f.is_empty() { f64::NAN } else { f.parse().unwrap_or(f64::NAN) });
            }
        }
        Ok(Self { header, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub series: &'a [(&'a str, &'a str)],
    pub log_y: bool,
    /// 0/1 column whose 1-runs are shaded.
    pub shade: Option<&'a str>,
}

fn nice_decades(lo: f64, hi: f64) -> (f64, f64) {
    let a = lo.log10().floor();
    let b = hi.log10().ceil();
    if b > a { (a, b) } else { (a, a + 1.0) }
}

pub fn render(csv: &CsvColumns, spec: &PlotSpec<'_>) -> Result<String, CliError> {
    let x = csv
        .column(spec.x)
        .ok_or_else(|| CliError::Usage(format!("CSV has no '{}' column", spec.x)))?;
    if x.is_empty() || x.iter().any(|v| !(*v > 0.0)) {
        return Err(CliError::Usage("x values must be positive for a log axis".into()));
    }
    let (x0, x1) = nice_decades(x[0], *x.last().unwrap());
    let mut ys = Vec::new();
    for (col, _) in spec.series {
        ys.push(csv.column(col).ok_or_else(|| CliError::Usage(format!("CSV has no '{col}' column")))?);
    }
    let finite = ys.iter().flat_map(|y| y.iter()).filter(|v| v.is_finite());
    let (y0, y1) = if spec.log_y {
        let pos: Vec<f64> = finite.filter(|v| **v > 0.0).map(|v| v.clamp(LOG_FLOOR, 1.0 / LOG_FLOOR)).collect();
        let lo = pos.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if pos.is_empty() { (-1.0, 1.0) } else { nice_decades(lo, hi) }
    } else {
        let hi = finite.cloned().fold(0.0, f64::max).min(LINEAR_CEILING);
        (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t.log10() - x0) / (x1 - x0) * pw;
    let py = |v: f64| {
        let u = if spec.log_y { v.max(LOG_FLOOR).log10() } else { v };
        let f = ((u - y0) / (y1 - y0)).clamp(0.0, 1.0);
        TOP + (1.0 - f) * ph
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, spec.title);

    if let Some(col) = spec.shade.and_then(|c| csv.column(c)) {
        let mut k = 0;
        while k < col.len() {
            if col[k] == 1.0 {
                let start = k;
                while k + 1 < col.len() && col[k + 1] == 1.0 {
                    k += 1;
                }
                let (a, b) = (px(x[start]), px(x[k]));
                let _ = writeln!(
                    s,
                    r##"<rect x="{a:.2}" y="{TOP}" width="{:.2}" height="{ph}" fill="#dddddd"/>"##,
                    (b - a).max(1.0)
                );
            }
            k += 1;
        }
    }

    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let step = ((x1 - x0) / 10.0).ceil().max(1.0);
    let mut d = x0;
    while d <= x1 + 1e-9 {
        let xp = LEFT + (d - x0) / (x1 - x0) * pw;
        let _ = writeln!(s, r#"<line x1="{xp:.2}" y1="{}" x2="{xp:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{xp:.2}" y="{}" text-anchor="middle">1e{}</text>"#, TOP + ph + 20.0, d as i64);
        d += step;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, spec.x);
    let n_ticks = if spec.log_y { (y1 - y0) as usize } else { 5 };
    let ystep = if spec.log_y { ((y1 - y0) / 8.0).ceil().max(1.0) } else { (y1 - y0) / 5.0 };
    for i in 0..=n_ticks {
        let u = y0 + i as f64 * ystep;
        if u > y1 + 1e-9 {
            break;
        }
        let yp = TOP + (1.0 - (u - y0) / (y1 - y0)) * ph;
        let label = if spec.log_y { format!("1e{}", u as i64) } else { format!("{u:.2}") };
        let _ = writeln!(s, r#"<line x1="{}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, yp + 4.0);
    }

    for (k, ((_, label), y)) in spec.series.iter().zip(&ys).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for (t, v) in x.iter().zip(y.iter()) {
            if v.is_finite() && (!spec.log_y || *v > 0.0) {
                let _ = write!(pts, "{:.2},{:.2} ", px(*t), py(*v));
            }
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.trim_end());
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "t,a,b,w\n1.0e0,2.0e0,1.0e-1,0\n1.0e1,1.0e0,,1\n1.0e2,5.0e-1,1.0e-3,1\n";

    #[test]
    fn parses_columns() {
        let c = CsvColumns::parse(CSV).unwrap();
        assert_eq!(c.column("a").unwrap(), &[2.0, 1.0, 0.5]);
        assert!(c.column("b").unwrap()[1].is_nan());
        assert!(c.column("zz").is_none());
        assert!(CsvColumns::parse("t,a\n1,2,3\n").is_err());
    }

    #[test]
    fn renders_every_series() {
        let c = CsvColumns::parse(CSV).unwrap();
        for log_y in [false, true] {
            let spec = PlotSpec { title: "x", x: "t", series: &[("a", "A"), ("b", "B")], log_y, shade: Some("w") };
            let svg = render(&c, &spec).unwrap();
            assert!(svg.starts_with("<svg"));
            assert_eq!(svg.matches("<polyline").count(), 2);
            assert!(svg.contains("#dddddd"));
        }
    }
}
