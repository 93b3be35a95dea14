//! Output files. Every table starts with a `#` line carrying the seed and
//! a hash of the run configuration; JSON summaries carry the same pair plus
//! the schema version and a timestamp. Floats use Rust's shortest
//! round-trip formatting.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::custom::InferenceReport;
use crate::data::Dataset;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Seed and configuration fingerprint stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn new<C: Serialize>(seed: u64, config: &C) -> Result<Self> {
        Ok(Self { seed, config_hash: config_hash(config)? })
    }

    pub fn comment(&self) -> String {
        format!("# seed={} config_hash={}", self.seed, self.config_hash)
    }
}

/// First 16 hex digits of SHA-256 over the compact JSON encoding.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

pub fn fmt(v: f64) -> String {
    v.to_string()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes a provenance line, a header and the rows.
pub fn write_table<I>(path: &Path, prov: &Provenance, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", prov.comment())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, prov: &Provenance, data: &Dataset) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{}", prov.comment())?;
    data.write_csv_to(file).map_err(|e| match e {
        Error::Csv { message, .. } => Error::Csv { path: path.to_path_buf(), message },
        other => other,
    })
}

/// JSON summary: schema, provenance, config echo, creation time and `body`
/// fields merged at top level.
pub fn summary_json<C: Serialize>(kind: &str, prov: &Provenance, config: &C, body: Value) -> Result<Value> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut out = json!({
        "schema": SCHEMA_VERSION,
        "kind": kind,
        "seed": prov.seed,
        "config_hash": prov.config_hash,
        "config": serde_json::to_value(config)?,
        "created_unix": created,
    });
    if let (Some(o), Value::Object(b)) = (out.as_object_mut(), body) {
        o.extend(b);
    }
    Ok(out)
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    Ok(())
}

/// Per-case rows of an inference report, in input order.
pub fn write_cases(path: &Path, prov: &Provenance, report: &InferenceReport) -> Result<()> {
    let p = report.cases.first().map_or(0, |c| c.x.len());
    let xs: Vec<String> = if p == 1 { vec!["x".into()] } else { (1..=p).map(|c| format!("x{c}")).collect() };
    let mut header = vec!["index", "id"];
    header.extend(xs.iter().map(String::as_str));
    header.extend(["z", "fdr", "p_value", "dps", "rank", "significant"]);
    let rows = report.cases.iter().map(|c| {
        let mut r = vec![c.index.to_string(), c.id.clone()];
        r.extend(c.x.iter().map(|v| fmt(*v)));
        r.extend([
            fmt(c.z),
            fmt(c.fdr),
            fmt(c.p_value),
            fmt(c.dps),
            c.rank.to_string(),
            (c.significant as u8).to_string(),
        ]);
        r
    });
    write_table(path, prov, &header, rows)
}

/// Minimal SVG line plot; `series` share the `x` axis.
pub fn svg_plot(title: &str, x_label: &str, x: &[f64], series: &[(&str, &[f64])]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(x.iter().filter(finite));
    let (y0, y1) = bounds(series.iter().flat_map(|(_, s)| s.iter()).filter(finite));
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#, H - PAD, W - PAD);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    for (v, anchor, xx, yy) in [(x0, "start", PAD, H - PAD + 16.0), (x1, "end", W - PAD, H - PAD + 16.0)] {
        let _ = writeln!(s, r#"<text x="{xx}" y="{yy}" text-anchor="{anchor}">{}</text>"#, short(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, short(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, short(y1));
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen = false;
        for (xv, yv) in x.iter().zip(ys.iter()) {
            if xv.is_finite() && yv.is_finite() {
                let _ = write!(d, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, sx(*xv), sy(*yv));
                pen = true;
            } else {
                pen = false;
            }
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds<'a>(v: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn short(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
