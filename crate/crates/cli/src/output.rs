//! Byte-deterministic CSV, JSON and SVG writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use curveflow::{curvature_of, curve_of, DiagnosticsRecord, PlaneCurve, SupportField};

pub const SERIES_HEADER: [&str; 9] = [
    "t",
    "energy",
    "l2_norm",
    "convexity_margin",
    "hyperbolicity_margin",
    "forcing_bound_ok",
    "length",
    "area",
    "steady_residual",
];

/// Scientific notation with 17 significant digits; lossless for `f64`.
pub fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON has no NaN or infinities; they become `null`.
pub fn json_number(v: f64) -> String {
    if v.is_finite() {
        sci(v)
    } else {
        "null".into()
    }
}

fn json_array(values: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = values.into_iter().map(json_number).collect();
    format!("[{}]", items.join(", "))
}

fn json_string(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}

/// Ordered JSON object rendered with a fixed layout.
#[derive(Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn number(mut self, key: &str, v: f64) -> Self {
        self.fields.push((key.into(), json_number(v)));
        self
    }

    pub fn integer(mut self, key: &str, v: usize) -> Self {
        self.fields.push((key.into(), v.to_string()));
        self
    }

    pub fn boolean(mut self, key: &str, v: bool) -> Self {
        self.fields.push((key.into(), v.to_string()));
        self
    }

    pub fn string(mut self, key: &str, v: &str) -> Self {
        self.fields.push((key.into(), json_string(v)));
        self
    }

    pub fn optional_number(mut self, key: &str, v: Option<f64>) -> Self {
        self.fields
            .push((key.into(), v.map_or("null".into(), json_number)));
        self
    }

    pub fn optional_string(mut self, key: &str, v: Option<&str>) -> Self {
        self.fields
            .push((key.into(), v.map_or("null".into(), json_string)));
        self
    }

    pub fn array(mut self, key: &str, v: impl IntoIterator<Item = f64>) -> Self {
        self.fields.push((key.into(), json_array(v)));
        self
    }

    pub fn object(mut self, key: &str, v: JsonObject) -> Self {
        let inner = v.render(1);
        self.fields.push((key.into(), inner));
        self
    }

    fn render(&self, depth: usize) -> String {
        let pad = "  ".repeat(depth + 1);
        let close = "  ".repeat(depth);
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{pad}{}: {v}", json_string(k)))
            .collect();
        format!("{{\n{}\n{close}}}", body.join(",\n"))
    }

    pub fn to_json(&self) -> String {
        let mut s = self.render(0);
        s.push('\n');
        s
    }
}

/// One recorded state as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub t: f64,
    pub theta: Vec<f64>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `None` where the state is not strictly convex.
    pub kappa: Vec<Option<f64>>,
}

impl SnapshotFile {
    pub fn from_state(t: f64, s: &SupportField<f64>) -> Self {
        let curve = curve_of(s);
        let kappa = match curvature_of(s) {
            Ok(k) => k.values().iter().map(|&v| Some(v)).collect(),
            Err(_) => vec![None; s.len()],
        };
        Self {
            t,
            theta: s.grid().theta().to_vec(),
            s: s.values().to_vec(),
            x: curve.points.iter().map(|p| p[0]).collect(),
            y: curve.points.iter().map(|p| p[1]).collect(),
            kappa,
        }
    }

    pub fn to_json(&self) -> String {
        let kappa: Vec<String> = self
            .kappa
            .iter()
            .map(|k| k.map_or("null".into(), json_number))
            .collect();
        let mut out = JsonObject::new()
            .number("t", self.t)
            .array("theta", self.theta.iter().copied())
            .array("S", self.s.iter().copied())
            .array("x", self.x.iter().copied())
            .array("y", self.y.iter().copied());
        out.fields
            .push(("kappa".into(), format!("[{}]", kappa.join(", "))));
        out.to_json()
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let doc: serde_json::Value = serde_json::from_str(text)?;
        let array = |key: &str| -> anyhow::Result<Vec<Option<f64>>> {
            let items = doc
                .get(key)
                .and_then(|v| v.as_array())
                .ok_or_else(|| anyhow!("snapshot has no `{key}` array"))?;
            Ok(items.iter().map(|v| v.as_f64()).collect())
        };
        let dense = |key: &str| -> anyhow::Result<Vec<f64>> {
            array(key)?
                .into_iter()
                .map(|v| v.ok_or_else(|| anyhow!("non-numeric entry in `{key}`")))
                .collect()
        };
        let snap = Self {
            t: doc
                .get("t")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| anyhow!("snapshot has no `t`"))?,
            theta: dense("theta")?,
            s: dense("S")?,
            x: dense("x")?,
            y: dense("y")?,
            kappa: array("kappa")?,
        };
        let n = snap.s.len();
        if [
            snap.theta.len(),
            snap.x.len(),
            snap.y.len(),
            snap.kappa.len(),
        ]
        .iter()
        .any(|&m| m != n)
        {
            return Err(anyhow!("snapshot arrays differ in length"));
        }
        Ok(snap)
    }
}

pub fn series_row(r: &DiagnosticsRecord<f64>) -> String {
    [
        sci(r.t),
        sci(r.energy),
        sci(r.l2_norm),
        sci(r.convexity_margin),
        sci(r.hyperbolicity_margin),
        r.forcing_bound_ok.to_string(),
        sci(r.length),
        sci(r.area),
        sci(r.steady_residual_norm),
    ]
    .join(",")
}

pub fn series_csv(records: &[DiagnosticsRecord<f64>]) -> String {
    let mut out = SERIES_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&series_row(r));
        out.push('\n');
    }
    out
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.9}");
    // Avoid a signed zero, which would make mirrored inputs differ textually.
    if s.trim_start_matches('-')
        .bytes()
        .all(|b| b == b'0' || b == b'.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Single closed path in SVG user space (y pointing down, so the curve is
/// mirrored into screen orientation) inside a viewBox with a 5% margin.
pub fn svg_document(curve: &PlaneCurve<f64>) -> anyhow::Result<String> {
    if curve.is_empty() || !curve.is_finite() {
        return Err(anyhow!("cannot render a non-finite or empty curve"));
    }
    let (xmin, ymin, xmax, ymax) = curve.bounds();
    let extent = (xmax - xmin).max(ymax - ymin);
    let margin = if extent > 0.0 { 0.05 * extent } else { 1.0 };
    let (left, top) = (xmin - margin, -ymax - margin);
    let (width, height) = (xmax - xmin + 2.0 * margin, ymax - ymin + 2.0 * margin);
    let stroke = 0.005 * width.max(height);

    let mut d = String::new();
    for (i, p) in curve.points.iter().enumerate() {
        let _ = write!(
            d,
            "{}{},{} ",
            if i == 0 { "M" } else { "L" },
            fixed(p[0]),
            fixed(-p[1])
        );
    }
    d.push('Z');
    Ok(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
         <path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>\n\
         </svg>\n",
        fixed(left),
        fixed(top),
        fixed(width),
        fixed(height),
        fixed(stroke),
    ))
}

pub fn write_svg(curve: &PlaneCurve<f64>, path: &Path) -> anyhow::Result<()> {
    write_file(path, &svg_document(curve)?)
}

pub fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
