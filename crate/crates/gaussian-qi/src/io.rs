//! JSON formats for states, channels, cluster graphs and QKD scenarios, and the
//! sweep row written by the CSV front end. Every format carries `"hbar": 2`;
//! documents with any other value are rejected on load.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channels::GaussianChannel;
use crate::cluster::ClusterGraph;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::phase_space::GaussianState;
use crate::qkd::QkdScenario;

pub const HBAR: f64 = 2.0;

fn hbar() -> f64 {
    HBAR
}

fn check_hbar(h: f64) -> Result<()> {
    if h == HBAR {
        Ok(())
    } else {
        Err(Error::Domain(format!("hbar: only hbar = 2 is supported, got {h}")))
    }
}

fn parse<T: DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Domain(format!("{what}: {e}")))
}

fn dump<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serialises")
}

fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape(format!("{field}: rows have unequal length")));
    }
    Ok(Mat::from_fn(n, m, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    #[serde(default = "hbar")]
    pub hbar: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

pub fn state_to_json(state: &GaussianState) -> String {
    dump(&StateDoc { hbar: HBAR, mean: state.mean.iter().copied().collect(), cov: rows(&state.cov) })
}

/// Parses and validates a state document.
pub fn state_from_json(s: &str) -> Result<GaussianState> {
    let doc: StateDoc = parse("state", s)?;
    check_hbar(doc.hbar)?;
    let cov = matrix("cov", &doc.cov)?;
    if cov.nrows() != doc.mean.len() || cov.ncols() != doc.mean.len() {
        return Err(Error::Shape(format!(
            "cov: expected {0}x{0} to match mean, got {1}x{2}",
            doc.mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    GaussianState::new(Vector::from_vec(doc.mean), cov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDoc {
    #[serde(default = "hbar")]
    pub hbar: f64,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<f64>>,
    #[serde(default)]
    pub d: Vec<f64>,
}

pub fn channel_to_json(ch: &GaussianChannel) -> String {
    dump(&ChannelDoc { hbar: HBAR, t: rows(&ch.t), n: rows(&ch.n), d: ch.d.iter().copied().collect() })
}

pub fn channel_from_json(s: &str) -> Result<GaussianChannel> {
    let doc: ChannelDoc = parse("channel", s)?;
    check_hbar(doc.hbar)?;
    let t = matrix("T", &doc.t)?;
    let n = matrix("N", &doc.n)?;
    let d = if doc.d.is_empty() { Vector::zeros(t.nrows()) } else { Vector::from_vec(doc.d) };
    GaussianChannel::new(t, n, d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tagged<T> {
    #[serde(default = "hbar")]
    hbar: f64,
    #[serde(flatten)]
    body: T,
}

pub fn graph_to_json(g: &ClusterGraph) -> String {
    dump(&Tagged { hbar: HBAR, body: g.clone() })
}

pub fn graph_from_json(s: &str) -> Result<ClusterGraph> {
    let doc: Tagged<ClusterGraph> = parse("graph", s)?;
    check_hbar(doc.hbar)?;
    doc.body.validate()?;
    Ok(doc.body)
}

pub fn scenario_to_json(sc: &QkdScenario) -> String {
    dump(&Tagged { hbar: HBAR, body: *sc })
}

pub fn scenario_from_json(s: &str) -> Result<QkdScenario> {
    let doc: Tagged<QkdScenario> = parse("scenario", s)?;
    check_hbar(doc.hbar)?;
    doc.body.validate()?;
    Ok(doc.body)
}

/// One row of a key-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub chi: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub beta: f64,
    #[serde(rename = "I_ab")]
    pub i_ab: f64,
    #[serde(rename = "S_eve")]
    pub s_eve: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

pub const SWEEP_COLUMNS: [&str; 7] = ["tau", "chi", "V", "beta", "I_ab", "S_eve", "K"];

/// `# gaussian-qi v<semver>`, the first line of every CSV stream.
pub fn csv_header_comment() -> String {
    format!("# gaussian-qi v{}", env!("CARGO_PKG_VERSION"))
}
