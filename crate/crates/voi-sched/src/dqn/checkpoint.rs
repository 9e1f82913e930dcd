//! Versioned text checkpoints for trained networks.
//!
//! Layer sizes, then per layer the weight rows (row-major) and the bias
//! vector. Floats are written with Rust's shortest round-trip formatting, so
//! save/load is bit-exact. The header records the training seed and the
//! config hash.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::network::QNetwork;

const MAGIC: &str = "voi-sched-checkpoint v1";

/// Provenance recorded alongside the parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub seed: u64,
    pub config_hash: String,
}

/// Serialize a network to the checkpoint text format.
pub fn to_string(net: &QNetwork, header: &CheckpointHeader) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("seed {}\n", header.seed));
    out.push_str(&format!("config-sha256 {}\n", header.config_hash));
    let sizes: Vec<String> = net.layer_sizes().iter().map(|s| s.to_string()).collect();
    out.push_str(&format!("layers {}\n", sizes.join(" ")));
    out.push_str(&format!("dropout {}\n", net.dropout_p));
    for (l, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        out.push_str(&format!("layer {} {} {}\n", l, w.nrows(), w.ncols()));
        for i in 0..w.nrows() {
            let row: Vec<String> = (0..w.ncols()).map(|j| w[(i, j)].to_string()).collect();
            out.push_str("w ");
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let bias: Vec<String> = b.iter().map(|v| v.to_string()).collect();
        out.push_str("b ");
        out.push_str(&bias.join(" "));
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn save(net: &QNetwork, header: &CheckpointHeader, path: &Path) -> Result<()> {
    fs::write(path, to_string(net, header))?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(format!("malformed checkpoint: {}", msg.into()))
}

/// Parse a checkpoint produced by [`to_string`].
pub fn from_string(text: &str) -> Result<(QNetwork, CheckpointHeader)> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing or unsupported header"));
    }
    let seed_line = lines.next().ok_or_else(|| bad("missing seed"))?;
    let seed = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| bad("seed line"))?;
    let config_line = lines.next().ok_or_else(|| bad("missing config hash"))?;
    let config_hash = config_line
        .strip_prefix("config-sha256 ")
        .ok_or_else(|| bad("config line"))?
        .to_string();
    let layers_line = lines.next().ok_or_else(|| bad("missing layers"))?;
    let sizes: Vec<usize> = layers_line
        .strip_prefix("layers ")
        .ok_or_else(|| bad("layers line"))?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| bad("layer size")))
        .collect::<Result<_>>()?;
    let dropout_line = lines.next().ok_or_else(|| bad("missing dropout"))?;
    let dropout_p: f64 = dropout_line
        .strip_prefix("dropout ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("dropout line"))?;

    let mut weights = Vec::with_capacity(sizes.len().saturating_sub(1));
    let mut biases = Vec::with_capacity(sizes.len().saturating_sub(1));
    for l in 0..sizes.len().saturating_sub(1) {
        let head = lines
            .next()
            .ok_or_else(|| bad(format!("missing layer {l}")))?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some("layer") {
            return Err(bad(format!("layer {l} header")));
        }
        let _index: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("layer index"))?;
        let rows: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("layer rows"))?;
        let cols: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("layer cols"))?;
        let mut w = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            let line = lines.next().ok_or_else(|| bad("missing weight row"))?;
            let row = line.strip_prefix("w ").ok_or_else(|| bad("weight row"))?;
            let values: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad("weight value")))
                .collect::<Result<_>>()?;
            if values.len() != cols {
                return Err(bad("weight row length"));
            }
            for (j, v) in values.into_iter().enumerate() {
                w[(i, j)] = v;
            }
        }
        let line = lines.next().ok_or_else(|| bad("missing bias row"))?;
        let bias_row = line.strip_prefix("b ").ok_or_else(|| bad("bias row"))?;
        let bias: Vec<f64> = bias_row
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bias value")))
            .collect::<Result<_>>()?;
        if bias.len() != rows {
            return Err(bad("bias length"));
        }
        weights.push(w);
        biases.push(DVector::from_vec(bias));
    }
    if lines.next() != Some("end") {
        return Err(bad("missing end marker"));
    }
    let net = QNetwork::from_parts(sizes, weights, biases, dropout_p)?;
    Ok((net, CheckpointHeader { seed, config_hash }))
}

pub fn load(path: &Path) -> Result<(QNetwork, CheckpointHeader)> {
    let text = fs::read_to_string(path)?;
    from_string(&text)
}
