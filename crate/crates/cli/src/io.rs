//! File formats: provenance headers, scattering JSON, rates CSV.

use fl_core::error::{Error, Result};
use fl_core::field::SpectralContour;
use fl_core::scattering::{ScatterInvariants, ScatteringData};
use fl_core::spectrum::SolitonEnsemble;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Provenance block carried by every output file: command, parameters,
/// toolkit version and the SHA-256 of each input file. No timestamps, so
/// identical runs produce identical bytes.
pub fn provenance(command: &str, params: &serde_json::Value, inputs: &[&Path]) -> serde_json::Value {
    let mut hashes = serde_json::Map::new();
    for p in inputs {
        let digest = std::fs::read(p)
            .map(|bytes| {
                let mut h = Sha256::new();
                h.update(&bytes);
                format!("{:x}", h.finalize())
            })
            .unwrap_or_else(|_| "unreadable".to_string());
        hashes.insert(p.display().to_string(), serde_json::Value::String(digest));
    }
    serde_json::json!({
        "command": command,
        "parameters": params,
        "version": env!("CARGO_PKG_VERSION"),
        "input_hashes": hashes,
    })
}

#[derive(Serialize, Deserialize)]
struct NodeRow {
    re_k: f64,
    im_k: f64,
    re_a: f64,
    im_a: f64,
    re_b: f64,
    im_b: f64,
    re_r: f64,
    im_r: f64,
}

#[derive(Serialize, Deserialize)]
struct ScatteringJson {
    provenance: serde_json::Value,
    contour: SpectralContour,
    nodes: Vec<NodeRow>,
    a0: [f64; 2],
    discrete: SolitonEnsemble,
    invariants: ScatterInvariants,
}

pub fn scattering_to_json(sd: &ScatteringData, prov: serde_json::Value) -> String {
    let pts = sd.contour.points();
    let nodes: Vec<NodeRow> = (0..pts.len())
        .map(|i| NodeRow {
            re_k: pts[i].re,
            im_k: pts[i].im,
            re_a: sd.a_values[i].re,
            im_a: sd.a_values[i].im,
            re_b: sd.b_values[i].re,
            im_b: sd.b_values[i].im,
            re_r: sd.r_values[i].re,
            im_r: sd.r_values[i].im,
        })
        .collect();
    let doc = ScatteringJson {
        provenance: prov,
        contour: sd.contour.clone(),
        nodes,
        a0: [sd.a0.re, sd.a0.im],
        discrete: sd.discrete.clone(),
        invariants: sd.invariants,
    };
    serde_json::to_string_pretty(&doc).expect("scattering serialization")
}

pub fn scattering_from_json(text: &str) -> Result<ScatteringData> {
    let doc: ScatteringJson = serde_json::from_str(text)?;
    let n = doc.contour.len();
    if doc.nodes.len() != n {
        return Err(Error::Config(format!(
            "scattering file has {} rows but the contour has {} nodes",
            doc.nodes.len(),
            n
        )));
    }
    Ok(ScatteringData {
        contour: doc.contour,
        a_values: doc.nodes.iter().map(|r| Complex64::new(r.re_a, r.im_a)).collect(),
        b_values: doc.nodes.iter().map(|r| Complex64::new(r.re_b, r.im_b)).collect(),
        r_values: doc.nodes.iter().map(|r| Complex64::new(r.re_r, r.im_r)).collect(),
        a0: Complex64::new(doc.a0[0], doc.a0[1]),
        discrete: doc.discrete,
        invariants: doc.invariants,
    })
}

/// Ensemble JSON with a provenance wrapper.
pub fn ensemble_to_json(ens: &SolitonEnsemble, prov: serde_json::Value) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "provenance": prov,
        "poles": serde_json::from_str::<serde_json::Value>(&ens.to_json()).unwrap(),
    }))
    .expect("ensemble serialization")
}

pub fn ensemble_from_json(text: &str) -> Result<SolitonEnsemble> {
    // accept both the wrapped and the bare row formats
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
        if let Some(poles) = v.get("poles") {
            return SolitonEnsemble::from_json(&poles.to_string());
        }
    }
    SolitonEnsemble::from_json(text)
}
