//! WebAssembly entry points for the static page in `www/`.
//!
//! Each export returns a JSON string; the plain Rust functions underneath
//! are what the tests exercise.

use hkt_core::bwt;
use hkt_core::bwtcm;
use hkt_core::container::{self, CodecId, Config, ContainerReader};
use hkt_core::mix::Profile;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Longest input for which the rotation table is returned.
pub const MAX_TABLE: usize = 64;

pub fn bwt_view_json(text: &str) -> Result<Value, String> {
    let bytes = text.as_bytes();
    let b = bwt::bwt_forward(bytes).map_err(|e| e.to_string())?;
    let back = bwt::bwt_inverse(&b).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    if bytes.len() <= MAX_TABLE {
        let mut rot: Vec<Vec<u8>> = (0..bytes.len()).map(|i| [&bytes[i..], &bytes[..i]].concat()).collect();
        rot.sort();
        rows = rot.into_iter().map(|r| String::from_utf8_lossy(&r).into_owned()).collect();
    }
    let runs = b.l.chunk_by(|a, b| a == b).count();
    Ok(json!({
        "last": String::from_utf8_lossy(&b.l),
        "primary": b.primary,
        "periodic": b.periodic,
        "runs": runs,
        "rows": rows,
        "roundtrip": back == bytes,
    }))
}

/// Counter value after each of `steps` updates with bit 1, starting at 0.
pub fn step_response(tau: u32, steps: u32) -> Vec<u32> {
    let mut v = 0u16;
    (0..steps)
        .map(|_| {
            v = bwtcm::ema(v, 1, tau);
            u32::from(v)
        })
        .collect()
}

pub fn step_response_json(steps: u32) -> Value {
    let taus = [bwtcm::TAU_ORDER0, bwtcm::TAU_ORDER12, bwtcm::TAU_SSE];
    let series: Vec<Value> = taus
        .iter()
        .map(|&tau| {
            let v = step_response(tau, steps);
            let half = v.iter().position(|&x| x >= 32768).map(|i| i + 1);
            json!({ "tau": tau, "values": v, "half_life": half })
        })
        .collect();
    json!({ "max": 65535, "series": series })
}

pub fn compress_json(input: &str, nuc_codec: &str, block_size: usize) -> Result<Value, String> {
    let nuc = match nuc_codec {
        "bwt" => CodecId::BwtCm,
        "mix" => CodecId::MarkovMix,
        "lz" => CodecId::LzExt,
        "raw" => CodecId::Raw,
        other => return Err(format!("unknown codec {other}")),
    };
    let mut cfg = Config::default().with_nuc_codec(nuc);
    cfg.profile = Profile::Lite;
    cfg.block_size = block_size.max(1);
    let bytes = input.as_bytes();
    let packed = container::compress_file(bytes, &cfg).map_err(|e| format!("{} ({})", e, e.category()))?;
    let reader = ContainerReader::open(&packed).map_err(|e| e.to_string())?;
    let back = reader.decompress().map_err(|e| e.to_string())?;
    let streams: Vec<Value> = reader
        .stream_sizes()
        .into_iter()
        .map(|(name, codec, raw, comp)| json!({ "stream": name, "codec": codec.name(), "raw": raw, "compressed": comp }))
        .collect();
    Ok(json!({
        "input_bytes": bytes.len(),
        "output_bytes": packed.len(),
        "bpb": hkt_core::bench::bpb(packed.len() as u64, bytes.len() as u64),
        "records": reader.index.records.len(),
        "nuc_width": reader.header.nuc_width.map(|w| w.bits()),
        "streams": streams,
        "roundtrip": back == bytes,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Sorted rotations, last column and primary index of `text`.
#[wasm_bindgen]
pub fn bwt_view(text: &str) -> Result<String, JsError> {
    to_js(bwt_view_json(text))
}

/// Trajectories of the three counter rates under a constant 1 input.
#[wasm_bindgen]
pub fn counter_steps(steps: u32) -> String {
    step_response_json(steps.min(1000)).to_string()
}

/// Compress a FASTA/FASTQ text and report per-stream sizes.
#[wasm_bindgen]
pub fn compress(input: &str, nuc_codec: &str, block_size: usize) -> Result<String, JsError> {
    to_js(compress_json(input, nuc_codec, block_size))
}
