//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; errors surface as JS exceptions.
//! The demo works on the bit-flip sector of the rotated surface code, where
//! qubit `q` is mechanism `q` and the logical runs along column 0.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use worm_decoder::bench::estimate_chi2_empirical;
use worm_decoder::codes::{sample_errors, SurfaceLayout};
use worm_decoder::decoder::{decode as run_decode, DecodeConfig};
use worm_decoder::oracle::{exact_chi, MAX_EDGES};
use worm_decoder::{reweight, Chain, DecodingGraph, DetectorErrorModel, Variant};

const MAX_DISTANCE: usize = 15;

type Out = Result<Value, String>;

fn model(d: usize, p: f64) -> Result<(SurfaceLayout, DetectorErrorModel, DecodingGraph), String> {
    if d > MAX_DISTANCE {
        return Err(format!("distance {d} exceeds the demo limit {MAX_DISTANCE}"));
    }
    let layout = SurfaceLayout::new(d).map_err(|e| e.to_string())?;
    let m = layout.bit_flip_model(p).map_err(|e| e.to_string())?;
    let g = DecodingGraph::from_dem(&m).map_err(|e| e.to_string())?;
    Ok((layout, m, g))
}

fn parse_bits(s: &str, n: usize) -> Result<Vec<bool>, String> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(format!("unexpected character `{c}` in error string")),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != n {
        return Err(format!("expected {n} qubit bits, got {}", bits.len()));
    }
    Ok(bits)
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn layout_json(d: usize) -> Out {
    let (layout, _, _) = model(d, 0.1)?;
    Ok(json!({
        "d": d,
        "num_qubits": layout.num_qubits(),
        "z_checks": layout.z_checks,
        "z_corners": layout.z_corners,
        "logical_qubits": (0..d).map(|r| r * d).collect::<Vec<_>>(),
    }))
}

pub fn random_error_json(d: usize, p: f64, seed: u64) -> Out {
    let (_, m, _) = model(d, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(json!({ "error": bit_string(&sample_errors(&m, &mut rng)) }))
}

pub fn decode_json(d: usize, p: f64, error: &str, samples: usize, variant: &str, seed: u64) -> Out {
    let (_, m, g) = model(d, p)?;
    let fired = parse_bits(error, m.num_mechanisms())?;
    let (syndrome, actual) = m.apply(&fired);
    let cfg = DecodeConfig {
        n_samples: samples,
        variant: variant.parse::<Variant>().map_err(|e| e.to_string())?,
        seed,
        marginals: true,
        ..Default::default()
    };
    let r = run_decode(&g, &syndrome, &cfg).map_err(|e| e.to_string())?;
    let residual = m.apply(
        &(0..fired.len())
            .map(|j| fired[j] ^ r.recovery.contains(j))
            .collect::<Vec<_>>(),
    );
    let rec = r.to_record();
    Ok(json!({
        "syndrome": bit_string(&syndrome),
        "recovery": r.recovery.edges(),
        "class": rec.class,
        "actual_class": bit_string(&actual),
        "success": residual.1.iter().all(|&b| !b),
        "p_succ": rec.p_succ,
        "tally": rec.tally,
        "marginals": rec.marginals,
        "steps": rec.steps,
    }))
}

pub fn diagnostics_json(d: usize, p: f64, steps: u64, seed: u64) -> Out {
    let (_, _, g) = model(d, p)?;
    let rg = reweight(&g, Chain::empty(g.num_edges()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi2 = estimate_chi2_empirical(&rg, steps, &mut rng).map_err(|e| e.to_string())?;
    let exact = if g.num_edges() <= MAX_EDGES {
        Some(exact_chi(&rg).map_err(|e| e.to_string())?)
    } else {
        None
    };
    Ok(json!({
        "vertices": g.num_vertices(),
        "edges": g.num_edges(),
        "chi2_empirical": chi2,
        "chi2_exact": exact.map(|e| e.0),
        "chi4_exact": exact.map(|e| e.1),
    }))
}

fn js(out: Out) -> Result<String, JsError> {
    out.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Check geometry for drawing.
#[wasm_bindgen]
pub fn layout(d: usize) -> Result<String, JsError> {
    js(layout_json(d))
}

/// Independent bit flips with probability `p` on every qubit.
#[wasm_bindgen]
pub fn random_error(d: usize, p: f64, seed: u64) -> Result<String, JsError> {
    js(random_error_json(d, p, seed))
}

/// Decodes the syndrome of `error` (one `0`/`1` per qubit).
#[wasm_bindgen]
pub fn decode(d: usize, p: f64, error: &str, samples: usize, variant: &str, seed: u64) -> Result<String, JsError> {
    js(decode_json(d, p, error, samples, variant, seed))
}

/// Two-defect susceptibility of the loop ensemble at uniform `p`.
#[wasm_bindgen]
pub fn diagnostics(d: usize, p: f64, steps: u64, seed: u64) -> Result<String, JsError> {
    js(diagnostics_json(d, p, steps, seed))
}
