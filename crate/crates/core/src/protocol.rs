//! One-round protocol simulation.
//!
//! The network model is one noiseless uplink per user: each user forms
//! `X_k = W_k + Z_k` and the server decodes by summing the messages. Rounds
//! are independent; sampled rounds derive their randomness from the master
//! seed and the round index, so transcripts are reproducible.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{FMatrix, FieldRng};
use crate::pattern::UserSet;
use crate::scheme::{expand_keys, scheme_hash, KeyScheme, SchemeError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("DIM_MISMATCH: {0}")]
    DimMismatch(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("malformed transcript file: {0}")]
    BadFile(String),
}

/// How a round's randomness was chosen.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sampled { seed: u64, round: u64 },
    Explicit,
}

/// Everything one protocol round produced.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transcript {
    pub scheme_hash: String,
    pub modulus: u64,
    pub input_len: u32,
    /// Per-user inputs, index `user - 1`, each `L x 1`.
    pub inputs: Vec<FMatrix>,
    pub z_sigma: FMatrix,
    /// Per-user keys; unkeyed users hold the empty column.
    pub keys: Vec<FMatrix>,
    /// Per-user messages, each `L x 1`.
    pub messages: Vec<FMatrix>,
    /// The server's decode: the sum of all messages.
    pub decoded_sum: FMatrix,
    pub provenance: Provenance,
}

/// What a server-plus-coalition sees: every message, the decoded sum, and
/// the coalition members' own inputs and keys.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoalitionView {
    pub coalition: UserSet,
    pub messages: Vec<FMatrix>,
    pub decoded_sum: FMatrix,
    pub inputs: BTreeMap<u32, FMatrix>,
    pub keys: BTreeMap<u32, FMatrix>,
}

/// Round randomness derived from the master seed and the round index.
pub fn round_seed(master_seed: u64, round: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(round.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn assemble(
    scheme: &KeyScheme,
    inputs: Vec<FMatrix>,
    z_sigma: FMatrix,
    provenance: Provenance,
) -> Result<Transcript, ProtocolError> {
    let l = scheme.input_len as usize;
    let p = scheme.modulus();
    for (i, w) in inputs.iter().enumerate() {
        if w.rows != l || w.cols != 1 || w.modulus != p {
            return Err(ProtocolError::DimMismatch(format!(
                "input of user {} must be {l}x1 mod {p}",
                i + 1
            )));
        }
    }
    let keys = expand_keys(scheme, &z_sigma)?;
    let messages: Vec<FMatrix> = inputs
        .iter()
        .zip(&keys)
        .map(|(w, z)| if z.rows == 0 { w.clone() } else { w.add(z) })
        .collect();
    let mut decoded_sum = FMatrix::zero(l, 1, p);
    for x in &messages {
        decoded_sum = decoded_sum.add(x);
    }
    Ok(Transcript {
        scheme_hash: scheme_hash(scheme),
        modulus: p,
        input_len: scheme.input_len,
        inputs,
        z_sigma,
        keys,
        messages,
        decoded_sum,
        provenance,
    })
}

/// Run one round with explicit inputs and source key.
pub fn run_round(
    scheme: &KeyScheme,
    inputs: Vec<FMatrix>,
    z_sigma: FMatrix,
) -> Result<Transcript, ProtocolError> {
    if inputs.len() != scheme.k as usize {
        return Err(ProtocolError::DimMismatch(format!(
            "expected {} inputs, got {}",
            scheme.k,
            inputs.len()
        )));
    }
    assemble(scheme, inputs, z_sigma, Provenance::Explicit)
}

/// Run one round with inputs and source key sampled uniformly from the
/// round's derived seed. Draw order: `w_1, .., w_K`, then `z_sigma`.
pub fn run_round_sampled(
    scheme: &KeyScheme,
    master_seed: u64,
    round: u64,
) -> Result<Transcript, ProtocolError> {
    let mut rng = FieldRng::from_seed(round_seed(master_seed, round));
    let l = scheme.input_len as usize;
    let p = scheme.modulus();
    let inputs: Vec<FMatrix> = (0..scheme.k)
        .map(|_| FMatrix::sample_uniform(l, 1, p, &mut rng))
        .collect();
    let z_sigma = FMatrix::sample_uniform(scheme.source_dim as usize, 1, p, &mut rng);
    assemble(
        scheme,
        inputs,
        z_sigma,
        Provenance::Sampled {
            seed: master_seed,
            round,
        },
    )
}

/// Check the transcript against the protocol contract: message shape,
/// message formation, and the decode matching the true input sum.
pub fn verify_transcript(scheme: &KeyScheme, t: &Transcript) -> bool {
    let l = scheme.input_len as usize;
    let p = scheme.modulus();
    if t.messages.len() != scheme.k as usize || t.inputs.len() != scheme.k as usize {
        return false;
    }
    // Communication is exactly L symbols per user.
    if !t.messages.iter().all(|x| x.rows == l && x.cols == 1) {
        return false;
    }
    for ((w, z), x) in t.inputs.iter().zip(&t.keys).zip(&t.messages) {
        let expect = if z.rows == 0 { w.clone() } else { w.add(z) };
        if *x != expect {
            return false;
        }
    }
    let mut w_sum = FMatrix::zero(l, 1, p);
    for w in &t.inputs {
        w_sum = w_sum.add(w);
    }
    let mut x_sum = FMatrix::zero(l, 1, p);
    for x in &t.messages {
        x_sum = x_sum.add(x);
    }
    t.decoded_sum == x_sum && t.decoded_sum == w_sum
}

/// Restrict a transcript to what the server plus `coalition` observes.
/// Callers audit what-if coalitions outside the colluding closure too, so
/// closure membership is not enforced here.
pub fn coalition_view(t: &Transcript, coalition: UserSet) -> CoalitionView {
    CoalitionView {
        coalition,
        messages: t.messages.clone(),
        decoded_sum: t.decoded_sum.clone(),
        inputs: coalition
            .iter()
            .map(|u| (u, t.inputs[(u - 1) as usize].clone()))
            .collect(),
        keys: coalition
            .iter()
            .map(|u| (u, t.keys[(u - 1) as usize].clone()))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Transcript file: hex-encoded field-element arrays.
// ---------------------------------------------------------------------------

fn to_hex(m: &FMatrix) -> String {
    let mut s = String::with_capacity(m.data.len() * 16);
    for &v in &m.data {
        s.push_str(&format!("{v:016x}"));
    }
    s
}

fn from_hex(s: &str, modulus: u64) -> Result<FMatrix, ProtocolError> {
    if s.len() % 16 != 0 {
        return Err(ProtocolError::BadFile(format!(
            "hex column length {} not a multiple of 16",
            s.len()
        )));
    }
    let mut data = Vec::with_capacity(s.len() / 16);
    for chunk in s.as_bytes().chunks(16) {
        let text = std::str::from_utf8(chunk)
            .map_err(|_| ProtocolError::BadFile("non-utf8 hex".into()))?;
        let v = u64::from_str_radix(text, 16)
            .map_err(|e| ProtocolError::BadFile(format!("bad hex element: {e}")))?;
        if v >= modulus {
            return Err(ProtocolError::BadFile(format!(
                "element {v} not reduced mod {modulus}"
            )));
        }
        data.push(v);
    }
    Ok(FMatrix {
        rows: data.len(),
        cols: 1,
        modulus,
        data,
    })
}

#[derive(Serialize, Deserialize)]
struct TranscriptFileRepr {
    scheme_hash: String,
    #[serde(rename = "mod")]
    modulus: u64,
    #[serde(rename = "L")]
    input_len: u32,
    w: BTreeMap<u32, String>,
    z_sigma: String,
    z: BTreeMap<u32, String>,
    x: BTreeMap<u32, String>,
    decoded_sum: String,
    provenance: Provenance,
}

/// Serialize a transcript; byte-identical for identical rounds.
pub fn write_transcript(t: &Transcript) -> String {
    let per_user = |v: &[FMatrix]| -> BTreeMap<u32, String> {
        v.iter()
            .enumerate()
            .map(|(i, m)| ((i + 1) as u32, to_hex(m)))
            .collect()
    };
    let repr = TranscriptFileRepr {
        scheme_hash: t.scheme_hash.clone(),
        modulus: t.modulus,
        input_len: t.input_len,
        w: per_user(&t.inputs),
        z_sigma: to_hex(&t.z_sigma),
        z: per_user(&t.keys),
        x: per_user(&t.messages),
        decoded_sum: to_hex(&t.decoded_sum),
        provenance: t.provenance.clone(),
    };
    serde_json::to_string_pretty(&repr).expect("transcript serializes")
}

pub fn read_transcript(json: &str) -> Result<Transcript, ProtocolError> {
    let repr: TranscriptFileRepr =
        serde_json::from_str(json).map_err(|e| ProtocolError::BadFile(e.to_string()))?;
    let p = repr.modulus;
    let decode_users = |map: &BTreeMap<u32, String>| -> Result<Vec<FMatrix>, ProtocolError> {
        let k = map.len() as u32;
        (1..=k)
            .map(|u| {
                let s = map
                    .get(&u)
                    .ok_or_else(|| ProtocolError::BadFile(format!("missing user {u}")))?;
                from_hex(s, p)
            })
            .collect()
    };
    Ok(Transcript {
        scheme_hash: repr.scheme_hash,
        modulus: p,
        input_len: repr.input_len,
        inputs: decode_users(&repr.w)?,
        z_sigma: from_hex(&repr.z_sigma, p)?,
        keys: decode_users(&repr.z)?,
        messages: decode_users(&repr.x)?,
        decoded_sum: from_hex(&repr.decoded_sum, p)?,
        provenance: repr.provenance,
    })
}
