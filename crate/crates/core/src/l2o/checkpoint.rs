//! Checkpoint serialization: model parameters and Adam moments as hex-float
//! JSON. Loading rejects schema or shape mismatches outright.

use super::{AdamState, L2OModel};
use crate::error::{Error, Result};
use crate::hexfloat::{decode_f64, encode_f64};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;
use serde::{Deserialize, Serialize};

pub const CHECKPOINT_SCHEMA: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LstmDto {
    w: Vec<Vec<String>>,
    u: Vec<Vec<String>>,
    b: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MlpDto {
    w1: Vec<Vec<String>>,
    b1: Vec<String>,
    w2: Vec<String>,
    b2: String,
}

#[derive(Serialize, Deserialize)]
struct MomentsDto {
    t: usize,
    m: Vec<String>,
    v: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDto {
    schema: u32,
    hd: usize,
    hm: usize,
    update_count: usize,
    lstm: LstmDto,
    mlp: MlpDto,
    adam_moments: MomentsDto,
}

/// A loaded checkpoint: model, optimizer moments, and progress counter.
#[derive(Debug, Clone)]
pub struct Checkpoint<T: Scalar> {
    pub model: L2OModel<T>,
    pub adam: AdamState<T>,
    pub update_count: usize,
}

fn enc_mat<T: Scalar>(m: &DenseMatrix<T>) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| encode_f64(v.as_f64())).collect())
        .collect()
}

fn enc_vec<T: Scalar>(v: &DenseVector<T>) -> Vec<String> {
    v.iter().map(|x| encode_f64(x.as_f64())).collect()
}

fn dec_mat<T: Scalar>(rows: &[Vec<String>], r: usize, c: usize, what: &str) -> Result<DenseMatrix<T>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Checkpoint(format!("{what} is not {r}x{c}")));
    }
    let mut data = Vec::with_capacity(r * c);
    for row in rows {
        for s in row {
            data.push(T::of(finite(decode_f64(s)?, what)?));
        }
    }
    DenseMatrix::from_vec(r, c, data)
}

fn dec_vec<T: Scalar>(v: &[String], len: usize, what: &str) -> Result<DenseVector<T>> {
    if v.len() != len {
        return Err(Error::Checkpoint(format!("{what} has length {}, expected {len}", v.len())));
    }
    let mut out = Vec::with_capacity(len);
    for s in v {
        out.push(T::of(finite(decode_f64(s)?, what)?));
    }
    Ok(DenseVector::from_vec(out))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Checkpoint(format!("non-finite value in {what}")))
    }
}

/// Serialize model + optimizer state to the checkpoint JSON schema.
pub fn checkpoint_to_json<T: Scalar>(
    model: &L2OModel<T>,
    adam: &AdamState<T>,
    update_count: usize,
) -> Result<String> {
    let dto = CheckpointDto {
        schema: CHECKPOINT_SCHEMA,
        hd: model.hd,
        hm: model.hm,
        update_count,
        lstm: LstmDto {
            w: enc_mat(&model.w),
            u: enc_mat(&model.u),
            b: enc_vec(&model.b),
        },
        mlp: MlpDto {
            w1: enc_mat(&model.w1),
            b1: enc_vec(&model.b1),
            w2: enc_vec(&model.w2),
            b2: encode_f64(model.b2.as_f64()),
        },
        adam_moments: MomentsDto {
            t: adam.t,
            m: adam.m.iter().map(|x| encode_f64(x.as_f64())).collect(),
            v: adam.v.iter().map(|x| encode_f64(x.as_f64())).collect(),
        },
    };
    Ok(serde_json::to_string(&dto)?)
}

/// Parse a checkpoint, validating schema version and every shape.
pub fn checkpoint_from_json<T: Scalar>(s: &str) -> Result<Checkpoint<T>> {
    let dto: CheckpointDto = serde_json::from_str(s).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if dto.schema != CHECKPOINT_SCHEMA {
        return Err(Error::Checkpoint(format!(
            "schema {} unsupported (expected {CHECKPOINT_SCHEMA})",
            dto.schema
        )));
    }
    let (hd, hm) = (dto.hd, dto.hm);
    if hd == 0 || hm == 0 {
        return Err(Error::Checkpoint("hidden sizes must be positive".into()));
    }
    let model = L2OModel {
        hd,
        hm,
        w: dec_mat(&dto.lstm.w, 4 * hd, 3, "lstm.w")?,
        u: dec_mat(&dto.lstm.u, 4 * hd, hd, "lstm.u")?,
        b: dec_vec(&dto.lstm.b, 4 * hd, "lstm.b")?,
        w1: dec_mat(&dto.mlp.w1, hm, hd, "mlp.w1")?,
        b1: dec_vec(&dto.mlp.b1, hm, "mlp.b1")?,
        w2: dec_vec(&dto.mlp.w2, hm, "mlp.w2")?,
        b2: T::of(finite(decode_f64(&dto.mlp.b2)?, "mlp.b2")?),
    };
    let count = model.param_count();
    if dto.adam_moments.m.len() != count || dto.adam_moments.v.len() != count {
        return Err(Error::Checkpoint(format!(
            "adam moments have {} / {} entries, expected {count}",
            dto.adam_moments.m.len(),
            dto.adam_moments.v.len()
        )));
    }
    let mut m = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for s in &dto.adam_moments.m {
        m.push(T::of(finite(decode_f64(s)?, "adam_moments.m")?));
    }
    for s in &dto.adam_moments.v {
        v.push(T::of(finite(decode_f64(s)?, "adam_moments.v")?));
    }
    Ok(Checkpoint {
        model,
        adam: AdamState {
            m,
            v,
            t: dto.adam_moments.t,
        },
        update_count: dto.update_count,
    })
}
