//! JSON serialization of problem instances.
//!
//! Floats travel as hex-float strings so a round trip reproduces the exact
//! bit pattern; the seed and integer shape fields round-trip verbatim.

use super::{ObjectiveProblem, Payload, ProblemKind};
use crate::error::{Error, Result};
use crate::hexfloat::{decode_f64, encode_f64};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct ProblemDto {
    kind: String,
    n: usize,
    m: usize,
    seed: u64,
    lipschitz: String,
    known_optimum: Option<Vec<String>>,
    known_optimal_value: Option<String>,
    payload: PayloadDto,
}

#[derive(Serialize, Deserialize)]
struct PayloadDto {
    a: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<String>,
}

fn encode_vector<T: Scalar>(v: &DenseVector<T>) -> Vec<String> {
    v.iter().map(|x| encode_f64(x.as_f64())).collect()
}

fn encode_matrix<T: Scalar>(m: &DenseMatrix<T>) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| encode_f64(x.as_f64())).collect())
        .collect()
}

fn decode_vector<T: Scalar>(v: &[String], what: &str) -> Result<DenseVector<T>> {
    let mut out = Vec::with_capacity(v.len());
    for s in v {
        let x = decode_f64(s)?;
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("{what} entry {s:?}")));
        }
        out.push(T::of(x));
    }
    Ok(DenseVector::from_vec(out))
}

fn decode_matrix<T: Scalar>(rows: &[Vec<String>], m: usize, n: usize, what: &str) -> Result<DenseMatrix<T>> {
    if rows.len() != m {
        return Err(Error::Parse(format!("{what}: expected {m} rows, found {}", rows.len())));
    }
    let mut data = Vec::with_capacity(m * n);
    for row in rows {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "{what}: expected {n} columns, found {}",
                row.len()
            )));
        }
        for s in row {
            let x = decode_f64(s)?;
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("{what} entry {s:?}")));
            }
            data.push(T::of(x));
        }
    }
    DenseMatrix::from_vec(m, n, data)
}

/// Serialize a problem instance to the dataset JSON schema.
pub fn problem_to_json_string<T: Scalar>(p: &ObjectiveProblem<T>) -> Result<String> {
    let payload = match p.payload() {
        Payload::LeastSquares { a, b } => PayloadDto {
            a: encode_matrix(a),
            b: Some(encode_vector(b)),
            labels: None,
            rho: None,
        },
        Payload::Logistic { a, labels, rho } => PayloadDto {
            a: encode_matrix(a),
            b: None,
            labels: Some(labels.clone()),
            rho: Some(encode_f64(rho.as_f64())),
        },
        Payload::LogSumExp { a, b } => PayloadDto {
            a: encode_matrix(a),
            b: Some(encode_vector(b)),
            labels: None,
            rho: None,
        },
    };
    let dto = ProblemDto {
        kind: p.kind().as_str().to_string(),
        n: p.dimension(),
        m: p.terms(),
        seed: p.seed(),
        lipschitz: encode_f64(p.lipschitz().as_f64()),
        known_optimum: p.known_optimum().map(encode_vector),
        known_optimal_value: p.known_optimal_value().map(|v| encode_f64(v.as_f64())),
        payload,
    };
    Ok(serde_json::to_string(&dto)?)
}

/// Parse and validate a problem instance from dataset JSON.
pub fn problem_from_json_str<T: Scalar>(s: &str) -> Result<ObjectiveProblem<T>> {
    let dto: ProblemDto = serde_json::from_str(s)?;
    let kind = ProblemKind::parse(&dto.kind)?;
    let (n, m) = (dto.n, dto.m);
    if n == 0 || m == 0 {
        return Err(Error::Parse("problem dimensions must be positive".into()));
    }
    let payload = match kind {
        ProblemKind::LeastSquares => {
            let a = decode_matrix::<T>(&dto.payload.a, m, n, "A")?;
            let b = dto
                .payload
                .b
                .as_deref()
                .ok_or_else(|| Error::Parse("least squares payload missing b".into()))?;
            if b.len() != m {
                return Err(Error::Parse(format!("b has length {}, expected {m}", b.len())));
            }
            Payload::LeastSquares {
                a,
                b: decode_vector(b, "b")?,
            }
        }
        ProblemKind::LogisticRegression => {
            let a = decode_matrix::<T>(&dto.payload.a, m, n, "features")?;
            let labels = dto
                .payload
                .labels
                .clone()
                .ok_or_else(|| Error::Parse("logistic payload missing labels".into()))?;
            if labels.len() != m {
                return Err(Error::Parse(format!(
                    "labels have length {}, expected {m}",
                    labels.len()
                )));
            }
            if labels.iter().any(|l| *l > 1) {
                return Err(Error::Parse("labels must be 0 or 1".into()));
            }
            let rho_s = dto
                .payload
                .rho
                .as_deref()
                .ok_or_else(|| Error::Parse("logistic payload missing rho".into()))?;
            let rho = decode_f64(rho_s)?;
            if !rho.is_finite() || rho <= 0.0 {
                return Err(Error::Parse("rho must be positive and finite".into()));
            }
            Payload::Logistic {
                a,
                labels,
                rho: T::of(rho),
            }
        }
        ProblemKind::LogSumExp => {
            let a = decode_matrix::<T>(&dto.payload.a, m, n, "A")?;
            let b = dto
                .payload
                .b
                .as_deref()
                .ok_or_else(|| Error::Parse("log-sum-exp payload missing b".into()))?;
            if b.len() != m {
                return Err(Error::Parse(format!("b has length {}, expected {m}", b.len())));
            }
            Payload::LogSumExp {
                a,
                b: decode_vector(b, "b")?,
            }
        }
    };
    let lipschitz = decode_f64(&dto.lipschitz)?;
    if !lipschitz.is_finite() || lipschitz <= 0.0 {
        return Err(Error::Parse("lipschitz bound must be positive and finite".into()));
    }
    let known_optimum = match &dto.known_optimum {
        Some(v) => {
            let x = decode_vector::<T>(v, "known_optimum")?;
            if x.len() != n {
                return Err(Error::Parse("known_optimum has the wrong length".into()));
            }
            Some(x)
        }
        None => None,
    };
    let known_optimal_value = match &dto.known_optimal_value {
        Some(s) => {
            let v = decode_f64(s)?;
            if !v.is_finite() {
                return Err(Error::NonFinite("known_optimal_value".into()));
            }
            Some(T::of(v))
        }
        None => None,
    };
    Ok(ObjectiveProblem::from_raw_parts(
        n,
        m,
        dto.seed,
        payload,
        T::of(lipschitz),
        known_optimum,
        known_optimal_value,
    ))
}
