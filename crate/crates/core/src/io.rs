//! JSON formats for operators and states, and number formatting for text outputs.
//!
//! Operators are stored as `{"dim": n, "re": [[..]], "im": [[..]]}`; bipartite states add `"dA"`
//! and `"dB"`. Floats are written in the shortest form that parses back to the same bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};
use crate::state::{BipartiteState, DensityMatrix};

/// Significant digits of CSV numbers.
pub const CSV_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
}

fn parts(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = m.nrows();
    let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
    let im = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
    (re, im)
}

fn assemble(dim: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let square = |name: &str, rows: &[Vec<f64>]| -> Result<()> {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!("field '{name}' must be a {dim}×{dim} array")));
        }
        Ok(())
    };
    square("re", re)?;
    square("im", im)?;
    Ok(CMatrix::from_fn(dim, dim, |i, j| num_complex::Complex64::new(re[i][j], im[i][j])))
}

impl MatrixJson {
    pub fn from_operator(op: &HermitianOperator) -> Self {
        let (re, im) = parts(op.matrix());
        Self { dim: op.dim(), re, im }
    }

    pub fn to_operator(&self) -> Result<HermitianOperator> {
        HermitianOperator::new(assemble(self.dim, &self.re, &self.im)?)
    }
}

impl StateJson {
    pub fn from_state(state: &BipartiteState) -> Self {
        let (re, im) = parts(state.state().matrix());
        Self { dim: state.dim(), re, im, d_a: state.d_a(), d_b: state.d_b() }
    }

    pub fn to_state(&self) -> Result<BipartiteState> {
        let rho = DensityMatrix::from_matrix(assemble(self.dim, &self.re, &self.im)?)?;
        BipartiteState::new(rho, self.d_a, self.d_b)
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("{what}: {e}")))
}

pub fn operator_from_json(text: &str) -> Result<HermitianOperator> {
    parse::<MatrixJson>(text, "matrix")?.to_operator()
}

pub fn operator_to_json(op: &HermitianOperator) -> String {
    serde_json::to_string(&MatrixJson::from_operator(op)).expect("finite matrices serialize")
}

pub fn state_from_json(text: &str) -> Result<BipartiteState> {
    parse::<StateJson>(text, "state")?.to_state()
}

pub fn state_to_json(state: &BipartiteState) -> String {
    serde_json::to_string(&StateJson::from_state(state)).expect("finite matrices serialize")
}

/// Formats with `digits` significant digits, trimming trailing zeros. Non-finite values print as
/// `inf`, `-inf` and `nan`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // round first so the exponent accounts for carries such as 9.99… → 10
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn format_csv(x: f64) -> String {
    format_significant(x, CSV_DIGITS)
}

/// Serde adapter for reals that may be infinite: finite values are JSON numbers, the others are
/// the strings `"inf"`, `"-inf"` and `"nan"`.
pub mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&super::format_significant(*x, 1))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                "nan" | "NaN" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: '{other}'"))),
            },
        }
    }
}
