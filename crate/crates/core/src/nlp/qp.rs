//! JSON loader for sparse quadratic programs.
//!
//! Schema (all fields required, arrays may be empty):
//!
//! ```json
//! {
//!   "n": 2, "me": 1, "mi": 0,
//!   "Q": [[0, 0, 1.0], [1, 1, 1.0]],
//!   "c": [0.0, 0.0],
//!   "A_eq": [[0, 0, 1.0], [0, 1, 1.0]],
//!   "b_eq": [-1.0],
//!   "A_in": [], "b_in": [],
//!   "bounded": []
//! }
//! ```
//!
//! The problem is `min 0.5 x'Qx + c'x` subject to `A_eq x + b_eq = 0`,
//! `A_in x + b_in <= 0` and `x_i >= 0` for the listed `bounded` indices.
//! `Q` lists entries of the full matrix (duplicates summed); the Hessian
//! used is its symmetric part.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::nlp::{CooPattern, NlpError, NlpProblem};
use crate::scalar::Scalar;

fn parse_err(pointer: &str, msg: impl Into<String>) -> NlpError {
    NlpError::Parse {
        pointer: pointer.to_string(),
        msg: msg.into(),
    }
}

fn get_field<'a>(root: &'a Value, name: &str) -> Result<&'a Value, NlpError> {
    root.get(name)
        .ok_or_else(|| parse_err(&format!("/{name}"), "missing field"))
}

fn as_usize(v: &Value, pointer: &str) -> Result<usize, NlpError> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| parse_err(pointer, "expected a non-negative integer"))
}

fn as_f64(v: &Value, pointer: &str) -> Result<f64, NlpError> {
    v.as_f64()
        .ok_or_else(|| parse_err(pointer, "expected a number"))
}

fn as_array<'a>(v: &'a Value, pointer: &str) -> Result<&'a Vec<Value>, NlpError> {
    v.as_array()
        .ok_or_else(|| parse_err(pointer, "expected an array"))
}

fn parse_vector(root: &Value, name: &str, len: usize) -> Result<Vec<f64>, NlpError> {
    let pointer = format!("/{name}");
    let arr = as_array(get_field(root, name)?, &pointer)?;
    if arr.len() != len {
        return Err(NlpError::Structure(format!(
            "{pointer}: expected length {len}, got {}",
            arr.len()
        )));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| as_f64(v, &format!("{pointer}/{i}")))
        .collect()
}

fn parse_triplets(
    root: &Value,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<(usize, usize, f64)>, NlpError> {
    let pointer = format!("/{name}");
    let arr = as_array(get_field(root, name)?, &pointer)?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, entry) in arr.iter().enumerate() {
        let ep = format!("{pointer}/{i}");
        let triple = as_array(entry, &ep)?;
        if triple.len() != 3 {
            return Err(parse_err(&ep, "expected [row, col, value]"));
        }
        let r = as_usize(&triple[0], &format!("{ep}/0"))?;
        let c = as_usize(&triple[1], &format!("{ep}/1"))?;
        let v = as_f64(&triple[2], &format!("{ep}/2"))?;
        if r >= rows || c >= cols {
            return Err(NlpError::Structure(format!(
                "{ep}: entry ({r}, {c}) outside {rows} x {cols}"
            )));
        }
        out.push((r, c, v));
    }
    Ok(out)
}

/// Loads a QP in the schema above, synthesizing all derivative callbacks.
pub fn load_qp_json<T: Scalar, P: AsRef<Path>>(path: P) -> Result<NlpProblem<T>, NlpError> {
    let text = std::fs::read_to_string(&path)?;
    let root: Value =
        serde_json::from_str(&text).map_err(|e| parse_err("", format!("invalid JSON: {e}")))?;
    let name = path
        .as_ref()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "qp".to_string());
    qp_from_value(&root, name)
}

pub(crate) fn qp_from_value<T: Scalar>(
    root: &Value,
    name: String,
) -> Result<NlpProblem<T>, NlpError> {
    let n = as_usize(get_field(root, "n")?, "/n")?;
    let m_e = as_usize(get_field(root, "me")?, "/me")?;
    let m_i = as_usize(get_field(root, "mi")?, "/mi")?;

    let q = parse_triplets(root, "Q", n, n)?;
    let c = parse_vector(root, "c", n)?;
    let a_eq = parse_triplets(root, "A_eq", m_e, n)?;
    let b_eq = parse_vector(root, "b_eq", m_e)?;
    let a_in = parse_triplets(root, "A_in", m_i, n)?;
    let b_in = parse_vector(root, "b_in", m_i)?;

    let bounded_ptr = "/bounded";
    let bounded_raw = as_array(get_field(root, "bounded")?, bounded_ptr)?;
    let mut bounded = vec![false; n];
    for (i, v) in bounded_raw.iter().enumerate() {
        let idx = as_usize(v, &format!("{bounded_ptr}/{i}"))?;
        if idx >= n {
            return Err(NlpError::Structure(format!(
                "{bounded_ptr}/{i}: index {idx} out of range for n = {n}"
            )));
        }
        bounded[idx] = true;
    }

    // Symmetric part of Q, lower triangle, duplicates merged.
    let mut w_map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(r, c, v) in &q {
        if r == c {
            *w_map.entry((r, c)).or_insert(0.0) += v;
        } else {
            let key = (r.max(c), r.min(c));
            *w_map.entry(key).or_insert(0.0) += 0.5 * v;
        }
    }
    let w_entries: Vec<(usize, usize, T)> = w_map
        .into_iter()
        .map(|((r, c), v)| (r, c, T::cst(v)))
        .collect();
    let hess_pattern = CooPattern::new(
        w_entries.iter().map(|e| e.0).collect(),
        w_entries.iter().map(|e| e.1).collect(),
    );
    let w_values: Vec<T> = w_entries.iter().map(|e| e.2).collect();

    let ct: Vec<T> = c.iter().map(|&v| T::cst(v)).collect();
    let w_for_obj = w_entries.clone();
    let c_obj = ct.clone();
    let objective = move |x: &[T]| {
        let mut acc = T::zero();
        for &(r, c, v) in &w_for_obj {
            let term = v * x[r] * x[c];
            acc += if r == c { T::cst(0.5) * term } else { term };
        }
        for (ci, xi) in c_obj.iter().zip(x) {
            acc += *ci * *xi;
        }
        acc
    };
    let w_for_grad = w_entries.clone();
    let c_grad = ct;
    let gradient = move |x: &[T], g: &mut [T]| {
        g.copy_from_slice(&c_grad);
        for &(r, c, v) in &w_for_grad {
            g[r] += v * x[c];
            if r != c {
                g[c] += v * x[r];
            }
        }
    };

    let lin_block = |a: Vec<(usize, usize, f64)>, b: Vec<f64>| {
        let at: Vec<(usize, usize, T)> = a.into_iter().map(|(r, c, v)| (r, c, T::cst(v))).collect();
        let bt: Vec<T> = b.into_iter().map(T::cst).collect();
        let pattern = CooPattern::new(
            at.iter().map(|e| e.0).collect(),
            at.iter().map(|e| e.1).collect(),
        );
        let a_eval = at.clone();
        let eval = move |x: &[T], out: &mut [T]| {
            out.copy_from_slice(&bt);
            for &(r, c, v) in &a_eval {
                out[r] += v * x[c];
            }
        };
        let jac = move |_x: &[T], vals: &mut [T]| {
            for (slot, e) in vals.iter_mut().zip(&at) {
                *slot = e.2;
            }
        };
        (eval, pattern, jac)
    };

    let (eq_eval, eq_pattern, eq_jac) = lin_block(a_eq, b_eq);
    let (in_eval, in_pattern, in_jac) = lin_block(a_in, b_in);

    Ok(NlpProblem::builder(name, n)
        .bounded(bounded)
        .objective(objective, gradient)
        .equalities(m_e, eq_eval, eq_pattern, eq_jac)
        .inequalities(m_i, in_eval, in_pattern, in_jac)
        .hessian(hess_pattern, move |_x, _y, _z, vals| {
            vals.copy_from_slice(&w_values)
        })
        .build())
}
