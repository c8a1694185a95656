//! Python bindings: expression parsing and jet evaluation, closed-form
//! soliton construction, and the built-in verification scenarios.
//!
//! The module mirrors the CLI surface at function granularity so a Python
//! session can cross-check any value the Rust side produces.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use smm_core::fields::{parse_field, Point2};
use smm_core::scenario::{run_builtin as run_builtin_rs, BUILTIN_NAMES};
use smm_core::solitons::{akns_soliton, nlbq_soliton, Family, Mode, SolitonSpec};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parse an expression over x and y (or t) and return its canonical text
/// form. Raises ValueError with the byte offset on syntax errors.
#[pyfunction]
fn parse_check(expr: &str) -> PyResult<String> {
    Ok(parse_field(expr).map_err(value_err)?.to_text())
}

/// Evaluate an expression at (a, b).
#[pyfunction]
fn eval_expr(expr: &str, a: f64, b: f64) -> PyResult<f64> {
    let f = parse_field(expr).map_err(value_err)?;
    f.value_at(Point2::new(a, b)).map_err(value_err)
}

/// Evaluate the mixed partial d^(i+k) f / da^i db^k at (a, b).
#[pyfunction]
fn eval_partial(expr: &str, a: f64, b: f64, i: usize, k: usize) -> PyResult<f64> {
    let f = parse_field(expr).map_err(value_err)?;
    // Coordinate nodes need order >= 1 in their own axis.
    let jet = f.evaluate(Point2::new(a, b), i.max(1), k.max(1)).map_err(value_err)?;
    jet.partial(i, k).map_err(value_err)
}

/// Full jet of an expression at (a, b): coefficients[i][k] is the Taylor
/// coefficient of (da)^i (db)^k through the requested orders.
#[pyfunction]
fn jet_coefficients(
    expr: &str,
    a: f64,
    b: f64,
    order_a: usize,
    order_b: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let f = parse_field(expr).map_err(value_err)?;
    // Coordinate nodes need order >= 1 in their own axis; extra orders are
    // computed and simply not returned.
    let jet = f
        .evaluate(Point2::new(a, b), order_a.max(1), order_b.max(1))
        .map_err(value_err)?;
    let mut rows = Vec::with_capacity(order_a + 1);
    for i in 0..=order_a {
        let mut row = Vec::with_capacity(order_b + 1);
        for k in 0..=order_b {
            row.push(jet.coeff(i, k));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn modes_from_pairs(pairs: Vec<(f64, f64)>) -> Vec<Mode> {
    pairs.into_iter().map(|(k, x0)| Mode { k_or_a: k, x0 }).collect()
}

/// Closed-form multi-soliton potential M(x, y) for the scalar family, as
/// canonical expression text. `modes` is a list of (k, x0) pairs.
#[pyfunction]
fn akns_soliton_expr(a0: f64, modes: Vec<(f64, f64)>) -> PyResult<String> {
    let spec = SolitonSpec { family: Family::Akns, a0, modes: modes_from_pairs(modes) };
    Ok(akns_soliton(&spec).map_err(value_err)?.to_text())
}

/// Closed-form multi-soliton pair (M, N)(x, t) for the two-component
/// family, as canonical expression texts. `modes` is a list of (a, x0).
#[pyfunction]
fn nlbq_soliton_expr(a0: f64, modes: Vec<(f64, f64)>) -> PyResult<(String, String)> {
    let spec = SolitonSpec { family: Family::Nlbq, a0, modes: modes_from_pairs(modes) };
    let (m, n) = nlbq_soliton(&spec).map_err(value_err)?;
    Ok((m.to_text_with('t'), n.to_text_with('t')))
}

/// Names of every built-in verification scenario.
#[pyfunction]
fn builtin_scenarios() -> Vec<String> {
    BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Run a built-in verification scenario; returns (passed, report_text).
#[pyfunction]
fn run_builtin(name: &str) -> PyResult<(bool, String)> {
    let rep = run_builtin_rs(name).map_err(value_err)?;
    Ok((rep.pass, rep.render()))
}

#[pymodule]
fn smm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse_check, m)?)?;
    m.add_function(wrap_pyfunction!(eval_expr, m)?)?;
    m.add_function(wrap_pyfunction!(eval_partial, m)?)?;
    m.add_function(wrap_pyfunction!(jet_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(akns_soliton_expr, m)?)?;
    m.add_function(wrap_pyfunction!(nlbq_soliton_expr, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_builtin, m)?)?;
    Ok(())
}
