//! JSON file formats.
//!
//! * Poset: `{"n": 3, "relations": [[1, 2], [2, 3]]}` with 1-based labels.
//!   The writer emits cover pairs only and marks the file `"closed": false`.
//! * Digraph: `{"n": 3, "edges": [[1, 2], [2, 3], [3, 1]]}`; loops allowed.
//! * Step kernel: `{"mass": [...], "values": [[...]], "order": [[...]]}`;
//!   `order` entries may be booleans or 0/1. Without `order`, the part order
//!   is the closure of the positive values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::poset::{Closure, Digraph, Poset};
use crate::step::{StepFunction, StepKernel};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosetFile {
    pub n: usize,
    #[serde(default)]
    pub relations: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DigraphFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Flag {
    Bool(bool),
    Int(u8),
}

impl Flag {
    fn get(&self) -> bool {
        match *self {
            Flag::Bool(b) => b,
            Flag::Int(i) => i != 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepKernelFile {
    pub mass: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    order: Option<Vec<Vec<Flag>>>,
}

pub fn poset_from_json(text: &str, closure: Closure) -> Result<Poset> {
    let f: PosetFile = serde_json::from_str(text)?;
    Poset::new(f.n, &f.relations, closure)
}

pub fn poset_to_json(p: &Poset) -> String {
    let f = PosetFile {
        n: p.len(),
        relations: p
            .cover_pairs()
            .into_iter()
            .map(|(i, j)| (i + 1, j + 1))
            .collect(),
        closed: Some(false),
    };
    serde_json::to_string(&f).expect("serializable")
}

pub fn read_poset(path: impl AsRef<Path>, closure: Closure) -> Result<Poset> {
    poset_from_json(&fs::read_to_string(path)?, closure)
}

pub fn write_poset(path: impl AsRef<Path>, p: &Poset) -> Result<()> {
    fs::write(path, poset_to_json(p) + "\n")?;
    Ok(())
}

pub fn digraph_from_json(text: &str) -> Result<Digraph> {
    let f: DigraphFile = serde_json::from_str(text)?;
    Digraph::new(f.n, &f.edges)
}

pub fn read_digraph(path: impl AsRef<Path>) -> Result<Digraph> {
    digraph_from_json(&fs::read_to_string(path)?)
}

fn parse_step(text: &str) -> Result<(StepFunction, Option<Poset>)> {
    let f: StepKernelFile = serde_json::from_str(text)?;
    let func = StepFunction::new(f.mass, f.values)?;
    let order = match f.order {
        None => None,
        Some(rows) => {
            let n = func.parts();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidStep(format!("order must be {n}x{n}")));
            }
            let pairs: Vec<(usize, usize)> = rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, f)| f.get())
                        .map(move |(j, _)| (i + 1, j + 1))
                })
                .collect();
            Some(Poset::new(n, &pairs, Closure::TakeClosure)?)
        }
    };
    Ok((func, order))
}

pub fn step_kernel_from_json(text: &str) -> Result<StepKernel> {
    match parse_step(text)? {
        (func, Some(order)) => StepKernel::new(func, order),
        (func, None) => StepKernel::with_induced_order(func),
    }
}

/// Reads a step function, ignoring any `order` field.
pub fn step_function_from_json(text: &str) -> Result<StepFunction> {
    Ok(parse_step(text)?.0)
}

pub fn step_kernel_to_json(k: &StepKernel) -> String {
    let f = k.function();
    let n = f.parts();
    let file = StepKernelFile {
        mass: f.mass().to_vec(),
        values: (0..n)
            .map(|i| (0..n).map(|j| f.value(i, j)).collect())
            .collect(),
        order: Some(
            (0..n)
                .map(|i| (0..n).map(|j| Flag::Bool(k.order().less(i, j))).collect())
                .collect(),
        ),
    };
    serde_json::to_string(&file).expect("serializable")
}

pub fn read_step_kernel(path: impl AsRef<Path>) -> Result<StepKernel> {
    step_kernel_from_json(&fs::read_to_string(path)?)
}

pub fn read_step_function(path: impl AsRef<Path>) -> Result<StepFunction> {
    step_function_from_json(&fs::read_to_string(path)?)
}
