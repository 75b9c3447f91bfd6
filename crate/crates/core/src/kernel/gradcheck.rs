//! Central finite-difference verification of every differentiable operator.
//!
//! Each case builds a small graph whose perturbable tensors are parameters,
//! reduces the output to a scalar, and compares analytic parameter gradients
//! against `(L(p + eps) - L(p - eps)) / 2 eps` elementwise. Test tensors are
//! drawn from a lattice with spacing well above `2 eps` so pooling and ReLU
//! selections cannot flip inside the stencil.

use super::graph::{Graph, Init, NodeId};
use crate::pose::CyclicLossMode;
use crate::Result;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPSILON: f32 = 1e-3;
pub const REL_TOLERANCE: f64 = 1e-3;
/// Elements where both gradients are below this magnitude are compared
/// absolutely; the relative criterion is meaningless against rounding noise.
const TINY: f64 = 5e-4;

#[derive(Debug, Clone)]
pub struct GradCheckResult {
    pub name: String,
    pub max_rel_err: f64,
    pub checked: usize,
    pub passed: bool,
}

impl std::fmt::Display for GradCheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:28} rel err {:.3e} over {} elements",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.max_rel_err,
            self.checked
        )
    }
}

/// Values spaced at least 0.05 apart, shuffled: smooth enough for central
/// differences, separated enough that max/relu branches never straddle.
fn lattice_values<R: Rng>(n: usize, rng: &mut R) -> Vec<f32> {
    let mut vals: Vec<f32> = (0..n)
        .map(|i| {
            let base = -1.0 + 2.0 * (i as f32 + 0.5) / n as f32;
            if base.abs() < 0.025 {
                0.05f32.copysign(base)
            } else {
                base
            }
        })
        .collect();
    vals.shuffle(rng);
    vals
}

fn fill_param<R: Rng>(g: &mut Graph, id: NodeId, rng: &mut R) {
    let n = g.value(id).numel();
    let vals = lattice_values(n, rng);
    g.param_data_mut(id).copy_from_slice(&vals);
}

struct Case {
    graph: Graph,
    loss: NodeId,
    checked: Vec<NodeId>,
}

fn check(name: &str, mut case: Case) -> Result<GradCheckResult> {
    let plan = case.graph.plan(case.loss);
    case.graph.forward(&plan)?;
    case.graph.backward(&plan)?;
    let analytic: Vec<Vec<f32>> = case
        .checked
        .iter()
        .map(|&id| case.graph.grad(id).to_vec())
        .collect();

    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    for (slot, &id) in case.checked.iter().enumerate() {
        for k in 0..analytic[slot].len() {
            let orig = case.graph.value(id).data[k];
            case.graph.param_data_mut(id)[k] = orig + FD_EPSILON;
            case.graph.forward(&plan)?;
            let lp = case.graph.value(case.loss).data[0] as f64;
            case.graph.param_data_mut(id)[k] = orig - FD_EPSILON;
            case.graph.forward(&plan)?;
            let lm = case.graph.value(case.loss).data[0] as f64;
            case.graph.param_data_mut(id)[k] = orig;
            let fd = (lp - lm) / (2.0 * FD_EPSILON as f64);
            let an = analytic[slot][k] as f64;
            checked += 1;
            let rel = if an.abs() < TINY && fd.abs() < TINY {
                // Both negligible: require absolute agreement only.
                if (an - fd).abs() < 1e-4 {
                    0.0
                } else {
                    (an - fd).abs() / TINY
                }
            } else {
                (an - fd).abs() / an.abs().max(fd.abs())
            };
            max_rel = max_rel.max(rel);
        }
    }
    // Restore a consistent forward state.
    case.graph.forward(&plan)?;
    Ok(GradCheckResult {
        name: name.to_string(),
        max_rel_err: max_rel,
        checked,
        passed: max_rel < REL_TOLERANCE,
    })
}

/// Reduce any node to a scalar through a fixed dense projection so every
/// output element influences the loss with a distinct weight.
fn scalarize(g: &mut Graph, x: NodeId, rng: &mut ChaCha8Rng) -> Result<NodeId> {
    let flat = g.flatten(x);
    let n = g.value(flat).numel();
    let w = g.param("scalarize.w", &[n, 1], Init::Zeros, rng);
    let b = g.param("scalarize.b", &[1], Init::Zeros, rng);
    let vals: Vec<f32> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    g.param_data_mut(w).copy_from_slice(&vals);
    g.dense(flat, w, b)
}

fn conv2d_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[6, 6, 2], Init::Zeros, rng);
    let w = g.param("w", &[3, 3, 2, 3], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    fill_param(&mut g, w, rng);
    let c = g.conv2d(x, w)?;
    let loss = scalarize(&mut g, c, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x, w],
    })
}

fn conv3d_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[4, 5, 6, 2], Init::Zeros, rng);
    let w = g.param("w", &[3, 3, 3, 2, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    fill_param(&mut g, w, rng);
    let c = g.conv3d(x, w)?;
    let loss = scalarize(&mut g, c, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x, w],
    })
}

fn maxpool2d_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[8, 8, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let p = g.maxpool2d(x, 4)?;
    let loss = scalarize(&mut g, p, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn maxpool_axial_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[2, 3, 15, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let p1 = g.maxpool_axial(x, 4)?;
    let p2 = g.maxpool_axial(p1, 4)?;
    let loss = scalarize(&mut g, p2, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn dense_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[5], Init::Zeros, rng);
    let w = g.param("w", &[5, 4], Init::Zeros, rng);
    let b = g.param("b", &[4], Init::Zeros, rng);
    for id in [x, w, b] {
        fill_param(&mut g, id, rng);
    }
    let d = g.dense(x, w, b)?;
    let loss = scalarize(&mut g, d, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x, w, b],
    })
}

fn relu_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[4, 3, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let r = g.relu(x);
    let loss = scalarize(&mut g, r, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn sigmoid_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[9], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let s = g.sigmoid(x);
    let loss = scalarize(&mut g, s, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn upsample_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[1, 3, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let u = g.upsample(x, 5, 15)?;
    let loss = scalarize(&mut g, u, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn concat_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let a = g.param("a", &[3, 4, 2], Init::Zeros, rng);
    let b = g.param("b", &[3, 4, 3], Init::Zeros, rng);
    fill_param(&mut g, a, rng);
    fill_param(&mut g, b, rng);
    let c = g.concat(a, b)?;
    let loss = scalarize(&mut g, c, rng)?;
    Ok(Case {
        graph: g,
        loss,
        checked: vec![a, b],
    })
}

fn bce_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let x = g.param("x", &[6], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    let p = g.sigmoid(x);
    let y = g.input("y", &[6]);
    let loss = g.bce_loss(p, y)?;
    let targets: Vec<f32> = (0..6).map(|i| (i % 2) as f32).collect();
    g.set_input(y, &targets);
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn cce_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let mut g = Graph::new();
    let logits = g.param("logits", &[2, 3, 3], Init::Zeros, rng);
    fill_param(&mut g, logits, rng);
    let classes = g.input("classes", &[2, 3]);
    let mask = g.input("mask", &[2, 3]);
    let loss = g.cce_loss(logits, classes, mask)?;
    g.set_input(classes, &[0.0, 1.0, 2.0, 1.0, 0.0, 2.0]);
    g.set_input(mask, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
    Ok(Case {
        graph: g,
        loss,
        checked: vec![logits],
    })
}

fn cyclic_case(mode: CyclicLossMode, pred: f32, label: f32) -> Result<Case> {
    let mut g = Graph::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = g.param("x", &[1], Init::Constant(pred), &mut rng);
    let l = g.input("l", &[1]);
    let loss = g.cyclic_loss(x, l, mode)?;
    g.set_scalar_input(l, label);
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x],
    })
}

fn composite_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    // conv -> relu -> pool -> flatten -> dense -> sigmoid -> bce, end to end.
    let mut g = Graph::new();
    let x = g.param("x", &[8, 8, 1], Init::Zeros, rng);
    let w = g.param("w", &[3, 3, 1, 2], Init::Zeros, rng);
    fill_param(&mut g, x, rng);
    fill_param(&mut g, w, rng);
    let c = g.conv2d(x, w)?;
    let r = g.relu(c);
    let p = g.maxpool2d(r, 4)?;
    let flat = g.flatten(p);
    let dw = g.param("dw", &[8, 1], Init::Zeros, rng);
    let db = g.param("db", &[1], Init::Zeros, rng);
    fill_param(&mut g, dw, rng);
    fill_param(&mut g, db, rng);
    let d = g.dense(flat, dw, db)?;
    let s = g.sigmoid(d);
    let y = g.input("y", &[1]);
    let loss = g.bce_loss(s, y)?;
    g.set_scalar_input(y, 1.0);
    Ok(Case {
        graph: g,
        loss,
        checked: vec![x, w, dw, db],
    })
}

/// Run the whole operator suite. Deterministic per seed.
pub fn run_suite(seed: u64) -> Result<Vec<GradCheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    results.push(check("conv2d", conv2d_case(&mut rng)?)?);
    results.push(check("conv3d", conv3d_case(&mut rng)?)?);
    results.push(check("maxpool2d", maxpool2d_case(&mut rng)?)?);
    results.push(check("maxpool_axial", maxpool_axial_case(&mut rng)?)?);
    results.push(check("dense", dense_case(&mut rng)?)?);
    results.push(check("relu", relu_case(&mut rng)?)?);
    results.push(check("sigmoid", sigmoid_case(&mut rng)?)?);
    results.push(check("upsample_nearest", upsample_case(&mut rng)?)?);
    results.push(check("concat_channels", concat_case(&mut rng)?)?);
    results.push(check("binary_cross_entropy", bce_case(&mut rng)?)?);
    results.push(check("categorical_cross_entropy", cce_case(&mut rng)?)?);
    results.push(check(
        "cyclic_loss_literal",
        cyclic_case(CyclicLossMode::Literal, 140.0, 250.0)?,
    )?);
    results.push(check(
        "cyclic_loss_symmetric",
        cyclic_case(CyclicLossMode::Symmetric, 30.0, 300.0)?,
    )?);
    results.push(check("composite_stack", composite_case(&mut rng)?)?);
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_operator_passes_the_gradient_check() {
        for r in run_suite(17).unwrap() {
            assert!(r.passed, "{r}");
        }
    }
}
