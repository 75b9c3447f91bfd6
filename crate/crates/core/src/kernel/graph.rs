//! Static computation graph with reverse-mode gradients.
//!
//! Nodes are appended in topological order by the builder methods; shapes are
//! inferred and checked at construction. Value buffers are preallocated, so
//! repeated forward/backward passes do not allocate.

use super::loss;
use super::ops;
use super::tensor::{Shape, Tensor};
use crate::pose::CyclicLossMode;
use crate::{Error, Result};
use rand::Rng;

pub type NodeId = usize;

/// Parameter initialization schemes.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    /// Uniform over ±sqrt(6 / fan_in).
    HeUniform { fan_in: usize },
    Zeros,
    Constant(f32),
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param,
    Conv2d { kh: usize, kw: usize },
    Conv3d { k: usize },
    MaxPool2d { size: usize },
    MaxPoolAxial { size: usize },
    Dense,
    Relu,
    Sigmoid,
    Upsample { rows: usize, cols: usize },
    Concat,
    /// Shape-only change; data copied through.
    Reshape,
    BceLoss,
    CceLoss,
    CyclicLoss { mode: CyclicLossMode },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    name: Option<String>,
}

/// The graph. Cloning yields an independent instance (own values/grads)
/// sharing nothing, which the batch trainer uses for its workers.
#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    values: Vec<Tensor>,
    grads: Vec<Vec<f32>>,
    /// Pool argmax scratch, filled during forward.
    aux: Vec<Vec<u32>>,
    params: Vec<NodeId>,
    inputs: Vec<NodeId>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph {
            nodes: Vec::new(),
            values: Vec::new(),
            grads: Vec::new(),
            aux: Vec::new(),
            params: Vec::new(),
            inputs: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, dims: &[usize], name: Option<String>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { op, inputs, name });
        self.values.push(Tensor::zeros(dims));
        self.grads.push(Vec::new());
        self.aux.push(Vec::new());
        id
    }

    pub fn dims(&self, id: NodeId) -> &[usize] {
        self.values[id].dims()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.values[id]
    }

    pub fn grad(&self, id: NodeId) -> &[f32] {
        &self.grads[id]
    }

    pub fn param_ids(&self) -> &[NodeId] {
        &self.params
    }

    pub fn param_name(&self, id: NodeId) -> &str {
        self.nodes[id].name.as_deref().unwrap_or("")
    }

    pub fn param_data_mut(&mut self, id: NodeId) -> &mut Vec<f32> {
        debug_assert!(matches!(self.nodes[id].op, Op::Param));
        &mut self.values[id].data
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|&p| self.values[p].numel()).sum()
    }

    // ---- builders ----

    pub fn input(&mut self, name: &str, dims: &[usize]) -> NodeId {
        let id = self.push(Op::Input, vec![], dims, Some(name.to_string()));
        self.inputs.push(id);
        id
    }

    pub fn param<R: Rng>(&mut self, name: &str, dims: &[usize], init: Init, rng: &mut R) -> NodeId {
        let id = self.push(Op::Param, vec![], dims, Some(name.to_string()));
        match init {
            Init::HeUniform { fan_in } => {
                let limit = (6.0 / fan_in as f64).sqrt();
                for v in &mut self.values[id].data {
                    *v = rng.random_range(-limit..limit) as f32;
                }
            }
            Init::Zeros => {}
            Init::Constant(c) => self.values[id].fill(c),
        }
        self.params.push(id);
        id
    }

    /// `x`: HxWxC, `filters`: kh x kw x C x F, zero same-padding, stride 1.
    pub fn conv2d(&mut self, x: NodeId, filters: NodeId) -> Result<NodeId> {
        let (xd, wd) = (self.dims(x).to_vec(), self.dims(filters).to_vec());
        if xd.len() != 3 || wd.len() != 4 || xd[2] != wd[2] || wd[0] % 2 == 0 || wd[1] % 2 == 0 {
            return Err(Error::shape(format!(
                "conv2d x={} filters={}",
                Shape::new(&xd),
                Shape::new(&wd)
            )));
        }
        Ok(self.push(
            Op::Conv2d { kh: wd[0], kw: wd[1] },
            vec![x, filters],
            &[xd[0], xd[1], wd[3]],
            None,
        ))
    }

    /// `x`: HxWxDxC, `filters`: k x k x k x C x F.
    pub fn conv3d(&mut self, x: NodeId, filters: NodeId) -> Result<NodeId> {
        let (xd, wd) = (self.dims(x).to_vec(), self.dims(filters).to_vec());
        if xd.len() != 4
            || wd.len() != 5
            || xd[3] != wd[3]
            || wd[0] != wd[1]
            || wd[1] != wd[2]
            || wd[0] % 2 == 0
        {
            return Err(Error::shape(format!(
                "conv3d x={} filters={}",
                Shape::new(&xd),
                Shape::new(&wd)
            )));
        }
        Ok(self.push(
            Op::Conv3d { k: wd[0] },
            vec![x, filters],
            &[xd[0], xd[1], xd[2], wd[4]],
            None,
        ))
    }

    /// Spatial max pool, window = stride = `size`, floor semantics.
    pub fn maxpool2d(&mut self, x: NodeId, size: usize) -> Result<NodeId> {
        let xd = self.dims(x).to_vec();
        if xd.len() != 3 || xd[0] < size || xd[1] < size {
            return Err(Error::shape(format!(
                "maxpool2d({size}) on {}",
                Shape::new(&xd)
            )));
        }
        let dims = [xd[0] / size, xd[1] / size, xd[2]];
        let id = self.push(Op::MaxPool2d { size }, vec![x], &dims, None);
        self.aux[id] = vec![0; self.values[id].numel()];
        Ok(id)
    }

    /// Depth-axis max pool with ceil-by-zero-pad semantics on HxWxDxC.
    pub fn maxpool_axial(&mut self, x: NodeId, size: usize) -> Result<NodeId> {
        let xd = self.dims(x).to_vec();
        if xd.len() != 4 {
            return Err(Error::shape(format!(
                "maxpool_axial({size}) on {}",
                Shape::new(&xd)
            )));
        }
        let dims = [xd[0], xd[1], xd[2].div_ceil(size), xd[3]];
        let id = self.push(Op::MaxPoolAxial { size }, vec![x], &dims, None);
        self.aux[id] = vec![0; self.values[id].numel()];
        Ok(id)
    }

    /// `x`: N, `weights`: N x M, `bias`: M.
    pub fn dense(&mut self, x: NodeId, weights: NodeId, bias: NodeId) -> Result<NodeId> {
        let (xd, wd, bd) = (
            self.dims(x).to_vec(),
            self.dims(weights).to_vec(),
            self.dims(bias).to_vec(),
        );
        if xd.len() != 1 || wd.len() != 2 || bd.len() != 1 || wd[0] != xd[0] || wd[1] != bd[0] {
            return Err(Error::shape(format!(
                "dense x={} w={} b={}",
                Shape::new(&xd),
                Shape::new(&wd),
                Shape::new(&bd)
            )));
        }
        Ok(self.push(Op::Dense, vec![x, weights, bias], &[wd[1]], None))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let dims = self.dims(x).to_vec();
        self.push(Op::Relu, vec![x], &dims, None)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let dims = self.dims(x).to_vec();
        self.push(Op::Sigmoid, vec![x], &dims, None)
    }

    /// Nearest-neighbour upsample of HxWxC to an explicit target size.
    pub fn upsample(&mut self, x: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let xd = self.dims(x).to_vec();
        if xd.len() != 3 || rows < xd[0] || cols < xd[1] {
            return Err(Error::shape(format!(
                "upsample {} -> {rows}x{cols}",
                Shape::new(&xd)
            )));
        }
        Ok(self.push(Op::Upsample { rows, cols }, vec![x], &[rows, cols, xd[2]], None))
    }

    /// Channel concatenation of two HxWxC tensors.
    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ad, bd) = (self.dims(a).to_vec(), self.dims(b).to_vec());
        if ad.len() != 3 || bd.len() != 3 || ad[0] != bd[0] || ad[1] != bd[1] {
            return Err(Error::shape(format!(
                "concat {} with {}",
                Shape::new(&ad),
                Shape::new(&bd)
            )));
        }
        Ok(self.push(
            Op::Concat,
            vec![a, b],
            &[ad[0], ad[1], ad[2] + bd[2]],
            None,
        ))
    }

    pub fn flatten(&mut self, x: NodeId) -> NodeId {
        let n = self.values[x].numel();
        self.push(Op::Reshape, vec![x], &[n], None)
    }

    /// Remove a size-1 axis (e.g. the pooled-out depth axis).
    pub fn squeeze(&mut self, x: NodeId, axis: usize) -> Result<NodeId> {
        let xd = self.dims(x).to_vec();
        if axis >= xd.len() || xd[axis] != 1 {
            return Err(Error::shape(format!(
                "squeeze axis {axis} of {}",
                Shape::new(&xd)
            )));
        }
        let dims: Vec<usize> = xd
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, &d)| d)
            .collect();
        Ok(self.push(Op::Reshape, vec![x], &dims, None))
    }

    /// Mean binary cross-entropy of predictions against same-shape targets.
    pub fn bce_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        if self.values[pred].numel() != self.values[target].numel() {
            return Err(Error::shape("bce pred/target size mismatch"));
        }
        Ok(self.push(Op::BceLoss, vec![pred, target], &[1], None))
    }

    /// Masked categorical cross-entropy; `classes` and `mask` are HxW maps.
    pub fn cce_loss(&mut self, logits: NodeId, classes: NodeId, mask: NodeId) -> Result<NodeId> {
        let ld = self.dims(logits).to_vec();
        let positions: usize = ld[..ld.len() - 1].iter().product();
        if self.values[classes].numel() != positions || self.values[mask].numel() != positions {
            return Err(Error::shape("cce class/mask size mismatch"));
        }
        Ok(self.push(Op::CceLoss, vec![logits, classes, mask], &[1], None))
    }

    /// Squared cyclic angle loss between two scalars.
    pub fn cyclic_loss(
        &mut self,
        pred: NodeId,
        label: NodeId,
        mode: CyclicLossMode,
    ) -> Result<NodeId> {
        if self.values[pred].numel() != 1 || self.values[label].numel() != 1 {
            return Err(Error::shape("cyclic loss wants scalars"));
        }
        Ok(self.push(Op::CyclicLoss { mode }, vec![pred, label], &[1], None))
    }

    // ---- execution ----

    pub fn set_input(&mut self, id: NodeId, data: &[f32]) {
        assert!(matches!(self.nodes[id].op, Op::Input), "not an input node");
        self.values[id].data.copy_from_slice(data);
    }

    pub fn set_scalar_input(&mut self, id: NodeId, v: f32) {
        self.set_input(id, &[v]);
    }

    /// Node ids needed to evaluate `target`, in execution order.
    pub fn plan(&self, target: NodeId) -> Vec<NodeId> {
        let mut needed = vec![false; self.nodes.len()];
        needed[target] = true;
        for id in (0..=target).rev() {
            if needed[id] {
                for &i in &self.nodes[id].inputs {
                    needed[i] = true;
                }
            }
        }
        (0..=target).filter(|&id| needed[id]).collect()
    }

    /// Evaluate every node the target depends on. Non-finite outputs abort.
    pub fn forward(&mut self, plan: &[NodeId]) -> Result<()> {
        for &id in plan {
            self.forward_node(id)?;
            #[cfg(debug_assertions)]
            if let Some(pos) = self.values[id].first_non_finite() {
                return Err(Error::NumericalFailure(format!(
                    "node {id} ({:?}) produced a non-finite value at {pos}",
                    self.nodes[id].op
                )));
            }
        }
        let last = *plan.last().expect("empty plan");
        if let Some(pos) = self.values[last].first_non_finite() {
            return Err(Error::NumericalFailure(format!(
                "output node {last} non-finite at {pos}"
            )));
        }
        Ok(())
    }

    fn forward_node(&mut self, id: NodeId) -> Result<()> {
        let node = self.nodes[id].clone();
        if matches!(node.op, Op::Input | Op::Param) {
            return Ok(());
        }
        // Inputs always precede the node, so split the buffer to borrow both.
        let (before, at) = self.values.split_at_mut(id);
        let out = &mut at[0];
        let aux = &mut self.aux[id];
        let val = |n: NodeId| -> &Tensor { &before[n] };
        match node.op {
            Op::Input | Op::Param => unreachable!(),
            Op::Conv2d { kh, kw } => {
                let x = val(node.inputs[0]);
                let w = val(node.inputs[1]);
                let d = x.dims();
                let f = w.dims()[3];
                ops::conv2d_forward(&x.data, (d[0], d[1], d[2]), &w.data, (kh, kw, f), &mut out.data);
            }
            Op::Conv3d { k } => {
                let x = val(node.inputs[0]);
                let w = val(node.inputs[1]);
                let d = x.dims();
                let f = w.dims()[4];
                ops::conv3d_forward(
                    &x.data,
                    (d[0], d[1], d[2], d[3]),
                    &w.data,
                    (k, f),
                    &mut out.data,
                );
            }
            Op::MaxPool2d { size } => {
                let x = val(node.inputs[0]);
                let d = x.dims();
                ops::maxpool2d_forward(&x.data, (d[0], d[1], d[2]), size, &mut out.data, aux);
            }
            Op::MaxPoolAxial { size } => {
                let x = val(node.inputs[0]);
                let d = x.dims();
                ops::maxpool_axial_forward(
                    &x.data,
                    (d[0], d[1], d[2], d[3]),
                    size,
                    &mut out.data,
                    aux,
                );
            }
            Op::Dense => {
                let x = val(node.inputs[0]);
                let w = val(node.inputs[1]);
                let b = val(node.inputs[2]);
                ops::dense_forward(&x.data, &w.data, &b.data, &mut out.data);
            }
            Op::Relu => ops::relu_forward(&val(node.inputs[0]).data, &mut out.data),
            Op::Sigmoid => ops::sigmoid_forward(&val(node.inputs[0]).data, &mut out.data),
            Op::Upsample { rows, cols } => {
                let x = val(node.inputs[0]);
                let d = x.dims();
                ops::upsample_forward(&x.data, (d[0], d[1], d[2]), (rows, cols), &mut out.data);
            }
            Op::Concat => {
                let a = val(node.inputs[0]);
                let b = val(node.inputs[1]);
                let (ca, cb) = (a.dims()[2], b.dims()[2]);
                ops::concat_forward(&a.data, &b.data, ca, cb, &mut out.data);
            }
            Op::Reshape => out.data.copy_from_slice(&val(node.inputs[0]).data),
            Op::BceLoss => {
                let p = val(node.inputs[0]);
                let y = val(node.inputs[1]);
                out.data[0] = loss::bce_forward(&p.data, &y.data);
            }
            Op::CceLoss => {
                let logits = val(node.inputs[0]);
                let channels = *logits.dims().last().unwrap();
                let classes = val(node.inputs[1]);
                let mask = val(node.inputs[2]);
                out.data[0] = loss::cce_forward(&logits.data, channels, &classes.data, &mask.data)?;
            }
            Op::CyclicLoss { mode } => {
                let p = val(node.inputs[0]).data[0];
                let l = val(node.inputs[1]).data[0];
                out.data[0] = loss::cyclic_forward(mode, p, l);
            }
        }
        Ok(())
    }

    /// Reverse pass from a scalar node, accumulating gradients for every
    /// dependency. Gradients are reset each call.
    pub fn backward(&mut self, plan: &[NodeId]) -> Result<()> {
        let target = *plan.last().expect("empty plan");
        if self.values[target].numel() != 1 {
            return Err(Error::shape("backward target must be scalar"));
        }
        for &id in plan {
            let n = self.values[id].numel();
            if self.grads[id].len() != n {
                self.grads[id] = vec![0.0; n];
            } else {
                self.grads[id].fill(0.0);
            }
        }
        self.grads[target][0] = 1.0;
        for &id in plan.iter().rev() {
            self.backward_node(id);
        }
        Ok(())
    }

    fn backward_node(&mut self, id: NodeId) {
        let node = self.nodes[id].clone();
        if matches!(node.op, Op::Input | Op::Param) {
            return;
        }
        // The node's own grad is read; its inputs' grads are written.
        let gout = std::mem::take(&mut self.grads[id]);
        match node.op {
            Op::Input | Op::Param => unreachable!(),
            Op::Conv2d { kh, kw } => {
                let (xid, wid) = (node.inputs[0], node.inputs[1]);
                let d = self.values[xid].dims().to_vec();
                let f = self.values[wid].dims()[3];
                let x = std::mem::take(&mut self.values[xid].data);
                let w = std::mem::take(&mut self.values[wid].data);
                let mut gin = std::mem::take(&mut self.grads[xid]);
                let mut gwt = std::mem::take(&mut self.grads[wid]);
                ops::conv2d_backward(
                    &x,
                    (d[0], d[1], d[2]),
                    &w,
                    (kh, kw, f),
                    &gout,
                    &mut gin,
                    &mut gwt,
                );
                self.values[xid].data = x;
                self.values[wid].data = w;
                self.grads[xid] = gin;
                self.grads[wid] = gwt;
            }
            Op::Conv3d { k } => {
                let (xid, wid) = (node.inputs[0], node.inputs[1]);
                let d = self.values[xid].dims().to_vec();
                let f = self.values[wid].dims()[4];
                let x = std::mem::take(&mut self.values[xid].data);
                let w = std::mem::take(&mut self.values[wid].data);
                let mut gin = std::mem::take(&mut self.grads[xid]);
                let mut gwt = std::mem::take(&mut self.grads[wid]);
                ops::conv3d_backward(
                    &x,
                    (d[0], d[1], d[2], d[3]),
                    &w,
                    (k, f),
                    &gout,
                    &mut gin,
                    &mut gwt,
                );
                self.values[xid].data = x;
                self.values[wid].data = w;
                self.grads[xid] = gin;
                self.grads[wid] = gwt;
            }
            Op::MaxPool2d { .. } => {
                let xid = node.inputs[0];
                let c = *self.values[xid].dims().last().unwrap();
                let aux = std::mem::take(&mut self.aux[id]);
                ops::maxpool2d_backward(&gout, c, &aux, &mut self.grads[xid]);
                self.aux[id] = aux;
            }
            Op::MaxPoolAxial { .. } => {
                let xid = node.inputs[0];
                let c = *self.values[xid].dims().last().unwrap();
                let aux = std::mem::take(&mut self.aux[id]);
                ops::maxpool_axial_backward(&gout, c, &aux, &mut self.grads[xid]);
                self.aux[id] = aux;
            }
            Op::Dense => {
                let (xid, wid, bid) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let x = std::mem::take(&mut self.values[xid].data);
                let w = std::mem::take(&mut self.values[wid].data);
                let mut gin = std::mem::take(&mut self.grads[xid]);
                let mut gwt = std::mem::take(&mut self.grads[wid]);
                let mut gb = std::mem::take(&mut self.grads[bid]);
                ops::dense_backward(&x, &w, &gout, &mut gin, &mut gwt, &mut gb);
                self.values[xid].data = x;
                self.values[wid].data = w;
                self.grads[xid] = gin;
                self.grads[wid] = gwt;
                self.grads[bid] = gb;
            }
            Op::Relu => {
                let xid = node.inputs[0];
                let out = std::mem::take(&mut self.values[id].data);
                ops::relu_backward(&out, &gout, &mut self.grads[xid]);
                self.values[id].data = out;
            }
            Op::Sigmoid => {
                let xid = node.inputs[0];
                let out = std::mem::take(&mut self.values[id].data);
                ops::sigmoid_backward(&out, &gout, &mut self.grads[xid]);
                self.values[id].data = out;
            }
            Op::Upsample { rows, cols } => {
                let xid = node.inputs[0];
                let d = self.values[xid].dims().to_vec();
                ops::upsample_backward(&gout, (d[0], d[1], d[2]), (rows, cols), &mut self.grads[xid]);
            }
            Op::Concat => {
                let (aid, bid) = (node.inputs[0], node.inputs[1]);
                let ca = self.values[aid].dims()[2];
                let cb = self.values[bid].dims()[2];
                let mut ga = std::mem::take(&mut self.grads[aid]);
                let mut gb = std::mem::take(&mut self.grads[bid]);
                ops::concat_backward(&gout, ca, cb, &mut ga, &mut gb);
                self.grads[aid] = ga;
                self.grads[bid] = gb;
            }
            Op::Reshape => {
                let xid = node.inputs[0];
                for (g, &go) in self.grads[xid].iter_mut().zip(&gout) {
                    *g += go;
                }
            }
            Op::BceLoss => {
                let (pid, yid) = (node.inputs[0], node.inputs[1]);
                let p = std::mem::take(&mut self.values[pid].data);
                let y = std::mem::take(&mut self.values[yid].data);
                loss::bce_backward(&p, &y, gout[0], &mut self.grads[pid]);
                self.values[pid].data = p;
                self.values[yid].data = y;
            }
            Op::CceLoss => {
                let (lid, cid, mid) = (node.inputs[0], node.inputs[1], node.inputs[2]);
                let channels = *self.values[lid].dims().last().unwrap();
                let logits = std::mem::take(&mut self.values[lid].data);
                let classes = std::mem::take(&mut self.values[cid].data);
                let mask = std::mem::take(&mut self.values[mid].data);
                loss::cce_backward(
                    &logits,
                    channels,
                    &classes,
                    &mask,
                    gout[0],
                    &mut self.grads[lid],
                );
                self.values[lid].data = logits;
                self.values[cid].data = classes;
                self.values[mid].data = mask;
            }
            Op::CyclicLoss { mode } => {
                let (pid, lid) = (node.inputs[0], node.inputs[1]);
                let p = self.values[pid].data[0];
                let l = self.values[lid].data[0];
                self.grads[pid][0] += gout[0] * loss::cyclic_backward(mode, p, l);
            }
        }
        self.grads[id] = gout;
    }
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_identity_forward() {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = g.input("x", &[3]);
        let w = g.param("w", &[3, 3], Init::Zeros, &mut rng);
        let b = g.param("b", &[3], Init::Zeros, &mut rng);
        let out = g.dense(x, w, b).unwrap();
        for i in 0..3 {
            g.param_data_mut(w)[i * 3 + i] = 1.0;
        }
        g.set_input(x, &[1.0, -2.0, 0.5]);
        let plan = g.plan(out);
        g.forward(&plan).unwrap();
        assert_eq!(g.value(out).data, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn shape_errors_surface_at_construction() {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = g.input("x", &[4, 4, 2]);
        let w = g.param("w", &[3, 3, 3, 8], Init::Zeros, &mut rng); // C mismatch
        assert!(g.conv2d(x, w).is_err());
        let small = g.input("s", &[2, 2, 1]);
        assert!(g.maxpool2d(small, 4).is_err());
    }

    #[test]
    fn non_finite_forward_is_reported() {
        let mut g = Graph::new();
        let x = g.input("x", &[2]);
        let s = g.sigmoid(x);
        g.set_input(x, &[f32::NAN, 0.0]);
        let plan = g.plan(s);
        let err = g.forward(&plan).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure(_)));
    }

    #[test]
    fn backward_through_a_small_stack() {
        // loss = bce(sigmoid(w . x + b), y); check the classic logistic grad
        // dL/dz = p - y at the dense output.
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = g.input("x", &[2]);
        let w = g.param("w", &[2, 1], Init::Zeros, &mut rng);
        let b = g.param("b", &[1], Init::Zeros, &mut rng);
        let y = g.input("y", &[1]);
        let z = g.dense(x, w, b).unwrap();
        let p = g.sigmoid(z);
        let l = g.bce_loss(p, y).unwrap();
        g.param_data_mut(w).copy_from_slice(&[0.3, -0.7]);
        g.param_data_mut(b)[0] = 0.1;
        g.set_input(x, &[1.0, 2.0]);
        g.set_input(y, &[1.0]);
        let plan = g.plan(l);
        g.forward(&plan).unwrap();
        g.backward(&plan).unwrap();
        let pval = g.value(p).data[0];
        let expected = pval - 1.0;
        // dL/db equals dL/dz here.
        assert!((g.grad(b)[0] - expected).abs() < 1e-5);
        // dL/dw_i = x_i * (p - y).
        assert!((g.grad(w)[0] - expected).abs() < 1e-5);
        assert!((g.grad(w)[1] - 2.0 * expected).abs() < 1e-5);
    }
}
