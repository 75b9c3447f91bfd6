//! Dense `f32` tensors of up to five axes, stored row-major.

use crate::{Error, Result};

pub const MAX_RANK: usize = 5;

/// Tensor shape, up to [`MAX_RANK`] axes.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    dims: [usize; MAX_RANK],
    rank: usize,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Shape {
        assert!(dims.len() <= MAX_RANK, "rank {} > {MAX_RANK}", dims.len());
        let mut d = [1; MAX_RANK];
        d[..dims.len()].copy_from_slice(dims);
        Shape {
            dims: d,
            rank: dims.len(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.rank]
    }

    pub fn numel(&self) -> usize {
        self.dims().iter().product()
    }
}

impl std::fmt::Debug for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.dims())
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims().iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Values plus shape. Gradients live in the graph, not here.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Tensor {
        let shape = Shape::new(dims);
        Tensor {
            shape,
            data: vec![0.0; shape.numel()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f32>) -> Result<Tensor> {
        let shape = Shape::new(dims);
        if shape.numel() != data.len() {
            return Err(Error::shape(format!(
                "shape {shape} wants {} values, got {}",
                shape.numel(),
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn scalar(v: f32) -> Tensor {
        Tensor {
            shape: Shape::new(&[1]),
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn fill(&mut self, v: f32) {
        self.data.fill(v);
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_accessors() {
        let s = Shape::new(&[80, 240, 3]);
        assert_eq!(s.rank(), 3);
        assert_eq!(s.dims(), &[80, 240, 3]);
        assert_eq!(s.numel(), 57_600);
        assert_eq!(format!("{s}"), "80x240x3");
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn finite_scan() {
        let mut t = Tensor::zeros(&[4]);
        assert_eq!(t.first_non_finite(), None);
        t.data[2] = f32::NAN;
        assert_eq!(t.first_non_finite(), Some(2));
    }
}
