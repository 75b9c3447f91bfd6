//! Named-tensor weights file.
//!
//! Little-endian layout: magic `DPW1`, `u32` version (1), `u32` tensor count,
//! then per tensor `u16` name length, name bytes, `u8` rank, `u32` per dim,
//! `f32` data. Tensors keep their registration order, so files written from
//! the same graph state are byte-identical.

use super::graph::Graph;
use super::tensor::Tensor;
use crate::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"DPW1";
pub const VERSION: u32 = 1;

/// An ordered collection of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weights {
    pub tensors: Vec<(String, Tensor)>,
}

impl Weights {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.tensors.len() as u32)?;
        for (name, tensor) in &self.tensors {
            if name.len() > u16::MAX as usize {
                return Err(Error::config(format!("tensor name too long: {name}")));
            }
            w.write_u16::<LittleEndian>(name.len() as u16)?;
            w.write_all(name.as_bytes())?;
            w.write_u8(tensor.dims().len() as u8)?;
            for &d in tensor.dims() {
                w.write_u32::<LittleEndian>(d as u32)?;
            }
            for &v in &tensor.data {
                w.write_f32::<LittleEndian>(v)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Weights> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!("bad weights magic {magic:?}")));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported weights version {version}")));
        }
        let count = r.read_u32::<LittleEndian>()?;
        let mut tensors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name_len = r.read_u16::<LittleEndian>()? as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|e| Error::Format(format!("tensor name not utf-8: {e}")))?;
            let rank = r.read_u8()? as usize;
            if rank > super::tensor::MAX_RANK {
                return Err(Error::Format(format!("tensor rank {rank} too large")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.read_u32::<LittleEndian>()? as usize);
            }
            let numel: usize = dims.iter().product();
            let mut data = vec![0.0f32; numel];
            for v in data.iter_mut() {
                *v = r.read_f32::<LittleEndian>()?;
            }
            tensors.push((name, Tensor::from_vec(&dims, data)?));
        }
        Ok(Weights { tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Weights> {
        Weights::read(&mut BufReader::new(File::open(path)?))
    }
}

/// Snapshot a graph's parameters in registration order.
pub fn export_params(graph: &Graph) -> Weights {
    let tensors = graph
        .param_ids()
        .iter()
        .map(|&id| (graph.param_name(id).to_string(), graph.value(id).clone()))
        .collect();
    Weights { tensors }
}

/// Load parameters into a graph; every parameter must be present with a
/// matching shape.
pub fn import_params(graph: &mut Graph, weights: &Weights) -> Result<()> {
    for &id in graph.param_ids().to_vec().iter() {
        let name = graph.param_name(id).to_string();
        let tensor = weights
            .get(&name)
            .ok_or_else(|| Error::Format(format!("weights file missing `{name}`")))?;
        if tensor.dims() != graph.value(id).dims() {
            return Err(Error::Format(format!(
                "`{name}` shape {:?} does not match graph {:?}",
                tensor.dims(),
                graph.value(id).dims()
            )));
        }
        graph.param_data_mut(id).copy_from_slice(&tensor.data);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::graph::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_bytes_and_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = Graph::new();
        g.param("conv.w", &[3, 3, 2, 4], Init::HeUniform { fan_in: 18 }, &mut rng);
        g.param("dense.b", &[7], Init::Constant(0.25), &mut rng);
        let w = export_params(&g);

        let mut bytes = Vec::new();
        w.write(&mut bytes).unwrap();
        let w2 = Weights::read(&mut &bytes[..]).unwrap();
        assert_eq!(w, w2);

        let mut bytes2 = Vec::new();
        w2.write(&mut bytes2).unwrap();
        assert_eq!(bytes, bytes2);

        let mut g2 = Graph::new();
        let mut rng2 = ChaCha8Rng::seed_from_u64(999);
        g2.param("conv.w", &[3, 3, 2, 4], Init::Zeros, &mut rng2);
        g2.param("dense.b", &[7], Init::Zeros, &mut rng2);
        import_params(&mut g2, &w2).unwrap();
        assert_eq!(export_params(&g2), w);
    }

    #[test]
    fn missing_or_misshapen_tensors_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = Graph::new();
        g.param("a", &[4], Init::Zeros, &mut rng);
        let w = export_params(&g);

        let mut other = Graph::new();
        other.param("b", &[4], Init::Zeros, &mut rng);
        assert!(import_params(&mut other, &w).is_err());

        let mut wrong_shape = Graph::new();
        wrong_shape.param("a", &[5], Init::Zeros, &mut rng);
        assert!(import_params(&mut wrong_shape, &w).is_err());
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let err = Weights::read(&mut &b"NOPE\x01\x00\x00\x00"[..]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
