//! Flat parameter packing.
//!
//! Optimizers and the finite-difference oracle work on flat `Vec<f64>`
//! views of whatever parameter structure a model holds. Gradients reuse
//! the parameter types themselves (a zeroed clone accumulates grads), so
//! one pack order serves both.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Read cursor over a flat parameter slice.
pub struct ParamCursor<'a> {
    data: &'a [f64],
    pos: usize,
}

impl<'a> ParamCursor<'a> {
    pub fn new(data: &'a [f64]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [f64]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Dimension(format!(
                "parameter vector too short: need {} more at offset {}",
                n, self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn take_one(&mut self) -> Result<f64> {
        Ok(self.take(1)?[0])
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Dimension(format!(
                "parameter vector too long: {} of {} consumed",
                self.pos,
                self.data.len()
            )));
        }
        Ok(())
    }
}

/// Anything whose parameters can be flattened into `f64`s and restored
/// in the same order.
pub trait ParamPack {
    fn num_params(&self) -> usize;
    fn pack_into(&self, out: &mut Vec<f64>);
    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()>;

    fn pack(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.pack_into(&mut out);
        out
    }

    fn unpack(&mut self, flat: &[f64]) -> Result<()> {
        let mut cur = ParamCursor::new(flat);
        self.unpack_from(&mut cur)?;
        cur.finish()
    }
}

impl ParamPack for Tensor {
    fn num_params(&self) -> usize {
        self.len()
    }

    fn pack_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.data());
    }

    fn unpack_from(&mut self, src: &mut ParamCursor) -> Result<()> {
        let vals = src.take(self.len())?;
        self.data_mut().copy_from_slice(vals);
        Ok(())
    }
}
