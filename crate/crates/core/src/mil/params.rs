use crate::nn::{AffineParams, DenseMatrix};

/// A named, shaped view of one parameter tensor.
#[derive(Clone, Debug)]
pub struct TensorView<'a> {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

/// Uniform access to every learnable tensor of a model, in a fixed order.
///
/// The order drives optimizer state layout and the blob order of saved models,
/// so `tensors` and `tensors_mut` must enumerate identically.
pub trait ParamTensors {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>);
    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>);

    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn views(&self) -> Vec<TensorView<'_>> {
        let mut out = Vec::new();
        self.tensors("", &mut out);
        out
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        self.tensors_mut(&mut out);
        out
    }

    fn parameter_count(&self) -> usize {
        self.views().iter().map(|v| v.data.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.views().iter().flat_map(|v| v.data.iter().copied()).collect()
    }

    /// Overwrites every parameter from a flat vector in `flatten` order.
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for t in self.slices_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, flat.len(), "flat parameter length");
    }

    fn is_finite(&self) -> bool {
        self.views().iter().all(|v| v.data.iter().all(|x| x.is_finite()))
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

impl ParamTensors for AffineParams {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        out.push(TensorView {
            name: join(prefix, "weight"),
            rows: self.weight.rows(),
            cols: self.weight.cols(),
            data: self.weight.data(),
        });
        out.push(TensorView {
            name: join(prefix, "bias"),
            rows: 1,
            cols: self.bias.len(),
            data: &self.bias,
        });
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        out.push(self.weight.data_mut());
        out.push(&mut self.bias);
    }

    fn zeros_like(&self) -> Self {
        Self {
            weight: DenseMatrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: vec![0.0; self.bias.len()],
        }
    }
}

impl<T: ParamTensors> ParamTensors for Vec<T> {
    fn tensors<'a>(&'a self, prefix: &str, out: &mut Vec<TensorView<'a>>) {
        for (i, t) in self.iter().enumerate() {
            t.tensors(&join(prefix, &i.to_string()), out);
        }
    }

    fn tensors_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        for t in self.iter_mut() {
            t.tensors_mut(out);
        }
    }

    fn zeros_like(&self) -> Self {
        self.iter().map(ParamTensors::zeros_like).collect()
    }
}
