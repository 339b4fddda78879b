use std::ops::Index;

use super::{Graph, Real, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named, ordered collection of learnable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

/// Graph leaves for every parameter of a store, indexed by [`ParamId`].
#[derive(Clone, Debug)]
pub struct ParamVars(Vec<Var>);

impl Index<ParamId> for ParamVars {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl From<Vec<Var>> for ParamVars {
    /// Binds existing leaves, in store order.
    fn from(vars: Vec<Var>) -> Self {
        ParamVars(vars)
    }
}

impl ParamVars {
    pub fn as_slice(&self) -> &[Var] {
        &self.0
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { names: Vec::new(), tensors: Vec::new() }
    }

    /// Registers a parameter; names must be unique.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<ParamId> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter name {name:?}")));
        }
        self.names.push(name);
        self.tensors.push(value);
        Ok(ParamId(self.tensors.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.tensors.iter_mut()
    }

    /// Total scalar count over all parameters.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Copies every parameter into `graph` as a leaf.
    pub fn attach(&self, graph: &mut Graph<T>, requires_grad: bool) -> ParamVars {
        ParamVars(self.tensors.iter().map(|t| graph.leaf(t.clone(), requires_grad)).collect())
    }

    /// Gradients for each parameter after `graph.backward`, zero where absent.
    pub fn gradients(&self, graph: &Graph<T>, vars: &ParamVars) -> Vec<Vec<T>> {
        self.tensors
            .iter()
            .zip(&vars.0)
            .map(|(t, &v)| graph.grad(v).map_or_else(|| vec![T::zero(); t.numel()], <[T]>::to_vec))
            .collect()
    }

    /// Replaces values by name, requiring identical names and shapes.
    pub fn load_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                self.len(),
                other.len()
            )));
        }
        for (name, value) in other.iter() {
            let id = self
                .find(name)
                .ok_or_else(|| Error::Checkpoint(format!("unexpected parameter {name:?}")))?;
            if self.get(id).shape() != value.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name:?} has shape {:?}, model expects {:?}",
                    value.shape(),
                    self.get(id).shape()
                )));
            }
            *self.get_mut(id) = value.clone();
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore { names: self.names.clone(), tensors: self.tensors.iter().map(Tensor::cast).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_counts_sum() {
        let mut s = ParamStore::<f64>::new();
        s.add("a", Tensor::zeros([2, 3])).unwrap();
        s.add("b", Tensor::zeros([4])).unwrap();
        assert!(s.add("a", Tensor::zeros([1])).is_err());
        assert_eq!(s.count(), 10);
        assert_eq!(s.find("b").map(ParamId::index), Some(1));
    }

    #[test]
    fn load_from_checks_shapes() {
        let mut s = ParamStore::<f64>::new();
        s.add("w", Tensor::zeros([2])).unwrap();
        let mut other = ParamStore::<f64>::new();
        other.add("w", Tensor::full([3], 1.0)).unwrap();
        assert!(s.load_from(&other).is_err());
        let mut ok = ParamStore::<f64>::new();
        ok.add("w", Tensor::full([2], 1.0)).unwrap();
        s.load_from(&ok).unwrap();
        assert_eq!(s.get(s.find("w").unwrap()).data(), &[1.0, 1.0]);
    }
}
