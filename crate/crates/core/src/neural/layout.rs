use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use serde::{Deserialize, Serialize};

/// One named tensor inside a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub offset: usize,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Ordered manifest of the tensors packed into a flat vector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamLayout {
    entries: Vec<ParamEntry>,
    total: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a tensor; returns its index.
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> usize {
        let entry = ParamEntry {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.total,
        };
        self.total += entry.len();
        self.entries.push(entry);
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, idx: usize) -> &ParamEntry {
        &self.entries[idx]
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn view2<'a>(&self, flat: &'a [f64], idx: usize) -> ArrayView2<'a, f64> {
        let e = &self.entries[idx];
        ArrayView2::from_shape((e.shape[0], e.shape[1]), &flat[e.range()]).expect("layout shape")
    }

    pub fn view2_mut<'a>(&self, flat: &'a mut [f64], idx: usize) -> ArrayViewMut2<'a, f64> {
        let e = &self.entries[idx];
        ArrayViewMut2::from_shape((e.shape[0], e.shape[1]), &mut flat[e.range()]).expect("layout shape")
    }

    pub fn view1<'a>(&self, flat: &'a [f64], idx: usize) -> ArrayView1<'a, f64> {
        let e = &self.entries[idx];
        ArrayView1::from(&flat[e.range()])
    }

    pub fn view1_mut<'a>(&self, flat: &'a mut [f64], idx: usize) -> ArrayViewMut1<'a, f64> {
        let e = &self.entries[idx];
        ArrayViewMut1::from(&mut flat[e.range()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_contiguous() {
        let mut l = ParamLayout::new();
        let a = l.push("a", &[2, 3]);
        let b = l.push("b", &[4]);
        assert_eq!(l.entry(a).range(), 0..6);
        assert_eq!(l.entry(b).range(), 6..10);
        assert_eq!(l.total(), 10);
        let flat: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(l.view2(&flat, a)[[1, 2]], 5.0);
        assert_eq!(l.view1(&flat, b)[0], 6.0);
    }
}
