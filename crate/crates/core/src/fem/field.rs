/// One scalar per mesh vertex.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One 2D vector per mesh vertex, stored interleaved `x0, y0, x1, y1, ...`
/// so DOF `2 * i + d` is component `d` at vertex `i`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VectorField(pub Vec<f64>);

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; 2 * n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> [f64; 2]) -> Self {
        Self((0..n).flat_map(f).collect())
    }

    pub fn from_dofs(dofs: Vec<f64>) -> Self {
        assert!(dofs.len().is_multiple_of(2), "interleaved vector field needs an even length");
        Self(dofs)
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.0.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> [f64; 2] {
        [self.0[2 * i], self.0[2 * i + 1]]
    }

    pub fn dofs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_dofs(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
