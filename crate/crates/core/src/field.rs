//! Grid fields, point sets, and the feature view the similarity code works on.

use crate::error::{check_len, NcasError, Result};

/// Upper end of the intensity scale images are kept on.
pub const INTENSITY_MAX: f64 = 255.0;

/// A real-valued function on a `width x height` grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(NcasError::param("field dimensions must be positive"));
        }
        check_len(width * height, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(NcasError::InvariantViolation(format!(
                "field value at index {i} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Like [`ScalarField::new`] but also requires values on the 0..=255 intensity scale.
    pub fn image(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let field = Self::new(width, height, values)?;
        if let Some(i) = field
            .values
            .iter()
            .position(|v| !(0.0..=INTENSITY_MAX).contains(v))
        {
            return Err(NcasError::InvariantViolation(format!(
                "image intensity {} at index {i} outside [0, 255]",
                field.values[i]
            )));
        }
        Ok(field)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, values)
    }

    pub fn features(&self) -> Features<'_> {
        Features {
            data: &self.values,
            dim: 1,
        }
    }
}

/// `n` feature vectors of dimension `dim` with optional binary ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    truth: Option<Vec<u8>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>, truth: Option<Vec<u8>>) -> Result<Self> {
        if dim == 0 {
            return Err(NcasError::param("point dimension must be positive"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(NcasError::param(format!(
                "coordinate buffer of length {} is not a nonempty multiple of dim {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(NcasError::InvariantViolation(
                "point coordinates must be finite".into(),
            ));
        }
        let n = coords.len() / dim;
        if let Some(t) = &truth {
            check_len(n, t.len())?;
            if t.iter().any(|&l| l > 1) {
                return Err(NcasError::InvariantViolation(
                    "truth labels must be 0 or 1".into(),
                ));
            }
        }
        Ok(Self { dim, coords, truth })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn truth(&self) -> Option<&[u8]> {
        self.truth.as_deref()
    }

    pub fn features(&self) -> Features<'_> {
        Features {
            data: &self.coords,
            dim: self.dim,
        }
    }
}

/// Borrowed row-major feature matrix: one feature vector per graph node.
#[derive(Debug, Clone, Copy)]
pub struct Features<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Features<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(NcasError::param("feature buffer does not match dimension"));
        }
        Ok(Self { data, dim })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Squared Euclidean distance between the feature vectors of two nodes.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        if self.dim == 1 {
            let d = self.data[i] - self.data[j];
            return d * d;
        }
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The two kinds of input the drivers accept.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Image(&'a ScalarField),
    Points(&'a PointSet),
}

impl<'a> Input<'a> {
    pub fn len(&self) -> usize {
        match self {
            Input::Image(f) => f.len(),
            Input::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn features(&self) -> Features<'a> {
        match self {
            Input::Image(f) => f.features(),
            Input::Points(p) => p.features(),
        }
    }
}

impl<'a> From<&'a ScalarField> for Input<'a> {
    fn from(f: &'a ScalarField) -> Self {
        Input::Image(f)
    }
}

impl<'a> From<&'a PointSet> for Input<'a> {
    fn from(p: &'a PointSet) -> Self {
        Input::Points(p)
    }
}
