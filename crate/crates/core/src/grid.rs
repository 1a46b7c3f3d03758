//! Dense row-major 2D arrays of `f64`.
//!
//! Pixel `(i, j)` is row `i`, column `j`; storage index is `i * width + j`.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Grid {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::arg(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::arg(format!(
                "{}x{} grid needs {} values, got {}",
                height,
                width,
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("grid values must be finite"));
        }
        Ok(Grid {
            height,
            width,
            values,
        })
    }

    /// Builds a grid from nested rows; panics on ragged input. Intended for literals.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let values: Vec<f64> = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.as_ref().len(), width, "ragged rows");
                r.as_ref().iter().copied()
            })
            .collect();
        Grid::from_vec(height, width, values).expect("invalid grid literal")
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut g = Grid::zeros(height, width);
        for i in 0..height {
            for j in 0..width {
                g.values[i * width + j] = f(i, j);
            }
        }
        g
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Value at `(i, j)` with periodic wrap in both axes.
    #[inline]
    pub fn get_wrapped(&self, i: isize, j: isize) -> f64 {
        let r = i.rem_euclid(self.height as isize) as usize;
        let c = j.rem_euclid(self.width as isize) as usize;
        self.values[r * self.width + c]
    }

    pub fn ensure_same_dims(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Shape {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two grids of equal shape.
    pub fn zip_map(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.ensure_same_dims(other)?;
        Ok(Grid {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn inner(&self, other: &Grid) -> Result<f64> {
        self.ensure_same_dims(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `alpha * a + b`.
    pub fn axpy(alpha: f64, a: &Grid, b: &Grid) -> Result<Grid> {
        a.zip_map(b, |x, y| alpha * x + y)
    }

    pub fn add(&self, other: &Grid) -> Result<Grid> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Grid) -> Result<Grid> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Grid {
        self.map(|v| s * v)
    }

    /// In-place `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Grid) -> Result<()> {
        self.ensure_same_dims(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Grid {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.height && j < self.width);
        &self.values[i * self.width + j]
    }
}

impl IndexMut<(usize, usize)> for Grid {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.height && j < self.width);
        &mut self.values[i * self.width + j]
    }
}

/// Ordered, nonempty list of equally sized grids.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStack {
    channels: Vec<Grid>,
}

impl GridStack {
    pub fn new(channels: Vec<Grid>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::arg("grid stack must have at least one channel"))?;
        for g in &channels[1..] {
            first.ensure_same_dims(g)?;
        }
        Ok(GridStack { channels })
    }

    pub fn zeros(count: usize, height: usize, width: usize) -> Self {
        assert!(count > 0, "grid stack must have at least one channel");
        GridStack {
            channels: vec![Grid::zeros(height, width); count],
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn channels(&self) -> &[Grid] {
        &self.channels
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Grid> {
        self.channels.iter()
    }

    pub fn into_channels(self) -> Vec<Grid> {
        self.channels
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(Grid::is_finite)
    }
}

impl Index<usize> for GridStack {
    type Output = Grid;

    fn index(&self, m: usize) -> &Grid {
        &self.channels[m]
    }
}

impl<'a> IntoIterator for &'a GridStack {
    type Item = &'a Grid;
    type IntoIter = std::slice::Iter<'a, Grid>;

    fn into_iter(self) -> Self::IntoIter {
        self.channels.iter()
    }
}
