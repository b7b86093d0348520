//! Dense row-major `f64` tensors of rank one or two, and the objects they
//! inhabit.
//!
//! A [`Shape`] is the shape of a single tensor (`[k]` or `[rows, cols]`). An
//! [`Object`] is a finite product of shapes: a list of ports. The empty
//! object is the monoidal unit, and the product of two objects is
//! concatenation, so products are strictly associative.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.len() > 2 || dims.contains(&0) {
            return Err(Error::InvalidShape(dims));
        }
        Ok(Shape(dims))
    }

    /// Matrix shape `[rows, cols]`. Panics on a zero dimension.
    pub fn matrix(rows: usize, cols: usize) -> Self {
        Shape::new([rows, cols]).expect("matrix dims must be positive")
    }

    /// Vector shape `[len]`. Panics on zero length.
    pub fn vector(len: usize) -> Self {
        Shape::new([len]).expect("vector length must be positive")
    }

    pub fn scalar() -> Self {
        Shape(vec![1])
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn size(&self) -> usize {
        self.0.iter().product()
    }

    /// `(rows, cols)` view; vectors are treated as a single column.
    pub fn as_matrix(&self) -> (usize, usize) {
        match self.0.as_slice() {
            [k] => (*k, 1),
            [r, c] => (*r, *c),
            _ => unreachable!("shape rank is 1 or 2"),
        }
    }

    pub fn transposed(&self) -> Shape {
        let (r, c) = self.as_matrix();
        Shape::matrix(c, r)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// A product of shapes. `Object::unit()` is the terminal object.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Object(Vec<Shape>);

impl Object {
    pub fn new(ports: impl Into<Vec<Shape>>) -> Self {
        Object(ports.into())
    }

    pub fn unit() -> Self {
        Object(Vec::new())
    }

    pub fn single(shape: Shape) -> Self {
        Object(vec![shape])
    }

    pub fn ports(&self) -> &[Shape] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn product(&self, other: &Object) -> Object {
        let mut ports = self.0.clone();
        ports.extend(other.0.iter().cloned());
        Object(ports)
    }

    /// Total number of scalar entries across all ports.
    pub fn size(&self) -> usize {
        self.0.iter().map(Shape::size).sum()
    }

    pub fn of_values(values: &[Tensor]) -> Object {
        Object(values.iter().map(|t| t.shape().clone()).collect())
    }
}

impl Index<usize> for Object {
    type Output = Shape;

    fn index(&self, i: usize) -> &Shape {
        &self.0[i]
    }
}

impl From<Shape> for Object {
    fn from(shape: Shape) -> Self {
        Object::single(shape)
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// A dense tensor with finite entries stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.size() {
            return Err(Error::EntryCount {
                expected: shape.size(),
                actual: data.len(),
                shape,
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Tensor { shape, data })
    }

    /// Builds a tensor without the finiteness check. Evaluation uses this and
    /// checks each node's outputs afterwards so it can report where a
    /// non-finite value appeared.
    pub(crate) fn raw(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.size(), data.len());
        Tensor { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.size();
        Tensor::raw(shape, vec![0.0; n])
    }

    pub fn filled(shape: Shape, value: f64) -> Self {
        let n = shape.size();
        Tensor::raw(shape, vec![value; n])
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Tensor::new(Shape::scalar(), vec![value])
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let shape = Shape::new([data.len()])?;
        Tensor::new(shape, data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(Shape::new([rows, cols])?, data)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Tensor::matrix(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(Shape::matrix(n, n));
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.shape.as_matrix().0
    }

    pub fn cols(&self) -> usize {
        self.shape.as_matrix().1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshaped(&self, shape: Shape) -> Result<Tensor> {
        Tensor::new(shape, self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::raw(
            self.shape.clone(),
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Entrywise combination of two tensors of identical shape.
    pub fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "zip",
                format!("{} vs {}", self.shape, other.shape),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor::raw(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|v| c * v)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn transpose(&self) -> Tensor {
        let (r, c) = self.shape.as_matrix();
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor::raw(Shape::matrix(c, r), data)
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        self.matmul_t(other, false, false)
    }

    /// `op(self) · op(other)` where `op` transposes when its flag is set.
    /// Vectors are treated as single columns.
    pub fn matmul_t(&self, other: &Tensor, ta: bool, tb: bool) -> Result<Tensor> {
        let (ar, ac) = self.shape.as_matrix();
        let (br, bc) = other.shape.as_matrix();
        let (m, k) = if ta { (ac, ar) } else { (ar, ac) };
        let (k2, n) = if tb { (bc, br) } else { (br, bc) };
        if k != k2 {
            return Err(Error::shape(
                "MatMul",
                format!(
                    "inner dims differ: {}{} · {}{}",
                    self.shape,
                    if ta { "ᵀ" } else { "" },
                    other.shape,
                    if tb { "ᵀ" } else { "" }
                ),
            ));
        }
        let a = |i: usize, l: usize| {
            if ta {
                self.data[l * ac + i]
            } else {
                self.data[i * ac + l]
            }
        };
        let b = |l: usize, j: usize| {
            if tb {
                other.data[j * bc + l]
            } else {
                other.data[l * bc + j]
            }
        };
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..k {
                    acc += a(i, l) * b(l, j);
                }
                data[i * n + j] = acc;
            }
        }
        Ok(Tensor::raw(Shape::matrix(m, n), data))
    }

    /// Largest entrywise `|a - b| / max(1, |b|)`, with `b = other`.
    /// Infinite when the shapes differ.
    pub fn residual(&self, other: &Tensor) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let d = (a - b).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d / b.abs().max(1.0)
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Comma-separated rows, newline-terminated. Entries use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let (r, c) = self.shape.as_matrix();
        let (r, c) = if self.shape.rank() == 1 {
            (1, r)
        } else {
            (r, c)
        };
        let mut out = String::new();
        for i in 0..r {
            for j in 0..c {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.data[i * c + j]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the matrix text format: rows separated by newlines, entries by
    /// commas. Trailing blank lines are ignored.
    pub fn parse_text(text: &str) -> Result<Tensor> {
        let lines: Vec<&str> = text.lines().collect();
        let end = lines
            .iter()
            .rposition(|l| !l.trim().is_empty())
            .map(|i| i + 1)
            .ok_or(Error::EmptyMatrix)?;
        let mut cols = None;
        let mut data = Vec::new();
        for (i, line) in lines[..end].iter().enumerate() {
            let lineno = i + 1;
            let tokens: Vec<&str> = if line.trim().is_empty() {
                Vec::new()
            } else {
                line.split(',').collect()
            };
            let expected = *cols.get_or_insert(tokens.len());
            if tokens.len() != expected || tokens.is_empty() {
                return Err(Error::RaggedRow {
                    line: lineno,
                    expected,
                    found: tokens.len(),
                });
            }
            for (j, tok) in tokens.iter().enumerate() {
                let tok = tok.trim();
                match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() => data.push(v),
                    _ => {
                        return Err(Error::Token {
                            line: lineno,
                            column: j + 1,
                            token: tok.to_string(),
                        })
                    }
                }
            }
        }
        Tensor::matrix(end, cols.unwrap_or(0), data)
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Largest residual across two lists of tensors; infinite if their shapes
/// disagree.
pub fn max_residual(a: &[Tensor], b: &[Tensor]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| x.residual(y))
        .fold(0.0, f64::max)
}

pub fn all_bit_eq(a: &[Tensor], b: &[Tensor]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bit_eq(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_rejects_zero_and_high_rank() {
        assert!(Shape::new([2, 0]).is_err());
        assert!(Shape::new([1, 2, 3]).is_err());
        assert!(Shape::new(Vec::<usize>::new()).is_err());
        assert_eq!(Shape::new([3]).unwrap().size(), 3);
    }

    #[test]
    fn tensor_rejects_nan_and_wrong_len() {
        assert!(matches!(
            Tensor::vector(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(matches!(
            Tensor::matrix(2, 2, vec![1.0]),
            Err(Error::EntryCount { .. })
        ));
    }

    #[test]
    fn matmul_by_hand() {
        let a = Tensor::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = Tensor::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().data(), &[11.0]);
        // aᵀ·bᵀ is the 2x2 outer product
        let outer = a.matmul_t(&b, true, true).unwrap();
        assert_eq!(outer.data(), &[3.0, 4.0, 6.0, 8.0]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn transposed_flags_agree_with_explicit_transpose() {
        let a = Tensor::from_rows(&[[1.0, -2.0, 0.5], [3.0, 4.0, -1.0]]).unwrap();
        let b = Tensor::from_rows(&[[2.0, 1.0], [0.0, -1.0]]).unwrap();
        let lhs = a.matmul_t(&b, true, false).unwrap();
        let rhs = a.transpose().matmul(&b).unwrap();
        assert!(lhs.bit_eq(&rhs));
        let lhs = b.matmul_t(&a, false, false).unwrap();
        let rhs = a.matmul_t(&b, true, true).unwrap().transpose();
        assert!(lhs.bit_eq(&rhs));
    }

    #[test]
    fn parse_identity_and_row_vector() {
        let t = Tensor::parse_text("1,0\n0,1\n").unwrap();
        assert_eq!(t, Tensor::identity(2));
        let v = Tensor::parse_text("1,2,3\n").unwrap();
        assert_eq!(v.shape(), &Shape::matrix(1, 3));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            Tensor::parse_text("1,2\n3\n"),
            Err(Error::RaggedRow {
                line: 2,
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            Tensor::parse_text("1,x\n"),
            Err(Error::Token {
                line: 1,
                column: 2,
                token: "x".into()
            })
        );
        assert!(matches!(
            Tensor::parse_text("1,inf\n"),
            Err(Error::Token { .. })
        ));
        assert_eq!(Tensor::parse_text(""), Err(Error::EmptyMatrix));
        assert_eq!(Tensor::parse_text("\n\n"), Err(Error::EmptyMatrix));
        assert!(matches!(
            Tensor::parse_text("1\n\n2\n"),
            Err(Error::RaggedRow { line: 2, .. })
        ));
    }

    #[test]
    fn residual_is_relative_above_one() {
        let a = Tensor::vector(vec![100.0, 0.5]).unwrap();
        let b = Tensor::vector(vec![101.0, 0.25]).unwrap();
        assert!((a.residual(&b) - 0.25).abs() < 1e-15);
        assert_eq!(a.residual(&a), 0.0);
    }

    #[test]
    fn object_display_and_product() {
        let x = Object::single(Shape::matrix(2, 3));
        let unit = Object::unit();
        assert_eq!(unit.product(&x), x);
        assert_eq!(format!("{}", x.product(&x)), "([2,3] x [2,3])");
        assert_eq!(format!("{unit}"), "1");
    }
}
