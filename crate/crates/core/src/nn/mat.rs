//! Row-major matrices and the three GEMM shapes backpropagation needs.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// `a * w^T + bias`, with `w` stored row-major as `out x a.cols`.
pub fn affine(a: &Mat, w: &[f64], bias: &[f64]) -> Mat {
    let out = bias.len();
    debug_assert_eq!(w.len(), out * a.cols);
    let mut c = Mat::zeros(a.rows, out);
    for r in 0..a.rows {
        c.row_mut(r).copy_from_slice(bias);
    }
    if a.rows == 0 || a.cols == 0 || out == 0 {
        return c;
    }
    // SAFETY: shapes and strides describe the live buffers above.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            out,
            1.0,
            a.data.as_ptr(),
            a.cols as isize,
            1,
            w.as_ptr(),
            1,
            a.cols as isize,
            1.0,
            c.data.as_mut_ptr(),
            out as isize,
            1,
        );
    }
    c
}

/// `grad_w += u^T * h`, where `u` is `batch x out` and `h` is `batch x in`.
pub fn accumulate_outer(u: &Mat, h: &Mat, grad_w: &mut [f64]) {
    debug_assert_eq!(u.rows, h.rows);
    debug_assert_eq!(grad_w.len(), u.cols * h.cols);
    if u.rows == 0 || u.cols == 0 || h.cols == 0 {
        return;
    }
    // SAFETY: `u^T` is read through swapped strides; all buffers are in bounds.
    unsafe {
        matrixmultiply::dgemm(
            u.cols,
            u.rows,
            h.cols,
            1.0,
            u.data.as_ptr(),
            1,
            u.cols as isize,
            h.data.as_ptr(),
            h.cols as isize,
            1,
            1.0,
            grad_w.as_mut_ptr(),
            h.cols as isize,
            1,
        );
    }
}

/// `u * w`, where `w` is row-major `out x in`; returns `batch x in`.
pub fn back_through(u: &Mat, w: &[f64], inputs: usize) -> Mat {
    debug_assert_eq!(w.len(), u.cols * inputs);
    let mut c = Mat::zeros(u.rows, inputs);
    if u.rows == 0 || u.cols == 0 || inputs == 0 {
        return c;
    }
    // SAFETY: shapes and strides describe the live buffers above.
    unsafe {
        matrixmultiply::dgemm(
            u.rows,
            u.cols,
            inputs,
            1.0,
            u.data.as_ptr(),
            u.cols as isize,
            1,
            w.as_ptr(),
            inputs as isize,
            1,
            0.0,
            c.data.as_mut_ptr(),
            inputs as isize,
            1,
        );
    }
    c
}

pub fn column_sums_into(u: &Mat, out: &mut [f64]) {
    for r in 0..u.rows {
        for (o, v) in out.iter_mut().zip(u.row(r)) {
            *o += v;
        }
    }
}
