use std::fmt::Debug;

use num_traits::Float;

/// Strided read-only matrix view.
#[derive(Clone, Copy)]
pub struct MatRef<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> MatRef<'a, T> {
    /// Row-major `rows × cols`.
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        MatRef { data, rows, cols, row_stride: cols, col_stride: 1 }
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
            assert!(last < self.data.len(), "matrix view out of bounds");
        }
    }
}

/// Floating-point element type of the network.
pub trait Real: Float + Debug + Default + Send + Sync + 'static {
    /// `c ← a·b + beta·c`, with `c` row-major `a.rows × b.cols`.
    fn gemm(a: MatRef<'_, Self>, b: MatRef<'_, Self>, beta: Self, c: &mut [Self]);

    fn from_f64(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

fn check_dims<T>(a: &MatRef<'_, T>, b: &MatRef<'_, T>, c: &[T]) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert!(c.len() >= a.rows * b.cols, "output too small");
    a.check();
    b.check();
}

impl Real for f32 {
    fn gemm(a: MatRef<'_, f32>, b: MatRef<'_, f32>, beta: f32, c: &mut [f32]) {
        check_dims(&a, &b, c);
        if a.rows == 0 || b.cols == 0 {
            return;
        }
        // SAFETY: every view was bounds-checked above against its slice.
        unsafe {
            matrixmultiply::sgemm(
                a.rows, a.cols, b.cols, 1.0,
                a.data.as_ptr(), a.row_stride as isize, a.col_stride as isize,
                b.data.as_ptr(), b.row_stride as isize, b.col_stride as isize,
                beta,
                c.as_mut_ptr(), b.cols as isize, 1,
            );
        }
    }

    fn from_f64(x: f64) -> f32 {
        x as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn gemm(a: MatRef<'_, f64>, b: MatRef<'_, f64>, beta: f64, c: &mut [f64]) {
        check_dims(&a, &b, c);
        if a.rows == 0 || b.cols == 0 {
            return;
        }
        // SAFETY: every view was bounds-checked above against its slice.
        unsafe {
            matrixmultiply::dgemm(
                a.rows, a.cols, b.cols, 1.0,
                a.data.as_ptr(), a.row_stride as isize, a.col_stride as isize,
                b.data.as_ptr(), b.row_stride as isize, b.col_stride as isize,
                beta,
                c.as_mut_ptr(), b.cols as isize, 1,
            );
        }
    }

    fn from_f64(x: f64) -> f64 {
        x
    }

    fn as_f64(self) -> f64 {
        self
    }
}
