//! Layer kernels with explicit backward passes.
//!
//! Activations are stored channel-major across the whole batch: element
//! `(c, b, y, x)` lives at `c·B·H·W + b·H·W + y·W + x`, so a convolution over
//! a batch is a single matrix product.

use super::real::{MatRef, Real};

/// Spatial extent of a batch of feature maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub batch: usize,
    pub height: usize,
    pub width: usize,
}

impl Geometry {
    pub fn plane(self) -> usize {
        self.height * self.width
    }

    /// Columns of an activation matrix.
    pub fn n(self) -> usize {
        self.batch * self.height * self.width
    }
}

/// Output columns `[lo, hi)` whose source `x + d` lies inside `0..len`.
fn valid_span(len: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (len as isize - d).min(len as isize).max(0) as usize;
    (lo.min(hi), hi)
}

/// Unfolds a `k × k` same-padded neighbourhood: row `(ci·k + ky)·k + kx`,
/// column = output position.
pub fn im2col<T: Real>(input: &[T], cin: usize, g: Geometry, k: usize) -> Vec<T> {
    let n = g.n();
    let (h, w) = (g.height, g.width);
    let pad = (k / 2) as isize;
    let mut col = vec![T::zero(); cin * k * k * n];
    for ci in 0..cin {
        let src = &input[ci * n..(ci + 1) * n];
        for ky in 0..k {
            let dy = ky as isize - pad;
            let (y0, y1) = valid_span(h, dy);
            for kx in 0..k {
                let dx = kx as isize - pad;
                let (x0, x1) = valid_span(w, dx);
                let row = (ci * k + ky) * k + kx;
                let dst = &mut col[row * n..(row + 1) * n];
                for b in 0..g.batch {
                    let base = b * g.plane();
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let d = base + y * w;
                        let s = base + sy * w;
                        let sx0 = (x0 as isize + dx) as usize;
                        dst[d + x0..d + x1].copy_from_slice(&src[s + sx0..s + sx0 + (x1 - x0)]);
                    }
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: accumulates column gradients back onto the input.
pub fn col2im<T: Real>(dcol: &[T], cin: usize, g: Geometry, k: usize) -> Vec<T> {
    let n = g.n();
    let (h, w) = (g.height, g.width);
    let pad = (k / 2) as isize;
    let mut dinput = vec![T::zero(); cin * n];
    for ci in 0..cin {
        let dst = &mut dinput[ci * n..(ci + 1) * n];
        for ky in 0..k {
            let dy = ky as isize - pad;
            let (y0, y1) = valid_span(h, dy);
            for kx in 0..k {
                let dx = kx as isize - pad;
                let (x0, x1) = valid_span(w, dx);
                let row = (ci * k + ky) * k + kx;
                let src = &dcol[row * n..(row + 1) * n];
                for b in 0..g.batch {
                    let base = b * g.plane();
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let s = base + y * w;
                        let d = base + sy * w;
                        let sx0 = (x0 as isize + dx) as usize;
                        for (o, &v) in dst[d + sx0..d + sx0 + (x1 - x0)].iter_mut().zip(&src[s + x0..s + x1]) {
                            *o = *o + v;
                        }
                    }
                }
            }
        }
    }
    dinput
}

/// Same-padded stride-1 convolution. `weight` is `cout × (cin·k·k)`.
/// Returns the output and the unfolded input needed for the backward pass.
pub fn conv_forward<T: Real>(
    input: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    g: Geometry,
    weight: &[T],
    bias: &[T],
) -> (Vec<T>, Vec<T>) {
    let n = g.n();
    let col = if k == 1 { input.to_vec() } else { im2col(input, cin, g, k) };
    let mut out = vec![T::zero(); cout * n];
    for (co, row) in out.chunks_mut(n).enumerate() {
        row.fill(bias[co]);
    }
    T::gemm(
        MatRef::new(weight, cout, cin * k * k),
        MatRef::new(&col, cin * k * k, n),
        T::one(),
        &mut out,
    );
    (out, col)
}

pub struct ConvGrads<T> {
    pub input: Vec<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv_backward<T: Real>(
    dout: &[T],
    col: &[T],
    cin: usize,
    cout: usize,
    k: usize,
    g: Geometry,
    weight: &[T],
) -> ConvGrads<T> {
    let n = g.n();
    let kk = cin * k * k;
    let mut dweight = vec![T::zero(); cout * kk];
    T::gemm(MatRef::new(dout, cout, n), MatRef::new(col, kk, n).t(), T::zero(), &mut dweight);
    let dbias = dout
        .chunks(n)
        .map(|row| row.iter().fold(T::zero(), |a, &b| a + b))
        .collect();
    let mut dcol = vec![T::zero(); kk * n];
    T::gemm(MatRef::new(weight, cout, kk).t(), MatRef::new(dout, cout, n), T::zero(), &mut dcol);
    let dinput = if k == 1 { dcol } else { col2im(&dcol, cin, g, k) };
    ConvGrads {
        input: dinput,
        weight: dweight,
        bias: dbias,
    }
}

/// Per-channel `y = scale·x + offset`.
pub fn affine_forward<T: Real>(x: &[T], scale: &[T], offset: &[T], n: usize) -> Vec<T> {
    let mut y = x.to_vec();
    for (c, row) in y.chunks_mut(n).enumerate() {
        for v in row {
            *v = *v * scale[c] + offset[c];
        }
    }
    y
}

/// Returns `(dx, dscale, doffset)`.
pub fn affine_backward<T: Real>(dy: &[T], x: &[T], scale: &[T], n: usize) -> (Vec<T>, Vec<T>, Vec<T>) {
    let ch = scale.len();
    let mut dx = vec![T::zero(); dy.len()];
    let mut dscale = vec![T::zero(); ch];
    let mut doffset = vec![T::zero(); ch];
    for c in 0..ch {
        let (dyr, xr) = (&dy[c * n..(c + 1) * n], &x[c * n..(c + 1) * n]);
        let mut ds = T::zero();
        let mut dof = T::zero();
        for i in 0..n {
            dx[c * n + i] = dyr[i] * scale[c];
            ds = ds + dyr[i] * xr[i];
            dof = dof + dyr[i];
        }
        dscale[c] = ds;
        doffset[c] = dof;
    }
    (dx, dscale, doffset)
}

pub fn relu_forward<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Masks `dy` in place by the forward output.
pub fn relu_backward<T: Real>(dy: &mut [T], y: &[T]) {
    for (d, &o) in dy.iter_mut().zip(y) {
        if o <= T::zero() {
            *d = T::zero();
        }
    }
}

/// Mean over each sample's plane: `ch × n` to `ch × batch`.
pub fn pool_forward<T: Real>(x: &[T], ch: usize, g: Geometry) -> Vec<T> {
    let plane = g.plane();
    let inv = T::one() / T::from_f64(plane as f64);
    let mut out = vec![T::zero(); ch * g.batch];
    for c in 0..ch {
        for b in 0..g.batch {
            let start = c * g.n() + b * plane;
            let s = x[start..start + plane].iter().fold(T::zero(), |a, &v| a + v);
            out[c * g.batch + b] = s * inv;
        }
    }
    out
}

pub fn pool_backward<T: Real>(dout: &[T], ch: usize, g: Geometry) -> Vec<T> {
    let plane = g.plane();
    let inv = T::one() / T::from_f64(plane as f64);
    let mut dx = vec![T::zero(); ch * g.n()];
    for c in 0..ch {
        for b in 0..g.batch {
            let start = c * g.n() + b * plane;
            dx[start..start + plane].fill(dout[c * g.batch + b] * inv);
        }
    }
    dx
}

/// `y = W·x + b` with `x` stored `fin × batch`, `W` as `fout × fin`.
pub fn dense_forward<T: Real>(x: &[T], fin: usize, fout: usize, batch: usize, weight: &[T], bias: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); fout * batch];
    for (o, row) in y.chunks_mut(batch).enumerate() {
        row.fill(bias[o]);
    }
    T::gemm(MatRef::new(weight, fout, fin), MatRef::new(x, fin, batch), T::one(), &mut y);
    y
}

/// Returns `(dx, dweight, dbias)`.
pub fn dense_backward<T: Real>(
    dy: &[T],
    x: &[T],
    fin: usize,
    fout: usize,
    batch: usize,
    weight: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let mut dw = vec![T::zero(); fout * fin];
    T::gemm(MatRef::new(dy, fout, batch), MatRef::new(x, fin, batch).t(), T::zero(), &mut dw);
    let db = dy
        .chunks(batch)
        .map(|r| r.iter().fold(T::zero(), |a, &b| a + b))
        .collect();
    let mut dx = vec![T::zero(); fin * batch];
    T::gemm(MatRef::new(weight, fout, fin).t(), MatRef::new(dy, fout, batch), T::zero(), &mut dx);
    (dx, dw, db)
}
