use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::sync::Arc;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};

/// Element type tag, also used as the on-disk dtype byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    F64 = 1,
}

impl DType {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(DType::F32),
            1 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Real scalar usable as a tensor element: `f32` for training, `f64` for gradient checks.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + 'static
{
    const DTYPE: DType;

    /// `c = alpha * a * b + beta * c` over strided row/column layouts.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n`, `m×n` views.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits in real type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f32 {
    const DTYPE: DType = DType::F32;

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, 0.0, c, rsc, csc);
    }
}

impl Real for f64 {
    const DTYPE: DType = DType::F64;

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, 0.0, c, rsc, csc);
    }
}

/// Dense row-major tensor. Cloning shares the buffer.
#[derive(Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Arc<Vec<F>>,
}

impl<F: Debug> Debug for Tensor<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tensor{:?}", self.shape)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data.as_slice())?;
        }
        Ok(())
    }
}

impl<F: Real> Tensor<F> {
    /// Builds a tensor, rejecting length mismatches and non-finite entries.
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {:?} needs {} values, got {}", shape, numel, data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor construction".into()));
        }
        Ok(Tensor {
            shape,
            data: Arc::new(data),
        })
    }

    /// Internal constructor for values produced by checked kernels.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<F>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            shape,
            data: Arc::new(data),
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, F::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, F::one())
    }

    pub fn full(shape: &[usize], value: F) -> Self {
        let n = shape.iter().product();
        Self::from_parts(shape.to_vec(), vec![value; n])
    }

    pub fn scalar(value: F) -> Self {
        Self::from_parts(vec![], vec![value])
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> F) -> Self {
        let n: usize = shape.iter().product();
        Self::from_parts(shape.to_vec(), (0..n).map(&mut f).collect())
    }

    /// 2-D tensor from nested rows.
    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("from_rows", "ragged rows"));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// Mutable access; copies the buffer only if it is shared.
    pub fn data_mut(&mut self) -> &mut [F] {
        Arc::make_mut(&mut self.data).as_mut_slice()
    }

    pub fn into_vec(self) -> Vec<F> {
        Arc::try_unwrap(self.data).unwrap_or_else(|shared| (*shared).clone())
    }

    pub fn item(&self) -> F {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.numel() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {:?}", self.shape, shape),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data: Arc::clone(&self.data),
        })
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self::from_parts(self.shape.clone(), self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        debug_assert_eq!(self.shape, other.shape);
        Self::from_parts(
            self.shape.clone(),
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> F {
        self.data.iter().copied().sum()
    }

    pub fn sq_norm(&self) -> F {
        self.data.iter().map(|&v| v * v).sum()
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[F] {
        let cols = *self.shape.last().unwrap_or(&1);
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor::from_parts(
            self.shape.clone(),
            self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(F::zero(), F::max)
    }
}

/// Matrix product over the last two axes; rank-3 operands multiply batch-wise.
///
/// `trans_a` / `trans_b` read the stored operand transposed without copying.
pub fn matmul<F: Real>(a: &Tensor<F>, b: &Tensor<F>, trans_a: bool, trans_b: bool) -> Result<Tensor<F>> {
    let (batch, ar, ac, br, bc) = match (a.rank(), b.rank()) {
        (2, 2) => (1, a.shape[0], a.shape[1], b.shape[0], b.shape[1]),
        (3, 3) if a.shape[0] == b.shape[0] => {
            (a.shape[0], a.shape[1], a.shape[2], b.shape[1], b.shape[2])
        }
        _ => {
            return Err(Error::shape(
                "matmul",
                format!("unsupported operand shapes {:?} x {:?}", a.shape, b.shape),
            ))
        }
    };
    let (m, k) = if trans_a { (ac, ar) } else { (ar, ac) };
    let (k2, n) = if trans_b { (bc, br) } else { (br, bc) };
    if k != k2 {
        return Err(Error::shape(
            "matmul",
            format!(
                "inner extents disagree: {:?}{} x {:?}{}",
                a.shape,
                if trans_a { "ᵀ" } else { "" },
                b.shape,
                if trans_b { "ᵀ" } else { "" }
            ),
        ));
    }
    let mut out = vec![F::zero(); batch * m * n];
    let (rsa, csa) = if trans_a { (1, ac as isize) } else { (ac as isize, 1) };
    let (rsb, csb) = if trans_b { (1, bc as isize) } else { (bc as isize, 1) };
    if k > 0 {
        for bi in 0..batch {
            let pa = a.data[bi * ar * ac..].as_ptr();
            let pb = b.data[bi * br * bc..].as_ptr();
            let pc = out[bi * m * n..].as_mut_ptr();
            // SAFETY: offsets and strides stay inside the three buffers sized above.
            unsafe {
                F::gemm(m, k, n, pa, rsa, csa, pb, rsb, csb, pc, n as isize, 1);
            }
        }
    }
    let shape = if batch == 1 && a.rank() == 2 {
        vec![m, n]
    } else {
        vec![batch, m, n]
    };
    Ok(Tensor::from_parts(shape, out))
}

/// Softmax along the last axis with max subtraction.
pub fn softmax_last<F: Real>(x: &Tensor<F>) -> Tensor<F> {
    let n = *x.shape().last().unwrap_or(&1);
    let mut out = x.data().to_vec();
    if n > 0 {
        for row in out.chunks_mut(n) {
            let max = row.iter().copied().fold(F::neg_infinity(), F::max);
            let mut total = F::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
    }
    Tensor::from_parts(x.shape().to_vec(), out)
}

/// Softmax along `axis` of an arbitrary-rank tensor.
pub fn softmax<F: Real>(x: &Tensor<F>, axis: usize) -> Result<Tensor<F>> {
    if axis >= x.rank().max(1) {
        return Err(Error::shape("softmax", format!("axis {axis} for shape {:?}", x.shape())));
    }
    if x.rank() == 0 || axis == x.rank() - 1 {
        return Ok(softmax_last(x));
    }
    let extent = x.shape()[axis];
    let inner: usize = x.shape()[axis + 1..].iter().product();
    let outer: usize = x.shape()[..axis].iter().product();
    let mut out = x.data().to_vec();
    for o in 0..outer {
        for i in 0..inner {
            let idx = |j: usize| (o * extent + j) * inner + i;
            let max = (0..extent).map(|j| out[idx(j)]).fold(F::neg_infinity(), F::max);
            let mut total = F::zero();
            for j in 0..extent {
                let e = (out[idx(j)] - max).exp();
                out[idx(j)] = e;
                total += e;
            }
            for j in 0..extent {
                out[idx(j)] /= total;
            }
        }
    }
    Ok(Tensor::from_parts(x.shape().to_vec(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], p: usize, q: usize, s: usize) -> Vec<f64> {
        let mut c = vec![0.0; p * s];
        for i in 0..p {
            for j in 0..s {
                for l in 0..q {
                    c[i * s + j] += a[i * q + l] * b[l * s + j];
                }
            }
        }
        c
    }

    #[test]
    fn identity_times_matrix() {
        let eye = Tensor::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = Tensor::from_rows(&[vec![1.5, -2.0], vec![3.0, 0.25]]).unwrap();
        assert_eq!(matmul(&eye, &m, false, false).unwrap(), m);
    }

    #[test]
    fn one_by_one_product() {
        let a = Tensor::<f64>::from_rows(&[vec![2.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(matmul(&a, &b, false, false).unwrap().data(), &[6.0]);
    }

    #[test]
    fn matches_triple_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ta = Tensor::new(vec![5, 4], a.clone()).unwrap();
        let tb = Tensor::new(vec![4, 3], b.clone()).unwrap();
        let got = matmul(&ta, &tb, false, false).unwrap();
        let want = naive(&a, &b, 5, 4, 3);
        for (g, w) in got.data().iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12);
        }
        // Transposed reads agree with explicit transposes.
        let at = Tensor::from_fn(&[4, 5], |i| a[(i % 5) * 4 + i / 5]);
        let got_t = matmul(&at, &tb, true, false).unwrap();
        assert!(got_t.max_abs_diff(&got) <= 1e-12);
    }

    #[test]
    fn inner_mismatch_is_error() {
        let a = Tensor::<f32>::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        assert!(matches!(matmul(&a, &b, false, false), Err(Error::Shape { .. })));
        assert!(matmul(&a, &b, false, true).is_ok());
    }

    #[test]
    fn softmax_cases() {
        let u = softmax(&Tensor::<f64>::zeros(&[3]), 0).unwrap();
        for v in u.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let big = softmax(&Tensor::<f64>::new(vec![2], vec![1000.0, 0.0]).unwrap(), 0).unwrap();
        assert!(big.all_finite());
        assert!((big.data()[0] - 1.0).abs() < 1e-12 && big.data()[1] < 1e-300);

        let x = [1.0f64, 2.0, 3.0];
        let z: f64 = x.iter().map(|v| v.exp()).sum();
        let s = softmax(&Tensor::new(vec![3], x.to_vec()).unwrap(), 0).unwrap();
        for (got, v) in s.data().iter().zip(x) {
            assert!((got - v.exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_inner_axis() {
        let x = Tensor::<f64>::new(vec![2, 3], vec![0.1, 0.5, -1.0, 2.0, 0.0, 0.3]).unwrap();
        let s = softmax(&x, 0).unwrap();
        for j in 0..3 {
            let col = s.data()[j] + s.data()[3 + j];
            assert!((col - 1.0).abs() < 1e-12);
        }
        assert!(softmax(&x, 2).is_err());
    }

    #[test]
    fn rejects_non_finite_and_bad_length() {
        assert!(Tensor::<f32>::new(vec![2], vec![1.0, f32::NAN]).is_err());
        assert!(Tensor::<f32>::new(vec![3], vec![1.0]).is_err());
    }
}
