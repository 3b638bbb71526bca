//! Small fixed-size 2D linear algebra used throughout the element kernels.

pub type Point = [f64; 2];
pub type Vector = [f64; 2];
/// Row-major 2×2 tensor, `t[i][j]`.
pub type Tensor = [[f64; 2]; 2];

pub const ZERO_TENSOR: Tensor = [[0.0; 2]; 2];
pub const IDENTITY: Tensor = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn trace(m: &Tensor) -> f64 {
    m[0][0] + m[1][1]
}

/// `Dev M = M − ½ tr(M) I`.
#[inline]
pub fn deviator(m: &Tensor) -> Tensor {
    let h = 0.5 * trace(m);
    [[m[0][0] - h, m[0][1]], [m[1][0], m[1][1] - h]]
}

#[inline]
pub fn frobenius_dot(a: &Tensor, b: &Tensor) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

#[inline]
pub fn frobenius_sq(a: &Tensor) -> f64 {
    frobenius_dot(a, a)
}

#[inline]
pub fn dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm_sq(a: &Vector) -> f64 {
    dot(a, a)
}

#[inline]
pub fn sub(a: &Vector, b: &Vector) -> Vector {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn tensor_sub(a: &Tensor, b: &Tensor) -> Tensor {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
pub fn tensor_scale(a: &Tensor, s: f64) -> Tensor {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

#[inline]
pub fn tensor_axpy(y: &mut Tensor, s: f64, x: &Tensor) {
    for i in 0..2 {
        for j in 0..2 {
            y[i][j] += s * x[i][j];
        }
    }
}

#[inline]
pub fn axpy(y: &mut Vector, s: f64, x: &Vector) {
    y[0] += s * x[0];
    y[1] += s * x[1];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviator_is_trace_free() {
        let m = [[1.0, 2.0], [3.0, -7.0]];
        assert!(trace(&deviator(&m)).abs() < 1e-15);
        assert_eq!(deviator(&IDENTITY), ZERO_TENSOR);
    }

    #[test]
    fn orthogonal_split_pointwise() {
        // |M|² = |Dev M|² + ½ (tr M)²
        let m = [[0.3, -1.2], [2.5, 4.1]];
        let lhs = frobenius_sq(&m);
        let rhs = frobenius_sq(&deviator(&m)) + 0.5 * trace(&m).powi(2);
        assert!((lhs - rhs).abs() < 1e-13);
    }
}
