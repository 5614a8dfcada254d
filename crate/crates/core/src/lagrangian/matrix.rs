//! 2×2 matrices stored row-major as `m[i][j]`.

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const ZERO: Mat2 = [[0.0, 0.0], [0.0, 0.0]];

#[inline]
pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

#[inline]
pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Cofactor transpose `[[d, −b], [−c, a]]`; the inverse when `det = 1`.
#[inline]
pub fn adjugate(a: &Mat2) -> Mat2 {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

#[inline]
pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

#[inline]
pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
pub fn scale(a: &Mat2, s: f64) -> Mat2 {
    [[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]]
}

/// Largest absolute entry, the matrix norm used for `‖Dη‖_∞`.
#[inline]
pub fn max_entry(a: &Mat2) -> f64 {
    a[0][0]
        .abs()
        .max(a[0][1].abs())
        .max(a[1][0].abs())
        .max(a[1][1].abs())
}

#[inline]
pub fn diag(a: f64, b: f64) -> Mat2 {
    [[a, 0.0], [0.0, b]]
}

/// Induced ∞-norm, the largest absolute row sum.
#[inline]
pub fn row_sum_norm(a: &Mat2) -> f64 {
    (a[0][0].abs() + a[0][1].abs()).max(a[1][0].abs() + a[1][1].abs())
}
