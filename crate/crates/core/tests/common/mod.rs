use reflected_flow::{Hypersurface, Matrix, Vector};

/// `S v = −π ∂_v n` by central differences of the normal field, for tangent `v`.
pub fn fd_shape(surface: &Hypersurface, x: &Vector, h: f64) -> Matrix {
    let n = surface.dim();
    let pi = surface.tangent_project(x).unwrap().matrix;
    let mut cols = Matrix::zeros(n, n);
    for i in 0..n {
        let v = pi.column(i).into_owned();
        let plus = surface.normal_field(&(x + &v * h)).unwrap();
        let minus = surface.normal_field(&(x - &v * h)).unwrap();
        cols.set_column(i, &(-(&pi * (plus - minus)) / (2.0 * h)));
    }
    cols
}
