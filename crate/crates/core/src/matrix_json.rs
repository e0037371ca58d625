//! Serde adapters writing matrices as row-major nested arrays.

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows<E: serde::de::Error>(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>, E> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(E::custom("ragged matrix rows"));
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.into_iter().flatten(),
    ))
}

pub mod dmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        from_rows(Vec::<Vec<f64>>::deserialize(d)?)
    }
}

pub mod dvector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

pub mod matrix2 {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Matrix2<f64>, s: S) -> Result<S::Ok, S::Error> {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix2<f64>, D::Error> {
        let r = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok(Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1]))
    }
}

pub mod complex {
    use super::*;
    use nalgebra::Complex;

    pub fn serialize<S: Serializer>(z: &Complex<f64>, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex<f64>, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex::new(re, im))
    }
}
