//! Scalar-field abstraction: the amplitude equations are solved over ℝ or ℂ
//! with the same code paths.

use nalgebra::ComplexField;
use num_complex::Complex64;

/// Scalar field for amplitude vectors and derived operators.
///
/// Implemented for `f64` (real amplitudes) and `Complex64` (the holomorphic
/// extension of the CC system). The underlying real type is always `f64`;
/// the tolerances baked into the solvers make lower precision pointless.
///
/// Method names deliberately avoid clashing with `ComplexField` /
/// `FromPrimitive` so call sites stay unambiguous.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Default + Send + Sync + 'static {
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self {
        Self::from_real(x)
    }

    /// Build from real/imaginary parts; the imaginary part is discarded on ℝ.
    fn from_re_im(re: f64, im: f64) -> Self;

    fn to_c64(self) -> Complex64;

    fn re_part(self) -> f64 {
        ComplexField::real(self)
    }

    fn im_part(self) -> f64 {
        ComplexField::imaginary(self)
    }

    /// Modulus |z|.
    fn mag(self) -> f64 {
        ComplexField::modulus(self)
    }

    /// Complex conjugate (identity on ℝ).
    fn cj(self) -> Self {
        ComplexField::conjugate(self)
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Field tag carried by amplitude vectors and serialized artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    Real,
    Complex,
}

impl std::fmt::Display for FieldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldTag::Real => write!(f, "real"),
            FieldTag::Complex => write!(f, "complex"),
        }
    }
}

pub fn field_tag<S: Scalar>() -> FieldTag {
    if S::IS_COMPLEX {
        FieldTag::Complex
    } else {
        FieldTag::Real
    }
}
