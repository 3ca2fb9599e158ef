//! Deterministic JSON / CSV serialization for CLI artifacts: floats are
//! rendered with 17 significant digits so identical runs produce byte-identical
//! files.

use crate::cluster::AmplitudeSpace;
use crate::scalar::{FieldTag, Scalar};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::ser::Formatter;
use std::io;

/// Schema version stamped into every JSON artifact.
pub const SCHEMA: &str = "cc-degree/1";

struct SigFigFormatter;

impl Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", format_f64(value as f64))
    }
}

/// 17 significant digits, scientific notation.
pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        // Avoid "-0" leaking formatting noise into artifacts.
        "0.0000000000000000e0".to_string()
    } else {
        format!("{value:.16e}")
    }
}

/// Serialize with fixed float formatting.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value.serialize(&mut ser).expect("serialization cannot fail for artifact types");
    String::from_utf8(out).expect("json is utf8")
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct AmplitudeEntry {
    pub i: Vec<usize>,
    pub a: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

pub fn amplitude_entries<S: Scalar>(space: &AmplitudeSpace, t: &DVector<S>) -> Vec<AmplitudeEntry> {
    (0..space.dim())
        .map(|slot| {
            let x = space.excitation(slot);
            AmplitudeEntry {
                i: x.i.iter().map(|&p| p + 1).collect(),
                a: x.a.iter().map(|&p| p + 1).collect(),
                re: t[slot].re_part(),
                im: t[slot].im_part(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<crate::C64> for ComplexJson {
    fn from(z: crate::C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionRecord {
    pub schema: &'static str,
    pub scheme: String,
    pub field: FieldTag,
    pub t: Vec<AmplitudeEntry>,
    pub e_cc: ComplexJson,
    pub residual_inf: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SolutionRecord {
    pub fn new<S: Scalar>(space: &AmplitudeSpace, sol: &crate::cccore::CCSolution<S>) -> Self {
        SolutionRecord {
            schema: SCHEMA,
            scheme: space.scheme.to_string(),
            field: sol.field,
            t: amplitude_entries(space, &sol.t),
            e_cc: sol.e_cc.to_c64().into(),
            residual_inf: sol.residual_inf,
            converged: sol.converged,
            iterations: sol.iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanFieldRecord {
    pub schema: &'static str,
    pub lambdas: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "Lambda0")]
    pub lambda0: f64,
    pub eps_min: f64,
    pub scf_energy: f64,
    pub converged: bool,
}

impl From<&crate::models::MeanFieldResult> for MeanFieldRecord {
    fn from(mf: &crate::models::MeanFieldResult) -> Self {
        let k = mf.c.nrows();
        MeanFieldRecord {
            schema: SCHEMA,
            lambdas: mf.lambdas.clone(),
            c: (0..k).map(|i| (0..k).map(|j| mf.c[(i, j)]).collect()).collect(),
            lambda0: mf.lambda0,
            eps_min: mf.eps_min,
            scf_energy: mf.scf_energy,
            converged: mf.converged,
        }
    }
}
