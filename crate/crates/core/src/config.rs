//! TOML instance registry: bodies and objectives by family name.
//!
//! ```toml
//! [instance]
//! family = "sum_coords"   # ball | box | smoothed_hypercube | sum_coords | max_norm | combined
//! s = [1, 0]
//! ```

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::oracles::{smoothed_hypercube, ConvexBody, ObjectiveFunction};

#[derive(Debug, Clone, Deserialize, Default)]
pub struct InstanceSpec {
    pub family: String,
    /// Dimension, where the family does not imply it.
    pub dim: Option<usize>,
    /// Ball radius.
    pub radius: Option<f64>,
    /// Box bounds.
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    /// Smoothed-hypercube anchor and edge length.
    pub x0: Option<Vec<f64>>,
    pub l: Option<f64>,
    /// Hidden bit strings.
    pub s: Option<Vec<u8>>,
    pub c: Option<Vec<u8>>,
    /// Linear objective coefficients for geometric bodies.
    pub objective: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct ConfigFile {
    pub instance: Option<InstanceSpec>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &std::path::Path) -> Result<ConfigFile> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn bits(v: &[u8]) -> Result<Vec<bool>> {
    v.iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Config(format!("bit string entry {other} not in {{0,1}}"))),
        })
        .collect()
}

fn require<T: Clone>(opt: &Option<T>, what: &str, family: &str) -> Result<T> {
    opt.clone()
        .ok_or_else(|| Error::Config(format!("family '{family}' requires '{what}'")))
}

/// Build (body, objective) from an instance spec. Geometric families pair
/// with a linear objective (default: minimize the first coordinate).
pub fn build_instance(spec: &InstanceSpec) -> Result<(Arc<ConvexBody>, Arc<ObjectiveFunction>)> {
    let fam = spec.family.as_str();
    match fam {
        "ball" => {
            let dim = require(&spec.dim, "dim", fam)?;
            let radius = spec.radius.unwrap_or(1.0);
            if radius <= 0.0 {
                return Err(Error::Config("radius must be positive".into()));
            }
            let body = Arc::new(ConvexBody::ball(dim, radius));
            Ok((body, linear_objective(spec, dim)?))
        }
        "box" => {
            let lo = require(&spec.lo, "lo", fam)?;
            let hi = require(&spec.hi, "hi", fam)?;
            if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                return Err(Error::Config("box bounds must satisfy lo < hi".into()));
            }
            let dim = lo.len();
            Ok((Arc::new(ConvexBody::axis_box(lo, hi)), linear_objective(spec, dim)?))
        }
        "smoothed_hypercube" => {
            let x0 = require(&spec.x0, "x0", fam)?;
            let l = require(&spec.l, "l", fam)?;
            if l <= 0.0 {
                return Err(Error::Config("l must be positive".into()));
            }
            let dim = x0.len();
            Ok((Arc::new(smoothed_hypercube(&x0, l)), linear_objective(spec, dim)?))
        }
        "sum_coords" => {
            let s = bits(&require(&spec.s, "s", fam)?)?;
            let body = Arc::new(ConvexBody::sum_coords_box(&s));
            Ok((body, Arc::new(ObjectiveFunction::sum_coords(s.len()))))
        }
        "max_norm" => {
            let c = bits(&require(&spec.c, "c", fam)?)?;
            let n = c.len();
            let body = Arc::new(ConvexBody::axis_box(vec![0.0; n], vec![1.0; n]));
            Ok((body, Arc::new(ObjectiveFunction::max_norm(&c))))
        }
        "combined" => {
            let s = bits(&require(&spec.s, "s", fam)?)?;
            let c = bits(&require(&spec.c, "c", fam)?)?;
            if s.len() != c.len() {
                return Err(Error::Config("|s| must equal |c|".into()));
            }
            let body = Arc::new(ConvexBody::combined_box(&s));
            Ok((body, Arc::new(ObjectiveFunction::combined(&c))))
        }
        other => Err(Error::Config(format!("unknown instance family '{other}'"))),
    }
}

fn linear_objective(spec: &InstanceSpec, dim: usize) -> Result<Arc<ObjectiveFunction>> {
    let coeffs = match &spec.objective {
        Some(c) => {
            if c.len() != dim {
                return Err(Error::Config("objective length must match dimension".into()));
            }
            c.clone()
        }
        None => {
            let mut c = vec![0.0; dim];
            c[0] = 1.0;
            c
        }
    };
    Ok(Arc::new(ObjectiveFunction::linear(coeffs)))
}
