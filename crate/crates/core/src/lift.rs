//! Parameter arithmetic for the lift construction: a short covering code
//! with n0 <= q+1 yields an infinite family with n = n0 q^m + R theta(m,q)
//! and r = r0 + Rm, preserving the covering radius. Only the parameters are
//! produced here; the lifted matrices themselves are out of scope.

use crate::bounds;
use crate::construction::SaturatingSetResult;
use crate::geometry::theta;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LiftError {
    #[error("lift hypothesis fails: n0 = {n0} exceeds q + 1 = {limit}")]
    StartTooLong { n0: u64, limit: u64 },
    #[error("lift exponent m must be at least 1")]
    ZeroExponent,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedParams {
    pub n0: u64,
    pub r0: u32,
    pub q: u64,
    pub radius: u32,
    pub m: u32,
    pub n: u128,
    pub r: u32,
    /// Codimension index t with r = tR + 1; set when r0 = R + 1.
    pub t: Option<u32>,
    /// The closed-form length bound for this codimension, for comparison.
    pub length_bound: f64,
}

/// Parameters of the m-th lift of an [n0, n0-r0] code with covering radius R.
pub fn lift_parameters(
    n0: u64,
    r0: u32,
    q: u64,
    radius: u32,
    m: u32,
) -> Result<LiftedParams, LiftError> {
    if n0 > q + 1 {
        return Err(LiftError::StartTooLong { n0, limit: q + 1 });
    }
    if m == 0 {
        return Err(LiftError::ZeroExponent);
    }
    let n = n0 as u128 * (q as u128).pow(m) + radius as u128 * theta(m as i64, q);
    let r = r0 + radius * m;
    let t = (r0 == radius + 1).then_some(m + 1);
    let length_bound = t
        .map(|t| bounds::length_upper_bound(q, radius, t))
        .unwrap_or(f64::NAN);
    Ok(LiftedParams {
        n0,
        r0,
        q,
        radius,
        m,
        n,
        r,
        t,
        length_bound,
    })
}

/// A lift family; empty with a diagnostic when the hypothesis fails.
#[derive(Debug, Clone, Serialize)]
pub struct LiftFamily {
    pub entries: Vec<LiftedParams>,
    pub diagnostic: Option<String>,
}

/// The family of lifts m = 1 .. t_max-1 rooted at a constructed set.
pub fn lifted_family(base: &SaturatingSetResult, t_max: u32) -> LiftFamily {
    family_from_parameters(base.n as u64, base.r + 1, base.q as u64, base.r, t_max)
}

pub fn family_from_parameters(n0: u64, r0: u32, q: u64, radius: u32, t_max: u32) -> LiftFamily {
    if n0 > q + 1 {
        return LiftFamily {
            entries: Vec::new(),
            diagnostic: Some(
                LiftError::StartTooLong { n0, limit: q + 1 }.to_string(),
            ),
        };
    }
    let entries = (1..t_max)
        .map(|m| lift_parameters(n0, r0, q, radius, m).expect("hypothesis checked"))
        .collect();
    LiftFamily {
        entries,
        diagnostic: None,
    }
}
