//! The exponent triple `(d, p, s)` shared by every operation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closeness below which `p·s` is treated as the excluded value 1.
const PS_ONE_TOL: f64 = 1e-12;

/// Dimension `d`, integrability exponent `p` and fractional order `s`.
///
/// The ground-state exponent `alpha = (p·s − 1)/p` is computed once at
/// construction and stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FracParams {
    d: usize,
    p: f64,
    s: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d: usize,
    p: f64,
    s: f64,
}

impl TryFrom<RawParams> for FracParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        FracParams::new(r.d, r.p, r.s)
    }
}

impl From<FracParams> for RawParams {
    fn from(f: FracParams) -> Self {
        RawParams { d: f.d, p: f.p, s: f.s }
    }
}

impl FracParams {
    pub fn new(d: usize, p: f64, s: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension d must be >= 1".into()));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} outside [1, inf)")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {s} outside (0, 1)")));
        }
        Ok(FracParams { d, p, s, alpha: (p * s - 1.0) / p })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Ground-state exponent `(p·s − 1)/p`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    pub fn ps_is_one(&self) -> bool {
        (self.ps() - 1.0).abs() < PS_ONE_TOL
    }

    /// Gate for the Hardy, extension and ground-state operations.
    pub fn require_ps_not_one(&self) -> Result<()> {
        if self.ps_is_one() {
            Err(Error::ExcludedParameter(format!(
                "ps = 1 excluded (p = {}, s = {})",
                self.p, self.s
            )))
        } else {
            Ok(())
        }
    }

    pub fn require_p2(&self) -> Result<()> {
        if self.p != 2.0 {
            Err(Error::ExcludedParameter(format!("p = {} but the Fourier route needs p = 2", self.p)))
        } else {
            Ok(())
        }
    }

    /// Gate for the half-space Korn inequality: `p = 2` and `s ≠ 1/2`.
    pub fn require_korn(&self) -> Result<()> {
        self.require_p2()?;
        if (self.s - 0.5).abs() < PS_ONE_TOL {
            return Err(Error::ExcludedParameter("s = 1/2 excluded for the half-space Korn inequality".into()));
        }
        Ok(())
    }

    pub fn with_d(&self, d: usize) -> Result<Self> {
        FracParams::new(d, self.p, self.s)
    }
}

impl std::fmt::Display for FracParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "d={} p={} s={}", self.d, self.p, self.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_stored_exactly() {
        let fp = FracParams::new(2, 3.0, 0.6).unwrap();
        assert_eq!(fp.alpha(), (3.0 * 0.6 - 1.0) / 3.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(FracParams::new(0, 2.0, 0.5).is_err());
        assert!(FracParams::new(2, 0.5, 0.5).is_err());
        assert!(FracParams::new(2, 2.0, 1.0).is_err());
        assert!(FracParams::new(2, 2.0, 0.0).is_err());
        assert!(FracParams::new(2, f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn gates() {
        let half = FracParams::new(2, 2.0, 0.5).unwrap();
        let e = half.require_ps_not_one().unwrap_err();
        assert!(e.to_string().contains("ps = 1 excluded"));
        assert!(half.require_korn().is_err());
        assert!(FracParams::new(2, 3.0, 0.25).unwrap().require_p2().is_err());
        assert!(FracParams::new(2, 2.0, 0.75).unwrap().require_korn().is_ok());
    }

    #[test]
    fn serde_round_trip_and_unknown_keys() {
        let fp = FracParams::new(3, 1.5, 0.4).unwrap();
        let js = serde_json::to_string(&fp).unwrap();
        assert_eq!(js, r#"{"d":3,"p":1.5,"s":0.4}"#);
        let back: FracParams = serde_json::from_str(&js).unwrap();
        assert_eq!(back, fp);
        assert!(serde_json::from_str::<FracParams>(r#"{"d":3,"p":1.5,"s":0.4,"q":1}"#).is_err());
        assert!(serde_json::from_str::<FracParams>(r#"{"d":3,"p":1.5,"s":1.4}"#).is_err());
    }
}
