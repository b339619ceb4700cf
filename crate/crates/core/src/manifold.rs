//! Product manifold for the composite variable `X = (W, φ, o, p)`.
//!
//! * `W` lives on the complex sphere `Tr(W Wᴴ) = P_t`.
//! * `φ` lives on the complex circle manifold `|φ_n| = 1`.
//! * `o`, `p` are unconstrained real vectors (pre-images of the antenna
//!   positions under the scaled `tanh` map).
//!
//! The metric is the real part of the Euclidean inner product on every
//! factor. Tangent projection doubles as the vector transport.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, RVector, Result, C64};

/// Relative tolerance on `|Tr(W Wᴴ) - P_t| / P_t`.
pub const POWER_TOL: f64 = 1e-9;
/// Tolerance on `||φ_n| - 1|`.
pub const MODULUS_TOL: f64 = 1e-12;
/// Tolerance on the tangency residuals of a projected direction.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Which factors of the product are free. Frozen factors keep their value
/// through retraction and carry no tangent component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorMask {
    pub precoder: bool,
    pub phases: bool,
    pub bs_positions: bool,
    pub irs_positions: bool,
}

impl FactorMask {
    pub const ALL: FactorMask = FactorMask {
        precoder: true,
        phases: true,
        bs_positions: true,
        irs_positions: true,
    };
}

impl Default for FactorMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// A point `(W, φ, o, p)` of the product manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationPoint {
    /// Precoder, `M × K`.
    pub w: CMatrix,
    /// IRS phase vector, length `N`.
    pub phi: CVector,
    /// BS position pre-image, length `M`.
    pub o: RVector,
    /// IRS position pre-image, length `2N` (x/y interleaved per element).
    pub p: RVector,
}

/// A tangent (or ambient) direction with the same four factors as a point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentDirection {
    pub w: CMatrix,
    pub phi: CVector,
    pub o: RVector,
    pub p: RVector,
}

/// Factor sizes of a point or direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub w_rows: usize,
    pub w_cols: usize,
    pub phi: usize,
    pub o: usize,
    pub p: usize,
}

impl Shape {
    /// Real dimension of the ambient space.
    pub fn real_dim(&self) -> usize {
        2 * self.w_rows * self.w_cols + 2 * self.phi + self.o + self.p
    }
}

fn re_dot_c(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn dot_r(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl OptimizationPoint {
    pub fn shape(&self) -> Shape {
        Shape {
            w_rows: self.w.nrows(),
            w_cols: self.w.ncols(),
            phi: self.phi.len(),
            o: self.o.len(),
            p: self.p.len(),
        }
    }

    /// Ambient translation `X + h·d`, not retracted. Used by finite
    /// differences and distance checks.
    pub fn offset(&self, d: &TangentDirection, h: f64) -> OptimizationPoint {
        let hc = C64::new(h, 0.0);
        OptimizationPoint {
            w: &self.w + &d.w * hc,
            phi: &self.phi + &d.phi * hc,
            o: &self.o + &d.o * h,
            p: &self.p + &d.p * h,
        }
    }

    /// Ambient Euclidean distance over all four factors.
    pub fn distance(&self, other: &OptimizationPoint) -> f64 {
        let dw = (&self.w - &other.w).norm_squared();
        let dphi = (&self.phi - &other.phi).norm_squared();
        let d_o = (&self.o - &other.o).norm_squared();
        let dp = (&self.p - &other.p).norm_squared();
        (dw + dphi + d_o + dp).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.phi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.o.iter().all(|v| v.is_finite())
            && self.p.iter().all(|v| v.is_finite())
    }
}

impl TangentDirection {
    pub fn zeros(shape: Shape) -> Self {
        TangentDirection {
            w: CMatrix::zeros(shape.w_rows, shape.w_cols),
            phi: CVector::zeros(shape.phi),
            o: RVector::zeros(shape.o),
            p: RVector::zeros(shape.p),
        }
    }

    pub fn zeros_like(x: &OptimizationPoint) -> Self {
        Self::zeros(x.shape())
    }

    pub fn shape(&self) -> Shape {
        Shape {
            w_rows: self.w.nrows(),
            w_cols: self.w.ncols(),
            phi: self.phi.len(),
            o: self.o.len(),
            p: self.p.len(),
        }
    }

    /// Real-part metric. Panics on shape mismatch; use
    /// [`ProductManifold::inner_product`] for a checked version.
    pub fn dot(&self, other: &TangentDirection) -> f64 {
        assert_eq!(self.shape(), other.shape(), "tangent shape mismatch");
        re_dot_c(self.w.as_slice(), other.w.as_slice())
            + re_dot_c(self.phi.as_slice(), other.phi.as_slice())
            + dot_r(self.o.as_slice(), other.o.as_slice())
            + dot_r(self.p.as_slice(), other.p.as_slice())
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale_mut(&mut self, c: f64) {
        let cc = C64::new(c, 0.0);
        self.w *= cc;
        self.phi *= cc;
        self.o *= c;
        self.p *= c;
    }

    /// `self += a·x`.
    pub fn axpy(&mut self, a: f64, x: &TangentDirection) {
        let ac = C64::new(a, 0.0);
        self.w.zip_apply(&x.w, |s, v| *s += v * ac);
        self.phi.zip_apply(&x.phi, |s, v| *s += v * ac);
        self.o.axpy(a, &x.o, 1.0);
        self.p.axpy(a, &x.p, 1.0);
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.phi.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.o.iter().all(|v| v.is_finite())
            && self.p.iter().all(|v| v.is_finite())
    }

    /// Flatten into real coordinates `[Re W, Im W, Re φ, Im φ, o, p]`
    /// (column-major within `W`). The metric becomes the ordinary dot product.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.shape().real_dim());
        for z in self.w.iter() {
            out.push(z.re);
            out.push(z.im);
        }
        for z in self.phi.iter() {
            out.push(z.re);
            out.push(z.im);
        }
        out.extend(self.o.iter());
        out.extend(self.p.iter());
        out
    }

    /// Inverse of [`TangentDirection::to_real`].
    pub fn from_real(shape: Shape, v: &[f64]) -> Result<Self> {
        if v.len() != shape.real_dim() {
            return Err(Error::DimensionMismatch {
                what: "real coordinates",
                expected: shape.real_dim(),
                got: v.len(),
            });
        }
        let mut d = Self::zeros(shape);
        let mut i = 0;
        for z in d.w.iter_mut() {
            *z = C64::new(v[i], v[i + 1]);
            i += 2;
        }
        for z in d.phi.iter_mut() {
            *z = C64::new(v[i], v[i + 1]);
            i += 2;
        }
        for x in d.o.iter_mut() {
            *x = v[i];
            i += 1;
        }
        for x in d.p.iter_mut() {
            *x = v[i];
            i += 1;
        }
        Ok(d)
    }
}

impl Add for &TangentDirection {
    type Output = TangentDirection;
    fn add(self, rhs: &TangentDirection) -> TangentDirection {
        TangentDirection {
            w: &self.w + &rhs.w,
            phi: &self.phi + &rhs.phi,
            o: &self.o + &rhs.o,
            p: &self.p + &rhs.p,
        }
    }
}

impl Sub for &TangentDirection {
    type Output = TangentDirection;
    fn sub(self, rhs: &TangentDirection) -> TangentDirection {
        TangentDirection {
            w: &self.w - &rhs.w,
            phi: &self.phi - &rhs.phi,
            o: &self.o - &rhs.o,
            p: &self.p - &rhs.p,
        }
    }
}

impl Mul<f64> for &TangentDirection {
    type Output = TangentDirection;
    fn mul(self, c: f64) -> TangentDirection {
        let mut out = self.clone();
        out.scale_mut(c);
        out
    }
}

impl Neg for &TangentDirection {
    type Output = TangentDirection;
    fn neg(self) -> TangentDirection {
        self * -1.0
    }
}

/// Feasibility report for a point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDiagnostics {
    /// `Tr(W Wᴴ)`.
    pub power: f64,
    /// `|Tr(W Wᴴ) - P_t| / P_t`.
    pub power_residual: f64,
    /// `||φ_n| - 1|` per element.
    pub modulus_residuals: Vec<f64>,
    pub max_modulus_residual: f64,
    pub finite: bool,
}

impl PointDiagnostics {
    pub fn within_tolerance(&self) -> bool {
        self.finite
            && self.power_residual <= POWER_TOL
            && self.max_modulus_residual <= MODULUS_TOL
    }
}

/// The product manifold itself: carries the power budget and the set of
/// free factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductManifold {
    pub power: f64,
    pub active: FactorMask,
}

impl ProductManifold {
    pub fn new(power: f64) -> Self {
        ProductManifold {
            power,
            active: FactorMask::ALL,
        }
    }

    pub fn with_mask(power: f64, active: FactorMask) -> Self {
        ProductManifold { power, active }
    }

    fn check_shapes(&self, a: Shape, b: Shape) -> Result<()> {
        let pairs = [
            ("W rows", a.w_rows, b.w_rows),
            ("W cols", a.w_cols, b.w_cols),
            ("phi", a.phi, b.phi),
            ("o", a.o, b.o),
            ("p", a.p, b.p),
        ];
        for (what, expected, got) in pairs {
            if expected != got {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        Ok(())
    }

    /// `Re(Tr(aᴴ b) + aᴴ b) + aᵀ b + aᵀ b` over the four factors.
    pub fn inner_product(&self, a: &TangentDirection, b: &TangentDirection) -> Result<f64> {
        self.check_shapes(a.shape(), b.shape())?;
        Ok(a.dot(b))
    }

    pub fn norm(&self, a: &TangentDirection) -> f64 {
        a.norm()
    }

    /// Orthogonal projection of an ambient direction onto the tangent space
    /// at `x`. Frozen factors are zeroed.
    pub fn transport(&self, x: &OptimizationPoint, d: &TangentDirection) -> Result<TangentDirection> {
        self.check_shapes(x.shape(), d.shape())?;
        let mut out = d.clone();
        if self.active.precoder {
            let trace = x.w.norm_squared();
            if trace > 0.0 {
                let radial = re_dot_c(x.w.as_slice(), d.w.as_slice()) / trace;
                let c = C64::new(radial, 0.0);
                out.w.zip_apply(&x.w, |o, w| *o -= w * c);
            }
        } else {
            out.w.fill(C64::new(0.0, 0.0));
        }
        if self.active.phases {
            for (o, ph) in out.phi.iter_mut().zip(x.phi.iter()) {
                // Re(dφ* ⊙ φ)
                let radial = o.re * ph.re + o.im * ph.im;
                *o -= ph * radial;
            }
        } else {
            out.phi.fill(C64::new(0.0, 0.0));
        }
        if !self.active.bs_positions {
            out.o.fill(0.0);
        }
        if !self.active.irs_positions {
            out.p.fill(0.0);
        }
        Ok(out)
    }

    /// Metric-projection retraction `R_X(α d)`.
    pub fn retract(
        &self,
        x: &OptimizationPoint,
        d: &TangentDirection,
        alpha: f64,
    ) -> Result<OptimizationPoint> {
        self.check_shapes(x.shape(), d.shape())?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("step size {alpha} must be finite and >= 0")));
        }
        let ac = C64::new(alpha, 0.0);

        let w = if self.active.precoder {
            let v = &x.w + &d.w * ac;
            let nrm2 = v.norm_squared();
            if !(nrm2 > 0.0) || !nrm2.is_finite() {
                return Err(Error::DegenerateRetraction("precoder collapsed to zero"));
            }
            v * C64::new((self.power / nrm2).sqrt(), 0.0)
        } else {
            x.w.clone()
        };

        let phi = if self.active.phases {
            let mut v = x.phi.clone();
            for (z, dz) in v.iter_mut().zip(d.phi.iter()) {
                let s = *z + dz * ac;
                let m = s.norm();
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::DegenerateRetraction("phase entry collapsed to zero"));
                }
                *z = s / m;
            }
            v
        } else {
            x.phi.clone()
        };

        let o = if self.active.bs_positions {
            &x.o + &d.o * alpha
        } else {
            x.o.clone()
        };
        let p = if self.active.irs_positions {
            &x.p + &d.p * alpha
        } else {
            x.p.clone()
        };
        Ok(OptimizationPoint { w, phi, o, p })
    }

    pub fn validate_point(&self, x: &OptimizationPoint) -> PointDiagnostics {
        validate_point(x, self.power)
    }

    /// `(|Re Tr(Wᴴ dW)| / (‖W‖‖dW‖), max_n |Re(dφ_n* φ_n)|)`.
    pub fn tangency_residual(&self, x: &OptimizationPoint, d: &TangentDirection) -> (f64, f64) {
        let denom = x.w.norm() * d.w.norm();
        let w_res = if denom > 0.0 {
            re_dot_c(x.w.as_slice(), d.w.as_slice()).abs() / denom
        } else {
            0.0
        };
        let phi_res = x
            .phi
            .iter()
            .zip(d.phi.iter())
            .map(|(ph, dz)| (dz.re * ph.re + dz.im * ph.im).abs())
            .fold(0.0, f64::max);
        (w_res, phi_res)
    }
}

/// Power residual, modulus residuals and finiteness of a point.
pub fn validate_point(x: &OptimizationPoint, power: f64) -> PointDiagnostics {
    let trace = x.w.norm_squared();
    let modulus_residuals: Vec<f64> = x.phi.iter().map(|z| (z.norm() - 1.0).abs()).collect();
    let max_modulus_residual = modulus_residuals.iter().cloned().fold(0.0, f64::max);
    PointDiagnostics {
        power: trace,
        power_residual: (trace - power).abs() / power,
        modulus_residuals,
        max_modulus_residual,
        finite: x.is_finite(),
    }
}
