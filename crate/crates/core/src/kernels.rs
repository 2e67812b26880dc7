//! Radial kernels and their translate derivatives.
//!
//! A kernel is a radial profile `φ` plus a shape parameter `ε`; the functions
//! that matter downstream are kernel *translates* `ψ_c(x) = φ(ε‖x − c‖)` and
//! their first and second partials in a coordinate direction, which form the
//! right-hand sides of the local weight systems. Partials are closed-form:
//! differencing them numerically at stencil scale would lose half the digits
//! the weight solves need.

use crate::error::{Error, Result};

/// Coordinate axis of a partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Differential operator applied to a kernel translate (or a field).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    /// Point evaluation (identity operator).
    Value,
    /// `∂/∂axis`.
    First(Axis),
    /// `∂²/∂axis²`.
    Second(Axis),
}

/// Supported radial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// Inverse multiquadric `1/√(1+r²)`.
    Imq,
    /// Gaussian `exp(−r²)`.
    Ga,
    /// Multiquadric `√(1+r²)`.
    Mq,
    /// Cubic `r³`.
    Cubic,
    /// Thin-plate spline `r² ln r`.
    Tps,
}

impl KernelFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "imq" => Ok(Self::Imq),
            "ga" | "gauss" | "gaussian" => Ok(Self::Ga),
            "mq" => Ok(Self::Mq),
            "cubic" => Ok(Self::Cubic),
            "tps" => Ok(Self::Tps),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Imq => "imq",
            Self::Ga => "ga",
            Self::Mq => "mq",
            Self::Cubic => "cubic",
            Self::Tps => "tps",
        }
    }

    /// True for profiles whose kernel matrices are symmetric positive
    /// definite on distinct points; the conditionally positive definite
    /// profiles (mq, cubic, tps) produce symmetric indefinite matrices.
    pub fn positive_definite(self) -> bool {
        matches!(self, Self::Imq | Self::Ga)
    }

    /// Stable numeric tag used by the model file format.
    pub fn id(self) -> u8 {
        match self {
            Self::Imq => 0,
            Self::Ga => 1,
            Self::Mq => 2,
            Self::Cubic => 3,
            Self::Tps => 4,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Ok(match id {
            0 => Self::Imq,
            1 => Self::Ga,
            2 => Self::Mq,
            3 => Self::Cubic,
            4 => Self::Tps,
            other => return Err(Error::ModelFormat(format!("unknown kernel id {other}"))),
        })
    }
}

/// A radial profile with its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    eps: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidShapeParameter(eps));
        }
        Ok(Self { family, eps })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Profile value `φ(r)` at the *pre-scaled* radius `r = ε·distance`.
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self.family {
            KernelFamily::Imq => 1.0 / (1.0 + r * r).sqrt(),
            KernelFamily::Ga => (-(r * r)).exp(),
            KernelFamily::Mq => (1.0 + r * r).sqrt(),
            KernelFamily::Cubic => r * r * r,
            KernelFamily::Tps => {
                if r == 0.0 {
                    0.0
                } else {
                    r * r * r.ln()
                }
            }
        }
    }

    /// Translate value `ψ_c(x) = φ(ε‖x − c‖)`.
    pub fn value(&self, center: &[f64; 3], x: &[f64; 3]) -> f64 {
        let d2 = dist2(center, x);
        self.eval(self.eps * d2.sqrt())
    }

    /// Applies `deriv` (with respect to `x`) to the translate `ψ_c` and
    /// evaluates at `x`.
    ///
    /// The piecewise-smooth profiles have removable limits at the center for
    /// everything except the thin-plate spline's second derivative, which is
    /// genuinely singular there and reported as [`Error::InvalidDerivative`].
    pub fn partial(&self, center: &[f64; 3], x: &[f64; 3], deriv: Deriv) -> Result<f64> {
        let axis = match deriv {
            Deriv::Value => return Ok(self.value(center, x)),
            Deriv::First(a) | Deriv::Second(a) => a,
        };
        let e = self.eps;
        let e2 = e * e;
        let u = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
        let d2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let ui = u[axis.index()];
        let first = matches!(deriv, Deriv::First(_));

        let v = match self.family {
            KernelFamily::Imq => {
                let q = 1.0 + e2 * d2;
                if first {
                    -e2 * ui * q.powf(-1.5)
                } else {
                    -e2 * q.powf(-1.5) + 3.0 * e2 * e2 * ui * ui * q.powf(-2.5)
                }
            }
            KernelFamily::Ga => {
                let g = (-e2 * d2).exp();
                if first {
                    -2.0 * e2 * ui * g
                } else {
                    (-2.0 * e2 + 4.0 * e2 * e2 * ui * ui) * g
                }
            }
            KernelFamily::Mq => {
                let q = 1.0 + e2 * d2;
                if first {
                    e2 * ui / q.sqrt()
                } else {
                    e2 / q.sqrt() - e2 * e2 * ui * ui * q.powf(-1.5)
                }
            }
            KernelFamily::Cubic => {
                let d = d2.sqrt();
                let e3 = e2 * e;
                if first {
                    3.0 * e3 * d * ui
                } else if d == 0.0 {
                    0.0
                } else {
                    3.0 * e3 * (d + ui * ui / d)
                }
            }
            KernelFamily::Tps => {
                let d = d2.sqrt();
                if d == 0.0 {
                    if first {
                        0.0
                    } else {
                        return Err(Error::InvalidDerivative(
                            "thin-plate spline second derivative is singular at the center",
                        ));
                    }
                } else {
                    let ln_ed = (e * d).ln();
                    if first {
                        e2 * ui * (2.0 * ln_ed + 1.0)
                    } else {
                        e2 * (2.0 * ln_ed + 1.0) + 2.0 * e2 * ui * ui / d2
                    }
                }
            }
        };
        Ok(v)
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}
