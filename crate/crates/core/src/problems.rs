//! Parametric problem catalog.
//!
//! Every problem is an affine-parametric elliptic operator
//! `L(μ) = Σ_q θ_q(μ) · L_q` with `Q_a = 3` terms, each term a sum of *atoms*
//! `scale · w(x) · ∂`, where `w` is a coordinate weight and `∂` a value or
//! second-derivative operator. The same atom table drives discrete assembly
//! (weights times differentiation-matrix rows) and the manufactured
//! right-hand sides (weights times exact derivatives of a chosen solution),
//! so the two can never drift apart.
//!
//! Dirichlet data is imposed on boundary rows as the identity; the reduced
//! stage uses fixed homogeneous-boundary forcings (`Q_f = 1`).

use crate::error::{Error, Result};
use crate::geometry::DomainKind;
use crate::kernels::{Axis, Deriv};

/// Parameter-dependent scalar coefficient of an operator term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffFn {
    One,
    Mu1,
    Mu2,
}

impl CoeffFn {
    pub fn eval(self, mu: [f64; 2]) -> f64 {
        match self {
            CoeffFn::One => 1.0,
            CoeffFn::Mu1 => mu[0],
            CoeffFn::Mu2 => mu[1],
        }
    }

    pub fn id(self) -> u8 {
        match self {
            CoeffFn::One => 0,
            CoeffFn::Mu1 => 1,
            CoeffFn::Mu2 => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Ok(match id {
            0 => CoeffFn::One,
            1 => CoeffFn::Mu1,
            2 => CoeffFn::Mu2,
            other => return Err(Error::ModelFormat(format!("unknown coefficient id {other}"))),
        })
    }
}

/// Spatial weight multiplying an atom: constant or one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialWeight {
    One,
    Coord(Axis),
}

impl SpatialWeight {
    pub fn eval(self, p: &[f64; 3]) -> f64 {
        match self {
            SpatialWeight::One => 1.0,
            SpatialWeight::Coord(a) => p[a.index()],
        }
    }
}

/// One `scale · w(x) · ∂` contribution to an operator term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub scale: f64,
    pub weight: SpatialWeight,
    pub deriv: Deriv,
}

/// One affine operator term: a parameter coefficient times a sum of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: CoeffFn,
    pub atoms: Vec<Atom>,
}

/// Fixed forcing used by the reduced stage (homogeneous Dirichlet data).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forcing {
    /// `−10 sin(8 x (y − 1))`
    SinSheet2d,
    /// `exp(4 x y)`
    ExpXy,
    /// `−10 sin(8 x (y − 1) z)`
    SinSheet3d,
    /// `exp(4 x y z)`
    ExpXyz,
}

impl Forcing {
    pub fn eval(self, p: &[f64; 3]) -> f64 {
        let [x, y, z] = *p;
        match self {
            Forcing::SinSheet2d => -10.0 * (8.0 * x * (y - 1.0)).sin(),
            Forcing::ExpXy => (4.0 * x * y).exp(),
            Forcing::SinSheet3d => -10.0 * (8.0 * x * (y - 1.0) * z).sin(),
            Forcing::ExpXyz => (4.0 * x * y * z).exp(),
        }
    }
}

/// A parametric problem: domain, parameter box, affine terms, reduced-stage
/// forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: &'static str,
    pub domain: DomainKind,
    /// `[[lo₁, hi₁], [lo₂, hi₂]]` parameter box.
    pub param_box: [[f64; 2]; 2],
    pub terms: Vec<Term>,
    pub forcing: Forcing,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn qa(&self) -> usize {
        self.terms.len()
    }

    /// Affine coefficient vector `θ(μ)`.
    pub fn coeff_values(&self, mu: [f64; 2]) -> Vec<f64> {
        self.terms.iter().map(|t| t.coeff.eval(mu)).collect()
    }

    /// Center of the parameter box.
    pub fn mu_center(&self) -> [f64; 2] {
        [
            0.5 * (self.param_box[0][0] + self.param_box[0][1]),
            0.5 * (self.param_box[1][0] + self.param_box[1][1]),
        ]
    }

    /// Distinct derivative operators used across all terms, in stable order.
    pub fn operator_derivs(&self) -> Vec<Deriv> {
        let mut out: Vec<Deriv> = Vec::new();
        for t in &self.terms {
            for a in &t.atoms {
                if !out.contains(&a.deriv) {
                    out.push(a.deriv);
                }
            }
        }
        out
    }

    pub fn rb_forcing(&self, p: &[f64; 3]) -> f64 {
        self.forcing.eval(p)
    }

    /// All built-in problems.
    pub fn catalog() -> Vec<Problem> {
        use Axis::{X, Y, Z};
        let atom = |scale: f64, weight: SpatialWeight, deriv: Deriv| Atom { scale, weight, deriv };
        let one = SpatialWeight::One;
        let coord = SpatialWeight::Coord;

        vec![
            // −u_xx − μ¹ u_yy − μ² u on the 2D domain.
            Problem {
                name: "awave2d",
                domain: DomainKind::Flower2d,
                param_box: [[0.1, 4.0], [0.0, 2.0]],
                terms: vec![
                    Term {
                        coeff: CoeffFn::One,
                        atoms: vec![atom(-1.0, one, Deriv::Second(X))],
                    },
                    Term {
                        coeff: CoeffFn::Mu1,
                        atoms: vec![atom(-1.0, one, Deriv::Second(Y))],
                    },
                    Term {
                        coeff: CoeffFn::Mu2,
                        atoms: vec![atom(-1.0, one, Deriv::Value)],
                    },
                ],
                forcing: Forcing::SinSheet2d,
            },
            // (1 + μ¹x) u_xx + (1 + μ²y) u_yy on the 2D domain.
            Problem {
                name: "diff2d",
                domain: DomainKind::Flower2d,
                param_box: [[-0.99, 0.99], [-0.99, 0.99]],
                terms: vec![
                    Term {
                        coeff: CoeffFn::One,
                        atoms: vec![
                            atom(1.0, one, Deriv::Second(X)),
                            atom(1.0, one, Deriv::Second(Y)),
                        ],
                    },
                    Term {
                        coeff: CoeffFn::Mu1,
                        atoms: vec![atom(1.0, coord(X), Deriv::Second(X))],
                    },
                    Term {
                        coeff: CoeffFn::Mu2,
                        atoms: vec![atom(1.0, coord(Y), Deriv::Second(Y))],
                    },
                ],
                forcing: Forcing::ExpXy,
            },
            // −u_xx − μ¹ u_yy − u_zz − μ² u on the 3D domain.
            Problem {
                name: "awave3d",
                domain: DomainKind::Blob3d,
                param_box: [[0.1, 4.0], [0.0, 2.0]],
                terms: vec![
                    Term {
                        coeff: CoeffFn::One,
                        atoms: vec![
                            atom(-1.0, one, Deriv::Second(X)),
                            atom(-1.0, one, Deriv::Second(Z)),
                        ],
                    },
                    Term {
                        coeff: CoeffFn::Mu1,
                        atoms: vec![atom(-1.0, one, Deriv::Second(Y))],
                    },
                    Term {
                        coeff: CoeffFn::Mu2,
                        atoms: vec![atom(-1.0, one, Deriv::Value)],
                    },
                ],
                forcing: Forcing::SinSheet3d,
            },
            // (1 + μ¹x) u_xx + (1 + μ²y) u_yy + z u_zz on the 3D domain.
            Problem {
                name: "diff3d",
                domain: DomainKind::Blob3d,
                param_box: [[-0.99, 0.99], [-0.99, 0.99]],
                terms: vec![
                    Term {
                        coeff: CoeffFn::One,
                        atoms: vec![
                            atom(1.0, one, Deriv::Second(X)),
                            atom(1.0, one, Deriv::Second(Y)),
                            atom(1.0, coord(Z), Deriv::Second(Z)),
                        ],
                    },
                    Term {
                        coeff: CoeffFn::Mu1,
                        atoms: vec![atom(1.0, coord(X), Deriv::Second(X))],
                    },
                    Term {
                        coeff: CoeffFn::Mu2,
                        atoms: vec![atom(1.0, coord(Y), Deriv::Second(Y))],
                    },
                ],
                forcing: Forcing::ExpXyz,
            },
        ]
    }

    pub fn by_name(name: &str) -> Result<Problem> {
        Self::catalog()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownProblem(name.to_string()))
    }
}

/// Closed-form solutions used to manufacture right-hand sides for truth-solver
/// verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// Product of sines: infinitely smooth, resolved everywhere.
    Trig,
    /// Sharp Gaussian peak plus a polynomial: stresses local resolution.
    Peaks,
}

impl ManufacturedCase {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "trig" | "test1" | "1" => Ok(Self::Trig),
            "peaks" | "test2" | "2" => Ok(Self::Peaks),
            other => Err(Error::Config(format!("unknown manufactured case {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Trig => "trig",
            Self::Peaks => "peaks",
        }
    }

    /// Exact solution value.
    pub fn solution(self, dim: usize, p: &[f64; 3]) -> f64 {
        use std::f64::consts::PI;
        let [x, y, z] = *p;
        match (self, dim) {
            (Self::Trig, 2) => (PI * x).sin() * (PI * y).sin(),
            (Self::Trig, 3) => (PI * x).sin() * (PI * y).sin() * (PI * z).sin(),
            (Self::Peaks, 2) => (-20.0 * (x * x + y * y)).exp() - x * x + y * y * y,
            (Self::Peaks, 3) => {
                (-20.0 * (x * x + y * y + z * z)).exp() - x * x + y * y * y - z * z
            }
            _ => panic!("manufactured cases are 2D or 3D"),
        }
    }

    /// Exact second partial `∂²u/∂axis²`.
    pub fn second(self, dim: usize, p: &[f64; 3], axis: Axis) -> f64 {
        use std::f64::consts::PI;
        let [x, y, z] = *p;
        match (self, dim) {
            (Self::Trig, _) => -PI * PI * self.solution(dim, p),
            (Self::Peaks, 2) => {
                let g = (-20.0 * (x * x + y * y)).exp();
                match axis {
                    Axis::X => (-40.0 + 1600.0 * x * x) * g - 2.0,
                    Axis::Y => (-40.0 + 1600.0 * y * y) * g + 6.0 * y,
                    Axis::Z => 0.0,
                }
            }
            (Self::Peaks, 3) => {
                let g = (-20.0 * (x * x + y * y + z * z)).exp();
                match axis {
                    Axis::X => (-40.0 + 1600.0 * x * x) * g - 2.0,
                    Axis::Y => (-40.0 + 1600.0 * y * y) * g + 6.0 * y,
                    Axis::Z => (-40.0 + 1600.0 * z * z) * g - 2.0,
                }
            }
            _ => panic!("manufactured cases are 2D or 3D"),
        }
    }

    /// Applies one derivative operator to the exact solution.
    pub fn apply_deriv(self, dim: usize, p: &[f64; 3], deriv: Deriv) -> f64 {
        match deriv {
            Deriv::Value => self.solution(dim, p),
            Deriv::Second(a) => self.second(dim, p, a),
            Deriv::First(_) => unreachable!("catalog problems use value and second derivatives"),
        }
    }
}

/// Right-hand side manufactured so the exact solution of `L(μ) u = f` is
/// `case.solution`: the strong operator applied through the same atom table
/// the discrete assembly uses.
pub fn manufactured_rhs(problem: &Problem, case: ManufacturedCase, mu: [f64; 2], p: &[f64; 3]) -> f64 {
    let dim = problem.dim();
    let mut f = 0.0;
    for term in &problem.terms {
        let theta = term.coeff.eval(mu);
        if theta == 0.0 {
            continue;
        }
        let mut lu = 0.0;
        for a in &term.atoms {
            lu += a.scale * a.weight.eval(p) * case.apply_deriv(dim, p, a.deriv);
        }
        f += theta * lu;
    }
    f
}
