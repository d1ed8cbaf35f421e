//! Cat maps on the torus, their spectral data, and the quadratic Hamiltonians
//! whose time-one flows they are.

use crate::dd::Dd;
use crate::error::{CatError, Result};

/// Integer 2x2 matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sl2IntMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl Sl2IntMatrix {
    pub const IDENTITY: Sl2IntMatrix = Sl2IntMatrix { a: 1, b: 0, c: 0, d: 1 };
    pub const CAT: Sl2IntMatrix = Sl2IntMatrix { a: 2, b: 1, c: 1, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(CatError::NotUnimodular { det });
        }
        Ok(Sl2IntMatrix { a, b, c, d })
    }

    pub fn a(&self) -> i64 {
        self.a
    }
    pub fn b(&self) -> i64 {
        self.b
    }
    pub fn c(&self) -> i64 {
        self.c
    }
    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn entries_f64(&self) -> [f64; 4] {
        [self.a as f64, self.b as f64, self.c as f64, self.d as f64]
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > 2
    }

    pub fn inverse(&self) -> Self {
        Sl2IntMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn checked_mul(&self, o: &Self) -> Option<Self> {
        let e = |x: i64, y: i64, z: i64, w: i64| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
        Some(Sl2IntMatrix {
            a: e(self.a, o.a, self.b, o.c)?,
            b: e(self.a, o.b, self.b, o.d)?,
            c: e(self.c, o.a, self.d, o.c)?,
            d: e(self.c, o.b, self.d, o.d)?,
        })
    }

    /// `self^n`, or `None` on `i64` overflow.
    pub fn checked_pow(&self, n: u32) -> Option<Self> {
        let mut acc = Self::IDENTITY;
        for _ in 0..n {
            acc = acc.checked_mul(self)?;
        }
        Some(acc)
    }

    /// Image of a real vector, exact in double-double.
    pub fn apply_dd(&self, x: f64, y: f64) -> (Dd, Dd) {
        let [a, b, c, d] = self.entries_f64();
        (Dd::prod(a, x) + Dd::prod(b, y), Dd::prod(c, x) + Dd::prod(d, y))
    }
}

/// Point of the torus, coordinates kept in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    q: f64,
    p: f64,
}

impl TorusPoint {
    pub fn new(q: f64, p: f64) -> Self {
        TorusPoint { q: crate::dd::frac(q), p: crate::dd::frac(p) }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

pub fn cat_apply(m: &Sl2IntMatrix, pt: TorusPoint) -> TorusPoint {
    let (x, y) = m.apply_dd(pt.q, pt.p);
    TorusPoint::new(x.frac().to_f64(), y.frac().to_f64())
}

/// Expanding eigenvalue and unstable direction of a hyperbolic matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub lambda: f64,
    /// Angle of the unstable eigenvector, in `(-pi/2, pi/2)`.
    pub theta: f64,
    pub lyapunov: f64,
}

impl SpectralData {
    pub fn tan(&self) -> f64 {
        self.theta.tan()
    }

    /// `(cos^2 theta lambda^n + sin^2 theta lambda^-n, cos sin (lambda^n - lambda^-n))`.
    pub fn power_coefficients(&self, n: i32) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let l = self.lambda.powi(n);
        (c * c * l + s * s / l, c * s * (l - 1.0 / l))
    }
}

pub fn spectral_data(m: &Sl2IntMatrix) -> Result<SpectralData> {
    let t = m.trace();
    if t.abs() <= 2 {
        return Err(CatError::NonHyperbolic { trace: t });
    }
    if t < -2 {
        return Err(CatError::NegativeSpectrum { trace: t });
    }
    let tf = t as f64;
    let disc = (tf * tf - 4.0).sqrt();
    let lambda = 0.5 * (tf + disc);
    // (M - lambda I) v = 0 with v = (b, lambda - a); b != 0 for hyperbolic integer matrices.
    let lambda_minus_a = 0.5 * ((m.d - m.a) as f64 + disc);
    let theta = (lambda_minus_a / m.b as f64).atan();
    Ok(SpectralData { lambda, theta, lyapunov: lambda.ln() })
}

/// `H(x, xi) = alpha x^2 / 2 + gamma x xi + beta xi^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticHamiltonian {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl QuadraticHamiltonian {
    /// Generator `[[gamma, beta], [-alpha, -gamma]]`, row major.
    pub fn generator(&self) -> [f64; 4] {
        [self.gamma, self.beta, -self.alpha, -self.gamma]
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        0.5 * self.alpha * x * x + self.gamma * x * xi + 0.5 * self.beta * xi * xi
    }
}

/// The generator `m` with `exp(m) = M`, from the spectral projectors of `M`.
pub fn hamiltonian_from_matrix(m: &Sl2IntMatrix) -> Result<QuadraticHamiltonian> {
    let s = spectral_data(m)?;
    let inv = 1.0 / s.lambda;
    // log(lambda) (P+ - P-) = log(lambda) / (lambda - 1/lambda) * (M - M^-1)
    let k = s.lyapunov / (s.lambda - inv);
    let [a, b, c, d] = m.entries_f64();
    Ok(QuadraticHamiltonian { alpha: -2.0 * k * c, beta: 2.0 * k * b, gamma: k * (a - d) })
}

/// Entries of `exp(t m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCoefficients {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl FlowCoefficients {
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn compose(&self, o: &FlowCoefficients) -> FlowCoefficients {
        FlowCoefficients {
            t: self.t + o.t,
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// `exp(t m) = C(t) I + S(t) m` with `m^2 = mu^2 I` for traceless `m`.
pub fn flow_coefficients(h: &QuadraticHamiltonian, t: f64) -> FlowCoefficients {
    let mu2 = h.gamma * h.gamma - h.alpha * h.beta;
    let z = mu2 * t * t;
    let (ch, sh) = if z.abs() < 1e-10 {
        (1.0 + 0.5 * z, t * (1.0 + z / 6.0))
    } else if mu2 > 0.0 {
        let mu = mu2.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else {
        let w = (-mu2).sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    };
    FlowCoefficients {
        t,
        a: ch + sh * h.gamma,
        b: sh * h.beta,
        c: -sh * h.alpha,
        d: ch - sh * h.gamma,
    }
}

/// Time derivative of the flow entries, from `d/dt exp(tm) = m exp(tm)`.
pub fn flow_derivative(h: &QuadraticHamiltonian, f: &FlowCoefficients) -> [f64; 4] {
    [
        h.gamma * f.a + h.beta * f.c,
        h.gamma * f.b + h.beta * f.d,
        -h.alpha * f.a - h.gamma * f.c,
        -h.alpha * f.b - h.gamma * f.d,
    ]
}

pub fn ehrenfest_time(h: f64, lambda: f64) -> f64 {
    h.ln().abs() / (2.0 * lambda.ln())
}
