use serde::Serialize;

use crate::projgeom::{ProjPoint, C64};

/// Smooth test functions built from the Hermitian projector entries
/// `P_ij = p_i conj(p_j) / |p|^2`, which are 1-Lipschitz in the chordal
/// metric, together with degree-two products and the conic defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestFunction {
    /// `P_ii`
    Diag(usize),
    /// Real or imaginary part of `P_ij`, `i < j`.
    Off { i: usize, j: usize, imag: bool },
    /// `P_ii * P_jj`
    DiagProduct(usize, usize),
    /// Real or imaginary part of `P_ab * P_cd`.
    OffProduct { a: (usize, usize), b: (usize, usize), imag: bool },
    /// `|z^2 - xy| / |p|^2`
    ConicDefect,
}

fn projector(p: &ProjPoint) -> [[C64; 3]; 3] {
    let u = p.unit_lift();
    let mut m = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = u[i] * u[j].conj();
        }
    }
    m
}

impl TestFunction {
    pub fn eval(&self, p: &ProjPoint) -> f64 {
        let m = projector(p);
        match *self {
            TestFunction::Diag(i) => m[i][i].re,
            TestFunction::Off { i, j, imag } => pick(m[i][j], imag),
            TestFunction::DiagProduct(i, j) => m[i][i].re * m[j][j].re,
            TestFunction::OffProduct { a, b, imag } => pick(m[a.0][a.1] * m[b.0][b.1], imag),
            TestFunction::ConicDefect => {
                let u = p.unit_lift();
                (u[2] * u[2] - u[0] * u[1]).norm()
            }
        }
    }

    /// Chordal Lipschitz constant. Projector entries change by at most the
    /// operator norm of `P - Q`, which equals the chordal distance; products
    /// of two such entries pick up a factor 2; the conic form has operator
    /// norm 1 and the phase-aligned lifts differ by at most `sqrt 2` times
    /// the distance.
    pub fn lipschitz(&self) -> f64 {
        match self {
            TestFunction::Diag(_) | TestFunction::Off { .. } => 1.0,
            TestFunction::DiagProduct(..) | TestFunction::OffProduct { .. } => 2.0,
            TestFunction::ConicDefect => 2.0 * std::f64::consts::SQRT_2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Diag(i) => format!("P{i}{i}"),
            TestFunction::Off { i, j, imag } => format!("{}P{i}{j}", if *imag { "Im" } else { "Re" }),
            TestFunction::DiagProduct(i, j) => format!("P{i}{i}*P{j}{j}"),
            TestFunction::OffProduct { a, b, imag } => {
                format!("{}(P{}{}*P{}{})", if *imag { "Im" } else { "Re" }, a.0, a.1, b.0, b.1)
            }
            TestFunction::ConicDefect => "conic_defect".into(),
        }
    }
}

fn pick(c: C64, imag: bool) -> f64 {
    if imag {
        c.im
    } else {
        c.re
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestDictionary {
    functions: Vec<TestFunction>,
}

impl TestDictionary {
    /// The fixed 32-function dictionary.
    pub fn standard() -> Self {
        use TestFunction::*;
        let mut f = vec![Diag(0), Diag(1), Diag(2)];
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            f.push(Off { i, j, imag: false });
            f.push(Off { i, j, imag: true });
        }
        f.extend([DiagProduct(0, 1), DiagProduct(0, 2), DiagProduct(1, 2), DiagProduct(0, 0), DiagProduct(1, 1), DiagProduct(2, 2)]);
        // squares and mixed products of off-diagonal entries
        let pairs = [
            ((0, 1), (0, 1)),
            ((0, 2), (0, 2)),
            ((1, 2), (1, 2)),
            ((0, 1), (1, 2)),
            ((0, 2), (2, 1)),
            ((1, 0), (0, 2)),
            ((0, 1), (2, 2)),
            ((0, 2), (1, 1)),
        ];
        for (a, b) in pairs {
            f.push(OffProduct { a, b, imag: false });
            f.push(OffProduct { a, b, imag: true });
        }
        f.push(ConicDefect);
        debug_assert_eq!(f.len(), 32);
        Self { functions: f }
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}
