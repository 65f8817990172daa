use serde::{Deserialize, Serialize};

use crate::endo::{Family, HomPolyMap};
use crate::error::{Error, Result};
use crate::projgeom::{normalize, ProjPoint};

/// How forward orbits are advanced in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForwardPolicy {
    /// Plain evaluation.
    #[default]
    Plain,
    /// After each step, rebalance `(x, y, z) -> (s x, y / s, z)` so that
    /// `|x| = |y|`. The rescaling keeps `xy` and `z`, so the conic defect is
    /// untouched, and it shadows the invariant locus `|x| = |y|`, which is
    /// repelling in the radial direction and otherwise lost to rounding.
    /// Only valid for maps preserving that locus.
    EqualModulus,
}

/// True for maps of the form `[x^d : y^d : *]` plus the F_θ family, which
/// preserve `{|x| = |y|}`.
pub fn preserves_equal_modulus(map: &HomPolyMap) -> bool {
    if matches!(map.family(), Family::Ftheta { .. }) {
        return true;
    }
    let d = map.degree();
    let c = map.components();
    let pure = |k: usize, e: [u32; 3]| c[k].len() == 1 && c[k][0].exps == e && c[k][0].coeff.norm() == 1.0;
    pure(0, [d, 0, 0]) && pure(1, [0, d, 0])
}

pub fn forward_step(map: &HomPolyMap, p: &ProjPoint, policy: ForwardPolicy) -> Result<ProjPoint> {
    match policy {
        ForwardPolicy::Plain => Ok(map.eval(p)),
        ForwardPolicy::EqualModulus => {
            if !preserves_equal_modulus(map) {
                return Err(Error::UnsupportedMap(format!("{} does not preserve |x| = |y|", map.label())));
            }
            Ok(rebalance(&map.eval(p)))
        }
    }
}

/// `EqualModulus` when the map preserves `{|x| = |y|}` and `p` lies on it
/// (to relative `1e-9`), else `Plain`.
pub fn auto_policy(map: &HomPolyMap, p: &ProjPoint) -> ForwardPolicy {
    let [x, y, _] = p.coords();
    let (ax, ay) = (x.norm(), y.norm());
    if preserves_equal_modulus(map) && ax > 0.0 && (ax - ay).abs() <= 1e-9 * ax.max(ay) {
        ForwardPolicy::EqualModulus
    } else {
        ForwardPolicy::Plain
    }
}

/// Project onto `|x| = |y|` keeping `xy` and `z`; identity when `x` or `y`
/// vanishes.
pub fn rebalance(p: &ProjPoint) -> ProjPoint {
    let [x, y, z] = p.coords();
    let (ax, ay) = (x.norm(), y.norm());
    if ax == 0.0 || ay == 0.0 || ax == ay {
        return *p;
    }
    let s = (ay / ax).sqrt();
    normalize([x * s, y / s, z]).unwrap_or(*p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endo::{family_ftheta, power_map};
    use crate::projgeom::{conic_defect, C64};

    #[test]
    fn rebalance_keeps_defect() {
        let p = normalize([C64::new(1.0, 0.0), C64::new(0.3, 0.4), C64::new(0.2, -0.1)]).unwrap();
        let q = rebalance(&p);
        assert!((q.x().norm() - q.y().norm()).abs() < 1e-15);
        let u = p.unit_lift();
        let v = q.unit_lift();
        let prod_u = u[0] * u[1] / (u[2] * u[2]);
        let prod_v = v[0] * v[1] / (v[2] * v[2]);
        assert!((prod_u - prod_v).norm() < 1e-12);
        assert!(conic_defect(&q).is_finite());
    }

    #[test]
    fn policy_support() {
        let p = ProjPoint::real(1.0, 1.0, 1.0);
        assert!(forward_step(&power_map(2), &p, ForwardPolicy::EqualModulus).is_ok());
        assert!(forward_step(&family_ftheta(C64::new(0.2, 0.0)).unwrap(), &p, ForwardPolicy::EqualModulus).is_ok());
        let f0 = crate::endo::family_f0(
            vec![crate::endo::Monomial::real([2, 0, 0], 1.0), crate::endo::Monomial::real([0, 1, 1], 1.0)],
            vec![crate::endo::Monomial::real([0, 2, 0], 1.0)],
            2,
        )
        .unwrap();
        assert!(forward_step(&f0, &p, ForwardPolicy::EqualModulus).is_err());
    }
}
