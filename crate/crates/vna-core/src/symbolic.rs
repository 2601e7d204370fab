//! Exact symbolic forms for local inverses and their averaged operators.
//!
//! Two families cover every recognized class: coordinate maps
//! w_i = u_i * z_{perm(i)}^{e_i} with root-of-unity factors (e_i = -1 only
//! on the annulus), and the two-branch substitution class
//! {(a z2^2, ±b sqrt(z1))} in two variables. Units are stored as exact
//! rational rotations so group tables compose without drift.

use crate::domain::Domain;
use crate::poly::{Poly, PolyMap};
use num_complex::Complex64;
use serde::Serialize;

/// e^{2 pi i num/den}, reduced, den > 0, 0 <= num < den.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Unit {
    pub num: i64,
    pub den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Unit {
    pub fn new(num: i64, den: i64) -> Unit {
        assert!(den != 0);
        let mut num = num.rem_euclid(den.abs());
        let den = den.abs();
        let g = gcd(num, den).max(1);
        num /= g;
        Unit { num, den: den / g }
    }

    pub fn one() -> Unit {
        Unit { num: 0, den: 1 }
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * self.num as f64 / self.den as f64)
    }

    pub fn mul(&self, other: &Unit) -> Unit {
        Unit::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    pub fn inv(&self) -> Unit {
        Unit::new(-self.num, self.den)
    }

    pub fn pow(&self, k: i64) -> Unit {
        Unit::new(self.num * k, self.den)
    }

    /// Multiplicative order.
    pub fn order(&self) -> i64 {
        self.den
    }

    /// Snap a numerical unit-modulus value to a rational rotation with
    /// denominator at most `max_den`.
    pub fn recognize(c: Complex64, max_den: i64, tol: f64) -> Option<Unit> {
        if (c.norm() - 1.0).abs() > tol {
            return None;
        }
        let angle = c.arg() / std::f64::consts::TAU;
        for den in 1..=max_den {
            let num = (angle * den as f64).round() as i64;
            let approx = num as f64 / den as f64;
            if (angle - approx).abs() * den as f64 * std::f64::consts::TAU < tol * den as f64
                && (angle - approx).abs() < tol
            {
                return Some(Unit::new(num, den));
            }
        }
        None
    }
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.num, self.den) {
            (0, _) => write!(f, "1"),
            (1, 2) => write!(f, "-1"),
            (1, 4) => write!(f, "i"),
            (3, 4) => write!(f, "-i"),
            (n, d) => write!(f, "e^(2πi·{}/{})", n, d),
        }
    }
}

/// A local inverse with an exact global formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SymbolicAction {
    /// w_i = units[i] * z_{perm[i]}^{exps[i]}
    Coordinate {
        perm: Vec<usize>,
        exps: Vec<i32>,
        units: Vec<Unit>,
    },
    /// the two-element class {(a z2^2, b sqrt(z1)), (a z2^2, -b sqrt(z1))}
    SwapSqrt { a: Unit, b: Unit },
}

impl SymbolicAction {
    pub fn identity(dim: usize) -> SymbolicAction {
        SymbolicAction::Coordinate {
            perm: (0..dim).collect(),
            exps: vec![1; dim],
            units: vec![Unit::one(); dim],
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                perm.iter().enumerate().all(|(i, &p)| p == i)
                    && exps.iter().all(|&e| e == 1)
                    && units.iter().all(|u| u.is_one())
            }
            SymbolicAction::SwapSqrt { .. } => false,
        }
    }

    /// Branch count of the class.
    pub fn multiplicity(&self) -> usize {
        match self {
            SymbolicAction::Coordinate { .. } => 1,
            SymbolicAction::SwapSqrt { .. } => 2,
        }
    }

    /// Evaluate the branches at a point (principal square root for the
    /// substitution class).
    pub fn branches(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                vec![perm
                    .iter()
                    .zip(exps.iter())
                    .zip(units.iter())
                    .map(|((&p, &e), u)| u.value() * z[p].powi(e))
                    .collect()]
            }
            SymbolicAction::SwapSqrt { a, b } => {
                let s = z[0].sqrt();
                let first = a.value() * z[1] * z[1];
                vec![
                    vec![first, b.value() * s],
                    vec![first, -(b.value() * s)],
                ]
            }
        }
    }

    /// Compose coordinate actions exactly: self after other.
    pub fn compose(&self, other: &SymbolicAction) -> Option<SymbolicAction> {
        match (self, other) {
            (
                SymbolicAction::Coordinate { perm: p1, exps: e1, units: u1 },
                SymbolicAction::Coordinate { perm: p2, exps: e2, units: u2 },
            ) => {
                // (self ∘ other)(z)_i = u1_i * (other(z)_{p1_i})^{e1_i}
                let d = p1.len();
                let mut perm = vec![0usize; d];
                let mut exps = vec![0i32; d];
                let mut units = vec![Unit::one(); d];
                for i in 0..d {
                    let j = p1[i];
                    perm[i] = p2[j];
                    exps[i] = e1[i] * e2[j];
                    units[i] = u1[i].mul(&u2[j].pow(e1[i] as i64));
                }
                Some(SymbolicAction::Coordinate { perm, exps, units })
            }
            _ => None,
        }
    }

    pub fn inverse(&self) -> SymbolicAction {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                let d = perm.len();
                let mut iperm = vec![0usize; d];
                let mut iexps = vec![0i32; d];
                let mut iunits = vec![Unit::one(); d];
                for i in 0..d {
                    // w_i = u_i z_{p_i}^{e_i}  =>  z_{p_i} = (w_i / u_i)^{1/e_i}
                    let j = perm[i];
                    iperm[j] = i;
                    iexps[j] = exps[i]; // e in {1,-1}: 1/e = e
                    iunits[j] = if exps[i] == 1 { units[i].inv() } else { units[i] };
                }
                SymbolicAction::Coordinate { perm: iperm, exps: iexps, units: iunits }
            }
            SymbolicAction::SwapSqrt { a, b } => {
                // inverse branches of (a z2^2, ±b sqrt(z1)): z1 = (w2/b)^2,
                // z2 = ±sqrt(w1/a); same family with a' = 1/b^2, b' = 1/sqrt(a)
                let a2 = b.pow(-2);
                let half = Unit::new(-a.num, a.den * 2);
                SymbolicAction::SwapSqrt { a: a2, b: half }
            }
        }
    }

    /// Action of the class operator E on a monomial: z^alpha maps to
    /// coeff * z^image, or to zero (even branches cancel).
    pub fn monomial_image(&self, alpha: &[i32]) -> Option<(Complex64, Vec<i32>)> {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                let d = perm.len();
                // h ∘ σ picks up units^alpha; Jσ = sgn(perm) * Π u_i e_i z_{p_i}^{e_i-1}
                let mut image = vec![0i32; d];
                let mut coeff = Complex64::new(1.0, 0.0);
                for i in 0..d {
                    let p = perm[i];
                    image[p] += exps[i] * alpha[i];
                    coeff *= units[i].value().powi(alpha[i]);
                }
                // Jacobian determinant
                let sgn = perm_sign(perm);
                let mut jac = Complex64::new(sgn, 0.0);
                for i in 0..d {
                    jac *= units[i].value() * Complex64::new(exps[i] as f64, 0.0);
                    if exps[i] == -1 {
                        image[perm[i]] += -2; // z^{-2} factor from d(1/z)
                    }
                }
                Some((coeff * jac, image))
            }
            SymbolicAction::SwapSqrt { a, b } => {
                let (al, be) = (alpha[0], alpha[1]);
                if be % 2 == 0 {
                    return None;
                }
                // E z1^al z2^be = -2 a^{al+1} b^{be+1} z1^{(be-1)/2} z2^{2al+1}
                let coeff = Complex64::new(-2.0, 0.0)
                    * a.pow((al + 1) as i64).value()
                    * b.pow((be + 1) as i64).value();
                Some((coeff, vec![(be - 1) / 2, 2 * al + 1]))
            }
        }
    }

    /// Exact admissibility on domains with closed-form geometry. None means
    /// the symbolic fast path does not apply and sampling must decide.
    pub fn admissible_exact(&self, domain: &Domain) -> Option<(bool, Option<Vec<Complex64>>)> {
        match (self, domain) {
            (SymbolicAction::Coordinate { exps, units, .. }, Domain::Polydisk { .. })
            | (SymbolicAction::Coordinate { exps, units, .. }, Domain::Ball { .. }) => {
                if exps.iter().any(|&e| e != 1) {
                    // 1/z leaves any bounded domain containing 0 arbitrarily;
                    // witness near a zero coordinate
                    return Some((false, None));
                }
                let _ = units;
                // modulus-preserving coordinate maps send both the polydisk
                // and the ball onto themselves
                Some((true, None))
            }
            (SymbolicAction::Coordinate { exps, .. }, Domain::Annulus { .. }) => {
                // |u z^{±1}| stays in (r, 1/r)
                let _ = exps;
                Some((true, None))
            }
            (SymbolicAction::SwapSqrt { .. }, Domain::Polydisk { .. }) => {
                // |a z2^2| < 1 and |b sqrt(z1)| < 1 on the bidisk
                Some((true, None))
            }
            (SymbolicAction::SwapSqrt { a, b }, Domain::Ball { .. }) => {
                // no longer inside: at z = (1/2, s) with s^2 < 3/4 and
                // s^4 + 1/2 > 1 the image leaves the ball
                let s = 0.86;
                let z = vec![Complex64::new(0.5, 0.0), Complex64::new(s, 0.0)];
                let w = vec![
                    a.value() * Complex64::new(s * s, 0.0),
                    b.value() * Complex64::new(0.5f64.sqrt(), 0.0),
                ];
                let _ = z;
                Some((false, Some(w)))
            }
            _ => None,
        }
    }

    /// Human-readable formula, e.g. `(-z1, i*z2)` or `(z2^2, ±√z1)`.
    pub fn formula(&self) -> String {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                let parts: Vec<String> = perm
                    .iter()
                    .zip(exps.iter())
                    .zip(units.iter())
                    .map(|((&p, &e), u)| {
                        let var = if perm.len() == 1 {
                            "z".to_string()
                        } else {
                            format!("z{}", p + 1)
                        };
                        let var = if e == 1 { var } else { format!("1/{}", var) };
                        if u.is_one() {
                            var
                        } else if *u == Unit::new(1, 2) {
                            format!("-{}", var)
                        } else {
                            format!("{}*{}", u, var)
                        }
                    })
                    .collect();
                format!("({})", parts.join(", "))
            }
            SymbolicAction::SwapSqrt { a, b } => {
                let first = if a.is_one() {
                    "z2^2".to_string()
                } else if *a == Unit::new(1, 2) {
                    "-z2^2".to_string()
                } else {
                    format!("{}*z2^2", a)
                };
                let second = if b.is_one() {
                    "±√z1".to_string()
                } else if *b == Unit::new(1, 2) {
                    "∓√z1".to_string()
                } else {
                    format!("±{}*√z1", b)
                };
                format!("({}, {})", first, second)
            }
        }
    }

    /// Verify Φ ∘ σ = Φ. Coordinate actions with nonnegative exponents are
    /// checked by exact polynomial composition; the rest numerically.
    pub fn verify(&self, map: &PolyMap, tol: f64) -> bool {
        match self {
            SymbolicAction::Coordinate { perm, exps, units } => {
                let d = map.dim_in();
                let laurent = map.components().iter().any(|p| p.is_laurent())
                    || exps.iter().any(|&e| e < 0);
                let subs: Vec<Poly> = (0..d)
                    .map(|i| {
                        Poly::monomial(
                            d,
                            laurent,
                            {
                                let mut e = vec![0i32; d];
                                e[perm[i]] = exps[i];
                                e
                            },
                            units[i].value(),
                        )
                        .unwrap()
                    })
                    .collect();
                map.components().iter().all(|phi| {
                    match phi.compose(&subs) {
                        Ok(composed) => {
                            let diff = match composed.sub(phi) {
                                Ok(d) => d,
                                Err(_) => return false,
                            };
                            diff.max_coeff() <= tol * (1.0 + phi.max_coeff())
                        }
                        Err(_) => false,
                    }
                })
            }
            SymbolicAction::SwapSqrt { .. } => {
                // only even powers of the square root occur in Φ ∘ σ, so a
                // branch-agnostic numerical check suffices
                let mut ok = true;
                for k in 0..12 {
                    let t = k as f64;
                    let z = vec![
                        Complex64::new(0.31 + 0.02 * t, 0.11 - 0.01 * t),
                        Complex64::new(0.44 - 0.015 * t, 0.07 + 0.02 * t),
                    ];
                    let fz = match map.eval(&z) {
                        Ok(v) => v,
                        Err(_) => return false,
                    };
                    for b in self.branches(&z) {
                        match map.eval(&b) {
                            Ok(fb) => {
                                let err: f64 = fb
                                    .iter()
                                    .zip(fz.iter())
                                    .map(|(x, y)| (x - y).norm())
                                    .fold(0.0, f64::max);
                                if err > tol * (1.0 + crate::linalg::norm2(&fz)) {
                                    ok = false;
                                }
                            }
                            Err(_) => return false,
                        }
                    }
                }
                ok
            }
        }
    }
}

fn perm_sign(perm: &[usize]) -> f64 {
    let mut p = perm.to_vec();
    let mut sign = 1.0;
    for i in 0..p.len() {
        while p[i] != i {
            let j = p[i];
            p.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

/// Recognize a singleton-orbit branch from the matched fiber pair
/// (z0, w0 = σ(z0)): find a coordinate action with w_i = u z_{p}^{e}.
pub fn recognize_coordinate(
    z0: &[Complex64],
    w0: &[Complex64],
    map: &PolyMap,
    allow_inversion: bool,
) -> Option<SymbolicAction> {
    let d = z0.len();
    let mut candidates: Vec<Vec<(usize, i32, Unit)>> = vec![Vec::new(); d];
    for i in 0..d {
        for p in 0..d {
            for &e in &[1i32, -1] {
                if e == -1 && !allow_inversion {
                    continue;
                }
                if z0[p].norm() == 0.0 {
                    continue;
                }
                let ratio = w0[i] / z0[p].powi(e);
                if let Some(u) = Unit::recognize(ratio, 24, 1e-7) {
                    candidates[i].push((p, e, u));
                }
            }
        }
        if candidates[i].is_empty() {
            return None;
        }
    }
    // try combinations that form a permutation, verify exactly
    fn rec(
        candidates: &[Vec<(usize, i32, Unit)>],
        i: usize,
        used: &mut Vec<bool>,
        acc: &mut Vec<(usize, i32, Unit)>,
        map: &PolyMap,
    ) -> Option<SymbolicAction> {
        if i == candidates.len() {
            let action = SymbolicAction::Coordinate {
                perm: acc.iter().map(|t| t.0).collect(),
                exps: acc.iter().map(|t| t.1).collect(),
                units: acc.iter().map(|t| t.2).collect(),
            };
            if action.verify(map, 1e-9) {
                return Some(action);
            }
            return None;
        }
        for &(p, e, u) in &candidates[i] {
            if used[p] {
                continue;
            }
            used[p] = true;
            acc.push((p, e, u));
            if let Some(a) = rec(candidates, i + 1, used, acc, map) {
                return Some(a);
            }
            acc.pop();
            used[p] = false;
        }
        None
    }
    let mut used = vec![false; d];
    let mut acc = Vec::new();
    rec(&candidates, 0, &mut used, &mut acc, map)
}

/// Recognize a two-element orbit as a sqrt-substitution class from the
/// matched pair of partner points at z0.
pub fn recognize_swap_sqrt(
    z0: &[Complex64],
    w_plus: &[Complex64],
    w_minus: &[Complex64],
    map: &PolyMap,
) -> Option<SymbolicAction> {
    if z0.len() != 2 {
        return None;
    }
    // branches share the first coordinate and differ by a sign in the second
    if (w_plus[0] - w_minus[0]).norm() > 1e-8 {
        return None;
    }
    if (w_plus[1] + w_minus[1]).norm() > 1e-8 {
        return None;
    }
    if z0[1].norm() == 0.0 || z0[0].norm() == 0.0 {
        return None;
    }
    let a = Unit::recognize(w_plus[0] / (z0[1] * z0[1]), 24, 1e-7)?;
    // either branch may be the principal root
    for w in [w_plus, w_minus] {
        let s = z0[0].sqrt();
        if let Some(b) = Unit::recognize(w[1] / s, 24, 1e-7) {
            let action = SymbolicAction::SwapSqrt { a, b };
            if action.verify(map, 1e-9) {
                return Some(action);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::PolyMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_arithmetic() {
        let i = Unit::new(1, 4);
        assert_eq!(i.mul(&i), Unit::new(1, 2));
        assert_eq!(i.pow(4), Unit::one());
        assert_eq!(i.inv(), Unit::new(3, 4));
        assert_eq!(i.order(), 4);
        assert!((i.value() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn recognize_units() {
        assert_eq!(Unit::recognize(c(0.0, 1.0), 8, 1e-9), Some(Unit::new(1, 4)));
        assert_eq!(Unit::recognize(c(-1.0, 0.0), 8, 1e-9), Some(Unit::new(1, 2)));
        assert_eq!(Unit::recognize(c(0.5, 0.0), 8, 1e-9), None);
    }

    #[test]
    fn coordinate_compose_and_inverse() {
        // swap followed by sign flip
        let swap = SymbolicAction::Coordinate {
            perm: vec![1, 0],
            exps: vec![1, 1],
            units: vec![Unit::one(), Unit::one()],
        };
        let flip = SymbolicAction::Coordinate {
            perm: vec![0, 1],
            exps: vec![1, 1],
            units: vec![Unit::new(1, 2), Unit::one()],
        };
        let ab = flip.compose(&swap).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let b1 = ab.branches(&z)[0].clone();
        let manual = flip.branches(&swap.branches(&z)[0])[0].clone();
        assert!(crate::linalg::dist2(&b1, &manual) < 1e-14);
        let inv = ab.inverse();
        let round = inv.compose(&ab).unwrap();
        assert!(round.is_identity());
    }

    #[test]
    fn recognize_sign_flip_branch() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let z0 = [c(0.4, 0.1), c(0.5, -0.3)];
        let w0 = [z0[0], -z0[1]];
        let a = recognize_coordinate(&z0, &w0, &map, false).unwrap();
        assert!(!a.is_identity());
        assert!(a.verify(&map, 1e-10));
        assert_eq!(a.formula(), "(z1, -z2)");
    }

    #[test]
    fn recognize_swap_class() {
        let map = PolyMap::parse(&["z1*z2^2", "z1+z2^2"], 2, false).unwrap();
        let z0 = [c(0.4, 0.1), c(0.5, -0.3)];
        let s = z0[0].sqrt();
        let wp = [z0[1] * z0[1], s];
        let wm = [z0[1] * z0[1], -s];
        let a = recognize_swap_sqrt(&z0, &wp, &wm, &map).unwrap();
        assert_eq!(a, SymbolicAction::SwapSqrt { a: Unit::one(), b: Unit::one() });
        assert_eq!(a.multiplicity(), 2);
    }

    #[test]
    fn swap_sqrt_monomial_action() {
        // oracle: substitute into (z2/√z1)(-f(z2²,√z1)+f(z2²,-√z1));
        // even powers of √z1 cancel, odd powers survive with factor -2
        let a = SymbolicAction::SwapSqrt { a: Unit::one(), b: Unit::one() };
        assert_eq!(a.monomial_image(&[2, 4]), None);
        let (coef, img) = a.monomial_image(&[1, 3]).unwrap();
        assert!((coef - c(-2.0, 0.0)).norm() < 1e-14);
        assert_eq!(img, vec![1, 3]);
        let (_, img2) = a.monomial_image(&[2, 1]).unwrap();
        assert_eq!(img2, vec![0, 5]);
    }

    #[test]
    fn inversion_action_on_annulus() {
        // sigma(z) = 1/z: E z^n = -z^{-n-2}
        let inv = SymbolicAction::Coordinate {
            perm: vec![0],
            exps: vec![-1],
            units: vec![Unit::one()],
        };
        let (coef, img) = inv.monomial_image(&[3]).unwrap();
        assert!((coef - c(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(img, vec![-5]);
        let annulus = Domain::annulus(0.5).unwrap();
        assert_eq!(inv.admissible_exact(&annulus), Some((true, None)));
    }

    #[test]
    fn swap_sqrt_admissibility_by_domain() {
        let a = SymbolicAction::SwapSqrt { a: Unit::one(), b: Unit::one() };
        assert_eq!(a.admissible_exact(&Domain::polydisk(2)).unwrap().0, true);
        let (ok, witness) = a.admissible_exact(&Domain::ball(2)).unwrap();
        assert!(!ok);
        // the witness image really leaves the ball
        let w = witness.unwrap();
        assert!(w.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1.0);
    }

    #[test]
    fn jacobian_factor_in_monomial_image() {
        // sigma = (z2, z1): E h = h(z2, z1) * (-1)
        let swap = SymbolicAction::Coordinate {
            perm: vec![1, 0],
            exps: vec![1, 1],
            units: vec![Unit::one(), Unit::one()],
        };
        let (coef, img) = swap.monomial_image(&[2, 5]).unwrap();
        assert!((coef - c(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(img, vec![5, 2]);
    }
}
