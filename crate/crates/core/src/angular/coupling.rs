use serde::{Deserialize, Serialize};

use super::{triangle, wigner_3j_zero, wigner_6j, wigner_9j, AngularError, HalfInt};

/// One coupled rotor-rotor channel `|(j1 j2) j12, l; J>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub j1: u32,
    pub j2: u32,
    pub j12: u32,
    pub l: u32,
    /// Asymptotic rotational energy in cm⁻¹.
    pub internal_energy: f64,
}

impl Channel {
    pub fn parity(&self) -> i32 {
        if (self.j1 + self.j2 + self.l) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn admits_total(&self, total_j: u32) -> bool {
        triangle(2 * self.j1 as i32, 2 * self.j2 as i32, 2 * self.j12 as i32)
            && triangle(2 * self.j12 as i32, 2 * self.l as i32, 2 * total_j as i32)
    }
}

fn hat(x: u32) -> f64 {
    ((2 * x + 1) as f64).sqrt()
}

fn h(x: u32) -> HalfInt {
    HalfInt::from(x)
}

/// Matrix element `<bra| A_{l1 l2 l} |ket>` within one `(J, parity)` block,
/// using the normalization documented in the module root.
pub fn coupling_coefficient(
    bra: &Channel,
    ket: &Channel,
    term: (u32, u32, u32),
    total_j: HalfInt,
) -> Result<f64, AngularError> {
    let (l1, l2, lam) = term;
    if !triangle(2 * l1 as i32, 2 * l2 as i32, 2 * lam as i32) {
        return Err(AngularError::InvalidTerm(l1, l2, lam));
    }
    if !total_j.is_integer() || total_j.twice() < 0 {
        return Err(AngularError::BlockMismatch(format!("total J = {total_j} must be a non-negative integer")));
    }
    let jt = (total_j.twice() / 2) as u32;
    if !bra.admits_total(jt) || !ket.admits_total(jt) {
        return Err(AngularError::BlockMismatch(format!("channel incompatible with J = {jt}")));
    }
    if bra.parity() != ket.parity() {
        return Err(AngularError::BlockMismatch("parity differs".into()));
    }
    if (bra.j1 + l1 + ket.j1) % 2 == 1 || (bra.j2 + l2 + ket.j2) % 2 == 1 || (bra.l + lam + ket.l) % 2 == 1 {
        return Ok(0.0);
    }

    let t1 = wigner_3j_zero(bra.j1, l1, ket.j1);
    let t2 = wigner_3j_zero(bra.j2, l2, ket.j2);
    let t3 = wigner_3j_zero(bra.l, lam, ket.l);
    if t1 == 0.0 || t2 == 0.0 || t3 == 0.0 {
        return Ok(0.0);
    }
    let six = wigner_6j(h(jt), h(bra.l), h(bra.j12), h(lam), h(ket.j12), h(ket.l))?;
    if six == 0.0 {
        return Ok(0.0);
    }
    let nine = wigner_9j([
        h(bra.j1),
        h(ket.j1),
        h(l1),
        h(bra.j2),
        h(ket.j2),
        h(l2),
        h(bra.j12),
        h(ket.j12),
        h(lam),
    ])?;
    if nine == 0.0 {
        return Ok(0.0);
    }
    let sign = if (bra.j1 + bra.j2 + ket.j12 + jt) % 2 == 0 { 1.0 } else { -1.0 };
    let hats = hat(bra.j1)
        * hat(ket.j1)
        * hat(bra.j2)
        * hat(ket.j2)
        * hat(bra.j12)
        * hat(ket.j12)
        * hat(bra.l)
        * hat(ket.l)
        * hat(l1)
        * hat(l2);
    Ok(sign * hats * t1 * t2 * t3 * six * nine)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(j1: u32, j2: u32, j12: u32, l: u32) -> Channel {
        Channel {
            j1,
            j2,
            j12,
            l,
            internal_energy: 0.0,
        }
    }

    #[test]
    fn isotropic_term_is_identity() {
        let chans = [ch(0, 0, 0, 2), ch(1, 0, 1, 1), ch(1, 0, 1, 3), ch(2, 0, 2, 2), ch(1, 1, 2, 2), ch(2, 2, 1, 3)];
        for a in &chans {
            for b in &chans {
                if !a.admits_total(2) || !b.admits_total(2) || a.parity() != b.parity() {
                    continue;
                }
                let v = coupling_coefficient(a, b, (0, 0, 0), HalfInt::int(2)).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-13, "{a:?} {b:?} {v}");
            }
        }
    }

    #[test]
    fn parity_zero_is_exact() {
        let a = ch(0, 0, 0, 1);
        let b = ch(2, 0, 2, 1);
        assert_eq!(coupling_coefficient(&a, &b, (1, 0, 1), HalfInt::int(1)).unwrap().to_bits(), 0);
    }

    #[test]
    fn mismatched_block_is_rejected() {
        let a = ch(0, 0, 0, 1);
        let b = ch(1, 0, 1, 1);
        assert!(coupling_coefficient(&a, &b, (1, 0, 1), HalfInt::int(1)).is_err());
        assert!(coupling_coefficient(&a, &a, (1, 0, 1), HalfInt::int(3)).is_err());
    }
}
