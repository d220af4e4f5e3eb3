use nlsx::symmetry::{GroupElement, Internal, Mat3};
use rand::Rng;
use std::f64::consts::PI;

/// Uniform random rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let mut q = [0.0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let n: f64 = q.iter().map(|x| x * x).sum();
        if n > 1e-3 && n < 1.0 {
            let s = n.sqrt();
            for x in q.iter_mut() {
                *x /= s;
            }
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Random element of `O(3) ⊕ O(2)`.
pub fn random_element<R: Rng>(rng: &mut R) -> GroupElement {
    let mut m = random_rotation(rng);
    if rng.gen_bool(0.5) {
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
    let r = rng.gen_range(0.0..2.0 * PI);
    let internal = if rng.gen_bool(0.5) { Internal::Phase(r) } else { Internal::ConjThenPhase(r) };
    GroupElement::new(m, internal).unwrap()
}
