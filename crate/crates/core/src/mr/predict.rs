//! Harten's cell-average prediction and projection operators.
//!
//! A `Stencil` holds the 3x3 parent-level neighbourhood as `s[dj][di]` with
//! offsets `-1, 0, +1` mapped to indices `0, 1, 2`. Children are numbered
//! `a + 2b` where `a` (`b`) is 0 for the left (lower) half.

use crate::physics::ConservedState;

pub type Stencil = [[ConservedState; 3]; 3];

/// Child index for the `(a, b)` position.
#[inline]
pub fn child_index(a: usize, b: usize) -> usize {
    a + 2 * b
}

/// Tensor-product third-order prediction of the four children.
///
/// Exact for cell averages of polynomials of degree at most two in each
/// variable; the predicted children always average back to the parent.
pub fn predict(s: &Stencil) -> [ConservedState; 4] {
    let p = s[1][1];
    let gx = 0.125 * (s[1][2] - s[1][0]);
    let gy = 0.125 * (s[2][1] - s[0][1]);
    let gxy = (1.0 / 64.0) * (((s[2][2] - s[0][2]) - s[2][0]) + s[0][0]);
    let lo = p - gy;
    let hi = p + gy;
    [
        ((lo - gx) + gxy),
        ((lo + gx) - gxy),
        ((hi - gx) - gxy),
        ((hi + gx) + gxy),
    ]
}

/// Mean of the four children.
#[inline]
pub fn project(children: &[ConservedState; 4]) -> ConservedState {
    0.25 * (((children[0] + children[1]) + children[2]) + children[3])
}

/// `actual - predicted` for each child.
pub fn details(actual: &[ConservedState; 4], s: &Stencil) -> [ConservedState; 4] {
    let pred = predict(s);
    [
        actual[0] - pred[0],
        actual[1] - pred[1],
        actual[2] - pred[2],
        actual[3] - pred[3],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::NVAR;
    use proptest::prelude::*;

    fn scalar(v: f64) -> ConservedState {
        ConservedState::from_array([v; NVAR])
    }

    /// Exact average of `x^p y^q` over `[x0, x1] x [y0, y1]`.
    fn monomial_average(p: i32, q: i32, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let ix = (x1.powi(p + 1) - x0.powi(p + 1)) / ((p + 1) as f64 * (x1 - x0));
        let iy = (y1.powi(q + 1) - y0.powi(q + 1)) / ((q + 1) as f64 * (y1 - y0));
        ix * iy
    }

    fn stencil_for(f: impl Fn(f64, f64, f64, f64) -> f64, xc: f64, yc: f64, h: f64) -> Stencil {
        let mut s = [[ConservedState::ZERO; 3]; 3];
        for (dj, row) in s.iter_mut().enumerate() {
            for (di, v) in row.iter_mut().enumerate() {
                let x = xc + (di as f64 - 1.0) * h;
                let y = yc + (dj as f64 - 1.0) * h;
                *v = scalar(f(x - h / 2.0, x + h / 2.0, y - h / 2.0, y + h / 2.0));
            }
        }
        s
    }

    #[test]
    fn constant_field_reproduced() {
        let s = [[scalar(3.25); 3]; 3];
        for c in predict(&s) {
            assert_eq!(c, scalar(3.25));
        }
    }

    #[test]
    fn projection_of_children() {
        assert_eq!(project(&[scalar(7.0); 4]), scalar(7.0));
        let c = [scalar(1.0), scalar(2.0), scalar(3.0), scalar(4.0)];
        assert_eq!(project(&c).rho, 2.5);
    }

    #[test]
    fn exact_on_quadratics() {
        let (xc, yc, h) = (0.3, -0.55, 0.125);
        for (p, q) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2)] {
            let f = |x0, x1, y0, y1| monomial_average(p, q, x0, x1, y0, y1);
            let s = stencil_for(f, xc, yc, h);
            let pred = predict(&s);
            for b in 0..2 {
                for a in 0..2 {
                    let x0 = xc - h / 2.0 + a as f64 * h / 2.0;
                    let y0 = yc - h / 2.0 + b as f64 * h / 2.0;
                    let exact = monomial_average(p, q, x0, x0 + h / 2.0, y0, y0 + h / 2.0);
                    let got = pred[child_index(a, b)].rho;
                    assert!((got - exact).abs() < 1e-15, "x^{p} y^{q} child ({a},{b}): {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn linear_in_x_children() {
        // Parent [0, 1]: children average 0.25 and 0.75.
        let s = stencil_for(|x0, x1, _, _| 0.5 * (x0 + x1), 0.5, 0.5, 1.0);
        let pred = predict(&s);
        assert!((pred[0].rho - 0.25).abs() < 1e-15);
        assert!((pred[1].rho - 0.75).abs() < 1e-15);
        assert!((pred[2].rho - 0.25).abs() < 1e-15);
        assert!((pred[3].rho - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cubic_is_not_reproduced() {
        let (xc, yc, h) = (0.0, 0.0, 0.5);
        let f = |x0, x1, y0, y1| monomial_average(3, 0, x0, x1, y0, y1);
        let s = stencil_for(f, xc, yc, h);
        let pred = predict(&s);
        let exact = monomial_average(3, 0, -0.25, 0.0, -0.25, 0.0);
        assert!((pred[0].rho - exact).abs() > 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn predicted_children_average_to_parent(v in prop::array::uniform9(-10.0f64..10.0)) {
            let mut s = [[ConservedState::ZERO; 3]; 3];
            for k in 0..9 {
                s[k / 3][k % 3] = scalar(v[k]);
            }
            let mean = project(&predict(&s));
            let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            prop_assert!((mean.rho - v[4]).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn project_of_predict_is_identity(v in prop::array::uniform9(-10.0f64..10.0), p in -10.0f64..10.0) {
            let mut s = [[ConservedState::ZERO; 3]; 3];
            for k in 0..9 {
                s[k / 3][k % 3] = scalar(v[k]);
            }
            s[1][1] = scalar(p);
            let d = details(&predict(&s), &s);
            prop_assert!(d.iter().all(|c| c.rho == 0.0));
            prop_assert!((project(&predict(&s)).rho - p).abs() <= 4.0 * f64::EPSILON * 30.0);
        }
    }
}
