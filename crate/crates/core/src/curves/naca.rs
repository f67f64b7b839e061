//! Four-digit NACA sections with unit chord, leading edge at the origin.

use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Thickness polynomial coefficients, open trailing edge.
const THICKNESS: [f64; 5] = [0.2969, -0.1260, -0.3516, 0.2843, -0.1015];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Upper,
    Lower,
}

/// Camber `m`, camber position `p` and thickness `t` decoded from a code like `2412`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NacaProfile<T> {
    pub max_camber: T,
    pub camber_position: T,
    pub thickness: T,
}

impl<T: Scalar> NacaProfile<T> {
    /// `None` for codes outside 0..=9999 or that the formulas cannot evaluate
    /// (zero thickness, or camber without a camber position).
    pub fn from_code(code: u16) -> Option<Self> {
        if code > 9999 {
            return None;
        }
        let m = code / 1000;
        let p = (code / 100) % 10;
        let t = code % 100;
        if t == 0 || (m > 0 && p == 0) {
            return None;
        }
        Some(Self {
            max_camber: T::lit(f64::from(m) / 100.0),
            camber_position: T::lit(f64::from(p) / 10.0),
            thickness: T::lit(f64::from(t) / 100.0),
        })
    }

    /// Half thickness at chord station `u²`; written in `u` so it stays smooth at the nose.
    pub fn half_thickness_u(&self, u: T) -> T {
        let u2 = u * u;
        let u4 = u2 * u2;
        let [a0, a1, a2, a3, a4] = THICKNESS.map(T::lit);
        T::lit(5.0) * self.thickness * (a0 * u + a1 * u2 + a2 * u4 + a3 * u4 * u2 + a4 * u4 * u4)
    }

    pub fn half_thickness(&self, x: T) -> T {
        self.half_thickness_u(x.max(T::zero()).sqrt())
    }

    /// Mean camber line height and slope at chord station `x`.
    pub fn camber(&self, x: T) -> (T, T) {
        let m = self.max_camber;
        let p = self.camber_position;
        if m == T::zero() {
            return (T::zero(), T::zero());
        }
        let two = T::lit(2.0);
        if x < p {
            let k = m / (p * p);
            (k * (two * p * x - x * x), two * k * (p - x))
        } else {
            let q = T::one() - p;
            let k = m / (q * q);
            (k * (T::one() - two * p + two * p * x - x * x), two * k * (p - x))
        }
    }

    /// Surface point at parameter `u ∈ [0, 1]`, chord station `x = u²`.
    pub fn surface_point_u(&self, u: T, surface: Surface) -> Point2<T> {
        let x = u * u;
        let yt = self.half_thickness_u(u);
        let (yc, slope) = self.camber(x);
        let theta = slope.atan();
        let (s, c) = theta.sin_cos();
        match surface {
            Surface::Upper => Point2::new(x - yt * s, yc + yt * c),
            Surface::Lower => Point2::new(x + yt * s, yc - yt * c),
        }
    }

    pub fn surface_point(&self, x: T, surface: Surface) -> Point2<T> {
        self.surface_point_u(x.max(T::zero()).sqrt(), surface)
    }

    /// Signed distance from `q` to one surface; positive outside the section.
    pub fn signed_distance_to(&self, q: Point2<T>, surface: Surface) -> T {
        let u = self.closest_parameter(q, surface);
        let c = self.surface_point_u(u, surface);
        let d = q.distance(c);
        if d == T::zero() {
            return d;
        }
        let tangent = self.tangent_u(u, surface);
        let outward = match surface {
            Surface::Upper => tangent.perp(),
            Surface::Lower => -tangent.perp(),
        };
        if (q - c).dot(outward) < T::zero() {
            -d
        } else {
            d
        }
    }

    /// Signed distance to whichever surface is nearer.
    pub fn signed_distance(&self, q: Point2<T>) -> T {
        let up = self.signed_distance_to(q, Surface::Upper);
        let lo = self.signed_distance_to(q, Surface::Lower);
        if up.abs() <= lo.abs() {
            up
        } else {
            lo
        }
    }

    fn step(&self) -> T {
        T::epsilon().cbrt()
    }

    fn tangent_u(&self, u: T, surface: Surface) -> Point2<T> {
        let h = self.step();
        let lo = (u - h).max(T::zero());
        let hi = (u + h).min(T::one());
        let d = self.surface_point_u(hi, surface) - self.surface_point_u(lo, surface);
        d * (T::one() / (hi - lo))
    }

    /// Parameter of the closest surface point: coarse scan, then Newton on
    /// `(c(u) − q)·c'(u) = 0` kept inside the bracketing scan cell.
    fn closest_parameter(&self, q: Point2<T>, surface: Surface) -> T {
        const SCAN: usize = 256;
        let n = T::from_usize_lossy(SCAN);
        let mut best = (0usize, T::infinity());
        for i in 0..=SCAN {
            let u = T::from_usize_lossy(i) / n;
            let d = self.surface_point_u(u, surface).distance_squared(q);
            if d < best.1 {
                best = (i, d);
            }
        }
        let lo = T::from_usize_lossy(best.0.saturating_sub(1)) / n;
        let hi = T::from_usize_lossy((best.0 + 1).min(SCAN)) / n;
        let mut u = T::from_usize_lossy(best.0) / n;
        let mut best_u = u;
        let mut best_d = best.1;

        let g = |u: T| (self.surface_point_u(u, surface) - q).dot(self.tangent_u(u, surface));
        let h = self.step();
        for _ in 0..60 {
            let gu = g(u);
            let dg = (g((u + h).min(T::one())) - g((u - h).max(T::zero()))) / ((u + h).min(T::one()) - (u - h).max(T::zero()));
            if dg == T::zero() || !dg.is_finite() {
                break;
            }
            let next = (u - gu / dg).max(lo).min(hi);
            let d = self.surface_point_u(next, surface).distance_squared(q);
            if d < best_d {
                best_d = d;
                best_u = next;
            }
            if (next - u).abs() <= T::epsilon() {
                break;
            }
            u = next;
        }
        best_u
    }
}
