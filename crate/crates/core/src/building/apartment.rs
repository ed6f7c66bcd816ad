//! The standard apartment of `SL(3, Q_p)`: `R^3 / R(1,1,1)` tiled by the
//! hyperplanes `y_i − y_j ∈ Z`, the segment from a point `x` of the base
//! chamber to its translate by `s^N`, and the gallery of alcoves the segment
//! passes through.
//!
//! Alcoves are named by `(a, b, c) = (⌊y_1 − y_2⌋, ⌊y_2 − y_3⌋, ⌊y_1 − y_3⌋)`;
//! the lattice `[diag(p^{y}) Z_p^3]` sits at the integer point `y`, so the
//! base chamber `C` with vertices `Λ_0, Λ_1, Λ_2` is `(−1, −1, −1)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

type Q = BigRational;

/// Largest window radius and step count accepted.
pub const MAX_RADIUS: u32 = 64;
pub const MAX_STEPS: u32 = 1024;

/// Window used by the default figure; it contains the whole segment for
/// `vals = (1, 0, −1)` and `N = 3`.
pub const DEFAULT_RADIUS: u32 = 6;
pub const DEFAULT_STEPS: u32 = 3;

const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];
const SCALE: f64 = 40.0;
const MARGIN: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Alcove {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Alcove {
    /// The base chamber `C`.
    pub const BASE: Alcove = Alcove { a: -1, b: -1, c: -1 };

    /// Alcove whose interior contains `y`; fails when `y` lies on a wall.
    pub fn containing(y: &[Q; 3]) -> Result<Alcove> {
        let mut f = [0i64; 3];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let d = &y[i] - &y[j];
            if d.is_integer() {
                return Err(Error::GeneralPosition(format!(
                    "y_{} − y_{} = {d} lies on a wall",
                    i + 1,
                    j + 1
                )));
            }
            f[k] = d.floor().to_integer().to_i64().ok_or_else(|| {
                Error::CapExceeded("coordinate out of range".into())
            })?;
        }
        Ok(Alcove { a: f[0], b: f[1], c: f[2] })
    }

    pub fn is_valid(&self) -> bool {
        self.c == self.a + self.b || self.c == self.a + self.b + 1
    }

    /// Whether the two alcoves meet along a codimension-one wall.
    pub fn shares_wall(&self, other: &Alcove) -> bool {
        let diffs = [
            (self.a - other.a).abs(),
            (self.b - other.b).abs(),
            (self.c - other.c).abs(),
        ];
        self.is_valid() && other.is_valid() && diffs.iter().sum::<i64>() == 1
    }

    /// Corners as integer points with `y_3 = 0`.
    pub fn corners(&self) -> [[i64; 3]; 3] {
        let (a, b) = (self.a, self.b);
        let uw = if self.c == a + b {
            [(a, b), (a + 1, b), (a, b + 1)]
        } else {
            [(a + 1, b + 1), (a + 1, b), (a, b + 1)]
        };
        uw.map(|(u, w)| [u + w, w, 0])
    }

    fn chebyshev(&self, other: &Alcove) -> i64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
    }
}

/// Geometry of the apartment figure: the tiled window, the segment and its
/// gallery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApartmentWindow {
    pub vals: [i64; 3],
    #[serde(skip)]
    pub start: [Q; 3],
    pub steps: u32,
    pub radius: u32,
    /// Alcoves within `radius` of the base chamber, sorted.
    pub alcoves: Vec<Alcove>,
    /// Alcoves met by the segment, in order.
    pub gallery: Vec<Alcove>,
}

/// Default point of the base chamber, in barycentric coordinates over
/// `(Λ_0, Λ_1, Λ_2)`.
pub fn default_barycentric() -> [Q; 3] {
    [
        Q::new(7.into(), 10.into()),
        Q::new(1.into(), 5.into()),
        Q::new(1.into(), 10.into()),
    ]
}

/// Apartment coordinates of the point with barycentric coordinates `bary`
/// in the base chamber; every weight must be positive.
pub fn chamber_point(bary: &[Q; 3]) -> Result<[Q; 3]> {
    let total: Q = bary.iter().sum();
    if total != Q::from_integer(1.into()) {
        return Err(Error::Precondition(format!("barycentric weights sum to {total}, not 1")));
    }
    if bary.iter().any(|w| *w <= Q::zero()) {
        return Err(Error::GeneralPosition(
            "point lies on a wall of the base chamber".into(),
        ));
    }
    // Λ_0 = (0,0,0), Λ_1 = (0,0,1), Λ_2 = (0,1,1)
    Ok([Q::zero(), bary[2].clone(), &bary[1] + &bary[2]])
}

pub fn apartment_window(radius: u32, vals: &[i64], bary: &[Q; 3], steps: u32) -> Result<ApartmentWindow> {
    let vals: [i64; 3] = vals.try_into().map_err(|_| {
        Error::Unsupported(format!("apartment figure needs n = 3, got {} values", vals.len()))
    })?;
    if vals[0] == vals[1] || vals[1] == vals[2] || vals[0] == vals[2] {
        return Err(Error::DegenerateConjugator);
    }
    if radius > MAX_RADIUS || steps > MAX_STEPS {
        return Err(Error::CapExceeded(format!(
            "radius ≤ {MAX_RADIUS} and N ≤ {MAX_STEPS} required"
        )));
    }
    let start = chamber_point(bary)?;
    let base = Alcove::containing(&start)?;
    debug_assert_eq!(base, Alcove::BASE);

    let mut crossings: Vec<Q> = Vec::new();
    for &(i, j) in &PAIRS {
        let d0 = &start[i] - &start[j];
        let dv = i64::from(steps) * (vals[i] - vals[j]);
        if dv == 0 {
            continue;
        }
        let end = &d0 + Q::from_integer(dv.into());
        let (lo, hi) = if dv > 0 { (&d0, &end) } else { (&end, &d0) };
        let mut k = lo.ceil().to_integer();
        let top = hi.floor().to_integer();
        while k <= top {
            crossings.push((Q::from_integer(k.clone()) - &d0) / Q::from_integer(dv.into()));
            k += 1;
        }
    }
    crossings.sort();
    if crossings.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::GeneralPosition(
            "segment meets two walls at once".into(),
        ));
    }
    let mut times = vec![Q::zero()];
    times.extend(crossings);
    times.push(Q::from_integer(1.into()));
    let two = Q::from_integer(2.into());
    let mut gallery = Vec::with_capacity(times.len() - 1);
    for w in times.windows(2) {
        let mid = (&w[0] + &w[1]) / &two;
        gallery.push(Alcove::containing(&point_on(&start, &vals, steps, &mid))?);
    }

    let r = i64::from(radius);
    let mut alcoves = Vec::new();
    for a in (base.a - r)..=(base.a + r) {
        for b in (base.b - r)..=(base.b + r) {
            for c in [a + b, a + b + 1] {
                let al = Alcove { a, b, c };
                if al.chebyshev(&base) <= r {
                    alcoves.push(al);
                }
            }
        }
    }
    alcoves.sort();
    Ok(ApartmentWindow {
        vals,
        start,
        steps,
        radius,
        alcoves,
        gallery,
    })
}

fn point_on(start: &[Q; 3], vals: &[i64; 3], steps: u32, lambda: &Q) -> [Q; 3] {
    std::array::from_fn(|i| {
        &start[i] + lambda * Q::from_integer(BigInt::from(i64::from(steps) * vals[i]))
    })
}

impl ApartmentWindow {
    /// `x + λ·N·v` for `λ ∈ [0, 1]`.
    pub fn point_at(&self, lambda: &Q) -> [Q; 3] {
        point_on(&self.start, &self.vals, self.steps, lambda)
    }

    pub fn end(&self) -> [Q; 3] {
        self.point_at(&Q::from_integer(1.into()))
    }

    pub fn to_svg(&self) -> String {
        emit_apartment_svg(self)
    }
}

fn project(y: [f64; 3]) -> (f64, f64) {
    let x = y[0] - (y[1] + y[2]) / 2.0;
    let h = (3f64).sqrt() / 2.0 * (y[1] - y[2]);
    (x * SCALE, -h * SCALE)
}

fn to_f64(y: &[Q; 3]) -> [f64; 3] {
    std::array::from_fn(|i| y[i].to_f64().unwrap_or(0.0))
}

fn corner_points(al: &Alcove) -> [(f64, f64); 3] {
    al.corners().map(|c| project([c[0] as f64, c[1] as f64, c[2] as f64]))
}

/// Deterministic SVG 1.1 rendering of the window.
pub fn emit_apartment_svg(w: &ApartmentWindow) -> String {
    let gallery: BTreeSet<Alcove> = w.gallery.iter().copied().collect();
    let mut shapes: BTreeSet<Alcove> = w.alcoves.iter().copied().collect();
    shapes.extend(gallery.iter().copied());

    let start = project(to_f64(&w.start));
    let end = project(to_f64(&w.end()));
    let mut xs = vec![start.0, end.0];
    let mut ys = vec![start.1, end.1];
    for al in &shapes {
        for (x, y) in corner_points(al) {
            xs.push(x);
            ys.push(y);
        }
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let (min_x, max_x) = (fold(&xs, f64::min, f64::INFINITY), fold(&xs, f64::max, f64::NEG_INFINITY));
    let (min_y, max_y) = (fold(&ys, f64::min, f64::INFINITY), fold(&ys, f64::max, f64::NEG_INFINITY));
    let (ox, oy) = (min_x - MARGIN, min_y - MARGIN);
    let (width, height) = (max_x - min_x + 2.0 * MARGIN, max_y - min_y + 2.0 * MARGIN);
    let pt = |(x, y): (f64, f64)| (x - ox, y - oy);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    );
    let _ = writeln!(
        s,
        "<title>Apartment of SL(3): vals ({}, {}, {}), N = {}</title>",
        w.vals[0], w.vals[1], w.vals[2], w.steps
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"#ffffff\"/>");
    s.push_str("<g id=\"alcoves\" stroke=\"#8c8c8c\" stroke-width=\"0.6\">\n");
    for al in &shapes {
        let fill = if *al == Alcove::BASE {
            "#f2c14e"
        } else if gallery.contains(al) {
            "#a6cee3"
        } else {
            "#ffffff"
        };
        let pts: Vec<String> = corner_points(al)
            .iter()
            .map(|&c| {
                let (x, y) = pt(c);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            "<polygon data-alcove=\"{},{},{}\" points=\"{}\" fill=\"{fill}\"/>",
            al.a,
            al.b,
            al.c,
            pts.join(" ")
        );
    }
    s.push_str("</g>\n");
    let (sx, sy) = pt(start);
    if w.steps > 0 {
        let (ex, ey) = pt(end);
        let _ = writeln!(
            s,
            "<line id=\"segment\" x1=\"{sx:.2}\" y1=\"{sy:.2}\" x2=\"{ex:.2}\" y2=\"{ey:.2}\" stroke=\"#c0392b\" stroke-width=\"2\"/>"
        );
        let _ = writeln!(s, "<circle cx=\"{ex:.2}\" cy=\"{ey:.2}\" r=\"3\" fill=\"#c0392b\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"serif\" font-size=\"12\">s^{}.x</text>",
            ex + 5.0,
            ey - 5.0,
            w.steps
        );
    }
    let _ = writeln!(s, "<circle id=\"x\" cx=\"{sx:.2}\" cy=\"{sy:.2}\" r=\"3\" fill=\"#000000\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"serif\" font-size=\"12\">x</text>",
        sx + 5.0,
        sy - 5.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn base_chamber_point() {
        let x = chamber_point(&default_barycentric()).unwrap();
        assert_eq!(x, [q(0, 1), q(1, 10), q(3, 10)]);
        assert_eq!(Alcove::containing(&x).unwrap(), Alcove::BASE);
        assert!(Alcove::BASE.is_valid());
    }

    #[test]
    fn base_corners_are_standard_vertices() {
        let corners = Alcove::BASE.corners();
        // normalized modulo (1,1,1): (0,0,0), (0,0,1), (0,1,1)
        let mut normalized: Vec<[i64; 3]> = corners
            .iter()
            .map(|c| {
                let m = *c.iter().min().unwrap();
                [c[0] - m, c[1] - m, c[2] - m]
            })
            .collect();
        normalized.sort();
        assert_eq!(normalized, vec![[0, 0, 0], [0, 0, 1], [0, 1, 1]]);
    }

    #[test]
    fn zero_steps() {
        let w = apartment_window(2, &[1, 0, -1], &default_barycentric(), 0).unwrap();
        assert_eq!(w.gallery, vec![Alcove::BASE]);
        assert!(w.to_svg().contains("id=\"x\""));
        assert!(!w.to_svg().contains("segment"));
    }

    #[test]
    fn radius_zero_window() {
        let w = apartment_window(0, &[1, 0, -1], &default_barycentric(), 0).unwrap();
        assert_eq!(w.alcoves, vec![Alcove::BASE]);
    }

    #[test]
    fn gallery_is_connected() {
        let w = apartment_window(4, &[1, 0, -1], &default_barycentric(), 3).unwrap();
        assert_eq!(w.gallery[0], Alcove::BASE);
        assert!(w.gallery.windows(2).all(|p| p[0].shares_wall(&p[1])));
        assert_eq!(Alcove::containing(&w.end()).unwrap(), *w.gallery.last().unwrap());
    }

    #[test]
    fn errors() {
        let on_wall = [q(1, 2), q(1, 2), q(0, 1)];
        assert!(matches!(
            apartment_window(2, &[1, 0, -1], &on_wall, 1),
            Err(Error::GeneralPosition(_))
        ));
        assert_eq!(
            apartment_window(2, &[1, 1, -2], &default_barycentric(), 1),
            Err(Error::DegenerateConjugator)
        );
        assert!(matches!(
            apartment_window(2, &[1, -1], &default_barycentric(), 1),
            Err(Error::Unsupported(_))
        ));
        // from the centroid, y_1 − y_2 and y_2 − y_3 stay equal, so walls are met in pairs
        let centroid = [q(1, 3), q(1, 3), q(1, 3)];
        assert!(matches!(
            apartment_window(2, &[1, 0, -1], &centroid, 3),
            Err(Error::GeneralPosition(_))
        ));
    }
}
