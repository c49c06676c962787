//! Small plane-geometry helpers shared by the gadget constructors, the
//! solver and the CLI. Plane points are `Complex64`.

use num_complex::Complex64;
use rand::Rng;

/// Orientation choice when a construction has a two-fold ambiguity
/// (e.g. which of the two circle intersection points to take).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Intersection of the circles |z - c1| = r1 and |z - c2| = r2.
///
/// Returns the intersection on the `side` of the directed line c1 -> c2,
/// clamping discriminants that are negative by no more than `slack`
/// (relative to the radii) to the tangent case. Concentric circles of equal
/// radius have a full circle of solutions; the point c1 + r1 is returned so
/// placement stays deterministic.
pub fn circle_intersection(
    c1: Complex64,
    r1: f64,
    c2: Complex64,
    r2: f64,
    side: Side,
) -> Option<Complex64> {
    let scale = r1.abs().max(r2.abs()).max(1e-300);
    let slack = 1e-9 * scale;
    let delta = c2 - c1;
    let d = delta.norm();
    if d <= slack {
        if (r1 - r2).abs() <= slack {
            return Some(c1 + Complex64::new(r1, 0.0));
        }
        return None;
    }
    if d > r1 + r2 + slack || d < (r1 - r2).abs() - slack {
        return None;
    }
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let h = h2.max(0.0).sqrt();
    let dir = delta / d;
    let base = c1 + a * dir;
    Some(base + side.sign() * h * Complex64::new(0.0, 1.0) * dir)
}

/// 2D cross product Im(conj(a) * b); zero iff a and b are parallel.
pub fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Perpendicular distance of `p` from the line through `a` and `b`.
pub fn line_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let dir = b - a;
    let n = dir.norm();
    if n == 0.0 {
        return (p - a).norm();
    }
    (cross(dir, p - a) / n).abs()
}

pub fn unit(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// Uniform sample from the disk |z| <= r.
pub fn sample_disk<R: Rng>(rng: &mut R, r: f64) -> Complex64 {
    let rad = r * rng.gen::<f64>().sqrt();
    rad * unit(rng.gen::<f64>() * std::f64::consts::TAU)
}

/// Area-uniform sample from the annulus lo <= |z| <= hi.
pub fn sample_annulus<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Complex64 {
    let u = rng.gen::<f64>();
    let rad = (lo * lo + u * (hi * hi - lo * lo)).sqrt();
    rad * unit(rng.gen::<f64>() * std::f64::consts::TAU)
}

/// Parse a complex literal such as `2`, `-1.5i`, `0.5+1i`, `3-2.5i`, `i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    // Split into at most two signed terms.
    let mut terms: Vec<String> = Vec::new();
    let mut cur = String::new();
    for (i, ch) in s.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 {
            let prev = s.chars().nth(i - 1).unwrap();
            if prev != 'e' && prev != 'E' {
                terms.push(cur.clone());
                cur.clear();
            }
        }
        cur.push(ch);
    }
    terms.push(cur);
    if terms.len() > 2 {
        return Err(format!("malformed complex literal `{s}`"));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    let mut seen_im = false;
    let mut seen_re = false;
    for t in &terms {
        let t = t.trim();
        if let Some(body) = t.strip_suffix(['i', 'j']) {
            if seen_im {
                return Err(format!("two imaginary parts in `{s}`"));
            }
            seen_im = true;
            im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => body.parse::<f64>().map_err(|e| format!("bad number `{body}`: {e}"))?,
            };
        } else {
            if seen_re {
                return Err(format!("two real parts in `{s}`"));
            }
            seen_re = true;
            re = t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"))?;
        }
    }
    Ok(Complex64::new(re, im))
}

/// Format a complex number the way [`parse_complex`] reads it.
pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}
