//! Planar geometry: polylines with arc-length parameterisation and oriented boxes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }
    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }
    pub fn unit(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scale(1.0 / n)
        }
    }
    /// Rotated +90°.
    pub fn left(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
    pub fn from_heading(h: f64) -> Vec2 {
        Vec2::new(h.cos(), h.sin())
    }
    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the direction of travel.
    pub d: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Consecutive duplicate points are dropped. Needs two distinct points.
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last().is_none_or(|q: &Vec2| q.dist(p) > 1e-9) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return None;
        }
        let mut cumulative = vec![0.0];
        for w in pts.windows(2) {
            cumulative.push(cumulative.last().unwrap() + w[0].dist(w[1]));
        }
        Some(Polyline { points: pts, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> usize {
        let s = s.clamp(0.0, self.length());
        match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => (i - 1).min(self.points.len() - 2),
        }
    }

    /// Point and heading at arc length `s`; beyond the ends the first or last
    /// segment is extended linearly.
    pub fn pose_at(&self, s: f64) -> (Vec2, f64) {
        let (i, local) = if s < 0.0 {
            (0, s)
        } else if s > self.length() {
            let i = self.points.len() - 2;
            (i, s - self.cumulative[i])
        } else {
            let i = self.segment_at(s);
            (i, s - self.cumulative[i])
        };
        let dir = self.points[i + 1].sub(self.points[i]).unit();
        (self.points[i].add(dir.scale(local)), dir.heading())
    }

    /// World point at Frenet coordinates (s, d).
    pub fn frenet_to_world(&self, s: f64, d: f64) -> (Vec2, f64) {
        let (p, h) = self.pose_at(s);
        (p.add(Vec2::from_heading(h).left().scale(d)), h)
    }

    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = (f64::INFINITY, Projection { s: 0.0, d: 0.0, heading: 0.0 });
        for (i, w) in self.points.windows(2).enumerate() {
            let seg = w[1].sub(w[0]);
            let len2 = seg.dot(seg);
            let t = (p.sub(w[0]).dot(seg) / len2).clamp(0.0, 1.0);
            let foot = w[0].add(seg.scale(t));
            let dist = p.dist(foot);
            if dist < best.0 - 1e-12 {
                let dir = seg.unit();
                best = (
                    dist,
                    Projection { s: self.cumulative[i] + t * len2.sqrt(), d: dir.cross(p.sub(w[0])), heading: dir.heading() },
                );
            }
        }
        best.1
    }

    /// Laterally shifted copy (positive `d` to the left).
    pub fn offset(&self, d: f64) -> Polyline {
        if d == 0.0 {
            return self.clone();
        }
        let n = self.points.len();
        let dirs: Vec<Vec2> = self.points.windows(2).map(|w| w[1].sub(w[0]).unit()).collect();
        let pts = (0..n)
            .map(|i| {
                let normal = match i {
                    0 => dirs[0].left(),
                    i if i == n - 1 => dirs[n - 2].left(),
                    i => {
                        let bis = dirs[i - 1].left().add(dirs[i].left()).unit();
                        let cos = bis.dot(dirs[i].left()).max(0.2);
                        bis.scale(1.0 / cos)
                    }
                };
                self.points[i].add(normal.scale(d))
            })
            .collect();
        Polyline::new(pts).expect("offset keeps distinct points")
    }

    /// Sub-polyline between arc lengths `a` ≤ `b`.
    pub fn slice(&self, a: f64, b: f64) -> Vec<Vec2> {
        let mut out = vec![self.pose_at(a).0];
        for (i, p) in self.points.iter().enumerate() {
            if self.cumulative[i] > a && self.cumulative[i] < b {
                out.push(*p);
            }
        }
        out.push(self.pose_at(b).0);
        out
    }

    /// First crossing with `other` as (s on self, s on other).
    pub fn first_crossing(&self, other: &Polyline) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (i, a) in self.points.windows(2).enumerate() {
            for (j, b) in other.points.windows(2).enumerate() {
                if let Some((t, u)) = segment_intersection(a[0], a[1], b[0], b[1]) {
                    let s = self.cumulative[i] + t * a[0].dist(a[1]);
                    let so = other.cumulative[j] + u * b[0].dist(b[1]);
                    if best.is_none_or(|(bs, _)| s < bs) {
                        best = Some((s, so));
                    }
                }
            }
        }
        best
    }

    /// True when no two non-adjacent segments touch.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.points.windows(2).collect();
        for i in 0..segs.len() {
            for j in i + 2..segs.len() {
                if segment_intersection(segs[i][0], segs[i][1], segs[j][0], segs[j][1]).is_some() {
                    return false;
                }
            }
        }
        true
    }
}

/// Parameters (t, u) ∈ [0,1]² where segments p0p1 and q0q1 meet.
pub fn segment_intersection(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> Option<(f64, f64)> {
    let r = p1.sub(p0);
    let s = q1.sub(q0);
    let denom = r.cross(s);
    if denom.abs() < 1e-12 {
        return None;
    }
    let qp = q0.sub(p0);
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some((t, u))
}

/// Rectangle of given length/width centred at `center` and rotated by `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn corners(&self) -> [Vec2; 4] {
        let f = Vec2::from_heading(self.heading).scale(self.length / 2.0);
        let l = Vec2::from_heading(self.heading).left().scale(self.width / 2.0);
        let c = self.center;
        [c.add(f).add(l), c.sub(f).add(l), c.sub(f).sub(l), c.add(f).sub(l)]
    }

    fn separated(&self, other: &OrientedBox) -> bool {
        let (a, b) = (self.corners(), other.corners());
        let axes = [
            Vec2::from_heading(self.heading),
            Vec2::from_heading(self.heading).left(),
            Vec2::from_heading(other.heading),
            Vec2::from_heading(other.heading).left(),
        ];
        axes.iter().any(|ax| {
            let (amin, amax) = a.iter().map(|p| p.dot(*ax)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (bmin, bmax) = b.iter().map(|p| p.dot(*ax)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            amax < bmin || bmax < amin
        })
    }

    /// Euclidean distance between the two rectangles; 0 when they overlap.
    pub fn distance(&self, other: &OrientedBox) -> f64 {
        if !self.separated(other) {
            return 0.0;
        }
        let (a, b) = (self.corners(), other.corners());
        let mut best = f64::INFINITY;
        for (pts, poly) in [(&a, &b), (&b, &a)] {
            for p in pts.iter() {
                for i in 0..4 {
                    best = best.min(point_segment_distance(*p, poly[i], poly[(i + 1) % 4]));
                }
            }
        }
        best
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b.sub(a);
    let t = (p.sub(a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Polyline {
        Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)]).unwrap()
    }

    #[test]
    fn arc_length_and_projection() {
        let l = line();
        assert_eq!(l.length(), 20.0);
        let (p, h) = l.pose_at(15.0);
        assert!((p.x - 10.0).abs() < 1e-12 && (p.y - 5.0).abs() < 1e-12);
        assert!((h - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let pr = l.project(Vec2::new(8.0, 5.0));
        assert!((pr.s - 15.0).abs() < 1e-9);
        assert!((pr.d - 2.0).abs() < 1e-9, "{pr:?}");
        let (w, _) = l.frenet_to_world(5.0, -1.0);
        assert!((w.x - 5.0).abs() < 1e-12 && (w.y + 1.0).abs() < 1e-12);
    }

    #[test]
    fn offsets_and_crossings() {
        let l = line();
        let o = l.offset(1.0);
        assert!((o.points()[1].x - 9.0).abs() < 1e-9 && (o.points()[1].y - 1.0).abs() < 1e-9);
        let v = Polyline::new(vec![Vec2::new(5.0, -5.0), Vec2::new(5.0, 5.0)]).unwrap();
        let (s, so) = l.first_crossing(&v).unwrap();
        assert!((s - 5.0).abs() < 1e-9 && (so - 5.0).abs() < 1e-9);
        assert!(l.is_simple());
        let bad = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 5.0), Vec2::new(5.0, -5.0)]).unwrap();
        assert!(!bad.is_simple());
    }

    #[test]
    fn box_distance() {
        let a = OrientedBox { center: Vec2::new(0.0, 0.0), heading: 0.0, length: 4.0, width: 2.0 };
        let b = OrientedBox { center: Vec2::new(10.0, 0.0), heading: 0.0, length: 4.0, width: 2.0 };
        assert!((a.distance(&b) - 6.0).abs() < 1e-12);
        let c = OrientedBox { center: Vec2::new(3.0, 0.0), heading: 1.0, length: 4.0, width: 2.0 };
        assert_eq!(a.distance(&c), 0.0);
        assert_eq!(wrap_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI);
    }
}
