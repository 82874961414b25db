//! The dynamical systems: doubling map with exact-in-distribution bitstream
//! points, hyperbolic toral automorphisms, and the constant-roof suspension
//! semiflow over either.
//!
//! Floating-point doubling is degenerate (orbits collapse to 0 after ~53
//! steps), so doubling-map phase points are lazy random bitstreams: the map
//! is a digit shift and evaluation always sees at least 64 fresh unconsumed
//! digits. Toral orbits use plain f64 with fresh initial conditions per
//! Monte Carlo sample and short horizons, where statistical functionals are
//! robust to shadowing error.
//!
//! Seed policy: every operation takes an explicit stream; Monte Carlo sample
//! `i` of an estimator derives `master.child(i)`, and hierarchical needs
//! (base point vs. suspension height) split further by fixed tags. A stream
//! is never shared across concurrent consumers.

use crate::observables::Observable;
use crate::rng::Stream;
use crate::{Error, Result};

/// Memory budget for a single orbit request.
pub const MAX_ORBIT_BYTES: usize = 1 << 30;

/// Horizon cap for floating-point toral orbits: per-sample shadowing error
/// stays statistically harmless at these depths, beyond them it would not.
pub const MAX_TORAL_STEPS: usize = 1 << 14;

// ---------------------------------------------------------------------------
// Phase points
// ---------------------------------------------------------------------------

/// Doubling-map phase point: a lazily extended stream of random binary
/// digits. The map shifts out one digit; evaluation reads the next 64
/// unconsumed digits, and the stream is extended so at least 128 digits are
/// always available ahead of the cursor.
#[derive(Clone, Debug)]
pub struct BitPoint {
    words: Vec<u64>, // digit g lives at bit (63 - g % 64) of words[g / 64]
    consumed: usize,
    stream: Stream,
}

const BIT_LOOKAHEAD: usize = 128;

impl BitPoint {
    pub fn sample(stream: Stream) -> Self {
        let mut p = BitPoint { words: Vec::new(), consumed: 0, stream };
        p.ensure(BIT_LOOKAHEAD);
        p
    }

    /// Point whose leading digits are fixed and whose remaining digits come
    /// fresh from the stream: exact conditional sampling on a dyadic cell.
    pub fn with_prefix(prefix: &[u8], stream: Stream) -> Self {
        let mut p = BitPoint { words: Vec::new(), consumed: 0, stream };
        p.ensure(prefix.len() + BIT_LOOKAHEAD);
        for (g, &b) in prefix.iter().enumerate() {
            let mask = 1u64 << (63 - (g % 64));
            if b != 0 {
                p.words[g / 64] |= mask;
            } else {
                p.words[g / 64] &= !mask;
            }
        }
        p
    }

    fn ensure(&mut self, unconsumed: usize) {
        let need_words = (self.consumed + unconsumed).div_ceil(64) + 1;
        while self.words.len() < need_words {
            let w = self.stream.next_u64();
            self.words.push(w);
        }
    }

    /// Guarantees `n` digits are materialized past the cursor. Orbit loops
    /// call this once up front so the per-step work is pure indexing.
    pub fn reserve_digits(&mut self, n: usize) {
        self.ensure(n + BIT_LOOKAHEAD);
    }

    /// The point as a real number in [0, 1): the leading 53 of the next 64
    /// unconsumed digits, truncated (an exact f64 strictly below 1; rounding
    /// the full 64-bit window could carry it up to 1.0).
    #[inline]
    pub fn value(&self) -> f64 {
        (self.window64(self.consumed) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Value after `j` additional shifts, without mutating the point.
    /// Requires `reserve_digits(j + 64)` beforehand.
    #[inline]
    pub fn value_at(&self, j: usize) -> f64 {
        (self.window64(self.consumed + j) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    fn window64(&self, g: usize) -> u64 {
        let q = g / 64;
        let r = g % 64;
        debug_assert!(q + 1 < self.words.len(), "bitstream not extended far enough");
        if r == 0 {
            self.words[q]
        } else {
            (self.words[q] << r) | (self.words[q + 1] >> (64 - r))
        }
    }

    /// The doubling-map step: shift one digit out.
    #[inline]
    pub fn shift(&mut self) {
        self.consumed += 1;
        self.ensure(BIT_LOOKAHEAD);
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Digit `j` positions past the cursor (0 or 1).
    pub fn digit(&self, j: usize) -> u8 {
        let g = self.consumed + j;
        ((self.words[g / 64] >> (63 - (g % 64))) & 1) as u8
    }
}

/// Point on the 2-torus with coordinates in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

#[inline]
fn mod1(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint { x: mod1(x), y: mod1(y) }
    }
}

/// A phase point of one of the supported systems.
#[derive(Clone, Debug)]
pub enum Point {
    Bit(BitPoint),
    Torus(TorusPoint),
    /// Suspension-space point: base fiber point plus height in [0, 1).
    Suspension { base: Box<Point>, height: f64 },
}

impl Point {
    pub fn coord_dim(&self) -> usize {
        match self {
            Point::Bit(_) => 1,
            Point::Torus(_) => 2,
            Point::Suspension { base, .. } => base.coord_dim(),
        }
    }

    /// Writes the observable coordinates. Observables on the suspension read
    /// the base fiber coordinates (they are constant along the roof fiber).
    pub fn write_coords(&self, out: &mut [f64]) {
        match self {
            Point::Bit(b) => out[0] = b.value(),
            Point::Torus(t) => {
                out[0] = t.x;
                out[1] = t.y;
            }
            Point::Suspension { base, .. } => base.write_coords(out),
        }
    }

    pub fn height(&self) -> Option<f64> {
        match self {
            Point::Suspension { height, .. } => Some(*height),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// System specification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    /// x ↦ 2x mod 1 on [0, 1) with Lebesgue invariant measure.
    Doubling,
    /// Hyperbolic automorphism of the 2-torus given by an integer matrix with
    /// determinant ±1 and |trace| > 2.
    Toral { m: [[i64; 2]; 2] },
    /// Constant-roof (roof ≡ 1) suspension semiflow over the base map; its
    /// time-one map is the base map.
    Suspension { base: Box<SystemKind> },
}

/// A system together with its master seed. Stream splitting: child(k) per
/// purpose or Monte Carlo sample, as documented on each operation.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub seed: u64,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, seed: u64) -> Result<Self> {
        kind.validate()?;
        Ok(SystemSpec { kind, seed })
    }

    /// The master stream every experiment stage splits from.
    pub fn master_stream(&self) -> Stream {
        Stream::new(self.seed)
    }
}

impl SystemKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            SystemKind::Doubling => Ok(()),
            SystemKind::Toral { m } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() != 1 {
                    return Err(Error::Contract(format!("toral matrix must have determinant ±1, got {det}")));
                }
                let tr = m[0][0] + m[1][1];
                if tr.abs() <= 2 {
                    return Err(Error::Contract(format!(
                        "toral matrix must be hyperbolic (|trace| > 2), got trace {tr}"
                    )));
                }
                Ok(())
            }
            SystemKind::Suspension { base } => match base.as_ref() {
                SystemKind::Suspension { .. } => {
                    Err(Error::Contract("nested suspensions are not supported".into()))
                }
                other => other.validate(),
            },
        }
    }

    pub fn coord_dim(&self) -> usize {
        match self {
            SystemKind::Doubling => 1,
            SystemKind::Toral { .. } => 2,
            SystemKind::Suspension { base } => base.coord_dim(),
        }
    }

    /// The expansion factor of the unstable direction: 2 for the doubling
    /// map, the leading eigenvalue modulus for a toral automorphism. The
    /// suspension inherits its base rate (time-one map).
    pub fn expansion_rate(&self) -> f64 {
        match self {
            SystemKind::Doubling => 2.0,
            SystemKind::Toral { m } => {
                let tr = (m[0][0] + m[1][1]) as f64;
                let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) as f64;
                let disc = (tr * tr - 4.0 * det).sqrt();
                (0.5 * (tr.abs() + disc)).max(1.0 + 1e-12)
            }
            SystemKind::Suspension { base } => base.expansion_rate(),
        }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Samples a phase point distributed according to the invariant measure
/// (Lebesgue for every supported system). Deterministic given the stream.
pub fn sample_initial(kind: &SystemKind, stream: Stream) -> Point {
    match kind {
        SystemKind::Doubling => Point::Bit(BitPoint::sample(stream)),
        SystemKind::Toral { .. } => {
            let mut s = stream;
            Point::Torus(TorusPoint { x: s.next_f64(), y: s.next_f64() })
        }
        SystemKind::Suspension { base } => {
            let base_pt = sample_initial(base, stream.child(0));
            let height = stream.child(1).next_f64();
            Point::Suspension { base: Box::new(base_pt), height }
        }
    }
}

/// Suspension point at a prescribed height (height 0 makes the time-one
/// reduction identities exact; used by tests and diagnostics).
pub fn suspension_point_at_height(kind: &SystemKind, stream: Stream, height: f64) -> Result<Point> {
    match kind {
        SystemKind::Suspension { base } => Ok(Point::Suspension {
            base: Box::new(sample_initial(base, stream.child(0))),
            height,
        }),
        _ => Err(Error::Contract("suspension_point_at_height requires a suspension system".into())),
    }
}

/// Applies the map (the time-one map for a suspension) in place.
pub fn step(kind: &SystemKind, p: &mut Point) {
    match (kind, p) {
        (SystemKind::Doubling, Point::Bit(b)) => b.shift(),
        (SystemKind::Toral { m }, Point::Torus(t)) => {
            let x = m[0][0] as f64 * t.x + m[0][1] as f64 * t.y;
            let y = m[1][0] as f64 * t.x + m[1][1] as f64 * t.y;
            t.x = mod1(x);
            t.y = mod1(y);
        }
        (SystemKind::Suspension { base }, Point::Suspension { base: bp, .. }) => step(base, bp),
        _ => panic!("phase point does not match system kind"),
    }
}

/// Evaluates `f` along the orbit of a freshly sampled initial point:
/// element k is f(Tᵏ x). Returns a flat vector with stride `f.dim()`.
pub fn orbit_values(kind: &SystemKind, f: &Observable, n_steps: usize, stream: Stream) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    orbit_values_into(kind, f, n_steps, stream, &mut out)?;
    Ok(out)
}

/// Buffer-reusing variant of [`orbit_values`] for Monte Carlo loops.
pub fn orbit_values_into(
    kind: &SystemKind,
    f: &Observable,
    n_steps: usize,
    stream: Stream,
    out: &mut Vec<f64>,
) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::Contract("orbit_values requires n_steps ≥ 1".into()));
    }
    let d = f.dim();
    let bytes = n_steps
        .checked_mul(d)
        .and_then(|x| x.checked_mul(8))
        .ok_or_else(|| Error::Resource("orbit size overflows".into()))?;
    if bytes > MAX_ORBIT_BYTES {
        return Err(Error::Resource(format!(
            "orbit of {n_steps} steps × dim {d} needs {bytes} bytes, budget is {MAX_ORBIT_BYTES}"
        )));
    }
    if f.coord_dim() != kind.coord_dim() {
        return Err(Error::Contract(format!(
            "observable coordinate dimension {} does not match system {}",
            f.coord_dim(),
            kind.coord_dim()
        )));
    }
    if matches!(kind, SystemKind::Toral { .. }) && n_steps > MAX_TORAL_STEPS {
        return Err(Error::Resource(format!(
            "toral orbits run in plain floating point; {n_steps} steps exceeds the {MAX_TORAL_STEPS}-step shadowing budget"
        )));
    }
    out.clear();
    out.resize(n_steps * d, 0.0);
    match kind {
        SystemKind::Doubling => {
            let mut p = BitPoint::sample(stream);
            p.reserve_digits(n_steps + 64);
            let mut coords = [0.0];
            for k in 0..n_steps {
                coords[0] = p.value_at(k);
                f.eval(&coords, &mut out[k * d..(k + 1) * d]);
            }
        }
        SystemKind::Toral { .. } => {
            let mut p = sample_initial(kind, stream);
            let mut coords = [0.0; 2];
            for k in 0..n_steps {
                p.write_coords(&mut coords);
                f.eval(&coords, &mut out[k * d..(k + 1) * d]);
                if k + 1 < n_steps {
                    step(kind, &mut p);
                }
            }
        }
        SystemKind::Suspension { base } => {
            // Time-one orbit: heights do not move, so this is the base orbit.
            let (base, stream) = (base.clone(), stream.child(0));
            return orbit_values_into(&base, f, n_steps, stream, out);
        }
    }
    Ok(())
}

/// Same as [`orbit_values`] but starting from a given point (consumed).
pub fn orbit_values_from(kind: &SystemKind, f: &Observable, n_steps: usize, p: Point) -> Result<Vec<f64>> {
    let d = f.dim();
    let mut out = vec![0.0; n_steps * d];
    let mut coords = vec![0.0; f.coord_dim()];
    match (kind, p) {
        (SystemKind::Doubling, Point::Bit(mut b)) => {
            b.reserve_digits(n_steps + 64);
            for k in 0..n_steps {
                coords[0] = b.value_at(k);
                f.eval(&coords, &mut out[k * d..(k + 1) * d]);
            }
        }
        (kind, mut p) => {
            for k in 0..n_steps {
                p.write_coords(&mut coords);
                f.eval(&coords, &mut out[k * d..(k + 1) * d]);
                if k + 1 < n_steps {
                    step(kind, &mut p);
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Semiflow paths
// ---------------------------------------------------------------------------

/// Discretized semiflow path: midpoint samples of s ↦ f(ψˢ p) on a uniform
/// dyadic grid over [0, t_horizon]; `values[j]` is the sample at
/// s = (j + ½)·dt, flat with stride `d`. Suitable for composite-midpoint
/// quadrature of the continuous-time sums.
#[derive(Clone, Debug)]
pub struct SemiflowPath {
    pub d: usize,
    pub dt: f64,
    pub t_horizon: f64,
    pub values: Vec<f64>,
}

impl SemiflowPath {
    pub fn n_cells(&self) -> usize {
        self.values.len() / self.d
    }
}

fn check_dyadic(dt: f64) -> Result<u32> {
    if dt.is_nan() || dt <= 0.0 || dt > 1.0 {
        return Err(Error::Config(format!("dt must lie in (0, 1], got {dt}")));
    }
    let inv = 1.0 / dt;
    if (inv.round() - inv).abs() > 1e-12 {
        return Err(Error::Config(format!("dt must be a dyadic fraction 2^-m, got {dt}")));
    }
    let n = inv.round() as u64;
    if !n.is_power_of_two() {
        return Err(Error::Config(format!("dt must be a dyadic fraction 2^-m, got {dt}")));
    }
    Ok(n.trailing_zeros())
}

/// Builds the discretized path for a freshly sampled suspension point.
pub fn semiflow_path(
    kind: &SystemKind,
    f: &Observable,
    t_horizon: f64,
    dt: f64,
    stream: Stream,
) -> Result<SemiflowPath> {
    let p = sample_initial(kind, stream);
    semiflow_path_at(kind, f, t_horizon, dt, &p)
}

/// Builds the discretized path starting from the given suspension point.
pub fn semiflow_path_at(
    kind: &SystemKind,
    f: &Observable,
    t_horizon: f64,
    dt: f64,
    p: &Point,
) -> Result<SemiflowPath> {
    let base_kind = match kind {
        SystemKind::Suspension { base } => base.as_ref(),
        _ => return Err(Error::Contract("semiflow_path requires a suspension system".into())),
    };
    check_dyadic(dt)?;
    if t_horizon < 1.0 {
        return Err(Error::Contract(format!("t_horizon must be ≥ 1, got {t_horizon}")));
    }
    let cells_f = t_horizon / dt;
    if (cells_f.round() - cells_f).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "t_horizon {t_horizon} is not an integer multiple of dt {dt}"
        )));
    }
    let n_cells = cells_f.round() as usize;
    let (base_pt, height) = match p {
        Point::Suspension { base, height } => (base.as_ref(), *height),
        _ => return Err(Error::Contract("semiflow_path requires a suspension point".into())),
    };
    let d = f.dim();
    let bytes = n_cells * d * 8;
    if bytes > MAX_ORBIT_BYTES {
        return Err(Error::Resource(format!("path of {n_cells} cells exceeds the memory budget")));
    }
    // The roof is constant 1, so f(ψˢ p) = f(T^{⌊height+s⌋} x): evaluate the
    // base orbit once and assemble the path by indexing.
    let k_max = (height + t_horizon) as usize + 1;
    let orbit = orbit_values_from(base_kind, f, k_max + 1, (*base_pt).clone())?;
    let mut values = vec![0.0; n_cells * d];
    for j in 0..n_cells {
        let s = (j as f64 + 0.5) * dt;
        let k = (height + s) as usize;
        values[j * d..(j + 1) * d].copy_from_slice(&orbit[k * d..(k + 1) * d]);
    }
    Ok(SemiflowPath { d, dt, t_horizon, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{cos1_doubling, Observable, Wave};

    #[test]
    fn doubling_third_becomes_two_thirds() {
        // x = 1/3 has digits 010101…; one shift gives 101010… = 2/3
        let pattern: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let mut p = BitPoint::with_prefix(&pattern, Stream::new(9));
        assert!((p.value() - 1.0 / 3.0).abs() < 1e-15);
        p.shift();
        assert!((p.value() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn doubling_step_doubles_mod_one() {
        // Digit truncation at 53 bits: the shifted value and the doubled
        // value agree up to the digit that falls off the mantissa.
        let tol = 1.0 / (1u64 << 52) as f64;
        let s = Stream::new(31);
        for i in 0..200 {
            let mut p = BitPoint::sample(s.child(i));
            let x = p.value();
            p.shift();
            let expect = (2.0 * x).fract();
            assert!((p.value() - expect).abs() <= tol, "i={i}: {} vs {expect}", p.value());
        }
    }

    #[test]
    fn doubling_determinism() {
        let f = cos1_doubling();
        let a = orbit_values(&SystemKind::Doubling, &f, 1000, Stream::new(77)).unwrap();
        let b = orbit_values(&SystemKind::Doubling, &f, 1000, Stream::new(77)).unwrap();
        assert_eq!(a, b);
        let c = orbit_values(&SystemKind::Doubling, &f, 1000, Stream::new(78)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn toral_step_example() {
        // [[2,1],[1,1]]·(0.5, 0.5) = (1.5, 1.0) ≡ (0.5, 0.0)
        let kind = SystemKind::Toral { m: [[2, 1], [1, 1]] };
        kind.validate().unwrap();
        let mut p = Point::Torus(TorusPoint { x: 0.5, y: 0.5 });
        step(&kind, &mut p);
        match p {
            Point::Torus(t) => {
                assert!((t.x - 0.5).abs() < 1e-15);
                assert!(t.y.abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn system_spec_validates_and_streams() {
        assert!(SystemSpec::new(SystemKind::Toral { m: [[1, 1], [0, 1]] }, 3).is_err());
        let spec = SystemSpec::new(SystemKind::Doubling, 3).unwrap();
        let mut a = spec.master_stream();
        let mut b = Stream::new(3);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn toral_validation() {
        assert!(SystemKind::Toral { m: [[1, 1], [0, 1]] }.validate().is_err()); // parabolic
        assert!(SystemKind::Toral { m: [[2, 0], [0, 2]] }.validate().is_err()); // det 4
        assert!(SystemKind::Toral { m: [[2, 1], [1, 1]] }.validate().is_ok());
        let rate = SystemKind::Toral { m: [[2, 1], [1, 1]] }.expansion_rate();
        assert!((rate - (3.0 + 5.0f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn toral_points_in_range() {
        let kind = SystemKind::Toral { m: [[2, 1], [1, 1]] };
        let mut s = Stream::new(4);
        for i in 0..100 {
            let mut p = sample_initial(&kind, s.child(i));
            for _ in 0..20 {
                step(&kind, &mut p);
                if let Point::Torus(t) = &p {
                    assert!((0.0..1.0).contains(&t.x) && (0.0..1.0).contains(&t.y));
                }
            }
        }
        let _ = s.next_u64();
    }

    #[test]
    fn orbit_values_cosine_example() {
        // doubling from 1/3: (cos 2π/3, cos 4π/3) = (−0.5, −0.5)
        let pattern: Vec<u8> = (0..300).map(|i| (i % 2) as u8).collect();
        let p = Point::Bit(BitPoint::with_prefix(&pattern, Stream::new(0)));
        let f = cos1_doubling();
        let vals = orbit_values_from(&SystemKind::Doubling, &f, 2, p).unwrap();
        assert!((vals[0] + 0.5).abs() < 1e-9);
        assert!((vals[1] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn orbit_zero_observable() {
        let zero = Observable::custom(1, 1, |_, o| o[0] = 0.0, 0.0, 0.0, "zero");
        let vals = orbit_values(&SystemKind::Doubling, &zero, 64, Stream::new(5)).unwrap();
        assert!(vals.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orbit_memory_budget() {
        let f = cos1_doubling();
        let err = orbit_values(&SystemKind::Doubling, &f, 1 << 28, Stream::new(1));
        assert!(matches!(err, Err(Error::Resource(_))));
    }

    #[test]
    fn semiflow_path_dt1_equals_discrete_orbit() {
        let kind = SystemKind::Suspension { base: Box::new(SystemKind::Doubling) };
        let f = cos1_doubling();
        let p = suspension_point_at_height(&kind, Stream::new(21), 0.0).unwrap();
        let (base_pt, _) = match &p {
            Point::Suspension { base, height } => (base.as_ref().clone(), *height),
            _ => unreachable!(),
        };
        let path = semiflow_path_at(&kind, &f, 8.0, 1.0, &p).unwrap();
        let orbit = orbit_values_from(&SystemKind::Doubling, &f, 8, base_pt).unwrap();
        assert_eq!(path.values.len(), 8);
        for k in 0..8 {
            assert!((path.values[k] - orbit[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn semiflow_constant_observable_gives_constant_path() {
        let kind = SystemKind::Suspension { base: Box::new(SystemKind::Doubling) };
        let c = Observable::custom(1, 1, |_, o| o[0] = 3.25, 3.25, 0.0, "const");
        let path = semiflow_path(&kind, &c, 4.0, 0.25, Stream::new(3)).unwrap();
        assert!(path.values.iter().all(|&v| (v - 3.25).abs() < 1e-15));
    }

    #[test]
    fn semiflow_rejects_non_dyadic_dt() {
        let kind = SystemKind::Suspension { base: Box::new(SystemKind::Doubling) };
        let f = cos1_doubling();
        assert!(matches!(
            semiflow_path(&kind, &f, 4.0, 0.3, Stream::new(3)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            semiflow_path(&kind, &f, 4.0, 0.75, Stream::new(3)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn trig_observable_under_doubling_shifts_frequency() {
        // sanity: f(T x) with f = cos 2πx equals cos 4πx
        let f = Observable::trig(1, 1, &[(0, vec![1], 1.0, Wave::Cos)]).unwrap();
        let mut s = Stream::new(91);
        for i in 0..20 {
            let mut p = BitPoint::sample(s.child(i));
            let x = p.value();
            p.shift();
            let lhs = f.eval1(&[p.value()]);
            let rhs = (4.0 * std::f64::consts::PI * x).cos();
            assert!((lhs - rhs).abs() < 1e-8);
        }
        let _ = s.next_u64();
    }
}
