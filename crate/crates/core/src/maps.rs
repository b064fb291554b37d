//! Continuous self-maps: polylines, a catalog of closed forms, and
//! compositions. Every map carries a Lipschitz upper bound.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::space::{Point, Space, SpaceKind, POINT_EQ_TOL};

#[derive(Clone, Debug, PartialEq)]
pub enum Catalog {
    Identity,
    /// One value per axis, or a single value broadcast to every axis.
    Constant(Vec<f64>),
    Affine {
        a: f64,
        b: f64,
    },
    Power {
        k: f64,
    },
    /// Tent with peak height `height` (as a fraction of the axis length).
    Tent {
        height: f64,
    },
    Logistic {
        r: f64,
    },
    Rotation {
        alpha: f64,
    },
    Clamp {
        lo: f64,
        hi: f64,
    },
}

#[derive(Clone, Debug)]
pub enum MapForm {
    PiecewiseLinear(Vec<(f64, f64)>),
    Catalog(Catalog),
    /// Parts are applied right to left: `[h, g, f]` is `h ∘ g ∘ f`.
    Composition(Vec<Arc<MapRep>>),
}

#[derive(Clone, Debug)]
pub struct MapRep {
    form: MapForm,
    space: Space,
    lipschitz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfMapReport {
    pub ok: bool,
    pub worst_point: Point,
    pub worst_excursion: f64,
}

/// JSON description of a map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Pwl {
        points: Vec<[f64; 2]>,
    },
    Catalog {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Compose {
        parts: Vec<MapSpec>,
    },
}

impl MapSpec {
    pub fn catalog(name: &str, params: &[f64]) -> MapSpec {
        MapSpec::Catalog {
            name: name.to_string(),
            params: params.to_vec(),
        }
    }

    pub fn build(&self, space: &Space) -> Result<MapRep> {
        match self {
            MapSpec::Pwl { points } => {
                MapRep::polyline(space, points.iter().map(|p| (p[0], p[1])).collect())
            }
            MapSpec::Catalog { name, params } => {
                MapRep::catalog(space, Catalog::from_name(name, params)?)
            }
            MapSpec::Compose { parts } => {
                let built = parts
                    .iter()
                    .map(|p| p.build(space).map(Arc::new))
                    .collect::<Result<Vec<_>>>()?;
                compose(built)
            }
        }
    }
}

impl Catalog {
    pub fn from_name(name: &str, params: &[f64]) -> Result<Catalog> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                config(format!(
                    "catalog map '{name}' takes {n} parameter(s), got {}",
                    params.len()
                ))
            }
        };
        Ok(match name {
            "identity" => {
                want(0)?;
                Catalog::Identity
            }
            "constant" => {
                if params.is_empty() {
                    return config("catalog map 'constant' needs at least one value");
                }
                Catalog::Constant(params.to_vec())
            }
            "affine" => {
                want(2)?;
                Catalog::Affine {
                    a: params[0],
                    b: params[1],
                }
            }
            "power" => {
                want(1)?;
                Catalog::Power { k: params[0] }
            }
            "tent" => match params {
                [] => Catalog::Tent { height: 1.0 },
                [h] => Catalog::Tent { height: *h },
                _ => return config("catalog map 'tent' takes at most one parameter"),
            },
            "logistic" => {
                want(1)?;
                Catalog::Logistic { r: params[0] }
            }
            "rotation" => {
                want(1)?;
                Catalog::Rotation { alpha: params[0] }
            }
            "clamp" => {
                want(2)?;
                Catalog::Clamp {
                    lo: params[0],
                    hi: params[1],
                }
            }
            other => return config(format!("unknown catalog map '{other}'")),
        })
    }

    fn name_and_params(&self) -> (&'static str, Vec<f64>) {
        match self {
            Catalog::Identity => ("identity", vec![]),
            Catalog::Constant(c) => ("constant", c.clone()),
            Catalog::Affine { a, b } => ("affine", vec![*a, *b]),
            Catalog::Power { k } => ("power", vec![*k]),
            Catalog::Tent { height } => ("tent", vec![*height]),
            Catalog::Logistic { r } => ("logistic", vec![*r]),
            Catalog::Rotation { alpha } => ("rotation", vec![*alpha]),
            Catalog::Clamp { lo, hi } => ("clamp", vec![*lo, *hi]),
        }
    }
}

impl MapRep {
    pub fn identity(space: &Space) -> MapRep {
        MapRep::catalog(space, Catalog::Identity).expect("identity is always valid")
    }

    pub fn constant(space: &Space, c: f64) -> MapRep {
        MapRep {
            form: MapForm::Catalog(Catalog::Constant(vec![c])),
            space: space.clone(),
            lipschitz: 0.0,
        }
    }

    /// Polyline through `points`; x-values must increase strictly from the
    /// interval's lower bound to its upper bound.
    pub fn polyline(space: &Space, points: Vec<(f64, f64)>) -> Result<MapRep> {
        let SpaceKind::Interval { lo, hi } = *space.kind() else {
            return config("polyline maps are only defined on intervals");
        };
        if points.len() < 2 {
            return config("a polyline needs at least two breakpoints");
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return config("polyline breakpoints must be finite");
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return config("polyline x-values must be strictly increasing");
        }
        if points[0].0 != lo || points[points.len() - 1].0 != hi {
            return config(format!(
                "polyline must span the domain [{lo}, {hi}], got [{}, {}]",
                points[0].0,
                points[points.len() - 1].0
            ));
        }
        let lipschitz = points
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max);
        Ok(MapRep {
            form: MapForm::PiecewiseLinear(points),
            space: space.clone(),
            lipschitz,
        })
    }

    pub fn catalog(space: &Space, entry: Catalog) -> Result<MapRep> {
        let dim = space.dim();
        let max_abs = space.max_abs_coord();
        let lipschitz = match &entry {
            Catalog::Identity => 1.0,
            Catalog::Constant(c) => {
                if c.len() != 1 && c.len() != dim {
                    return config(format!(
                        "constant map has {} values for a space of dimension {dim}",
                        c.len()
                    ));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return config("constant values must be finite");
                }
                0.0
            }
            Catalog::Affine { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return config("affine coefficients must be finite");
                }
                a.abs()
            }
            Catalog::Power { k } => {
                let negative = (0..dim).any(|i| space.axis_bounds(i).0 < 0.0);
                if !(k.is_finite() && (*k == 0.0 || *k >= 1.0)) {
                    return config(format!("power exponent must be 0 or at least 1, got {k}"));
                }
                if negative && k.fract() != 0.0 {
                    return config("non-integer powers need a nonnegative domain");
                }
                if *k == 0.0 {
                    0.0
                } else {
                    k * max_abs.powf(k - 1.0)
                }
            }
            Catalog::Tent { height } => {
                if !height.is_finite() {
                    return config("tent height must be finite");
                }
                2.0 * height.abs()
            }
            Catalog::Logistic { r } => {
                if !r.is_finite() {
                    return config("logistic parameter must be finite");
                }
                r.abs()
            }
            Catalog::Rotation { alpha } => {
                if !space.is_circle() {
                    return config("rotations are only defined on circles");
                }
                if !alpha.is_finite() {
                    return config("rotation angle must be finite");
                }
                1.0
            }
            Catalog::Clamp { lo, hi } => {
                if !(lo <= hi) {
                    return config("clamp needs lo <= hi");
                }
                1.0
            }
        };
        if space.is_circle()
            && !matches!(
                entry,
                Catalog::Identity | Catalog::Constant(_) | Catalog::Rotation { .. }
            )
        {
            return config("only identity, constant and rotation maps are defined on circles");
        }
        Ok(MapRep {
            form: MapForm::Catalog(entry),
            space: space.clone(),
            lipschitz,
        })
    }

    pub fn form(&self) -> &MapForm {
        &self.form
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn spec(&self) -> MapSpec {
        match &self.form {
            MapForm::PiecewiseLinear(pts) => MapSpec::Pwl {
                points: pts.iter().map(|&(x, y)| [x, y]).collect(),
            },
            MapForm::Catalog(c) => {
                let (name, params) = c.name_and_params();
                MapSpec::Catalog {
                    name: name.to_string(),
                    params,
                }
            }
            MapForm::Composition(parts) => MapSpec::Compose {
                parts: parts.iter().map(|p| p.spec()).collect(),
            },
        }
    }

    /// Image of `x`. The input must lie in the map's domain; circle images
    /// are canonicalized. Whether the image stays in the domain is the
    /// business of [`self_map_check`].
    pub fn eval(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.space.dim() || !self.space.contains(x) {
            return domain(format!("{:?} is outside the map's domain", x.coords()));
        }
        match &self.form {
            MapForm::Composition(parts) => {
                let mut y = x.clone();
                for part in parts.iter().rev() {
                    y = part.eval(&y)?;
                }
                Ok(y)
            }
            _ => {
                let mut y = self.apply(x);
                self.space.canonicalize(&mut y);
                Ok(y)
            }
        }
    }

    /// Unchecked evaluation of a non-composite map, or of a composition
    /// without intermediate domain checks.
    fn apply(&self, x: &Point) -> Point {
        match &self.form {
            MapForm::PiecewiseLinear(pts) => Point::scalar(eval_polyline(pts, x.x())),
            MapForm::Catalog(c) => {
                let mut y = x.clone();
                for (i, v) in y.coords_mut().iter_mut().enumerate() {
                    let (lo, hi) = self.space.axis_bounds(i);
                    *v = apply_catalog(c, *v, i, lo, hi);
                }
                y
            }
            MapForm::Composition(parts) => {
                let mut y = x.clone();
                for part in parts.iter().rev() {
                    y = part.apply(&y);
                    part.space.canonicalize(&mut y);
                }
                y
            }
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match &self.form {
            MapForm::PiecewiseLinear(pts) => out.extend(pts.iter().map(|p| p.0)),
            MapForm::Catalog(_) => {}
            MapForm::Composition(parts) => parts.iter().for_each(|p| p.breakpoints(out)),
        }
    }
}

fn eval_polyline(pts: &[(f64, f64)], x: f64) -> f64 {
    let last = pts.len() - 1;
    if x >= pts[last].0 {
        return pts[last].1;
    }
    if x <= pts[0].0 {
        return pts[0].1;
    }
    // First breakpoint strictly greater than x closes the segment [x_i, x_{i+1}).
    let upper = pts.partition_point(|p| p.0 <= x);
    let (x0, y0) = pts[upper - 1];
    let (x1, y1) = pts[upper];
    if x == x0 {
        return y0;
    }
    y0 + (x - x0) * ((y1 - y0) / (x1 - x0))
}

fn apply_catalog(c: &Catalog, x: f64, axis: usize, lo: f64, hi: f64) -> f64 {
    match c {
        Catalog::Identity => x,
        Catalog::Constant(v) => {
            if v.len() == 1 {
                v[0]
            } else {
                v[axis]
            }
        }
        Catalog::Affine { a, b } => a * x + b,
        Catalog::Power { k } => {
            if k.fract() == 0.0 && k.abs() < i32::MAX as f64 {
                x.powi(*k as i32)
            } else {
                x.powf(*k)
            }
        }
        Catalog::Tent { height } => {
            let u = (x - lo) / (hi - lo);
            lo + (hi - lo) * height * (1.0 - (2.0 * u - 1.0).abs())
        }
        Catalog::Logistic { r } => {
            let u = (x - lo) / (hi - lo);
            lo + (hi - lo) * r * u * (1.0 - u)
        }
        Catalog::Rotation { alpha } => x + alpha,
        Catalog::Clamp { lo: a, hi: b } => x.clamp(*a, *b),
    }
}

/// Composition node applying `parts` right to left.
pub fn compose(parts: Vec<Arc<MapRep>>) -> Result<MapRep> {
    let Some(first) = parts.first() else {
        return config("cannot compose an empty list of maps");
    };
    let space = first.space.clone();
    if parts.iter().any(|p| p.space != space) {
        return domain("all composed maps must share one space");
    }
    let lipschitz = parts.iter().map(|p| p.lipschitz).product();
    Ok(MapRep {
        form: MapForm::Composition(parts),
        space,
        lipschitz,
    })
}

pub fn eval(map: &MapRep, x: &Point) -> Result<Point> {
    map.eval(x)
}

pub fn lipschitz_bound(map: &MapRep) -> f64 {
    map.lipschitz
}

/// Evaluate on `grid(space, resolution)` and on every polyline breakpoint and
/// report the image point furthest outside the domain.
pub fn self_map_check(map: &MapRep, space: &Space, resolution: usize) -> Result<SelfMapReport> {
    let mut probes: Vec<Point> = space.grid(resolution)?.points().to_vec();
    if space.dim() == 1 {
        let mut xs = Vec::new();
        map.breakpoints(&mut xs);
        probes.extend(xs.into_iter().map(Point::scalar));
    }
    let mut worst = (probes[0].clone(), 0.0f64);
    for x in &probes {
        let mut y = map.apply(x);
        space.canonicalize(&mut y);
        let raw = space.excursion(&y);
        let e = if raw <= POINT_EQ_TOL { 0.0 } else { raw };
        if e > worst.1 || e.is_nan() {
            worst = (x.clone(), if e.is_nan() { f64::INFINITY } else { e });
        }
    }
    Ok(SelfMapReport {
        ok: worst.1 == 0.0,
        worst_point: worst.0,
        worst_excursion: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use proptest::prelude::*;

    fn unit() -> Space {
        Space::unit_interval()
    }

    fn at(m: &MapRep, x: f64) -> f64 {
        m.eval(&Point::scalar(x)).unwrap().x()
    }

    fn cat(name: &str, params: &[f64]) -> MapRep {
        MapRep::catalog(&unit(), Catalog::from_name(name, params).unwrap()).unwrap()
    }

    #[test]
    fn example3_first_map_at_one() {
        let f1 = families::example3_map(&unit(), 1);
        assert_eq!(at(&f1, 1.0), 0.5);
    }

    #[test]
    fn power_fixes_one() {
        for k in 1..30 {
            assert_eq!(at(&cat("power", &[k as f64]), 1.0), 1.0);
        }
    }

    #[test]
    fn constant_half() {
        let m = MapRep::constant(&unit(), 0.5);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(at(&m, x), 0.5);
        }
    }

    #[test]
    fn eval_outside_domain() {
        let m = cat("power", &[2.0]);
        assert!(m.eval(&Point::scalar(1.5)).is_err());
    }

    #[test]
    fn compose_examples() {
        let s = unit();
        let id = Arc::new(MapRep::identity(&s));
        let c = compose(vec![id.clone()]).unwrap();
        for x in [0.0, 0.25, 1.0] {
            assert_eq!(at(&c, x), at(&id, x));
        }
        let f1 = Arc::new(MapRep::constant(&s, 0.5));
        let f2 = Arc::new(MapRep::constant(&s, 1.0 / 3.0));
        assert_eq!(at(&compose(vec![f2, f1.clone()]).unwrap(), 0.9), 1.0 / 3.0);
        assert_eq!(at(&compose(vec![f1.clone(), f1]).unwrap(), 0.9), 0.5);
        assert!(compose(vec![]).is_err());
    }

    #[test]
    fn compose_space_mismatch() {
        let a = Arc::new(MapRep::identity(&unit()));
        let b = Arc::new(MapRep::identity(&Space::interval(0.0, 2.0).unwrap()));
        assert!(matches!(
            compose(vec![a, b]),
            Err(crate::NdsError::Domain(_))
        ));
    }

    #[test]
    fn self_map_examples() {
        let s = unit();
        assert!(self_map_check(&cat("power", &[2.0]), &s, 101).unwrap().ok);

        let r = self_map_check(&cat("affine", &[1.0, 0.5]), &s, 101).unwrap();
        assert!(!r.ok);
        assert_eq!(r.worst_excursion, 0.5);
        assert_eq!(r.worst_point.x(), 1.0);

        assert!(
            self_map_check(&families::example3_map(&s, 5), &s, 101)
                .unwrap()
                .ok
        );
        assert!(
            !self_map_check(&cat("logistic", &[4.5]), &s, 101)
                .unwrap()
                .ok
        );
        assert!(
            self_map_check(&cat("logistic", &[4.0]), &s, 101)
                .unwrap()
                .ok
        );
    }

    #[test]
    fn lipschitz_examples() {
        let s = unit();
        assert_eq!(lipschitz_bound(&MapRep::constant(&s, 0.3)), 0.0);
        let tri = MapRep::polyline(&s, vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(lipschitz_bound(&tri), 2.0);
        assert_eq!(lipschitz_bound(&cat("power", &[3.0])), 3.0);
        assert_eq!(lipschitz_bound(&cat("tent", &[])), 2.0);

        let tent = Arc::new(cat("tent", &[]));
        let tt = compose(vec![tent.clone(), tent]).unwrap();
        assert_eq!(lipschitz_bound(&tt), 4.0);
        // Finite-difference oracle: the steepest sampled slope of tent∘tent.
        let h = 1e-6;
        let observed = (0..1000)
            .map(|i| {
                let x = i as f64 / 1000.0 * (1.0 - h);
                ((at(&tt, x + h) - at(&tt, x)) / h).abs()
            })
            .fold(0.0, f64::max);
        assert!((observed - 4.0).abs() < 1e-6, "{observed}");
    }

    #[test]
    fn polyline_validation() {
        let s = unit();
        assert!(MapRep::polyline(&s, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(MapRep::polyline(&s, vec![(0.1, 0.0), (1.0, 0.0)]).is_err());
        assert!(
            MapRep::polyline(&Space::circle(1.0).unwrap(), vec![(0.0, 0.0), (1.0, 0.0)]).is_err()
        );
    }

    #[test]
    fn rotation_on_circle() {
        let c = Space::circle(1.0).unwrap();
        let r = MapRep::catalog(&c, Catalog::Rotation { alpha: 0.75 }).unwrap();
        assert_eq!(r.eval(&Point::scalar(0.5)).unwrap().x(), 0.25);
        assert!(MapRep::catalog(&unit(), Catalog::Rotation { alpha: 0.1 }).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"form":"compose","parts":[{"form":"catalog","name":"tent","params":[]},
            {"form":"pwl","points":[[0,0],[0.5,1],[1,0.5]]}]}"#;
        let spec: MapSpec = serde_json::from_str(json).unwrap();
        let m = spec.build(&unit()).unwrap();
        let again = m.spec().build(&unit()).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(at(&m, x), at(&again, x));
        }
        let bad: MapSpec = serde_json::from_str(r#"{"form":"catalog","name":"nope"}"#).unwrap();
        assert!(bad.build(&unit()).is_err());
    }

    fn arb_map() -> impl Strategy<Value = MapRep> {
        let s = unit();
        let leaf = prop_oneof![
            (0.0f64..1.0).prop_map(|c| MapRep::constant(&Space::unit_interval(), c)),
            (0.0f64..0.5, 0.0f64..0.5).prop_map(|(a, b)| cat("affine", &[a, b])),
            (1u32..6).prop_map(|k| cat("power", &[k as f64])),
            (0.0f64..1.0).prop_map(|h| cat("tent", &[h])),
            (0.0f64..4.0).prop_map(|r| cat("logistic", &[r])),
            proptest::collection::vec(0.0f64..1.0, 1..6).prop_map(move |ys| {
                let n = ys.len() + 1;
                let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.5)];
                for (i, y) in ys.into_iter().enumerate() {
                    pts.push(((i + 1) as f64 / n as f64, y));
                }
                pts.last_mut().unwrap().0 = 1.0;
                MapRep::polyline(&s, pts).unwrap()
            }),
        ];
        leaf.prop_recursive(2, 8, 3, |inner| {
            proptest::collection::vec(inner, 1..4)
                .prop_map(|parts| compose(parts.into_iter().map(Arc::new).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(m in arb_map(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let (fx, fy) = (m.apply(&Point::scalar(x)).x(), m.apply(&Point::scalar(y)).x());
            prop_assert!((fx - fy).abs() <= m.lipschitz() * (x - y).abs() * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn composition_is_associative(
            f in arb_map(), g in arb_map(), h in arb_map(), x in 0.0f64..=1.0,
        ) {
            let (f, g, h) = (Arc::new(f), Arc::new(g), Arc::new(h));
            let left = compose(vec![h.clone(), Arc::new(compose(vec![g.clone(), f.clone()]).unwrap())]).unwrap();
            let right = compose(vec![Arc::new(compose(vec![h, g]).unwrap()), f]).unwrap();
            let p = Point::scalar(x);
            let (a, b) = (left.apply(&p), right.apply(&p));
            prop_assert_eq!(a.x().to_bits(), b.x().to_bits());
        }

        #[test]
        fn polyline_exact_at_breakpoints(ys in proptest::collection::vec(0.0f64..1.0, 2..10)) {
            let n = ys.len() - 1;
            let pts: Vec<(f64, f64)> = ys.iter().enumerate()
                .map(|(i, &y)| (if i == n { 1.0 } else { i as f64 / n as f64 }, y)).collect();
            let m = MapRep::polyline(&unit(), pts.clone()).unwrap();
            for (x, y) in pts {
                prop_assert_eq!(at(&m, x), y);
            }
        }
    }
}
