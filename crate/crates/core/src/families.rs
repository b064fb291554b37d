//! Indexed map families `n ↦ f_n` used by convergent-family sequences and
//! by the shipped fixtures.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::maps::{Catalog, MapRep, MapSpec};
use crate::space::{Space, SpaceKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `f_n ≡ lo + (hi - lo)/(n + 1)`; on `[0, 1]` the constant `1/(n+1)`.
    ConstantReciprocal,
    /// `f_n(x) = x^n`.
    Power,
    /// Three-segment polylines on `[0, 1]` converging uniformly to
    /// `x ↦ min(x, 1/2)`.
    Example3,
    /// `f_n(x) = a x + b + c/(n + 1)`.
    AffineDrift { a: f64, b: f64, c: f64 },
    /// Tent maps with peak height `1 - 1/(n + 1)`.
    TentRamp,
    /// The same map at every index.
    Fixed { map: MapSpec },
}

fn require_unit_interval(space: &Space, what: &str) -> Result<()> {
    match space.kind() {
        SpaceKind::Interval { lo, hi } if *lo == 0.0 && *hi == 1.0 => Ok(()),
        _ => config(format!("the {what} family is defined on [0, 1] only")),
    }
}

impl Family {
    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            Family::Example3 => require_unit_interval(space, "example3"),
            Family::Fixed { map } => map.build(space).map(|_| ()),
            Family::ConstantReciprocal if space.is_circle() => {
                config("constant_reciprocal needs an interval or a box")
            }
            Family::Power | Family::AffineDrift { .. } | Family::TentRamp if space.is_circle() => {
                config("this family is not defined on circles")
            }
            _ => self.map(space, 1).map(|_| ()),
        }
    }

    /// The `n`-th map, `n ≥ 1`.
    pub fn map(&self, space: &Space, n: usize) -> Result<MapRep> {
        let nf = n as f64;
        match self {
            Family::ConstantReciprocal => {
                let values: Vec<f64> = (0..space.dim())
                    .map(|i| {
                        let (lo, hi) = space.axis_bounds(i);
                        lo + (hi - lo) / (nf + 1.0)
                    })
                    .collect();
                MapRep::catalog(space, Catalog::Constant(values))
            }
            Family::Power => MapRep::catalog(space, Catalog::Power { k: nf }),
            Family::Example3 => {
                require_unit_interval(space, "example3")?;
                Ok(example3_map(space, n))
            }
            Family::AffineDrift { a, b, c } => MapRep::catalog(
                space,
                Catalog::Affine {
                    a: *a,
                    b: b + c / (nf + 1.0),
                },
            ),
            Family::TentRamp => MapRep::catalog(
                space,
                Catalog::Tent {
                    height: 1.0 - 1.0 / (nf + 1.0),
                },
            ),
            Family::Fixed { map } => map.build(space),
        }
    }

    /// Uniform limit of the family when it has one.
    pub fn default_limit(&self, space: &Space) -> Result<Option<MapRep>> {
        Ok(match self {
            Family::ConstantReciprocal => {
                let values: Vec<f64> = (0..space.dim()).map(|i| space.axis_bounds(i).0).collect();
                Some(MapRep::catalog(space, Catalog::Constant(values))?)
            }
            Family::Power => None,
            Family::Example3 => Some(example3_limit(space)),
            Family::AffineDrift { a, b, .. } => {
                Some(MapRep::catalog(space, Catalog::Affine { a: *a, b: *b })?)
            }
            Family::TentRamp => Some(MapRep::catalog(space, Catalog::Tent { height: 1.0 })?),
            Family::Fixed { map } => Some(map.build(space)?),
        })
    }
}

/// The `n`-th map of the three-segment family on `[0, 1]`.
///
/// For `n ≥ 3` the graph joins `(0,0)`, `(1/n, 1/(n+1))`, `(1/2, 1/2)` and
/// `(1, 1/2)`. At `n = 2` the middle breakpoint would coincide with `(1/2, ·)`,
/// so `f_2` reuses the `f_1` polyline `(0,0)`, `(1/2, 1/3)`, `(1, 1/2)`; this
/// keeps `f_1^n(1) = 1/(n+1)` for every `n`.
pub fn example3_map(space: &Space, n: usize) -> MapRep {
    assert!(n >= 1, "maps are indexed from 1");
    let pts = if n <= 2 {
        vec![(0.0, 0.0), (0.5, 1.0 / 3.0), (1.0, 0.5)]
    } else {
        let nf = n as f64;
        vec![
            (0.0, 0.0),
            (1.0 / nf, 1.0 / (nf + 1.0)),
            (0.5, 0.5),
            (1.0, 0.5),
        ]
    };
    MapRep::polyline(space, pts).expect("example3 polylines are valid on [0, 1]")
}

/// `x ↦ min(x, 1/2)` as a polyline.
pub fn example3_limit(space: &Space) -> MapRep {
    MapRep::polyline(space, vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.5)]).expect("valid on [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::self_map_check;
    use crate::space::Point;

    #[test]
    fn example3_orbit_hits_breakpoints() {
        let s = Space::unit_interval();
        let mut x = Point::scalar(1.0);
        for n in 1..=12 {
            x = example3_map(&s, n).eval(&x).unwrap();
            assert_eq!(x.x(), 1.0 / (n as f64 + 1.0), "n = {n}");
        }
    }

    #[test]
    fn example3_segment_values() {
        let s = Space::unit_interval();
        for n in 3..40 {
            let f = example3_map(&s, n);
            let nf = n as f64;
            assert_eq!(
                f.eval(&Point::scalar(1.0 / nf)).unwrap().x(),
                1.0 / (nf + 1.0)
            );
            assert_eq!(f.eval(&Point::scalar(0.5)).unwrap().x(), 0.5);
            assert_eq!(f.eval(&Point::scalar(0.8)).unwrap().x(), 0.5);
            assert!(self_map_check(&f, &s, 101).unwrap().ok);
        }
    }

    #[test]
    fn families_are_self_maps() {
        let s = Space::unit_interval();
        let fams = [
            Family::ConstantReciprocal,
            Family::Power,
            Family::Example3,
            Family::AffineDrift {
                a: 0.5,
                b: 0.25,
                c: 0.1,
            },
            Family::TentRamp,
        ];
        for fam in &fams {
            fam.validate(&s).unwrap();
            for n in 1..20 {
                assert!(
                    self_map_check(&fam.map(&s, n).unwrap(), &s, 101)
                        .unwrap()
                        .ok
                );
            }
        }
    }

    #[test]
    fn example3_rejects_other_domains() {
        let s = Space::interval(0.0, 2.0).unwrap();
        assert!(Family::Example3.validate(&s).is_err());
    }

    #[test]
    fn family_json() {
        let f: Family =
            serde_json::from_str(r#"{"name":"affine_drift","a":0.5,"b":0.25,"c":0.1}"#).unwrap();
        assert_eq!(
            f,
            Family::AffineDrift {
                a: 0.5,
                b: 0.25,
                c: 0.1
            }
        );
        let f: Family =
            serde_json::from_str(r#"{"name":"fixed","map":{"form":"catalog","name":"identity"}}"#)
                .unwrap();
        assert!(matches!(f, Family::Fixed { .. }));
    }
}
