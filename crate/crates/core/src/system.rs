//! Nonautonomous systems: map sequences, the iteration engine and the
//! constructors that derive new systems (shift, induce, periodic reduction).
//!
//! Indexing starts at 1 and `f_1^0` is the identity. Trajectories are stored
//! from index 0, so `points[n] = f_1^n(x0)`; a difference-equation reading
//! with `x_1 = x` corresponds to `points[n - 1]`.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, NdsError, Result};
use crate::families::Family;
use crate::maps::{compose, self_map_check, MapRep};
use crate::report::fmt_real;
use crate::space::{Point, PointSet, Space};

/// Grid resolution used to validate generated maps as self-maps.
pub const VALIDATION_RESOLUTION: usize = 101;
/// Default horizon for the additivity scan of an index sequence.
pub const DEFAULT_ADDITIVITY_HORIZON: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// No maps beyond the explicit list.
    None,
    RepeatLast,
    /// Cycle through the explicit list again.
    Cycle,
    /// Take `f_n` from a family formula.
    Family(Family),
}

/// Strictly increasing index sequence `k_1 < k_2 < …` defining an induced
/// system. `k_0 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    List(Vec<usize>),
    Linear { linear: usize },
}

impl Gamma {
    pub fn validate(&self) -> Result<()> {
        match self {
            Gamma::List(ks) => {
                if ks.is_empty() {
                    return config("gamma must be nonempty");
                }
                if ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
                    return config("gamma not increasing");
                }
                Ok(())
            }
            Gamma::Linear { linear } if *linear == 0 => config("gamma not increasing"),
            Gamma::Linear { .. } => Ok(()),
        }
    }

    /// Number of defined terms, if finite.
    pub fn len(&self) -> Option<usize> {
        match self {
            Gamma::List(ks) => Some(ks.len()),
            Gamma::Linear { .. } => None,
        }
    }

    /// `k_n`, with `k_0 = 0`.
    pub fn k(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Ok(0);
        }
        match self {
            Gamma::List(ks) => ks.get(n - 1).copied().ok_or_else(|| {
                NdsError::Index(format!("gamma has {} terms, asked for k_{n}", ks.len()))
            }),
            Gamma::Linear { linear } => Ok(linear * n),
        }
    }

    /// Whether `k_n + k_m = k_{n+m}` for every `n, m ≥ 1` with `n + m ≤ horizon`
    /// (and within the defined terms).
    pub fn is_additive(&self, horizon: usize) -> bool {
        let top = self.len().map_or(horizon, |l| l.min(horizon));
        for n in 1..top {
            for m in 1..=(top - n) {
                match (self.k(n), self.k(m), self.k(n + m)) {
                    (Ok(a), Ok(b), Ok(c)) if a + b == c => {}
                    _ => return false,
                }
            }
        }
        true
    }
}

#[derive(Debug)]
pub enum SequenceRule {
    Explicit {
        maps: Vec<Arc<MapRep>>,
        tail: TailRule,
    },
    Periodic {
        block: Vec<Arc<MapRep>>,
    },
    Family {
        family: Family,
        /// Set when the family is autonomous, so every index shares one map.
        fixed: Option<Arc<MapRep>>,
    },
    Shifted {
        base: Arc<MapSequence>,
        k: usize,
    },
    Induced {
        base: Arc<MapSequence>,
        gamma: Gamma,
    },
    /// `n ↦ h ∘ f_n ∘ h_inv`.
    Conjugated {
        base: Arc<MapSequence>,
        h: Arc<MapRep>,
        h_inv: Arc<MapRep>,
    },
}

/// A rule producing `f_n` for every `n ≥ 1`. Generated maps are memoized per
/// index; filling the cache is idempotent, so concurrent readers see the
/// same maps a single-threaded run would.
#[derive(Debug)]
pub struct MapSequence {
    rule: SequenceRule,
    space: Space,
    cache: Mutex<Vec<Option<Arc<MapRep>>>>,
}

fn ensure_self_map(map: &MapRep, space: &Space, what: &str) -> Result<()> {
    let r = self_map_check(map, space, VALIDATION_RESOLUTION)?;
    if r.ok {
        Ok(())
    } else {
        Err(NdsError::Domain(format!(
            "{what} is not a self-map: image of {:?} lies {:e} outside the domain",
            r.worst_point.coords(),
            r.worst_excursion
        )))
    }
}

impl MapSequence {
    pub fn new(space: &Space, rule: SequenceRule) -> Result<MapSequence> {
        let check_all = |maps: &[Arc<MapRep>]| -> Result<()> {
            if maps.is_empty() {
                return config("map list must be nonempty");
            }
            for (i, m) in maps.iter().enumerate() {
                if m.space() != space {
                    return Err(NdsError::Domain(format!(
                        "map {} lives on another space",
                        i + 1
                    )));
                }
                ensure_self_map(m, space, &format!("map {}", i + 1))?;
            }
            Ok(())
        };
        let rule = match rule {
            SequenceRule::Explicit { maps, tail } => {
                check_all(&maps)?;
                if let TailRule::Family(f) = &tail {
                    f.validate(space)?;
                }
                SequenceRule::Explicit { maps, tail }
            }
            SequenceRule::Periodic { block } => {
                check_all(&block)?;
                SequenceRule::Periodic { block }
            }
            SequenceRule::Family { family, .. } => {
                family.validate(space)?;
                let fixed = match &family {
                    Family::Fixed { map } => {
                        let m = Arc::new(map.build(space)?);
                        ensure_self_map(&m, space, "the fixed map")?;
                        Some(m)
                    }
                    _ => None,
                };
                SequenceRule::Family { family, fixed }
            }
            SequenceRule::Shifted { base, k } => {
                if k == 0 {
                    return config("shift index k must be at least 1");
                }
                SequenceRule::Shifted { base, k }
            }
            SequenceRule::Induced { base, gamma } => {
                gamma.validate()?;
                SequenceRule::Induced { base, gamma }
            }
            SequenceRule::Conjugated { base, h, h_inv } => {
                check_all(&[h.clone(), h_inv.clone()])?;
                SequenceRule::Conjugated { base, h, h_inv }
            }
        };
        Ok(MapSequence {
            rule,
            space: space.clone(),
            cache: Mutex::new(Vec::new()),
        })
    }

    pub fn rule(&self) -> &SequenceRule {
        &self.rule
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn periodic_block(&self) -> Option<&[Arc<MapRep>]> {
        match &self.rule {
            SequenceRule::Periodic { block } => Some(block),
            _ => None,
        }
    }

    fn generate(&self, n: usize) -> Result<Arc<MapRep>> {
        match &self.rule {
            SequenceRule::Explicit { maps, tail } => {
                if n <= maps.len() {
                    return Ok(maps[n - 1].clone());
                }
                match tail {
                    TailRule::None => Err(NdsError::Index(format!(
                        "sequence has {} maps and no tail rule, asked for f_{n}",
                        maps.len()
                    ))),
                    TailRule::RepeatLast => Ok(maps[maps.len() - 1].clone()),
                    TailRule::Cycle => Ok(maps[(n - 1) % maps.len()].clone()),
                    TailRule::Family(f) => {
                        let m = f.map(&self.space, n)?;
                        ensure_self_map(&m, &self.space, &format!("f_{n}"))?;
                        Ok(Arc::new(m))
                    }
                }
            }
            SequenceRule::Periodic { block } => Ok(block[(n - 1) % block.len()].clone()),
            SequenceRule::Family { family, fixed } => match fixed {
                Some(m) => Ok(m.clone()),
                None => {
                    let m = family.map(&self.space, n)?;
                    ensure_self_map(&m, &self.space, &format!("f_{n}"))?;
                    Ok(Arc::new(m))
                }
            },
            SequenceRule::Shifted { base, k } => base.nth_map(n + k - 1),
            SequenceRule::Induced { base, gamma } => {
                let (lo, hi) = (gamma.k(n - 1)?, gamma.k(n)?);
                let parts = base.maps(lo + 1, hi)?.into_iter().rev().collect();
                Ok(Arc::new(compose(parts)?))
            }
            SequenceRule::Conjugated { base, h, h_inv } => {
                let f = base.nth_map(n)?;
                Ok(Arc::new(compose(vec![h.clone(), f, h_inv.clone()])?))
            }
        }
    }

    pub fn nth_map(&self, n: usize) -> Result<Arc<MapRep>> {
        if n == 0 {
            return Err(NdsError::Index("maps are indexed from 1".into()));
        }
        if let Some(Some(m)) = self.cache.lock().expect("cache lock").get(n - 1) {
            return Ok(m.clone());
        }
        let m = self.generate(n)?;
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() < n {
            cache.resize(n, None);
        }
        Ok(cache[n - 1].get_or_insert(m).clone())
    }

    /// `f_from, …, f_to` in index order; empty when `from > to`.
    pub fn maps(&self, from: usize, to: usize) -> Result<Vec<Arc<MapRep>>> {
        (from..=to).map(|n| self.nth_map(n)).collect()
    }
}

/// A space together with a map sequence and, optionally, a declared uniform
/// limit of the sequence.
#[derive(Clone, Debug)]
pub struct System {
    space: Space,
    seq: Arc<MapSequence>,
    label: String,
    limit: Option<Arc<MapRep>>,
}

impl System {
    pub fn new(space: &Space, rule: SequenceRule, label: impl Into<String>) -> Result<System> {
        let limit = match &rule {
            SequenceRule::Family { family, .. } => family.default_limit(space)?.map(Arc::new),
            _ => None,
        };
        let seq = Arc::new(MapSequence::new(space, rule)?);
        Ok(System {
            space: space.clone(),
            seq,
            label: label.into(),
            limit,
        })
    }

    pub fn from_family(space: &Space, family: Family, label: impl Into<String>) -> Result<System> {
        System::new(
            space,
            SequenceRule::Family {
                family,
                fixed: None,
            },
            label,
        )
    }

    pub fn periodic(space: &Space, block: Vec<MapRep>, label: impl Into<String>) -> Result<System> {
        let block = block.into_iter().map(Arc::new).collect();
        System::new(space, SequenceRule::Periodic { block }, label)
    }

    /// Replace the declared limit. The limit must be a self-map of the space.
    pub fn with_limit(mut self, limit: Option<MapRep>) -> Result<System> {
        if let Some(l) = &limit {
            if l.space() != &self.space {
                return Err(NdsError::Domain(
                    "declared limit lives on another space".into(),
                ));
            }
            ensure_self_map(l, &self.space, "the declared limit")?;
        }
        self.limit = limit.map(Arc::new);
        Ok(self)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn sequence(&self) -> &Arc<MapSequence> {
        &self.seq
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn limit(&self) -> Option<&Arc<MapRep>> {
        self.limit.as_ref()
    }

    pub fn nth_map(&self, n: usize) -> Result<Arc<MapRep>> {
        self.seq.nth_map(n)
    }

    pub fn maps(&self, from: usize, to: usize) -> Result<Vec<Arc<MapRep>>> {
        self.seq.maps(from, to)
    }

    /// `f_1^n(x)`: the maps `f_1, …, f_n` applied in order.
    pub fn iterate(&self, x: &Point, n: usize) -> Result<Point> {
        let mut x = x.clone();
        self.space.check(&mut x)?;
        apply_in_order(&self.maps(1, n)?, &x)
    }

    pub fn trajectory(&self, x: &Point, n: usize) -> Result<Trajectory> {
        let maps = self.maps(1, n)?;
        let mut points = Vec::with_capacity(n + 1);
        let mut cur = x.clone();
        self.space.check(&mut cur)?;
        points.push(cur.clone());
        for m in &maps {
            cur = m.eval(&cur)?;
            points.push(cur.clone());
        }
        Ok(Trajectory {
            x0: points[0].clone(),
            points,
        })
    }

    /// The shifted system whose `n`-th map is `f_{n+k-1}`.
    pub fn shift(&self, k: usize) -> Result<System> {
        let seq = MapSequence::new(
            &self.space,
            SequenceRule::Shifted {
                base: self.seq.clone(),
                k,
            },
        )?;
        Ok(System {
            space: self.space.clone(),
            seq: Arc::new(seq),
            label: format!("{}[shift {k}]", self.label),
            limit: self.limit.clone(),
        })
    }

    /// The induced system with `n`-th map `f_{k_n} ∘ … ∘ f_{k_{n-1}+1}`.
    pub fn induce(&self, gamma: Gamma) -> Result<System> {
        let seq = MapSequence::new(
            &self.space,
            SequenceRule::Induced {
                base: self.seq.clone(),
                gamma,
            },
        )?;
        Ok(System {
            space: self.space.clone(),
            seq: Arc::new(seq),
            label: format!("{}[induced]", self.label),
            limit: None,
        })
    }

    /// The system `n ↦ h ∘ f_n ∘ h_inv`, carrying `h ∘ φ ∘ h_inv` as its limit.
    pub fn conjugate(&self, h: MapRep, h_inv: MapRep) -> Result<System> {
        let (h, h_inv) = (Arc::new(h), Arc::new(h_inv));
        let limit = match &self.limit {
            Some(l) => Some(Arc::new(compose(vec![
                h.clone(),
                l.clone(),
                h_inv.clone(),
            ])?)),
            None => None,
        };
        let seq = MapSequence::new(
            &self.space,
            SequenceRule::Conjugated {
                base: self.seq.clone(),
                h,
                h_inv,
            },
        )?;
        Ok(System {
            space: self.space.clone(),
            seq: Arc::new(seq),
            label: format!("{}[conjugated]", self.label),
            limit,
        })
    }

    /// `f_1^n` as a single map (the identity when `n = 0`).
    pub fn iterate_map(&self, n: usize) -> Result<MapRep> {
        if n == 0 {
            return Ok(MapRep::identity(&self.space));
        }
        compose(self.maps(1, n)?.into_iter().rev().collect())
    }

    /// Finite shadow of the star product of two iterates: the iterate map at
    /// index `n + m`. In general this is not `f_1^n ∘ f_1^m`.
    pub fn star_iterate(&self, n: usize, m: usize) -> Result<MapRep> {
        self.iterate_map(n + m)
    }

    /// For a periodic system with block `[f_1, …, f_k]`: the period map
    /// `g = f_k ∘ … ∘ f_1` and the residues `f_j ∘ … ∘ f_1` for `0 ≤ j < k`.
    pub fn periodic_reduce(&self) -> Result<(MapRep, Vec<MapRep>)> {
        let Some(block) = self.seq.periodic_block() else {
            return config(format!("system '{}' is not periodic", self.label));
        };
        let g = compose(block.iter().rev().cloned().collect())?;
        let mut residues = vec![MapRep::identity(&self.space)];
        for j in 1..block.len() {
            residues.push(compose(block[..j].iter().rev().cloned().collect())?);
        }
        Ok((g, residues))
    }

    /// Evaluate `f` at every grid point in parallel, preserving grid order.
    pub fn sweep<T, F>(&self, grid: &PointSet, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Point) -> Result<T> + Sync + Send,
    {
        grid.points().par_iter().map(f).collect()
    }
}

pub fn apply_in_order(maps: &[Arc<MapRep>], x: &Point) -> Result<Point> {
    let mut y = x.clone();
    for m in maps {
        y = m.eval(&y)?;
    }
    Ok(y)
}

/// An orbit prefix `x_0, …, x_N` with `x_n = f_1^n(x_0)`.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub x0: Point,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn len_steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Columns `n, x0, …, x{d-1}`.
    pub fn to_csv(&self) -> String {
        let dim = self.x0.dim();
        let mut out = String::from("n");
        for i in 0..dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (n, p) in self.points.iter().enumerate() {
            out.push_str(&n.to_string());
            for c in p.coords() {
                out.push(',');
                out.push_str(&fmt_real(*c));
            }
            out.push('\n');
        }
        out
    }
}

pub fn nth_map(sys: &System, n: usize) -> Result<Arc<MapRep>> {
    sys.nth_map(n)
}

pub fn iterate(sys: &System, x: &Point, n: usize) -> Result<Point> {
    sys.iterate(x, n)
}

pub fn trajectory(sys: &System, x: &Point, n: usize) -> Result<Trajectory> {
    sys.trajectory(x, n)
}

pub fn shift(sys: &System, k: usize) -> Result<System> {
    sys.shift(k)
}

pub fn induce(sys: &System, gamma: Gamma) -> Result<System> {
    sys.induce(gamma)
}

pub fn periodic_reduce(sys: &System) -> Result<(MapRep, Vec<MapRep>)> {
    sys.periodic_reduce()
}

pub fn star_iterate(sys: &System, n: usize, m: usize) -> Result<MapRep> {
    sys.star_iterate(n, m)
}
