//! Distribution-level check that, under unconfoundedness, conditional
//! independence of the observed outcome and treatment given covariates is
//! equivalent to equality in law of the potential outcomes across every pair
//! of assignable treatments.

use crate::stats::RngStream;
use crate::{Error, Result};

/// Largest support size for X, W or Y.
pub const MAX_SUPPORT: usize = 4;

const PROB_TOL: f64 = 1e-12;

/// Joint law of `(X, Y(0), …, Y(|W|−1), W)` on finite supports.
///
/// The potential-outcome vector is coded as an integer `v` in base `ny`
/// whose digit `w` is `Y(w)`; the observed outcome is `Y = Y(W)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCausalWorld {
    nx: usize,
    nw: usize,
    ny: usize,
    /// `P(x, v, w)` at `(x * ny^nw + v) * nw + w`.
    joint: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Theorem1Check {
    /// `Y ⊥ W | X` in the observed-data law.
    pub statement1: bool,
    /// `Y(w) =ᵈ Y(w′) | X` whenever both are assignable at that `X`.
    pub statement2: bool,
    /// `W ⊥ (Y(w))_w | X` holds for the world.
    pub unconfounded: bool,
}

impl Theorem1Check {
    pub fn agrees(&self) -> bool {
        self.statement1 == self.statement2
    }
}

fn check_sizes(nx: usize, nw: usize, ny: usize) -> Result<()> {
    let ok = |k: usize| (1..=MAX_SUPPORT).contains(&k);
    if !(ok(nx) && ok(nw) && ok(ny)) {
        return Err(Error::Domain(format!("supports ({nx}, {nw}, {ny}) must be within 1..={MAX_SUPPORT}")));
    }
    Ok(())
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("{what} is not a probability vector")));
    }
    Ok(())
}

impl DiscreteCausalWorld {
    /// `P(x) P(v | x) P(w | x)`: unconfounded by construction.
    pub fn unconfounded(px: &[f64], outcomes_given_x: &[Vec<f64>], treatment_given_x: &[Vec<f64>]) -> Result<Self> {
        let nx = px.len();
        if outcomes_given_x.len() != nx || treatment_given_x.len() != nx {
            return Err(Error::Shape("one outcome and treatment law per x is required".into()));
        }
        let nw = treatment_given_x.first().map_or(0, Vec::len);
        let nv = outcomes_given_x.first().map_or(0, Vec::len);
        let ny = (1..=MAX_SUPPORT).find(|k| k.pow(nw as u32) == nv).unwrap_or(0);
        check_sizes(nx, nw, ny)?;
        check_distribution(px, "P(x)")?;
        let mut joint = vec![0.0; nx * nv * nw];
        for x in 0..nx {
            check_distribution(&outcomes_given_x[x], "P(v | x)")?;
            check_distribution(&treatment_given_x[x], "P(w | x)")?;
            if outcomes_given_x[x].len() != nv || treatment_given_x[x].len() != nw {
                return Err(Error::Shape("conditional laws differ in length across x".into()));
            }
            for v in 0..nv {
                for w in 0..nw {
                    joint[(x * nv + v) * nw + w] = px[x] * outcomes_given_x[x][v] * treatment_given_x[x][w];
                }
            }
        }
        Ok(Self { nx, nw, ny, joint })
    }

    /// Arbitrary joint law, possibly confounded.
    pub fn from_joint(nx: usize, nw: usize, ny: usize, joint: Vec<f64>) -> Result<Self> {
        check_sizes(nx, nw, ny)?;
        if joint.len() != nx * ny.pow(nw as u32) * nw {
            return Err(Error::Shape(format!("joint table has {} cells", joint.len())));
        }
        check_distribution(&joint, "joint table")?;
        Ok(Self { nx, nw, ny, joint })
    }

    fn nv(&self) -> usize {
        self.ny.pow(self.nw as u32)
    }

    fn p(&self, x: usize, v: usize, w: usize) -> f64 {
        self.joint[(x * self.nv() + v) * self.nw + w]
    }

    fn digit(&self, v: usize, w: usize) -> usize {
        v / self.ny.pow(w as u32) % self.ny
    }

    fn px(&self, x: usize) -> f64 {
        let nv = self.nv();
        self.joint[x * nv * self.nw..(x + 1) * nv * self.nw].iter().sum()
    }

    fn pxw(&self, x: usize, w: usize) -> f64 {
        (0..self.nv()).map(|v| self.p(x, v, w)).sum()
    }

    fn pxv(&self, x: usize, v: usize) -> f64 {
        (0..self.nw).map(|w| self.p(x, v, w)).sum()
    }

    /// Observed-data law `P(x, Y = y, W = w)`.
    pub fn observed(&self, x: usize, y: usize, w: usize) -> f64 {
        (0..self.nv()).filter(|&v| self.digit(v, w) == y).map(|v| self.p(x, v, w)).sum()
    }

    /// `P(x, Y(w) = y)`.
    pub fn potential(&self, x: usize, w: usize, y: usize) -> f64 {
        (0..self.nv()).filter(|&v| self.digit(v, w) == y).map(|v| self.pxv(x, v)).sum()
    }

    pub fn is_unconfounded(&self) -> bool {
        (0..self.nx).all(|x| {
            let px = self.px(x);
            px == 0.0
                || (0..self.nv()).all(|v| {
                    (0..self.nw).all(|w| (self.p(x, v, w) * px - self.pxv(x, v) * self.pxw(x, w)).abs() <= PROB_TOL)
                })
        })
    }
}

/// Evaluates both statements by enumeration. Confounded worlds are
/// evaluated too and reported through the `unconfounded` flag.
pub fn check_theorem1(world: &DiscreteCausalWorld) -> Theorem1Check {
    let (nx, nw, ny) = (world.nx, world.nw, world.ny);
    let mut statement1 = true;
    let mut statement2 = true;
    for x in 0..nx {
        let px = world.px(x);
        if px == 0.0 {
            continue;
        }
        for w in 0..nw {
            let pw = world.pxw(x, w);
            for y in 0..ny {
                let py: f64 = (0..nw).map(|w2| world.observed(x, y, w2)).sum();
                if (world.observed(x, y, w) * px - py * pw).abs() > PROB_TOL {
                    statement1 = false;
                }
            }
        }
        let assignable: Vec<usize> = (0..nw).filter(|&w| world.pxw(x, w) > 0.0).collect();
        for pair in assignable.windows(2) {
            for y in 0..ny {
                if (world.potential(x, pair[0], y) - world.potential(x, pair[1], y)).abs() > PROB_TOL {
                    statement2 = false;
                }
            }
        }
    }
    Theorem1Check {
        statement1,
        statement2,
        unconfounded: world.is_unconfounded(),
    }
}

fn random_simplex(k: usize, s: &mut RngStream) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -s.uniform().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Averages a law over all permutations of the potential-outcome
/// coordinates, which makes every `Y(w)` share one marginal.
fn exchangeable(table: &[f64], nw: usize, ny: usize) -> Vec<f64> {
    let perms = permutations(nw);
    let digits = |v: usize| -> Vec<usize> { (0..nw).map(|w| v / ny.pow(w as u32) % ny).collect() };
    let mut out = vec![0.0; table.len()];
    for (v, &mass) in table.iter().enumerate() {
        let d = digits(v);
        for perm in &perms {
            let code: usize = (0..nw).map(|w| d[perm[w]] * ny.pow(w as u32)).sum();
            out[code] += mass / perms.len() as f64;
        }
    }
    out
}

/// Kind of outcome law drawn by [`random_unconfounded_world`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorldKind {
    /// Exchangeable potential outcomes.
    Null,
    /// Exchangeable except at one treatment that is never assigned.
    DeviantUnassignable,
    /// Unrestricted outcome law.
    Random,
}

/// A random unconfounded world with the given support sizes.
pub fn random_unconfounded_world(
    nx: usize,
    nw: usize,
    ny: usize,
    kind: WorldKind,
    s: &mut RngStream,
) -> Result<DiscreteCausalWorld> {
    check_sizes(nx, nw, ny)?;
    let nv = ny.pow(nw as u32);
    let px = random_simplex(nx, s);
    let deviant = s.below(nw);
    let mut outcomes = Vec::with_capacity(nx);
    let mut treatments = Vec::with_capacity(nx);
    for _ in 0..nx {
        let base = random_simplex(nv, s);
        let law = match kind {
            WorldKind::Random => base,
            WorldKind::Null => exchangeable(&base, nw, ny),
            WorldKind::DeviantUnassignable => {
                let sym = exchangeable(&base, nw, ny);
                let step = ny.pow(deviant as u32);
                let mut out = vec![0.0; nv];
                for (v, &m) in sym.iter().enumerate() {
                    let d = v / step % ny;
                    out[v - d * step + (d + 1) % ny * step] += m;
                }
                out
            }
        };
        let mut pw = random_simplex(nw, s);
        let drop = match kind {
            WorldKind::DeviantUnassignable => Some(deviant),
            _ if nw > 1 && s.uniform() < 0.25 => Some(s.below(nw)),
            _ => None,
        };
        if let Some(d) = drop {
            if nw > 1 {
                pw[d] = 0.0;
                let t: f64 = pw.iter().sum();
                pw.iter_mut().for_each(|v| *v /= t);
            }
        }
        outcomes.push(law);
        treatments.push(pw);
    }
    DiscreteCausalWorld::unconfounded(&px, &outcomes, &treatments)
}

/// Confounded worlds where the two statements disagree.
///
/// The first has `Y(0) = Y(1) = U` and `W = U`: no effect for anyone, yet
/// the observed outcome tracks the treatment. The second has `Y(1) = 1`,
/// `Y(0) = U` and `W = 1 − U`: a real effect masked so that the observed
/// outcome is constant.
pub fn confounded_witnesses() -> Vec<DiscreteCausalWorld> {
    // nx = 1, nw = 2, ny = 2; v = Y(0) + 2 Y(1); index v * 2 + w.
    let mut spurious = vec![0.0; 8];
    spurious[0] = 0.5; // U = 0: v = 0, w = 0
    spurious[3 * 2 + 1] = 0.5; // U = 1: v = 3, w = 1
    let mut masked = vec![0.0; 8];
    masked[2 * 2 + 1] = 0.5; // U = 0: Y(0) = 0, Y(1) = 1, W = 1
    masked[3 * 2] = 0.5; // U = 1: Y(0) = 1, Y(1) = 1, W = 0
    vec![
        DiscreteCausalWorld::from_joint(1, 2, 2, spurious).expect("valid table"),
        DiscreteCausalWorld::from_joint(1, 2, 2, masked).expect("valid table"),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Theorem1Summary {
    pub worlds: usize,
    pub agreeing: usize,
    pub null_worlds: usize,
    pub witnesses: usize,
    pub witnesses_disagreeing: usize,
}

/// Checks `worlds` random binary unconfounded worlds (a third null, a
/// sixth with an unassignable deviant treatment, the rest unrestricted)
/// and the confounded witnesses.
pub fn theorem1_suite(worlds: usize, seed: u64) -> Result<Theorem1Summary> {
    let mut s = RngStream::new(seed, 0);
    let mut agreeing = 0;
    let mut null_worlds = 0;
    for k in 0..worlds {
        let kind = match k % 6 {
            0 | 1 => WorldKind::Null,
            2 => WorldKind::DeviantUnassignable,
            _ => WorldKind::Random,
        };
        let world = random_unconfounded_world(2, 2, 2, kind, &mut s)?;
        let check = check_theorem1(&world);
        if check.agrees() {
            agreeing += 1;
        }
        if check.statement2 {
            null_worlds += 1;
        }
    }
    let witnesses = confounded_witnesses();
    let witnesses_disagreeing = witnesses.iter().filter(|w| !check_theorem1(w).agrees()).count();
    Ok(Theorem1Summary {
        worlds,
        agreeing,
        null_worlds,
        witnesses: witnesses.len(),
        witnesses_disagreeing,
    })
}
