//! Exact group models: solvable word problem at desk scale.
//!
//! A `GroupModel` pairs a presentation with a normal-form evaluator.
//! Built-ins:
//!
//! * free abelian of rank k: normal form is the exponent vector;
//! * free of rank k: normal form is the freely reduced word itself;
//! * genus-2 surface group: words are first Dehn-reduced (exact by
//!   Greendlinger's lemma for this C'(1/8) presentation), then mapped
//!   through the discrete isometry representation on the hyperbolic
//!   plane; distinct elements move the base point apart by at least
//!   twice the octagon inradius, so orbit points separated by a
//!   comfortable Euclidean gap identify elements exactly at desk scale.
//!   The orbit point is interned, and the intern index is the canonical
//!   representation.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::hyperbolic::{self, mat_apply, mat_lorentz_inverse, mat_mul, Mat3, Vec3};
use crate::numberfield::FieldMat;
use crate::presentation::{
    presentation_free, presentation_surface_genus2, presentation_zk, Presentation,
};
use crate::word::Word;

/// Canonical element representation. Equality of representations is
/// equality in the group; hashing makes ball search cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Exponents(Vec<i64>),
    Reduced(Word),
    Orbit(u32),
}

enum ModelKind {
    FreeAbelian { rank: usize },
    Free,
    Surface(SurfaceTable),
}

pub struct GroupModel {
    kind: ModelKind,
    presentation: Presentation,
    name: &'static str,
}

impl GroupModel {
    pub fn free_abelian(rank: usize) -> Self {
        GroupModel {
            kind: ModelKind::FreeAbelian { rank },
            presentation: presentation_zk(rank),
            name: "free-abelian",
        }
    }

    pub fn free(rank: usize) -> Self {
        GroupModel { kind: ModelKind::Free, presentation: presentation_free(rank), name: "free" }
    }

    pub fn surface_genus2() -> Self {
        GroupModel {
            kind: ModelKind::Surface(SurfaceTable::new()),
            presentation: presentation_surface_genus2(),
            name: "surface-genus2",
        }
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn generator_count(&self) -> usize {
        self.presentation.generator_count()
    }

    pub fn normal_form(&self, w: &Word) -> Result<Element> {
        self.presentation.validate_word(w)?;
        match &self.kind {
            ModelKind::FreeAbelian { rank } => Ok(Element::Exponents(w.exponent_vector(*rank))),
            ModelKind::Free => Ok(Element::Reduced(w.clone())),
            ModelKind::Surface(table) => {
                let reduced = self.presentation.dehn_reduce(w)?.word;
                table.intern(&reduced)
            }
        }
    }

    pub fn identity(&self) -> Element {
        self.normal_form(&Word::empty()).expect("empty word evaluates")
    }

    /// Does the word represent the identity? Exact for all built-ins:
    /// the surface model answers through Dehn reduction alone, with no
    /// floating point involved.
    pub fn is_null(&self, w: &Word) -> Result<bool> {
        self.presentation.validate_word(w)?;
        match &self.kind {
            ModelKind::FreeAbelian { rank } => {
                Ok(w.exponent_vector(*rank).iter().all(|&e| e == 0))
            }
            ModelKind::Free => Ok(w.is_empty()),
            ModelKind::Surface(_) => Ok(self.presentation.dehn_reduce(w)?.word.is_empty()),
        }
    }

    /// Independent identity check for the surface model, sharing no
    /// code path with Dehn reduction: multiply out the word in the
    /// exact-arithmetic deck representation and compare with the
    /// identity matrix. The representation is faithful, so this decides
    /// nullity with zero numerical error at any word length.
    pub fn is_null_by_isometry(&self, w: &Word) -> Result<bool> {
        self.presentation.validate_word(w)?;
        match &self.kind {
            ModelKind::Surface(table) => {
                let mut m = FieldMat::identity();
                for &l in w.letters() {
                    let idx = (l.unsigned_abs() as usize) - 1;
                    let g = &table.exact[idx];
                    m = if l > 0 { m.mul(g) } else { m.mul(&g.lorentz_inverse()) };
                }
                Ok(m.is_identity())
            }
            _ => Err(Error::ModelEvaluation(format!(
                "isometry check only applies to the surface model, not {}",
                self.name
            ))),
        }
    }
}

/// Evaluation guard for interning: matrix entries up to 1e12 keep the
/// accumulated round-off of the orbit point below ~1e-2 (observed error
/// tracks eps * length * max running entry for isometry products).
const INTERN_ENTRY_GUARD: f64 = 1e12;

/// Distinct orbit points are >= 2 sinh(arccosh(1+sqrt2)) ~ 4.3 apart in
/// ambient Euclidean coordinates (uniform in the point's distance from
/// the origin); accumulated round-off at the entry guard stays below
/// 1e-2, so a 1.0 matching tolerance is safe in both directions.
const ORBIT_MATCH_TOL: f64 = 1.0;

struct SurfaceTable {
    generators: [Mat3; 4],
    inverses: [Mat3; 4],
    exact: [FieldMat; 4],
    state: Mutex<OrbitInterner>,
}

#[derive(Default)]
struct OrbitInterner {
    points: Vec<Vec3>,
    buckets: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl SurfaceTable {
    fn new() -> Self {
        let exact = crate::numberfield::exact_surface_generators();
        let generators: [Mat3; 4] = std::array::from_fn(|i| exact[i].to_f64());
        let inverses = std::array::from_fn(|i| mat_lorentz_inverse(&generators[i]));
        SurfaceTable { generators, inverses, exact, state: Mutex::new(OrbitInterner::default()) }
    }

    /// Multiply out the word, failing if any running product entry
    /// exceeds `entry_guard`: beyond it double precision can no longer
    /// certify the outcome against the discreteness gap.
    fn evaluate_matrix(&self, w: &Word, entry_guard: f64) -> Result<Mat3> {
        let mut m = hyperbolic::IDENTITY;
        for &l in w.letters() {
            let idx = (l.unsigned_abs() as usize) - 1;
            let g = if l > 0 { &self.generators[idx] } else { &self.inverses[idx] };
            m = mat_mul(&m, g);
            let peak = m.iter().flatten().fold(0.0f64, |acc, &e| acc.max(e.abs()));
            if peak > entry_guard {
                return Err(Error::ModelEvaluation(format!(
                    "isometry evaluation left the certified range (entry {peak:.3e})"
                )));
            }
        }
        Ok(m)
    }

    fn intern(&self, reduced: &Word) -> Result<Element> {
        let m = self.evaluate_matrix(reduced, INTERN_ENTRY_GUARD)?;
        let p = hyperbolic::renormalize(&mat_apply(&m, &hyperbolic::ORIGIN));
        let mut interner = self.state.lock().expect("orbit interner lock");
        Ok(Element::Orbit(interner.intern(p)))
    }
}

impl OrbitInterner {
    fn bucket_of(p: &Vec3) -> (i64, i64, i64) {
        (p[0].round() as i64, p[1].round() as i64, p[2].round() as i64)
    }

    fn intern(&mut self, p: Vec3) -> u32 {
        let (bx, by, bz) = Self::bucket_of(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.buckets.get(&(bx + dx, by + dy, bz + dz)) {
                        for &id in ids {
                            let q = &self.points[id as usize];
                            let d2 = (p[0] - q[0]).powi(2)
                                + (p[1] - q[1]).powi(2)
                                + (p[2] - q[2]).powi(2);
                            if d2 < ORBIT_MATCH_TOL * ORBIT_MATCH_TOL {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        self.buckets.entry((bx, by, bz)).or_default().push(id);
        id
    }
}
