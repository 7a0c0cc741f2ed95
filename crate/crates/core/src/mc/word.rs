//! Normal-form words `x_1 x_2 … x_n` in a free product: every letter is a
//! non-identity element of one factor and neighbouring letters come from
//! different factors.

use crate::error::{Error, Result};
use crate::factors::{FactorSpec, FiniteGroupSpec};

/// An element of one factor group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Elem {
    /// Integer coordinates in `Z^d`.
    Lattice(Vec<i64>),
    /// Index into the Cayley table.
    Finite(usize),
    /// Reduced word in the generators of `Z/2Z ∗ … ∗ Z/2Z`.
    Tree(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub factor: usize,
    pub elem: Elem,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

/// Group law and step distribution of one factor.
#[derive(Clone, Debug)]
pub enum FactorGroup {
    Lattice { dim: usize },
    Finite(FiniteGroupSpec),
    Tree { degree: u32 },
}

impl FactorGroup {
    pub fn from_spec(spec: &FactorSpec) -> Result<Self> {
        match spec {
            FactorSpec::Lattice(l) => Ok(FactorGroup::Lattice { dim: l.dim() }),
            FactorSpec::FiniteGroup(g) => Ok(FactorGroup::Finite(g.clone())),
            FactorSpec::Tree(t) => Ok(FactorGroup::Tree { degree: t.degree() }),
            FactorSpec::Explicit(_) => Err(Error::Unsupported(
                "an explicit factor has no step distribution to walk with".into(),
            )),
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            FactorGroup::Lattice { dim } => Elem::Lattice(vec![0; *dim]),
            FactorGroup::Finite(g) => Elem::Finite(g.identity()),
            FactorGroup::Tree { .. } => Elem::Tree(Vec::new()),
        }
    }

    pub fn is_identity(&self, x: &Elem) -> bool {
        match (self, x) {
            (_, Elem::Lattice(v)) => v.iter().all(|c| *c == 0),
            (FactorGroup::Finite(g), Elem::Finite(i)) => *i == g.identity(),
            (_, Elem::Tree(w)) => w.is_empty(),
            _ => false,
        }
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        match (self, x, y) {
            (_, Elem::Lattice(a), Elem::Lattice(b)) => {
                Elem::Lattice(a.iter().zip(b).map(|(p, q)| p + q).collect())
            }
            (FactorGroup::Finite(g), Elem::Finite(a), Elem::Finite(b)) => {
                Elem::Finite(g.mul(*a, *b))
            }
            (_, Elem::Tree(a), Elem::Tree(b)) => {
                let mut out = a.clone();
                for s in b {
                    if out.last() == Some(s) {
                        out.pop();
                    } else {
                        out.push(*s);
                    }
                }
                Elem::Tree(out)
            }
            _ => panic!("elements {x:?} and {y:?} do not belong to the same factor"),
        }
    }

    pub fn inv(&self, x: &Elem) -> Elem {
        match (self, x) {
            (_, Elem::Lattice(a)) => Elem::Lattice(a.iter().map(|c| -c).collect()),
            (FactorGroup::Finite(g), Elem::Finite(a)) => Elem::Finite(g.inv(*a)),
            (_, Elem::Tree(a)) => Elem::Tree(a.iter().rev().copied().collect()),
            _ => panic!("element {x:?} does not belong to this factor"),
        }
    }

    /// Steps of the factor walk with positive probability.
    pub fn steps(&self, spec: &FactorSpec) -> Vec<(Elem, f64)> {
        match (self, spec) {
            (FactorGroup::Lattice { dim }, FactorSpec::Lattice(l)) => {
                let mut out = Vec::with_capacity(2 * dim);
                for j in 0..*dim {
                    let mut e = vec![0; *dim];
                    e[j] = 1;
                    out.push((Elem::Lattice(e.clone()), l.beta()[j] * l.p()[j]));
                    e[j] = -1;
                    out.push((Elem::Lattice(e), l.beta()[j] * (1.0 - l.p()[j])));
                }
                out
            }
            (FactorGroup::Finite(g), _) => g
                .mu()
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(x, p)| (Elem::Finite(x), *p))
                .collect(),
            (FactorGroup::Tree { degree }, _) => (0..*degree as u8)
                .map(|s| (Elem::Tree(vec![s]), 1.0 / *degree as f64))
                .collect(),
            _ => unreachable!("group built from a different spec"),
        }
    }
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Whether the normal-form invariants hold.
    pub fn is_normal(&self, groups: &[FactorGroup]) -> bool {
        self.letters
            .iter()
            .all(|l| l.factor < groups.len() && !groups[l.factor].is_identity(&l.elem))
            && self.letters.windows(2).all(|w| w[0].factor != w[1].factor)
    }

    pub fn inverse(&self, groups: &[FactorGroup]) -> Word {
        Word {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| Letter {
                    factor: l.factor,
                    elem: groups[l.factor].inv(&l.elem),
                })
                .collect(),
        }
    }

    /// `self · w` letter by letter.
    pub fn mul_word(&self, w: &Word, groups: &[FactorGroup]) -> Word {
        let mut out = self.clone();
        for l in &w.letters {
            word_multiply_in_place(&mut out, groups, l.factor, &l.elem);
        }
        out
    }
}

/// `w · g` for `g` in factor `factor`, reduced to normal form.
pub fn word_multiply(w: &Word, groups: &[FactorGroup], factor: usize, g: &Elem) -> Word {
    let mut out = w.clone();
    word_multiply_in_place(&mut out, groups, factor, g);
    out
}

pub fn word_multiply_in_place(w: &mut Word, groups: &[FactorGroup], factor: usize, g: &Elem) {
    let group = &groups[factor];
    match w.letters.last_mut() {
        Some(last) if last.factor == factor => {
            let merged = group.mul(&last.elem, g);
            if group.is_identity(&merged) {
                // the new last letter is from another factor: nothing to merge
                w.letters.pop();
            } else {
                last.elem = merged;
            }
        }
        _ => {
            if !group.is_identity(g) {
                w.letters.push(Letter {
                    factor,
                    elem: g.clone(),
                });
            }
        }
    }
}
