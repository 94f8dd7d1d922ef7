//! Rank-1 constraint systems and the builder that both compiles and assigns them.
//!
//! A circuit is written once as a function over [`Builder`]. In compile mode the
//! builder records constraints and the values are placeholders; in assign mode it
//! records values and checks every constraint as it is emitted, remembering the
//! first one that fails together with the label of the gadget that emitted it.

use ark_ff::{One, Zero};

use crate::crypto::Fr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    One,
    Public(u32),
    Private(u32),
}

/// Sparse linear combination, sorted by variable, no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lc(pub Vec<(Var, Fr)>);

impl Lc {
    pub fn zero() -> Self {
        Lc(Vec::new())
    }

    pub fn one() -> Self {
        Lc::constant(Fr::one())
    }

    pub fn constant(c: Fr) -> Self {
        if c.is_zero() {
            Lc::zero()
        } else {
            Lc(vec![(Var::One, c)])
        }
    }

    pub fn var(v: Var) -> Self {
        Lc(vec![(v, Fr::one())])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn constant_value(&self) -> Option<Fr> {
        match self.0.as_slice() {
            [] => Some(Fr::zero()),
            [(Var::One, c)] => Some(*c),
            _ => None,
        }
    }

    /// `self + k·other`
    pub fn add_scaled(&self, other: &Lc, k: Fr) -> Lc {
        if k.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take_left = j >= other.0.len() || (i < self.0.len() && self.0[i].0 < other.0[j].0);
            let take_right = i >= self.0.len() || (j < other.0.len() && other.0[j].0 < self.0[i].0);
            if take_left {
                out.push(self.0[i]);
                i += 1;
            } else if take_right {
                out.push((other.0[j].0, other.0[j].1 * k));
                j += 1;
            } else {
                let c = self.0[i].1 + other.0[j].1 * k;
                if !c.is_zero() {
                    out.push((self.0[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        Lc(out)
    }

    pub fn add(&self, other: &Lc) -> Lc {
        self.add_scaled(other, Fr::one())
    }

    pub fn sub(&self, other: &Lc) -> Lc {
        self.add_scaled(other, -Fr::one())
    }

    pub fn scale(&self, k: Fr) -> Lc {
        if k.is_zero() {
            return Lc::zero();
        }
        Lc(self.0.iter().map(|(v, c)| (*v, *c * k)).collect())
    }

    pub fn add_const(&self, c: Fr) -> Lc {
        self.add(&Lc::constant(c))
    }
}

impl From<Var> for Lc {
    fn from(v: Var) -> Self {
        Lc::var(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub a: Lc,
    pub b: Lc,
    pub c: Lc,
}

/// Contiguous run of constraints emitted under one label.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Section {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// First unsatisfied constraint seen in assign mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub label: String,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Compile,
    Assign,
}

pub struct Builder {
    mode: Mode,
    public: Vec<Fr>,
    private: Vec<Fr>,
    constraints: Vec<Constraint>,
    num_constraints: usize,
    sections: Vec<Section>,
    label: String,
    violation: Option<Violation>,
}

impl Builder {
    pub fn new(mode: Mode) -> Self {
        Builder {
            mode,
            public: Vec::new(),
            private: Vec::new(),
            constraints: Vec::new(),
            num_constraints: 0,
            sections: Vec::new(),
            label: String::new(),
            violation: None,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn alloc_public(&mut self, value: Fr) -> Var {
        self.public.push(value);
        Var::Public(self.public.len() as u32 - 1)
    }

    pub fn alloc(&mut self, value: Fr) -> Var {
        self.private.push(value);
        Var::Private(self.private.len() as u32 - 1)
    }

    pub fn value(&self, v: Var) -> Fr {
        match v {
            Var::One => Fr::one(),
            Var::Public(i) => self.public[i as usize],
            Var::Private(i) => self.private[i as usize],
        }
    }

    pub fn eval(&self, lc: &Lc) -> Fr {
        lc.0.iter().fold(Fr::zero(), |acc, (v, c)| acc + self.value(*v) * c)
    }

    pub fn enforce(&mut self, a: Lc, b: Lc, c: Lc) {
        match self.mode {
            Mode::Compile => self.constraints.push(Constraint { a, b, c }),
            Mode::Assign => {
                if self.violation.is_none() && self.eval(&a) * self.eval(&b) != self.eval(&c) {
                    self.violation = Some(Violation {
                        label: self.label.clone(),
                        index: self.num_constraints,
                    });
                }
            }
        }
        self.num_constraints += 1;
    }

    /// `lc == 0`
    pub fn enforce_zero(&mut self, lc: Lc) {
        self.enforce(lc, Lc::one(), Lc::zero());
    }

    pub fn enforce_equal(&mut self, x: &Lc, y: &Lc) {
        self.enforce_zero(x.sub(y));
    }

    /// Allocates `x·y` and constrains it.
    pub fn mul(&mut self, x: &Lc, y: &Lc) -> Lc {
        let v = self.eval(x) * self.eval(y);
        let out = self.alloc(v);
        self.enforce(x.clone(), y.clone(), Lc::var(out));
        Lc::var(out)
    }

    /// Replaces a long combination by a single fresh variable.
    pub fn materialize(&mut self, x: &Lc) -> Lc {
        let v = self.eval(x);
        let out = self.alloc(v);
        self.enforce(x.clone(), Lc::one(), Lc::var(out));
        Lc::var(out)
    }

    /// Runs `f` with constraints attributed to `label`.
    pub fn section<R>(&mut self, label: impl Into<String>, f: impl FnOnce(&mut Self) -> R) -> R {
        let previous = std::mem::replace(&mut self.label, label.into());
        let start = self.num_constraints;
        let out = f(self);
        let end = self.num_constraints;
        let label = std::mem::replace(&mut self.label, previous);
        if self.mode == Mode::Compile && end > start {
            self.sections.push(Section { label, start, end });
        }
        out
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn num_public(&self) -> usize {
        self.public.len()
    }

    pub fn num_private(&self) -> usize {
        self.private.len()
    }

    pub fn violation(&self) -> Option<&Violation> {
        self.violation.as_ref()
    }

    pub fn into_parts(self) -> BuilderOutput {
        BuilderOutput {
            public: self.public,
            private: self.private,
            constraints: self.constraints,
            num_constraints: self.num_constraints,
            sections: self.sections,
            violation: self.violation,
        }
    }
}

pub struct BuilderOutput {
    pub public: Vec<Fr>,
    pub private: Vec<Fr>,
    pub constraints: Vec<Constraint>,
    pub num_constraints: usize,
    pub sections: Vec<Section>,
    pub violation: Option<Violation>,
}

/// Checks a full assignment against a constraint list. Returns the first failing index.
pub fn first_unsatisfied(constraints: &[Constraint], public: &[Fr], private: &[Fr]) -> Option<usize> {
    let value = |v: &Var| match v {
        Var::One => Fr::one(),
        Var::Public(i) => public.get(*i as usize).copied().unwrap_or_default(),
        Var::Private(i) => private.get(*i as usize).copied().unwrap_or_default(),
    };
    let eval = |lc: &Lc| lc.0.iter().fold(Fr::zero(), |acc, (v, c)| acc + value(v) * c);
    constraints.iter().position(|k| eval(&k.a) * eval(&k.b) != eval(&k.c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lc_merge_cancels() {
        let x = Lc::var(Var::Private(0));
        let y = Lc::var(Var::Public(0)).add(&x);
        let z = y.sub(&x);
        assert_eq!(z, Lc::var(Var::Public(0)));
        assert!(x.sub(&x).is_empty());
    }

    #[test]
    fn assign_mode_reports_first_violation() {
        let mut b = Builder::new(Mode::Assign);
        let x = b.alloc(Fr::from(3u64));
        b.section("good", |b| {
            let sq = b.mul(&x.into(), &x.into());
            b.enforce_equal(&sq, &Lc::constant(Fr::from(9u64)));
        });
        b.section("bad", |b| b.enforce_equal(&x.into(), &Lc::constant(Fr::from(4u64))));
        b.section("also bad", |b| b.enforce_equal(&x.into(), &Lc::constant(Fr::from(5u64))));
        let v = b.violation().unwrap();
        assert_eq!(v.label, "bad");
        assert_eq!(v.index, 2);
    }

    #[test]
    fn compile_mode_records_sections() {
        let mut b = Builder::new(Mode::Compile);
        let x = b.alloc(Fr::zero());
        b.section("sq", |b| b.mul(&x.into(), &x.into()));
        let out = b.into_parts();
        assert_eq!(out.constraints.len(), 1);
        assert_eq!(out.sections[0].label, "sq");
    }
}
