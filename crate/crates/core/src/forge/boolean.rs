//! Boolean formulas over `{-1, +1}` atoms: a recursive-descent parser, a
//! truth-table evaluator and a compiler to rectifier networks.
//!
//! Grammar (keywords are case-insensitive):
//!
//! ```text
//! expr   := term ('OR' term)*
//! term   := factor ('AND' factor)*
//! factor := 'NOT' factor | '(' expr ')' | identifier
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::nn::{FeedForwardNet, Layer, Linear};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Atom(String),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

/// A parsed formula with its variables in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanAst {
    pub variables: Vec<String>,
    pub root: BoolExpr,
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[BoolExpr]| {
            write!(f, "{name}(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            BoolExpr::Atom(a) => f.write_str(a),
            BoolExpr::Not(c) => write!(f, "not({c})"),
            BoolExpr::And(xs) => list(f, "and", xs),
            BoolExpr::Or(xs) => list(f, "or", xs),
        }
    }
}

impl BoolExpr {
    /// Truth value with `lookup` giving each atom's value.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> bool) -> bool {
        match self {
            BoolExpr::Atom(a) => lookup(a),
            BoolExpr::Not(c) => !c.eval_with(lookup),
            BoolExpr::And(xs) => xs.iter().all(|x| x.eval_with(lookup)),
            BoolExpr::Or(xs) => xs.iter().any(|x| x.eval_with(lookup)),
        }
    }

    fn collect_atoms(&self, out: &mut Vec<String>) {
        match self {
            BoolExpr::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            BoolExpr::Not(c) => c.collect_atoms(out),
            BoolExpr::And(xs) | BoolExpr::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
        }
    }
}

impl BooleanAst {
    pub fn new(variables: Vec<String>, root: BoolExpr) -> Self {
        Self { variables, root }
    }

    /// Evaluates on a `{-1, +1}` assignment aligned with `variables`; positive
    /// entries are true. Returns `+1.0` or `-1.0`.
    pub fn evaluate_pm1(&self, values: &[f64]) -> Result<f64> {
        crate::error::check_dim(self.variables.len(), values.len())?;
        let mut missing = None;
        let truth = self.root.eval_with(&|name| match self.variables.iter().position(|v| v == name) {
            Some(i) => values[i] > 0.0,
            None => false,
        });
        self.root.for_each_atom(&mut |a| {
            if missing.is_none() && !self.variables.iter().any(|v| v == a) {
                missing = Some(a.to_string());
            }
        });
        if let Some(a) = missing {
            return Err(Error::UndeclaredAtom(a));
        }
        Ok(if truth { 1.0 } else { -1.0 })
    }

    /// If the formula is a single AND or OR over distinct atoms that cover
    /// every variable, returns that connective.
    pub fn as_unit(&self) -> Option<Connective> {
        let (conn, xs) = match &self.root {
            BoolExpr::And(xs) => (Connective::And, xs),
            BoolExpr::Or(xs) => (Connective::Or, xs),
            _ => return None,
        };
        let atoms_only = xs.iter().all(|x| matches!(x, BoolExpr::Atom(_)));
        (atoms_only && xs.len() == self.variables.len()).then_some(conn)
    }
}

impl BoolExpr {
    fn for_each_atom(&self, f: &mut dyn FnMut(&str)) {
        match self {
            BoolExpr::Atom(a) => f(a),
            BoolExpr::Not(c) => c.for_each_atom(f),
            BoolExpr::And(xs) | BoolExpr::Or(xs) => xs.iter().for_each(|x| x.for_each_atom(f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    And,
    Or,
    Not,
    LParen,
    RParen,
    Ident(String),
}

fn describe(t: Option<&Tok>) -> String {
    match t {
        None => "end of input".into(),
        Some(Tok::And) => "AND".into(),
        Some(Tok::Or) => "OR".into(),
        Some(Tok::Not) => "NOT".into(),
        Some(Tok::LParen) => "'('".into(),
        Some(Tok::RParen) => "')'".into(),
        Some(Tok::Ident(s)) => format!("identifier `{s}`"),
    }
}

fn lex(text: &str) -> Result<(Vec<(usize, Tok)>, usize)> {
    let mut toks = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            toks.push((off, Tok::LParen));
            i += 1;
        } else if c == ')' {
            toks.push((off, Tok::RParen));
            i += 1;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = chars.get(i).map_or(text.len(), |c| c.0);
            let word = &text[chars[start].0..end];
            let tok = if word.eq_ignore_ascii_case("and") {
                Tok::And
            } else if word.eq_ignore_ascii_case("or") {
                Tok::Or
            } else if word.eq_ignore_ascii_case("not") {
                Tok::Not
            } else {
                Tok::Ident(word.to_string())
            };
            toks.push((off, tok));
        } else {
            return Err(Error::Parse {
                offset: off,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok((toks, text.len()))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn expr(&mut self) -> Result<BoolExpr> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            BoolExpr::Or(terms)
        })
    }

    fn term(&mut self) -> Result<BoolExpr> {
        let mut factors = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            BoolExpr::And(factors)
        })
    }

    fn factor(&mut self) -> Result<BoolExpr> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(BoolExpr::Not(Box::new(self.factor()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.error("')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(BoolExpr::Atom(name))
            }
            _ => self.error("an operand"),
        }
    }
}

/// Parses a formula; errors carry the byte offset of the offending token
/// (or the input length when the input ends early).
pub fn parse_boolean(text: &str) -> Result<BooleanAst> {
    let (toks, end) = lex(text)?;
    let mut p = Parser { toks, pos: 0, end };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return p.error("end of input");
    }
    let mut variables = Vec::new();
    root.collect_atoms(&mut variables);
    Ok(BooleanAst { variables, root })
}

/// Affine form over the activations of one layer.
#[derive(Debug, Clone, Default)]
struct Form {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Form {
    fn unit(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, w)| (i, a * w)).collect(),
            constant: a * self.constant,
        }
    }

    fn plus(&self, other: &Form, a: f64) -> Self {
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().map(|&(i, w)| (i, a * w)));
        out.constant += a * other.constant;
        out
    }
}

struct Signal {
    depth: usize,
    form: Form,
}

/// Layer-by-layer network under construction. `layers[d]` holds the
/// pre-activation forms (over layer `d` activations) of the rectified units
/// of hidden layer `d + 1`; layer 0 is the input.
struct NetBuilder {
    n_inputs: usize,
    layers: Vec<Vec<Form>>,
}

impl NetBuilder {
    fn add_unit(&mut self, depth: usize, form: Form) -> usize {
        while self.layers.len() < depth {
            self.layers.push(Vec::new());
        }
        let units = &mut self.layers[depth - 1];
        units.push(form);
        units.len() - 1
    }

    /// Carries a signal one layer deeper as `ReLU(s) - ReLU(-s)`.
    fn lift(&mut self, s: Signal) -> Signal {
        let d = s.depth + 1;
        let pos = self.add_unit(d, s.form.clone());
        let neg = self.add_unit(d, s.form.scaled(-1.0));
        Signal {
            depth: d,
            form: Form::unit(pos).plus(&Form::unit(neg), -1.0),
        }
    }

    fn compile(&mut self, e: &BoolExpr, vars: &[String]) -> Result<Signal> {
        match e {
            BoolExpr::Atom(a) => {
                let i = vars
                    .iter()
                    .position(|v| v == a)
                    .ok_or_else(|| Error::UndeclaredAtom(a.clone()))?;
                Ok(Signal {
                    depth: 0,
                    form: Form::unit(i),
                })
            }
            BoolExpr::Not(c) => {
                let s = self.compile(c, vars)?;
                Ok(Signal {
                    depth: s.depth,
                    form: s.form.scaled(-1.0),
                })
            }
            BoolExpr::And(xs) => self.gate(Connective::And, xs, vars),
            BoolExpr::Or(xs) => self.gate(Connective::Or, xs, vars),
        }
    }

    fn gate(&mut self, conn: Connective, xs: &[BoolExpr], vars: &[String]) -> Result<Signal> {
        let mut kids = xs.iter().map(|x| self.compile(x, vars)).collect::<Result<Vec<_>>>()?;
        if kids.len() == 1 {
            return Ok(kids.pop().unwrap());
        }
        let depth = kids.iter().map(|k| k.depth).max().unwrap();
        let kids: Vec<Form> = kids
            .into_iter()
            .map(|mut k| {
                while k.depth < depth {
                    k = self.lift(k);
                }
                k.form
            })
            .collect();
        let d = depth + 1;
        let sign = match conn {
            Connective::And => -1.0,
            Connective::Or => 1.0,
        };
        if kids.len() == 2 {
            // (p + q ± |p − q|) / 2 with |a| = ReLU(a) + ReLU(−a)
            let (p, q) = (&kids[0], &kids[1]);
            let sum = p.plus(q, 1.0);
            let diff = p.plus(q, -1.0);
            let u_sum = self.add_unit(d, sum.clone());
            let u_nsum = self.add_unit(d, sum.scaled(-1.0));
            let u_diff = self.add_unit(d, diff.clone());
            let u_ndiff = self.add_unit(d, diff.scaled(-1.0));
            let form = Form {
                terms: vec![
                    (u_sum, 0.5),
                    (u_nsum, -0.5),
                    (u_diff, 0.5 * sign),
                    (u_ndiff, 0.5 * sign),
                ],
                constant: 0.0,
            };
            return Ok(Signal { depth: d, form });
        }
        // n-ary: one symmetric threshold unit, exact on {-1, +1} operands.
        // AND = ReLU(Σp − n + 2) − 1,  OR = 1 − ReLU(−Σp − n + 2)
        let n = kids.len() as f64;
        let mut total = Form::default();
        for k in &kids {
            total = total.plus(k, -sign);
        }
        total.constant += 2.0 - n;
        let u = self.add_unit(d, total);
        Ok(Signal {
            depth: d,
            form: Form {
                terms: vec![(u, -sign)],
                constant: sign,
            },
        })
    }

    fn finish(self, out: Form) -> Result<FeedForwardNet> {
        let mut layers = Vec::new();
        let mut width = self.n_inputs;
        for units in &self.layers {
            layers.push(Layer::Linear(dense(units, width)?));
            layers.push(Layer::Relu);
            width = units.len();
        }
        layers.push(Layer::Linear(dense(&[out], width)?));
        FeedForwardNet::new(self.n_inputs, layers)
    }
}

fn dense(units: &[Form], in_dim: usize) -> Result<Linear> {
    let mut w = vec![0.0; units.len() * in_dim];
    let mut b = Vec::with_capacity(units.len());
    for (j, f) in units.iter().enumerate() {
        for &(i, v) in &f.terms {
            w[j * in_dim + i] += v;
        }
        b.push(f.constant);
    }
    Linear::new(in_dim, units.len(), w, b)
}

/// Compiles a formula to a rectifier network over `{-1, +1}` inputs aligned
/// with `ast.variables`, whose scalar output is `+1` for true and `-1` for
/// false.
///
/// NOT is a weight of −1. Binary AND/OR use `(p + q ∓ |p − q|) / 2`;
/// connectives with three or more operands use a single symmetric threshold
/// unit so that tied operands receive identical gradients.
pub fn compile_boolean(ast: &BooleanAst) -> Result<FeedForwardNet> {
    let mut b = NetBuilder {
        n_inputs: ast.variables.len(),
        layers: Vec::new(),
    };
    if b.n_inputs == 0 {
        return Err(Error::InvalidSpec("formula without atoms".into()));
    }
    let root = b.compile(&ast.root, &ast.variables)?;
    b.finish(root.form)
}
