//! Surface syntax for linear-order expressions and their compilation to
//! coding trees.
//!
//! Grammar (ASCII):
//!
//! ```text
//! expr := sum
//! sum  := prod ('+' prod)*
//! prod := atom ('.' prod)? | atom '^' nat
//! atom := '1' | 'Z' | 'w*' | 'Q' | 'Qd'
//!       | 'Q_' nat '(' expr (',' expr)* ')'
//!       | 'Qd_' nat '(' expr (',' expr)* ')'
//!       | '(' expr ')'
//! ```
//!
//! `Z`, `w*`, `Q`, `Qd` are product operators: `Z.A` replaces every integer
//! by a copy of `A`, and a bare operator means the operator applied to `1`.
//! `A^k` is `k` nested applications. A `+` binds its right-hand side as the
//! tail of the nearest open endpoint-bearing head on the left (`w*.A + B`,
//! `Qd.A + B`, `Q_n(..) + B`); sums anywhere else are rejected, since only
//! those heads leave room for a tail.

use std::fmt;

use thiserror::Error;

use crate::tree::{iso_code, signature, validate, CodingTree, Label, Signature, Vertex};

/// Abstract syntax of a linear-order expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderExpr {
    /// The one-point order.
    Singleton,
    /// `Z.body`.
    ZProd(Box<OrderExpr>),
    /// `Q.body`.
    QProd(Box<OrderExpr>),
    /// `w*.body + tail`; a missing tail elaborates to a copy of the body.
    WStarProd {
        body: Box<OrderExpr>,
        tail: Option<Box<OrderExpr>>,
    },
    /// `Qd.body + tail`.
    QDotProd {
        body: Box<OrderExpr>,
        tail: Option<Box<OrderExpr>>,
    },
    /// `Q_n(part, ...)` with `n ≥ 2` pairwise non-isomorphic parts.
    QnMix(Vec<OrderExpr>),
    /// `Qd_n(part, ...) + tail`; a missing tail elaborates to a copy of the
    /// first part.
    QnDotMix {
        parts: Vec<OrderExpr>,
        tail: Option<Box<OrderExpr>>,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: expected {expected}")]
    Syntax { pos: usize, expected: String },
    #[error("shape error at {pos}: {msg}")]
    Shape { pos: usize, msg: String },
    #[error("arity error at {pos}: {msg}")]
    Arity { pos: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("level misalignment under {context}: subtree heights {heights:?} differ")]
    LevelMisalignment { context: String, heights: Vec<u32> },
    #[error("isomorphic left children under {context}: parts {a} and {b} compile to the same tree")]
    IsomorphicLeftChildren { context: String, a: usize, b: usize },
    #[error("parts of {context} are not pairwise lower isomorphic")]
    NotLowerIsomorphic { context: String },
    #[error("mixture arity {n} below 2")]
    Arity { n: usize },
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(found) if found == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("'{}'", c as char))),
        }
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            expected: expected.to_string(),
        }
    }

    fn nat(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("a number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("a smaller number"))
    }

    fn expr(&mut self) -> Result<OrderExpr, ParseError> {
        let mut head = self.prod()?;
        while self.peek() == Some(b'+') {
            let plus_pos = self.pos;
            self.bump();
            let tail = self.prod()?;
            attach_tail(&mut head, tail).map_err(|msg| ParseError::Shape { pos: plus_pos, msg })?;
        }
        Ok(head)
    }

    fn prod(&mut self) -> Result<OrderExpr, ParseError> {
        match self.peek() {
            Some(b'1') => {
                self.bump();
                self.forbid_suffix("'1'")?;
                Ok(OrderExpr::Singleton)
            }
            Some(b'(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(b')')?;
                self.forbid_suffix("a parenthesized expression")?;
                Ok(inner)
            }
            Some(b'Z') => {
                self.bump();
                self.operator_suffix(|body| OrderExpr::ZProd(Box::new(body)))
            }
            Some(b'w') => {
                self.bump();
                self.expect(b'*')?;
                self.operator_suffix(|body| OrderExpr::WStarProd {
                    body: Box::new(body),
                    tail: None,
                })
            }
            Some(b'Q') => {
                self.bump();
                let dotted = if self.src.get(self.pos) == Some(&b'd') {
                    self.pos += 1;
                    true
                } else {
                    false
                };
                if self.src.get(self.pos) == Some(&b'_') {
                    self.pos += 1;
                    let n_pos = self.pos;
                    let n = self.nat()?;
                    if n < 2 {
                        return Err(ParseError::Arity {
                            pos: n_pos,
                            msg: format!("mixture arity {n} below 2"),
                        });
                    }
                    self.expect(b'(')?;
                    let mut parts = vec![self.expr()?];
                    while self.peek() == Some(b',') {
                        self.bump();
                        parts.push(self.expr()?);
                    }
                    self.expect(b')')?;
                    if parts.len() != n as usize {
                        return Err(ParseError::Arity {
                            pos: n_pos,
                            msg: format!("expected {n} parts, found {}", parts.len()),
                        });
                    }
                    self.forbid_suffix("a mixture")?;
                    if dotted {
                        Ok(OrderExpr::QnDotMix { parts, tail: None })
                    } else {
                        Ok(OrderExpr::QnMix(parts))
                    }
                } else if dotted {
                    self.operator_suffix(|body| OrderExpr::QDotProd {
                        body: Box::new(body),
                        tail: None,
                    })
                } else {
                    self.operator_suffix(|body| OrderExpr::QProd(Box::new(body)))
                }
            }
            _ => Err(self.err("'1', 'Z', 'w*', 'Q', 'Qd', 'Q_n(', 'Qd_n(' or '('")),
        }
    }

    /// Handles the optional `.prod` / `^nat` after an operator atom.
    fn operator_suffix(
        &mut self,
        make: impl Fn(OrderExpr) -> OrderExpr,
    ) -> Result<OrderExpr, ParseError> {
        match self.peek() {
            Some(b'.') => {
                self.bump();
                let body = self.prod()?;
                Ok(make(body))
            }
            Some(b'^') => {
                self.bump();
                let k = self.nat()?;
                let mut e = OrderExpr::Singleton;
                for _ in 0..k {
                    e = make(e);
                }
                Ok(e)
            }
            _ => Ok(make(OrderExpr::Singleton)),
        }
    }

    fn forbid_suffix(&mut self, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(b'.') | Some(b'^') => Err(ParseError::Shape {
                pos: self.pos,
                msg: format!("{what} cannot take '.' or '^'"),
            }),
            _ => Ok(()),
        }
    }
}

/// Hangs `tail` off the innermost open tail slot of `head`. Only
/// endpoint-bearing heads (`w*`, `Qd`, `Q_n`/`Qd_n`) leave room for one.
fn attach_tail(head: &mut OrderExpr, tail: OrderExpr) -> Result<(), String> {
    match head {
        OrderExpr::WStarProd { tail: slot, .. }
        | OrderExpr::QDotProd { tail: slot, .. }
        | OrderExpr::QnDotMix { tail: slot, .. } => match slot {
            Some(inner) => attach_tail(inner, tail),
            None => {
                *slot = Some(Box::new(tail));
                Ok(())
            }
        },
        OrderExpr::QnMix(parts) => {
            *head = OrderExpr::QnDotMix {
                parts: std::mem::take(parts),
                tail: Some(Box::new(tail)),
            };
            Ok(())
        }
        OrderExpr::Singleton | OrderExpr::ZProd(_) | OrderExpr::QProd(_) => Err(
            "'+' is only allowed after a head with a greatest point (w*, Qd, Q_n, Qd_n)".into(),
        ),
    }
}

/// Parses an expression, consuming the whole input.
pub fn parse(text: &str) -> Result<OrderExpr, ParseError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("end of input"));
    }
    Ok(e)
}

fn has_top_level_plus(e: &OrderExpr) -> bool {
    matches!(
        e,
        OrderExpr::WStarProd { tail: Some(_), .. }
            | OrderExpr::QDotProd { tail: Some(_), .. }
            | OrderExpr::QnDotMix { tail: Some(_), .. }
    )
}

fn print_operand(e: &OrderExpr, out: &mut String) {
    if has_top_level_plus(e) {
        out.push('(');
        print_into(e, out);
        out.push(')');
    } else {
        print_into(e, out);
    }
}

fn print_operator(op: &str, body: &OrderExpr, out: &mut String) {
    out.push_str(op);
    if *body != OrderExpr::Singleton {
        out.push('.');
        print_operand(body, out);
    }
}

fn print_into(e: &OrderExpr, out: &mut String) {
    match e {
        OrderExpr::Singleton => out.push('1'),
        OrderExpr::ZProd(_) => {
            // count the maximal Z-chain; `Z^k` only when it ends at 1
            let mut k = 0;
            let mut cur = e;
            while let OrderExpr::ZProd(body) = cur {
                k += 1;
                cur = body;
            }
            if *cur == OrderExpr::Singleton && k >= 2 {
                out.push_str(&format!("Z^{k}"));
            } else if *cur == OrderExpr::Singleton {
                out.push('Z');
            } else {
                for _ in 0..k {
                    out.push_str("Z.");
                }
                print_operand(cur, out);
            }
        }
        OrderExpr::QProd(body) => print_operator("Q", body, out),
        OrderExpr::WStarProd { body, tail } => {
            print_operator("w*", body, out);
            if let Some(t) = tail {
                out.push_str(" + ");
                print_into(t, out);
            }
        }
        OrderExpr::QDotProd { body, tail } => {
            print_operator("Qd", body, out);
            if let Some(t) = tail {
                out.push_str(" + ");
                print_into(t, out);
            }
        }
        OrderExpr::QnMix(parts) => {
            out.push_str(&format!("Q_{}(", parts.len()));
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_into(p, out);
            }
            out.push(')');
        }
        OrderExpr::QnDotMix { parts, tail } => {
            out.push_str(&format!("Qd_{}(", parts.len()));
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_into(p, out);
            }
            out.push(')');
            if let Some(t) = tail {
                out.push_str(" + ");
                print_into(t, out);
            }
        }
    }
}

/// Canonical surface form; `parse(print(e)) == e` for every expression.
pub fn print(e: &OrderExpr) -> String {
    let mut out = String::new();
    print_into(e, &mut out);
    out
}

impl fmt::Display for OrderExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print(self))
    }
}

/// Fills every missing tail: endpoint products take a copy of their body,
/// dotted mixtures a copy of their first part. Idempotent.
pub fn elaborate(e: &OrderExpr) -> OrderExpr {
    match e {
        OrderExpr::Singleton => OrderExpr::Singleton,
        OrderExpr::ZProd(b) => OrderExpr::ZProd(Box::new(elaborate(b))),
        OrderExpr::QProd(b) => OrderExpr::QProd(Box::new(elaborate(b))),
        OrderExpr::WStarProd { body, tail } => {
            let body = elaborate(body);
            let tail = tail
                .as_ref()
                .map(|t| elaborate(t))
                .unwrap_or_else(|| body.clone());
            OrderExpr::WStarProd {
                body: Box::new(body),
                tail: Some(Box::new(tail)),
            }
        }
        OrderExpr::QDotProd { body, tail } => {
            let body = elaborate(body);
            let tail = tail
                .as_ref()
                .map(|t| elaborate(t))
                .unwrap_or_else(|| body.clone());
            OrderExpr::QDotProd {
                body: Box::new(body),
                tail: Some(Box::new(tail)),
            }
        }
        OrderExpr::QnMix(parts) => OrderExpr::QnMix(parts.iter().map(elaborate).collect()),
        OrderExpr::QnDotMix { parts, tail } => {
            let parts: Vec<OrderExpr> = parts.iter().map(elaborate).collect();
            let tail = tail
                .as_ref()
                .map(|t| elaborate(t))
                .unwrap_or_else(|| parts[0].clone());
            OrderExpr::QnDotMix {
                parts,
                tail: Some(Box::new(tail)),
            }
        }
    }
}

struct Builder {
    vertices: Vec<Vertex>,
}

impl Builder {
    fn leaf(&mut self) -> usize {
        self.vertices.push(Vertex {
            label: Label::Singleton,
            level: 0,
            children: vec![],
        });
        self.vertices.len() - 1
    }

    fn node(&mut self, label: Label, children: Vec<usize>) -> usize {
        let level = self.vertices[children[0]].level + 1;
        self.vertices.push(Vertex {
            label,
            level,
            children,
        });
        self.vertices.len() - 1
    }

    /// Extracts the already-built subtree at `root` as a standalone tree.
    fn view(&self, root: usize) -> CodingTree {
        let mut ids = Vec::new();
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            ids.push(u);
            stack.extend(self.vertices[u].children.iter().copied());
        }
        ids.sort_unstable();
        let mut remap = vec![usize::MAX; self.vertices.len()];
        for (new, &old) in ids.iter().enumerate() {
            remap[old] = new;
        }
        let vertices = ids
            .iter()
            .map(|&old| {
                let v = &self.vertices[old];
                Vertex {
                    label: v.label,
                    level: v.level,
                    children: v.children.iter().map(|&c| remap[c]).collect(),
                }
            })
            .collect();
        CodingTree::new(vertices, remap[root]).unwrap()
    }

    fn height(&self, v: usize) -> u32 {
        self.vertices[v].level
    }

    /// All subtrees under one parent must share a height and be pairwise
    /// lower isomorphic.
    fn check_siblings(&self, context: &str, roots: &[usize]) -> Result<(), CompileError> {
        let heights: Vec<u32> = roots.iter().map(|&r| self.height(r)).collect();
        if heights.windows(2).any(|w| w[0] != w[1]) {
            return Err(CompileError::LevelMisalignment {
                context: context.to_string(),
                heights,
            });
        }
        let sigs: Vec<Signature> = roots
            .iter()
            .map(|&r| signature(&self.view(r)).expect("subtrees are valid by construction"))
            .collect();
        if sigs.windows(2).any(|w| w[0] != w[1]) {
            return Err(CompileError::NotLowerIsomorphic {
                context: context.to_string(),
            });
        }
        Ok(())
    }

    fn build(&mut self, e: &OrderExpr) -> Result<usize, CompileError> {
        match e {
            OrderExpr::Singleton => Ok(self.leaf()),
            OrderExpr::ZProd(b) => {
                let c = self.build(b)?;
                Ok(self.node(Label::Z, vec![c]))
            }
            OrderExpr::QProd(b) => {
                let c = self.build(b)?;
                Ok(self.node(Label::Q, vec![c]))
            }
            OrderExpr::WStarProd { body, tail } => {
                let left = self.build(body)?;
                let right = self.build(tail.as_ref().expect("elaborated"))?;
                self.check_siblings(&print(e), &[left, right])?;
                Ok(self.node(Label::WStar, vec![left, right]))
            }
            OrderExpr::QDotProd { body, tail } => {
                let left = self.build(body)?;
                let right = self.build(tail.as_ref().expect("elaborated"))?;
                self.check_siblings(&print(e), &[left, right])?;
                Ok(self.node(Label::QDot, vec![left, right]))
            }
            OrderExpr::QnMix(parts) => {
                if parts.len() < 2 {
                    return Err(CompileError::Arity { n: parts.len() });
                }
                let roots = parts
                    .iter()
                    .map(|p| self.build(p))
                    .collect::<Result<Vec<usize>, _>>()?;
                self.check_siblings(&print(e), &roots)?;
                self.check_left_distinct(&print(e), &roots)?;
                Ok(self.node(Label::Qn(parts.len() as u32), roots))
            }
            OrderExpr::QnDotMix { parts, tail } => {
                if parts.len() < 2 {
                    return Err(CompileError::Arity { n: parts.len() });
                }
                let mut roots = parts
                    .iter()
                    .map(|p| self.build(p))
                    .collect::<Result<Vec<usize>, _>>()?;
                let right = self.build(tail.as_ref().expect("elaborated"))?;
                self.check_left_distinct(&print(e), &roots)?;
                roots.push(right);
                self.check_siblings(&print(e), &roots)?;
                Ok(self.node(Label::QnDot(parts.len() as u32), roots))
            }
        }
    }

    fn check_left_distinct(&self, context: &str, roots: &[usize]) -> Result<(), CompileError> {
        let codes: Vec<String> = roots
            .iter()
            .map(|&r| {
                let view = self.view(r);
                iso_code(&view, view.root())
            })
            .collect();
        for i in 0..codes.len() {
            for j in i + 1..codes.len() {
                if codes[i] == codes[j] {
                    return Err(CompileError::IsomorphicLeftChildren {
                        context: context.to_string(),
                        a: i,
                        b: j,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Compiles an expression into its coding tree. Tails are filled first, so
/// un-elaborated expressions are accepted.
pub fn compile(e: &OrderExpr) -> Result<CodingTree, CompileError> {
    let e = elaborate(e);
    let mut b = Builder { vertices: vec![] };
    let root = b.build(&e)?;
    let tree = CodingTree::new(b.vertices, root).unwrap();
    debug_assert!(validate(&tree).is_valid(), "{}", validate(&tree));
    Ok(tree)
}

#[derive(Debug, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Parse, elaborate and compile in one step.
pub fn compile_str(text: &str) -> Result<CodingTree, ExprError> {
    Ok(compile(&parse(text)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{validate, Label};
    use proptest::prelude::*;

    fn z(k: usize) -> OrderExpr {
        let mut e = OrderExpr::Singleton;
        for _ in 0..k {
            e = OrderExpr::ZProd(Box::new(e));
        }
        e
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse("Z^3").unwrap(), z(3));
        assert_eq!(parse("1").unwrap(), OrderExpr::Singleton);
        assert_eq!(
            parse("w*.Z^2 + Z^2").unwrap(),
            OrderExpr::WStarProd {
                body: Box::new(z(2)),
                tail: Some(Box::new(z(2))),
            }
        );
        // bare atoms desugar to operators applied to 1
        assert_eq!(parse("Z").unwrap(), z(1));
        assert_eq!(
            parse("w*").unwrap(),
            OrderExpr::WStarProd { body: Box::new(OrderExpr::Singleton), tail: None }
        );
        // a '+' after a plain mixture re-reads the head as dotted
        assert_eq!(
            parse("Q_2(w*, Z) + Z").unwrap(),
            OrderExpr::QnDotMix {
                parts: vec![parse("w*").unwrap(), z(1)],
                tail: Some(Box::new(z(1))),
            }
        );
        // chained tails nest
        assert_eq!(
            parse("w*.Z^2 + w*.Z + w*").unwrap(),
            OrderExpr::WStarProd {
                body: Box::new(z(2)),
                tail: Some(Box::new(OrderExpr::WStarProd {
                    body: Box::new(z(1)),
                    tail: Some(Box::new(parse("w*").unwrap())),
                })),
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("Z +"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("Z + Z"), Err(ParseError::Shape { .. })));
        assert!(matches!(parse("1.Z"), Err(ParseError::Shape { .. })));
        assert!(matches!(parse("Q_2(Z)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("Q_1(Z)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("Q_2(Z, Z, Z)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("w"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("Z^"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("Z Z"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("(Z).Z"), Err(ParseError::Shape { .. })));
    }

    #[test]
    fn print_examples() {
        assert_eq!(print(&z(2)), "Z^2");
        assert_eq!(print(&OrderExpr::Singleton), "1");
        assert_eq!(
            print(&OrderExpr::QnMix(vec![parse("w*").unwrap(), z(1)])),
            "Q_2(w*, Z)"
        );
        assert_eq!(print(&parse("w*.Z^2 + w*.Z + w*").unwrap()), "w*.Z^2 + w*.Z + w*");
        // powers only cover chains ending at the singleton
        assert_eq!(print(&OrderExpr::ZProd(Box::new(parse("Q").unwrap()))), "Z.Q");
        // bodies that carry tails get parenthesized
        assert_eq!(
            print(&parse("Z.(w*.Z + Z)").unwrap()),
            "Z.(w*.Z + Z)"
        );
    }

    #[test]
    fn elaborate_fills_tails() {
        let e = parse("w*.Z").unwrap();
        assert_eq!(
            elaborate(&e),
            OrderExpr::WStarProd { body: Box::new(z(1)), tail: Some(Box::new(z(1))) }
        );
        let filled = parse("w*.Z + w*").unwrap();
        assert_eq!(elaborate(&filled), elaborate(&elaborate(&filled)));
        assert_eq!(
            elaborate(&filled),
            OrderExpr::WStarProd {
                body: Box::new(z(1)),
                tail: Some(Box::new(OrderExpr::WStarProd {
                    body: Box::new(OrderExpr::Singleton),
                    tail: Some(Box::new(OrderExpr::Singleton)),
                })),
            }
        );
        // dotted mixtures default to their first part
        let m = parse("Qd_2(w*, Z)").unwrap();
        match elaborate(&m) {
            OrderExpr::QnDotMix { parts, tail } => {
                assert_eq!(*tail.unwrap(), elaborate(&parts[0]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compile_fig_shapes() {
        let z3 = compile_str("Z^3").unwrap();
        assert_eq!(z3.vertex_count(), 4);
        assert_eq!(z3.height(), 3);
        for v in z3.vertices() {
            if v.level > 0 {
                assert_eq!(v.label, Label::Z);
            } else {
                assert_eq!(v.label, Label::Singleton);
            }
        }
        assert_eq!(compile_str("w*.Z^2 + Z^2").unwrap().vertex_count(), 7);
        assert_eq!(compile_str("w*.Z^2 + w*.Z + Z").unwrap().vertex_count(), 9);
        let last = compile_str("w*.Z^2 + w*.Z + w*").unwrap();
        assert_eq!(last.vertex_count(), 10);
        assert!(validate(&last).is_valid());
    }

    #[test]
    fn compile_errors() {
        assert!(matches!(
            compile_str("Q_2(Z, Z)"),
            Err(ExprError::Compile(CompileError::IsomorphicLeftChildren { .. }))
        ));
        assert!(matches!(
            compile_str("Q_2(Z^2, Z)"),
            Err(ExprError::Compile(CompileError::LevelMisalignment { .. }))
        ));
        assert!(matches!(
            compile_str("w*.Z + Q"),
            Err(ExprError::Compile(CompileError::NotLowerIsomorphic { .. }))
        ));
        assert!(matches!(
            compile(&OrderExpr::QnMix(vec![z(1)])),
            Err(CompileError::Arity { n: 1 })
        ));
    }

    #[test]
    fn compile_validates() {
        for expr in ["Z^3", "w*", "Q", "Qd.Z^2 + Z^2", "Q_2(Q, Qd)", "Z.Q_2(w*, Z)"] {
            let tree = compile_str(expr).unwrap();
            assert!(validate(&tree).is_valid(), "{expr}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = OrderExpr> {
        let leaf = prop_oneof![
            Just(OrderExpr::Singleton),
            Just(z(1)),
            Just(parse("w*").unwrap()),
            Just(parse("Q").unwrap()),
            Just(parse("Qd").unwrap()),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(|b| OrderExpr::ZProd(Box::new(b))),
                inner.clone().prop_map(|b| OrderExpr::QProd(Box::new(b))),
                (inner.clone(), proptest::option::of(inner.clone())).prop_map(|(b, t)| {
                    OrderExpr::WStarProd { body: Box::new(b), tail: t.map(Box::new) }
                }),
                (inner.clone(), proptest::option::of(inner.clone())).prop_map(|(b, t)| {
                    OrderExpr::QDotProd { body: Box::new(b), tail: t.map(Box::new) }
                }),
                proptest::collection::vec(inner.clone(), 2..4).prop_map(OrderExpr::QnMix),
                (
                    proptest::collection::vec(inner.clone(), 2..4),
                    proptest::option::of(inner),
                )
                    .prop_map(|(parts, t)| OrderExpr::QnDotMix { parts, tail: t.map(Box::new) }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let s = print(&e);
            let back = parse(&s).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn printed_form_is_fixpoint(e in arb_expr()) {
            let s = print(&e);
            prop_assert_eq!(print(&parse(&s).unwrap()), s);
        }

        #[test]
        fn elaborate_idempotent(e in arb_expr()) {
            let once = elaborate(&e);
            prop_assert_eq!(elaborate(&once), once);
        }
    }
}
