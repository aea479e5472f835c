//! Step-cost model for arithmetic expressions under three encryption
//! regimes: standard bulk encryption (one step), naive FHE (every operand
//! and every operation encrypted separately), and the squeezed form where
//! operand encryption folds into the operator steps.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {found:?} at position {position}")]
    UnexpectedChar { position: usize, found: char },
    #[error("unexpected token {found:?} at position {position}, expected {expected}")]
    UnexpectedToken {
        position: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unexpected end of input, expected {expected}")]
    UnexpectedEnd { expected: &'static str },
    #[error("trailing input {found:?} at position {position}")]
    TrailingInput { position: usize, found: String },
}

/// Binary operators in the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Mul,
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinOp::Add => write!(f, "+"),
            BinOp::Mul => write!(f, "*"),
        }
    }
}

/// Expression AST: variables combined with `+` and `*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprNode {
    Var(String),
    Add(Box<ExprNode>, Box<ExprNode>),
    Mul(Box<ExprNode>, Box<ExprNode>),
}

impl ExprNode {
    /// Number of leaf (variable) occurrences.
    pub fn leaf_count(&self) -> u64 {
        match self {
            ExprNode::Var(_) => 1,
            ExprNode::Add(l, r) | ExprNode::Mul(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Number of internal (operator) nodes.
    pub fn internal_count(&self) -> u64 {
        match self {
            ExprNode::Var(_) => 0,
            ExprNode::Add(l, r) | ExprNode::Mul(l, r) => {
                1 + l.internal_count() + r.internal_count()
            }
        }
    }

    /// Distinct variable names used.
    pub fn distinct_vars(&self) -> u64 {
        fn collect<'a>(node: &'a ExprNode, out: &mut std::collections::BTreeSet<&'a str>) {
            match node {
                ExprNode::Var(name) => {
                    out.insert(name);
                }
                ExprNode::Add(l, r) | ExprNode::Mul(l, r) => {
                    collect(l, out);
                    collect(r, out);
                }
            }
        }
        let mut names = std::collections::BTreeSet::new();
        collect(self, &mut names);
        names.len() as u64
    }

    /// Fully parenthesized infix rendering; parses back to the same tree.
    pub fn to_infix(&self) -> String {
        match self {
            ExprNode::Var(name) => name.clone(),
            ExprNode::Add(l, r) => format!("({} + {})", l.to_infix(), r.to_infix()),
            ExprNode::Mul(l, r) => format!("({} * {})", l.to_infix(), r.to_infix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Plus,
    Star,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(name) => name.clone(),
            Token::Plus => "+".to_string(),
            Token::Star => "*".to_string(),
            Token::LParen => "(".to_string(),
            Token::RParen => ")".to_string(),
        }
    }
}

fn tokenize(input: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        match c {
            ' ' | '\t' | '\n' | '\r' => pos += 1,
            '+' => {
                tokens.push((Token::Plus, pos));
                pos += 1;
            }
            '*' | '×' => {
                tokens.push((Token::Star, pos));
                pos += 1;
            }
            '(' => {
                tokens.push((Token::LParen, pos));
                pos += 1;
            }
            ')' => {
                tokens.push((Token::RParen, pos));
                pos += 1;
            }
            'a'..='z' => {
                let start = pos;
                let mut name = String::new();
                while pos < chars.len()
                    && (chars[pos].is_ascii_lowercase() || chars[pos].is_ascii_digit())
                {
                    name.push(chars[pos]);
                    pos += 1;
                }
                tokens.push((Token::Ident(name), start));
            }
            _ => return Err(ParseError::UnexpectedChar { position: pos, found: c }),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    index: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.index)
    }

    fn advance(&mut self) -> Option<(Token, usize)> {
        let tok = self.tokens.get(self.index).cloned();
        if tok.is_some() {
            self.index += 1;
        }
        tok
    }

    // expr := term ('+' term)*
    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.term()?;
        while matches!(self.peek(), Some((Token::Plus, _))) {
            self.advance();
            let rhs = self.term()?;
            node = ExprNode::Add(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    // term := factor ('*' factor)*
    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut node = self.factor()?;
        while matches!(self.peek(), Some((Token::Star, _))) {
            self.advance();
            let rhs = self.factor()?;
            node = ExprNode::Mul(Box::new(node), Box::new(rhs));
        }
        Ok(node)
    }

    // factor := ident | '(' expr ')'
    fn factor(&mut self) -> Result<ExprNode, ParseError> {
        match self.advance() {
            Some((Token::Ident(name), _)) => Ok(ExprNode::Var(name)),
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                match self.advance() {
                    Some((Token::RParen, _)) => Ok(inner),
                    Some((tok, position)) => Err(ParseError::UnexpectedToken {
                        position,
                        found: tok.describe(),
                        expected: "')'",
                    }),
                    None => Err(ParseError::UnexpectedEnd { expected: "')'" }),
                }
            }
            Some((tok, position)) => Err(ParseError::UnexpectedToken {
                position,
                found: tok.describe(),
                expected: "a variable or '('",
            }),
            None => Err(ParseError::UnexpectedEnd {
                expected: "a variable or '('",
            }),
        }
    }
}

/// Parses an expression over lowercase variables, `+`, `*` (or `×`), and
/// parentheses. `*` binds tighter than `+`; both associate left.
pub fn parse_expression(input: &str) -> Result<ExprNode, ParseError> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { tokens, index: 0 };
    let node = parser.expr()?;
    if let Some((tok, position)) = parser.peek() {
        return Err(ParseError::TrailingInput {
            position: *position,
            found: tok.describe(),
        });
    }
    Ok(node)
}

/// Encryption regime being costed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// Encrypt the whole function once.
    Standard,
    /// Encrypt every operand occurrence and every operation.
    Fhe,
    /// Operand encryption fused into the operator steps.
    CerberusSqueezed,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CostOptions {
    /// Count each distinct variable once instead of charging every
    /// occurrence its own encryption.
    pub distinct_leaves: bool,
}

/// Computational steps for `ast` under `mode`.
pub fn cost(ast: &ExprNode, mode: CostMode) -> u64 {
    cost_with(ast, mode, &CostOptions::default())
}

pub fn cost_with(ast: &ExprNode, mode: CostMode, options: &CostOptions) -> u64 {
    match mode {
        CostMode::Standard => 1,
        CostMode::Fhe => {
            let leaves = if options.distinct_leaves {
                ast.distinct_vars()
            } else {
                ast.leaf_count()
            };
            leaves + ast.internal_count()
        }
        CostMode::CerberusSqueezed => ast.internal_count().max(1),
    }
}

/// An input to a fused step: either a leaf encrypted inside this step or the
/// output of an earlier step (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "from", content = "value")]
pub enum StepInput {
    Leaf(String),
    Step(usize),
}

impl fmt::Display for StepInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepInput::Leaf(name) => write!(f, "{name}"),
            StepInput::Step(idx) => write!(f, "s{idx}"),
        }
    }
}

/// One fused computation: an operator with its operands, or a bare
/// encryption for a leaf-only expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionStep {
    pub op: Option<BinOp>,
    pub inputs: Vec<StepInput>,
}

impl FusionStep {
    /// Leaves newly encrypted inside this step.
    pub fn absorbed_leaves(&self) -> Vec<&str> {
        self.inputs
            .iter()
            .filter_map(|input| match input {
                StepInput::Leaf(name) => Some(name.as_str()),
                StepInput::Step(_) => None,
            })
            .collect()
    }
}

/// Ordered fused steps; post-order over the operator nodes, one step each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionPlan {
    pub steps: Vec<FusionStep>,
}

impl FusionPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Human-readable lines like "s1 = a + b" or "s3 = s1 + s2".
    pub fn render(&self) -> Vec<String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, step)| match (&step.op, step.inputs.as_slice()) {
                (Some(op), [left, right]) => format!("s{} = {left} {op} {right}", i + 1),
                (None, [only]) => format!("s{} = encrypt {only}", i + 1),
                _ => unreachable!("steps are unary encrypts or binary ops"),
            })
            .collect()
    }
}

impl fmt::Display for FusionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.render() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Builds the fused execution plan: one step per operator node in post-order
/// with leaf encryptions folded into the step that consumes them. A bare
/// variable still needs one encryption step.
pub fn fusion_plan(ast: &ExprNode) -> FusionPlan {
    fn walk(node: &ExprNode, steps: &mut Vec<FusionStep>) -> StepInput {
        match node {
            ExprNode::Var(name) => StepInput::Leaf(name.clone()),
            ExprNode::Add(l, r) | ExprNode::Mul(l, r) => {
                let op = match node {
                    ExprNode::Add(..) => BinOp::Add,
                    _ => BinOp::Mul,
                };
                let left = walk(l, steps);
                let right = walk(r, steps);
                steps.push(FusionStep {
                    op: Some(op),
                    inputs: vec![left, right],
                });
                StepInput::Step(steps.len())
            }
        }
    }

    let mut steps = Vec::new();
    let root = walk(ast, &mut steps);
    if steps.is_empty() {
        steps.push(FusionStep {
            op: None,
            inputs: vec![root],
        });
    }
    FusionPlan { steps }
}
