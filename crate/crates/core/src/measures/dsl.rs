//! Line-oriented text DSL for defining test measures.
//!
//! Grammar (EBNF; `#` starts a comment, whitespace and newlines separate
//! tokens):
//!
//! ```text
//! spec       = "measure" kind "dim" INTEGER { assignment } ;
//! kind       = "born" | "affine" | "quadratic" | "poly" ;
//! assignment = key "=" value ;
//! key        = IDENT [ "(" INTEGER ")" ] ;
//! value      = matrix | tuple | real ;
//! matrix     = "diag" "(" reals ")" | "zero" | "identity"
//!            | "[" row { ";" row } "]" ;
//! row        = complex { "," complex } ;
//! tuple      = "(" reals ")" ;
//! reals      = real { "," real } ;
//! complex    = real [ ("+" | "-") NUMBER "i" ] | real "i" ;
//! real       = [ "-" ] NUMBER ;
//! ```
//!
//! Numeric literals are decimal with an optional exponent; complex literals
//! are written `a+bi`. Parameters by kind: `born` and `quadratic` take
//! `rho`; `affine` takes `eta` and one `K(r)` per rank class; `poly` takes
//! `rho` and `coeffs`.
//!
//! Example:
//!
//! ```text
//! measure born dim 3
//! rho = diag(0.5, 0.3, 0.2)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use super::{
    AffineMeasure, BornMeasure, DensityOperator, Measure, MeasureResult, PolynomialMeasure,
};
use crate::hilbert::{CMatrix, Projector};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DslError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("duplicate parameter `{name}` at line {line}, column {col}")]
    DuplicateParameter {
        name: String,
        line: usize,
        col: usize,
    },
    #[error(
        "matrix literal has dimension {got} but the declared dim is {expected} \
         (line {line}, column {col})"
    )]
    MatrixDimension {
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },
    #[error("missing required parameter `{name}` for measure kind `{kind}`")]
    MissingParameter { name: String, kind: String },
    #[error("parameter `{name}` must be a {expected}")]
    TypeMismatch { name: String, expected: String },
    #[error("rank class {rank} is outside 1..={dim}")]
    BadRankClass { rank: usize, dim: usize },
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    Born,
    Affine,
    Quadratic,
    Poly,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Born => "born",
            MeasureKind::Affine => "affine",
            MeasureKind::Quadratic => "quadratic",
            MeasureKind::Poly => "poly",
        }
    }

    fn allowed_params(&self) -> &'static [&'static str] {
        match self {
            MeasureKind::Born | MeasureKind::Quadratic => &["rho"],
            MeasureKind::Affine => &["eta", "K"],
            MeasureKind::Poly => &["rho", "coeffs"],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamKey {
    pub name: String,
    pub index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixExpr {
    Diag(Vec<f64>),
    Zero,
    Identity,
    Dense(Vec<Vec<Complex64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Matrix(MatrixExpr),
    Tuple(Vec<f64>),
    Scalar(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpecAst {
    pub kind: MeasureKind,
    pub dim: usize,
    pub params: Vec<(ParamKey, ParamValue)>,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Eq,
    Plus,
    Minus,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(x) => write!(f, "number {x}"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<(Vec<Token>, (usize, usize)), DslError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    while let Some(&ch) = chars.peek() {
        let (tline, tcol) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match ch {
            '#' => {
                while let Some(&c) = chars.peek() {
                    chars.next();
                    bump(c, &mut line, &mut col);
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut col);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut lit = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        lit.push(c);
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else if c == 'e' || c == 'E' {
                        // exponent; may be followed by a sign
                        let mut clone = chars.clone();
                        clone.next();
                        match clone.peek() {
                            Some(&s) if s.is_ascii_digit() || s == '+' || s == '-' => {
                                lit.push(c);
                                chars.next();
                                bump(c, &mut line, &mut col);
                                if s == '+' || s == '-' {
                                    lit.push(s);
                                    chars.next();
                                    bump(s, &mut line, &mut col);
                                }
                            }
                            _ => break,
                        }
                    } else {
                        break;
                    }
                }
                let value: f64 = lit.parse().map_err(|_| DslError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("invalid numeric literal `{lit}`"),
                })?;
                tokens.push(Token {
                    tok: Tok::Number(value),
                    line: tline,
                    col: tcol,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    tok: Tok::Ident(ident),
                    line: tline,
                    col: tcol,
                });
            }
            _ => {
                let tok = match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    other => {
                        return Err(DslError::Syntax {
                            line: tline,
                            col: tcol,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                chars.next();
                bump(ch, &mut line, &mut col);
                tokens.push(Token {
                    tok,
                    line: tline,
                    col: tcol,
                });
            }
        }
    }
    Ok((tokens, (line, col)))
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn end_position(&self) -> (usize, usize) {
        self.end
    }

    fn err_here(&self, message: impl Into<String>) -> DslError {
        let (line, col) = self
            .peek()
            .map(|t| (t.line, t.col))
            .unwrap_or_else(|| self.end_position());
        DslError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, expected: &Tok, what: &str) -> Result<Token, DslError> {
        match self.peek() {
            Some(t) if &t.tok == expected => Ok(self.next().unwrap()),
            Some(t) => Err(DslError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected {what}, found {}", t.tok),
            }),
            None => {
                let (line, col) = self.end_position();
                Err(DslError::Syntax {
                    line,
                    col,
                    message: format!("expected {what}, found end of input"),
                })
            }
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), DslError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(_), ..
            }) => {
                let t = self.next().unwrap();
                let (line, col) = (t.line, t.col);
                if let Tok::Ident(s) = t.tok {
                    Ok((s, line, col))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        let pos = self
            .peek()
            .map(|t| (t.line, t.col))
            .unwrap_or_else(|| self.end_position());
        let (word, ..) = self.expect_ident(&format!("keyword `{kw}`"))?;
        if word != kw {
            return Err(DslError::Syntax {
                line: pos.0,
                col: pos.1,
                message: format!("expected keyword `{kw}`, found `{word}`"),
            });
        }
        Ok(())
    }

    fn expect_number(&mut self, what: &str) -> Result<f64, DslError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Number(_),
                ..
            }) => {
                let t = self.next().unwrap();
                if let Tok::Number(x) = t.tok {
                    Ok(x)
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn expect_integer(&mut self, what: &str) -> Result<usize, DslError> {
        let pos = self
            .peek()
            .map(|t| (t.line, t.col))
            .unwrap_or_else(|| self.end_position());
        let x = self.expect_number(what)?;
        if x.fract() != 0.0 || x < 0.0 {
            return Err(DslError::Syntax {
                line: pos.0,
                col: pos.1,
                message: format!("expected {what} to be a non-negative integer, found {x}"),
            });
        }
        Ok(x as usize)
    }

    /// `real = ["-"] NUMBER`
    fn parse_real(&mut self) -> Result<f64, DslError> {
        let negative = matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Minus,
                ..
            })
        );
        if negative {
            self.next();
        }
        let x = self.expect_number("a number")?;
        Ok(if negative { -x } else { x })
    }

    /// `complex = real ["i"] [("+"|"-") NUMBER "i"]`
    fn parse_complex(&mut self) -> Result<Complex64, DslError> {
        let first = self.parse_real()?;
        if self.eat_imag_unit() {
            return Ok(Complex64::new(0.0, first));
        }
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Plus) | Some(Tok::Minus) => {
                let negative = matches!(self.peek().unwrap().tok, Tok::Minus);
                self.next();
                let second = self.expect_number("the imaginary part")?;
                if !self.eat_imag_unit() {
                    return Err(self.err_here("expected `i` after the imaginary part"));
                }
                Ok(Complex64::new(
                    first,
                    if negative { -second } else { second },
                ))
            }
            _ => Ok(Complex64::new(first, 0.0)),
        }
    }

    fn eat_imag_unit(&mut self) -> bool {
        if let Some(Token {
            tok: Tok::Ident(s), ..
        }) = self.peek()
        {
            if s == "i" {
                self.next();
                return true;
            }
        }
        false
    }

    fn parse_reals_until_rparen(&mut self) -> Result<Vec<f64>, DslError> {
        let mut out = vec![self.parse_real()?];
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Comma) => {
                    self.next();
                    out.push(self.parse_real()?);
                }
                Some(Tok::RParen) => {
                    self.next();
                    return Ok(out);
                }
                _ => return Err(self.err_here("expected `,` or `)`")),
            }
        }
    }

    fn parse_matrix_body(
        &mut self,
        word: &str,
        dim: usize,
        line: usize,
        col: usize,
    ) -> Result<MatrixExpr, DslError> {
        match word {
            "zero" => Ok(MatrixExpr::Zero),
            "identity" => Ok(MatrixExpr::Identity),
            "diag" => {
                self.expect(&Tok::LParen, "`(` after `diag`")?;
                let entries = self.parse_reals_until_rparen()?;
                if entries.len() != dim {
                    return Err(DslError::MatrixDimension {
                        expected: dim,
                        got: entries.len(),
                        line,
                        col,
                    });
                }
                Ok(MatrixExpr::Diag(entries))
            }
            other => Err(DslError::UnknownIdentifier {
                name: other.to_string(),
                line,
                col,
            }),
        }
    }

    /// `value = matrix | tuple | real`
    fn parse_value(&mut self, dim: usize) -> Result<ParamValue, DslError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Ident(_)) => {
                let (word, line, col) = self.expect_ident("a matrix keyword")?;
                Ok(ParamValue::Matrix(
                    self.parse_matrix_body(&word, dim, line, col)?,
                ))
            }
            Some(Tok::LBracket) => {
                let open = self.next().unwrap();
                let mut rows = vec![self.parse_row()?];
                loop {
                    match self.peek().map(|t| t.tok.clone()) {
                        Some(Tok::Semi) => {
                            self.next();
                            rows.push(self.parse_row()?);
                        }
                        Some(Tok::RBracket) => {
                            self.next();
                            break;
                        }
                        _ => return Err(self.err_here("expected `;` or `]`")),
                    }
                }
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    let got = if rows.len() != dim {
                        rows.len()
                    } else {
                        rows.iter().map(Vec::len).find(|&l| l != dim).unwrap()
                    };
                    return Err(DslError::MatrixDimension {
                        expected: dim,
                        got,
                        line: open.line,
                        col: open.col,
                    });
                }
                Ok(ParamValue::Matrix(MatrixExpr::Dense(rows)))
            }
            Some(Tok::LParen) => {
                self.next();
                Ok(ParamValue::Tuple(self.parse_reals_until_rparen()?))
            }
            _ => Ok(ParamValue::Scalar(self.parse_real()?)),
        }
    }

    fn parse_row(&mut self) -> Result<Vec<Complex64>, DslError> {
        let mut row = vec![self.parse_complex()?];
        while matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Comma,
                ..
            })
        ) {
            self.next();
            row.push(self.parse_complex()?);
        }
        Ok(row)
    }
}

/// Parses a measure spec into its AST, reporting errors with line and
/// column positions.
pub fn parse(text: &str) -> Result<MeasureSpecAst, DslError> {
    let (tokens, end) = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end,
    };
    p.expect_keyword("measure")?;

    let kind_pos = p
        .peek()
        .map(|t| (t.line, t.col))
        .unwrap_or_else(|| p.end_position());
    let (kind_word, ..) = p.expect_ident("a measure kind")?;
    let kind = match kind_word.as_str() {
        "born" => MeasureKind::Born,
        "affine" => MeasureKind::Affine,
        "quadratic" => MeasureKind::Quadratic,
        "poly" => MeasureKind::Poly,
        other => {
            return Err(DslError::UnknownIdentifier {
                name: other.to_string(),
                line: kind_pos.0,
                col: kind_pos.1,
            })
        }
    };

    p.expect_keyword("dim")?;
    let dim = p.expect_integer("the dimension")?;
    if dim == 0 {
        return Err(p.err_here("dimension must be positive"));
    }

    let mut params: Vec<(ParamKey, ParamValue)> = Vec::new();
    while p.peek().is_some() {
        let (name, line, col) = p.expect_ident("a parameter name")?;
        if !kind.allowed_params().contains(&name.as_str()) {
            return Err(DslError::UnknownIdentifier { name, line, col });
        }
        let index = if matches!(
            p.peek(),
            Some(Token {
                tok: Tok::LParen,
                ..
            })
        ) {
            p.next();
            let idx = p.expect_integer("a rank-class index")?;
            p.expect(&Tok::RParen, "`)`")?;
            Some(idx)
        } else {
            None
        };
        let key = ParamKey {
            name: name.clone(),
            index,
        };
        if params.iter().any(|(k, _)| k == &key) {
            return Err(DslError::DuplicateParameter { name, line, col });
        }
        p.expect(&Tok::Eq, "`=`")?;
        let value = p.parse_value(dim)?;
        params.push((key, value));
    }

    Ok(MeasureSpecAst { kind, dim, params })
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

fn fmt_complex(z: &Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn fmt_reals(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Canonical text form; `parse(pretty(ast)) == ast`.
pub fn pretty(ast: &MeasureSpecAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "measure {} dim {}", ast.kind.name(), ast.dim);
    for (key, value) in &ast.params {
        let keytext = match key.index {
            Some(i) => format!("{}({})", key.name, i),
            None => key.name.clone(),
        };
        let valtext = match value {
            ParamValue::Scalar(x) => x.to_string(),
            ParamValue::Tuple(xs) => format!("({})", fmt_reals(xs)),
            ParamValue::Matrix(MatrixExpr::Zero) => "zero".to_string(),
            ParamValue::Matrix(MatrixExpr::Identity) => "identity".to_string(),
            ParamValue::Matrix(MatrixExpr::Diag(xs)) => format!("diag({})", fmt_reals(xs)),
            ParamValue::Matrix(MatrixExpr::Dense(rows)) => {
                let body = rows
                    .iter()
                    .map(|row| row.iter().map(fmt_complex).collect::<Vec<_>>().join(", "))
                    .collect::<Vec<_>>()
                    .join("; ");
                format!("[{body}]")
            }
        };
        let _ = writeln!(out, "{keytext} = {valtext}");
    }
    out
}

// ---------------------------------------------------------------------------
// Building evaluators
// ---------------------------------------------------------------------------

/// A measure built from a parsed spec.
#[derive(Clone, Debug)]
pub enum BuiltMeasure {
    Born(BornMeasure),
    Affine(AffineMeasure),
    Poly(PolynomialMeasure),
}

impl BuiltMeasure {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltMeasure::Born(_) => "born",
            BuiltMeasure::Affine(_) => "affine",
            BuiltMeasure::Poly(_) => "poly",
        }
    }
}

impl Measure for BuiltMeasure {
    fn dim(&self) -> usize {
        match self {
            BuiltMeasure::Born(m) => m.dim(),
            BuiltMeasure::Affine(m) => m.dim(),
            BuiltMeasure::Poly(m) => m.dim(),
        }
    }

    fn contains(&self, e: &Projector) -> bool {
        match self {
            BuiltMeasure::Born(m) => m.contains(e),
            BuiltMeasure::Affine(m) => m.contains(e),
            BuiltMeasure::Poly(m) => m.contains(e),
        }
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        match self {
            BuiltMeasure::Born(m) => m.value(e),
            BuiltMeasure::Affine(m) => m.value(e),
            BuiltMeasure::Poly(m) => m.value(e),
        }
    }
}

fn materialize(expr: &MatrixExpr, dim: usize) -> CMatrix {
    match expr {
        MatrixExpr::Zero => CMatrix::zeros(dim, dim),
        MatrixExpr::Identity => CMatrix::identity(dim, dim),
        MatrixExpr::Diag(entries) => {
            let mut m = CMatrix::zeros(dim, dim);
            for (k, &x) in entries.iter().enumerate() {
                m[(k, k)] = Complex64::new(x, 0.0);
            }
            m
        }
        MatrixExpr::Dense(rows) => {
            let mut m = CMatrix::zeros(dim, dim);
            for (i, row) in rows.iter().enumerate() {
                for (j, &z) in row.iter().enumerate() {
                    m[(i, j)] = z;
                }
            }
            m
        }
    }
}

fn find_matrix<'a>(
    ast: &'a MeasureSpecAst,
    name: &str,
) -> Result<Option<&'a MatrixExpr>, DslError> {
    for (key, value) in &ast.params {
        if key.name == name && key.index.is_none() {
            return match value {
                ParamValue::Matrix(m) => Ok(Some(m)),
                _ => Err(DslError::TypeMismatch {
                    name: name.to_string(),
                    expected: "matrix".to_string(),
                }),
            };
        }
    }
    Ok(None)
}

fn require_matrix(ast: &MeasureSpecAst, name: &str) -> Result<CMatrix, DslError> {
    match find_matrix(ast, name)? {
        Some(expr) => Ok(materialize(expr, ast.dim)),
        None => Err(DslError::MissingParameter {
            name: name.to_string(),
            kind: ast.kind.name().to_string(),
        }),
    }
}

/// Constructs the evaluator described by the AST.
pub fn build(ast: &MeasureSpecAst) -> MeasureResult<BuiltMeasure> {
    match ast.kind {
        MeasureKind::Born => {
            let rho = DensityOperator::new(require_matrix(ast, "rho")?)?;
            Ok(BuiltMeasure::Born(BornMeasure::new(rho)))
        }
        MeasureKind::Quadratic => {
            let rho = DensityOperator::new(require_matrix(ast, "rho")?)?;
            Ok(BuiltMeasure::Poly(PolynomialMeasure::quadratic(rho)))
        }
        MeasureKind::Poly => {
            let rho = DensityOperator::new(require_matrix(ast, "rho")?)?;
            let coeffs = ast
                .params
                .iter()
                .find(|(k, _)| k.name == "coeffs")
                .map(|(_, v)| match v {
                    ParamValue::Tuple(xs) => Ok(xs.clone()),
                    _ => Err(DslError::TypeMismatch {
                        name: "coeffs".to_string(),
                        expected: "tuple".to_string(),
                    }),
                })
                .transpose()?
                .ok_or_else(|| DslError::MissingParameter {
                    name: "coeffs".to_string(),
                    kind: "poly".to_string(),
                })?;
            Ok(BuiltMeasure::Poly(PolynomialMeasure::new(rho, coeffs)))
        }
        MeasureKind::Affine => {
            let eta = require_matrix(ast, "eta")?;
            let mut constants = BTreeMap::new();
            for (key, value) in &ast.params {
                if key.name != "K" {
                    continue;
                }
                let rank = key.index.ok_or_else(|| DslError::TypeMismatch {
                    name: "K".to_string(),
                    expected: "rank-indexed scalar like K(1)".to_string(),
                })?;
                if rank < 1 || rank > ast.dim {
                    return Err(DslError::BadRankClass { rank, dim: ast.dim }.into());
                }
                match value {
                    ParamValue::Scalar(x) => {
                        constants.insert(rank, *x);
                    }
                    _ => {
                        return Err(DslError::TypeMismatch {
                            name: "K".to_string(),
                            expected: "scalar".to_string(),
                        }
                        .into())
                    }
                }
            }
            if constants.is_empty() {
                return Err(DslError::MissingParameter {
                    name: "K(r)".to_string(),
                    kind: "affine".to_string(),
                }
                .into());
            }
            Ok(BuiltMeasure::Affine(AffineMeasure::new(eta, constants)?))
        }
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{projector_from_vector, HVector};
    use proptest::prelude::*;

    #[test]
    fn parses_single_line_born_spec() {
        let built =
            super::super::parse_measure_spec("measure born dim 3 rho = diag(0.5,0.3,0.2)").unwrap();
        let e = projector_from_vector(&HVector::basis(3, 0)).unwrap();
        assert!((built.value(&e).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parses_affine_constant_spec() {
        let built = super::super::parse_measure_spec("measure affine dim 3 eta = zero K(1) = 0.25")
            .unwrap();
        let e = projector_from_vector(&HVector::basis(3, 2)).unwrap();
        assert!((built.value(&e).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn truncated_header_is_a_syntax_error() {
        let err = parse("measure affine dim").unwrap_err();
        match err {
            DslError::Syntax { line, col, .. } => {
                assert_eq!(line, 1);
                assert_eq!(col, 19);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_parameter_is_reported_with_position() {
        let err = parse("measure born dim 3\nsigma = zero").unwrap_err();
        assert_eq!(
            err,
            DslError::UnknownIdentifier {
                name: "sigma".to_string(),
                line: 2,
                col: 1
            }
        );
    }

    #[test]
    fn matrix_dimension_mismatch_is_reported() {
        let err = parse("measure born dim 3 rho = diag(0.5, 0.5)").unwrap_err();
        assert!(matches!(
            err,
            DslError::MatrixDimension {
                expected: 3,
                got: 2,
                ..
            }
        ));
    }

    #[test]
    fn complex_literal_forms_parse() {
        let ast =
            parse("measure affine dim 2 eta = [0.5, 0.1+0.2i; 0.1-0.2i, -0.5] K(1) = 0").unwrap();
        match &ast.params[0].1 {
            ParamValue::Matrix(MatrixExpr::Dense(rows)) => {
                assert_eq!(rows[0][1], Complex64::new(0.1, 0.2));
                assert_eq!(rows[1][0], Complex64::new(0.1, -0.2));
                assert_eq!(rows[1][1], Complex64::new(-0.5, 0.0));
            }
            other => panic!("expected dense matrix, got {other:?}"),
        }
    }

    #[test]
    fn pure_imaginary_and_exponent_literals_parse() {
        let ast =
            parse("measure affine dim 2 eta = [0, 2.5e-1i; -2.5e-1i, 0] K(1) = 1e-3").unwrap();
        match &ast.params[0].1 {
            ParamValue::Matrix(MatrixExpr::Dense(rows)) => {
                assert_eq!(rows[0][1], Complex64::new(0.0, 0.25));
                assert_eq!(rows[1][0], Complex64::new(0.0, -0.25));
            }
            other => panic!("expected dense matrix, got {other:?}"),
        }
        assert_eq!(ast.params[1].1, ParamValue::Scalar(1e-3));
    }

    #[test]
    fn missing_rho_fails_at_build() {
        let ast = parse("measure born dim 3").unwrap();
        assert!(matches!(
            build(&ast),
            Err(super::super::MeasureError::Dsl(
                DslError::MissingParameter { .. }
            ))
        ));
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# test measure\nmeasure born dim 2 # inline\nrho = diag(0.5, 0.5)";
        assert!(parse(text).is_ok());
    }

    fn arb_kind() -> impl Strategy<Value = MeasureKind> {
        prop_oneof![
            Just(MeasureKind::Born),
            Just(MeasureKind::Affine),
            Just(MeasureKind::Quadratic),
            Just(MeasureKind::Poly),
        ]
    }

    fn arb_ast() -> impl Strategy<Value = MeasureSpecAst> {
        (arb_kind(), 2usize..5).prop_flat_map(|(kind, dim)| {
            let real = -10.0f64..10.0;
            let diag = proptest::collection::vec(real.clone(), dim);
            let dense = proptest::collection::vec(
                proptest::collection::vec(
                    (real.clone(), real.clone()).prop_map(|(re, im)| Complex64::new(re, im)),
                    dim,
                ),
                dim,
            );
            let matrix = prop_oneof![
                Just(MatrixExpr::Zero),
                Just(MatrixExpr::Identity),
                diag.prop_map(MatrixExpr::Diag),
                dense.prop_map(MatrixExpr::Dense),
            ];
            (matrix, real.clone(), proptest::collection::vec(real, 1..4)).prop_map(
                move |(m, scalar, tuple)| {
                    let params = match kind {
                        MeasureKind::Born | MeasureKind::Quadratic => vec![(
                            ParamKey {
                                name: "rho".to_string(),
                                index: None,
                            },
                            ParamValue::Matrix(m),
                        )],
                        MeasureKind::Poly => vec![
                            (
                                ParamKey {
                                    name: "rho".to_string(),
                                    index: None,
                                },
                                ParamValue::Matrix(m),
                            ),
                            (
                                ParamKey {
                                    name: "coeffs".to_string(),
                                    index: None,
                                },
                                ParamValue::Tuple(tuple),
                            ),
                        ],
                        MeasureKind::Affine => vec![
                            (
                                ParamKey {
                                    name: "eta".to_string(),
                                    index: None,
                                },
                                ParamValue::Matrix(m),
                            ),
                            (
                                ParamKey {
                                    name: "K".to_string(),
                                    index: Some(1),
                                },
                                ParamValue::Scalar(scalar),
                            ),
                        ],
                    };
                    MeasureSpecAst { kind, dim, params }
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// parse ∘ pretty is the identity on ASTs.
        #[test]
        fn pretty_print_round_trip(ast in arb_ast()) {
            let text = pretty(&ast);
            let back = parse(&text).unwrap();
            prop_assert_eq!(back, ast);
        }
    }
}
