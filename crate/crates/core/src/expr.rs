//! Scalar complex expression language.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        exponent must be an integer literal
//! primary := NUMBER | NUMBER 'i' | 'i' | IDENT | IDENT '(' args ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-z^2` is `-(z^2)`, and is right
//! associative. There is no implicit multiplication.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, Source};
use crate::primitives::{Primitive, Registry, SCALAR_FUNCTIONS};
use crate::tensor::{format_complex, ComplexScalar, ComplexTensor};

/// Default name of the free variable.
pub const DEFAULT_VARIABLE: &str = "z";

/// Byte range `[start, end)` in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Op {
    fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
            Op::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Number(f64),
    /// A number with an `i` suffix, e.g. `2i`.
    Imaginary(f64),
    /// A standalone `i`.
    ImaginaryUnit,
    Ident(String),
    Operator(Op),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(_) => f.write_str("number"),
            TokenKind::Imaginary(_) => f.write_str("imaginary number"),
            TokenKind::ImaginaryUnit => f.write_str("`i`"),
            TokenKind::Ident(name) => write!(f, "`{name}`"),
            TokenKind::Operator(op) => write!(f, "`{}`", op.symbol()),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

fn syntax(message: impl Into<String>, span: Span) -> Error {
    Error::Syntax {
        message: message.into(),
        span,
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, ch)) = chars.peek() {
        if ch.is_whitespace() {
            chars.next();
            continue;
        }
        let single = |kind| (kind, start + ch.len_utf8());
        let (kind, end) = match ch {
            '+' => single(TokenKind::Operator(Op::Add)),
            '-' => single(TokenKind::Operator(Op::Sub)),
            '*' => single(TokenKind::Operator(Op::Mul)),
            '/' => single(TokenKind::Operator(Op::Div)),
            '^' => single(TokenKind::Operator(Op::Pow)),
            '(' => single(TokenKind::LParen),
            ')' => single(TokenKind::RParen),
            ',' => single(TokenKind::Comma),
            c if c.is_ascii_digit() || c == '.' => lex_number(text, start)?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let end = text[start..]
                    .find(|c: char| !is_ident_char(c))
                    .map_or(text.len(), |k| start + k);
                let word = &text[start..end];
                let kind = if word == "i" {
                    TokenKind::ImaginaryUnit
                } else {
                    TokenKind::Ident(word.to_string())
                };
                (kind, end)
            }
            other => {
                return Err(syntax(
                    format!("unexpected character `{other}`"),
                    Span::new(start, start + other.len_utf8()),
                ))
            }
        };
        tokens.push(Token {
            kind,
            lexeme: text[start..end].to_string(),
            span: Span::new(start, end),
        });
        while chars.peek().is_some_and(|&(k, _)| k < end) {
            chars.next();
        }
    }
    Ok(tokens)
}

/// Longest match of `digits [. digits] [e [+-] digits]`, then an optional
/// `i` suffix that is not the start of a longer identifier.
fn lex_number(text: &str, start: usize) -> Result<(TokenKind, usize)> {
    let bytes = text.as_bytes();
    let digits = |mut k: usize| {
        while k < bytes.len() && bytes[k].is_ascii_digit() {
            k += 1;
        }
        k
    };
    let mut end = digits(start);
    if end < bytes.len() && bytes[end] == b'.' {
        end = digits(end + 1);
    }
    if end < bytes.len() && matches!(bytes[end], b'e' | b'E') {
        let mut k = end + 1;
        if k < bytes.len() && matches!(bytes[k], b'+' | b'-') {
            k += 1;
        }
        let after = digits(k);
        if after > k {
            end = after;
        }
    }
    let lexeme = &text[start..end];
    let span = Span::new(start, end);
    let value: f64 = lexeme
        .parse()
        .map_err(|_| syntax(format!("malformed number `{lexeme}`"), span))?;
    if !value.is_finite() {
        return Err(syntax(format!("number `{lexeme}` is out of range"), span));
    }
    let suffixed = bytes.get(end) == Some(&b'i')
        && !bytes
            .get(end + 1)
            .is_some_and(|&b| is_ident_char(b as char));
    if suffixed {
        Ok((TokenKind::Imaginary(value), end + 1))
    } else {
        Ok((TokenKind::Number(value), end))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Const(ComplexScalar),
    Var(String),
    Neg(Box<Ast>),
    Binary(Op, Box<Ast>, Box<Ast>),
    Call(String, Vec<Ast>),
}

impl Ast {
    pub fn binary(op: Op, lhs: Ast, rhs: Ast) -> Self {
        Ast::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Integer value of a valid exponent: an integer literal, possibly negated.
    pub fn as_integer_exponent(&self) -> Option<i32> {
        match self {
            Ast::Const(c)
                if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= i32::MAX as f64 =>
            {
                Some(c.re as i32)
            }
            Ast::Neg(inner) => inner.as_integer_exponent().map(|k| -k),
            _ => None,
        }
    }

    /// Names of the free variables, in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        fn walk(ast: &Ast, out: &mut Vec<String>) {
            match ast {
                Ast::Const(_) => {}
                Ast::Var(name) => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                Ast::Neg(inner) => walk(inner, out),
                Ast::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Ast::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Direct tree-walking evaluation, independent of graph lowering.
    pub fn interpret(&self, z: ComplexScalar) -> Result<ComplexScalar> {
        let out = match self {
            Ast::Const(c) => *c,
            Ast::Var(_) => z,
            Ast::Neg(inner) => -inner.interpret(z)?,
            Ast::Binary(Op::Pow, base, exp) => {
                let k = exp.as_integer_exponent().ok_or_else(|| {
                    Error::InvalidArgument("exponent must be an integer literal".into())
                })?;
                let b = base.interpret(z)?;
                if k < 0 && b == ComplexScalar::new(0.0, 0.0) {
                    return Err(Error::domain("powi", "base of a negative power is zero"));
                }
                b.powi(k)
            }
            Ast::Binary(op, l, r) => {
                let (a, b) = (l.interpret(z)?, r.interpret(z)?);
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == ComplexScalar::new(0.0, 0.0) {
                            return Err(Error::domain("div", "divisor is zero"));
                        }
                        a / b
                    }
                    Op::Pow => unreachable!(),
                }
            }
            Ast::Call(name, args) => {
                let [arg] = args.as_slice() else {
                    return Err(Error::InvalidArgument(format!(
                        "`{name}` takes one argument"
                    )));
                };
                let a = arg.interpret(z)?;
                match name.as_str() {
                    "conj" => a.conj(),
                    "re" => ComplexScalar::new(a.re, 0.0),
                    "im" => ComplexScalar::new(a.im, 0.0),
                    "abs2" => ComplexScalar::new(a.norm_sqr(), 0.0),
                    "exp" => a.exp(),
                    "log" => {
                        if a == ComplexScalar::new(0.0, 0.0) {
                            return Err(Error::domain("log", "argument is zero"));
                        }
                        a.ln()
                    }
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    other => return Err(Error::UnknownPrimitive(other.to_string())),
                }
            }
        };
        if !(out.re.is_finite() && out.im.is_finite()) {
            return Err(Error::NonFinite(format!("expression produced {out}")));
        }
        Ok(out)
    }
}

fn print_const(c: ComplexScalar) -> String {
    if c.im == 0.0 && c.re >= 0.0 && !c.re.is_sign_negative() {
        format!("{}", c.re)
    } else if c.re == 0.0 && !c.re.is_sign_negative() && c.im >= 0.0 {
        format!("{}i", c.im)
    } else {
        format!("({})", format_complex(c))
    }
}

/// Canonical fully parenthesised form. Parsing the result yields the same
/// tree for every tree produced by [`parse`].
pub fn print_ast(ast: &Ast) -> String {
    match ast {
        Ast::Const(c) => print_const(*c),
        Ast::Var(name) => name.clone(),
        Ast::Neg(inner) => format!("(-{})", print_ast(inner)),
        Ast::Binary(op, l, r) => format!("({}{}{})", print_ast(l), op.symbol(), print_ast(r)),
        Ast::Call(name, args) => {
            let args: Vec<_> = args.iter().map(print_ast).collect();
            format!("{name}({})", args.join(", "))
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_ast(self))
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    variable: &'a str,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn eof_span(&self) -> Span {
        Span::new(self.end, self.end)
    }

    fn expected(&self, what: &[&str]) -> Error {
        let list = what.join(", ");
        match self.peek() {
            Some(t) => syntax(format!("expected one of {list}; found {}", t.kind), t.span),
            None => syntax(
                format!("expected one of {list}; found end of input"),
                self.eof_span(),
            ),
        }
    }

    fn peek_op(&self, ops: &[Op]) -> Option<Op> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Operator(op),
                ..
            }) if ops.contains(op) => Some(*op),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op(&[Op::Add, Op::Sub]) {
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op(&[Op::Mul, Op::Div]) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Ast::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast> {
        if self.peek_op(&[Op::Sub]).is_some() {
            self.bump();
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.primary()?;
        if self.peek_op(&[Op::Pow]).is_none() {
            return Ok(base);
        }
        self.bump();
        let start = self.peek().map_or(self.end, |t| t.span.start);
        let exponent = self.unary()?;
        let stop = self
            .tokens
            .get(self.pos.saturating_sub(1))
            .map_or(self.end, |t| t.span.end);
        if exponent.as_integer_exponent().is_none() {
            return Err(syntax(
                "exponent must be an integer literal",
                Span::new(start, stop.max(start)),
            ));
        }
        Ok(Ast::binary(Op::Pow, base, exponent))
    }

    fn primary(&mut self) -> Result<Ast> {
        const START: &[&str] = &["number", "`i`", "identifier", "`(`", "`-`"];
        let Some(token) = self.peek() else {
            return Err(self.expected(START));
        };
        match &token.kind {
            TokenKind::Number(v) => {
                self.bump();
                Ok(Ast::Const(ComplexScalar::new(*v, 0.0)))
            }
            TokenKind::Imaginary(v) => {
                self.bump();
                Ok(Ast::Const(ComplexScalar::new(0.0, *v)))
            }
            TokenKind::ImaginaryUnit => {
                self.bump();
                Ok(Ast::Const(ComplexScalar::new(0.0, 1.0)))
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token {
                        kind: TokenKind::RParen,
                        ..
                    }) => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.expected(&["`)`", "operator"])),
                }
            }
            TokenKind::Ident(name) => {
                self.bump();
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if is_call {
                    if !SCALAR_FUNCTIONS.contains(&name.as_str()) {
                        return Err(syntax(format!("unknown function `{name}`"), token.span));
                    }
                    self.bump();
                    let args = self.call_args()?;
                    if args.len() != 1 {
                        return Err(syntax(
                            format!("`{name}` takes 1 argument, got {}", args.len()),
                            token.span,
                        ));
                    }
                    Ok(Ast::Call(name.clone(), args))
                } else if name == self.variable {
                    Ok(Ast::Var(name.clone()))
                } else if SCALAR_FUNCTIONS.contains(&name.as_str()) {
                    Err(syntax(
                        format!("function `{name}` needs an argument list"),
                        token.span,
                    ))
                } else {
                    Err(syntax(
                        format!(
                            "unknown variable `{name}` (the variable is `{}`)",
                            self.variable
                        ),
                        token.span,
                    ))
                }
            }
            _ => Err(self.expected(START)),
        }
    }

    /// Arguments after the opening parenthesis, consuming the closing one.
    fn call_args(&mut self) -> Result<Vec<Ast>> {
        let mut args = Vec::new();
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::RParen)) {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Comma) => {
                    self.bump();
                }
                Some(TokenKind::RParen) => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.expected(&["`,`", "`)`", "operator"])),
            }
        }
    }
}

/// Parses tokens with the default variable name `z`.
pub fn parse(tokens: &[Token]) -> Result<Ast> {
    parse_with_variable(tokens, DEFAULT_VARIABLE)
}

pub fn parse_with_variable(tokens: &[Token], variable: &str) -> Result<Ast> {
    let end = tokens.last().map_or(0, |t| t.span.end);
    let mut parser = Parser {
        tokens,
        pos: 0,
        variable,
        end,
    };
    let ast = parser.expr()?;
    if let Some(extra) = parser.peek() {
        return Err(syntax(
            format!("expected an operator or end of input; found {}", extra.kind),
            extra.span,
        ));
    }
    Ok(ast)
}

/// Tokenizes and parses `text` with the given variable name.
pub fn parse_expression(text: &str, variable: &str) -> Result<Ast> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(syntax("empty expression", Span::new(0, text.len())));
    }
    parse_with_variable(&tokens, variable)
}

/// Lowers an expression to a graph. `c * e` and `e * c` with a constant `c`
/// become `scale(c)`, `e ^ k` becomes `powi(k)`.
pub fn to_graph(ast: &Ast, registry: &Registry) -> Result<Graph> {
    let vars = ast.variables();
    if vars.len() > 1 {
        return Err(Error::MultipleVariables(vars));
    }
    let mut b = GraphBuilder::new();
    let out = lower(ast, registry, &mut b)?;
    Ok(b.finish(out))
}

fn lower(ast: &Ast, registry: &Registry, b: &mut GraphBuilder) -> Result<Source> {
    let prim = |name: &str| {
        registry
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownPrimitive(name.to_string()))
    };
    match ast {
        Ast::Const(c) => Ok(b.scalar(*c)),
        Ast::Var(_) => Ok(b.input()),
        Ast::Neg(inner) => {
            let x = lower(inner, registry, b)?;
            b.apply(prim("neg")?, &[x])
        }
        Ast::Binary(Op::Pow, base, exp) => {
            let k = exp.as_integer_exponent().ok_or_else(|| {
                Error::InvalidArgument("exponent must be an integer literal".into())
            })?;
            let x = lower(base, registry, b)?;
            b.apply(registry.instantiate_powi(k)?, &[x])
        }
        Ast::Binary(Op::Mul, l, r) => match (l.as_ref(), r.as_ref()) {
            (Ast::Const(c), e) | (e, Ast::Const(c)) => {
                let x = lower(e, registry, b)?;
                b.apply(registry.instantiate_scale(*c)?, &[x])
            }
            _ => {
                let (x, y) = (lower(l, registry, b)?, lower(r, registry, b)?);
                b.apply(prim("mul")?, &[x, y])
            }
        },
        Ast::Binary(op, l, r) => {
            let name = match op {
                Op::Add => "add",
                Op::Sub => "sub",
                Op::Div => "div",
                Op::Mul | Op::Pow => unreachable!(),
            };
            let (x, y) = (lower(l, registry, b)?, lower(r, registry, b)?);
            b.apply(prim(name)?, &[x, y])
        }
        Ast::Call(name, args) => {
            let p: Primitive = registry.scalar_function(name)?;
            let srcs = args
                .iter()
                .map(|a| lower(a, registry, b))
                .collect::<Result<Vec<_>>>()?;
            b.apply(p, &srcs)
        }
    }
}

/// Parses and lowers `text` in one step.
pub fn compile(text: &str, variable: &str, registry: &Registry) -> Result<Graph> {
    to_graph(&parse_expression(text, variable)?, registry)
}

/// Evaluates a scalar graph at a scalar point.
pub fn eval_scalar(graph: &Graph, z: ComplexScalar) -> Result<ComplexScalar> {
    let out = graph.eval(&ComplexTensor::scalar(z))?;
    out.as_scalar()
        .ok_or_else(|| Error::Shape("expected a scalar result".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::builtin_registry;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text)
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    fn var() -> Ast {
        Ast::Var("z".into())
    }

    fn num(v: f64) -> Ast {
        Ast::Const(c(v, 0.0))
    }

    #[test]
    fn tokenize_examples() {
        use TokenKind::*;
        assert_eq!(
            kinds("1+2i"),
            [Number(1.0), Operator(Op::Add), Imaginary(2.0)]
        );
        assert_eq!(
            kinds("conj(z)*z"),
            [
                Ident("conj".into()),
                LParen,
                Ident("z".into()),
                RParen,
                Operator(Op::Mul),
                Ident("z".into())
            ]
        );
        assert_eq!(
            kinds("z^5*conj(z)^4"),
            [
                Ident("z".into()),
                Operator(Op::Pow),
                Number(5.0),
                Operator(Op::Mul),
                Ident("conj".into()),
                LParen,
                Ident("z".into()),
                RParen,
                Operator(Op::Pow),
                Number(4.0)
            ]
        );
        assert_eq!(
            kinds("i * 2.5e-1"),
            [ImaginaryUnit, Operator(Op::Mul), Number(0.25)]
        );
        assert_eq!(kinds("2im"), [Number(2.0), Ident("im".into())]);
    }

    #[test]
    fn token_spans_cover_input() {
        let text = " 0.5 * z ^ 2 ";
        let tokens = tokenize(text).unwrap();
        let covered: String = tokens
            .iter()
            .map(|t| &text[t.span.start..t.span.end])
            .collect();
        assert_eq!(covered, "0.5*z^2");
        for pair in tokens.windows(2) {
            assert!(pair[0].span.end <= pair[1].span.start);
        }
    }

    #[test]
    fn lexical_error_has_span() {
        let err = tokenize("z # 2").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax {
                message: "unexpected character `#`".into(),
                span: Span::new(2, 3)
            }
        );
    }

    #[test]
    fn parse_examples() {
        let ast = parse(&tokenize("0.5*z^2").unwrap()).unwrap();
        assert_eq!(
            ast,
            Ast::binary(Op::Mul, num(0.5), Ast::binary(Op::Pow, var(), num(2.0)))
        );
        assert_eq!(
            parse(&tokenize("-z").unwrap()).unwrap(),
            Ast::Neg(Box::new(var()))
        );
        let err = parse(&tokenize("z^(1.5)").unwrap()).unwrap_err();
        assert!(
            matches!(&err, Error::Syntax { message, .. } if message.contains("integer literal")),
            "{err}"
        );
    }

    #[test]
    fn precedence() {
        let ast = parse_expression("-z^2", "z").unwrap();
        assert_eq!(
            ast,
            Ast::Neg(Box::new(Ast::binary(Op::Pow, var(), num(2.0))))
        );
        let ast = parse_expression("z^-2", "z").unwrap();
        assert_eq!(ast.to_string(), "(z^(-2))");
        assert_eq!(
            parse_expression("1-z-z", "z").unwrap().to_string(),
            "((1-z)-z)"
        );
        assert_eq!(
            parse_expression("z/2*z", "z").unwrap().to_string(),
            "((z/2)*z)"
        );
    }

    #[test]
    fn print_examples() {
        assert_eq!(
            print_ast(&parse_expression("1+2i*z", "z").unwrap()),
            "(1+(2i*z))"
        );
        assert_eq!(
            print_ast(&parse_expression("z^5*conj(z)^4", "z").unwrap()),
            "((z^5)*(conj(z)^4))"
        );
        assert_eq!(print_ast(&parse_expression("i*z", "z").unwrap()), "(1i*z)");
    }

    #[test]
    fn negative_inputs_error_with_spans() {
        for bad in [
            "",
            "z+",
            "(z",
            "z)",
            "2z",
            "foo(z)",
            "w",
            "z^z",
            "z^0.5",
            "exp",
            "exp()",
            "exp(z, z)",
            "z $ 1",
            "*z",
            "z**2",
            "1e",
            "conj(z",
            ",",
            "z^(1+1)",
            "log z",
        ] {
            let err = parse_expression(bad, "z").unwrap_err();
            let Error::Syntax { span, .. } = err else {
                panic!("{bad}: expected a syntax error, got {err}");
            };
            assert!(
                span.start <= span.end && span.end <= bad.len(),
                "{bad}: {span}"
            );
        }
    }

    #[test]
    fn custom_variable_name() {
        let ast = parse_expression("w*conj(w)", "w").unwrap();
        assert_eq!(ast.variables(), ["w"]);
        assert!(parse_expression("z", "w").is_err());
    }

    #[test]
    fn lowering_examples() {
        let reg = builtin_registry();
        let g = compile("conj(z)*z", "z", &reg).unwrap();
        assert_eq!(eval_scalar(&g, c(1.0, 2.0)).unwrap(), c(5.0, 0.0));

        let g = compile("z", "z", &reg).unwrap();
        assert_eq!(g.output(), Source::Input);

        let g = compile("exp(log(z))", "z", &reg).unwrap();
        let v = eval_scalar(&g, c(2.0, 1.0)).unwrap();
        assert!((v - c(2.0, 1.0)).norm() <= 1e-12);

        let g = compile("0.5*z^2", "z", &reg).unwrap();
        let names: Vec<_> = g.nodes().iter().map(|n| n.primitive.name()).collect();
        assert_eq!(names, ["powi", "scale"]);
    }

    #[test]
    fn lowering_rejects_two_variables() {
        let ast = Ast::binary(Op::Add, var(), Ast::Var("w".into()));
        assert!(matches!(
            to_graph(&ast, &builtin_registry()),
            Err(Error::MultipleVariables(_))
        ));
        let ast = Ast::Call("abs".into(), vec![var()]);
        assert!(matches!(
            to_graph(&ast, &builtin_registry()),
            Err(Error::UnknownPrimitive(_))
        ));
    }

    #[test]
    fn interpretation_matches_graph() {
        let reg = builtin_registry();
        let text = "z^5*conj(z)^4 - 3i*sin(z)/(z+2) + exp(-z^2) - re(z)*im(z) + abs2(z^-1)";
        let ast = parse_expression(text, "z").unwrap();
        let g = to_graph(&ast, &reg).unwrap();
        for z in [c(0.3, 0.4), c(-1.2, 0.7), c(0.9, -0.05)] {
            let a = ast.interpret(z).unwrap();
            let b = eval_scalar(&g, z).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
