//! Small complex-valued expression language over `x`, `y`.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the constants
//! `i`, `pi`, `e`, and the functions `sin cos tan exp log sqrt sinh cosh tanh
//! abs re im conj`. Derivatives are symbolic, so formal adjoints can be
//! formed without finite differences.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Re,
    Im,
    Conj,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "re" => Func::Re,
            "im" => Func::Im,
            "conj" => Func::Conj,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
            Func::Conj => "conj",
        }
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Exp => z.exp(),
            Func::Log => z.ln(),
            Func::Sqrt => z.sqrt(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Tanh => z.tanh(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
            Func::Re => Complex64::new(z.re, 0.0),
            Func::Im => Complex64::new(z.im, 0.0),
            Func::Conj => z.conj(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(Complex64),
    X,
    Y,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression. Cheap to clone and shareable across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Arc<Node>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let node = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected token {:?} in '{src}'",
                p.tokens[p.pos]
            )));
        }
        Ok(Expr {
            root: Arc::new(simplify(node)),
        })
    }

    pub fn constant(v: Complex64) -> Expr {
        Expr {
            root: Arc::new(Node::Num(v)),
        }
    }

    pub fn real(v: f64) -> Expr {
        Expr::constant(Complex64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        eval(&self.root, x, y)
    }

    /// Returns the value if the expression does not depend on `x` or `y`.
    pub fn as_constant(&self) -> Option<Complex64> {
        match &*self.root {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(Complex64::new(0.0, 0.0))
    }

    pub fn is_constant(&self) -> bool {
        !depends(&self.root)
    }

    pub fn diff(&self, var: Var) -> Result<Expr> {
        Ok(Expr {
            root: Arc::new(simplify(diff(&self.root, var)?)),
        })
    }

    /// Complex conjugate of the expression, for real `x`, `y`.
    pub fn conj(&self) -> Expr {
        Expr {
            root: Arc::new(simplify(conj(&self.root))),
        }
    }

    pub fn add(&self, o: &Expr) -> Expr {
        self.bin(o, |a, b| Node::Add(a, b))
    }

    pub fn sub(&self, o: &Expr) -> Expr {
        self.bin(o, |a, b| Node::Sub(a, b))
    }

    pub fn mul(&self, o: &Expr) -> Expr {
        self.bin(o, |a, b| Node::Mul(a, b))
    }

    pub fn neg(&self) -> Expr {
        Expr {
            root: Arc::new(simplify(Node::Neg(Box::new((*self.root).clone())))),
        }
    }

    pub fn scale(&self, s: f64) -> Expr {
        self.mul(&Expr::real(s))
    }

    fn bin(&self, o: &Expr, f: impl Fn(Box<Node>, Box<Node>) -> Node) -> Expr {
        let n = f(
            Box::new((*self.root).clone()),
            Box::new((*o.root).clone()),
        );
        Expr {
            root: Arc::new(simplify(n)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_num(v: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.im == 0.0 {
        write!(f, "{:?}", v.re)
    } else if v.re == 0.0 {
        write!(f, "({:?}*i)", v.im)
    } else {
        write!(f, "({:?}+{:?}*i)", v.re, v.im)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(v) => {
            if v.re < 0.0 && v.im == 0.0 {
                write!(f, "(")?;
                write_num(*v, f)?;
                write!(f, ")")
            } else {
                write_num(*v, f)
            }
        }
        Node::X => write!(f, "x"),
        Node::Y => write!(f, "y"),
        Node::Add(a, b) => bin_fmt(f, a, "+", b),
        Node::Sub(a, b) => bin_fmt(f, a, "-", b),
        Node::Mul(a, b) => bin_fmt(f, a, "*", b),
        Node::Div(a, b) => bin_fmt(f, a, "/", b),
        Node::Pow(a, b) => bin_fmt(f, a, "^", b),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            write!(f, ")")
        }
    }
}

fn bin_fmt(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node) -> fmt::Result {
    write!(f, "(")?;
    write_node(a, f)?;
    write!(f, "{op}")?;
    write_node(b, f)?;
    write!(f, ")")
}

fn eval(n: &Node, x: f64, y: f64) -> Complex64 {
    match n {
        Node::Num(v) => *v,
        Node::X => Complex64::new(x, 0.0),
        Node::Y => Complex64::new(y, 0.0),
        Node::Add(a, b) => eval(a, x, y) + eval(b, x, y),
        Node::Sub(a, b) => eval(a, x, y) - eval(b, x, y),
        Node::Mul(a, b) => eval(a, x, y) * eval(b, x, y),
        Node::Div(a, b) => eval(a, x, y) / eval(b, x, y),
        Node::Pow(a, b) => pow(eval(a, x, y), eval(b, x, y)),
        Node::Neg(a) => -eval(a, x, y),
        Node::Call(func, a) => func.apply(eval(a, x, y)),
    }
}

fn pow(base: Complex64, e: Complex64) -> Complex64 {
    // integer exponents stay exact for negative real bases
    if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
        return base.powi(e.re as i32);
    }
    if base == Complex64::new(0.0, 0.0) {
        return if e.re > 0.0 {
            base
        } else {
            Complex64::new(f64::INFINITY, 0.0)
        };
    }
    base.powc(e)
}

fn depends(n: &Node) -> bool {
    match n {
        Node::Num(_) => false,
        Node::X | Node::Y => true,
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            depends(a) || depends(b)
        }
        Node::Neg(a) | Node::Call(_, a) => depends(a),
    }
}

fn num(v: f64) -> Box<Node> {
    Box::new(Node::Num(Complex64::new(v, 0.0)))
}

fn bx(n: Node) -> Box<Node> {
    Box::new(n)
}

fn diff(n: &Node, var: Var) -> Result<Node> {
    use Node::*;
    Ok(match n {
        Num(_) => Num(Complex64::new(0.0, 0.0)),
        X => Num(Complex64::new(if var == Var::X { 1.0 } else { 0.0 }, 0.0)),
        Y => Num(Complex64::new(if var == Var::Y { 1.0 } else { 0.0 }, 0.0)),
        Add(a, b) => Add(bx(diff(a, var)?), bx(diff(b, var)?)),
        Sub(a, b) => Sub(bx(diff(a, var)?), bx(diff(b, var)?)),
        Neg(a) => Neg(bx(diff(a, var)?)),
        Mul(a, b) => Add(
            bx(Mul(bx(diff(a, var)?), b.clone())),
            bx(Mul(a.clone(), bx(diff(b, var)?))),
        ),
        Div(a, b) => Div(
            bx(Sub(
                bx(Mul(bx(diff(a, var)?), b.clone())),
                bx(Mul(a.clone(), bx(diff(b, var)?))),
            )),
            bx(Pow(b.clone(), num(2.0))),
        ),
        Pow(a, b) => {
            if !depends(b) {
                // d(u^c) = c u^(c-1) u'
                Mul(
                    bx(Mul(b.clone(), bx(Pow(a.clone(), bx(Sub(b.clone(), num(1.0))))))),
                    bx(diff(a, var)?),
                )
            } else {
                // d(u^v) = u^v (v' log u + v u'/u)
                Mul(
                    bx(Pow(a.clone(), b.clone())),
                    bx(Add(
                        bx(Mul(bx(diff(b, var)?), bx(Call(Func::Log, a.clone())))),
                        bx(Div(bx(Mul(b.clone(), bx(diff(a, var)?))), a.clone())),
                    )),
                )
            }
        }
        Call(f, a) => {
            let da = bx(diff(a, var)?);
            let outer = match f {
                Func::Sin => Call(Func::Cos, a.clone()),
                Func::Cos => Neg(bx(Call(Func::Sin, a.clone()))),
                Func::Tan => Div(num(1.0), bx(Pow(bx(Call(Func::Cos, a.clone())), num(2.0)))),
                Func::Exp => Call(Func::Exp, a.clone()),
                Func::Log => Div(num(1.0), a.clone()),
                Func::Sqrt => Div(num(0.5), bx(Call(Func::Sqrt, a.clone()))),
                Func::Sinh => Call(Func::Cosh, a.clone()),
                Func::Cosh => Call(Func::Sinh, a.clone()),
                Func::Tanh => Div(num(1.0), bx(Pow(bx(Call(Func::Cosh, a.clone())), num(2.0)))),
                Func::Re | Func::Im | Func::Conj => {
                    // linear over the reals: commutes with d/dx for real x, y
                    return Ok(Call(*f, da));
                }
                Func::Abs => {
                    if depends(a) {
                        return Err(Error::Expr(
                            "abs(.) of a varying argument is not differentiable".into(),
                        ));
                    }
                    Num(Complex64::new(0.0, 0.0))
                }
            };
            Mul(bx(outer), da)
        }
    })
}

fn conj(n: &Node) -> Node {
    use Node::*;
    match n {
        Num(v) => Num(v.conj()),
        X => X,
        Y => Y,
        Add(a, b) => Add(bx(conj(a)), bx(conj(b))),
        Sub(a, b) => Sub(bx(conj(a)), bx(conj(b))),
        Mul(a, b) => Mul(bx(conj(a)), bx(conj(b))),
        Div(a, b) => Div(bx(conj(a)), bx(conj(b))),
        Neg(a) => Neg(bx(conj(a))),
        // principal branches commute with conjugation away from cuts
        Pow(a, b) => Pow(bx(conj(a)), bx(conj(b))),
        Call(Func::Re, a) => Call(Func::Re, a.clone()),
        Call(Func::Im, a) => Call(Func::Im, a.clone()),
        Call(Func::Abs, a) => Call(Func::Abs, a.clone()),
        Call(Func::Conj, a) => (**a).clone(),
        Call(f, a) => Call(*f, bx(conj(a))),
    }
}

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(c) if *c == Complex64::new(v, 0.0))
}

fn simplify(n: Node) -> Node {
    use Node::*;
    let n = match n {
        Add(a, b) => Add(bx(simplify(*a)), bx(simplify(*b))),
        Sub(a, b) => Sub(bx(simplify(*a)), bx(simplify(*b))),
        Mul(a, b) => Mul(bx(simplify(*a)), bx(simplify(*b))),
        Div(a, b) => Div(bx(simplify(*a)), bx(simplify(*b))),
        Pow(a, b) => Pow(bx(simplify(*a)), bx(simplify(*b))),
        Neg(a) => Neg(bx(simplify(*a))),
        Call(f, a) => Call(f, bx(simplify(*a))),
        other => other,
    };
    if !depends(&n) {
        if let Num(_) = n {
            return n;
        }
        let v = eval(&n, 0.0, 0.0);
        if v.re.is_finite() && v.im.is_finite() {
            return Num(v);
        }
        return n;
    }
    match n {
        Add(a, b) if is_num(&a, 0.0) => *b,
        Add(a, b) if is_num(&b, 0.0) => *a,
        Sub(a, b) if is_num(&b, 0.0) => *a,
        Sub(a, b) if is_num(&a, 0.0) => Neg(b),
        Mul(a, _) if is_num(&a, 0.0) => Num(Complex64::new(0.0, 0.0)),
        Mul(_, b) if is_num(&b, 0.0) => Num(Complex64::new(0.0, 0.0)),
        Mul(a, b) if is_num(&a, 1.0) => *b,
        Mul(a, b) if is_num(&b, 1.0) => *a,
        Div(a, b) if is_num(&b, 1.0) => *a,
        Div(a, _) if is_num(&a, 0.0) => Num(Complex64::new(0.0, 0.0)),
        Pow(a, b) if is_num(&b, 1.0) => *a,
        Pow(_, b) if is_num(&b, 0.0) => Num(Complex64::new(1.0, 0.0)),
        Neg(a) => match *a {
            Neg(inner) => *inner,
            other => Neg(bx(other)),
        },
        other => other,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Expr(format!("bad number '{text}'")))?;
            out.push(Tok::Num(v));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else if ch == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if ch == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character '{ch}'")));
        }
    }
    if out.is_empty() {
        return Err(Error::Expr("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op)) = self.peek() {
            let op = *op;
            if op != '+' && op != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(bx(lhs), bx(rhs))
            } else {
                Node::Sub(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op)) = self.peek() {
            let op = *op;
            if op != '*' && op != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(bx(lhs), bx(rhs))
            } else {
                Node::Div(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(bx(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // right associative, binds tighter than unary minus on the left
            let e = self.unary()?;
            return Ok(Node::Pow(bx(base), bx(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(Complex64::new(v, 0.0))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::Expr("missing ')'".into())),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "i" => Ok(Node::Num(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Node::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                "e" => Ok(Node::Num(Complex64::new(std::f64::consts::E, 0.0))),
                _ => {
                    let f = Func::from_name(&name)
                        .ok_or_else(|| Error::Expr(format!("unknown identifier '{name}'")))?;
                    match self.next() {
                        Some(Tok::LParen) => {}
                        _ => return Err(Error::Expr(format!("'{name}' expects '('"))),
                    }
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Tok::RParen) => Ok(Node::Call(f, bx(arg))),
                        _ => Err(Error::Expr("missing ')'".into())),
                    }
                }
            },
            Some(t) => Err(Error::Expr(format!("unexpected token {t:?}"))),
            None => Err(Error::Expr("unexpected end of expression".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() <= 1e-12 * (1.0 + b.norm())
    }

    #[test]
    fn precedence_and_constants() {
        let e = Expr::parse("1 + 2*x^2 - -y/4").unwrap();
        assert!(close(e.eval(3.0, 2.0), Complex64::new(19.5, 0.0)));
        let e = Expr::parse("-x^2").unwrap();
        assert!(close(e.eval(3.0, 0.0), Complex64::new(-9.0, 0.0)));
        let e = Expr::parse("2+0.5*i").unwrap();
        assert_eq!(e.as_constant(), Some(Complex64::new(2.0, 0.5)));
        let e = Expr::parse("1e-3*x").unwrap();
        assert!(close(e.eval(2.0, 0.0), Complex64::new(2e-3, 0.0)));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = Expr::parse("sin(x*y) + exp(0.3*x)*y^3 + 1/(2+x^2) + sqrt(1+y^2)*i").unwrap();
        let h = 1e-6;
        for &(x, y) in &[(0.1, 0.2), (-0.7, 0.4), (0.5, -0.9)] {
            let dx = e.diff(Var::X).unwrap().eval(x, y);
            let fd = (e.eval(x + h, y) - e.eval(x - h, y)) / (2.0 * h);
            assert!((dx - fd).norm() < 1e-7);
            let dy = e.diff(Var::Y).unwrap().eval(x, y);
            let fd = (e.eval(x, y + h) - e.eval(x, y - h)) / (2.0 * h);
            assert!((dy - fd).norm() < 1e-7);
        }
    }

    #[test]
    fn conjugate_and_display_roundtrip() {
        let e = Expr::parse("(1+2*i)*x - cos(i*y)").unwrap();
        let c = e.conj();
        assert!(close(c.eval(0.3, 0.7), e.eval(0.3, 0.7).conj()));
        let again = Expr::parse(&e.to_string()).unwrap();
        assert!(close(again.eval(0.3, 0.7), e.eval(0.3, 0.7)));
    }

    #[test]
    fn errors_are_reported() {
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("(x+1").is_err());
        assert!(Expr::parse("x $ y").is_err());
    }
}
